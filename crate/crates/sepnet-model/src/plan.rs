//! The architecture plan is the single description of the network layout.
//! Both the parameter builder and the cost model walk the same plan, so the
//! network that trains and the network whose costs are reported can never
//! drift apart.

use crate::config::{
    scaled_channels, Head, ModelConfig, Variant, TRANSFER_CLASSES, TRANSFER_DROPOUT,
    TRANSFER_HIDDEN, TRANSFER_L2,
};
use crate::error::Result;

/// Base (width-multiplier 1) body: a 3x3 stem convolution followed by
/// depthwise/pointwise blocks as `(depthwise stride, block output
/// channels)`. The five repeated mid-resolution blocks are the ones the
/// shallow variant drops. The final block keeps its spatial size, so its
/// depthwise stride is 1.
const STEM_CHANNELS: usize = 32;
const BLOCKS: &[(usize, usize)] = &[
    (1, 64),
    (2, 128),
    (1, 128),
    (2, 256),
    (1, 256),
    (2, 512),
    (1, 512),
    (1, 512),
    (1, 512),
    (1, 512),
    (1, 512),
    (2, 1024),
    (1, 1024),
];
const REPEATED_BLOCKS: std::ops::Range<usize> = 6..11;

/// One step of the network. Every `Conv` and `Depthwise` step is followed
/// by batch normalization and ReLU; `Dense` steps apply ReLU only when
/// `relu` is set and never carry batch normalization.
#[derive(Clone, Debug, PartialEq)]
pub enum PlanStep {
    Conv {
        kh: usize,
        kw: usize,
        cin: usize,
        cout: usize,
        stride: usize,
        out_h: usize,
        out_w: usize,
    },
    Depthwise {
        k: usize,
        c: usize,
        stride: usize,
        out_h: usize,
        out_w: usize,
    },
    GlobalAvgPool {
        h: usize,
        w: usize,
        c: usize,
    },
    Dense {
        cin: usize,
        cout: usize,
        relu: bool,
        /// Coefficient of the `l2 * sum(w^2)` loss penalty on this layer's
        /// weight matrix; zero for unpenalized layers.
        l2: f32,
    },
    Dropout {
        rate: f32,
    },
}

impl PlanStep {
    /// Whether the step carries trainable weights (counted as a layer).
    pub fn is_weighted(&self) -> bool {
        matches!(
            self,
            PlanStep::Conv { .. } | PlanStep::Depthwise { .. } | PlanStep::Dense { .. }
        )
    }
}

#[derive(Clone, Debug)]
pub struct ArchPlan {
    pub steps: Vec<PlanStep>,
    /// Channels of the pooled feature vector feeding the head.
    pub feature_channels: usize,
}

impl ArchPlan {
    pub fn weighted_layers(&self) -> usize {
        self.steps.iter().filter(|s| s.is_weighted()).count()
    }
}

fn ceil_half(v: usize) -> usize {
    v.div_ceil(2)
}

/// Lays out the full network for a config: stem, body blocks, global
/// average pooling, and the head.
pub fn plan(config: &ModelConfig) -> Result<ArchPlan> {
    config.validate()?;
    let alpha = config.alpha;
    let mut steps = Vec::new();
    let mut h = config.resolution;
    let mut w = config.resolution;

    let mut channels = scaled_channels(STEM_CHANNELS, alpha);
    h = ceil_half(h);
    w = ceil_half(w);
    steps.push(PlanStep::Conv {
        kh: 3,
        kw: 3,
        cin: 3,
        cout: channels,
        stride: 2,
        out_h: h,
        out_w: w,
    });

    for (i, &(stride, out_base)) in BLOCKS.iter().enumerate() {
        if config.variant == Variant::Shallow && REPEATED_BLOCKS.contains(&i) {
            continue;
        }
        let cout = scaled_channels(out_base, alpha);
        if stride == 2 {
            h = ceil_half(h);
            w = ceil_half(w);
        }
        match config.variant {
            Variant::FullConv => {
                steps.push(PlanStep::Conv {
                    kh: 3,
                    kw: 3,
                    cin: channels,
                    cout,
                    stride,
                    out_h: h,
                    out_w: w,
                });
            }
            Variant::Separable | Variant::Shallow => {
                steps.push(PlanStep::Depthwise {
                    k: 3,
                    c: channels,
                    stride,
                    out_h: h,
                    out_w: w,
                });
                steps.push(PlanStep::Conv {
                    kh: 1,
                    kw: 1,
                    cin: channels,
                    cout,
                    stride: 1,
                    out_h: h,
                    out_w: w,
                });
            }
        }
        channels = cout;
    }

    steps.push(PlanStep::GlobalAvgPool { h, w, c: channels });

    match config.head {
        Head::Linear { classes } => {
            steps.push(PlanStep::Dense {
                cin: channels,
                cout: classes,
                relu: false,
                l2: 0.0,
            });
        }
        Head::Transfer => {
            steps.push(PlanStep::Dense {
                cin: channels,
                cout: TRANSFER_HIDDEN,
                relu: true,
                l2: TRANSFER_L2,
            });
            steps.push(PlanStep::Dropout {
                rate: TRANSFER_DROPOUT,
            });
            steps.push(PlanStep::Dense {
                cin: TRANSFER_HIDDEN,
                cout: TRANSFER_CLASSES,
                relu: false,
                l2: 0.0,
            });
        }
    }

    Ok(ArchPlan {
        steps,
        feature_channels: channels,
    })
}
