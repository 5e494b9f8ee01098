//! Static cost model: multiply-accumulate and parameter counts walked off
//! the same architecture plan the builder uses.
//!
//! Counting convention: a convolution costs `out_h * out_w * kh * kw * cin *
//! cout` mult-adds, a depthwise convolution `out_h * out_w * k * k * c`, and
//! a dense layer `cin * cout`; normalization, bias adds, pooling, and
//! activations are not counted. Parameters cover convolution and dense
//! weights, their biases, and the learned batch-norm scale and shift;
//! running statistics are state, not parameters, and are excluded.

use crate::config::ModelConfig;
use crate::error::Result;
use crate::plan::{plan, ArchPlan, PlanStep};

#[derive(Clone, Debug)]
pub struct LayerCost {
    pub name: String,
    /// Mult-adds for one image.
    pub mult_adds: u64,
    pub params: u64,
    /// `(h, w, c)` of the layer output.
    pub output: (usize, usize, usize),
}

#[derive(Clone, Debug)]
pub struct CostReport {
    pub mult_adds: u64,
    pub params: u64,
    pub weighted_layers: usize,
    pub per_layer: Vec<LayerCost>,
}

impl CostReport {
    /// Mult-adds rounded to whole millions, the resolution used in summary
    /// tables.
    pub fn mult_adds_millions(&self) -> u64 {
        (self.mult_adds + 500_000) / 1_000_000
    }

    /// Parameters rounded to a tenth of a million.
    pub fn params_millions(&self) -> f64 {
        (self.params as f64 / 100_000.0).round() / 10.0
    }
}

/// Well-known classifiers used as scale reference points in reports, as
/// `(name, mult-adds in millions, params in millions)`.
pub const COMPARISON_POINTS: &[(&str, f64, f64)] =
    &[("GoogleNet", 1550.0, 6.8), ("VGG 16", 15300.0, 138.0)];

fn step_cost(step: &PlanStep, index: usize, prev_hw: (usize, usize)) -> LayerCost {
    match *step {
        PlanStep::Conv {
            kh,
            kw,
            cin,
            cout,
            stride,
            out_h,
            out_w,
        } => LayerCost {
            name: if kh == 1 && kw == 1 {
                format!("{index:02} pw 1x1 {cin}->{cout}")
            } else {
                format!("{index:02} conv {kh}x{kw} {cin}->{cout} s{stride}")
            },
            mult_adds: (out_h * out_w * kh * kw * cin * cout) as u64,
            params: (kh * kw * cin * cout + cout + 2 * cout) as u64,
            output: (out_h, out_w, cout),
        },
        PlanStep::Depthwise {
            k,
            c,
            stride,
            out_h,
            out_w,
        } => LayerCost {
            name: format!("{index:02} dw {k}x{k} {c} s{stride}"),
            mult_adds: (out_h * out_w * k * k * c) as u64,
            params: (k * k * c + c + 2 * c) as u64,
            output: (out_h, out_w, c),
        },
        PlanStep::GlobalAvgPool { c, .. } => LayerCost {
            name: format!("{index:02} avgpool"),
            mult_adds: 0,
            params: 0,
            output: (1, 1, c),
        },
        PlanStep::Dense { cin, cout, .. } => LayerCost {
            name: format!("{index:02} fc {cin}->{cout}"),
            mult_adds: (cin * cout) as u64,
            params: (cin * cout + cout) as u64,
            output: (1, 1, cout),
        },
        PlanStep::Dropout { .. } => LayerCost {
            name: format!("{index:02} dropout"),
            mult_adds: 0,
            params: 0,
            output: (1, 1, prev_hw.0),
        },
    }
}

pub fn count_costs(config: &ModelConfig) -> Result<CostReport> {
    let arch = plan(config)?;
    Ok(count_plan(&arch))
}

pub fn count_plan(arch: &ArchPlan) -> CostReport {
    let mut per_layer = Vec::with_capacity(arch.steps.len());
    let mut prev_c = 0usize;
    for (i, step) in arch.steps.iter().enumerate() {
        let cost = step_cost(step, i, (prev_c, prev_c));
        prev_c = cost.output.2;
        per_layer.push(cost);
    }
    CostReport {
        mult_adds: per_layer.iter().map(|l| l.mult_adds).sum(),
        params: per_layer.iter().map(|l| l.params).sum(),
        weighted_layers: arch.weighted_layers(),
        per_layer,
    }
}
