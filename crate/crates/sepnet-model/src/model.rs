use sepnet_kernels::{
    batchnorm_backward, batchnorm_infer, batchnorm_train, conv2d, conv2d_backward, dense,
    dense_backward, depthwise_conv2d, depthwise_conv2d_backward, dropout_backward, dropout_train,
    global_avg_pool, global_avg_pool_backward, relu, relu_backward, softmax_cross_entropy,
    BnCache, Padding, Rng, Tensor, BN_EPS, BN_MOMENTUM,
};

use crate::config::ModelConfig;
use crate::error::{ModelError, Result};
use crate::plan::{plan, PlanStep};

/// A concrete layer with its parameters and state. Convolutions carry their
/// batch-norm scale/shift and running statistics; activations are implied
/// by the layer kind (batch norm + ReLU after every convolution, optional
/// ReLU after dense layers).
#[derive(Clone, Debug)]
pub enum Layer {
    Conv {
        weights: Tensor,
        bias: Tensor,
        gamma: Tensor,
        beta: Tensor,
        running_mean: Tensor,
        running_var: Tensor,
        stride: usize,
    },
    Depthwise {
        weights: Tensor,
        bias: Tensor,
        gamma: Tensor,
        beta: Tensor,
        running_mean: Tensor,
        running_var: Tensor,
        stride: usize,
    },
    GlobalAvgPool {
        h: usize,
        w: usize,
    },
    Dense {
        weights: Tensor,
        bias: Tensor,
        relu: bool,
        l2: f32,
    },
    Dropout {
        rate: f32,
    },
}

enum LayerCache {
    Conv {
        input: Tensor,
        bn_out: Tensor,
        bn: BnCache,
    },
    Pool,
    Dense {
        input: Tensor,
        pre_act: Option<Tensor>,
    },
    Dropout {
        mask: Vec<bool>,
    },
}

/// Activations saved by [`Model::forward_train`] for the backward pass.
pub struct ForwardCache {
    caches: Vec<LayerCache>,
}

/// Result of one forward/backward pass over a batch.
pub struct StepOutput {
    /// Cross-entropy plus L2 penalty.
    pub loss: f32,
    pub correct: usize,
    /// Parameter gradients, aligned with [`Model::params_mut`].
    pub grads: Vec<(String, Tensor)>,
}

#[derive(Clone, Debug)]
pub struct Model {
    pub config: ModelConfig,
    layers: Vec<Layer>,
}

fn he_normal(rng: &mut Rng, shape: &[usize], fan_in: usize) -> Tensor {
    let std = (2.0 / fan_in as f32).sqrt();
    let n: usize = shape.iter().product();
    let data = (0..n).map(|_| rng.normal() * std).collect();
    Tensor::new(shape.to_vec(), data).expect("init shape")
}

/// Builds a freshly initialized model. Weights draw from He-normal
/// distributions on one seed stream per layer, so two builds with the same
/// config and seed are identical.
pub fn build_model(config: &ModelConfig, seed: u64) -> Result<Model> {
    let arch = plan(config)?;
    let root = Rng::new(seed);
    let mut layers = Vec::with_capacity(arch.steps.len());
    for (i, step) in arch.steps.iter().enumerate() {
        let mut rng = root.fork(i as u64);
        layers.push(match *step {
            PlanStep::Conv {
                kh,
                kw,
                cin,
                cout,
                stride,
                ..
            } => Layer::Conv {
                weights: he_normal(&mut rng, &[kh, kw, cin, cout], kh * kw * cin),
                bias: Tensor::zeros(&[cout]),
                gamma: Tensor::full(&[cout], 1.0),
                beta: Tensor::zeros(&[cout]),
                running_mean: Tensor::zeros(&[cout]),
                running_var: Tensor::full(&[cout], 1.0),
                stride,
            },
            PlanStep::Depthwise { k, c, stride, .. } => Layer::Depthwise {
                weights: he_normal(&mut rng, &[k, k, c], k * k),
                bias: Tensor::zeros(&[c]),
                gamma: Tensor::full(&[c], 1.0),
                beta: Tensor::zeros(&[c]),
                running_mean: Tensor::zeros(&[c]),
                running_var: Tensor::full(&[c], 1.0),
                stride,
            },
            PlanStep::GlobalAvgPool { h, w, .. } => Layer::GlobalAvgPool { h, w },
            PlanStep::Dense { cin, cout, relu, l2 } => Layer::Dense {
                weights: he_normal(&mut rng, &[cin, cout], cin),
                bias: Tensor::zeros(&[cout]),
                relu,
                l2,
            },
            PlanStep::Dropout { rate } => Layer::Dropout { rate },
        });
    }
    Ok(Model {
        config: config.clone(),
        layers,
    })
}

impl Model {
    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    /// Training forward pass: batch statistics drive normalization (and are
    /// folded into the running statistics), dropout is live. Returns logits
    /// and the activation cache for [`Model::backward`].
    pub fn forward_train(&mut self, input: &Tensor, rng: &mut Rng) -> Result<(Tensor, ForwardCache)> {
        let mut x = input.clone();
        let mut caches = Vec::with_capacity(self.layers.len());
        for layer in &mut self.layers {
            match layer {
                Layer::Conv {
                    weights,
                    bias,
                    gamma,
                    beta,
                    running_mean,
                    running_var,
                    stride,
                } => {
                    let y = conv2d(&x, weights, bias, *stride, Padding::Same)?;
                    let (bn_out, bn) = batchnorm_train(
                        &y,
                        gamma,
                        beta,
                        running_mean,
                        running_var,
                        BN_MOMENTUM,
                        BN_EPS,
                    )?;
                    let out = relu(&bn_out);
                    caches.push(LayerCache::Conv {
                        input: x,
                        bn_out,
                        bn,
                    });
                    x = out;
                }
                Layer::Depthwise {
                    weights,
                    bias,
                    gamma,
                    beta,
                    running_mean,
                    running_var,
                    stride,
                } => {
                    let y = depthwise_conv2d(&x, weights, bias, *stride, Padding::Same)?;
                    let (bn_out, bn) = batchnorm_train(
                        &y,
                        gamma,
                        beta,
                        running_mean,
                        running_var,
                        BN_MOMENTUM,
                        BN_EPS,
                    )?;
                    let out = relu(&bn_out);
                    caches.push(LayerCache::Conv {
                        input: x,
                        bn_out,
                        bn,
                    });
                    x = out;
                }
                Layer::GlobalAvgPool { .. } => {
                    let out = global_avg_pool(&x)?;
                    caches.push(LayerCache::Pool);
                    x = out;
                }
                Layer::Dense {
                    weights,
                    bias,
                    relu: with_relu,
                    ..
                } => {
                    let y = dense(&x, weights, bias)?;
                    if *with_relu {
                        let out = relu(&y);
                        caches.push(LayerCache::Dense {
                            input: x,
                            pre_act: Some(y),
                        });
                        x = out;
                    } else {
                        caches.push(LayerCache::Dense {
                            input: x,
                            pre_act: None,
                        });
                        x = y;
                    }
                }
                Layer::Dropout { rate } => {
                    let (out, mask) = dropout_train(&x, *rate, rng)?;
                    caches.push(LayerCache::Dropout { mask });
                    x = out;
                }
            }
        }
        Ok((x, ForwardCache { caches }))
    }

    /// Inference forward pass: running statistics drive normalization,
    /// dropout is a no-op. Returns logits.
    pub fn forward_infer(&self, input: &Tensor) -> Result<Tensor> {
        let mut x = input.clone();
        for layer in &self.layers {
            x = match layer {
                Layer::Conv {
                    weights,
                    bias,
                    gamma,
                    beta,
                    running_mean,
                    running_var,
                    stride,
                } => {
                    let y = conv2d(&x, weights, bias, *stride, Padding::Same)?;
                    relu(&batchnorm_infer(
                        &y,
                        gamma,
                        beta,
                        running_mean,
                        running_var,
                        BN_EPS,
                    )?)
                }
                Layer::Depthwise {
                    weights,
                    bias,
                    gamma,
                    beta,
                    running_mean,
                    running_var,
                    stride,
                } => {
                    let y = depthwise_conv2d(&x, weights, bias, *stride, Padding::Same)?;
                    relu(&batchnorm_infer(
                        &y,
                        gamma,
                        beta,
                        running_mean,
                        running_var,
                        BN_EPS,
                    )?)
                }
                Layer::GlobalAvgPool { .. } => global_avg_pool(&x)?,
                Layer::Dense {
                    weights,
                    bias,
                    relu: with_relu,
                    ..
                } => {
                    let y = dense(&x, weights, bias)?;
                    if *with_relu {
                        relu(&y)
                    } else {
                        y
                    }
                }
                Layer::Dropout { .. } => x,
            };
        }
        Ok(x)
    }

    /// Backpropagates `d_logits` through the cached activations. Returns
    /// parameter gradients named and ordered like [`Model::params_mut`],
    /// with the L2 penalty's `2 * l2 * w` term already added on penalized
    /// layers.
    pub fn backward(&self, cache: &ForwardCache, d_logits: &Tensor) -> Result<Vec<(String, Tensor)>> {
        if cache.caches.len() != self.layers.len() {
            return Err(ModelError::InvalidConfig(
                "forward cache does not match model depth".into(),
            ));
        }
        let mut grads_rev: Vec<(String, Tensor)> = Vec::new();
        let mut d = d_logits.clone();
        for (i, (layer, cache)) in self
            .layers
            .iter()
            .zip(&cache.caches)
            .enumerate()
            .rev()
        {
            match (layer, cache) {
                (
                    Layer::Conv {
                        weights,
                        gamma,
                        stride,
                        ..
                    },
                    LayerCache::Conv { input, bn_out, bn },
                ) => {
                    let d_bn_out = relu_backward(bn_out, &d)?;
                    let bn_grads = batchnorm_backward(bn, gamma, &d_bn_out)?;
                    let conv_grads =
                        conv2d_backward(input, weights, &bn_grads.d_input, *stride, Padding::Same)?;
                    d = conv_grads.d_input.clone();
                    push_named(&mut grads_rev, i, &[("beta", &bn_grads), ("gamma", &bn_grads)]);
                    push_named(
                        &mut grads_rev,
                        i,
                        &[("bias", &conv_grads), ("weights", &conv_grads)],
                    );
                }
                (
                    Layer::Depthwise {
                        weights,
                        gamma,
                        stride,
                        ..
                    },
                    LayerCache::Conv { input, bn_out, bn },
                ) => {
                    let d_bn_out = relu_backward(bn_out, &d)?;
                    let bn_grads = batchnorm_backward(bn, gamma, &d_bn_out)?;
                    let conv_grads = depthwise_conv2d_backward(
                        input,
                        weights,
                        &bn_grads.d_input,
                        *stride,
                        Padding::Same,
                    )?;
                    d = conv_grads.d_input.clone();
                    push_named(&mut grads_rev, i, &[("beta", &bn_grads), ("gamma", &bn_grads)]);
                    push_named(
                        &mut grads_rev,
                        i,
                        &[("bias", &conv_grads), ("weights", &conv_grads)],
                    );
                }
                (Layer::GlobalAvgPool { h, w }, LayerCache::Pool) => {
                    d = global_avg_pool_backward(&d, *h, *w)?;
                }
                (
                    Layer::Dense {
                        weights,
                        relu: with_relu,
                        l2,
                        ..
                    },
                    LayerCache::Dense { input, pre_act },
                ) => {
                    if *with_relu {
                        let pre = pre_act.as_ref().ok_or_else(|| {
                            ModelError::InvalidConfig("missing pre-activation cache".into())
                        })?;
                        d = relu_backward(pre, &d)?;
                    }
                    let dense_grads = dense_backward(input, weights, &d)?;
                    let mut d_w = dense_grads
                        .param("weights")
                        .expect("dense weights grad")
                        .clone();
                    if *l2 > 0.0 {
                        for (g, &w) in d_w.data_mut().iter_mut().zip(weights.data()) {
                            *g += 2.0 * *l2 * w;
                        }
                    }
                    d = dense_grads.d_input.clone();
                    grads_rev.push((
                        format!("layer{i:02}.bias"),
                        dense_grads.param("bias").expect("dense bias grad").clone(),
                    ));
                    grads_rev.push((format!("layer{i:02}.weights"), d_w));
                }
                (Layer::Dropout { rate }, LayerCache::Dropout { mask }) => {
                    d = dropout_backward(&d, mask, *rate)?;
                }
                _ => {
                    return Err(ModelError::InvalidConfig(
                        "forward cache does not match layer kinds".into(),
                    ))
                }
            }
        }
        grads_rev.reverse();
        Ok(grads_rev)
    }

    /// Sum of `l2 * sum(w^2)` over every penalized layer.
    pub fn l2_penalty(&self) -> f32 {
        let mut total = 0.0f64;
        for layer in &self.layers {
            if let Layer::Dense { weights, l2, .. } = layer {
                if *l2 > 0.0 {
                    let sq: f64 = weights.data().iter().map(|&w| (w as f64) * (w as f64)).sum();
                    total += *l2 as f64 * sq;
                }
            }
        }
        total as f32
    }

    /// One training step's loss, accuracy count, and gradients (no update).
    pub fn train_step_grads(
        &mut self,
        images: &Tensor,
        labels: &[usize],
        rng: &mut Rng,
    ) -> Result<StepOutput> {
        let (logits, cache) = self.forward_train(images, rng)?;
        let (ce, d_logits) = softmax_cross_entropy(&logits, labels)?;
        let loss = ce + self.l2_penalty();
        let correct = count_correct(&logits, labels)?;
        let grads = self.backward(&cache, &d_logits)?;
        Ok(StepOutput {
            loss,
            correct,
            grads,
        })
    }

    /// Trainable parameters in a stable order.
    pub fn params_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        let mut out = Vec::new();
        for (i, layer) in self.layers.iter_mut().enumerate() {
            match layer {
                Layer::Conv {
                    weights,
                    bias,
                    gamma,
                    beta,
                    ..
                }
                | Layer::Depthwise {
                    weights,
                    bias,
                    gamma,
                    beta,
                    ..
                } => {
                    out.push((format!("layer{i:02}.weights"), weights));
                    out.push((format!("layer{i:02}.bias"), bias));
                    out.push((format!("layer{i:02}.gamma"), gamma));
                    out.push((format!("layer{i:02}.beta"), beta));
                }
                Layer::Dense { weights, bias, .. } => {
                    out.push((format!("layer{i:02}.weights"), weights));
                    out.push((format!("layer{i:02}.bias"), bias));
                }
                _ => {}
            }
        }
        out
    }

    /// Every tensor that belongs in a checkpoint: trainable parameters plus
    /// batch-norm running statistics, in a stable order.
    pub fn state(&self) -> Vec<(String, &Tensor)> {
        let mut out = Vec::new();
        for (i, layer) in self.layers.iter().enumerate() {
            match layer {
                Layer::Conv {
                    weights,
                    bias,
                    gamma,
                    beta,
                    running_mean,
                    running_var,
                    ..
                }
                | Layer::Depthwise {
                    weights,
                    bias,
                    gamma,
                    beta,
                    running_mean,
                    running_var,
                    ..
                } => {
                    out.push((format!("layer{i:02}.weights"), weights));
                    out.push((format!("layer{i:02}.bias"), bias));
                    out.push((format!("layer{i:02}.gamma"), gamma));
                    out.push((format!("layer{i:02}.beta"), beta));
                    out.push((format!("layer{i:02}.running_mean"), running_mean));
                    out.push((format!("layer{i:02}.running_var"), running_var));
                }
                Layer::Dense { weights, bias, .. } => {
                    out.push((format!("layer{i:02}.weights"), weights));
                    out.push((format!("layer{i:02}.bias"), bias));
                }
                _ => {}
            }
        }
        out
    }

    /// Mutable view of the same tensors [`Model::state`] lists, in the same
    /// order.
    pub fn state_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        let mut out = Vec::new();
        for (i, layer) in self.layers.iter_mut().enumerate() {
            match layer {
                Layer::Conv {
                    weights,
                    bias,
                    gamma,
                    beta,
                    running_mean,
                    running_var,
                    ..
                }
                | Layer::Depthwise {
                    weights,
                    bias,
                    gamma,
                    beta,
                    running_mean,
                    running_var,
                    ..
                } => {
                    out.push((format!("layer{i:02}.weights"), weights));
                    out.push((format!("layer{i:02}.bias"), bias));
                    out.push((format!("layer{i:02}.gamma"), gamma));
                    out.push((format!("layer{i:02}.beta"), beta));
                    out.push((format!("layer{i:02}.running_mean"), running_mean));
                    out.push((format!("layer{i:02}.running_var"), running_var));
                }
                Layer::Dense { weights, bias, .. } => {
                    out.push((format!("layer{i:02}.weights"), weights));
                    out.push((format!("layer{i:02}.bias"), bias));
                }
                _ => {}
            }
        }
        out
    }

    /// Looks up one trainable parameter by its [`Model::params_mut`] name.
    pub fn param_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.params_mut()
            .into_iter()
            .find(|(n, _)| n == name)
            .map(|(_, t)| t)
    }

    /// Number of trainable parameter scalars.
    pub fn num_params(&self) -> u64 {
        let mut total = 0u64;
        for layer in &self.layers {
            match layer {
                Layer::Conv {
                    weights,
                    bias,
                    gamma,
                    beta,
                    ..
                }
                | Layer::Depthwise {
                    weights,
                    bias,
                    gamma,
                    beta,
                    ..
                } => {
                    total += (weights.numel() + bias.numel() + gamma.numel() + beta.numel()) as u64;
                }
                Layer::Dense { weights, bias, .. } => {
                    total += (weights.numel() + bias.numel()) as u64;
                }
                _ => {}
            }
        }
        total
    }
}

fn push_named(
    grads_rev: &mut Vec<(String, Tensor)>,
    layer_idx: usize,
    picks: &[(&'static str, &sepnet_kernels::LayerGrads)],
) {
    for (name, grads) in picks {
        grads_rev.push((
            format!("layer{layer_idx:02}.{name}"),
            grads.param(name).expect("missing grad").clone(),
        ));
    }
}

/// Predicted class per row: the argmax, with ties resolved to the lowest
/// class index.
pub fn argmax_classes(logits: &Tensor) -> Result<Vec<usize>> {
    let (n, k) = logits.dims2("logits")?;
    let mut out = Vec::with_capacity(n);
    for row in logits.data().chunks_exact(k) {
        let mut best = 0usize;
        for (j, &v) in row.iter().enumerate() {
            if v > row[best] {
                best = j;
            }
        }
        out.push(best);
    }
    Ok(out)
}

fn count_correct(logits: &Tensor, labels: &[usize]) -> Result<usize> {
    Ok(argmax_classes(logits)?
        .iter()
        .zip(labels)
        .filter(|(p, l)| p == l)
        .count())
}
