//! First-order optimizers as pure state transitions: sgd, momentum, nesterov,
//! adagrad, rmsprop, adam, adadelta, and layer-wise trust-ratio scaling
//! (lars). `step` never mutates its inputs; it returns fresh parameters and
//! a fresh state.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::data::Batch;
use crate::error::{Error, Result};
use crate::models::{self, ModelSpec, ParameterSet};
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    Momentum,
    Nesterov,
    Adagrad,
    Rmsprop,
    Adam,
    Adadelta,
    Lars,
}

impl OptimizerKind {
    pub const ALL: [OptimizerKind; 8] = [
        OptimizerKind::Sgd,
        OptimizerKind::Momentum,
        OptimizerKind::Nesterov,
        OptimizerKind::Adagrad,
        OptimizerKind::Rmsprop,
        OptimizerKind::Adam,
        OptimizerKind::Adadelta,
        OptimizerKind::Lars,
    ];

    /// Auxiliary buffers the kind keeps per parameter.
    fn buffer_count(self) -> usize {
        match self {
            OptimizerKind::Sgd => 0,
            OptimizerKind::Momentum | OptimizerKind::Nesterov | OptimizerKind::Lars => 1,
            OptimizerKind::Adagrad | OptimizerKind::Rmsprop => 1,
            OptimizerKind::Adam | OptimizerKind::Adadelta => 2,
        }
    }
}

/// Solver hyperparameters. Defaults are the canonical library values:
/// momentum 0.9, adam (0.9, 0.999, 1e-8), rmsprop decay 0.9, adadelta
/// (0.95, 1e-6), adagrad epsilon 1e-10, lars trust coefficient 0.001.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub kind: OptimizerKind,
    pub momentum: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub rmsprop_decay: f64,
    pub adadelta_rho: f64,
    pub adadelta_epsilon: f64,
    pub adagrad_epsilon: f64,
    /// Coupled L2: added to the gradient before the solver update.
    pub weight_decay: f64,
    pub trust_coeff: f64,
    /// Optional global-norm gradient clip, applied to raw gradients.
    pub clip_norm: Option<f64>,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            kind: OptimizerKind::Sgd,
            momentum: 0.9,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            rmsprop_decay: 0.9,
            adadelta_rho: 0.95,
            adadelta_epsilon: 1e-6,
            adagrad_epsilon: 1e-10,
            weight_decay: 0.0,
            trust_coeff: 0.001,
            clip_norm: None,
        }
    }
}

impl OptimizerConfig {
    pub fn new(kind: OptimizerKind) -> Self {
        OptimizerConfig {
            kind,
            ..OptimizerConfig::default()
        }
    }
}

/// Per-parameter auxiliary buffers plus the step counter. Buffer slot
/// meaning per kind: momentum/nesterov/lars `[velocity]`, adagrad
/// `[accumulator]`, rmsprop `[mean_square]`, adam `[m, v]`, adadelta
/// `[acc_grad_sq, acc_update_sq]`.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerState {
    pub config: OptimizerConfig,
    pub step_count: u64,
    buffers: BTreeMap<String, Vec<Tensor>>,
}

impl OptimizerState {
    /// Fresh state with zero buffers matching `params`.
    pub fn new(config: OptimizerConfig, params: &ParameterSet) -> Self {
        let n = config.kind.buffer_count();
        let buffers = params
            .iter()
            .map(|(name, t)| (name.clone(), vec![Tensor::zeros(t.shape()); n]))
            .collect();
        OptimizerState {
            config,
            step_count: 0,
            buffers,
        }
    }

    pub fn buffers(&self, name: &str) -> Option<&[Tensor]> {
        self.buffers.get(name).map(Vec::as_slice)
    }
}

/// Trust ratio for layer-wise rate scaling:
/// `trust_coeff * ||w|| / (||g|| + weight_decay * ||w||)`, with zero-norm
/// guards. Zero weights, or a zero denominator, skip the update (ratio 0)
/// rather than erroring.
pub fn lars_trust_ratio(
    weight_norm: f64,
    grad_norm: f64,
    weight_decay: f64,
    trust_coeff: f64,
) -> f64 {
    if weight_norm == 0.0 {
        return 0.0;
    }
    let denom = grad_norm + weight_decay * weight_norm;
    if denom == 0.0 {
        return 0.0;
    }
    trust_coeff * weight_norm / denom
}

/// One optimizer step at learning rate `lr`. Returns updated parameters and
/// advanced state; inputs are untouched.
pub fn step(
    state: &OptimizerState,
    params: &ParameterSet,
    grads: &BTreeMap<String, Tensor>,
    lr: f64,
) -> Result<(ParameterSet, OptimizerState)> {
    if !(lr > 0.0) {
        return Err(Error::invalid(format!("learning rate must be positive, got {lr}")));
    }
    for (name, w) in params.iter() {
        let g = grads
            .get(name)
            .ok_or_else(|| Error::invalid(format!("missing gradient for parameter '{name}'")))?;
        if g.shape() != w.shape() {
            return Err(Error::ShapeMismatch {
                context: format!("gradient '{name}'"),
                expected: w.shape().to_vec(),
                found: g.shape().to_vec(),
            });
        }
        if !g.all_finite() {
            return Err(Error::NonFinite(format!("gradient of parameter '{name}'")));
        }
    }

    // Optional global-norm clip over the raw gradient.
    let clip_scale = match state.config.clip_norm {
        Some(max_norm) => {
            let norm = params
                .iter()
                .map(|(n, _)| grads[n].sq_norm())
                .sum::<f64>()
                .sqrt();
            if norm > max_norm {
                max_norm / norm
            } else {
                1.0
            }
        }
        None => 1.0,
    };

    let cfg = &state.config;
    let t = state.step_count + 1;
    let mut new_params = ParameterSet::default();
    let mut new_buffers = BTreeMap::new();

    for (name, w) in params.iter() {
        let raw = if clip_scale == 1.0 {
            grads[name].clone()
        } else {
            grads[name].scale(clip_scale)
        };
        let old = state
            .buffers
            .get(name)
            .ok_or_else(|| Error::invalid(format!("missing optimizer buffer for '{name}'")))?;
        if old.len() != cfg.kind.buffer_count() {
            return Err(Error::invalid(format!(
                "buffer count mismatch for '{name}': have {}, need {}",
                old.len(),
                cfg.kind.buffer_count()
            )));
        }

        // Coupled L2; lars folds decay into its own formula below.
        let decayed = |raw: &Tensor| -> Tensor {
            if cfg.weight_decay == 0.0 {
                raw.clone()
            } else {
                raw.zip_map(w, |g, w| g + cfg.weight_decay * w)
                    .expect("shapes checked")
            }
        };

        let (w_next, bufs) = match cfg.kind {
            OptimizerKind::Sgd => {
                let g = decayed(&raw);
                (w.zip_map(&g, |w, g| w - lr * g)?, vec![])
            }
            OptimizerKind::Momentum => {
                let g = decayed(&raw);
                let v = old[0].zip_map(&g, |v, g| cfg.momentum * v + g)?;
                (w.zip_map(&v, |w, v| w - lr * v)?, vec![v])
            }
            OptimizerKind::Nesterov => {
                let g = decayed(&raw);
                let v = old[0].zip_map(&g, |v, g| cfg.momentum * v + g)?;
                let lead = g.zip_map(&v, |g, v| g + cfg.momentum * v)?;
                (w.zip_map(&lead, |w, d| w - lr * d)?, vec![v])
            }
            OptimizerKind::Adagrad => {
                let g = decayed(&raw);
                let acc = old[0].zip_map(&g, |a, g| a + g * g)?;
                let upd = g.zip_map(&acc, |g, a| g / (a.sqrt() + cfg.adagrad_epsilon))?;
                (w.zip_map(&upd, |w, u| w - lr * u)?, vec![acc])
            }
            OptimizerKind::Rmsprop => {
                let g = decayed(&raw);
                let rho = cfg.rmsprop_decay;
                let ms = old[0].zip_map(&g, |m, g| rho * m + (1.0 - rho) * g * g)?;
                let upd = g.zip_map(&ms, |g, m| g / (m.sqrt() + cfg.epsilon))?;
                (w.zip_map(&upd, |w, u| w - lr * u)?, vec![ms])
            }
            OptimizerKind::Adam => {
                let g = decayed(&raw);
                let m = old[0].zip_map(&g, |m, g| cfg.beta1 * m + (1.0 - cfg.beta1) * g)?;
                let v = old[1].zip_map(&g, |v, g| cfg.beta2 * v + (1.0 - cfg.beta2) * g * g)?;
                let mc = 1.0 - cfg.beta1.powi(t as i32);
                let vc = 1.0 - cfg.beta2.powi(t as i32);
                let upd = m.zip_map(&v, |m, v| (m / mc) / ((v / vc).sqrt() + cfg.epsilon))?;
                (w.zip_map(&upd, |w, u| w - lr * u)?, vec![m, v])
            }
            OptimizerKind::Adadelta => {
                let g = decayed(&raw);
                let rho = cfg.adadelta_rho;
                let eps = cfg.adadelta_epsilon;
                let acc_g = old[0].zip_map(&g, |a, g| rho * a + (1.0 - rho) * g * g)?;
                let delta = g.zip_map(&old[1], |_, _| 0.0)?; // placeholder, filled below
                let mut delta = delta;
                for i in 0..g.len() {
                    let d = -((old[1].data()[i] + eps).sqrt() / (acc_g.data()[i] + eps).sqrt())
                        * g.data()[i];
                    delta.data_mut()[i] = d;
                }
                let acc_dx = old[1].zip_map(&delta, |a, d| rho * a + (1.0 - rho) * d * d)?;
                (w.zip_map(&delta, |w, d| w + lr * d)?, vec![acc_g, acc_dx])
            }
            OptimizerKind::Lars => {
                let ratio = lars_trust_ratio(
                    w.norm(),
                    raw.norm(),
                    cfg.weight_decay,
                    cfg.trust_coeff,
                );
                let g = decayed(&raw);
                let v = old[0].zip_map(&g, |v, g| cfg.momentum * v + ratio * lr * g)?;
                (w.zip_map(&v, |w, v| w - v)?, vec![v])
            }
        };
        new_params.insert(name.clone(), w_next);
        new_buffers.insert(name.clone(), bufs);
    }

    Ok((
        new_params,
        OptimizerState {
            config: *cfg,
            step_count: t,
            buffers: new_buffers,
        },
    ))
}

/// Mean gradient over a batch: `(1/b) * sum_i grad l(x_i, y_i, w)`.
pub fn mini_batch_gradient(
    spec: &ModelSpec,
    params: &ParameterSet,
    batch: &Batch,
) -> Result<BTreeMap<String, Tensor>> {
    if batch.is_empty() {
        return Err(Error::invalid("empty batch"));
    }
    models::loss(spec, params, batch)?.gradients()
}
