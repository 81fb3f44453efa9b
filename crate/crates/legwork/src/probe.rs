//! Curvature probe: estimates the local Lipschitz constant along the
//! gradient direction, `L(x, g) = |g' H g| / ||g||^2`, with the
//! Hessian-vector product taken by finite differences of the gradient. The
//! reciprocal of `L` is the idealized second-order step size, and the peak
//! of `L` over early iterations is what warmup has to cover.

use std::io::Write as IoWrite;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{joint_len, joint_norm, Tensor};

/// A gradient oracle: full loss gradient at the given parameter values,
/// evaluated on whatever (fixed) batch the prober was set up with.
pub trait GradientSource {
    fn gradient(&self, params: &[Tensor]) -> Result<Vec<Tensor>>;
}

impl<F> GradientSource for F
where
    F: Fn(&[Tensor]) -> Result<Vec<Tensor>>,
{
    fn gradient(&self, params: &[Tensor]) -> Result<Vec<Tensor>> {
        self(params)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeConfig {
    /// Finite-difference step scale. The applied perturbation is
    /// `epsilon * max(1, ||w|| / sqrt(dim))` so the quotient stays in the
    /// stable regime across parameter magnitudes.
    pub epsilon: f64,
    /// Size of the fixed, seeded batch the probe gradient is computed on.
    pub probe_batch_size: usize,
    /// Iterations between probes.
    pub probe_every: u64,
    /// Seed selecting the probe batch; independent of the training stream.
    pub seed: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            epsilon: 1e-4,
            probe_batch_size: 256,
            probe_every: 1,
            seed: 0,
        }
    }
}

impl ProbeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon <= 1e-2) {
            return Err(Error::invalid(format!(
                "probe epsilon must be in (0, 1e-2], got {}",
                self.epsilon
            )));
        }
        if self.probe_every == 0 || self.probe_batch_size == 0 {
            return Err(Error::invalid("probe_every and probe_batch_size must be positive"));
        }
        Ok(())
    }
}

/// Probe samples from one run: (iteration, L) pairs with iterations strictly
/// increasing. Zero-gradient iterations are absent rather than recorded as
/// sentinel values.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct ProbeTrace {
    pub entries: Vec<(u64, f64)>,
    /// Training batch size of the run this trace came from.
    pub batch_size: u64,
    pub model_id: String,
}

impl ProbeTrace {
    pub fn new(batch_size: u64, model_id: impl Into<String>) -> Self {
        ProbeTrace {
            entries: Vec::new(),
            batch_size,
            model_id: model_id.into(),
        }
    }

    fn push(&mut self, iteration: u64, value: f64) -> Result<()> {
        if let Some(&(last, _)) = self.entries.last() {
            if iteration <= last {
                return Err(Error::invalid(format!(
                    "probe iteration {iteration} not after {last}"
                )));
            }
        }
        if !value.is_finite() || value < 0.0 {
            return Err(Error::NonFinite(format!("probe value at iteration {iteration}")));
        }
        self.entries.push((iteration, value));
        Ok(())
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.entries.iter().map(|&(_, v)| v)
    }
}

fn perturbation_step(epsilon: f64, w: &[Tensor]) -> f64 {
    let dim = joint_len(w).max(1);
    epsilon * (joint_norm(w) / (dim as f64).sqrt()).max(1.0)
}

fn check_unit(v: &[Tensor]) -> Result<()> {
    let n = joint_norm(v);
    if (n - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!(
            "direction must be unit norm, got ||v|| = {n}"
        )));
    }
    Ok(())
}

fn perturbed(w: &[Tensor], v: &[Tensor], h: f64) -> Vec<Tensor> {
    w.iter()
        .zip(v)
        .map(|(wi, vi)| wi.zip_map(vi, |a, b| a + h * b).expect("shapes match"))
        .collect()
}

fn ensure_finite(grads: &[Tensor], what: &str) -> Result<()> {
    if grads.iter().any(|g| !g.all_finite()) {
        return Err(Error::NonFinite(format!("{what} gradient")));
    }
    Ok(())
}

/// Finite-difference Hessian-vector product
/// `(grad f(w + h v) - grad f(w)) / h` for a unit-norm direction `v`.
pub fn hessian_vector(
    grad_fn: &dyn GradientSource,
    w: &[Tensor],
    v: &[Tensor],
    epsilon: f64,
) -> Result<Vec<Tensor>> {
    check_unit(v)?;
    let h = perturbation_step(epsilon, w);
    let g0 = grad_fn.gradient(w)?;
    ensure_finite(&g0, "base")?;
    let g1 = grad_fn.gradient(&perturbed(w, v, h))?;
    ensure_finite(&g1, "perturbed")?;
    Ok(g1
        .iter()
        .zip(&g0)
        .map(|(a, b)| a.zip_map(b, |x, y| (x - y) / h).expect("shapes match"))
        .collect())
}

/// `L(x, g) = |v' H v|` with `v = g / ||g||` and `Hv` from
/// [`hessian_vector`]; equals `|g' H g| / ||g||^2`. `g` only sets the probe
/// direction, so it need not be the gradient at `w`.
pub fn lipschitz_estimate(
    grad_fn: &dyn GradientSource,
    w: &[Tensor],
    g: &[Tensor],
    epsilon: f64,
) -> Result<f64> {
    let g_norm = joint_norm(g);
    if g_norm == 0.0 {
        return Err(Error::invalid("zero gradient: probe direction undefined"));
    }
    let v: Vec<Tensor> = g.iter().map(|t| t.scale(1.0 / g_norm)).collect();
    let hv = hessian_vector(grad_fn, w, &v, epsilon)?;
    let mut acc = 0.0;
    for (hvi, vi) in hv.iter().zip(&v) {
        acc += hvi.dot(vi).expect("shapes match");
    }
    Ok(acc.abs())
}

/// Drive the probe over a stream of `(iteration, params)` snapshots.
/// Probes fire on iterations divisible by `probe_every`; zero-gradient
/// snapshots are skipped.
pub fn trace_run<I>(
    steps: I,
    grad_fn: &dyn GradientSource,
    config: &ProbeConfig,
    batch_size: u64,
    model_id: &str,
) -> Result<ProbeTrace>
where
    I: IntoIterator<Item = (u64, Vec<Tensor>)>,
{
    config.validate()?;
    let mut trace = ProbeTrace::new(batch_size, model_id);
    for (iteration, params) in steps {
        observe(&mut trace, config, iteration, &params, grad_fn)?;
    }
    Ok(trace)
}

/// One probe step, shared by `trace_run` and the training harness. Reads
/// parameters, never writes them.
pub fn observe(
    trace: &mut ProbeTrace,
    config: &ProbeConfig,
    iteration: u64,
    params: &[Tensor],
    grad_fn: &dyn GradientSource,
) -> Result<()> {
    if iteration % config.probe_every != 0 {
        return Ok(());
    }
    let g = grad_fn.gradient(params)?;
    ensure_finite(&g, "probe")?;
    if joint_norm(&g) == 0.0 {
        return Ok(()); // missing, not zero
    }
    let value = lipschitz_estimate(grad_fn, params, &g, config.epsilon)?;
    trace.push(iteration, value)
}

/// Default smoothing window (in probes) for peak extraction.
pub const DEFAULT_PEAK_WINDOW: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeakStats {
    pub peak_iteration: u64,
    pub peak_value: f64,
}

/// Argmax of the moving-average-smoothed trace. The window is centered with
/// radius `window / 2` (window 1 means no smoothing); ties break toward the
/// earliest iteration.
pub fn peak_statistics(trace: &ProbeTrace, window: usize) -> Result<PeakStats> {
    if trace.entries.is_empty() {
        return Err(Error::invalid("peak_statistics on an empty trace"));
    }
    if window == 0 {
        return Err(Error::invalid("window must be at least 1"));
    }
    let radius = window / 2;
    let n = trace.entries.len();
    let mut best_idx = 0usize;
    let mut best_val = f64::NEG_INFINITY;
    for j in 0..n {
        let lo = j.saturating_sub(radius);
        let hi = (j + radius).min(n - 1);
        let mean = trace.entries[lo..=hi]
            .iter()
            .map(|&(_, v)| v)
            .sum::<f64>()
            / (hi - lo + 1) as f64;
        if mean > best_val {
            best_val = mean;
            best_idx = j;
        }
    }
    Ok(PeakStats {
        peak_iteration: trace.entries[best_idx].0,
        peak_value: best_val,
    })
}

/// Write the trace as `iteration,L` CSV rows.
pub fn write_probe_csv(trace: &ProbeTrace, out: &mut impl IoWrite) -> Result<()> {
    writeln!(out, "iteration,L")?;
    for &(iteration, value) in &trace.entries {
        writeln!(out, "{iteration},{value}")?;
    }
    Ok(())
}
