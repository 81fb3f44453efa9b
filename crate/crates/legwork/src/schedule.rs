//! Learning-rate schedules and the batch-size scaling algebra.
//!
//! A schedule is a linear warmup ramp composed with a decay curve (constant,
//! multi-step, polynomial, or per-epoch exponential). Scaling a schedule to a
//! new batch size multiplies the learning rate by sqrt(k) (or k under the
//! linear rule) and the warmup length in epochs by k.
//!
//! Scale factors are carried as exact rationals, split into a power-of-two
//! exponent and an odd residue. The learning rate itself is stored as
//! `coeff * 2^(half_log2 / 2)` so that the half-power-of-two learning rates
//! used in batch-scaling tables survive scaling with zero rounding: scaling
//! 2^2.5 by sqrt(32) yields exactly 2^5.0, and scaling back recovers the
//! original spec bit for bit.

use std::fmt;
use std::io::Write as IoWrite;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exact nonnegative rational, always reduced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ratio {
    num: u64,
    den: u64,
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl Ratio {
    pub const ONE: Ratio = Ratio { num: 1, den: 1 };

    pub fn new(num: u64, den: u64) -> Result<Ratio> {
        if num == 0 || den == 0 {
            return Err(Error::invalid("ratio must be positive"));
        }
        let g = gcd(num, den);
        Ok(Ratio {
            num: num / g,
            den: den / g,
        })
    }

    pub fn int(k: u64) -> Result<Ratio> {
        Ratio::new(k, 1)
    }

    pub fn num(&self) -> u64 {
        self.num
    }

    pub fn den(&self) -> u64 {
        self.den
    }

    pub fn recip(&self) -> Ratio {
        Ratio {
            num: self.den,
            den: self.num,
        }
    }

    pub fn is_one(&self) -> bool {
        self.num == 1 && self.den == 1
    }

    pub fn as_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    pub fn mul(&self, other: Ratio) -> Result<Ratio> {
        // cross-reduce before multiplying to keep intermediates small
        let g1 = gcd(self.num, other.den);
        let g2 = gcd(other.num, self.den);
        let num = (self.num / g1)
            .checked_mul(other.num / g2)
            .ok_or_else(|| Error::invalid("ratio overflow"))?;
        let den = (self.den / g2)
            .checked_mul(other.den / g1)
            .ok_or_else(|| Error::invalid("ratio overflow"))?;
        Ratio::new(num, den)
    }

    /// Split into `2^t * odd` where the returned ratio has odd numerator and
    /// denominator.
    pub fn pow2_split(&self) -> (i64, Ratio) {
        let zn = self.num.trailing_zeros() as i64;
        let zd = self.den.trailing_zeros() as i64;
        (
            zn - zd,
            Ratio {
                num: self.num >> zn,
                den: self.den >> zd,
            },
        )
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl FromStr for Ratio {
    type Err = Error;

    fn from_str(s: &str) -> Result<Ratio> {
        let s = s.trim();
        match s.split_once('/') {
            Some((n, d)) => {
                let num = n.trim().parse().map_err(|_| bad_ratio(s))?;
                let den = d.trim().parse().map_err(|_| bad_ratio(s))?;
                Ratio::new(num, den)
            }
            None => Ratio::int(s.parse().map_err(|_| bad_ratio(s))?),
        }
    }
}

fn bad_ratio(s: &str) -> Error {
    Error::invalid(format!("cannot parse '{s}' as a ratio (use N or N/D)"))
}

/// Decay curve applied after warmup.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DecaySpec {
    Constant,
    /// Multiply by `factor` at each epoch boundary in `boundaries_epochs`.
    MultiStep {
        boundaries_epochs: Vec<f64>,
        factor: f64,
    },
    /// `(1 - i/I)^power` over all `I` training iterations (warmup included
    /// in the count; the ramp overrides the curve during warmup).
    Poly { power: f64 },
    /// Constant through `start_epoch` whole epochs, then multiplied by
    /// `decay_rate` for each subsequent whole epoch.
    Exponential { decay_rate: f64, start_epoch: f64 },
}

impl DecaySpec {
    fn validate(&self) -> Result<()> {
        match self {
            DecaySpec::Constant => Ok(()),
            DecaySpec::MultiStep {
                boundaries_epochs,
                factor,
            } => {
                let increasing = boundaries_epochs.windows(2).all(|w| w[0] < w[1]);
                if !increasing || boundaries_epochs.iter().any(|&b| !(b > 0.0)) {
                    return Err(Error::invalid(
                        "multi-step boundaries must be positive and strictly increasing",
                    ));
                }
                if !(*factor > 0.0 && *factor <= 1.0) {
                    return Err(Error::invalid("multi-step factor must be in (0, 1]"));
                }
                Ok(())
            }
            DecaySpec::Poly { power } => {
                if !(*power > 0.0) {
                    return Err(Error::invalid("poly power must be positive"));
                }
                Ok(())
            }
            DecaySpec::Exponential {
                decay_rate,
                start_epoch,
            } => {
                if !(*decay_rate > 0.0 && *decay_rate <= 1.0) {
                    return Err(Error::invalid("exponential decay rate must be in (0, 1]"));
                }
                if !(*start_epoch >= 0.0) {
                    return Err(Error::invalid("exponential start epoch must be nonnegative"));
                }
                Ok(())
            }
        }
    }
}

/// Learning-rate multiplier rule for a batch-size factor k.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalingRule {
    /// Multiply the learning rate by sqrt(k): keeps the variance of the
    /// mini-batch gradient estimator constant.
    Sqrt,
    /// Multiply the learning rate by k.
    Linear,
}

/// Full description of a learning-rate schedule: base LR, warmup length in
/// epochs, decay curve, batch size, epoch budget, and dataset size.
///
/// Equality compares observable values (batch size, learning rate, warmup
/// epochs, decay, epoch budget, dataset size), not internal scale
/// bookkeeping.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScheduleSpec {
    batch_size: u64,
    dataset_size: u64,
    total_epochs: f64,
    decay: DecaySpec,
    lr_coeff: f64,
    lr_half_log2: i64,
    lr_sqrt_residual: Ratio,
    lr_linear_residual: Ratio,
    warmup_coeff: f64,
    warmup_pow2: i64,
    warmup_residual: Ratio,
}

fn round_half_up(x: f64) -> u64 {
    (x + 0.5).floor() as u64
}

impl ScheduleSpec {
    pub fn new(
        batch_size: u64,
        base_lr: f64,
        warmup_epochs: f64,
        decay: DecaySpec,
        total_epochs: f64,
        dataset_size: u64,
    ) -> Result<ScheduleSpec> {
        ScheduleSpec::with_pow2_lr(
            batch_size,
            base_lr,
            0.0,
            warmup_epochs,
            decay,
            total_epochs,
            dataset_size,
        )
    }

    /// Construct with the learning rate expressed as
    /// `lr_coeff * 2^lr_log2`, where `lr_log2` must be a half-integer. This
    /// is the exactness-preserving way to enter rates like 2^-0.5 * 1e-3.
    pub fn with_pow2_lr(
        batch_size: u64,
        lr_coeff: f64,
        lr_log2: f64,
        warmup_epochs: f64,
        decay: DecaySpec,
        total_epochs: f64,
        dataset_size: u64,
    ) -> Result<ScheduleSpec> {
        let half = 2.0 * lr_log2;
        if !half.is_finite() || half.fract() != 0.0 || half.abs() > 2000.0 {
            return Err(Error::invalid(format!(
                "lr_log2 must be a half-integer, got {lr_log2}"
            )));
        }
        let spec = ScheduleSpec {
            batch_size,
            dataset_size,
            total_epochs,
            decay,
            lr_coeff,
            lr_half_log2: half as i64,
            lr_sqrt_residual: Ratio::ONE,
            lr_linear_residual: Ratio::ONE,
            warmup_coeff: warmup_epochs,
            warmup_pow2: 0,
            warmup_residual: Ratio::ONE,
        };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.dataset_size == 0 {
            return Err(Error::invalid("batch size and dataset size must be positive"));
        }
        if self.batch_size > self.dataset_size {
            return Err(Error::invalid(format!(
                "batch size {} exceeds dataset size {}",
                self.batch_size, self.dataset_size
            )));
        }
        let lr = self.base_lr();
        if !(lr > 0.0) || !lr.is_finite() {
            return Err(Error::invalid(format!("base LR must be positive, got {lr}")));
        }
        let warmup = self.warmup_epochs();
        if !(warmup >= 0.0) || !warmup.is_finite() {
            return Err(Error::invalid(format!("warmup epochs must be nonnegative, got {warmup}")));
        }
        if !(self.total_epochs > 0.0) || !self.total_epochs.is_finite() {
            return Err(Error::invalid("total epochs must be positive"));
        }
        if warmup > self.total_epochs {
            return Err(Error::invalid(format!(
                "warmup of {warmup} epochs exceeds the {} epoch budget",
                self.total_epochs
            )));
        }
        if self.total_iterations() == 0 {
            return Err(Error::invalid("schedule has zero iterations"));
        }
        self.decay.validate()
    }

    pub fn batch_size(&self) -> u64 {
        self.batch_size
    }

    pub fn dataset_size(&self) -> u64 {
        self.dataset_size
    }

    pub fn total_epochs(&self) -> f64 {
        self.total_epochs
    }

    pub fn decay(&self) -> &DecaySpec {
        &self.decay
    }

    /// Peak learning rate reached at the end of warmup.
    pub fn base_lr(&self) -> f64 {
        let mut lr = self.lr_coeff;
        if !self.lr_sqrt_residual.is_one() {
            lr *= self.lr_sqrt_residual.as_f64().sqrt();
        }
        if !self.lr_linear_residual.is_one() {
            lr = lr * self.lr_linear_residual.num() as f64 / self.lr_linear_residual.den() as f64;
        }
        let q = self.lr_half_log2.div_euclid(2);
        let r = self.lr_half_log2.rem_euclid(2);
        lr *= 2f64.powi(q as i32);
        if r == 1 {
            lr *= std::f64::consts::SQRT_2;
        }
        lr
    }

    /// Warmup length in epochs (real-valued; fractions are meaningful).
    pub fn warmup_epochs(&self) -> f64 {
        let mut w = self.warmup_coeff * 2f64.powi(self.warmup_pow2 as i32);
        if !self.warmup_residual.is_one() {
            w = w * self.warmup_residual.num() as f64 / self.warmup_residual.den() as f64;
        }
        w
    }

    pub fn iterations_per_epoch(&self) -> u64 {
        self.dataset_size.div_ceil(self.batch_size)
    }

    /// Total iteration count `I = round(total_epochs * n / B)`.
    pub fn total_iterations(&self) -> u64 {
        round_half_up(self.total_epochs * self.dataset_size as f64 / self.batch_size as f64)
    }

    fn warmup_iterations_raw(&self) -> u64 {
        round_half_up(self.warmup_epochs() * self.dataset_size as f64 / self.batch_size as f64)
    }

    /// Warmup length in iterations, `round(warmup_epochs * n / B)`, rounded
    /// half-up. Errors if the schedule has no warmup or the conversion
    /// degenerates to zero iterations.
    pub fn warmup_iterations(&self) -> Result<u64> {
        if !(self.warmup_epochs() > 0.0) {
            return Err(Error::invalid("schedule has no warmup"));
        }
        match self.warmup_iterations_raw() {
            0 => Err(Error::invalid(format!(
                "warmup of {} epochs rounds to zero iterations at batch size {}",
                self.warmup_epochs(),
                self.batch_size
            ))),
            w => Ok(w),
        }
    }

    /// Decay multiplier (in (0, 1]) that applies at `iteration`, ignoring
    /// the warmup override.
    pub fn decay_factor(&self, iteration: u64) -> f64 {
        let n = self.dataset_size as f64;
        let b = self.batch_size as f64;
        match &self.decay {
            DecaySpec::Constant => 1.0,
            DecaySpec::MultiStep {
                boundaries_epochs,
                factor,
            } => {
                let passed = boundaries_epochs
                    .iter()
                    .filter(|&&be| iteration >= round_half_up(be * n / b))
                    .count();
                factor.powi(passed as i32)
            }
            DecaySpec::Poly { power } => {
                let frac = 1.0 - iteration as f64 / self.total_iterations() as f64;
                frac.powf(*power)
            }
            DecaySpec::Exponential {
                decay_rate,
                start_epoch,
            } => {
                let epoch = (iteration as f64 * b / n).floor();
                let exponent = (epoch - start_epoch + 1.0).max(0.0);
                if exponent == 0.0 {
                    1.0
                } else if exponent.fract() == 0.0 && exponent <= i32::MAX as f64 {
                    decay_rate.powi(exponent as i32)
                } else {
                    decay_rate.powf(exponent)
                }
            }
        }
    }

    /// Learning rate at a zero-based iteration index.
    ///
    /// During warmup (`iteration < W`) the rate ramps linearly as
    /// `base_lr * (iteration + 1) / W`, starting at `base_lr / W` rather than
    /// a wasted zero step and reaching exactly `base_lr` at `W - 1`. After
    /// warmup the decay curve applies.
    pub fn lr_at(&self, iteration: u64) -> Result<f64> {
        let total = self.total_iterations();
        if iteration >= total {
            return Err(Error::invalid(format!(
                "iteration {iteration} out of range for a schedule of {total} iterations"
            )));
        }
        let w = if self.warmup_epochs() > 0.0 {
            self.warmup_iterations_raw()
        } else {
            0
        };
        if iteration < w {
            Ok(self.base_lr() * ((iteration + 1) as f64 / w as f64))
        } else {
            Ok(self.base_lr() * self.decay_factor(iteration))
        }
    }

    /// Scale to a batch size `k` times larger: LR times sqrt(k) (or k under
    /// the linear rule), warmup epochs times k, decay and epoch budget
    /// unchanged. `k * batch_size` must be a positive integer.
    pub fn legw_scale(&self, k: Ratio, rule: ScalingRule) -> Result<ScheduleSpec> {
        let scaled_batch = (self.batch_size as u128) * k.num() as u128;
        if scaled_batch % k.den() as u128 != 0 {
            return Err(Error::invalid(format!(
                "factor {k} of batch size {} is not an integer",
                self.batch_size
            )));
        }
        let new_batch = u64::try_from(scaled_batch / k.den() as u128)
            .map_err(|_| Error::invalid("scaled batch size overflows"))?;

        let (t, odd) = k.pow2_split();
        let mut spec = self.clone();
        spec.batch_size = new_batch;
        match rule {
            ScalingRule::Sqrt => {
                spec.lr_half_log2 += t;
                spec.lr_sqrt_residual = spec.lr_sqrt_residual.mul(odd)?;
            }
            ScalingRule::Linear => {
                spec.lr_half_log2 += 2 * t;
                spec.lr_linear_residual = spec.lr_linear_residual.mul(odd)?;
            }
        }
        spec.warmup_pow2 += t;
        spec.warmup_residual = spec.warmup_residual.mul(odd)?;
        spec.validate()?;
        Ok(spec)
    }

    /// Exact inverse of [`legw_scale`]: batch size divided by k, LR divided
    /// by sqrt(k) (or k), warmup epochs divided by k.
    /// `legw_downscale(legw_scale(s, k), k) == s`.
    ///
    /// [`legw_scale`]: ScheduleSpec::legw_scale
    pub fn legw_downscale(&self, k: Ratio, rule: ScalingRule) -> Result<ScheduleSpec> {
        let scaled = (self.batch_size as u128) * k.den() as u128;
        if scaled % k.num() as u128 != 0 {
            return Err(Error::invalid(format!(
                "batch size {} is not divisible by {k}",
                self.batch_size
            )));
        }
        let spec = self.legw_scale(k.recip(), rule)?;
        if spec.warmup_epochs() > 0.0 && spec.warmup_iterations_raw() == 0 {
            return Err(Error::invalid(format!(
                "downscaling by {k} leaves less than one warmup iteration"
            )));
        }
        Ok(spec)
    }

    /// One scaled spec per factor, in the given order.
    pub fn sweep(&self, factors: &[Ratio], rule: ScalingRule) -> Result<Vec<ScheduleSpec>> {
        factors.iter().map(|&k| self.legw_scale(k, rule)).collect()
    }
}

impl PartialEq for ScheduleSpec {
    fn eq(&self, other: &Self) -> bool {
        self.batch_size == other.batch_size
            && self.dataset_size == other.dataset_size
            && self.total_epochs.to_bits() == other.total_epochs.to_bits()
            && self.decay == other.decay
            && self.base_lr().to_bits() == other.base_lr().to_bits()
            && self.warmup_epochs().to_bits() == other.warmup_epochs().to_bits()
    }
}

/// Write the full schedule as `iteration,lr` CSV rows.
pub fn write_schedule_csv(spec: &ScheduleSpec, out: &mut impl IoWrite) -> Result<()> {
    writeln!(out, "iteration,lr")?;
    for i in 0..spec.total_iterations() {
        writeln!(out, "{},{}", i, spec.lr_at(i)?)?;
    }
    Ok(())
}
