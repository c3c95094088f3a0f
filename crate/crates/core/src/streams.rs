//! Scalar schedules and regressor/output stream generators.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::objective::{ensure, LinearSample, Objective};
use crate::rng::SplitMix64;
use crate::vector::{ParamVector, Scalar};

/// A source of per-iteration objectives.
pub trait Stream<S: Scalar = f64> {
    type Sample: Objective<S>;

    fn dim(&self) -> usize;

    fn sample(&self, k: usize) -> Result<Self::Sample>;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trig {
    Sin,
    Cos,
}

/// Time profile of a scalar coefficient.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum Schedule {
    Constant { value: f64 },
    /// `before` for `k < switch_at`, `after` from then on.
    Step { switch_at: usize, before: f64, after: f64 },
    /// `from` until `start`, linear to `to` at `end`, held afterwards.
    Ramp { start: usize, end: usize, from: f64, to: f64 },
    /// `offset + amplitude·trig(omega·k + phase)`.
    Sinusoid { offset: f64, amplitude: f64, omega: f64, phase: f64, trig: Trig },
}

impl Schedule {
    pub fn constant(value: f64) -> Self {
        Schedule::Constant { value }
    }

    pub fn value(&self, k: usize) -> f64 {
        match *self {
            Schedule::Constant { value } => value,
            Schedule::Step { switch_at, before, after } => {
                if k < switch_at {
                    before
                } else {
                    after
                }
            }
            Schedule::Ramp { start, end, from, to } => {
                if k < start {
                    from
                } else if k >= end {
                    to
                } else {
                    from + (to - from) * (k - start) as f64 / (end - start) as f64
                }
            }
            Schedule::Sinusoid { offset, amplitude, omega, phase, trig } => {
                let x = omega * k as f64 + phase;
                offset
                    + amplitude
                        * match trig {
                            Trig::Sin => x.sin(),
                            Trig::Cos => x.cos(),
                        }
            }
        }
    }

    /// Largest value over `0..iters`.
    pub fn max_over(&self, iters: usize) -> f64 {
        match *self {
            Schedule::Constant { value } => value,
            Schedule::Step { switch_at, before, after } if switch_at < iters => before.max(after),
            Schedule::Step { before, .. } => before,
            _ => (0..iters.max(1)).map(|k| self.value(k)).fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

pub fn evaluate_schedule(s: &Schedule, k: usize) -> f64 {
    s.value(k)
}

/// How the regressor evolves.
#[derive(Clone, Debug, PartialEq)]
pub enum RegressorSource {
    /// `φ_k = scale(k)·base`.
    Scaled { base: ParamVector, scale: Schedule },
    /// `φ_k[i] = schedules[i](k)`.
    PerCoordinate(Vec<Schedule>),
    /// Seeded random directions with log-uniform magnitudes up to `max_magnitude`.
    Adversarial { seed: u64, max_magnitude: f64 },
}

/// Noise-free single-output stream `y_k = φ_kᵀθ*`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearStream {
    pub theta_star: ParamVector,
    pub source: RegressorSource,
}

/// Decades spanned by adversarial magnitudes.
const ADVERSARIAL_DECADES: f64 = 3.0;
/// Probability that an adversarial regressor is exactly zero.
const ADVERSARIAL_ZERO_RATE: f64 = 0.05;

impl LinearStream {
    pub fn regressor(&self, k: usize) -> ParamVector {
        let n = self.theta_star.dim();
        match &self.source {
            RegressorSource::Scaled { base, scale } => base.scale(scale.value(k)),
            RegressorSource::PerCoordinate(s) => s.iter().map(|s| s.value(k)).collect(),
            RegressorSource::Adversarial { seed, max_magnitude } => {
                let mut rng = SplitMix64::substream(*seed, k as u64);
                if *max_magnitude == 0.0 || rng.next_f64() < ADVERSARIAL_ZERO_RATE {
                    return ParamVector::zeros(n);
                }
                let magnitude = max_magnitude * 10f64.powf(-ADVERSARIAL_DECADES * rng.next_f64());
                let dir = ParamVector::from_fn(n, |_| rng.normal());
                let norm = dir.norm();
                if norm == 0.0 {
                    return ParamVector::zeros(n);
                }
                dir.scale(magnitude / norm)
            }
        }
    }

    pub fn output(&self, k: usize) -> f64 {
        self.regressor(k).dot(&self.theta_star).expect("regressor dimension fixed at construction")
    }
}

impl Stream for LinearStream {
    type Sample = LinearSample;

    fn dim(&self) -> usize {
        self.theta_star.dim()
    }

    fn sample(&self, k: usize) -> Result<LinearSample> {
        LinearSample::exact(k, self.regressor(k), self.theta_star.clone())
    }
}

/// Stream whose regressor is `scale(k)·base`.
pub fn synth_stream(theta_star: ParamVector, base: ParamVector, scale: Schedule) -> Result<LinearStream> {
    theta_star.check_dim(&base)?;
    Ok(LinearStream { theta_star, source: RegressorSource::Scaled { base, scale } })
}

/// Stream with one schedule per regressor coordinate.
pub fn synth_stream_per_coordinate(theta_star: ParamVector, schedules: Vec<Schedule>) -> Result<LinearStream> {
    ensure(schedules.len() == theta_star.dim(), || {
        format!("{} schedules for a {}-dimensional parameter", schedules.len(), theta_star.dim())
    })?;
    Ok(LinearStream { theta_star, source: RegressorSource::PerCoordinate(schedules) })
}

/// Seeded stream with random regressor directions and magnitudes spread over
/// three decades below `max_magnitude`, occasionally exactly zero. `θ*` has
/// entries uniform in `[−1, 1]`. Element `k` is generated independently.
pub fn adversarial_stream(seed: u64, dim: usize, max_magnitude: f64) -> Result<LinearStream> {
    ensure(dim > 0, || "dimension must be positive".into())?;
    ensure(max_magnitude >= 0.0 && max_magnitude.is_finite(), || {
        format!("max magnitude must be finite and nonnegative, got {max_magnitude}")
    })?;
    let mut rng = SplitMix64::new(seed);
    let theta_star = ParamVector::from_fn(dim, |_| rng.uniform(-1.0, 1.0));
    Ok(LinearStream { theta_star, source: RegressorSource::Adversarial { seed, max_magnitude } })
}
