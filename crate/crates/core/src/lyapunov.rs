//! Lyapunov certificates for the tuners and normalized gradient descent.
//!
//! `V_k = (1/γ)‖ϑ_k − θ*‖² + (1/γ)‖θ_k − ϑ_k‖²`. The per-step bounds below
//! are the guaranteed upper limits on `ΔV_k = V_{k+1} − V_k`; checkers record
//! the slack rather than only a verdict.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gains::{GainCheck, Gains};
use crate::objective::Objective;
use crate::optim::{Method, TunerState};
use crate::vector::{ParamVector, Scalar};

/// Relative tolerance of the inequality checks, scaled by `max(1, |V_k|)`.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Outcome of checking one step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LyapunovRecord {
    pub k: usize,
    /// `V_k` before the step.
    pub v: f64,
    pub delta_v: f64,
    pub rhs_bound: f64,
    /// Closed-form upper bound on `V_k`, when the certificate has one.
    pub envelope: Option<f64>,
    pub satisfied: bool,
    /// `rhs_bound − delta_v`.
    pub slack: f64,
}

impl LyapunovRecord {
    pub fn evaluate(k: usize, v: f64, v_next: f64, rhs_bound: f64, envelope: Option<f64>, tol: f64) -> Self {
        let delta_v = v_next - v;
        let scale = tol * f64::max(1.0, v.abs());
        let step_ok = delta_v <= rhs_bound + scale;
        let env_ok = envelope.is_none_or(|e| v <= e + scale);
        Self { k, v, delta_v, rhs_bound, envelope, satisfied: step_ok && env_ok, slack: rhs_bound - delta_v }
    }

    /// `envelope − V_k`, or `+∞` without an envelope.
    pub fn envelope_slack(&self) -> f64 {
        self.envelope.map_or(f64::INFINITY, |e| e - self.v)
    }
}

fn vartheta<S: Scalar>(state: &TunerState<S>) -> Result<&ParamVector<S>> {
    state.vartheta.as_ref().ok_or(Error::MissingState { method: state.method.tag(), field: "vartheta" })
}

/// `V` of a tuner state.
pub fn v_value<S: Scalar>(state: &TunerState<S>, theta_star: &ParamVector<S>, gamma: f64) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidGains(format!("gamma must be positive, got {gamma}")));
    }
    let vt = vartheta(state)?;
    Ok((vt.dist_sq(theta_star)? + state.theta.dist_sq(vt)?) / gamma)
}

/// `L_k(θ) − L_k*` when the optimum is known, else `L_k(θ)`.
fn excess_loss<S: Scalar, O: Objective<S> + ?Sized>(sample: &O, theta: &ParamVector<S>) -> Result<f64> {
    let loss = sample.loss(theta)?;
    Ok(loss - sample.optimal_value().unwrap_or(0.0))
}

/// `−L_k(θ_{k+1})/N_k`, the unregularized increment bound.
pub fn theorem1_bound<S: Scalar, O: Objective<S> + ?Sized>(sample: &O, state_next: &TunerState<S>) -> Result<f64> {
    Ok(-excess_loss(sample, &state_next.theta)? / sample.normalization())
}

/// `(c₁, c₂)` with `c₁ = 10γβ/16` and `c₂ = ((3570β+896)/(224β))‖θ*−θ₀‖²`.
pub fn theorem2_constants(gains: &Gains, dist_sq: f64) -> (f64, f64) {
    let b = gains.beta;
    (gains.gamma * b * 10.0 / 16.0, (3570.0 * b + 896.0) / (224.0 * b) * dist_sq)
}

/// `(c₃, c₄)` with `c₃ = γ/8` and `c₄ = (189/64)‖θ*−θ₀‖²`.
pub fn hb_constants(gains: &Gains, dist_sq: f64) -> (f64, f64) {
    (gains.gamma / 8.0, 189.0 / 64.0 * dist_sq)
}

fn regularized_bound<S: Scalar, O: Objective<S> + ?Sized>(
    sample: &O,
    state: &TunerState<S>,
    state_next: &TunerState<S>,
    gains: &Gains,
    constants: (f64, f64),
    theta_star: &ParamVector<S>,
) -> Result<f64> {
    let v = v_value(state, theta_star, gains.gamma)?;
    let (c_decay, c_offset) = constants;
    Ok(theorem1_bound(sample, state_next)? - gains.mu * c_decay * v + gains.mu * c_offset)
}

/// `−L_k(θ_{k+1})/N_k − μc₁V_k + μc₂` for the Nesterov-type tuner.
pub fn theorem2_bound<S: Scalar, O: Objective<S> + ?Sized>(
    sample: &O,
    state: &TunerState<S>,
    state_next: &TunerState<S>,
    gains: &Gains,
    theta_star: &ParamVector<S>,
    theta0: &ParamVector<S>,
) -> Result<f64> {
    gains.validate(GainCheck::Theorem2)?;
    let c = theorem2_constants(gains, theta_star.dist_sq(theta0)?);
    regularized_bound(sample, state, state_next, gains, c, theta_star)
}

/// `−L_k(θ_{k+1})/N_k − μc₃V_k + μc₄` for the Heavy-Ball-type tuner.
pub fn hb_theorem_bound<S: Scalar, O: Objective<S> + ?Sized>(
    sample: &O,
    state: &TunerState<S>,
    state_next: &TunerState<S>,
    gains: &Gains,
    theta_star: &ParamVector<S>,
    theta0: &ParamVector<S>,
) -> Result<f64> {
    gains.validate(GainCheck::HeavyBall)?;
    let c = hb_constants(gains, theta_star.dist_sq(theta0)?);
    regularized_bound(sample, state, state_next, gains, c, theta_star)
}

fn envelope(v0: f64, mu: f64, (c_decay, c_offset): (f64, f64), k: usize) -> f64 {
    if mu == 0.0 {
        return v0;
    }
    let limit = c_offset / c_decay;
    (-mu * c_decay * k as f64).exp() * (v0 - limit) + limit
}

/// `exp(−μc₁k)(V₀ − c₂/c₁) + c₂/c₁`.
pub fn theorem2_envelope<S: Scalar>(
    v0: f64,
    gains: &Gains,
    theta_star: &ParamVector<S>,
    theta0: &ParamVector<S>,
    k: usize,
) -> Result<f64> {
    let c = theorem2_constants(gains, theta_star.dist_sq(theta0)?);
    Ok(envelope(v0, gains.mu, c, k))
}

/// `exp(−μc₃k)(V₀ − c₄/c₃) + c₄/c₃`.
pub fn hb_envelope<S: Scalar>(
    v0: f64,
    gains: &Gains,
    theta_star: &ParamVector<S>,
    theta0: &ParamVector<S>,
    k: usize,
) -> Result<f64> {
    let c = hb_constants(gains, theta_star.dist_sq(theta0)?);
    Ok(envelope(v0, gains.mu, c, k))
}

/// Normalized gradient descent with `V = ‖θ̃‖²/γ`: `ΔV_k ≤ −(2−γ)e²/N_k`.
pub fn ngd_check(
    k: usize,
    theta_tilde_before: &ParamVector,
    theta_tilde_after: &ParamVector,
    e_y: f64,
    n_k: f64,
    gamma: f64,
) -> Result<LyapunovRecord> {
    if !(gamma > 0.0 && gamma < 2.0) {
        return Err(Error::InvalidGains(format!("gamma must lie in (0, 2), got {gamma}")));
    }
    theta_tilde_before.check_dim(theta_tilde_after)?;
    let v = theta_tilde_before.norm_sq() / gamma;
    let v_next = theta_tilde_after.norm_sq() / gamma;
    let bound = -(2.0 - gamma) * e_y * e_y / n_k;
    Ok(LyapunovRecord::evaluate(k, v, v_next, bound, None, DEFAULT_TOL))
}

/// Which inequality a [`Certifier`] checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Certificate {
    /// Nesterov-type tuner, `μ = 0`.
    Unregularized,
    /// Nesterov-type tuner, `μ > 0`.
    Regularized,
    /// Heavy-Ball-type tuner, any admissible `μ`.
    HeavyBall,
}

/// Step-by-step checker for a tuner run against a known optimum.
#[derive(Clone, Debug)]
pub struct Certifier<S: Scalar = f64> {
    pub certificate: Certificate,
    pub gains: Gains,
    pub theta_star: ParamVector<S>,
    constants: (f64, f64),
    v0: Option<f64>,
    pub tol: f64,
}

impl<S: Scalar> Certifier<S> {
    /// Chooses the certificate from the method and `μ`. Gains are not
    /// validated, so deliberately unstable runs still produce records.
    pub fn new(method: Method, gains: Gains, theta_star: ParamVector<S>, theta0: &ParamVector<S>) -> Result<Self> {
        let dist_sq = theta_star.dist_sq(theta0)?;
        let (certificate, constants) = match method {
            Method::Hot if gains.mu == 0.0 => (Certificate::Unregularized, theorem2_constants(&gains, dist_sq)),
            Method::Hot => (Certificate::Regularized, theorem2_constants(&gains, dist_sq)),
            Method::HotHb => (Certificate::HeavyBall, hb_constants(&gains, dist_sq)),
            other => return Err(Error::invalid(format!("no Lyapunov certificate for {other}"))),
        };
        Ok(Self { certificate, gains, theta_star, constants, v0: None, tol: DEFAULT_TOL })
    }

    pub fn v(&self, state: &TunerState<S>) -> Result<f64> {
        v_value(state, &self.theta_star, self.gains.gamma)
    }

    pub fn envelope(&self, v0: f64, k: usize) -> f64 {
        envelope(v0, self.gains.mu, self.constants, k)
    }

    /// Checks the step `state → state_next` taken on `sample`. The first call
    /// fixes `V₀`.
    pub fn record<O: Objective<S> + ?Sized>(
        &mut self,
        state: &TunerState<S>,
        state_next: &TunerState<S>,
        sample: &O,
    ) -> Result<LyapunovRecord> {
        let v = self.v(state)?;
        let v_next = self.v(state_next)?;
        let v0 = *self.v0.get_or_insert(v);
        let bound = regularized_bound(sample, state, state_next, &self.gains, self.constants, &self.theta_star)?;
        let env = self.envelope(v0, state.k);
        Ok(LyapunovRecord::evaluate(state.k, v, v_next, bound, Some(env), self.tol))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::LinearSample;
    use approx::assert_relative_eq;

    fn v1(x: f64) -> ParamVector {
        ParamVector::new(vec![x])
    }

    fn hot_state(theta: f64, vartheta: f64) -> TunerState {
        TunerState::new(Method::Hot, v1(theta)).with_vartheta(v1(vartheta)).unwrap()
    }

    #[test]
    fn v_examples() {
        let star = v1(0.0);
        assert_eq!(v_value(&hot_state(0.0, 0.0), &star, 1.0).unwrap(), 0.0);
        // ϑ−θ* = 1, θ−ϑ = 1
        let s = hot_state(2.0, 1.0);
        assert_eq!(v_value(&s, &star, 0.5).unwrap(), 4.0);
        assert_eq!(v_value(&s, &star, 1.0).unwrap(), 2.0);
        let gd = TunerState::new(Method::GdFixed, v1(0.0));
        assert!(matches!(v_value(&gd, &star, 1.0), Err(Error::MissingState { .. })));
    }

    #[test]
    fn theorem1_bound_examples() {
        let s = LinearSample::exact(0, v1(1.0), v1(0.0)).unwrap();
        assert_eq!(theorem1_bound(&s, &hot_state(0.0, 5.0)).unwrap(), 0.0);
        assert_eq!(theorem1_bound(&s, &hot_state(2.0, 0.0)).unwrap(), -1.0);
    }

    #[test]
    fn constants_arithmetic() {
        let g = Gains::new(0.01186, 0.1, 1e-5);
        let (c1, c2) = theorem2_constants(&g, 1.0);
        assert!((c1 - 0.0007413).abs() < 1e-7);
        assert_relative_eq!(c2, 55.9375, max_relative = 1e-14);
        let (c3, c4) = hb_constants(&Gains::new(0.08, 1.0, 0.1), 0.0);
        assert_relative_eq!(c3, 0.01, max_relative = 1e-15);
        assert_eq!(c4, 0.0);
    }

    #[test]
    fn theorem2_bound_without_offset() {
        // θ₀ = θ* removes the μc₂ term
        let star = v1(0.0);
        let s = LinearSample::exact(0, v1(1.0), star.clone()).unwrap();
        let g = Gains::new(0.01, 0.5, 0.05);
        let st = hot_state(1.0, 0.5);
        let next = hot_state(0.8, 0.4);
        let b = theorem2_bound(&s, &st, &next, &g, &star, &star).unwrap();
        let (c1, _) = theorem2_constants(&g, 0.0);
        let expect = -0.5 * 0.64 / 2.0 - 0.05 * c1 * v_value(&st, &star, 0.01).unwrap();
        assert_relative_eq!(b, expect, max_relative = 1e-14);
        assert!(theorem2_bound(&s, &st, &next, &Gains::new(1.0, 0.5, 0.05), &star, &star).is_err());
    }

    #[test]
    fn envelope_limits() {
        let g = Gains::new(0.01, 0.5, 0.05);
        let star = v1(1.0);
        let th0 = v1(0.0);
        assert_eq!(theorem2_envelope(3.0, &g, &star, &th0, 0).unwrap(), 3.0);
        let (c1, c2) = theorem2_constants(&g, 1.0);
        let far = theorem2_envelope(3.0, &g, &star, &th0, 100_000_000).unwrap();
        assert_relative_eq!(far, c2 / c1, max_relative = 1e-9);
        let fixed = theorem2_envelope(c2 / c1, &g, &star, &th0, 1234).unwrap();
        assert_relative_eq!(fixed, c2 / c1, max_relative = 1e-14);
        assert_eq!(hb_envelope(2.5, &g, &star, &th0, 0).unwrap(), 2.5);
    }

    #[test]
    fn ngd_hand_trace() {
        let r = ngd_check(0, &v1(1.0), &v1(0.5), 1.0, 2.0, 1.0).unwrap();
        assert_eq!(r.delta_v, -0.75);
        assert_eq!(r.rhs_bound, -0.5);
        assert!(r.satisfied);
        let r = ngd_check(0, &v1(1.0), &v1(1.0), 0.0, 2.0, 1.0).unwrap();
        assert_eq!((r.delta_v, r.rhs_bound), (0.0, 0.0));
        assert!(r.satisfied);
        assert!(ngd_check(0, &v1(1.0), &v1(1.0), 0.0, 2.0, 2.0).is_err());
    }

    #[test]
    fn record_flags_violations() {
        let r = LyapunovRecord::evaluate(3, 1.0, 1.5, 0.0, None, DEFAULT_TOL);
        assert!(!r.satisfied);
        assert_eq!(r.slack, -0.5);
        let r = LyapunovRecord::evaluate(3, 2.0, 1.0, 0.0, Some(1.5), DEFAULT_TOL);
        assert!(!r.satisfied);
    }
}
