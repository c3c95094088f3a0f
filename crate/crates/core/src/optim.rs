//! Step functions for the seven iterative methods.
//!
//! Every step is pure: it reads a [`TunerState`] and one objective sample and
//! returns the next state. Iterates whose norm exceeds [`DIVERGENCE_NORM`]
//! produce [`Error::Diverged`] instead of overflowing.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gains::Gains;
use crate::objective::{regularized_gradient, Objective, ObjectiveKind};
use crate::vector::{ParamVector, Scalar};

/// Iterate norm above which a run is declared diverged.
pub const DIVERGENCE_NORM: f64 = 1e150;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    GdFixed,
    GdNormalized,
    NesterovTv,
    NesterovConst,
    HeavyBall,
    Hot,
    HotHb,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::GdFixed,
        Method::GdNormalized,
        Method::NesterovTv,
        Method::NesterovConst,
        Method::HeavyBall,
        Method::Hot,
        Method::HotHb,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Method::GdFixed => "gd_fixed",
            Method::GdNormalized => "gd_normalized",
            Method::NesterovTv => "nesterov_tv",
            Method::NesterovConst => "nesterov_const",
            Method::HeavyBall => "heavy_ball",
            Method::Hot => "hot",
            Method::HotHb => "hot_hb",
        }
    }

    /// Legend label.
    pub fn display_name(self) -> &'static str {
        match self {
            Method::GdFixed => "Gradient descent",
            Method::GdNormalized => "Normalized gradient descent",
            Method::NesterovTv => "Nesterov (time-varying momentum)",
            Method::NesterovConst => "Nesterov (constant momentum)",
            Method::HeavyBall => "Heavy Ball",
            Method::Hot => "Higher-order tuner",
            Method::HotHb => "Higher-order tuner (Heavy Ball)",
        }
    }

    fn needs_vartheta(self) -> bool {
        matches!(self, Method::Hot | Method::HotHb)
    }

    fn needs_nu(self) -> bool {
        matches!(self, Method::NesterovTv | Method::NesterovConst)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.tag() == s)
            .ok_or_else(|| Error::invalid(format!("unknown method tag `{s}`")))
    }
}

/// Full optimizer state. Only the fields the method needs are populated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Serialize", deserialize = "S: Deserialize<'de>"))]
pub struct TunerState<S: Scalar = f64> {
    pub method: Method,
    /// Number of steps taken so far.
    pub k: usize,
    pub theta: ParamVector<S>,
    pub vartheta: Option<ParamVector<S>>,
    pub nu: Option<ParamVector<S>>,
    pub theta_prev: Option<ParamVector<S>>,
    /// `ι_{k−1}`; starts at `ι₋₁ = 0`.
    pub iota: Option<f64>,
    /// Anchor of the `μ`-regularizer.
    pub theta0: ParamVector<S>,
    /// Function the baselines descend. The tuners always use the regularized objective.
    pub objective: ObjectiveKind,
}

impl<S: Scalar> TunerState<S> {
    /// Initial state with every auxiliary sequence started at `θ₀`.
    pub fn new(method: Method, theta0: ParamVector<S>) -> Self {
        let aux = |on: bool| on.then(|| theta0.clone());
        Self {
            method,
            k: 0,
            theta: theta0.clone(),
            vartheta: aux(method.needs_vartheta()),
            nu: aux(method.needs_nu()),
            theta_prev: aux(method == Method::HeavyBall),
            iota: (method == Method::NesterovTv).then_some(0.0),
            theta0,
            objective: ObjectiveKind::Raw,
        }
    }

    /// Replaces `ϑ₀`.
    pub fn with_vartheta(mut self, vartheta: ParamVector<S>) -> Result<Self> {
        if !self.method.needs_vartheta() {
            return Err(Error::invalid(format!("{} has no vartheta sequence", self.method)));
        }
        self.theta.check_dim(&vartheta)?;
        self.vartheta = Some(vartheta);
        Ok(self)
    }

    pub fn with_objective(mut self, objective: ObjectiveKind) -> Self {
        self.objective = objective;
        self
    }

    /// Checks that exactly the fields the method needs are present.
    pub fn validate(&self) -> Result<()> {
        let m = self.method;
        let check = |present: bool, needed: bool, field: &'static str| -> Result<()> {
            match (present, needed) {
                (false, true) => Err(Error::MissingState { method: m.tag(), field }),
                (true, false) => Err(Error::invalid(format!("{m} does not use `{field}`"))),
                _ => Ok(()),
            }
        };
        check(self.vartheta.is_some(), m.needs_vartheta(), "vartheta")?;
        check(self.nu.is_some(), m.needs_nu(), "nu")?;
        check(self.theta_prev.is_some(), m == Method::HeavyBall, "theta_prev")?;
        check(self.iota.is_some(), m == Method::NesterovTv, "iota")?;
        self.theta.check_dim(&self.theta0)
    }

    fn expect(&self, method: Method) -> Result<()> {
        if self.method != method {
            return Err(Error::invalid(format!("state is for {}, step is for {method}", self.method)));
        }
        self.validate()
    }

    fn vartheta(&self) -> &ParamVector<S> {
        self.vartheta.as_ref().expect("validated")
    }

    fn nu(&self) -> &ParamVector<S> {
        self.nu.as_ref().expect("validated")
    }

    fn advance(&self, theta: ParamVector<S>) -> Result<Self> {
        let k = self.k + 1;
        guard(k, &theta)?;
        Ok(Self { k, theta, ..self.clone() })
    }
}

/// `ι_{k+1} = (1 + √(1 + 4ι_k²)) / 2`.
pub fn next_iota(iota: f64) -> f64 {
    0.5 * (1.0 + (1.0 + 4.0 * iota * iota).sqrt())
}

fn guard<S: Scalar>(k: usize, v: &ParamVector<S>) -> Result<()> {
    let norm = v.norm();
    if norm.is_finite() && norm <= DIVERGENCE_NORM {
        Ok(())
    } else {
        Err(Error::Diverged { k, norm })
    }
}

fn finite<S: Scalar>(k: usize, g: ParamVector<S>) -> Result<ParamVector<S>> {
    if g.is_finite() {
        Ok(g)
    } else {
        Err(Error::NonFiniteGradient { k })
    }
}

fn tuner_gradient<S: Scalar, O: Objective<S> + ?Sized>(
    state: &TunerState<S>,
    sample: &O,
    theta: &ParamVector<S>,
    mu: f64,
) -> Result<ParamVector<S>> {
    finite(state.k, regularized_gradient(sample, theta, &state.theta0, mu)?)
}

fn baseline_gradient<S: Scalar, O: Objective<S> + ?Sized>(
    state: &TunerState<S>,
    sample: &O,
    theta: &ParamVector<S>,
) -> Result<ParamVector<S>> {
    finite(state.k, state.objective.gradient(sample, theta, &state.theta0)?)
}

/// Nesterov-type higher-order tuner step (two gradient evaluations).
pub fn hot_step<S: Scalar, O: Objective<S> + ?Sized>(
    state: &TunerState<S>,
    sample: &O,
    gains: &Gains,
) -> Result<TunerState<S>> {
    state.expect(Method::Hot)?;
    let Gains { gamma, beta, mu } = *gains;
    let vartheta = state.vartheta();
    let g = tuner_gradient(state, sample, &state.theta, mu)?;
    let theta_bar = state.theta.axpy(-gamma * beta, &g)?;
    let theta_next = theta_bar.lincomb(1.0 - beta, vartheta, beta)?;
    let g_next = tuner_gradient(state, sample, &theta_next, mu)?;
    let vartheta_next = vartheta.axpy(-gamma, &g_next)?;
    guard(state.k + 1, &vartheta_next)?;
    let mut next = state.advance(theta_next)?;
    next.vartheta = Some(vartheta_next);
    Ok(next)
}

/// Heavy-Ball-type higher-order tuner step (one gradient evaluation, at the new `θ`).
pub fn hot_hb_step<S: Scalar, O: Objective<S> + ?Sized>(
    state: &TunerState<S>,
    sample: &O,
    gains: &Gains,
) -> Result<TunerState<S>> {
    state.expect(Method::HotHb)?;
    let Gains { gamma, beta, mu } = *gains;
    let vartheta = state.vartheta();
    let theta_next = state.theta.lincomb(1.0 - beta, vartheta, beta)?;
    let g_next = tuner_gradient(state, sample, &theta_next, mu)?;
    let vartheta_next = vartheta.axpy(-gamma, &g_next)?;
    guard(state.k + 1, &vartheta_next)?;
    let mut next = state.advance(theta_next)?;
    next.vartheta = Some(vartheta_next);
    Ok(next)
}

/// `θ₊ = θ − ᾱ∇f(θ)` on the state's objective selector.
pub fn gd_step<S: Scalar, O: Objective<S> + ?Sized>(
    state: &TunerState<S>,
    sample: &O,
    alpha_bar: f64,
) -> Result<TunerState<S>> {
    state.expect(Method::GdFixed)?;
    let g = baseline_gradient(state, sample, &state.theta)?;
    state.advance(state.theta.axpy(-alpha_bar, &g)?)
}

/// `θ₊ = θ − γ∇L(θ)/N`.
pub fn ngd_step<S: Scalar, O: Objective<S> + ?Sized>(
    state: &TunerState<S>,
    sample: &O,
    gamma: f64,
) -> Result<TunerState<S>> {
    state.expect(Method::GdNormalized)?;
    let g = finite(state.k, sample.gradient(&state.theta)?)?;
    state.advance(state.theta.axpy(-gamma / sample.normalization(), &g)?)
}

fn nesterov_update<S: Scalar, O: Objective<S> + ?Sized>(
    state: &TunerState<S>,
    sample: &O,
    alpha_bar: f64,
    beta_bar: f64,
) -> Result<TunerState<S>> {
    let nu = state.nu();
    let g = baseline_gradient(state, sample, nu)?;
    let theta_next = nu.axpy(-alpha_bar, &g)?;
    let nu_next = theta_next.lincomb(1.0 + beta_bar, &state.theta, -beta_bar)?;
    guard(state.k + 1, &nu_next)?;
    let mut next = state.advance(theta_next)?;
    next.nu = Some(nu_next);
    Ok(next)
}

/// `θ₊ = ν − ᾱ∇f(ν)`, `ν₊ = (1+β̄)θ₊ − β̄θ`.
pub fn nesterov_const_step<S: Scalar, O: Objective<S> + ?Sized>(
    state: &TunerState<S>,
    sample: &O,
    alpha_bar: f64,
    beta_bar: f64,
) -> Result<TunerState<S>> {
    state.expect(Method::NesterovConst)?;
    nesterov_update(state, sample, alpha_bar, beta_bar)
}

/// Nesterov step with `β̄_k = (ι_k − 1)/ι_{k+1}`.
pub fn nesterov_tv_step<S: Scalar, O: Objective<S> + ?Sized>(
    state: &TunerState<S>,
    sample: &O,
    alpha_bar: f64,
) -> Result<TunerState<S>> {
    state.expect(Method::NesterovTv)?;
    let iota_k = next_iota(state.iota.expect("validated"));
    let iota_k1 = next_iota(iota_k);
    let mut next = nesterov_update(state, sample, alpha_bar, (iota_k - 1.0) / iota_k1)?;
    next.iota = Some(iota_k);
    Ok(next)
}

/// `θ₊ = (1+β̄)θ − β̄θ₋ − ᾱ∇f(θ)`.
pub fn heavy_ball_step<S: Scalar, O: Objective<S> + ?Sized>(
    state: &TunerState<S>,
    sample: &O,
    alpha_bar: f64,
    beta_bar: f64,
) -> Result<TunerState<S>> {
    state.expect(Method::HeavyBall)?;
    let prev = state.theta_prev.as_ref().expect("validated");
    let g = baseline_gradient(state, sample, &state.theta)?;
    let theta_next = state.theta.lincomb(1.0 + beta_bar, prev, -beta_bar)?.axpy(-alpha_bar, &g)?;
    let mut next = state.advance(theta_next)?;
    next.theta_prev = Some(state.theta.clone());
    Ok(next)
}

/// A method together with its gains.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "method")]
pub enum StepRule {
    GdFixed { alpha_bar: f64 },
    GdNormalized { gamma: f64 },
    NesterovTv { alpha_bar: f64 },
    NesterovConst { alpha_bar: f64, beta_bar: f64 },
    HeavyBall { alpha_bar: f64, beta_bar: f64 },
    Hot(Gains),
    HotHb(Gains),
}

impl StepRule {
    pub fn method(&self) -> Method {
        match self {
            StepRule::GdFixed { .. } => Method::GdFixed,
            StepRule::GdNormalized { .. } => Method::GdNormalized,
            StepRule::NesterovTv { .. } => Method::NesterovTv,
            StepRule::NesterovConst { .. } => Method::NesterovConst,
            StepRule::HeavyBall { .. } => Method::HeavyBall,
            StepRule::Hot(_) => Method::Hot,
            StepRule::HotHb(_) => Method::HotHb,
        }
    }

    pub fn step<S: Scalar, O: Objective<S> + ?Sized>(
        &self,
        state: &TunerState<S>,
        sample: &O,
    ) -> Result<TunerState<S>> {
        match *self {
            StepRule::GdFixed { alpha_bar } => gd_step(state, sample, alpha_bar),
            StepRule::GdNormalized { gamma } => ngd_step(state, sample, gamma),
            StepRule::NesterovTv { alpha_bar } => nesterov_tv_step(state, sample, alpha_bar),
            StepRule::NesterovConst { alpha_bar, beta_bar } => nesterov_const_step(state, sample, alpha_bar, beta_bar),
            StepRule::HeavyBall { alpha_bar, beta_bar } => heavy_ball_step(state, sample, alpha_bar, beta_bar),
            StepRule::Hot(ref g) => hot_step(state, sample, g),
            StepRule::HotHb(ref g) => hot_hb_step(state, sample, g),
        }
    }
}

/// `ϑ₀` under which the Nesterov-type tuner reproduces constant-momentum
/// Nesterov (`ᾱ = γβ`, `β̄ = 1−β`, `ν₀ = θ₀`) on affine-gradient objectives.
pub fn nesterov_equivalent_vartheta0<S: Scalar, O: Objective<S> + ?Sized>(
    sample: &O,
    theta0: &ParamVector<S>,
    gains: &Gains,
) -> Result<ParamVector<S>> {
    let g = regularized_gradient(sample, theta0, theta0, gains.mu)?;
    theta0.axpy(-gains.gamma * gains.beta, &g)
}

/// `ϑ₀` under which the Heavy-Ball-type tuner reproduces the Heavy Ball
/// recursion started with `θ₋₁ = θ₀`.
pub fn heavy_ball_equivalent_vartheta0<S: Scalar, O: Objective<S> + ?Sized>(
    sample: &O,
    theta0: &ParamVector<S>,
    gains: &Gains,
) -> Result<ParamVector<S>> {
    let g = regularized_gradient(sample, theta0, theta0, gains.mu)?;
    theta0.axpy(-gains.gamma, &g)
}
