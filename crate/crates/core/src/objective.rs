//! Per-iteration objective oracles.
//!
//! Every optimizer consumes an [`Objective`]: the loss `L_k`, its gradient,
//! the normalization signal `N_k = 1 + ‖φ_k‖²_op` and, when the data
//! generator knows it, the optimum.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vector::{ParamVector, Scalar};

/// Loss oracle for one iteration `k` of a streaming problem.
pub trait Objective<S: Scalar = f64> {
    fn iteration(&self) -> usize;

    fn dim(&self) -> usize;

    fn loss(&self, theta: &ParamVector<S>) -> Result<f64>;

    fn gradient(&self, theta: &ParamVector<S>) -> Result<ParamVector<S>>;

    /// `N_k ≥ 1`.
    fn normalization(&self) -> f64;

    /// Smoothness constant of the raw loss at this iteration.
    fn smoothness(&self) -> f64;

    fn theta_star(&self) -> Option<&ParamVector<S>> {
        None
    }

    fn optimal_value(&self) -> Option<f64> {
        None
    }

    /// `L_k(θ) − L_k(θ*)` when the optimum is known.
    fn loss_gap(&self, theta: &ParamVector<S>) -> Result<Option<f64>> {
        let loss = self.loss(theta)?;
        Ok(self.optimal_value().map(|opt| loss - opt))
    }
}

/// Which function a baseline method descends.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ObjectiveKind {
    /// `L_k`
    #[default]
    Raw,
    /// `L_k / N_k`
    Normalized,
    /// `L_k / N_k + (μ/2)‖θ − θ₀‖²`
    Regularized { mu: f64 },
}

impl ObjectiveKind {
    pub fn gradient<S: Scalar, O: Objective<S> + ?Sized>(
        self,
        sample: &O,
        theta: &ParamVector<S>,
        theta0: &ParamVector<S>,
    ) -> Result<ParamVector<S>> {
        match self {
            ObjectiveKind::Raw => sample.gradient(theta),
            ObjectiveKind::Normalized => Ok(sample.gradient(theta)?.scale(1.0 / sample.normalization())),
            ObjectiveKind::Regularized { mu } => regularized_gradient(sample, theta, theta0, mu),
        }
    }

    pub fn value<S: Scalar, O: Objective<S> + ?Sized>(
        self,
        sample: &O,
        theta: &ParamVector<S>,
        theta0: &ParamVector<S>,
    ) -> Result<f64> {
        match self {
            ObjectiveKind::Raw => sample.loss(theta),
            ObjectiveKind::Normalized => Ok(sample.loss(theta)? / sample.normalization()),
            ObjectiveKind::Regularized { mu } => {
                Ok(sample.loss(theta)? / sample.normalization() + 0.5 * mu * theta.dist_sq(theta0)?)
            }
        }
    }
}

/// Gradient of the augmented objective `f_k(θ) = L_k(θ)/N_k + (μ/2)‖θ − θ₀‖²`.
pub fn regularized_gradient<S: Scalar, O: Objective<S> + ?Sized>(
    sample: &O,
    theta: &ParamVector<S>,
    theta0: &ParamVector<S>,
    mu: f64,
) -> Result<ParamVector<S>> {
    theta.check_dim(theta0)?;
    let grad = sample.gradient(theta)?;
    let inv_n = 1.0 / sample.normalization();
    if mu == 0.0 {
        return Ok(grad.scale(inv_n));
    }
    let offset = theta.sub(theta0)?;
    grad.lincomb(inv_n, &offset, mu)
}

/// Output error `e = Σ φᵢθᵢ − y`.
pub fn prediction_error<S: Scalar>(phi: &ParamVector<S>, theta: &ParamVector<S>, y: S) -> Result<S> {
    phi.check_dim(theta)?;
    Ok(phi.iter().zip(theta.iter()).fold(S::zero(), |acc, (&p, &t)| acc + p * t) - y)
}

/// Single-output linear regression sample `y_k = φ_kᵀθ*`, loss `½e²`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearSample {
    pub k: usize,
    pub phi: ParamVector,
    pub y: f64,
    pub theta_star: Option<ParamVector>,
}

impl LinearSample {
    pub fn new(k: usize, phi: ParamVector, y: f64) -> Self {
        Self { k, phi, y, theta_star: None }
    }

    /// Noise-free sample generated from a known parameter.
    pub fn exact(k: usize, phi: ParamVector, theta_star: ParamVector) -> Result<Self> {
        let y = phi.dot(&theta_star)?;
        Ok(Self { k, phi, y, theta_star: Some(theta_star) })
    }

    pub fn error(&self, theta: &ParamVector) -> Result<f64> {
        prediction_error(&self.phi, theta, self.y)
    }
}

impl Objective<f64> for LinearSample {
    fn iteration(&self) -> usize {
        self.k
    }

    fn dim(&self) -> usize {
        self.phi.dim()
    }

    fn loss(&self, theta: &ParamVector) -> Result<f64> {
        let e = self.error(theta)?;
        Ok(0.5 * e * e)
    }

    fn gradient(&self, theta: &ParamVector) -> Result<ParamVector> {
        let e = self.error(theta)?;
        Ok(self.phi.scale(e))
    }

    fn normalization(&self) -> f64 {
        1.0 + self.phi.norm_sq()
    }

    fn smoothness(&self) -> f64 {
        self.phi.norm_sq()
    }

    fn theta_star(&self) -> Option<&ParamVector> {
        self.theta_star.as_ref()
    }

    fn optimal_value(&self) -> Option<f64> {
        self.theta_star.as_ref().map(|_| 0.0)
    }
}

pub(crate) fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidArgument(msg()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_sample(phi: f64, y: f64) -> LinearSample {
        LinearSample::new(0, ParamVector::new(vec![phi]), y)
    }

    #[test]
    fn regularized_gradient_vanishes_at_anchor_with_zero_gradient() {
        let s = LinearSample::exact(0, ParamVector::new(vec![1.0, -2.0]), ParamVector::new(vec![0.5, 0.5])).unwrap();
        let theta = ParamVector::new(vec![0.5, 0.5]);
        let g = regularized_gradient(&s, &theta, &theta, 0.3).unwrap();
        assert_eq!(g.norm_sq(), 0.0);
    }

    #[test]
    fn regularized_gradient_without_mu_is_normalized_gradient() {
        let s = scalar_sample(2.0, 1.0);
        let theta = ParamVector::new(vec![3.0]);
        let g = regularized_gradient(&s, &theta, &ParamVector::zeros(1), 0.0).unwrap();
        // e = 5, ∇L = 10, N = 5
        assert_eq!(g[0], 2.0);
    }

    #[test]
    fn regularized_gradient_hand_arithmetic() {
        // ∇L = φe = 3 with φ=1 ⇒ N = 2; θ − θ₀ = 4, μ = 0.5 ⇒ 1.5 + 2.0
        let s = scalar_sample(1.0, -3.0);
        let theta = ParamVector::new(vec![0.0]);
        let theta0 = ParamVector::new(vec![-4.0]);
        let g = regularized_gradient(&s, &theta, &theta0, 0.5).unwrap();
        assert!((g[0] - 3.5).abs() < 1e-15);
    }

    #[test]
    fn regularized_gradient_rejects_mismatched_anchor() {
        let s = scalar_sample(1.0, 0.0);
        let err = regularized_gradient(&s, &ParamVector::zeros(1), &ParamVector::zeros(2), 0.1);
        assert!(matches!(err, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn prediction_error_examples() {
        let phi = ParamVector::new(vec![1.0, 2.0]);
        assert_eq!(prediction_error(&phi, &ParamVector::new(vec![3.0, 4.0]), 0.0).unwrap(), 11.0);
        let star = ParamVector::new(vec![0.25, -1.5]);
        let y = phi.dot(&star).unwrap();
        assert_eq!(prediction_error(&phi, &star, y).unwrap(), 0.0);
        assert_eq!(prediction_error(&ParamVector::zeros(2), &star, 7.0).unwrap(), -7.0);
        assert!(prediction_error(&phi, &ParamVector::zeros(3), 0.0).is_err());
    }

    #[test]
    fn exact_sample_optimum_is_zero_loss() {
        let s = LinearSample::exact(3, ParamVector::new(vec![2.0, -1.0, 0.5]), ParamVector::new(vec![1.0, 1.0, 1.0]))
            .unwrap();
        let star = s.theta_star().unwrap().clone();
        assert_eq!(s.loss(&star).unwrap(), s.optimal_value().unwrap());
        assert_eq!(s.normalization(), 1.0 + 4.0 + 1.0 + 0.25);
    }
}
