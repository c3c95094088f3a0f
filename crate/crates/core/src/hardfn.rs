//! Time-varying worst-case smooth convex quadratic.
//!
//! `L_k(θ) = (a/4)·{½[bθ₁² + cΣ(θᵢ−θᵢ₊₁)² + bθ_n²] − dθ₁}` with coefficient
//! schedules `a, b, c, d`. Equivalently `(a/8)θᵀAθ − (a/4)dθ₁` where `A` is
//! tridiagonal with corners `b+c`, interior diagonal `2c` and off-diagonal `−c`.
//! Nothing here materializes `A`.

use std::collections::HashMap;
use std::sync::{OnceLock, RwLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objective::{ensure, Objective};
use crate::streams::{Schedule, Stream};
use crate::vector::ParamVector;

/// Coefficients at one iteration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HardCoefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl HardCoefficients {
    fn is_canonical(&self) -> bool {
        self.b == 1.0 && self.c == 1.0 && self.d == 1.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HardProblem {
    pub n: usize,
    pub a: Schedule,
    pub b: Schedule,
    pub c: Schedule,
    pub d: Schedule,
}

impl HardProblem {
    pub fn new(n: usize, a: Schedule, b: Schedule, c: Schedule, d: Schedule) -> Result<Self> {
        ensure(n >= 2, || format!("dimension must be at least 2, got {n}"))?;
        Ok(Self { n, a, b, c, d })
    }

    /// `b = c = d = 1` with the given `a` schedule.
    pub fn canonical(n: usize, a: Schedule) -> Result<Self> {
        let one = Schedule::constant(1.0);
        Self::new(n, a, one.clone(), one.clone(), one)
    }

    pub fn coefficients(&self, k: usize) -> HardCoefficients {
        HardCoefficients { a: self.a.value(k), b: self.b.value(k), c: self.c.value(k), d: self.d.value(k) }
    }

    fn check(&self, theta: &ParamVector) -> Result<()> {
        if theta.dim() == self.n {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected: self.n, found: theta.dim() })
        }
    }

    pub fn loss(&self, k: usize, theta: &ParamVector) -> Result<f64> {
        self.check(theta)?;
        Ok(loss_at(&self.coefficients(k), theta.as_slice()))
    }

    pub fn gradient(&self, k: usize, theta: &ParamVector) -> Result<ParamVector> {
        self.check(theta)?;
        Ok(gradient_at(&self.coefficients(k), theta.as_slice()))
    }

    pub fn theta_star(&self, k: usize) -> Result<ParamVector> {
        theta_star_at(self.n, &self.coefficients(k))
    }

    /// Closed form for `b = c = d = 1`, otherwise `L_k(θ*)`.
    pub fn optimal_value(&self, k: usize) -> Result<f64> {
        let co = self.coefficients(k);
        if co.is_canonical() {
            Ok(co.a / 8.0 * (-1.0 + 1.0 / (self.n as f64 + 1.0)))
        } else {
            Ok(loss_at(&co, self.theta_star(k)?.as_slice()))
        }
    }

    /// `λ_max(A_k)`.
    pub fn lambda_max(&self, k: usize) -> Result<f64> {
        let co = self.coefficients(k);
        lambda_max_cached(self.n, co.b, co.c)
    }

    /// `‖φ_k‖²_op = (a/8)·λ_max(A_k)`.
    pub fn op_norm_sq(&self, k: usize) -> Result<f64> {
        Ok(self.coefficients(k).a / 8.0 * self.lambda_max(k)?)
    }

    /// `N_k = 1 + ‖φ_k‖²_op`.
    pub fn normalization(&self, k: usize) -> Result<f64> {
        Ok(1.0 + self.op_norm_sq(k)?)
    }

    /// Gradient Lipschitz constant `(a/4)·λ_max(A_k)`.
    pub fn smoothness(&self, k: usize) -> Result<f64> {
        Ok(self.coefficients(k).a / 4.0 * self.lambda_max(k)?)
    }

    pub fn sample(&self, k: usize) -> Result<HardSample> {
        let coefficients = self.coefficients(k);
        let lambda_max = lambda_max_cached(self.n, coefficients.b, coefficients.c)?;
        let theta_star = theta_star_at(self.n, &coefficients)?;
        let optimal_value = self.optimal_value(k)?;
        Ok(HardSample { k, n: self.n, coefficients, lambda_max, theta_star, optimal_value })
    }
}

pub fn hard_loss(p: &HardProblem, k: usize, theta: &ParamVector) -> Result<f64> {
    p.loss(k, theta)
}

pub fn hard_gradient(p: &HardProblem, k: usize, theta: &ParamVector) -> Result<ParamVector> {
    p.gradient(k, theta)
}

pub fn hard_theta_star(p: &HardProblem, k: usize) -> Result<ParamVector> {
    p.theta_star(k)
}

pub fn hard_optimal_value(p: &HardProblem, k: usize) -> Result<f64> {
    p.optimal_value(k)
}

pub fn hard_normalization(p: &HardProblem, k: usize) -> Result<f64> {
    p.normalization(k)
}

fn loss_at(co: &HardCoefficients, t: &[f64]) -> f64 {
    let n = t.len();
    let diffs: f64 = t.windows(2).map(|w| (w[0] - w[1]).powi(2)).sum();
    let quad = co.b * t[0] * t[0] + co.c * diffs + co.b * t[n - 1] * t[n - 1];
    co.a / 4.0 * (0.5 * quad - co.d * t[0])
}

/// `(a/4)(Aθ − D)` by the tridiagonal stencil.
fn gradient_at(co: &HardCoefficients, t: &[f64]) -> ParamVector {
    let n = t.len();
    let s = co.a / 4.0;
    ParamVector::from_fn(n, |i| {
        let mut row = co.c * (if i > 0 { t[i] - t[i - 1] } else { 0.0 })
            + co.c * (if i + 1 < n { t[i] - t[i + 1] } else { 0.0 });
        if i == 0 {
            row += co.b * t[0] - co.d;
        }
        if i == n - 1 {
            row += co.b * t[n - 1];
        }
        s * row
    })
}

/// `θ*ᵢ = d((n−i)b + c)/((n−1)b² + 2bc)` for 1-based `i`.
fn theta_star_at(n: usize, co: &HardCoefficients) -> Result<ParamVector> {
    ensure(co.b > 0.0 && co.c > 0.0, || format!("b and c must be positive (b={}, c={})", co.b, co.c))?;
    let denom = (n as f64 - 1.0) * co.b * co.b + 2.0 * co.b * co.c;
    Ok(ParamVector::from_fn(n, |i| co.d * ((n - i - 1) as f64 * co.b + co.c) / denom))
}

/// Diagonal of `A`.
fn diagonal(n: usize, b: f64, c: f64) -> impl Fn(usize) -> f64 {
    move |i| if i == 0 || i == n - 1 { b + c } else { 2.0 * c }
}

/// Number of eigenvalues of `A` strictly below `x` (Sturm sequence of the
/// `LDLᵀ` factorization of `A − xI`).
fn count_below(n: usize, b: f64, c: f64, x: f64) -> usize {
    let diag = diagonal(n, b, c);
    let mut count = 0;
    let mut q = 1.0;
    for i in 0..n {
        let off = if i == 0 { 0.0 } else { c * c / q };
        q = diag(i) - x - off;
        if q == 0.0 {
            q = -f64::EPSILON * (x.abs() + c.abs());
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Largest eigenvalue of `A` by Sturm-sequence bisection, accurate to a few ulps.
pub fn lambda_max(n: usize, b: f64, c: f64) -> Result<f64> {
    ensure(n >= 2, || format!("dimension must be at least 2, got {n}"))?;
    ensure(b > 0.0 && c > 0.0 && b.is_finite() && c.is_finite(), || {
        format!("b and c must be positive and finite (b={b}, c={c})")
    })?;
    // Gershgorin: every eigenvalue lies in [0, max(b+2c, 4c)]
    let mut lo = 0.0;
    let mut hi = f64::max(b + 2.0 * c, 4.0 * c);
    while hi - lo > 2.0 * f64::EPSILON * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if count_below(n, b, c, mid) == n {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

type LambdaKey = (usize, u64, u64);

fn lambda_cache() -> &'static RwLock<HashMap<LambdaKey, f64>> {
    static CACHE: OnceLock<RwLock<HashMap<LambdaKey, f64>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// [`lambda_max`] memoized per `(n, b, c)`; each key is written once.
pub fn lambda_max_cached(n: usize, b: f64, c: f64) -> Result<f64> {
    let key = (n, b.to_bits(), c.to_bits());
    if let Some(&v) = lambda_cache().read().unwrap_or_else(|e| e.into_inner()).get(&key) {
        return Ok(v);
    }
    let v = lambda_max(n, b, c)?;
    lambda_cache().write().unwrap_or_else(|e| e.into_inner()).entry(key).or_insert(v);
    Ok(v)
}

/// Power iteration from the all-ones vector. Stops when the Rayleigh
/// quotient changes by less than `rel_tol` relative.
pub fn lambda_max_power(n: usize, b: f64, c: f64, rel_tol: f64, max_iter: usize) -> Result<f64> {
    ensure(n >= 2 && b > 0.0 && c > 0.0, || "need n ≥ 2 and positive b, c".into())?;
    let diag = diagonal(n, b, c);
    let matvec = |x: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| {
                let left = if i > 0 { x[i - 1] } else { 0.0 };
                let right = if i + 1 < n { x[i + 1] } else { 0.0 };
                diag(i) * x[i] - c * (left + right)
            })
            .collect()
    };
    // alternating start keeps a component along the top eigenvector, which
    // oscillates in sign
    let mut x: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
    let mut rq = 0.0;
    for _ in 0..max_iter {
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        x.iter_mut().for_each(|v| *v /= norm);
        let y = matvec(&x);
        let next: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        if (next - rq).abs() <= rel_tol * next.abs() {
            return Ok(next);
        }
        rq = next;
        x = y;
    }
    Err(Error::invalid(format!("power iteration did not converge in {max_iter} steps")))
}

/// Objective of the worst-case function frozen at one iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct HardSample {
    pub k: usize,
    pub n: usize,
    pub coefficients: HardCoefficients,
    pub lambda_max: f64,
    pub theta_star: ParamVector,
    pub optimal_value: f64,
}

impl HardSample {
    fn check(&self, theta: &ParamVector) -> Result<()> {
        if theta.dim() == self.n {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected: self.n, found: theta.dim() })
        }
    }

    pub fn op_norm_sq(&self) -> f64 {
        self.coefficients.a / 8.0 * self.lambda_max
    }
}

impl Objective for HardSample {
    fn iteration(&self) -> usize {
        self.k
    }

    fn dim(&self) -> usize {
        self.n
    }

    fn loss(&self, theta: &ParamVector) -> Result<f64> {
        self.check(theta)?;
        Ok(loss_at(&self.coefficients, theta.as_slice()))
    }

    fn gradient(&self, theta: &ParamVector) -> Result<ParamVector> {
        self.check(theta)?;
        Ok(gradient_at(&self.coefficients, theta.as_slice()))
    }

    fn normalization(&self) -> f64 {
        1.0 + self.op_norm_sq()
    }

    fn smoothness(&self) -> f64 {
        self.coefficients.a / 4.0 * self.lambda_max
    }

    fn theta_star(&self) -> Option<&ParamVector> {
        Some(&self.theta_star)
    }

    fn optimal_value(&self) -> Option<f64> {
        Some(self.optimal_value)
    }
}

impl Stream for HardProblem {
    type Sample = HardSample;

    fn dim(&self) -> usize {
        self.n
    }

    fn sample(&self, k: usize) -> Result<HardSample> {
        HardProblem::sample(self, k)
    }
}
