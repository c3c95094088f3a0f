//! Property suites with machine-readable reports.
//!
//! Every check reports its worst slack, the room left in the inequality.
//! Checks pass when the slack is above minus their tolerance, so rounding can
//! leave a passing slack slightly negative.

use hotune::deblur::{blur_operator, psf_gauss, spatial_blur, Image};
use hotune::gains::{hb_gamma_max, hot_gamma_max};
use hotune::lyapunov::{ngd_check, Certifier, DEFAULT_TOL};
use hotune::optim::{
    heavy_ball_equivalent_vartheta0, heavy_ball_step, hot_hb_step, hot_step, nesterov_const_step,
    nesterov_equivalent_vartheta0, ngd_step,
};
use hotune::rng::SplitMix64;
use hotune::streams::{adversarial_stream, Stream};
use hotune::{Gains, LinearSample, Method, Objective, ObjectiveKind, ParamVector, StepRule, TunerState};
use serde::{Deserialize, Serialize};

use crate::config::Suite;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub slack: f64,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub passed: bool,
    pub checks: Vec<CheckResult>,
}

impl SuiteReport {
    fn new(suite: Suite, checks: Vec<CheckResult>) -> Self {
        Self { suite: suite.tag().into(), passed: checks.iter().all(|c| c.passed), checks }
    }
}

pub fn run_suite(suite: Suite) -> SuiteReport {
    let checks = match suite {
        Suite::Lyapunov => lyapunov_checks(&LyapunovSweep::default()),
        Suite::Equivalence => equivalence_checks(20, 200),
        Suite::Bounds => bounds_checks(),
        Suite::DeblurOracle => deblur_oracle_checks(),
    };
    SuiteReport::new(suite, checks)
}

/// Adversarial streams every Lyapunov check runs on.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LyapunovSweep {
    pub streams: u64,
    pub dim: usize,
    pub max_magnitude: f64,
    pub steps: usize,
}

impl Default for LyapunovSweep {
    fn default() -> Self {
        Self { streams: 100, dim: 5, max_magnitude: 1e3, steps: 500 }
    }
}

fn check(name: impl Into<String>, slack: f64, passed: bool, detail: String) -> CheckResult {
    CheckResult { name: name.into(), passed, slack, detail }
}

/// Runs a tuner through its certifier on every stream. The slack is the
/// smallest of `bound − ΔV` and `envelope − V`, relative to `max(1, V)`.
fn certified_sweep(sweep: &LyapunovSweep, method: Method, gains: Gains, name: &str) -> CheckResult {
    let rule = if method == Method::Hot { StepRule::Hot(gains) } else { StepRule::HotHb(gains) };
    let mut worst = f64::INFINITY;
    let mut violations = 0usize;
    let mut monotone_breaks = 0usize;
    for seed in 0..sweep.streams {
        let mut run = || -> hotune::Result<()> {
            let stream = adversarial_stream(seed, sweep.dim, sweep.max_magnitude)?;
            let theta0 = ParamVector::zeros(sweep.dim);
            let mut cert = Certifier::new(method, gains, stream.theta_star.clone(), &theta0)?;
            let mut st = TunerState::new(method, theta0);
            for k in 0..sweep.steps {
                let s = stream.sample(k)?;
                let next = rule.step(&st, &s)?;
                let rec = cert.record(&st, &next, &s)?;
                let scale = f64::max(1.0, rec.v.abs());
                worst = worst.min(rec.slack / scale).min(rec.envelope_slack() / scale);
                violations += usize::from(!rec.satisfied);
                if gains.mu == 0.0 && rec.delta_v > DEFAULT_TOL * scale {
                    monotone_breaks += 1;
                }
                st = next;
            }
            Ok(())
        };
        if let Err(e) = run() {
            return check(name, f64::NEG_INFINITY, false, format!("stream {seed}: {e}"));
        }
    }
    let passed = violations == 0 && monotone_breaks == 0;
    let detail = format!(
        "γ={:.6e} β={} μ={}: {violations} violations, {monotone_breaks} increases of V over {}×{} steps",
        gains.gamma, gains.beta, gains.mu, sweep.streams, sweep.steps
    );
    check(name, worst, passed, detail)
}

fn ngd_sweep(sweep: &LyapunovSweep, gamma: f64) -> CheckResult {
    let name = format!("normalized_gd_gamma_{gamma}");
    let mut worst = f64::INFINITY;
    let mut violations = 0usize;
    for seed in 0..sweep.streams {
        let mut run = || -> hotune::Result<()> {
            let stream = adversarial_stream(seed, sweep.dim, sweep.max_magnitude)?;
            let star = stream.theta_star.clone();
            let mut st = TunerState::new(Method::GdNormalized, ParamVector::zeros(sweep.dim));
            for k in 0..sweep.steps {
                let s = stream.sample(k)?;
                let next = ngd_step(&st, &s, gamma)?;
                let e = s.error(&st.theta)?;
                let rec = ngd_check(k, &st.theta.sub(&star)?, &next.theta.sub(&star)?, e, s.normalization(), gamma)?;
                worst = worst.min(rec.slack / f64::max(1.0, rec.v.abs()));
                violations += usize::from(!rec.satisfied);
                st = next;
            }
            Ok(())
        };
        if let Err(e) = run() {
            return check(name, f64::NEG_INFINITY, false, format!("stream {seed}: {e}"));
        }
    }
    check(name, worst, violations == 0, format!("{violations} violations over {}×{} steps", sweep.streams, sweep.steps))
}

/// Stability certificates of both tuners and of normalized gradient descent.
pub fn lyapunov_checks(sweep: &LyapunovSweep) -> Vec<CheckResult> {
    let hot = |beta: f64, mu: f64| Gains::new(hot_gamma_max(beta, mu).expect("admissible"), beta, mu);
    let hb = |beta: f64, mu: f64| Gains::new(hb_gamma_max(beta, mu).expect("admissible"), beta, mu);
    let mut out = vec![
        certified_sweep(sweep, Method::Hot, hot(0.5, 0.0), "hot_unregularized"),
        certified_sweep(sweep, Method::Hot, hot(0.5, 5e-2), "hot_regularized"),
        certified_sweep(sweep, Method::HotHb, hb(1.0, 0.0), "hot_hb_unregularized"),
        certified_sweep(sweep, Method::HotHb, hb(0.5, 5e-2), "hot_hb_regularized"),
    ];
    out.extend([0.5, 1.0, 1.9].map(|g| ngd_sweep(sweep, g)));
    out
}

fn random_quadratic(rng: &mut SplitMix64, dim: usize) -> (LinearSample, ParamVector) {
    let phi = ParamVector::from_fn(dim, |_| rng.uniform(-3.0, 3.0));
    let star = ParamVector::from_fn(dim, |_| rng.uniform(-1.0, 1.0));
    let theta0 = ParamVector::from_fn(dim, |_| rng.uniform(-1.0, 1.0));
    (LinearSample::exact(0, phi, star).expect("matching dims"), theta0)
}

fn rel_dev(a: &ParamVector, b: &ParamVector) -> f64 {
    a.dist_sq(b).expect("matching dims").sqrt() / b.norm().max(1.0)
}

/// Largest relative θ-deviation between each tuner and its two-step
/// counterpart under the `ϑ₀` mappings.
pub fn equivalence_deviation(trials: usize, steps: usize, heavy_ball: bool, seed: u64) -> hotune::Result<f64> {
    let mut rng = SplitMix64::new(seed);
    let mut worst: f64 = 0.0;
    for trial in 0..trials {
        let (s, theta0) = random_quadratic(&mut rng, 2 + trial % 9);
        let mu = if trial % 2 == 0 { 0.0 } else { rng.uniform(1e-3, 0.5) };
        let objective = ObjectiveKind::Regularized { mu };
        if heavy_ball {
            let beta = rng.uniform(0.05, 1.95);
            let gains = Gains::new(hb_gamma_max(beta, mu)? * rng.uniform(0.5, 1.0), beta, mu);
            let v0 = heavy_ball_equivalent_vartheta0(&s, &theta0, &gains)?;
            let mut a = TunerState::new(Method::HotHb, theta0.clone()).with_vartheta(v0)?;
            let mut b = TunerState::new(Method::HeavyBall, theta0).with_objective(objective);
            for _ in 0..steps {
                a = hot_hb_step(&a, &s, &gains)?;
                b = heavy_ball_step(&b, &s, gains.alpha_bar(), gains.beta_bar())?;
                worst = worst.max(rel_dev(&a.theta, &b.theta));
            }
        } else {
            let beta = rng.uniform(0.05, 0.95);
            let gains = Gains::new(hot_gamma_max(beta, mu)? * rng.uniform(0.5, 1.0), beta, mu);
            let v0 = nesterov_equivalent_vartheta0(&s, &theta0, &gains)?;
            let mut a = TunerState::new(Method::Hot, theta0.clone()).with_vartheta(v0)?;
            let mut b = TunerState::new(Method::NesterovConst, theta0).with_objective(objective);
            for _ in 0..steps {
                a = hot_step(&a, &s, &gains)?;
                b = nesterov_const_step(&b, &s, gains.alpha_bar(), gains.beta_bar())?;
                worst = worst.max(rel_dev(&a.theta, &b.theta));
            }
        }
    }
    Ok(worst)
}

pub fn equivalence_checks(trials: usize, steps: usize) -> Vec<CheckResult> {
    const TOL: f64 = 1e-10;
    [("nesterov_type_vs_nesterov_const", false, 41), ("heavy_ball_type_vs_heavy_ball", true, 42)]
        .into_iter()
        .map(|(name, hb, seed)| match equivalence_deviation(trials, steps, hb, seed) {
            Ok(dev) => check(name, TOL - dev, dev <= TOL, format!("max relative deviation {dev:.3e} over {trials}×{steps} steps")),
            Err(e) => check(name, f64::NEG_INFINITY, false, e.to_string()),
        })
        .collect()
}

fn golden(name: &str, got: f64, want: f64, abs_tol: f64) -> CheckResult {
    let err = (got - want).abs();
    check(name, abs_tol - err, err <= abs_tol, format!("computed {got:.8e}, expected {want:.8e} ± {abs_tol:.1e}"))
}

/// Published gain values.
pub fn bounds_checks() -> Vec<CheckResult> {
    let hot = hot_gamma_max(0.1, 1e-5).expect("admissible");
    let hb = hb_gamma_max(1.0, 0.0).expect("admissible");
    let gb = hot_gamma_max(0.1, 1e-20).expect("admissible") * 0.1;
    vec![
        golden("hot_gamma_max(0.1, 1e-5)", hot, 0.01186, 1e-5),
        golden("hb_gamma_max(1, 0)", hb, 0.0625, 1e-12),
        golden("deblur step size γβ/N₀", gb / 2.0, 0.00059, 0.01 * 0.00059),
        golden("deblur step size γβ/max N_k", gb / (1.0 + 200.0 * 200.0), 2.966e-8, 0.01 * 2.966e-8),
    ]
}

/// Spectral blur against direct circular convolution on seeded 32×32 images.
pub fn deblur_oracle_checks() -> Vec<CheckResult> {
    const TOL: f64 = 1e-8;
    let mut rng = SplitMix64::new(2024);
    let mut out = Vec::new();
    for size in [1usize, 3, 9, 11] {
        for sigma in [0.5, 1.5, 7.0] {
            let name = format!("psf_{size}_sigma_{sigma}");
            let pixels = (0..32 * 32).map(|_| rng.uniform(0.0, 255.0)).collect();
            let result = (|| -> hotune::Result<f64> {
                let img = Image::new(32, 32, pixels)?;
                let psf = psf_gauss(size, sigma)?;
                let spectral = blur_operator(&psf, 32, 32)?.apply(&img.spectrum())?;
                let back = Image::from_spectrum(&spectral, 32, 32)?;
                let direct = spatial_blur(&psf, &img);
                Ok(back.pixels.iter().zip(&direct.pixels).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            })();
            out.push(match result {
                Ok(diff) => check(name, TOL - diff, diff <= TOL, format!("max abs pixel difference {diff:.3e}")),
                Err(e) => check(name, f64::NEG_INFINITY, false, e.to_string()),
            });
        }
    }
    out
}
