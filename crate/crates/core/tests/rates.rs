//! Convergence-rate claims on fixed constant-regressor quadratics.

use hotune::gains::{gd_upper_bound, lemma_iterations, lemma_schedule, nesterov_tv_upper_bound};
use hotune::optim::{gd_step, nesterov_const_step, nesterov_tv_step};
use hotune::rng::SplitMix64;
use hotune::{LinearSample, Method, Objective, ObjectiveKind, ParamVector, TunerState};

struct Problem {
    sample: LinearSample,
    theta0: ParamVector,
}

fn problem(seed: u64) -> Problem {
    let mut rng = SplitMix64::new(seed);
    let dim = 10;
    let phi = ParamVector::from_fn(dim, |_| rng.uniform(-1.0, 1.0));
    let star = ParamVector::from_fn(dim, |_| rng.uniform(-1.0, 1.0));
    let dir = ParamVector::from_fn(dim, |_| rng.normal());
    let offset = dir.scale(rng.uniform(0.1, 1.0) / dir.norm());
    let theta0 = star.add(&offset).unwrap();
    Problem { sample: LinearSample::exact(0, phi, star).unwrap(), theta0 }
}

/// Minimizer of `L/N + (μ/2)‖θ−θ₀‖²`: `θ₀ + tφ` with `t = −e(θ₀)/(‖φ‖² + μN)`.
fn regularized_minimizer(p: &Problem, mu: f64) -> ParamVector {
    let s = &p.sample;
    let t = -s.error(&p.theta0).unwrap() / (s.phi.norm_sq() + mu * s.normalization());
    p.theta0.axpy(t, &s.phi).unwrap()
}

#[test]
fn accelerated_schedule_reaches_target_gap() {
    for seed in 0..5 {
        let p = problem(seed);
        let s = &p.sample;
        let d2 = p.theta0.dist_sq(s.theta_star().unwrap()).unwrap();
        for &eps in &[1e-2, 1e-4, 1e-6] {
            let psi = f64::max(1.0, s.normalization() * d2);
            let g = lemma_schedule(eps, psi).unwrap();
            let k_star = lemma_iterations(eps, psi).unwrap() as usize;
            let mut st = TunerState::new(Method::NesterovConst, p.theta0.clone())
                .with_objective(ObjectiveKind::Regularized { mu: g.mu });
            for _ in 0..k_star {
                st = nesterov_const_step(&st, s, g.alpha_bar, g.beta_bar).unwrap();
            }
            let gap = s.loss_gap(&st.theta).unwrap().unwrap();
            assert!(gap <= eps, "seed {seed} ε={eps}: gap {gap} after {k_star} steps");
        }
    }
}

#[test]
fn strongly_convex_envelope_holds_every_step() {
    for seed in 10..15 {
        let p = problem(seed);
        let s = &p.sample;
        let d2 = p.theta0.dist_sq(s.theta_star().unwrap()).unwrap();
        let eps = 1e-4;
        let psi = f64::max(1.0, s.normalization() * d2);
        let g = lemma_schedule(eps, psi).unwrap();
        let kind = ObjectiveKind::Regularized { mu: g.mu };
        let fstar_point = regularized_minimizer(&p, g.mu);
        let f = |t: &ParamVector| kind.value(s, t, &p.theta0).unwrap();
        let fstar = f(&fstar_point);
        let r0 = p.theta0.dist_sq(&fstar_point).unwrap();
        let k_star = lemma_iterations(eps, psi).unwrap() as usize;
        let mut st = TunerState::new(Method::NesterovConst, p.theta0.clone()).with_objective(kind);
        for k in 0..=k_star {
            let env = 0.5 * (g.l_bar + g.mu) * r0 * (-(k as f64) / g.kappa.sqrt()).exp();
            assert!(f(&st.theta) - fstar <= env + 1e-9, "k={k}");
            st = nesterov_const_step(&st, s, g.alpha_bar, g.beta_bar).unwrap();
        }
    }
}

#[test]
fn sublinear_rates_of_plain_methods() {
    for seed in 20..25 {
        let p = problem(seed);
        let s = &p.sample;
        let l_bar = s.smoothness();
        let d2 = p.theta0.dist_sq(s.theta_star().unwrap()).unwrap();
        let mut gd = TunerState::new(Method::GdFixed, p.theta0.clone());
        let mut tv = TunerState::new(Method::NesterovTv, p.theta0.clone());
        for k in 1..=500u64 {
            gd = gd_step(&gd, s, 1.0 / l_bar).unwrap();
            tv = nesterov_tv_step(&tv, s, 1.0 / l_bar).unwrap();
            assert!(s.loss_gap(&gd.theta).unwrap().unwrap() <= gd_upper_bound(l_bar, d2, k) + 1e-12);
            assert!(s.loss_gap(&tv.theta).unwrap().unwrap() <= nesterov_tv_upper_bound(l_bar, d2, k) + 1e-12);
        }
    }
}
