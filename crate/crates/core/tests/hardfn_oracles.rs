use hotune::gains::lower_bound_curve;
use hotune::hardfn::{lambda_max_power, HardProblem};
use hotune::optim::{gd_step, heavy_ball_step, hot_hb_step, hot_step, nesterov_const_step, nesterov_tv_step, ngd_step};
use hotune::rng::SplitMix64;
use hotune::streams::Schedule;
use hotune::{Gains, Method, Objective, ParamVector, TunerState};

/// Thomas algorithm for `Aθ = D` with the worst-case function's matrix.
fn thomas_solve(n: usize, b: f64, c: f64, d: f64) -> Vec<f64> {
    let diag = |i: usize| if i == 0 || i == n - 1 { b + c } else { 2.0 * c };
    let off = -c;
    let mut cp = vec![0.0; n];
    let mut dp = vec![0.0; n];
    cp[0] = off / diag(0);
    dp[0] = d / diag(0);
    for i in 1..n {
        let m = diag(i) - off * cp[i - 1];
        cp[i] = off / m;
        dp[i] = -off * dp[i - 1] / m;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = dp[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = dp[i] - cp[i] * x[i + 1];
    }
    x
}

/// `(a/8)θᵀAθ − (a/4)dθ₁` with an explicit dense matrix.
fn dense_loss(n: usize, a: f64, b: f64, c: f64, d: f64, t: &[f64]) -> f64 {
    let mut m = vec![vec![0.0; n]; n];
    for i in 0..n {
        m[i][i] = if i == 0 || i == n - 1 { b + c } else { 2.0 * c };
        if i + 1 < n {
            m[i][i + 1] = -c;
            m[i + 1][i] = -c;
        }
    }
    let quad: f64 = (0..n).map(|i| (0..n).map(|j| t[i] * m[i][j] * t[j]).sum::<f64>()).sum();
    a / 8.0 * quad - a / 4.0 * d * t[0]
}

fn problem(n: usize, a: f64, b: f64, c: f64, d: f64) -> HardProblem {
    HardProblem::new(n, Schedule::constant(a), Schedule::constant(b), Schedule::constant(c), Schedule::constant(d))
        .unwrap()
}

#[test]
fn closed_form_optimum_matches_tridiagonal_solve() {
    let mut rng = SplitMix64::new(10);
    for n in 2..=50 {
        for _ in 0..3 {
            let (b, c, d) = (rng.uniform(0.1, 5.0), rng.uniform(0.1, 5.0), rng.uniform(0.1, 5.0));
            let p = problem(n, 2.0, b, c, d);
            let star = p.theta_star(0).unwrap();
            let solved = thomas_solve(n, b, c, d);
            for i in 0..n {
                assert!((star[i] - solved[i]).abs() <= 1e-10 * solved[i].abs().max(1.0), "n={n} i={i}");
            }
            let g = p.gradient(0, &star).unwrap();
            assert!(g.norm() <= 1e-9 * 2.0, "gradient at optimum {}", g.norm());
        }
    }
}

#[test]
fn stencil_loss_matches_dense_matrix_form() {
    let mut rng = SplitMix64::new(11);
    for _ in 0..50 {
        let n = 2 + (rng.next_u64() % 9) as usize;
        let (a, b, c, d) = (rng.uniform(0.5, 10.0), rng.uniform(0.1, 3.0), rng.uniform(0.1, 3.0), rng.uniform(0.1, 3.0));
        let p = problem(n, a, b, c, d);
        let t: Vec<f64> = (0..n).map(|_| rng.uniform(-2.0, 2.0)).collect();
        let dense = dense_loss(n, a, b, c, d, &t);
        let stencil = p.loss(0, &ParamVector::new(t)).unwrap();
        assert!((dense - stencil).abs() <= 1e-12 * dense.abs().max(1.0));
    }
}

#[test]
fn convexity_and_smoothness_on_random_pairs() {
    let mut rng = SplitMix64::new(12);
    let p = HardProblem::canonical(30, Schedule::constant(7.0)).unwrap();
    for _ in 0..200 {
        let x = ParamVector::from_fn(30, |_| rng.uniform(-3.0, 3.0));
        let y = ParamVector::from_fn(30, |_| rng.uniform(-3.0, 3.0));
        let mid = x.lincomb(0.5, &y, 0.5).unwrap();
        let lhs = p.loss(0, &mid).unwrap();
        let rhs = 0.5 * p.loss(0, &x).unwrap() + 0.5 * p.loss(0, &y).unwrap();
        assert!(lhs <= rhs + 1e-12 * rhs.abs().max(1.0));
        let gdiff = p.gradient(0, &x).unwrap().dist_sq(&p.gradient(0, &y).unwrap()).unwrap().sqrt();
        assert!(gdiff <= 7.0 * x.dist_sq(&y).unwrap().sqrt());
    }
}

#[test]
fn optimal_value_limit_and_gershgorin() {
    let a = 6.0;
    let p = HardProblem::canonical(100_000, Schedule::constant(a)).unwrap();
    assert!((p.optimal_value(0).unwrap() + a / 8.0).abs() < 1e-4);
    for n in [2, 5, 401] {
        let q = HardProblem::canonical(n, Schedule::constant(a)).unwrap();
        assert!(q.op_norm_sq(0).unwrap() < a / 2.0);
    }
}

#[test]
fn bisection_agrees_with_power_iteration() {
    for n in [2usize, 3, 8, 16, 30] {
        let p = problem(n, 2.0, 0.8, 1.9, 1.0);
        let pow = lambda_max_power(n, 0.8, 1.9, 1e-15, 200_000).unwrap();
        assert!((p.lambda_max(0).unwrap() - pow).abs() <= 1e-10 * pow);
    }
}

fn run_method(method: Method, s: &hotune::hardfn::HardSample, a: f64, steps: usize) -> ParamVector {
    let alpha = 1.0 / a;
    let hot_gains = Gains::new(hotune::gains::hot_gamma_max(0.4, 0.0).unwrap(), 0.4, 0.0);
    let mut st = TunerState::new(method, ParamVector::zeros(s.n));
    for _ in 0..steps {
        st = match method {
            Method::GdFixed => gd_step(&st, s, alpha),
            Method::GdNormalized => ngd_step(&st, s, 1.0),
            Method::NesterovTv => nesterov_tv_step(&st, s, alpha),
            Method::NesterovConst => nesterov_const_step(&st, s, alpha, 0.9),
            Method::HeavyBall => heavy_ball_step(&st, s, alpha, 0.9),
            Method::Hot => hot_step(&st, s, &hot_gains),
            Method::HotHb => hot_hb_step(&st, s, &hot_gains),
        }
        .unwrap();
    }
    st.theta
}

/// For each `k`, the bound is attained by the worst-case function on the
/// first `2k+1` coordinates. Started at the origin, every method keeps
/// `θ_k` in the span of the first `k` coordinates, so the instance can be
/// simulated in dimension `2k+1`.
#[test]
fn all_methods_respect_the_lower_bound() {
    let n = 101;
    let a = 4.0;
    for k in 1..=(n - 1) / 2 {
        let p = HardProblem::canonical(2 * k + 1, Schedule::constant(a)).unwrap();
        let s = p.sample(0).unwrap();
        let dist_sq = s.theta_star().unwrap().norm_sq();
        let lb = lower_bound_curve(a, dist_sq, k as u64).unwrap();
        for m in Method::ALL {
            let theta = run_method(m, &s, a, k);
            let gap = s.loss_gap(&theta).unwrap().unwrap();
            assert!(gap >= lb - 1e-9, "{m} at k={k}: gap {gap} < bound {lb}");
        }
    }
}
