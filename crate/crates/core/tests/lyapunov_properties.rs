use hotune::gains::{hb_gamma_max, hot_gamma_max};
use hotune::lyapunov::{ngd_check, Certifier};
use hotune::optim::{hot_hb_step, hot_step, ngd_step, StepRule};
use hotune::streams::{adversarial_stream, Stream};
use hotune::{Gains, Method, Objective, ParamVector, TunerState};
use proptest::prelude::*;

const STEPS: usize = 200;

fn certified_run(seed: u64, magnitude: f64, method: Method, gains: Gains) -> Result<(), String> {
    let stream = adversarial_stream(seed, 5, magnitude).unwrap();
    let theta0 = ParamVector::zeros(5);
    let mut cert = Certifier::new(method, gains, stream.theta_star.clone(), &theta0).unwrap();
    let rule = match method {
        Method::Hot => StepRule::Hot(gains),
        _ => StepRule::HotHb(gains),
    };
    let mut st = TunerState::new(method, theta0);
    for k in 0..STEPS {
        let s = stream.sample(k).unwrap();
        let next = rule.step(&st, &s).unwrap();
        let rec = cert.record(&st, &next, &s).unwrap();
        if !rec.satisfied {
            return Err(format!("k={k}: {rec:?}"));
        }
        st = next;
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn unregularized_tuner(seed in any::<u64>(), beta in 0.02f64..0.98, mag in 1.0f64..1e6) {
        let gains = Gains::new(hot_gamma_max(beta, 0.0).unwrap(), beta, 0.0);
        prop_assert_eq!(certified_run(seed, mag, Method::Hot, gains), Ok(()));
    }

    #[test]
    fn regularized_tuner(seed in any::<u64>(), beta in 0.02f64..0.98, mu in 1e-4f64..0.9, mag in 1.0f64..1e4) {
        let gains = Gains::new(hot_gamma_max(beta, mu).unwrap(), beta, mu);
        prop_assert_eq!(certified_run(seed, mag, Method::Hot, gains), Ok(()));
    }

    #[test]
    fn heavy_ball_tuner(seed in any::<u64>(), beta in 0.02f64..1.98, mu in 0.0f64..0.9, mag in 1.0f64..1e4) {
        let gains = Gains::new(hb_gamma_max(beta, mu).unwrap(), beta, mu);
        prop_assert_eq!(certified_run(seed, mag, Method::HotHb, gains), Ok(()));
    }

    #[test]
    fn normalized_gradient_descent(seed in any::<u64>(), gamma in 0.01f64..1.99, mag in 1.0f64..1e6) {
        let stream = adversarial_stream(seed, 5, mag).unwrap();
        let star = stream.theta_star.clone();
        let mut st = TunerState::new(Method::GdNormalized, ParamVector::zeros(5));
        for k in 0..STEPS {
            let s = stream.sample(k).unwrap();
            let next = ngd_step(&st, &s, gamma).unwrap();
            let e = s.error(&st.theta).unwrap();
            let rec = ngd_check(k, &st.theta.sub(&star).unwrap(), &next.theta.sub(&star).unwrap(), e, s.normalization(), gamma)
                .unwrap();
            prop_assert!(rec.satisfied, "k={}: {:?}", k, rec);
            st = next;
        }
    }
}

/// Summing the unregularized increment bound telescopes to `Σ L_k(θ_{k+1})/N_k ≤ V₀`.
#[test]
fn loss_sum_is_bounded_by_initial_energy() {
    for seed in 0..10 {
        let stream = adversarial_stream(seed, 5, 1e3).unwrap();
        let gains = Gains::new(hot_gamma_max(0.3, 0.0).unwrap(), 0.3, 0.0);
        let theta0 = ParamVector::zeros(5);
        let cert = Certifier::new(Method::Hot, gains, stream.theta_star.clone(), &theta0).unwrap();
        let mut st = TunerState::new(Method::Hot, theta0);
        let v0 = cert.v(&st).unwrap();
        let mut total = 0.0;
        for k in 0..2000 {
            let s = stream.sample(k).unwrap();
            st = hot_step(&st, &s, &gains).unwrap();
            total += s.loss(&st.theta).unwrap() / s.normalization();
        }
        assert!(total <= v0 * (1.0 + 1e-6), "seed {seed}: {total} > {v0}");
    }
}

#[test]
fn heavy_ball_tuner_energy_is_nonincreasing_without_regularization() {
    let stream = adversarial_stream(99, 5, 1e5).unwrap();
    let gains = Gains::new(hb_gamma_max(1.0, 0.0).unwrap(), 1.0, 0.0);
    let theta0 = ParamVector::zeros(5);
    let cert = Certifier::new(Method::HotHb, gains, stream.theta_star.clone(), &theta0).unwrap();
    let mut st = TunerState::new(Method::HotHb, theta0);
    let mut v = cert.v(&st).unwrap();
    for k in 0..1000 {
        st = hot_hb_step(&st, &stream.sample(k).unwrap(), &gains).unwrap();
        let next = cert.v(&st).unwrap();
        assert!(next <= v * (1.0 + 1e-9));
        v = next;
    }
}
