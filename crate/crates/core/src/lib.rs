//! Higher-order tuner optimizers for streaming linear regression.
//!
//! The crate provides the Nesterov-type and Heavy-Ball-type higher-order
//! tuners, the classical first-order baselines they are compared against,
//! per-step Lyapunov certificate checks, closed-form hyperparameter rules,
//! regressor stream generators, the time-varying worst-case quadratic and a
//! frequency-domain deblurring problem.

pub mod deblur;
pub mod error;
pub mod gains;
pub mod hardfn;
pub mod lyapunov;
pub mod objective;
pub mod optim;
pub mod rng;
pub mod streams;
pub mod vector;

pub use error::{Error, Result};
pub use gains::{DerivedGains, GainCheck, Gains};
pub use lyapunov::LyapunovRecord;
pub use objective::{prediction_error, regularized_gradient, LinearSample, Objective, ObjectiveKind};
pub use optim::{Method, StepRule, TunerState};
pub use vector::{ParamVector, Scalar};

pub use num_complex::Complex64;
