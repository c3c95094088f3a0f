//! Runs every configured method on one problem stream and writes the traces.

use std::fs;
use std::path::{Path, PathBuf};

use hotune::deblur::{read_pgm, synthetic_image, DeblurStream, Image};
use hotune::gains::{
    choice_b_pipeline, gd_upper_bound, hot_gamma_max, lower_bound_curve, nesterov_tv_upper_bound, GainCheck,
};
use hotune::hardfn::HardProblem;
use hotune::lyapunov::Certifier;
use hotune::streams::{adversarial_stream, Stream};
use hotune::{Complex64, Error, Gains, Method, Objective, ObjectiveKind, ParamVector, Scalar, StepRule, TunerState};
use serde::Serialize;

use crate::config::{Experiment, ExperimentConfig, GainsMode, ImageSource};
use crate::error::CliError;
use crate::plot::{method_color, render_svg, series_from_trace, Metric, Series};
use crate::trace::{Trace, TraceRow};
use crate::verify::{run_suite, SuiteReport};

/// Gains of every method for one experiment.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ResolvedGains {
    pub tuner: Gains,
    /// Step size of GD and both Nesterov variants and Heavy Ball.
    pub alpha_bar: f64,
    pub beta_bar: f64,
    /// `γ` of normalized gradient descent, `θ ← θ − γ∇L/N`.
    pub ngd_gamma: f64,
}

impl ResolvedGains {
    pub fn rule(&self, method: Method) -> StepRule {
        let (alpha_bar, beta_bar) = (self.alpha_bar, self.beta_bar);
        match method {
            Method::GdFixed => StepRule::GdFixed { alpha_bar },
            Method::GdNormalized => StepRule::GdNormalized { gamma: self.ngd_gamma },
            Method::NesterovTv => StepRule::NesterovTv { alpha_bar },
            Method::NesterovConst => StepRule::NesterovConst { alpha_bar, beta_bar },
            Method::HeavyBall => StepRule::HeavyBall { alpha_bar, beta_bar },
            Method::Hot => StepRule::Hot(self.tuner),
            Method::HotHb => StepRule::HotHb(self.tuner),
        }
    }
}

/// `(max N_k, max ‖φ_k‖²)` over the horizon.
fn horizon_max<S: Scalar, St: Stream<S>>(stream: &St, iters: usize) -> Result<(f64, f64), CliError> {
    let mut n_max = f64::NEG_INFINITY;
    for k in 0..iters {
        n_max = n_max.max(stream.sample(k)?.normalization());
    }
    Ok((n_max, n_max - 1.0))
}

/// Applies a [`GainsMode`] to a stream started at `θ₀`.
pub fn resolve_gains<S: Scalar, St: Stream<S>>(
    mode: &GainsMode,
    stream: &St,
    theta0: &ParamVector<S>,
    iters: usize,
) -> Result<ResolvedGains, CliError> {
    let s0 = stream.sample(0)?;
    let n0 = s0.normalization();
    let at_bound = |beta: f64, mu: f64| -> Result<Gains, CliError> { Ok(Gains::new(hot_gamma_max(beta, mu)?, beta, mu)) };
    let aggressive = |mu: f64| Gains::new(10.0, 0.1, mu);
    let resolved = match *mode {
        GainsMode::ChoiceA { beta, mu } => {
            let g = at_bound(beta, mu)?;
            ResolvedGains { tuner: g, alpha_bar: g.alpha_bar(), beta_bar: g.beta_bar(), ngd_gamma: g.alpha_bar() }
        }
        GainsMode::ChoiceB { epsilon } => {
            let star = s0.theta_star().ok_or_else(|| CliError::Config("choice_b needs a known optimum".into()))?;
            let d = choice_b_pipeline(n0 - 1.0, theta0, star, s0.smoothness(), epsilon)?;
            ResolvedGains { tuner: d.tuner_gains(), alpha_bar: d.alpha_bar, beta_bar: d.beta_bar, ngd_gamma: d.alpha_bar }
        }
        GainsMode::Choice1 { beta, mu } => {
            let g = at_bound(beta, mu)?;
            ResolvedGains { tuner: g, alpha_bar: g.alpha_bar() / n0, beta_bar: g.beta_bar(), ngd_gamma: g.alpha_bar() }
        }
        GainsMode::Choice2 { beta, mu } => {
            let g = at_bound(beta, mu)?;
            let (n_max, _) = horizon_max(stream, iters)?;
            ResolvedGains { tuner: g, alpha_bar: g.alpha_bar() / n_max, beta_bar: g.beta_bar(), ngd_gamma: g.alpha_bar() }
        }
        GainsMode::Choice3 { mu } => {
            let g = aggressive(mu);
            ResolvedGains { tuner: g, alpha_bar: 1.0 / (n0 - 1.0), beta_bar: g.beta_bar(), ngd_gamma: g.alpha_bar() }
        }
        GainsMode::Choice4 { mu } => {
            let g = aggressive(mu);
            let (_, phi_max) = horizon_max(stream, iters)?;
            ResolvedGains { tuner: g, alpha_bar: 1.0 / phi_max, beta_bar: g.beta_bar(), ngd_gamma: g.alpha_bar() }
        }
        GainsMode::Manual { gamma, beta, mu, alpha_bar, beta_bar } => {
            let g = Gains::new(gamma, beta, mu);
            g.validate(GainCheck::Unchecked)?;
            ResolvedGains {
                tuner: g,
                alpha_bar: alpha_bar.unwrap_or(g.alpha_bar()),
                beta_bar: beta_bar.unwrap_or(g.beta_bar()),
                ngd_gamma: g.alpha_bar(),
            }
        }
    };
    Ok(resolved)
}

/// Outcome of one method.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MethodSummary {
    pub method: Method,
    pub rule: StepRule,
    pub steps: usize,
    pub diverged_at: Option<usize>,
    pub final_loss: f64,
    pub final_normalized_loss_gap: Option<f64>,
    /// Gains satisfy the hypotheses of the tuner's stability certificate.
    pub certified: bool,
    /// Steps whose certificate inequality failed.
    pub violations: usize,
}

fn certificate_holds(rule: &StepRule) -> bool {
    match rule {
        StepRule::Hot(g) if g.mu == 0.0 => g.validate(GainCheck::Theorem1).is_ok(),
        StepRule::Hot(g) => g.validate(GainCheck::Theorem2).is_ok(),
        StepRule::HotHb(g) => g.validate(GainCheck::HeavyBall).is_ok(),
        _ => false,
    }
}

/// Runs one method for `iters` steps. Divergence ends the trace early and is
/// recorded on its last row. The tuners are checked against their Lyapunov
/// certificate while the optimum stays at its initial value.
pub fn run_method<S: Scalar, St: Stream<S>>(
    stream: &St,
    rule: StepRule,
    theta0: &ParamVector<S>,
    objective: ObjectiveKind,
    iters: usize,
) -> Result<(Trace, MethodSummary), CliError> {
    let method = rule.method();
    let mut state = TunerState::new(method, theta0.clone()).with_objective(objective);
    let mut cert = match (rule, stream.sample(0)?.theta_star()) {
        (StepRule::Hot(g) | StepRule::HotHb(g), Some(star)) => Some(Certifier::new(method, g, star.clone(), theta0)?),
        _ => None,
    };
    let mut trace = Trace::default();
    let mut violations = 0;
    for k in 0..iters {
        let sample = stream.sample(k)?;
        let loss = sample.loss(&state.theta)?;
        let loss_gap = sample.loss_gap(&state.theta)?;
        let l_bar = sample.smoothness();
        let normalized_loss_gap = loss_gap.map(|g| if l_bar > 0.0 { g / l_bar } else { g });
        let mut row = TraceRow { k, loss, loss_gap, normalized_loss_gap, ..TraceRow::default() };
        if cert.as_ref().is_some_and(|c| sample.theta_star() != Some(&c.theta_star)) {
            cert = None;
        }
        match rule.step(&state, &sample) {
            Ok(next) => {
                if let Some(c) = cert.as_mut() {
                    let rec = c.record(&state, &next, &sample)?;
                    violations += usize::from(!rec.satisfied);
                    row.v = Some(rec.v);
                    row.delta_v = Some(rec.delta_v);
                    row.bound = Some(rec.rhs_bound);
                    row.envelope = rec.envelope;
                    row.satisfied = Some(rec.satisfied);
                }
                trace.rows.push(row);
                state = next;
            }
            Err(Error::Diverged { .. } | Error::NonFiniteGradient { .. }) => {
                row.diverged_at = Some(k);
                trace.rows.push(row);
                break;
            }
            Err(e) => return Err(e.into()),
        }
    }
    let last = trace.rows.last().expect("iters > 0");
    let summary = MethodSummary {
        method,
        rule,
        steps: trace.rows.len(),
        diverged_at: trace.diverged_at(),
        final_loss: last.loss,
        final_normalized_loss_gap: last.normalized_loss_gap,
        certified: certificate_holds(&rule),
        violations,
    };
    Ok((trace, summary))
}

/// Traces of every method on one stream.
pub fn race<S: Scalar, St: Stream<S>>(
    config: &ExperimentConfig,
    stream: &St,
    theta0: &ParamVector<S>,
    mode: &GainsMode,
    objective: ObjectiveKind,
) -> Result<(ResolvedGains, Vec<(Trace, MethodSummary)>), CliError> {
    let gains = resolve_gains(mode, stream, theta0, config.iters)?;
    let runs = config
        .methods
        .iter()
        .map(|&m| run_method(stream, gains.rule(m), theta0, objective, config.iters))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((gains, runs))
}

/// Everything a run produced.
#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub name: String,
    pub gains: ResolvedGains,
    pub methods: Vec<MethodSummary>,
    /// Serialized as bare file names so the summary does not depend on the output root.
    #[serde(serialize_with = "file_names")]
    pub files: Vec<PathBuf>,
}

fn file_names<S: serde::Serializer>(files: &[PathBuf], ser: S) -> Result<S::Ok, S::Error> {
    ser.collect_seq(files.iter().map(|f| f.file_name().map_or_else(|| f.to_string_lossy(), |n| n.to_string_lossy())))
}

impl RunSummary {
    /// No certified tuner violated its certificate.
    pub fn passed(&self) -> bool {
        self.methods.iter().all(|m| !m.certified || m.violations == 0)
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(untagged)]
pub enum RunOutcome {
    Traces(RunSummary),
    Verify(Vec<SuiteReport>),
}

impl RunOutcome {
    pub fn passed(&self) -> bool {
        match self {
            RunOutcome::Traces(s) => s.passed(),
            RunOutcome::Verify(r) => r.iter().all(|r| r.passed),
        }
    }
}

fn load_image(source: &ImageSource, rows: usize, cols: usize, seed: u64) -> Result<Image, CliError> {
    match source {
        ImageSource::Synthetic { pattern } => Ok(synthetic_image(*pattern, rows, cols, seed)),
        ImageSource::Pgm { path } => {
            let img = read_pgm(path)?;
            if (img.rows, img.cols) != (rows, cols) {
                return Err(CliError::Config(format!(
                    "{} is {}×{}, config says {rows}×{cols}",
                    path.display(),
                    img.rows,
                    img.cols
                )));
            }
            Ok(img)
        }
    }
}

/// Upper-bound and lower-bound curves on the normalized gap, from `L̄₀` and
/// `d² = ‖θ₀ − θ*‖²`.
fn reference_curves(n: usize, dist_sq: f64, iters: usize) -> Vec<Series> {
    let curve = |label: &str, color: &str, f: &dyn Fn(u64) -> Option<f64>| Series {
        label: label.into(),
        color: color.into(),
        dashed: true,
        points: (1..iters as u64).filter_map(|k| f(k).map(|y| (k as f64, y))).collect(),
        diverged_at: None,
    };
    let k_max = ((n - 1) / 2) as u64;
    vec![
        curve("Gradient descent upper bound", "#7f7f7f", &|k| Some(gd_upper_bound(1.0, dist_sq, k))),
        curve("Nesterov upper bound", "#bcbd22", &|k| Some(nesterov_tv_upper_bound(1.0, dist_sq, k))),
        curve("Lower complexity bound", "#17becf", &|k| {
            (k <= k_max).then(|| lower_bound_curve(1.0, dist_sq, k).ok()).flatten()
        }),
    ]
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

/// Runs `config`, writing all outputs under `config.output_path(root)`.
pub fn run_experiment(config: &ExperimentConfig, root: &Path) -> Result<RunOutcome, CliError> {
    config.validate()?;
    let dir = config.output_path(root);
    fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;

    let (gains, runs, references) = match &config.experiment {
        Experiment::Verify { suites } => {
            let mut reports = Vec::new();
            for &suite in suites {
                let report = run_suite(suite);
                let path = dir.join(format!("{}_{}.json", config.name, suite.tag()));
                write(&path, serde_json::to_string_pretty(&report).expect("report serializes").as_bytes())?;
                reports.push(report);
            }
            return Ok(RunOutcome::Verify(reports));
        }
        Experiment::Shp { n, a, b, c, d, gains, baseline_objective } => {
            let problem = HardProblem::new(*n, a.clone(), b.clone(), c.clone(), d.clone())?;
            let theta0 = ParamVector::zeros(*n);
            let (g, runs) = race(config, &problem, &theta0, gains, *baseline_objective)?;
            let dist_sq = problem.theta_star(0)?.norm_sq();
            (g, runs, reference_curves(*n, dist_sq, config.iters))
        }
        Experiment::Deblur { rows, cols, image, psf, delta, gains, baseline_objective } => {
            let img = load_image(image, *rows, *cols, config.seed)?;
            let stream = DeblurStream::new(&img, psf.clone(), delta.clone())?;
            let theta0: ParamVector<Complex64> = stream.sample(0)?.y;
            let (g, runs) = race(config, &stream, &theta0, gains, *baseline_objective)?;
            (g, runs, Vec::new())
        }
        Experiment::Synth { dim, max_magnitude, gains, baseline_objective } => {
            let stream = adversarial_stream(config.seed, *dim, *max_magnitude)?;
            let theta0 = ParamVector::zeros(*dim);
            let (g, runs) = race(config, &stream, &theta0, gains, *baseline_objective)?;
            (g, runs, Vec::new())
        }
    };

    let mut files = Vec::new();
    for (trace, summary) in &runs {
        let path = dir.join(format!("{}_{}.csv", config.name, summary.method.tag()));
        trace.write(&path)?;
        files.push(path);
    }
    let traces: Vec<&Trace> = runs.iter().map(|(t, _)| t).collect();
    let metric = Metric::common(&traces);
    let mut series: Vec<Series> = runs
        .iter()
        .map(|(t, s)| series_from_trace(t, metric, s.method.display_name().into(), method_color(s.method).into()))
        .collect();
    if metric == Metric::NormalizedLossGap {
        series.extend(references);
    }
    let svg_path = dir.join(format!("{}.svg", config.name));
    write(&svg_path, render_svg(&config.name, metric.label(), &series)?.as_bytes())?;
    files.push(svg_path);

    let summary =
        RunSummary { name: config.name.clone(), gains, methods: runs.into_iter().map(|(_, s)| s).collect(), files };
    let path = dir.join(format!("{}_summary.json", config.name));
    write(&path, serde_json::to_string_pretty(&summary).expect("summary serializes").as_bytes())?;
    Ok(RunOutcome::Traces(summary))
}
