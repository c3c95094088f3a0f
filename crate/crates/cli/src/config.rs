//! Experiment configuration, stored as JSON.

use std::fs;
use std::path::{Path, PathBuf};

use hotune::deblur::{PsfSchedule, SyntheticImage};
use hotune::streams::Schedule;
use hotune::{Method, ObjectiveKind};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// One experiment: a problem family, the methods to race on it and how their
/// gains are chosen.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Prefix of every output file.
    pub name: String,
    pub experiment: Experiment,
    #[serde(default)]
    pub methods: Vec<Method>,
    #[serde(default)]
    pub iters: usize,
    #[serde(default)]
    pub seed: u64,
    /// Relative paths are resolved against the output root.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum Experiment {
    /// Worst-case tridiagonal quadratic with scheduled coefficients, `θ₀ = 0`.
    Shp {
        n: usize,
        a: Schedule,
        #[serde(default = "unit")]
        b: Schedule,
        #[serde(default = "unit")]
        c: Schedule,
        #[serde(default = "unit")]
        d: Schedule,
        gains: GainsMode,
        #[serde(default)]
        baseline_objective: ObjectiveKind,
    },
    /// Frequency-domain deblurring of a known image, `θ₀ = y₀`.
    Deblur {
        rows: usize,
        cols: usize,
        image: ImageSource,
        psf: PsfSchedule,
        delta: Schedule,
        gains: GainsMode,
        #[serde(default)]
        baseline_objective: ObjectiveKind,
    },
    /// Seeded adversarial linear-regression stream, `θ₀ = 0`.
    Synth {
        dim: usize,
        max_magnitude: f64,
        gains: GainsMode,
        #[serde(default)]
        baseline_objective: ObjectiveKind,
    },
    /// Property suites; writes one JSON report per suite.
    Verify { suites: Vec<Suite> },
}

fn unit() -> Schedule {
    Schedule::constant(1.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum ImageSource {
    Synthetic { pattern: SyntheticImage },
    /// Binary 8-bit PGM; must match `rows × cols`.
    Pgm { path: PathBuf },
}

/// How the gains of every method are derived from the problem at `k = 0`
/// (and, for the "max" choices, from the whole horizon).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode", deny_unknown_fields)]
pub enum GainsMode {
    /// Tuner at its stability bound; baselines `ᾱ = γβ`, `β̄ = 1−β`.
    ChoiceA {
        #[serde(default = "default_beta")]
        beta: f64,
        #[serde(default = "default_shp_mu")]
        mu: f64,
    },
    /// Accelerated schedule for the raw loss at `k = 0` with target accuracy `ε`.
    ChoiceB { epsilon: f64 },
    /// Tuner at its stability bound; baselines `ᾱ = γβ/N₀`.
    #[serde(rename = "choice_1")]
    Choice1 {
        #[serde(default = "default_beta")]
        beta: f64,
        #[serde(default = "default_deblur_mu")]
        mu: f64,
    },
    /// Tuner at its stability bound; baselines `ᾱ = γβ/max N_k`.
    #[serde(rename = "choice_2")]
    Choice2 {
        #[serde(default = "default_beta")]
        beta: f64,
        #[serde(default = "default_deblur_mu")]
        mu: f64,
    },
    /// Baselines `ᾱ = 1/‖φ₀‖²`; tuner `γ = 10`, `β = 0.1`.
    #[serde(rename = "choice_3")]
    Choice3 {
        #[serde(default = "default_deblur_mu")]
        mu: f64,
    },
    /// Baselines `ᾱ = 1/max‖φ_k‖²`; tuner `γ = 10`, `β = 0.1`.
    #[serde(rename = "choice_4")]
    Choice4 {
        #[serde(default = "default_deblur_mu")]
        mu: f64,
    },
    /// Explicit gains. Missing baseline gains default to `ᾱ = γβ`, `β̄ = 1−β`.
    Manual {
        gamma: f64,
        beta: f64,
        mu: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alpha_bar: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        beta_bar: Option<f64>,
    },
}

fn default_beta() -> f64 {
    0.1
}

fn default_shp_mu() -> f64 {
    1e-5
}

fn default_deblur_mu() -> f64 {
    1e-20
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Lyapunov,
    Equivalence,
    Bounds,
    DeblurOracle,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::Lyapunov, Suite::Equivalence, Suite::Bounds, Suite::DeblurOracle];

    pub fn tag(self) -> &'static str {
        match self {
            Suite::Lyapunov => "lyapunov",
            Suite::Equivalence => "equivalence",
            Suite::Bounds => "bounds",
            Suite::DeblurOracle => "deblur-oracle",
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let config: Self = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CliError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return bad(format!("name `{}` must be a nonempty file stem", self.name));
        }
        if let Experiment::Verify { suites } = &self.experiment {
            return if suites.is_empty() { bad("verify needs at least one suite".into()) } else { Ok(()) };
        }
        if self.methods.is_empty() {
            return bad("at least one method is required".into());
        }
        if self.iters == 0 {
            return bad("iters must be positive".into());
        }
        for (i, m) in self.methods.iter().enumerate() {
            if self.methods[..i].contains(m) {
                return bad(format!("method {m} listed twice"));
            }
        }
        match &self.experiment {
            Experiment::Shp { n, .. } if *n < 2 => bad(format!("n must be at least 2, got {n}")),
            Experiment::Deblur { rows, cols, .. } if *rows == 0 || *cols == 0 => bad("image must be nonempty".into()),
            Experiment::Synth { dim, max_magnitude, .. } if *dim == 0 || !(*max_magnitude > 0.0) => {
                bad("synth needs dim ≥ 1 and a positive magnitude".into())
            }
            _ => Ok(()),
        }
    }

    /// `output_dir` (default: `name`) joined onto `root`.
    pub fn output_path(&self, root: &Path) -> PathBuf {
        match &self.output_dir {
            Some(dir) if dir.is_absolute() => dir.clone(),
            Some(dir) => root.join(dir),
            None => root.join(&self.name),
        }
    }
}
