use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hotune_cli::{output_root, plot, run_experiment, run_suite, ExperimentConfig, RunOutcome, Suite};

/// Streaming-regression optimizers: experiments, certificate checks and plots.
#[derive(Parser)]
#[command(name = "hotune", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config; outputs go under $HOTUNE_OUTPUT_ROOT (default: cwd).
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run one property suite and print its JSON report.
    Verify {
        #[arg(long, value_enum)]
        suite: Suite,
    },
    /// Overlay CSV traces in one SVG.
    Plot {
        #[arg(long = "in", num_args = 1.., required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

const CHECK_FAILED: u8 = 1;
const USAGE_ERROR: u8 = 2;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config } => ExperimentConfig::load(&config).and_then(|c| run_experiment(&c, &output_root())).map(|out| {
            match &out {
                RunOutcome::Traces(s) => {
                    for m in &s.methods {
                        let status = match (m.diverged_at, m.certified, m.violations) {
                            (Some(k), ..) => format!("diverged at k={k}"),
                            (None, true, 0) => "certified".into(),
                            (None, true, v) => format!("{v} certificate violations"),
                            (None, false, _) => "finished".into(),
                        };
                        println!("{:<16} final loss {:.6e}  {status}", m.method.tag(), m.final_loss);
                    }
                    for f in &s.files {
                        println!("wrote {}", f.display());
                    }
                }
                RunOutcome::Verify(reports) => {
                    for r in reports {
                        println!("{:<16} {}", r.suite, if r.passed { "pass" } else { "FAIL" });
                    }
                }
            }
            out.passed()
        }),
        Command::Verify { suite } => {
            let report = run_suite(suite);
            println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            Ok(report.passed)
        }
        Command::Plot { inputs, out } => plot::plot_files(&inputs, &out).map(|()| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(CHECK_FAILED),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(USAGE_ERROR)
        }
    }
}
