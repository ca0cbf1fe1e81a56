//! Command-line front end: `run`, `gradcheck` and `sweep`.
//!
//! Exit codes: 0 on success, 1 when a run fails or a gradient check exceeds
//! its tolerance, 2 when the configuration or arguments are invalid.

pub mod gradcheck;
pub mod run;
pub mod sweep;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::config::ExperimentConfig;
use crate::error::Error;
use crate::nn::{Gradients, GroupKind, WeightGroup};

pub use gradcheck::{run_gradcheck, GradcheckReport, Preset};
pub use run::{run_to_dir, run_with_progress, FlagLine, RunOutput};
pub use sweep::{run_sweep, Axis};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "backdoor-lab",
    version,
    about = "Federated backdoor experiments and anomaly localization"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one experiment and write its metrics.
    Run {
        config: PathBuf,
        /// Suppress per-round progress lines.
        #[arg(long, short)]
        quiet: bool,
    },
    /// Compare backpropagation with finite differences.
    Gradcheck {
        #[arg(long, value_enum, default_value_t = Preset::Mlp)]
        arch: Preset,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Add 1e-3 to one group's gradient before comparing, e.g. `2:bias`.
        #[arg(long, hide = true)]
        corrupt: Option<String>,
    },
    /// Run one experiment per value of a single axis.
    Sweep {
        config: PathBuf,
        #[arg(long, value_enum)]
        axis: Axis,
        /// Comma-separated values, e.g. `0.1,0.01,0.001` or `1/3,1/6`.
        #[arg(long, allow_hyphen_values = true)]
        values: String,
    },
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => EXIT_INVALID,
        _ => EXIT_FAILURE,
    }
}

fn parse_group(text: &str) -> Result<WeightGroup, String> {
    let (layer, kind) = text
        .split_once(':')
        .ok_or("expected <layer>:<bias|weights>")?;
    let layer_index = layer.parse().map_err(|e| format!("{e}"))?;
    let kind = match kind {
        "bias" => GroupKind::Bias,
        "weights" => GroupKind::Weights,
        other => return Err(format!("unknown group kind {other:?}")),
    };
    Ok(WeightGroup { layer_index, kind })
}

/// Adds `1e-3` to every element of `group`.
pub fn corrupt_group(grads: &mut Gradients, group: WeightGroup) {
    if let Some(layer) = group
        .layer_index
        .checked_sub(1)
        .and_then(|i| grads.layers.get_mut(i))
    {
        let t = match group.kind {
            GroupKind::Bias => &mut layer.bias,
            GroupKind::Weights => &mut layer.weights,
        };
        *t = t.map(|v| v + 1e-3);
    }
}

/// Parses `std::env::args` and runs the chosen command.
pub fn main() -> i32 {
    match Cli::try_parse() {
        Ok(cli) => execute(cli),
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() {
                EXIT_INVALID
            } else {
                EXIT_OK
            }
        }
    }
}

pub fn execute(cli: Cli) -> i32 {
    match cli.command {
        Command::Run { config, quiet } => cmd_run(&config, quiet),
        Command::Gradcheck {
            arch,
            seed,
            corrupt,
        } => cmd_gradcheck(arch, seed, corrupt.as_deref()),
        Command::Sweep {
            config,
            axis,
            values,
        } => cmd_sweep(&config, axis, &values),
    }
}

fn load(path: &std::path::Path) -> Result<ExperimentConfig, i32> {
    ExperimentConfig::load(path)
        .map(ExperimentConfig::with_env_overrides)
        .map_err(|e| {
            eprintln!("error: {e}");
            exit_code(&e)
        })
}

pub fn cmd_run(path: &std::path::Path, quiet: bool) -> i32 {
    let cfg = match load(path) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let result = run_with_progress(&cfg, |r| {
        if !quiet {
            println!(
                "round {:>3}  main acc {:.4}  backdoor acc {:.4}  main loss {:.4}",
                r.round_index, r.joint_main_accuracy, r.joint_backdoor_accuracy, r.joint_main_loss
            );
        }
    });
    match result {
        Ok(out) => {
            if !quiet {
                println!("wrote {}", out.dir.display());
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn cmd_gradcheck(preset: Preset, seed: u64, corrupt: Option<&str>) -> i32 {
    let group = match corrupt.map(parse_group).transpose() {
        Ok(g) => g,
        Err(e) => {
            eprintln!("error: --corrupt: {e}");
            return EXIT_INVALID;
        }
    };
    let hook = group.map(|g| move |grads: &mut Gradients| corrupt_group(grads, g));
    let report = match run_gradcheck(
        preset,
        seed,
        hook.as_ref().map(|h| h as &dyn Fn(&mut Gradients)),
    ) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_FAILURE;
        }
    };
    print!("{report}");
    match report.worst() {
        Some((case, g)) if !report.passed() => {
            eprintln!(
                "FAIL: {} group {} element {}: analytic {:.6e}, numeric {:.6e}, relative error {:.3e} (tolerance {:.0e})",
                case.name,
                g.group,
                g.worst_index,
                g.analytic,
                g.numeric,
                g.max_relative_error,
                gradcheck::TOLERANCE
            );
            EXIT_FAILURE
        }
        _ => {
            println!("ok: max relative error {:.3e}", report.max_relative_error());
            EXIT_OK
        }
    }
}

pub fn cmd_sweep(path: &std::path::Path, axis: Axis, values: &str) -> i32 {
    let cfg = match load(path) {
        Ok(c) => c,
        Err(code) => return code,
    };
    match run_sweep(&cfg, axis, &sweep::parse_values(values)) {
        Ok(entries) => {
            for e in &entries {
                println!("{axis}={}: {}", e.value.trim(), e.output.dir.display());
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
