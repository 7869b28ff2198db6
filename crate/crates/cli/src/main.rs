//! `hilbert`: command-line front end for Hilbert geometry computations.
//!
//! Results go to stdout as JSON with the effective configuration echoed under
//! `"config"`; point clouds go to `--out` as CSV. Exit codes: 0 on success,
//! 2 on invalid input, 3 on numerical failure.

mod commands;
mod input;

use std::collections::BTreeMap;
use std::io::Write;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand, ValueEnum};
use hilbert_core::Error as GeomError;
use serde_json::json;

use crate::commands::{default_samples, default_tolerances, RunConfig};
use crate::input::{usage, Usage};

#[derive(Parser, Debug)]
#[command(name = "hilbert", version, about = "Hilbert geometry on properly convex domains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Sample budget (meaning depends on the command).
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Tolerance override `name=value`; also accepted as `--tol.<name> <value>`.
    #[arg(long = "tol", global = true, value_name = "NAME=VALUE")]
    tol: Vec<String>,
    /// CSV destination for point clouds.
    #[arg(long, global = true)]
    out: Option<String>,
}

#[derive(Subcommand, Debug, serde::Serialize)]
#[serde(untagged)]
pub enum Command {
    /// Hilbert distance between two interior points.
    Distance {
        #[arg(long)]
        scene: String,
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
    },
    /// Elliptic, parabolic or hyperbolic, with translation length.
    Classify {
        #[arg(long)]
        scene: String,
        #[arg(long)]
        matrix: String,
    },
    /// Boundary sample of a metric ball.
    Ball {
        #[arg(long)]
        scene: String,
        #[arg(long)]
        center: String,
        #[arg(long)]
        radius: f64,
    },
    /// Horosphere sample at a boundary point, over a grid of horizontal coordinates.
    Horosphere {
        #[arg(long)]
        scene: String,
        #[arg(long)]
        point: String,
        /// Supporting covector at the point; found automatically when absent.
        #[arg(long)]
        covector: Option<String>,
        #[arg(long, default_value_t = 1.0)]
        level: f64,
        /// Half-width of the horizontal grid.
        #[arg(long, default_value_t = 1.0)]
        width: f64,
        /// Point whose height is reported.
        #[arg(long)]
        query: Option<String>,
    },
    /// Busemann function toward a C1 boundary point.
    Busemann {
        #[arg(long)]
        scene: String,
        #[arg(long)]
        point: String,
        #[arg(long)]
        query: String,
        #[arg(long = "t-max", default_value_t = 20.0)]
        t_max: f64,
    },
    /// Dual domain as scene JSON.
    Dual {
        #[arg(long)]
        scene: String,
    },
    /// Monte Carlo characteristic function, with the closed form when one exists.
    Charfun {
        #[arg(long)]
        scene: String,
        #[arg(long)]
        at: String,
    },
    /// Busemann volume of a metric ball.
    Volume {
        #[arg(long)]
        scene: String,
        #[arg(long)]
        center: String,
        #[arg(long)]
        radius: f64,
        /// Directions per density estimate on bodies without an exact density.
        #[arg(long, default_value_t = 256)]
        directions: usize,
    },
    /// Thinness of a straight triangle and whether it is properly embedded.
    Thinness {
        #[arg(long)]
        scene: String,
        /// Three points as JSON.
        #[arg(long)]
        triangle: String,
        #[arg(long)]
        incenter: bool,
    },
    /// Randomized search for a fat triangle.
    Petsearch {
        #[arg(long)]
        scene: String,
        #[arg(long, default_value_t = 3.0)]
        delta: f64,
        #[arg(long, default_value_t = 200)]
        budget: usize,
    },
    /// Injectivity estimates and thin flags on a grid (`--samples` points per axis).
    Thinpart {
        #[arg(long)]
        scene: String,
        /// Group JSON with a "generators" list.
        #[arg(long)]
        group: String,
        #[arg(long, default_value_t = 4)]
        length: usize,
        #[arg(long, default_value_t = 0.3)]
        eps: f64,
        #[arg(long, default_value_t = 0.02)]
        margin: f64,
    },
    /// Worked demonstrations.
    Demo {
        #[arg(value_enum)]
        name: DemoName,
        #[arg(long, default_value_t = 2)]
        n: usize,
        /// Orbit grid `{-extent..extent}^n`.
        #[arg(long, default_value_t = 2)]
        extent: u32,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DemoName {
    EllipsoidCharacterization,
}

fn tolerances(cli: &Cli) -> Result<BTreeMap<String, f64>> {
    let mut tols = default_tolerances(&cli.command);
    for item in &cli.tol {
        let (name, value) = item.split_once('=').ok_or_else(|| usage(format!("tolerance `{item}` is not name=value")))?;
        let value: f64 = value.parse().map_err(|_| usage(format!("tolerance `{name}` is not a number")))?;
        if !(value >= 0.0 && value.is_finite()) {
            return Err(usage(format!("tolerance `{name}` must be finite and non-negative")));
        }
        match tols.get_mut(name) {
            Some(slot) => *slot = value,
            None => {
                let known: Vec<&String> = tols.keys().collect();
                return Err(usage(format!("unknown tolerance `{name}` for this command; known: {known:?}")));
            }
        }
    }
    Ok(tols)
}

fn execute(cli: &Cli) -> Result<String> {
    let cfg = RunConfig {
        command: commands::name(&cli.command),
        seed: cli.seed,
        samples: cli.samples.or_else(|| default_samples(&cli.command)),
        tolerances: tolerances(cli)?,
        out: cli.out.clone(),
        params: serde_json::to_value(&cli.command)?,
    };
    let outcome = commands::run(&cli.command, &cfg)?;
    if let (Some(path), Some(csv)) = (&cli.out, &outcome.csv) {
        std::fs::write(path, csv).map_err(|e| usage(format!("cannot write `{path}`: {e}")))?;
    }
    let mut result = outcome.result;
    result["config"] = json!(cfg);
    Ok(serde_json::to_string_pretty(&result)?)
}

/// 2 for bad input, 3 for numerical failure.
fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<Usage>().is_some() || cause.downcast_ref::<serde_json::Error>().is_some() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<GeomError>() {
            return match e {
                GeomError::NumericalFailure(_)
                | GeomError::DegenerateConfiguration(_)
                | GeomError::TargetNotMet { .. }
                | GeomError::DegeneratePencil(_)
                | GeomError::EmptySlice
                | GeomError::ExplosionGuard(_)
                | GeomError::NoneFound
                | GeomError::BudgetExhausted => 3,
                _ => 2,
            };
        }
    }
    3
}

fn main() -> ExitCode {
    let args = input::expand_tolerance_flags(std::env::args());
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(&cli) {
        Ok(text) => {
            // A closed pipe downstream is not a failure of the computation.
            let _ = writeln!(std::io::stdout().lock(), "{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
