//! `sturmian`: command-line experiments for Sturmian Schrodinger operators.

mod commands;
mod config;

use std::ops::RangeInclusive;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;

use config::{EnergySpec, RunConfig, ThetaSpec};

#[derive(Debug, Parser)]
#[command(name = "sturmian", version, about = "Sturmian Schrodinger operator experiments")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// Continued-fraction coefficients of theta, e.g. `1,1,2,1`.
    #[arg(long, global = true, value_parser = config::parse_cf,
          conflicts_with_all = ["theta_cf_periodic", "theta_rational"])]
    theta_cf: Option<ThetaSpec>,
    /// Eventually periodic coefficients `pre:period`; `:1` is the golden mean
    /// (the default).
    #[arg(long, global = true, value_parser = config::parse_periodic,
          conflicts_with = "theta_rational")]
    theta_cf_periodic: Option<ThetaSpec>,
    /// Coefficients of the rational `p/q`, used as a finite prefix.
    #[arg(long, global = true, value_parser = config::parse_rational)]
    theta_rational: Option<ThetaSpec>,
    /// Coupling constant.
    #[arg(long, global = true, default_value = "1", value_parser = config::finite,
          allow_hyphen_values = true)]
    lambda: f64,
    /// Phase: `p/q`, a decimal, `orbit:k`, `theta*p/q` or `p/q+theta*r/s`.
    #[arg(long, global = true, default_value = "0", value_parser = config::phase)]
    beta: sturmian::words::Phase,
    /// Seed for randomized sampling.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Bisection tolerance for band edges.
    #[arg(long, global = true, default_value = "1e-10", value_parser = config::positive)]
    tol: f64,
    /// Output directory.
    #[arg(long, global = true, env = "STURMIAN_OUT_DIR", default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MSide {
    Right,
    Left,
    Whole,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "name", rename_all = "lowercase")]
pub enum Command {
    /// Canonical word, potential window and n-partition.
    Words {
        #[arg(long)]
        level: i64,
        /// Potential window `from..to`; defaults to `1..q_level`.
        #[arg(long, value_parser = window, allow_hyphen_values = true)]
        window: Option<(i64, i64)>,
        /// Also decompose the window into level blocks.
        #[arg(long)]
        partition: bool,
    },
    /// Solution path for a boundary angle; writes a CSV series.
    Evolve {
        #[arg(long, value_parser = config::finite, allow_hyphen_values = true)]
        energy: f64,
        #[arg(long, default_value = "0", value_parser = config::finite, allow_hyphen_values = true)]
        phi: f64,
        /// Number of sites.
        #[arg(long)]
        length: usize,
    },
    /// Bands of the level-n periodic approximant.
    Spectrum {
        #[arg(long)]
        level: usize,
    },
    /// Square witnesses and solution scaling.
    Gordon {
        /// Levels at which the scaling ratio is reported.
        #[arg(long, default_value = "8..16", value_parser = config::level_range)]
        level_range: RangeInclusive<usize>,
        #[arg(long, default_value = "from-bands:16")]
        energies: EnergySpec,
        #[arg(long, default_value_t = 16)]
        angles: usize,
        /// Depth for the empirical trace bound.
        #[arg(long, default_value_t = 12)]
        c_depth: usize,
    },
    /// Power-law exponents of solution growth.
    Alpha {
        #[arg(long, allow_hyphen_values = true)]
        energies: EnergySpec,
        #[arg(long, default_value = "100..1e6", value_parser = config::real_range)]
        l_range: (f64, f64),
        #[arg(long, default_value_t = 50)]
        l_points: usize,
        #[arg(long, default_value_t = 32)]
        angles: usize,
    },
    /// Half-line or whole-line m-function at a complex energy.
    Mfunction {
        /// Spectral parameter, e.g. `0.3+0.01i`.
        #[arg(long, value_parser = complex, allow_hyphen_values = true)]
        z: Complex64,
        /// Truncation.
        #[arg(long = "N", default_value_t = 1000)]
        n: usize,
        #[arg(long, value_enum, default_value = "whole")]
        side: MSide,
    },
    /// Holder bounds on the m-function and the spectral measure.
    Holder {
        /// Exponent; fitted as the minimum over the energies when omitted.
        #[arg(long, value_parser = config::positive)]
        alpha: Option<f64>,
        #[arg(long, default_value = "1e-4..1e-1", value_parser = config::real_range)]
        eps_range: (f64, f64),
        #[arg(long, default_value_t = 7)]
        eps_points: usize,
        #[arg(long, default_value = "from-bands:16")]
        energies: EnergySpec,
    },
}

fn window(s: &str) -> Result<(i64, i64), String> {
    let (a, b) = s.split_once("..").ok_or_else(|| format!("expected from..to, got {s:?}"))?;
    let a: i64 = a.parse().map_err(|_| format!("bad site {a:?}"))?;
    let b: i64 = b.trim_start_matches('=').parse().map_err(|_| format!("bad site {b:?}"))?;
    if a > b {
        return Err(format!("empty window {s}"));
    }
    Ok((a, b))
}

fn complex(s: &str) -> Result<Complex64, String> {
    let z: Complex64 = s.parse().map_err(|_| format!("bad complex number {s:?}"))?;
    if z.im > 0.0 && z.re.is_finite() && z.im.is_finite() {
        Ok(z)
    } else {
        Err(format!("{s} must lie in the upper half-plane"))
    }
}

#[derive(Serialize)]
struct Diagnostic<'a> {
    error: &'a str,
    message: String,
}

fn kind(e: &sturmian::Error) -> &'static str {
    use sturmian::Error::*;
    match e {
        InvalidInput(_) => "invalid-input",
        Resource(_) => "resource",
        Precision { .. } => "precision",
        NumericRange { .. } => "numeric-range",
        Internal(_) => "internal",
        Validation { .. } => "validation",
        Refinement(_) => "refinement",
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let g = cli.global;
    let theta = g
        .theta_cf
        .or(g.theta_cf_periodic)
        .or(g.theta_rational)
        .unwrap_or_else(ThetaSpec::golden);
    let config = RunConfig {
        theta,
        lambda: g.lambda,
        beta: g.beta.to_string(),
        seed: g.seed,
        tol: g.tol,
        out: g.out,
    };
    if let Err(msg) = config.validate() {
        eprintln!("error: {msg}");
        return ExitCode::from(2);
    }
    match commands::run(&config, &cli.command) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(commands::Failure::Module(e)) => {
            let d = Diagnostic {
                error: kind(&e),
                message: e.to_string(),
            };
            eprintln!("{}", serde_json::to_string(&d).expect("diagnostic serializes"));
            ExitCode::from(1)
        }
        Err(commands::Failure::Io(e)) => {
            let d = Diagnostic {
                error: "io",
                message: e.to_string(),
            };
            eprintln!("{}", serde_json::to_string(&d).expect("diagnostic serializes"));
            ExitCode::from(1)
        }
    }
}
