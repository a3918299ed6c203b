//! `chemostat`: simulate, analyze and sweep trait-structured chemostat runs.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use crate::config::Layer;

#[derive(Debug, Parser)]
#[command(name = "chemostat", version, about)]
struct Cli {
    /// Flat TOML/JSON config file, or a previous run's manifest.json.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Worker threads for sweeps and alpha studies (default: available parallelism).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Override any config key, e.g. `--set n_nodes=500`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Default)]
struct SimFlags {
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    control: Option<String>,
    #[arg(long)]
    k0: Option<f64>,
}

#[derive(Debug, Args)]
struct SweepFlags {
    #[arg(long)]
    min: Option<f64>,
    #[arg(long)]
    max: Option<f64>,
    #[arg(long)]
    count: Option<usize>,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    refine_width: Option<f64>,
    #[arg(long)]
    refine_count: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate one closed-loop trajectory.
    Simulate(SimFlags),
    /// Principal eigenpair and K of the eigenfunction.
    Eigen {
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long)]
        tol: Option<f64>,
        /// Also write phi.csv.
        #[arg(long)]
        phi: bool,
    },
    /// Sweep the auxostat IV set-point.
    SweepSigma(SweepFlags),
    /// Sweep constant dilution rates.
    SweepU(SweepFlags),
    /// One trajectory per mutation rate; K(t) side by side.
    AlphaStudy {
        /// Comma-separated mutation rates.
        #[arg(long, value_delimiter = ',')]
        alphas: Option<Vec<f64>>,
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long)]
        sigma: Option<f64>,
    },
}

fn put<T: Into<Value>>(layer: &mut Layer, key: &str, value: Option<T>) {
    if let Some(v) = value {
        layer.insert(key.to_string(), v.into());
    }
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::Eigen { .. } => "eigen",
            Command::SweepSigma(_) => "sweep-sigma",
            Command::SweepU(_) => "sweep-u",
            Command::AlphaStudy { .. } => "alpha-study",
        }
    }

    fn flag_layer(&self) -> Layer {
        let mut l = Layer::new();
        match self {
            Command::Simulate(f) => {
                put(&mut l, "alpha", f.alpha);
                put(&mut l, "sigma", f.sigma);
                put(&mut l, "horizon", f.horizon);
                put(&mut l, "dt", f.dt);
                put(&mut l, "control", f.control.clone());
                put(&mut l, "k0", f.k0);
            }
            Command::Eigen { alpha, sigma, tol, phi } => {
                put(&mut l, "alpha", *alpha);
                put(&mut l, "sigma", *sigma);
                put(&mut l, "tol", *tol);
                if *phi {
                    put(&mut l, "write_phi", Some(true));
                }
            }
            Command::SweepSigma(f) | Command::SweepU(f) => {
                put(&mut l, "sweep_min", f.min);
                put(&mut l, "sweep_max", f.max);
                put(&mut l, "sweep_count", f.count.map(|c| c as u64));
                put(&mut l, "horizon", f.horizon);
                put(&mut l, "alpha", f.alpha);
                put(&mut l, "refine_width", f.refine_width);
                put(&mut l, "refine_count", f.refine_count.map(|c| c as u64));
            }
            Command::AlphaStudy { alphas, horizon, sigma } => {
                put(&mut l, "alphas", alphas.clone());
                put(&mut l, "horizon", *horizon);
                put(&mut l, "sigma", *sigma);
            }
        }
        l
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {:#}", failure.error);
            ExitCode::from(failure.code)
        }
    }
}
