use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use anyhow::{anyhow, Context};
use serde::Serialize;
use trait_chemostat::output;
use trait_chemostat::search::open_interval;
use trait_chemostat::{
    entry_time, principal_eigenpair, refine_best, run_sweep, simulate, Family, SweepBase, SweepSpec,
};

use crate::config::{self, Layer, RunConfig};
use crate::{Cli, Command};

pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;

pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl Failure {
    fn usage(error: impl Into<anyhow::Error>) -> Self {
        Self {
            code: EXIT_USAGE,
            error: error.into(),
        }
    }

    fn io(error: impl Into<anyhow::Error>) -> Self {
        Self {
            code: EXIT_FAILURE,
            error: error.into(),
        }
    }
}

impl From<trait_chemostat::Error> for Failure {
    fn from(e: trait_chemostat::Error) -> Self {
        let code = if e.is_numerical() { EXIT_NUMERICAL } else { EXIT_USAGE };
        Self {
            code,
            error: e.into(),
        }
    }
}

/// Everything needed to reproduce a run.
#[derive(Debug, Serialize)]
struct RunManifest<'a> {
    command: &'a str,
    version: &'a str,
    out_dir: String,
    wall_seconds: f64,
    config: &'a RunConfig,
}

fn command_defaults(command: &Command) -> RunConfig {
    let mut cfg = RunConfig::default();
    match command {
        Command::Simulate(_) | Command::AlphaStudy { .. } => {}
        Command::Eigen { .. } => cfg.alpha = 0.01,
        Command::SweepSigma(_) => {
            cfg.alpha = 0.001;
            cfg.horizon = 60.0;
        }
        Command::SweepU(_) => {
            cfg.alpha = 0.001;
            cfg.horizon = 60.0;
            cfg.sweep_max = 8.0;
            cfg.sweep_count = 800;
        }
    }
    cfg
}

fn resolve_config(cli: &Cli) -> Result<RunConfig, Failure> {
    let mut layers: Vec<Layer> = Vec::new();
    if let Some(path) = &cli.config {
        layers.push(config::read_layer(path).map_err(Failure::usage)?);
    }
    let mut flags = cli.command.flag_layer();
    for assignment in &cli.set {
        let (k, v) = config::parse_assignment(assignment).map_err(Failure::usage)?;
        flags.insert(k, v);
    }
    layers.push(flags);
    config::resolve(&command_defaults(&cli.command), &layers).map_err(Failure::usage)
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, Failure> {
    let path = dir.join(name);
    File::create(&path)
        .map(BufWriter::new)
        .with_context(|| format!("cannot create {}", path.display()))
        .map_err(Failure::io)
}

fn write_manifest(dir: &Path, command: &str, cfg: &RunConfig, started: Instant) -> Result<(), Failure> {
    let manifest = RunManifest {
        command,
        version: env!("CARGO_PKG_VERSION"),
        out_dir: dir.display().to_string(),
        wall_seconds: started.elapsed().as_secs_f64(),
        config: cfg,
    };
    let w = create(dir, "manifest.json")?;
    serde_json::to_writer_pretty(w, &manifest).map_err(Failure::io)
}

fn workers(cli: &Cli) -> usize {
    cli.workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

pub fn run(cli: &Cli) -> Result<(), Failure> {
    let started = Instant::now();
    let mut cfg = resolve_config(cli)?;
    let model = cfg.model().map_err(Failure::usage)?;
    cfg.materialize(&model).map_err(Failure::usage)?;
    let out: PathBuf = cli.out.clone();
    fs::create_dir_all(&out)
        .with_context(|| format!("cannot create {}", out.display()))
        .map_err(Failure::io)?;

    match &cli.command {
        Command::Simulate(_) => simulate_cmd(&cfg, model, &out)?,
        Command::Eigen { .. } => eigen_cmd(&cfg, &model, &out)?,
        Command::SweepSigma(_) => sweep_cmd(&cfg, model, &out, Family::AuxostatIv, workers(cli))?,
        Command::SweepU(_) => sweep_cmd(&cfg, model, &out, Family::ConstantU, workers(cli))?,
        Command::AlphaStudy { .. } => alpha_study_cmd(&cfg, model, &out, workers(cli))?,
    }
    write_manifest(&out, cli.command.name(), &cfg, started)
}

fn simulate_cmd(cfg: &RunConfig, model: trait_chemostat::Model, out: &Path) -> Result<(), Failure> {
    let sim = cfg.sim_config();
    let law = cfg.control_law(&model).map_err(Failure::usage)?;
    let init = cfg.initial_state(&model).map_err(Failure::usage)?;
    let traj = simulate(&model, &sim, &law, &init)?;
    output::write_trajectory(create(out, "trajectory.csv")?, &traj).map_err(Failure::io)?;
    for snap in &traj.snapshots {
        output::write_snapshot(create(out, &output::snapshot_file_name(snap.t))?, &model.grid, &snap.f)
            .map_err(Failure::io)?;
    }
    let report = entry_time(&traj, cfg.k0);
    let last = traj.final_sample();
    println!(
        "entry_time={} final_s={} final_m={} final_K={} clamps={} m_law_residual={:e}",
        report.entry_time.map(output::fmt_f64).unwrap_or_default(),
        output::fmt_f64(last.s),
        output::fmt_f64(last.m),
        output::fmt_f64(last.k),
        traj.clamp_count,
        traj.m_law_residual
    );
    Ok(())
}

fn eigen_cmd(cfg: &RunConfig, model: &trait_chemostat::Model, out: &Path) -> Result<(), Failure> {
    let pair = principal_eigenpair(cfg.alpha, cfg.sigma, model, cfg.tol, cfg.max_iter)?;
    let r = model
        .half_saturation()
        .ok_or_else(|| Failure::usage(anyhow!("K needs a half-saturation profile")))?;
    let k = trait_chemostat::k_functional(&model.grid, r, &pair.phi)?;
    output::write_eigen(create(out, "eigen.csv")?, &pair, k).map_err(Failure::io)?;
    output::write_eigen(std::io::stdout().lock(), &pair, k).map_err(Failure::io)?;
    if cfg.write_phi {
        output::write_phi(create(out, "phi.csv")?, &model.grid, &pair.phi).map_err(Failure::io)?;
    }
    Ok(())
}

fn sweep_cmd(
    cfg: &RunConfig,
    model: trait_chemostat::Model,
    out: &Path,
    family: Family,
    workers: usize,
) -> Result<(), Failure> {
    if cfg.sweep_count == 0 || !(cfg.sweep_max > cfg.sweep_min) {
        return Err(Failure::usage(anyhow!(
            "sweep needs count > 0 and max > min (got count {}, [{}, {}])",
            cfg.sweep_count,
            cfg.sweep_min,
            cfg.sweep_max
        )));
    }
    let init = cfg.initial_state(&model).map_err(Failure::usage)?;
    let u_max = cfg.u_max(&model).map_err(Failure::usage)?;
    let spec = SweepSpec {
        family,
        values: open_interval(cfg.sweep_min, cfg.sweep_max, cfg.sweep_count),
        base: SweepBase {
            model: Arc::new(model),
            cfg: cfg.sim_config().without_snapshots(),
            init,
            u_max,
            clamp: cfg.clamp,
            washout_threshold: cfg.washout_threshold,
        },
    };
    let mut result = run_sweep(&spec, workers)?;
    if result.best.is_some() && cfg.refine_width > 0.0 && cfg.refine_count > 0 {
        result = refine_best(&result, &spec, cfg.refine_width, cfg.refine_count, workers)?;
    }
    for row in result.rows.iter().filter(|r| r.failure.is_some()) {
        eprintln!("param {} failed: {}", row.param, row.failure.as_deref().unwrap_or(""));
    }
    output::write_sweep(create(out, "sweep.csv")?, &result).map_err(Failure::io)?;
    match result.best {
        Some((p, t)) => println!("best,{},{}", output::fmt_f64(p), output::fmt_f64(t)),
        None => println!("best,,"),
    }
    Ok(())
}

fn alpha_study_cmd(
    cfg: &RunConfig,
    model: trait_chemostat::Model,
    out: &Path,
    workers: usize,
) -> Result<(), Failure> {
    use par::par_map;

    if cfg.alphas.is_empty() {
        return Err(Failure::usage(anyhow!("alpha-study needs a non-empty alpha list")));
    }
    if let Some(a) = cfg.alphas.iter().find(|a| !(**a >= 0.0)) {
        return Err(Failure::usage(anyhow!("alpha values must be nonnegative, got {a}")));
    }
    let law = cfg.control_law(&model).map_err(Failure::usage)?;
    let init = cfg.initial_state(&model).map_err(Failure::usage)?;
    let runs = par_map(&cfg.alphas, workers, |&alpha| {
        let mut sim = cfg.sim_config().without_snapshots();
        sim.alpha = alpha;
        simulate(&model, &sim, &law, &init)
    });

    let mut ok = Vec::new();
    let mut first_error = None;
    for (alpha, run) in cfg.alphas.iter().zip(runs) {
        match run {
            Ok(traj) => {
                let report = entry_time(&traj, cfg.k0);
                println!(
                    "alpha={} entry_time={} final_K={}",
                    output::label(*alpha),
                    report.entry_time.map(output::fmt_f64).unwrap_or_default(),
                    output::fmt_f64(traj.final_sample().k)
                );
                output::write_k_series(create(out, &output::k_series_file_name(*alpha))?, &traj)
                    .map_err(Failure::io)?;
                ok.push((*alpha, traj));
            }
            Err(e) => {
                eprintln!("alpha={} failed: {e}", output::label(*alpha));
                first_error.get_or_insert(e);
            }
        }
    }
    let refs: Vec<_> = ok.iter().map(|(a, t)| (*a, t)).collect();
    output::write_alpha_study(create(out, "alpha_study.csv")?, &refs).map_err(Failure::io)?;
    match first_error {
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
}

/// Ordered parallel map on scoped threads.
mod par {
    pub fn par_map<T: Sync, R: Send>(items: &[T], workers: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
        let workers = workers.clamp(1, items.len().max(1));
        let chunk = items.len().div_ceil(workers).max(1);
        std::thread::scope(|scope| {
            let handles: Vec<_> = items
                .chunks(chunk)
                .map(|part| scope.spawn(|| part.iter().map(&f).collect::<Vec<R>>()))
                .collect();
            handles
                .into_iter()
                .flat_map(|h| h.join().expect("worker panicked"))
                .collect()
        })
    }
}
