//! CSV writers for trajectories, snapshots, sweeps and eigenpairs.
//!
//! Numbers are written with 17 significant digits in scientific notation,
//! which round-trips every `f64` and does not depend on locale. Absent
//! values are empty fields.

use std::io::{self, Write};

use crate::dynamics::Trajectory;
use crate::grid::TraitGrid;
use crate::search::SweepResult;
use crate::spectral::EigenPair;

pub const TRAJECTORY_HEADER: &str = "t,s,m,u,K";
pub const SNAPSHOT_HEADER: &str = "z,f";
pub const SWEEP_HEADER: &str = "param,entry_time,held,washout_time";
pub const EIGEN_HEADER: &str = "lambda1,K,residual,iterations";
pub const PHI_HEADER: &str = "z,phi";
pub const K_SERIES_HEADER: &str = "t,K";

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// Short decimal label for file names (`0.001`, `12.5`).
pub fn label(v: f64) -> String {
    let s = format!("{v:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() || s == "-" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

pub fn snapshot_file_name(t: f64) -> String {
    format!("f_{}.csv", label(t))
}

pub fn k_series_file_name(alpha: f64) -> String {
    format!("k_vs_t_alpha_{}.csv", label(alpha))
}

pub fn write_trajectory<W: Write>(mut w: W, traj: &Trajectory) -> io::Result<()> {
    writeln!(w, "{TRAJECTORY_HEADER}")?;
    for s in &traj.samples {
        writeln!(
            w,
            "{},{},{},{},{}",
            fmt_f64(s.t),
            fmt_f64(s.s),
            fmt_f64(s.m),
            fmt_f64(s.u),
            fmt_f64(s.k)
        )?;
    }
    w.flush()
}

pub fn write_node_vector<W: Write>(mut w: W, header: &str, grid: &TraitGrid, values: &[f64]) -> io::Result<()> {
    writeln!(w, "{header}")?;
    for (z, v) in grid.nodes().iter().zip(values) {
        writeln!(w, "{},{}", fmt_f64(*z), fmt_f64(*v))?;
    }
    w.flush()
}

pub fn write_snapshot<W: Write>(w: W, grid: &TraitGrid, f: &[f64]) -> io::Result<()> {
    write_node_vector(w, SNAPSHOT_HEADER, grid, f)
}

pub fn write_phi<W: Write>(w: W, grid: &TraitGrid, phi: &[f64]) -> io::Result<()> {
    write_node_vector(w, PHI_HEADER, grid, phi)
}

pub fn write_sweep<W: Write>(mut w: W, result: &SweepResult) -> io::Result<()> {
    writeln!(w, "{SWEEP_HEADER}")?;
    for row in &result.rows {
        writeln!(
            w,
            "{},{},{},{}",
            fmt_f64(row.param),
            fmt_opt(row.entry_time),
            row.held,
            fmt_opt(row.washout_time)
        )?;
    }
    w.flush()
}

pub fn write_eigen<W: Write>(mut w: W, pair: &EigenPair, k: f64) -> io::Result<()> {
    writeln!(w, "{EIGEN_HEADER}")?;
    writeln!(
        w,
        "{},{},{},{}",
        fmt_f64(pair.lambda1),
        fmt_f64(k),
        fmt_f64(pair.residual),
        pair.iterations
    )?;
    w.flush()
}

pub fn write_k_series<W: Write>(mut w: W, traj: &Trajectory) -> io::Result<()> {
    writeln!(w, "{K_SERIES_HEADER}")?;
    for s in &traj.samples {
        writeln!(w, "{},{}", fmt_f64(s.t), fmt_f64(s.k))?;
    }
    w.flush()
}

/// Time column followed by one `K` column per trajectory. Shorter
/// trajectories leave trailing fields empty.
pub fn write_alpha_study<W: Write>(mut w: W, runs: &[(f64, &Trajectory)]) -> io::Result<()> {
    write!(w, "t")?;
    for (alpha, _) in runs {
        write!(w, ",K_alpha_{}", label(*alpha))?;
    }
    writeln!(w)?;
    let rows = runs.iter().map(|(_, t)| t.samples.len()).max().unwrap_or(0);
    for i in 0..rows {
        let t = runs
            .iter()
            .find_map(|(_, tr)| tr.samples.get(i).map(|s| s.t))
            .expect("some run has this row");
        write!(w, "{}", fmt_f64(t))?;
        for (_, tr) in runs {
            write!(w, ",{}", fmt_opt(tr.samples.get(i).map(|s| s.k)))?;
        }
        writeln!(w)?;
    }
    w.flush()
}
