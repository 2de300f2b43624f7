//! Runs the configured solvers and writes their artifacts.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use gch_core::eta::{eta_from_initial, integrate_eta, reconstruct_eta, EtaTrajectory};
use gch_core::eulerian::{integrate_eulerian, EulerianGrid, EulerianTrajectory};
use gch_core::io::{write_energy_csv, SnapshotRecord, SolverKind};
use gch_core::lagrangian::{forward_transform, reconstruct, EulerianField, LagrangianState};
use gch_core::semilinear::{integrate, EnergyReport, Trajectory};
use serde::Serialize;

use crate::config::Resolved;
use crate::error::{CliError, Result};

pub enum Outcome {
    Lagrangian(Trajectory),
    Eta(EtaTrajectory),
    Eulerian(EulerianTrajectory),
}

impl Outcome {
    pub fn kind(&self) -> SolverKind {
        match self {
            Outcome::Lagrangian(_) => SolverKind::Lagrangian,
            Outcome::Eta(_) => SolverKind::Eta,
            Outcome::Eulerian(_) => SolverKind::Eulerian,
        }
    }

    pub fn dt(&self) -> f64 {
        match self {
            Outcome::Lagrangian(t) => t.dt,
            Outcome::Eta(t) => t.dt,
            Outcome::Eulerian(t) => t.dt,
        }
    }

    pub fn times(&self) -> Vec<f64> {
        match self {
            Outcome::Lagrangian(t) => t.snapshots.iter().map(|s| s.state.time).collect(),
            Outcome::Eta(t) => t.snapshots.iter().map(|s| s.state.t).collect(),
            Outcome::Eulerian(t) => t.snapshots.iter().map(|s| s.t).collect(),
        }
    }

    pub fn records(&self, lambda: f64) -> Vec<SnapshotRecord> {
        match self {
            Outcome::Lagrangian(t) => t.snapshots.iter().map(|s| SnapshotRecord::from_lagrangian(&s.state, lambda)).collect(),
            Outcome::Eta(t) => t.snapshots.iter().map(|s| SnapshotRecord::from_eta(&s.state, lambda)).collect(),
            Outcome::Eulerian(t) => t.snapshots.iter().map(SnapshotRecord::from_field).collect(),
        }
    }

    pub fn energy_log(&self) -> Option<&[EnergyReport]> {
        match self {
            Outcome::Lagrangian(t) => Some(&t.energy_log),
            Outcome::Eta(t) => Some(&t.energy_log),
            Outcome::Eulerian(_) => None,
        }
    }

    /// Physical-space fields at the snapshot times.
    pub fn fields(&self, r: &Resolved) -> Result<Vec<EulerianField>> {
        Ok(match self {
            Outcome::Lagrangian(t) => t.snapshots.iter().map(|s| reconstruct(&s.state, &r.params)).collect::<gch_core::Result<_>>()?,
            Outcome::Eta(t) => t.snapshots.iter().map(|s| reconstruct_eta(&s.state, &r.params)).collect::<gch_core::Result<_>>()?,
            Outcome::Eulerian(t) => t.snapshots.clone(),
        })
    }

    pub fn lagrangian_states(&self) -> Option<Vec<LagrangianState>> {
        match self {
            Outcome::Lagrangian(t) => Some(t.snapshots.iter().map(|s| s.state.clone()).collect()),
            _ => None,
        }
    }
}

pub fn run_solver(kind: SolverKind, r: &Resolved) -> Result<Outcome> {
    Ok(match kind {
        SolverKind::Lagrangian => {
            let s0 = forward_transform(&r.samples, r.grid())?;
            Outcome::Lagrangian(integrate(&s0, &r.params, r.t_end, r.dt, &r.snapshots)?)
        }
        SolverKind::Eta => {
            let s0 = eta_from_initial(&r.samples, r.grid())?;
            Outcome::Eta(integrate_eta(&s0, &r.params, r.t_end, r.dt, &r.snapshots)?)
        }
        SolverKind::Eulerian => {
            let g0 = match &r.profile {
                Some(p) => EulerianGrid::from_profile(p, r.half_width_x, r.dx)?,
                None => EulerianGrid::from_data(&r.samples, r.half_width_x, r.dx)?,
            };
            Outcome::Eulerian(integrate_eulerian(&g0, &r.params, r.t_end, r.dt_eulerian, &r.snapshots)?)
        }
    })
}

/// Runs every configured solver concurrently; results keep the configured order.
pub fn run_all(r: &Resolved) -> Vec<(SolverKind, Result<Outcome>)> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = r.solvers.iter().map(|&k| (k, scope.spawn(move || run_solver(k, r)))).collect();
        handles
            .into_iter()
            .map(|(k, h)| (k, h.join().expect("solver thread panicked")))
            .collect()
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SolverEntry {
    pub solver: SolverKind,
    pub dt: Option<f64>,
    pub steps: Option<usize>,
    pub snapshot_times: Vec<f64>,
    pub files: Vec<String>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest<'a> {
    pub cli_version: &'static str,
    pub core_version: &'static str,
    pub config: &'a Resolved,
    pub solvers: Vec<SolverEntry>,
    pub wall_seconds: f64,
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}

/// Writes snapshots and the energy log of one solver under `out/<solver>/`.
pub fn write_outcome(out: &Path, outcome: &Outcome, r: &Resolved) -> Result<Vec<String>> {
    let name = outcome.kind().name();
    let dir = out.join(name);
    create_dir(&dir)?;
    let mut files = Vec::new();
    for (i, rec) in outcome.records(r.params.lambda).iter().enumerate() {
        if r.format.json() {
            let rel = format!("{name}/snapshot_{i:04}.json");
            write_file(&out.join(&rel), &rec.to_json())?;
            files.push(rel);
        }
        if r.format.csv() {
            let rel = format!("{name}/snapshot_{i:04}.csv");
            let path = out.join(&rel);
            let f = fs::File::create(&path).map_err(|e| CliError::io(&path, e))?;
            rec.write_csv(&mut BufWriter::new(f)).map_err(|e| CliError::io(&path, e))?;
            files.push(rel);
        }
    }
    if let Some(log) = outcome.energy_log() {
        let rel = format!("{name}/energy.csv");
        let path = out.join(&rel);
        let f = fs::File::create(&path).map_err(|e| CliError::io(&path, e))?;
        write_energy_csv(&mut BufWriter::new(f), log).map_err(|e| CliError::io(&path, e))?;
        files.push(rel);
    }
    Ok(files)
}

pub struct RunResult {
    pub out_dir: PathBuf,
    pub outcomes: Vec<(SolverKind, Result<Outcome>)>,
}

impl RunResult {
    /// First solver error, if any.
    pub fn first_error(self) -> Result<Vec<Outcome>> {
        self.outcomes.into_iter().map(|(_, o)| o).collect()
    }
}

/// Runs the solvers, writes their artifacts and `manifest.json`.
pub fn simulate(r: &Resolved) -> Result<RunResult> {
    let start = Instant::now();
    create_dir(&r.out_dir)?;
    let outcomes = run_all(r);
    let mut entries = Vec::new();
    for (kind, outcome) in &outcomes {
        entries.push(match outcome {
            Ok(o) => SolverEntry {
                solver: *kind,
                dt: Some(o.dt()),
                steps: Some((r.t_end / o.dt()).round() as usize),
                snapshot_times: o.times(),
                files: write_outcome(&r.out_dir, o, r)?,
                error: None,
            },
            Err(e) => SolverEntry {
                solver: *kind,
                dt: None,
                steps: None,
                snapshot_times: vec![],
                files: vec![],
                error: Some(format!("{}: {e}", e.name())),
            },
        });
    }
    let manifest = Manifest {
        cli_version: env!("CARGO_PKG_VERSION"),
        core_version: gch_core::VERSION,
        config: r,
        solvers: entries,
        wall_seconds: start.elapsed().as_secs_f64(),
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write_file(&r.out_dir.join("manifest.json"), &text)?;
    Ok(RunResult { out_dir: r.out_dir.clone(), outcomes })
}
