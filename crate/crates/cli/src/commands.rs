use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use gch_core::io::{SnapshotRecord, SolverKind};
use gch_core::lagrangian::{eval_u_at, EulerianField, LagrangianState};
use gch_core::nonlocal::trapezoid_weights;
use gch_core::verify::{run_suite, VerificationReport};
use serde::Serialize;

use crate::config::{resolve, Resolved, RunConfig, OUT_ENV};
use crate::error::{CliError, Result};
use crate::run::{run_solver, simulate};

/// Reads and resolves a configuration file, honouring the output override.
pub fn load(path: &Path) -> Result<Resolved> {
    let (cfg, src) = RunConfig::load(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let over = std::env::var_os(OUT_ENV).map(PathBuf::from);
    resolve(&cfg, &src, base, over)
}

/// Runs every configured solver; fails with the first solver error after
/// writing whatever the other solvers produced.
pub fn cmd_simulate(r: &Resolved) -> Result<String> {
    let res = simulate(r)?;
    let mut out = String::new();
    for (kind, o) in &res.outcomes {
        match o {
            Ok(o) => writeln!(out, "{}: {} snapshots, dt = {:.3e}", kind.name(), o.times().len(), o.dt()),
            Err(e) => writeln!(out, "{}: {}", kind.name(), e.name()),
        }
        .unwrap();
    }
    writeln!(out, "wrote {}", res.out_dir.join("manifest.json").display()).unwrap();
    res.first_error()?;
    Ok(out)
}

/// Lagrangian snapshots of a previous run, sorted by file name.
pub fn load_run(dir: &Path) -> Result<Vec<LagrangianState>> {
    let sub = dir.join(SolverKind::Lagrangian.name());
    let entries = fs::read_dir(&sub).map_err(|e| CliError::MissingArtifacts(format!("{}: {e}", sub.display())))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            let name = p.file_name().and_then(|n| n.to_str()).unwrap_or("");
            name.starts_with("snapshot_") && name.ends_with(".json")
        })
        .collect();
    if paths.is_empty() {
        return Err(CliError::MissingArtifacts(format!("no snapshot_*.json in {}", sub.display())));
    }
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let text = fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
            Ok(SnapshotRecord::from_json(&text)?.to_lagrangian()?)
        })
        .collect()
}

#[derive(Serialize)]
struct VerifyFile<'a> {
    source: String,
    snapshots: usize,
    n: usize,
    report: &'a VerificationReport,
}

pub struct VerifyOutcome {
    pub report: VerificationReport,
    pub text: String,
}

/// Runs the verification suite on a stored run, or on a fresh Lagrangian
/// run sampled at every step when `run_dir` is absent. Writes
/// `verify_report.{json,txt}`.
pub fn cmd_verify(r: &Resolved, run_dir: Option<&Path>) -> Result<VerifyOutcome> {
    let (states, source, dir) = match run_dir {
        Some(d) => (load_run(d)?, d.display().to_string(), d.to_path_buf()),
        None => {
            let steps = ((r.t_end / r.dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
            let every = Resolved { snapshots: (0..=steps).map(|i| r.t_end * i as f64 / steps as f64).collect(), ..r.clone() };
            let o = run_solver(SolverKind::Lagrangian, &every)?;
            (o.lagrangian_states().expect("lagrangian outcome"), String::from("inline"), r.out_dir.clone())
        }
    };
    let report = run_suite(&states, &r.params, &r.tolerances)?;
    let text = report.summary();
    fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let file = VerifyFile { source, snapshots: states.len(), n: states[0].len(), report: &report };
    let json = serde_json::to_string_pretty(&file).expect("report serializes");
    let path = dir.join("verify_report.json");
    fs::write(&path, json).map_err(|e| CliError::io(&path, e))?;
    let path = dir.join("verify_report.txt");
    fs::write(&path, &text).map_err(|e| CliError::io(&path, e))?;
    Ok(VerifyOutcome { report, text })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Distance {
    pub t: f64,
    pub solver_a: SolverKind,
    pub solver_b: SolverKind,
    pub l2: f64,
    pub linf: f64,
    pub rel_l2: f64,
}

/// Distances between two fields on a uniform grid over their common span.
pub fn field_distance(a: &EulerianField, b: &EulerianField) -> Result<(f64, f64, f64)> {
    let (lo, hi) = (a.span().0.max(b.span().0), a.span().1.min(b.span().1));
    if !(hi > lo) {
        return Err(CliError::WindowMismatch(format!("fields at T = {} do not overlap", a.t)));
    }
    let m = a.x.len().max(b.x.len());
    let h = (hi - lo) / (m - 1) as f64;
    let w = trapezoid_weights(m, h);
    let (mut l2, mut linf, mut norm) = (0.0, 0.0f64, 0.0);
    for (i, wi) in w.iter().enumerate() {
        let x = if i == m - 1 { hi } else { lo + i as f64 * h };
        let (ua, ub) = (eval_u_at(a, x)?, eval_u_at(b, x)?);
        l2 += wi * (ua - ub) * (ua - ub);
        linf = linf.max((ua - ub).abs());
        norm += wi * ua * ua;
    }
    let rel = if norm > 0.0 { (l2 / norm).sqrt() } else { 0.0 };
    Ok((l2.sqrt(), linf, rel))
}

/// Runs at least two solvers and reports pairwise distances at every snapshot.
pub fn cmd_compare(r: &Resolved) -> Result<(Vec<Distance>, String)> {
    if r.solvers.len() < 2 {
        return Err(CliError::config(None, "solver.kind", "compare needs at least two solvers"));
    }
    let res = simulate(r)?;
    let out_dir = res.out_dir.clone();
    let outcomes = res.first_error()?;
    let fields: Vec<Vec<EulerianField>> = outcomes.iter().map(|o| o.fields(r)).collect::<Result<_>>()?;
    let tol = 0.5 * outcomes.iter().map(|o| o.dt()).fold(0.0, f64::max);
    let mut rows = Vec::new();
    for i in 0..outcomes.len() {
        for j in i + 1..outcomes.len() {
            for (fa, fb) in fields[i].iter().zip(&fields[j]) {
                if (fa.t - fb.t).abs() > tol {
                    return Err(CliError::WindowMismatch(format!(
                        "{} at T = {} against {} at T = {}",
                        outcomes[i].kind().name(),
                        fa.t,
                        outcomes[j].kind().name(),
                        fb.t
                    )));
                }
                let (l2, linf, rel_l2) = field_distance(fa, fb)?;
                rows.push(Distance { t: fa.t, solver_a: outcomes[i].kind(), solver_b: outcomes[j].kind(), l2, linf, rel_l2 });
            }
        }
    }
    let mut csv = String::from("t,solver_a,solver_b,l2,linf,rel_l2\n");
    let mut table = format!("{:>10} {:>10} {:>10} {:>12} {:>12} {:>12}\n", "t", "a", "b", "l2", "linf", "rel_l2");
    for d in &rows {
        writeln!(csv, "{},{},{},{},{},{}", d.t, d.solver_a.name(), d.solver_b.name(), d.l2, d.linf, d.rel_l2).unwrap();
        writeln!(table, "{:>10.4} {:>10} {:>10} {:>12.4e} {:>12.4e} {:>12.4e}", d.t, d.solver_a.name(), d.solver_b.name(), d.l2, d.linf, d.rel_l2).unwrap();
    }
    let path = out_dir.join("compare.csv");
    fs::write(&path, csv).map_err(|e| CliError::io(&path, e))?;
    Ok((rows, table))
}
