//! Snapshot and energy file formats.
//!
//! Snapshot CSV columns: `label,x,u,ux_or_nan,energy_density`, followed by
//! `v,xi` for characteristic-coordinate runs (and `v` for η runs). Floats are
//! written in shortest round-trip exponent form; undefined slopes are `NaN`.
//! JSON snapshots carry the same arrays with `null` for undefined values and
//! read back bit-exactly.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{GchError, Result};
use crate::eta::EtaState;
use crate::lagrangian::{cos2_half, EulerianField, LagrangianState, EPS_BREAK};
use crate::semilinear::EnergyReport;

pub const ENERGY_HEADER: &str = "T,E,E_bound,dE_dT_analytic,sup_u";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Lagrangian,
    Eta,
    Eulerian,
}

impl SolverKind {
    pub fn name(&self) -> &'static str {
        match self {
            SolverKind::Lagrangian => "lagrangian",
            SolverKind::Eta => "eta",
            SolverKind::Eulerian => "eulerian",
        }
    }

    pub fn label_name(&self) -> &'static str {
        match self {
            SolverKind::Lagrangian => "Y",
            SolverKind::Eta => "eta",
            SolverKind::Eulerian => "x",
        }
    }
}

/// One snapshot in file form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotRecord {
    pub solver: SolverKind,
    pub t: f64,
    pub label: Vec<f64>,
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub ux: Vec<Option<f64>>,
    pub energy_density: Vec<Option<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi: Option<Vec<f64>>,
    /// Label spacing of characteristic-coordinate runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dy: Option<f64>,
}

fn opt(v: f64) -> Option<f64> {
    if v.is_nan() {
        None
    } else {
        Some(v)
    }
}

fn slope_and_density(v: &[f64], weight: f64) -> (Vec<Option<f64>>, Vec<Option<f64>>) {
    v.iter()
        .map(|&v| {
            if cos2_half(v) > EPS_BREAK {
                let s = (0.5 * v).tan();
                (Some(s), Some(weight * s * s))
            } else {
                (None, None)
            }
        })
        .unzip()
}

impl SnapshotRecord {
    /// Node-by-node record of a characteristic-coordinate state.
    pub fn from_lagrangian(state: &LagrangianState, lambda: f64) -> Self {
        let (ux, energy_density) = slope_and_density(&state.v, (2.0 * lambda * state.time).exp());
        SnapshotRecord {
            solver: SolverKind::Lagrangian,
            t: state.time,
            label: state.y.clone(),
            x: state.x.clone(),
            u: state.u.clone(),
            ux,
            energy_density,
            v: Some(state.v.clone()),
            xi: Some(state.xi.clone()),
            dy: Some(state.dy),
        }
    }

    pub fn from_eta(state: &EtaState, lambda: f64) -> Self {
        let (ux, energy_density) = slope_and_density(&state.v, (2.0 * lambda * state.t).exp());
        SnapshotRecord {
            solver: SolverKind::Eta,
            t: state.t,
            label: state.eta.clone(),
            x: state.x.clone(),
            u: state.u.clone(),
            ux,
            energy_density,
            v: Some(state.v.clone()),
            xi: None,
            dy: None,
        }
    }

    pub fn from_field(field: &EulerianField) -> Self {
        SnapshotRecord {
            solver: SolverKind::Eulerian,
            t: field.t,
            label: field.x.clone(),
            x: field.x.clone(),
            u: field.u.clone(),
            ux: field.ux.iter().map(|&v| opt(v)).collect(),
            energy_density: field.energy_density.iter().map(|&v| opt(v)).collect(),
            v: None,
            xi: None,
            dy: None,
        }
    }

    /// Rebuilds the characteristic-coordinate state of a Lagrangian record.
    pub fn to_lagrangian(&self) -> Result<LagrangianState> {
        match (&self.v, &self.xi, self.dy, self.solver) {
            (Some(v), Some(xi), Some(dy), SolverKind::Lagrangian) => Ok(LagrangianState {
                time: self.t,
                y: self.label.clone(),
                dy,
                u: self.u.clone(),
                v: v.clone(),
                xi: xi.clone(),
                x: self.x.clone(),
            }),
            _ => Err(GchError::CorruptData("snapshot lacks characteristic-coordinate columns".into())),
        }
    }

    pub fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        let mut header = format!("{},x,u,ux_or_nan,energy_density", self.solver.label_name());
        if self.v.is_some() {
            header.push_str(",v");
        }
        if self.xi.is_some() {
            header.push_str(",xi");
        }
        writeln!(w, "{header}")?;
        let fmt_opt = |o: Option<f64>| o.map_or_else(|| "NaN".to_string(), |v| format!("{v:e}"));
        for j in 0..self.label.len() {
            write!(
                w,
                "{:e},{:e},{:e},{},{}",
                self.label[j],
                self.x[j],
                self.u[j],
                fmt_opt(self.ux[j]),
                fmt_opt(self.energy_density[j])
            )?;
            if let Some(v) = &self.v {
                write!(w, ",{:e}", v[j])?;
            }
            if let Some(xi) = &self.xi {
                write!(w, ",{:e}", xi[j])?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("snapshot records serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| GchError::CorruptData(format!("snapshot JSON: {e}")))
    }
}

pub fn write_energy_csv<W: Write>(w: &mut W, rows: &[EnergyReport]) -> std::io::Result<()> {
    writeln!(w, "{ENERGY_HEADER}")?;
    for r in rows {
        writeln!(w, "{:e},{:e},{:e},{:e},{:e}", r.t, r.energy, r.bound, r.de_dt, r.sup_u)?;
    }
    Ok(())
}

pub fn read_energy_csv<R: BufRead>(r: R) -> Result<Vec<EnergyReport>> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| GchError::CorruptData("empty energy file".into()))?
        .map_err(|e| GchError::CorruptData(e.to_string()))?;
    if header.trim() != ENERGY_HEADER {
        return Err(GchError::CorruptData(format!("unexpected energy header `{header}`")));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line.map_err(|e| GchError::CorruptData(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let vals: Vec<f64> = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| GchError::CorruptData(format!("energy row {}: {e}", i + 2)))?;
        if vals.len() != 5 {
            return Err(GchError::CorruptData(format!("energy row {} has {} columns", i + 2, vals.len())));
        }
        rows.push(EnergyReport { t: vals[0], energy: vals[1], bound: vals[2], de_dt: vals[3], sup_u: vals[4] });
    }
    Ok(rows)
}
