//! Classical finite-difference solver in physical coordinates. Valid only
//! before breaking; used as an oracle for the characteristic solvers.

use crate::error::{GchError, Result};
use crate::lagrangian::{EulerianField, SUPPORT_THRESHOLD};
use crate::model::{GchParams, InitialData, InitialProfile};
use crate::semilinear::{rk4_packed, snapshot_steps, step_count};

/// Uniform physical grid carrying `u`.
#[derive(Debug, Clone, PartialEq)]
pub struct EulerianGrid {
    pub t: f64,
    pub x: Vec<f64>,
    pub dx: f64,
    pub u: Vec<f64>,
}

/// Extra room on each side of the support so the Dirichlet truncation of the
/// Helmholtz solve stays negligible.
pub const DOMAIN_MARGIN: f64 = 20.0;

impl EulerianGrid {
    /// Grid on `[-half_width, half_width]` with spacing at most `dx`, and `u = 0`.
    pub fn zeros(half_width: f64, dx: f64) -> Result<Self> {
        if !(half_width > 0.0 && dx > 0.0 && dx < half_width) {
            return Err(GchError::InvalidParameter(format!(
                "bad physical grid: half width {half_width}, spacing {dx}"
            )));
        }
        let cells = (2.0 * half_width / dx).ceil() as usize;
        let dx = 2.0 * half_width / cells as f64;
        let x: Vec<f64> = (0..=cells).map(|i| -half_width + i as f64 * dx).collect();
        Ok(EulerianGrid { t: 0.0, u: vec![0.0; x.len()], x, dx })
    }

    pub fn from_profile(profile: &InitialProfile, half_width: f64, dx: f64) -> Result<Self> {
        let mut g = EulerianGrid::zeros(half_width, dx)?;
        g.u = g.x.iter().map(|&x| profile.u(x)).collect();
        Ok(g)
    }

    /// Samples tabulated data by linear interpolation (zero outside the samples).
    pub fn from_data(data: &InitialData, half_width: f64, dx: f64) -> Result<Self> {
        data.validate()?;
        let mut g = EulerianGrid::zeros(half_width, dx)?;
        g.u = g.x.iter().map(|&x| data.u_at(x)).collect();
        Ok(g)
    }

    /// Centered difference, one-sided at the ends.
    pub fn centered_derivative(&self) -> Vec<f64> {
        centered(&self.u, self.dx)
    }

    pub fn to_field(&self, lambda: f64) -> EulerianField {
        let ux = self.centered_derivative();
        let w = (2.0 * lambda * self.t).exp();
        EulerianField {
            t: self.t,
            x: self.x.clone(),
            u: self.u.clone(),
            energy_density: ux.iter().map(|d| w * d * d).collect(),
            ux,
        }
    }
}

fn centered(f: &[f64], dx: f64) -> Vec<f64> {
    let n = f.len();
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        d[i] = (f[i + 1] - f[i - 1]) / (2.0 * dx);
    }
    d[0] = (f[1] - f[0]) / dx;
    d[n - 1] = (f[n - 1] - f[n - 2]) / dx;
    d
}

/// Half width of a physical domain holding the support of `data`, the
/// distance it can travel by `t_end`, and `DOMAIN_MARGIN` on each side.
pub fn eulerian_half_width(data: &InitialData, params: &GchParams, t_end: f64) -> Result<f64> {
    data.validate()?;
    let threshold = SUPPORT_THRESHOLD * data.max_abs_u().max(1.0);
    let reach = data.numeric_support(threshold).map_or(0.0, |(lo, hi)| lo.abs().max(hi.abs()));
    let c = (params.energy_growth_rate() * t_end).exp() * data.h1_norm_sq();
    Ok(reach + DOMAIN_MARGIN + (params.alpha.abs() * c.sqrt() + params.beta.abs()) * t_end)
}

/// Solves `(1 - D₂)P = f` with the centered second difference and `P = 0`
/// at both end nodes, by tridiagonal elimination.
pub fn helmholtz_invert(f: &[f64], dx: f64) -> Vec<f64> {
    let n = f.len();
    let mut p = vec![0.0; n];
    if n < 3 {
        return p;
    }
    let off = -1.0 / (dx * dx);
    let diag = 1.0 + 2.0 / (dx * dx);
    let m = n - 2;
    let mut cp = vec![0.0; m];
    let mut dp = vec![0.0; m];
    cp[0] = off / diag;
    dp[0] = f[1] / diag;
    for i in 1..m {
        let denom = diag - off * cp[i - 1];
        cp[i] = off / denom;
        dp[i] = (f[i + 1] - off * dp[i - 1]) / denom;
    }
    p[m] = dp[m - 1];
    for i in (0..m - 1).rev() {
        p[i + 1] = dp[i] - cp[i] * p[i + 2];
    }
    p
}

/// Largest admissible `|u_x|` before the oracle gives up.
pub fn breaking_threshold(dx: f64) -> f64 {
    50.0 / dx.sqrt()
}

fn rhs_into(x_len: usize, dx: f64, t: f64, u: &[f64], params: &GchParams, out: &mut [f64]) -> Result<()> {
    let du = centered(u, dx);
    let slope = du.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    let threshold = breaking_threshold(dx);
    if slope > threshold {
        return Err(GchError::BreakingImminent { t, slope, threshold });
    }
    let f1: Vec<f64> = u
        .iter()
        .zip(&du)
        .map(|(u, d)| params.h.eval(*u) + 0.5 * params.alpha * d * d)
        .collect();
    let p1 = helmholtz_invert(&f1, dx);
    let dp1 = centered(&p1, dx);
    let p2 = if params.k != 0.0 { helmholtz_invert(u, dx) } else { vec![0.0; x_len] };
    for i in 0..x_len {
        let speed = params.alpha * u[i] + params.beta;
        let upwind = if speed > 0.0 {
            if i > 0 { (u[i] - u[i - 1]) / dx } else { 0.0 }
        } else if i + 1 < x_len {
            (u[i + 1] - u[i]) / dx
        } else {
            0.0
        };
        out[i] = -speed * upwind - dp1[i] - params.k * p2[i] - params.lambda * u[i];
    }
    Ok(())
}

/// Time derivative of `u` on the grid.
pub fn rhs_eulerian(grid: &EulerianGrid, params: &GchParams) -> Result<Vec<f64>> {
    let mut out = vec![0.0; grid.u.len()];
    rhs_into(grid.u.len(), grid.dx, grid.t, &grid.u, params, &mut out)?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EulerianTrajectory {
    pub snapshots: Vec<EulerianField>,
    pub final_grid: EulerianGrid,
    pub dt: f64,
}

/// Fixed-step RK4 with the snapshot convention of the characteristic solvers.
pub fn integrate_eulerian(
    grid0: &EulerianGrid,
    params: &GchParams,
    t_end: f64,
    dt: f64,
    snapshot_times: &[f64],
) -> Result<EulerianTrajectory> {
    params.validate()?;
    let steps = step_count(t_end, dt)?;
    let dt = t_end / steps as f64;
    let wanted = snapshot_steps(snapshot_times, t_end, steps)?;
    let n = grid0.u.len();
    let mut grid = grid0.clone();
    let mut snaps: Vec<Option<EulerianField>> = vec![None; wanted.len()];
    for i in 0..=steps {
        if i > 0 {
            let next = rk4_packed(&grid.u, grid.t, dt, |t, u, out| rhs_into(n, grid.dx, t, u, params, out))?;
            grid.u = next;
            grid.t = i as f64 * dt;
            if grid.u.iter().any(|v| !v.is_finite()) {
                return Err(GchError::NumericalBlowup { t: grid.t, what: "non-finite Eulerian value".into() });
            }
        }
        for (slot, &w) in snaps.iter_mut().zip(&wanted) {
            if w == i {
                *slot = Some(grid.to_field(params.lambda));
            }
        }
    }
    Ok(EulerianTrajectory {
        snapshots: snaps.into_iter().map(|s| s.expect("every snapshot step is visited")).collect(),
        final_grid: grid,
        dt,
    })
}
