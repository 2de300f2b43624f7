//! Characteristic coordinate: forward transform of Eulerian initial data and
//! reconstruction of the Eulerian field from a Lagrangian state.
//!
//! The label `Y` is the cumulative initial energy `∫₀ˣ (1 + u0x²)`. In these
//! coordinates a state carries `u`, the angle `v = 2 arctan u_x` (unwrapped),
//! the relative density `ξ` and the characteristic position `x`, related by
//! `x_Y = ξ cos²(v/2)` and `u_Y = ½ ξ sin v`.

use serde::{Deserialize, Serialize};

use crate::error::{GchError, Result};
use crate::model::{locate, DerivativeConvention, GchParams, InitialData, Located};

/// Threshold on `cos²(v/2)` below which `u_x` is declared undefined.
pub const EPS_BREAK: f64 = 1e-8;

/// Slack allowed on discrete monotonicity of `x` before a state is corrupt,
/// relative to the label spacing. Positions closer than this are merged.
pub const TOL_GRID_REL: f64 = 1e-3;

/// Absolute floor of the monotonicity slack.
pub const TOL_GRID: f64 = 1e-10;

/// Monotonicity slack for a label spacing `h`.
pub fn grid_tolerance(h: f64) -> f64 {
    (TOL_GRID_REL * h).max(TOL_GRID)
}

/// Data values below this magnitude count as zero when locating the support.
pub const SUPPORT_THRESHOLD: f64 = 1e-14;

/// Uniform label grid on `[-half_width, half_width]` with `n` nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n: usize,
    pub half_width: f64,
}

impl GridSpec {
    pub fn new(n: usize, half_width: f64) -> Result<Self> {
        if n < 3 {
            return Err(GchError::InvalidParameter(format!("grid needs n >= 3, got {n}")));
        }
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(GchError::InvalidParameter(format!(
                "grid half width must be positive, got {half_width}"
            )));
        }
        Ok(GridSpec { n, half_width })
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.n - 1) as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.n)
            .map(|j| -self.half_width + j as f64 * h)
            .collect()
    }
}

/// State of the semilinear system on the label grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagrangianState {
    pub time: f64,
    pub y: Vec<f64>,
    pub dy: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub xi: Vec<f64>,
    pub x: Vec<f64>,
}

impl LagrangianState {
    /// `u = v = 0`, `ξ = 1`, `x = Y`.
    pub fn zero(grid: GridSpec) -> Self {
        let y = grid.nodes();
        let n = y.len();
        LagrangianState {
            time: 0.0,
            x: y.clone(),
            y,
            dy: grid.spacing(),
            u: vec![0.0; n],
            v: vec![0.0; n],
            xi: vec![1.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// Nodal `x_Y = ξ cos²(v/2)`.
    pub fn metric(&self) -> Vec<f64> {
        self.xi
            .iter()
            .zip(&self.v)
            .map(|(xi, v)| xi * cos2_half(*v))
            .collect()
    }

    /// Max-norm defect of the discrete compatibility relation `u_Y = ½ ξ sin v`,
    /// comparing forward differences against the cell average of the right side.
    pub fn compatibility_defect(&self) -> f64 {
        (0..self.len() - 1)
            .map(|j| {
                let du = (self.u[j + 1] - self.u[j]) / self.dy;
                let rhs = 0.25
                    * (self.xi[j] * self.v[j].sin() + self.xi[j + 1] * self.v[j + 1].sin());
                (du - rhs).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Largest decrease `x[j] - x[j+1]` (zero when `x` is nondecreasing).
    pub fn monotonicity_violation(&self) -> f64 {
        self.x
            .windows(2)
            .map(|w| w[0] - w[1])
            .fold(0.0, f64::max)
    }

    pub fn all_finite(&self) -> bool {
        self.u
            .iter()
            .chain(&self.v)
            .chain(&self.xi)
            .chain(&self.x)
            .all(|v| v.is_finite())
    }
}

#[inline]
pub fn cos2_half(v: f64) -> f64 {
    0.5 * (1.0 + v.cos())
}

#[inline]
pub fn sin2_half(v: f64) -> f64 {
    0.5 * (1.0 - v.cos())
}

/// Reconstructed physical-space snapshot. `ux` and `energy_density` are NaN
/// where the slope is undefined (breaking points and collapsed intervals).
#[derive(Debug, Clone, PartialEq)]
pub struct EulerianField {
    pub t: f64,
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub ux: Vec<f64>,
    pub energy_density: Vec<f64>,
}

impl EulerianField {
    pub fn span(&self) -> (f64, f64) {
        (self.x[0], self.x[self.x.len() - 1])
    }

    /// Trapezoid `∫(u² + u_x²)dx` over samples where `u_x` is defined.
    pub fn h1_energy(&self) -> f64 {
        let g: Vec<f64> = self
            .u
            .iter()
            .zip(&self.ux)
            .map(|(u, ux)| u * u + if ux.is_nan() { 0.0 } else { ux * ux })
            .collect();
        self.x
            .windows(2)
            .zip(g.windows(2))
            .map(|(xw, gw)| 0.5 * (xw[1] - xw[0]) * (gw[0] + gw[1]))
            .sum()
    }
}

/// Cumulative energy table `Y(x_i) = ∫₀^{x_i} (1 + u0x²)` at the data samples.
pub(crate) fn energy_coordinate_table(data: &InitialData) -> Result<Vec<f64>> {
    let n = data.len();
    let mut f = vec![0.0; n];
    for i in 0..n - 1 {
        let h = data.x[i + 1] - data.x[i];
        let inc = match data.convention {
            DerivativeConvention::Nodal => {
                h * (1.0 + 0.5 * (data.u0x[i].powi(2) + data.u0x[i + 1].powi(2)))
            }
            DerivativeConvention::CellSlope => h * (1.0 + data.u0x[i].powi(2)),
        };
        if !(inc > 0.0) {
            return Err(GchError::CorruptData(format!(
                "cumulative energy not increasing on [{}, {}]",
                data.x[i],
                data.x[i + 1]
            )));
        }
        f[i + 1] = f[i] + inc;
    }
    // base point x = 0; outside the samples the data is zero and Y has slope 1
    let base = match locate(&data.x, 0.0) {
        Located::Below => -data.x[0],
        Located::Above => f[n - 1] - data.x[n - 1],
        Located::In(i, s) => f[i] + s * (f[i + 1] - f[i]),
    };
    f.iter_mut().for_each(|v| *v -= base);
    Ok(f)
}

/// Inverts the monotone map `x ↦ Y(x)` at `y`, extending with slope 1
/// outside the sampled range.
pub(crate) fn invert_energy_coordinate(data: &InitialData, table: &[f64], y: f64) -> f64 {
    let n = table.len();
    match locate(table, y) {
        Located::Below => data.x[0] + (y - table[0]),
        Located::Above => data.x[n - 1] + (y - table[n - 1]),
        Located::In(i, s) => data.x[i] + s * (data.x[i + 1] - data.x[i]),
    }
}

/// Checks that the label grid covers the image of the data's support and
/// that the data is not truncated where the grid reaches past the samples.
pub(crate) fn check_grid_covers(data: &InitialData, table: &[f64], grid: GridSpec) -> Result<()> {
    let n = data.len();
    let threshold = SUPPORT_THRESHOLD * data.max_abs_u().max(1.0);
    let Some((lo, hi)) = data.numeric_support(threshold) else {
        return Ok(());
    };
    let y_of = |xq: f64| match locate(&data.x, xq) {
        Located::Below | Located::Above => unreachable!("support lies inside the samples"),
        Located::In(i, s) => table[i] + s * (table[i + 1] - table[i]),
    };
    let (ylo, yhi) = (y_of(lo), y_of(hi));
    if ylo < -grid.half_width || yhi > grid.half_width {
        return Err(GchError::GridTooSmall(format!(
            "label grid [-{w}, {w}] does not cover the support image [{ylo:.4}, {yhi:.4}]",
            w = grid.half_width
        )));
    }
    let edge_live = |i: usize| data.u0[i].abs() > threshold || data.u0x[i].abs() > threshold;
    if (table[0] > -grid.half_width && edge_live(0))
        || (table[n - 1] < grid.half_width && edge_live(n - 1))
    {
        return Err(GchError::InvalidData(
            "samples end before the grid while the data is still nonzero".into(),
        ));
    }
    Ok(())
}

/// Label half width covering the support image of `data`, a kernel margin of
/// 10 and the largest characteristic displacement over `[0, t_end]`.
pub fn auto_half_width(data: &InitialData, params: &GchParams, t_end: f64) -> Result<f64> {
    data.validate()?;
    let table = energy_coordinate_table(data)?;
    let threshold = SUPPORT_THRESHOLD * data.max_abs_u().max(1.0);
    let reach = match data.numeric_support(threshold) {
        None => 0.0,
        Some((lo, hi)) => {
            let y_of = |xq: f64| match locate(&data.x, xq) {
                Located::Below | Located::Above => xq,
                Located::In(i, s) => table[i] + s * (table[i + 1] - table[i]),
            };
            y_of(lo).abs().max(y_of(hi).abs())
        }
    };
    let c = (params.energy_growth_rate() * t_end).exp() * data.h1_norm_sq();
    Ok(reach + 10.0 + (params.alpha.abs() * c.sqrt() + params.beta.abs()) * t_end)
}

/// Maps initial data onto the uniform label grid at `T = 0`.
pub fn forward_transform(data: &InitialData, grid: GridSpec) -> Result<LagrangianState> {
    data.validate()?;
    let table = energy_coordinate_table(data)?;
    check_grid_covers(data, &table, grid)?;
    let y = grid.nodes();
    let x: Vec<f64> = y
        .iter()
        .map(|&yj| invert_energy_coordinate(data, &table, yj))
        .collect();
    let u = x.iter().map(|&xj| data.u_at(xj)).collect();
    let v = x.iter().map(|&xj| 2.0 * data.ux_at(xj).atan()).collect();
    Ok(LagrangianState {
        time: 0.0,
        dy: grid.spacing(),
        xi: vec![1.0; y.len()],
        y,
        u,
        v,
        x,
    })
}

/// Builds the Eulerian snapshot from nodal `(x, u, v)` samples, collapsing
/// runs of coincident positions into a single sample with undefined slope.
pub(crate) fn field_from_nodes(
    t: f64,
    lambda: f64,
    tol: f64,
    x: &[f64],
    u: &[f64],
    v: &[f64],
) -> Result<EulerianField> {
    let weight = (2.0 * lambda * t).exp();
    let n = x.len();
    let mut field = EulerianField {
        t,
        x: Vec::with_capacity(n),
        u: Vec::with_capacity(n),
        ux: Vec::with_capacity(n),
        energy_density: Vec::with_capacity(n),
    };
    for j in 0..n {
        let c2 = cos2_half(v[j]);
        let (ux, dens) = if c2 > EPS_BREAK {
            let s = (0.5 * v[j]).tan();
            (s, weight * s * s)
        } else {
            (f64::NAN, f64::NAN)
        };
        if let Some(&last) = field.x.last() {
            let gap = x[j] - last;
            if gap < -tol {
                return Err(GchError::StateCorrupt(format!(
                    "characteristics crossed at node {j}: x decreases by {:.3e}",
                    -gap
                )));
            }
            if gap <= tol {
                let k = field.x.len() - 1;
                field.ux[k] = f64::NAN;
                field.energy_density[k] = f64::NAN;
                continue;
            }
        }
        field.x.push(x[j]);
        field.u.push(u[j]);
        field.ux.push(ux);
        field.energy_density.push(dens);
    }
    Ok(field)
}

/// Inverse transform `u(t, x(T, Y)) = u(T, Y)`.
pub fn reconstruct(state: &LagrangianState, params: &GchParams) -> Result<EulerianField> {
    let tol = grid_tolerance(state.dy);
    field_from_nodes(state.time, params.lambda, tol, &state.x, &state.u, &state.v)
}

/// Piecewise-linear evaluation of the reconstructed `u`.
pub fn eval_u_at(field: &EulerianField, xq: f64) -> Result<f64> {
    let (lo, hi) = field.span();
    match locate(&field.x, xq) {
        Located::Below | Located::Above => Err(GchError::OutOfDomain { x: xq, lo, hi }),
        Located::In(i, s) => Ok(field.u[i] + s * (field.u[i + 1] - field.u[i])),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_preset, InitialProfile, Preset};

    fn ch() -> GchParams {
        make_preset(&Preset::Ch).unwrap()
    }

    #[test]
    fn zero_data_gives_identity_coordinate() {
        let data = InitialProfile::Zero.sample(-10.0, 10.0, 101).unwrap();
        let grid = GridSpec::new(41, 8.0).unwrap();
        let s = forward_transform(&data, grid).unwrap();
        for j in 0..41 {
            assert!((s.x[j] - s.y[j]).abs() < 1e-14);
            assert_eq!(s.u[j], 0.0);
            assert_eq!(s.v[j], 0.0);
            assert_eq!(s.xi[j], 1.0);
        }
        assert_eq!(s.time, 0.0);
    }

    #[test]
    fn xi_starts_at_one() {
        let data = InitialProfile::Steep { amp: 2.0 }.sample(-8.0, 8.0, 3001).unwrap();
        let s = forward_transform(&data, GridSpec::new(257, 12.0).unwrap()).unwrap();
        assert!(s.xi.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn peakon_energy_coordinate_matches_antiderivative() {
        // Y(x) = x + sign(x)(1 - e^{-2|x|})/2
        let exact = |x: f64| x + x.signum() * (1.0 - (-2.0 * x.abs()).exp()) / 2.0;
        let mut prev = f64::INFINITY;
        for n in [2001, 4001, 8001] {
            let data = InitialProfile::Peakon { c: 1.0, center: 0.0 }.sample(-40.0, 40.0, n).unwrap();
            let table = energy_coordinate_table(&data).unwrap();
            let mut err: f64 = 0.0;
            for xq in [-2.0, -1.0, 1.0, 2.0] {
                let i = data.x.iter().position(|&v| (v - xq).abs() < 1e-9).unwrap();
                err = err.max((table[i] - exact(xq)).abs());
            }
            assert!(err < prev / 3.0, "no refinement: {err} vs {prev}");
            assert!(err < 1e-3);
            prev = err;
        }
    }

    #[test]
    fn round_trip_at_t0() {
        let prof = InitialProfile::Gaussian { amp: 0.8, width: 1.3, center: 0.4 };
        let data = prof.sample(-12.0, 12.0, 24_001).unwrap();
        let s = forward_transform(&data, GridSpec::new(2049, 12.0).unwrap()).unwrap();
        let f = reconstruct(&s, &ch()).unwrap();
        // linear interpolation between label nodes bounds the error
        let dxmax = f.x.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
        let tol = 2.0 * dxmax * dxmax / 8.0 * 2.0 * 0.8 / (1.3f64 * 1.3);
        for (xq, uq) in data.x.iter().zip(&data.u0).step_by(37) {
            if *xq >= f.x[0] && *xq <= *f.x.last().unwrap() {
                assert!((eval_u_at(&f, *xq).unwrap() - uq).abs() <= tol);
            }
        }
    }

    #[test]
    fn grid_too_small_detected() {
        let data = InitialProfile::Gaussian { amp: 1.0, width: 1.0, center: 0.0 }.sample(-10.0, 10.0, 2001).unwrap();
        let err = forward_transform(&data, GridSpec::new(65, 3.0).unwrap()).unwrap_err();
        assert!(matches!(err, GchError::GridTooSmall(_)));
    }

    #[test]
    fn truncated_data_detected() {
        let data = InitialProfile::Gaussian { amp: 1.0, width: 1.0, center: 0.0 }.sample(-2.0, 12.0, 2001).unwrap();
        let err = forward_transform(&data, GridSpec::new(65, 12.0).unwrap());
        assert!(err.is_err());
    }

    #[test]
    fn zero_state_reconstructs_to_zero() {
        let mut s = LagrangianState::zero(GridSpec::new(33, 4.0).unwrap());
        s.time = 3.7;
        let f = reconstruct(&s, &ch()).unwrap();
        assert_eq!(f.x, s.y);
        assert!(f.u.iter().all(|&u| u == 0.0));
        assert!(f.ux.iter().all(|&u| u == 0.0));
    }

    #[test]
    fn breaking_interval_collapses_to_a_point() {
        let mut s = LagrangianState::zero(GridSpec::new(21, 5.0).unwrap());
        // nodes 8..=12 broken: v = π, x frozen at x[8]
        for j in 8..=12 {
            s.v[j] = std::f64::consts::PI;
            s.x[j] = s.x[8];
            s.u[j] = 0.3;
        }
        for j in 13..21 {
            s.x[j] -= s.x[12] - s.x[8];
        }
        let f = reconstruct(&s, &ch()).unwrap();
        assert_eq!(f.x.len(), 21 - 4);
        assert!(f.ux[8].is_nan());
        assert_eq!(f.u[8], 0.3);
        assert!(f.x.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(f.ux.iter().filter(|v| v.is_nan()).count(), 1);
    }

    #[test]
    fn crossed_characteristics_are_rejected() {
        let mut s = LagrangianState::zero(GridSpec::new(9, 2.0).unwrap());
        s.x[4] = s.x[3] - 0.1;
        assert!(matches!(reconstruct(&s, &ch()), Err(GchError::StateCorrupt(_))));
    }

    #[test]
    fn eval_u_at_interpolates() {
        let f = EulerianField {
            t: 0.0,
            x: vec![0.0, 1.0, 3.0],
            u: vec![1.0, 3.0, -1.0],
            ux: vec![0.0; 3],
            energy_density: vec![0.0; 3],
        };
        assert_eq!(eval_u_at(&f, 1.0).unwrap(), 3.0);
        assert_eq!(eval_u_at(&f, 0.5).unwrap(), 2.0);
        assert_eq!(eval_u_at(&f, 2.0).unwrap(), 1.0);
        assert!(matches!(eval_u_at(&f, 3.5), Err(GchError::OutOfDomain { .. })));
        let z = EulerianField { u: vec![0.0; 3], ..f };
        assert_eq!(eval_u_at(&z, 2.2).unwrap(), 0.0);
    }
}
