//! Time integration of the semilinear system in label coordinates, with the
//! position `x` advected alongside, and energy accounting.

use serde::{Deserialize, Serialize};

use crate::error::{GchError, Result};
use crate::lagrangian::{cos2_half, sin2_half, LagrangianState};
use crate::model::GchParams;
use crate::nonlocal::{compute_sources_into, trapezoid_weights, KernelWorkspace, SourceTerms};

/// Relative slack on the energy bound before integration is aborted.
pub const TOL_ENERGY: f64 = 1e-4;

/// Target rotation budget per step in the step-size rule.
pub const STEP_SAFETY: f64 = 0.1;

/// Upper limit for automatically chosen steps, so that snapshots stay resolved
/// even when the a priori rate is tiny.
pub const MAX_AUTO_DT: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    #[serde(rename = "T")]
    pub t: f64,
    #[serde(rename = "E")]
    pub energy: f64,
    #[serde(rename = "E_bound")]
    pub bound: f64,
    #[serde(rename = "dE_dT_analytic")]
    pub de_dt: f64,
    pub sup_u: f64,
}

/// Time derivative of a [`LagrangianState`].
#[derive(Debug, Clone, PartialEq)]
pub struct StateDerivative {
    pub du: Vec<f64>,
    pub dv: Vec<f64>,
    pub dxi: Vec<f64>,
    pub dx: Vec<f64>,
}

/// Pointwise right-hand side from nodal fields and sources.
fn assemble_rhs(state: &LagrangianState, params: &GchParams, src: &SourceTerms, out: &mut [f64]) {
    let n = state.len();
    let (du, rest) = out.split_at_mut(n);
    let (dv, rest) = rest.split_at_mut(n);
    let (dxi, dx) = rest.split_at_mut(n);
    let (a, lam) = (params.alpha, params.lambda);
    for j in 0..n {
        let (u, v, xi) = (state.u[j], state.v[j], state.xi[j]);
        let (c2, s2, sv) = (cos2_half(v), sin2_half(v), v.sin());
        let h = params.h.eval(u);
        let q = src.p1[j] + src.dx_p2[j];
        du[j] = -src.dx_p1[j] - src.p2[j] - lam * u;
        dv[j] = -a * s2 + 2.0 * (h - q) * c2 - lam * sv;
        dxi[j] = xi * (0.5 * a + h - q) * sv - 2.0 * lam * xi * s2;
        dx[j] = a * u + params.beta;
    }
}

/// Evaluates `(du, dv, dξ, dx)` at every node.
pub fn rhs(state: &LagrangianState, params: &GchParams, ws: &mut KernelWorkspace) -> Result<StateDerivative> {
    let n = state.len();
    let mut src = SourceTerms::zeros(n);
    compute_sources_into(state, params, ws, &mut src)?;
    let mut flat = vec![0.0; 4 * n];
    assemble_rhs(state, params, &src, &mut flat);
    let mut it = flat.chunks_exact(n).map(|c| c.to_vec());
    Ok(StateDerivative {
        du: it.next().unwrap(),
        dv: it.next().unwrap(),
        dxi: it.next().unwrap(),
        dx: it.next().unwrap(),
    })
}

/// Classical four-stage step on packed fields.
pub(crate) fn rk4_packed<F>(y: &[f64], t: f64, dt: f64, mut f: F) -> Result<Vec<f64>>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    let m = y.len();
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; m], vec![0.0; m], vec![0.0; m], vec![0.0; m]);
    let mut tmp = vec![0.0; m];
    f(t, y, &mut k1)?;
    for i in 0..m {
        tmp[i] = y[i] + 0.5 * dt * k1[i];
    }
    f(t + 0.5 * dt, &tmp, &mut k2)?;
    for i in 0..m {
        tmp[i] = y[i] + 0.5 * dt * k2[i];
    }
    f(t + 0.5 * dt, &tmp, &mut k3)?;
    for i in 0..m {
        tmp[i] = y[i] + dt * k3[i];
    }
    f(t + dt, &tmp, &mut k4)?;
    Ok((0..m)
        .map(|i| y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

fn pack(state: &LagrangianState) -> Vec<f64> {
    [&state.u, &state.v, &state.xi, &state.x].iter().flat_map(|a| a.iter().copied()).collect()
}

fn unpack_into(flat: &[f64], state: &mut LagrangianState) {
    let n = state.len();
    state.u.copy_from_slice(&flat[..n]);
    state.v.copy_from_slice(&flat[n..2 * n]);
    state.xi.copy_from_slice(&flat[2 * n..3 * n]);
    state.x.copy_from_slice(&flat[3 * n..]);
}

/// One RK4 step of size `dt`.
pub fn step_rk4(
    state: &LagrangianState,
    params: &GchParams,
    dt: f64,
    ws: &mut KernelWorkspace,
) -> Result<LagrangianState> {
    if !(dt > 0.0) {
        return Err(GchError::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    let n = state.len();
    let mut stage = state.clone();
    let mut src = SourceTerms::zeros(n);
    let y = pack(state);
    let next = rk4_packed(&y, state.time, dt, |t, yy, out| {
        unpack_into(yy, &mut stage);
        stage.time = t;
        compute_sources_into(&stage, params, ws, &mut src)?;
        assemble_rhs(&stage, params, &src, out);
        Ok(())
    })?;
    let mut out = state.clone();
    unpack_into(&next, &mut out);
    out.time = state.time + dt;
    check_state(&out)?;
    Ok(out)
}

fn check_state(state: &LagrangianState) -> Result<()> {
    if !state.all_finite() {
        return Err(GchError::NumericalBlowup {
            t: state.time,
            what: "non-finite value in state".into(),
        });
    }
    if let Some(j) = state.xi.iter().position(|&xi| xi < 0.0) {
        return Err(GchError::StateCorrupt(format!(
            "ξ = {} < 0 at node {j}, t = {}",
            state.xi[j], state.time
        )));
    }
    Ok(())
}

/// Trapezoid energy, its analytic rate and the a priori bound.
pub fn energy(state: &LagrangianState, params: &GchParams, initial_energy: f64) -> EnergyReport {
    let n = state.len();
    let w = trapezoid_weights(n, state.dy);
    let (mut e, mut kin) = (0.0, 0.0);
    for j in 0..n {
        let (c2, s2) = (cos2_half(state.v[j]), sin2_half(state.v[j]));
        let a = state.u[j] * state.u[j] * state.xi[j] * c2;
        kin += w[j] * a;
        e += w[j] * (a + state.xi[j] * s2);
    }
    EnergyReport {
        t: state.time,
        energy: e,
        bound: (params.energy_growth_rate() * state.time).exp() * initial_energy,
        de_dt: -2.0 * params.k * kin - 2.0 * params.lambda * e,
        sup_u: state.u.iter().fold(0.0, |m, u| m.max(u.abs())),
    }
}

/// Horizon energy constant `e^{2(|k|+|λ|)T_end} E(0)`.
pub fn horizon_energy(params: &GchParams, initial_energy: f64, t_end: f64) -> f64 {
    (params.energy_growth_rate() * t_end).exp() * initial_energy
}

/// A priori bound on `|dξ/dT| / ξ` over `[0, t_end]`.
pub fn rate_bound(params: &GchParams, initial_energy: f64, t_end: f64) -> f64 {
    let c = horizon_energy(params, initial_energy, t_end);
    let l = params.h.lipschitz_bound(c.sqrt());
    let (a, k) = (params.alpha.abs(), params.k.abs());
    0.5 * a + l * c.sqrt() + 0.5 * l + 0.25 * (l + a) * c + 0.5 * k + 0.25 * k * c
        + 2.0 * params.lambda.abs()
}

/// Lower bound `e^{-rate·T}` on ξ implied by [`rate_bound`].
pub fn xi_floor(params: &GchParams, initial_energy: f64, t_end: f64, t: f64) -> f64 {
    (-rate_bound(params, initial_energy, t_end) * t).exp()
}

/// Step size from the rate bound: the largest `t_end / m` with
/// `dt · rate ≤ 0.1`, capped at [`MAX_AUTO_DT`].
pub fn auto_dt(params: &GchParams, initial_energy: f64, t_end: f64) -> f64 {
    let rate = rate_bound(params, initial_energy, t_end);
    let steps = (t_end * rate / STEP_SAFETY)
        .ceil()
        .max((t_end / MAX_AUTO_DT).ceil())
        .max(1.0);
    t_end / steps
}

/// Number of fixed steps covering `[0, t_end]` with step at most `dt`.
pub(crate) fn step_count(t_end: f64, dt: f64) -> Result<usize> {
    if !(t_end > 0.0) || !t_end.is_finite() {
        return Err(GchError::InvalidParameter(format!("t_end must be positive, got {t_end}")));
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(GchError::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    Ok(((t_end / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize)
}

/// Step indices nearest to the requested snapshot times.
pub(crate) fn snapshot_steps(times: &[f64], t_end: f64, steps: usize) -> Result<Vec<usize>> {
    let dt = t_end / steps as f64;
    times
        .iter()
        .map(|&t| {
            if !(t >= 0.0 && t <= t_end * (1.0 + 1e-12)) {
                Err(GchError::InvalidParameter(format!(
                    "snapshot time {t} outside [0, {t_end}]"
                )))
            } else {
                Ok(((t / dt).round() as usize).min(steps))
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub state: LagrangianState,
    pub energy: EnergyReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// States at the requested times (nearest completed step), in request order.
    pub snapshots: Vec<Snapshot>,
    /// Energy after every step, starting at `T = 0`.
    pub energy_log: Vec<EnergyReport>,
    pub final_state: LagrangianState,
    /// Step actually used (`t_end` divided by the step count).
    pub dt: f64,
}

/// Integrates from `state0` to `t_end` with fixed steps no larger than `dt`.
pub fn integrate(
    state0: &LagrangianState,
    params: &GchParams,
    t_end: f64,
    dt: f64,
    snapshot_times: &[f64],
) -> Result<Trajectory> {
    params.validate()?;
    check_state(state0)?;
    let steps = step_count(t_end, dt)?;
    let dt = t_end / steps as f64;
    let wanted = snapshot_steps(snapshot_times, t_end, steps)?;
    let e0 = energy(state0, params, 0.0).energy;
    let mut ws = KernelWorkspace::new(state0.len());
    let mut state = state0.clone();
    let mut snaps: Vec<Option<Snapshot>> = vec![None; wanted.len()];
    let mut log = Vec::with_capacity(steps + 1);
    for i in 0..=steps {
        if i > 0 {
            state = step_rk4(&state, params, dt, &mut ws)?;
            state.time = i as f64 * dt;
        }
        let rep = energy(&state, params, e0);
        if rep.energy > rep.bound * (1.0 + TOL_ENERGY) + f64::MIN_POSITIVE {
            return Err(GchError::EnergyBoundViolated { t: rep.t, energy: rep.energy, bound: rep.bound });
        }
        for (slot, &w) in snaps.iter_mut().zip(&wanted) {
            if w == i {
                *slot = Some(Snapshot { state: state.clone(), energy: rep });
            }
        }
        log.push(rep);
    }
    Ok(Trajectory {
        snapshots: snaps.into_iter().map(|s| s.expect("every snapshot step is visited")).collect(),
        energy_log: log,
        final_state: state,
        dt,
    })
}
