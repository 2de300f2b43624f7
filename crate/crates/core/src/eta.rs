//! Second characteristic solver, in the energy variable
//! `η = x + ∫ e^{2λt} u_x² dx`.
//!
//! Grid nodes are labels moving with `dη/dt = G(t, η)`. In these variables
//! `x_η = cos²(v/2) / D` with `D = cos²(v/2) + e^{2λt} sin²(v/2)`, and the
//! convolution densities pick up the factor `1/D`.

use serde::{Deserialize, Serialize};

use crate::error::{GchError, Result};
use crate::lagrangian::{cos2_half, field_from_nodes, forward_transform, sin2_half, grid_tolerance, EulerianField, GridSpec, EPS_BREAK, TOL_GRID};
use crate::model::{GchParams, InitialData};
use crate::nonlocal::{sources_from_densities, trapezoid_weights_nonuniform, SourceTerms};
use crate::semilinear::{rk4_packed, snapshot_steps, step_count, EnergyReport, TOL_ENERGY};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaState {
    pub t: f64,
    pub eta: Vec<f64>,
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl EtaState {
    pub fn len(&self) -> usize {
        self.eta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eta.is_empty()
    }

    /// `e^{2λt}`.
    pub fn weight(&self, params: &GchParams) -> f64 {
        (2.0 * params.lambda * self.t).exp()
    }

    /// Nodal `x_η`, evaluated as 0 where it falls below the breaking threshold.
    pub fn metric(&self, params: &GchParams) -> Vec<f64> {
        let e = self.weight(params);
        self.v
            .iter()
            .map(|&v| {
                let c2 = cos2_half(v);
                let m = c2 / (c2 + e * sin2_half(v));
                if m <= EPS_BREAK {
                    0.0
                } else {
                    m
                }
            })
            .collect()
    }

    pub fn all_finite(&self) -> bool {
        self.eta.iter().chain(&self.x).chain(&self.u).chain(&self.v).all(|v| v.is_finite())
    }
}

/// Time derivative along moving labels; `deta` is the label velocity `G`.
#[derive(Debug, Clone, PartialEq)]
pub struct EtaDerivative {
    pub deta: Vec<f64>,
    pub dx: Vec<f64>,
    pub du: Vec<f64>,
    pub dv: Vec<f64>,
}

/// Initial labels. With the cumulative integral based at `x = 0` and weight
/// `e^{0} = 1`, the labels coincide with the characteristic coordinate at `T = 0`.
pub fn eta_from_initial(data: &InitialData, grid: GridSpec) -> Result<EtaState> {
    let s = forward_transform(data, grid)?;
    Ok(EtaState { t: 0.0, eta: s.y, x: s.x, u: s.u, v: s.v })
}

/// Nonlocal sources of the η formulation on the state's current labels.
pub fn eta_sources(state: &EtaState, params: &GchParams) -> Result<SourceTerms> {
    let n = state.len();
    let e = state.weight(params);
    let m = state.metric(params);
    let mut c = vec![0.0; n];
    for j in 0..n - 1 {
        let d = state.eta[j + 1] - state.eta[j];
        if d < -TOL_GRID {
            return Err(GchError::StateCorrupt(format!(
                "labels out of order at node {j}, t = {}",
                state.t
            )));
        }
        c[j + 1] = c[j] + 0.5 * d * (m[j] + m[j + 1]);
    }
    let w = trapezoid_weights_nonuniform(&state.eta);
    let mut f1 = vec![0.0; n];
    let mut f2 = vec![0.0; n];
    for j in 0..n {
        let (c2, s2) = (cos2_half(state.v[j]), sin2_half(state.v[j]));
        let rho = 1.0 / (c2 + e * s2);
        f1[j] = rho * (params.h.eval(state.u[j]) * c2 + 0.5 * params.alpha * s2);
        f2[j] = rho * params.k * state.u[j] * c2;
    }
    let mut out = SourceTerms::zeros(n);
    let (mut decay, mut fwd, mut bwd) = (Vec::new(), Vec::new(), Vec::new());
    sources_from_densities(&c, &w, &f1, &f2, &mut decay, &mut fwd, &mut bwd, &mut out);
    Ok(out)
}

fn assemble(state: &EtaState, params: &GchParams, src: &SourceTerms, out: &mut [f64]) {
    let n = state.len();
    let e = state.weight(params);
    let (deta, rest) = out.split_at_mut(n);
    let (dx, rest) = rest.split_at_mut(n);
    let (du, dv) = rest.split_at_mut(n);
    let (a, lam) = (params.alpha, params.lambda);
    let mut g_prev = 0.0;
    for j in 0..n {
        let (u, v) = (state.u[j], state.v[j]);
        let (c2, s2) = (cos2_half(v), sin2_half(v));
        let q = params.h.eval(u) - src.p1[j] - src.dx_p2[j];
        // u_x dx in label measure: ½ sin v / D
        let g = (a + 2.0 * e * q) * 0.5 * v.sin() / (c2 + e * s2);
        deta[j] = if j == 0 {
            params.beta
        } else {
            deta[j - 1] + 0.5 * (state.eta[j] - state.eta[j - 1]) * (g_prev + g)
        };
        g_prev = g;
        dx[j] = a * u + params.beta;
        du[j] = -src.dx_p1[j] - src.p2[j] - lam * u;
        dv[j] = 2.0 * (q + 0.5 * a) * c2 - lam * v.sin() - a;
    }
}

/// Evaluates the label velocity and the nodal derivatives.
pub fn rhs_eta(state: &EtaState, params: &GchParams) -> Result<EtaDerivative> {
    let n = state.len();
    let src = eta_sources(state, params)?;
    let mut flat = vec![0.0; 4 * n];
    assemble(state, params, &src, &mut flat);
    let mut it = flat.chunks_exact(n).map(|c| c.to_vec());
    Ok(EtaDerivative {
        deta: it.next().unwrap(),
        dx: it.next().unwrap(),
        du: it.next().unwrap(),
        dv: it.next().unwrap(),
    })
}

fn pack(s: &EtaState) -> Vec<f64> {
    [&s.eta, &s.x, &s.u, &s.v].iter().flat_map(|a| a.iter().copied()).collect()
}

fn unpack_into(flat: &[f64], s: &mut EtaState) {
    let n = s.len();
    s.eta.copy_from_slice(&flat[..n]);
    s.x.copy_from_slice(&flat[n..2 * n]);
    s.u.copy_from_slice(&flat[2 * n..3 * n]);
    s.v.copy_from_slice(&flat[3 * n..]);
}

pub fn step_rk4_eta(state: &EtaState, params: &GchParams, dt: f64) -> Result<EtaState> {
    if !(dt > 0.0) {
        return Err(GchError::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    let mut stage = state.clone();
    let next = rk4_packed(&pack(state), state.t, dt, |t, yy, out| {
        unpack_into(yy, &mut stage);
        stage.t = t;
        let src = eta_sources(&stage, params)?;
        assemble(&stage, params, &src, out);
        Ok(())
    })?;
    let mut out = state.clone();
    unpack_into(&next, &mut out);
    out.t = state.t + dt;
    if !out.all_finite() {
        return Err(GchError::NumericalBlowup { t: out.t, what: "non-finite value in η state".into() });
    }
    Ok(out)
}

/// Physical energy `∫(u² + u_x²)dx` plus the singular part scaled by `e^{-2λt}`,
/// written in label measure.
pub fn energy_eta(state: &EtaState, params: &GchParams, initial_energy: f64) -> EnergyReport {
    let n = state.len();
    let e = state.weight(params);
    let w = trapezoid_weights_nonuniform(&state.eta);
    let (mut total, mut kin) = (0.0, 0.0);
    for j in 0..n {
        let (c2, s2) = (cos2_half(state.v[j]), sin2_half(state.v[j]));
        let d = c2 + e * s2;
        let a = state.u[j] * state.u[j] * c2 / d;
        kin += w[j] * a;
        total += w[j] * (a + s2 / d);
    }
    EnergyReport {
        t: state.t,
        energy: total,
        bound: (params.energy_growth_rate() * state.t).exp() * initial_energy,
        de_dt: -2.0 * params.k * kin - 2.0 * params.lambda * total,
        sup_u: state.u.iter().fold(0.0, |m, u| m.max(u.abs())),
    }
}

pub fn reconstruct_eta(state: &EtaState, params: &GchParams) -> Result<EulerianField> {
    let n = state.len();
    let tol = grid_tolerance((state.eta[n - 1] - state.eta[0]) / (n - 1) as f64);
    field_from_nodes(state.t, params.lambda, tol, &state.x, &state.u, &state.v)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EtaSnapshot {
    pub state: EtaState,
    pub energy: EnergyReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EtaTrajectory {
    pub snapshots: Vec<EtaSnapshot>,
    pub energy_log: Vec<EnergyReport>,
    pub final_state: EtaState,
    pub dt: f64,
}

/// Fixed-step RK4 integration with the same step and snapshot rules as
/// [`crate::semilinear::integrate`].
pub fn integrate_eta(
    state0: &EtaState,
    params: &GchParams,
    t_end: f64,
    dt: f64,
    snapshot_times: &[f64],
) -> Result<EtaTrajectory> {
    params.validate()?;
    let steps = step_count(t_end, dt)?;
    let dt = t_end / steps as f64;
    let wanted = snapshot_steps(snapshot_times, t_end, steps)?;
    let e0 = energy_eta(state0, params, 0.0).energy;
    let mut state = state0.clone();
    let mut snaps: Vec<Option<EtaSnapshot>> = vec![None; wanted.len()];
    let mut log = Vec::with_capacity(steps + 1);
    for i in 0..=steps {
        if i > 0 {
            state = step_rk4_eta(&state, params, dt)?;
            state.t = i as f64 * dt;
        }
        let rep = energy_eta(&state, params, e0);
        if rep.energy > rep.bound * (1.0 + TOL_ENERGY) + f64::MIN_POSITIVE {
            return Err(GchError::EnergyBoundViolated { t: rep.t, energy: rep.energy, bound: rep.bound });
        }
        for (slot, &w) in snaps.iter_mut().zip(&wanted) {
            if w == i {
                *slot = Some(EtaSnapshot { state: state.clone(), energy: rep });
            }
        }
        log.push(rep);
    }
    Ok(EtaTrajectory {
        snapshots: snaps.into_iter().map(|s| s.expect("every snapshot step is visited")).collect(),
        energy_log: log,
        final_state: state,
        dt,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lagrangian::LagrangianState;
    use crate::model::{make_preset, InitialProfile, NonlinearitySpec, Preset};
    use crate::nonlocal::KernelWorkspace;
    use crate::semilinear::rhs;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_state(n: usize, t: f64, rng: &mut ChaCha8Rng) -> EtaState {
        let mut eta = vec![-2.0];
        for _ in 1..n {
            let last = *eta.last().unwrap();
            eta.push(last + rng.gen_range(0.02..0.3));
        }
        EtaState {
            t,
            x: eta.clone(),
            eta,
            u: (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            v: (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect(),
        }
    }

    #[test]
    fn zero_state_moves_with_beta() {
        let s = eta_from_initial(
            &InitialProfile::Zero.sample(-5.0, 5.0, 11).unwrap(),
            GridSpec::new(21, 4.0).unwrap(),
        )
        .unwrap();
        let p = GchParams::new(0.5, 0.3, 0.2, 0.1, NonlinearitySpec::square()).unwrap();
        let d = rhs_eta(&s, &p).unwrap();
        assert!(d.deta.iter().chain(&d.dx).all(|&v| v == 0.3));
        assert!(d.du.iter().chain(&d.dv).all(|&v| v == 0.0));
    }

    #[test]
    fn sources_match_direct_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = GchParams::new(0.8, 0.0, 0.6, 0.4, NonlinearitySpec::polynomial(vec![0.0, 0.1, 1.0]).unwrap()).unwrap();
        let s = random_state(33, 0.7, &mut rng);
        let fast = eta_sources(&s, &p).unwrap();
        let e = (2.0f64 * 0.4 * 0.7).exp();
        let n = 33;
        let xeta = |j: usize| {
            let c = (s.v[j] / 2.0).cos().powi(2);
            c / (c + e * (s.v[j] / 2.0).sin().powi(2))
        };
        let mut pos = vec![0.0; n];
        for j in 1..n {
            pos[j] = pos[j - 1] + 0.5 * (s.eta[j] - s.eta[j - 1]) * (xeta(j - 1) + xeta(j));
        }
        for j in 0..n {
            let (mut p1, mut d1, mut p2, mut d2) = (0.0, 0.0, 0.0, 0.0);
            for l in 0..n {
                let wl = 0.5 * (if l > 0 { s.eta[l] - s.eta[l - 1] } else { 0.0 } + if l + 1 < n { s.eta[l + 1] - s.eta[l] } else { 0.0 });
                let c = (s.v[l] / 2.0).cos().powi(2);
                let sn = (s.v[l] / 2.0).sin().powi(2);
                let dens = 1.0 / (c + e * sn);
                let g1 = dens * ((s.u[l] * s.u[l] + 0.1 * s.u[l]) * c + 0.4 * sn);
                let g2 = dens * 0.6 * s.u[l] * c;
                let k = 0.5 * wl * (-(pos[j] - pos[l]).abs()).exp();
                let sg = (l as f64 - j as f64).signum() * if l == j { 0.0 } else { 1.0 };
                p1 += k * g1;
                d1 += sg * k * g1;
                p2 += k * g2;
                d2 += sg * k * g2;
            }
            for (a, b) in [(fast.p1[j], p1), (fast.dx_p1[j], d1), (fast.p2[j], p2), (fast.dx_p2[j], d2)] {
                assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0), "j={j}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn undamped_case_matches_characteristic_rhs() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = GchParams::new(1.3, 0.2, 0.5, 0.0, NonlinearitySpec::polynomial(vec![0.0, -0.4, 1.0]).unwrap()).unwrap();
        let n = 65;
        let mut y = LagrangianState::zero(GridSpec::new(n, 4.0).unwrap());
        for j in 0..n {
            y.u[j] = rng.gen_range(-1.0..1.0);
            y.v[j] = rng.gen_range(-3.0..3.0);
        }
        // at ξ = 1 and λ = 0 the label sets coincide
        let s = EtaState { t: 0.0, eta: y.y.clone(), x: y.x.clone(), u: y.u.clone(), v: y.v.clone() };
        let dy = rhs(&y, &p, &mut KernelWorkspace::new(n)).unwrap();
        let de = rhs_eta(&s, &p).unwrap();
        for j in 0..n {
            assert!((dy.du[j] - de.du[j]).abs() < 1e-12);
            assert!((dy.dv[j] - de.dv[j]).abs() < 1e-12);
            assert!((dy.dx[j] - de.dx[j]).abs() < 1e-12);
        }
        // G increments are the cell averages of the relative density rate
        for j in 0..n - 1 {
            let slope = (de.deta[j + 1] - de.deta[j]) / y.dy;
            assert!((slope - 0.5 * (dy.dxi[j] + dy.dxi[j + 1])).abs() < 1e-12);
        }
    }

    #[test]
    fn labels_coincide_with_characteristic_coordinate_at_start() {
        let data = InitialProfile::Peakon { c: 1.0, center: 0.0 }.sample(-40.0, 40.0, 8001).unwrap();
        let grid = GridSpec::new(257, 42.0).unwrap();
        let s = eta_from_initial(&data, grid).unwrap();
        let y = forward_transform(&data, grid).unwrap();
        assert_eq!(s.eta, y.y);
        assert_eq!(s.x, y.x);
        for j in 0..256 {
            assert!(s.eta[j + 1] - s.eta[j] >= s.x[j + 1] - s.x[j] - 1e-12);
        }
    }

    #[test]
    fn zero_data_zero_trajectory() {
        let s = eta_from_initial(&InitialProfile::Zero.sample(-5.0, 5.0, 11).unwrap(), GridSpec::new(17, 4.0).unwrap()).unwrap();
        let p = make_preset(&Preset::Ch).unwrap();
        let tr = integrate_eta(&s, &p, 0.5, 0.05, &[0.5]).unwrap();
        assert!(tr.final_state.u.iter().chain(&tr.final_state.v).all(|&v| v == 0.0));
        assert_eq!(tr.final_state.x, s.x);
    }
}
