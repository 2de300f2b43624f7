// Shared fixtures and independent oracles for the integration targets.
#![allow(dead_code)]

use gch_core::eta::{eta_from_initial, integrate_eta, reconstruct_eta, EtaTrajectory};
use gch_core::eulerian::{integrate_eulerian, EulerianGrid, EulerianTrajectory};
use gch_core::lagrangian::{auto_half_width, eval_u_at, forward_transform, reconstruct, EulerianField, GridSpec, LagrangianState};
use gch_core::model::{make_preset, GchParams, InitialData, InitialProfile, Preset};
use gch_core::semilinear::{integrate, Trajectory};

pub fn ch() -> GchParams {
    make_preset(&Preset::Ch).unwrap()
}

pub fn gaussian(amp: f64) -> InitialProfile {
    InitialProfile::Gaussian { amp, width: 1.0, center: 0.0 }
}

/// Dense samples of a profile; `spacing` 1e-3 unless the profile is wide.
pub fn sampled(profile: &InitialProfile, radius: f64) -> InitialData {
    let m = (2.0 * radius / 1e-3).round() as usize + 1;
    profile.sample(-radius, radius, m).unwrap()
}

pub fn default_samples(profile: &InitialProfile) -> InitialData {
    let r = match profile {
        InitialProfile::Peakon { .. } => 40.0,
        _ => 12.0,
    };
    sampled(profile, r)
}

pub fn grid_for(data: &InitialData, params: &GchParams, n: usize, t_end: f64) -> GridSpec {
    GridSpec::new(n, auto_half_width(data, params, t_end).unwrap()).unwrap()
}

pub fn run_y(data: &InitialData, params: &GchParams, n: usize, t_end: f64, dt: f64, snaps: &[f64]) -> Trajectory {
    let s0 = forward_transform(data, grid_for(data, params, n, t_end)).unwrap();
    integrate(&s0, params, t_end, dt, snaps).unwrap()
}

pub fn run_eta(data: &InitialData, params: &GchParams, n: usize, t_end: f64, dt: f64, snaps: &[f64]) -> EtaTrajectory {
    let s0 = eta_from_initial(data, grid_for(data, params, n, t_end)).unwrap();
    integrate_eta(&s0, params, t_end, dt, snaps).unwrap()
}

pub fn run_eulerian(profile: &InitialProfile, params: &GchParams, half_width: f64, dx: f64, t_end: f64, dt: f64) -> EulerianTrajectory {
    let g = EulerianGrid::from_profile(profile, half_width, dx).unwrap();
    integrate_eulerian(&g, params, t_end, dt, &[t_end]).unwrap()
}

/// Every step time of a run of `t_end` with step `dt`.
pub fn every_step(t_end: f64, dt: f64) -> Vec<f64> {
    let steps = (t_end / dt).round() as usize;
    (0..=steps).map(|i| i as f64 * t_end / steps as f64).collect()
}

pub fn states(tr: &Trajectory) -> Vec<LagrangianState> {
    tr.snapshots.iter().map(|s| s.state.clone()).collect()
}

pub fn field_y(state: &LagrangianState, params: &GchParams) -> EulerianField {
    reconstruct(state, params).unwrap()
}

pub fn field_eta(tr: &EtaTrajectory, params: &GchParams) -> EulerianField {
    reconstruct_eta(&tr.final_state, params).unwrap()
}

/// `max |a - b|` over the samples of `a` inside `window` and both spans.
pub fn linf_on(a: &EulerianField, b: &EulerianField, window: (f64, f64)) -> f64 {
    let lo = window.0.max(b.x[0]);
    let hi = window.1.min(b.x[b.x.len() - 1]);
    a.x.iter()
        .zip(&a.u)
        .filter(|(x, _)| **x >= lo && **x <= hi)
        .map(|(x, u)| (u - eval_u_at(b, *x).unwrap()).abs())
        .fold(0.0, f64::max)
}

/// Relative discrete L² distance of `other` from `reference` on the
/// reference samples inside `other`'s span.
pub fn rel_l2(reference: &EulerianField, other: &EulerianField) -> f64 {
    let (lo, hi) = other.span();
    let (mut num, mut den) = (0.0, 0.0);
    for (x, u) in reference.x.iter().zip(&reference.u) {
        if *x >= lo && *x <= hi {
            let d = u - eval_u_at(other, *x).unwrap();
            num += d * d;
            den += u * u;
        }
    }
    (num / den).sqrt()
}

/// Traveling peakon `c e^{-|x - ct|}`.
pub fn peakon_exact(c: f64, t: f64, x: f64) -> f64 {
    c * (-(x - c * t).abs()).exp()
}

/// Kernel sums by direct double loop over the nodes, positions by an
/// explicit running trapezoid of `ξ cos²(v/2)`.
pub fn direct_sources(state: &LagrangianState, params: &GchParams) -> [Vec<f64>; 4] {
    let n = state.len();
    let m: Vec<f64> = (0..n).map(|j| state.xi[j] * 0.5 * (1.0 + state.v[j].cos())).collect();
    let mut pos = vec![0.0; n];
    for j in 1..n {
        pos[j] = pos[j - 1] + 0.5 * state.dy * (m[j - 1] + m[j]);
    }
    let w = |l: usize| if l == 0 || l == n - 1 { 0.5 * state.dy } else { state.dy };
    let mut out = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    for j in 0..n {
        for l in 0..n {
            let (u, v, xi) = (state.u[l], state.v[l], state.xi[l]);
            let c2 = 0.5 * (1.0 + v.cos());
            let s2 = 0.5 * (1.0 - v.cos());
            let g1 = xi * (params.h.eval(u) * c2 + 0.5 * params.alpha * s2);
            let g2 = params.k * xi * u * c2;
            let k = 0.5 * w(l) * (-(pos[j] - pos[l]).abs()).exp();
            let sg = if l > j { 1.0 } else if l < j { -1.0 } else { 0.0 };
            out[0][j] += k * g1;
            out[1][j] += sg * k * g1;
            out[2][j] += k * g2;
            out[3][j] += sg * k * g2;
        }
    }
    out
}

pub fn ratios(errs: &[f64]) -> Vec<f64> {
    errs.windows(2).map(|w| w[1] / w[0]).collect()
}
