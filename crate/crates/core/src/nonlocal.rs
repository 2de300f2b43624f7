//! Nonlocal source terms `P1 = p * (h(u) + α/2 u_x²)`, `P2 = k p * u` with
//! `p = ½ e^{-|x|}`, evaluated in label coordinates.
//!
//! Distances `|x(Y) - x(Y')|` are measured by the cumulative metric
//! `c(Y) = ∫ ξ cos²(v/2)`, so the kernel splits into one forward and one
//! backward recursion and costs O(n) per evaluation.

use crate::error::{GchError, Result};
use crate::lagrangian::{cos2_half, sin2_half, LagrangianState};
use crate::model::GchParams;

/// Nodal values of the four source terms.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SourceTerms {
    pub p1: Vec<f64>,
    pub dx_p1: Vec<f64>,
    pub p2: Vec<f64>,
    pub dx_p2: Vec<f64>,
}

impl SourceTerms {
    pub fn zeros(n: usize) -> Self {
        SourceTerms {
            p1: vec![0.0; n],
            dx_p1: vec![0.0; n],
            p2: vec![0.0; n],
            dx_p2: vec![0.0; n],
        }
    }

    fn resize(&mut self, n: usize) {
        for v in [&mut self.p1, &mut self.dx_p1, &mut self.p2, &mut self.dx_p2] {
            v.resize(n, 0.0);
        }
    }
}

/// Scratch buffers reused across evaluations.
#[derive(Debug, Clone, Default)]
pub struct KernelWorkspace {
    /// Cumulative metric at the nodes, `c[0] = 0`.
    pub c: Vec<f64>,
    decay: Vec<f64>,
    weights: Vec<f64>,
    f1: Vec<f64>,
    f2: Vec<f64>,
    fwd: Vec<f64>,
    bwd: Vec<f64>,
}

impl KernelWorkspace {
    pub fn new(n: usize) -> Self {
        KernelWorkspace {
            c: vec![0.0; n],
            decay: vec![0.0; n.saturating_sub(1)],
            weights: vec![0.0; n],
            f1: vec![0.0; n],
            f2: vec![0.0; n],
            fwd: vec![0.0; n],
            bwd: vec![0.0; n],
        }
    }

    fn ensure(&mut self, n: usize) {
        if self.c.len() != n {
            *self = KernelWorkspace::new(n);
        }
    }
}

/// Trapezoid weights on a uniform grid.
pub fn trapezoid_weights(n: usize, h: f64) -> Vec<f64> {
    let mut w = vec![h; n];
    w[0] = 0.5 * h;
    w[n - 1] = 0.5 * h;
    w
}

/// Trapezoid weights on arbitrary nodes.
pub fn trapezoid_weights_nonuniform(nodes: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    let mut w = vec![0.0; n];
    for j in 0..n - 1 {
        let h = 0.5 * (nodes[j + 1] - nodes[j]);
        w[j] += h;
        w[j + 1] += h;
    }
    w
}

/// Fills `ws.c` with the trapezoid cumulative integral of `ξ cos²(v/2)`.
pub fn cumulative_metric(state: &LagrangianState, ws: &mut KernelWorkspace) -> Result<()> {
    let n = state.len();
    ws.ensure(n);
    let m: Vec<f64> = state.metric();
    if let Some(j) = m.iter().position(|v| !(*v >= 0.0)) {
        return Err(GchError::StateCorrupt(format!(
            "metric ξcos²(v/2) = {} at node {j}",
            m[j]
        )));
    }
    ws.c[0] = 0.0;
    for j in 0..n - 1 {
        ws.c[j + 1] = ws.c[j] + 0.5 * state.dy * (m[j] + m[j + 1]);
    }
    Ok(())
}

/// Two-sided exponential sum on a monotone coordinate:
/// `sum_j = Σ_l w_l e^{-|c_j - c_l|} f_l` and
/// `anti_j = Σ_l w_l sign(c_l - c_j) e^{-|c_j - c_l|} f_l`, given
/// `decay[j] = e^{-(c_{j+1} - c_j)}`.
pub(crate) fn exp_kernel_scan(
    decay: &[f64],
    weights: &[f64],
    f: &[f64],
    fwd: &mut [f64],
    bwd: &mut [f64],
    sum: &mut [f64],
    anti: &mut [f64],
) {
    let n = f.len();
    fwd[0] = 0.0;
    for j in 0..n - 1 {
        fwd[j + 1] = decay[j] * (fwd[j] + weights[j] * f[j]);
    }
    bwd[n - 1] = 0.0;
    for j in (0..n - 1).rev() {
        bwd[j] = decay[j] * (bwd[j + 1] + weights[j + 1] * f[j + 1]);
    }
    for j in 0..n {
        sum[j] = fwd[j] + bwd[j] + weights[j] * f[j];
        anti[j] = bwd[j] - fwd[j];
    }
}

/// Source terms from prepared densities on a monotone coordinate `c`.
/// `f1` is the density of `h(u) + α/2 u_x²` and `f2` of `k u` with respect
/// to the quadrature weights.
pub(crate) fn sources_from_densities(
    c: &[f64],
    weights: &[f64],
    f1: &[f64],
    f2: &[f64],
    decay: &mut Vec<f64>,
    fwd: &mut Vec<f64>,
    bwd: &mut Vec<f64>,
    out: &mut SourceTerms,
) {
    let n = c.len();
    out.resize(n);
    decay.resize(n - 1, 0.0);
    fwd.resize(n, 0.0);
    bwd.resize(n, 0.0);
    for j in 0..n - 1 {
        decay[j] = (c[j] - c[j + 1]).exp();
    }
    exp_kernel_scan(decay, weights, f1, fwd, bwd, &mut out.p1, &mut out.dx_p1);
    exp_kernel_scan(decay, weights, f2, fwd, bwd, &mut out.p2, &mut out.dx_p2);
    for v in [&mut out.p1, &mut out.dx_p1, &mut out.p2, &mut out.dx_p2] {
        v.iter_mut().for_each(|s| *s *= 0.5);
    }
}

/// Densities of the two convolution integrands in label coordinates.
pub(crate) fn label_densities(state: &LagrangianState, params: &GchParams, f1: &mut [f64], f2: &mut [f64]) {
    for j in 0..state.len() {
        let (c2, s2) = (cos2_half(state.v[j]), sin2_half(state.v[j]));
        let xi = state.xi[j];
        f1[j] = xi * (params.h.eval(state.u[j]) * c2 + 0.5 * params.alpha * s2);
        f2[j] = params.k * xi * state.u[j] * c2;
    }
}

/// Evaluates `P1, ∂xP1, P2, ∂xP2` at every node in O(n).
pub fn compute_sources(
    state: &LagrangianState,
    params: &GchParams,
    ws: &mut KernelWorkspace,
) -> Result<SourceTerms> {
    let mut out = SourceTerms::zeros(state.len());
    compute_sources_into(state, params, ws, &mut out)?;
    Ok(out)
}

/// Allocation-free variant of [`compute_sources`].
pub fn compute_sources_into(
    state: &LagrangianState,
    params: &GchParams,
    ws: &mut KernelWorkspace,
    out: &mut SourceTerms,
) -> Result<()> {
    cumulative_metric(state, ws)?;
    let n = state.len();
    let KernelWorkspace { c, decay, weights, f1, f2, fwd, bwd } = ws;
    weights.clear();
    weights.extend(trapezoid_weights(n, state.dy));
    label_densities(state, params, f1, f2);
    sources_from_densities(c, weights, f1, f2, decay, fwd, bwd, out);
    Ok(())
}

/// A priori bounds on `|P1|` and `|∂xP2|` in terms of the energy.
pub fn source_bounds(params: &GchParams, energy: f64) -> (f64, f64) {
    let l = params.h.lipschitz_bound(energy.max(0.0).sqrt());
    let p1 = 0.5 * l + 0.25 * (l + params.alpha.abs()) * energy;
    let k = params.k.abs();
    (p1, 0.5 * k + 0.25 * k * energy)
}
