//! Solvers and verification tools for the generalized Camassa–Holm family
//! `u_t + (αu + β)u_x + ∂x p*(h(u) + α/2 u_x²) + k p*u + λu = 0`
//! with `p(x) = ½ e^{-|x|}`.

pub mod error;
pub mod eta;
pub mod eulerian;
pub mod io;
pub mod lagrangian;
pub mod model;
pub mod nonlocal;
pub mod semilinear;
pub mod verify;

pub use error::{GchError, Result};

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
