//! Numerical laboratory for the volume-coupled metric pairing on flat tori.
//!
//! The library works on the space of pairs (Riemannian metric, unit-mass
//! volume form) over the flat torus `T^d` (`d = 2` or `4`), carrying the
//! pseudo-Riemannian pairing
//!
//! ```text
//! G(u, U; v, V) = ∫ [ <u, v>_g  -  2 (U/Ω)(V/Ω) ] Ω .
//! ```
//!
//! Geodesics of `G` reduce to a per-node scalar ODE plus a pointwise matrix
//! exponential and are evaluated in closed form. On top of that sit the
//! Levi-Civita/curvature machinery, compatible almost-complex structures,
//! Chern-Ricci forms computed by two independent routes, and verification
//! campaigns that machine-check the conservation laws and curvature
//! identities these structures satisfy.
//!
//! Modules follow the pipeline:
//!
//! * [`fields`] — periodic grids, sampled tensor fields, spectral/finite
//!   difference calculus, pointwise matrix functions, `.gfld` I/O.
//! * [`geometry`] — connection, curvature, weighted divergence, Hessians,
//!   Lie derivatives and the divergence variation check.
//! * [`gspace`] — the pairing `G`, divergence-free tangent pairs, and the
//!   conjugate-gradient projector onto them.
//! * [`geodesic`] — closed-form geodesics, the independent Runge-Kutta
//!   integrator, and existence-window detection.
//! * [`almostcomplex`] — compatible almost-complex structures, Nijenhuis
//!   tensor, type projections, `d d^c`.
//! * [`chernricci`] — Chern-Ricci forms (frame route and curvature route),
//!   Bakry-Emery tensor, decomposition identities.
//! * [`experiments`] — sample corpus and verification campaigns.

pub mod almostcomplex;
pub mod chernricci;
pub mod error;
pub mod experiments;
pub mod fields;
pub mod geodesic;
pub mod geometry;
pub mod gspace;
pub mod tol;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};
