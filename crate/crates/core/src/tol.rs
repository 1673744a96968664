//! Pinned verification tolerances.
//!
//! Every acceptance threshold used by the campaigns and the acceptance
//! suite lives here, so no test carries an ad-hoc magic number. Values fall
//! into three bands: machine-level (exact algebra plus rounding), spectral
//! (smooth fields at the working resolutions), and finite-difference
//! (central differences in time or in the deformation parameter).

/// Unit-mass check for volume forms in the normalized space.
pub const UNIT_MASS: f64 = 1e-12;

/// Zero-integral check for tangent volume components.
pub const ZERO_MEAN: f64 = 1e-12;

/// Relative energy drift of the closed-form geodesic, |G_t - G_0| / |G_0|.
pub const ENERGY_DRIFT: f64 = 1e-8;

/// Mass drift |∫Ω_t - 1| along geodesics.
pub const MASS_DRIFT: f64 = 1e-10;

/// Minimal measured order for the Runge-Kutta vs closed-form study.
pub const RK4_ORDER_FLOOR: f64 = 3.8;

/// Divergence-freeness of projected seeds.
pub const SEED_RESIDUAL: f64 = 1e-8;

/// Divergence residual ceiling along geodesics at N = 64 (d = 2).
pub const F_CONSERVATION_SUP: f64 = 1e-6;

/// Required residual contraction under N: 32 -> 64, spectral scheme.
pub const F_CONSERVATION_CONTRACTION: f64 = 8.0;

/// Negative-control floor: a deliberately broken seed must exceed this.
pub const F_CONSERVATION_NEGATIVE_FLOOR: f64 = 1e-3;

/// Pointwise J^2 + Id drift along anti-invariant geodesics.
pub const ACS_SQUARE: f64 = 1e-12;

/// Anti-commutation drift of the speed endomorphism with J along geodesics.
pub const ACS_ANTICOMMUTE: f64 = 1e-10;

/// Central-difference residual of the J evolution law at h = 1e-3.
pub const ACS_EVOLUTION: f64 = 1e-5;

/// Chern-Ricci invariance ceiling, flat base (the form stays at zero).
pub const MAIN_FLAT_SUP: f64 = 1e-6;

/// Chern-Ricci invariance ceiling, curved integrable base.
pub const MAIN_CURVED_SUP: f64 = 1e-5;

/// The curved base must have a genuinely nonzero reference form.
pub const MAIN_RHO_FLOOR: f64 = 1e-2;

/// Acceptable band for measured second-order slopes of central differences.
pub const SLOPE_BAND: (f64, f64) = (1.8, 2.2);

/// Hard-tier identity ceiling at N = 64, d = 2.
pub const IDENTITY_HARD: f64 = 1e-6;

/// Two-route Chern-Ricci agreement on integrable samples.
pub const TWO_ROUTE: f64 = 1e-7;

/// Weighted-divergence adjointness residual over random pairs.
pub const ADJOINTNESS: f64 = 1e-8;

/// Orbit-orthogonality pairing ceiling for divergence-free pairs.
pub const ORBIT_ORTHOGONALITY: f64 = 1e-8;

/// Gauge invariance of the volume Chern-Ricci form.
pub const GAUGE_INVARIANCE: f64 = 1e-9;

/// Default floor for the volume ratio before a geodesic counts as degenerate.
pub const U_FLOOR: f64 = 1e-6;

/// Time-quadrature tolerance for the per-node integral of 1/u.
pub const TIME_QUADRATURE: f64 = 1e-12;

/// Tolerance used when the pointwise matrix exponential checks that the
/// symmetrized conjugate is actually symmetric.
pub const SYMMETRIZATION: f64 = 1e-10;

/// Frame density floor for the canonical-bundle frame.
pub const FRAME_FLOOR: f64 = 1e-3;
