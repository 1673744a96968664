//! Almost-complex structures compatible with the standard symplectic form.
//!
//! The symplectic form is the constant-coefficient `ω = Σ_r dx^{2r} ∧ dx^{2r+1}`
//! (adjacent coordinate pairs), so `dω = 0` holds exactly. A structure `J`
//! is compatible when `J² = -Id` and `g := -ωJ` is a Riemannian metric; the
//! correspondence `J = -ω^{-1} g` is the bridge between metric paths and
//! `J` paths used throughout.
//!
//! Complex-type conventions (pinned once by the flat calibration test and
//! recorded in `CONVENTIONS.md`):
//!
//! * (1,0)-forms: `β^{1,0} = ½(β + i β∘J)`, so `β∘J = -i β` on (1,0);
//! * (1,0)-vectors: `ξ^{1,0} = ½(ξ + i Jξ)`, so `J ξ = -i ξ` on (1,0);
//! * `d^c u = ½ du∘J` and `dd^c u = ½ d(du∘J)`.

mod nijenhuis;
mod typeproj;

pub use nijenhuis::{lie_bracket, nijenhuis, nijenhuis_apply, nijenhuis_bracket_oracle};
pub use typeproj::{
    ddc, dc_one_form, del_function, delbar_function, one_form_01, one_form_10, two_form_11,
    two_form_20_02, two_form_compose_j, vector_01, vector_10,
};

use crate::error::{Error, Result};
use crate::fields::field::{GridField, Rank};
use crate::fields::forms::{subset_position, unpack_two_form};
use crate::fields::grid::GridSpec;
use crate::fields::linalg;
use crate::fields::metric::MetricField;
use crate::fields::tensor::{endo_identity, endo_mul};
use crate::geometry::{covariant_derivative, Connection};

/// The standard symplectic form on `T^d`, packed.
pub fn standard_omega(spec: GridSpec) -> GridField<f64> {
    let d = spec.dim;
    let mut om = GridField::zeros(spec, Rank::Form(2));
    let mut positions = Vec::new();
    for r in 0..d / 2 {
        positions.push(subset_position(d, &[2 * r, 2 * r + 1]));
    }
    for node in 0..spec.nodes() {
        for &p in &positions {
            om.set_comp(node, p, 1.0);
        }
    }
    om
}

/// The flat compatible structure `J₀ = -ω^{-1}` (blockwise
/// `e_{2r} ↦ -e_{2r+1}`, `e_{2r+1} ↦ e_{2r}`).
pub fn standard_j(spec: GridSpec) -> GridField<f64> {
    let d = spec.dim;
    GridField::from_fn(spec, Rank::Endo, |_, _, out| {
        for r in 0..d / 2 {
            out[(2 * r) * d + (2 * r + 1)] = 1.0;
            out[(2 * r + 1) * d + (2 * r)] = -1.0;
        }
    })
}

/// An almost-complex structure together with the fixed reference 2-form.
#[derive(Debug, Clone)]
pub struct AcsField {
    j: GridField<f64>,
    omega: GridField<f64>,
    square_residual: f64,
    polar_retracted: bool,
}

impl AcsField {
    /// Wraps raw fields without validation. For diagnostics and negative
    /// controls only; the checked path is [`acs_from_metric`].
    pub fn from_raw(j: GridField<f64>, omega: GridField<f64>) -> Self {
        let square_residual = {
            let jj = endo_mul(&j, &j);
            jj.add(&endo_identity(*j.spec())).expect("same grid").sup_norm()
        };
        AcsField { j, omega, square_residual, polar_retracted: false }
    }

    pub fn j(&self) -> &GridField<f64> {
        &self.j
    }

    pub fn omega(&self) -> &GridField<f64> {
        &self.omega
    }

    pub fn spec(&self) -> &GridSpec {
        self.j.spec()
    }

    pub fn square_residual(&self) -> f64 {
        self.square_residual
    }

    pub fn polar_retracted(&self) -> bool {
        self.polar_retracted
    }

    /// `‖J² + Id‖_∞`, recomputed.
    pub fn square_residual_now(&self) -> f64 {
        let jj = endo_mul(&self.j, &self.j);
        jj.add(&endo_identity(*self.spec())).expect("same grid").sup_norm()
    }

    /// The compatible metric `g = -ωJ` as a field (caller wraps it).
    pub fn metric_field(&self) -> GridField<f64> {
        let spec = *self.spec();
        let d = spec.dim;
        let full = unpack_two_form(&self.omega);
        let mut out = GridField::zeros(spec, Rank::SymTwo);
        for node in 0..spec.nodes() {
            let om = full.node(node);
            let jb = self.j.node(node);
            let ob = out.node_mut(node);
            for i in 0..d {
                for j in 0..d {
                    let mut s = 0.0;
                    for k in 0..d {
                        s -= om[i * d + k] * jb[k * d + j];
                    }
                    ob[i * d + j] = s;
                }
            }
        }
        out.symmetrize_two_tensor();
        out
    }

    /// Compatibility residual `‖g(J·, J·) - g‖_∞` against a given metric.
    pub fn compatibility_residual(&self, g: &MetricField) -> f64 {
        let spec = *self.spec();
        let d = spec.dim;
        let mut worst = 0.0f64;
        let mut tmp = [0.0f64; linalg::DMAX * linalg::DMAX];
        let mut jt = [0.0f64; linalg::DMAX * linalg::DMAX];
        let mut pulled = [0.0f64; linalg::DMAX * linalg::DMAX];
        for node in 0..spec.nodes() {
            let jb = self.j.node(node);
            let gb = g.g_at(node);
            linalg::mat_transpose(d, jb, &mut jt);
            linalg::mat_mul(d, &jt[..d * d], gb, &mut tmp);
            linalg::mat_mul(d, &tmp[..d * d], jb, &mut pulled);
            for c in 0..d * d {
                worst = worst.max((pulled[c] - gb[c]).abs());
            }
        }
        worst
    }
}

/// Builds the compatible structure `J = -ω^{-1} g`.
///
/// When the raw product fails `J² = -Id` beyond tolerance (the metric is
/// not ω-compatible), the pointwise polar retraction
/// `J = A (A^{T_g} A)^{-1/2}` with `A = -ω^{-1} g` is applied and flagged;
/// `A` is always g-skew, so the retracted structure is compatible with a
/// retracted metric `-ωJ`.
pub fn acs_from_metric(omega: &GridField<f64>, g: &MetricField) -> Result<AcsField> {
    let spec = *g.spec();
    let d = spec.dim;
    let full = unpack_two_form(omega);
    let mut j = GridField::zeros(spec, Rank::Endo);
    let mut om_inv = [0.0f64; linalg::DMAX * linalg::DMAX];
    for node in 0..spec.nodes() {
        if !linalg::inverse(d, full.node(node), &mut om_inv) {
            return Err(Error::IncompatiblePair);
        }
        let gb = g.g_at(node);
        let jb = j.node_mut(node);
        for i in 0..d {
            for k in 0..d {
                let mut s = 0.0;
                for m in 0..d {
                    s -= om_inv[i * d + m] * gb[m * d + k];
                }
                jb[i * d + k] = s;
            }
        }
    }

    let square_residual = {
        let jj = endo_mul(&j, &j);
        jj.add(&endo_identity(spec))?.sup_norm()
    };
    if square_residual <= crate::tol::ACS_ANTICOMMUTE {
        return Ok(AcsField {
            j,
            omega: omega.clone(),
            square_residual,
            polar_retracted: false,
        });
    }

    // polar retraction: S = -A² is g-symmetric positive, J = A S^{-1/2}
    let s_field = endo_mul(&j, &j).scale(-1.0);
    let s_invsqrt = g_symmetric_func(&s_field, g, |x| {
        if x > 0.0 {
            1.0 / x.sqrt()
        } else {
            f64::NAN
        }
    })?;
    let retracted = endo_mul(&j, &s_invsqrt);
    let res = {
        let jj = endo_mul(&retracted, &retracted);
        jj.add(&endo_identity(spec))?.sup_norm()
    };
    if !(res <= crate::tol::ACS_ANTICOMMUTE) {
        return Err(Error::IncompatiblePair);
    }
    // the retracted metric -ωJ must still be Riemannian
    let candidate = AcsField {
        j: retracted,
        omega: omega.clone(),
        square_residual: res,
        polar_retracted: true,
    };
    MetricField::new(candidate.metric_field()).map_err(|_| Error::IncompatiblePair)?;
    Ok(candidate)
}

/// Applies a spectral function to a g-symmetric endomorphism field via the
/// `g^{1/2}`-conjugated symmetric eigendecomposition.
fn g_symmetric_func(
    a: &GridField<f64>,
    g: &MetricField,
    f: impl Fn(f64) -> f64,
) -> Result<GridField<f64>> {
    let spec = *g.spec();
    let d = spec.dim;
    let mut out = GridField::zeros(spec, Rank::Endo);
    let mut s = [0.0f64; linalg::DMAX * linalg::DMAX];
    let mut s_inv = [0.0f64; linalg::DMAX * linalg::DMAX];
    let mut b = [0.0f64; linalg::DMAX * linalg::DMAX];
    let mut tmp = [0.0f64; linalg::DMAX * linalg::DMAX];
    let mut e = [0.0f64; linalg::DMAX * linalg::DMAX];
    for node in 0..spec.nodes() {
        let gb = g.g_at(node);
        linalg::sym_func(d, gb, f64::sqrt, &mut s);
        linalg::sym_func(d, gb, |x| 1.0 / x.sqrt(), &mut s_inv);
        linalg::mat_mul(d, &s[..d * d], a.node(node), &mut tmp);
        linalg::mat_mul(d, &tmp[..d * d], &s_inv[..d * d], &mut b);
        for i in 0..d {
            for jj in i + 1..d {
                let m = 0.5 * (b[i * d + jj] + b[jj * d + i]);
                b[i * d + jj] = m;
                b[jj * d + i] = m;
            }
        }
        linalg::sym_func(d, &b[..d * d], &f, &mut e);
        if e[..d * d].iter().any(|v| !v.is_finite()) {
            return Err(Error::NonDiagonalizable(f64::NAN));
        }
        linalg::mat_mul(d, &s_inv[..d * d], &e[..d * d], &mut tmp);
        linalg::mat_mul(d, &tmp[..d * d], &s[..d * d], out.node_mut(node));
    }
    Ok(out)
}

/// J-anti-invariant part of an endomorphism: `½(A + J A J)`.
///
/// The output anti-commutes with `J` exactly (up to rounding) and the map
/// is idempotent; for lowered 2-tensors this realizes `v = -J^* v J`.
pub fn anti_invariant_part(acs: &AcsField, a: &GridField<f64>) -> GridField<f64> {
    let jaj = endo_mul(&acs.j, &endo_mul(a, &acs.j));
    a.add(&jaj).expect("same grid").scale(0.5)
}

/// Covariant derivative `∇J` (rank `EndoCov`).
pub fn cov_j(conn: &Connection, acs: &AcsField) -> GridField<f64> {
    covariant_derivative(conn, &acs.j).expect("endo rank supported")
}

/// Directional slice `(∇_{e_k} J)` of `∇J` at a node.
pub fn cov_j_direction(nabla_j: &GridField<f64>, node: usize, k: usize, d: usize, out: &mut [f64]) {
    let nb = nabla_j.node(node);
    for i in 0..d {
        for j in 0..d {
            out[i * d + j] = nb[(i * d + j) * d + k];
        }
    }
}
