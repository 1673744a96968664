//! The pseudo-Riemannian pairing on (metric, volume) pairs, the
//! divergence-free tangent space, and its conjugate-gradient projector.
//!
//! A tangent pair `(v, V)` is divergence-free when
//!
//! ```text
//! D(v, V) := ∇^{*_Ω}(g^{-1} v) + ∇_g (V/Ω) = 0 ,
//! ```
//!
//! and the pairing of such pairs against orbit directions `(L_ξ g, L_ξ Ω)`
//! satisfies `G(t, orbit(ξ)) = 2 ∫ g(ξ, D t) Ω`, which is how the
//! orthogonality contract is verified.

mod project;
pub mod seed;

pub use project::{anti_invariant_frame, project_to_f, ProjectOptions};

use crate::error::Result;
use crate::fields::deriv::quadrature;
use crate::fields::field::{GridField, Rank};
use crate::fields::metric::{inner_sym, MetricField, VolumeForm};
use crate::fields::tensor::scalar_mul;
use crate::geometry::{christoffel, gradient, lie_derivative, weighted_divergence, Connection};
use crate::tol;

/// A point of the structure space: metric plus unit-mass volume form.
#[derive(Debug, Clone)]
pub struct StructurePoint {
    metric: MetricField,
    volume: VolumeForm,
}

impl StructurePoint {
    pub fn new(metric: MetricField, volume: VolumeForm) -> Result<Self> {
        metric.spec().same_grid(volume.spec())?;
        volume.assert_unit_mass()?;
        Ok(StructurePoint { metric, volume })
    }

    pub fn metric(&self) -> &MetricField {
        &self.metric
    }

    pub fn volume(&self) -> &VolumeForm {
        &self.volume
    }

    pub fn spec(&self) -> &crate::fields::grid::GridSpec {
        self.metric.spec()
    }

    /// Volume density as a scalar-rank field (for integrand assembly).
    pub fn weight(&self) -> GridField<f64> {
        self.volume.density().clone().with_rank(Rank::Scalar).expect("one component")
    }
}

/// A tangent pair `(v, V)`: symmetric 2-tensor plus zero-mass top form.
#[derive(Debug, Clone)]
pub struct TangentPair {
    v: GridField<f64>,
    vol: GridField<f64>,
}

impl TangentPair {
    pub fn new(mut v: GridField<f64>, vol: GridField<f64>) -> Result<Self> {
        if v.rank() != Rank::SymTwo {
            return Err(crate::error::Error::UnsupportedRank(format!(
                "tangent metric direction needs SymTwo, got {:?}",
                v.rank()
            )));
        }
        if vol.rank() != Rank::TopForm {
            return Err(crate::error::Error::UnsupportedRank(format!(
                "tangent volume direction needs TopForm, got {:?}",
                vol.rank()
            )));
        }
        v.spec().same_grid(vol.spec())?;
        let mean = quadrature(&vol);
        if mean.abs() > tol::ZERO_MEAN {
            return Err(crate::error::Error::InvalidField(format!(
                "tangent volume direction must have zero total mass (got {mean:.3e})"
            )));
        }
        v.symmetrize_two_tensor();
        Ok(TangentPair { v, vol })
    }

    pub fn zero(spec: crate::fields::grid::GridSpec) -> Self {
        TangentPair {
            v: GridField::zeros(spec, Rank::SymTwo),
            vol: GridField::zeros(spec, Rank::TopForm),
        }
    }

    pub fn v(&self) -> &GridField<f64> {
        &self.v
    }

    pub fn vol(&self) -> &GridField<f64> {
        &self.vol
    }

    /// Star identification of the metric direction: `v*_g = g^{-1} v`.
    pub fn v_star(&self, p: &StructurePoint) -> GridField<f64> {
        p.metric.endo_from_sym2(&self.v)
    }

    /// Star identification of the volume direction: `V*_Ω = V/Ω`.
    pub fn vol_star(&self, p: &StructurePoint) -> GridField<f64> {
        let spec = *self.vol.spec();
        let mut out = GridField::zeros(spec, Rank::Scalar);
        for node in 0..spec.nodes() {
            out.set_comp(node, 0, self.vol.comp(node, 0) / p.volume.density_at(node));
        }
        out
    }

    pub fn scale(&self, s: f64) -> Self {
        TangentPair { v: self.v.scale(s), vol: self.vol.scale(s) }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        Ok(TangentPair { v: self.v.add(&other.v)?, vol: self.vol.add(&other.vol)? })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        Ok(TangentPair { v: self.v.sub(&other.v)?, vol: self.vol.sub(&other.vol)? })
    }

    pub fn sup_norm(&self) -> f64 {
        self.v.sup_norm().max(self.vol.sup_norm())
    }
}

/// The pairing
/// `G(a, b) = ∫ [ <u, v>_g - 2 (U/Ω)(V/Ω) ] Ω`.
pub fn g_product(p: &StructurePoint, a: &TangentPair, b: &TangentPair) -> f64 {
    let metric_part = inner_sym(&p.metric, &a.v, &b.v);
    let ua = a.vol_star(p);
    let ub = b.vol_star(p);
    let mut integrand = GridField::zeros(*p.spec(), Rank::Scalar);
    for node in 0..p.spec().nodes() {
        integrand.set_comp(
            node,
            0,
            metric_part.comp(node, 0) - 2.0 * ua.comp(node, 0) * ub.comp(node, 0),
        );
    }
    quadrature(&scalar_mul(&integrand, &p.weight()))
}

/// The L²(g, Ω) norm of a vector field.
pub fn vector_l2_norm(p: &StructurePoint, w: &GridField<f64>) -> f64 {
    let sq = p.metric.dot_vectors(w, w);
    quadrature(&scalar_mul(&sq, &p.weight())).max(0.0).sqrt()
}

/// Divergence residual of a tangent pair with a precomputed connection:
/// `D(v, V)` as a vector field.
pub fn f_residual_field(
    p: &StructurePoint,
    conn: &Connection,
    t: &TangentPair,
) -> GridField<f64> {
    let h = t.v_star(p);
    let div = weighted_divergence(conn, &p.volume, &h);
    let grad = gradient(&p.metric, &t.vol_star(p));
    div.add(&grad).expect("same grid")
}

/// Divergence residual field and its L²(g, Ω) norm.
pub fn f_residual(p: &StructurePoint, t: &TangentPair) -> (GridField<f64>, f64) {
    let conn = christoffel(&p.metric);
    let field = f_residual_field(p, &conn, t);
    let norm = vector_l2_norm(p, &field);
    (field, norm)
}

/// `G(t, (L_ξ g, L_ξ Ω))` — the pairing against an orbit direction.
pub fn orbit_orthogonality_check(
    p: &StructurePoint,
    t: &TangentPair,
    xi: &GridField<f64>,
) -> f64 {
    let lg = lie_derivative(xi, p.metric.field()).expect("metric rank");
    let lo = lie_derivative(xi, p.volume.density()).expect("top form rank");
    let orbit = TangentPair { v: lg, vol: lo };
    g_product(p, t, &orbit)
}
