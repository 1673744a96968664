//! Metric fields, volume forms, and the pointwise matrix exponential.

use super::deriv::quadrature;
use super::field::{GridField, Rank};
use super::grid::GridSpec;
use super::linalg;
use crate::error::{Error, Result};
use crate::tol;

/// A pointwise symmetric positive definite metric, with cached pointwise
/// inverse and determinant.
#[derive(Debug, Clone)]
pub struct MetricField {
    field: GridField<f64>,
    inv: Vec<f64>,
    det: Vec<f64>,
}

impl MetricField {
    pub fn new(mut field: GridField<f64>) -> Result<Self> {
        if field.rank() != Rank::SymTwo {
            return Err(Error::UnsupportedRank(format!(
                "metric needs SymTwo, got {:?}",
                field.rank()
            )));
        }
        field.symmetrize_two_tensor();
        let spec = *field.spec();
        let d = spec.dim;
        let mut inv = vec![0.0f64; spec.nodes() * d * d];
        let mut det = vec![0.0f64; spec.nodes()];
        for node in 0..spec.nodes() {
            let block = field.node(node);
            let min_eig = linalg::min_eigenvalue_sym(d, block);
            if !(min_eig > 0.0) {
                return Err(Error::SingularMetric { node, min_eig });
            }
            det[node] = linalg::det(d, block);
            if !linalg::inverse(d, block, &mut inv[node * d * d..(node + 1) * d * d]) {
                return Err(Error::SingularMetric { node, min_eig });
            }
        }
        Ok(MetricField { field, inv, det })
    }

    pub fn identity(spec: GridSpec) -> Self {
        let d = spec.dim;
        let field = GridField::from_fn(spec, Rank::SymTwo, |_, _, out| {
            for i in 0..d {
                out[i * d + i] = 1.0;
            }
        });
        MetricField::new(field).expect("identity metric is positive definite")
    }

    pub fn spec(&self) -> &GridSpec {
        self.field.spec()
    }

    pub fn field(&self) -> &GridField<f64> {
        &self.field
    }

    #[inline]
    pub fn g_at(&self, node: usize) -> &[f64] {
        self.field.node(node)
    }

    #[inline]
    pub fn inv_at(&self, node: usize) -> &[f64] {
        let dd = self.spec().dim * self.spec().dim;
        &self.inv[node * dd..(node + 1) * dd]
    }

    #[inline]
    pub fn det_at(&self, node: usize) -> f64 {
        self.det[node]
    }

    /// Density `√det g` of the Riemannian volume form.
    pub fn volume_density(&self) -> GridField<f64> {
        let spec = *self.spec();
        let mut out = GridField::zeros(spec, Rank::TopForm);
        for node in 0..spec.nodes() {
            out.set_comp(node, 0, self.det[node].sqrt());
        }
        out
    }

    /// The inverse metric as an endomorphism-storage field `g^{ij}`.
    pub fn inverse_field(&self) -> GridField<f64> {
        let spec = *self.spec();
        let mut out = GridField::zeros(spec, Rank::Endo);
        for node in 0..spec.nodes() {
            out.node_mut(node).copy_from_slice(self.inv_at(node));
        }
        out
    }

    /// Star identification of a symmetric 2-tensor: `v ↦ g^{-1} v`.
    pub fn endo_from_sym2(&self, v: &GridField<f64>) -> GridField<f64> {
        assert!(matches!(v.rank(), Rank::SymTwo | Rank::Cov2));
        let spec = *self.spec();
        let d = spec.dim;
        let mut out = GridField::zeros(spec, Rank::Endo);
        for node in 0..spec.nodes() {
            linalg::mat_mul(d, self.inv_at(node), v.node(node), out.node_mut(node));
        }
        out
    }

    /// Lowers an endomorphism with the metric: `A ↦ g A` (components
    /// `g_{ik} A^k_j`). Exactly symmetric output requires `A` g-symmetric;
    /// the caller decides whether to re-type as `SymTwo`.
    pub fn lower_endo(&self, a: &GridField<f64>) -> GridField<f64> {
        assert_eq!(a.rank(), Rank::Endo);
        let spec = *self.spec();
        let d = spec.dim;
        let mut out = GridField::zeros(spec, Rank::Cov2);
        for node in 0..spec.nodes() {
            linalg::mat_mul(d, self.g_at(node), a.node(node), out.node_mut(node));
        }
        out
    }

    /// Lowers a g-symmetric endomorphism into an exactly symmetric 2-tensor.
    pub fn sym2_from_endo(&self, a: &GridField<f64>) -> GridField<f64> {
        let mut low = self.lower_endo(a).with_rank(Rank::SymTwo).expect("same comps");
        low.symmetrize_two_tensor();
        low
    }

    /// g-transpose of an endomorphism: `A^T_g = g^{-1} A^T g`.
    pub fn transpose_endo(&self, a: &GridField<f64>) -> GridField<f64> {
        assert_eq!(a.rank(), Rank::Endo);
        let spec = *self.spec();
        let d = spec.dim;
        let mut out = GridField::zeros(spec, Rank::Endo);
        let mut at = [0.0f64; linalg::DMAX * linalg::DMAX];
        let mut tmp = [0.0f64; linalg::DMAX * linalg::DMAX];
        for node in 0..spec.nodes() {
            linalg::mat_transpose(d, a.node(node), &mut at);
            linalg::mat_mul(d, &at[..d * d], self.g_at(node), &mut tmp);
            linalg::mat_mul(d, self.inv_at(node), &tmp[..d * d], out.node_mut(node));
        }
        out
    }

    /// Raises a 1-form: `β ↦ g^{ij} β_j`.
    pub fn raise_one_form(&self, beta: &GridField<f64>) -> GridField<f64> {
        assert_eq!(beta.rank(), Rank::OneForm);
        let spec = *self.spec();
        let d = spec.dim;
        let mut out = GridField::zeros(spec, Rank::Vector);
        for node in 0..spec.nodes() {
            linalg::mat_vec(d, self.inv_at(node), beta.node(node), out.node_mut(node));
        }
        out
    }

    /// Lowers a vector: `ξ ↦ g_{ij} ξ^j`.
    pub fn lower_vector(&self, xi: &GridField<f64>) -> GridField<f64> {
        assert_eq!(xi.rank(), Rank::Vector);
        let spec = *self.spec();
        let d = spec.dim;
        let mut out = GridField::zeros(spec, Rank::OneForm);
        for node in 0..spec.nodes() {
            linalg::mat_vec(d, self.g_at(node), xi.node(node), out.node_mut(node));
        }
        out
    }

    /// Pointwise `g(ξ, η)` of two vector fields.
    pub fn dot_vectors(&self, xi: &GridField<f64>, eta: &GridField<f64>) -> GridField<f64> {
        assert_eq!(xi.rank(), Rank::Vector);
        assert_eq!(eta.rank(), Rank::Vector);
        let spec = *self.spec();
        let d = spec.dim;
        let mut out = GridField::zeros(spec, Rank::Scalar);
        for node in 0..spec.nodes() {
            let g = self.g_at(node);
            let a = xi.node(node);
            let b = eta.node(node);
            let mut s = 0.0;
            for i in 0..d {
                for j in 0..d {
                    s += g[i * d + j] * a[i] * b[j];
                }
            }
            out.set_comp(node, 0, s);
        }
        out
    }
}

/// A positive volume form `Ω = w · dx^1∧…∧dx^d`.
#[derive(Debug, Clone)]
pub struct VolumeForm {
    density: GridField<f64>,
}

impl VolumeForm {
    pub fn new(density: GridField<f64>) -> Result<Self> {
        if density.rank() != Rank::TopForm {
            return Err(Error::UnsupportedRank(format!(
                "volume form needs TopForm, got {:?}",
                density.rank()
            )));
        }
        let min = density.values().iter().cloned().fold(f64::INFINITY, f64::min);
        if !(min > 0.0) {
            return Err(Error::InvalidField(format!(
                "volume density must be positive (min {min:.3e})"
            )));
        }
        Ok(VolumeForm { density })
    }

    /// Rescales a positive density to total mass one.
    pub fn normalized(density: GridField<f64>) -> Result<Self> {
        let raw = VolumeForm::new(density)?;
        let mass = raw.mass();
        Ok(VolumeForm { density: raw.density.scale(1.0 / mass) })
    }

    /// The normalized Lebesgue volume form.
    pub fn uniform(spec: GridSpec) -> Self {
        let w = 1.0 / (2.0 * std::f64::consts::PI).powi(spec.dim as i32);
        VolumeForm {
            density: GridField::from_fn(spec, Rank::TopForm, |_, _, out| out[0] = w),
        }
    }

    pub fn spec(&self) -> &GridSpec {
        self.density.spec()
    }

    pub fn density(&self) -> &GridField<f64> {
        &self.density
    }

    #[inline]
    pub fn density_at(&self, node: usize) -> f64 {
        self.density.comp(node, 0)
    }

    pub fn mass(&self) -> f64 {
        quadrature(&self.density)
    }

    pub fn unit_mass_error(&self) -> f64 {
        (self.mass() - 1.0).abs()
    }

    pub fn assert_unit_mass(&self) -> Result<()> {
        let err = self.unit_mass_error();
        if err > tol::UNIT_MASS {
            return Err(Error::InvalidField(format!(
                "volume form mass deviates from 1 by {err:.3e}"
            )));
        }
        Ok(())
    }
}

/// Pointwise exponential of a g-symmetric endomorphism field.
///
/// Conjugating with `g^{1/2}` turns a g-symmetric block into a symmetric
/// one, which is then exponentiated through its eigendecomposition. The
/// symmetrization residual is the non-real-spectrum detector.
pub fn matrix_exp(a: &GridField<f64>, g: &MetricField) -> Result<GridField<f64>> {
    if a.rank() != Rank::Endo {
        return Err(Error::UnsupportedRank(format!("matrix_exp needs Endo, got {:?}", a.rank())));
    }
    a.spec().same_grid(g.spec())?;
    let spec = *a.spec();
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
        let mut asym = 0.0f64;
        let mut scale = 1.0f64;
        for i in 0..d {
            for j in 0..d {
                scale = scale.max(b[i * d + j].abs());
                if j > i {
                    asym = asym.max((b[i * d + j] - b[j * d + i]).abs());
                }
            }
        }
        if asym > tol::SYMMETRIZATION * scale {
            return Err(Error::NonDiagonalizable(asym / scale));
        }
        for i in 0..d {
            for j in i + 1..d {
                let m = 0.5 * (b[i * d + j] + b[j * d + i]);
                b[i * d + j] = m;
                b[j * d + i] = m;
            }
        }
        linalg::sym_func(d, &b[..d * d], f64::exp, &mut e);
        linalg::mat_mul(d, &s_inv[..d * d], &e[..d * d], &mut tmp);
        linalg::mat_mul(d, &tmp[..d * d], &s[..d * d], out.node_mut(node));
    }
    Ok(out)
}

/// `<u, v>_g = Tr((g^{-1} u)(g^{-1} v))` as a scalar field.
pub fn inner_sym(g: &MetricField, u: &GridField<f64>, v: &GridField<f64>) -> GridField<f64> {
    assert!(matches!(u.rank(), Rank::SymTwo));
    assert!(matches!(v.rank(), Rank::SymTwo));
    let spec = *g.spec();
    let d = spec.dim;
    let ustar = g.endo_from_sym2(u);
    let vstar = g.endo_from_sym2(v);
    let mut out = GridField::zeros(spec, Rank::Scalar);
    for node in 0..spec.nodes() {
        let a = ustar.node(node);
        let b = vstar.node(node);
        let mut s = 0.0;
        for i in 0..d {
            for j in 0..d {
                s += a[i * d + j] * b[j * d + i];
            }
        }
        out.set_comp(node, 0, s);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::grid::Scheme;
    use crate::fields::tensor::{endo_identity, endo_mul};
    use approx::assert_abs_diff_eq;

    fn spec() -> GridSpec {
        GridSpec::new(2, 8, Scheme::Spectral).unwrap()
    }

    fn curved_metric(spec: GridSpec) -> MetricField {
        // g = exp(0.3 cos x0 σ3 + 0.2 sin x1 σ1), SPD with det 1
        let a = GridField::from_fn(spec, Rank::Endo, |_, x, out| {
            let p = 0.3 * x[0].cos();
            let q = 0.2 * x[1].sin();
            out[0] = p;
            out[1] = q;
            out[2] = q;
            out[3] = -p;
        });
        let id = MetricField::identity(spec);
        let e = matrix_exp(&a, &id).unwrap();
        MetricField::new(e.with_rank(Rank::SymTwo).unwrap()).unwrap()
    }

    #[test]
    fn rejects_indefinite_metric() {
        let f = GridField::from_fn(spec(), Rank::SymTwo, |_, _, out| {
            out[0] = 1.0;
            out[3] = -1.0;
        });
        assert!(matches!(MetricField::new(f), Err(Error::SingularMetric { .. })));
    }

    #[test]
    fn inverse_is_pointwise_inverse() {
        let g = curved_metric(spec());
        let d = 2;
        for node in [0usize, 5, 17] {
            let mut prod = [0.0f64; 4];
            linalg::mat_mul(d, g.g_at(node), g.inv_at(node), &mut prod);
            assert_abs_diff_eq!(prod[0], 1.0, epsilon = 1e-13);
            assert_abs_diff_eq!(prod[1], 0.0, epsilon = 1e-13);
            assert_abs_diff_eq!(prod[3], 1.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn matrix_exp_zero_is_identity() {
        let g = curved_metric(spec());
        let zero = GridField::zeros(spec(), Rank::Endo);
        let e = matrix_exp(&zero, &g).unwrap();
        assert!(e.sub(&endo_identity(spec())).unwrap().sup_norm() < 1e-14);
    }

    #[test]
    fn matrix_exp_diagonal_constant() {
        let g = MetricField::identity(spec());
        let a = GridField::from_fn(spec(), Rank::Endo, |_, _, out| {
            out[0] = 0.7;
            out[3] = -0.7;
        });
        let e = matrix_exp(&a, &g).unwrap();
        assert_abs_diff_eq!(e.comp(0, 0), 0.7f64.exp(), epsilon = 1e-14);
        assert_abs_diff_eq!(e.comp(0, 3), (-0.7f64).exp(), epsilon = 1e-14);
        assert_abs_diff_eq!(e.comp(0, 1), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn matrix_exp_inverse_product() {
        let spec = spec();
        let g = curved_metric(spec);
        // g-symmetric field: g^{-1} v with v symmetric
        let v = GridField::from_fn(spec, Rank::SymTwo, |_, x, out| {
            out[0] = 0.4 * x[0].cos();
            out[1] = 0.3 * x[1].sin();
            out[2] = out[1];
            out[3] = -0.2;
        });
        let a = g.endo_from_sym2(&v);
        let ep = matrix_exp(&a, &g).unwrap();
        let em = matrix_exp(&a.scale(-1.0), &g).unwrap();
        let prod = endo_mul(&ep, &em);
        assert!(prod.sub(&endo_identity(spec)).unwrap().sup_norm() < 1e-12);
    }

    #[test]
    fn matrix_exp_rejects_rotation() {
        let g = MetricField::identity(spec());
        // plain rotation generator has imaginary spectrum
        let a = GridField::from_fn(spec(), Rank::Endo, |_, _, out| {
            out[1] = 1.0;
            out[2] = -1.0;
        });
        assert!(matches!(matrix_exp(&a, &g), Err(Error::NonDiagonalizable(_))));
    }

    #[test]
    fn inner_sym_examples() {
        let spec = spec();
        let g = curved_metric(spec);
        // <g, g>_g = d
        let val = inner_sym(&g, g.field(), g.field());
        for node in 0..spec.nodes() {
            assert_abs_diff_eq!(val.comp(node, 0), 2.0, epsilon = 1e-12);
        }
        // flat: u = v = diag(1,-1) -> 2
        let id = MetricField::identity(spec);
        let u = GridField::from_fn(spec, Rank::SymTwo, |_, _, out| {
            out[0] = 1.0;
            out[3] = -1.0;
        });
        let val = inner_sym(&id, &u, &u);
        assert_abs_diff_eq!(val.comp(3, 0), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn inner_sym_matches_index_contraction() {
        let spec = spec();
        let g = curved_metric(spec);
        let u = GridField::from_fn(spec, Rank::SymTwo, |_, x, out| {
            out[0] = 0.5 + 0.1 * x[1].cos();
            out[1] = 0.2 * x[0].sin();
            out[2] = out[1];
            out[3] = -0.3;
        });
        let v = GridField::from_fn(spec, Rank::SymTwo, |_, x, out| {
            out[0] = -0.2;
            out[1] = 0.15 * (x[0] + x[1]).cos();
            out[2] = out[1];
            out[3] = 0.8;
        });
        let fast = inner_sym(&g, &u, &v);
        let d = 2;
        for node in [1usize, 9, 40] {
            let gi = g.inv_at(node);
            let ub = u.node(node);
            let vb = v.node(node);
            let mut s = 0.0;
            for i in 0..d {
                for j in 0..d {
                    for k in 0..d {
                        for l in 0..d {
                            s += gi[i * d + k] * gi[j * d + l] * ub[k * d + l] * vb[i * d + j];
                        }
                    }
                }
            }
            assert_abs_diff_eq!(fast.comp(node, 0), s, epsilon = 1e-13);
        }
    }

    #[test]
    fn volume_form_normalization() {
        let spec = spec();
        let raw = GridField::from_fn(spec, Rank::TopForm, |_, x, out| {
            out[0] = (0.3 * x[0].cos()).exp()
        });
        let om = VolumeForm::normalized(raw).unwrap();
        assert!(om.unit_mass_error() < 1e-14);
        assert!(om.assert_unit_mass().is_ok());
    }

    #[test]
    fn volume_form_rejects_nonpositive() {
        let spec = spec();
        let raw = GridField::from_fn(spec, Rank::TopForm, |_, x, out| out[0] = x[0].sin());
        assert!(VolumeForm::new(raw).is_err());
    }
}
