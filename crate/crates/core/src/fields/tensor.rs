//! Pointwise tensor algebra between fields.

use super::field::{FieldScalar, GridField, Rank};

/// Pointwise endomorphism product `(A B)^i_j = A^i_k B^k_j`.
pub fn endo_mul(a: &GridField<f64>, b: &GridField<f64>) -> GridField<f64> {
    assert_eq!(a.rank(), Rank::Endo);
    assert_eq!(b.rank(), Rank::Endo);
    let spec = *a.spec();
    let d = spec.dim;
    let mut out = GridField::zeros(spec, Rank::Endo);
    for node in 0..spec.nodes() {
        super::linalg::mat_mul(d, a.node(node), b.node(node), out.node_mut(node));
    }
    out
}

/// Pointwise application `(A ξ)^i = A^i_j ξ^j`.
pub fn endo_apply(a: &GridField<f64>, xi: &GridField<f64>) -> GridField<f64> {
    assert_eq!(a.rank(), Rank::Endo);
    assert_eq!(xi.rank(), Rank::Vector);
    let spec = *a.spec();
    let d = spec.dim;
    let mut out = GridField::zeros(spec, Rank::Vector);
    for node in 0..spec.nodes() {
        super::linalg::mat_vec(d, a.node(node), xi.node(node), out.node_mut(node));
    }
    out
}

/// Pointwise trace of an endomorphism field.
pub fn endo_trace(a: &GridField<f64>) -> GridField<f64> {
    assert_eq!(a.rank(), Rank::Endo);
    let spec = *a.spec();
    let d = spec.dim;
    let mut out = GridField::zeros(spec, Rank::Scalar);
    for node in 0..spec.nodes() {
        out.set_comp(node, 0, super::linalg::mat_trace(d, a.node(node)));
    }
    out
}

/// Composes a (complex or real) 1-form with an endomorphism: `(β∘A)_i = β_k A^k_i`.
pub fn one_form_compose_endo<T: FieldScalar>(
    beta: &GridField<T>,
    a: &GridField<f64>,
) -> GridField<T> {
    assert_eq!(beta.rank(), Rank::OneForm);
    assert_eq!(a.rank(), Rank::Endo);
    let spec = *beta.spec();
    let d = spec.dim;
    let mut out = GridField::<T>::zeros(spec, Rank::OneForm);
    for node in 0..spec.nodes() {
        let bb = beta.node(node);
        let ab = a.node(node);
        let ob = out.node_mut(node);
        for i in 0..d {
            let mut s = T::ZERO;
            for k in 0..d {
                s += bb[k].scale(ab[k * d + i]);
            }
            ob[i] = s;
        }
    }
    out
}

/// Multiplies every component by a scalar field.
pub fn scalar_mul<T: FieldScalar>(f: &GridField<T>, s: &GridField<f64>) -> GridField<T> {
    assert_eq!(s.rank(), Rank::Scalar);
    let spec = *f.spec();
    let nc = f.ncomp();
    let mut out = GridField::<T>::zeros(spec, f.rank());
    for node in 0..spec.nodes() {
        let w = s.comp(node, 0);
        let fb = f.node(node);
        let ob = out.node_mut(node);
        for c in 0..nc {
            ob[c] = fb[c].scale(w);
        }
    }
    out
}

/// Pointwise product of two scalar fields.
pub fn scalar_product(a: &GridField<f64>, b: &GridField<f64>) -> GridField<f64> {
    assert_eq!(a.rank(), Rank::Scalar);
    assert_eq!(b.rank(), Rank::Scalar);
    a.zip_map(b, |x, y| x * y).expect("same grid")
}

/// Identity endomorphism field.
pub fn endo_identity(spec: super::grid::GridSpec) -> GridField<f64> {
    let d = spec.dim;
    GridField::from_fn(spec, Rank::Endo, |_, _, out| {
        for i in 0..d {
            out[i * d + i] = 1.0;
        }
    })
}

/// Pointwise transpose of an endomorphism field (plain index swap).
pub fn endo_transpose(a: &GridField<f64>) -> GridField<f64> {
    assert_eq!(a.rank(), Rank::Endo);
    let spec = *a.spec();
    let d = spec.dim;
    let mut out = GridField::zeros(spec, Rank::Endo);
    for node in 0..spec.nodes() {
        super::linalg::mat_transpose(d, a.node(node), out.node_mut(node));
    }
    out
}

/// Anti-commutator sup norm `‖AB + BA‖_∞` of two endomorphism fields.
pub fn anticommutator_sup(a: &GridField<f64>, b: &GridField<f64>) -> f64 {
    let ab = endo_mul(a, b);
    let ba = endo_mul(b, a);
    ab.add(&ba).expect("same grid").sup_norm()
}

/// Commutator `[A, B] = AB - BA` of two endomorphism fields.
pub fn commutator(a: &GridField<f64>, b: &GridField<f64>) -> GridField<f64> {
    let ab = endo_mul(a, b);
    let ba = endo_mul(b, a);
    ab.sub(&ba).expect("same grid")
}
