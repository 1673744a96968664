//! Complex type projections and the `dd^c` operator.

use num_complex::Complex64;

use crate::fields::field::{CGridField, GridField, Rank};
use crate::fields::forms::{exterior_derivative, pullback_two_form, unpack_two_form};
use crate::fields::tensor::one_form_compose_endo;

use super::AcsField;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// (1,0)-part of a complex 1-form: `½(β + i β∘J)`.
pub fn one_form_10(acs: &AcsField, beta: &CGridField) -> CGridField {
    let bj = one_form_compose_endo(beta, acs.j());
    beta.add(&bj.scale_c(I)).expect("same grid").scale(0.5)
}

/// (0,1)-part of a complex 1-form: `½(β - i β∘J)`.
pub fn one_form_01(acs: &AcsField, beta: &CGridField) -> CGridField {
    let bj = one_form_compose_endo(beta, acs.j());
    beta.sub(&bj.scale_c(I)).expect("same grid").scale(0.5)
}

/// (1,0)-part of a complex vector: `½(ξ + i Jξ)`.
pub fn vector_10(acs: &AcsField, xi: &CGridField) -> CGridField {
    let jxi = apply_j_complex(acs, xi);
    xi.add(&jxi.scale_c(I)).expect("same grid").scale(0.5)
}

/// (0,1)-part of a complex vector: `½(ξ - i Jξ)`.
pub fn vector_01(acs: &AcsField, xi: &CGridField) -> CGridField {
    let jxi = apply_j_complex(acs, xi);
    xi.sub(&jxi.scale_c(I)).expect("same grid").scale(0.5)
}

fn apply_j_complex(acs: &AcsField, xi: &CGridField) -> CGridField {
    assert_eq!(xi.rank(), Rank::Vector);
    let spec = *xi.spec();
    let d = spec.dim;
    let mut out = CGridField::zeros(spec, Rank::Vector);
    for node in 0..spec.nodes() {
        let jb = acs.j().node(node);
        let xb = xi.node(node);
        let ob = out.node_mut(node);
        for i in 0..d {
            let mut s = Complex64::new(0.0, 0.0);
            for j in 0..d {
                s += xb[j] * jb[i * d + j];
            }
            ob[i] = s;
        }
    }
    out
}

/// (1,1)-part of a 2-form (packed, real or complexified through two calls):
/// `½(φ + φ(J·, J·))`.
pub fn two_form_11(acs: &AcsField, phi: &GridField<f64>) -> GridField<f64> {
    let pulled = pullback_two_form(phi, acs.j());
    phi.add(&pulled).expect("same grid").scale(0.5)
}

/// (2,0)+(0,2)-part of a 2-form: `½(φ - φ(J·, J·))`.
pub fn two_form_20_02(acs: &AcsField, phi: &GridField<f64>) -> GridField<f64> {
    let pulled = pullback_two_form(phi, acs.j());
    phi.sub(&pulled).expect("same grid").scale(0.5)
}

/// `∂_J f` of a complex scalar: the (1,0)-part of `df`.
pub fn del_function(acs: &AcsField, f: &CGridField) -> CGridField {
    assert_eq!(f.rank(), Rank::Scalar);
    one_form_10(acs, &exterior_derivative(f))
}

/// `∂̄_J f` of a complex scalar: the (0,1)-part of `df`.
pub fn delbar_function(acs: &AcsField, f: &CGridField) -> CGridField {
    assert_eq!(f.rank(), Rank::Scalar);
    one_form_01(acs, &exterior_derivative(f))
}

/// `d^c u = ½ du∘J` of a real scalar field.
pub fn dc_one_form(acs: &AcsField, u: &GridField<f64>) -> GridField<f64> {
    assert_eq!(u.rank(), Rank::Scalar);
    let du = exterior_derivative(u);
    one_form_compose_endo(&du, acs.j()).scale(0.5)
}

/// `dd^c u = ½ d(du∘J)` as a packed real 2-form.
pub fn ddc(acs: &AcsField, u: &GridField<f64>) -> GridField<f64> {
    exterior_derivative(&dc_one_form(acs, u))
}

/// Composes a packed real 2-form with `J` in the second slot:
/// `(φ·J)(ξ, η) := φ(ξ, Jη)`, returned as a full `Cov2` tensor (the result
/// is generally not antisymmetric).
pub fn two_form_compose_j(acs: &AcsField, phi: &GridField<f64>) -> GridField<f64> {
    let spec = *phi.spec();
    let d = spec.dim;
    let full = unpack_two_form(phi);
    let mut out = GridField::zeros(spec, Rank::Cov2);
    for node in 0..spec.nodes() {
        let fb = full.node(node);
        let jb = acs.j().node(node);
        let ob = out.node_mut(node);
        for i in 0..d {
            for j in 0..d {
                let mut s = 0.0;
                for k in 0..d {
                    s += fb[i * d + k] * jb[k * d + j];
                }
                ob[i * d + j] = s;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::almostcomplex::{acs_from_metric, standard_omega};
    use crate::fields::grid::{GridSpec, Scheme};
    use crate::fields::metric::MetricField;
    use approx::assert_abs_diff_eq;

    fn flat_acs(n: usize) -> AcsField {
        let spec = GridSpec::new(2, n, Scheme::Spectral).unwrap();
        let g = MetricField::identity(spec);
        acs_from_metric(&standard_omega(spec), &g).unwrap()
    }

    #[test]
    fn dz_is_type_10_for_flat_j() {
        let acs = flat_acs(16);
        let spec = *acs.spec();
        // dz = dx^0 + i dx^1
        let dz = CGridField::from_fn(spec, Rank::OneForm, |_, _, out| {
            out[0] = Complex64::new(1.0, 0.0);
            out[1] = Complex64::new(0.0, 1.0);
        });
        let p10 = one_form_10(&acs, &dz);
        assert!(p10.sub(&dz).unwrap().sup_norm() < 1e-14);
        let p01 = one_form_01(&acs, &dz);
        assert!(p01.sup_norm() < 1e-14);
    }

    #[test]
    fn projector_algebra() {
        let acs = flat_acs(16);
        let spec = *acs.spec();
        let beta = CGridField::from_fn(spec, Rank::OneForm, |_, x, out| {
            out[0] = Complex64::new(x[0].sin(), 0.3);
            out[1] = Complex64::new(0.5, x[1].cos());
        });
        let p10 = one_form_10(&acs, &beta);
        let p01 = one_form_01(&acs, &beta);
        // idempotent and complete
        assert!(one_form_10(&acs, &p10).sub(&p10).unwrap().sup_norm() < 1e-13);
        assert!(one_form_10(&acs, &p01).sup_norm() < 1e-13);
        assert!(p10.add(&p01).unwrap().sub(&beta).unwrap().sup_norm() < 1e-14);
    }

    #[test]
    fn ddc_flat_calibration() {
        // u = sin x0 on flat Kähler T²: dd^c u = ½ Δu dx^0∧dx^1 = -½ sin x0 dx^0∧dx^1
        let acs = flat_acs(32);
        let spec = *acs.spec();
        let u = GridField::from_fn(spec, Rank::Scalar, |_, x, out| out[0] = x[0].sin());
        let form = ddc(&acs, &u);
        for node in 0..spec.nodes() {
            let x = spec.coords(node);
            assert_abs_diff_eq!(form.comp(node, 0), -0.5 * x[0].sin(), epsilon = 1e-12);
        }
        // constants are annihilated
        let c = GridField::from_fn(spec, Rank::Scalar, |_, _, out| out[0] = 4.2);
        assert!(ddc(&acs, &c).sup_norm() < 1e-13);
    }
}
