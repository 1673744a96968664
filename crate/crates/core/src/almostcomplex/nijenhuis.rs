//! Nijenhuis tensor: coordinate-formula production path and the
//! bracket-definition oracle.
//!
//! `4 N(ξ,η) = [ξ,η] + J[ξ,Jη] + J[Jξ,η] - [Jξ,Jη]`, evaluated on
//! coordinate fields. The tensor vanishes identically in dimension two.

use crate::fields::deriv::derive;
use crate::fields::field::{GridField, Rank};
use crate::fields::tensor::endo_apply;

use super::AcsField;

/// Lie bracket of vector fields, `[X, Y]^k = X^l ∂_l Y^k - Y^l ∂_l X^k`.
pub fn lie_bracket(x: &GridField<f64>, y: &GridField<f64>) -> GridField<f64> {
    assert_eq!(x.rank(), Rank::Vector);
    assert_eq!(y.rank(), Rank::Vector);
    let spec = *x.spec();
    let d = spec.dim;
    let dx: Vec<_> = (0..d).map(|a| derive(x, a)).collect();
    let dy: Vec<_> = (0..d).map(|a| derive(y, a)).collect();
    let mut out = GridField::zeros(spec, Rank::Vector);
    for node in 0..spec.nodes() {
        let xb = x.node(node);
        let yb = y.node(node);
        let ob = out.node_mut(node);
        for k in 0..d {
            let mut s = 0.0;
            for l in 0..d {
                s += xb[l] * dy[l].comp(node, k);
                s -= yb[l] * dx[l].comp(node, k);
            }
            ob[k] = s;
        }
    }
    out
}

/// Nijenhuis tensor by the coordinate formula (production path):
///
/// `4 N^k_{ij} = J^k_l (∂_i J^l_j - ∂_j J^l_i) - J^l_i ∂_l J^k_j + J^l_j ∂_l J^k_i`.
pub fn nijenhuis(acs: &AcsField) -> GridField<f64> {
    let j = acs.j();
    let spec = *j.spec();
    let d = spec.dim;
    let dj: Vec<_> = (0..d).map(|a| derive(j, a)).collect();
    let mut out = GridField::zeros(spec, Rank::VecForm2);
    for node in 0..spec.nodes() {
        let jb = j.node(node);
        let ob = out.node_mut(node);
        for k in 0..d {
            for i in 0..d {
                for jj in i + 1..d {
                    let mut s = 0.0;
                    for l in 0..d {
                        s += jb[k * d + l]
                            * (dj[i].comp(node, l * d + jj) - dj[jj].comp(node, l * d + i));
                        s -= jb[l * d + i] * dj[l].comp(node, k * d + jj);
                        s += jb[l * d + jj] * dj[l].comp(node, k * d + i);
                    }
                    let v = 0.25 * s;
                    ob[(k * d + i) * d + jj] = v;
                    ob[(k * d + jj) * d + i] = -v;
                }
            }
        }
    }
    out
}

/// Nijenhuis tensor assembled literally from the bracket definition on
/// coordinate fields — the oracle the coordinate formula is checked
/// against.
pub fn nijenhuis_bracket_oracle(acs: &AcsField) -> GridField<f64> {
    let j = acs.j();
    let spec = *j.spec();
    let d = spec.dim;
    let basis: Vec<GridField<f64>> = (0..d)
        .map(|i| {
            GridField::from_fn(spec, Rank::Vector, |_, _, out| {
                out[i] = 1.0;
            })
        })
        .collect();
    let jbasis: Vec<GridField<f64>> = basis.iter().map(|e| endo_apply(j, e)).collect();
    let mut out = GridField::zeros(spec, Rank::VecForm2);
    for i in 0..d {
        for jj in i + 1..d {
            let b1 = lie_bracket(&basis[i], &basis[jj]);
            let b2 = endo_apply(j, &lie_bracket(&basis[i], &jbasis[jj]));
            let b3 = endo_apply(j, &lie_bracket(&jbasis[i], &basis[jj]));
            let b4 = lie_bracket(&jbasis[i], &jbasis[jj]);
            let four_n = b1.add(&b2).unwrap().add(&b3).unwrap().sub(&b4).unwrap();
            for node in 0..spec.nodes() {
                for k in 0..d {
                    let v = 0.25 * four_n.comp(node, k);
                    out.set_comp(node, (k * d + i) * d + jj, v);
                    out.set_comp(node, (k * d + jj) * d + i, -v);
                }
            }
        }
    }
    out
}

/// Evaluates `N(ξ, η)` from the packed tensor at one node.
pub fn nijenhuis_apply(n: &GridField<f64>, node: usize, xi: &[f64], eta: &[f64], out: &mut [f64]) {
    let d = n.spec().dim;
    let nb = n.node(node);
    for k in 0..d {
        let mut s = 0.0;
        for i in 0..d {
            for j in 0..d {
                s += nb[(k * d + i) * d + j] * xi[i] * eta[j];
            }
        }
        out[k] = s;
    }
}
