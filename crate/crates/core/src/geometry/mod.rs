//! Levi-Civita connection, curvature, weighted divergence, Hessians,
//! Lie derivatives, and the variation-of-divergence check.
//!
//! Index conventions: `Γ^i_{jk}` is stored at `(i*d + j)*d + k` and is
//! exactly symmetric in `jk`; covariant derivatives append the derivative
//! index last (see [`crate::fields::Rank`]); the curvature tensor is
//!
//! ```text
//! R^i_{jkl} = ∂_k Γ^i_{lj} - ∂_l Γ^i_{kj} + Γ^i_{km} Γ^m_{lj} - Γ^i_{lm} Γ^m_{kj},
//! Ric_{jl}  = R^i_{jil},
//! ```
//!
//! so that `(∇_k ∇_l - ∇_l ∇_k) ξ^i = R^i_{jkl} ξ^j`.

mod variation;

pub use variation::{divergence_variation_check, VariationReport};

use crate::error::{Error, Result};
use crate::fields::deriv::derive;
use crate::fields::field::{GridField, Rank};
use crate::fields::forms::{contract, exterior_derivative};
use crate::fields::{MetricField, VolumeForm};

/// Levi-Civita connection data: Christoffel symbols plus the source metric.
#[derive(Debug, Clone)]
pub struct Connection {
    gamma: GridField<f64>,
    metric: MetricField,
}

impl Connection {
    pub fn gamma(&self) -> &GridField<f64> {
        &self.gamma
    }

    pub fn metric(&self) -> &MetricField {
        &self.metric
    }

    #[inline]
    pub fn gamma_at(&self, node: usize) -> &[f64] {
        self.gamma.node(node)
    }
}

/// Christoffel symbols `Γ^i_{jk} = ½ g^{il} (∂_j g_{lk} + ∂_k g_{jl} - ∂_l g_{jk})`.
pub fn christoffel(metric: &MetricField) -> Connection {
    let spec = *metric.spec();
    let d = spec.dim;
    let partials: Vec<GridField<f64>> = (0..d).map(|a| derive(metric.field(), a)).collect();
    let mut gamma = GridField::zeros(spec, Rank::EndoCov);
    for node in 0..spec.nodes() {
        let ginv = metric.inv_at(node);
        let gb = gamma.node_mut(node);
        for i in 0..d {
            for j in 0..d {
                for k in j..d {
                    let mut s = 0.0;
                    for l in 0..d {
                        let dj = partials[j].comp(node, l * d + k);
                        let dk = partials[k].comp(node, j * d + l);
                        let dl = partials[l].comp(node, j * d + k);
                        s += ginv[i * d + l] * (dj + dk - dl);
                    }
                    let v = 0.5 * s;
                    gb[(i * d + j) * d + k] = v;
                    gb[(i * d + k) * d + j] = v;
                }
            }
        }
    }
    Connection { gamma, metric: metric.clone() }
}

/// Covariant derivative with the derivative index appended last.
///
/// Supported inputs: scalar, vector, 1-form, endomorphism, symmetric
/// 2-tensor, packed 2-form, general `Cov2`.
pub fn covariant_derivative(conn: &Connection, t: &GridField<f64>) -> Result<GridField<f64>> {
    let spec = *t.spec();
    spec.same_grid(conn.metric.spec())?;
    let d = spec.dim;
    match t.rank() {
        Rank::Scalar => {
            let mut out = GridField::zeros(spec, Rank::OneForm);
            for axis in 0..d {
                let dt = derive(t, axis);
                for node in 0..spec.nodes() {
                    out.set_comp(node, axis, dt.comp(node, 0));
                }
            }
            Ok(out)
        }
        Rank::Vector => {
            let partials: Vec<_> = (0..d).map(|a| derive(t, a)).collect();
            let mut out = GridField::zeros(spec, Rank::Endo);
            for node in 0..spec.nodes() {
                let ga = conn.gamma_at(node);
                let w = t.node(node);
                let ob = out.node_mut(node);
                for i in 0..d {
                    for j in 0..d {
                        let mut s = partials[j].comp(node, i);
                        for m in 0..d {
                            s += ga[(i * d + j) * d + m] * w[m];
                        }
                        ob[i * d + j] = s;
                    }
                }
            }
            Ok(out)
        }
        Rank::OneForm => {
            let partials: Vec<_> = (0..d).map(|a| derive(t, a)).collect();
            let mut out = GridField::zeros(spec, Rank::Cov2);
            for node in 0..spec.nodes() {
                let ga = conn.gamma_at(node);
                let b = t.node(node);
                let ob = out.node_mut(node);
                for i in 0..d {
                    for j in 0..d {
                        let mut s = partials[j].comp(node, i);
                        for m in 0..d {
                            s -= ga[(m * d + j) * d + i] * b[m];
                        }
                        ob[i * d + j] = s;
                    }
                }
            }
            Ok(out)
        }
        Rank::Endo => {
            let partials: Vec<_> = (0..d).map(|a| derive(t, a)).collect();
            let mut out = GridField::zeros(spec, Rank::EndoCov);
            for node in 0..spec.nodes() {
                let ga = conn.gamma_at(node);
                let ab = t.node(node);
                let ob = out.node_mut(node);
                for i in 0..d {
                    for j in 0..d {
                        for k in 0..d {
                            let mut s = partials[k].comp(node, i * d + j);
                            for m in 0..d {
                                s += ga[(i * d + k) * d + m] * ab[m * d + j];
                                s -= ga[(m * d + k) * d + j] * ab[i * d + m];
                            }
                            ob[(i * d + j) * d + k] = s;
                        }
                    }
                }
            }
            Ok(out)
        }
        Rank::SymTwo | Rank::Cov2 => cov_two_tensor(conn, t),
        Rank::Form(2) => {
            let full = crate::fields::forms::unpack_two_form(t);
            cov_two_tensor(conn, &full)
        }
        other => Err(Error::UnsupportedRank(format!("covariant_derivative of {other:?}"))),
    }
}

fn cov_two_tensor(conn: &Connection, t: &GridField<f64>) -> Result<GridField<f64>> {
    let spec = *t.spec();
    let d = spec.dim;
    let partials: Vec<_> = (0..d).map(|a| derive(t, a)).collect();
    let mut out = GridField::zeros(spec, Rank::Cov3);
    for node in 0..spec.nodes() {
        let ga = conn.gamma_at(node);
        let tb = t.node(node);
        let ob = out.node_mut(node);
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    let mut s = partials[k].comp(node, i * d + j);
                    for m in 0..d {
                        s -= ga[(m * d + k) * d + i] * tb[m * d + j];
                        s -= ga[(m * d + k) * d + j] * tb[i * d + m];
                    }
                    ob[(i * d + j) * d + k] = s;
                }
            }
        }
    }
    Ok(out)
}

/// Riemann tensor, Ricci tensor, and the endomorphism-valued 2-form view.
#[derive(Debug, Clone)]
pub struct CurvatureBundle {
    riemann: GridField<f64>,
    ricci: GridField<f64>,
}

impl CurvatureBundle {
    pub fn riemann(&self) -> &GridField<f64> {
        &self.riemann
    }

    pub fn ricci(&self) -> &GridField<f64> {
        &self.ricci
    }

    /// `R^i_{jkl}` at one node, as an endomorphism in `(i,j)` for the
    /// 2-form slot `(k,l)`.
    pub fn endo_block(&self, node: usize, k: usize, l: usize, d: usize, out: &mut [f64]) {
        let rb = self.riemann.node(node);
        for i in 0..d {
            for j in 0..d {
                out[i * d + j] = rb[((i * d + j) * d + k) * d + l];
            }
        }
    }

    /// Fully lowered tensor `R_{ijkl} = g_{im} R^m_{jkl}`.
    pub fn lowered(&self, metric: &MetricField) -> GridField<f64> {
        let spec = *self.riemann.spec();
        let d = spec.dim;
        let mut out = GridField::zeros(spec, Rank::Riemann);
        for node in 0..spec.nodes() {
            let g = metric.g_at(node);
            let rb = self.riemann.node(node);
            let ob = out.node_mut(node);
            for i in 0..d {
                for j in 0..d {
                    for k in 0..d {
                        for l in 0..d {
                            let mut s = 0.0;
                            for m in 0..d {
                                s += g[i * d + m] * rb[((m * d + j) * d + k) * d + l];
                            }
                            ob[((i * d + j) * d + k) * d + l] = s;
                        }
                    }
                }
            }
        }
        out
    }

    /// Sup norm of the cyclic sum `R^i_{jkl} + R^i_{klj} + R^i_{ljk}`.
    pub fn first_bianchi_residual(&self) -> f64 {
        let spec = *self.riemann.spec();
        let d = spec.dim;
        let mut worst = 0.0f64;
        for node in 0..spec.nodes() {
            let rb = self.riemann.node(node);
            for i in 0..d {
                for j in 0..d {
                    for k in 0..d {
                        for l in 0..d {
                            let c = rb[((i * d + j) * d + k) * d + l]
                                + rb[((i * d + k) * d + l) * d + j]
                                + rb[((i * d + l) * d + j) * d + k];
                            worst = worst.max(c.abs());
                        }
                    }
                }
            }
        }
        worst
    }
}

/// Curvature of a connection, by the coordinate formula plus contraction.
pub fn riemann(conn: &Connection) -> CurvatureBundle {
    let spec = *conn.gamma.spec();
    let d = spec.dim;
    let partials: Vec<_> = (0..d).map(|a| derive(&conn.gamma, a)).collect();
    let mut riem = GridField::zeros(spec, Rank::Riemann);
    let mut ricci = GridField::zeros(spec, Rank::SymTwo);
    for node in 0..spec.nodes() {
        let ga = conn.gamma_at(node);
        let rb = riem.node_mut(node);
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    // antisymmetric in (k, l): compute k < l, mirror the rest
                    for l in k + 1..d {
                        let mut s = partials[k].comp(node, (i * d + l) * d + j)
                            - partials[l].comp(node, (i * d + k) * d + j);
                        for m in 0..d {
                            s += ga[(i * d + k) * d + m] * ga[(m * d + l) * d + j];
                            s -= ga[(i * d + l) * d + m] * ga[(m * d + k) * d + j];
                        }
                        rb[((i * d + j) * d + k) * d + l] = s;
                        rb[((i * d + j) * d + l) * d + k] = -s;
                    }
                }
            }
        }
    }
    for node in 0..spec.nodes() {
        let rb = riem.node(node);
        let rc = ricci.node_mut(node);
        for j in 0..d {
            for l in 0..d {
                let mut s = 0.0;
                for i in 0..d {
                    s += rb[((i * d + j) * d + i) * d + l];
                }
                rc[j * d + l] = s;
            }
        }
    }
    ricci.symmetrize_two_tensor();
    CurvatureBundle { riemann: riem, ricci }
}

/// g-gradient of a scalar field: `(∇φ)^i = g^{ij} ∂_j φ`.
pub fn gradient(metric: &MetricField, phi: &GridField<f64>) -> GridField<f64> {
    assert_eq!(phi.rank(), Rank::Scalar);
    let spec = *metric.spec();
    let d = spec.dim;
    let partials: Vec<_> = (0..d).map(|a| derive(phi, a)).collect();
    let mut out = GridField::zeros(spec, Rank::Vector);
    for node in 0..spec.nodes() {
        let gi = metric.inv_at(node);
        let ob = out.node_mut(node);
        for i in 0..d {
            let mut s = 0.0;
            for j in 0..d {
                s += gi[i * d + j] * partials[j].comp(node, 0);
            }
            ob[i] = s;
        }
    }
    out
}

/// The density weight `f = log(dV_g / Ω)` entering the weighted divergence.
pub fn log_density_ratio(metric: &MetricField, omega: &VolumeForm) -> GridField<f64> {
    let spec = *metric.spec();
    let mut out = GridField::zeros(spec, Rank::Scalar);
    for node in 0..spec.nodes() {
        out.set_comp(node, 0, (metric.det_at(node).sqrt() / omega.density_at(node)).ln());
    }
    out
}

/// Weighted divergence of an endomorphism field:
///
/// `(∇^{*_Ω} H)^i = -g^{jk} (∇_j H)^i_k + H^i_j g^{jk} ∂_k f`,  `f = log(dV_g/Ω)`.
///
/// The sign convention is pinned by the adjointness contract
/// `∫ <∇W, H>_g Ω = ∫ g(W, ∇^{*_Ω} H) Ω`.
pub fn weighted_divergence(
    conn: &Connection,
    omega: &VolumeForm,
    h: &GridField<f64>,
) -> GridField<f64> {
    assert_eq!(h.rank(), Rank::Endo);
    let metric = &conn.metric;
    let spec = *metric.spec();
    let d = spec.dim;
    let nabla_h = covariant_derivative(conn, h).expect("endo rank supported");
    let f = log_density_ratio(metric, omega);
    let df: Vec<_> = (0..d).map(|a| derive(&f, a)).collect();
    let mut out = GridField::zeros(spec, Rank::Vector);
    for node in 0..spec.nodes() {
        let gi = metric.inv_at(node);
        let hb = h.node(node);
        let nb = nabla_h.node(node);
        let ob = out.node_mut(node);
        for i in 0..d {
            let mut s = 0.0;
            for j in 0..d {
                for k in 0..d {
                    // (∇_j H)^i_k is stored at ((i, k); j)
                    s -= gi[j * d + k] * nb[(i * d + k) * d + j];
                    s += hb[i * d + j] * gi[j * d + k] * df[k].comp(node, 0);
                }
            }
            ob[i] = s;
        }
    }
    out
}

/// Hessian `∇dφ`, returned exactly symmetric.
pub fn hessian(conn: &Connection, phi: &GridField<f64>) -> GridField<f64> {
    let dphi = covariant_derivative(conn, phi).expect("scalar rank supported");
    let mut h = covariant_derivative(conn, &dphi)
        .expect("one-form rank supported")
        .with_rank(Rank::SymTwo)
        .expect("same comps");
    h.symmetrize_two_tensor();
    h
}

/// Trace of the Hessian: the Laplace-Beltrami operator.
pub fn laplace_beltrami(conn: &Connection, phi: &GridField<f64>) -> GridField<f64> {
    let h = hessian(conn, phi);
    let metric = &conn.metric;
    let spec = *metric.spec();
    let d = spec.dim;
    let mut out = GridField::zeros(spec, Rank::Scalar);
    for node in 0..spec.nodes() {
        let gi = metric.inv_at(node);
        let hb = h.node(node);
        let mut s = 0.0;
        for i in 0..d {
            for j in 0..d {
                s += gi[i * d + j] * hb[i * d + j];
            }
        }
        out.set_comp(node, 0, s);
    }
    out
}

/// Divergence-form Laplacian `(1/√det g) ∂_i (√det g g^{ij} ∂_j φ)`,
/// kept as an independent cross-check of [`laplace_beltrami`].
pub fn laplace_divergence_form(metric: &MetricField, phi: &GridField<f64>) -> GridField<f64> {
    let spec = *metric.spec();
    let d = spec.dim;
    let grad = gradient(metric, phi);
    let mut total = GridField::zeros(spec, Rank::Scalar);
    for i in 0..d {
        let mut flux = GridField::zeros(spec, Rank::Scalar);
        for node in 0..spec.nodes() {
            flux.set_comp(node, 0, metric.det_at(node).sqrt() * grad.comp(node, i));
        }
        let dflux = derive(&flux, i);
        for node in 0..spec.nodes() {
            let v = total.comp(node, 0) + dflux.comp(node, 0) / metric.det_at(node).sqrt();
            total.set_comp(node, 0, v);
        }
    }
    total
}

/// Lie derivative along a vector field.
///
/// * metric (`SymTwo`): coordinate formula
///   `(L_W g)_{ij} = W^k ∂_k g_{ij} + g_{kj} ∂_i W^k + g_{ik} ∂_j W^k`;
/// * closed packed 2-form: Cartan, `L_W ω = d(ι_W ω)`;
/// * top-form density: `∂_i (w W^i)`.
pub fn lie_derivative(w: &GridField<f64>, t: &GridField<f64>) -> Result<GridField<f64>> {
    assert_eq!(w.rank(), Rank::Vector);
    let spec = *t.spec();
    spec.same_grid(w.spec())?;
    let d = spec.dim;
    match t.rank() {
        Rank::SymTwo => {
            let dt: Vec<_> = (0..d).map(|a| derive(t, a)).collect();
            let dw: Vec<_> = (0..d).map(|a| derive(w, a)).collect();
            let mut out = GridField::zeros(spec, Rank::SymTwo);
            for node in 0..spec.nodes() {
                let tb = t.node(node);
                let wb = w.node(node);
                let ob = out.node_mut(node);
                for i in 0..d {
                    for j in 0..d {
                        let mut s = 0.0;
                        for k in 0..d {
                            s += wb[k] * dt[k].comp(node, i * d + j);
                            s += tb[k * d + j] * dw[i].comp(node, k);
                            s += tb[i * d + k] * dw[j].comp(node, k);
                        }
                        ob[i * d + j] = s;
                    }
                }
            }
            out.symmetrize_two_tensor();
            Ok(out)
        }
        Rank::Form(2) => Ok(exterior_derivative(&contract(w, t))),
        Rank::TopForm => {
            let mut out = GridField::zeros(spec, Rank::TopForm);
            for axis in 0..d {
                let mut flux = GridField::zeros(spec, Rank::Scalar);
                for node in 0..spec.nodes() {
                    flux.set_comp(node, 0, t.comp(node, 0) * w.comp(node, axis));
                }
                let dflux = derive(&flux, axis);
                for node in 0..spec.nodes() {
                    let v = out.comp(node, 0) + dflux.comp(node, 0);
                    out.set_comp(node, 0, v);
                }
            }
            Ok(out)
        }
        other => Err(Error::UnsupportedRank(format!("lie_derivative of {other:?}"))),
    }
}
