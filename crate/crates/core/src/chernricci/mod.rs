//! Chern-Ricci forms by two independent routes, the Bakry-Emery tensor,
//! and the decomposition identities connecting them.
//!
//! Route one (frame route): a volume form `Ω` induces a hermitian metric
//! on the canonical bundle; in the global frame `β = β_1∧…∧β_n` built from
//! the reference forms `dz^r = dx^{2r} + i dx^{2r+1}`, the connection
//! 1-form is
//!
//! ```text
//! α = i ∂_J log( i^{n²} β∧β̄ / Ω ) + 2 Re( i β^{-1} ∂̄ β ) ,
//! ```
//!
//! and the volume Chern-Ricci form is `-dα`. The `(0,1)` remainder
//! `μ = β^{-1} ∂̄ β` is extracted by evaluating `dβ` against a `(1,0)`
//! vector frame, which only sees the `(n,1)` component.
//!
//! Route two (curvature route): the Chern curvature of the tangent bundle
//! differs from the Riemann curvature by a `∇J · ∇J` commutator, and the
//! metric Chern-Ricci form is its complex trace against `J`.

use num_complex::Complex64;

use crate::almostcomplex::{
    ddc, del_function, nijenhuis, two_form_compose_j, vector_01, vector_10, AcsField,
};
use crate::error::{Error, Result};
use crate::fields::field::{CGridField, GridField, Rank};
use crate::fields::forms::{evaluate_on_vectors, exterior_derivative, pack_two_form, wedge};
use crate::fields::grid::GridSpec;
use crate::fields::metric::VolumeForm;
use crate::geometry::{
    covariant_derivative, gradient, hessian, log_density_ratio, Connection, CurvatureBundle,
};
use crate::tol;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Global frame data for the canonical bundle.
#[derive(Debug, Clone)]
pub struct CanonicalFrame {
    /// The (n,0) frame form `β = β_1∧…∧β_n` (rank `OneForm` when n = 1).
    pub beta: CGridField,
    /// Frame density `h = i^{n²} β∧β̄ / Ω` (positive scalar).
    pub h: GridField<f64>,
    /// The (1,0) vector frame `ε_r = ½(e_{2r} + i J e_{2r})`.
    pub eps: Vec<CGridField>,
    /// `β(ε_1, …, ε_n)` per node (the extraction denominator).
    pub denom: CGridField,
    pub min_h: f64,
}

/// Reference complex 1-forms `dz^r = dx^{2r} + i dx^{2r+1}`.
fn reference_dz(spec: GridSpec, r: usize) -> CGridField {
    CGridField::from_fn(spec, Rank::OneForm, |_, _, out| {
        out[2 * r] = Complex64::new(1.0, 0.0);
        out[2 * r + 1] = Complex64::new(0.0, 1.0);
    })
}

fn constant_vector(spec: GridSpec, axis: usize) -> CGridField {
    CGridField::from_fn(spec, Rank::Vector, |_, _, out| {
        out[axis] = Complex64::new(1.0, 0.0);
    })
}

/// Builds the canonical frame, optionally gauged by `β ↦ e^σ β`.
pub fn canonical_frame_gauged(
    acs: &AcsField,
    omega_vol: &VolumeForm,
    gauge: Option<&CGridField>,
) -> Result<CanonicalFrame> {
    let spec = *acs.spec();
    let n = spec.dim / 2;

    let rows: Vec<CGridField> = (0..n)
        .map(|r| crate::almostcomplex::one_form_10(acs, &reference_dz(spec, r)))
        .collect();
    let mut beta = rows[0].clone();
    for row in rows.iter().skip(1) {
        beta = wedge(&beta, row);
    }
    if let Some(sigma) = gauge {
        let mut gauged = beta.clone();
        let nc = gauged.ncomp();
        for node in 0..spec.nodes() {
            let factor = sigma.comp(node, 0).exp();
            for c in 0..nc {
                let v = gauged.comp(node, c) * factor;
                gauged.set_comp(node, c, v);
            }
        }
        beta = gauged;
    }

    // h = i^{n²} β∧β̄ / Ω — real and positive on the compatible locus
    let top = wedge(&beta, &beta.conj());
    let i_pow = I.powu((n * n) as u32);
    let mut h = GridField::zeros(spec, Rank::Scalar);
    let mut min_h = f64::INFINITY;
    for node in 0..spec.nodes() {
        let val = i_pow * top.comp(node, 0) / omega_vol.density_at(node);
        h.set_comp(node, 0, val.re);
        min_h = min_h.min(val.re);
    }
    if min_h <= tol::FRAME_FLOOR {
        return Err(Error::DegenerateFrame { min_h });
    }

    let eps: Vec<CGridField> =
        (0..n).map(|r| vector_10(acs, &constant_vector(spec, 2 * r))).collect();
    let mut denom = CGridField::zeros(spec, Rank::Scalar);
    let mut min_denom = f64::INFINITY;
    for node in 0..spec.nodes() {
        let vectors: Vec<&[Complex64]> = eps.iter().map(|e| e.node(node)).collect();
        let val = evaluate_on_vectors(&beta, node, &vectors);
        denom.set_comp(node, 0, val);
        min_denom = min_denom.min(val.norm());
    }
    if min_denom <= tol::FRAME_FLOOR {
        return Err(Error::DegenerateFrame { min_h: min_denom });
    }

    Ok(CanonicalFrame { beta, h, eps, denom, min_h })
}

pub fn canonical_frame(acs: &AcsField, omega_vol: &VolumeForm) -> Result<CanonicalFrame> {
    canonical_frame_gauged(acs, omega_vol, None)
}

/// The connection 1-form `α` of the canonical bundle in the given frame.
///
/// Replacing the `(1,0)` extraction frame by any pointwise GL-rotation
/// leaves `α` unchanged; rescaling `β` shifts `α` by an exact form, so
/// `dα` is gauge invariant.
pub fn connection_one_form(frame: &CanonicalFrame, acs: &AcsField) -> CGridField {
    let spec = *acs.spec();
    let d = spec.dim;

    // i ∂_J log h
    let log_h = frame.h.map(f64::ln).to_complex();
    let part1 = del_function(acs, &log_h).scale_c(I);

    // μ_k = dβ(e_k^{0,1}, ε_1, …, ε_n) / β(ε_1, …, ε_n)
    let dbeta = exterior_derivative(&frame.beta);
    let mut mu = CGridField::zeros(spec, Rank::OneForm);
    let eta01: Vec<CGridField> =
        (0..d).map(|k| vector_01(acs, &constant_vector(spec, k))).collect();
    for k in 0..d {
        for node in 0..spec.nodes() {
            let mut vectors: Vec<&[Complex64]> = Vec::with_capacity(frame.eps.len() + 1);
            vectors.push(eta01[k].node(node));
            for e in &frame.eps {
                vectors.push(e.node(node));
            }
            let val = evaluate_on_vectors(&dbeta, node, &vectors) / frame.denom.comp(node, 0);
            mu.set_comp(node, k, val);
        }
    }

    // 2 Re(i μ) as a complex field with vanishing imaginary part
    let two_re_imu = mu.map(|z| Complex64::new(-2.0 * z.im, 0.0));
    part1.add(&two_re_imu).expect("same grid")
}

/// The volume Chern-Ricci form `-dα` with diagnostics.
#[derive(Debug, Clone)]
pub struct VolumeRicci {
    /// Packed real 2-form.
    pub form: GridField<f64>,
    /// Sup norm of the imaginary residue discarded from `-dα`.
    pub imag_residual: f64,
    /// Sup norm of `d(form)` (zero-length check in dimension 2).
    pub closedness: f64,
}

pub fn chern_ricci_volume(acs: &AcsField, omega_vol: &VolumeForm) -> Result<VolumeRicci> {
    chern_ricci_volume_gauged(acs, omega_vol, None)
}

pub fn chern_ricci_volume_gauged(
    acs: &AcsField,
    omega_vol: &VolumeForm,
    gauge: Option<&CGridField>,
) -> Result<VolumeRicci> {
    let frame = canonical_frame_gauged(acs, omega_vol, gauge)?;
    let alpha = connection_one_form(&frame, acs);
    let dalpha = exterior_derivative(&alpha);
    let (mut form, imag_residual) = dalpha.into_real();
    form = form.scale(-1.0);
    let closedness = if acs.spec().dim == 2 {
        0.0
    } else {
        exterior_derivative(&form).sup_norm()
    };
    Ok(VolumeRicci { form, imag_residual, closedness })
}

/// Chern curvature of the tangent bundle by the curvature route:
/// `C(ξ,η) = R(ξ,η) - ¼ (∇_ξ J ∇_η J - ∇_η J ∇_ξ J)`, stored like the
/// Riemann tensor (`C^i_{j,kl}`).
pub fn chern_curvature_riemann_route(
    conn: &Connection,
    acs: &AcsField,
    curv: &CurvatureBundle,
) -> GridField<f64> {
    let spec = *acs.spec();
    let d = spec.dim;
    let nabla_j = covariant_derivative(conn, acs.j()).expect("endo rank");
    let mut out = curv.riemann().clone();
    for node in 0..spec.nodes() {
        let nj = nabla_j.node(node);
        let ob = out.node_mut(node);
        for k in 0..d {
            for l in k + 1..d {
                for i in 0..d {
                    for j in 0..d {
                        let mut comm = 0.0;
                        for m in 0..d {
                            comm += nj[(i * d + m) * d + k] * nj[(m * d + j) * d + l];
                            comm -= nj[(i * d + m) * d + l] * nj[(m * d + j) * d + k];
                        }
                        ob[((i * d + j) * d + k) * d + l] -= 0.25 * comm;
                        ob[((i * d + j) * d + l) * d + k] += 0.25 * comm;
                    }
                }
            }
        }
    }
    out
}

/// Metric Chern-Ricci form: the complex trace of `J C(ξ,η)`, packed.
///
/// With the (1,0) conventions used here the complex bundle structure acts
/// as `-J`, so the real-trace realization is `Ric(ξ,η) = -½ Tr(J C(ξ,η))`;
/// the sign is locked by the functoriality test against the frame route
/// and by the curvature-vs-Ricci identity in the form
/// `Ric_J(ω)(Jξ, η) = Ric(g)(ξ, η) + ¼ Tr(∇_ξJ ∇_ηJ)`.
pub fn chern_ricci_metric(
    acs: &AcsField,
    chern_curvature: &GridField<f64>,
) -> GridField<f64> {
    let spec = *acs.spec();
    let d = spec.dim;
    let mut full = GridField::zeros(spec, Rank::Cov2);
    for node in 0..spec.nodes() {
        let jb = acs.j().node(node);
        let cb = chern_curvature.node(node);
        let ob = full.node_mut(node);
        for k in 0..d {
            for l in 0..d {
                let mut tr = 0.0;
                for i in 0..d {
                    for m in 0..d {
                        tr += jb[i * d + m] * cb[((m * d + i) * d + k) * d + l];
                    }
                }
                ob[k * d + l] = -0.5 * tr;
            }
        }
    }
    pack_two_form(&full)
}

/// Commutator diagnostics `max ‖[C(ξ,η), J]‖` over the 2-form slots.
pub fn j_linearity_residual(acs: &AcsField, curvature: &GridField<f64>) -> f64 {
    let spec = *acs.spec();
    let d = spec.dim;
    let mut worst = 0.0f64;
    for node in 0..spec.nodes() {
        let jb = acs.j().node(node);
        let cb = curvature.node(node);
        for k in 0..d {
            for l in k + 1..d {
                for i in 0..d {
                    for j in 0..d {
                        let mut cj = 0.0;
                        let mut jc = 0.0;
                        for m in 0..d {
                            cj += cb[((i * d + m) * d + k) * d + l] * jb[m * d + j];
                            jc += jb[i * d + m] * cb[((m * d + j) * d + k) * d + l];
                        }
                        worst = worst.max((cj - jc).abs());
                    }
                }
            }
        }
    }
    worst
}

/// Bakry-Emery tensor `Ric(g) + ∇d log(dV_g/Ω)`.
pub fn bakry_emery(
    conn: &Connection,
    curv: &CurvatureBundle,
    omega_vol: &VolumeForm,
) -> GridField<f64> {
    let f = log_density_ratio(conn.metric(), omega_vol);
    let hess = hessian(conn, &f);
    curv.ricci().add(&hess).expect("same grid")
}

/// Residual report of the decomposition identities.
#[derive(Debug, Clone)]
pub struct DecompositionReport {
    /// `∇df + dd^c f · J - g(∂̄ ∇f - ∇f ⌐ N)` sup norm.
    pub hessian_residual: f64,
    /// `Ric_g(Ω) + Ric_J(Ω)·J + ¼ Tr(∇J ∇J) - g(∂̄ ∇f - ∇f ⌐ N)` sup norm.
    pub bakry_emery_residual: f64,
    /// Sup norm of the Nijenhuis tensor of the sample.
    pub nijenhuis_sup: f64,
}

/// `∂̄ W` as the J-anti-linear part of `∇W`, lowered, minus the Nijenhuis
/// correction `∇f ⌐ N`, also lowered: the right-hand block shared by both
/// decomposition identities.
fn antiholomorphic_block(
    conn: &Connection,
    acs: &AcsField,
    w: &GridField<f64>,
) -> GridField<f64> {
    let spec = *acs.spec();
    let d = spec.dim;
    let g = conn.metric();
    let nabla_w = covariant_derivative(conn, w).expect("vector rank");
    // ½(∇W + J ∇W J)
    let j_nw_j = crate::fields::tensor::endo_mul(
        acs.j(),
        &crate::fields::tensor::endo_mul(&nabla_w, acs.j()),
    );
    let dbar_w = nabla_w.add(&j_nw_j).expect("same grid").scale(0.5);

    // (∇f ⌐ N)^k_j = N^k_{ij} W^i
    let n = nijenhuis(acs);
    let mut contracted = GridField::zeros(spec, Rank::Endo);
    for node in 0..spec.nodes() {
        let nb = n.node(node);
        let wb = w.node(node);
        let ob = contracted.node_mut(node);
        for k in 0..d {
            for j in 0..d {
                let mut s = 0.0;
                for i in 0..d {
                    s += nb[(k * d + i) * d + j] * wb[i];
                }
                ob[k * d + j] = s;
            }
        }
    }

    let combined = dbar_w.sub(&contracted).expect("same grid");
    g.lower_endo(&combined)
}

/// Evaluates both decomposition identities for `f = log(dV_g/Ω)`.
pub fn decomposition_residuals(
    conn: &Connection,
    curv: &CurvatureBundle,
    acs: &AcsField,
    omega_vol: &VolumeForm,
) -> Result<DecompositionReport> {
    let g = conn.metric();
    let f = log_density_ratio(g, omega_vol);
    let w = gradient(g, &f);
    let block = antiholomorphic_block(conn, acs, &w);

    // Hessian identity: ∇df = -dd^c f · J + block
    let hess = hessian(conn, &f);
    let ddcf_j = two_form_compose_j(acs, &ddc(acs, &f));
    let hess_res = hess
        .clone()
        .with_rank(Rank::Cov2)?
        .add(&ddcf_j)?
        .sub(&block)?
        .sup_norm();

    // Bakry-Emery identity: Ric_g(Ω) = -Ric_J(Ω)·J - ¼ Tr(∇J ∇J) + block
    let be = bakry_emery(conn, curv, omega_vol);
    let ric_vol = chern_ricci_volume(acs, omega_vol)?;
    let ric_j = two_form_compose_j(acs, &ric_vol.form);
    let spec = *acs.spec();
    let d = spec.dim;
    let nabla_j = covariant_derivative(conn, acs.j())?;
    let mut q = GridField::zeros(spec, Rank::Cov2);
    for node in 0..spec.nodes() {
        let nj = nabla_j.node(node);
        let qb = q.node_mut(node);
        for k in 0..d {
            for l in 0..d {
                let mut tr = 0.0;
                for a in 0..d {
                    for b in 0..d {
                        tr += nj[(a * d + b) * d + k] * nj[(b * d + a) * d + l];
                    }
                }
                qb[k * d + l] = tr;
            }
        }
    }
    let be_res = be
        .with_rank(Rank::Cov2)?
        .add(&ric_j)?
        .add(&q.scale(0.25))?
        .sub(&block)?
        .sup_norm();

    Ok(DecompositionReport {
        hessian_residual: hess_res,
        bakry_emery_residual: be_res,
        nijenhuis_sup: nijenhuis(acs).sup_norm(),
    })
}

/// Both Chern-Ricci routes for one almost-Kähler sample.
#[derive(Debug, Clone)]
pub struct RicciForms {
    pub ric_volume: GridField<f64>,
    pub ric_metric: GridField<f64>,
    pub imag_residual: f64,
}

pub fn ricci_forms(
    conn: &Connection,
    curv: &CurvatureBundle,
    acs: &AcsField,
    omega_vol: &VolumeForm,
) -> Result<RicciForms> {
    let vol = chern_ricci_volume(acs, omega_vol)?;
    let chern = chern_curvature_riemann_route(conn, acs, curv);
    let metric = chern_ricci_metric(acs, &chern);
    Ok(RicciForms { ric_volume: vol.form, ric_metric: metric, imag_residual: vol.imag_residual })
}

/// The canonical volume `ω^n/n!` of the standard symplectic form.
pub fn omega_volume(spec: GridSpec) -> VolumeForm {
    let om = crate::almostcomplex::standard_omega(spec).to_complex();
    let mut power = om.clone();
    for _ in 1..spec.dim / 2 {
        power = wedge(&power, &om);
    }
    let fact: f64 = (1..=spec.dim / 2).product::<usize>() as f64;
    let (density, _) = power.into_real();
    VolumeForm::new(
        density.scale(1.0 / fact).with_rank(Rank::TopForm).expect("one component"),
    )
    .expect("positive by orientation convention")
}

#[cfg(test)]
mod tests;
