use approx::assert_abs_diff_eq;

use super::*;
use crate::almostcomplex::{acs_from_metric, standard_omega};
use crate::fields::MetricField;
use crate::fields::forms::form_component;
use crate::fields::grid::Scheme;
use crate::fields::quadrature;
use crate::geometry::{christoffel, riemann};
use crate::testutil::*;

fn spec2(n: usize) -> GridSpec {
    GridSpec::new(2, n, Scheme::Spectral).unwrap()
}

fn flat_acs(n: usize) -> AcsField {
    let s = spec2(n);
    acs_from_metric(&standard_omega(s), &MetricField::identity(s)).unwrap()
}

/// Curved integrable sample: det-1 metric, its compatible structure, and a
/// nonuniform volume form.
fn curved_sample(n: usize, eps: f64) -> (MetricField, AcsField, VolumeForm) {
    let s = spec2(n);
    let g = curved_metric_t2(s, eps);
    let acs = acs_from_metric(&standard_omega(s), &g).unwrap();
    assert!(!acs.polar_retracted());
    (g, acs, bumpy_volume(s, 0.3))
}

#[test]
fn variation_formula_of_the_volume_ricci() {
    // path g_t = g0 exp(tS), S anti-invariant g0-symmetric, Ω fixed:
    // 2 d/dt Ric_{J_t}(Ω) = -L_{∇^{*_Ω} ġ* + ∇ Ω̇*} ω, with second-order
    // central-difference convergence in the step
    let s = spec2(48);
    let g0 = curved_metric_t2(s, 0.15);
    let acs0 = acs_from_metric(&standard_omega(s), &g0).unwrap();
    let om = bumpy_volume(s, 0.25);

    let frame = crate::gspace::anti_invariant_frame(&g0, &acs0).unwrap();
    let c1 = random_scalar(s, 61, 2, 0.5);
    let c2 = random_scalar(s, 62, 2, 0.3);
    let sfield = crate::fields::tensor::scalar_mul(&frame[0], &c1)
        .add(&crate::fields::tensor::scalar_mul(&frame[1], &c2))
        .unwrap();

    let ric_at = |t: f64| -> GridField<f64> {
        let e = crate::fields::metric::matrix_exp(&sfield.scale(t), &g0).unwrap();
        let mut low = g0.lower_endo(&e).with_rank(Rank::SymTwo).unwrap();
        low.symmetrize_two_tensor();
        let gt = MetricField::new(low).unwrap();
        let acst = acs_from_metric(&standard_omega(s), &gt).unwrap();
        chern_ricci_volume(&acst, &om).unwrap().form
    };

    let conn = christoffel(&g0);
    let w = crate::geometry::weighted_divergence(&conn, &om, &sfield);
    let lie = crate::geometry::lie_derivative(&w, &standard_omega(s)).unwrap();

    let mut residuals = Vec::new();
    for h in [1e-2, 3e-3, 1e-3] {
        let dric2 = ric_at(h).sub(&ric_at(-h)).unwrap().scale(1.0 / h);
        residuals.push(dric2.add(&lie).unwrap().sup_norm());
    }
    assert!(residuals[2] < 1e-8, "variation-formula residual {}", residuals[2]);
    let slope = (residuals[0] / residuals[2]).ln() / (1e-2f64 / 1e-3).ln();
    assert!((1.8..=2.2).contains(&slope), "slope {slope}, residuals {residuals:?}");
}

#[test]
fn flat_uniform_everything_vanishes() {
    let s = spec2(16);
    let acs = flat_acs(16);
    let om = VolumeForm::uniform(s);
    let frame = canonical_frame(&acs, &om).unwrap();
    // h is the constant 2^n/w
    let expected_h = 2.0 * (2.0 * std::f64::consts::PI).powi(2);
    for node in 0..s.nodes() {
        assert_abs_diff_eq!(frame.h.comp(node, 0), expected_h, epsilon = 1e-9);
    }
    let alpha = connection_one_form(&frame, &acs);
    assert!(alpha.sup_norm() < 1e-12);
    let ric = chern_ricci_volume(&acs, &om).unwrap();
    assert!(ric.form.sup_norm() < 1e-12);
    assert!(ric.imag_residual < 1e-12);

    let g = MetricField::identity(s);
    let conn = christoffel(&g);
    let curv = riemann(&conn);
    let chern = chern_curvature_riemann_route(&conn, &acs, &curv);
    assert_eq!(chern.sup_norm(), 0.0);
    assert_eq!(chern_ricci_metric(&acs, &chern).sup_norm(), 0.0);
}

#[test]
fn frame_density_hand_formula() {
    // on T² with det g = 1 the frame density is h = (2 + Tr g)/(2 w)
    let (g, acs, om) = curved_sample(32, 0.25);
    let frame = canonical_frame(&acs, &om).unwrap();
    let s = *acs.spec();
    let mut worst = 0.0f64;
    for node in 0..s.nodes() {
        let gb = g.g_at(node);
        let expected = (2.0 + gb[0] + gb[3]) / (2.0 * om.density_at(node));
        worst = worst.max((frame.h.comp(node, 0) - expected).abs());
    }
    assert!(worst < 1e-10, "frame density vs hand formula: {worst}");
}

#[test]
fn conformal_volume_oracle_flat_structure() {
    // flat J, Ω with density ∝ e^{-φ}: α = i ∂_J φ and Ric = dd^c φ
    let s = spec2(32);
    let acs = flat_acs(32);
    let phi = random_scalar(s, 3, 2, 0.6);
    let raw = GridField::from_fn(s, Rank::TopForm, |node, _, out| {
        out[0] = (-phi.comp(node, 0)).exp();
    });
    let om = VolumeForm::normalized(raw).unwrap();

    let frame = canonical_frame(&acs, &om).unwrap();
    let alpha = connection_one_form(&frame, &acs);
    let expected_alpha = del_function(&acs, &phi.to_complex()).scale_c(I);
    assert!(
        alpha.sub(&expected_alpha).unwrap().sup_norm() < 1e-9,
        "α vs i∂φ: {}",
        alpha.sub(&expected_alpha).unwrap().sup_norm()
    );

    let ric = chern_ricci_volume(&acs, &om).unwrap();
    let expected = ddc(&acs, &phi);
    assert!(
        ric.form.sub(&expected).unwrap().sup_norm() < 1e-8,
        "Ric vs dd^c φ: {}",
        ric.form.sub(&expected).unwrap().sup_norm()
    );
    assert!(ric.imag_residual < 1e-10);
}

#[test]
fn two_volume_decomposition() {
    // Ric_J(Ω₁) - Ric_J(Ω₂) = -dd^c log(Ω₁/Ω₂), curved structure
    let (_, acs, om1) = curved_sample(48, 0.2);
    let s = *acs.spec();
    let om2 = bumpy_volume(s, 0.1);
    let r1 = chern_ricci_volume(&acs, &om1).unwrap();
    let r2 = chern_ricci_volume(&acs, &om2).unwrap();
    let log_ratio = GridField::from_fn(s, Rank::Scalar, |node, _, out| {
        out[0] = (om1.density_at(node) / om2.density_at(node)).ln();
    });
    let rhs = ddc(&acs, &log_ratio).scale(-1.0);
    let lhs = r1.form.sub(&r2.form).unwrap();
    assert!(
        lhs.sub(&rhs).unwrap().sup_norm() < 1e-8,
        "two-volume decomposition residual {}",
        lhs.sub(&rhs).unwrap().sup_norm()
    );
}

#[test]
fn gauge_invariance() {
    let (_, acs, om) = curved_sample(32, 0.2);
    let s = *acs.spec();
    let base = chern_ricci_volume(&acs, &om).unwrap();

    // β ↦ e^σ β with a complex band-limited σ changes α by an exact form
    let sigma = {
        let re = random_scalar(s, 7, 2, 0.4);
        let im = random_scalar(s, 8, 2, 0.4);
        let mut z = re.to_complex();
        for (zv, iv) in z.values_mut().iter_mut().zip(im.values().iter()) {
            zv.im = *iv;
        }
        z
    };
    let gauged = chern_ricci_volume_gauged(&acs, &om, Some(&sigma)).unwrap();
    let diff = base.form.sub(&gauged.form).unwrap().sup_norm();
    assert!(diff < 1e-9, "gauge dependence {diff}");

    // rotating the extraction frame leaves α itself unchanged
    let frame = canonical_frame(&acs, &om).unwrap();
    let alpha = connection_one_form(&frame, &acs);
    let mut rotated = frame.clone();
    let factor = GridField::from_fn(s, Rank::Scalar, |_, x, out| out[0] = 1.0 + 0.4 * x[0].sin());
    for e in &mut rotated.eps {
        *e = crate::fields::tensor::scalar_mul(e, &factor);
    }
    for node in 0..s.nodes() {
        let vectors: Vec<&[num_complex::Complex64]> =
            rotated.eps.iter().map(|e| e.node(node)).collect();
        let val = evaluate_on_vectors(&rotated.beta, node, &vectors);
        rotated.denom.set_comp(node, 0, val);
    }
    let alpha_rot = connection_one_form(&rotated, &acs);
    assert!(
        alpha.sub(&alpha_rot).unwrap().sup_norm() < 1e-12,
        "extraction-frame dependence {}",
        alpha.sub(&alpha_rot).unwrap().sup_norm()
    );
}

#[test]
fn two_route_functoriality_on_integrable_sample() {
    // Ric_J(ω) from the curvature route equals Ric_J(ω^n/n!) from the
    // frame route on integrable samples
    let (g, acs, _) = curved_sample(64, 0.2);
    let conn = christoffel(&g);
    let curv = riemann(&conn);
    let chern = chern_curvature_riemann_route(&conn, &acs, &curv);
    let metric_route = chern_ricci_metric(&acs, &chern);

    let volume_route = chern_ricci_volume(&acs, &omega_volume(*acs.spec())).unwrap();
    let diff = metric_route.sub(&volume_route.form).unwrap().sup_norm();
    assert!(diff < 1e-7, "two-route disagreement {diff}");
    assert!(metric_route.sup_norm() > 1e-2, "sample has trivial curvature");
}

#[test]
fn chern_ricci_vs_riemann_ricci_kahler() {
    // On Kähler samples ∇J ≈ 0, so Ric_J(ω)(Jξ, η) = Ric(g)(ξ, η)
    let (g, acs, _) = curved_sample(64, 0.2);
    let conn = christoffel(&g);
    let curv = riemann(&conn);

    let nabla_j = covariant_derivative(&conn, acs.j()).unwrap();
    assert!(nabla_j.sup_norm() < 1e-8, "sample is not Kähler: ∇J = {}", nabla_j.sup_norm());

    let chern = chern_curvature_riemann_route(&conn, &acs, &curv);
    let ric_j = chern_ricci_metric(&acs, &chern);
    let s = *acs.spec();
    let d = 2;
    let mut worst = 0.0f64;
    for node in 0..s.nodes() {
        let jb = acs.j().node(node);
        let rb = curv.ricci().node(node);
        for xi in 0..d {
            for eta in 0..d {
                // Ric_J(ω)(Jξ, η)
                let mut lhs = 0.0;
                for m in 0..d {
                    lhs += form_component(&ric_j, node, &[m, eta]) * jb[m * d + xi];
                }
                worst = worst.max((lhs - rb[xi * d + eta]).abs());
            }
        }
    }
    assert!(worst < 1e-6, "Chern-Ricci vs Ricci residual {worst}");
}

#[test]
fn j_linearity_of_both_curvatures_kahler() {
    let (g, acs, _) = curved_sample(48, 0.2);
    let conn = christoffel(&g);
    let curv = riemann(&conn);
    let chern = chern_curvature_riemann_route(&conn, &acs, &curv);
    assert!(j_linearity_residual(&acs, &chern) < 1e-7, "[C, J] != 0");
    assert!(j_linearity_residual(&acs, curv.riemann()) < 1e-7, "[R, J] != 0");
}

#[test]
fn type_purity_of_metric_ricci() {
    let (g, acs, _) = curved_sample(48, 0.2);
    let conn = christoffel(&g);
    let curv = riemann(&conn);
    let chern = chern_curvature_riemann_route(&conn, &acs, &curv);
    let ric = chern_ricci_metric(&acs, &chern);
    let anti = crate::almostcomplex::two_form_20_02(&acs, &ric);
    assert!(anti.sup_norm() < 1e-7, "(2,0)+(0,2) part {}", anti.sup_norm());
}

#[test]
fn bakry_emery_flat_oracle() {
    // flat metric, Ω density ∝ e^{-φ}: Ric_g(Ω) = Hess(φ)
    let s = spec2(32);
    let g = MetricField::identity(s);
    let conn = christoffel(&g);
    let curv = riemann(&conn);
    let phi = random_scalar(s, 13, 2, 0.7);
    let raw = GridField::from_fn(s, Rank::TopForm, |node, _, out| {
        out[0] = (-phi.comp(node, 0)).exp();
    });
    let om = VolumeForm::normalized(raw).unwrap();
    let be = bakry_emery(&conn, &curv, &om);
    let hess = hessian(&conn, &phi);
    assert!(
        be.sub(&hess).unwrap().sup_norm() < 1e-9,
        "Bakry-Emery flat oracle {}",
        be.sub(&hess).unwrap().sup_norm()
    );
    assert!(be.asymmetry_two_tensor() < 1e-12);
}

#[test]
fn decomposition_identities() {
    // flat Kähler uniform: all residuals at machine level
    let s = spec2(32);
    let acs = flat_acs(32);
    let g = MetricField::identity(s);
    let conn = christoffel(&g);
    let curv = riemann(&conn);
    let rep =
        decomposition_residuals(&conn, &curv, &acs, &VolumeForm::uniform(s)).unwrap();
    assert!(rep.hessian_residual < 1e-10);
    assert!(rep.bakry_emery_residual < 1e-10);

    // flat Kähler, nonuniform volume
    let om = bumpy_volume(s, 0.4);
    let rep = decomposition_residuals(&conn, &curv, &acs, &om).unwrap();
    assert!(rep.hessian_residual < 1e-8, "flat Hessian identity {}", rep.hessian_residual);
    assert!(rep.bakry_emery_residual < 1e-8, "flat BE identity {}", rep.bakry_emery_residual);

    // curved integrable at N = 64
    let (gc, acs_c, om_c) = curved_sample(64, 0.2);
    let conn_c = christoffel(&gc);
    let curv_c = riemann(&conn_c);
    let rep = decomposition_residuals(&conn_c, &curv_c, &acs_c, &om_c).unwrap();
    assert!(rep.hessian_residual < 1e-6, "curved Hessian identity {}", rep.hessian_residual);
    assert!(
        rep.bakry_emery_residual < 1e-6,
        "curved BE identity {}",
        rep.bakry_emery_residual
    );
}

#[test]
fn closedness_in_dimension_four() {
    let s = GridSpec::new(4, 12, Scheme::Spectral).unwrap();
    let (_, acs) = warped_acs_t4(s, 0.15);
    let om = bumpy_volume(s, 0.2);
    let ric = chern_ricci_volume(&acs, &om).unwrap();
    assert!(ric.closedness < 1e-8, "dRic = {}", ric.closedness);
    assert!(ric.imag_residual < 1e-8, "imaginary residue {}", ric.imag_residual);
}

#[test]
fn degenerate_frame_witness() {
    // rotating the structure far from the reference kills the frame
    let s = GridSpec::new(4, 8, Scheme::Spectral).unwrap();
    let om_vol = VolumeForm::uniform(s);
    let make_rotated = |phi0: f64| {
        let j = GridField::from_fn(s, Rank::Endo, |_, _, out| {
            // conjugate the standard structure by a rotation in the (0,2) plane
            let (c, sn) = (phi0.cos(), phi0.sin());
            let r = [
                c, 0.0, sn, 0.0, //
                0.0, 1.0, 0.0, 0.0, //
                -sn, 0.0, c, 0.0, //
                0.0, 0.0, 0.0, 1.0,
            ];
            let j0 = [
                0.0, 1.0, 0.0, 0.0, //
                -1.0, 0.0, 0.0, 0.0, //
                0.0, 0.0, 0.0, 1.0, //
                0.0, 0.0, -1.0, 0.0,
            ];
            let mut tmp = [0.0f64; 16];
            let mut rt = [0.0f64; 16];
            crate::fields::linalg::mat_transpose(4, &r, &mut rt);
            crate::fields::linalg::mat_mul(4, &j0, &rt, &mut tmp);
            let mut full = [0.0f64; 16];
            crate::fields::linalg::mat_mul(4, &r, &tmp, &mut full);
            out.copy_from_slice(&full);
        });
        AcsField::from_raw(j, standard_omega(s))
    };
    // mild rotation keeps the frame healthy
    assert!(canonical_frame(&make_rotated(0.7), &om_vol).is_ok());
    // near the antipode the frame density collapses
    match canonical_frame(&make_rotated(3.13), &om_vol) {
        Err(Error::DegenerateFrame { .. }) => {}
        other => panic!("expected DegenerateFrame, got {other:?}"),
    }
}

#[test]
fn metric_route_omega_volume_positive() {
    let s = GridSpec::new(4, 8, Scheme::Spectral).unwrap();
    let vf = omega_volume(s);
    assert!(vf.density().values().iter().all(|&v| v > 0.0));
    assert_abs_diff_eq!(
        quadrature(vf.density()),
        (2.0 * std::f64::consts::PI).powi(4),
        epsilon = 1e-8
    );
}
