//! The verification campaigns.

use crate::almostcomplex::{
    acs_from_metric, anti_invariant_part, cov_j, ddc, nijenhuis, nijenhuis_apply, standard_omega,
    two_form_20_02, AcsField,
};
use crate::chernricci::{
    chern_curvature_riemann_route, chern_ricci_metric, chern_ricci_volume,
    decomposition_residuals, j_linearity_residual, omega_volume,
};
use crate::error::{Error, Result};
use crate::fields::field::{GridField, Rank};
use crate::fields::forms::form_component;
use crate::fields::metric::{matrix_exp, MetricField, VolumeForm};
use crate::fields::quadrature;
use crate::fields::tensor::{anticommutator_sup, endo_mul, scalar_mul};
use crate::fields::Scheme;
use crate::geodesic::{geodesic_init, sample_energy, GGeodesic};
use crate::geometry::{
    christoffel, covariant_derivative, divergence_variation_check, lie_derivative, riemann,
    weighted_divergence, Connection,
};
use crate::gspace::seed::build_seed;
use crate::gspace::{
    anti_invariant_frame, f_residual, project_to_f, vector_l2_norm, ProjectOptions,
    StructurePoint, TangentPair,
};
use crate::tol;

use super::{fit_slope, CampaignReport, CriterionEntry, Sample, SampleSpec, TimeRow};

/// Projects the sample's seed into the divergence-free space (with the
/// anti-invariant frame when the seed requests it).
fn projected_seed(spec: &SampleSpec, sample: &Sample, tol: f64) -> Result<TangentPair> {
    let raw = build_seed(&sample.point, &spec.seed, Some(&sample.acs))?;
    let acs = if spec.seed.anti_invariant() { Some(&sample.acs) } else { None };
    project_to_f(&sample.point, &raw, acs, ProjectOptions { tol, max_iter: 2000 })
}

/// Clips the sample's time grid strictly inside the existence window.
fn clipped_times(spec: &SampleSpec, geo: &GGeodesic) -> Vec<f64> {
    let (lo, hi) = geo.existence_window(tol::U_FLOOR);
    spec.time_grid
        .iter()
        .cloned()
        .filter(|&t| t > 0.9 * lo && t < 0.9 * hi)
        .collect()
}

fn l2_of_form(p: &StructurePoint, form: &GridField<f64>) -> f64 {
    // flat component L²(Ω) norm of a packed form (diagnostic scale only)
    let mut sq = GridField::zeros(*p.spec(), Rank::Scalar);
    for node in 0..p.spec().nodes() {
        let s: f64 = form.node(node).iter().map(|v| v * v).sum();
        sq.set_comp(node, 0, s);
    }
    quadrature(&scalar_mul(&sq, &p.weight())).max(0.0).sqrt()
}

/// Divergence-freeness along the geodesic flow.
pub fn run_f_conservation(spec: &SampleSpec) -> Result<CampaignReport> {
    let mut report = CampaignReport::new("f-conservation", &spec.name);
    let sample = spec.build()?;
    let n = spec.grid.n;

    let seed = projected_seed(spec, &sample, tol::SEED_RESIDUAL)?;
    let (_, eps0) = f_residual(&sample.point, &seed);
    report.entries.push(CriterionEntry::hard(
        "seed-divergence",
        &spec.name,
        n,
        eps0,
        eps0,
        tol::SEED_RESIDUAL,
    ));

    let geo = geodesic_init(&sample.point, &seed)?;
    let times = clipped_times(spec, &geo);
    let e0 = geo.energy();
    let mut max_res = 0.0f64;
    let mut max_res_l2 = 0.0f64;
    for &t in &times {
        let gs = geo.evaluate(t)?;
        let (field, res) = f_residual(&gs.point, &gs.speed);
        let res_l2 = vector_l2_norm(&gs.point, &field);
        max_res = max_res.max(res);
        max_res_l2 = max_res_l2.max(res_l2);
        report.series.push(TimeRow {
            t,
            energy: sample_energy(&gs),
            mass: gs.point.volume().mass(),
            min_u: gs.min_u,
            f_residual_norm: res,
            ricci_invariance_norm: f64::NAN,
        });
        let _ = e0;
    }
    // pass bound: transported seed defect plus the scheme error bound
    let scheme_bound = match spec.grid.scheme {
        Scheme::Spectral => {
            if n >= 64 {
                tol::F_CONSERVATION_SUP
            } else {
                1e-3
            }
        }
        Scheme::Central4 => 1e-5 * (64.0 / n as f64).powi(4),
    };
    let ceiling = 10.0 * eps0 + scheme_bound;
    report.entries.push(CriterionEntry::hard(
        "divergence-conservation",
        &spec.name,
        n,
        max_res,
        max_res_l2,
        ceiling,
    ));
    Ok(report)
}

/// Full study: conservation at two resolutions (contraction check) plus
/// the broken-seed negative control.
pub fn run_f_conservation_study(spec: &SampleSpec) -> Result<CampaignReport> {
    let mut report = run_f_conservation(spec)?;
    let n = spec.grid.n;

    // refinement: the residual ceiling must contract under N-doubling;
    // seeds are projected deep so the transported seed defect sits well
    // below the discretization error being measured
    let evolved_max = |sub: &SampleSpec| -> Result<f64> {
        let sample = sub.build()?;
        let seed = projected_seed(sub, &sample, 1e-11)?;
        let geo = geodesic_init(&sample.point, &seed)?;
        let mut max_res = 0.0f64;
        for &t in &clipped_times(sub, &geo) {
            let gs = geo.evaluate(t)?;
            let (_, res) = f_residual(&gs.point, &gs.speed);
            max_res = max_res.max(res);
        }
        Ok(max_res)
    };
    let fine_max = evolved_max(spec)?;
    let coarse_max = evolved_max(&spec.with_resolution(n / 2)?)?;
    let contraction = coarse_max / fine_max.max(1e-300);
    if coarse_max > 1e-9 {
        report.entries.push(CriterionEntry::hard_floor(
            "divergence-contraction",
            &spec.name,
            n,
            contraction,
            tol::F_CONSERVATION_CONTRACTION,
        ));
    } else {
        // both resolutions sit at the transported-seed floor: the
        // property is conserved to machine precision and there is no
        // discretization error left to contract
        report.entries.push(CriterionEntry::reported(
            "divergence-contraction-floor-limited",
            &spec.name,
            n,
            contraction,
            coarse_max,
        ));
    }

    // negative control: unprojected seed with a visible divergence defect
    let sample = spec.build()?;
    let raw = build_seed(&sample.point, &spec.seed, Some(&sample.acs))?;
    let (_, raw_res) = f_residual(&sample.point, &raw);
    if raw_res > 1e-4 {
        let geo = geodesic_init(&sample.point, &raw)?;
        let times = clipped_times(spec, &geo);
        let mut max_res = 0.0f64;
        for &t in &times {
            let gs = geo.evaluate(t)?;
            let (_, res) = f_residual(&gs.point, &gs.speed);
            max_res = max_res.max(res);
        }
        report.entries.push(CriterionEntry::hard_floor(
            "negative-control-raw-seed",
            &spec.name,
            n,
            max_res,
            tol::F_CONSERVATION_NEGATIVE_FLOOR,
        ));

        // the residual growth must follow the transport law
        // d/dt r = -(ġ* + Ω̇* I) r, checked at t = 0 by central differences
        let h = 1e-4;
        let plus = geo.evaluate(h)?;
        let minus = geo.evaluate(-h)?;
        let (r_plus, _) = f_residual(&plus.point, &plus.speed);
        let (r_minus, _) = f_residual(&minus.point, &minus.speed);
        let dr = r_plus.sub(&r_minus)?.scale(0.5 / h);
        let base = geo.evaluate(0.0)?;
        let (r0, _) = f_residual(&base.point, &base.speed);
        let vs = base.speed.v_star(&base.point);
        let od = base.speed.vol_star(&base.point);
        let transported = {
            let mut out = crate::fields::tensor::endo_apply(&vs, &r0);
            for node in 0..spec.grid.nodes() {
                for i in 0..spec.grid.dim {
                    let v = out.comp(node, i) + od.comp(node, 0) * r0.comp(node, i);
                    out.set_comp(node, i, v);
                }
            }
            out.scale(-1.0)
        };
        let law_residual = dr.sub(&transported)?.sup_norm();
        let scale = dr.sup_norm().max(transported.sup_norm()).max(1e-300);
        report.entries.push(CriterionEntry::hard(
            "residual-transport-law",
            &spec.name,
            n,
            law_residual / scale,
            law_residual / scale,
            1e-3,
        ));
    }
    Ok(report)
}

fn ricci_rho(sample: &Sample) -> Result<GridField<f64>> {
    Ok(chern_ricci_volume(&sample.acs, sample.point.volume())?.form)
}

/// Invariance of the volume Chern-Ricci form along geodesics from
/// anti-invariant divergence-free seeds, together with the structure
/// checks of the evolution law.
pub fn run_ricci_invariance(spec: &SampleSpec) -> Result<CampaignReport> {
    if !spec.seed.anti_invariant() {
        return Err(Error::InvalidConfig(
            "the invariance campaign needs an anti-invariant seed".into(),
        ));
    }
    let mut report = CampaignReport::new("ricci-invariance", &spec.name);
    let sample = spec.build()?;
    let n = spec.grid.n;
    let om2 = standard_omega(spec.grid);

    let seed = projected_seed(spec, &sample, tol::SEED_RESIDUAL)?;
    let rho = ricci_rho(&sample)?;
    let rho_norm = rho.sup_norm();
    report.entries.push(CriterionEntry::reported(
        "reference-form-norm",
        &spec.name,
        n,
        rho_norm,
        l2_of_form(&sample.point, &rho),
    ));

    let geo = geodesic_init(&sample.point, &seed)?;
    let times = clipped_times(spec, &geo);
    let mut max_inv = 0.0f64;
    let mut max_inv_l2 = 0.0f64;
    let mut max_square = 0.0f64;
    let mut max_anticom = 0.0f64;
    let mut max_div = 0.0f64;
    for &t in &times {
        let gs = geo.evaluate(t)?;
        let acs_t = acs_from_metric(&om2, gs.point.metric())?;
        if acs_t.polar_retracted() {
            return Err(Error::IncompatiblePair);
        }
        max_square = max_square.max(acs_t.square_residual_now());
        let vs = gs.speed.v_star(&gs.point);
        max_anticom = max_anticom.max(anticommutator_sup(&vs, acs_t.j()));
        let (_, div) = f_residual(&gs.point, &gs.speed);
        max_div = max_div.max(div);

        let ric_t = chern_ricci_volume(&acs_t, gs.point.volume())?.form;
        let diff = ric_t.sub(&rho)?;
        let inv = diff.sup_norm();
        max_inv = max_inv.max(inv);
        max_inv_l2 = max_inv_l2.max(l2_of_form(&gs.point, &diff));
        report.series.push(TimeRow {
            t,
            energy: sample_energy(&gs),
            mass: gs.point.volume().mass(),
            min_u: gs.min_u,
            f_residual_norm: div,
            ricci_invariance_norm: inv,
        });
    }

    let is_flat = matches!(spec.base, super::BaseRecipe::Flat2 { volume_amplitude } if volume_amplitude == 0.0);
    let tol_inv = if n >= 64 {
        if is_flat { tol::MAIN_FLAT_SUP } else { tol::MAIN_CURVED_SUP }
    } else {
        1e-3
    };
    report.entries.push(CriterionEntry::hard(
        "ricci-invariance",
        &spec.name,
        n,
        max_inv,
        max_inv_l2,
        tol_inv,
    ));
    report.entries.push(CriterionEntry::hard(
        "structure-square",
        &spec.name,
        n,
        max_square,
        max_square,
        tol::ACS_SQUARE,
    ));
    report.entries.push(CriterionEntry::hard(
        "speed-anticommutation",
        &spec.name,
        n,
        max_anticom,
        max_anticom,
        tol::ACS_ANTICOMMUTE,
    ));
    report.entries.push(CriterionEntry::hard(
        "divergence-along-flow",
        &spec.name,
        n,
        max_div,
        max_div,
        if n >= 64 { tol::F_CONSERVATION_SUP } else { 1e-4 },
    ));
    if !is_flat {
        report.entries.push(CriterionEntry::hard_floor(
            "reference-form-nontrivial",
            &spec.name,
            n,
            rho_norm,
            tol::MAIN_RHO_FLOOR,
        ));
    }
    Ok(report)
}

/// Negative control for the invariance campaign: a seed with a deliberate
/// invariant (symmetric, J-commuting) component drives the form away.
pub fn run_ricci_invariance_negative_control(spec: &SampleSpec) -> Result<CriterionEntry> {
    let sample = spec.build()?;
    let seed = projected_seed(spec, &sample, tol::SEED_RESIDUAL)?;
    // corrupt: add a conformal (J-invariant) metric direction
    let bump = GridField::from_fn(spec.grid, Rank::Scalar, |_, x, out| {
        out[0] = 0.1 * x[0].cos()
    });
    let conformal = {
        let mut v = GridField::zeros(spec.grid, Rank::SymTwo);
        for node in 0..spec.grid.nodes() {
            let w = bump.comp(node, 0);
            let gb = sample.point.metric().g_at(node);
            let vb = v.node_mut(node);
            for c in 0..vb.len() {
                vb[c] = w * gb[c];
            }
        }
        v
    };
    let corrupted = TangentPair::new(seed.v().add(&conformal)?, seed.vol().clone())?;
    let rho = ricci_rho(&sample)?;
    let geo = geodesic_init(&sample.point, &corrupted)?;
    let times = clipped_times(spec, &geo);
    let om2 = standard_omega(spec.grid);
    let mut max_inv = 0.0f64;
    for &t in &times {
        if t == 0.0 {
            continue;
        }
        let gs = geo.evaluate(t)?;
        let acs_t = acs_from_metric(&om2, gs.point.metric())?;
        let ric_t = chern_ricci_volume(&acs_t, gs.point.volume())?.form;
        max_inv = max_inv.max(ric_t.sub(&rho)?.sup_norm());
    }
    Ok(CriterionEntry::hard_floor(
        "negative-control-invariant-seed",
        &spec.name,
        spec.grid.n,
        max_inv,
        1e-4,
    ))
}

/// Central-difference checks of the two variation formulas, with slope
/// tables over the step ladder.
pub fn run_variation_suite(spec: &SampleSpec) -> Result<CampaignReport> {
    let mut report = CampaignReport::new("variation-suite", &spec.name);
    let sample = spec.build()?;
    let n = spec.grid.n;
    // below the working resolution the h-slope is masked by the spatial
    // truncation floor, so the entries become measurements
    let assertable = n >= 64;
    let grid = spec.grid;
    let p = &sample.point;
    let g0 = p.metric();
    let om = p.volume();
    let om2 = standard_omega(grid);
    let steps = [1e-2, 3e-3, 1e-3];

    // static path: both sides vanish identically
    {
        let zero = GridField::zeros(grid, Rank::Endo);
        let w = weighted_divergence(&christoffel(g0), om, &zero);
        report.entries.push(CriterionEntry::hard(
            "static-path",
            &spec.name,
            n,
            w.sup_norm(),
            w.sup_norm(),
            1e-14,
        ));
    }

    // structure path: g_t = g0 exp(tS) with anti-invariant S, Ω fixed
    let frame = anti_invariant_frame(g0, &sample.acs)?;
    let c1 = deterministic_scalar(grid, 1);
    let c2 = deterministic_scalar(grid, 2);
    let sdir = scalar_mul(&frame[0], &c1).add(&scalar_mul(&frame[1 % frame.len()], &c2))?;
    let ric_at = |t: f64| -> Result<GridField<f64>> {
        let e = matrix_exp(&sdir.scale(t), g0)?;
        let mut low = g0.lower_endo(&e).with_rank(Rank::SymTwo)?;
        low.symmetrize_two_tensor();
        let gt = MetricField::new(low)?;
        let acst = acs_from_metric(&om2, &gt)?;
        Ok(chern_ricci_volume(&acst, om)?.form)
    };
    let conn0 = christoffel(g0);
    let w_dir = weighted_divergence(&conn0, om, &sdir);
    let lie = lie_derivative(&w_dir, &om2)?;
    let mut residuals = Vec::new();
    for &h in &steps {
        let dric2 = ric_at(h)?.sub(&ric_at(-h)?)?.scale(1.0 / h);
        residuals.push(dric2.add(&lie)?.sup_norm());
    }
    let slope = fit_slope(&steps, &residuals);
    report.entries.push(CriterionEntry {
        identity_id: "symplectic-ricci-variation".into(),
        sample_id: spec.name.clone(),
        n,
        residual_sup: residuals[2],
        residual_l2: residuals[0],
        tier: if assertable { super::Tier::Hard } else { super::Tier::Reported },
        tol: if assertable { Some(1e-6) } else { None },
        passed: if assertable {
            Some(
                residuals[2] <= 1e-6
                    && (tol::SLOPE_BAND.0..=tol::SLOPE_BAND.1).contains(&slope),
            )
        } else {
            None
        },
        convergence_slope: Some(slope),
        lower_bound: false,
    });

    // volume path: J fixed, Ω_t = e^{tφ} Ω (so Ω̇* = φ for all t);
    // d/dt Ric = -dd^c φ cross-checked against the dd^c operator
    let phi = deterministic_scalar(grid, 3);
    let ric_vol_at = |t: f64| -> Result<GridField<f64>> {
        let density = GridField::from_fn(grid, Rank::TopForm, |node, _, out| {
            out[0] = (t * phi.comp(node, 0)).exp() * om.density_at(node);
        });
        Ok(chern_ricci_volume(&sample.acs, &VolumeForm::new(density)?)?.form)
    };
    let h = 1e-3;
    let dric = ric_vol_at(h)?.sub(&ric_vol_at(-h)?)?.scale(0.5 / h);
    let expected = ddc(&sample.acs, &phi).scale(-1.0);
    let vol_res = dric.sub(&expected)?.sup_norm();
    report.entries.push(CriterionEntry::hard(
        "volume-path-ddc",
        &spec.name,
        n,
        vol_res,
        vol_res,
        1e-7,
    ));

    // divergence variation: central-difference slope study
    let v_dir = {
        let c = deterministic_scalar(grid, 4);
        let q = deterministic_scalar(grid, 9);
        GridField::from_fn(grid, Rank::SymTwo, |node, _, out| {
            let dd = grid.dim;
            for i in 0..dd {
                out[i * dd + i] = 0.4 * c.comp(node, 0) * if i % 2 == 0 { 1.0 } else { -1.0 };
            }
            out[1] = 0.2 * q.comp(node, 0);
            out[dd] = out[1];
        })
    };
    let vol_dir = {
        let star = deterministic_scalar(grid, 5).scale(0.05);
        let weighted = scalar_mul(&star, &p.weight());
        let mean = quadrature(&weighted.clone().with_rank(Rank::TopForm)?);
        GridField::from_fn(grid, Rank::TopForm, |node, _, out| {
            out[0] = (star.comp(node, 0) - mean) * om.density_at(node);
        })
    };
    let mut div_res = Vec::new();
    for &h in &steps {
        let rep = divergence_variation_check(g0, om, &v_dir, &vol_dir, h)?;
        div_res.push(rep.relative_residual);
    }
    let div_slope = fit_slope(&steps, &div_res);
    report.entries.push(CriterionEntry {
        identity_id: "divergence-variation".into(),
        sample_id: spec.name.clone(),
        n,
        residual_sup: div_res[2],
        residual_l2: div_res[0],
        tier: if assertable { super::Tier::Hard } else { super::Tier::Reported },
        tol: if assertable { Some(1e-5) } else { None },
        passed: if assertable {
            Some(
                div_res[2] <= 1e-5
                    && (tol::SLOPE_BAND.0..=tol::SLOPE_BAND.1).contains(&div_slope),
            )
        } else {
            None
        },
        convergence_slope: Some(div_slope),
        lower_bound: false,
    });

    // negative control: wrong sign on the transport field
    let wrong = {
        let dric2 = ric_at(1e-3)?.sub(&ric_at(-1e-3)?)?.scale(1.0 / 1e-3);
        dric2.sub(&lie)?.sup_norm()
    };
    report.entries.push(CriterionEntry::hard_floor(
        "negative-control-flipped-transport",
        &spec.name,
        n,
        wrong,
        1e-3,
    ));
    Ok(report)
}

/// Identity ids evaluated by [`run_identity_suite`].
pub const IDENTITY_IDS: &[&str] = &[
    "covj-nijenhuis",
    "covj-anti-linearity",
    "chern-vs-levi-civita",
    "chern-ricci-vs-ricci",
    "ricci-metric-type",
    "chern-curvature-j-linearity",
    "riemann-j-linearity",
    "two-route-functoriality",
    "bakry-emery-decomposition",
    "hessian-decomposition",
];

/// Residual table of the curvature identities on one sample.
///
/// Hard tier on integrable (d = 2) samples; reported on non-integrable
/// T⁴ samples, except the two covariant-derivative identities which hold
/// for every almost-Kähler structure.
pub fn run_identity_suite(spec: &SampleSpec) -> Result<CampaignReport> {
    let mut report = CampaignReport::new("identity-suite", &spec.name);
    let sample = spec.build()?;
    let n = spec.grid.n;
    let d = spec.grid.dim;
    let integrable = d == 2;
    // hard assertions only hold at the working resolution; the ladder
    // levels below it are measurements
    let assertable = integrable && n >= 64;
    let g = sample.point.metric();
    let acs = &sample.acs;
    let conn = christoffel(g);
    let curv = riemann(&conn);
    let nabla_j = cov_j(&conn, acs);
    let nij = nijenhuis(acs);
    let hard_tol = tol::IDENTITY_HARD;

    let push = |report: &mut CampaignReport, id: &str, sup: f64, l2: f64, hard: bool, tol_v: f64| {
        if hard {
            report.entries.push(CriterionEntry::hard(id, &spec.name, n, sup, l2, tol_v));
        } else {
            report.entries.push(CriterionEntry::reported(id, &spec.name, n, sup, l2));
        }
    };

    // covariant-derivative identities (hard on every almost-Kähler sample)
    {
        let (nij_res, lin_res) = covj_identity_residuals(g, acs, &nabla_j, &nij);
        let covj_hard = if d == 2 { assertable } else { n >= 16 };
        let covj_tol = if d == 2 { hard_tol } else { 1e-7 };
        push(&mut report, "covj-nijenhuis", nij_res, nij_res, covj_hard, covj_tol);
        push(&mut report, "covj-anti-linearity", lin_res, lin_res, covj_hard, covj_tol);
    }

    // Chern connection vs Levi-Civita: complex linearity, metricity, and
    // the anti-linear part of the derivative
    {
        let (lin, met, dbar) = chern_connection_residuals(&conn, acs, &nabla_j);
        push(&mut report, "chern-vs-levi-civita", lin.max(met), dbar, assertable, hard_tol);
    }

    let chern = chern_curvature_riemann_route(&conn, acs, &curv);
    let ric_metric = chern_ricci_metric(acs, &chern);

    // Ric_J(ω)(Jξ, η) = Ric(g)(ξ, η) + ¼ Tr(∇_ξ J ∇_η J)
    {
        let mut worst = 0.0f64;
        for node in 0..spec.grid.nodes() {
            let jb = acs.j().node(node);
            let rb = curv.ricci().node(node);
            let nj = nabla_j.node(node);
            for xi in 0..d {
                for eta in 0..d {
                    let mut lhs = 0.0;
                    for m in 0..d {
                        lhs += form_component(&ric_metric, node, &[m, eta]) * jb[m * d + xi];
                    }
                    let mut tr = 0.0;
                    for a in 0..d {
                        for b in 0..d {
                            tr += nj[(a * d + b) * d + xi] * nj[(b * d + a) * d + eta];
                        }
                    }
                    worst = worst.max((lhs - rb[xi * d + eta] - 0.25 * tr).abs());
                }
            }
        }
        push(&mut report, "chern-ricci-vs-ricci", worst, worst, assertable, hard_tol);
    }

    // type purity of the metric route
    {
        let anti = two_form_20_02(acs, &ric_metric);
        push(
            &mut report,
            "ricci-metric-type",
            anti.sup_norm(),
            l2_of_form(&sample.point, &anti),
            assertable,
            hard_tol,
        );
    }

    // J-linearity of both curvatures
    push(
        &mut report,
        "chern-curvature-j-linearity",
        j_linearity_residual(acs, &chern),
        j_linearity_residual(acs, &chern),
        assertable,
        hard_tol,
    );
    push(
        &mut report,
        "riemann-j-linearity",
        j_linearity_residual(acs, curv.riemann()),
        j_linearity_residual(acs, curv.riemann()),
        assertable,
        hard_tol,
    );

    // two independent routes to the metric Chern-Ricci form
    {
        let volume_route = chern_ricci_volume(acs, &omega_volume(spec.grid))?;
        let diff = ric_metric.sub(&volume_route.form)?;
        push(
            &mut report,
            "two-route-functoriality",
            diff.sup_norm(),
            l2_of_form(&sample.point, &diff),
            assertable,
            tol::TWO_ROUTE,
        );
    }

    // decomposition identities
    {
        let rep = decomposition_residuals(&conn, &curv, acs, sample.point.volume())?;
        push(
            &mut report,
            "bakry-emery-decomposition",
            rep.bakry_emery_residual,
            rep.bakry_emery_residual,
            assertable,
            hard_tol,
        );
        push(
            &mut report,
            "hessian-decomposition",
            rep.hessian_residual,
            rep.hessian_residual,
            assertable,
            hard_tol,
        );
        report.entries.push(CriterionEntry::reported(
            "nijenhuis-magnitude",
            &spec.name,
            n,
            rep.nijenhuis_sup,
            rep.nijenhuis_sup,
        ));
    }

    // negative control: a structure violating J² = -Id trips the first
    // covariant identity
    {
        let broken_j = {
            let bump = GridField::from_fn(spec.grid, Rank::Endo, |_, x, out| {
                out[0] = 0.05 * x[0].cos();
            });
            acs.j().add(&bump)?
        };
        let broken = AcsField::from_raw(broken_j, standard_omega(spec.grid));
        let broken_nabla = covariant_derivative(&conn, broken.j())?;
        let broken_nij = nijenhuis(&broken);
        let (nij_res, _) = covj_identity_residuals(g, &broken, &broken_nabla, &broken_nij);
        report.entries.push(CriterionEntry::hard_floor(
            "negative-control-broken-structure",
            &spec.name,
            n,
            nij_res,
            1e-4,
        ));
    }

    Ok(report)
}

/// Identity-suite residuals over a resolution ladder, with slopes
/// attached to the finest-grid entries.
pub fn run_identity_suite_ladder(spec: &SampleSpec, ladder: &[usize]) -> Result<CampaignReport> {
    let mut per_n = Vec::new();
    for &n in ladder {
        per_n.push(run_identity_suite(&spec.with_resolution(n)?)?);
    }
    let mut finest = per_n.last().expect("nonempty ladder").clone();
    let ns: Vec<f64> = ladder.iter().map(|&n| n as f64).collect();
    for entry in &mut finest.entries {
        let residuals: Vec<f64> = per_n
            .iter()
            .filter_map(|rep| {
                rep.entries
                    .iter()
                    .find(|e| e.identity_id == entry.identity_id)
                    .map(|e| e.residual_sup)
            })
            .collect();
        if residuals.len() == ladder.len() && residuals.iter().all(|&r| r > 0.0) {
            // decay rate: positive when residuals shrink with N
            entry.convergence_slope = Some(-fit_slope(&ns, &residuals));
        }
    }
    Ok(finest)
}

fn covj_identity_residuals(
    g: &MetricField,
    acs: &AcsField,
    nabla_j: &GridField<f64>,
    nij: &GridField<f64>,
) -> (f64, f64) {
    let spec = *g.spec();
    let d = spec.dim;
    let mut worst_nij = 0.0f64;
    let mut worst_lin = 0.0f64;
    let mut dir = [0.0f64; 16];
    let mut dir_j = [0.0f64; 16];
    let mut nval = [0.0f64; 4];
    for node in 0..spec.nodes() {
        let gb = g.g_at(node);
        let jb = acs.j().node(node);
        for k in 0..d {
            crate::almostcomplex::cov_j_direction(nabla_j, node, k, d, &mut dir);
            dir_j[..d * d].fill(0.0);
            for m in 0..d {
                let w = jb[m * d + k];
                if w != 0.0 {
                    let mut tmp = [0.0f64; 16];
                    crate::almostcomplex::cov_j_direction(nabla_j, node, m, d, &mut tmp);
                    for c in 0..d * d {
                        dir_j[c] += w * tmp[c];
                    }
                }
            }
            for a in 0..d {
                for b in 0..d {
                    let mut jd = 0.0;
                    for m in 0..d {
                        jd += jb[a * d + m] * dir[m * d + b];
                    }
                    worst_lin = worst_lin.max((dir_j[a * d + b] + jd).abs());
                }
            }
            for eta in 0..d {
                let mut eta_v = [0.0f64; 4];
                eta_v[eta] = 1.0;
                for mu in 0..d {
                    let mut lhs = 0.0;
                    for a in 0..d {
                        lhs += gb[mu * d + a] * dir[a * d + eta];
                    }
                    let mut mu_v = [0.0f64; 4];
                    mu_v[mu] = 1.0;
                    nijenhuis_apply(nij, node, &eta_v, &mu_v, &mut nval);
                    let mut rhs = 0.0;
                    for a in 0..d {
                        for b in 0..d {
                            rhs += 2.0 * gb[a * d + b] * jb[a * d + k] * nval[b];
                        }
                    }
                    worst_nij = worst_nij.max((lhs + rhs).abs());
                }
            }
        }
    }
    (worst_nij, worst_lin)
}

/// Chern-connection diagnostics: complex linearity, metric property, and
/// agreement of the anti-linear derivative part with the plain one.
fn chern_connection_residuals(
    conn: &Connection,
    acs: &AcsField,
    nabla_j: &GridField<f64>,
) -> (f64, f64, f64) {
    let spec = *acs.spec();
    let d = spec.dim;
    let g = conn.metric();

    // Chern derivative of a vector field: D W = ∇W - ½ J (∇J) W as an endo
    let chern_derivative = |w: &GridField<f64>| -> GridField<f64> {
        let nabla_w = covariant_derivative(conn, w).expect("vector rank");
        let mut out = nabla_w.clone();
        for node in 0..spec.nodes() {
            let jb = acs.j().node(node);
            let nj = nabla_j.node(node);
            let wb = w.node(node);
            let ob = out.node_mut(node);
            for i in 0..d {
                for k in 0..d {
                    // ½ (J ∇_{e_k}J W)^i
                    let mut corr = 0.0;
                    for m in 0..d {
                        for l in 0..d {
                            corr += jb[i * d + m] * nj[(m * d + l) * d + k] * wb[l];
                        }
                    }
                    ob[i * d + k] -= 0.5 * corr;
                }
            }
        }
        out
    };

    let w = GridField::from_fn(spec, Rank::Vector, |_, x, out| {
        out[0] = 1.0 + 0.3 * x[0].sin();
        out[1] = 0.4 * x[1].cos();
        if d == 4 {
            out[2] = 0.2 * (x[2] + x[0]).sin();
            out[3] = -0.3 * x[3].cos();
        }
    });
    let jw = crate::fields::tensor::endo_apply(acs.j(), &w);
    let dw = chern_derivative(&w);
    let djw = chern_derivative(&jw);

    // complex linearity: D(JW) = J D(W)
    let lin = djw.sub(&endo_mul(acs.j(), &dw)).expect("same grid").sup_norm();

    // metric property: d g(W, W) = 2 g(DW, W)
    let gww = g.dot_vectors(&w, &w);
    let mut met = 0.0f64;
    let dg: Vec<_> = (0..d).map(|a| crate::fields::derive(&gww, a)).collect();
    for node in 0..spec.nodes() {
        let gb = g.g_at(node);
        let wb = w.node(node);
        let db = dw.node(node);
        for k in 0..d {
            let mut pair = 0.0;
            for i in 0..d {
                for j in 0..d {
                    pair += gb[i * d + j] * db[i * d + k] * wb[j];
                }
            }
            met = met.max((dg[k].comp(node, 0) - 2.0 * pair).abs());
        }
    }

    // anti-linear part of D vs anti-linear part of ∇ (they agree on
    // Kähler samples; the difference is reported elsewhere)
    let nabla_w = covariant_derivative(conn, &w).expect("vector rank");
    let anti_d = anti_invariant_part(acs, &dw);
    let anti_n = anti_invariant_part(acs, &nabla_w);
    let dbar = anti_d.sub(&anti_n).expect("same grid").sup_norm();

    (lin, met, dbar)
}

/// Geodesic evaluation campaign backing the command-line `geodesic` run:
/// the time series plus energy/mass conservation entries.
pub fn run_geodesic_dump(spec: &SampleSpec) -> Result<CampaignReport> {
    let mut report = CampaignReport::new("geodesic", &spec.name);
    let sample = spec.build()?;
    let n = spec.grid.n;
    let has_acs = true;
    let om2 = standard_omega(spec.grid);

    // the dump evaluates the geodesic of the seed as described — no
    // projection; divergence-freeness belongs to the invariance campaign
    let seed = build_seed(&sample.point, &spec.seed, Some(&sample.acs))?;
    let rho = ricci_rho(&sample)?;
    let geo = geodesic_init(&sample.point, &seed)?;
    let (lo, hi) = geo.existence_window(tol::U_FLOOR);
    report.entries.push(CriterionEntry::reported(
        "window-low",
        &spec.name,
        n,
        lo,
        lo,
    ));
    report.entries.push(CriterionEntry::reported(
        "window-high",
        &spec.name,
        n,
        hi,
        hi,
    ));
    let times = clipped_times(spec, &geo);
    if times.len() < spec.time_grid.len() {
        // requested horizon sticks out of the existence window
        let outside = spec
            .time_grid
            .iter()
            .find(|&&t| !(t > 0.9 * lo && t < 0.9 * hi))
            .cloned()
            .unwrap_or(hi);
        return Err(Error::DegenerateVolume { t_bad: outside });
    }
    let e0 = geo.energy();
    let energy_scale = if e0.abs() > 1e-10 { e0.abs() } else { 1.0 };
    let mut max_energy = 0.0f64;
    let mut max_mass = 0.0f64;
    for &t in &times {
        let gs = geo.evaluate(t)?;
        let energy = sample_energy(&gs);
        let mass = gs.point.volume().mass();
        max_energy = max_energy.max(((energy - e0) / energy_scale).abs());
        max_mass = max_mass.max((mass - 1.0).abs());
        let (_, div) = f_residual(&gs.point, &gs.speed);
        let ric = if has_acs {
            let acs_t = acs_from_metric(&om2, gs.point.metric())?;
            chern_ricci_volume(&acs_t, gs.point.volume())?.form.sub(&rho)?.sup_norm()
        } else {
            f64::NAN
        };
        report.series.push(TimeRow {
            t,
            energy,
            mass,
            min_u: gs.min_u,
            f_residual_norm: div,
            ricci_invariance_norm: ric,
        });
    }
    report.entries.push(CriterionEntry::hard(
        "energy-conservation",
        &spec.name,
        n,
        max_energy,
        max_energy,
        tol::ENERGY_DRIFT,
    ));
    report.entries.push(CriterionEntry::hard(
        "mass-conservation",
        &spec.name,
        n,
        max_mass,
        max_mass,
        tol::MASS_DRIFT,
    ));
    Ok(report)
}

/// Convergence study of one identity over a resolution ladder; returns
/// `(n, residual)` pairs and the measured decay rate.
pub fn convergence_study(
    spec: &SampleSpec,
    identity_id: &str,
    ladder: &[usize],
) -> Result<(Vec<(usize, f64)>, f64)> {
    let mut pairs = Vec::new();
    for &n in ladder {
        let sub = spec.with_resolution(n)?;
        let residual = if identity_id == "ricci-invariance" {
            let report = run_ricci_invariance(&sub)?;
            report
                .entries
                .iter()
                .find(|e| e.identity_id == identity_id)
                .map(|e| e.residual_sup)
                .ok_or_else(|| Error::UnknownIdentity(identity_id.into()))?
        } else if identity_id == "divergence-conservation" {
            let report = run_f_conservation(&sub)?;
            report
                .entries
                .iter()
                .find(|e| e.identity_id == identity_id)
                .map(|e| e.residual_sup)
                .ok_or_else(|| Error::UnknownIdentity(identity_id.into()))?
        } else {
            let report = run_identity_suite(&sub)?;
            report
                .entries
                .iter()
                .find(|e| e.identity_id == identity_id)
                .map(|e| e.residual_sup)
                .ok_or_else(|| Error::UnknownIdentity(identity_id.into()))?
        };
        pairs.push((n, residual));
    }
    let ns: Vec<f64> = pairs.iter().map(|&(n, _)| n as f64).collect();
    let rs: Vec<f64> = pairs.iter().map(|&(_, r)| r).collect();
    Ok((pairs, -fit_slope(&ns, &rs)))
}

// a tiny deterministic scalar/tensor source for the variation suite,
// shared with tests through the crate root
pub(crate) fn deterministic_scalar(spec: crate::fields::GridSpec, salt: u64) -> GridField<f64> {
    let a = 0.3 + 0.1 * (salt % 3) as f64;
    let b = 0.2 + 0.05 * (salt % 5) as f64;
    GridField::from_fn(spec, Rank::Scalar, |_, x, out| {
        out[0] = a * x[0].cos() + b * (x[1] + 0.5 * salt as f64).sin();
    })
}
