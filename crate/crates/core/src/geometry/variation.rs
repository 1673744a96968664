//! Central-difference check of the variation of the weighted divergence.
//!
//! For a deformation `(g + t v, Ω + t V)` the derivative at `t = 0` of
//! `t ↦ ∇^{*_{Ω_t}}_{g_t} H₀`, with the endomorphism argument frozen at
//! `H₀ = g⁻¹ v`, is compared against the closed form
//!
//! ```text
//! 2 · d/dt|₀ ∇^{*_{Ω_t}}_{g_t} H₀  =  ½ ∇_g |v|²_g - 2 H₀ · (∇^{*_Ω} H₀ + ∇_g (V/Ω)) .
//! ```

use crate::error::{Error, Result};
use crate::fields::field::{GridField, Rank};
use crate::fields::metric::{inner_sym, MetricField, VolumeForm};
use crate::fields::tensor::endo_apply;

use super::{christoffel, gradient, weighted_divergence};

#[derive(Debug, Clone)]
pub struct VariationReport {
    /// Relative sup-norm residual of the identity.
    pub relative_residual: f64,
    /// Sup norm of the closed-form side (the normalization scale).
    pub rhs_scale: f64,
    pub step: f64,
}

fn deformed(
    g: &MetricField,
    omega: &VolumeForm,
    v: &GridField<f64>,
    vol: &GridField<f64>,
    t: f64,
) -> Result<(MetricField, VolumeForm)> {
    let mut gt = g.field().clone();
    gt.axpy(t, v)?;
    let metric = MetricField::new(gt).map_err(|e| match e {
        Error::SingularMetric { .. } => {
            Error::StepTooLarge(format!("metric loses positivity at t = {t}"))
        }
        other => other,
    })?;
    let mut wt = omega.density().clone();
    wt.axpy(t, vol)?;
    let om = VolumeForm::new(wt)
        .map_err(|_| Error::StepTooLarge(format!("volume loses positivity at t = {t}")))?;
    Ok((metric, om))
}

/// Runs the central-difference test at step `h` and returns the residual.
pub fn divergence_variation_check(
    g: &MetricField,
    omega: &VolumeForm,
    v: &GridField<f64>,
    vol: &GridField<f64>,
    h: f64,
) -> Result<VariationReport> {
    assert_eq!(v.rank(), Rank::SymTwo);
    assert_eq!(vol.rank(), Rank::TopForm);
    let h0 = g.endo_from_sym2(v);

    let (g_plus, om_plus) = deformed(g, omega, v, vol, h)?;
    let (g_minus, om_minus) = deformed(g, omega, v, vol, -h)?;
    let div_plus = weighted_divergence(&christoffel(&g_plus), &om_plus, &h0);
    let div_minus = weighted_divergence(&christoffel(&g_minus), &om_minus, &h0);
    let lhs = div_plus.sub(&div_minus)?.scale(1.0 / h); // 2 * central difference

    let conn = christoffel(g);
    let norm_sq = inner_sym(g, v, v);
    let grad_norm = gradient(g, &norm_sq);
    let vstar_density = GridField::from_values(
        *g.spec(),
        Rank::Scalar,
        vol.values()
            .iter()
            .zip(omega.density().values())
            .map(|(&a, &b)| a / b)
            .collect(),
    )?;
    let residual_vec = weighted_divergence(&conn, omega, &h0)
        .add(&gradient(g, &vstar_density))?;
    let rhs = grad_norm.scale(0.5).sub(&endo_apply(&h0, &residual_vec).scale(2.0))?;

    let diff = lhs.sub(&rhs)?;
    let rhs_scale = rhs.sup_norm();
    let scale = rhs_scale.max(lhs.sup_norm()).max(1e-300);
    Ok(VariationReport {
        relative_residual: diff.sup_norm() / scale,
        rhs_scale,
        step: h,
    })
}
