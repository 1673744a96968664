//! Closed-form geodesics of the pairing and the independent Runge-Kutta
//! oracle.
//!
//! A geodesic through `(g₀, Ω₀)` with speed `(ġ₀, Ω̇₀)` is carried entirely
//! by the volume ratio `u_t = Ω_t/Ω₀`, which solves the per-node scalar ODE
//!
//! ```text
//! 4 ü + (m₀ - 2 u̇²)/u - u E₀ = 0 ,   u(0) = 1,  u̇(0) = Ω̇*₀ ,
//! ```
//!
//! with `m₀ = |ġ₀|²_{g₀}` pointwise and `E₀` the (conserved) global energy.
//! Writing `N₀ = m₀ - 2 u̇₀²` and `N̲₀ = N₀ - E₀`, the solution is
//!
//! ```text
//! E₀ > 0:  u = 1 + u̇₀ sinh(γt)/γ - N̲₀/(4γ²) (cosh(γt) - 1),  γ = √(E₀/2)
//! E₀ = 0:  u = 1 + u̇₀ t - N̲₀ t²/8
//! E₀ < 0:  u = 1 + u̇₀ sin(γt)/γ  - N̲₀/(4γ²) (1 - cos(γt)),  γ = √(-E₀/2)
//! ```
//!
//! and the metric follows as `g_t = g₀ exp(ġ*₀ ∫₀^t u_s^{-1} ds)` with
//! `ġ*_t = u_t^{-1} ġ*₀`, `Ω_t = u_t Ω₀`. The power series in `E₀/2` that
//! these branches resum is kept as a cross-check oracle.

pub mod gauss;
mod rk4;

pub use rk4::{rk4_integrate, RkState, RkTrajectory};

use crate::error::{Error, Result};
use crate::fields::field::{GridField, Rank};
use crate::fields::metric::{matrix_exp, MetricField, VolumeForm};
use crate::fields::tensor::{endo_mul, endo_trace, scalar_mul};
use crate::fields::{quadrature, GridSpec};
use crate::gspace::{g_product, StructurePoint, TangentPair};
use crate::tol;

/// Global branch of the volume-ratio solution, decided by the energy sign.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Branch {
    Hyperbolic { gamma: f64 },
    Quadratic,
    Trigonometric { gamma: f64 },
}

/// Initial data and precomputed invariants of a geodesic.
#[derive(Debug, Clone)]
pub struct GGeodesic {
    base: StructurePoint,
    v_star0: GridField<f64>,
    u_dot0: GridField<f64>,
    tr_sq0: GridField<f64>,
    n0: GridField<f64>,
    n0_bar: GridField<f64>,
    energy: f64,
    branch: Branch,
}

/// One evaluated point of a geodesic.
#[derive(Debug, Clone)]
pub struct GeodesicSample {
    pub t: f64,
    pub point: StructurePoint,
    pub speed: TangentPair,
    pub u: GridField<f64>,
    pub u_dot: GridField<f64>,
    pub min_u: f64,
}

/// Populates the derived fields from a base point and an initial speed.
pub fn geodesic_init(p: &StructurePoint, t: &TangentPair) -> Result<GGeodesic> {
    let spec = *p.spec();
    let v_star0 = t.v_star(p);
    let u_dot0 = t.vol_star(p);
    let tr_sq0 = endo_trace(&endo_mul(&v_star0, &v_star0));
    let mut n0 = GridField::zeros(spec, Rank::Scalar);
    for node in 0..spec.nodes() {
        let ud = u_dot0.comp(node, 0);
        n0.set_comp(node, 0, tr_sq0.comp(node, 0) - 2.0 * ud * ud);
    }
    let energy = g_product(p, t, t);
    let n0_bar = n0.map(|x| x - energy);

    // ∫ u̇₀ Ω₀ = 0 and ∫ N̲₀ Ω₀ = 0 are structural; enforce they hold
    let weight = p.weight();
    let mass_udot = quadrature(&scalar_mul(&u_dot0, &weight));
    let mass_nbar = quadrature(&scalar_mul(&n0_bar, &weight));
    if mass_udot.abs() > 1e-10 || mass_nbar.abs() > 1e-10 {
        return Err(Error::InvalidField(format!(
            "geodesic invariants violated: ∫u̇₀Ω = {mass_udot:.3e}, ∫N̲₀Ω = {mass_nbar:.3e}"
        )));
    }

    let branch = if energy.abs() < 1e-14 {
        Branch::Quadratic
    } else if energy > 0.0 {
        Branch::Hyperbolic { gamma: (energy / 2.0).sqrt() }
    } else {
        Branch::Trigonometric { gamma: (-energy / 2.0).sqrt() }
    };

    Ok(GGeodesic { base: p.clone(), v_star0, u_dot0, tr_sq0, n0, n0_bar, energy, branch })
}

impl GGeodesic {
    pub fn base(&self) -> &StructurePoint {
        &self.base
    }

    pub fn spec(&self) -> GridSpec {
        *self.base.spec()
    }

    pub fn v_star0(&self) -> &GridField<f64> {
        &self.v_star0
    }

    pub fn u_dot0(&self) -> &GridField<f64> {
        &self.u_dot0
    }

    pub fn n0(&self) -> &GridField<f64> {
        &self.n0
    }

    pub fn n0_bar(&self) -> &GridField<f64> {
        &self.n0_bar
    }

    pub fn tr_sq0(&self) -> &GridField<f64> {
        &self.tr_sq0
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn gamma0(&self) -> Option<f64> {
        match self.branch {
            Branch::Hyperbolic { gamma } => Some(gamma),
            _ => None,
        }
    }

    pub fn branch(&self) -> Branch {
        self.branch
    }

    #[inline]
    fn u_node(&self, node: usize, t: f64) -> f64 {
        let ud = self.u_dot0.comp(node, 0);
        let nb = self.n0_bar.comp(node, 0);
        match self.branch {
            Branch::Hyperbolic { gamma } => {
                let sh = (gamma * t).sinh();
                let ch1 = 2.0 * (0.5 * gamma * t).sinh().powi(2); // cosh - 1
                1.0 + ud * sh / gamma - nb / (4.0 * gamma * gamma) * ch1
            }
            Branch::Quadratic => 1.0 + ud * t - nb * t * t / 8.0,
            Branch::Trigonometric { gamma } => {
                let sn = (gamma * t).sin();
                let cs1 = 2.0 * (0.5 * gamma * t).sin().powi(2); // 1 - cos
                1.0 + ud * sn / gamma - nb / (4.0 * gamma * gamma) * cs1
            }
        }
    }

    #[inline]
    fn u_dot_node(&self, node: usize, t: f64) -> f64 {
        let ud = self.u_dot0.comp(node, 0);
        let nb = self.n0_bar.comp(node, 0);
        match self.branch {
            Branch::Hyperbolic { gamma } => {
                ud * (gamma * t).cosh() - nb * (gamma * t).sinh() / (4.0 * gamma)
            }
            Branch::Quadratic => ud - nb * t / 4.0,
            Branch::Trigonometric { gamma } => {
                ud * (gamma * t).cos() - nb * (gamma * t).sin() / (4.0 * gamma)
            }
        }
    }

    /// Volume ratio field at time `t` (entire in `t`; no window check).
    pub fn u_eval(&self, t: f64) -> GridField<f64> {
        let spec = self.spec();
        let mut out = GridField::zeros(spec, Rank::Scalar);
        for node in 0..spec.nodes() {
            out.set_comp(node, 0, self.u_node(node, t));
        }
        out
    }

    /// Analytic time derivative of the volume ratio.
    pub fn u_dot_eval(&self, t: f64) -> GridField<f64> {
        let spec = self.spec();
        let mut out = GridField::zeros(spec, Rank::Scalar);
        for node in 0..spec.nodes() {
            out.set_comp(node, 0, self.u_dot_node(node, t));
        }
        out
    }

    /// Direct summation of the defining power series — the oracle the
    /// branch formulas are checked against.
    pub fn u_series(&self, t: f64, terms: usize) -> GridField<f64> {
        let spec = self.spec();
        let half_e = self.energy / 2.0;
        let mut out = GridField::zeros(spec, Rank::Scalar);
        for node in 0..spec.nodes() {
            let ud = self.u_dot0.comp(node, 0);
            let nb = self.n0_bar.comp(node, 0);
            // odd series: Σ_k (E/2)^k t^(2k+1)/(2k+1)!
            let mut odd = 0.0;
            let mut term = t;
            for k in 0..terms {
                if k > 0 {
                    term *= half_e * t * t / ((2 * k) as f64 * (2 * k + 1) as f64);
                }
                odd += term;
            }
            // even series: Σ_{k>=1} (E/2)^(k-1) t^(2k)/(2k)!
            let mut even = 0.0;
            let mut term = t * t / 2.0;
            for k in 1..terms {
                if k > 1 {
                    term *= half_e * t * t / ((2 * k - 1) as f64 * (2 * k) as f64);
                }
                even += term;
            }
            out.set_comp(node, 0, 1.0 + ud * odd - 0.25 * nb * even);
        }
        out
    }

    /// Minimum of `u` at one node over the closed interval between 0 and
    /// `t`, by critical-point enumeration of the branch formula.
    fn u_min_node(&self, node: usize, t: f64) -> f64 {
        let (lo, hi) = if t >= 0.0 { (0.0, t) } else { (t, 0.0) };
        let mut m = self.u_node(node, lo).min(self.u_node(node, hi));
        let ud = self.u_dot0.comp(node, 0);
        let nb = self.n0_bar.comp(node, 0);
        match self.branch {
            Branch::Hyperbolic { gamma } => {
                // u' ∝ A cosh + B sinh, A = u̇₀, B = -N̲₀/(4γ): one zero when |A| < |B|
                let a = ud;
                let b = -nb / (4.0 * gamma);
                if b != 0.0 && (a / b).abs() < 1.0 {
                    let s = (-a / b).atanh() / gamma;
                    if s > lo && s < hi {
                        m = m.min(self.u_node(node, s));
                    }
                }
            }
            Branch::Quadratic => {
                if nb != 0.0 {
                    let s = 4.0 * ud / nb;
                    if s > lo && s < hi {
                        m = m.min(self.u_node(node, s));
                    }
                }
            }
            Branch::Trigonometric { gamma } => {
                // u' ∝ A cos(γs) + B sin(γs): zeros at γs = atan2(A, -B) + kπ
                let a = ud;
                let b = -nb / (4.0 * gamma);
                let phase = f64::atan2(a, -b);
                let k_lo = ((gamma * lo - phase) / std::f64::consts::PI).floor() as i64 - 1;
                let k_hi = ((gamma * hi - phase) / std::f64::consts::PI).ceil() as i64 + 1;
                for k in k_lo..=k_hi {
                    let s = (phase + k as f64 * std::f64::consts::PI) / gamma;
                    if s > lo && s < hi {
                        m = m.min(self.u_node(node, s));
                    }
                }
            }
        }
        m
    }

    /// Global minimum of `u` over all nodes and the interval `[0, t]`.
    pub fn u_min_global(&self, t: f64) -> f64 {
        (0..self.spec().nodes())
            .map(|node| self.u_min_node(node, t))
            .fold(f64::INFINITY, f64::min)
    }

    /// Per-node time reparametrization `s(t) = ∫₀^t u(s)^{-1} ds` by
    /// adaptive Gauss-Legendre quadrature.
    fn s_field(&self, t: f64) -> GridField<f64> {
        let spec = self.spec();
        let mut out = GridField::zeros(spec, Rank::Scalar);
        for node in 0..spec.nodes() {
            let val = gauss::integrate(
                |s| 1.0 / self.u_node(node, s),
                0.0,
                t,
                tol::TIME_QUADRATURE,
            );
            out.set_comp(node, 0, val);
        }
        out
    }

    /// First time in `(0, t]` (or `[t, 0)`) at which the global minimum of
    /// `u` crosses `floor`, located by bisection.
    fn degeneration_time(&self, t: f64, floor: f64) -> f64 {
        let mut lo = 0.0f64;
        let mut hi = t;
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if self.u_min_global(mid) > floor {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }

    /// Evaluates the geodesic at `t`.
    ///
    /// Fails with `DegenerateVolume` when the volume ratio dips below
    /// `u_floor` anywhere on the way to `t`.
    pub fn evaluate(&self, t: f64) -> Result<GeodesicSample> {
        self.evaluate_with_floor(t, tol::U_FLOOR)
    }

    pub fn evaluate_with_floor(&self, t: f64, u_floor: f64) -> Result<GeodesicSample> {
        let min_u = self.u_min_global(t);
        if min_u <= u_floor {
            return Err(Error::DegenerateVolume { t_bad: self.degeneration_time(t, u_floor) });
        }
        let u = self.u_eval(t);
        let u_dot = self.u_dot_eval(t);
        let s = self.s_field(t);
        self.assemble(t, u, u_dot, &s, min_u)
    }

    /// Builds `(g_t, Ω_t)` and the speed from the scalar state; shared by
    /// the closed form and the Runge-Kutta oracle.
    pub(crate) fn assemble(
        &self,
        t: f64,
        u: GridField<f64>,
        u_dot: GridField<f64>,
        s: &GridField<f64>,
        min_u: f64,
    ) -> Result<GeodesicSample> {
        let spec = self.spec();
        let g0 = self.base.metric();

        let scaled = scalar_mul(&self.v_star0, s);
        let exp_field = matrix_exp(&scaled, g0)?;
        let g_t = MetricField::new(
            {
                let mut low = g0.lower_endo(&exp_field).with_rank(Rank::SymTwo)?;
                low.symmetrize_two_tensor();
                low
            },
        )?;

        let w_t = {
            let mut w = GridField::zeros(spec, Rank::TopForm);
            for node in 0..spec.nodes() {
                w.set_comp(node, 0, u.comp(node, 0) * self.base.volume().density_at(node));
            }
            VolumeForm::new(w)?
        };
        let point = StructurePoint::new(g_t, w_t)?;

        // ġ*_t = u^{-1} ġ*₀, lowered with g_t; Ω̇_t = u̇ Ω₀
        let inv_u = u.map(|x| 1.0 / x);
        let v_star_t = scalar_mul(&self.v_star0, &inv_u);
        let v_t = point.metric().sym2_from_endo(&v_star_t);
        let mut vol_dot = GridField::zeros(spec, Rank::TopForm);
        for node in 0..spec.nodes() {
            vol_dot.set_comp(
                node,
                0,
                u_dot.comp(node, 0) * self.base.volume().density_at(node),
            );
        }
        let speed = TangentPair::new(v_t, vol_dot)?;
        Ok(GeodesicSample { t, point, speed, u, u_dot, min_u })
    }

    /// Largest interval around 0 on which `min_nodes u > u_floor`;
    /// infinite sides are reported as `±∞`.
    pub fn existence_window(&self, u_floor: f64) -> (f64, f64) {
        assert!(u_floor > 0.0 && u_floor < 1.0);
        if self.u_dot0.sup_norm() < 1e-14 && self.n0_bar.sup_norm() < 1e-14 {
            return (f64::NEG_INFINITY, f64::INFINITY);
        }
        let side = |dir: f64| -> f64 {
            // for the oscillatory branch one period bounds the search
            let cap = match self.branch {
                Branch::Trigonometric { gamma } => 2.0 * std::f64::consts::PI / gamma,
                _ => 1e9,
            };
            let mut hi = 1.0f64;
            while self.u_min_global(dir * hi) > u_floor {
                if hi >= cap {
                    return dir * f64::INFINITY;
                }
                hi = (hi * 2.0).min(cap);
            }
            let mut lo = 0.0f64;
            let mut hi_b = hi;
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi_b);
                if self.u_min_global(dir * mid) > u_floor {
                    lo = mid;
                } else {
                    hi_b = mid;
                }
            }
            dir * lo
        };
        (side(-1.0), side(1.0))
    }
}

/// Energy (the pairing of the speed with itself) at an evaluated sample.
pub fn sample_energy(sample: &GeodesicSample) -> f64 {
    g_product(&sample.point, &sample.speed, &sample.speed)
}
