//! Classical 4th-order Runge-Kutta integration of the volume-ratio ODE —
//! the independent oracle for the closed-form geodesic.

use crate::error::{Error, Result};
use crate::fields::field::{GridField, Rank};
use crate::tol;

use super::{GGeodesic, GeodesicSample};

/// Scalar state per node: `(u, u̇, s)` with `s = ∫ u^{-1}`.
#[derive(Debug, Clone)]
pub struct RkState {
    pub t: f64,
    pub u: Vec<f64>,
    pub u_dot: Vec<f64>,
    pub s: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct RkTrajectory {
    pub states: Vec<RkState>,
}

impl RkTrajectory {
    pub fn last(&self) -> &RkState {
        self.states.last().expect("at least the initial state")
    }

    /// Reconstructs the structure point and speed at a stored state.
    pub fn sample(&self, geo: &GGeodesic, index: usize) -> Result<GeodesicSample> {
        let state = &self.states[index];
        let spec = geo.spec();
        let to_field = |vals: &[f64]| {
            GridField::from_values(spec, Rank::Scalar, vals.to_vec()).expect("node count")
        };
        let min_u = state.u.iter().cloned().fold(f64::INFINITY, f64::min);
        geo.assemble(
            state.t,
            to_field(&state.u),
            to_field(&state.u_dot),
            &to_field(&state.s),
            min_u,
        )
    }
}

#[inline]
fn accel(u: f64, u_dot: f64, m0: f64, energy: f64) -> f64 {
    0.25 * (u * energy - (m0 - 2.0 * u_dot * u_dot) / u)
}

/// Integrates the per-node system with fixed-step classical Runge-Kutta.
///
/// Used solely as an oracle for the closed-form path; fails with
/// `DegenerateVolume` when any node's `u` reaches the floor.
pub fn rk4_integrate(geo: &GGeodesic, t_end: f64, steps: usize) -> Result<RkTrajectory> {
    assert!(steps >= 16, "need at least 16 steps");
    let spec = geo.spec();
    let nodes = spec.nodes();
    let energy = geo.energy();
    let m0: Vec<f64> = (0..nodes).map(|n| geo.tr_sq0().comp(n, 0)).collect();

    let mut state = RkState {
        t: 0.0,
        u: vec![1.0; nodes],
        u_dot: (0..nodes).map(|n| geo.u_dot0().comp(n, 0)).collect(),
        s: vec![0.0; nodes],
    };
    let mut states = Vec::with_capacity(steps + 1);
    states.push(state.clone());

    let h = t_end / steps as f64;
    for step in 0..steps {
        for node in 0..nodes {
            let m = m0[node];
            let (u0, v0, s0) = (state.u[node], state.u_dot[node], state.s[node]);

            let k1 = (v0, accel(u0, v0, m, energy), 1.0 / u0);
            let (u1, v1) = (u0 + 0.5 * h * k1.0, v0 + 0.5 * h * k1.1);
            let k2 = (v1, accel(u1, v1, m, energy), 1.0 / u1);
            let (u2, v2) = (u0 + 0.5 * h * k2.0, v0 + 0.5 * h * k2.1);
            let k3 = (v2, accel(u2, v2, m, energy), 1.0 / u2);
            let (u3, v3) = (u0 + h * k3.0, v0 + h * k3.1);
            let k4 = (v3, accel(u3, v3, m, energy), 1.0 / u3);

            let u_new = u0 + h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
            if u_new <= tol::U_FLOOR || !u_new.is_finite() {
                return Err(Error::DegenerateVolume { t_bad: state.t + h });
            }
            state.u[node] = u_new;
            state.u_dot[node] = v0 + h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
            state.s[node] = s0 + h / 6.0 * (k1.2 + 2.0 * k2.2 + 2.0 * k3.2 + k4.2);
        }
        state.t = t_end * (step + 1) as f64 / steps as f64;
        states.push(state.clone());
    }
    Ok(RkTrajectory { states })
}
