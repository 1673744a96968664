//! Partial derivatives and quadrature on periodic grids.
//!
//! The spectral path differentiates each grid line through the FFT with
//! integer wavenumbers (period 2π) and a zeroed Nyquist derivative mode,
//! which keeps the discrete operator exactly skew-adjoint. The `central4`
//! path is the standard 4th-order centered stencil. Both commute between
//! axes and annihilate constants.

use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::field::{FieldScalar, GridField, Rank};

fn plans(n: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
    static PLANNER: OnceLock<Mutex<FftPlanner<f64>>> = OnceLock::new();
    let mut planner = PLANNER
        .get_or_init(|| Mutex::new(FftPlanner::new()))
        .lock()
        .expect("fft planner lock");
    (planner.plan_fft_forward(n), planner.plan_fft_inverse(n))
}

/// Integer wavenumber of Fourier mode `m` on an `n`-point grid, with the
/// Nyquist derivative mode removed.
fn wavenumber(m: usize, n: usize) -> f64 {
    if 2 * m < n {
        m as f64
    } else if 2 * m == n {
        0.0
    } else {
        m as f64 - n as f64
    }
}

/// Componentwise partial derivative along `axis`.
pub fn derive<T: FieldScalar>(f: &GridField<T>, axis: usize) -> GridField<T> {
    assert!(axis < f.spec().dim, "axis {axis} out of range");
    match f.spec().scheme {
        super::grid::Scheme::Spectral => derive_spectral(f, axis),
        super::grid::Scheme::Central4 => derive_central4(f, axis),
    }
}

fn derive_spectral<T: FieldScalar>(f: &GridField<T>, axis: usize) -> GridField<T> {
    let spec = *f.spec();
    let n = spec.n;
    let nc = f.ncomp();
    let stride = n.pow((spec.dim - 1 - axis) as u32);
    let block = stride * n;
    let (fwd, inv) = plans(n);
    let mut out = GridField::<T>::zeros(spec, f.rank());
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    let inv_n = 1.0 / n as f64;

    for c in 0..nc {
        for block_start in (0..spec.nodes()).step_by(block) {
            for offset in 0..stride {
                let base = block_start + offset;
                for t in 0..n {
                    line[t] = f.comp(base + t * stride, c).to_c64();
                }
                fwd.process(&mut line);
                for (m, v) in line.iter_mut().enumerate() {
                    *v *= Complex64::new(0.0, wavenumber(m, n));
                }
                inv.process(&mut line);
                for t in 0..n {
                    out.set_comp(base + t * stride, c, T::from_c64(line[t] * inv_n));
                }
            }
        }
    }
    out
}

fn derive_central4<T: FieldScalar>(f: &GridField<T>, axis: usize) -> GridField<T> {
    let spec = *f.spec();
    let nc = f.ncomp();
    let h = spec.spacing();
    let mut out = GridField::<T>::zeros(spec, f.rank());
    for node in 0..spec.nodes() {
        let p1 = spec.shift(node, axis, 1);
        let p2 = spec.shift(node, axis, 2);
        let m1 = spec.shift(node, axis, -1);
        let m2 = spec.shift(node, axis, -2);
        for c in 0..nc {
            let v = f.comp(m2, c).scale(1.0) - f.comp(p2, c)
                + (f.comp(p1, c) - f.comp(m1, c)).scale(8.0);
            out.set_comp(node, c, v.scale(1.0 / (12.0 * h)));
        }
    }
    out
}

/// Solves `(shift - Δ) u = f` componentwise with the flat spectral
/// Laplacian (used as a preconditioner, so always spectral regardless of
/// the field's scheme).
pub fn solve_helmholtz_flat(f: &GridField<f64>, shift: f64) -> GridField<f64> {
    let spec = *f.spec();
    let n = spec.n;
    let d = spec.dim;
    let nodes = spec.nodes();
    let nc = f.ncomp();
    let (fwd, inv) = plans(n);
    let mut out = GridField::<f64>::zeros(spec, f.rank());
    let mut buf = vec![Complex64::new(0.0, 0.0); nodes];
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    for c in 0..nc {
        for (node, v) in buf.iter_mut().enumerate() {
            *v = Complex64::new(f.comp(node, c), 0.0);
        }
        for axis in 0..d {
            let stride = n.pow((d - 1 - axis) as u32);
            let block = stride * n;
            for block_start in (0..nodes).step_by(block) {
                for offset in 0..stride {
                    let base = block_start + offset;
                    for t in 0..n {
                        line[t] = buf[base + t * stride];
                    }
                    fwd.process(&mut line);
                    for t in 0..n {
                        buf[base + t * stride] = line[t];
                    }
                }
            }
        }
        for (node, v) in buf.iter_mut().enumerate() {
            let idx = spec.multi_index(node);
            let mut k2 = 0.0;
            for a in 0..d {
                let m = idx[a];
                let k = if 2 * m <= n { m as f64 } else { m as f64 - n as f64 };
                k2 += k * k;
            }
            *v /= shift + k2;
        }
        for axis in 0..d {
            let stride = n.pow((d - 1 - axis) as u32);
            let block = stride * n;
            for block_start in (0..nodes).step_by(block) {
                for offset in 0..stride {
                    let base = block_start + offset;
                    for t in 0..n {
                        line[t] = buf[base + t * stride];
                    }
                    inv.process(&mut line);
                    for t in 0..n {
                        buf[base + t * stride] = line[t];
                    }
                }
            }
        }
        let scale = 1.0 / nodes as f64;
        for node in 0..nodes {
            out.set_comp(node, c, buf[node].re * scale);
        }
    }
    out
}

/// `(2π/n)^d Σ_nodes f` over a scalar or top-form field.
///
/// Spectrally exact for trigonometric polynomials of degree below `n`.
/// The reduction is a compensated sequential sum, so results are
/// bit-reproducible run to run.
pub fn quadrature(f: &GridField<f64>) -> f64 {
    assert!(
        matches!(f.rank(), Rank::Scalar | Rank::TopForm),
        "quadrature needs a scalar or top-form field"
    );
    f.spec().node_weight() * neumaier_sum(f.values())
}

pub(crate) fn neumaier_sum(values: &[f64]) -> f64 {
    let mut acc = 0.0f64;
    let mut comp = 0.0f64;
    for &v in values {
        let t = acc + v;
        comp += if acc.abs() >= v.abs() { (acc - t) + v } else { (v - t) + acc };
        acc = t;
    }
    acc + comp
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::grid::{GridSpec, Scheme};
    use approx::assert_abs_diff_eq;

    fn spec(n: usize, scheme: Scheme) -> GridSpec {
        GridSpec::new(2, n, scheme).unwrap()
    }

    #[test]
    fn spectral_single_mode_is_exact() {
        let s = spec(16, Scheme::Spectral);
        let f = GridField::from_fn(s, Rank::Scalar, |_, x, out| out[0] = x[0].sin());
        let df = derive(&f, 0);
        for node in 0..s.nodes() {
            let x = s.coords(node);
            assert_abs_diff_eq!(df.comp(node, 0), x[0].cos(), epsilon = 1e-13);
        }
        let dconst = derive(&GridField::from_fn(s, Rank::Scalar, |_, _, out| out[0] = 3.5), 1);
        assert!(dconst.sup_norm() < 1e-14);
    }

    #[test]
    fn central4_fourth_order() {
        // f = sin(3x)cos(2y), d/dy = -2 sin(3x) sin(2y); halving study
        let err = |n: usize| {
            let s = spec(n, Scheme::Central4);
            let f = GridField::from_fn(s, Rank::Scalar, |_, x, out| {
                out[0] = (3.0 * x[0]).sin() * (2.0 * x[1]).cos()
            });
            let df = derive(&f, 1);
            let mut worst = 0.0f64;
            for node in 0..s.nodes() {
                let x = s.coords(node);
                let exact = -2.0 * (3.0 * x[0]).sin() * (2.0 * x[1]).sin();
                worst = worst.max((df.comp(node, 0) - exact).abs());
            }
            worst
        };
        let e1 = err(16);
        let e2 = err(32);
        let e3 = err(64);
        let slope1 = (e1 / e2).log2();
        let slope2 = (e2 / e3).log2();
        assert!(slope1 > 3.7 && slope2 > 3.7, "slopes {slope1} {slope2}");
    }

    #[test]
    fn spectral_matches_analytic_mixed_mode() {
        let s = spec(16, Scheme::Spectral);
        let f = GridField::from_fn(s, Rank::Scalar, |_, x, out| {
            out[0] = (3.0 * x[0]).sin() * (2.0 * x[1]).cos()
        });
        let df = derive(&f, 1);
        for node in 0..s.nodes() {
            let x = s.coords(node);
            let exact = -2.0 * (3.0 * x[0]).sin() * (2.0 * x[1]).sin();
            assert_abs_diff_eq!(df.comp(node, 0), exact, epsilon = 1e-12);
        }
    }

    #[test]
    fn derivatives_commute() {
        let s = spec(16, Scheme::Spectral);
        let f = GridField::from_fn(s, Rank::Scalar, |_, x, out| {
            out[0] = (2.0 * x[0]).cos() * (3.0 * x[1]).sin() + (x[0] + x[1]).sin()
        });
        let d01 = derive(&derive(&f, 0), 1);
        let d10 = derive(&derive(&f, 1), 0);
        assert!(d01.sub(&d10).unwrap().sup_norm() < 1e-10);
    }

    #[test]
    fn quadrature_examples() {
        let s = spec(16, Scheme::Spectral);
        let inv_area = 1.0 / (2.0 * std::f64::consts::PI).powi(2);
        let uniform = GridField::from_fn(s, Rank::Scalar, |_, _, out| out[0] = inv_area);
        assert_abs_diff_eq!(quadrature(&uniform), 1.0, epsilon = 1e-14);

        let sine = GridField::from_fn(s, Rank::Scalar, |_, x, out| out[0] = x[0].sin());
        assert!(quadrature(&sine).abs() < 1e-13);

        // ∫ cos^2(x0) over T^2 = 2π^2
        let cos2 = GridField::from_fn(s, Rank::Scalar, |_, x, out| out[0] = x[0].cos().powi(2));
        assert_abs_diff_eq!(quadrature(&cos2), 2.0 * std::f64::consts::PI.powi(2), epsilon = 1e-11);
    }

    #[test]
    fn quadrature_of_derivative_vanishes() {
        for scheme in [Scheme::Spectral, Scheme::Central4] {
            let s = spec(16, scheme);
            let f = GridField::from_fn(s, Rank::Scalar, |_, x, out| {
                out[0] = (2.0 * x[0]).sin() * x[1].cos() + 0.3 * (x[0] * 1.0).cos()
            });
            for axis in 0..2 {
                assert!(quadrature(&derive(&f, axis)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn complex_derivative_matches_real_parts() {
        let s = spec(16, Scheme::Spectral);
        let re = GridField::from_fn(s, Rank::Scalar, |_, x, out| out[0] = (2.0 * x[0]).sin());
        let im = GridField::from_fn(s, Rank::Scalar, |_, x, out| out[0] = x[1].cos());
        let mut z = re.to_complex();
        for (zv, iv) in z.values_mut().iter_mut().zip(im.values().iter()) {
            zv.im = *iv;
        }
        let dz = derive(&z, 0);
        let dre = derive(&re, 0);
        let dim = derive(&im, 0);
        for node in 0..s.nodes() {
            assert_abs_diff_eq!(dz.comp(node, 0).re, dre.comp(node, 0), epsilon = 1e-13);
            assert_abs_diff_eq!(dz.comp(node, 0).im, dim.comp(node, 0), epsilon = 1e-13);
        }
    }
}
