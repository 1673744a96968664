//! Shared builders for unit tests: curved metrics and band-limited
//! random fields with seeded generators.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::fields::field::{GridField, Rank};
use crate::fields::grid::GridSpec;
use crate::fields::metric::{matrix_exp, MetricField, VolumeForm};
use crate::fields::quadrature;

/// `g = exp(ε (cos x₀ σ₃ + sin x₁ σ₁))`: SPD with det ≡ 1 on T².
pub fn curved_metric_t2(spec: GridSpec, eps: f64) -> MetricField {
    assert_eq!(spec.dim, 2);
    let a = GridField::from_fn(spec, Rank::Endo, |_, x, out| {
        let p = eps * x[0].cos();
        let q = eps * x[1].sin();
        out[0] = p;
        out[1] = q;
        out[2] = q;
        out[3] = -p;
    });
    let id = MetricField::identity(spec);
    let e = matrix_exp(&a, &id).unwrap();
    MetricField::new(e.with_rank(Rank::SymTwo).unwrap()).unwrap()
}

/// Conformal metric `g = e^{2φ} δ` with `φ = ε cos x₀`, plus φ itself.
pub fn conformal_metric_t2(spec: GridSpec, eps: f64) -> (MetricField, GridField<f64>) {
    assert_eq!(spec.dim, 2);
    let phi = GridField::from_fn(spec, Rank::Scalar, |_, x, out| out[0] = eps * x[0].cos());
    let g = GridField::from_fn(spec, Rank::SymTwo, |node, _, out| {
        let w = (2.0 * phi.comp(node, 0)).exp();
        out[0] = w;
        out[3] = w;
    });
    (MetricField::new(g).unwrap(), phi)
}

/// Nonuniform normalized volume form with one smooth mode.
pub fn bumpy_volume(spec: GridSpec, amp: f64) -> VolumeForm {
    let raw = GridField::from_fn(spec, Rank::TopForm, |_, x, out| {
        out[0] = (amp * (x[0].cos() + 0.7 * x[1].sin())).exp();
    });
    VolumeForm::normalized(raw).unwrap()
}

fn band_limited(spec: GridSpec, rng: &mut ChaCha8Rng, kmax: i32, amp: f64) -> impl Fn(&[f64]) -> f64 {
    let d = spec.dim;
    let mut modes = Vec::new();
    let mut k = vec![-kmax; d];
    loop {
        if k.iter().any(|&ki| ki != 0) {
            let a: f64 = rng.gen_range(-1.0..1.0);
            let p: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            modes.push((k.clone(), a, p));
        }
        let mut axis = 0;
        loop {
            k[axis] += 1;
            if k[axis] <= kmax {
                break;
            }
            k[axis] = -kmax;
            axis += 1;
            if axis == d {
                let norm = amp / modes.len() as f64;
                let modes2 = modes.clone();
                return move |x: &[f64]| {
                    modes2
                        .iter()
                        .map(|(k, a, p)| {
                            let phase: f64 =
                                k.iter().zip(x).map(|(&ki, &xi)| ki as f64 * xi).sum();
                            a * (phase + p).cos()
                        })
                        .sum::<f64>()
                        * norm
                };
            }
        }
    }
}

pub fn random_scalar(spec: GridSpec, seed: u64, kmax: i32, amp: f64) -> GridField<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f = band_limited(spec, &mut rng, kmax, amp);
    GridField::from_fn(spec, Rank::Scalar, |_, x, out| out[0] = f(x))
}

pub fn random_vector(spec: GridSpec, seed: u64, kmax: i32, amp: f64) -> GridField<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let comps: Vec<_> = (0..spec.dim).map(|_| band_limited(spec, &mut rng, kmax, amp)).collect();
    GridField::from_fn(spec, Rank::Vector, |_, x, out| {
        for (o, f) in out.iter_mut().zip(&comps) {
            *o = f(x);
        }
    })
}

pub fn random_sym2(spec: GridSpec, seed: u64, kmax: i32, amp: f64) -> GridField<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = spec.dim;
    let mut comps = Vec::new();
    for _ in 0..d * (d + 1) / 2 {
        comps.push(band_limited(spec, &mut rng, kmax, amp));
    }
    GridField::from_fn(spec, Rank::SymTwo, |_, x, out| {
        let mut c = 0;
        for i in 0..d {
            for j in i..d {
                let v = comps[c](x);
                out[i * d + j] = v;
                out[j * d + i] = v;
                c += 1;
            }
        }
    })
}

pub fn random_endo(spec: GridSpec, seed: u64, kmax: i32, amp: f64) -> GridField<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = spec.dim;
    let comps: Vec<_> = (0..d * d).map(|_| band_limited(spec, &mut rng, kmax, amp)).collect();
    GridField::from_fn(spec, Rank::Endo, |_, x, out| {
        for (o, f) in out.iter_mut().zip(&comps) {
            *o = f(x);
        }
    })
}

/// Warped compatible structure on T⁴: `g = exp(B)` with `B` a pointwise
/// anti-invariant symmetric combination, so `J = -ω^{-1} g` is exactly
/// almost-complex but generically non-integrable.
pub fn warped_acs_t4(spec: GridSpec, amp: f64) -> (MetricField, crate::almostcomplex::AcsField) {
    assert_eq!(spec.dim, 4);
    let b = GridField::from_fn(spec, Rank::Endo, |_, x, out| {
        let t1 = amp * (x[0] + x[2]).cos();
        let t2 = amp * (x[1] - x[3]).sin();
        // A1 = diag(1,-1,1,-1), A2 = E02 + E20 - E13 - E31; both symmetric
        // and anti-commuting with the standard J
        out[0] = t1;
        out[5] = -t1;
        out[10] = t1;
        out[15] = -t1;
        out[2] = t2;
        out[8] = t2;
        out[7] = -t2;
        out[13] = -t2;
    });
    let id = MetricField::identity(spec);
    let e = matrix_exp(&b, &id).unwrap();
    let g = MetricField::new(e.with_rank(Rank::SymTwo).unwrap()).unwrap();
    let acs =
        crate::almostcomplex::acs_from_metric(&crate::almostcomplex::standard_omega(spec), &g)
            .unwrap();
    (g, acs)
}

/// Band-limited top form with exactly zero quadrature.
pub fn random_topform_zero_mean(spec: GridSpec, seed: u64, kmax: i32, amp: f64) -> GridField<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f = band_limited(spec, &mut rng, kmax, amp);
    let mut raw = GridField::from_fn(spec, Rank::TopForm, |_, x, out| out[0] = f(x));
    let mean = quadrature(&raw) / (2.0 * std::f64::consts::PI).powi(spec.dim as i32);
    for v in raw.values_mut() {
        *v -= mean;
    }
    raw
}
