//! Seed descriptions (JSON) and tangent-pair construction from them.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::almostcomplex::AcsField;
use crate::error::{Error, Result};
use crate::fields::field::{GridField, Rank};
use crate::fields::grid::GridSpec;

use super::project::anti_invariant_frame;
use super::{StructurePoint, TangentPair};

/// Seed description, serialized as
/// `{"type": "fourier", "modes": [[1,0]], "amplitudes": [0.3], ...}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum SeedSpec {
    Constant {
        amplitude: f64,
        #[serde(default)]
        anti_invariant: bool,
    },
    Fourier {
        modes: Vec<Vec<i32>>,
        amplitudes: Vec<f64>,
        #[serde(default)]
        anti_invariant: bool,
        #[serde(default)]
        volume_amplitude: f64,
        #[serde(default)]
        volume_mode: Vec<i32>,
    },
    Random {
        kmax: i32,
        amplitude: f64,
        #[serde(default)]
        anti_invariant: bool,
        #[serde(default)]
        volume_amplitude: f64,
        rng_seed: u64,
    },
}

impl SeedSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("seed serializes")
    }

    pub fn anti_invariant(&self) -> bool {
        match self {
            SeedSpec::Constant { anti_invariant, .. }
            | SeedSpec::Fourier { anti_invariant, .. }
            | SeedSpec::Random { anti_invariant, .. } => *anti_invariant,
        }
    }
}

/// Constant symmetric basis directions used by plain (non-anti-invariant)
/// seeds: traceless diagonal first, then off-diagonal pairs.
fn symmetric_basis(spec: GridSpec) -> Vec<GridField<f64>> {
    let d = spec.dim;
    let mut basis = Vec::new();
    for a in 0..d - 1 {
        basis.push(GridField::from_fn(spec, Rank::SymTwo, |_, _, out| {
            out[a * d + a] = 1.0;
            out[(a + 1) * d + (a + 1)] = -1.0;
        }));
    }
    for a in 0..d {
        for b in a + 1..d {
            basis.push(GridField::from_fn(spec, Rank::SymTwo, |_, _, out| {
                out[a * d + b] = 1.0;
                out[b * d + a] = 1.0;
            }));
        }
    }
    basis
}

fn mode_phase(k: &[i32], x: &[f64]) -> f64 {
    k.iter().zip(x).map(|(&ki, &xi)| ki as f64 * xi).sum()
}

/// Zero-mass top form whose star component `V/Ω` is one Fourier mode of
/// the given amplitude (volume amplitudes are specified in star units).
fn volume_mode_field(p: &StructurePoint, amp: f64, mode: &[i32]) -> GridField<f64> {
    let spec = *p.spec();
    let k: Vec<i32> = if mode.is_empty() {
        let mut v = vec![0i32; spec.dim];
        v[0] = 1;
        v
    } else {
        mode.to_vec()
    };
    let star = GridField::from_fn(spec, Rank::Scalar, |_, x, out| {
        out[0] = amp * mode_phase(&k, x).cos();
    });
    weighted_zero_mass(p, &star)
}

/// `V = (φ - ∫φΩ)·Ω` — exactly zero total mass for any star profile φ.
fn weighted_zero_mass(p: &StructurePoint, star: &GridField<f64>) -> GridField<f64> {
    let spec = *p.spec();
    let weighted = crate::fields::tensor::scalar_mul(star, &p.weight());
    let mean = crate::fields::quadrature(&weighted.clone().with_rank(Rank::TopForm).unwrap());
    GridField::from_fn(spec, Rank::TopForm, |node, _, out| {
        out[0] = (star.comp(node, 0) - mean) * p.volume().density_at(node);
    })
}

/// Builds the raw (unprojected) tangent pair a seed describes.
///
/// Anti-invariant seeds parametrize the star direction against the
/// g-orthonormal anti-invariant frame of `acs`, so `v` anti-commutes with
/// `J` exactly by construction.
pub fn build_seed(
    p: &StructurePoint,
    seed: &SeedSpec,
    acs: Option<&AcsField>,
) -> Result<TangentPair> {
    let spec = *p.spec();
    if seed.anti_invariant() && acs.is_none() {
        return Err(Error::InvalidConfig(
            "anti-invariant seed requires an almost-complex structure".into(),
        ));
    }

    let frame = if seed.anti_invariant() {
        Some(anti_invariant_frame(p.metric(), acs.unwrap())?)
    } else {
        None
    };

    let assemble_v = |coeff_fns: &[Box<dyn Fn(&[f64]) -> f64>]| -> GridField<f64> {
        match &frame {
            Some(frame) => {
                let mut h = GridField::zeros(spec, Rank::Endo);
                for (m, cf) in coeff_fns.iter().enumerate() {
                    let a = &frame[m % frame.len()];
                    for node in 0..spec.nodes() {
                        let x = spec.coords(node);
                        let w = cf(&x[..spec.dim]);
                        let ab = a.node(node);
                        let hb = h.node_mut(node);
                        for c in 0..hb.len() {
                            hb[c] += w * ab[c];
                        }
                    }
                }
                p.metric().sym2_from_endo(&h)
            }
            None => {
                let basis = symmetric_basis(spec);
                let mut v = GridField::zeros(spec, Rank::SymTwo);
                for (m, cf) in coeff_fns.iter().enumerate() {
                    let b = &basis[m % basis.len()];
                    for node in 0..spec.nodes() {
                        let x = spec.coords(node);
                        let w = cf(&x[..spec.dim]);
                        let bb = b.node(node);
                        let vb = v.node_mut(node);
                        for c in 0..vb.len() {
                            vb[c] += w * bb[c];
                        }
                    }
                }
                v
            }
        }
    };

    match seed {
        SeedSpec::Constant { amplitude, .. } => {
            let amp = *amplitude;
            let fns: Vec<Box<dyn Fn(&[f64]) -> f64>> = vec![Box::new(move |_| amp)];
            let v = assemble_v(&fns);
            TangentPair::new(v, GridField::zeros(spec, Rank::TopForm))
        }
        SeedSpec::Fourier { modes, amplitudes, volume_amplitude, volume_mode, .. } => {
            if modes.len() != amplitudes.len() {
                return Err(Error::InvalidConfig(
                    "modes and amplitudes must have equal length".into(),
                ));
            }
            let mut fns: Vec<Box<dyn Fn(&[f64]) -> f64>> = Vec::new();
            for (k, &a) in modes.iter().zip(amplitudes.iter()) {
                let k = k.clone();
                fns.push(Box::new(move |x| a * mode_phase(&k, x).cos()));
            }
            let v = assemble_v(&fns);
            let vol = volume_mode_field(p, *volume_amplitude, volume_mode);
            TangentPair::new(v, vol)
        }
        SeedSpec::Random { kmax, amplitude, volume_amplitude, rng_seed, .. } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*rng_seed);
            let n_dirs = match &frame {
                Some(f) => f.len(),
                None => symmetric_basis(spec).len(),
            };
            let mut fns: Vec<Box<dyn Fn(&[f64]) -> f64>> = Vec::new();
            for _ in 0..n_dirs {
                let modes = random_modes(&mut rng, spec.dim, *kmax, *amplitude);
                fns.push(Box::new(move |x| {
                    modes.iter().map(|(k, a, ph)| a * (mode_phase(k, x) + ph).cos()).sum()
                }));
            }
            let v = assemble_v(&fns);
            let vol_modes = random_modes(&mut rng, spec.dim, *kmax, *volume_amplitude);
            let star = GridField::from_fn(spec, Rank::Scalar, |_, x, out| {
                out[0] = vol_modes.iter().map(|(k, a, ph)| a * (mode_phase(k, x) + ph).cos()).sum()
            });
            let vol = weighted_zero_mass(p, &star);
            TangentPair::new(v, vol)
        }
    }
}

type ModeSet = Vec<(Vec<i32>, f64, f64)>;

fn random_modes(rng: &mut ChaCha8Rng, dim: usize, kmax: i32, amp: f64) -> ModeSet {
    let mut modes = Vec::new();
    let mut k = vec![-kmax; dim];
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
            if axis == dim {
                let norm = amp / modes.len() as f64;
                for m in &mut modes {
                    m.1 *= norm;
                }
                return modes;
            }
        }
    }
}
