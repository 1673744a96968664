//! Sampled tensor fields on periodic grids.
//!
//! A [`GridField`] stores one tensor value per grid node, components
//! innermost, node index row-major — the same layout the `.gfld` container
//! uses on disk. Real fields are `GridField<f64>`; complex intermediates
//! (type projections, frame forms) are `GridField<Complex64>` so the
//! complex flag is carried by the type itself.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::grid::GridSpec;
use crate::error::{Error, Result};

/// Scalar types a field can hold.
pub trait FieldScalar:
    Copy
    + PartialEq
    + std::fmt::Debug
    + Default
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Mul<Output = Self>
    + std::ops::Neg<Output = Self>
    + std::ops::AddAssign
    + std::ops::SubAssign
    + 'static
{
    const ZERO: Self;
    fn from_re(x: f64) -> Self;
    fn to_c64(self) -> Complex64;
    fn from_c64(z: Complex64) -> Self;
    fn scale(self, s: f64) -> Self;
    fn modulus(self) -> f64;
}

impl FieldScalar for f64 {
    const ZERO: f64 = 0.0;
    fn from_re(x: f64) -> f64 {
        x
    }
    fn to_c64(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
    fn from_c64(z: Complex64) -> f64 {
        z.re
    }
    fn scale(self, s: f64) -> f64 {
        self * s
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
}

impl FieldScalar for Complex64 {
    const ZERO: Complex64 = Complex64::new(0.0, 0.0);
    fn from_re(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }
    fn to_c64(self) -> Complex64 {
        self
    }
    fn from_c64(z: Complex64) -> Complex64 {
        z
    }
    fn scale(self, s: f64) -> Complex64 {
        self * s
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
}

/// Tensor signature of a field, fixing the per-node component layout.
///
/// Index conventions (`d = spec.dim`):
/// * `Vector` — `ξ^i`, `d` components.
/// * `OneForm` — `β_i`, `d` components.
/// * `Endo` — `A^i_j` at `i*d + j`. Covariant derivatives of vectors land
///   here with the derivative index in the `j` slot.
/// * `SymTwo` — `v_{ij}` at `i*d + j`, full storage, exactly symmetric.
/// * `Cov2` — general `T_{ij}` at `i*d + j` (derivative index last).
/// * `Cov3` — `T_{ijk}` at `(i*d + j)*d + k` (derivative index last).
/// * `EndoCov` — `(∇A)^i_{j;k}` at `(i*d + j)*d + k`.
/// * `Riemann` — `R^i_{jkl}` at `((i*d + j)*d + k)*d + l`; also used for
///   endomorphism-valued 2-forms `C^i_{j,kl}`.
/// * `VecForm2` — `N^k_{ij}` at `(k*d + i)*d + j`, antisymmetric in `ij`.
/// * `Form(k)` — packed alternating `k`-form on increasing multi-indices.
/// * `TopForm` — density `w` of `w · dx^1∧…∧dx^d`, one component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rank {
    Scalar,
    Vector,
    OneForm,
    Endo,
    SymTwo,
    Cov2,
    Cov3,
    EndoCov,
    Riemann,
    VecForm2,
    Form(u8),
    TopForm,
}

impl Rank {
    pub fn comps(&self, d: usize) -> usize {
        match self {
            Rank::Scalar | Rank::TopForm => 1,
            Rank::Vector | Rank::OneForm => d,
            Rank::Endo | Rank::SymTwo | Rank::Cov2 => d * d,
            Rank::Cov3 | Rank::EndoCov | Rank::VecForm2 => d * d * d,
            Rank::Riemann => d * d * d * d,
            Rank::Form(k) => binomial(d, *k as usize),
        }
    }
}

pub(crate) fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut num = 1usize;
    let mut den = 1usize;
    for i in 0..k {
        num *= n - i;
        den *= i + 1;
    }
    num / den
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridField<T: FieldScalar = f64> {
    spec: GridSpec,
    rank: Rank,
    values: Vec<T>,
}

pub type CGridField = GridField<Complex64>;

impl<T: FieldScalar> GridField<T> {
    pub fn zeros(spec: GridSpec, rank: Rank) -> Self {
        let len = spec.nodes() * rank.comps(spec.dim);
        GridField { spec, rank, values: vec![T::ZERO; len] }
    }

    /// Builds a field by filling the component slice of every node.
    pub fn from_fn(spec: GridSpec, rank: Rank, mut fill: impl FnMut(usize, &[f64], &mut [T])) -> Self {
        let mut f = Self::zeros(spec, rank);
        let nc = rank.comps(spec.dim);
        for node in 0..spec.nodes() {
            let x = spec.coords(node);
            fill(node, &x[..spec.dim], &mut f.values[node * nc..(node + 1) * nc]);
        }
        f
    }

    pub fn from_values(spec: GridSpec, rank: Rank, values: Vec<T>) -> Result<Self> {
        if values.len() != spec.nodes() * rank.comps(spec.dim) {
            return Err(Error::InvalidField(format!(
                "value count {} does not match {} nodes x {} comps",
                values.len(),
                spec.nodes(),
                rank.comps(spec.dim)
            )));
        }
        Ok(GridField { spec, rank, values })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn rank(&self) -> Rank {
        self.rank
    }

    pub fn ncomp(&self) -> usize {
        self.rank.comps(self.spec.dim)
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    #[inline]
    pub fn node(&self, node: usize) -> &[T] {
        let nc = self.ncomp();
        &self.values[node * nc..(node + 1) * nc]
    }

    #[inline]
    pub fn node_mut(&mut self, node: usize) -> &mut [T] {
        let nc = self.ncomp();
        &mut self.values[node * nc..(node + 1) * nc]
    }

    #[inline]
    pub fn comp(&self, node: usize, c: usize) -> T {
        self.values[node * self.ncomp() + c]
    }

    #[inline]
    pub fn set_comp(&mut self, node: usize, c: usize, v: T) {
        let nc = self.ncomp();
        self.values[node * nc + c] = v;
    }

    /// Reinterprets the components under a different rank with the same
    /// component count (e.g. `Cov2` view of a `SymTwo` field).
    pub fn with_rank(mut self, rank: Rank) -> Result<Self> {
        if rank.comps(self.spec.dim) != self.ncomp() {
            return Err(Error::UnsupportedRank(format!(
                "cannot view {:?} as {:?}",
                self.rank, rank
            )));
        }
        self.rank = rank;
        Ok(self)
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        GridField {
            spec: self.spec,
            rank: self.rank,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        self.compatible(other)?;
        Ok(GridField {
            spec: self.spec,
            rank: self.rank,
            values: self
                .values
                .iter()
                .zip(other.values.iter())
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|v| v.scale(s))
    }

    /// `self += s * other`.
    pub fn axpy(&mut self, s: f64, other: &Self) -> Result<()> {
        self.compatible(other)?;
        for (a, &b) in self.values.iter_mut().zip(other.values.iter()) {
            *a += b.scale(s);
        }
        Ok(())
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.modulus()).fold(0.0, f64::max)
    }

    /// Plain Euclidean dot product of the raw component vectors.
    pub fn flat_dot(&self, other: &Self) -> Result<f64>
    where
        T: FieldScalar,
    {
        self.compatible(other)?;
        let mut acc = 0.0;
        let mut comp = 0.0;
        for (a, b) in self.values.iter().zip(other.values.iter()) {
            let term = (a.to_c64() * b.to_c64().conj()).re;
            let t = acc + term;
            comp += if acc.abs() >= term.abs() { (acc - t) + term } else { (term - t) + acc };
            acc = t;
        }
        Ok(acc + comp)
    }

    pub fn compatible(&self, other: &Self) -> Result<()> {
        self.spec.same_grid(&other.spec)?;
        if self.rank != other.rank {
            return Err(Error::UnsupportedRank(format!(
                "rank mismatch {:?} vs {:?}",
                self.rank, other.rank
            )));
        }
        Ok(())
    }
}

impl GridField<f64> {
    /// Promotes a real field to a complex one.
    pub fn to_complex(&self) -> CGridField {
        GridField {
            spec: self.spec,
            rank: self.rank,
            values: self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        }
    }

    /// Symmetrizes a `d x d` covariant block (used when an operation
    /// produces a `SymTwo` result up to rounding).
    pub fn symmetrize_two_tensor(&mut self) {
        let d = self.spec.dim;
        assert!(matches!(self.rank, Rank::SymTwo | Rank::Cov2 | Rank::Endo));
        for node in 0..self.spec.nodes() {
            let block = self.node_mut(node);
            for i in 0..d {
                for j in i + 1..d {
                    let m = 0.5 * (block[i * d + j] + block[j * d + i]);
                    block[i * d + j] = m;
                    block[j * d + i] = m;
                }
            }
        }
    }

    /// Largest asymmetry |T_{ij} - T_{ji}| over all nodes.
    pub fn asymmetry_two_tensor(&self) -> f64 {
        let d = self.spec.dim;
        let mut worst = 0.0f64;
        for node in 0..self.spec.nodes() {
            let block = self.node(node);
            for i in 0..d {
                for j in i + 1..d {
                    worst = worst.max((block[i * d + j] - block[j * d + i]).abs());
                }
            }
        }
        worst
    }
}

impl CGridField {
    /// Splits into the real part and the sup-norm of the imaginary part.
    pub fn into_real(&self) -> (GridField<f64>, f64) {
        let mut imag = 0.0f64;
        let values = self
            .values
            .iter()
            .map(|z| {
                imag = imag.max(z.im.abs());
                z.re
            })
            .collect();
        (
            GridField { spec: self.spec, rank: self.rank, values },
            imag,
        )
    }

    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    pub fn scale_c(&self, s: Complex64) -> Self {
        self.map(|z| z * s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::grid::Scheme;

    fn spec() -> GridSpec {
        GridSpec::new(2, 8, Scheme::Spectral).unwrap()
    }

    #[test]
    fn comps_per_rank() {
        assert_eq!(Rank::Scalar.comps(4), 1);
        assert_eq!(Rank::Endo.comps(4), 16);
        assert_eq!(Rank::Form(2).comps(4), 6);
        assert_eq!(Rank::Form(3).comps(4), 4);
        assert_eq!(Rank::Form(2).comps(2), 1);
        assert_eq!(Rank::Riemann.comps(2), 16);
    }

    #[test]
    fn from_fn_and_accessors() {
        let f = GridField::<f64>::from_fn(spec(), Rank::Vector, |_, x, out| {
            out[0] = x[0].sin();
            out[1] = x[1].cos();
        });
        let node = spec().flat_index(&[2, 3]);
        let x = spec().coords(node);
        assert_eq!(f.comp(node, 0), x[0].sin());
        assert_eq!(f.comp(node, 1), x[1].cos());
    }

    #[test]
    fn rank_mismatch_rejected() {
        let a = GridField::<f64>::zeros(spec(), Rank::Scalar);
        let b = GridField::<f64>::zeros(spec(), Rank::Vector);
        assert!(a.add(&b).is_err());
    }

    #[test]
    fn symmetrize_and_asymmetry() {
        let mut f = GridField::<f64>::zeros(spec(), Rank::Cov2);
        f.set_comp(0, 1, 1.0);
        assert!(f.asymmetry_two_tensor() > 0.9);
        f.symmetrize_two_tensor();
        assert_eq!(f.asymmetry_two_tensor(), 0.0);
        assert_eq!(f.comp(0, 2), 0.5);
    }
}
