//! Uniform periodic grids on the flat torus `[0, 2π)^d`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Differentiation scheme used by [`crate::fields::derive`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Fourier differentiation; exact for band-limited fields.
    Spectral,
    /// 4th-order centered finite differences.
    Central4,
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Scheme::Spectral => write!(f, "spectral"),
            Scheme::Central4 => write!(f, "central4"),
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spectral" => Ok(Scheme::Spectral),
            "central4" => Ok(Scheme::Central4),
            other => Err(Error::InvalidConfig(format!("unknown scheme `{other}`"))),
        }
    }
}

/// A uniform periodic grid: `n` nodes per axis on `[0, 2π)^dim`.
///
/// Nodes sit at `x_k = 2π k / n`, `k ∈ {0, .., n-1}^dim`, flat node index
/// row-major in the multi-index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dim: usize,
    pub n: usize,
    pub scheme: Scheme,
}

impl GridSpec {
    pub fn new(dim: usize, n: usize, scheme: Scheme) -> Result<Self> {
        if dim != 2 && dim != 4 {
            return Err(Error::InvalidConfig(format!("dim must be 2 or 4, got {dim}")));
        }
        if n < 8 || n % 2 != 0 {
            return Err(Error::InvalidConfig(format!(
                "resolution must be even and >= 8, got {n}"
            )));
        }
        Ok(GridSpec { dim, n, scheme })
    }

    /// Total number of nodes `n^dim`.
    pub fn nodes(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    /// Grid spacing `2π / n`.
    pub fn spacing(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.n as f64
    }

    /// Quadrature weight of a single node, `(2π/n)^dim`.
    pub fn node_weight(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Multi-index of a flat node index.
    pub fn multi_index(&self, node: usize) -> [usize; 4] {
        let mut idx = [0usize; 4];
        let mut rem = node;
        for a in (0..self.dim).rev() {
            idx[a] = rem % self.n;
            rem /= self.n;
        }
        idx
    }

    /// Flat node index of a multi-index (entries taken mod n).
    pub fn flat_index(&self, idx: &[usize]) -> usize {
        let mut node = 0;
        for a in 0..self.dim {
            node = node * self.n + (idx[a] % self.n);
        }
        node
    }

    /// Coordinates of a node.
    pub fn coords(&self, node: usize) -> [f64; 4] {
        let idx = self.multi_index(node);
        let h = self.spacing();
        let mut x = [0.0f64; 4];
        for a in 0..self.dim {
            x[a] = h * idx[a] as f64;
        }
        x
    }

    /// Neighbor of `node` shifted by `step` grid cells along `axis`.
    pub fn shift(&self, node: usize, axis: usize, step: isize) -> usize {
        let mut idx = self.multi_index(node);
        let n = self.n as isize;
        let moved = ((idx[axis] as isize + step) % n + n) % n;
        idx[axis] = moved as usize;
        self.flat_index(&idx[..self.dim])
    }

    pub fn same_grid(&self, other: &GridSpec) -> Result<()> {
        if self.dim != other.dim || self.n != other.n {
            return Err(Error::GridMismatch(format!(
                "{}^{} vs {}^{}",
                self.n, self.dim, other.n, other.dim
            )));
        }
        Ok(())
    }
}
