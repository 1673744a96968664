//! Small dense matrix kernels for pointwise tensor algebra.
//!
//! Everything here operates on row-major `&[f64]` blocks of size `d*d`
//! with `d <= 4`. These run once per grid node inside hot loops, which is
//! why they work on stack buffers instead of going through a matrix crate.

use num_complex::Complex64;

pub const DMAX: usize = 4;

/// `out = a * b`.
pub fn mat_mul(d: usize, a: &[f64], b: &[f64], out: &mut [f64]) {
    for i in 0..d {
        for j in 0..d {
            let mut s = 0.0;
            for k in 0..d {
                s += a[i * d + k] * b[k * d + j];
            }
            out[i * d + j] = s;
        }
    }
}

/// `out = a^T`.
pub fn mat_transpose(d: usize, a: &[f64], out: &mut [f64]) {
    for i in 0..d {
        for j in 0..d {
            out[i * d + j] = a[j * d + i];
        }
    }
}

pub fn mat_identity(d: usize, out: &mut [f64]) {
    out[..d * d].fill(0.0);
    for i in 0..d {
        out[i * d + i] = 1.0;
    }
}

pub fn mat_trace(d: usize, a: &[f64]) -> f64 {
    (0..d).map(|i| a[i * d + i]).sum()
}

/// `out = A v` for a column vector.
pub fn mat_vec(d: usize, a: &[f64], v: &[f64], out: &mut [f64]) {
    for i in 0..d {
        let mut s = 0.0;
        for j in 0..d {
            s += a[i * d + j] * v[j];
        }
        out[i] = s;
    }
}

pub fn det(d: usize, a: &[f64]) -> f64 {
    match d {
        1 => a[0],
        2 => a[0] * a[3] - a[1] * a[2],
        3 => {
            a[0] * (a[4] * a[8] - a[5] * a[7]) - a[1] * (a[3] * a[8] - a[5] * a[6])
                + a[2] * (a[3] * a[7] - a[4] * a[6])
        }
        4 => {
            // expansion along the first row with 3x3 cofactors
            let mut s = 0.0;
            let mut minor = [0.0f64; 9];
            for col in 0..4 {
                let mut m = 0;
                for i in 1..4 {
                    for j in 0..4 {
                        if j != col {
                            minor[m] = a[i * 4 + j];
                            m += 1;
                        }
                    }
                }
                let sign = if col % 2 == 0 { 1.0 } else { -1.0 };
                s += sign * a[col] * det(3, &minor);
            }
            s
        }
        _ => unreachable!("d <= 4"),
    }
}

/// Gaussian elimination with partial pivoting. Returns false when singular.
pub fn inverse(d: usize, a: &[f64], out: &mut [f64]) -> bool {
    let mut aug = [0.0f64; DMAX * 2 * DMAX];
    let w = 2 * d;
    for i in 0..d {
        for j in 0..d {
            aug[i * w + j] = a[i * d + j];
        }
        aug[i * w + d + i] = 1.0;
    }
    for col in 0..d {
        let mut piv = col;
        let mut best = aug[col * w + col].abs();
        for r in col + 1..d {
            let v = aug[r * w + col].abs();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if best == 0.0 {
            return false;
        }
        if piv != col {
            for j in 0..w {
                aug.swap(col * w + j, piv * w + j);
            }
        }
        let p = aug[col * w + col];
        for j in 0..w {
            aug[col * w + j] /= p;
        }
        for r in 0..d {
            if r != col {
                let f = aug[r * w + col];
                if f != 0.0 {
                    for j in 0..w {
                        aug[r * w + j] -= f * aug[col * w + j];
                    }
                }
            }
        }
    }
    for i in 0..d {
        for j in 0..d {
            out[i * d + j] = aug[i * w + d + j];
        }
    }
    true
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
///
/// Writes eigenvalues into `eigvals` and the orthonormal eigenvectors into
/// the **columns** of `eigvecs`, so `a = V diag(λ) V^T`.
pub fn jacobi_eigen(d: usize, a: &[f64], eigvals: &mut [f64], eigvecs: &mut [f64]) {
    let mut m = [0.0f64; DMAX * DMAX];
    m[..d * d].copy_from_slice(&a[..d * d]);
    mat_identity(d, eigvecs);

    for _sweep in 0..64 {
        let mut off = 0.0;
        for i in 0..d {
            for j in i + 1..d {
                off += m[i * d + j] * m[i * d + j];
            }
        }
        if off < 1e-30 {
            break;
        }
        for p in 0..d {
            for q in p + 1..d {
                let apq = m[p * d + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let app = m[p * d + p];
                let aqq = m[q * d + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..d {
                    let mkp = m[k * d + p];
                    let mkq = m[k * d + q];
                    m[k * d + p] = c * mkp - s * mkq;
                    m[k * d + q] = s * mkp + c * mkq;
                }
                for k in 0..d {
                    let mpk = m[p * d + k];
                    let mqk = m[q * d + k];
                    m[p * d + k] = c * mpk - s * mqk;
                    m[q * d + k] = s * mpk + c * mqk;
                }
                for k in 0..d {
                    let vkp = eigvecs[k * d + p];
                    let vkq = eigvecs[k * d + q];
                    eigvecs[k * d + p] = c * vkp - s * vkq;
                    eigvecs[k * d + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    for i in 0..d {
        eigvals[i] = m[i * d + i];
    }
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue_sym(d: usize, a: &[f64]) -> f64 {
    let mut vals = [0.0f64; DMAX];
    let mut vecs = [0.0f64; DMAX * DMAX];
    jacobi_eigen(d, a, &mut vals, &mut vecs);
    vals[..d].iter().cloned().fold(f64::INFINITY, f64::min)
}

/// Applies a scalar function to a symmetric matrix through its spectrum:
/// `out = V diag(f(λ)) V^T`.
pub fn sym_func(d: usize, a: &[f64], f: impl Fn(f64) -> f64, out: &mut [f64]) {
    let mut vals = [0.0f64; DMAX];
    let mut vecs = [0.0f64; DMAX * DMAX];
    jacobi_eigen(d, a, &mut vals, &mut vecs);
    for i in 0..d {
        for j in 0..d {
            let mut s = 0.0;
            for k in 0..d {
                s += vecs[i * d + k] * f(vals[k]) * vecs[j * d + k];
            }
            out[i * d + j] = s;
        }
    }
}

/// Determinant of a small complex matrix (k <= 4), by cofactor recursion.
pub fn cdet(k: usize, a: &[Complex64]) -> Complex64 {
    match k {
        0 => Complex64::new(1.0, 0.0),
        1 => a[0],
        2 => a[0] * a[3] - a[1] * a[2],
        _ => {
            let mut s = Complex64::new(0.0, 0.0);
            let mut minor = [Complex64::new(0.0, 0.0); 9];
            for col in 0..k {
                let mut m = 0;
                for i in 1..k {
                    for j in 0..k {
                        if j != col {
                            minor[m] = a[i * k + j];
                            m += 1;
                        }
                    }
                }
                let sign = if col % 2 == 0 { 1.0 } else { -1.0 };
                s += sign * a[col] * cdet(k - 1, &minor);
            }
            s
        }
    }
}
