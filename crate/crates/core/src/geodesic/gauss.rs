//! Adaptive Gauss-Legendre quadrature for the per-node time integral.

use std::sync::OnceLock;

const NPOINTS: usize = 15;

/// Nodes and weights of the 15-point rule on [-1, 1], computed once by
/// Newton iteration on the Legendre polynomial.
fn rule() -> &'static ([f64; NPOINTS], [f64; NPOINTS]) {
    static RULE: OnceLock<([f64; NPOINTS], [f64; NPOINTS])> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = NPOINTS;
        let mut xs = [0.0f64; NPOINTS];
        let mut ws = [0.0f64; NPOINTS];
        for i in 0..n {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                // Legendre recurrence for P_n(x) and P_{n-1}(x)
                let mut p0 = 1.0;
                let mut p1 = x;
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            xs[i] = x;
            ws[i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        (xs, ws)
    })
}

fn panel(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let (xs, ws) = rule();
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut s = 0.0;
    for i in 0..NPOINTS {
        s += ws[i] * f(mid + half * xs[i]);
    }
    s * half
}

fn adaptive(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: usize, whole: f64) -> f64 {
    let mid = 0.5 * (a + b);
    let left = panel(f, a, mid);
    let right = panel(f, mid, b);
    let split = left + right;
    if (split - whole).abs() <= tol * split.abs().max(1.0) || depth >= 24 {
        return split;
    }
    adaptive(f, a, mid, 0.5 * tol, depth + 1, left)
        + adaptive(f, mid, b, 0.5 * tol, depth + 1, right)
}

/// `∫_a^b f`, refined until the panel estimate stabilizes to `tol`
/// (relative, floored at absolute `tol`). Handles `a > b` by orientation.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    sign * adaptive(&f, lo, hi, tol, 0, panel(&f, lo, hi))
}
