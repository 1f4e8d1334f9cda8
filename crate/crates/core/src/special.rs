//! Hermite functions, Gauss–Hermite rules and generalized Laguerre polynomials.
//!
//! Everything is evaluated on function values with running rescaling, so the
//! Gaussian factor and the polynomial growth never overflow or underflow
//! separately for large degrees or large arguments.

use std::f64::consts::PI;

const RESCALE: f64 = 1e150;

/// Values of the L²-normalized Hermite functions ĥ_0 .. ĥ_{count-1} at `t`.
///
/// ĥ_k(t) = H_k(t) e^{-t²/2} / sqrt(2^k k! sqrt(π)), computed with the
/// three-term recurrence on normalized values.
pub fn hermite_functions(count: usize, t: f64) -> Vec<f64> {
    let mut out = vec![0.0; count];
    if count == 0 {
        return out;
    }
    let mut log_scale = -0.5 * t * t;
    let mut prev = 0.0_f64;
    let mut cur = PI.powf(-0.25);
    out[0] = cur * log_scale.exp();
    for k in 1..count {
        let kf = k as f64;
        let next = (2.0 / kf).sqrt() * t * cur - ((kf - 1.0) / kf).sqrt() * prev;
        prev = cur;
        cur = next;
        if cur.abs() > RESCALE {
            cur /= RESCALE;
            prev /= RESCALE;
            log_scale += RESCALE.ln();
        }
        out[k] = cur * log_scale.exp();
    }
    out
}

/// Derivatives ĥ_k'(t) from the ladder identity
/// ĥ_k' = sqrt(k/2) ĥ_{k-1} - sqrt((k+1)/2) ĥ_{k+1}.
///
/// `values` must hold ĥ_0 .. ĥ_{count} (one more entry than requested).
pub fn hermite_derivatives(values: &[f64], count: usize) -> Vec<f64> {
    assert!(values.len() > count, "need ĥ up to degree {count}");
    (0..count)
        .map(|k| {
            let kf = k as f64;
            let lower = if k > 0 { (kf / 2.0).sqrt() * values[k - 1] } else { 0.0 };
            lower - ((kf + 1.0) / 2.0).sqrt() * values[k + 1]
        })
        .collect()
}

/// A one-dimensional quadrature rule for ∫ f(x) dx (no weight function).
#[derive(Debug, Clone, PartialEq)]
pub struct Rule1d {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule1d {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Rescale the rule from ∫ f(t) dt to ∫ f(x) dx with x = scale·t.
    pub fn scaled(mut self, scale: f64) -> Self {
        for x in &mut self.nodes {
            *x *= scale;
        }
        for w in &mut self.weights {
            *w *= scale;
        }
        self
    }
}

/// Scaled orthonormal Hermite polynomial p_n(t) and p_n'(t) for Newton steps.
/// Returns (p_n, p_n', log of the common scale factor removed).
fn hermite_poly_with_derivative(n: usize, t: f64) -> (f64, f64, f64) {
    let mut log_scale = 0.0;
    let mut prev = 0.0_f64;
    let mut cur = PI.powf(-0.25);
    for k in 1..=n {
        let kf = k as f64;
        let next = (2.0 / kf).sqrt() * t * cur - ((kf - 1.0) / kf).sqrt() * prev;
        prev = cur;
        cur = next;
        if cur.abs() > RESCALE {
            cur /= RESCALE;
            prev /= RESCALE;
            log_scale += RESCALE.ln();
        }
    }
    // p_n' = sqrt(2n) p_{n-1}
    let deriv = (2.0 * n as f64).sqrt() * prev;
    (cur, deriv, log_scale)
}

/// Gauss–Hermite rule with `n` nodes, returned in the unweighted form
/// ∫ f(t) dt ≈ Σ w̃_i f(t_i) where w̃_i = w_i e^{t_i²}.
///
/// Nodes are the eigenvalues of the Jacobi matrix, polished by Newton steps
/// on the orthonormal recurrence; weights are evaluated in log space so the
/// outer nodes keep full relative precision.
pub fn gauss_hermite(n: usize) -> Rule1d {
    assert!(n >= 1);
    let diag = vec![0.0; n];
    let off: Vec<f64> = (1..n).map(|k| (k as f64 / 2.0).sqrt()).collect();
    let mut nodes = symmetric_tridiagonal_eigenvalues(diag, off);
    nodes.sort_by(f64::total_cmp);
    // exact symmetry about the origin
    for i in 0..n / 2 {
        let m = 0.5 * (nodes[n - 1 - i] - nodes[i]);
        nodes[i] = -m;
        nodes[n - 1 - i] = m;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut z = nodes[i];
        for _ in 0..3 {
            let (p, dp, _) = hermite_poly_with_derivative(n, z);
            if dp == 0.0 {
                break;
            }
            z -= p / dp;
        }
        let (_, dp, ls) = hermite_poly_with_derivative(n, z);
        // Gauss weight w = 2 / p_n'(t)^2 for the orthonormal family.
        let log_w = 2f64.ln() - 2.0 * (dp.abs().ln() + ls) + z * z;
        nodes[i] = z;
        weights[i] = log_w.exp();
    }
    Rule1d { nodes, weights }
}

/// Eigenvalues of a real symmetric tridiagonal matrix by implicit QL.
pub(crate) fn symmetric_tridiagonal_eigenvalues(mut d: Vec<f64>, off: Vec<f64>) -> Vec<f64> {
    let n = d.len();
    let mut e = off;
    e.push(0.0);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            assert!(iter < 60 * n.max(1), "tridiagonal QL failed to converge");
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut early = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    early = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if early {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    d
}

/// Gauss–Legendre rule on [a, b].
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> Rule1d {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    let nf = n as f64;
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut pp = 1.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 1..=n {
                let jf = j as f64;
                let p3 = p2;
                p2 = p1;
                p1 = ((2.0 * jf - 1.0) * z * p2 - (jf - 1.0) * p3) / jf;
            }
            pp = nf * (z * p1 - p2) / (z * z - 1.0);
            let dz = p1 / pp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        nodes[i] = mid - half * z;
        nodes[n - 1 - i] = mid + half * z;
        let w = 2.0 * half / ((1.0 - z * z) * pp * pp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    Rule1d { nodes, weights }
}

/// Generalized Laguerre polynomials L_0^α .. L_n^α at `x`.
pub fn laguerre(n: usize, alpha: f64, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(1.0);
    if n >= 1 {
        out.push(1.0 + alpha - x);
    }
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + alpha - x) * out[k] - (kf + alpha) * out[k - 1]) / (kf + 1.0);
        out.push(next);
    }
    out
}

/// ln Γ(k + 1) for integer k.
pub fn ln_factorial(k: usize) -> f64 {
    (1..=k).map(|j| (j as f64).ln()).sum()
}
