//! Reference computations shared by the integration tests. Nothing here
//! calls into the crate's numerical kernels.
#![allow(dead_code)]

use ndarray::Array2;
use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

pub fn random_matrix(n: usize, seed: u64) -> Array2<C> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_fn((n, n), |_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

/// Random unitary from Gram–Schmidt on a random matrix.
pub fn random_unitary(n: usize, seed: u64) -> Array2<C> {
    let mut q = random_matrix(n, seed);
    for j in 0..n {
        for k in 0..j {
            let p: C = (0..n).map(|i| q[[i, k]].conj() * q[[i, j]]).sum();
            for i in 0..n {
                let v = q[[i, k]];
                q[[i, j]] -= p * v;
            }
        }
        let nrm = (0..n).map(|i| q[[i, j]].norm_sqr()).sum::<f64>().sqrt();
        for i in 0..n {
            q[[i, j]] /= nrm;
        }
    }
    q
}

pub fn adjoint(m: &Array2<C>) -> Array2<C> {
    m.t().mapv(|v| v.conj())
}

/// LU with partial pivoting; returns (det, inverse).
fn lu_det_inverse(a: &Array2<C>) -> (C, Array2<C>) {
    let n = a.nrows();
    let mut m = a.clone();
    let mut inv = Array2::from_diag_elem(n, c(1.0, 0.0));
    let mut det = c(1.0, 0.0);
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| m[[i, k]].norm().total_cmp(&m[[j, k]].norm())).unwrap();
        if p != k {
            for j in 0..n {
                m.swap([k, j], [p, j]);
                inv.swap([k, j], [p, j]);
            }
            det = -det;
        }
        let piv = m[[k, k]];
        det *= piv;
        if piv.norm() == 0.0 {
            return (det, inv);
        }
        for j in 0..n {
            m[[k, j]] /= piv;
            inv[[k, j]] /= piv;
        }
        for i in 0..n {
            if i != k {
                let f = m[[i, k]];
                if f.norm() != 0.0 {
                    for j in 0..n {
                        let (mk, ik) = (m[[k, j]], inv[[k, j]]);
                        m[[i, j]] -= f * mk;
                        inv[[i, j]] -= f * ik;
                    }
                }
            }
        }
    }
    (det, inv)
}

/// Roots of det(zI − A) by Aberth iteration, using the logarithmic
/// derivative p'/p = tr((zI − A)^{-1}) from an LU factorization.
pub fn charpoly_roots(a: &Array2<C>) -> Vec<C> {
    let n = a.nrows();
    let radius = a.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt().max(1.0);
    let center: C = (0..n).map(|i| a[[i, i]]).sum::<C>() / n as f64;
    let mut z: Vec<C> =
        (0..n).map(|k| center + C::from_polar(0.5 * radius, 2.0 * std::f64::consts::PI * (k as f64 + 0.25) / n as f64)).collect();
    for _ in 0..500 {
        let mut moved: f64 = 0.0;
        for k in 0..n {
            let mut shifted = a.mapv(|v| -v);
            for i in 0..n {
                shifted[[i, i]] += z[k];
            }
            let (det, inv) = lu_det_inverse(&shifted);
            if det.norm() == 0.0 {
                continue;
            }
            let ratio: C = (0..n).map(|i| inv[[i, i]]).sum();
            let repulsion: C = (0..n).filter(|&j| j != k).map(|j| 1.0 / (z[k] - z[j])).sum();
            let step = 1.0 / (ratio - repulsion);
            z[k] -= step;
            moved = moved.max(step.norm() / (1.0 + z[k].norm()));
        }
        if moved < 1e-15 {
            break;
        }
    }
    z
}

/// Symmetric Hausdorff distance between two finite point sets.
pub fn hausdorff(a: &[C], b: &[C]) -> f64 {
    let one_way = |x: &[C], y: &[C]| x.iter().map(|p| y.iter().map(|q| (p - q).norm()).fold(f64::INFINITY, f64::min)).fold(0.0, f64::max);
    one_way(a, b).max(one_way(b, a))
}

/// Largest singular value by one-sided Jacobi rotations.
pub fn jacobi_largest_singular_value(m: &Array2<C>) -> f64 {
    let (rows, cols) = m.dim();
    let mut u = m.clone();
    for _ in 0..60 {
        let mut off: f64 = 0.0;
        for i in 0..cols {
            for j in i + 1..cols {
                let alpha: f64 = (0..rows).map(|r| u[[r, i]].norm_sqr()).sum();
                let beta: f64 = (0..rows).map(|r| u[[r, j]].norm_sqr()).sum();
                let gamma: C = (0..rows).map(|r| u[[r, i]].conj() * u[[r, j]]).sum();
                let g = gamma.norm();
                if g <= 1e-15 * (alpha * beta).sqrt() || g == 0.0 {
                    continue;
                }
                off = off.max(g / (alpha * beta).sqrt());
                let phase = gamma / g;
                for r in 0..rows {
                    u[[r, j]] *= phase.conj();
                }
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                for r in 0..rows {
                    let (ui, uj) = (u[[r, i]], u[[r, j]]);
                    u[[r, i]] = cs * ui - sn * uj;
                    u[[r, j]] = sn * ui + cs * uj;
                }
            }
        }
        if off < 1e-14 {
            break;
        }
    }
    (0..cols).map(|j| (0..rows).map(|r| u[[r, j]].norm_sqr()).sum::<f64>().sqrt()).fold(0.0, f64::max)
}

/// ⟨h_j | x² | h_k⟩ from the ladder relation x = (a + a†)/√2.
pub fn x_squared_element(j: usize, k: usize) -> f64 {
    let (j, k) = (j as f64, k as f64);
    if j == k {
        j + 0.5
    } else if j == k + 2.0 {
        0.5 * (j * (j - 1.0)).sqrt()
    } else if k == j + 2.0 {
        0.5 * (k * (k - 1.0)).sqrt()
    } else {
        0.0
    }
}

/// Hermite functions by the textbook recurrence on polynomials times the
/// Gaussian; fine for the low degrees used here.
pub fn hermite_function_reference(k: usize, x: f64) -> f64 {
    let mut h = vec![1.0, 2.0 * x];
    for m in 1..k {
        let next = 2.0 * x * h[m] - 2.0 * m as f64 * h[m - 1];
        h.push(next);
    }
    let fact: f64 = (1..=k).map(|v| v as f64).product();
    h[k] * (-0.5 * x * x).exp() / (2f64.powi(k as i32) * fact * std::f64::consts::PI.sqrt()).sqrt()
}

/// Composite Simpson rule on [a, b] with `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Matrix of −i d/dx on the periodic grid of N points with frequencies
/// (l − N/2)π/R, built from an explicit DFT.
pub fn fourier_derivative(n: usize, radius: f64) -> Array2<C> {
    let dxi = std::f64::consts::PI / radius;
    let dx = 2.0 * radius / n as f64;
    let xs: Vec<f64> = (0..n).map(|j| -radius + j as f64 * dx).collect();
    let freqs: Vec<f64> = (0..n).map(|l| (l as f64 - n as f64 / 2.0) * dxi).collect();
    // F[l, k] = e^{−iξ_l x_k}/√N, unitary
    let f = Array2::from_shape_fn((n, n), |(l, k)| C::from_polar(1.0 / (n as f64).sqrt(), -freqs[l] * xs[k]));
    let d = Array2::from_diag(&ndarray::Array1::from(freqs.iter().map(|v| c(*v, 0.0)).collect::<Vec<_>>()));
    adjoint(&f).dot(&d.dot(&f))
}

pub fn max_abs_diff(a: &Array2<C>, b: &Array2<C>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Smooth step built directly from exp(−1/t), independent of the crate's
/// cutoff helpers: 0 for t ≤ 0, 1 for t ≥ 1.
fn step(t: f64) -> f64 {
    let g = |s: f64| if s <= 0.0 { 0.0 } else { (-1.0 / s).exp() };
    g(t) / (g(t) + g(1.0 - t))
}

/// ψ: 0 below 1/4, 1 above 1/2.
pub fn psi_ref(t: f64) -> f64 {
    step(4.0 * t - 1.0)
}

/// χ: 1 below 1/2, 0 above 1.
pub fn chi_ref(t: f64) -> f64 {
    1.0 - step(2.0 * t - 1.0)
}
