//! Dense complex eigensolver: Householder reduction to Hessenberg form,
//! implicitly shifted single-shift QR with deflation, and eigenvectors by
//! back-substitution on the Schur form.

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::operator::OperatorMatrix;
use crate::special::symmetric_tridiagonal_eigenvalues;

const EXCEPTIONAL_EVERY: usize = 30;
const ITERATIONS_PER_DIM: usize = 40;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub eigenvalues: Vec<Complex64>,
    /// ‖Mv − λv‖₂/‖v‖₂ for the recovered eigenvector, or the backward error
    /// bound of the Schur form when vectors were not computed.
    pub residuals: Vec<f64>,
    pub converged: Vec<bool>,
    pub basis_size: usize,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn max_abs_im(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0, |m, z| m.max(z.im.abs()))
    }
}

/// Ascending real part, ties by imaginary part.
pub fn spectral_order(a: &Complex64, b: &Complex64) -> std::cmp::Ordering {
    a.re.total_cmp(&b.re).then_with(|| a.im.total_cmp(&b.im))
}

/// Full spectrum with eigenvector residuals.
pub fn eigenvalues(m: &OperatorMatrix) -> Result<Spectrum> {
    eigen_dense(&m.entries, true)
}

/// Eigenvalues only; residuals are the Schur backward error bound.
pub fn eigenvalues_fast(m: &OperatorMatrix) -> Result<Spectrum> {
    eigen_dense(&m.entries, false)
}

pub fn eigen_dense(a: &Array2<Complex64>, vectors: bool) -> Result<Spectrum> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(invalid("eigenvalues need a square matrix"));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(invalid("matrix has non-finite entries"));
    }
    if n == 0 {
        return Ok(Spectrum { eigenvalues: vec![], residuals: vec![], converged: vec![], basis_size: 0 });
    }
    let norm = frobenius(a);
    let (mut h, q) = hessenberg(a, vectors);
    let mut z = q;
    schur_qr(&mut h, z.as_mut(), vectors)?;
    let lambdas: Vec<Complex64> = (0..n).map(|i| h[[i, i]]).collect();
    let (values, residuals) = if vectors {
        let z = z.expect("accumulated");
        let res: Vec<(Complex64, f64)> = (0..n)
            .into_par_iter()
            .map(|i| {
                let y = schur_vector(&h, i, norm);
                let v = z.dot(&ndarray::Array1::from(y));
                let av = a.dot(&v);
                let r = av.iter().zip(v.iter()).map(|(p, q)| (p - lambdas[i] * q).norm_sqr()).sum::<f64>().sqrt();
                let vn = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
                (lambdas[i], r / vn)
            })
            .collect();
        (res.iter().map(|p| p.0).collect::<Vec<_>>(), res.iter().map(|p| p.1).collect::<Vec<_>>())
    } else {
        let bound = f64::EPSILON * norm * n as f64;
        (lambdas.clone(), vec![bound; n])
    };
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| spectral_order(&values[i], &values[j]));
    let tol = 1e-6 * norm.max(1.0);
    Ok(Spectrum {
        eigenvalues: idx.iter().map(|&i| values[i]).collect(),
        residuals: idx.iter().map(|&i| residuals[i]).collect(),
        converged: idx.iter().map(|&i| residuals[i] <= tol).collect(),
        basis_size: n,
    })
}

fn frobenius(a: &Array2<Complex64>) -> f64 {
    a.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// Householder reduction A = Q H Q*. Returns H and (optionally) Q.
pub fn hessenberg(a: &Array2<Complex64>, accumulate: bool) -> (Array2<Complex64>, Option<Array2<Complex64>>) {
    let n = a.nrows();
    let mut h = a.clone();
    let mut q = accumulate.then(|| Array2::from_diag_elem(n, Complex64::new(1.0, 0.0)));
    for k in 0..n.saturating_sub(2) {
        let mut v: Vec<Complex64> = (k + 1..n).map(|i| h[[i, k]]).collect();
        let alpha = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if alpha == 0.0 {
            continue;
        }
        let phase = if v[0].norm() == 0.0 { Complex64::new(1.0, 0.0) } else { v[0] / v[0].norm() };
        v[0] += phase * alpha;
        let vn2: f64 = v.iter().map(|c| c.norm_sqr()).sum();
        if vn2 == 0.0 {
            continue;
        }
        let beta = 2.0 / vn2;
        // left: H ← (I − β v v*) H on rows k+1..n
        for j in k..n {
            let s: Complex64 = v.iter().enumerate().map(|(i, vi)| vi.conj() * h[[k + 1 + i, j]]).sum();
            let s = s * beta;
            for (i, vi) in v.iter().enumerate() {
                h[[k + 1 + i, j]] -= vi * s;
            }
        }
        // right: H ← H (I − β v v*)
        for i in 0..n {
            let s: Complex64 = v.iter().enumerate().map(|(j, vj)| h[[i, k + 1 + j]] * vj).sum();
            let s = s * beta;
            for (j, vj) in v.iter().enumerate() {
                h[[i, k + 1 + j]] -= s * vj.conj();
            }
        }
        if let Some(q) = q.as_mut() {
            for i in 0..n {
                let s: Complex64 = v.iter().enumerate().map(|(j, vj)| q[[i, k + 1 + j]] * vj).sum();
                let s = s * beta;
                for (j, vj) in v.iter().enumerate() {
                    q[[i, k + 1 + j]] -= s * vj.conj();
                }
            }
        }
        for i in k + 2..n {
            h[[i, k]] = Complex64::new(0.0, 0.0);
        }
    }
    (h, q)
}

/// Rotation G = [[c, s], [−s̄, c]] with G (x, y)ᵀ = (r, 0)ᵀ.
fn givens(x: Complex64, y: Complex64) -> (f64, Complex64) {
    let ny = y.norm();
    if ny == 0.0 {
        return (1.0, Complex64::new(0.0, 0.0));
    }
    let nx = x.norm();
    if nx == 0.0 {
        return (0.0, y.conj() / ny);
    }
    let r = nx.hypot(ny);
    (nx / r, (x / nx) * y.conj() / r)
}

struct Rot {
    c: f64,
    s: Complex64,
}

impl Rot {
    fn rows(&self, h: &mut Array2<Complex64>, a: usize, cols: std::ops::Range<usize>) {
        for j in cols {
            let (u, v) = (h[[a, j]], h[[a + 1, j]]);
            h[[a, j]] = self.c * u + self.s * v;
            h[[a + 1, j]] = -self.s.conj() * u + self.c * v;
        }
    }

    fn cols(&self, h: &mut Array2<Complex64>, a: usize, rows: std::ops::Range<usize>) {
        for i in rows {
            let (u, v) = (h[[i, a]], h[[i, a + 1]]);
            h[[i, a]] = u * self.c + v * self.s.conj();
            h[[i, a + 1]] = -u * self.s + v * self.c;
        }
    }
}

fn wilkinson(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Complex64 {
    let half = 0.5 * (a - d);
    let disc = (half * half + b * c).sqrt();
    let mid = 0.5 * (a + d);
    let l1 = mid + disc;
    let l2 = mid - disc;
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// Reduce the Hessenberg matrix to upper-triangular Schur form in place.
/// With `full`, rotations act on the whole matrix and are accumulated in `z`.
fn schur_qr(h: &mut Array2<Complex64>, mut z: Option<&mut Array2<Complex64>>, full: bool) -> Result<()> {
    let n = h.nrows();
    if n <= 1 {
        return Ok(());
    }
    let hnorm = frobenius(h);
    let small = f64::MIN_POSITIVE.max(f64::EPSILON * hnorm * 1e-3);
    let cap = ITERATIONS_PER_DIM * n;
    let mut total = 0;
    let mut stalled = 0;
    let mut hi = n - 1;
    while hi > 0 {
        // locate the active block [lo, hi]
        let mut lo = hi;
        while lo > 0 {
            let sub = h[[lo, lo - 1]].norm();
            let diag = h[[lo - 1, lo - 1]].norm() + h[[lo, lo]].norm();
            if sub <= f64::EPSILON * diag || sub <= small {
                h[[lo, lo - 1]] = Complex64::new(0.0, 0.0);
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            hi -= 1;
            stalled = 0;
            continue;
        }
        total += 1;
        stalled += 1;
        if total > cap {
            return Err(Error::NoConvergence { lo, hi, iterations: total });
        }
        let shift = if stalled % EXCEPTIONAL_EVERY == 0 {
            h[[hi, hi]] + 0.75 * h[[hi, hi - 1]].norm()
        } else {
            wilkinson(h[[hi - 1, hi - 1]], h[[hi - 1, hi]], h[[hi, hi - 1]], h[[hi, hi]])
        };
        let col_end = if full { n } else { hi + 1 };
        let row_start = if full { 0 } else { lo };
        for k in lo..hi {
            let (x, y) = if k == lo {
                (h[[lo, lo]] - shift, h[[lo + 1, lo]])
            } else {
                (h[[k, k - 1]], h[[k + 1, k - 1]])
            };
            let (c, s) = givens(x, y);
            let rot = Rot { c, s };
            let first_col = if k == lo { lo } else { k - 1 };
            rot.rows(h, k, first_col..col_end);
            rot.cols(h, k, row_start..(k + 3).min(hi + 1));
            if let Some(z) = z.as_deref_mut() {
                rot.cols(z, k, 0..n);
            }
            if k > lo {
                h[[k + 1, k - 1]] = Complex64::new(0.0, 0.0);
            }
        }
    }
    Ok(())
}

/// Eigenvector of the upper-triangular T for eigenvalue T[i, i].
fn schur_vector(t: &Array2<Complex64>, i: usize, norm: f64) -> Vec<Complex64> {
    let n = t.nrows();
    let lambda = t[[i, i]];
    let floor = f64::EPSILON * norm.max(f64::MIN_POSITIVE);
    let mut y = vec![Complex64::new(0.0, 0.0); n];
    y[i] = Complex64::new(1.0, 0.0);
    for j in (0..i).rev() {
        let s: Complex64 = (j + 1..=i).map(|k| t[[j, k]] * y[k]).sum();
        let mut d = t[[j, j]] - lambda;
        if d.norm() < floor {
            d = Complex64::new(floor, 0.0);
        }
        y[j] = -s / d;
        let big = y.iter().take(i + 1).fold(0.0_f64, |m, v| m.max(v.norm()));
        if big > 1e100 {
            for v in y.iter_mut() {
                *v /= big;
            }
        }
    }
    y
}

/// Eigenvalues of a Hermitian matrix in ascending order.
pub fn hermitian_eigenvalues(a: &Array2<Complex64>) -> Vec<f64> {
    let n = a.nrows();
    if n == 0 {
        return vec![];
    }
    let (h, _) = hessenberg(a, false);
    let d: Vec<f64> = (0..n).map(|i| h[[i, i]].re).collect();
    let e: Vec<f64> = (1..n).map(|i| 0.5 * (h[[i, i - 1]].norm() + h[[i - 1, i]].norm())).collect();
    let mut vals = symmetric_tridiagonal_eigenvalues(d, e);
    vals.sort_by(f64::total_cmp);
    vals
}

/// Largest singular value of a dense matrix, through the eigenvalues of M*M.
pub fn largest_singular_value(m: &Array2<Complex64>) -> f64 {
    let g = m.t().mapv(|v| v.conj()).dot(m);
    hermitian_eigenvalues(&g).last().copied().unwrap_or(0.0).max(0.0).sqrt()
}

/// One tracked eigenvalue across basis sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackedEigenvalue {
    pub index: usize,
    /// Matched value at each size, smallest basis first.
    pub values: Vec<Complex64>,
    /// |λ_{s+1} − λ_s| / max(1, |λ_{s+1}|) for successive sizes.
    pub changes: Vec<f64>,
    pub converged: bool,
    pub ambiguous: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceStudy {
    pub sizes: Vec<usize>,
    pub spectra: Vec<Spectrum>,
    pub tracked: Vec<TrackedEigenvalue>,
    pub tolerance: f64,
}

impl ConvergenceStudy {
    /// Converged, unambiguous eigenvalues at the largest size.
    pub fn gated(&self) -> Vec<Complex64> {
        self.tracked.iter().filter(|t| t.converged && !t.ambiguous).map(|t| *t.values.last().unwrap()).collect()
    }
}

pub const DEFAULT_GATE: f64 = 1e-4;

/// Solve at every basis size and track the lowest eigenvalues of the largest
/// basis backwards through the smaller ones by one-to-one nearest matching.
pub fn convergence_study<F>(sizes: &[usize], tolerance: f64, build: F) -> Result<ConvergenceStudy>
where
    F: Fn(usize) -> Result<OperatorMatrix> + Sync,
{
    if sizes.len() < 2 {
        return Err(invalid("a convergence study needs at least two basis sizes"));
    }
    if sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("basis sizes must be strictly increasing"));
    }
    let spectra: Vec<Spectrum> = sizes
        .par_iter()
        .map(|&s| {
            let m = build(s)?;
            eigenvalues_fast(&m)
        })
        .collect::<Result<_>>()?;
    Ok(track(sizes, spectra, tolerance))
}

pub fn track(sizes: &[usize], spectra: Vec<Spectrum>, tolerance: f64) -> ConvergenceStudy {
    let min_dim = spectra.iter().map(Spectrum::len).min().unwrap_or(0);
    let count = min_dim / 2;
    let last = spectra.len() - 1;
    let reference: Vec<Complex64> = spectra[last].eigenvalues.iter().take(count).copied().collect();
    // matches[s][t] = matched value at size s for tracked index t
    let mut matches: Vec<Vec<Complex64>> = vec![Vec::new(); spectra.len()];
    let mut ambiguous = vec![false; count];
    matches[last] = reference.clone();
    for s in (0..last).rev() {
        let targets = &matches[s + 1];
        let pool = &spectra[s].eigenvalues;
        let (assigned, amb) = greedy_match(targets, pool, tolerance);
        matches[s] = assigned;
        if s + 1 == last {
            for (a, b) in ambiguous.iter_mut().zip(amb) {
                *a |= b;
            }
        }
    }
    let tracked = (0..count)
        .map(|t| {
            let values: Vec<Complex64> = matches.iter().map(|m| m[t]).collect();
            let changes: Vec<f64> =
                values.windows(2).map(|w| (w[1] - w[0]).norm() / w[1].norm().max(1.0)).collect();
            let converged = changes.last().is_some_and(|c| *c < tolerance);
            TrackedEigenvalue { index: t, values, changes, converged, ambiguous: ambiguous[t] }
        })
        .collect();
    ConvergenceStudy { sizes: sizes.to_vec(), spectra, tracked, tolerance }
}

/// One-to-one nearest matching of `targets` into `pool`, closest pairs first.
/// A target is ambiguous when a second, distinct pool value also lies
/// within the tolerance.
fn greedy_match(targets: &[Complex64], pool: &[Complex64], tolerance: f64) -> (Vec<Complex64>, Vec<bool>) {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (t, z) in targets.iter().enumerate() {
        for (p, w) in pool.iter().enumerate() {
            pairs.push(((z - w).norm(), t, p));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut out = vec![Complex64::new(f64::NAN, f64::NAN); targets.len()];
    let mut done_t = vec![false; targets.len()];
    let mut used_p = vec![false; pool.len()];
    for &(_, t, p) in &pairs {
        if !done_t[t] && !used_p[p] {
            out[t] = pool[p];
            done_t[t] = true;
            used_p[p] = true;
        }
    }
    let amb = targets
        .iter()
        .zip(&out)
        .map(|(z, m)| {
            let scale = z.norm().max(1.0) * tolerance;
            pool.iter().any(|w| (z - w).norm() <= scale && (w - m).norm() > 0.1 * scale)
                && (z - m).norm() <= scale
        })
        .collect();
    (out, amb)
}
