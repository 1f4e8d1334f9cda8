//! Weyl quantization on a periodic one-dimensional grid, the two-term Moyal
//! composition check and sharp Gårding certificates.

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::symbol::{moyal_two_term, SymbolField};
use crate::eigen::{hermitian_eigenvalues, largest_singular_value};
use crate::error::{invalid, Error, Result};
use crate::special::hermite_functions;

/// Periodic grid x_j = −R + jΔx (Δx = 2R/N) with dual frequencies
/// ξ_l = (l − N/2)Δξ (Δξ = π/R).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeylGrid {
    pub n: usize,
    pub radius: f64,
}

impl WeylGrid {
    pub fn new(n: usize, radius: f64) -> Result<Self> {
        if n < 2 || n % 2 != 0 {
            return Err(invalid(format!("Weyl grid size must be even and at least 2, got {n}")));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(invalid(format!("Weyl grid radius must be positive, got {radius}")));
        }
        Ok(Self { n, radius })
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.radius / self.n as f64
    }

    pub fn dxi(&self) -> f64 {
        PI / self.radius
    }

    pub fn x(&self, j: usize) -> f64 {
        -self.radius + j as f64 * self.dx()
    }

    pub fn xi(&self, l: usize) -> f64 {
        (l as f64 - self.n as f64 / 2.0) * self.dxi()
    }

    /// Description stored with quantized matrices.
    pub fn convention(&self) -> String {
        format!(
            "periodic torus [-{r}, {r}) with N = {n}; midpoint symbol evaluation without wrap-around; dual grid (l - N/2) pi/{r}",
            r = self.radius,
            n = self.n
        )
    }

    /// Number of bulk Hermite states whose turning point stays inside the
    /// middle half of the domain (with unit margin).
    pub fn bulk_dimension(&self) -> usize {
        let t = self.radius / 2.0 - 1.0;
        if t <= 1.0 {
            return 1;
        }
        ((t * t - 1.0) / 2.0).floor() as usize + 1
    }
}

/// K[j,k] = (Δx/2π) Σ_l e^{i(x_j − x_k)ξ_l} a((x_j + x_k)/2, ξ_l) Δξ.
pub fn weyl_quantize_1d(sym: &SymbolField, grid: &WeylGrid) -> Result<Array2<Complex64>> {
    if sym.dim != 1 {
        return Err(invalid("grid Weyl quantization is one-dimensional"));
    }
    let n = grid.n;
    // symbol table over the 2N − 1 distinct midpoints
    let table: Vec<Vec<Complex64>> = (0..2 * n - 1)
        .into_par_iter()
        .map(|m| {
            let mid = -grid.radius + 0.5 * m as f64 * grid.dx();
            (0..n).map(|l| sym.eval(&[mid], &[grid.xi(l)])).collect()
        })
        .collect();
    // phase[d][l] = e^{2πi d (l − N/2)/N} / N, d taken mod N
    // only d <= N/2 is computed; the rest are conjugates so real symbols
    // quantize to exactly Hermitian matrices
    let mut phase: Vec<Vec<Complex64>> = (0..=n / 2)
        .map(|d| {
            (0..n)
                .map(|l| {
                    let ang = 2.0 * PI * (d as f64) * (l as f64 - n as f64 / 2.0) / n as f64;
                    Complex64::from_polar(1.0 / n as f64, ang)
                })
                .collect()
        })
        .collect();
    for d in n / 2 + 1..n {
        let conj: Vec<Complex64> = phase[n - d].iter().map(|p| p.conj()).collect();
        phase.push(conj);
    }
    let rows: Vec<Vec<Complex64>> = (0..n)
        .into_par_iter()
        .map(|j| {
            (0..n)
                .map(|k| {
                    let d = (j + n - k) % n;
                    let s = &table[j + k];
                    s.iter().zip(&phase[d]).map(|(a, p)| a * p).sum()
                })
                .collect()
        })
        .collect();
    Ok(Array2::from_shape_fn((n, n), |(j, k)| rows[j][k]))
}

/// Orthonormal columns spanning the first `k` Hermite functions sampled on
/// the grid (orthonormal in the plain ℓ² inner product).
pub fn bulk_subspace(grid: &WeylGrid, k: usize) -> Array2<Complex64> {
    let n = grid.n;
    let scale = grid.dx().sqrt();
    let mut q = Array2::<Complex64>::zeros((n, k));
    for j in 0..n {
        let h = hermite_functions(k, grid.x(j));
        for c in 0..k {
            q[[j, c]] = Complex64::new(h[c] * scale, 0.0);
        }
    }
    // modified Gram–Schmidt, twice for stability
    for _ in 0..2 {
        for c in 0..k {
            for p in 0..c {
                let proj: Complex64 = (0..n).map(|j| q[[j, p]].conj() * q[[j, c]]).sum();
                for j in 0..n {
                    let v = q[[j, p]];
                    q[[j, c]] -= proj * v;
                }
            }
            let nrm = (0..n).map(|j| q[[j, c]].norm_sqr()).sum::<f64>().sqrt();
            for j in 0..n {
                q[[j, c]] /= nrm;
            }
        }
    }
    q
}

/// Q* M Q.
pub fn compress(m: &Array2<Complex64>, q: &Array2<Complex64>) -> Array2<Complex64> {
    q.t().mapv(|v| v.conj()).dot(&m.dot(q))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MoyalDefects {
    /// ‖Op(a)Op(b) − Op(ab)‖ on the bulk subspace.
    pub d0: f64,
    /// ‖Op(a)Op(b) − Op(ab + {a,b}/(2i))‖ on the bulk subspace.
    pub d1: f64,
    /// d1 for the dilated symbols a(x/2, ξ/2), b(x/2, ξ/2).
    pub d1_half: f64,
    pub bulk_dimension: usize,
}

fn defects(a: &SymbolField, b: &SymbolField, grid: &WeylGrid, q: &Array2<Complex64>) -> Result<(f64, f64)> {
    let oa = weyl_quantize_1d(a, grid)?;
    let ob = weyl_quantize_1d(b, grid)?;
    let prod = oa.dot(&ob);
    let oab = weyl_quantize_1d(&a.mul(b), grid)?;
    let osharp = weyl_quantize_1d(&moyal_two_term(a, b), grid)?;
    let d0 = largest_singular_value(&compress(&(&prod - &oab), q));
    let d1 = largest_singular_value(&compress(&(&prod - &osharp), q));
    Ok((d0, d1))
}

pub fn moyal_leading_check(a: &SymbolField, b: &SymbolField, grid: &WeylGrid) -> Result<MoyalDefects> {
    let k = grid.bulk_dimension();
    let q = bulk_subspace(grid, k);
    let (d0, d1) = defects(a, b, grid, &q)?;
    let (_, d1_half) = defects(&a.dilate(2.0), &b.dilate(2.0), grid, &q)?;
    Ok(MoyalDefects { d0, d1, d1_half, bulk_dimension: k })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GardingCertificate {
    pub lambda_min: f64,
    pub c_default: f64,
    pub pass: bool,
    pub bulk_dimension: usize,
    pub grid_size: usize,
    pub hermitian_defect: f64,
}

pub const GARDING_C_DEFAULT: f64 = 1.0;

/// Lowest eigenvalue of the Hermitized quantization on the bulk subspace.
pub fn garding_certificate(sym: &SymbolField, grid: &WeylGrid) -> Result<GardingCertificate> {
    // nonnegativity on the sampled phase grid
    for j in 0..2 * grid.n - 1 {
        let x = -grid.radius + 0.5 * j as f64 * grid.dx();
        for l in 0..grid.n {
            let xi = grid.xi(l);
            let v = sym.eval(&[x], &[xi]);
            if v.re < -1e-12 * (1.0 + v.norm()) || v.im.abs() > 1e-12 * (1.0 + v.norm()) {
                return Err(Error::NegativeSymbol { value: v.re, x: vec![x], xi: vec![xi] });
            }
        }
    }
    let k = weyl_quantize_1d(sym, grid)?;
    let herm = hermitian_defect(&k);
    let h = (&k + &k.t().mapv(|v| v.conj())).mapv(|v| 0.5 * v);
    let bulk = grid.bulk_dimension();
    let q = bulk_subspace(grid, bulk);
    let c = compress(&h, &q);
    let lambda_min = hermitian_eigenvalues(&c).first().copied().unwrap_or(0.0);
    Ok(GardingCertificate {
        lambda_min,
        c_default: GARDING_C_DEFAULT,
        pass: lambda_min >= -GARDING_C_DEFAULT,
        bulk_dimension: bulk,
        grid_size: grid.n,
        hermitian_defect: herm,
    })
}

pub fn hermitian_defect(m: &Array2<Complex64>) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[[i, j]] - m[[j, i]].conj()).norm());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn identity_symbol() {
        let g = WeylGrid::new(32, 6.0).unwrap();
        let k = weyl_quantize_1d(&SymbolField::constant(c(1.0), 1), &g).unwrap();
        for ((i, j), v) in k.indexed_iter() {
            let t = if i == j { 1.0 } else { 0.0 };
            assert!((v - c(t)).norm() < 1e-12);
        }
    }

    #[test]
    fn odd_grid_rejected() {
        assert!(WeylGrid::new(31, 6.0).is_err());
    }

    #[test]
    fn bulk_dimension_at_default_radius() {
        assert_eq!(WeylGrid::new(256, 12.0).unwrap().bulk_dimension(), 13);
    }

    #[test]
    fn negative_symbol_is_reported() {
        let g = WeylGrid::new(16, 4.0).unwrap();
        let s = SymbolField::polynomial_1d("x", vec![(c(1.0), 1, 0)]);
        assert!(matches!(garding_certificate(&s, &g), Err(Error::NegativeSymbol { .. })));
    }
}
