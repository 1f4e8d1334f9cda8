//! Truncated eigenbases of the model operators and the quadrature grids that
//! carry every position-space integral.

use ndarray::{Array2, Axis};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::special::{gauss_hermite, hermite_derivatives, hermite_functions, laguerre, ln_factorial, Rule1d};

pub const DEFAULT_PADDING: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BasisKind {
    Hermite1d,
    HermiteTensor { dim: usize },
    LandauSymmetric { b0: f64 },
}

/// Index label of one basis function.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModeLabel {
    /// Hermite multi-index α.
    Hermite(Vec<usize>),
    /// Landau level k and angular momentum m.
    Landau { level: usize, angular: i64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisSpec {
    pub kind: BasisKind,
    pub labels: Vec<ModeLabel>,
    pub length_scale: f64,
}

impl BasisSpec {
    pub fn size(&self) -> usize {
        self.labels.len()
    }

    /// Spatial dimension n.
    pub fn dim(&self) -> usize {
        match self.kind {
            BasisKind::Hermite1d => 1,
            BasisKind::HermiteTensor { dim } => dim,
            BasisKind::LandauSymmetric { .. } => 2,
        }
    }

    pub fn is_landau(&self) -> bool {
        matches!(self.kind, BasisKind::LandauSymmetric { .. })
    }

    pub fn b0(&self) -> Option<f64> {
        match self.kind {
            BasisKind::LandauSymmetric { b0 } => Some(b0),
            _ => None,
        }
    }

    /// Modes per axis for Hermite bases (largest index + 1).
    pub fn modes_per_axis(&self) -> usize {
        self.labels
            .iter()
            .filter_map(|l| match l {
                ModeLabel::Hermite(a) => a.iter().copied().max(),
                ModeLabel::Landau { .. } => None,
            })
            .max()
            .map_or(0, |m| m + 1)
    }

    /// Highest polynomial degree per axis that appears in a basis function
    /// once the Gaussian factor is removed.
    fn max_degree(&self) -> usize {
        self.labels
            .iter()
            .map(|l| match l {
                ModeLabel::Hermite(a) => a.iter().copied().max().unwrap_or(0),
                ModeLabel::Landau { level, angular } => {
                    let m = angular.unsigned_abs() as usize;
                    let nr = level - (*angular).max(0) as usize;
                    2 * nr + m
                }
            })
            .max()
            .unwrap_or(0)
    }
}

/// Tensor-product quadrature grid for ∫_{R^n} f(x) dx.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    pub dim: usize,
    /// One rule per axis; nodes are the tensor product, first axis slowest.
    pub axes: Vec<Rule1d>,
    /// Flattened nodes, one row per point.
    pub nodes: Array2<f64>,
    pub weights: Vec<f64>,
    pub padding_factor: f64,
}

impl QuadratureGrid {
    pub fn tensor(axes: Vec<Rule1d>, padding_factor: f64) -> Self {
        let dim = axes.len();
        let count: usize = axes.iter().map(Rule1d::len).product();
        let mut nodes = Array2::zeros((count, dim));
        let mut weights = vec![1.0; count];
        for p in 0..count {
            let mut rem = p;
            for d in (0..dim).rev() {
                let n = axes[d].len();
                let i = rem % n;
                rem /= n;
                nodes[[p, d]] = axes[d].nodes[i];
                weights[p] *= axes[d].weights[i];
            }
        }
        Self { dim, axes, nodes, weights, padding_factor }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, p: usize) -> Vec<f64> {
        self.nodes.row(p).to_vec()
    }

    /// Largest |x| over the nodes, the effective truncation radius.
    pub fn radius(&self) -> f64 {
        self.nodes
            .rows()
            .into_iter()
            .map(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }
}

fn check_padding(padding: f64) -> Result<()> {
    if !(padding.is_finite() && padding >= 1.0) {
        return Err(invalid(format!("padding factor must be >= 1, got {padding}")));
    }
    Ok(())
}

fn node_count(padding: f64, degree: usize) -> usize {
    (padding * (degree + 1) as f64).ceil() as usize
}

/// Multi-indices of the Hermite tensor basis, graded by total degree with
/// lexicographic tie-breaking.
pub fn hermite_labels(dim: usize, modes: usize) -> Vec<Vec<usize>> {
    let total = modes.pow(dim as u32);
    let mut labels: Vec<Vec<usize>> = (0..total)
        .map(|mut p| {
            let mut a = vec![0; dim];
            for d in (0..dim).rev() {
                a[d] = p % modes;
                p /= modes;
            }
            a
        })
        .collect();
    labels.sort_by(|a, b| {
        let (sa, sb): (usize, usize) = (a.iter().sum(), b.iter().sum());
        sa.cmp(&sb).then_with(|| a.cmp(b))
    });
    labels
}

pub fn build_hermite_basis(dim: usize, modes: usize, length_scale: f64) -> Result<(BasisSpec, QuadratureGrid)> {
    build_hermite_basis_padded(dim, modes, length_scale, DEFAULT_PADDING)
}

pub fn build_hermite_basis_padded(
    dim: usize,
    modes: usize,
    length_scale: f64,
    padding: f64,
) -> Result<(BasisSpec, QuadratureGrid)> {
    if !(1..=2).contains(&dim) {
        return Err(invalid(format!("Hermite basis dimension must be 1 or 2, got {dim}")));
    }
    if modes == 0 {
        return Err(invalid("n_modes_per_axis must be at least 1"));
    }
    if !(length_scale.is_finite() && length_scale > 0.0) {
        return Err(invalid(format!("length scale must be positive, got {length_scale}")));
    }
    check_padding(padding)?;
    let kind = if dim == 1 { BasisKind::Hermite1d } else { BasisKind::HermiteTensor { dim } };
    let labels = hermite_labels(dim, modes).into_iter().map(ModeLabel::Hermite).collect();
    let spec = BasisSpec { kind, labels, length_scale };
    let rule = gauss_hermite(node_count(padding, modes - 1)).scaled(length_scale);
    let grid = QuadratureGrid::tensor(vec![rule; dim], padding);
    Ok((spec, grid))
}

/// Landau labels (k, m) with m ∈ [−max_angular, min(k, max_angular)],
/// ordered by level then angular momentum.
pub fn landau_labels(max_level: usize, max_angular: usize) -> Vec<ModeLabel> {
    let ma = max_angular as i64;
    let mut out = Vec::new();
    for k in 0..=max_level {
        for m in -ma..=(k as i64).min(ma) {
            out.push(ModeLabel::Landau { level: k, angular: m });
        }
    }
    out
}

pub fn build_landau_basis(b0: f64, max_level: usize, max_angular: usize) -> Result<(BasisSpec, QuadratureGrid)> {
    build_landau_basis_padded(b0, max_level, max_angular, DEFAULT_PADDING)
}

pub fn build_landau_basis_padded(
    b0: f64,
    max_level: usize,
    max_angular: usize,
    padding: f64,
) -> Result<(BasisSpec, QuadratureGrid)> {
    if !(b0.is_finite() && b0 > 0.0) {
        return Err(invalid(format!("B0 must be positive, got {b0}")));
    }
    check_padding(padding)?;
    let length_scale = (2.0 / b0).sqrt();
    let spec = BasisSpec {
        kind: BasisKind::LandauSymmetric { b0 },
        labels: landau_labels(max_level, max_angular),
        length_scale,
    };
    let rule = gauss_hermite(node_count(padding, spec.max_degree())).scaled(length_scale);
    let grid = QuadratureGrid::tensor(vec![rule.clone(), rule], padding);
    Ok((spec, grid))
}

fn check_grid(basis: &BasisSpec, grid: &QuadratureGrid) -> Result<()> {
    if basis.dim() != grid.dim {
        return Err(Error::DimensionMismatch { expected: basis.dim(), found: grid.dim });
    }
    Ok(())
}

/// Per-axis table of scaled Hermite function values (and derivatives) at
/// the axis nodes: rows are nodes, columns are degrees.
fn hermite_axis_table(rule: &Rule1d, modes: usize, scale: f64, derivative: bool) -> Array2<f64> {
    let mut out = Array2::zeros((rule.len(), modes));
    let norm = scale.powf(-0.5);
    for (i, &x) in rule.nodes.iter().enumerate() {
        let vals = hermite_functions(modes + 1, x / scale);
        let row: Vec<f64> = if derivative {
            hermite_derivatives(&vals, modes).into_iter().map(|v| v / scale).collect()
        } else {
            vals[..modes].to_vec()
        };
        for j in 0..modes {
            out[[i, j]] = norm * row[j];
        }
    }
    out
}

/// Value and Cartesian gradient of one Landau eigenfunction at (x, y).
pub fn landau_function(b0: f64, level: usize, angular: i64, x: f64, y: f64) -> (Complex64, [Complex64; 2]) {
    let am = angular.unsigned_abs() as usize;
    let nr = level - angular.max(0) as usize;
    let rho = 0.5 * b0 * (x * x + y * y);
    let s = if angular >= 0 { 1.0 } else { -1.0 };
    let w = Complex64::new(x, s * y);
    let p = w.powu(am as u32);
    let dp = if am == 0 { Complex64::new(0.0, 0.0) } else { am as f64 * w.powu(am as u32 - 1) };
    let lag = laguerre(nr, am as f64, rho);
    let l = lag[nr];
    let dl = if nr == 0 { 0.0 } else { -laguerre(nr - 1, am as f64 + 1.0, rho)[nr - 1] };
    let ln_norm = 0.5
        * (am as f64 * (0.5 * b0).ln() + b0.ln() + ln_factorial(nr) - (2.0 * PI).ln() - ln_factorial(nr + am));
    let g = (ln_norm - 0.5 * rho).exp();
    let value = g * p * l;
    let radial = g * (dl - 0.5 * l) * b0;
    let gx = g * dp * l + p * radial * x;
    let gy = g * dp * Complex64::new(0.0, s) * l + p * radial * y;
    (value, [gx, gy])
}

/// Sample matrix: rows are grid nodes, column j holds basis function j.
pub fn evaluate_basis(basis: &BasisSpec, grid: &QuadratureGrid) -> Result<Array2<Complex64>> {
    check_grid(basis, grid)?;
    Ok(sample(basis, grid, None))
}

/// Samples of ∂_d φ_j for each spatial direction d.
pub fn evaluate_gradient(basis: &BasisSpec, grid: &QuadratureGrid) -> Result<Vec<Array2<Complex64>>> {
    check_grid(basis, grid)?;
    Ok((0..basis.dim()).map(|d| sample(basis, grid, Some(d))).collect())
}

fn sample(basis: &BasisSpec, grid: &QuadratureGrid, deriv: Option<usize>) -> Array2<Complex64> {
    let n = basis.size();
    let mut out = Array2::<Complex64>::zeros((grid.len(), n));
    if n == 0 {
        return out;
    }
    match basis.kind {
        BasisKind::LandauSymmetric { b0 } => {
            out.axis_iter_mut(Axis(0)).enumerate().for_each(|(p, mut row)| {
                let (x, y) = (grid.nodes[[p, 0]], grid.nodes[[p, 1]]);
                for (j, label) in basis.labels.iter().enumerate() {
                    if let ModeLabel::Landau { level, angular } = label {
                        let (v, g) = landau_function(b0, *level, *angular, x, y);
                        row[j] = match deriv {
                            None => v,
                            Some(d) => g[d],
                        };
                    }
                }
            });
        }
        _ => {
            let modes = basis.modes_per_axis();
            let dim = basis.dim();
            let values: Vec<Array2<f64>> =
                grid.axes.iter().map(|r| hermite_axis_table(r, modes, basis.length_scale, false)).collect();
            let derivs: Vec<Array2<f64>> = if deriv.is_some() {
                grid.axes.iter().map(|r| hermite_axis_table(r, modes, basis.length_scale, true)).collect()
            } else {
                Vec::new()
            };
            let lens: Vec<usize> = grid.axes.iter().map(Rule1d::len).collect();
            for p in 0..grid.len() {
                let mut rem = p;
                let mut idx = vec![0; dim];
                for d in (0..dim).rev() {
                    idx[d] = rem % lens[d];
                    rem /= lens[d];
                }
                for (j, label) in basis.labels.iter().enumerate() {
                    if let ModeLabel::Hermite(alpha) = label {
                        let mut v = 1.0;
                        for d in 0..dim {
                            v *= if deriv == Some(d) { derivs[d][[idx[d], alpha[d]]] } else { values[d][[idx[d], alpha[d]]] };
                        }
                        out[[p, j]] = Complex64::new(v, 0.0);
                    }
                }
            }
        }
    }
    out
}

/// Gram matrix S* diag(w) S of the sampled basis.
pub fn gram_matrix(samples: &Array2<Complex64>, weights: &[f64]) -> Array2<Complex64> {
    weighted_product(samples, weights, samples)
}

/// A* diag(w) B for sample matrices A, B sharing the node axis.
pub fn weighted_product(a: &Array2<Complex64>, weights: &[f64], b: &Array2<Complex64>) -> Array2<Complex64> {
    let mut wb = b.clone();
    for (mut row, &w) in wb.axis_iter_mut(Axis(0)).zip(weights) {
        row.mapv_inplace(|v| v * w);
    }
    a.t().mapv(|v| v.conj()).dot(&wb)
}

/// Separable transform between Hermite tensor coefficients and grid values.
///
/// Coefficients are stored in the basis ordering; internally they are laid
/// out on a modes^dim cube so each axis can be handled by a small dense
/// matrix product.
#[derive(Debug, Clone)]
pub struct HermiteTransform {
    pub dim: usize,
    pub modes: usize,
    /// Per-axis node × mode table.
    pub table: Vec<Array2<f64>>,
    /// Basis position of each cube cell (cube index → basis index).
    pub cube_to_basis: Vec<usize>,
    pub grid_shape: Vec<usize>,
}

impl HermiteTransform {
    pub fn new(basis: &BasisSpec, grid: &QuadratureGrid) -> Result<Self> {
        check_grid(basis, grid)?;
        if basis.is_landau() {
            return Err(invalid("separable transform requires a Hermite basis"));
        }
        let modes = basis.modes_per_axis();
        let dim = basis.dim();
        if basis.size() != modes.pow(dim as u32) {
            return Err(invalid("separable transform requires a full tensor basis"));
        }
        let table = grid.axes.iter().map(|r| hermite_axis_table(r, modes, basis.length_scale, false)).collect();
        let mut cube_to_basis = vec![0; basis.size()];
        for (j, label) in basis.labels.iter().enumerate() {
            if let ModeLabel::Hermite(a) = label {
                let c = a.iter().fold(0, |acc, &v| acc * modes + v);
                cube_to_basis[c] = j;
            }
        }
        let grid_shape = grid.axes.iter().map(Rule1d::len).collect();
        Ok(Self { dim, modes, table, cube_to_basis, grid_shape })
    }

    /// Grid values u(x_p) = Σ_j c_j φ_j(x_p).
    pub fn to_grid(&self, coeffs: &[Complex64]) -> Vec<Complex64> {
        let cube: Vec<Complex64> = self.cube_to_basis.iter().map(|&j| coeffs[j]).collect();
        match self.dim {
            1 => apply_axis(&self.table[0], &cube, 1, false),
            _ => {
                let m = self.modes;
                // contract second axis: (m1, m2) -> (m1, g2)
                let g2 = self.grid_shape[1];
                let mut tmp = vec![Complex64::new(0.0, 0.0); m * g2];
                for a in 0..m {
                    let row = apply_axis(&self.table[1], &cube[a * m..(a + 1) * m], 1, false);
                    tmp[a * g2..(a + 1) * g2].copy_from_slice(&row);
                }
                apply_axis(&self.table[0], &tmp, g2, false)
            }
        }
    }

    /// Adjoint of `to_grid`: c_j = Σ_p φ_j(x_p) v_p (no weights applied).
    pub fn from_grid_adjoint(&self, values: &[Complex64]) -> Vec<Complex64> {
        let cube = match self.dim {
            1 => apply_axis(&self.table[0], values, 1, true),
            _ => {
                let m = self.modes;
                let g2 = self.grid_shape[1];
                let tmp = apply_axis(&self.table[0], values, g2, true);
                let mut out = vec![Complex64::new(0.0, 0.0); m * m];
                for a in 0..m {
                    let row = apply_axis(&self.table[1], &tmp[a * g2..(a + 1) * g2], 1, true);
                    out[a * m..(a + 1) * m].copy_from_slice(&row);
                }
                out
            }
        };
        let mut coeffs = vec![Complex64::new(0.0, 0.0); cube.len()];
        for (c, &j) in self.cube_to_basis.iter().enumerate() {
            coeffs[j] = cube[c];
        }
        coeffs
    }
}

/// Apply a node × mode table along the leading axis of a row-major block
/// with `stride` trailing entries. `adjoint` applies the transpose.
fn apply_axis(table: &Array2<f64>, data: &[Complex64], stride: usize, adjoint: bool) -> Vec<Complex64> {
    let (rows, cols) = table.dim();
    let (out_len, in_len) = if adjoint { (cols, rows) } else { (rows, cols) };
    debug_assert_eq!(data.len(), in_len * stride);
    let mut out = vec![Complex64::new(0.0, 0.0); out_len * stride];
    for o in 0..out_len {
        let dst = &mut out[o * stride..(o + 1) * stride];
        for i in 0..in_len {
            let t = if adjoint { table[[i, o]] } else { table[[o, i]] };
            if t == 0.0 {
                continue;
            }
            let src = &data[i * stride..(i + 1) * stride];
            for (d, s) in dst.iter_mut().zip(src) {
                *d += t * s;
            }
        }
    }
    out
}
