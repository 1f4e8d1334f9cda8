//! Truncated operator matrices: P₀, multiplication operators, the
//! perturbation L, the full operator P and the Pauli blocks.

use ndarray::{Array2, Axis};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::sync::{Arc, OnceLock};

use crate::basis::{evaluate_basis, evaluate_gradient, weighted_product, BasisKind, BasisSpec, ModeLabel, QuadratureGrid};
use crate::error::{invalid, Error, Result};
use crate::potential::PotentialSpec;
use crate::special::{gauss_legendre, Rule1d};

const HERMITIAN_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HermitianFlag {
    Hermitian,
    NonHermitian,
    Unknown,
}

impl HermitianFlag {
    /// Flag of a sum of operators.
    pub fn compose(self, other: Self) -> Self {
        use HermitianFlag::*;
        match (self, other) {
            (Hermitian, Hermitian) => Hermitian,
            (Unknown, _) | (_, Unknown) => Unknown,
            _ => NonHermitian,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    pub entries: Array2<Complex64>,
    pub basis: Arc<BasisSpec>,
    pub hermitian: HermitianFlag,
}

impl OperatorMatrix {
    pub fn new(entries: Array2<Complex64>, basis: Arc<BasisSpec>, hermitian: HermitianFlag) -> Result<Self> {
        let (r, c) = entries.dim();
        if r != c {
            return Err(invalid(format!("operator matrix must be square, got {r}x{c}")));
        }
        if r != basis.size() {
            return Err(Error::DimensionMismatch { expected: basis.size(), found: r });
        }
        let out = Self { entries, basis, hermitian };
        if hermitian == HermitianFlag::Hermitian && out.hermitian_defect() > HERMITIAN_TOL * (1.0 + out.max_abs()) {
            return Err(invalid("matrix flagged hermitian is not hermitian"));
        }
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    /// max |M − M*|.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.dim();
        let mut m: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                m = m.max((self.entries[[i, j]] - self.entries[[j, i]].conj()).norm());
            }
        }
        m
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    pub fn trace(&self) -> Complex64 {
        self.entries.diag().sum()
    }

    pub fn add(&self, other: &OperatorMatrix) -> Result<OperatorMatrix> {
        if self.basis != other.basis {
            return Err(invalid("cannot add operators on different bases"));
        }
        Ok(OperatorMatrix {
            entries: &self.entries + &other.entries,
            basis: self.basis.clone(),
            hermitian: self.hermitian.compose(other.hermitian),
        })
    }

    pub fn scale(&self, factor: Complex64) -> OperatorMatrix {
        let hermitian = if factor.im == 0.0 { self.hermitian } else { HermitianFlag::NonHermitian };
        OperatorMatrix { entries: self.entries.mapv(|v| v * factor), basis: self.basis.clone(), hermitian }
    }
}

/// Unperturbed model operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Model {
    /// −Δ + |x|² in dimension n.
    Oscillator { n: usize },
    /// (−i∇ + A₀)² with A₀ = (B₀/2)(−y, x).
    Landau { b0: f64 },
}

impl Model {
    pub fn dim(&self) -> usize {
        match self {
            Model::Oscillator { n } => *n,
            Model::Landau { .. } => 2,
        }
    }

    /// Background vector potential A₀(x).
    pub fn a0(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Model::Oscillator { n } => vec![0.0; *n],
            Model::Landau { b0 } => vec![-0.5 * b0 * x[1], 0.5 * b0 * x[0]],
        }
    }

    pub fn check_basis(&self, basis: &BasisSpec) -> Result<()> {
        let ok = match (self, basis.kind) {
            (Model::Oscillator { n }, BasisKind::Hermite1d) => *n == 1,
            (Model::Oscillator { n }, BasisKind::HermiteTensor { dim }) => *n == dim,
            (Model::Landau { b0 }, BasisKind::LandauSymmetric { b0: bb }) => (b0 - bb).abs() <= 1e-14 * b0.abs(),
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(invalid(format!("model {self:?} is incompatible with basis {:?}", basis.kind)))
        }
    }
}

/// Basis plus grid with cached samples of the basis functions and their
/// gradients at the quadrature nodes.
#[derive(Debug)]
pub struct Discretization {
    pub basis: Arc<BasisSpec>,
    pub grid: Arc<QuadratureGrid>,
    pub samples: Array2<Complex64>,
    gradients: OnceLock<Vec<Array2<Complex64>>>,
}

impl Discretization {
    pub fn new(basis: BasisSpec, grid: QuadratureGrid) -> Result<Self> {
        let samples = evaluate_basis(&basis, &grid)?;
        Ok(Self { basis: Arc::new(basis), grid: Arc::new(grid), samples, gradients: OnceLock::new() })
    }

    pub fn gradients(&self) -> &[Array2<Complex64>] {
        self.gradients.get_or_init(|| evaluate_gradient(&self.basis, &self.grid).expect("grid checked at construction"))
    }

    pub fn size(&self) -> usize {
        self.basis.size()
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    /// Galerkin matrix of pointwise multiplication by `values` (one per node).
    pub fn multiplication_matrix(&self, values: &[Complex64]) -> Array2<Complex64> {
        let mut scaled = self.samples.clone();
        for ((mut row, v), w) in scaled.axis_iter_mut(Axis(0)).zip(values).zip(&self.grid.weights) {
            let f = v * w;
            row.mapv_inplace(|s| s * f);
        }
        self.samples.t().mapv(|v| v.conj()).dot(&scaled)
    }

    fn node_values(&self, f: impl Fn(&[f64]) -> Result<Complex64> + Sync) -> Result<Vec<Complex64>> {
        (0..self.grid.len())
            .into_par_iter()
            .map(|p| f(self.grid.nodes.row(p).as_slice().expect("row-major nodes")))
            .collect()
    }
}

/// One-dimensional matrix of −d²/dx² + x² in the Hermite functions of
/// length scale `l`, exact (tridiagonal in steps of two).
fn oscillator_1d(modes: usize, l: f64) -> Array2<f64> {
    let mut t = Array2::zeros((modes, modes));
    let (a, b) = (l * l, 1.0 / (l * l));
    for j in 0..modes {
        let jf = j as f64;
        t[[j, j]] = (a + b) * (2.0 * jf + 1.0) / 2.0;
        if j + 2 < modes {
            let off = (a - b) * ((jf + 1.0) * (jf + 2.0)).sqrt() / 2.0;
            t[[j, j + 2]] = off;
            t[[j + 2, j]] = off;
        }
    }
    t
}

/// P₀ in its basis: diag(2|α| + n) for Hermite functions of unit scale
/// (exact tridiagonal form otherwise), diag(B₀(2k + 1)) for Landau.
pub fn assemble_p0(basis: &Arc<BasisSpec>) -> OperatorMatrix {
    let n = basis.size();
    let mut m = Array2::<Complex64>::zeros((n, n));
    match basis.kind {
        BasisKind::LandauSymmetric { b0 } => {
            for (j, label) in basis.labels.iter().enumerate() {
                if let ModeLabel::Landau { level, .. } = label {
                    m[[j, j]] = Complex64::new(b0 * (2.0 * *level as f64 + 1.0), 0.0);
                }
            }
        }
        _ => {
            let t = oscillator_1d(basis.modes_per_axis(), basis.length_scale);
            let index: HashMap<&[usize], usize> = basis
                .labels
                .iter()
                .enumerate()
                .filter_map(|(j, l)| match l {
                    ModeLabel::Hermite(a) => Some((a.as_slice(), j)),
                    _ => None,
                })
                .collect();
            for (j, label) in basis.labels.iter().enumerate() {
                let ModeLabel::Hermite(alpha) = label else { continue };
                for d in 0..alpha.len() {
                    let a = alpha[d];
                    for b in [a.wrapping_sub(2), a, a + 2] {
                        if b >= t.nrows() {
                            continue;
                        }
                        let mut beta = alpha.clone();
                        beta[d] = b;
                        if let Some(&k) = index.get(beta.as_slice()) {
                            m[[j, k]] += Complex64::new(t[[a, b]], 0.0);
                        }
                    }
                }
            }
        }
    }
    OperatorMatrix { entries: m, basis: basis.clone(), hermitian: HermitianFlag::Hermitian }
}

/// P₀ assembled from the quadrature and the analytic gradients:
/// ⟨(−i∇ + A₀)φ_j, (−i∇ + A₀)φ_k⟩ + ⟨φ_j, |x|² φ_k⟩ (oscillator only).
pub fn assemble_kinetic_quadrature(model: &Model, disc: &Discretization) -> Result<OperatorMatrix> {
    model.check_basis(&disc.basis)?;
    let i = Complex64::new(0.0, 1.0);
    let grads = disc.gradients();
    let mut total = Array2::<Complex64>::zeros((disc.size(), disc.size()));
    for d in 0..disc.dim() {
        let mut cov = grads[d].mapv(|g| -i * g);
        for (p, mut row) in cov.axis_iter_mut(Axis(0)).enumerate() {
            let a0 = model.a0(disc.grid.nodes.row(p).as_slice().unwrap())[d];
            for (c, s) in row.iter_mut().zip(disc.samples.row(p)) {
                *c += a0 * s;
            }
        }
        total = total + weighted_product(&cov, &disc.grid.weights, &cov);
    }
    if let Model::Oscillator { .. } = model {
        let x2: Vec<Complex64> = disc
            .grid
            .nodes
            .rows()
            .into_iter()
            .map(|r| Complex64::new(r.iter().map(|v| v * v).sum(), 0.0))
            .collect();
        total = total + disc.multiplication_matrix(&x2);
    }
    OperatorMatrix::new(total, disc.basis.clone(), HermitianFlag::Unknown)
}

/// Multiplication by a scalar potential.
pub fn assemble_multiplication(pot: &PotentialSpec, disc: &Discretization) -> Result<OperatorMatrix> {
    pot.validate(disc.dim())?;
    let n = disc.size();
    let flag = if pot.is_real() { HermitianFlag::Hermitian } else { HermitianFlag::NonHermitian };
    if pot.is_vector() {
        return Err(Error::NotScalar(pot.family_name().into()));
    }
    if pot.is_zero() {
        return Ok(OperatorMatrix { entries: Array2::zeros((n, n)), basis: disc.basis.clone(), hermitian: flag });
    }
    let values = disc.node_values(|x| pot.scalar_value(x))?;
    let mut entries = disc.multiplication_matrix(&values);
    if flag == HermitianFlag::Hermitian {
        symmetrize(&mut entries);
    }
    Ok(OperatorMatrix { entries, basis: disc.basis.clone(), hermitian: flag })
}

/// Replace M by (M + M*)/2 to remove rounding asymmetry.
fn symmetrize(m: &mut Array2<Complex64>) {
    let n = m.nrows();
    for i in 0..n {
        m[[i, i]].im = 0.0;
        for j in i + 1..n {
            let v = 0.5 * (m[[i, j]] + m[[j, i]].conj());
            m[[i, j]] = v;
            m[[j, i]] = v.conj();
        }
    }
}

/// Which terms of L to include.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PerturbationTerms {
    pub include_a1_squared: bool,
}

impl Default for PerturbationTerms {
    fn default() -> Self {
        Self { include_a1_squared: true }
    }
}

/// L = −2i A₁·∇ − i(∇·A₁) + 2A₀·A₁ + A₁·A₁ + V₁.
pub fn assemble_perturbation_l(
    a1: &PotentialSpec,
    v1: &PotentialSpec,
    model: &Model,
    disc: &Discretization,
) -> Result<OperatorMatrix> {
    assemble_perturbation_l_with(a1, v1, model, disc, PerturbationTerms::default())
}

pub fn assemble_perturbation_l_with(
    a1: &PotentialSpec,
    v1: &PotentialSpec,
    model: &Model,
    disc: &Discretization,
    terms: PerturbationTerms,
) -> Result<OperatorMatrix> {
    model.check_basis(&disc.basis)?;
    let mut out = assemble_multiplication(v1, disc)?;
    if a1.is_zero() {
        return Ok(out);
    }
    a1.validate(disc.dim())?;
    if !a1.is_vector() {
        return Err(invalid(format!("A1 `{}` needs a vector structure", a1.family_name())));
    }
    if a1.profile_gradient(&vec![0.0; disc.dim()]).is_none() {
        return Err(Error::MissingDivergence(a1.family_name().into()));
    }
    let i = Complex64::new(0.0, 1.0);
    let dim = disc.dim();
    let per_node: Vec<(Vec<Complex64>, Complex64)> = (0..disc.grid.len())
        .into_par_iter()
        .map(|p| {
            let x = disc.grid.nodes.row(p).to_vec();
            let a = a1.vector_value(&x)?;
            let div = a1.divergence(&x)?;
            let a0 = model.a0(&x);
            let cross: Complex64 = a.iter().zip(&a0).map(|(u, v)| 2.0 * u * v).sum();
            let square: Complex64 =
                if terms.include_a1_squared { a.iter().map(|u| u * u).sum() } else { Complex64::new(0.0, 0.0) };
            Ok((a, -i * div + cross + square))
        })
        .collect::<Result<_>>()?;
    let scalar: Vec<Complex64> = per_node.iter().map(|(_, s)| *s).collect();
    let mut entries = disc.multiplication_matrix(&scalar);
    let grads = disc.gradients();
    for d in 0..dim {
        let coef: Vec<f64> = disc.grid.weights.clone();
        let mut g = grads[d].clone();
        for ((mut row, (a, _)), w) in g.axis_iter_mut(Axis(0)).zip(&per_node).zip(&coef) {
            let f = -2.0 * i * a[d] * w;
            row.mapv_inplace(|s| s * f);
        }
        entries = entries + disc.samples.t().mapv(|v| v.conj()).dot(&g);
    }
    let flag = if a1.is_real() { HermitianFlag::Hermitian } else { HermitianFlag::NonHermitian };
    if flag == HermitianFlag::Hermitian {
        symmetrize(&mut entries);
    }
    let l = OperatorMatrix { entries, basis: disc.basis.clone(), hermitian: flag };
    out = out.add(&l)?;
    Ok(out)
}

/// P = P₀ + W + L.
pub fn assemble_full(
    model: &Model,
    w: &PotentialSpec,
    a1: &PotentialSpec,
    v1: &PotentialSpec,
    disc: &Discretization,
) -> Result<OperatorMatrix> {
    model.check_basis(&disc.basis)?;
    let p0 = assemble_p0(&disc.basis);
    let wm = assemble_multiplication(w, disc)?;
    let l = assemble_perturbation_l(a1, v1, model, disc)?;
    p0.add(&wm)?.add(&l)
}

/// Pauli blocks (P₊, P₋) = P ± B with B = B₀ + curl A₁.
pub fn assemble_pauli(
    b0: f64,
    w: &PotentialSpec,
    a1: &PotentialSpec,
    v1: &PotentialSpec,
    disc: &Discretization,
) -> Result<(OperatorMatrix, OperatorMatrix)> {
    if disc.dim() != 2 {
        return Err(invalid("the Pauli operator is assembled in two dimensions only"));
    }
    let model = Model::Landau { b0 };
    let p = assemble_full(&model, w, a1, v1, disc)?;
    let b = magnetic_field_matrix(b0, a1, disc)?;
    let plus = p.add(&b)?;
    let minus = p.add(&b.scale(Complex64::new(-1.0, 0.0)))?;
    Ok((plus, minus))
}

/// Multiplication by the total field B₀ + curl A₁.
pub fn magnetic_field_matrix(b0: f64, a1: &PotentialSpec, disc: &Discretization) -> Result<OperatorMatrix> {
    if a1.is_zero() {
        // constant field on an orthonormal basis
        let entries = Array2::from_diag_elem(disc.size(), Complex64::new(b0, 0.0));
        return Ok(OperatorMatrix { entries, basis: disc.basis.clone(), hermitian: HermitianFlag::Hermitian });
    }
    let values = disc.node_values(|x| Ok(b0 + a1.curl(x)?))?;
    let flag = if a1.is_real() { HermitianFlag::Hermitian } else { HermitianFlag::NonHermitian };
    let mut entries = disc.multiplication_matrix(&values);
    if flag == HermitianFlag::Hermitian {
        symmetrize(&mut entries);
    }
    Ok(OperatorMatrix { entries, basis: disc.basis.clone(), hermitian: flag })
}

/// Quadrature estimates behind the potential assumptions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub n: usize,
    pub r: f64,
    pub delta: f64,
    pub v1_norm_lr: f64,
    /// sup ⟨x⟩^{1+δ}|A₁| over the grid.
    pub a1_weighted_sup: f64,
    /// sup ⟨x⟩^{1+δ}|∇A₁| over the grid; `None` without a closed-form gradient.
    pub grad_a1_weighted_sup: Option<f64>,
    pub truncation_radius: f64,
    pub r_admissible: bool,
    pub a1_admissible: bool,
    pub admissible: bool,
    pub note: String,
}

/// Admissible Lebesgue exponents for V₁: (1, ∞] for n = 2, [n/2, ∞] for
/// n ≥ 3, and [1, ∞] for the one-dimensional extension.
pub fn r_admissible(r: f64, n: usize) -> bool {
    if r.is_nan() {
        return false;
    }
    match n {
        0 => false,
        1 => r >= 1.0,
        2 => r > 1.0,
        _ => r >= n as f64 / 2.0,
    }
}

/// Tensor grid on the box [−R, R]^n made of Gauss–Legendre panels whose
/// widths double away from the origin.
pub fn box_grid(dim: usize, radius: f64, order: usize) -> Result<QuadratureGrid> {
    if dim == 0 || !(radius > 0.0) || order == 0 {
        return Err(invalid("box grid needs dim >= 1, radius > 0 and order >= 1"));
    }
    let mut breaks = vec![0.0];
    let mut b = 0.5_f64.min(radius);
    while b < radius {
        breaks.push(b);
        b *= 2.0;
    }
    breaks.push(radius);
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for w in breaks.windows(2) {
        for (lo, hi) in [(-w[1], -w[0]), (w[0], w[1])] {
            let r = gauss_legendre(order, lo, hi);
            nodes.extend(r.nodes);
            weights.extend(r.weights);
        }
    }
    let mut idx: Vec<usize> = (0..nodes.len()).collect();
    idx.sort_by(|&a, &b| nodes[a].total_cmp(&nodes[b]));
    let rule = Rule1d { nodes: idx.iter().map(|&i| nodes[i]).collect(), weights: idx.iter().map(|&i| weights[i]).collect() };
    Ok(QuadratureGrid::tensor(vec![rule; dim], 1.0))
}

/// ‖f‖_{L^r} on a grid, r = ∞ giving the maximum modulus.
pub fn lr_norm_on_grid(f: impl Fn(&[f64]) -> Complex64 + Sync, r: f64, grid: &QuadratureGrid) -> f64 {
    let vals: Vec<f64> = (0..grid.len()).into_par_iter().map(|p| f(grid.nodes.row(p).as_slice().unwrap()).norm()).collect();
    if r.is_infinite() {
        return vals.iter().copied().fold(0.0, f64::max);
    }
    let s: f64 = vals.iter().zip(&grid.weights).map(|(v, w)| w * v.powf(r)).sum();
    s.powf(1.0 / r)
}

pub fn check_assumptions(
    v1: &PotentialSpec,
    a1: &PotentialSpec,
    r: f64,
    delta: f64,
    n: usize,
    grid: &QuadratureGrid,
) -> Result<AssumptionReport> {
    if grid.dim != n {
        return Err(Error::DimensionMismatch { expected: n, found: grid.dim });
    }
    v1.validate(n)?;
    let r_ok = r_admissible(r, n);
    let v1_norm = if v1.is_zero() || !r_ok {
        if v1.is_zero() {
            0.0
        } else {
            f64::NAN
        }
    } else {
        lr_norm_on_grid(|x| v1.profile(x), r, grid)
    };
    let (a1_sup, grad_sup) = if a1.is_zero() {
        (0.0, Some(0.0))
    } else {
        a1.validate(n)?;
        let weight = |x: &[f64]| (1.0 + x.iter().map(|v| v * v).sum::<f64>()).powf(0.5 * (1.0 + delta));
        let vals: Vec<(f64, Option<f64>)> = (0..grid.len())
            .into_par_iter()
            .map(|p| {
                let x = grid.nodes.row(p).to_vec();
                let w = weight(&x);
                let a = a1.vector_value(&x).map(|v| v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()).unwrap_or(f64::NAN);
                let g = a1
                    .vector_jacobian(&x)
                    .ok()
                    .map(|j| j.iter().flatten().map(|c| c.norm_sqr()).sum::<f64>().sqrt() * w);
                (a * w, g)
            })
            .collect();
        let a_sup = vals.iter().map(|v| v.0).fold(0.0, f64::max);
        let g_sup = vals.iter().map(|v| v.1).try_fold(0.0_f64, |m, g| g.map(|g| m.max(g)));
        (a_sup, g_sup)
    };
    let a1_ok = a1.is_zero() || (a1.is_vector() && a1_sup.is_finite() && grad_sup.is_some_and(f64::is_finite));
    let note = if r_ok {
        format!("norms are quadrature estimates truncated at radius {:.3}", grid.radius())
    } else {
        format!("r = {r} lies outside the admissible window for n = {n}")
    };
    Ok(AssumptionReport {
        n,
        r,
        delta,
        v1_norm_lr: v1_norm,
        a1_weighted_sup: a1_sup,
        grad_a1_weighted_sup: grad_sup,
        truncation_radius: grid.radius(),
        r_admissible: r_ok,
        a1_admissible: a1_ok,
        admissible: r_ok && a1_ok,
        note,
    })
}
