//! Potential sweeps testing the eigenvalue enclosure for P and for the
//! Pauli blocks, plus the linear-in-ε probe of the first-order part.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{build_hermite_basis, build_landau_basis};
use crate::eigen::{convergence_study, largest_singular_value, spectral_order, ConvergenceStudy, DEFAULT_GATE};
use crate::error::{invalid, Result};
use crate::norms::fit_loglog;
use crate::operator::{
    assemble_full, assemble_pauli, assemble_perturbation_l_with, box_grid, check_assumptions, lr_norm_on_grid,
    AssumptionReport, Discretization, Model, OperatorMatrix, PerturbationTerms,
};
use crate::potential::PotentialSpec;
use crate::verdict::Verdict;

type C = Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnclosureModel {
    Oscillator { n: usize },
    Landau { b0: f64 },
    Pauli { b0: f64 },
}

impl EnclosureModel {
    pub fn dim(&self) -> usize {
        match self {
            EnclosureModel::Oscillator { n } => *n,
            _ => 2,
        }
    }

    fn base(&self) -> Model {
        match *self {
            EnclosureModel::Oscillator { n } => Model::Oscillator { n },
            EnclosureModel::Landau { b0 } | EnclosureModel::Pauli { b0 } => Model::Landau { b0 },
        }
    }

    /// Discretization at one convergence size: modes per axis for the
    /// oscillator, highest Landau level (and angular cutoff) otherwise.
    pub fn discretize(&self, size: usize) -> Result<Discretization> {
        let (basis, grid) = match *self {
            EnclosureModel::Oscillator { n } => build_hermite_basis(n, size, 1.0)?,
            EnclosureModel::Landau { b0 } | EnclosureModel::Pauli { b0 } => build_landau_basis(b0, size, size)?,
        };
        Discretization::new(basis, grid)
    }
}

fn default_a() -> f64 {
    0.5
}
fn default_true() -> bool {
    true
}
fn default_gate() -> f64 {
    DEFAULT_GATE
}
fn default_mu() -> f64 {
    0.5
}
fn default_delta() -> f64 {
    0.5
}
fn default_norm_radius() -> f64 {
    12.0
}
fn default_norm_order() -> usize {
    8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnclosureConfig {
    pub model: EnclosureModel,
    pub w: PotentialSpec,
    pub a1: PotentialSpec,
    pub v1: PotentialSpec,
    /// Lebesgue exponent of the V₁ norm.
    pub r: f64,
    /// Imaginary-part threshold.
    #[serde(default = "default_a")]
    pub a: f64,
    pub tau: Vec<f64>,
    #[serde(default = "default_true")]
    pub scale_v1: bool,
    #[serde(default)]
    pub scale_a1: bool,
    /// Increasing basis sizes for the convergence gate.
    pub sizes: Vec<usize>,
    #[serde(default = "default_gate")]
    pub gate: f64,
    #[serde(default = "default_mu")]
    pub mu: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_delta")]
    pub delta_prime: f64,
    /// Box [−R, R]^n on which ‖V₁‖_{L^r} and the A₁ weights are measured.
    #[serde(default = "default_norm_radius")]
    pub norm_radius: f64,
    #[serde(default = "default_norm_order")]
    pub norm_order: usize,
}

impl EnclosureConfig {
    pub fn validate(&self) -> Result<()> {
        let n = self.model.dim();
        if !(self.a > 0.0) {
            return Err(invalid(format!("threshold a must be positive, got {}", self.a)));
        }
        if self.tau.is_empty() || self.tau.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(invalid("tau ladder must be non-empty, finite and non-negative"));
        }
        if self.tau.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("tau ladder must be strictly increasing"));
        }
        if self.sizes.len() < 2 {
            return Err(invalid("the convergence gate needs at least two basis sizes"));
        }
        if let EnclosureModel::Oscillator { n } = self.model {
            if !(1..=2).contains(&n) {
                return Err(invalid(format!("oscillator dimension must be 1 or 2, got {n}")));
            }
        }
        if let EnclosureModel::Landau { b0 } | EnclosureModel::Pauli { b0 } = self.model {
            if !(b0 > 0.0) {
                return Err(invalid(format!("B0 must be positive, got {b0}")));
            }
        }
        self.w.validate(n)?;
        if !self.w.is_real() {
            return Err(invalid("W must be real"));
        }
        self.v1.validate(n)?;
        if self.v1.is_vector() {
            return Err(invalid("V1 must be a scalar family"));
        }
        if !self.a1.is_zero() && !self.a1.is_vector() {
            return Err(invalid("A1 must be a vector family"));
        }
        Ok(())
    }

    /// Potentials at sweep value τ.
    pub fn scaled(&self, tau: f64) -> (PotentialSpec, PotentialSpec) {
        let t = C::new(tau, 0.0);
        let a1 = if self.scale_a1 { self.a1.scaled(t) } else { self.a1.clone() };
        let v1 = if self.scale_v1 { self.v1.scaled(t) } else { self.v1.clone() };
        (a1, v1)
    }

    pub fn exponent(&self) -> f64 {
        1.0 - self.model.dim() as f64 / (2.0 * self.r)
    }

    fn assumptions(&self) -> Result<AssumptionReport> {
        let n = self.model.dim();
        let grid = box_grid(n, self.norm_radius, self.norm_order)?;
        let report = check_assumptions(&self.v1, &self.a1, self.r, self.delta, n, &grid)?;
        if !report.admissible {
            return Err(invalid(format!("potentials are inadmissible: {}", report.note)));
        }
        Ok(report)
    }

    fn w_sup(&self) -> Result<f64> {
        let grid = box_grid(self.model.dim(), self.norm_radius, self.norm_order)?;
        Ok(lr_norm_on_grid(|x| self.w.profile(x), f64::INFINITY, &grid))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnclosureRow {
    pub tau: f64,
    pub v1_norm_lr: f64,
    /// Gated eigenvalues with |Im z| ≥ a.
    pub eigenvalues: Vec<C>,
    /// Gated eigenvalues below the threshold, excluded from ρ.
    pub sub_threshold: Vec<C>,
    /// Tracked eigenvalues that failed the gate.
    pub unconverged: usize,
    pub max_im: Option<f64>,
    pub rho: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnclosureReport {
    pub label: String,
    pub exponent: f64,
    pub rows: Vec<EnclosureRow>,
    /// Empirical enclosure constant sup ρ.
    pub rho_sup: Option<f64>,
    pub rho_slope: Option<f64>,
    /// Log-log slope of max|Im z| against ‖V₁‖_{L^r}.
    pub im_slope: Option<f64>,
    pub im_slope_bound: f64,
    /// Largest swept ‖V₁‖_{L^r} below which every row keeps all gated
    /// eigenvalues inside |Im z| < a.
    pub v0_empirical: Option<f64>,
    pub flags: Vec<String>,
    pub verdict: Verdict,
}

pub const RHO_SLOPE_MAX: f64 = 0.2;
pub const IM_SLOPE_SLACK: f64 = 0.2;

impl EnclosureReport {
    /// One CSV line per τ: tau, v1_norm_Lr, max_im_z, rho (empty when undefined).
    pub fn csv(&self) -> String {
        let mut s = String::from("tau,v1_norm_Lr,max_im_z,rho\n");
        let opt = |v: Option<f64>| v.map(crate::output::fmt_f64).unwrap_or_default();
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{}\n",
                crate::output::fmt_f64(r.tau),
                crate::output::fmt_f64(r.v1_norm_lr),
                opt(r.max_im),
                opt(r.rho)
            ));
        }
        s
    }

    fn assemble(label: &str, exponent: f64, rows: Vec<EnclosureRow>) -> Result<Self> {
        let live: Vec<&EnclosureRow> = rows.iter().filter(|r| r.rho.is_some()).collect();
        let rho_sup = live.iter().filter_map(|r| r.rho).reduce(f64::max);
        let fit = |xs: Vec<f64>, ys: Vec<f64>| -> Result<Option<f64>> {
            let ok = xs.iter().zip(&ys).filter(|(x, y)| **x > 0.0 && **y > 0.0).count();
            if ok >= 2 {
                Ok(Some(fit_loglog(&xs, &ys)?.slope))
            } else {
                Ok(None)
            }
        };
        let rho_slope = fit(live.iter().map(|r| r.tau).collect(), live.iter().map(|r| r.rho.unwrap()).collect())?;
        let im_slope = fit(
            live.iter().map(|r| r.v1_norm_lr).collect(),
            live.iter().map(|r| r.max_im.unwrap()).collect(),
        )?;
        let im_slope_bound = if exponent > 0.0 { 1.0 / exponent + IM_SLOPE_SLACK } else { f64::INFINITY };
        let mut by_norm: Vec<&EnclosureRow> = rows.iter().collect();
        by_norm.sort_by(|a, b| a.v1_norm_lr.total_cmp(&b.v1_norm_lr));
        let v0_empirical =
            by_norm.iter().take_while(|r| r.rho.is_none()).map(|r| r.v1_norm_lr).filter(|v| *v > 0.0).reduce(f64::max);
        let mut flags = Vec::new();
        for r in &rows {
            if r.unconverged > 0 {
                flags.push(format!("tau = {}: {} tracked eigenvalues failed the convergence gate", r.tau, r.unconverged));
            }
        }
        let verdict = if live.is_empty() {
            Verdict::PassVacuous
        } else {
            let finite = rho_sup.is_some_and(f64::is_finite);
            let rho_ok = rho_slope.is_none_or(|s| s <= RHO_SLOPE_MAX);
            let im_ok = im_slope.is_none_or(|s| s <= im_slope_bound);
            Verdict::from_bool(finite && rho_ok && im_ok)
        };
        Ok(Self {
            label: label.into(),
            exponent,
            rows,
            rho_sup,
            rho_slope,
            im_slope,
            im_slope_bound,
            v0_empirical,
            flags,
            verdict,
        })
    }
}

/// Split a convergence study at the threshold.
fn row_from_study(tau: f64, v1_norm: f64, study: &ConvergenceStudy, a: f64, exponent: f64) -> EnclosureRow {
    let gated = study.gated();
    let unconverged = study.tracked.iter().filter(|t| !t.converged || t.ambiguous).count();
    let (mut above, mut below): (Vec<C>, Vec<C>) = gated.into_iter().partition(|z| z.im.abs() >= a);
    above.sort_by(spectral_order);
    below.sort_by(spectral_order);
    row_from_sets(tau, v1_norm, above, below, unconverged, exponent)
}

fn row_from_sets(tau: f64, v1_norm: f64, above: Vec<C>, below: Vec<C>, unconverged: usize, exponent: f64) -> EnclosureRow {
    let max_im = above.iter().map(|z| z.im.abs()).reduce(f64::max);
    let rho = max_im.map(|m| {
        let v = m.powf(exponent) / v1_norm;
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    });
    EnclosureRow { tau, v1_norm_lr: v1_norm, eigenvalues: above, sub_threshold: below, unconverged, max_im, rho }
}

fn v1_norm(cfg: &EnclosureConfig, v1: &PotentialSpec) -> Result<f64> {
    if v1.is_zero() {
        return Ok(0.0);
    }
    let grid = box_grid(cfg.model.dim(), cfg.norm_radius, cfg.norm_order)?;
    Ok(lr_norm_on_grid(|x| v1.profile(x), cfg.r, &grid))
}

/// Discretizations for every configured size, shared across the sweep.
fn discretizations(cfg: &EnclosureConfig) -> Result<Vec<Discretization>> {
    cfg.sizes.iter().map(|&s| cfg.model.discretize(s)).collect()
}

/// Convergence study where `build` receives the index of the size.
fn study<F>(cfg: &EnclosureConfig, build: F) -> Result<ConvergenceStudy>
where
    F: Fn(usize) -> Result<OperatorMatrix> + Sync,
{
    convergence_study(&cfg.sizes, cfg.gate, |s| {
        build(cfg.sizes.iter().position(|&t| t == s).expect("study visits configured sizes"))
    })
}

pub fn run_enclosure(cfg: &EnclosureConfig) -> Result<EnclosureReport> {
    cfg.validate()?;
    if matches!(cfg.model, EnclosureModel::Pauli { .. }) {
        return Err(invalid("use the Pauli enclosure for the pauli model"));
    }
    cfg.assumptions()?;
    let model = cfg.model.base();
    let exponent = cfg.exponent();
    let discs = discretizations(cfg)?;
    let rows: Vec<EnclosureRow> = cfg
        .tau
        .par_iter()
        .map(|&tau| {
            let (a1, v1) = cfg.scaled(tau);
            let norm = v1_norm(cfg, &v1)?;
            let st = study(cfg, |k| assemble_full(&model, &cfg.w, &a1, &v1, &discs[k]))?;
            Ok(row_from_study(tau, norm, &st, cfg.a, exponent))
        })
        .collect::<Result<_>>()?;
    EnclosureReport::assemble("P", exponent, rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PauliEnclosureReport {
    pub plus: EnclosureReport,
    pub minus: EnclosureReport,
    pub merged: EnclosureReport,
    pub b0: f64,
    pub w_sup: f64,
    /// ρ/(1 + B₀ + ‖W‖_∞) per τ.
    pub rho_with_b0: Vec<Option<f64>>,
    /// ρ/(1 + ‖W‖_∞) per τ.
    pub rho_without_b0: Vec<Option<f64>>,
    /// Merged eigenvalue lists equal the union of the block lists.
    pub union_consistent: bool,
    pub verdict: Verdict,
}

fn union(a: &[C], b: &[C]) -> Vec<C> {
    let mut out: Vec<C> = a.iter().chain(b).copied().collect();
    out.sort_by(spectral_order);
    out
}

pub fn run_pauli_enclosure(cfg: &EnclosureConfig) -> Result<PauliEnclosureReport> {
    cfg.validate()?;
    let EnclosureModel::Pauli { b0 } = cfg.model else {
        return Err(invalid("the Pauli enclosure needs the pauli model"));
    };
    cfg.assumptions()?;
    let exponent = cfg.exponent();
    let discs = discretizations(cfg)?;
    let rows: Vec<(EnclosureRow, EnclosureRow, EnclosureRow)> = cfg
        .tau
        .par_iter()
        .map(|&tau| {
            let (a1, v1) = cfg.scaled(tau);
            let norm = v1_norm(cfg, &v1)?;
            let blocks: Vec<(OperatorMatrix, OperatorMatrix)> =
                discs.iter().map(|d| assemble_pauli(b0, &cfg.w, &a1, &v1, d)).collect::<Result<_>>()?;
            let plus = study(cfg, |k| Ok(blocks[k].0.clone()))?;
            let minus = study(cfg, |k| Ok(blocks[k].1.clone()))?;
            let rp = row_from_study(tau, norm, &plus, cfg.a, exponent);
            let rm = row_from_study(tau, norm, &minus, cfg.a, exponent);
            let merged = row_from_sets(
                tau,
                norm,
                union(&rp.eigenvalues, &rm.eigenvalues),
                union(&rp.sub_threshold, &rm.sub_threshold),
                rp.unconverged + rm.unconverged,
                exponent,
            );
            Ok((rp, rm, merged))
        })
        .collect::<Result<_>>()?;
    let (mut p, mut m, mut u) = (Vec::new(), Vec::new(), Vec::new());
    for (a, b, c) in rows {
        p.push(a);
        m.push(b);
        u.push(c);
    }
    let plus = EnclosureReport::assemble("P+", exponent, p)?;
    let minus = EnclosureReport::assemble("P-", exponent, m)?;
    let merged = EnclosureReport::assemble("P+ (+) P-", exponent, u)?;
    let union_consistent = merged.rows.iter().zip(plus.rows.iter().zip(&minus.rows)).all(|(u, (a, b))| {
        u.eigenvalues == union(&a.eigenvalues, &b.eigenvalues)
            && u.max_im == [a.max_im, b.max_im].into_iter().flatten().reduce(f64::max)
    });
    let w_sup = cfg.w_sup()?;
    let rho_with_b0 = merged.rows.iter().map(|r| r.rho.map(|v| v / (1.0 + b0 + w_sup))).collect();
    let rho_without_b0 = merged.rows.iter().map(|r| r.rho.map(|v| v / (1.0 + w_sup))).collect();
    let verdict = if union_consistent { plus.verdict.and(minus.verdict).and(merged.verdict) } else { Verdict::Fail };
    Ok(PauliEnclosureReport { plus, minus, merged, b0, w_sup, rho_with_b0, rho_without_b0, union_consistent, verdict })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonProbe {
    pub epsilon: Vec<f64>,
    /// ‖L(εA₁, 0)‖ on L² of the truncation.
    pub norms: Vec<f64>,
    pub slope: Option<f64>,
    pub include_a1_squared: bool,
    pub verdict: Verdict,
}

pub const EPSILON_SLOPE_TOL: f64 = 0.05;

/// ‖L(εA₁, 0)‖₂→₂ across ε at the largest configured basis size.
pub fn epsilon_threshold_probe(cfg: &EnclosureConfig, epsilon: &[f64], include_a1_squared: bool) -> Result<EpsilonProbe> {
    cfg.validate()?;
    if cfg.a1.is_zero() {
        return Err(invalid("the epsilon probe needs a nonzero A1"));
    }
    let model = cfg.model.base();
    let disc = cfg.model.discretize(*cfg.sizes.last().unwrap())?;
    let terms = PerturbationTerms { include_a1_squared };
    let norms: Vec<f64> = epsilon
        .par_iter()
        .map(|&e| {
            if e == 0.0 {
                return Ok(0.0);
            }
            let l = assemble_perturbation_l_with(&cfg.a1.scaled(C::new(e, 0.0)), &PotentialSpec::zero(), &model, &disc, terms)?;
            Ok(largest_singular_value(&l.entries))
        })
        .collect::<Result<_>>()?;
    let xs: Vec<f64> = epsilon.to_vec();
    let positive = xs.iter().zip(&norms).filter(|(x, y)| **x > 0.0 && **y > 0.0).count();
    let slope = if positive >= 2 { Some(fit_loglog(&xs, &norms)?.slope) } else { None };
    let verdict = match slope {
        Some(s) => Verdict::from_bool((s - 1.0).abs() <= EPSILON_SLOPE_TOL),
        None => Verdict::PassVacuous,
    };
    Ok(EpsilonProbe { epsilon: xs, norms, slope, include_a1_squared, verdict })
}
