//! The escape function λ and the pointwise checks of its bracket with |ξ|².

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::symbol::{hamiltonian_derivative, SymbolField};
use crate::error::{invalid, Result};

/// exp(−1/t) for t > 0, else 0.
fn bump(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

fn bump_prime(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp() / (t * t)
    } else {
        0.0
    }
}

/// Smooth step: 0 for t ≤ 0, 1 for t ≥ 1.
pub fn smooth_step(t: f64) -> f64 {
    let (a, b) = (bump(t), bump(1.0 - t));
    a / (a + b)
}

pub fn smooth_step_prime(t: f64) -> f64 {
    let (a, b) = (bump(t), bump(1.0 - t));
    let (da, db) = (bump_prime(t), bump_prime(1.0 - t));
    let s = a + b;
    (da * b + a * db) / (s * s)
}

/// ψ: supported in [1/4, ∞), equal to 1 on [1/2, ∞), nondecreasing.
pub fn psi(t: f64) -> f64 {
    smooth_step(4.0 * t - 1.0)
}

pub fn psi_prime(t: f64) -> f64 {
    4.0 * smooth_step_prime(4.0 * t - 1.0)
}

/// χ: equal to 1 on (−∞, 1/2], supported in (−∞, 1].
pub fn chi(t: f64) -> f64 {
    1.0 - smooth_step(2.0 * t - 1.0)
}

pub fn chi_prime(t: f64) -> f64 {
    -2.0 * smooth_step_prime(2.0 * t - 1.0)
}

/// ψ₀(t) = 1 − ψ(t) − ψ(−t).
pub fn psi0(t: f64) -> f64 {
    1.0 - psi(t) - psi(-t)
}

/// ψ₁(t) = ψ(−t) − ψ(t).
pub fn psi1(t: f64) -> f64 {
    psi(-t) - psi(t)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EscapeFunctionParams {
    pub m0: f64,
    pub mu: f64,
    /// Decay exponent δ of the potentials; μ must lie in (0, δ].
    pub delta: f64,
}

impl Default for EscapeFunctionParams {
    fn default() -> Self {
        Self { m0: 3.0, mu: 0.5, delta: 0.5 }
    }
}

impl EscapeFunctionParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.m0 > 2.0 && self.m0.is_finite()) {
            return Err(invalid(format!("M0 must exceed 2, got {}", self.m0)));
        }
        if !(self.mu > 0.0 && self.mu <= self.delta) {
            return Err(invalid(format!("mu must lie in (0, delta = {}], got {}", self.delta, self.mu)));
        }
        Ok(())
    }

    /// Pointwise check of the cutoff support and monotonicity constraints.
    pub fn verify_cutoffs(&self) -> bool {
        (0..=4000).all(|i| {
            let t = -2.0 + i as f64 * 1e-3;
            let p = psi(t);
            let c = chi(t);
            (t >= 0.25 || p == 0.0)
                && (t < 0.5 || p == 1.0)
                && psi_prime(t) >= 0.0
                && (t > 0.5 || c == 1.0)
                && (t < 1.0 || c == 0.0)
                && (0.0..=1.0).contains(&p)
                && (0.0..=1.0).contains(&c)
        })
    }
}

fn jbr(v: &[f64]) -> f64 {
    (1.0 + v.iter().map(|t| t * t).sum::<f64>()).sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}

/// λ(x, ξ), with −λ = (θψ₀(θ) − (M₀ − ⟨a⟩^{−μ})ψ₁(θ))χ(r),
/// a = x·ξ/⟨ξ⟩, θ = a/⟨x⟩, r = ⟨x⟩/⟨ξ⟩.
pub fn eval_lambda(x: &[f64], xi: &[f64], p: &EscapeFunctionParams) -> f64 {
    let (jx, jxi) = (jbr(x), jbr(xi));
    let r = jx / jxi;
    let c = chi(r);
    if c == 0.0 {
        return 0.0;
    }
    let a = dot(x, xi) / jxi;
    let th = a / jx;
    let ja = (1.0 + a * a).sqrt();
    -(th * psi0(th) - (p.m0 - ja.powf(-p.mu)) * psi1(th)) * c
}

/// Closed-form (∇ₓλ, ∇_ξλ).
pub fn lambda_gradient(x: &[f64], xi: &[f64], p: &EscapeFunctionParams) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    let (jx, jxi) = (jbr(x), jbr(xi));
    let r = jx / jxi;
    let (c, dc) = (chi(r), chi_prime(r));
    if c == 0.0 && dc == 0.0 {
        return (vec![0.0; n], vec![0.0; n]);
    }
    let xdotxi = dot(x, xi);
    let a = xdotxi / jxi;
    let th = a / jx;
    let ja = (1.0 + a * a).sqrt();
    let coeff = p.m0 - ja.powf(-p.mu);
    let f = th * psi0(th) - coeff * psi1(th);
    let dpsi0 = -psi_prime(th) + psi_prime(-th);
    let dpsi1 = -psi_prime(-th) - psi_prime(th);
    let f_th = psi0(th) + th * dpsi0 - coeff * dpsi1;
    let f_a = -p.mu * a * ja.powf(-p.mu - 2.0) * psi1(th);
    let mut gx = vec![0.0; n];
    let mut gxi = vec![0.0; n];
    for d in 0..n {
        let ax = xi[d] / jxi;
        let thx = ax / jx - a * x[d] / (jx * jx * jx);
        let axi = x[d] / jxi - xdotxi * xi[d] / (jxi * jxi * jxi);
        let thxi = axi / jx;
        let rx = x[d] / (jx * jxi);
        let rxi = -jx * xi[d] / (jxi * jxi * jxi);
        // gradient of −λ, negated at the end
        gx[d] = -((f_th * thx + f_a * ax) * c + f * dc * rx);
        gxi[d] = -((f_th * thxi + f_a * axi) * c + f * dc * rxi);
    }
    (gx, gxi)
}

/// λ as a symbol field with its closed-form gradient.
pub fn escape_symbol(p: EscapeFunctionParams, dim: usize) -> SymbolField {
    SymbolField::new("lambda", dim, move |x, xi| Complex64::new(eval_lambda(x, xi, &p), 0.0))
        .with_gradient(move |x, xi| {
            let (gx, gxi) = lambda_gradient(x, xi, &p);
            (gx.into_iter().map(|v| Complex64::new(v, 0.0)).collect(), gxi.into_iter().map(|v| Complex64::new(v, 0.0)).collect())
        })
        .with_profile("S(1, g0)")
}

/// 2ξ·∇ₓθ in closed form.
pub fn h_theta(x: &[f64], xi: &[f64]) -> f64 {
    let (jx, jxi) = (jbr(x), jbr(xi));
    let th = dot(x, xi) / (jxi * jx);
    let xi2 = dot(xi, xi);
    2.0 / jx * (xi2 / jxi - th * dot(x, xi) / jx)
}

/// Tensor grid over (x, ξ) ∈ [−R, R]^{2n}.
///
/// For n = 2 the grid is the rotation-reduced slice x = (x₁, 0),
/// x₁ ∈ [0, R], ξ ∈ [−R, R]²: every quantity checked here depends only on
/// |x|, |ξ| and x·ξ, so the slice meets every rotation orbit of the window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseGrid {
    pub n: usize,
    pub radius: f64,
    pub spacing: f64,
}

pub const MIN_RADIUS: f64 = 10.0;
pub const MAX_SPACING: f64 = 0.25;

impl PhaseGrid {
    pub fn new(n: usize, radius: f64, spacing: f64) -> Result<Self> {
        let g = Self { n, radius, spacing };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=2).contains(&self.n) {
            return Err(invalid(format!("phase grids support n = 1 or 2, got {}", self.n)));
        }
        if !(self.radius >= MIN_RADIUS) {
            return Err(invalid(format!("phase grid radius must be at least {MIN_RADIUS}, got {}", self.radius)));
        }
        if !(self.spacing > 0.0 && self.spacing <= MAX_SPACING) {
            return Err(invalid(format!("phase grid spacing must lie in (0, {MAX_SPACING}], got {}", self.spacing)));
        }
        Ok(())
    }

    /// Axis samples of [−w, w] at the grid spacing (w ≤ R).
    pub fn axis(&self, window: f64) -> Vec<f64> {
        let k = (window / self.spacing).round() as i64;
        (-k..=k).map(|i| i as f64 * self.spacing).collect()
    }

    /// Visit every point with |coordinates| ≤ window.
    fn points(&self, window: f64) -> Vec<(Vec<f64>, Vec<f64>)> {
        let ax = self.axis(window);
        match self.n {
            1 => ax.iter().flat_map(|&x| ax.iter().map(move |&e| (vec![x], vec![e]))).collect(),
            _ => {
                let half: Vec<f64> = ax.iter().copied().filter(|v| *v >= 0.0).collect();
                half.iter()
                    .flat_map(|&x| {
                        let ax = &ax;
                        ax.iter().flat_map(move |&e1| ax.iter().map(move |&e2| (vec![x, 0.0], vec![e1, e2])))
                    })
                    .collect()
            }
        }
    }
}

/// Right-hand weight ⟨x⟩^{−1−μ}⟨X⟩ with ⟨X⟩ = (1 + |x|² + |ξ|²)^{1/2}.
pub fn comparison_weight(x: &[f64], xi: &[f64], mu: f64) -> f64 {
    let jx = jbr(x);
    let big = (1.0 + dot(x, x) + dot(xi, xi)).sqrt();
    jx.powf(-1.0 - mu) * big
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginSample {
    pub x: f64,
    pub xi: f64,
    pub bracket: f64,
    pub weight: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EscapeReport {
    pub c: f64,
    /// Certified constant (window extrapolation of C(R) plus one increment).
    pub big_c: f64,
    /// C over the nested windows R/4, R/2, R.
    pub window_constants: [f64; 3],
    pub c_asymptotic: f64,
    pub contraction_ratio: f64,
    pub min_location: (Vec<f64>, Vec<f64>),
    pub min_margin_certified: f64,
    pub pass: bool,
    /// Subsampled (x, ξ, L, R_c, L − cR_c + C) rows; x, ξ are first components.
    pub margin_map: Vec<MarginSample>,
}

pub const C_MIN_DEFAULT: f64 = 1e-3;
const CONTRACTION: f64 = 0.9;
const MAP_POINTS_PER_AXIS: usize = 201;

/// Bracket L = −H_{|ξ|²}λ = −2ξ·∇ₓλ and weight R_c on a grid window.
fn bracket_samples(sym: &SymbolField, mu: f64, grid: &PhaseGrid, window: f64) -> Vec<(Vec<f64>, Vec<f64>, f64, f64)> {
    grid.points(window)
        .into_par_iter()
        .map(|(x, xi)| {
            let l = -hamiltonian_derivative(sym, &x, &xi);
            let w = comparison_weight(&x, &xi, mu);
            (x, xi, l, w)
        })
        .collect()
}

pub fn check_escape_inequality(params: &EscapeFunctionParams, grid: &PhaseGrid) -> Result<EscapeReport> {
    params.validate()?;
    check_escape_inequality_for(&escape_symbol(*params, grid.n), params.mu, grid)
}

/// Certify −{|ξ|², λ} ≥ c⟨x⟩^{−1−μ}⟨X⟩ − C for a given symbol.
///
/// c is half the asymptotic ratio L/R_c over the far region R_c ≥ R/4
/// (capped at 1). C is measured on nested windows R/4, R/2, R; the check
/// passes when the window increments contract, and C is certified as the
/// geometric extrapolation of the increments plus one more increment.
pub fn check_escape_inequality_for(sym: &SymbolField, mu: f64, grid: &PhaseGrid) -> Result<EscapeReport> {
    grid.validate()?;
    let r = grid.radius;
    let samples = bracket_samples(sym, mu, grid, r);
    let c_asym = samples
        .iter()
        .filter(|s| s.3 >= r / 4.0)
        .map(|s| s.2 / s.3)
        .fold(f64::INFINITY, f64::min);
    let c_asym = if c_asym.is_finite() { c_asym } else { 0.0 };
    let c = (0.5 * c_asym).min(1.0).max(0.0);
    let window_min = |w: f64| {
        samples
            .iter()
            .filter(|s| s.0.iter().chain(&s.1).all(|v| v.abs() <= w + 1e-9))
            .map(|s| (s.2 - c * s.3, s))
            .fold((f64::INFINITY, None), |acc, (m, s)| if m < acc.0 { (m, Some(s)) } else { acc })
    };
    let windows = [r / 4.0, r / 2.0, r];
    let mins: Vec<_> = windows.iter().map(|&w| window_min(w)).collect();
    let cs = [-mins[0].0, -mins[1].0, -mins[2].0];
    let d1 = cs[1] - cs[0];
    let d2 = cs[2] - cs[1];
    let tiny = 1e-9 * (1.0 + cs[2].abs());
    let (contracting, ratio) = if d2 <= tiny {
        (true, 0.0)
    } else if d1 > 0.0 {
        let q = d2 / d1;
        (q <= CONTRACTION, q)
    } else {
        (false, f64::INFINITY)
    };
    let big_c = if d2 <= tiny {
        cs[2] + d2.max(0.0)
    } else if contracting {
        cs[2] + d2 * ratio / (1.0 - ratio) + d2
    } else {
        f64::INFINITY
    };
    let loc = mins[2].1.map(|s| (s.0.clone(), s.1.clone())).unwrap_or_default();
    let pass = c >= C_MIN_DEFAULT && contracting && big_c.is_finite();
    let margin_map = subsample_map(&samples, grid, c, if big_c.is_finite() { big_c } else { cs[2] });
    Ok(EscapeReport {
        c,
        big_c,
        window_constants: cs,
        c_asymptotic: c_asym,
        contraction_ratio: ratio,
        min_location: loc,
        min_margin_certified: -cs[2] + if big_c.is_finite() { big_c } else { cs[2] },
        pass,
        margin_map,
    })
}

fn subsample_map(samples: &[(Vec<f64>, Vec<f64>, f64, f64)], grid: &PhaseGrid, c: f64, big_c: f64) -> Vec<MarginSample> {
    let side = grid.axis(grid.radius).len();
    let stride = side.div_ceil(MAP_POINTS_PER_AXIS).max(1);
    let ax = grid.axis(grid.radius);
    let keep = |v: f64| {
        let i = ((v + grid.radius) / grid.spacing).round() as usize;
        i % stride == 0 || i + 1 == ax.len()
    };
    samples
        .iter()
        .filter(|s| {
            let n = s.0.len();
            if n == 1 {
                keep(s.0[0]) && keep(s.1[0])
            } else {
                keep(s.0[0]) && keep(s.1[0]) && s.1[1] == 0.0
            }
        })
        .map(|s| MarginSample { x: s.0[0], xi: s.1[0], bracket: s.2, weight: s.3, margin: s.2 - c * s.3 + big_c })
        .collect()
}

/// min over the grid of L − cR_c + C for a given pair (c, C).
pub fn evaluate_margin(params: &EscapeFunctionParams, grid: &PhaseGrid, c: f64, big_c: f64) -> Result<f64> {
    grid.validate()?;
    let sym = escape_symbol(*params, grid.n);
    Ok(bracket_samples(&sym, params.mu, grid, grid.radius)
        .iter()
        .map(|s| s.2 - c * s.3 + big_c)
        .fold(f64::INFINITY, f64::min))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HThetaReport {
    pub min_margin: f64,
    pub checked_points: usize,
    pub excluded_points: usize,
    pub min_location: (Vec<f64>, Vec<f64>),
}

/// Verify 2ξ·∇ₓθ ≥ ⟨ξ⟩/⟨x⟩ − 2 at grid points where ψ₀(θ) > 0.
pub fn check_htheta_inequality(params: &EscapeFunctionParams, grid: &PhaseGrid) -> Result<HThetaReport> {
    params.validate()?;
    grid.validate()?;
    let rows: Vec<Option<(f64, Vec<f64>, Vec<f64>)>> = grid
        .points(grid.radius)
        .into_par_iter()
        .map(|(x, xi)| {
            let (jx, jxi) = (jbr(&x), jbr(&xi));
            let th = dot(&x, &xi) / (jxi * jx);
            if psi0(th) <= 0.0 {
                return None;
            }
            Some((h_theta(&x, &xi) - (jxi / jx - 2.0), x, xi))
        })
        .collect();
    let excluded = rows.iter().filter(|r| r.is_none()).count();
    let mut best = (f64::INFINITY, (Vec::new(), Vec::new()));
    for (m, x, xi) in rows.iter().flatten() {
        if *m < best.0 {
            best = (*m, (x.clone(), xi.clone()));
        }
    }
    Ok(HThetaReport { min_margin: best.0, checked_points: rows.len() - excluded, excluded_points: excluded, min_location: best.1 })
}
