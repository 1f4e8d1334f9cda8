use num_complex::Complex64;
use std::fmt;
use std::sync::Arc;

type ValueFn = dyn Fn(&[f64], &[f64]) -> Complex64 + Send + Sync;
type GradFn = dyn Fn(&[f64], &[f64]) -> (Vec<Complex64>, Vec<Complex64>) + Send + Sync;

/// Closed-form phase-space function a(x, ξ) with an optional closed-form
/// gradient (∇ₓa, ∇_ξa).
#[derive(Clone)]
pub struct SymbolField {
    pub name: String,
    pub dim: usize,
    /// Symbol class the field is meant to represent; informational only.
    pub weight_profile: String,
    value: Arc<ValueFn>,
    gradient: Option<Arc<GradFn>>,
}

impl fmt::Debug for SymbolField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SymbolField")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("weight_profile", &self.weight_profile)
            .field("closed_gradient", &self.gradient.is_some())
            .finish()
    }
}

const FD_STEP: f64 = 1e-5;

impl SymbolField {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        value: impl Fn(&[f64], &[f64]) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        Self { name: name.into(), dim, weight_profile: String::new(), value: Arc::new(value), gradient: None }
    }

    pub fn with_gradient(
        mut self,
        gradient: impl Fn(&[f64], &[f64]) -> (Vec<Complex64>, Vec<Complex64>) + Send + Sync + 'static,
    ) -> Self {
        self.gradient = Some(Arc::new(gradient));
        self
    }

    pub fn with_profile(mut self, profile: impl Into<String>) -> Self {
        self.weight_profile = profile.into();
        self
    }

    pub fn has_closed_gradient(&self) -> bool {
        self.gradient.is_some()
    }

    pub fn eval(&self, x: &[f64], xi: &[f64]) -> Complex64 {
        (self.value)(x, xi)
    }

    /// Closed-form gradient when declared, central differences otherwise.
    pub fn gradient(&self, x: &[f64], xi: &[f64]) -> (Vec<Complex64>, Vec<Complex64>) {
        match &self.gradient {
            Some(g) => g(x, xi),
            None => self.fd_gradient(x, xi),
        }
    }

    pub fn fd_gradient(&self, x: &[f64], xi: &[f64]) -> (Vec<Complex64>, Vec<Complex64>) {
        let diff = |which: usize, d: usize| {
            let h = FD_STEP * (1.0 + if which == 0 { x[d].abs() } else { xi[d].abs() });
            let (mut xp, mut xm, mut ep, mut em) = (x.to_vec(), x.to_vec(), xi.to_vec(), xi.to_vec());
            if which == 0 {
                xp[d] += h;
                xm[d] -= h;
            } else {
                ep[d] += h;
                em[d] -= h;
            }
            (self.eval(&xp, &ep) - self.eval(&xm, &em)) / (2.0 * h)
        };
        ((0..x.len()).map(|d| diff(0, d)).collect(), (0..xi.len()).map(|d| diff(1, d)).collect())
    }

    /// Largest relative gap between the declared gradient and central
    /// differences over the given points; `None` without a declared gradient.
    pub fn gradient_defect(&self, points: &[(Vec<f64>, Vec<f64>)]) -> Option<f64> {
        let g = self.gradient.as_ref()?;
        let mut worst: f64 = 0.0;
        for (x, xi) in points {
            let (ax, axi) = g(x, xi);
            let (fx, fxi) = self.fd_gradient(x, xi);
            for (a, f) in ax.iter().chain(&axi).zip(fx.iter().chain(&fxi)) {
                worst = worst.max((a - f).norm() / a.norm().max(f.norm()).max(1.0));
            }
        }
        Some(worst)
    }

    pub fn constant(c: Complex64, dim: usize) -> Self {
        let z = vec![Complex64::new(0.0, 0.0); dim];
        let z2 = z.clone();
        Self::new(format!("const({c})"), dim, move |_, _| c).with_gradient(move |_, _| (z.clone(), z2.clone()))
    }

    /// One-dimensional polynomial Σ c x^p ξ^q with exact gradient.
    pub fn polynomial_1d(name: impl Into<String>, terms: Vec<(Complex64, i32, i32)>) -> Self {
        let t1 = terms.clone();
        let value = move |x: &[f64], xi: &[f64]| t1.iter().map(|(c, p, q)| c * x[0].powi(*p) * xi[0].powi(*q)).sum();
        let t2 = terms;
        let grad = move |x: &[f64], xi: &[f64]| {
            let mut gx = Complex64::new(0.0, 0.0);
            let mut gxi = Complex64::new(0.0, 0.0);
            for (c, p, q) in &t2 {
                if *p > 0 {
                    gx += c * *p as f64 * x[0].powi(p - 1) * xi[0].powi(*q);
                }
                if *q > 0 {
                    gxi += c * *q as f64 * x[0].powi(*p) * xi[0].powi(q - 1);
                }
            }
            (vec![gx], vec![gxi])
        };
        Self::new(name, 1, value).with_gradient(grad)
    }

    pub fn add(&self, other: &SymbolField) -> SymbolField {
        let (a, b) = (self.clone(), other.clone());
        let (ga, gb) = (self.clone(), other.clone());
        let out = SymbolField::new(format!("({} + {})", self.name, other.name), self.dim, move |x, xi| {
            a.eval(x, xi) + b.eval(x, xi)
        });
        if self.has_closed_gradient() && other.has_closed_gradient() {
            out.with_gradient(move |x, xi| {
                let (ax, axi) = ga.gradient(x, xi);
                let (bx, bxi) = gb.gradient(x, xi);
                (ax.iter().zip(&bx).map(|(u, v)| u + v).collect(), axi.iter().zip(&bxi).map(|(u, v)| u + v).collect())
            })
        } else {
            out
        }
    }

    pub fn scale(&self, c: Complex64) -> SymbolField {
        let a = self.clone();
        let ga = self.clone();
        let out = SymbolField::new(format!("{c}*{}", self.name), self.dim, move |x, xi| c * a.eval(x, xi));
        if self.has_closed_gradient() {
            out.with_gradient(move |x, xi| {
                let (gx, gxi) = ga.gradient(x, xi);
                (gx.iter().map(|v| c * v).collect(), gxi.iter().map(|v| c * v).collect())
            })
        } else {
            out
        }
    }

    /// Pointwise product ab (gradient by the product rule).
    pub fn mul(&self, other: &SymbolField) -> SymbolField {
        let (a, b) = (self.clone(), other.clone());
        let (ga, gb) = (self.clone(), other.clone());
        let out = SymbolField::new(format!("({} * {})", self.name, other.name), self.dim, move |x, xi| {
            a.eval(x, xi) * b.eval(x, xi)
        });
        if self.has_closed_gradient() && other.has_closed_gradient() {
            out.with_gradient(move |x, xi| {
                let (va, vb) = (ga.eval(x, xi), gb.eval(x, xi));
                let (ax, axi) = ga.gradient(x, xi);
                let (bx, bxi) = gb.gradient(x, xi);
                (
                    ax.iter().zip(&bx).map(|(u, v)| u * vb + va * v).collect(),
                    axi.iter().zip(&bxi).map(|(u, v)| u * vb + va * v).collect(),
                )
            })
        } else {
            out
        }
    }

    /// Rescaled symbol a(x/k, ξ/k).
    pub fn dilate(&self, k: f64) -> SymbolField {
        let a = self.clone();
        let ga = self.clone();
        let shrink = move |v: &[f64]| v.iter().map(|t| t / k).collect::<Vec<_>>();
        let out = SymbolField::new(format!("{}(·/{k})", self.name), self.dim, move |x, xi| a.eval(&shrink(x), &shrink(xi)));
        if self.has_closed_gradient() {
            out.with_gradient(move |x, xi| {
                let xs: Vec<f64> = x.iter().map(|t| t / k).collect();
                let es: Vec<f64> = xi.iter().map(|t| t / k).collect();
                let (gx, gxi) = ga.gradient(&xs, &es);
                (gx.iter().map(|v| v / k).collect(), gxi.iter().map(|v| v / k).collect())
            })
        } else {
            out
        }
    }
}

/// Poisson bracket {a, b} = ∂_ξa·∂ₓb − ∂ₓa·∂_ξb at a point.
pub fn poisson_bracket(a: &SymbolField, b: &SymbolField, x: &[f64], xi: &[f64]) -> Complex64 {
    let (ax, axi) = a.gradient(x, xi);
    let (bx, bxi) = b.gradient(x, xi);
    let mut s = Complex64::new(0.0, 0.0);
    for d in 0..x.len() {
        s += axi[d] * bx[d] - ax[d] * bxi[d];
    }
    s
}

/// Two-term Moyal product ab + {a, b}/(2i) as a symbol.
pub fn moyal_two_term(a: &SymbolField, b: &SymbolField) -> SymbolField {
    let (a, b) = (a.clone(), b.clone());
    let half_over_i = Complex64::new(0.0, -0.5);
    let name = format!("{}#{}", a.name, b.name);
    let dim = a.dim;
    SymbolField::new(name, dim, move |x, xi| a.eval(x, xi) * b.eval(x, xi) + half_over_i * poisson_bracket(&a, &b, x, xi))
}

/// H_{|ξ|²} a = 2ξ·∇ₓa.
pub fn hamiltonian_derivative(sym: &SymbolField, x: &[f64], xi: &[f64]) -> f64 {
    let (gx, _) = sym.gradient(x, xi);
    2.0 * xi.iter().zip(&gx).map(|(e, g)| e * g.re).sum::<f64>()
}
