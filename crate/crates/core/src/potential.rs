//! Closed-form potential families: scalar profiles and vector potentials
//! built on them, with exact gradients, divergences and curls.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Complex amplitude, written in configs either as a real number or as
/// a `[re, im]` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "AmplitudeRepr", into = "[f64; 2]")]
pub struct Amplitude(pub Complex64);

#[derive(Deserialize)]
#[serde(untagged)]
enum AmplitudeRepr {
    Real(f64),
    Pair([f64; 2]),
}

impl From<AmplitudeRepr> for Amplitude {
    fn from(r: AmplitudeRepr) -> Self {
        match r {
            AmplitudeRepr::Real(v) => Amplitude(Complex64::new(v, 0.0)),
            AmplitudeRepr::Pair([re, im]) => Amplitude(Complex64::new(re, im)),
        }
    }
}

impl From<Amplitude> for [f64; 2] {
    fn from(a: Amplitude) -> Self {
        [a.0.re, a.0.im]
    }
}

impl Default for Amplitude {
    fn default() -> Self {
        Amplitude(Complex64::new(1.0, 0.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Zero,
    /// A exp(−|x − c|²/w²)
    GaussianBump,
    /// A ⟨x − c⟩^{−s}
    PolynomialDecay,
    /// A exp(1 − 1/(1 − |x − c|²/w²)) inside the ball of radius w
    CompactBump,
    /// A on the closed ball of radius w, 0 outside
    ConstantOnBall,
    /// A everywhere (test family)
    Constant,
    /// A |x − c|² (test family)
    Harmonic,
}

/// How a vector potential is built from its scalar profile f.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum VectorStructure {
    /// A(x) = f(x) e for a fixed direction e.
    Directed { direction: Vec<f64> },
    /// A(x) = f(x) (−(y − c_y), x − c_x), two dimensions only.
    Rotational,
}

fn default_width() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    pub family: Family,
    #[serde(default)]
    pub amplitude: Amplitude,
    /// Empty means the origin.
    #[serde(default)]
    pub center: Vec<f64>,
    #[serde(default = "default_width")]
    pub width: f64,
    /// Decay exponent for `polynomial_decay`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vector: Option<VectorStructure>,
}

impl PotentialSpec {
    pub fn zero() -> Self {
        Self::scalar(Family::Zero, Complex64::new(0.0, 0.0))
    }

    pub fn scalar(family: Family, amplitude: Complex64) -> Self {
        Self {
            family,
            amplitude: Amplitude(amplitude),
            center: Vec::new(),
            width: 1.0,
            s: None,
            vector: None,
        }
    }

    pub fn gaussian(amplitude: Complex64, width: f64) -> Self {
        Self { width, ..Self::scalar(Family::GaussianBump, amplitude) }
    }

    pub fn polynomial_decay(amplitude: Complex64, s: f64) -> Self {
        Self { s: Some(s), ..Self::scalar(Family::PolynomialDecay, amplitude) }
    }

    pub fn with_center(mut self, center: Vec<f64>) -> Self {
        self.center = center;
        self
    }

    pub fn with_vector(mut self, vector: VectorStructure) -> Self {
        self.vector = Some(vector);
        self
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        let mut out = self.clone();
        out.amplitude = Amplitude(self.amplitude.0 * factor);
        out
    }

    pub fn is_vector(&self) -> bool {
        self.vector.is_some()
    }

    pub fn is_zero(&self) -> bool {
        self.family == Family::Zero || self.amplitude.0 == Complex64::new(0.0, 0.0)
    }

    pub fn is_real(&self) -> bool {
        self.amplitude.0.im == 0.0
    }

    pub fn family_name(&self) -> &'static str {
        match self.family {
            Family::Zero => "zero",
            Family::GaussianBump => "gaussian_bump",
            Family::PolynomialDecay => "polynomial_decay",
            Family::CompactBump => "compact_bump",
            Family::ConstantOnBall => "constant_on_ball",
            Family::Constant => "constant",
            Family::Harmonic => "harmonic",
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if !(self.width.is_finite() && self.width > 0.0) {
            return Err(invalid(format!("width must be positive, got {}", self.width)));
        }
        if !self.center.is_empty() && self.center.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: self.center.len() });
        }
        if self.family == Family::PolynomialDecay {
            match self.s {
                Some(s) if s > 0.0 && s.is_finite() => {}
                other => return Err(invalid(format!("polynomial_decay requires s > 0, got {other:?}"))),
            }
        }
        match &self.vector {
            Some(VectorStructure::Directed { direction }) if direction.len() != dim => {
                return Err(Error::DimensionMismatch { expected: dim, found: direction.len() })
            }
            Some(VectorStructure::Rotational) if dim != 2 => {
                return Err(invalid("rotational vector potentials need two dimensions"))
            }
            _ => {}
        }
        Ok(())
    }

    fn shifted(&self, x: &[f64]) -> Vec<f64> {
        if self.center.is_empty() {
            x.to_vec()
        } else {
            x.iter().zip(&self.center).map(|(a, c)| a - c).collect()
        }
    }

    /// Scalar profile f(x) (amplitude included).
    pub fn profile(&self, x: &[f64]) -> Complex64 {
        let y = self.shifted(x);
        let q: f64 = y.iter().map(|v| v * v).sum();
        let a = self.amplitude.0;
        let w2 = self.width * self.width;
        match self.family {
            Family::Zero => Complex64::new(0.0, 0.0),
            Family::GaussianBump => a * (-q / w2).exp(),
            Family::PolynomialDecay => a * (1.0 + q).powf(-0.5 * self.s.unwrap_or(1.0)),
            Family::CompactBump => {
                let t = q / w2;
                if t < 1.0 {
                    a * (1.0 - 1.0 / (1.0 - t)).exp()
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }
            Family::ConstantOnBall => {
                if q <= w2 {
                    a
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }
            Family::Constant => a,
            Family::Harmonic => a * q,
        }
    }

    /// Closed-form gradient of the profile, `None` for discontinuous families.
    pub fn profile_gradient(&self, x: &[f64]) -> Option<Vec<Complex64>> {
        let y = self.shifted(x);
        let q: f64 = y.iter().map(|v| v * v).sum();
        let a = self.amplitude.0;
        let w2 = self.width * self.width;
        let radial: Complex64 = match self.family {
            Family::Zero | Family::Constant => Complex64::new(0.0, 0.0),
            Family::GaussianBump => a * (-q / w2).exp() * (-2.0 / w2),
            Family::PolynomialDecay => {
                let s = self.s.unwrap_or(1.0);
                a * (-s) * (1.0 + q).powf(-0.5 * s - 1.0)
            }
            Family::CompactBump => {
                let t = q / w2;
                if t < 1.0 {
                    let g = 1.0 - t;
                    a * (1.0 - 1.0 / g).exp() * (-1.0 / (g * g)) * (2.0 / w2)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }
            Family::ConstantOnBall => return None,
            Family::Harmonic => a * 2.0,
        };
        // every family is radial in y, so ∇f = radial·y
        Some(y.iter().map(|v| radial * v).collect())
    }

    /// Scalar value; rejects vector families.
    pub fn scalar_value(&self, x: &[f64]) -> Result<Complex64> {
        if self.is_vector() {
            return Err(Error::NotScalar(self.family_name().into()));
        }
        Ok(self.profile(x))
    }

    /// Vector potential components A(x).
    pub fn vector_value(&self, x: &[f64]) -> Result<Vec<Complex64>> {
        let f = self.profile(x);
        match &self.vector {
            None => Err(invalid(format!("`{}` has no vector structure", self.family_name()))),
            Some(VectorStructure::Directed { direction }) => Ok(direction.iter().map(|e| f * e).collect()),
            Some(VectorStructure::Rotational) => {
                let y = self.shifted(x);
                Ok(vec![-f * y[1], f * y[0]])
            }
        }
    }

    /// Jacobian J[i][d] = ∂_i A_d.
    pub fn vector_jacobian(&self, x: &[f64]) -> Result<Vec<Vec<Complex64>>> {
        let g = self
            .profile_gradient(x)
            .ok_or_else(|| Error::MissingDivergence(self.family_name().into()))?;
        match &self.vector {
            None => Err(invalid(format!("`{}` has no vector structure", self.family_name()))),
            Some(VectorStructure::Directed { direction }) => {
                Ok(g.iter().map(|gi| direction.iter().map(|e| gi * e).collect()).collect())
            }
            Some(VectorStructure::Rotational) => {
                let f = self.profile(x);
                let y = self.shifted(x);
                // A = f (−y₂, y₁)
                Ok(vec![vec![-g[0] * y[1], g[0] * y[0] + f], vec![-g[1] * y[1] - f, g[1] * y[0]]])
            }
        }
    }

    /// ∇·A.
    pub fn divergence(&self, x: &[f64]) -> Result<Complex64> {
        let j = self.vector_jacobian(x)?;
        Ok((0..j.len()).map(|i| j[i][i]).sum())
    }

    /// Two-dimensional curl ∂₁A₂ − ∂₂A₁.
    pub fn curl(&self, x: &[f64]) -> Result<Complex64> {
        let j = self.vector_jacobian(x)?;
        if j.len() != 2 {
            return Err(invalid("curl is only defined here in two dimensions"));
        }
        Ok(j[0][1] - j[1][0])
    }
}
