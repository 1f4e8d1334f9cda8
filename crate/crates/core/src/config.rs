//! Experiment configuration: strict TOML schema, dotted-key overrides and
//! the fully materialized snapshot that identifies a run.

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::enclosure::{EnclosureConfig, EnclosureModel};
use crate::error::{Error, Result};
use crate::norms::{geometric_ladder, SmoothingWeight};
use crate::phase_space::EscapeFunctionParams;
use crate::potential::PotentialSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Oscillator,
    Landau,
    Pauli,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub kind: ModelKind,
    /// Space dimension of the oscillator.
    pub n: usize,
    pub b0: f64,
    /// Oscillator truncation used by `spectrum`.
    pub modes_per_axis: usize,
    /// Landau truncation used by `spectrum`.
    pub max_level: usize,
    pub max_angular: usize,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self { kind: ModelKind::Oscillator, n: 2, b0: 1.0, modes_per_axis: 16, max_level: 8, max_angular: 8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PotentialsSection {
    pub w: PotentialSpec,
    pub a1: PotentialSpec,
    pub v1: PotentialSpec,
}

impl Default for PotentialsSection {
    fn default() -> Self {
        Self { w: PotentialSpec::zero(), a1: PotentialSpec::zero(), v1: PotentialSpec::zero() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub tau: Vec<f64>,
    pub sizes: Vec<usize>,
    pub r: f64,
    pub a: f64,
    pub scale_v1: bool,
    pub scale_a1: bool,
    pub gate: f64,
    pub mu: f64,
    pub delta: f64,
    pub delta_prime: f64,
    pub norm_radius: f64,
    pub norm_order: usize,
    /// ε ladder of the A₁ probe (run when A₁ is nonzero).
    pub epsilon: Vec<f64>,
    pub include_a1_squared: bool,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            tau: vec![0.5, 1.0, 2.0, 4.0, 8.0],
            sizes: vec![16, 20, 24],
            r: 2.0,
            a: 0.5,
            scale_v1: true,
            scale_a1: false,
            gate: crate::eigen::DEFAULT_GATE,
            mu: 0.5,
            delta: 0.5,
            delta_prime: 0.5,
            norm_radius: 12.0,
            norm_order: 8,
            epsilon: vec![1e-3, 3e-3, 1e-2, 3e-2, 1e-1],
            include_a1_squared: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NormsSection {
    pub q: f64,
    pub modes_per_axis: usize,
    pub re_z: f64,
    pub im_z: Vec<f64>,
    pub k_min: usize,
    pub k_max: usize,
    pub weight: SmoothingWeight,
}

impl Default for NormsSection {
    fn default() -> Self {
        Self {
            q: 4.0,
            modes_per_axis: 32,
            re_z: 32.0,
            im_z: geometric_ladder(1.0, 32.0, std::f64::consts::SQRT_2),
            k_min: 1,
            k_max: 20,
            weight: SmoothingWeight::Standard { mu: 0.5 },
        }
    }
}

/// Σ c x^p ξ^q with real coefficients.
pub type PolyTerms = Vec<(f64, i32, i32)>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhaseSpaceSection {
    pub n: usize,
    pub m0: f64,
    pub mu: f64,
    pub delta: f64,
    pub radius: f64,
    pub spacing: f64,
    pub weyl_n: usize,
    pub weyl_radius: f64,
    pub garding_symbol: PolyTerms,
    pub moyal_a: PolyTerms,
    pub moyal_b: PolyTerms,
}

impl Default for PhaseSpaceSection {
    fn default() -> Self {
        let p = EscapeFunctionParams::default();
        Self {
            n: 1,
            m0: p.m0,
            mu: p.mu,
            delta: p.delta,
            radius: 50.0,
            spacing: 0.1,
            weyl_n: 256,
            weyl_radius: 12.0,
            // (x² + ξ² − 1)²
            garding_symbol: vec![(1.0, 4, 0), (2.0, 2, 2), (1.0, 0, 4), (-2.0, 2, 0), (-2.0, 0, 2), (1.0, 0, 0)],
            moyal_a: vec![(1.0, 1, 0)],
            moyal_b: vec![(1.0, 0, 1)],
        }
    }
}

impl PhaseSpaceSection {
    pub fn escape_params(&self) -> EscapeFunctionParams {
        EscapeFunctionParams { m0: self.m0, mu: self.mu, delta: self.delta }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: "results".into() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub model: ModelSection,
    pub potentials: PotentialsSection,
    pub sweep: SweepSection,
    pub norms: NormsSection,
    pub phase_space: PhaseSpaceSection,
    pub output: OutputSection,
}

fn config_error(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Config { path: path.into(), message: message.into() }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self> {
        let mut value: toml::Value = if text.trim().is_empty() {
            toml::Value::Table(Default::default())
        } else {
            toml::from_str(text).map_err(|e| config_error("<document>", e.to_string()))?
        };
        for o in overrides {
            apply_override(&mut value, o)?;
        }
        from_value(value)
    }

    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p).map_err(|e| config_error(p.display().to_string(), e.to_string()))?,
            None => String::new(),
        };
        Self::from_toml_str(&text, overrides)
    }

    /// Snapshot with every default written out. The output location is left
    /// out so the same experiment gets the same id wherever it is written.
    pub fn materialized(&self) -> Result<String> {
        let mut value = toml::Value::try_from(self).map_err(|e| config_error("<document>", e.to_string()))?;
        if let Some(t) = value.as_table_mut() {
            t.remove("output");
        }
        toml::to_string(&value).map_err(|e| config_error("<document>", e.to_string()))
    }

    /// First 16 hex digits of the snapshot digest.
    pub fn run_id(&self) -> Result<String> {
        Ok(crate::output::sha256_hex(self.materialized()?.as_bytes())[..16].to_string())
    }

    pub fn enclosure(&self) -> EnclosureConfig {
        let m = &self.model;
        let model = match m.kind {
            ModelKind::Oscillator => EnclosureModel::Oscillator { n: m.n },
            ModelKind::Landau => EnclosureModel::Landau { b0: m.b0 },
            ModelKind::Pauli => EnclosureModel::Pauli { b0: m.b0 },
        };
        let s = &self.sweep;
        EnclosureConfig {
            model,
            w: self.potentials.w.clone(),
            a1: self.potentials.a1.clone(),
            v1: self.potentials.v1.clone(),
            r: s.r,
            a: s.a,
            tau: s.tau.clone(),
            scale_v1: s.scale_v1,
            scale_a1: s.scale_a1,
            sizes: s.sizes.clone(),
            gate: s.gate,
            mu: s.mu,
            delta: s.delta,
            delta_prime: s.delta_prime,
            norm_radius: s.norm_radius,
            norm_order: s.norm_order,
        }
    }
}

fn from_value(value: toml::Value) -> Result<ExperimentConfig> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        let msg = e.inner().to_string();
        let msg = msg.lines().next().unwrap_or_default().to_string();
        config_error(if path == "." { "<document>".into() } else { path }, msg)
    })
}

/// Apply `a.b.c=value`; the value is parsed as TOML and kept as a string
/// when it does not parse.
pub fn apply_override(root: &mut toml::Value, spec: &str) -> Result<()> {
    let (key, raw) = spec.split_once('=').ok_or_else(|| config_error(spec, "override must look like key=value"))?;
    let key = key.trim();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(config_error(key, "malformed key path"));
    }
    let parsed = toml::from_str::<toml::Table>(&format!("v = {}", raw.trim()))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.trim().to_string()));
    let parts: Vec<&str> = key.split('.').collect();
    let mut node = root;
    for (i, part) in parts.iter().enumerate() {
        let table = node.as_table_mut().ok_or_else(|| config_error(parts[..i].join("."), "not a table"))?;
        if i + 1 == parts.len() {
            table.insert(part.to_string(), parsed);
            return Ok(());
        }
        node = table.entry(part.to_string()).or_insert_with(|| toml::Value::Table(Default::default()));
    }
    unreachable!("key path has at least one part")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        assert_eq!(ExperimentConfig::from_toml_str("", &[]).unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn unknown_key_names_its_path() {
        let err = ExperimentConfig::from_toml_str("[model]\nbogus = 1\n", &[]).unwrap_err();
        match err {
            Error::Config { path, message } => {
                assert!(path.starts_with("model"), "{path}");
                assert!(message.contains("bogus"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn overrides_reach_nested_keys() {
        let c = ExperimentConfig::from_toml_str(
            "",
            &["model.n=1".into(), "norms.im_z=[1.0, 2.0]".into(), "model.kind=landau".into()],
        )
        .unwrap();
        assert_eq!(c.model.n, 1);
        assert_eq!(c.norms.im_z, vec![1.0, 2.0]);
        assert_eq!(c.model.kind, ModelKind::Landau);
    }

    #[test]
    fn snapshot_round_trips() {
        let c = ExperimentConfig::from_toml_str("seed = 9\n[potentials.v1]\nfamily = \"gaussian_bump\"\namplitude = [0.0, 1.0]\n", &[])
            .unwrap();
        let again = ExperimentConfig::from_toml_str(&c.materialized().unwrap(), &[]).unwrap();
        assert_eq!(c, again);
        assert_eq!(c.run_id().unwrap(), again.run_id().unwrap());
    }
}
