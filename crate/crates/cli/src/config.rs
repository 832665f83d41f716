//! Experiment configuration: JSON schema, validation, canonical form and
//! a stable content hash carried into every artifact.

use serde::{Deserialize, Serialize};
use std::path::PathBuf;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub struct ExperimentConfig {
    pub surface: SurfaceSpec,
    pub generators: GeneratorSpec,
    pub subcommand: Subcommand,
    /// steps per trial
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// histogram bins per angle (orbit subcommand)
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum SurfaceSpec {
    /// 27 coefficients of the (2,2,2) tensor, index order
    /// (i, j, k) -> 9i + 3j + k
    Wehler { coeffs: Vec<f64> },
    Pentagon { lengths: [f64; 5] },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub words: Vec<Vec<usize>>,
    pub weights: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Subcommand {
    Orbit,
    Lyapunov,
    Cohomology,
    Classify,
    Boundary,
    StableDirs,
    Twist,
    Equidist,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, String> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| format!("config error: {e}"))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), String> {
        if self.n == 0 {
            return Err("config error: n must be positive".into());
        }
        if self.trials == 0 {
            return Err("config error: trials must be positive".into());
        }
        if self.generators.words.is_empty()
            || self.generators.words.len() != self.generators.weights.len()
        {
            return Err("config error: generators need equally many words and weights".into());
        }
        if self.generators.weights.iter().any(|&w| !(w > 0.0)) {
            return Err("config error: weights must be positive".into());
        }
        if let SurfaceSpec::Wehler { coeffs } = &self.surface {
            if coeffs.len() != 27 {
                return Err(format!(
                    "config error: wehler surface needs 27 coefficients, got {}",
                    coeffs.len()
                ));
            }
        }
        let letters = match self.surface {
            SurfaceSpec::Wehler { .. } => 3,
            SurfaceSpec::Pentagon { .. } => 5,
        };
        for w in &self.generators.words {
            if w.is_empty() {
                return Err("config error: empty generator word".into());
            }
            if let Some(&bad) = w.iter().find(|&&k| k >= letters) {
                return Err(format!(
                    "config error: letter {bad} out of range for this surface (< {letters})"
                ));
            }
        }
        Ok(())
    }

    /// Canonical serialized form (normalized weights included), used for
    /// the round-trip invariant and the artifact hash.
    pub fn canonical(&self) -> ExperimentConfig {
        let mut c = self.clone();
        let total: f64 = c.generators.weights.iter().sum();
        for w in &mut c.generators.weights {
            *w /= total;
        }
        c
    }

    pub fn weights_normalized(&self) -> bool {
        (self.generators.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12
    }

    /// FNV-1a hash of the canonical JSON, as fixed-width hex.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(&self.canonical()).expect("config serializes");
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in text.as_bytes() {
            h ^= u64::from(*b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        format!("{h:016x}")
    }
}
