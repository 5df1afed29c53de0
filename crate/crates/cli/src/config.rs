//! Experiment configuration: one JSON document per run, fully validated
//! before any computation starts.

use std::fmt;

use serde::{Deserialize, Serialize};

use pcsft::ensemble::EnsembleSpec;
use pcsft::gridfield::GridSpec;
use pcsft::hilbert::CMatrix;
use pcsft::Tolerances;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum CommandKind {
    Verify,
    Estimate,
    Audit,
    Gridfield,
}

impl fmt::Display for CommandKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CommandKind::Verify => "verify",
            CommandKind::Estimate => "estimate",
            CommandKind::Audit => "audit",
            CommandKind::Gridfield => "gridfield",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
}

/// A quadratic form by its generator matrix, or the field energy shorthand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<CMatrix>,
    /// `true` selects `f(φ) = ||φ||²`.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub energy: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairConfig {
    pub ensemble: EnsembleSpec,
    pub form: FormConfig,
    /// Claimed density operator for the ensemble, checked against the computed one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<CMatrix>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomDensities {
    pub dims: Vec<usize>,
    #[serde(default = "one")]
    pub per_dim: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RefinementConfig {
    pub lo: f64,
    pub hi: f64,
    pub points: Vec<usize>,
}

impl Default for RefinementConfig {
    fn default() -> Self {
        Self {
            lo: 0.0,
            hi: 1.0,
            points: vec![51, 101, 201, 401, 801],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomFieldConfig {
    pub points: usize,
    pub samples: usize,
}

impl Default for RandomFieldConfig {
    fn default() -> Self {
        Self {
            points: 11,
            samples: 20_000,
        }
    }
}

/// The whole run description. Unknown keys are rejected; defaults are
/// resolved by [`ExperimentConfig::resolve`] and the resolved form is what
/// gets embedded in outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<CommandKind>,
    #[serde(default)]
    pub seed: u64,
    /// Worker threads; never affects results and is kept out of provenance.
    #[serde(default, skip_serializing)]
    pub workers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputConfig>,
    #[serde(default)]
    pub tolerances: Tolerances,

    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pairs: Vec<PairConfig>,
    #[serde(default, rename = "N", skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, rename = "N_list", skip_serializing_if = "Option::is_none")]
    pub n_list: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replications: Option<usize>,

    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub densities: Vec<CMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random_densities: Option<RandomDensities>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refinement: Option<RefinementConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random_field: Option<RandomFieldConfig>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Invalid(format!("config: {e}")))
    }

    /// Applies command-line overrides and fills defaults for `command`.
    pub fn resolve(mut self, command: CommandKind, seed: Option<u64>, format: Option<Format>) -> Result<Self, CliError> {
        if let Some(c) = self.command {
            if c != command {
                return Err(CliError::Invalid(format!("config is for `{c}`, invoked as `{command}`")));
            }
        }
        self.command = Some(command);
        if let Some(s) = seed {
            self.seed = s;
        }
        if let Some(f) = format {
            self.output.get_or_insert_with(Default::default).format = Some(f);
        }
        if !self.tolerances.is_valid() {
            return Err(CliError::Invalid("tolerances must be finite and positive".into()));
        }
        match command {
            CommandKind::Audit => {
                self.scale.get_or_insert(1.0);
            }
            CommandKind::Gridfield => {
                self.refinement.get_or_insert_with(Default::default);
                self.random_field.get_or_insert_with(Default::default);
            }
            CommandKind::Estimate if self.n_list.is_some() => {
                self.replications.get_or_insert(1);
            }
            _ => {}
        }
        Ok(self)
    }

    pub fn format(&self) -> Format {
        self.output.as_ref().and_then(|o| o.format).unwrap_or_default()
    }

    pub fn output_path(&self) -> Option<&str> {
        self.output.as_ref().and_then(|o| o.path.as_deref())
    }
}
