use std::path::{Path, PathBuf};

use invdisc::diffapprox::{ExpansionOptions, FirstApprox, FormVariant};
use invdisc::{ElementSampler, InitialData, SchemeSpec};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// One experiment per config file, selected by the `experiment` field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "snake_case")]
pub enum Experiment {
    Solve(SolveConfig),
    Compare(CompareConfig),
    Diffapprox(DiffapproxConfig),
    Invariance(InvarianceConfig),
}

fn default_reference_tol() -> f64 {
    1e-13
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    pub scheme: SchemeSpec,
    pub initial: InitialData,
    /// Spacing of the three seed points.
    pub eps: f64,
    pub steps: usize,
    #[serde(default = "default_reference_tol")]
    pub reference_tol: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    pub invariant: SchemeSpec,
    /// Defaults to collocation of the invariant scheme's equation with step `eps`.
    #[serde(default)]
    pub standard: Option<SchemeSpec>,
    pub initial: InitialData,
    pub eps: f64,
    pub steps: usize,
    #[serde(default = "default_reference_tol")]
    pub reference_tol: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

/// Expansion point; `y'''` follows from the equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JetPoint {
    pub x: f64,
    pub y: f64,
    pub y1: f64,
    pub y2: f64,
}

fn unit_alpha() -> [f64; 3] {
    [1.0; 3]
}

fn default_threshold() -> f64 {
    1e-6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiffapproxConfig {
    pub form: FirstApprox,
    pub jet: JetPoint,
    #[serde(default = "unit_alpha")]
    pub alpha: [f64; 3],
    #[serde(default)]
    pub options: ExpansionOptions,
    #[serde(default)]
    pub variant: FormVariant,
    /// `|c1| <= threshold * max(1, |c0|)` sets `below_threshold`.
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Invariants,
    Schemes,
    Diffapprox,
}

fn default_elements() -> usize {
    100
}

fn all_suites() -> Vec<Suite> {
    vec![Suite::Invariants, Suite::Schemes, Suite::Diffapprox]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InvarianceConfig {
    /// Random group elements per check.
    #[serde(default = "default_elements")]
    pub elements: usize,
    #[serde(default = "all_suites")]
    pub suites: Vec<Suite>,
    /// Restricts the stencil-invariant suite to one family of elements.
    #[serde(default)]
    pub sampler: Option<ElementSampler>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Solve(_) => "solve",
            Experiment::Compare(_) => "compare",
            Experiment::Diffapprox(_) => "diffapprox",
            Experiment::Invariance(_) => "invariance",
        }
    }

    fn seed_and_out(&mut self) -> (&mut u64, &mut Option<PathBuf>) {
        match self {
            Experiment::Solve(c) => (&mut c.seed, &mut c.out),
            Experiment::Compare(c) => (&mut c.seed, &mut c.out),
            Experiment::Diffapprox(c) => (&mut c.seed, &mut c.out),
            Experiment::Invariance(c) => (&mut c.seed, &mut c.out),
        }
    }

    /// Applies command-line overrides. A new seed changes the digest.
    pub fn apply_overrides(&mut self, seed: Option<u64>, out: Option<PathBuf>) {
        let (s, o) = self.seed_and_out();
        if let Some(seed) = seed {
            *s = seed;
        }
        if out.is_some() {
            *o = out;
        }
    }

    /// SHA-256 of the canonical JSON of the effective config, output path
    /// excluded so the same experiment written elsewhere keeps its digest.
    pub fn digest(&self) -> String {
        let mut c = self.clone();
        *c.seed_and_out().1 = None;
        let bytes = serde_json::to_vec(&c).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

pub fn load(path: &Path) -> Result<Experiment, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_owned(),
        source,
    })?;
    Ok(serde_json::from_str(&text)?)
}
