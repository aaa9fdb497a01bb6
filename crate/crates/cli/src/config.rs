//! JSON config files. Field names follow the library structs; flags given on
//! the command line override anything read here.

use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use tensoranom::graph::TemporalOperator;
use tensoranom::scoring::ScoreMethod;
use tensoranom::solver::Variant;
use tensoranom::synth::SynthConfig;

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub variant: Option<Variant>,
    pub solver: SolverSection,
    pub scoring: ScoringSection,
    pub synth: Option<SynthConfig>,
}

/// Modes here are 0-based, as in the library.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub lambda1: Option<f64>,
    pub lambda_l: Option<f64>,
    pub lambda_t: Option<f64>,
    pub psi: Option<Vec<f64>>,
    pub rho: Option<f64>,
    pub max_iterations: Option<usize>,
    pub tolerance: Option<f64>,
    pub temporal_operator: Option<TemporalOperator>,
    pub location_mode: Option<usize>,
    pub time_mode: Option<usize>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoringSection {
    pub method: Option<ScoreMethod>,
    pub k_hop: Option<usize>,
    pub tau: Option<f64>,
    pub alpha: Option<f64>,
    pub sigma_floor: Option<f64>,
    pub block_local: Option<bool>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

/// Seed resolution: flag, then config file, then `TENSORANOM_SEED`, then 0.
pub fn resolve_seed(flag: Option<u64>, file: Option<u64>) -> Result<u64> {
    if let Some(s) = flag.or(file) {
        return Ok(s);
    }
    match std::env::var("TENSORANOM_SEED") {
        Ok(v) => v
            .trim()
            .parse()
            .with_context(|| format!("TENSORANOM_SEED=`{v}` is not an unsigned integer")),
        Err(_) => Ok(0),
    }
}
