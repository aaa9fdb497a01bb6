//! Seeded random search over `(λ1, λ_l, λ_t)`.
//!
//! `λ1 ~ U(0, 1)` with every `ψ_i = 1 - λ1`; `λ_l, λ_t ~ LogUniform(1e-8, 10)`.
//! All trial parameters are drawn up front, so the trial sequence depends
//! only on the seed and not on how trials are scheduled.

use std::cmp::Ordering;
use std::io::Write;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dtf::Mask;
use crate::error::{invalid, Result};
use crate::eval::{auc_roc, f1_at, topk_detected, EventList};
use crate::scalar::Real;
use crate::scoring::{abs_scores, nll_scores, ScoreField, ScoreMethod, ScoringConfig};
use crate::solver::{decompose, SolverConfig, Variant};
use crate::tensor::DenseTensor;

pub const LOG_LOWER: f64 = 1e-8;
pub const LOG_UPPER: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Objective {
    /// `w_auc * AUC + w_f1 * F1` against entry labels.
    AucPlusF1 { w_auc: f64, w_f1: f64 },
    /// Events hit by the top `k_percent` of scores.
    TopkEvents { k_percent: f64 },
}

impl Default for Objective {
    fn default() -> Self {
        Objective::AucPlusF1 { w_auc: 1.0, w_f1: 1.0 }
    }
}

pub enum Target<'a> {
    Labels(&'a Mask),
    Events(&'a EventList),
}

#[derive(Clone, Debug)]
pub struct SearchSpec<T: Real> {
    pub n_trials: usize,
    pub seed: u64,
    pub objective: Objective,
    pub method: ScoreMethod,
    /// Zeroes `λ_l` and/or `λ_t` after sampling.
    pub variant: Variant,
    /// Everything but `λ1`, `ψ`, `λ_l`, `λ_t` is taken from here.
    pub base: SolverConfig<T>,
    pub scoring: ScoringConfig<T>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialParams {
    pub lambda1: f64,
    pub lambda_l: f64,
    pub lambda_t: f64,
}

/// One line of the trial log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub lambda1: f64,
    pub lambda_l: f64,
    pub lambda_t: f64,
    pub objective: Option<f64>,
    pub auc: Option<f64>,
    pub f1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub detected: Option<usize>,
    pub runtime_s: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

#[derive(Clone, Debug)]
pub struct SearchOutcome {
    pub best: TrialRecord,
    pub log: Vec<TrialRecord>,
}

impl SearchOutcome {
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        for r in &self.log {
            serde_json::to_writer(&mut w, r)?;
            writeln!(w)?;
        }
        Ok(())
    }
}

pub fn log_uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo.ln()..hi.ln()).exp().clamp(lo, hi)
}

/// The parameter sequence for `n` trials from `seed`.
pub fn sample_params(n: usize, seed: u64) -> Vec<TrialParams> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let mut lambda1 = 0.0;
            while lambda1 == 0.0 {
                lambda1 = rng.random_range(0.0..1.0);
            }
            TrialParams {
                lambda1,
                lambda_l: log_uniform(&mut rng, LOG_LOWER, LOG_UPPER),
                lambda_t: log_uniform(&mut rng, LOG_LOWER, LOG_UPPER),
            }
        })
        .collect()
}

/// Solver config for one trial.
pub fn trial_config<T: Real>(base: &SolverConfig<T>, p: &TrialParams, variant: Variant) -> SolverConfig<T> {
    let mut cfg = base.clone().with_tied_lambda1(T::c(p.lambda1));
    cfg.lambda_l = T::c(p.lambda_l);
    cfg.lambda_t = T::c(p.lambda_t);
    variant.apply(&mut cfg);
    cfg
}

/// Decomposes and scores `y` with one configuration.
pub fn score_once<T: Real>(
    y: &DenseTensor<T>,
    cfg: &SolverConfig<T>,
    method: ScoreMethod,
    scoring: &ScoringConfig<T>,
) -> Result<ScoreField<T>> {
    let res = decompose(y, cfg)?;
    match method {
        ScoreMethod::Nll => nll_scores(&res.s_hat, scoring),
        ScoreMethod::Abs => abs_scores(&res.s_hat, scoring.alpha),
    }
}

fn run_trial<T: Real>(
    y: &DenseTensor<T>,
    spec: &SearchSpec<T>,
    target: &Target<'_>,
    trial: usize,
    p: &TrialParams,
) -> TrialRecord {
    let start = Instant::now();
    let cfg = trial_config(&spec.base, p, spec.variant);
    let mut rec = TrialRecord {
        trial,
        lambda1: p.lambda1,
        lambda_l: cfg.lambda_l.to_f64_lossy(),
        lambda_t: cfg.lambda_t.to_f64_lossy(),
        objective: None,
        auc: None,
        f1: None,
        detected: None,
        runtime_s: 0.0,
        error: None,
    };
    let outcome = score_once(y, &cfg, spec.method, &spec.scoring).and_then(|field| {
        match (spec.objective, target) {
            (Objective::AucPlusF1 { w_auc, w_f1 }, Target::Labels(labels)) => {
                let auc = auc_roc(field.scores.as_slice(), &labels.data)?;
                let f1 = f1_at(&field.flags.data, &labels.data)?.f1;
                rec.auc = Some(auc);
                rec.f1 = Some(f1);
                Ok(w_auc * auc + w_f1 * f1)
            }
            (Objective::TopkEvents { k_percent }, Target::Events(events)) => {
                let n = topk_detected(&field.scores, events, k_percent)?;
                rec.detected = Some(n);
                Ok(n as f64)
            }
            _ => Err(invalid("objective does not match the supplied target")),
        }
    });
    match outcome {
        Ok(v) => rec.objective = Some(v),
        Err(e) => {
            log::warn!("trial {trial} failed: {e}");
            rec.error = Some(e.to_string());
        }
    }
    rec.runtime_s = start.elapsed().as_secs_f64();
    rec
}

/// Higher objective wins; ties go to the smaller `λ1`, then the earlier trial.
fn better(a: &TrialRecord, b: &TrialRecord) -> Ordering {
    let (oa, ob) = (a.objective.unwrap_or(f64::NEG_INFINITY), b.objective.unwrap_or(f64::NEG_INFINITY));
    oa.total_cmp(&ob)
        .then(b.lambda1.total_cmp(&a.lambda1))
        .then(b.trial.cmp(&a.trial))
}

/// Runs every trial (in parallel on the current rayon pool) and returns the
/// best one with the full log in trial order. Failed trials are logged and
/// skipped; it is an error only if every trial fails.
pub fn random_search<T: Real>(y: &DenseTensor<T>, spec: &SearchSpec<T>, target: Target<'_>) -> Result<SearchOutcome> {
    if spec.n_trials == 0 {
        return Err(invalid("need at least one trial"));
    }
    let params = sample_params(spec.n_trials, spec.seed);
    let log: Vec<TrialRecord> = params
        .par_iter()
        .enumerate()
        .map(|(i, p)| run_trial(y, spec, &target, i, p))
        .collect();
    let best = log
        .iter()
        .filter(|r| r.objective.is_some())
        .max_by(|a, b| better(a, b))
        .cloned()
        .ok_or_else(|| invalid("every trial failed"))?;
    Ok(SearchOutcome { best, log })
}
