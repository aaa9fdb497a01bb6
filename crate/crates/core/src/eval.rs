//! Detection metrics: AUC-ROC, precision/recall/F1 and top-K% event hits.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::dtf::Mask;
use crate::error::{invalid, Error, Result};
use crate::scalar::Real;
use crate::scoring::{upper_count, ScoreField, ScoreMethod};
use crate::tensor::DenseTensor;

/// Area under the ROC curve as the Mann-Whitney statistic, ties counted ½.
///
/// Computed from midranks in `O(n log n)`.
pub fn auc_roc<T: Real>(scores: &[T], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::ShapeMismatch {
            expected: vec![labels.len()],
            found: vec![scores.len()],
        });
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(invalid("AUC needs both positive and negative labels"));
    }
    if scores.iter().any(|s| !s.is_finite_value()) {
        return Err(Error::NonFinite("scores"));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap_or(Ordering::Equal));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // 1-based ranks i+1 ..= j+1 share their mean
        let mid = (i + j) as f64 / 2.0 + 1.0;
        let pos = order[i..=j].iter().filter(|&&k| labels[k]).count();
        rank_sum += mid * pos as f64;
        i = j + 1;
    }
    let (p, n) = (n_pos as f64, n_neg as f64);
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl Confusion {
    pub fn from_flags(flags: &[bool], labels: &[bool]) -> Result<Self> {
        if flags.len() != labels.len() {
            return Err(Error::ShapeMismatch {
                expected: vec![labels.len()],
                found: vec![flags.len()],
            });
        }
        let mut c = Self::default();
        for (&f, &l) in flags.iter().zip(labels) {
            match (f, l) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
                (false, false) => c.tn += 1,
            }
        }
        Ok(c)
    }

    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r > 0.0 {
            2.0 * p * r / (p + r)
        } else {
            0.0
        }
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct F1Report {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

pub fn f1_at(flags: &[bool], labels: &[bool]) -> Result<F1Report> {
    let c = Confusion::from_flags(flags, labels)?;
    Ok(F1Report {
        precision: c.precision(),
        recall: c.recall(),
        f1: c.f1(),
    })
}

/// Best F1 over all thresholds `score ≥ γ`; returns `(f1, γ)`.
pub fn best_f1<T: Real>(scores: &[T], labels: &[bool]) -> Result<(f64, f64)> {
    if scores.len() != labels.len() || scores.is_empty() {
        return Err(invalid("scores and labels must be non-empty and equally long"));
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap_or(Ordering::Equal));
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut best = (0.0, scores[order[0]].to_f64_lossy());
    let mut i = 0;
    while i < order.len() {
        let gamma = scores[order[i]];
        while i < order.len() && scores[order[i]] == gamma {
            if labels[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let c = Confusion {
            tp,
            fp,
            fn_: n_pos - tp,
            tn: 0,
        };
        if c.f1() > best.0 {
            best = (c.f1(), gamma.to_f64_lossy());
        }
    }
    Ok(best)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub score_method: ScoreMethod,
    pub auc_roc: f64,
    /// At the flags of the score field.
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
    pub threshold: f64,
    pub best_f1: f64,
    pub best_f1_threshold: f64,
}

pub fn evaluate<T: Real>(field: &ScoreField<T>, labels: &Mask) -> Result<EvalReport> {
    if field.scores.shape() != labels.shape.as_slice() {
        return Err(Error::ShapeMismatch {
            expected: labels.shape.clone(),
            found: field.scores.shape().to_vec(),
        });
    }
    let s = field.scores.as_slice();
    let f = f1_at(&field.flags.data, &labels.data)?;
    let (best, best_thr) = best_f1(s, &labels.data)?;
    Ok(EvalReport {
        score_method: field.method,
        auc_roc: auc_roc(s, &labels.data)?,
        f1: f.f1,
        precision: f.precision,
        recall: f.recall,
        threshold: field.gamma.to_f64_lossy(),
        best_f1: best,
        best_f1_threshold: best_thr,
    })
}

/// A named set of tensor coordinates.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub name: String,
    pub indices: Vec<Vec<usize>>,
}

/// Serialized as a bare JSON array of events.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EventList {
    pub events: Vec<Event>,
}

impl EventList {
    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn validate(&self, shape: &[usize]) -> Result<()> {
        for ev in &self.events {
            for idx in &ev.indices {
                if idx.len() != shape.len() || idx.iter().zip(shape).any(|(&i, &n)| i >= n) {
                    return Err(invalid(format!("event {} has index {idx:?} outside {shape:?}", ev.name)));
                }
            }
        }
        Ok(())
    }
}

/// Offsets of the `⌈(k/100) T⌉` highest scores; ties go to the lower offset.
pub fn top_fraction<T: Real>(scores: &[T], k_percent: f64) -> Result<Vec<bool>> {
    if !(k_percent > 0.0 && k_percent <= 100.0) {
        return Err(invalid("k_percent must lie in (0, 100]"));
    }
    if scores.is_empty() {
        return Err(invalid("empty score set"));
    }
    let m = upper_count(k_percent / 100.0, scores.len());
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut top = vec![false; scores.len()];
    for &o in &order[..m] {
        top[o] = true;
    }
    Ok(top)
}

/// Number of events with at least one index among the top `k_percent` of
/// scores.
pub fn topk_detected<T: Real>(scores: &DenseTensor<T>, events: &EventList, k_percent: f64) -> Result<usize> {
    if events.events.is_empty() {
        return Err(invalid("event list is empty"));
    }
    events.validate(scores.shape())?;
    let top = top_fraction(scores.as_slice(), k_percent)?;
    Ok(events
        .events
        .iter()
        .filter(|ev| ev.indices.iter().any(|idx| top[scores.offset(idx)]))
        .count())
}
