//! Anomaly scores for an estimated sparse tensor.
//!
//! The NLL score models every entry of the sparse part as Gaussian, with a
//! mean and variance taken from a weighted k-hop spatial neighborhood. Each
//! neighbor row is weighted by its similarity to the center row over a window
//! that also covers the adjacent time blocks. The ABS score is `|s|`.
//!
//! Scoring works in a canonical layout: location at mode 0, time at mode 1,
//! remaining modes after them in their original order. With that layout the
//! mode-0 unfolding is the row-major buffer itself and the columns of time
//! block `b` are the contiguous range `b*T3 .. (b+1)*T3`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dtf::Mask;
use crate::error::{invalid, Error, Result};
use crate::graph::{k_hop_with, median_sorted, SpatialGraph};
use crate::scalar::Real;
use crate::tensor::{inverse_permutation, DenseTensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreMethod {
    Nll,
    Abs,
}

impl ScoreMethod {
    pub fn name(self) -> &'static str {
        match self {
            ScoreMethod::Nll => "NLL",
            ScoreMethod::Abs => "ABS",
        }
    }
}

#[derive(Clone, Debug)]
pub struct ScoringConfig<T: Real> {
    pub k_hop: usize,
    /// Weight bandwidth. `None` uses the median pairwise row distance of each
    /// augmented block.
    pub tau: Option<T>,
    pub alpha: T,
    pub sigma_floor: T,
    pub location_mode: usize,
    pub time_mode: usize,
    pub spatial_graph: SpatialGraph,
    /// Estimate mean and variance per (location, time block) instead of per
    /// location.
    pub block_local: bool,
}

impl<T: Real> ScoringConfig<T> {
    pub fn new(spatial_graph: SpatialGraph, location_mode: usize, time_mode: usize) -> Self {
        Self {
            k_hop: 1,
            tau: None,
            alpha: T::c(0.05),
            sigma_floor: T::c(1e-8),
            location_mode,
            time_mode,
            spatial_graph,
            block_local: false,
        }
    }

    pub fn validate(&self, shape: &[usize]) -> Result<()> {
        if let Some(tau) = self.tau {
            if !(tau > T::zero()) {
                return Err(invalid("tau must be positive"));
            }
        }
        if !(self.alpha > T::zero() && self.alpha < T::one()) {
            return Err(invalid("alpha must lie in (0, 1)"));
        }
        if !(self.sigma_floor > T::zero()) {
            return Err(invalid("sigma floor must be positive"));
        }
        for mode in [self.location_mode, self.time_mode] {
            if mode >= shape.len() {
                return Err(Error::ModeOutOfRange { mode, order: shape.len() });
            }
        }
        if self.location_mode == self.time_mode {
            return Err(invalid("location and time modes must differ"));
        }
        if self.spatial_graph.n_nodes() != shape[self.location_mode] {
            return Err(invalid(format!(
                "graph has {} nodes but the location mode has size {}",
                self.spatial_graph.n_nodes(),
                shape[self.location_mode]
            )));
        }
        Ok(())
    }
}

/// Mode order placing location first and time second.
pub fn canonical_order(order: usize, location_mode: usize, time_mode: usize) -> Vec<usize> {
    let mut perm = vec![location_mode, time_mode];
    perm.extend((0..order).filter(|&m| m != location_mode && m != time_mode));
    perm
}

/// One (center, time block) neighborhood.
#[derive(Clone, Debug)]
pub struct NeighborhoodBlock<T: Real> {
    pub center: usize,
    pub block_index: usize,
    /// Node of each row; `rows[0] == center`.
    pub rows: Vec<usize>,
    /// `n_rows x T3`.
    pub block: DMatrix<T>,
    /// The block with its adjacent time blocks appended on the right.
    pub augmented: DMatrix<T>,
    pub weights: Vec<T>,
}

/// Column range of the augmented window for time block `b` of `nb` blocks:
/// the first block stands alone, the last one takes its left neighbour, any
/// other takes both neighbours.
pub fn augmented_range(b: usize, nb: usize) -> std::ops::Range<usize> {
    if b == 0 {
        0..1
    } else if b + 1 == nb {
        b - 1..b + 1
    } else {
        b - 1..b + 2
    }
}

struct Layout {
    nb: usize,
    t3: usize,
    t2: usize,
}

fn layout(shape: &[usize]) -> Layout {
    let t3: usize = shape[2..].iter().product();
    Layout {
        nb: shape[1],
        t3,
        t2: shape[1] * t3,
    }
}

/// Augmented block rows, row-major, for `rows` over time blocks `range`.
fn gather<T: Real>(data: &[T], lay: &Layout, rows: &[usize], range: std::ops::Range<usize>) -> (usize, Vec<T>) {
    let width = range.len() * lay.t3;
    let mut out = Vec::with_capacity(rows.len() * width);
    for &r in rows {
        let start = r * lay.t2 + range.start * lay.t3;
        out.extend_from_slice(&data[start..start + width]);
    }
    (width, out)
}

fn row_dist2<T: Real>(buf: &[T], width: usize, i: usize, j: usize) -> T {
    buf[i * width..(i + 1) * width]
        .iter()
        .zip(&buf[j * width..(j + 1) * width])
        .fold(T::zero(), |acc, (&a, &b)| acc + (a - b) * (a - b))
}

/// Median of the pairwise Euclidean distances between rows; `None` for a
/// single row.
fn median_pair_distance<T: Real>(buf: &[T], width: usize, n: usize) -> Option<f64> {
    if n < 2 {
        return None;
    }
    let mut d = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            d.push(row_dist2(buf, width, i, j).to_f64_lossy().sqrt());
        }
    }
    d.sort_by(f64::total_cmp);
    Some(median_sorted(&d))
}

/// Weights `exp(-‖row_i - row_0‖² / 2τ²)` over a row-major block.
fn weights_from_rows<T: Real>(buf: &[T], width: usize, n: usize, tau: T) -> Vec<T> {
    let denom = T::c(2.0) * tau * tau;
    let floor = T::c(1e-30);
    (0..n)
        .map(|i| {
            if i == 0 {
                T::one()
            } else {
                (-row_dist2(buf, width, i, 0) / denom).exp().max(floor)
            }
        })
        .collect()
}

/// Bandwidths for every (center, block), resolving the median default.
fn resolve_taus<T: Real>(
    data: &[T],
    lay: &Layout,
    hoods: &[Vec<usize>],
    fixed: Option<T>,
) -> Vec<Vec<T>> {
    if let Some(tau) = fixed {
        return hoods.iter().map(|_| vec![tau; lay.nb]).collect();
    }
    let medians: Vec<Vec<Option<f64>>> = hoods
        .iter()
        .map(|rows| {
            (0..lay.nb)
                .map(|b| {
                    let (w, buf) = gather(data, lay, rows, augmented_range(b, lay.nb));
                    median_pair_distance(&buf, w, rows.len())
                })
                .collect()
        })
        .collect();
    let mut all: Vec<f64> = medians.iter().flatten().flatten().copied().filter(|&m| m > 0.0).collect();
    all.sort_by(f64::total_cmp);
    let global = match median_sorted(&all) {
        m if m > 0.0 => m,
        _ => 1.0,
    };
    medians
        .into_iter()
        .map(|row| {
            row.into_iter()
                .map(|m| T::c(m.filter(|&v| v > 0.0).unwrap_or(global)))
                .collect()
        })
        .collect()
}

fn canonical<T: Real>(s_hat: &DenseTensor<T>, cfg: &ScoringConfig<T>) -> Result<(DenseTensor<T>, Vec<usize>)> {
    cfg.validate(s_hat.shape())?;
    let perm = canonical_order(s_hat.order(), cfg.location_mode, cfg.time_mode);
    Ok((s_hat.permute_modes(&perm)?, perm))
}

/// Every neighborhood block of `s_hat`, ordered by center then time block.
/// `s_hat` is in its original layout; modes are rearranged internally.
pub fn extract_blocks<T: Real>(s_hat: &DenseTensor<T>, cfg: &ScoringConfig<T>) -> Result<Vec<NeighborhoodBlock<T>>> {
    let (s, _) = canonical(s_hat, cfg)?;
    let lay = layout(s.shape());
    let adj = cfg.spatial_graph.neighbors();
    let hoods: Vec<Vec<usize>> = (0..s.shape()[0])
        .map(|c| k_hop_with(&adj, c, cfg.k_hop))
        .collect::<Result<_>>()?;
    let taus = resolve_taus(s.as_slice(), &lay, &hoods, cfg.tau);
    let mut out = Vec::with_capacity(hoods.len() * lay.nb);
    for (center, rows) in hoods.iter().enumerate() {
        for b in 0..lay.nb {
            let (bw, bbuf) = gather(s.as_slice(), &lay, rows, b..b + 1);
            let (aw, abuf) = gather(s.as_slice(), &lay, rows, augmented_range(b, lay.nb));
            out.push(NeighborhoodBlock {
                center,
                block_index: b,
                rows: rows.clone(),
                block: DMatrix::from_row_slice(rows.len(), bw, &bbuf),
                augmented: DMatrix::from_row_slice(rows.len(), aw, &abuf),
                weights: weights_from_rows(&abuf, aw, rows.len(), taus[center][b]),
            });
        }
    }
    Ok(out)
}

/// Similarity weights of the rows of an augmented block to its first row.
pub fn block_weights<T: Real>(augmented: &DMatrix<T>, tau: T) -> Result<Vec<T>> {
    if !(tau > T::zero()) {
        return Err(invalid("tau must be positive"));
    }
    let (n, w) = augmented.shape();
    let mut buf = Vec::with_capacity(n * w);
    for r in 0..n {
        buf.extend(augmented.row(r).iter().copied());
    }
    Ok(weights_from_rows(&buf, w, n, tau))
}

/// Weighted mean and variance over a set of blocks:
/// `μ = Σ_b <B_b, w_b 1ᵀ> / (T3 Σ_b ‖w_b‖₁)`, `σ² = Σ_b <B_b∘B_b, w_b 1ᵀ> / (T3 Σ_b ‖w_b‖₁) - μ²`,
/// with `σ²` clamped below at `sigma_floor²`.
pub fn location_moments<T: Real>(blocks: &[&NeighborhoodBlock<T>], sigma_floor: T) -> Result<(T, T)> {
    if blocks.is_empty() {
        return Err(invalid("moments need at least one block"));
    }
    let (mut m1, mut m2, mut wsum) = (T::zero(), T::zero(), T::zero());
    let t3 = T::c(blocks[0].block.ncols() as f64);
    for blk in blocks {
        for (i, &w) in blk.weights.iter().enumerate() {
            let row = blk.block.row(i);
            m1 += w * row.iter().fold(T::zero(), |a, &v| a + v);
            m2 += w * row.iter().fold(T::zero(), |a, &v| a + v * v);
            wsum += w;
        }
    }
    let denom = t3 * wsum;
    let mu = m1 / denom;
    let var = (m2 / denom - mu * mu).max(sigma_floor * sigma_floor);
    Ok((mu, var))
}

/// Scores, threshold and flags for one method.
#[derive(Clone, Debug)]
pub struct ScoreField<T: Real> {
    /// Same shape and layout as the scored tensor.
    pub scores: DenseTensor<T>,
    pub method: ScoreMethod,
    pub gamma: T,
    pub flags: Mask,
    /// Fitted means, indexed `location * moment_blocks + block`.
    pub mu: Vec<T>,
    /// Fitted standard deviations, same indexing as `mu`.
    pub sigma: Vec<T>,
    /// 1 for per-location moments, the number of time blocks when block-local.
    pub moment_blocks: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScoreSidecar {
    pub method: ScoreMethod,
    pub alpha: f64,
    pub gamma: f64,
    pub k_hop: Option<usize>,
    /// `null` when the per-block median default was used.
    pub tau: Option<f64>,
    pub sigma_floor: Option<f64>,
    pub flagged: usize,
}

impl<T: Real> ScoreField<T> {
    pub fn sidecar(&self, alpha: T, cfg: Option<&ScoringConfig<T>>) -> ScoreSidecar {
        ScoreSidecar {
            method: self.method,
            alpha: alpha.to_f64_lossy(),
            gamma: self.gamma.to_f64_lossy(),
            k_hop: cfg.map(|c| c.k_hop),
            tau: cfg.and_then(|c| c.tau).map(|t| t.to_f64_lossy()),
            sigma_floor: cfg.map(|c| c.sigma_floor.to_f64_lossy()),
            flagged: self.flags.count(),
        }
    }
}

/// `log σ + ½ log 2π + ½ ((s - μ)/σ)²`.
pub fn gaussian_nll<T: Real>(s: T, mu: T, sigma: T) -> T {
    let z = (s - mu) / sigma;
    sigma.ln() + T::c(0.5) * T::two_pi().ln() + T::c(0.5) * z * z
}

/// Negative log-likelihood scores under the neighborhood Gaussian model.
pub fn nll_scores<T: Real>(s_hat: &DenseTensor<T>, cfg: &ScoringConfig<T>) -> Result<ScoreField<T>> {
    if !s_hat.all_finite() {
        return Err(Error::NonFinite("sparse tensor"));
    }
    let (s, perm) = canonical(s_hat, cfg)?;
    let lay = layout(s.shape());
    let n_loc = s.shape()[0];
    let blocks = extract_blocks(s_hat, cfg)?;
    let moment_blocks = if cfg.block_local { lay.nb } else { 1 };
    let mut mu = Vec::with_capacity(n_loc * moment_blocks);
    let mut sigma = Vec::with_capacity(n_loc * moment_blocks);
    for per_loc in blocks.chunks(lay.nb) {
        if cfg.block_local {
            for blk in per_loc {
                let (m, v) = location_moments(&[blk], cfg.sigma_floor)?;
                mu.push(m);
                sigma.push(v.sqrt());
            }
        } else {
            let refs: Vec<&NeighborhoodBlock<T>> = per_loc.iter().collect();
            let (m, v) = location_moments(&refs, cfg.sigma_floor)?;
            mu.push(m);
            sigma.push(v.sqrt());
        }
    }
    let mut scores = s.clone();
    for (off, v) in scores.as_mut_slice().iter_mut().enumerate() {
        let loc = off / lay.t2;
        let b = (off % lay.t2) / lay.t3;
        let k = loc * moment_blocks + if cfg.block_local { b } else { 0 };
        *v = gaussian_nll(*v, mu[k], sigma[k]);
    }
    let scores = scores.permute_modes(&inverse_permutation(&perm))?;
    let (gamma, flags) = threshold(scores.as_slice(), cfg.alpha)?;
    Ok(ScoreField {
        flags: Mask::new(scores.shape().to_vec(), flags)?,
        scores,
        method: ScoreMethod::Nll,
        gamma,
        mu,
        sigma,
        moment_blocks,
    })
}

/// `|s|` scores with the same thresholding.
pub fn abs_scores<T: Real>(s_hat: &DenseTensor<T>, alpha: T) -> Result<ScoreField<T>> {
    let scores = s_hat.map(|v| v.abs());
    let (gamma, flags) = threshold(scores.as_slice(), alpha)?;
    Ok(ScoreField {
        flags: Mask::new(scores.shape().to_vec(), flags)?,
        scores,
        method: ScoreMethod::Abs,
        gamma,
        mu: Vec::new(),
        sigma: Vec::new(),
        moment_blocks: 0,
    })
}

/// `⌈α n⌉`, forgiving floating-point noise in the product, clamped to `1..=n`.
pub fn upper_count(alpha: f64, n: usize) -> usize {
    let x = alpha * n as f64;
    let r = x.round();
    let k = if (x - r).abs() < 1e-9 { r } else { x.ceil() };
    (k as usize).clamp(1, n)
}

/// Upper-α quantile threshold: `γ` is the `⌈αT⌉`-th largest score and every
/// score `≥ γ` is flagged.
pub fn threshold<T: Real>(scores: &[T], alpha: T) -> Result<(T, Vec<bool>)> {
    if scores.is_empty() {
        return Err(invalid("cannot threshold an empty score set"));
    }
    if !(alpha > T::zero() && alpha < T::one()) {
        return Err(invalid("alpha must lie in (0, 1)"));
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let k = upper_count(alpha.to_f64_lossy(), scores.len());
    let gamma = sorted[k - 1];
    Ok((gamma, scores.iter().map(|&s| s >= gamma).collect()))
}
