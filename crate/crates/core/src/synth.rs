//! Synthetic spatiotemporal anomaly benchmark: Tucker low-rank background,
//! grid-graph group anomalies, and white noise at an exact SNR.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dtf::Mask;
use crate::error::{invalid, Result};
use crate::eval::{Event, EventList};
use crate::graph::{grid_graph, k_hop_neighborhood, SpatialGraph};
use crate::scalar::Real;
use crate::tensor::DenseTensor;

/// What counts as signal when scaling the noise.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SnrSignal {
    /// `‖X + S‖²`.
    #[default]
    LowRankPlusSparse,
    /// `‖X‖²`.
    LowRankOnly,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub shape: Vec<usize>,
    pub tucker_rank: Vec<usize>,
    /// `(rows, cols)` of the location grid.
    pub grid: (usize, usize),
    pub location_mode: usize,
    pub time_mode: usize,
    /// Hop radius of each anomalous group.
    pub r: usize,
    /// Pulse duration.
    pub d: usize,
    /// Number of groups.
    pub g: usize,
    /// Pulse amplitude.
    pub c: f64,
    pub snr_db: f64,
    pub seed: u64,
    /// Draw each group's pulse sign uniformly from `{+c, -c}`.
    pub random_sign: bool,
    pub snr_signal: SnrSignal,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            shape: vec![40, 24, 7, 20],
            tucker_rank: vec![8, 8, 5, 5],
            grid: (8, 5),
            location_mode: 0,
            time_mode: 3,
            r: 2,
            d: 10,
            g: 450,
            c: 0.25,
            snr_db: 10.0,
            seed: 0,
            random_sign: false,
            snr_signal: SnrSignal::LowRankPlusSparse,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let n = self.shape.len();
        if n == 0 || self.shape.contains(&0) {
            return Err(invalid(format!("invalid shape {:?}", self.shape)));
        }
        if self.tucker_rank.len() != n {
            return Err(invalid("tucker rank needs one entry per mode"));
        }
        if self.tucker_rank.iter().zip(&self.shape).any(|(&r, &s)| r == 0 || r > s) {
            return Err(invalid(format!(
                "tucker rank {:?} incompatible with shape {:?}",
                self.tucker_rank, self.shape
            )));
        }
        if self.location_mode >= n || self.time_mode >= n || self.location_mode == self.time_mode {
            return Err(invalid("location and time modes must be distinct and in range"));
        }
        if self.grid.0 * self.grid.1 != self.shape[self.location_mode] {
            return Err(invalid(format!(
                "grid {}x{} does not cover {} locations",
                self.grid.0, self.grid.1, self.shape[self.location_mode]
            )));
        }
        if self.d == 0 || self.d > self.shape[self.time_mode] {
            return Err(invalid("pulse duration must lie in 1..=time size"));
        }
        if !(self.c.is_finite() && self.snr_db.is_finite()) {
            return Err(invalid("amplitude and SNR must be finite"));
        }
        Ok(())
    }

    pub fn graph(&self) -> Result<SpatialGraph> {
        grid_graph(self.grid.0, self.grid.1)
    }

    /// Pulse window `[t - ⌊d/2⌋, t + ⌈d/2⌉ - 1]` clipped to the time axis.
    pub fn pulse_window(&self, t: usize) -> std::ops::Range<usize> {
        let lo = t.saturating_sub(self.d / 2);
        let hi = (t + self.d.div_ceil(2)).min(self.shape[self.time_mode]);
        lo..hi
    }
}

#[derive(Clone, Debug)]
pub struct LabeledDataset<T: Real> {
    pub y: DenseTensor<T>,
    pub labels: Mask,
    pub x_true: DenseTensor<T>,
    pub s_true: DenseTensor<T>,
    pub noise: DenseTensor<T>,
    pub config: SynthConfig,
    /// Drawn center coordinate of each group.
    pub centers: Vec<Vec<usize>>,
}

/// JSON manifest contents for a generated dataset.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SynthManifest {
    pub config: SynthConfig,
    pub centers: Vec<Vec<usize>>,
    pub anomalous_entries: usize,
    pub empirical_snr_db: f64,
}

impl<T: Real> LabeledDataset<T> {
    /// One event per group, covering the entries its pulse touched.
    pub fn events(&self) -> Result<EventList> {
        let graph = self.config.graph()?;
        let mut events = Vec::with_capacity(self.centers.len());
        for (k, center) in self.centers.iter().enumerate() {
            let mut indices = Vec::new();
            for node in k_hop_neighborhood(&graph, center[self.config.location_mode], self.config.r)? {
                for t in self.config.pulse_window(center[self.config.time_mode]) {
                    let mut idx = center.clone();
                    idx[self.config.location_mode] = node;
                    idx[self.config.time_mode] = t;
                    indices.push(idx);
                }
            }
            events.push(Event {
                name: format!("group-{k}"),
                indices,
            });
        }
        Ok(EventList { events })
    }

    pub fn manifest(&self) -> Result<SynthManifest> {
        Ok(SynthManifest {
            config: self.config.clone(),
            centers: self.centers.clone(),
            anomalous_entries: self.labels.count(),
            empirical_snr_db: empirical_snr(&self.x_true, &self.s_true, &self.noise)?,
        })
    }
}

fn orthonormal_factor(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    let g = DMatrix::<f64>::from_fn(rows, cols, |_, _| rng.sample(StandardNormal));
    g.qr().q()
}

/// Generates a labeled dataset; everything is drawn from one ChaCha8 stream
/// seeded with `cfg.seed`, in the order core, factors, groups, noise.
pub fn generate<T: Real>(cfg: &SynthConfig) -> Result<LabeledDataset<T>> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = cfg.shape.len();

    let core = DenseTensor::<f64>::from_fn(&cfg.tucker_rank, |_| rng.sample(StandardNormal));
    let factors: Vec<DMatrix<f64>> = (0..n)
        .map(|i| orthonormal_factor(&mut rng, cfg.shape[i], cfg.tucker_rank[i]))
        .collect();
    let mut x = core;
    for (mode, u) in factors.iter().enumerate() {
        x = x.mode_product(u, mode)?;
    }
    let rms = (x.frobenius_norm() * x.frobenius_norm() / x.len() as f64).sqrt();
    if rms > 0.0 {
        x = x.scaled(1.0 / rms);
    }

    let graph = cfg.graph()?;
    let mut s = DenseTensor::<f64>::zeros(&cfg.shape);
    let mut centers = Vec::with_capacity(cfg.g);
    for _ in 0..cfg.g {
        let center: Vec<usize> = cfg.shape.iter().map(|&sz| rng.random_range(0..sz)).collect();
        let amp = if cfg.random_sign && rng.random::<bool>() { -cfg.c } else { cfg.c };
        let mut idx = center.clone();
        for node in k_hop_neighborhood(&graph, center[cfg.location_mode], cfg.r)? {
            idx[cfg.location_mode] = node;
            for t in cfg.pulse_window(center[cfg.time_mode]) {
                idx[cfg.time_mode] = t;
                let v = s.get(&idx);
                s.set(&idx, v + amp);
            }
        }
        centers.push(center);
    }

    let mut e = DenseTensor::<f64>::from_fn(&cfg.shape, |_| rng.sample(StandardNormal));
    let signal = match cfg.snr_signal {
        SnrSignal::LowRankPlusSparse => DenseTensor::axpy(1.0, &x, &s)?.frobenius_norm(),
        SnrSignal::LowRankOnly => x.frobenius_norm(),
    };
    let e_norm = e.frobenius_norm();
    if e_norm > 0.0 {
        e = e.scaled(signal / (e_norm * 10f64.powf(cfg.snr_db / 20.0)));
    }

    let mut y = DenseTensor::axpy(1.0, &x, &s)?;
    y = DenseTensor::axpy(1.0, &e, &y)?;
    let labels = Mask::new(cfg.shape.clone(), s.as_slice().iter().map(|&v| v != 0.0).collect())?;
    Ok(LabeledDataset {
        y: y.cast(),
        labels,
        x_true: x.cast(),
        s_true: s.cast(),
        noise: e.cast(),
        config: cfg.clone(),
        centers,
    })
}

/// `10 log10(‖x + s‖² / ‖e‖²)` in dB.
pub fn empirical_snr<T: Real>(x: &DenseTensor<T>, s: &DenseTensor<T>, e: &DenseTensor<T>) -> Result<f64> {
    let signal = DenseTensor::axpy(T::one(), x, s)?.frobenius_norm().to_f64_lossy();
    let noise = e.frobenius_norm().to_f64_lossy();
    if noise == 0.0 {
        return Err(invalid("noise tensor is zero"));
    }
    Ok(20.0 * (signal / noise).log10())
}
