//! Acceptance checks. Runs without the libtest harness so that every
//! `criterion N: PASS|FAIL ...` line is printed; exits nonzero if any fails.
//! Positional arguments filter criteria by substring of their names.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use tensoranom::eval::{auc_roc, topk_detected, Event, EventList};
use tensoranom::graph::{grid_graph, k_hop_neighborhood, SpatialGraph};
use tensoranom::ingest::{ingest_csv, IngestOptions};
use tensoranom::prox::{soft_threshold, svt};
use tensoranom::scoring::{augmented_range, nll_scores, threshold, ScoringConfig};
use tensoranom::solver::{decompose, IterationRecord, Operators, SolverConfig, SolverState, Variant};
use tensoranom::synth::{generate, SynthConfig};
use tensoranom::{Matrix, Tensor};

const FAST_SOLVE_TOL: f64 = 1e-8;
const FEASIBILITY_TOL: f64 = 1e-5;
const FEASIBILITY_ITERS: usize = 500;
const TAIL: usize = 50;
const ABLATION_SEEDS: std::ops::RangeInclusive<u64> = 1..=10;
const ABLATION_MIN_WINS: usize = 8;
const ABLATION_BUDGET_S: f64 = 30.0 * 60.0;
const PROX_TOL: f64 = 1e-9;
const PROX_TRIALS: usize = 100;
const MOMENT_TOL: f64 = 1e-12;
const AUC_TOL: f64 = 1e-12;

/// Per-variant weights `(λ1, λ_l, λ_t)` with `ψ_i = 1 - λ1`, chosen by mean
/// NLL-AUC on held-out datasets (seeds 1001 and 1002, `ρ = 1`, 500
/// iterations), never on the seeds scored here.
fn tuned(variant: Variant) -> (f64, f64, f64) {
    match variant {
        Variant::LrStss => (0.01, 0.03, 0.076),
        Variant::LrTs => (0.02, 0.0, 0.076),
        Variant::Horpca => (0.061, 0.0, 0.0),
        Variant::LrSs => unreachable!("not part of the ablation"),
    }
}

fn report(n: usize, pass: bool, detail: impl std::fmt::Display) {
    println!("criterion {n}: {} {detail}", if pass { "PASS" } else { "FAIL" });
}

fn random_tensor(shape: &[usize], rng: &mut ChaCha8Rng) -> Tensor {
    Tensor::from_fn(shape, |_| rng.random_range(-1.0..1.0))
}

fn rel_err(a: &Tensor, b: &Tensor) -> f64 {
    a.zip_with(b, |x, y| x - y).unwrap().frobenius_norm() / b.frobenius_norm()
}

/// `I_{before} ⊗ m ⊗ I_{after}` for the row-major storage order.
fn embed(m: &Matrix, shape: &[usize], mode: usize) -> Matrix {
    let before: usize = shape[..mode].iter().product();
    let after: usize = shape[mode + 1..].iter().product();
    Matrix::identity(before, before)
        .kronecker(m)
        .kronecker(&Matrix::identity(after, after))
}

fn criterion_01_fast_solve_matches_dense_kronecker_system() -> bool {
    let shape = [12, 3, 10, 2];
    let graph = grid_graph(3, 4).unwrap();
    let cfg = SolverConfig::<f64>::new(graph, 4, 0, 2);
    let ops = Operators::from_config(&cfg, &shape).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut state = SolverState::new(random_tensor(&shape, &mut rng), &ops);
    state.x = random_tensor(&shape, &mut rng);
    state.w = random_tensor(&shape, &mut rng);
    state.dual = random_tensor(&shape, &mut rng);
    state.dual_f = random_tensor(&shape, &mut rng);
    state.w_l = Some(random_tensor(&shape, &mut rng));
    state.dual_l = Some(random_tensor(&shape, &mut rng));
    let wt_shape = [12, 3, 9, 2];
    state.w_t = Some(random_tensor(&wt_shape, &mut rng));
    state.dual_t = Some(random_tensor(&wt_shape, &mut rng));

    let start = Instant::now();
    let cache = ops.fast_solve(&shape).unwrap();
    let fast = state.update_s(&ops, &cache, cfg.rho).unwrap();
    let elapsed = start.elapsed().as_secs_f64();

    let ln = ops.spatial.as_ref().unwrap();
    let delta = ops.temporal.as_ref().unwrap();
    let n: usize = shape.iter().product();
    let g = Matrix::identity(n, n) * 2.0
        + embed(&(ln.transpose() * ln), &shape, 0)
        + embed(&(delta.transpose() * delta), &shape, 2);
    let b = state.s_update_rhs(&ops, cfg.rho).unwrap();
    let rhs = Matrix::from_column_slice(n, 1, b.as_slice());
    let sol = g.lu().solve(&rhs).unwrap();
    let dense = Tensor::new(shape.to_vec(), sol.iter().copied().collect()).unwrap();
    let err = rel_err(&fast, &dense);
    let pass = err <= FAST_SOLVE_TOL && elapsed < 1.0;
    report(1, pass, format!("relative error {err:.3e} (tol {FAST_SOLVE_TOL:e}), fast path {elapsed:.4}s"));
    pass
}

fn default_instance(seed: u64, d: usize) -> tensoranom::Dataset {
    generate::<f64>(&SynthConfig {
        seed,
        d,
        ..SynthConfig::default()
    })
    .unwrap()
}

fn tuned_config(variant: Variant) -> SolverConfig<f64> {
    let (l1, ll, lt) = tuned(variant);
    let mut cfg = SolverConfig::new(grid_graph(8, 5).unwrap(), 4, 0, 3).with_tied_lambda1(l1);
    cfg.lambda_l = ll;
    cfg.lambda_t = lt;
    variant.apply(&mut cfg);
    cfg
}

fn nll_auc(ds: &tensoranom::Dataset, cfg: &SolverConfig<f64>) -> f64 {
    let res = decompose(&ds.y, cfg).unwrap();
    let sc = ScoringConfig::new(cfg.spatial_graph.clone(), cfg.location_mode, cfg.time_mode);
    let field = nll_scores(&res.s_hat, &sc).unwrap();
    auc_roc(field.scores.as_slice(), &ds.labels.data).unwrap()
}

fn criterion_02_admm_reaches_feasibility_at_full_scale() -> bool {
    let ds = default_instance(1, 10);
    let cfg = SolverConfig::new(grid_graph(8, 5).unwrap(), 4, 0, 3);
    let res = decompose(&ds.y, &cfg).unwrap();
    let diag: Vec<IterationRecord> = serde_json::from_str(&res.diagnostics_json().unwrap()).unwrap();
    let first_feasible = diag
        .iter()
        .find(|r| r.residuals.max() < FEASIBILITY_TOL)
        .map(|r| r.iter);
    let tail = &diag[diag.len().saturating_sub(TAIL)..];
    let components = |r: &IterationRecord| {
        let x = &r.residuals;
        [x.fidelity, x.w, x.wl, x.wt, x.xi_max]
    };
    let monotone = tail.len() == TAIL
        && tail
            .windows(2)
            .all(|w| components(&w[0]).iter().zip(components(&w[1])).all(|(a, b)| b <= *a));
    let within = first_feasible.is_some_and(|i| i <= FEASIBILITY_ITERS);
    let pass = within && monotone;
    let last = diag.last().unwrap();
    report(
        2,
        pass,
        format!(
            "feasible (<{FEASIBILITY_TOL:e}) at iteration {first_feasible:?} of {}, final max residual {:.3e}, \
             last {TAIL} residuals non-increasing: {monotone}",
            res.iterations,
            last.residuals.max()
        ),
    );
    pass
}

fn criterion_03_smoothness_terms_beat_horpca_on_nll_auc() -> bool {
    let start = Instant::now();
    let variants = [Variant::LrStss, Variant::LrTs, Variant::Horpca];
    let mut aucs = vec![Vec::new(); variants.len()];
    for seed in ABLATION_SEEDS {
        let ds = default_instance(seed, 10);
        for (i, &v) in variants.iter().enumerate() {
            aucs[i].push(nll_auc(&ds, &tuned_config(v)));
        }
        println!(
            "  seed {seed}: lr-stss {:.4} lr-ts {:.4} horpca {:.4}",
            aucs[0].last().unwrap(),
            aucs[1].last().unwrap(),
            aucs[2].last().unwrap()
        );
    }
    let elapsed = start.elapsed().as_secs_f64();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let wins = |a: &[f64]| a.iter().zip(&aucs[2]).filter(|(x, y)| x > y).count();
    let (m_stss, m_ts, m_ho) = (mean(&aucs[0]), mean(&aucs[1]), mean(&aucs[2]));
    let (w_stss, w_ts) = (wins(&aucs[0]), wins(&aucs[1]));
    let pass = m_stss > m_ho
        && m_ts > m_ho
        && w_stss >= ABLATION_MIN_WINS
        && w_ts >= ABLATION_MIN_WINS
        && elapsed <= ABLATION_BUDGET_S;
    report(
        3,
        pass,
        format!(
            "mean NLL-AUC lr-stss {m_stss:.4} ({w_stss}/10 wins), lr-ts {m_ts:.4} ({w_ts}/10 wins), \
             horpca {m_ho:.4}; {elapsed:.0}s"
        ),
    );
    pass
}

fn criterion_04_longer_pulses_are_easier_for_lr_stss() -> bool {
    let cfg = tuned_config(Variant::LrStss);
    let mean_auc = |d: usize| {
        let v: Vec<f64> = ABLATION_SEEDS.map(|s| nll_auc(&default_instance(s, d), &cfg)).collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    let (long, short) = (mean_auc(10), mean_auc(1));
    let pass = long > short;
    report(4, pass, format!("mean NLL-AUC at d=10 {long:.4}, at d=1 {short:.4}"));
    pass
}

fn criterion_05_prox_operators() -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for _ in 0..PROX_TRIALS {
        let shape = [rng.random_range(1..6), rng.random_range(1..6), rng.random_range(1..4)];
        let x = random_tensor(&shape, &mut rng).scaled(3.0);
        let y = random_tensor(&shape, &mut rng).scaled(3.0);
        let lam = rng.random_range(0.0..2.0);
        let px = soft_threshold(&x, lam).unwrap();
        let py = soft_threshold(&y, lam).unwrap();
        // nonexpansive
        let lhs = px.zip_with(&py, |a, b| a - b).unwrap().frobenius_norm();
        let rhs = x.zip_with(&y, |a, b| a - b).unwrap().frobenius_norm();
        worst = worst.max(lhs - rhs);
        // <x - p, z - p> <= lam (|z|_1 - |p|_1) for any z
        let z = random_tensor(&shape, &mut rng);
        let ip = x.zip_with(&px, |a, b| a - b).unwrap().inner(&z.zip_with(&px, |a, b| a - b).unwrap()).unwrap();
        worst = worst.max(ip - lam * (z.l1_norm() - px.l1_norm()));
        // scalar formula
        for (&v, &p) in x.as_slice().iter().zip(px.as_slice()) {
            worst = worst.max((p - v.signum() * (v.abs() - lam).max(0.0)).abs());
        }
    }
    for _ in 0..PROX_TRIALS {
        let (m, n) = (rng.random_range(1..8), rng.random_range(1..8));
        let a = Matrix::from_fn(m, n, |_, _| rng.random_range(-2.0..2.0));
        let b = Matrix::from_fn(m, n, |_, _| rng.random_range(-2.0..2.0));
        let tau = rng.random_range(0.0..2.0);
        let pa = svt(&a, tau).unwrap().output;
        let pb = svt(&b, tau).unwrap().output;
        worst = worst.max((&pa - &pb).norm() - (&a - &b).norm());
        let nuc = |m: &Matrix| m.singular_values().sum();
        let z = Matrix::from_fn(m, n, |_, _| rng.random_range(-2.0..2.0));
        let ip = (&a - &pa).dot(&(&z - &pa));
        worst = worst.max(ip - tau * (nuc(&z) - nuc(&pa)));
        let svd = a.clone().svd(true, true);
        let shrunk = svd.singular_values.map(|s| (s - tau).max(0.0));
        let oracle = svd.u.as_ref().unwrap() * Matrix::from_diagonal(&shrunk) * svd.v_t.as_ref().unwrap();
        worst = worst.max((&pa - oracle).amax());
    }
    let pass = worst <= PROX_TOL;
    report(5, pass, format!("worst violation over {} instances {worst:.3e} (tol {PROX_TOL:e})", 2 * PROX_TRIALS));
    pass
}

/// Weighted moments per location straight from their defining sums.
fn moment_oracle(s: &Tensor, g: &SpatialGraph, tau: f64) -> Vec<(f64, f64)> {
    let (nl, nb, t3) = (s.shape()[0], s.shape()[1], s.shape()[2]);
    (0..nl)
        .map(|center| {
            let hood = k_hop_neighborhood(g, center, 1).unwrap();
            let (mut num, mut num2, mut den) = (0.0, 0.0, 0.0);
            for b in 0..nb {
                for &node in &hood {
                    let mut d2 = 0.0;
                    for bb in augmented_range(b, nb) {
                        for c in 0..t3 {
                            d2 += (s.get(&[node, bb, c]) - s.get(&[center, bb, c])).powi(2);
                        }
                    }
                    let w = (-d2 / (2.0 * tau * tau)).exp();
                    for c in 0..t3 {
                        let v = s.get(&[node, b, c]);
                        num += w * v;
                        num2 += w * v * v;
                    }
                    den += w * t3 as f64;
                }
            }
            let mu = num / den;
            (mu, num2 / den - mu * mu)
        })
        .collect()
}

fn criterion_06_scoring_exactness() -> bool {
    // constant input
    let g = grid_graph(2, 3).unwrap();
    let c = 0.75;
    let s = Tensor::filled(&[6, 4, 3], c);
    let cfg = ScoringConfig::new(g, 0, 1);
    let f = nll_scores(&s, &cfg).unwrap();
    let constant_ok = f.mu.iter().all(|&m| (m - c).abs() <= MOMENT_TOL) && f.sigma.iter().all(|&sd| sd == cfg.sigma_floor);

    // 2x2 grid against the double loop
    let g = grid_graph(2, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    for trial in 0..5 {
        let s = random_tensor(&[4, 3 + trial % 2, 2], &mut rng);
        let tau = 0.5 + 0.3 * trial as f64;
        let mut cfg = ScoringConfig::new(g.clone(), 0, 1);
        cfg.tau = Some(tau);
        let f = nll_scores(&s, &cfg).unwrap();
        for (loc, (mu, var)) in moment_oracle(&s, &g, tau).into_iter().enumerate() {
            worst = worst.max((f.mu[loc] - mu).abs());
            worst = worst.max((f.sigma[loc] - var.sqrt()).abs());
        }
    }

    // threshold count on tie-free scores
    let mut count_ok = true;
    for (n, alpha) in [(1000usize, 0.05), (1000, 0.0371), (257, 0.1), (10, 0.05), (6720, 0.03)] {
        let scores: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let (_, flags) = threshold(&scores, alpha).unwrap();
        let expected = ((alpha * n as f64).ceil() as usize).max(1);
        count_ok &= flags.iter().filter(|&&b| b).count() == expected;
    }
    let pass = constant_ok && worst <= MOMENT_TOL && count_ok;
    report(
        6,
        pass,
        format!("constant fixture {constant_ok}, oracle max deviation {worst:.3e} (tol {MOMENT_TOL:e}), ceil(alpha T) flags {count_ok}"),
    );
    pass
}

fn criterion_07_metric_oracles() -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let scores: Vec<f64> = (0..200).map(|_| (rng.random_range(0..40) as f64) / 8.0).collect();
        let mut labels: Vec<bool> = (0..200).map(|_| rng.random_bool(0.3)).collect();
        labels[0] = true;
        labels[1] = false;
        let (mut wins, mut pos, mut neg) = (0.0, 0.0, 0.0);
        for i in 0..200 {
            if labels[i] {
                pos += 1.0;
            } else {
                neg += 1.0;
            }
            for j in 0..200 {
                if labels[i] && !labels[j] {
                    wins += if scores[i] > scores[j] {
                        1.0
                    } else if scores[i] == scores[j] {
                        0.5
                    } else {
                        0.0
                    };
                }
            }
        }
        worst = worst.max((auc_roc(&scores, &labels).unwrap() - wins / (pos * neg)).abs());
    }

    // ten single-entry events planted at the ten largest scores
    let n = 1000;
    let mut data: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let spots: Vec<usize> = (0..10).map(|k| 37 + 97 * k).collect();
    for (k, &o) in spots.iter().enumerate() {
        data[o] = 100.0 - k as f64;
    }
    let scores = Tensor::new(vec![10, 100], data).unwrap();
    let events = EventList {
        events: spots
            .iter()
            .enumerate()
            .map(|(k, &o)| Event {
                name: format!("event-{k}"),
                indices: vec![vec![o / 100, o % 100]],
            })
            .collect(),
    };
    // K in hundredths of a percent, so the expected top-set size is exact
    let hundredths: [usize; 12] = [5, 10, 25, 30, 50, 55, 90, 100, 150, 300, 1000, 10000];
    let counts: Vec<usize> = hundredths
        .iter()
        .map(|&h| topk_detected(&scores, &events, h as f64 / 100.0).unwrap())
        .collect();
    let expected: Vec<usize> = hundredths.iter().map(|&h| (h * n).div_ceil(10000).min(10)).collect();
    let monotone = counts.windows(2).all(|w| w[0] <= w[1]);
    let pass = worst <= AUC_TOL && monotone && counts == expected;
    report(
        7,
        pass,
        format!("AUC vs pairwise max deviation {worst:.3e} (tol {AUC_TOL:e}), top-K counts {counts:?} monotone {monotone}"),
    );
    pass
}

fn criterion_08_smd_shaped_ingestion() -> bool {
    // day 0: value depends on feature and minute; day 1 has 1000 minutes.
    let steps = 1440 + 1000;
    let mut text = String::new();
    for t in 0..steps {
        let row: Vec<String> = (0..38)
            .map(|f| {
                let v = if t < 1440 { f as f64 + (t % 1440) as f64 / 1440.0 } else { -3.0 };
                v.to_string()
            })
            .collect();
        text.push_str(&row.join(","));
        text.push('\n');
    }
    let opts = IngestOptions {
        reshape: vec![24, 60],
        has_header: false,
    };
    let out = ingest_csv(text.as_bytes(), &opts).unwrap();
    let shape_ok = out.tensor.shape() == [38, 2, 24, 60];
    let mut exact = true;
    for f in 0..38 {
        for m in 0..1440 {
            let got = out.tensor.get(&[f, 1, m / 60, m % 60]);
            let want = if m < 1000 { -3.0 } else { f as f64 + m as f64 / 1440.0 };
            exact &= got == want;
        }
    }
    let pass = shape_ok && exact && out.imputed == 38 * 440;
    report(8, pass, format!("shape {:?}, imputed entries {}, exact {exact}", out.tensor.shape(), out.imputed));
    pass
}

fn cli(args: &[&str]) {
    let out = Command::new(env!("CARGO_BIN_EXE_tensoranom"))
        .args(args)
        .env_remove("TENSORANOM_SEED")
        .output()
        .unwrap();
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

const MID_SYNTH: &[&str] = &[
    "synth", "--shape", "12,6,4,15", "--rank", "3,3,2,3", "--grid", "3x4", "--r", "1", "--d", "4", "--g", "12",
    "--c", "1", "--snr", "10",
];

fn criterion_09_variant_flag_equals_zero_weights() -> bool {
    let dir = tempfile::tempdir().unwrap();
    let syn = dir.path().join("syn");
    let mut args = MID_SYNTH.to_vec();
    args.extend_from_slice(&["--seed", "9", "-o", p(&syn)]);
    cli(&args);
    let y = syn.join("y.dtf");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    cli(&["decompose", "-i", p(&y), "--grid", "3x4", "--variant", "horpca", "-o", p(&a)]);
    cli(&["decompose", "-i", p(&y), "--grid", "3x4", "--lambda-l", "0", "--lambda-t", "0", "-o", p(&b)]);
    let same: Vec<bool> = ["x_hat.dtf", "s_hat.dtf", "diagnostics.json"]
        .iter()
        .map(|f| std::fs::read(a.join(f)).unwrap() == std::fs::read(b.join(f)).unwrap())
        .collect();
    let pass = same.iter().all(|&s| s);
    report(9, pass, format!("x_hat/s_hat/diagnostics bitwise equal: {same:?}"));
    pass
}

fn checksums(manifest: &Path) -> Vec<(String, String)> {
    let m: Value = serde_json::from_str(&std::fs::read_to_string(manifest).unwrap()).unwrap();
    m["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| {
            let name = Path::new(r["path"].as_str().unwrap()).file_name().unwrap().to_string_lossy().into_owned();
            (name, r["sha256"].as_str().unwrap().to_string())
        })
        .collect()
}

fn pipeline(root: &Path) -> Vec<(String, String)> {
    let (syn, dec, sc, ev) = (root.join("syn"), root.join("dec"), root.join("sc"), root.join("ev"));
    let mut args = MID_SYNTH.to_vec();
    args.extend_from_slice(&["--seed", "10", "-o", p(&syn)]);
    cli(&args);
    cli(&["decompose", "-i", p(&syn.join("y.dtf")), "--grid", "3x4", "-o", p(&dec)]);
    cli(&["score", "-i", p(&dec.join("s_hat.dtf")), "--grid", "3x4", "-o", p(&sc)]);
    cli(&[
        "eval", "--scores", p(&sc.join("scores.dtf")), "--flags", p(&sc.join("flags.dtf")), "--sidecar",
        p(&sc.join("score.json")), "--labels", p(&syn.join("labels.dtf")), "--events", p(&syn.join("events.json")),
        "-o", p(&ev),
    ]);
    [syn, dec, sc, ev]
        .iter()
        .flat_map(|d| checksums(&d.join("manifest.json")))
        .collect()
}

fn criterion_10_pipeline_is_deterministic() -> bool {
    let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let a = pipeline(d1.path());
    let b = pipeline(d2.path());
    let pass = a == b && a.len() >= 12;
    report(10, pass, format!("{} output checksums compared, identical: {}", a.len(), a == b));
    pass
}

fn main() -> std::process::ExitCode {
    let criteria: [(&str, fn() -> bool); 10] = [
        ("criterion_01_fast_solve_matches_dense_kronecker_system", criterion_01_fast_solve_matches_dense_kronecker_system),
        ("criterion_02_admm_reaches_feasibility_at_full_scale", criterion_02_admm_reaches_feasibility_at_full_scale),
        ("criterion_03_smoothness_terms_beat_horpca_on_nll_auc", criterion_03_smoothness_terms_beat_horpca_on_nll_auc),
        ("criterion_04_longer_pulses_are_easier_for_lr_stss", criterion_04_longer_pulses_are_easier_for_lr_stss),
        ("criterion_05_prox_operators", criterion_05_prox_operators),
        ("criterion_06_scoring_exactness", criterion_06_scoring_exactness),
        ("criterion_07_metric_oracles", criterion_07_metric_oracles),
        ("criterion_08_smd_shaped_ingestion", criterion_08_smd_shaped_ingestion),
        ("criterion_09_variant_flag_equals_zero_weights", criterion_09_variant_flag_equals_zero_weights),
        ("criterion_10_pipeline_is_deterministic", criterion_10_pipeline_is_deterministic),
    ];
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.into_iter().enumerate() {
        if !filters.is_empty() && !filters.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let ok = std::panic::catch_unwind(run).unwrap_or_else(|_| {
            report(i + 1, false, "panicked");
            false
        });
        if !ok {
            failed += 1;
        }
    }
    if failed == 0 {
        std::process::ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        std::process::ExitCode::FAILURE
    }
}
