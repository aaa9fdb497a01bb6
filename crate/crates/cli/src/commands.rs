use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use rayon::prelude::*;
use serde_json::json;
use tensoranom::dtf::{self, Mask};
use tensoranom::eval::{auc_roc, best_f1, f1_at, topk_detected, EvalReport, EventList};
use tensoranom::graph::{grid_graph, SpatialGraph, TemporalOperator};
use tensoranom::ingest::{ingest_csv, IngestOptions};
use tensoranom::scoring::{abs_scores, nll_scores, threshold, ScoreMethod, ScoreSidecar, ScoringConfig};
use tensoranom::solver::{decompose, SolverConfig, Variant};
use tensoranom::synth::{generate, SynthConfig};
use tensoranom::tuning::{random_search, Objective, SearchSpec, Target};
use tensoranom::Tensor;

use crate::args::*;
use crate::config::{resolve_seed, FileConfig, ScoringSection, SolverSection};
use crate::manifest::Recorder;

const DEFAULT_GRID: (usize, usize) = (8, 5);

fn out_dir(p: &Path) -> Result<()> {
    std::fs::create_dir_all(p).with_context(|| format!("creating {}", p.display()))
}

fn load_tensor(p: &Path, rec: &mut Recorder) -> Result<Tensor> {
    rec.input(p);
    dtf::load_tensor(p).with_context(|| format!("reading {}", p.display()))
}

fn load_mask(p: &Path, rec: &mut Recorder) -> Result<Mask> {
    rec.input(p);
    dtf::load_mask(p).with_context(|| format!("reading {}", p.display()))
}

fn save_tensor(dir: &Path, name: &str, t: &Tensor, rec: &mut Recorder) -> Result<PathBuf> {
    let p = dir.join(name);
    dtf::save_tensor(&p, t).with_context(|| format!("writing {}", p.display()))?;
    rec.output(&p);
    Ok(p)
}

fn save_mask(dir: &Path, name: &str, m: &Mask, rec: &mut Recorder) -> Result<PathBuf> {
    let p = dir.join(name);
    dtf::save_mask(&p, m).with_context(|| format!("writing {}", p.display()))?;
    rec.output(&p);
    Ok(p)
}

fn save_json<S: serde::Serialize>(dir: &Path, name: &str, v: &S, rec: &mut Recorder) -> Result<PathBuf> {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_string_pretty(v)?).with_context(|| format!("writing {}", p.display()))?;
    rec.output(&p);
    Ok(p)
}

fn graph_from(args: &GraphArgs, n_locations: usize, rec: &mut Recorder) -> Result<(SpatialGraph, serde_json::Value)> {
    let (g, desc) = match (&args.graph, args.grid) {
        (Some(p), _) => {
            rec.input(p);
            let f = File::open(p).with_context(|| format!("opening graph {}", p.display()))?;
            let g = SpatialGraph::read_csv(BufReader::new(f)).with_context(|| format!("reading graph {}", p.display()))?;
            (g, json!({ "file": p }))
        }
        (None, grid) => {
            let (r, c) = grid.unwrap_or(DEFAULT_GRID);
            (grid_graph(r, c)?, json!({ "grid": [r, c] }))
        }
    };
    if g.n_nodes() != n_locations {
        bail!(
            "graph has {} nodes but the location mode has size {n_locations}",
            g.n_nodes()
        );
    }
    Ok((g, desc))
}

/// 0-based (location, time) modes from 1-based flags, the 0-based config
/// file, or the defaults (first and last mode).
fn modes_from(args: &ModeArgs, file: &SolverSection, order: usize) -> Result<(usize, usize)> {
    let one_based = |v: Option<usize>, name: &str| -> Result<Option<usize>> {
        match v {
            Some(0) => bail!("--{name} is 1-based"),
            Some(m) => Ok(Some(m - 1)),
            None => Ok(None),
        }
    };
    let loc = one_based(args.location_mode, "location-mode")?
        .or(file.location_mode)
        .unwrap_or(0);
    let time = one_based(args.time_mode, "time-mode")?
        .or(file.time_mode)
        .unwrap_or(order.saturating_sub(1));
    if loc >= order || time >= order || loc == time {
        bail!("location mode {} and time mode {} must be distinct modes of a {order}-mode tensor", loc + 1, time + 1);
    }
    Ok((loc, time))
}

struct Solver {
    cfg: SolverConfig<f64>,
    variant: Variant,
}

impl Solver {
    fn resolve(
        args: &SolverArgs,
        file: &FileConfig,
        graph: SpatialGraph,
        order: usize,
        loc: usize,
        time: usize,
    ) -> Result<Self> {
        let f = &file.solver;
        let mut cfg = SolverConfig::new(graph, order, loc, time);
        let lambda1 = args.lambda1.or(f.lambda1).unwrap_or(cfg.lambda1);
        cfg = cfg.with_tied_lambda1(lambda1);
        if let Some(psi) = args.psi.clone().or_else(|| f.psi.clone()) {
            cfg.psi = psi;
        }
        cfg.lambda_l = args.lambda_l.or(f.lambda_l).unwrap_or(cfg.lambda_l);
        cfg.lambda_t = args.lambda_t.or(f.lambda_t).unwrap_or(cfg.lambda_t);
        cfg.rho = args.rho.or(f.rho).unwrap_or(cfg.rho);
        cfg.max_iterations = args.max_iter.or(f.max_iterations).unwrap_or(cfg.max_iterations);
        cfg.tolerance = args.tol.or(f.tolerance).unwrap_or(cfg.tolerance);
        cfg.temporal_operator = if args.cyclic {
            TemporalOperator::Cyclic
        } else {
            f.temporal_operator.unwrap_or_default()
        };
        let variant = args.variant.or(file.variant).unwrap_or(Variant::LrStss);
        variant.apply(&mut cfg);
        Ok(Self { cfg, variant })
    }

    fn snapshot(&self) -> serde_json::Value {
        let c = &self.cfg;
        json!({
            "variant": self.variant,
            "lambda1": c.lambda1,
            "lambda_l": c.lambda_l,
            "lambda_t": c.lambda_t,
            "psi": c.psi,
            "rho": c.rho,
            "max_iterations": c.max_iterations,
            "tolerance": c.tolerance,
            "temporal_operator": c.temporal_operator,
            "location_mode": c.location_mode,
            "time_mode": c.time_mode,
        })
    }
}

struct Scoring {
    cfg: ScoringConfig<f64>,
    method: ScoreMethod,
}

impl Scoring {
    fn resolve(args: &ScoringArgs, f: &ScoringSection, graph: SpatialGraph, loc: usize, time: usize) -> Self {
        let mut cfg = ScoringConfig::new(graph, loc, time);
        cfg.k_hop = args.k_hop.or(f.k_hop).unwrap_or(cfg.k_hop);
        cfg.tau = args.tau.or(f.tau);
        cfg.alpha = args.alpha.or(f.alpha).unwrap_or(cfg.alpha);
        cfg.sigma_floor = args.sigma_floor.or(f.sigma_floor).unwrap_or(cfg.sigma_floor);
        cfg.block_local = args.block_local || f.block_local.unwrap_or(false);
        let method = args.method.or(f.method).unwrap_or(ScoreMethod::Nll);
        Self { cfg, method }
    }

    fn run(&self, s_hat: &Tensor) -> tensoranom::Result<tensoranom::Scores> {
        match self.method {
            ScoreMethod::Nll => nll_scores(s_hat, &self.cfg),
            ScoreMethod::Abs => abs_scores(s_hat, self.cfg.alpha),
        }
    }

    fn snapshot(&self) -> serde_json::Value {
        let c = &self.cfg;
        json!({
            "method": self.method,
            "k_hop": c.k_hop,
            "tau": c.tau,
            "alpha": c.alpha,
            "sigma_floor": c.sigma_floor,
            "block_local": c.block_local,
            "location_mode": c.location_mode,
            "time_mode": c.time_mode,
        })
    }
}

fn synth_config(p: &SynthParams, base: Option<SynthConfig>, seed: u64) -> Result<SynthConfig> {
    let mut c = base.unwrap_or_default();
    if let Some(s) = &p.shape {
        c.shape = s.clone();
        if p.modes.time_mode.is_none() && c.time_mode >= s.len() {
            c.time_mode = s.len() - 1;
        }
    }
    if let Some(r) = &p.rank {
        c.tucker_rank = r.clone();
    }
    if let Some(g) = p.grid {
        c.grid = g;
    }
    let zero_based = |v: usize, name: &str| -> Result<usize> {
        v.checked_sub(1).ok_or_else(|| anyhow!("--{name} is 1-based"))
    };
    if let Some(m) = p.modes.location_mode {
        c.location_mode = zero_based(m, "location-mode")?;
    }
    if let Some(m) = p.modes.time_mode {
        c.time_mode = zero_based(m, "time-mode")?;
    }
    if let Some(v) = p.r {
        c.r = v;
    }
    if let Some(v) = p.d {
        c.d = v;
    }
    if let Some(v) = p.g {
        c.g = v;
    }
    if let Some(v) = p.c {
        c.c = v;
    }
    if let Some(v) = p.snr {
        c.snr_db = v;
    }
    c.random_sign |= p.random_sign;
    c.seed = seed;
    c.validate()?;
    Ok(c)
}

pub fn synth(a: &SynthArgs) -> Result<()> {
    let mut rec = Recorder::new("synth");
    if let Some(p) = &a.config {
        rec.input(p);
    }
    let file = FileConfig::load(a.config.as_deref())?;
    let seed = resolve_seed(a.seed, file.seed.or(file.synth.as_ref().map(|s| s.seed)))?;
    let cfg = synth_config(&a.params, file.synth, seed)?;
    let ds = generate::<f64>(&cfg)?;
    let dir = &a.output;
    out_dir(dir)?;
    save_tensor(dir, "y.dtf", &ds.y, &mut rec)?;
    save_mask(dir, "labels.dtf", &ds.labels, &mut rec)?;
    save_tensor(dir, "x_true.dtf", &ds.x_true, &mut rec)?;
    save_tensor(dir, "s_true.dtf", &ds.s_true, &mut rec)?;
    save_json(dir, "synth.json", &ds.manifest()?, &mut rec)?;
    save_json(dir, "events.json", &ds.events()?, &mut rec)?;
    let gp = dir.join("graph.csv");
    cfg.graph()?.write_csv(BufWriter::new(File::create(&gp)?))?;
    rec.output(&gp);
    log::info!("{} anomalous entries of {}", ds.labels.count(), ds.labels.data.len());
    rec.finish(dir, serde_json::to_value(&cfg)?, Some(seed))?;
    Ok(())
}

pub fn ingest(a: &IngestArgs) -> Result<()> {
    let mut rec = Recorder::new("ingest");
    rec.input(&a.input);
    let f = File::open(&a.input).with_context(|| format!("opening {}", a.input.display()))?;
    let opts = IngestOptions {
        reshape: a.reshape.clone(),
        has_header: a.header,
    };
    let out = ingest_csv(BufReader::new(f), &opts).with_context(|| format!("ingesting {}", a.input.display()))?;
    out_dir(&a.output)?;
    save_tensor(&a.output, "tensor.dtf", &out.tensor, &mut rec)?;
    log::info!(
        "shape {:?}, {} observed steps, {} imputed entries",
        out.tensor.shape(),
        out.observed_steps,
        out.imputed
    );
    let config = json!({
        "reshape": a.reshape,
        "has_header": a.header,
        "shape": out.tensor.shape(),
        "observed_steps": out.observed_steps,
        "imputed": out.imputed,
    });
    rec.finish(&a.output, config, None)?;
    Ok(())
}

pub fn decompose_cmd(a: &DecomposeArgs) -> Result<()> {
    let mut rec = Recorder::new("decompose");
    if let Some(p) = &a.config {
        rec.input(p);
    }
    let file = FileConfig::load(a.config.as_deref())?;
    let y = load_tensor(&a.input, &mut rec)?;
    let (loc, time) = modes_from(&a.modes, &file.solver, y.order())?;
    let (graph, gdesc) = graph_from(&a.graph, y.shape()[loc], &mut rec)?;
    let solver = Solver::resolve(&a.solver, &file, graph, y.order(), loc, time)?;
    let res = decompose(&y, &solver.cfg)?;
    if res.converged {
        log::info!("converged after {} iterations", res.iterations);
    } else {
        log::warn!("stopped at the iteration limit ({}) without converging", res.iterations);
    }
    let dir = &a.output;
    out_dir(dir)?;
    save_tensor(dir, "x_hat.dtf", &res.x_hat, &mut rec)?;
    save_tensor(dir, "s_hat.dtf", &res.s_hat, &mut rec)?;
    let dp = dir.join("diagnostics.json");
    std::fs::write(&dp, res.diagnostics_json()?)?;
    rec.output(&dp);
    let config = json!({
        "solver": solver.snapshot(),
        "graph": gdesc,
        "converged": res.converged,
        "iterations": res.iterations,
    });
    rec.finish(dir, config, None)?;
    Ok(())
}

pub fn score(a: &ScoreArgs) -> Result<()> {
    let mut rec = Recorder::new("score");
    if let Some(p) = &a.config {
        rec.input(p);
    }
    let file = FileConfig::load(a.config.as_deref())?;
    let s_hat = load_tensor(&a.input, &mut rec)?;
    let (loc, time) = modes_from(&a.modes, &file.solver, s_hat.order())?;
    let (graph, gdesc) = graph_from(&a.graph, s_hat.shape()[loc], &mut rec)?;
    let scoring = Scoring::resolve(&a.scoring, &file.scoring, graph, loc, time);
    let field = scoring.run(&s_hat)?;
    let dir = &a.output;
    out_dir(dir)?;
    save_tensor(dir, "scores.dtf", &field.scores, &mut rec)?;
    save_mask(dir, "flags.dtf", &field.flags, &mut rec)?;
    let cfg_ref = (scoring.method == ScoreMethod::Nll).then_some(&scoring.cfg);
    save_json(dir, "score.json", &field.sidecar(scoring.cfg.alpha, cfg_ref), &mut rec)?;
    let config = json!({ "scoring": scoring.snapshot(), "graph": gdesc });
    rec.finish(dir, config, None)?;
    Ok(())
}

pub fn eval(a: &EvalArgs) -> Result<()> {
    let mut rec = Recorder::new("eval");
    if a.labels.is_none() && a.events.is_none() {
        bail!("eval needs --labels and/or --events");
    }
    let scores = load_tensor(&a.scores, &mut rec)?;
    let sidecar: Option<ScoreSidecar> = match &a.sidecar {
        Some(p) => {
            rec.input(p);
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            Some(serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?)
        }
        None => None,
    };
    let alpha = a.alpha.or(sidecar.as_ref().map(|s| s.alpha)).unwrap_or(0.05);
    let method = sidecar.as_ref().map(|s| s.method).unwrap_or(ScoreMethod::Nll);
    let (gamma, flags) = match &a.flags {
        Some(p) => {
            let m = load_mask(p, &mut rec)?;
            if m.shape != scores.shape() {
                bail!("flags shape {:?} does not match scores shape {:?}", m.shape, scores.shape());
            }
            (sidecar.as_ref().map(|s| s.gamma).unwrap_or(f64::NAN), m.data)
        }
        None => threshold(scores.as_slice(), alpha)?,
    };
    let mut report = serde_json::Map::new();
    if let Some(p) = &a.labels {
        let labels = load_mask(p, &mut rec)?;
        if labels.shape != scores.shape() {
            bail!("labels shape {:?} does not match scores shape {:?}", labels.shape, scores.shape());
        }
        let f = f1_at(&flags, &labels.data)?;
        let (best, best_thr) = best_f1(scores.as_slice(), &labels.data)?;
        let r = EvalReport {
            score_method: method,
            auc_roc: auc_roc(scores.as_slice(), &labels.data)?,
            f1: f.f1,
            precision: f.precision,
            recall: f.recall,
            threshold: gamma,
            best_f1: best,
            best_f1_threshold: best_thr,
        };
        report.insert("evaluation".into(), serde_json::to_value(r)?);
    }
    if let Some(p) = &a.events {
        rec.input(p);
        let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
        let events = EventList::from_json(&text)?;
        events.validate(scores.shape())?;
        let rows = a
            .topk
            .iter()
            .map(|&k| {
                Ok(json!({
                    "k_percent": k,
                    "detected": topk_detected(&scores, &events, k)?,
                    "events": events.events.len(),
                }))
            })
            .collect::<Result<Vec<_>>>()?;
        report.insert("topk".into(), serde_json::Value::Array(rows));
    }
    let report = serde_json::Value::Object(report);
    out_dir(&a.output)?;
    save_json(&a.output, "report.json", &report, &mut rec)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    rec.finish(&a.output, json!({ "alpha": alpha, "topk": a.topk }), None)?;
    Ok(())
}

pub fn tune(a: &TuneArgs) -> Result<()> {
    let mut rec = Recorder::new("tune");
    if let Some(p) = &a.config {
        rec.input(p);
    }
    let file = FileConfig::load(a.config.as_deref())?;
    let seed = resolve_seed(a.seed, file.seed)?;
    let y = load_tensor(&a.input, &mut rec)?;
    let (loc, time) = modes_from(&a.modes, &file.solver, y.order())?;
    let (graph, gdesc) = graph_from(&a.graph, y.shape()[loc], &mut rec)?;
    let solver = Solver::resolve(&a.solver, &file, graph.clone(), y.order(), loc, time)?;
    let scoring = Scoring::resolve(&a.scoring, &file.scoring, graph, loc, time);
    let kind = match (a.objective, &a.labels, &a.events) {
        (Some(k), _, _) => k,
        (None, Some(_), _) => ObjectiveKind::AucPlusF1,
        (None, None, Some(_)) => ObjectiveKind::TopkEvents,
        (None, None, None) => bail!("tune needs --labels or --events"),
    };
    let labels;
    let events;
    let (objective, target) = match kind {
        ObjectiveKind::AucPlusF1 => {
            let p = a.labels.as_ref().ok_or_else(|| anyhow!("auc-plus-f1 needs --labels"))?;
            labels = load_mask(p, &mut rec)?;
            if labels.shape != y.shape() {
                bail!("labels shape {:?} does not match data shape {:?}", labels.shape, y.shape());
            }
            (
                Objective::AucPlusF1 {
                    w_auc: a.w_auc,
                    w_f1: a.w_f1,
                },
                Target::Labels(&labels),
            )
        }
        ObjectiveKind::TopkEvents => {
            let p = a.events.as_ref().ok_or_else(|| anyhow!("topk-events needs --events"))?;
            rec.input(p);
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            events = EventList::from_json(&text)?;
            events.validate(y.shape())?;
            (Objective::TopkEvents { k_percent: a.k_percent }, Target::Events(&events))
        }
    };
    let spec = SearchSpec {
        n_trials: a.trials,
        seed,
        objective,
        method: scoring.method,
        variant: solver.variant,
        base: solver.cfg.clone(),
        scoring: scoring.cfg.clone(),
    };
    let outcome = random_search(&y, &spec, target)?;
    let dir = &a.output;
    out_dir(dir)?;
    let lp = dir.join("trials.jsonl");
    let mut w = BufWriter::new(File::create(&lp)?);
    outcome.write_jsonl(&mut w)?;
    w.flush()?;
    drop(w);
    rec.output(&lp);
    save_json(dir, "best.json", &outcome.best, &mut rec)?;
    log::info!(
        "best trial {}: objective {:?}, lambda1 {:.4}, lambda_l {:.3e}, lambda_t {:.3e}",
        outcome.best.trial,
        outcome.best.objective,
        outcome.best.lambda1,
        outcome.best.lambda_l,
        outcome.best.lambda_t
    );
    let config = json!({
        "solver": solver.snapshot(),
        "scoring": scoring.snapshot(),
        "graph": gdesc,
        "objective": objective,
        "n_trials": a.trials,
    });
    rec.finish(dir, config, Some(seed))?;
    Ok(())
}

struct BenchRow {
    variant: Variant,
    value: f64,
    seed: u64,
    auc: f64,
    f1: f64,
}

fn with_sweep(base: &SynthConfig, p: SweepParam, v: f64) -> Result<SynthConfig> {
    let mut c = base.clone();
    let count = |v: f64| -> Result<usize> {
        if v < 0.0 || v.fract() != 0.0 {
            bail!("{} takes non-negative integers, got {v}", p.name());
        }
        Ok(v as usize)
    };
    match p {
        SweepParam::Radius => c.r = count(v)?,
        SweepParam::Duration => c.d = count(v)?,
        SweepParam::Groups => c.g = count(v)?,
        SweepParam::Amplitude => c.c = v,
        SweepParam::Snr => c.snr_db = v,
    }
    c.validate()?;
    Ok(c)
}

fn mean_ci(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, 1.96 * (var / n).sqrt())
}

pub fn bench(a: &BenchArgs) -> Result<()> {
    let mut rec = Recorder::new("bench");
    if let Some(p) = &a.config {
        rec.input(p);
    }
    if a.solver.variant.is_some() {
        bail!("bench takes --variants, not --variant");
    }
    if a.seeds == 0 {
        bail!("--seeds must be at least 1");
    }
    let file = FileConfig::load(a.config.as_deref())?;
    let base_seed = resolve_seed(a.seed, file.seed)?;
    let base = synth_config(&a.synth, file.synth.clone(), base_seed)?;
    let variants = a.variants.clone().unwrap_or_else(|| Variant::ALL.to_vec());
    let graph = base.graph()?;
    let order = base.shape.len();
    let (loc, time) = (base.location_mode, base.time_mode);
    let solvers = variants
        .iter()
        .map(|&v| {
            let args = SolverArgs {
                variant: Some(v),
                ..a.solver.clone()
            };
            Solver::resolve(&args, &file, graph.clone(), order, loc, time)
        })
        .collect::<Result<Vec<_>>>()?;
    let scoring = Scoring::resolve(&a.scoring, &file.scoring, graph, loc, time);
    let points: Vec<(usize, f64, u64)> = a
        .values
        .iter()
        .enumerate()
        .flat_map(|(i, &v)| (0..a.seeds as u64).map(move |k| (i, v, base_seed + k)))
        .collect();
    let results: Vec<Vec<(usize, BenchRow)>> = points
        .par_iter()
        .map(|&(i, v, seed)| -> Result<Vec<(usize, BenchRow)>> {
            let mut sc = with_sweep(&base, a.sweep, v)?;
            sc.seed = seed;
            let ds = generate::<f64>(&sc)?;
            solvers
                .iter()
                .enumerate()
                .map(|(vi, s)| {
                    let res = decompose(&ds.y, &s.cfg)?;
                    let field = scoring.run(&res.s_hat)?;
                    let auc = auc_roc(field.scores.as_slice(), &ds.labels.data)?;
                    let f1 = f1_at(&field.flags.data, &ds.labels.data)?.f1;
                    log::info!("{} {}={v} seed {seed}: auc {auc:.4} f1 {f1:.4}", s.variant.name(), a.sweep.name());
                    Ok((
                        vi * a.values.len() + i,
                        BenchRow {
                            variant: s.variant,
                            value: v,
                            seed,
                            auc,
                            f1,
                        },
                    ))
                })
                .collect::<tensoranom::Result<Vec<_>>>()
                .with_context(|| format!("{}={v}, seed {seed}", a.sweep.name()))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows: Vec<(usize, BenchRow)> = results.into_iter().flatten().collect();
    rows.sort_by_key(|(key, r)| (*key, r.seed));

    let dir = &a.output;
    out_dir(dir)?;
    let rp = dir.join("results.csv");
    let mut w = BufWriter::new(File::create(&rp)?);
    writeln!(w, "variant,sweep_param,value,seed,auc,f1")?;
    for (_, r) in &rows {
        writeln!(w, "{},{},{},{},{},{}", r.variant.name(), a.sweep.name(), r.value, r.seed, r.auc, r.f1)?;
    }
    w.flush()?;
    drop(w);
    rec.output(&rp);

    let sp = dir.join("summary.csv");
    let mut w = BufWriter::new(File::create(&sp)?);
    writeln!(w, "variant,sweep_param,value,n,auc_mean,auc_ci95,f1_mean,f1_ci95")?;
    for group in rows.chunk_by(|a, b| a.0 == b.0) {
        let r0 = &group[0].1;
        let aucs: Vec<f64> = group.iter().map(|(_, r)| r.auc).collect();
        let f1s: Vec<f64> = group.iter().map(|(_, r)| r.f1).collect();
        let (am, ac) = mean_ci(&aucs);
        let (fm, fc) = mean_ci(&f1s);
        writeln!(
            w,
            "{},{},{},{},{am},{ac},{fm},{fc}",
            r0.variant.name(),
            a.sweep.name(),
            r0.value,
            group.len()
        )?;
    }
    w.flush()?;
    drop(w);
    rec.output(&sp);

    let config = json!({
        "sweep": a.sweep.name(),
        "values": a.values,
        "seeds": a.seeds,
        "synth": base,
        "solvers": solvers.iter().map(Solver::snapshot).collect::<Vec<_>>(),
        "scoring": scoring.snapshot(),
    });
    rec.finish(dir, config, Some(base_seed))?;
    Ok(())
}
