//! Experiment grids: every (scenario, seed) pair runs independently, in
//! parallel, and results are written in a fixed order.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{MetricsSample, RunSummary};
use crate::rl::QNetwork;

use super::config::{PolicyKind, ScenarioConfig};
use super::engine::{run_episode_with, RunOptions};

/// Lists of values to cross. Empty lists keep the base scenario's value.
/// `beta` only applies to BS-CAP runs and `omega` only to ConCov runs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepGrid {
    pub policy: Vec<PolicyKind>,
    pub n_uavs: Vec<usize>,
    pub speed_mps: Vec<f64>,
    pub failure_pct: Vec<f64>,
    pub beta: Vec<f64>,
    pub omega: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// Runs per scenario; seeds are `base_seed .. base_seed + seeds`.
    pub seeds: u64,
    #[serde(default = "default_base_seed")]
    pub base_seed: u64,
    #[serde(default)]
    pub scenario: ScenarioConfig,
    #[serde(default)]
    pub grid: SweepGrid,
}

fn default_base_seed() -> u64 {
    1
}

impl SweepSpec {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds == 0 {
            return Err(Error::config("seeds must be at least 1"));
        }
        for c in self.scenarios() {
            c.validate()?;
        }
        Ok(())
    }

    /// The scenario grid in a fixed order.
    pub fn scenarios(&self) -> Vec<ScenarioConfig> {
        fn or_base<T: Clone>(list: &[T], base: T) -> Vec<T> {
            if list.is_empty() {
                vec![base]
            } else {
                list.to_vec()
            }
        }
        let b = &self.scenario;
        let mut out = Vec::new();
        for &policy in &or_base(&self.grid.policy, b.policy) {
            for &n in &or_base(&self.grid.n_uavs, b.n_uavs) {
                for &speed in &or_base(&self.grid.speed_mps, b.speed_mps) {
                    for &fail in &or_base(&self.grid.failure_pct, b.failure_pct) {
                        let mut c = b.clone();
                        c.policy = policy;
                        c.n_uavs = n;
                        c.speed_mps = speed;
                        c.failure_pct = fail;
                        match policy {
                            PolicyKind::Bscap => {
                                for &beta in &or_base(&self.grid.beta, b.bscap.beta) {
                                    let mut v = c.clone();
                                    v.bscap.beta = beta;
                                    out.push(v);
                                }
                            }
                            PolicyKind::Concov => {
                                for &omega in &or_base(&self.grid.omega, b.concov.omega) {
                                    let mut v = c.clone();
                                    v.concov.omega = omega;
                                    out.push(v);
                                }
                            }
                            _ => out.push(c),
                        }
                    }
                }
            }
        }
        out
    }
}

/// One (scenario, seed) result.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRow {
    pub scenario: usize,
    pub policy: PolicyKind,
    pub params: String,
    pub n_uavs: usize,
    pub speed_mps: f64,
    pub failure_pct: f64,
    pub seed: u64,
    pub outcome: std::result::Result<RunSummary, String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MeanSem {
    pub mean: f64,
    pub sem: f64,
    pub n: usize,
}

impl MeanSem {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self { mean: f64::NAN, sem: f64::NAN, n };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let sem = if n > 1 {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, sem, n }
    }
}

/// Per-scenario statistics over seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub policy: PolicyKind,
    pub params: String,
    pub n_uavs: usize,
    pub speed_mps: f64,
    pub failure_pct: f64,
    pub runs: usize,
    pub failed_runs: usize,
    pub tc_censored: usize,
    pub coverage_end: MeanSem,
    /// Over runs that reached the coverage target.
    pub tc: MeanSem,
    pub fairness: MeanSem,
    pub ncc: MeanSem,
    pub and: MeanSem,
    pub tbs: MeanSem,
    pub giant: MeanSem,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub runs: Vec<RunRow>,
    pub aggregates: Vec<AggregateRow>,
}

pub fn aggregate(rows: &[&RunRow]) -> Option<AggregateRow> {
    let first = rows.first()?;
    let ok: Vec<&RunSummary> = rows.iter().filter_map(|r| r.outcome.as_ref().ok()).collect();
    let collect = |f: &dyn Fn(&RunSummary) -> Option<f64>| -> Vec<f64> { ok.iter().filter_map(|s| f(s)).collect() };
    Some(AggregateRow {
        policy: first.policy,
        params: first.params.clone(),
        n_uavs: first.n_uavs,
        speed_mps: first.speed_mps,
        failure_pct: first.failure_pct,
        runs: rows.len(),
        failed_runs: rows.len() - ok.len(),
        tc_censored: ok.iter().filter(|s| s.tc.is_none()).count(),
        coverage_end: MeanSem::of(&collect(&|s| Some(s.coverage_end))),
        tc: MeanSem::of(&collect(&|s| s.tc)),
        fairness: MeanSem::of(&collect(&|s| s.fairness)),
        ncc: MeanSem::of(&collect(&|s| Some(s.ncc))),
        and: MeanSem::of(&collect(&|s| Some(s.and))),
        tbs: MeanSem::of(&collect(&|s| Some(s.tbs))),
        giant: MeanSem::of(&collect(&|s| Some(s.giant))),
    })
}

/// Runs every pair of the grid. A failing run is recorded in its row and the
/// sweep continues.
pub fn run_sweep(spec: &SweepSpec, net: Option<&QNetwork>) -> Result<SweepResult> {
    spec.validate()?;
    let scenarios = spec.scenarios();
    let jobs: Vec<(usize, u64)> = (0..scenarios.len())
        .flat_map(|i| (0..spec.seeds).map(move |s| (i, spec.base_seed + s)))
        .collect();
    let runs: Vec<RunRow> = jobs
        .par_iter()
        .map(|&(i, seed)| {
            let mut cfg = scenarios[i].clone();
            cfg.seed = seed;
            cfg.record_events = false;
            let outcome = run_episode_with(
                &cfg,
                RunOptions {
                    net,
                    ..Default::default()
                },
            )
            .map(|t| t.summary)
            .map_err(|e| e.to_string());
            RunRow {
                scenario: i,
                policy: cfg.policy,
                params: cfg.params_label(),
                n_uavs: cfg.n_uavs,
                speed_mps: cfg.speed_mps,
                failure_pct: cfg.failure_pct,
                seed,
                outcome,
            }
        })
        .collect();
    let aggregates = (0..scenarios.len())
        .filter_map(|i| aggregate(&runs.iter().filter(|r| r.scenario == i).collect::<Vec<_>>()))
        .collect();
    Ok(SweepResult { runs, aggregates })
}

fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.6}")
    } else {
        String::new()
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

pub const RUN_COLUMNS: [&str; 14] = [
    "policy",
    "params",
    "n_uavs",
    "speed_mps",
    "failure_pct",
    "seed",
    "coverage_end",
    "tc",
    "fairness",
    "ncc",
    "and",
    "tbs",
    "giant",
    "error",
];

pub fn write_runs_csv<W: Write>(rows: &[RunRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RUN_COLUMNS)?;
    for r in rows {
        let mut rec = vec![
            r.policy.to_string(),
            r.params.clone(),
            r.n_uavs.to_string(),
            num(r.speed_mps),
            num(r.failure_pct),
            r.seed.to_string(),
        ];
        match &r.outcome {
            Ok(s) => {
                rec.extend([
                    num(s.coverage_end),
                    opt(s.tc),
                    opt(s.fairness),
                    num(s.ncc),
                    num(s.and),
                    num(s.tbs),
                    num(s.giant),
                    String::new(),
                ]);
            }
            Err(e) => {
                rec.extend(std::iter::repeat(String::new()).take(7));
                rec.push(e.clone());
            }
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

const METRICS: [&str; 7] = ["coverage_end", "tc", "fairness", "ncc", "and", "tbs", "giant"];

pub fn write_aggregate_csv<W: Write>(rows: &[AggregateRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = ["policy", "params", "n_uavs", "speed_mps", "failure_pct", "runs", "failed_runs", "tc_censored"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for m in METRICS {
        header.push(format!("{m}_mean"));
        header.push(format!("{m}_sem"));
    }
    w.write_record(&header)?;
    for a in rows {
        let mut rec = vec![
            a.policy.to_string(),
            a.params.clone(),
            a.n_uavs.to_string(),
            num(a.speed_mps),
            num(a.failure_pct),
            a.runs.to_string(),
            a.failed_runs.to_string(),
            a.tc_censored.to_string(),
        ];
        for m in [a.coverage_end, a.tc, a.fairness, a.ncc, a.and, a.tbs, a.giant] {
            rec.push(num(m.mean));
            rec.push(num(m.sem));
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub const SAMPLE_COLUMNS: [&str; 6] = ["time", "coverage_pct", "ncc", "and", "giant", "tbs_instant"];

pub fn write_samples_csv<W: Write>(samples: &[MetricsSample], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SAMPLE_COLUMNS)?;
    for s in samples {
        w.write_record([
            num(s.time),
            num(s.coverage_pct),
            s.ncc.to_string(),
            num(s.and),
            s.giant.to_string(),
            num(s.tbs_instant()),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `runs.csv` and `aggregate.csv` into `dir`.
pub fn write_sweep(result: &SweepResult, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_runs_csv(&result.runs, std::fs::File::create(dir.join("runs.csv"))?)?;
    write_aggregate_csv(&result.aggregates, std::fs::File::create(dir.join("aggregate.csv"))?)?;
    Ok(())
}
