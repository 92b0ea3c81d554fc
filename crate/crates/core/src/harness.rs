//! Runs experiments: alone runs for speedup baselines, the shared run,
//! metrics, sweeps and their CSV output.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::{Arc, Mutex, OnceLock};

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::agents::{CpuParams, TraceRecord};
use crate::config::{ExperimentConfig, GridPoint};
use crate::dram::DramConfig;
use crate::error::{ConfigError, MetricsError, SimError};
use crate::metrics::{deadline_met_ratio, frame_rate, maximum_slowdown, weighted_speedup, CoreRun, RunStats};
use crate::policy::{PolicyKind, PolicyParams};
use crate::request::AccessKind;
use crate::sim::{DecisionRecord, SimConfig, SimOutput, Simulation};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{source}\nrecent scheduling decisions:\n{excerpt}")]
    Sim { source: SimError, excerpt: String },
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Keep the per-interval decision log in the result.
    pub decision_log: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub point: GridPoint,
    pub horizon: u64,
    pub stats: RunStats,
    pub weighted_speedup: f64,
    pub maximum_slowdown: f64,
    pub hwa_names: Vec<String>,
    pub met_ratio: Vec<Option<f64>>,
    pub fps: Vec<f64>,
    pub upl: Vec<Option<u64>>,
    pub decisions: Vec<DecisionRecord>,
}

impl RunResult {
    /// Lowest met ratio over accelerators that completed a period.
    pub fn min_met_ratio(&self) -> Option<f64> {
        self.met_ratio.iter().flatten().copied().reduce(f64::min)
    }

    pub fn met_ratio_of(&self, name: &str) -> Option<f64> {
        let i = self.hwa_names.iter().position(|n| n == name)?;
        self.met_ratio[i]
    }
}

const EXCERPT_LEN: usize = 8;

/// Runs a simulation, attaching recent decisions to invariant failures.
/// With `keep_decisions` the whole decision log is returned.
pub fn run_sim(cfg: SimConfig, keep_decisions: bool) -> Result<SimOutput, HarnessError> {
    let names: Vec<String> = cfg.hwas.iter().map(|h| h.name.clone()).collect();
    let mut cfg = cfg;
    cfg.log.decisions = true;
    let horizon = cfg.horizon;
    let mut sim = Simulation::new(cfg).map_err(|e| match e {
        SimError::Config(c) => HarnessError::Config(c),
        other => HarnessError::Sim {
            source: other,
            excerpt: String::new(),
        },
    })?;
    let fail = |sim: &Simulation, source: SimError| HarnessError::Sim {
        source,
        excerpt: format_decision_log(sim.recent_decisions(EXCERPT_LEN), &names),
    };
    while sim.now() < horizon {
        if let Err(e) = sim.step() {
            return Err(fail(&sim, e));
        }
        if !keep_decisions {
            sim.trim_decisions(4 * EXCERPT_LEN);
        }
    }
    if let Some(e) = sim.violation_error() {
        return Err(fail(&sim, e));
    }
    sim.finish().map_err(|e| HarnessError::Sim {
        source: e,
        excerpt: String::new(),
    })
}

type AloneKey = [u8; 32];

fn alone_cache() -> &'static Mutex<HashMap<AloneKey, CoreRun>> {
    static CACHE: OnceLock<Mutex<HashMap<AloneKey, CoreRun>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// Identifies an alone run by everything that can change its outcome.
pub fn alone_key(trace: &[TraceRecord], dram: &DramConfig, cpu: &CpuParams, horizon: u64) -> AloneKey {
    let mut h = Sha256::new();
    h.update(toml::to_string(dram).expect("dram config serializes").as_bytes());
    h.update(toml::to_string(cpu).expect("cpu params serialize").as_bytes());
    h.update(horizon.to_le_bytes());
    h.update((trace.len() as u64).to_le_bytes());
    for r in trace {
        h.update(r.nonmem_instructions.to_le_bytes());
        match r.access {
            Some(a) => {
                h.update([match a.kind {
                    AccessKind::Read => 1u8,
                    AccessKind::Write => 2,
                }]);
                h.update(a.address.to_le_bytes());
            }
            None => h.update([0u8]),
        }
    }
    h.finalize().into()
}

/// IPC of `trace` running by itself under FR-FCFS.
pub fn alone_run(
    trace: &Arc<[TraceRecord]>,
    dram: &DramConfig,
    cpu: &CpuParams,
    horizon: u64,
) -> Result<CoreRun, HarnessError> {
    let key = alone_key(trace, dram, cpu, horizon);
    if let Some(r) = alone_cache().lock().expect("alone cache").get(&key) {
        return Ok(*r);
    }
    let r = alone_run_uncached(trace, dram, cpu, horizon)?;
    alone_cache().lock().expect("alone cache").insert(key, r);
    Ok(r)
}

pub fn alone_run_uncached(
    trace: &Arc<[TraceRecord]>,
    dram: &DramConfig,
    cpu: &CpuParams,
    horizon: u64,
) -> Result<CoreRun, HarnessError> {
    let mut sim = SimConfig::new(dram.clone(), PolicyParams::with_kind(PolicyKind::FrFcfs), horizon);
    sim.cpu_traces = vec![trace.clone()];
    sim.cpu_params = *cpu;
    let out = run_sim(sim, false)?;
    Ok(CoreRun::from(&out.cpus[0]))
}

fn point_of(cfg: &ExperimentConfig) -> GridPoint {
    GridPoint {
        policy: cfg.policy.name,
        seed: cfg.seed,
        emergent_threshold: cfg.policy.emergent_threshold,
        cluster_factor: cfg.policy.cluster_factor,
    }
}

/// Alone runs for every core.
pub fn alone_runs(
    cfg: &ExperimentConfig,
    traces: &[Arc<[TraceRecord]>],
) -> Result<Vec<Option<CoreRun>>, HarnessError> {
    let run = |t: &Arc<[TraceRecord]>| alone_run(t, &cfg.dram, &cfg.cpu, cfg.horizon).map(Some);
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        traces.par_iter().map(run).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        traces.iter().map(run).collect()
    }
}

/// Shared run plus metrics, with traces and alone runs supplied.
pub fn run_with(
    cfg: &ExperimentConfig,
    traces: &[Arc<[TraceRecord]>],
    alone: &[Option<CoreRun>],
    opts: RunOptions,
) -> Result<RunResult, HarnessError> {
    let sim = cfg.sim_config(traces.to_vec())?;
    let mut out = run_sim(sim, opts.decision_log)?;
    let stats = RunStats::from_output(&out, alone.to_vec());
    let (ws, ms) = if stats.shared.is_empty() {
        (0.0, 1.0)
    } else {
        (weighted_speedup(&stats)?, maximum_slowdown(&stats)?)
    };
    Ok(RunResult {
        point: point_of(cfg),
        horizon: cfg.horizon,
        weighted_speedup: ws,
        maximum_slowdown: ms,
        hwa_names: out.hwas.iter().map(|h| h.name.clone()).collect(),
        met_ratio: stats.hwas.iter().map(deadline_met_ratio).collect(),
        fps: stats.hwas.iter().map(frame_rate).collect(),
        upl: out.hwas.iter().map(|h| h.upl).collect(),
        decisions: if opts.decision_log {
            std::mem::take(&mut out.decisions)
        } else {
            Vec::new()
        },
        stats,
    })
}

/// Validates the config, runs the cores alone, then the shared system.
pub fn run_experiment(cfg: &ExperimentConfig, opts: RunOptions) -> Result<RunResult, HarnessError> {
    cfg.validate()?;
    let traces = cfg.traces()?;
    let alone = alone_runs(cfg, &traces)?;
    run_with(cfg, &traces, &alone, opts)
}

/// Runs every grid point of the config's sweep (or the config itself
/// when it has none). Rows come back sorted by parameter key.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<Vec<RunResult>, HarnessError> {
    cfg.validate()?;
    let points = match &cfg.sweep {
        Some(grid) => grid.points(cfg),
        None => vec![point_of(cfg)],
    };
    let traces = cfg.traces()?;
    let alone = alone_runs(cfg, &traces)?;
    let run = |p: &GridPoint| run_with(&cfg.with_point(*p), &traces, &alone, RunOptions::default());
    #[cfg(feature = "parallel")]
    let results: Result<Vec<_>, _> = {
        use rayon::prelude::*;
        points.par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Result<Vec<_>, _> = points.iter().map(run).collect();
    let mut results = results?;
    results.sort_by(|a, b| {
        (a.point.policy.name(), a.point.seed)
            .cmp(&(b.point.policy.name(), b.point.seed))
            .then(a.point.emergent_threshold.total_cmp(&b.point.emergent_threshold))
            .then(a.point.cluster_factor.total_cmp(&b.point.cluster_factor))
    });
    Ok(results)
}

/// Formats with six significant digits.
pub fn sig6(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let rounded: f64 = format!("{x:.5e}").parse().expect("float round-trips");
    format!("{rounded}")
}

pub fn csv_header(hwa_names: &[String]) -> String {
    let mut h = String::from(
        "policy,seed,horizon,emergent_threshold,cluster_factor,weighted_speedup,maximum_slowdown",
    );
    for n in hwa_names {
        write!(h, ",met_ratio_{n},fps_{n}").unwrap();
    }
    h
}

pub fn csv_row(r: &RunResult) -> String {
    let mut row = format!(
        "{},{},{},{},{},{},{}",
        r.point.policy,
        r.point.seed,
        r.horizon,
        sig6(r.point.emergent_threshold),
        sig6(r.point.cluster_factor),
        sig6(r.weighted_speedup),
        sig6(r.maximum_slowdown),
    );
    for (m, f) in r.met_ratio.iter().zip(&r.fps) {
        write!(row, ",{},{}", m.map(sig6).unwrap_or_default(), sig6(*f)).unwrap();
    }
    row
}

/// Header plus one row per result.
pub fn to_csv(results: &[RunResult]) -> String {
    let names = results.first().map(|r| r.hwa_names.clone()).unwrap_or_default();
    let mut s = csv_header(&names);
    s.push('\n');
    for r in results {
        s.push_str(&csv_row(r));
        s.push('\n');
    }
    s
}

/// One line per interval: per-accelerator progress, urgency, group and pb,
/// then the CPU groups.
pub fn format_decision_log(records: &[DecisionRecord], hwa_names: &[String]) -> String {
    let mut s = String::new();
    for d in records {
        write!(s, "cycle={}", d.cycle).unwrap();
        for (i, h) in d.hwas.iter().enumerate() {
            let fallback = format!("hwa{i}");
            let name = hwa_names.get(i).unwrap_or(&fallback);
            write!(
                s,
                " {name}:cur={},exp={},urgent={},group={},pb={}",
                sig6(h.current),
                sig6(h.expected),
                u8::from(h.urgent),
                h.group,
                sig6(h.pb)
            )
            .unwrap();
        }
        let groups: Vec<String> = d.cpu_groups.iter().map(|g| g.to_string()).collect();
        writeln!(s, " cpu_groups={}", groups.join(",")).unwrap();
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(sig6(0.0), "0");
        assert_eq!(sig6(1.0), "1");
        assert_eq!(sig6(0.1234567), "0.123457");
        assert_eq!(sig6(1234567.0), "1234570");
        assert_eq!(sig6(0.9995), "0.9995");
        assert_eq!(sig6(f64::INFINITY), "inf");
    }

    #[test]
    fn header_lists_each_accelerator() {
        assert_eq!(
            csv_header(&["mat".into(), "hes".into()]),
            "policy,seed,horizon,emergent_threshold,cluster_factor,weighted_speedup,maximum_slowdown,met_ratio_mat,fps_mat,met_ratio_hes,fps_hes"
        );
    }
}
