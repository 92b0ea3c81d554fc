//! Browser bindings: the three-agent golden timelines, the urgent-window
//! calculator and a short threshold sweep. Every export returns JSON.

use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

use memsched_core::config::presets;
use memsched_core::harness::{alone_runs, run_with, RunOptions};
use memsched_core::meta::{compute_upl, SdpTask};
use memsched_core::policy::SquashFeatures;
use memsched_core::scenarios::{three_agent_example, EXAMPLE_T};
use memsched_core::sim::simulate;
use memsched_core::{AgentId, PolicyKind, TimingParams};

#[derive(Serialize)]
struct Slot {
    agent: String,
    issue: u64,
    completion: u64,
}

#[derive(Serialize)]
struct Progress {
    cycle: u64,
    current: f64,
    expected: f64,
    urgent: bool,
}

#[derive(Serialize)]
struct Timeline {
    t: u64,
    period: u64,
    slots: Vec<Slot>,
    progress: Vec<Progress>,
    deadline_met: bool,
}

fn agent_label(a: AgentId) -> String {
    match a {
        AgentId::Hwa(_) => "HWA".into(),
        AgentId::Cpu(0) => "CPU-A".into(),
        AgentId::Cpu(_) => "CPU-B".into(),
    }
}

/// Service order of the single-bank example with or without
/// application-aware priority.
#[wasm_bindgen]
pub fn golden_timeline(app_aware: bool) -> Result<String, String> {
    let features = if app_aware {
        SquashFeatures::app_aware_dist_prio()
    } else {
        SquashFeatures::dist_prio()
    };
    let out = simulate(three_agent_example(features)).map_err(|e| e.to_string())?;
    let timeline = Timeline {
        t: EXAMPLE_T,
        period: 16 * EXAMPLE_T,
        slots: out
            .service
            .iter()
            .map(|s| Slot {
                agent: agent_label(s.agent),
                issue: s.issue,
                completion: s.completion,
            })
            .collect(),
        progress: out
            .decisions
            .iter()
            .map(|d| Progress {
                cycle: d.cycle,
                current: d.hwas[0].current,
                expected: d.hwas[0].expected,
                urgent: d.hwas[0].urgent,
            })
            .collect(),
        deadline_met: out.hwas[0].deadlines_met == 1,
    };
    serde_json::to_string(&timeline).map_err(|e| e.to_string())
}

#[derive(Deserialize)]
struct TaskIn {
    period: u64,
    requests: u64,
}

#[derive(Serialize)]
struct TaskOut {
    upl: u64,
    priority_cyc: u64,
}

/// Urgent windows for `tasks_json` (`[{"period":..,"requests":..}]`);
/// `t_rc` and `slack` default to the DDR3-1333 values when zero.
#[wasm_bindgen]
pub fn urgent_windows(tasks_json: &str, t_rc: u64, slack: u64) -> Result<String, String> {
    let tasks: Vec<TaskIn> = serde_json::from_str(tasks_json).map_err(|e| e.to_string())?;
    let t = TimingParams::ddr3_1333();
    let t_rc = if t_rc == 0 { t.t_rc } else { t_rc };
    let slack = if slack == 0 { t.worst_case_service() } else { slack };
    let tasks: Vec<SdpTask> = tasks
        .iter()
        .map(|x| SdpTask {
            period: x.period,
            requests: x.requests,
        })
        .collect();
    let res = compute_upl(&tasks, t_rc, slack).map_err(|e| e.to_string())?;
    let out: Vec<TaskOut> = res
        .iter()
        .map(|r| TaskOut {
            upl: r.upl,
            priority_cyc: r.priority_cyc,
        })
        .collect();
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct SweepPoint {
    threshold: f64,
    weighted_speedup: f64,
    maximum_slowdown: f64,
    met_ratio: Vec<Option<f64>>,
}

#[derive(Serialize)]
struct Sweep {
    policy: String,
    horizon: u64,
    hwas: Vec<String>,
    points: Vec<SweepPoint>,
}

/// The four-accelerator, eight-core preset over a short horizon at each
/// threshold in `thresholds_json`.
#[wasm_bindgen]
pub fn threshold_sweep(policy: &str, thresholds_json: &str, horizon: u64) -> Result<String, String> {
    let policy: PolicyKind = policy.parse().map_err(|e: memsched_core::ConfigError| e.to_string())?;
    let thresholds: Vec<f64> = serde_json::from_str(thresholds_json).map_err(|e| e.to_string())?;
    if horizon == 0 || horizon > 5_000_000 {
        return Err("horizon must be between 1 and 5000000 cycles".into());
    }
    let mut cfg = presets::config_a();
    cfg.horizon = horizon;
    cfg.policy.name = policy;
    cfg.validate().map_err(|e| e.to_string())?;
    let traces = cfg.traces().map_err(|e| e.to_string())?;
    let alone = alone_runs(&cfg, &traces).map_err(|e| e.to_string())?;
    let mut points = Vec::new();
    let mut hwas = Vec::new();
    for th in thresholds {
        let mut c = cfg.clone();
        c.policy.emergent_threshold = th;
        c.validate().map_err(|e| e.to_string())?;
        let r = run_with(&c, &traces, &alone, RunOptions::default()).map_err(|e| e.to_string())?;
        hwas = r.hwa_names.clone();
        points.push(SweepPoint {
            threshold: th,
            weighted_speedup: r.weighted_speedup,
            maximum_slowdown: r.maximum_slowdown,
            met_ratio: r.met_ratio,
        });
    }
    let sweep = Sweep {
        policy: policy.name().into(),
        horizon,
        hwas,
        points,
    };
    serde_json::to_string(&sweep).map_err(|e| e.to_string())
}
