//! End-to-end acceptance gate. Prints one line per criterion and exits
//! non-zero if any fails.

use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use memsched_core::agents::trace::{synthesize_trace, SynthProfile};
use memsched_core::agents::{HwaClass, HwaSpec, TraceRecord};
use memsched_core::config::presets;
use memsched_core::dram::DramConfig;
use memsched_core::harness::{alone_runs, run_with, RunOptions, RunResult};
use memsched_core::meta::{draw_pb, update_pb, LdpCounters, PbDraw};
use memsched_core::metrics::{
    deadline_met_ratio, frame_rate, maximum_slowdown, weighted_speedup, CoreRun, HwaRun, RunStats,
};
use memsched_core::oracle::cross_check;
use memsched_core::policy::SquashFeatures;
use memsched_core::scenarios::{adversarial_sdp_set, three_agent_example, EXAMPLE_T as T};
use memsched_core::sim::{simulate, SimConfig, SimOutput, Simulation};
use memsched_core::{AgentId, ExperimentConfig, PolicyKind, PolicyParams, SimError};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn order(out: &SimOutput) -> Vec<(AgentId, u64)> {
    out.service.iter().map(|s| (s.agent, s.issue)).collect()
}

fn slots(runs: &[(AgentId, u64)]) -> Vec<(AgentId, u64)> {
    let mut t = 0;
    let mut out = Vec::new();
    for &(agent, n) in runs {
        for _ in 0..n {
            out.push((agent, t));
            t += T;
        }
    }
    out
}

fn progress_at(out: &SimOutput, cycle: u64) -> (f64, f64, bool) {
    let d = out.decisions.iter().rev().find(|d| d.cycle <= cycle).unwrap();
    (d.hwas[0].current, d.hwas[0].expected, d.hwas[0].urgent)
}

fn cpu_a_last_completion(out: &SimOutput) -> u64 {
    out.service
        .iter()
        .filter(|s| s.agent == AgentId::Cpu(0))
        .map(|s| s.completion)
        .max()
        .unwrap()
}

const HWA: AgentId = AgentId::Hwa(0);
const CPU_A: AgentId = AgentId::Cpu(0);
const CPU_B: AgentId = AgentId::Cpu(1);

fn golden_a() -> Outcome {
    let start = Instant::now();
    let out = simulate(three_agent_example(SquashFeatures::dist_prio())).unwrap();
    let elapsed = start.elapsed();
    let expected = slots(&[(HWA, 4), (CPU_A, 1), (CPU_B, 3), (HWA, 4), (CPU_A, 1), (CPU_B, 3)]);
    let p4 = progress_at(&out, 4 * T);
    let p8 = progress_at(&out, 8 * T);
    let pass = order(&out) == expected
        && p4 == (0.5, 0.25, false)
        && p8 == (0.5, 0.5, true)
        && out.hwas[0].deadlines_met == 1
        && elapsed < Duration::from_secs(1);
    outcome(pass, format!("progress@4T={p4:?} @8T={p8:?} in {elapsed:?}"))
}

fn golden_b() -> Outcome {
    let base = simulate(three_agent_example(SquashFeatures::dist_prio())).unwrap();
    let out = simulate(three_agent_example(SquashFeatures::app_aware_dist_prio())).unwrap();
    let expected = slots(&[(HWA, 4), (CPU_A, 1), (HWA, 3), (CPU_A, 1), (HWA, 1), (CPU_B, 6)]);
    let p8 = progress_at(&out, 8 * T);
    let (a, b) = (cpu_a_last_completion(&out), cpu_a_last_completion(&base));
    let pass = order(&out) == expected && p8 == (0.875, 0.5, false) && a < b;
    outcome(pass, format!("progress@8T={p8:?}, CPU-A done at {a} vs {b}"))
}

fn upl_guarantee() -> Outcome {
    let start = Instant::now();
    let (mut accepted, mut periods, mut missed) = (0, 0, 0);
    for seed in 0..100 {
        let cfg = adversarial_sdp_set(seed, 30_000);
        let sim = match Simulation::new(cfg) {
            Ok(s) => s,
            Err(SimError::Config(_)) => continue,
            Err(e) => return outcome(false, format!("seed {seed}: {e}")),
        };
        accepted += 1;
        let out = match sim.run() {
            Ok(o) => o,
            Err(e) => return outcome(false, format!("seed {seed}: {e}")),
        };
        for h in &out.hwas {
            periods += h.deadlines_met + h.deadlines_missed;
            missed += h.deadlines_missed;
        }
    }
    let elapsed = start.elapsed();
    let pass = accepted >= 50 && missed == 0 && elapsed < Duration::from_secs(30);
    outcome(
        pass,
        format!("{accepted}/100 sets accepted, {missed} of {periods} periods missed, {elapsed:?}"),
    )
}

/// Config-A runs shared by the sweep criteria.
struct Workload {
    dyn_sweep: Vec<RunResult>,
    dyn_time: Duration,
    squash_cf: Vec<RunResult>,
    heavy: String,
}

fn workload() -> Workload {
    let cfg = presets::config_a();
    let traces = cfg.traces().unwrap();
    let specs = cfg.hwa_specs().unwrap();
    let heavy = specs
        .iter()
        .max_by(|a, b| {
            let bw = |h: &HwaSpec| h.max_requests() as f64 / h.min_period() as f64;
            bw(a).total_cmp(&bw(b))
        })
        .unwrap()
        .name
        .clone();
    let grid: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
    let run = |policy: PolicyKind, threshold: f64, cf: f64, alone: &[Option<CoreRun>]| {
        let mut c: ExperimentConfig = cfg.clone();
        c.policy.name = policy;
        c.policy.emergent_threshold = threshold;
        c.policy.cluster_factor = cf;
        run_with(&c, &traces, alone, RunOptions::default()).unwrap()
    };
    let start = Instant::now();
    let alone = alone_runs(&cfg, &traces).unwrap();
    let dyn_sweep = grid
        .iter()
        .map(|&th| run(PolicyKind::FrFcfsDyn, th, cfg.policy.cluster_factor, &alone))
        .collect();
    let dyn_time = start.elapsed();
    let squash_cf = grid
        .iter()
        .map(|&cf| run(PolicyKind::Squash, 0.8, cf, &alone))
        .collect();
    Workload {
        dyn_sweep,
        dyn_time,
        squash_cf,
        heavy,
    }
}

fn tradeoff_trend(w: &Workload) -> Outcome {
    let met: Vec<f64> = w
        .dyn_sweep
        .iter()
        .map(|r| r.met_ratio_of(&w.heavy).unwrap_or(0.0))
        .collect();
    let rises: Vec<f64> = met.windows(2).map(|p| p[1] - p[0]).filter(|&d| d > 0.0).collect();
    let monotone = rises.is_empty() || (rises.len() == 1 && rises[0] <= 0.005);
    let ws = |th: usize| w.dyn_sweep[th].weighted_speedup;
    let gain = ws(9) / ws(1) - 1.0;
    let pass = monotone && met[9] < 1.0 && gain >= 0.10 && w.dyn_time < Duration::from_secs(300);
    let ratios: Vec<String> = met.iter().map(|m| format!("{:.4}", m)).collect();
    outcome(
        pass,
        format!(
            "{} met [{}], WS 0.9/0.1 = +{:.1}%, {:?}",
            w.heavy,
            ratios.join(" "),
            100.0 * gain,
            w.dyn_time
        ),
    )
}

fn squash_deadlines(w: &Workload) -> Outcome {
    let worst = w
        .squash_cf
        .iter()
        .map(|r| {
            r.met_ratio
                .iter()
                .map(|m| m.unwrap_or(0.0))
                .fold(1.0, f64::min)
        })
        .fold(1.0, f64::min);
    outcome(worst == 1.0, format!("lowest met ratio over 11 cluster factors: {worst}"))
}

fn cpu_benefit(w: &Workload) -> Outcome {
    let all_met = |r: &RunResult| r.met_ratio.iter().all(|m| *m == Some(1.0));
    let Some(dyn_best) = w.dyn_sweep.iter().find(|r| all_met(r)) else {
        return outcome(false, "no dynamic-priority threshold meets every deadline");
    };
    let squash = w
        .squash_cf
        .iter()
        .find(|r| r.point.cluster_factor == presets::config_a().policy.cluster_factor)
        .unwrap();
    let gain = squash.weighted_speedup / dyn_best.weighted_speedup - 1.0;
    outcome(
        gain > 0.0,
        format!(
            "WS {:.4} vs {:.4} at threshold {} ({:+.1}%)",
            squash.weighted_speedup,
            dyn_best.weighted_speedup,
            dyn_best.point.emergent_threshold,
            100.0 * gain
        ),
    )
}

fn random_workload(seed: u64, policy: PolicyKind) -> SimConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dram = DramConfig::ddr3_1333();
    let cores = rng.gen_range(1..=4);
    let traces: Vec<Arc<[TraceRecord]>> = (0..cores)
        .map(|c| {
            let p = SynthProfile::new(
                rng.gen_range(0.5..60.0),
                200_000,
                rng.gen_range(0.0..0.9),
                seed * 16 + c,
            );
            Arc::from(synthesize_trace(&p, &dram).unwrap())
        })
        .collect();
    let top = dram.total_bytes();
    let hwas: Vec<HwaSpec> = (0..rng.gen_range(1..=3u64))
        .map(|i| {
            let class = if rng.gen_bool(0.5) { HwaClass::Ldp } else { HwaClass::Sdp };
            let period = match class {
                HwaClass::Ldp => rng.gen_range(5_000..40_000),
                HwaClass::Sdp => rng.gen_range(1_000..4_000),
            };
            let requests = rng.gen_range(1..=period / 200);
            let mut h = HwaSpec::fixed(&format!("h{i}"), class, period, requests);
            h.region_bytes = 1 << 20;
            h.address_base = top - (i + 1) * h.region_bytes;
            h
        })
        .collect();
    let mut cfg = SimConfig::new(dram, PolicyParams::with_kind(policy), 300_000);
    cfg.cpu_traces = traces;
    cfg.hwas = hwas;
    cfg.seed = seed;
    cfg
}

fn timing_audit() -> Outcome {
    let mut served = 0;
    for seed in 0..10 {
        for p in PolicyKind::ALL {
            match simulate(random_workload(seed, p)) {
                Ok(out) => served += out.requests_served,
                Err(SimError::Config(_)) if p == PolicyKind::Squash => {
                    // Over-subscribed short-period set; rerun without the window bound.
                    let mut cfg = random_workload(seed, p);
                    cfg.policy.features.sdp_upl = false;
                    match simulate(cfg) {
                        Ok(out) => served += out.requests_served,
                        Err(e) => return outcome(false, format!("seed {seed} {p}: {e}")),
                    }
                }
                Err(e) => return outcome(false, format!("seed {seed} {p}: {e}")),
            }
        }
    }
    outcome(served > 0, format!("50 runs, {served} requests, no violations"))
}

fn oracle_equivalence() -> Outcome {
    let dram = DramConfig {
        channels: 1,
        ranks_per_channel: 1,
        banks_per_rank: 2,
        rows_per_bank: 16,
        columns_per_row: 16,
        ..DramConfig::ddr3_1333()
    };
    match cross_check(&dram, 0, 200, 12) {
        Ok(m) if m.is_empty() => outcome(true, "200 instances, every completion cycle equal"),
        Ok(m) => outcome(false, format!("{} mismatches, first {:?}", m.len(), m[0])),
        Err(e) => outcome(false, e.to_string()),
    }
}

fn pb_statistics() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut c = LdpCounters::new(100, 1000);
    c.pb = 0.3;
    let swaps = (0..10_000)
        .filter(|_| draw_pb(&c, &mut rng) == PbDraw::Swap)
        .count();
    let frac = swaps as f64 / 10_000.0;

    let mut clamped = true;
    for seed in 0..200 {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let mut c = LdpCounters::new(1000, 1000);
        c.pb = r.gen_range(0.0..=1.0);
        for _ in 0..500 {
            c.curr_req = r.gen_range(0..=1000);
            c.curr_cyc = r.gen_range(0..=1000);
            let pb = update_pb(&mut c, r.gen_range(0.0..2.0), r.gen_range(0.0..2.0));
            clamped &= (0.0..=1.0).contains(&pb);
        }
    }
    outcome(
        (frac - 0.3).abs() <= 0.02 && clamped,
        format!("swap fraction {frac:.4}, pb within [0, 1]: {clamped}"),
    )
}

fn metrics_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..1000 {
        // Period outcomes grouped into frames; an unfinished frame counts
        // only once it holds a miss.
        let ppf = rng.gen_range(1..6usize);
        let periods = rng.gen_range(1..60u64);
        let miss_p = [0.0, 0.02, 0.5][rng.gen_range(0..3)];
        let outcomes: Vec<bool> = (0..periods).map(|_| !rng.gen_bool(miss_p)).collect();
        let frames: Vec<&[bool]> = outcomes
            .chunks(ppf)
            .filter(|f| f.len() == ppf || f.contains(&false))
            .collect();
        let h = HwaRun {
            deadlines_met: outcomes.iter().filter(|&&m| m).count() as u64,
            deadlines_missed: outcomes.iter().filter(|&&m| !m).count() as u64,
            frames_total: frames.len() as u64,
            frames_dropped: frames.iter().filter(|f| f.contains(&false)).count() as u64,
            target_fps: 30.0,
        };
        let full = deadline_met_ratio(&h) == Some(1.0);
        if full != (frame_rate(&h) == h.target_fps) {
            return outcome(false, format!("met/fps disagree on {h:?}"));
        }
    }
    for _ in 0..1000 {
        let n = rng.gen_range(1..10);
        let pairs: Vec<(u64, u64, u64)> = (0..n)
            .map(|_| (rng.gen_range(0..50_000), rng.gen_range(1..50_000), rng.gen_range(1..100_000)))
            .collect();
        let stats = RunStats {
            shared: pairs
                .iter()
                .map(|&(s, _, cyc)| CoreRun {
                    retired_instructions: s,
                    cycles: cyc,
                })
                .collect(),
            alone: pairs
                .iter()
                .map(|&(_, a, cyc)| {
                    Some(CoreRun {
                        retired_instructions: a,
                        cycles: cyc,
                    })
                })
                .collect(),
            hwas: Vec::new(),
        };
        // Same-cycle runs: IPC ratios reduce to instruction ratios.
        let ws_ref = pairs.iter().fold(0.0, |acc, &(s, a, _)| acc + s as f64 / a as f64);
        let ms_ref = pairs.iter().fold(0.0f64, |acc, &(s, a, _)| {
            acc.max(if s == 0 { f64::INFINITY } else { a as f64 / s as f64 })
        });
        let ws = weighted_speedup(&stats).unwrap();
        let ms = maximum_slowdown(&stats).unwrap();
        let close = |x: f64, y: f64| x == y || (x - y).abs() <= 1e-9 * y.abs().max(1.0);
        if !close(ws, ws_ref) || !close(ms, ms_ref) {
            return outcome(false, format!("WS {ws} vs {ws_ref}, MS {ms} vs {ms_ref}"));
        }
    }
    outcome(true, "1000 outcome vectors and 1000 stat records agree")
}

fn main() -> ExitCode {
    let report = |n: usize, name: &str, o: Outcome| {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("[{tag}] {n:>2} {name}: {}", o.detail);
        o.pass
    };
    let mut ok = true;
    ok &= report(1, "distributed-priority golden schedule", golden_a());
    ok &= report(2, "application-aware golden schedule", golden_b());
    ok &= report(3, "urgent-window guarantee, adversarial short periods", upl_guarantee());
    let w = workload();
    ok &= report(4, "threshold sweep trade-off under dynamic priority", tradeoff_trend(&w));
    ok &= report(5, "SQUASH deadlines at every cluster factor", squash_deadlines(&w));
    ok &= report(6, "SQUASH throughput over the safe dynamic-priority threshold", cpu_benefit(&w));
    ok &= report(7, "DRAM timing audit, 10 workloads x 5 policies", timing_audit());
    ok &= report(8, "FR-FCFS equivalence with brute-force reference", oracle_equivalence());
    ok &= report(9, "probabilistic switch statistics and clamping", pb_statistics());
    ok &= report(10, "metric identities", metrics_identities());
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
