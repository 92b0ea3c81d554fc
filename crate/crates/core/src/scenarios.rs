//! Small hand-built workloads: the three-agent single-bank example and
//! the adversarial short-period set used to exercise urgent windows.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::agents::{CpuParams, HwaClass, HwaSpec, TraceRecord};
use crate::dram::{encode_address, Coords, DramConfig};
use crate::policy::{PolicyKind, PolicyParams, SquashFeatures};
use crate::request::AccessKind;
use crate::sim::{LogOptions, SimConfig};

/// Service time of one request in the single-bank example.
pub const EXAMPLE_T: u64 = 10;

/// One accelerator fetching 8 lines per 16T period and two cores sharing
/// a single bank whose every access takes T cycles. CPU-A issues one
/// request at cycle 0 and one at 7.5T; CPU-B keeps the bank saturated.
/// Priorities are re-evaluated every 4T.
pub fn three_agent_example(features: SquashFeatures) -> SimConfig {
    let t = EXAMPLE_T;
    let dram = DramConfig::uniform(1, 64, 16, t);
    let line = |row: u32, column: u32| {
        encode_address(
            &Coords {
                row,
                column,
                ..Coords::default()
            },
            &dram,
        )
    };
    // Emitting a memory op costs one cycle, so 3 * 74 compute instructions
    // put CPU-A's second request at cycle 75.
    let cpu_a: Vec<TraceRecord> = vec![
        TraceRecord::mem(0, line(10, 0), AccessKind::Read),
        TraceRecord::mem(222, line(11, 0), AccessKind::Read),
        TraceRecord::compute(1 << 40),
    ];
    let cpu_b: Vec<TraceRecord> = (0..48)
        .map(|i| TraceRecord::mem(0, line(20 + i, 0), AccessKind::Read))
        .collect();

    let mut hwa = HwaSpec::fixed("hwa", HwaClass::Ldp, 16 * t, 8);
    hwa.address_base = 0;
    hwa.region_bytes = 16 * dram.line_size;

    let policy = PolicyParams {
        name: PolicyKind::Squash,
        emergent_threshold: 1.0,
        scheduling_unit: 4 * t,
        switching_unit: 4 * t,
        quantum: 1 << 40,
        shuffle_interval: 1 << 40,
        features,
        ..PolicyParams::default()
    };
    let mut cfg = SimConfig::new(dram, policy, 16 * t);
    cfg.cpu_traces = vec![Arc::from(cpu_a), Arc::from(cpu_b)];
    cfg.cpu_params = CpuParams {
        window: 1 << 30,
        wrap: false,
        ..CpuParams::default()
    };
    cfg.hwas = vec![hwa];
    cfg.initial_mpki = Some(vec![1.0, 1000.0]);
    cfg.log = LogOptions {
        decisions: true,
        service: true,
    };
    cfg
}

/// Randomized short-period accelerators whose every request targets a
/// different row of one bank, plus a core writing to other rows of that
/// bank. Returns the config with no policy checks applied; UPL
/// admission may still reject it.
pub fn adversarial_sdp_set(seed: u64, horizon: u64) -> SimConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dram = DramConfig {
        channels: 1,
        ranks_per_channel: 1,
        banks_per_rank: 2,
        rows_per_bank: 4096,
        columns_per_row: 16,
        ..DramConfig::ddr3_1333()
    };
    let row_stride = encode_address(
        &Coords {
            row: 1,
            ..Coords::default()
        },
        &dram,
    );
    let n = rng.gen_range(1..=3usize);
    let hwas: Vec<HwaSpec> = (0..n)
        .map(|i| {
            let period = rng.gen_range(600..=3000u64);
            let requests = rng.gen_range(1..=(period / 33 / (2 * n as u64)).max(1));
            let mut h = HwaSpec::fixed(&format!("sdp{i}"), HwaClass::Sdp, period, requests);
            h.address_base = row_stride * (1024 * i as u64);
            h.stride = row_stride;
            h.region_bytes = row_stride * 1024;
            h
        })
        .collect();
    // The hog alternates rows in the same bank; every access is a write miss.
    let hog: Vec<TraceRecord> = (0..64u64)
        .map(|i| TraceRecord::mem(0, row_stride * (3072 + i), AccessKind::Write))
        .collect();
    let mut cfg = SimConfig::new(dram, PolicyParams::with_kind(PolicyKind::Squash), horizon);
    cfg.hwas = hwas;
    cfg.cpu_traces = vec![Arc::from(hog)];
    cfg.seed = seed;
    cfg
}
