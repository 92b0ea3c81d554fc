//! Brute-force FR-FCFS reference for tiny open-loop instances.
//!
//! Every bank keeps its full command history and every channel its list
//! of data bursts. Each cycle, every waiting request is tried against the
//! raw timing rules; nothing is shared with the simulator's bank timers,
//! bus reservations or arbiter.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dram::{decode_address, encode_address, Coords, DramConfig, TimingParams};
use crate::error::SimError;
use crate::policy::{PolicyKind, PolicyParams};
use crate::request::{AccessKind, AgentId};
use crate::sim::{Injection, LogOptions, SimConfig, Simulation};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Cmd {
    Pre(u64),
    Act(u64, u32),
    Col(u64, AccessKind),
}

#[derive(Debug, Clone, Copy)]
struct Waiting {
    arrival: u64,
    channel: usize,
    bank: usize,
    row: u32,
    kind: AccessKind,
}

fn last(history: &[Cmd], f: impl Fn(&Cmd) -> Option<u64>) -> Option<u64> {
    history.iter().filter_map(f).max()
}

fn open_row(history: &[Cmd]) -> Option<u32> {
    // Precharges only ever precede an activate within one sequence.
    history.iter().rev().find_map(|c| match *c {
        Cmd::Act(_, row) => Some(row),
        _ => None,
    })
}

/// Commands of the sequence starting at `s`, or `None` if any of them
/// breaks a rule against the bank history or the channel bursts.
fn try_sequence(
    history: &[Cmd],
    bursts: &[(u64, u64)],
    row: u32,
    kind: AccessKind,
    s: u64,
    t: &TimingParams,
) -> Option<Vec<Cmd>> {
    let seq = match open_row(history) {
        Some(r) if r == row => vec![Cmd::Col(s, kind)],
        None => vec![Cmd::Act(s, row), Cmd::Col(s + t.t_rcd, kind)],
        Some(_) => vec![
            Cmd::Pre(s),
            Cmd::Act(s + t.t_rp, row),
            Cmd::Col(s + t.t_rp + t.t_rcd, kind),
        ],
    };
    let last_act = last(history, |c| match *c {
        Cmd::Act(a, _) => Some(a),
        _ => None,
    });
    let last_pre = last(history, |c| match *c {
        Cmd::Pre(p) => Some(p),
        _ => None,
    });
    let last_col = last(history, |c| match *c {
        Cmd::Col(x, _) => Some(x),
        _ => None,
    });
    let last_read = last(history, |c| match *c {
        Cmd::Col(x, AccessKind::Read) => Some(x),
        _ => None,
    });
    let last_write_data_end = last(history, |c| match *c {
        Cmd::Col(x, AccessKind::Write) => Some(x + t.t_cl + t.t_burst),
        _ => None,
    });
    let mut act_in_seq = None;
    for c in &seq {
        let ok = match *c {
            Cmd::Pre(p) => {
                last_act.is_none_or(|a| p >= a + t.t_rc - t.t_rp)
                    && last_read.is_none_or(|r| p >= r + t.t_burst)
                    && last_write_data_end.is_none_or(|w| p >= w + t.t_wr)
            }
            Cmd::Act(a, _) => {
                act_in_seq = Some(a);
                last_act.is_none_or(|x| a >= x + t.t_rc) && last_pre.is_none_or(|p| a >= p + t.t_rp)
            }
            Cmd::Col(x, _) => {
                let act = act_in_seq.or(last_act).expect("column to an open row");
                let data = (x + t.t_cl, x + t.t_cl + t.t_burst);
                x >= act + t.t_rcd
                    && last_col.is_none_or(|l| x >= l + t.t_burst)
                    && bursts.iter().all(|&(bs, be)| data.1 <= bs || be <= data.0)
            }
        };
        if !ok {
            return None;
        }
    }
    Some(seq)
}

/// Completion cycle of every injection under FR-FCFS (row hit first, then
/// oldest, then first injected), in the order the injections are given
/// after a stable sort by cycle. One sequence may start per channel per
/// cycle.
pub fn frfcfs_completions(
    dram: &DramConfig,
    injections: &[Injection],
) -> Result<Vec<u64>, SimError> {
    let t = dram.timing;
    let mut sorted = injections.to_vec();
    sorted.sort_by_key(|i| i.cycle);
    let reqs: Vec<Waiting> = sorted
        .iter()
        .map(|i| {
            let c = decode_address(i.address, dram)?;
            Ok(Waiting {
                arrival: i.cycle,
                channel: c.channel as usize,
                bank: dram.bank_index(&c),
                row: c.row,
                kind: i.kind,
            })
        })
        .collect::<Result<_, SimError>>()?;

    let channels = dram.channels as usize;
    let per = dram.banks_per_channel();
    let mut history: Vec<Vec<Cmd>> = vec![Vec::new(); channels * per];
    let mut bursts: Vec<Vec<(u64, u64)>> = vec![Vec::new(); channels];
    let mut done: Vec<Option<u64>> = vec![None; reqs.len()];
    let mut now = 0u64;
    while done.iter().any(Option::is_none) {
        for ch in 0..channels {
            let mut best: Option<(bool, u64, usize, Vec<Cmd>)> = None;
            for (i, r) in reqs.iter().enumerate() {
                if done[i].is_some() || r.channel != ch || r.arrival > now {
                    continue;
                }
                let h = &history[ch * per + r.bank];
                let Some(seq) = try_sequence(h, &bursts[ch], r.row, r.kind, now, &t) else {
                    continue;
                };
                let hit = open_row(h) == Some(r.row);
                let better = match &best {
                    None => true,
                    Some((bh, ba, _, _)) => (hit, std::cmp::Reverse(r.arrival)) > (*bh, std::cmp::Reverse(*ba)),
                };
                if better {
                    best = Some((hit, r.arrival, i, seq));
                }
            }
            if let Some((_, _, i, seq)) = best {
                let Some(&Cmd::Col(col, _)) = seq.last() else {
                    unreachable!("sequence ends in a column command")
                };
                bursts[ch].push((col + t.t_cl, col + t.t_cl + t.t_burst));
                history[ch * per + reqs[i].bank].extend(seq);
                done[i] = Some(col + t.t_cl + t.t_burst);
            }
        }
        now += 1;
    }
    Ok(done.into_iter().map(Option::unwrap).collect())
}

/// Random open-loop instance on `dram`: up to `max_requests` reads and
/// writes over a few rows per bank, arriving within the first 200 cycles.
pub fn random_instance(seed: u64, dram: &DramConfig, max_requests: usize) -> Vec<Injection> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=max_requests.max(1));
    let rows = dram.rows_per_bank.min(4);
    let mut out: Vec<Injection> = (0..n)
        .map(|_| {
            let c = Coords {
                channel: rng.gen_range(0..dram.channels),
                rank: rng.gen_range(0..dram.ranks_per_channel),
                bank: rng.gen_range(0..dram.banks_per_rank),
                row: rng.gen_range(0..rows),
                column: rng.gen_range(0..dram.columns_per_row),
            };
            Injection {
                cycle: rng.gen_range(0..200),
                agent: AgentId::Cpu(rng.gen_range(0..2)),
                address: encode_address(&c, dram),
                kind: if rng.gen_bool(0.3) {
                    AccessKind::Write
                } else {
                    AccessKind::Read
                },
            }
        })
        .collect();
    out.sort_by_key(|i| i.cycle);
    out
}

/// Completion cycles the simulator assigns to `injections` under FR-FCFS,
/// in the same order as [`frfcfs_completions`].
pub fn simulated_completions(
    dram: &DramConfig,
    injections: &[Injection],
) -> Result<Vec<u64>, SimError> {
    let last = injections.iter().map(|i| i.cycle).max().unwrap_or(0);
    let horizon = last + 1 + injections.len() as u64 * (dram.timing.worst_case_service() + dram.timing.t_rc);
    let mut cfg = SimConfig::new(dram.clone(), PolicyParams::with_kind(PolicyKind::FrFcfs), horizon);
    cfg.injections = injections.to_vec();
    cfg.log = LogOptions {
        decisions: false,
        service: true,
    };
    let out = Simulation::new(cfg)?.run()?;
    let mut by_id: Vec<(u64, u64)> = out.service.iter().map(|s| (s.id, s.completion)).collect();
    by_id.sort_unstable();
    if by_id.len() != injections.len() {
        return Err(SimError::Unserved(format!(
            "{} of {} injected requests served",
            by_id.len(),
            injections.len()
        )));
    }
    Ok(by_id.into_iter().map(|(_, c)| c).collect())
}

/// One disagreement between the simulator and the reference.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mismatch {
    pub seed: u64,
    pub request: usize,
    pub simulated: u64,
    pub reference: u64,
}

/// Runs `count` random instances starting at `seed`; returns every
/// per-request disagreement.
pub fn cross_check(
    dram: &DramConfig,
    seed: u64,
    count: u64,
    max_requests: usize,
) -> Result<Vec<Mismatch>, SimError> {
    let mut out = Vec::new();
    for s in seed..seed + count {
        let inj = random_instance(s, dram, max_requests);
        let sim = simulated_completions(dram, &inj)?;
        let reference = frfcfs_completions(dram, &inj)?;
        out.extend(
            sim.iter()
                .zip(&reference)
                .enumerate()
                .filter(|(_, (a, b))| a != b)
                .map(|(request, (&simulated, &reference))| Mismatch {
                    seed: s,
                    request,
                    simulated,
                    reference,
                }),
        );
    }
    Ok(out)
}
