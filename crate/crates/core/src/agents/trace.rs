//! CPU memory-access traces: the text format and a synthetic generator.
//!
//! One record per line: `<nonmem_count> <hex address> <R|W>`. A line with
//! only a count is a compute-only tail. `#` starts a comment.

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dram::{encode_address, Coords, DramConfig};
use crate::error::ConfigError;
use crate::request::AccessKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MemAccess {
    pub address: u64,
    pub kind: AccessKind,
}

/// Non-memory instructions followed by at most one memory access.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TraceRecord {
    pub nonmem_instructions: u64,
    pub access: Option<MemAccess>,
}

impl TraceRecord {
    pub fn mem(nonmem: u64, address: u64, kind: AccessKind) -> Self {
        Self {
            nonmem_instructions: nonmem,
            access: Some(MemAccess { address, kind }),
        }
    }

    pub fn compute(nonmem: u64) -> Self {
        Self {
            nonmem_instructions: nonmem,
            access: None,
        }
    }
}

/// Memory records per thousand instructions.
pub fn trace_mpki(trace: &[TraceRecord]) -> f64 {
    let mem = trace.iter().filter(|r| r.access.is_some()).count() as u64;
    let instr: u64 = trace.iter().map(|r| r.nonmem_instructions).sum::<u64>() + mem;
    if instr == 0 {
        0.0
    } else {
        mem as f64 * 1000.0 / instr as f64
    }
}

pub fn parse_trace(text: &str, origin: &str) -> Result<Vec<TraceRecord>, ConfigError> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |reason: String| ConfigError::Trace {
            path: origin.to_string(),
            line: lineno + 1,
            reason,
        };
        let mut fields = line.split_whitespace();
        let count = fields
            .next()
            .unwrap()
            .parse::<u64>()
            .map_err(|e| err(format!("bad instruction count: {e}")))?;
        let Some(addr) = fields.next() else {
            out.push(TraceRecord::compute(count));
            continue;
        };
        let hex = addr
            .strip_prefix("0x")
            .or_else(|| addr.strip_prefix("0X"))
            .unwrap_or(addr);
        let address =
            u64::from_str_radix(hex, 16).map_err(|e| err(format!("bad address `{addr}`: {e}")))?;
        let kind = match fields.next() {
            Some("R") | Some("r") => AccessKind::Read,
            Some("W") | Some("w") => AccessKind::Write,
            Some(other) => return Err(err(format!("access kind must be R or W, got `{other}`"))),
            None => return Err(err("missing access kind".into())),
        };
        if let Some(extra) = fields.next() {
            return Err(err(format!("unexpected field `{extra}`")));
        }
        out.push(TraceRecord::mem(count, address, kind));
    }
    Ok(out)
}

pub fn load_trace(path: &Path) -> Result<Vec<TraceRecord>, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    parse_trace(&text, &path.display().to_string())
}

pub fn format_trace(trace: &[TraceRecord]) -> String {
    let mut s = String::with_capacity(trace.len() * 20);
    for r in trace {
        match r.access {
            Some(a) => {
                let k = match a.kind {
                    AccessKind::Read => 'R',
                    AccessKind::Write => 'W',
                };
                let _ = writeln!(s, "{} {:#x} {}", r.nonmem_instructions, a.address, k);
            }
            None => {
                let _ = writeln!(s, "{}", r.nonmem_instructions);
            }
        }
    }
    s
}

/// Parameters of a synthetic CPU trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthProfile {
    pub mpki: f64,
    pub instructions: u64,
    /// Probability that the next access continues in the current row.
    #[serde(default)]
    pub locality: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_write_fraction")]
    pub write_fraction: f64,
}

fn default_write_fraction() -> f64 {
    0.2
}

impl SynthProfile {
    pub fn new(mpki: f64, instructions: u64, locality: f64, seed: u64) -> Self {
        Self {
            mpki,
            instructions,
            locality,
            seed,
            write_fraction: default_write_fraction(),
        }
    }
}

/// Deterministic trace with `round(instructions * mpki / 1000)` memory
/// records spread at random gaps over the instruction stream.
pub fn synthesize_trace(
    profile: &SynthProfile,
    dram: &DramConfig,
) -> Result<Vec<TraceRecord>, ConfigError> {
    if !(0.0..=1000.0).contains(&profile.mpki) {
        return Err(ConfigError::invalid("synth.mpki", "must be within [0, 1000]"));
    }
    if !(0.0..=1.0).contains(&profile.locality) {
        return Err(ConfigError::invalid("synth.locality", "must be within [0, 1]"));
    }
    if !(0.0..=1.0).contains(&profile.write_fraction) {
        return Err(ConfigError::invalid(
            "synth.write_fraction",
            "must be within [0, 1]",
        ));
    }
    let n = profile.instructions;
    let mem = ((n as f64) * profile.mpki / 1000.0).round() as u64;
    let mem = mem.min(n);
    let nonmem = n - mem;
    if mem == 0 {
        return Ok(vec![TraceRecord::compute(nonmem)]);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(profile.seed);
    // Random composition of `nonmem` into mem + 1 gaps.
    let mut cuts: Vec<u64> = (0..mem).map(|_| rng.gen_range(0..=nonmem)).collect();
    cuts.sort_unstable();

    let mut cursor = random_coords(&mut rng, dram);
    let mut out = Vec::with_capacity(mem as usize + 1);
    let mut prev = 0;
    for &cut in &cuts {
        let kind = if rng.gen_bool(profile.write_fraction) {
            AccessKind::Write
        } else {
            AccessKind::Read
        };
        out.push(TraceRecord::mem(cut - prev, encode_address(&cursor, dram), kind));
        prev = cut;
        cursor = if rng.gen_bool(profile.locality) {
            next_in_row(cursor, dram)
        } else {
            random_coords(&mut rng, dram)
        };
    }
    if nonmem > prev {
        out.push(TraceRecord::compute(nonmem - prev));
    }
    Ok(out)
}

fn random_coords(rng: &mut ChaCha8Rng, dram: &DramConfig) -> Coords {
    Coords {
        channel: rng.gen_range(0..dram.channels),
        rank: rng.gen_range(0..dram.ranks_per_channel),
        bank: rng.gen_range(0..dram.banks_per_rank),
        row: rng.gen_range(0..dram.rows_per_bank),
        column: rng.gen_range(0..dram.columns_per_row),
    }
}

/// Next column of the same row; moves to the following row once the row
/// is exhausted.
fn next_in_row(c: Coords, dram: &DramConfig) -> Coords {
    if c.column + 1 < dram.columns_per_row {
        Coords {
            column: c.column + 1,
            ..c
        }
    } else {
        Coords {
            column: 0,
            row: (c.row + 1) % dram.rows_per_bank,
            ..c
        }
    }
}
