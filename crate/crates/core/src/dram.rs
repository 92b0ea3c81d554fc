//! DRAM organization, DDR3-style bank timing and address mapping.
//!
//! A request is issued as one atomic command sequence: an optional
//! PRECHARGE (row miss), an optional ACTIVATE (row miss or closed bank) and
//! the column access. The bank keeps the earliest legal cycle for each
//! command class; the channel keeps the data-bus intervals already
//! reserved, and a burst may take any free gap between them.

use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, SimError};
use crate::request::{AccessKind, MemoryRequest};

/// DDR timing constraints, all in memory-clock cycles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimingParams {
    /// ACTIVATE to ACTIVATE, same bank.
    pub t_rc: u64,
    /// ACTIVATE to column command.
    pub t_rcd: u64,
    /// Column command to first data beat.
    pub t_cl: u64,
    /// PRECHARGE to ACTIVATE.
    pub t_rp: u64,
    /// End of write data to PRECHARGE.
    pub t_wr: u64,
    /// Data burst length on the bus.
    pub t_burst: u64,
    pub clock_period_ns: f64,
}

impl TimingParams {
    /// DDR3-1333 (9-9-9) speed bin, tCK = 1.5 ns.
    ///
    /// tRCD = tRP = 13.5 ns, tRAS = 36 ns, tRC = 49.5 ns, tWR = 15 ns, BL8.
    pub fn ddr3_1333() -> Self {
        Self {
            t_rc: 33,
            t_rcd: 9,
            t_cl: 9,
            t_rp: 9,
            t_wr: 10,
            t_burst: 4,
            clock_period_ns: 1.5,
        }
    }

    /// Minimum ACTIVATE to PRECHARGE spacing implied by tRC - tRP.
    pub fn t_ras(&self) -> u64 {
        self.t_rc - self.t_rp
    }

    pub fn row_hit_latency(&self) -> u64 {
        self.t_cl + self.t_burst
    }

    pub fn row_closed_latency(&self) -> u64 {
        self.t_rcd + self.t_cl + self.t_burst
    }

    pub fn row_miss_latency(&self) -> u64 {
        self.t_rp + self.t_rcd + self.t_cl + self.t_burst
    }

    /// Longest time a single already-issued request can hold its bank,
    /// including write recovery.
    pub fn worst_case_service(&self) -> u64 {
        self.row_miss_latency() + self.t_wr
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let fields = [
            ("dram.timing.t_rc", self.t_rc),
            ("dram.timing.t_rcd", self.t_rcd),
            ("dram.timing.t_cl", self.t_cl),
            ("dram.timing.t_rp", self.t_rp),
            ("dram.timing.t_wr", self.t_wr),
            ("dram.timing.t_burst", self.t_burst),
        ];
        for (field, v) in fields {
            if v == 0 {
                return Err(ConfigError::invalid(field, "must be at least 1"));
            }
        }
        if self.t_rc < self.t_rcd + self.t_rp {
            return Err(ConfigError::invalid(
                "dram.timing.t_rc",
                "must be at least t_rcd + t_rp",
            ));
        }
        if !(self.clock_period_ns > 0.0) {
            return Err(ConfigError::invalid(
                "dram.timing.clock_period_ns",
                "must be positive",
            ));
        }
        Ok(())
    }
}

impl Default for TimingParams {
    fn default() -> Self {
        Self::ddr3_1333()
    }
}

/// Channel/rank/bank topology plus the shared request buffer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DramConfig {
    pub channels: u32,
    pub ranks_per_channel: u32,
    pub banks_per_rank: u32,
    pub rows_per_bank: u32,
    /// Columns per row in units of `line_size`.
    pub columns_per_row: u32,
    pub line_size: u64,
    #[serde(default)]
    pub timing: TimingParams,
    pub request_buffer_entries: u32,
    /// Entries reserved for CPU requests; the rest hold accelerator requests.
    pub buffer_split_cpu: u32,
    /// When set, every request occupies its bank for exactly this many
    /// cycles regardless of row state and there is no bus model.
    #[serde(default)]
    pub uniform_latency: Option<u64>,
}

impl DramConfig {
    /// Two channels, one rank, eight banks of DDR3-1333 with a 300-entry
    /// buffer split evenly between CPUs and accelerators.
    pub fn ddr3_1333() -> Self {
        Self {
            channels: 2,
            ranks_per_channel: 1,
            banks_per_rank: 8,
            rows_per_bank: 32768,
            columns_per_row: 128,
            line_size: 64,
            timing: TimingParams::ddr3_1333(),
            request_buffer_entries: 300,
            buffer_split_cpu: 150,
            uniform_latency: None,
        }
    }

    /// One channel with `banks` banks whose every access takes `latency` cycles.
    pub fn uniform(banks: u32, rows: u32, columns: u32, latency: u64) -> Self {
        Self {
            channels: 1,
            ranks_per_channel: 1,
            banks_per_rank: banks,
            rows_per_bank: rows,
            columns_per_row: columns,
            line_size: 64,
            timing: TimingParams::ddr3_1333(),
            request_buffer_entries: 64,
            buffer_split_cpu: 32,
            uniform_latency: Some(latency),
        }
    }

    pub fn banks_per_channel(&self) -> usize {
        (self.ranks_per_channel * self.banks_per_rank) as usize
    }

    pub fn total_lines(&self) -> u64 {
        self.channels as u64
            * self.ranks_per_channel as u64
            * self.banks_per_rank as u64
            * self.rows_per_bank as u64
            * self.columns_per_row as u64
    }

    pub fn total_bytes(&self) -> u64 {
        self.total_lines() * self.line_size
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let counts = [
            ("dram.channels", self.channels),
            ("dram.ranks_per_channel", self.ranks_per_channel),
            ("dram.banks_per_rank", self.banks_per_rank),
            ("dram.rows_per_bank", self.rows_per_bank),
            ("dram.columns_per_row", self.columns_per_row),
            ("dram.request_buffer_entries", self.request_buffer_entries),
        ];
        for (field, v) in counts {
            if v == 0 {
                return Err(ConfigError::invalid(field, "must be at least 1"));
            }
        }
        if self.line_size == 0 || !self.line_size.is_power_of_two() {
            return Err(ConfigError::invalid(
                "dram.line_size",
                "must be a power of two",
            ));
        }
        if self.buffer_split_cpu > self.request_buffer_entries {
            return Err(ConfigError::invalid(
                "dram.buffer_split_cpu",
                "exceeds request_buffer_entries",
            ));
        }
        let lines = [
            self.ranks_per_channel,
            self.banks_per_rank,
            self.rows_per_bank,
            self.columns_per_row,
        ]
        .iter()
        .try_fold(self.channels as u64, |acc, &n| acc.checked_mul(n as u64))
        .and_then(|l| l.checked_mul(self.line_size));
        if lines.is_none() {
            return Err(ConfigError::invalid("dram", "address space overflows 64 bits"));
        }
        if self.uniform_latency == Some(0) {
            return Err(ConfigError::invalid(
                "dram.uniform_latency",
                "must be at least 1",
            ));
        }
        self.timing.validate()
    }

    /// Flat index of `(rank, bank)` within a channel.
    pub fn bank_index(&self, coords: &Coords) -> usize {
        (coords.rank * self.banks_per_rank + coords.bank) as usize
    }
}

/// Decoded DRAM location of one cache line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Coords {
    pub channel: u32,
    pub rank: u32,
    pub bank: u32,
    pub row: u32,
    pub column: u32,
}

/// Maps a byte address to DRAM coordinates.
///
/// Bits are consumed from the least significant end as line offset,
/// channel, bank, rank, column and finally row, so consecutive lines
/// alternate channels and then spread across banks.
pub fn decode_address(address: u64, config: &DramConfig) -> Result<Coords, SimError> {
    if address >= config.total_bytes() {
        return Err(SimError::AddressOutOfRange {
            address,
            limit: config.total_bytes(),
        });
    }
    let mut line = address / config.line_size;
    let mut take = |n: u32| {
        let v = (line % n as u64) as u32;
        line /= n as u64;
        v
    };
    let channel = take(config.channels);
    let bank = take(config.banks_per_rank);
    let rank = take(config.ranks_per_channel);
    let column = take(config.columns_per_row);
    let row = line as u32;
    Ok(Coords {
        channel,
        rank,
        bank,
        row,
        column,
    })
}

/// Inverse of [`decode_address`]; returns the line-aligned byte address.
pub fn encode_address(coords: &Coords, config: &DramConfig) -> u64 {
    let mut line = coords.row as u64;
    line = line * config.columns_per_row as u64 + coords.column as u64;
    line = line * config.ranks_per_channel as u64 + coords.rank as u64;
    line = line * config.banks_per_rank as u64 + coords.bank as u64;
    line = line * config.channels as u64 + coords.channel as u64;
    line * config.line_size
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ServiceKind {
    RowHit,
    RowMiss,
    RowClosed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BankState {
    pub open_row: Option<u32>,
    pub next_activate_cycle: u64,
    pub next_column_cycle: u64,
    pub next_precharge_cycle: u64,
}

pub fn service_kind(row: u32, bank: &BankState) -> ServiceKind {
    match bank.open_row {
        Some(open) if open == row => ServiceKind::RowHit,
        Some(_) => ServiceKind::RowMiss,
        None => ServiceKind::RowClosed,
    }
}

/// Offset from sequence start to the column command.
fn column_offset(kind: ServiceKind, t: &TimingParams) -> u64 {
    match kind {
        ServiceKind::RowHit => 0,
        ServiceKind::RowClosed => t.t_rcd,
        ServiceKind::RowMiss => t.t_rp + t.t_rcd,
    }
}

/// First cycle at or after `now` at which the command sequence for a
/// request of `kind` may start on `bank`, ignoring the data bus.
pub fn earliest_bank_cycle(kind: ServiceKind, bank: &BankState, now: u64, t: &TimingParams) -> u64 {
    let col_off = column_offset(kind, t);
    let mut start = now.max(bank.next_column_cycle.saturating_sub(col_off));
    match kind {
        ServiceKind::RowHit => {}
        ServiceKind::RowClosed => start = start.max(bank.next_activate_cycle),
        ServiceKind::RowMiss => {
            start = start
                .max(bank.next_precharge_cycle)
                .max(bank.next_activate_cycle.saturating_sub(t.t_rp));
        }
    }
    start
}

/// Bank-level legality for `request` (see [`Channel::earliest_issue`] for
/// the bus-aware version used by the schedulers).
pub fn earliest_issue_cycle(
    request: &MemoryRequest,
    bank: &BankState,
    now: u64,
    t: &TimingParams,
) -> u64 {
    earliest_bank_cycle(service_kind(request.coords.row, bank), bank, now, t)
}

/// Command times of one issued request, used by the auditor and service log.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IssuedCommands {
    pub kind: ServiceKind,
    pub precharge: Option<u64>,
    pub activate: Option<u64>,
    pub column: u64,
    pub completion: u64,
}

/// One channel: its banks and data bus.
#[derive(Debug, Clone)]
pub struct Channel {
    pub banks: Vec<BankState>,
    /// Reserved data-bus intervals `[start, end)`, sorted, none ending
    /// before the last issue.
    bus: Vec<(u64, u64)>,
    timing: TimingParams,
    uniform_latency: Option<u64>,
}

impl Channel {
    pub fn new(config: &DramConfig) -> Self {
        Self {
            banks: vec![BankState::default(); config.banks_per_channel()],
            bus: Vec::new(),
            timing: config.timing,
            uniform_latency: config.uniform_latency,
        }
    }

    pub fn timing(&self) -> &TimingParams {
        &self.timing
    }

    pub fn is_uniform(&self) -> bool {
        self.uniform_latency.is_some()
    }

    /// Earliest legal start for a sequence of `kind` on bank `bank`,
    /// honoring both bank timers and the reserved data-bus intervals.
    pub fn earliest_for(&self, bank: usize, kind: ServiceKind, now: u64) -> u64 {
        let b = &self.banks[bank];
        if self.uniform_latency.is_some() {
            // Bank busy until next_column_cycle in uniform mode.
            return now.max(b.next_column_cycle);
        }
        let t = &self.timing;
        let lead = column_offset(kind, t) + t.t_cl;
        let mut start = earliest_bank_cycle(kind, b, now, t);
        // Slide past every reservation the burst would overlap.
        for &(rs, re) in &self.bus {
            let data = start + lead;
            if data < re && rs < data + t.t_burst {
                start = re - lead;
            }
        }
        start
    }

    /// Reserved data-bus intervals still pending.
    pub fn bus_reservations(&self) -> &[(u64, u64)] {
        &self.bus
    }

    pub fn kind_for(&self, bank: usize, row: u32) -> ServiceKind {
        service_kind(row, &self.banks[bank])
    }

    pub fn earliest_issue(&self, bank: usize, row: u32, now: u64) -> u64 {
        self.earliest_for(bank, self.kind_for(bank, row), now)
    }

    /// Commits the command sequence for a request to `(bank, row)` starting
    /// at `now`, advancing the bank timers and the bus.
    pub fn issue(
        &mut self,
        bank: usize,
        row: u32,
        access: AccessKind,
        now: u64,
    ) -> Result<IssuedCommands, SimError> {
        let kind = self.kind_for(bank, row);
        let earliest = self.earliest_for(bank, kind, now);
        if earliest != now {
            return Err(SimError::IllegalIssue {
                cycle: now,
                earliest,
            });
        }
        if let Some(latency) = self.uniform_latency {
            let b = &mut self.banks[bank];
            b.open_row = Some(row);
            b.next_column_cycle = now + latency;
            b.next_activate_cycle = now + latency;
            b.next_precharge_cycle = now + latency;
            return Ok(IssuedCommands {
                kind,
                precharge: None,
                activate: None,
                column: now,
                completion: now + latency,
            });
        }
        let t = self.timing;
        let b = &mut self.banks[bank];
        let (precharge, activate) = match kind {
            ServiceKind::RowHit => (None, None),
            ServiceKind::RowClosed => (None, Some(now)),
            ServiceKind::RowMiss => (Some(now), Some(now + t.t_rp)),
        };
        if let Some(act) = activate {
            b.next_activate_cycle = act + t.t_rc;
            b.next_precharge_cycle = b.next_precharge_cycle.max(act + t.t_ras());
        }
        let column = now + column_offset(kind, &t);
        let data_end = column + t.t_cl + t.t_burst;
        b.next_column_cycle = b.next_column_cycle.max(column + t.t_burst);
        let pre_bound = match access {
            AccessKind::Read => column + t.t_burst,
            AccessKind::Write => data_end + t.t_wr,
        };
        b.next_precharge_cycle = b.next_precharge_cycle.max(pre_bound);
        b.open_row = Some(row);
        self.bus.retain(|&(_, end)| end > now);
        let slot = self.bus.partition_point(|&(start, _)| start < column + t.t_cl);
        self.bus.insert(slot, (column + t.t_cl, data_end));
        Ok(IssuedCommands {
            kind,
            precharge,
            activate,
            column,
            completion: data_end,
        })
    }
}

/// Independent record of the last command of each class per bank; checks
/// every issued sequence against the raw timing parameters.
#[derive(Debug, Clone, Default)]
pub struct TimingAuditor {
    banks: Vec<AuditBank>,
    bursts: Vec<Vec<(u64, u64)>>,
    violations: Vec<String>,
    enabled: bool,
    banks_per_channel: usize,
}

#[derive(Debug, Clone, Copy, Default)]
struct AuditBank {
    last_act: Option<u64>,
    last_pre: Option<u64>,
    last_col: Option<u64>,
    last_read_col: Option<u64>,
    last_write_end: Option<u64>,
    open_since: Option<u64>,
}

impl TimingAuditor {
    pub fn new(config: &DramConfig) -> Self {
        let per = config.banks_per_channel();
        Self {
            banks: vec![AuditBank::default(); per * config.channels as usize],
            bursts: vec![Vec::new(); config.channels as usize],
            violations: Vec::new(),
            enabled: config.uniform_latency.is_none(),
            banks_per_channel: per,
        }
    }

    pub fn violations(&self) -> &[String] {
        &self.violations
    }

    fn flag(&mut self, cond: bool, msg: impl FnOnce() -> String) {
        if !cond {
            self.violations.push(msg());
        }
    }

    pub fn record(
        &mut self,
        t: &TimingParams,
        channel: usize,
        bank: usize,
        access: AccessKind,
        cmds: &IssuedCommands,
    ) {
        if !self.enabled {
            return;
        }
        let idx = channel * self.banks_per_channel + bank;
        let mut st = self.banks[idx];
        if let Some(pre) = cmds.precharge {
            if let Some(act) = st.last_act {
                self.flag(pre >= act + t.t_ras(), || {
                    format!("ch{channel} b{bank}: PRE@{pre} < ACT@{act}+tRAS")
                });
            }
            if let Some(end) = st.last_write_end {
                self.flag(pre >= end + t.t_wr, || {
                    format!("ch{channel} b{bank}: PRE@{pre} violates tWR after write ending {end}")
                });
            }
            if let Some(col) = st.last_read_col {
                self.flag(pre >= col + t.t_burst, || {
                    format!("ch{channel} b{bank}: PRE@{pre} during read burst from {col}")
                });
            }
            st.last_pre = Some(pre);
            st.open_since = None;
        }
        if let Some(act) = cmds.activate {
            if let Some(prev) = st.last_act {
                self.flag(act >= prev + t.t_rc, || {
                    format!("ch{channel} b{bank}: ACT@{act} < ACT@{prev}+tRC")
                });
            }
            if let Some(pre) = st.last_pre {
                self.flag(act >= pre + t.t_rp, || {
                    format!("ch{channel} b{bank}: ACT@{act} < PRE@{pre}+tRP")
                });
            }
            self.flag(st.open_since.is_none(), || {
                format!("ch{channel} b{bank}: ACT@{act} to an open bank")
            });
            st.last_act = Some(act);
            st.open_since = Some(act);
        }
        let col = cmds.column;
        match st.open_since {
            Some(act) => self.flag(col >= act + t.t_rcd, || {
                format!("ch{channel} b{bank}: COL@{col} < ACT@{act}+tRCD")
            }),
            None => self.flag(false, || format!("ch{channel} b{bank}: COL@{col} to closed bank")),
        }
        if let Some(prev) = st.last_col {
            self.flag(col >= prev + t.t_burst, || {
                format!("ch{channel} b{bank}: COL@{col} < COL@{prev}+tBURST")
            });
        }
        self.flag(cmds.completion == col + t.t_cl + t.t_burst, || {
            format!("ch{channel} b{bank}: completion {} != COL+tCL+tBURST", cmds.completion)
        });
        let (ds, de) = (col + t.t_cl, col + t.t_cl + t.t_burst);
        let issue = cmds.precharge.or(cmds.activate).unwrap_or(col);
        let mut bursts = std::mem::take(&mut self.bursts[channel]);
        bursts.retain(|&(_, end)| end > issue);
        if let Some(&(os, oe)) = bursts.iter().find(|&&(s, e)| s < de && ds < e) {
            self.flag(false, || {
                format!("ch{channel}: burst [{ds},{de}) overlaps burst [{os},{oe})")
            });
        }
        bursts.push((ds, de));
        self.bursts[channel] = bursts;
        st.last_col = Some(col);
        match access {
            AccessKind::Read => st.last_read_col = Some(col),
            AccessKind::Write => st.last_write_end = Some(col + t.t_cl + t.t_burst),
        }
        self.banks[idx] = st;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::request::AgentId;

    fn toy() -> DramConfig {
        DramConfig {
            channels: 2,
            ranks_per_channel: 1,
            banks_per_rank: 2,
            rows_per_bank: 4,
            columns_per_row: 4,
            ..DramConfig::ddr3_1333()
        }
    }

    #[test]
    fn zero_maps_to_origin() {
        let c = decode_address(0, &DramConfig::ddr3_1333()).unwrap();
        assert_eq!(c, Coords::default());
    }

    #[test]
    fn next_line_switches_channel() {
        let cfg = DramConfig::ddr3_1333();
        let c = decode_address(cfg.line_size, &cfg).unwrap();
        assert_eq!(
            c,
            Coords {
                channel: 1,
                ..Coords::default()
            }
        );
    }

    #[test]
    fn toy_enumeration_is_a_permutation() {
        let cfg = toy();
        let n = cfg.total_lines();
        assert_eq!(n, 2 * 2 * 4 * 4);
        let mut seen = vec![false; n as usize];
        for line in 0..n {
            let c = decode_address(line * cfg.line_size, &cfg).unwrap();
            // Independent flattening: row-major over (row, col, rank, bank, channel).
            let flat = (((c.row * 4 + c.column) * 1 + c.rank) * 2 + c.bank) * 2 + c.channel;
            assert!(!seen[flat as usize], "collision at line {line}");
            seen[flat as usize] = true;
            assert_eq!(encode_address(&c, &cfg), line * cfg.line_size);
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn out_of_range_address_rejected() {
        let cfg = toy();
        assert!(matches!(
            decode_address(cfg.total_bytes(), &cfg),
            Err(SimError::AddressOutOfRange { .. })
        ));
    }

    #[test]
    fn service_kind_definitions() {
        let mut b = BankState::default();
        assert_eq!(service_kind(7, &b), ServiceKind::RowClosed);
        b.open_row = Some(7);
        assert_eq!(service_kind(7, &b), ServiceKind::RowHit);
        assert_eq!(service_kind(9, &b), ServiceKind::RowMiss);
    }

    #[test]
    fn row_hit_with_expired_timers_issues_now() {
        let cfg = toy();
        let t = cfg.timing;
        let bank = BankState {
            open_row: Some(3),
            ..BankState::default()
        };
        let req = MemoryRequest::new(
            0,
            AgentId::Cpu(0),
            encode_address(
                &Coords {
                    row: 3,
                    ..Coords::default()
                },
                &cfg,
            ),
            AccessKind::Read,
            &cfg,
            100,
        )
        .unwrap();
        assert_eq!(earliest_issue_cycle(&req, &bank, 100, &t), 100);
    }

    #[test]
    fn completion_latencies_per_kind() {
        let cfg = toy();
        let t = cfg.timing;
        let mut ch = Channel::new(&cfg);
        let c = 1000;
        let closed = ch.issue(0, 1, AccessKind::Read, c).unwrap();
        assert_eq!(closed.kind, ServiceKind::RowClosed);
        assert_eq!(closed.completion, c + t.t_rcd + t.t_cl + t.t_burst);

        let c2 = ch.earliest_issue(0, 1, c + 1);
        let hit = ch.issue(0, 1, AccessKind::Read, c2).unwrap();
        assert_eq!(hit.kind, ServiceKind::RowHit);
        assert_eq!(hit.completion, c2 + t.t_cl + t.t_burst);

        let c3 = ch.earliest_issue(0, 2, c2 + 1);
        let miss = ch.issue(0, 2, AccessKind::Read, c3).unwrap();
        assert_eq!(miss.kind, ServiceKind::RowMiss);
        assert_eq!(miss.completion, c3 + t.t_rp + t.t_rcd + t.t_cl + t.t_burst);
    }

    #[test]
    fn back_to_back_misses_respect_trc() {
        let cfg = toy();
        let t = cfg.timing;
        let mut ch = Channel::new(&cfg);
        let first = ch.issue(0, 0, AccessKind::Read, 0).unwrap();
        let s = ch.earliest_issue(0, 1, 1);
        let second = ch.issue(0, 1, AccessKind::Read, s).unwrap();
        let s3 = ch.earliest_issue(0, 2, s + 1);
        let third = ch.issue(0, 2, AccessKind::Read, s3).unwrap();
        assert!(second.activate.unwrap() >= first.activate.unwrap() + t.t_rc);
        assert!(third.activate.unwrap() >= second.activate.unwrap() + t.t_rc);
        assert_eq!(third.activate.unwrap() - second.activate.unwrap(), t.t_rc);
    }

    #[test]
    fn later_hit_takes_bus_gap_before_earlier_miss() {
        let cfg = toy();
        let t = cfg.timing;
        let mut ch = Channel::new(&cfg);
        ch.issue(1, 0, AccessKind::Read, 0).unwrap();
        let s = ch.earliest_issue(0, 0, 1);
        ch.issue(0, 0, AccessKind::Read, s).unwrap();
        // Bank 0 now misses; its burst lands well after a hit on bank 1.
        let m = ch.earliest_issue(0, 3, s + 1);
        let miss = ch.issue(0, 3, AccessKind::Read, m).unwrap();
        let h = ch.earliest_issue(1, 0, m + 1);
        let hit = ch.issue(1, 0, AccessKind::Read, h).unwrap();
        assert_eq!(hit.kind, ServiceKind::RowHit);
        assert!(hit.completion <= miss.column + t.t_cl);
        let bus = ch.bus_reservations();
        assert!(bus.windows(2).all(|w| w[0].1 <= w[1].0));
    }

    #[test]
    fn early_issue_is_rejected() {
        let cfg = toy();
        let mut ch = Channel::new(&cfg);
        ch.issue(0, 0, AccessKind::Read, 0).unwrap();
        assert!(matches!(
            ch.issue(0, 1, AccessKind::Read, 1),
            Err(SimError::IllegalIssue { .. })
        ));
    }

    #[test]
    fn row_miss_is_more_than_twice_a_hit() {
        let t = TimingParams::ddr3_1333();
        assert!(t.row_miss_latency() >= 2 * t.row_hit_latency());
    }

    #[test]
    fn preset_matches_datasheet_nanoseconds() {
        let t = TimingParams::ddr3_1333();
        let ns = |c: u64| c as f64 * t.clock_period_ns;
        assert_eq!(ns(t.t_rcd), 13.5);
        assert_eq!(ns(t.t_rp), 13.5);
        assert_eq!(ns(t.t_rc), 49.5);
        assert_eq!(ns(t.t_ras()), 36.0);
        assert_eq!(ns(t.t_wr), 15.0);
        t.validate().unwrap();
    }

    #[test]
    fn config_validation_names_field() {
        let mut cfg = toy();
        cfg.line_size = 48;
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("dram.line_size"));
        let mut cfg = toy();
        cfg.buffer_split_cpu = cfg.request_buffer_entries + 1;
        assert!(cfg.validate().unwrap_err().to_string().contains("buffer_split_cpu"));
        let mut cfg = toy();
        cfg.timing.t_rc = 10;
        assert!(cfg.validate().unwrap_err().to_string().contains("t_rc"));
    }

    #[test]
    fn uniform_mode_serializes_each_bank() {
        let cfg = DramConfig::uniform(1, 4, 4, 10);
        let mut ch = Channel::new(&cfg);
        let a = ch.issue(0, 0, AccessKind::Read, 0).unwrap();
        assert_eq!(a.completion, 10);
        assert_eq!(ch.earliest_issue(0, 3, 1), 10);
        assert_eq!(ch.earliest_issue(0, 0, 1), 10);
    }

    #[test]
    fn auditor_accepts_legal_sequences_and_flags_illegal_ones() {
        let cfg = toy();
        let t = cfg.timing;
        let mut ch = Channel::new(&cfg);
        let mut audit = TimingAuditor::new(&cfg);
        let mut now = 0;
        for row in [0u32, 1, 1, 2, 0] {
            let s = ch.earliest_issue(0, row, now);
            let cmds = ch.issue(0, row, AccessKind::Write, s).unwrap();
            audit.record(&t, 0, 0, AccessKind::Write, &cmds);
            now = s + 1;
        }
        assert!(audit.violations().is_empty(), "{:?}", audit.violations());

        let bogus = IssuedCommands {
            kind: ServiceKind::RowMiss,
            precharge: Some(now),
            activate: Some(now + t.t_rp),
            column: now + t.t_rp + t.t_rcd,
            completion: now + t.t_rp + t.t_rcd + t.t_cl + t.t_burst,
        };
        audit.record(&t, 0, 0, AccessKind::Read, &bogus);
        assert!(!audit.violations().is_empty());
    }
}
