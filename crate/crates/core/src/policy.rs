//! Priority assignment for the compared schedulers and the arbitration
//! step they share.
//!
//! Every policy reduces to a per-agent `(group, intra_rank)` pair; the
//! arbiter then picks, among requests that can legally issue this cycle,
//! the one with the best [`PriorityKey`]. Ties inside a level fall back to
//! row-hit-first, then oldest-first.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::agents::{Cluster, HwaClass};
use crate::dram::{Channel, ServiceKind};
use crate::error::ConfigError;
use crate::meta::NonUrgentGroup;
use crate::request::{AgentId, MemoryRequest};

/// MPKI above which a core starts out memory-intensive.
pub const INTENSIVE_MPKI: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PriorityKey {
    /// 1 is the highest group.
    pub group: u8,
    /// Smaller is higher within a group.
    pub intra_rank: u64,
    pub row_hit: bool,
    pub arrival_cycle: u64,
}

impl PriorityKey {
    fn urgency_tuple(&self) -> (u8, u64, bool, u64) {
        (self.group, self.intra_rank, !self.row_hit, self.arrival_cycle)
    }
}

/// Higher priority compares greater, so the arbiter takes the maximum.
impl Ord for PriorityKey {
    fn cmp(&self, other: &Self) -> Ordering {
        other.urgency_tuple().cmp(&self.urgency_tuple())
    }
}

impl PartialOrd for PriorityKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AgentPriority {
    pub group: u8,
    pub intra_rank: u64,
}

impl AgentPriority {
    pub const fn new(group: u8, intra_rank: u64) -> Self {
        Self { group, intra_rank }
    }
}

/// Priority of every agent for the current scheduling interval.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PriorityTable {
    pub cpu: Vec<AgentPriority>,
    pub hwa: Vec<AgentPriority>,
}

impl PriorityTable {
    pub fn agent(&self, agent: AgentId) -> AgentPriority {
        match agent {
            AgentId::Cpu(i) => self.cpu[i as usize],
            AgentId::Hwa(i) => self.hwa[i as usize],
        }
    }

    pub fn key(&self, req: &MemoryRequest, row_hit: bool) -> PriorityKey {
        let p = self.agent(req.agent);
        PriorityKey {
            group: p.group,
            intra_rank: p.intra_rank,
            row_hit,
            arrival_cycle: req.arrival_cycle,
        }
    }
}

/// Per-bank earliest start cycles cached for one arbitration pass.
#[derive(Debug, Clone, Copy, Default)]
struct BankReady {
    known: bool,
    hit_at: u64,
    other_at: u64,
}

/// Reusable scratch space for [`Arbiter::pick`].
#[derive(Debug, Default, Clone)]
pub struct Arbiter {
    ready: Vec<BankReady>,
    /// Earliest start over the queue seen by the last `pick`, or
    /// `u64::MAX` for an empty queue.
    pub next_ready: u64,
}

impl Arbiter {
    /// Index of the best request in `queue` that can start at `now`.
    pub fn pick(
        &mut self,
        queue: &[MemoryRequest],
        table: &PriorityTable,
        channel: &Channel,
        bank_of: impl Fn(&MemoryRequest) -> usize,
        now: u64,
    ) -> Option<usize> {
        self.ready.clear();
        self.ready.resize(channel.banks.len(), BankReady::default());
        self.next_ready = u64::MAX;
        let mut best: Option<(PriorityKey, u64, usize)> = None;
        for (i, req) in queue.iter().enumerate() {
            let b = bank_of(req);
            let r = &mut self.ready[b];
            let open = channel.banks[b].open_row;
            if !r.known {
                r.known = true;
                r.hit_at = if open.is_some() {
                    channel.earliest_for(b, ServiceKind::RowHit, now)
                } else {
                    u64::MAX
                };
                let other = if open.is_some() {
                    ServiceKind::RowMiss
                } else {
                    ServiceKind::RowClosed
                };
                r.other_at = channel.earliest_for(b, other, now);
            }
            let hit = open == Some(req.coords.row);
            let at = if hit { r.hit_at } else { r.other_at };
            self.next_ready = self.next_ready.min(at);
            if at != now {
                continue;
            }
            let key = table.key(req, hit);
            let better = match &best {
                None => true,
                Some((k, id, _)) => key > *k || (key == *k && req.id < *id),
            };
            if better {
                best = Some((key, req.id, i));
            }
        }
        best.map(|(_, _, i)| i)
    }
}

/// Among requests issuable at `now`, the one with the greatest key (lowest
/// id on equal keys).
pub fn pick_next(
    queue: &[MemoryRequest],
    table: &PriorityTable,
    channel: &Channel,
    bank_of: impl Fn(&MemoryRequest) -> usize,
    now: u64,
) -> Option<usize> {
    Arbiter::default().pick(queue, table, channel, bank_of, now)
}

/// Earliest cycle at which any queued request could start.
pub fn earliest_any(
    queue: &[MemoryRequest],
    channel: &Channel,
    bank_of: impl Fn(&MemoryRequest) -> usize,
    now: u64,
) -> Option<u64> {
    queue
        .iter()
        .map(|r| channel.earliest_issue(bank_of(r), r.coords.row, now))
        .min()
}

// ---------------------------------------------------------------------------
// Policies

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PolicyKind {
    #[serde(rename = "frfcfs")]
    FrFcfs,
    #[serde(rename = "frfcfs-st")]
    FrFcfsSt,
    #[serde(rename = "tcm-st")]
    TcmSt,
    #[serde(rename = "frfcfs-dyn")]
    FrFcfsDyn,
    #[serde(rename = "squash")]
    Squash,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 5] = [
        PolicyKind::FrFcfs,
        PolicyKind::FrFcfsSt,
        PolicyKind::TcmSt,
        PolicyKind::FrFcfsDyn,
        PolicyKind::Squash,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::FrFcfs => "frfcfs",
            PolicyKind::FrFcfsSt => "frfcfs-st",
            PolicyKind::TcmSt => "tcm-st",
            PolicyKind::FrFcfsDyn => "frfcfs-dyn",
            PolicyKind::Squash => "squash",
        }
    }

    pub fn uses_tcm(self) -> bool {
        matches!(self, PolicyKind::TcmSt | PolicyKind::Squash)
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyKind {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PolicyKind::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                ConfigError::invalid(
                    "policy.name",
                    format!("unknown policy `{s}`; expected frfcfs, frfcfs-st, tcm-st, frfcfs-dyn or squash"),
                )
            })
    }
}

/// Components of the SQUASH policy that can be switched off to obtain the
/// intermediate variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SquashFeatures {
    /// Non-urgent long-period accelerators outrank memory-intensive CPUs.
    pub app_aware: bool,
    /// Short-period accelerators use worst-case urgent windows.
    pub sdp_upl: bool,
    /// Probabilistic swap between group 4 and group 5.
    pub probabilistic: bool,
    /// First non-urgent transition of a period lands in group 6.
    pub first_transition_group6: bool,
}

impl Default for SquashFeatures {
    fn default() -> Self {
        Self {
            app_aware: true,
            sdp_upl: true,
            probabilistic: true,
            first_transition_group6: true,
        }
    }
}

impl SquashFeatures {
    /// Distributed priority only.
    pub fn dist_prio() -> Self {
        Self {
            app_aware: false,
            sdp_upl: false,
            probabilistic: false,
            first_transition_group6: false,
        }
    }

    /// Distributed priority with application-aware CPU/accelerator ordering.
    pub fn app_aware_dist_prio() -> Self {
        Self {
            app_aware: true,
            ..Self::dist_prio()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PolicyParams {
    pub name: PolicyKind,
    pub emergent_threshold: f64,
    pub cluster_factor: f64,
    pub scheduling_unit: u64,
    pub switching_unit: u64,
    pub quantum: u64,
    pub shuffle_interval: u64,
    pub pb_inc: f64,
    pub pb_dec: f64,
    /// Slack added to each urgent period length; defaults to the
    /// worst-case service time of one request.
    pub upl_slack: Option<u64>,
    pub features: SquashFeatures,
}

impl Default for PolicyParams {
    fn default() -> Self {
        Self {
            name: PolicyKind::Squash,
            emergent_threshold: 0.8,
            cluster_factor: 0.2,
            scheduling_unit: 1000,
            switching_unit: 500,
            quantum: 1_000_000,
            shuffle_interval: 800,
            pb_inc: 0.01,
            pb_dec: 0.05,
            upl_slack: None,
            features: SquashFeatures::default(),
        }
    }
}

impl PolicyParams {
    pub fn with_kind(name: PolicyKind) -> Self {
        Self {
            name,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let unit = |field: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(ConfigError::invalid(field, "must be within [0, 1]"))
            }
        };
        unit("policy.emergent_threshold", self.emergent_threshold)?;
        unit("policy.cluster_factor", self.cluster_factor)?;
        unit("policy.pb_inc", self.pb_inc)?;
        unit("policy.pb_dec", self.pb_dec)?;
        for (field, v) in [
            ("policy.scheduling_unit", self.scheduling_unit),
            ("policy.switching_unit", self.switching_unit),
            ("policy.quantum", self.quantum),
            ("policy.shuffle_interval", self.shuffle_interval),
        ] {
            if v == 0 {
                return Err(ConfigError::invalid(field, "must be at least 1"));
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Thread-cluster classification

/// Splits cores into clusters: ascending MPKI, admitted to the
/// non-intensive cluster while their cumulative bandwidth stays within
/// `cluster_factor` of the total.
pub fn tcm_cluster(mpki: &[f64], bandwidth: &[u64], cluster_factor: f64) -> Vec<Cluster> {
    let total: u64 = bandwidth.iter().sum();
    if total == 0 {
        return vec![Cluster::NonIntensive; mpki.len()];
    }
    let budget = cluster_factor * total as f64;
    let mut out = vec![Cluster::Intensive; mpki.len()];
    let mut used = 0u64;
    for i in mpki_order(mpki) {
        used += bandwidth[i];
        if used as f64 > budget + 1e-9 * total as f64 {
            break;
        }
        out[i] = Cluster::NonIntensive;
    }
    out
}

fn mpki_order(mpki: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..mpki.len()).collect();
    order.sort_by(|&a, &b| mpki[a].total_cmp(&mpki[b]).then(a.cmp(&b)));
    order
}

#[derive(Debug, Clone)]
pub struct TcmState {
    pub cluster_factor: f64,
    pub quantum: u64,
    pub shuffle_interval: u64,
    clusters: Vec<Cluster>,
    mpki: Vec<f64>,
    nonintensive_rank: Vec<u32>,
    /// Intensive cores, highest priority first.
    pub intensive_perm: Vec<usize>,
    rng: ChaCha8Rng,
}

impl TcmState {
    /// Starts from a static split at [`INTENSIVE_MPKI`] until the first
    /// quantum provides bandwidth measurements.
    pub fn new(
        cluster_factor: f64,
        quantum: u64,
        shuffle_interval: u64,
        seed: u64,
        initial_mpki: &[f64],
    ) -> Self {
        let clusters = initial_mpki
            .iter()
            .map(|&m| {
                if m > INTENSIVE_MPKI {
                    Cluster::Intensive
                } else {
                    Cluster::NonIntensive
                }
            })
            .collect();
        let mut s = Self {
            cluster_factor,
            quantum,
            shuffle_interval,
            clusters,
            mpki: initial_mpki.to_vec(),
            nonintensive_rank: vec![0; initial_mpki.len()],
            intensive_perm: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        };
        s.rebuild_ranks();
        s
    }

    fn rebuild_ranks(&mut self) {
        let order = mpki_order(&self.mpki);
        let mut next = 0;
        for &i in &order {
            if self.clusters[i] == Cluster::NonIntensive {
                self.nonintensive_rank[i] = next;
                next += 1;
            }
        }
        self.intensive_perm = (0..self.clusters.len())
            .filter(|&i| self.clusters[i] == Cluster::Intensive)
            .collect();
    }

    /// Re-clusters from the last quantum's per-core MPKI and bandwidth.
    pub fn requantize(&mut self, mpki: &[f64], bandwidth: &[u64]) {
        self.clusters = tcm_cluster(mpki, bandwidth, self.cluster_factor);
        self.mpki = mpki.to_vec();
        self.rebuild_ranks();
    }

    /// Draws a fresh random ranking of the intensive cluster.
    pub fn shuffle(&mut self) {
        self.intensive_perm.shuffle(&mut self.rng);
    }

    pub fn clusters(&self) -> &[Cluster] {
        &self.clusters
    }

    pub fn cluster(&self, core: usize) -> Cluster {
        self.clusters[core]
    }

    /// Rank within the core's cluster, 0 = highest.
    pub fn rank(&self, core: usize) -> u32 {
        match self.clusters[core] {
            Cluster::NonIntensive => self.nonintensive_rank[core],
            Cluster::Intensive => self
                .intensive_perm
                .iter()
                .position(|&c| c == core)
                .expect("intensive core missing from permutation") as u32,
        }
    }

    pub fn num_cores(&self) -> usize {
        self.clusters.len()
    }
}

// ---------------------------------------------------------------------------
// Assignments

/// Every agent in one group: plain row-hit-first, oldest-first.
pub fn assign_frfcfs(num_cpus: usize, num_hwas: usize) -> PriorityTable {
    PriorityTable {
        cpu: vec![AgentPriority::new(1, 0); num_cpus],
        hwa: vec![AgentPriority::new(1, 0); num_hwas],
    }
}

/// How CPUs are ordered beneath statically prioritized accelerators.
pub enum CpuOrdering<'a> {
    FrFcfs(usize),
    Tcm(&'a TcmState),
}

/// Accelerators in group 1 above all CPUs.
pub fn assign_static_hwa_first(num_hwas: usize, cpus: CpuOrdering<'_>) -> PriorityTable {
    let cpu = match cpus {
        CpuOrdering::FrFcfs(n) => vec![AgentPriority::new(2, 0); n],
        CpuOrdering::Tcm(tcm) => (0..tcm.num_cores())
            .map(|c| match tcm.cluster(c) {
                Cluster::NonIntensive => AgentPriority::new(2, tcm.rank(c) as u64),
                Cluster::Intensive => AgentPriority::new(3, tcm.rank(c) as u64),
            })
            .collect(),
    };
    PriorityTable {
        cpu,
        hwa: vec![AgentPriority::new(1, 0); num_hwas],
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DynLevel {
    AboveCpus,
    SameAsCpus,
    BelowCpus,
}

/// Accelerator tier relative to the CPUs under dynamic priority.
pub fn dyn_prio_level(current: f64, expected: f64, emergent_threshold: f64) -> DynLevel {
    if expected > emergent_threshold {
        DynLevel::AboveCpus
    } else if current <= expected {
        DynLevel::SameAsCpus
    } else {
        DynLevel::BelowCpus
    }
}

/// CPUs in group 2; each accelerator in group 1, 2 or 3 from its
/// `(current, expected)` progress.
pub fn assign_dyn_prio(
    num_cpus: usize,
    progress: &[(f64, f64)],
    emergent_threshold: f64,
) -> PriorityTable {
    let hwa = progress
        .iter()
        .map(|&(cur, exp)| match dyn_prio_level(cur, exp, emergent_threshold) {
            DynLevel::AboveCpus => AgentPriority::new(1, 0),
            DynLevel::SameAsCpus => AgentPriority::new(2, 0),
            DynLevel::BelowCpus => AgentPriority::new(3, 0),
        })
        .collect();
    PriorityTable {
        cpu: vec![AgentPriority::new(2, 0); num_cpus],
        hwa,
    }
}

/// State of one accelerator as seen by the SQUASH priority assembly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HwaPriorityInput {
    pub class: HwaClass,
    pub urgent: bool,
    /// Tier for a non-urgent long-period accelerator.
    pub placement: NonUrgentGroup,
    /// This interval's probabilistic draw put intensive CPUs first.
    pub swap: bool,
    pub deadline: u64,
    pub period: u64,
}

pub const SQ_URGENT_SDP: u8 = 1;
pub const SQ_URGENT_LDP: u8 = 2;
pub const SQ_NON_INTENSIVE: u8 = 3;
pub const SQ_NONURGENT_LDP: u8 = 4;
pub const SQ_INTENSIVE: u8 = 5;
pub const SQ_NONURGENT_LOW: u8 = 6;

/// Offset that places a swapped accelerator after every intensive CPU
/// while keeping it in group 5.
const SWAPPED_RANK_BASE: u64 = 1 << 62;

fn tie(primary: u64, id: usize) -> u64 {
    (primary << 16) | id as u64
}

/// Six-group ordering:
/// 1. urgent short-period accelerators, shorter period first;
/// 2. urgent long-period accelerators, earlier deadline first;
/// 3. non-intensive CPUs, lower MPKI first;
/// 4. non-urgent long-period accelerators re-entering non-urgency;
/// 5. intensive CPUs in shuffled order;
/// 6. remaining non-urgent accelerators, earlier deadline first.
///
/// A group-4 accelerator with `swap` set drops below the intensive CPUs.
pub fn assign_squash(
    tcm: &TcmState,
    hwas: &[HwaPriorityInput],
    features: SquashFeatures,
) -> PriorityTable {
    let cpu = (0..tcm.num_cores())
        .map(|c| match tcm.cluster(c) {
            Cluster::NonIntensive => AgentPriority::new(SQ_NON_INTENSIVE, tcm.rank(c) as u64),
            Cluster::Intensive => AgentPriority::new(SQ_INTENSIVE, tcm.rank(c) as u64),
        })
        .collect();
    let hwa = hwas
        .iter()
        .enumerate()
        .map(|(id, h)| {
            let by_deadline = tie(h.deadline, id);
            if h.class == HwaClass::Sdp && features.sdp_upl {
                return if h.urgent {
                    AgentPriority::new(SQ_URGENT_SDP, tie(h.period, id))
                } else {
                    AgentPriority::new(SQ_NONURGENT_LOW, by_deadline)
                };
            }
            if h.urgent {
                return AgentPriority::new(SQ_URGENT_LDP, by_deadline);
            }
            if !features.app_aware {
                return AgentPriority::new(SQ_NONURGENT_LOW, by_deadline);
            }
            match h.placement {
                NonUrgentGroup::Group6 => AgentPriority::new(SQ_NONURGENT_LOW, by_deadline),
                NonUrgentGroup::Group4 if h.swap => {
                    AgentPriority::new(SQ_INTENSIVE, SWAPPED_RANK_BASE + by_deadline)
                }
                NonUrgentGroup::Group4 => AgentPriority::new(SQ_NONURGENT_LDP, by_deadline),
            }
        })
        .collect();
    PriorityTable { cpu, hwa }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dram::{encode_address, Coords, DramConfig};
    use crate::request::AccessKind;
    use proptest::prelude::*;
    use rand::Rng;

    fn one_bank() -> DramConfig {
        DramConfig {
            channels: 1,
            ranks_per_channel: 1,
            banks_per_rank: 1,
            rows_per_bank: 8,
            columns_per_row: 8,
            ..DramConfig::ddr3_1333()
        }
    }

    fn req(cfg: &DramConfig, id: u64, agent: AgentId, row: u32, arrival: u64) -> MemoryRequest {
        let addr = encode_address(
            &Coords {
                row,
                ..Coords::default()
            },
            cfg,
        );
        MemoryRequest::new(id, agent, addr, AccessKind::Read, cfg, arrival).unwrap()
    }

    fn bank0(_: &MemoryRequest) -> usize {
        0
    }

    #[test]
    fn key_order_group_rank_hit_age() {
        let base = PriorityKey {
            group: 2,
            intra_rank: 5,
            row_hit: false,
            arrival_cycle: 100,
        };
        assert!(PriorityKey { group: 1, ..base } > base);
        assert!(PriorityKey { intra_rank: 4, ..base } > base);
        assert!(PriorityKey { row_hit: true, ..base } > base);
        assert!(PriorityKey { arrival_cycle: 99, ..base } > base);
        // Group dominates everything else.
        assert!(
            PriorityKey {
                group: 1,
                intra_rank: 1000,
                row_hit: false,
                arrival_cycle: 10_000
            } > PriorityKey {
                group: 2,
                intra_rank: 0,
                row_hit: true,
                arrival_cycle: 0
            }
        );
    }

    #[test]
    fn single_issuable_request_is_picked() {
        let cfg = one_bank();
        let ch = Channel::new(&cfg);
        let q = vec![req(&cfg, 0, AgentId::Cpu(0), 3, 0)];
        let t = assign_frfcfs(1, 0);
        assert_eq!(pick_next(&q, &t, &ch, bank0, 0), Some(0));
    }

    #[test]
    fn frfcfs_prefers_hit_then_oldest() {
        let cfg = one_bank();
        let mut ch = Channel::new(&cfg);
        ch.issue(0, 2, AccessKind::Read, 0).unwrap();
        let now = ch.earliest_issue(0, 2, 1).max(ch.earliest_issue(0, 5, 1));
        let t = assign_frfcfs(2, 1);
        let q = vec![
            req(&cfg, 1, AgentId::Cpu(0), 5, 1),
            req(&cfg, 2, AgentId::Hwa(0), 2, 2),
        ];
        assert_eq!(pick_next(&q, &t, &ch, bank0, now), Some(1));
        let q = vec![
            req(&cfg, 3, AgentId::Cpu(1), 6, 9),
            req(&cfg, 4, AgentId::Cpu(0), 5, 4),
        ];
        assert_eq!(pick_next(&q, &t, &ch, bank0, now), Some(1));
    }

    #[test]
    fn nothing_issuable_returns_none() {
        let cfg = one_bank();
        let mut ch = Channel::new(&cfg);
        ch.issue(0, 2, AccessKind::Read, 0).unwrap();
        let q = vec![req(&cfg, 1, AgentId::Cpu(0), 5, 1)];
        assert_eq!(pick_next(&q, &assign_frfcfs(1, 0), &ch, bank0, 1), None);
        let when = earliest_any(&q, &ch, bank0, 1).unwrap();
        assert_eq!(pick_next(&q, &assign_frfcfs(1, 0), &ch, bank0, when), Some(0));
    }

    #[test]
    fn static_priority_hwa_beats_any_cpu() {
        let cfg = one_bank();
        let mut ch = Channel::new(&cfg);
        ch.issue(0, 2, AccessKind::Read, 0).unwrap();
        let now = 200;
        let t = assign_static_hwa_first(1, CpuOrdering::FrFcfs(1));
        // CPU request is an old row hit; accelerator request a young miss.
        let q = vec![
            req(&cfg, 1, AgentId::Cpu(0), 2, 1),
            req(&cfg, 2, AgentId::Hwa(0), 7, 150),
        ];
        assert_eq!(pick_next(&q, &t, &ch, bank0, now), Some(1));
    }

    #[test]
    fn tcm_st_orders_cpus_by_cluster() {
        let tcm = TcmState::new(0.2, 1_000_000, 800, 1, &[20.0, 1.0]);
        let t = assign_static_hwa_first(0, CpuOrdering::Tcm(&tcm));
        assert!(t.cpu[1].group < t.cpu[0].group);
    }

    #[test]
    fn dyn_prio_levels() {
        assert_eq!(dyn_prio_level(0.5, 0.95, 0.9), DynLevel::AboveCpus);
        assert_eq!(dyn_prio_level(0.5, 0.25, 0.9), DynLevel::BelowCpus);
        assert_eq!(dyn_prio_level(0.0, 0.0, 0.9), DynLevel::SameAsCpus);
        let t = assign_dyn_prio(2, &[(0.0, 0.0), (0.5, 0.95), (0.5, 0.25)], 0.9);
        assert_eq!(t.hwa[0].group, t.cpu[0].group);
        assert!(t.hwa[1].group < t.cpu[0].group);
        assert!(t.hwa[2].group > t.cpu[0].group);
    }

    #[test]
    fn tcm_admission_scan() {
        let mpki = [1.0, 2.0, 3.0, 4.0];
        let bw = [5, 10, 25, 60];
        let c = tcm_cluster(&mpki, &bw, 0.2);
        assert_eq!(
            c,
            vec![
                Cluster::NonIntensive,
                Cluster::NonIntensive,
                Cluster::Intensive,
                Cluster::Intensive
            ]
        );
        assert!(tcm_cluster(&mpki, &bw, 0.0).iter().all(|&c| c == Cluster::Intensive));
        assert!(tcm_cluster(&mpki, &bw, 1.0).iter().all(|&c| c == Cluster::NonIntensive));
        assert!(tcm_cluster(&mpki, &[0; 4], 0.0).iter().all(|&c| c == Cluster::NonIntensive));
        // Idle cores fit an empty budget.
        assert_eq!(
            tcm_cluster(&[0.0, 9.0], &[0, 10], 0.0),
            vec![Cluster::NonIntensive, Cluster::Intensive]
        );
    }

    #[test]
    fn tcm_ranks_non_intensive_by_mpki() {
        let mut tcm = TcmState::new(0.5, 1, 1, 0, &[0.0; 4]);
        tcm.requantize(&[3.0, 1.0, 2.0, 50.0], &[10, 10, 10, 100]);
        assert_eq!(tcm.cluster(3), Cluster::Intensive);
        assert_eq!((tcm.rank(1), tcm.rank(2), tcm.rank(0)), (0, 1, 2));
    }

    #[test]
    fn shuffle_single_core_is_identity_and_seeded() {
        let mut tcm = TcmState::new(0.2, 1, 1, 3, &[10.0, 1.0]);
        for _ in 0..10 {
            tcm.shuffle();
            assert_eq!(tcm.intensive_perm, vec![0]);
        }
        let mut a = TcmState::new(0.2, 1, 1, 42, &[10.0; 5]);
        let mut b = TcmState::new(0.2, 1, 1, 42, &[10.0; 5]);
        for _ in 0..20 {
            a.shuffle();
            b.shuffle();
            assert_eq!(a.intensive_perm, b.intensive_perm);
        }
    }

    #[test]
    fn shuffle_top_rank_is_uniform() {
        let mut tcm = TcmState::new(0.2, 1, 1, 2024, &[10.0; 4]);
        let mut top = [0u32; 4];
        for _ in 0..1000 {
            tcm.shuffle();
            top[tcm.intensive_perm[0]] += 1;
        }
        for (core, &n) in top.iter().enumerate() {
            assert!((200..=300).contains(&n), "core {core} on top {n} times");
        }
    }

    fn ldp(urgent: bool, placement: NonUrgentGroup, swap: bool, deadline: u64) -> HwaPriorityInput {
        HwaPriorityInput {
            class: HwaClass::Ldp,
            urgent,
            placement,
            swap,
            deadline,
            period: 1000,
        }
    }

    #[test]
    fn squash_group_assembly() {
        let tcm = TcmState::new(0.2, 1, 1, 0, &[1.0, 20.0]);
        let sdp = HwaPriorityInput {
            class: HwaClass::Sdp,
            urgent: true,
            placement: NonUrgentGroup::Group6,
            swap: false,
            deadline: 50,
            period: 100,
        };
        let hwas = [
            sdp,
            ldp(true, NonUrgentGroup::Group6, false, 10),
            ldp(false, NonUrgentGroup::Group4, false, 10),
            ldp(false, NonUrgentGroup::Group4, true, 10),
            ldp(false, NonUrgentGroup::Group6, false, 10),
            HwaPriorityInput { urgent: false, ..sdp },
        ];
        let t = assign_squash(&tcm, &hwas, SquashFeatures::default());
        let groups: Vec<u8> = t.hwa.iter().map(|p| p.group).collect();
        assert_eq!(groups, vec![1, 2, 4, 5, 6, 6]);
        assert_eq!(t.cpu[0].group, SQ_NON_INTENSIVE);
        assert_eq!(t.cpu[1].group, SQ_INTENSIVE);
        // Swapped accelerator sits after the intensive CPU.
        assert!(t.hwa[3].intra_rank > t.cpu[1].intra_rank);
        // Urgent SDP beats urgent LDP.
        assert!(t.hwa[0].group < t.hwa[1].group);
    }

    #[test]
    fn squash_urgent_sdp_shorter_period_first() {
        let tcm = TcmState::new(0.2, 1, 1, 0, &[]);
        let mk = |period| HwaPriorityInput {
            class: HwaClass::Sdp,
            urgent: true,
            placement: NonUrgentGroup::Group6,
            swap: false,
            deadline: 0,
            period,
        };
        let t = assign_squash(&tcm, &[mk(900), mk(300), mk(300)], SquashFeatures::default());
        assert!(t.hwa[1].intra_rank < t.hwa[2].intra_rank);
        assert!(t.hwa[2].intra_rank < t.hwa[0].intra_rank);
    }

    #[test]
    fn squash_without_app_awareness_sinks_non_urgent() {
        let tcm = TcmState::new(0.2, 1, 1, 0, &[20.0]);
        let t = assign_squash(
            &tcm,
            &[ldp(false, NonUrgentGroup::Group4, false, 10)],
            SquashFeatures::dist_prio(),
        );
        assert!(t.hwa[0].group > t.cpu[0].group);
    }

    #[test]
    fn policy_names_parse() {
        for p in PolicyKind::ALL {
            assert_eq!(p.name().parse::<PolicyKind>().unwrap(), p);
        }
        let err = "edf".parse::<PolicyKind>().unwrap_err();
        assert!(err.to_string().contains("policy.name"));
    }

    /// Exhaustive argmax over issuable requests, written without the
    /// arbiter's bank cache.
    fn brute_argmax(q: &[MemoryRequest], t: &PriorityTable, ch: &Channel, now: u64) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, r) in q.iter().enumerate() {
            if ch.earliest_issue(0, r.coords.row, now) != now {
                continue;
            }
            let hit = ch.banks[0].open_row == Some(r.coords.row);
            let better = match best {
                None => true,
                Some(j) => {
                    let bj = &q[j];
                    let hj = ch.banks[0].open_row == Some(bj.coords.row);
                    let ki = t.key(r, hit);
                    let kj = t.key(bj, hj);
                    ki > kj || (ki == kj && r.id < bj.id)
                }
            };
            if better {
                best = Some(i);
            }
        }
        best
    }

    #[test]
    fn random_queues_match_brute_force_argmax() {
        let cfg = one_bank();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..500 {
            let mut ch = Channel::new(&cfg);
            let open = rng.gen_range(0..4);
            ch.issue(0, open, AccessKind::Read, 0).unwrap();
            let now = rng.gen_range(0..60);
            let table = PriorityTable {
                cpu: (0..3).map(|_| AgentPriority::new(rng.gen_range(1..3), rng.gen_range(0..2))).collect(),
                hwa: (0..3).map(|_| AgentPriority::new(rng.gen_range(1..3), rng.gen_range(0..2))).collect(),
            };
            let q: Vec<_> = (0..6)
                .map(|id| {
                    let agent = if rng.gen_bool(0.5) {
                        AgentId::Cpu(rng.gen_range(0..3))
                    } else {
                        AgentId::Hwa(rng.gen_range(0..3))
                    };
                    req(&cfg, id, agent, rng.gen_range(0..4), rng.gen_range(0..5))
                })
                .collect();
            assert_eq!(pick_next(&q, &table, &ch, bank0, now), brute_argmax(&q, &table, &ch, now));
        }
    }

    proptest! {
        #[test]
        fn key_order_is_a_strict_total_order(
            a in (1u8..7, 0u64..4, any::<bool>(), 0u64..4),
            b in (1u8..7, 0u64..4, any::<bool>(), 0u64..4),
            c in (1u8..7, 0u64..4, any::<bool>(), 0u64..4),
        ) {
            let k = |(g, r, h, t): (u8, u64, bool, u64)| PriorityKey { group: g, intra_rank: r, row_hit: h, arrival_cycle: t };
            let (a, b, c) = (k(a), k(b), k(c));
            prop_assert_eq!(a.cmp(&b), b.cmp(&a).reverse());
            prop_assert_eq!(a.cmp(&b) == Ordering::Equal, a == b);
            if a > b && b > c {
                prop_assert!(a > c);
            }
        }

        #[test]
        fn raising_cluster_factor_never_ejects(
            stats in proptest::collection::vec((0.0f64..50.0, 0u64..1000), 1..10),
            lo in 0.0f64..1.0,
            delta in 0.0f64..1.0,
        ) {
            let mpki: Vec<f64> = stats.iter().map(|s| s.0).collect();
            let bw: Vec<u64> = stats.iter().map(|s| s.1).collect();
            let hi = (lo + delta).min(1.0);
            let a = tcm_cluster(&mpki, &bw, lo);
            let b = tcm_cluster(&mpki, &bw, hi);
            for (x, y) in a.iter().zip(&b) {
                if *x == Cluster::NonIntensive {
                    prop_assert_eq!(*y, Cluster::NonIntensive);
                }
            }
        }
    }
}
