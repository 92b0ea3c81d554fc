//! The cycle loop tying agents, the meta-controller, the priority policy
//! and the DRAM channels together.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::agents::trace::trace_mpki;
use crate::agents::{CpuParams, CpuState, CpuStep, HwaClass, HwaSpec, HwaState, TraceRecord};
use crate::dram::{Channel, DramConfig, ServiceKind, TimingAuditor};
use crate::error::{ConfigError, SimError};
use crate::meta::{
    classify_ldp_urgency, compute_upl, current_progress, draw_pb, expected_progress,
    place_nonurgent_ldp, update_pb, NonUrgentGroup, PbDraw, SdpTask,
};
use crate::policy::{
    assign_dyn_prio, assign_frfcfs, assign_squash, assign_static_hwa_first, AgentPriority,
    Arbiter, CpuOrdering, HwaPriorityInput, PolicyKind, PolicyParams, PriorityTable, TcmState,
};
use crate::request::{AccessKind, AgentId, MemoryRequest};

/// A request fed to the controller at a fixed cycle, independent of any
/// agent model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Injection {
    pub cycle: u64,
    pub agent: AgentId,
    pub address: u64,
    pub kind: AccessKind,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LogOptions {
    pub decisions: bool,
    pub service: bool,
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub dram: DramConfig,
    pub cpu_traces: Vec<Arc<[TraceRecord]>>,
    pub cpu_params: CpuParams,
    pub hwas: Vec<HwaSpec>,
    pub policy: PolicyParams,
    pub horizon: u64,
    pub seed: u64,
    /// Per-core MPKI used to cluster cores before the first quantum;
    /// defaults to each trace's MPKI.
    pub initial_mpki: Option<Vec<f64>>,
    pub injections: Vec<Injection>,
    pub log: LogOptions,
}

impl SimConfig {
    pub fn new(dram: DramConfig, policy: PolicyParams, horizon: u64) -> Self {
        Self {
            dram,
            cpu_traces: Vec::new(),
            cpu_params: CpuParams::default(),
            hwas: Vec::new(),
            policy,
            horizon,
            seed: 0,
            initial_mpki: None,
            injections: Vec::new(),
            log: LogOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HwaDecision {
    pub current: f64,
    pub expected: f64,
    pub urgent: bool,
    pub group: u8,
    pub pb: f64,
}

/// Priority state broadcast for one scheduling interval.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionRecord {
    pub cycle: u64,
    pub hwas: Vec<HwaDecision>,
    pub cpu_groups: Vec<u8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ServiceRecord {
    pub id: u64,
    pub agent: AgentId,
    pub channel: u32,
    pub bank: u32,
    pub row: u32,
    pub kind: ServiceKind,
    pub arrival: u64,
    pub issue: u64,
    pub completion: u64,
    /// Priority group of the agent when the request was picked.
    pub group: u8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CpuOutcome {
    pub retired_instructions: u64,
    pub cycles: u64,
    pub requests: u64,
}

impl CpuOutcome {
    pub fn ipc(&self) -> f64 {
        if self.cycles == 0 {
            0.0
        } else {
            self.retired_instructions as f64 / self.cycles as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HwaOutcome {
    pub name: String,
    pub deadlines_met: u64,
    pub deadlines_missed: u64,
    pub frames_total: u64,
    pub frames_dropped: u64,
    pub target_fps: f64,
    /// Urgent period length installed for a short-period accelerator.
    pub upl: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub cycles: u64,
    pub cpus: Vec<CpuOutcome>,
    pub hwas: Vec<HwaOutcome>,
    pub decisions: Vec<DecisionRecord>,
    pub service: Vec<ServiceRecord>,
    pub timing_violations: Vec<String>,
    pub requests_served: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct Pending {
    cycle: u64,
    id: u64,
    agent: AgentId,
    period: u64,
}

/// One simulation instance. Build with [`Simulation::new`] and drive with
/// [`Simulation::run`] or [`Simulation::step`].
pub struct Simulation {
    cfg: SimConfig,
    now: u64,
    channels: Vec<Channel>,
    queues: Vec<Vec<MemoryRequest>>,
    wake_at: Vec<u64>,
    arbiter: Arbiter,
    completions: BinaryHeap<Reverse<Pending>>,
    cpus: Vec<CpuState>,
    hwas: Vec<HwaState>,
    cpu_buffer_used: u32,
    hwa_buffer_used: u32,
    hwa_buffer_cap: u32,
    next_id: u64,
    injections: Vec<Injection>,
    next_injection: usize,
    table: PriorityTable,
    dirty: bool,
    tcm: Option<TcmState>,
    quantum_requests: Vec<u64>,
    quantum_retired_base: Vec<u64>,
    pb_rng: ChaCha8Rng,
    placement: Vec<NonUrgentGroup>,
    swap: Vec<bool>,
    dyn_progress: Vec<(f64, f64)>,
    auditor: TimingAuditor,
    decisions: Vec<DecisionRecord>,
    service: Vec<ServiceRecord>,
    requests_served: u64,
    upl: Vec<Option<u64>>,
}

const PB_STREAM: u64 = 0x5eed_0f_9b;

impl Simulation {
    pub fn new(cfg: SimConfig) -> Result<Self, SimError> {
        cfg.dram.validate()?;
        cfg.policy.validate()?;
        if cfg.cpu_traces.is_empty() && cfg.hwas.is_empty() && cfg.injections.is_empty() {
            return Err(ConfigError::invalid("agents", "no CPUs, accelerators or requests to simulate").into());
        }
        if cfg.horizon == 0 {
            return Err(ConfigError::invalid("horizon", "must be at least 1").into());
        }
        for (i, h) in cfg.hwas.iter().enumerate() {
            validate_hwa(i, h)?;
        }
        let cpus: Vec<CpuState> = cfg
            .cpu_traces
            .iter()
            .enumerate()
            .map(|(i, t)| CpuState::new(i as u16, t.clone(), cfg.cpu_params))
            .collect();
        let mut hwas: Vec<HwaState> = cfg
            .hwas
            .iter()
            .enumerate()
            .map(|(i, s)| HwaState::new(i as u16, s.clone(), 0))
            .collect();

        let mut upl = vec![None; hwas.len()];
        let squash_sdp = cfg.policy.name == PolicyKind::Squash && cfg.policy.features.sdp_upl;
        let sdp_ids: Vec<usize> = (0..hwas.len())
            .filter(|&i| hwas[i].spec.class == HwaClass::Sdp)
            .collect();
        if squash_sdp && !sdp_ids.is_empty() {
            let tasks: Vec<SdpTask> = sdp_ids
                .iter()
                .map(|&i| SdpTask {
                    period: hwas[i].spec.min_period(),
                    requests: hwas[i].spec.max_requests(),
                })
                .collect();
            let slack = cfg
                .policy
                .upl_slack
                .unwrap_or_else(|| cfg.dram.timing.worst_case_service());
            let t_rc = cfg.dram.uniform_latency.unwrap_or(cfg.dram.timing.t_rc);
            let assigned = compute_upl(&tasks, t_rc, slack).map_err(|e| match e {
                ConfigError::Invalid { field, reason } => {
                    // Report the accelerator's own index rather than its SDP rank.
                    let field = sdp_ids
                        .iter()
                        .enumerate()
                        .find(|(k, _)| field.starts_with(&format!("hwa[{k}]")))
                        .map(|(k, &i)| field.replacen(&format!("hwa[{k}]"), &format!("hwa[{i}]"), 1))
                        .unwrap_or(field);
                    ConfigError::Invalid { field, reason }
                }
                other => other,
            })?;
            for (&i, a) in sdp_ids.iter().zip(&assigned) {
                hwas[i].set_upl(a.upl);
                upl[i] = Some(a.upl);
            }
        }

        let n_cpu = cpus.len();
        let tcm = cfg.policy.name.uses_tcm().then(|| {
            let mpki = cfg
                .initial_mpki
                .clone()
                .unwrap_or_else(|| cfg.cpu_traces.iter().map(|t| trace_mpki(t)).collect());
            TcmState::new(
                cfg.policy.cluster_factor,
                cfg.policy.quantum,
                cfg.policy.shuffle_interval,
                cfg.seed,
                &mpki,
            )
        });
        let mut injections = cfg.injections.clone();
        injections.sort_by_key(|i| i.cycle);
        let n_ch = cfg.dram.channels as usize;
        let hwa_buffer_cap = cfg.dram.request_buffer_entries - cfg.dram.buffer_split_cpu;
        let n_hwa = hwas.len();
        let mut sim = Self {
            channels: (0..n_ch).map(|_| Channel::new(&cfg.dram)).collect(),
            queues: vec![Vec::new(); n_ch],
            wake_at: vec![u64::MAX; n_ch],
            arbiter: Arbiter::default(),
            completions: BinaryHeap::new(),
            now: 0,
            cpus,
            hwas,
            cpu_buffer_used: 0,
            hwa_buffer_used: 0,
            hwa_buffer_cap,
            next_id: 0,
            injections,
            next_injection: 0,
            table: PriorityTable::default(),
            dirty: true,
            tcm,
            quantum_requests: vec![0; n_cpu],
            quantum_retired_base: vec![0; n_cpu],
            pb_rng: ChaCha8Rng::seed_from_u64(cfg.seed ^ PB_STREAM),
            placement: vec![NonUrgentGroup::Group6; n_hwa],
            swap: vec![false; n_hwa],
            dyn_progress: vec![(0.0, 0.0); n_hwa],
            auditor: TimingAuditor::new(&cfg.dram),
            decisions: Vec::new(),
            service: Vec::new(),
            requests_served: 0,
            upl,
            cfg,
        };
        for h in 0..n_hwa {
            sim.refresh_hwa(h);
        }
        Ok(sim)
    }

    pub fn now(&self) -> u64 {
        self.now
    }

    pub fn hwas(&self) -> &[HwaState] {
        &self.hwas
    }

    pub fn cpus(&self) -> &[CpuState] {
        &self.cpus
    }

    pub fn table(&self) -> &PriorityTable {
        &self.table
    }

    pub fn run(mut self) -> Result<SimOutput, SimError> {
        while self.now < self.cfg.horizon {
            self.step()?;
        }
        self.finish()
    }

    /// Up to the last `n` decision records.
    pub fn recent_decisions(&self, n: usize) -> &[DecisionRecord] {
        &self.decisions[self.decisions.len().saturating_sub(n)..]
    }

    /// Drops old decision records once more than `max` are held.
    pub fn trim_decisions(&mut self, max: usize) {
        if self.decisions.len() > 2 * max {
            self.decisions.drain(..self.decisions.len() - max);
        }
    }

    /// The timing auditor's findings so far as an error.
    pub fn violation_error(&self) -> Option<SimError> {
        let v = self.auditor.violations();
        v.first().map(|first| SimError::TimingViolation {
            count: v.len(),
            first: first.clone(),
        })
    }

    /// Advances one cycle.
    pub fn step(&mut self) -> Result<(), SimError> {
        let now = self.now;
        self.process_completions(now);
        self.tick_hwas(now)?;
        self.policy_boundaries(now);
        if self.dirty {
            self.rebuild_table();
        }
        self.inject(now)?;
        self.tick_cpus(now)?;
        self.issue(now)?;
        self.now += 1;
        Ok(())
    }

    fn process_completions(&mut self, now: u64) {
        while let Some(Reverse(p)) = self.completions.peek().copied() {
            if p.cycle > now {
                break;
            }
            self.completions.pop();
            match p.agent {
                AgentId::Cpu(c) => {
                    self.cpu_buffer_used -= 1;
                    if let Some(cpu) = self.cpus.get_mut(c as usize) {
                        cpu.on_complete(p.id);
                    }
                }
                AgentId::Hwa(h) => {
                    self.hwa_buffer_used -= 1;
                    self.hwas[h as usize].on_complete(p.period);
                }
            }
        }
    }

    fn tick_hwas(&mut self, now: u64) -> Result<(), SimError> {
        for h in 0..self.hwas.len() {
            if self.hwas[h].on_boundary(now).is_some() {
                self.placement[h] = NonUrgentGroup::Group6;
                self.swap[h] = false;
                self.refresh_hwa(h);
                self.dirty = true;
            }
            while self.hwas[h].wants_emit() && self.hwa_buffer_used < self.hwa_buffer_cap {
                let address = self.hwas[h].take_address();
                let period = self.hwas[h].period_index;
                let mut req = MemoryRequest::new(
                    self.next_id,
                    AgentId::Hwa(h as u16),
                    address,
                    AccessKind::Read,
                    &self.cfg.dram,
                    now,
                )?;
                req.period = period;
                self.next_id += 1;
                self.hwa_buffer_used += 1;
                self.enqueue(req, now);
            }
        }
        Ok(())
    }

    fn uses_progress(&self, h: usize) -> bool {
        let p = &self.cfg.policy;
        self.hwas[h].spec.class == HwaClass::Ldp
            || !(p.name == PolicyKind::Squash && p.features.sdp_upl)
    }

    /// Recomputes the accelerator's urgency inputs for the current cycle.
    fn refresh_hwa(&mut self, h: usize) {
        let now = self.now;
        let threshold = self.cfg.policy.emergent_threshold;
        let first_to_g6 = self.cfg.policy.features.first_transition_group6;
        let uses_progress = self.uses_progress(h);
        let hwa = &mut self.hwas[h];
        let elapsed = now - hwa.period_start;
        hwa.ldp.curr_cyc = elapsed;
        if uses_progress {
            let urgent = classify_ldp_urgency(&hwa.ldp, threshold);
            if hwa.ldp.urgent && !urgent {
                self.placement[h] = if first_to_g6 {
                    place_nonurgent_ldp(&mut hwa.ldp)
                } else {
                    NonUrgentGroup::Group4
                };
            }
            hwa.ldp.urgent = urgent;
            self.dyn_progress[h] = (current_progress(&hwa.ldp), expected_progress(&hwa.ldp));
        } else if let Some(sdp) = hwa.sdp.as_mut() {
            sdp.evaluate(elapsed);
        }
    }

    fn policy_boundaries(&mut self, now: u64) {
        let p = self.cfg.policy.clone();
        if let Some(tcm) = self.tcm.as_mut() {
            if now > 0 && now % p.quantum == 0 {
                let line = self.cfg.dram.line_size;
                let mut mpki = Vec::with_capacity(self.cpus.len());
                let mut bw = Vec::with_capacity(self.cpus.len());
                for (c, cpu) in self.cpus.iter().enumerate() {
                    let retired = cpu.retired_instructions - self.quantum_retired_base[c];
                    let reqs = self.quantum_requests[c];
                    mpki.push(if retired == 0 {
                        0.0
                    } else {
                        reqs as f64 * 1000.0 / retired as f64
                    });
                    bw.push(reqs * line);
                    self.quantum_retired_base[c] = cpu.retired_instructions;
                    self.quantum_requests[c] = 0;
                }
                tcm.requantize(&mpki, &bw);
                tcm.shuffle();
                self.dirty = true;
            } else if now > 0 && now % p.shuffle_interval == 0 {
                tcm.shuffle();
                self.dirty = true;
            }
        }
        let adaptive = matches!(p.name, PolicyKind::FrFcfsDyn | PolicyKind::Squash);
        if !adaptive {
            return;
        }
        if now % p.scheduling_unit == 0 {
            for h in 0..self.hwas.len() {
                if self.uses_progress(h) {
                    self.refresh_hwa(h);
                }
            }
            self.dirty = true;
        }
        if p.name != PolicyKind::Squash {
            return;
        }
        if p.features.sdp_upl {
            for h in 0..self.hwas.len() {
                let hwa = &mut self.hwas[h];
                if let Some(sdp) = hwa.sdp.as_mut() {
                    let was = sdp.urgent;
                    if sdp.evaluate(now - hwa.period_start) != was {
                        self.dirty = true;
                    }
                }
            }
        }
        if now % p.switching_unit == 0 {
            for h in 0..self.hwas.len() {
                if !self.uses_progress(h) {
                    continue;
                }
                let hwa = &mut self.hwas[h];
                hwa.ldp.curr_cyc = now - hwa.period_start;
                update_pb(&mut hwa.ldp, p.pb_inc, p.pb_dec);
                let swap = p.features.probabilistic
                    && draw_pb(&hwa.ldp, &mut self.pb_rng) == PbDraw::Swap;
                if swap != self.swap[h] {
                    self.swap[h] = swap;
                    self.dirty = true;
                }
            }
        }
    }

    fn rebuild_table(&mut self) {
        self.dirty = false;
        let p = &self.cfg.policy;
        let n_cpu = self.cpus.len();
        let n_hwa = self.hwas.len();
        let mut table = match p.name {
            PolicyKind::FrFcfs => assign_frfcfs(n_cpu, n_hwa),
            PolicyKind::FrFcfsSt => assign_static_hwa_first(n_hwa, CpuOrdering::FrFcfs(n_cpu)),
            PolicyKind::TcmSt => assign_static_hwa_first(
                n_hwa,
                CpuOrdering::Tcm(self.tcm.as_ref().expect("tcm state")),
            ),
            PolicyKind::FrFcfsDyn => assign_dyn_prio(n_cpu, &self.dyn_progress, p.emergent_threshold),
            PolicyKind::Squash => {
                let inputs: Vec<HwaPriorityInput> = self
                    .hwas
                    .iter()
                    .enumerate()
                    .map(|(h, hwa)| {
                        let urgent = if self.uses_progress(h) {
                            hwa.ldp.urgent
                        } else {
                            hwa.sdp.map(|s| s.urgent).unwrap_or(true)
                        };
                        HwaPriorityInput {
                            class: hwa.spec.class,
                            urgent,
                            placement: self.placement[h],
                            swap: self.swap[h],
                            deadline: hwa.period_end,
                            period: hwa.current_period().period,
                        }
                    })
                    .collect();
                assign_squash(self.tcm.as_ref().expect("tcm state"), &inputs, p.features)
            }
        };
        let injected_cpus = self
            .injections
            .iter()
            .filter_map(|i| match i.agent {
                AgentId::Cpu(c) => Some(c as usize + 1),
                AgentId::Hwa(_) => None,
            })
            .max()
            .unwrap_or(0);
        if table.cpu.len() < injected_cpus {
            let fill = table.cpu.first().copied().unwrap_or(AgentPriority::new(1, 0));
            table.cpu.resize(injected_cpus, fill);
        }
        if self.cfg.log.decisions {
            let hwas = self
                .hwas
                .iter()
                .zip(&table.hwa)
                .map(|(hwa, pr)| HwaDecision {
                    current: current_progress(&hwa.ldp),
                    expected: expected_progress(&hwa.ldp),
                    urgent: hwa.sdp.map(|s| s.urgent).filter(|_| hwa.spec.class == HwaClass::Sdp && p.name == PolicyKind::Squash && p.features.sdp_upl).unwrap_or(hwa.ldp.urgent),
                    group: pr.group,
                    pb: hwa.ldp.pb,
                })
                .collect();
            let record = DecisionRecord {
                cycle: self.now,
                hwas,
                cpu_groups: table.cpu.iter().map(|c| c.group).collect(),
            };
            let same = self
                .decisions
                .last()
                .is_some_and(|d| d.hwas == record.hwas && d.cpu_groups == record.cpu_groups);
            if !same {
                self.decisions.push(record);
            }
        }
        self.table = table;
    }

    fn inject(&mut self, now: u64) -> Result<(), SimError> {
        while let Some(inj) = self.injections.get(self.next_injection).copied() {
            if inj.cycle > now {
                break;
            }
            self.next_injection += 1;
            let req = MemoryRequest::new(self.next_id, inj.agent, inj.address, inj.kind, &self.cfg.dram, now)?;
            self.next_id += 1;
            match inj.agent {
                AgentId::Cpu(_) => self.cpu_buffer_used += 1,
                AgentId::Hwa(_) => self.hwa_buffer_used += 1,
            }
            self.enqueue(req, now);
        }
        Ok(())
    }

    fn tick_cpus(&mut self, now: u64) -> Result<(), SimError> {
        let cap = self.cfg.dram.buffer_split_cpu;
        for c in 0..self.cpus.len() {
            let free = self.cpu_buffer_used < cap;
            if let CpuStep::Emit(access) = self.cpus[c].tick(free) {
                let req = MemoryRequest::new(
                    self.next_id,
                    AgentId::Cpu(c as u16),
                    access.address,
                    access.kind,
                    &self.cfg.dram,
                    now,
                )?;
                self.cpus[c].commit_emit(self.next_id);
                self.next_id += 1;
                self.cpu_buffer_used += 1;
                self.quantum_requests[c] += 1;
                self.enqueue(req, now);
            }
        }
        Ok(())
    }

    fn enqueue(&mut self, req: MemoryRequest, now: u64) {
        let ch = req.coords.channel as usize;
        let bank = self.cfg.dram.bank_index(&req.coords);
        let at = self.channels[ch].earliest_issue(bank, req.coords.row, now);
        self.wake_at[ch] = self.wake_at[ch].min(at);
        self.queues[ch].push(req);
    }

    fn issue(&mut self, now: u64) -> Result<(), SimError> {
        for ch in 0..self.channels.len() {
            if self.wake_at[ch] > now {
                continue;
            }
            let dram = &self.cfg.dram;
            let bank_of = |r: &MemoryRequest| dram.bank_index(&r.coords);
            let picked = self
                .arbiter
                .pick(&self.queues[ch], &self.table, &self.channels[ch], bank_of, now);
            let Some(i) = picked else {
                self.wake_at[ch] = self.arbiter.next_ready;
                continue;
            };
            let mut req = self.queues[ch].swap_remove(i);
            let bank = dram.bank_index(&req.coords);
            let cmds = self.channels[ch].issue(bank, req.coords.row, req.kind, now)?;
            self.auditor.record(&dram.timing, ch, bank, req.kind, &cmds);
            req.completion_cycle = Some(cmds.completion);
            self.completions.push(Reverse(Pending {
                cycle: cmds.completion,
                id: req.id,
                agent: req.agent,
                period: req.period,
            }));
            self.requests_served += 1;
            if self.cfg.log.service {
                self.service.push(ServiceRecord {
                    id: req.id,
                    agent: req.agent,
                    channel: ch as u32,
                    bank: bank as u32,
                    row: req.coords.row,
                    kind: cmds.kind,
                    arrival: req.arrival_cycle,
                    issue: now,
                    completion: cmds.completion,
                    group: self.table.agent(req.agent).group,
                });
            }
            self.wake_at[ch] = now + 1;
        }
        Ok(())
    }

    /// Final statistics; fails if the timing auditor flagged anything.
    pub fn finish(mut self) -> Result<SimOutput, SimError> {
        // Deadlines falling exactly on the horizon still get judged.
        let end = self.now;
        self.process_completions(end);
        for h in &mut self.hwas {
            h.on_boundary(end);
            h.close_partial_frame();
        }
        if let Some(e) = self.violation_error() {
            return Err(e);
        }
        let violations = self.auditor.violations().to_vec();
        let cycles = self.now;
        Ok(SimOutput {
            cycles,
            cpus: self
                .cpus
                .iter()
                .map(|c| CpuOutcome {
                    retired_instructions: c.retired_instructions,
                    cycles,
                    requests: c.requests_emitted,
                })
                .collect(),
            hwas: self
                .hwas
                .iter()
                .zip(&self.upl)
                .map(|(h, &upl)| HwaOutcome {
                    name: h.spec.name.clone(),
                    deadlines_met: h.deadlines_met,
                    deadlines_missed: h.deadlines_missed,
                    frames_total: h.frames_total,
                    frames_dropped: h.frames_dropped,
                    target_fps: h.spec.target_fps,
                    upl,
                })
                .collect(),
            decisions: self.decisions,
            service: self.service,
            timing_violations: violations,
            requests_served: self.requests_served,
        })
    }
}

fn validate_hwa(i: usize, h: &HwaSpec) -> Result<(), ConfigError> {
    let field = |f: &str| format!("hwa[{i}].{f}");
    if h.schedule.is_empty() {
        return Err(ConfigError::invalid(field("schedule"), "must list at least one period"));
    }
    if h.schedule.iter().any(|p| p.period == 0) {
        return Err(ConfigError::invalid(field("period"), "must be at least 1"));
    }
    if h.periods_per_frame == 0 {
        return Err(ConfigError::invalid(field("periods_per_frame"), "must be at least 1"));
    }
    if h.max_inflight == 0 {
        return Err(ConfigError::invalid(field("max_inflight"), "must be at least 1"));
    }
    if h.stride == 0 || h.region_bytes < h.stride {
        return Err(ConfigError::invalid(field("region_bytes"), "must hold at least one stride"));
    }
    Ok(())
}

/// Builds and runs a simulation.
pub fn simulate(cfg: SimConfig) -> Result<SimOutput, SimError> {
    Simulation::new(cfg)?.run()
}
