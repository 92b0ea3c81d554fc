//! Trace-driven core with an issue width, an instruction window and a cap
//! on outstanding memory requests.

use std::collections::VecDeque;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::trace::{MemAccess, TraceRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CpuParams {
    pub max_inflight: u32,
    pub issue_width: u32,
    /// Instructions that may retire past the oldest outstanding request.
    pub window: u32,
    /// Restart the trace when it runs out.
    pub wrap: bool,
}

impl Default for CpuParams {
    fn default() -> Self {
        Self {
            max_inflight: 16,
            issue_width: 3,
            window: 128,
            wrap: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cluster {
    NonIntensive,
    Intensive,
}

/// What a core did in one cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CpuStep {
    Retired(u64),
    /// The core wants to issue this access; call [`CpuState::commit_emit`]
    /// if it was accepted.
    Emit(MemAccess),
    Stalled,
    Idle,
}

#[derive(Debug, Clone)]
pub struct CpuState {
    pub core_id: u16,
    trace: Arc<[TraceRecord]>,
    cursor: usize,
    remaining_nonmem: u64,
    exhausted: bool,
    pub params: CpuParams,
    pub inflight: u32,
    /// (instruction index, request id, completed) in program order.
    outstanding: VecDeque<(u64, u64, bool)>,
    pub window_stall: bool,
    pub retired_instructions: u64,
    pub requests_emitted: u64,
    pub stall_cycles: u64,
    pub cluster: Cluster,
    pub rank: u32,
}

impl CpuState {
    pub fn new(core_id: u16, trace: Arc<[TraceRecord]>, params: CpuParams) -> Self {
        let mut s = Self {
            core_id,
            remaining_nonmem: 0,
            exhausted: trace.is_empty(),
            trace,
            cursor: 0,
            params,
            inflight: 0,
            outstanding: VecDeque::new(),
            window_stall: false,
            retired_instructions: 0,
            requests_emitted: 0,
            stall_cycles: 0,
            cluster: Cluster::NonIntensive,
            rank: 0,
        };
        if !s.exhausted {
            s.remaining_nonmem = s.trace[0].nonmem_instructions;
            s.skip_empty_compute();
        }
        s
    }

    pub fn trace(&self) -> &Arc<[TraceRecord]> {
        &self.trace
    }

    pub fn is_exhausted(&self) -> bool {
        self.exhausted
    }

    /// Instructions that may still retire before the window fills.
    fn window_room(&self) -> u64 {
        match self.outstanding.front() {
            Some(&(oldest, _, _)) => {
                (oldest + self.params.window as u64).saturating_sub(self.retired_instructions)
            }
            None => u64::MAX,
        }
    }

    fn advance(&mut self) {
        self.cursor += 1;
        if self.cursor == self.trace.len() {
            if !self.params.wrap {
                self.exhausted = true;
                return;
            }
            self.cursor = 0;
        }
        self.remaining_nonmem = self.trace[self.cursor].nonmem_instructions;
    }

    /// Compute-only records whose instructions are done carry nothing to
    /// emit, so move past them without spending a cycle.
    fn skip_empty_compute(&mut self) {
        let mut guard = self.trace.len();
        while !self.exhausted
            && self.remaining_nonmem == 0
            && self.trace[self.cursor].access.is_none()
            && guard > 0
        {
            self.advance();
            guard -= 1;
        }
        if guard == 0 && self.remaining_nonmem == 0 {
            // A trace of empty compute records has nothing to run.
            self.exhausted = true;
        }
    }

    /// One cycle of the core. `buffer_free` reports whether the controller
    /// can accept another CPU request this cycle.
    pub fn tick(&mut self, buffer_free: bool) -> CpuStep {
        if self.exhausted {
            return CpuStep::Idle;
        }
        let room = self.window_room();
        if self.remaining_nonmem > 0 {
            let n = self
                .remaining_nonmem
                .min(self.params.issue_width as u64)
                .min(room);
            if n == 0 {
                self.window_stall = true;
                self.stall_cycles += 1;
                return CpuStep::Stalled;
            }
            self.window_stall = false;
            self.remaining_nonmem -= n;
            self.retired_instructions += n;
            if self.remaining_nonmem == 0 && self.trace[self.cursor].access.is_none() {
                self.advance();
                self.skip_empty_compute();
            }
            return CpuStep::Retired(n);
        }
        let access = self.trace[self.cursor]
            .access
            .expect("compute-only records are skipped once drained");
        self.window_stall = room == 0;
        if room == 0 || self.inflight >= self.params.max_inflight || !buffer_free {
            self.stall_cycles += 1;
            return CpuStep::Stalled;
        }
        CpuStep::Emit(access)
    }

    /// Records that the access returned by the last `tick` was enqueued as
    /// request `id`.
    pub fn commit_emit(&mut self, id: u64) {
        self.outstanding
            .push_back((self.retired_instructions, id, false));
        self.retired_instructions += 1;
        self.inflight += 1;
        self.requests_emitted += 1;
        self.advance();
        self.skip_empty_compute();
    }

    pub fn stall_for_buffer(&mut self) {
        self.stall_cycles += 1;
    }

    pub fn on_complete(&mut self, id: u64) {
        if let Some(e) = self.outstanding.iter_mut().find(|e| e.1 == id) {
            e.2 = true;
            self.inflight -= 1;
        }
        while matches!(self.outstanding.front(), Some(&(_, _, true))) {
            self.outstanding.pop_front();
        }
    }

    /// True when nothing can change until one of this core's requests
    /// completes.
    pub fn blocked_on_memory(&self) -> bool {
        !self.exhausted
            && (self.window_room() == 0
                || (self.remaining_nonmem == 0 && self.inflight >= self.params.max_inflight))
    }
}
