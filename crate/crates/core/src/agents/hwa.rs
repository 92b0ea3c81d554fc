//! Periodic accelerators: each period prefetches a fixed number of lines
//! from a private streaming region and must finish them by the period end.

use serde::{Deserialize, Serialize};

use crate::meta::{end_of_period_reset, LdpCounters, SdpCounters};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HwaClass {
    /// Long deadline period: progress-tracked.
    Ldp,
    /// Short deadline period: urgent window before each deadline.
    Sdp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeriodSpec {
    pub period: u64,
    pub requests: u64,
}

/// Resolved accelerator description. `schedule` cycles through its
/// entries, one per period; a fixed-period accelerator has one entry.
#[derive(Debug, Clone, PartialEq)]
pub struct HwaSpec {
    pub name: String,
    pub class: HwaClass,
    pub schedule: Vec<PeriodSpec>,
    pub periods_per_frame: u64,
    pub target_fps: f64,
    pub address_base: u64,
    pub region_bytes: u64,
    pub stride: u64,
    pub max_inflight: u32,
}

impl HwaSpec {
    pub fn fixed(name: &str, class: HwaClass, period: u64, requests: u64) -> Self {
        Self {
            name: name.to_string(),
            class,
            schedule: vec![PeriodSpec { period, requests }],
            periods_per_frame: 1,
            target_fps: 30.0,
            address_base: 0,
            region_bytes: 64 << 20,
            stride: 64,
            max_inflight: 16,
        }
    }

    pub fn min_period(&self) -> u64 {
        self.schedule.iter().map(|p| p.period).min().unwrap_or(0)
    }

    pub fn max_requests(&self) -> u64 {
        self.schedule.iter().map(|p| p.requests).max().unwrap_or(0)
    }
}

#[derive(Debug, Clone)]
pub struct HwaState {
    pub hwa_id: u16,
    pub spec: HwaSpec,
    schedule_pos: usize,
    pub period_index: u64,
    pub period_start: u64,
    pub period_end: u64,
    /// Requests of this period not yet handed to the controller.
    pub pending_emit: u64,
    pub inflight: u32,
    next_offset: u64,
    pub ldp: LdpCounters,
    pub sdp: Option<SdpCounters>,
    pub deadlines_met: u64,
    pub deadlines_missed: u64,
    pub frames_total: u64,
    pub frames_dropped: u64,
    pub periods_in_frame: u64,
    pub current_frame_missed: bool,
}

impl HwaState {
    /// Creates the accelerator with its first period starting at `start`.
    pub fn new(hwa_id: u16, spec: HwaSpec, start: u64) -> Self {
        let first = spec.schedule[0];
        let sdp = (spec.class == HwaClass::Sdp).then(|| SdpCounters::new(0, first.period));
        Self {
            hwa_id,
            schedule_pos: 0,
            period_index: 0,
            period_start: start,
            period_end: start + first.period,
            pending_emit: first.requests,
            inflight: 0,
            next_offset: 0,
            ldp: LdpCounters::new(first.requests, first.period),
            sdp,
            deadlines_met: 0,
            deadlines_missed: 0,
            frames_total: 0,
            frames_dropped: 0,
            periods_in_frame: 0,
            current_frame_missed: false,
            spec,
        }
    }

    pub fn current_period(&self) -> PeriodSpec {
        self.spec.schedule[self.schedule_pos]
    }

    /// Installs the urgent period length for a short-period accelerator.
    pub fn set_upl(&mut self, upl: u64) {
        let total = self.current_period().period;
        self.sdp = Some(SdpCounters::new(upl, total));
    }

    /// Closes the period if `now` is its deadline. Returns whether the
    /// deadline was met; a request completing on the boundary cycle counts.
    pub fn on_boundary(&mut self, now: u64) -> Option<bool> {
        if now != self.period_end {
            return None;
        }
        let met = self.ldp.curr_req >= self.ldp.total_req;
        if met {
            self.deadlines_met += 1;
        } else {
            self.deadlines_missed += 1;
            self.current_frame_missed = true;
        }
        self.periods_in_frame += 1;
        if self.periods_in_frame == self.spec.periods_per_frame {
            self.record_frame_outcome();
        }

        self.schedule_pos = (self.schedule_pos + 1) % self.spec.schedule.len();
        let next = self.current_period();
        self.period_index += 1;
        self.period_start = now;
        self.period_end = now + next.period;
        // Unissued work of the old period is abandoned.
        self.pending_emit = next.requests;
        end_of_period_reset(&mut self.ldp, next.requests, next.period);
        if let Some(sdp) = self.sdp.as_mut() {
            sdp.reset(next.period);
        }
        Some(met)
    }

    /// Drops the frame if any of its periods missed.
    pub fn record_frame_outcome(&mut self) {
        self.frames_total += 1;
        if self.current_frame_missed {
            self.frames_dropped += 1;
        }
        self.current_frame_missed = false;
        self.periods_in_frame = 0;
    }

    /// Counts an unfinished frame that already missed a deadline; it is
    /// dropped whatever its remaining periods do.
    pub fn close_partial_frame(&mut self) {
        if self.periods_in_frame > 0 && self.current_frame_missed {
            self.record_frame_outcome();
        }
    }

    pub fn wants_emit(&self) -> bool {
        self.pending_emit > 0 && self.inflight < self.spec.max_inflight
    }

    /// Next streaming address; marks one request in flight.
    pub fn take_address(&mut self) -> u64 {
        let addr = self.spec.address_base + self.next_offset;
        self.next_offset = (self.next_offset + self.spec.stride) % self.spec.region_bytes.max(1);
        self.pending_emit -= 1;
        self.inflight += 1;
        addr
    }

    /// A request from period `period` finished; only the current period's
    /// requests count toward progress.
    pub fn on_complete(&mut self, period: u64) {
        self.inflight -= 1;
        if period == self.period_index {
            self.ldp.curr_req += 1;
        }
    }

    pub fn completed_periods(&self) -> u64 {
        self.deadlines_met + self.deadlines_missed
    }
}
