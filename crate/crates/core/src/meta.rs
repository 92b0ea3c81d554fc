//! Per-accelerator progress counters and the decisions derived from them:
//! urgency, urgent-window placement for short-period accelerators, and the
//! probabilistic priority switch for long-period accelerators.

use rand::Rng;

use crate::error::ConfigError;

/// Counters kept for a long-deadline-period accelerator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LdpCounters {
    /// Requests of the current period completed so far.
    pub curr_req: u64,
    /// Requests the current period must complete.
    pub total_req: u64,
    /// Cycles elapsed in the current period.
    pub curr_cyc: u64,
    /// Length of the current period.
    pub total_cyc: u64,
    /// Probability that memory-intensive CPUs outrank this accelerator
    /// while it sits in the non-urgent tier.
    pub pb: f64,
    /// Set once the accelerator has dropped out of urgency this period.
    pub was_nonurgent_before: bool,
    pub urgent: bool,
}

impl LdpCounters {
    pub fn new(total_req: u64, total_cyc: u64) -> Self {
        Self {
            curr_req: 0,
            total_req,
            curr_cyc: 0,
            total_cyc,
            pb: 0.0,
            was_nonurgent_before: false,
            urgent: true,
        }
    }
}

/// Counters kept for a short-deadline-period accelerator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SdpCounters {
    /// Offset into the period at which the accelerator turns urgent.
    pub priority_cyc: u64,
    pub curr_cyc: u64,
    pub total_cyc: u64,
    pub upl: u64,
    pub urgent: bool,
}

impl SdpCounters {
    pub fn new(upl: u64, total_cyc: u64) -> Self {
        Self {
            priority_cyc: total_cyc.saturating_sub(upl),
            curr_cyc: 0,
            total_cyc,
            upl,
            urgent: upl >= total_cyc,
        }
    }

    /// Urgent from `priority_cyc` to the end of the period.
    pub fn evaluate(&mut self, curr_cyc: u64) -> bool {
        self.curr_cyc = curr_cyc;
        self.urgent = curr_cyc >= self.priority_cyc;
        self.urgent
    }

    pub fn reset(&mut self, total_cyc: u64) {
        self.total_cyc = total_cyc;
        self.priority_cyc = total_cyc.saturating_sub(self.upl);
        self.curr_cyc = 0;
        self.urgent = self.priority_cyc == 0;
    }
}

/// Fraction of the period's requests already completed. A period with no
/// requests counts as complete.
pub fn current_progress(c: &LdpCounters) -> f64 {
    if c.total_req == 0 {
        1.0
    } else {
        c.curr_req as f64 / c.total_req as f64
    }
}

/// Fraction of the period already elapsed.
pub fn expected_progress(c: &LdpCounters) -> f64 {
    c.curr_cyc as f64 / c.total_cyc.max(1) as f64
}

/// Urgent when behind schedule or past the emergent threshold.
pub fn is_urgent(current: f64, expected: f64, emergent_threshold: f64) -> bool {
    current <= expected || expected > emergent_threshold
}

pub fn classify_ldp_urgency(c: &LdpCounters, emergent_threshold: f64) -> bool {
    is_urgent(current_progress(c), expected_progress(c), emergent_threshold)
}

/// Static description of one short-deadline-period accelerator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SdpTask {
    pub period: u64,
    pub requests: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UplAssignment {
    /// Urgent period length including interference from shorter-period tasks.
    pub upl: u64,
    /// Offset at which urgency starts within a period of `task.period`.
    pub priority_cyc: u64,
}

/// Urgent period lengths for a set of short-period accelerators.
///
/// Each task's own window is `t_rc * requests + slack`. Tasks are ranked by
/// period (ties by position), and every task's window `w` is extended by
/// `ceil(w / period_i) * upl_i` for each higher-ranked task `i`, repeated
/// until `w` is stable. Results
/// come back in input order. A window that no longer fits inside its
/// period is rejected.
pub fn compute_upl(
    tasks: &[SdpTask],
    t_rc: u64,
    slack: u64,
) -> Result<Vec<UplAssignment>, ConfigError> {
    let mut order: Vec<usize> = (0..tasks.len()).collect();
    order.sort_by_key(|&i| (tasks[i].period, i));
    let mut upl = vec![0u64; tasks.len()];
    for (pos, &x) in order.iter().enumerate() {
        let task = tasks[x];
        if task.period == 0 {
            return Err(ConfigError::invalid("hwa.period", "must be at least 1"));
        }
        let own = t_rc * task.requests + slack;
        // A longer window can overlap more higher-ranked windows; extend
        // until the count stops growing.
        let mut window = own;
        loop {
            let extension: u64 = order[..pos]
                .iter()
                .map(|&i| window.div_ceil(tasks[i].period) * upl[i])
                .sum();
            let next = own + extension;
            if next == window || next > task.period {
                window = next;
                break;
            }
            window = next;
        }
        upl[x] = window;
        if upl[x] > task.period {
            return Err(ConfigError::invalid(
                format!("hwa[{x}].requests_per_period"),
                format!(
                    "urgent period length {} exceeds the {}-cycle period; deadline cannot be guaranteed",
                    upl[x], task.period
                ),
            ));
        }
    }
    Ok(tasks
        .iter()
        .zip(&upl)
        .map(|(t, &u)| UplAssignment {
            upl: u,
            priority_cyc: t.period - u,
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PbDraw {
    /// Memory-intensive CPUs outrank the accelerator this interval.
    Swap,
    NoSwap,
}

pub fn draw_pb<R: Rng + ?Sized>(c: &LdpCounters, rng: &mut R) -> PbDraw {
    // gen::<f64>() is in [0, 1), so pb = 0 never swaps and pb = 1 always does.
    if rng.gen::<f64>() < c.pb {
        PbDraw::Swap
    } else {
        PbDraw::NoSwap
    }
}

/// Raises pb by `inc` when ahead of schedule, lowers it by `dec` when
/// behind, and clamps to [0, 1].
pub fn update_pb(c: &mut LdpCounters, inc: f64, dec: f64) -> f64 {
    let current = current_progress(c);
    let expected = expected_progress(c);
    if current > expected {
        c.pb += inc;
    } else if current < expected {
        c.pb -= dec;
    }
    c.pb = c.pb.clamp(0.0, 1.0);
    c.pb
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NonUrgentGroup {
    /// Above memory-intensive CPUs.
    Group4,
    /// Below every CPU.
    Group6,
}

/// Tier for a long-period accelerator that just became non-urgent: the
/// first drop of a period lands in group 6, later ones in group 4.
pub fn place_nonurgent_ldp(c: &mut LdpCounters) -> NonUrgentGroup {
    if c.was_nonurgent_before {
        NonUrgentGroup::Group4
    } else {
        c.was_nonurgent_before = true;
        NonUrgentGroup::Group6
    }
}

/// Starts a new period; `pb` carries over.
pub fn end_of_period_reset(c: &mut LdpCounters, total_req: u64, total_cyc: u64) {
    c.curr_req = 0;
    c.curr_cyc = 0;
    c.total_req = total_req;
    c.total_cyc = total_cyc;
    c.was_nonurgent_before = false;
    c.urgent = true;
}
