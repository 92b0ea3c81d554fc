//! System performance, fairness and deadline metrics.

use crate::error::MetricsError;
use crate::sim::{CpuOutcome, HwaOutcome, SimOutput};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoreRun {
    pub retired_instructions: u64,
    pub cycles: u64,
}

impl CoreRun {
    pub fn ipc(&self) -> f64 {
        if self.cycles == 0 {
            0.0
        } else {
            self.retired_instructions as f64 / self.cycles as f64
        }
    }
}

impl From<&CpuOutcome> for CoreRun {
    fn from(c: &CpuOutcome) -> Self {
        Self {
            retired_instructions: c.retired_instructions,
            cycles: c.cycles,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HwaRun {
    pub deadlines_met: u64,
    pub deadlines_missed: u64,
    pub frames_total: u64,
    pub frames_dropped: u64,
    pub target_fps: f64,
}

impl From<&HwaOutcome> for HwaRun {
    fn from(h: &HwaOutcome) -> Self {
        Self {
            deadlines_met: h.deadlines_met,
            deadlines_missed: h.deadlines_missed,
            frames_total: h.frames_total,
            frames_dropped: h.frames_dropped,
            target_fps: h.target_fps,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunStats {
    pub shared: Vec<CoreRun>,
    /// Same core running by itself; `None` until measured.
    pub alone: Vec<Option<CoreRun>>,
    pub hwas: Vec<HwaRun>,
}

impl RunStats {
    pub fn from_output(out: &SimOutput, alone: Vec<Option<CoreRun>>) -> Self {
        Self {
            shared: out.cpus.iter().map(CoreRun::from).collect(),
            alone,
            hwas: out.hwas.iter().map(HwaRun::from).collect(),
        }
    }

    fn ipc_pairs(&self) -> Result<Vec<(f64, f64)>, MetricsError> {
        if self.shared.len() != self.alone.len() {
            return Err(MetricsError::CoreCountMismatch);
        }
        self.shared
            .iter()
            .zip(&self.alone)
            .enumerate()
            .map(|(i, (s, a))| {
                let a = a.ok_or(MetricsError::MissingAlone(i))?;
                if a.ipc() <= 0.0 {
                    return Err(MetricsError::ZeroAloneIpc(i));
                }
                Ok((s.ipc(), a.ipc()))
            })
            .collect()
    }
}

/// Sum over cores of shared IPC over alone IPC.
pub fn weighted_speedup(stats: &RunStats) -> Result<f64, MetricsError> {
    Ok(stats.ipc_pairs()?.iter().map(|(s, a)| s / a).sum())
}

/// Largest alone-over-shared IPC ratio; infinite when a core made no
/// progress in the shared run.
pub fn maximum_slowdown(stats: &RunStats) -> Result<f64, MetricsError> {
    Ok(stats
        .ipc_pairs()?
        .iter()
        .map(|&(s, a)| if s == 0.0 { f64::INFINITY } else { a / s })
        .fold(0.0, f64::max))
}

/// Fraction of completed periods that met their deadline; `None` before
/// any period completed.
pub fn deadline_met_ratio(h: &HwaRun) -> Option<f64> {
    let total = h.deadlines_met + h.deadlines_missed;
    (total > 0).then(|| h.deadlines_met as f64 / total as f64)
}

/// Delivered frames per second given that any missed period drops its
/// frame. A frame counts once it completes or once it has dropped.
pub fn frame_rate(h: &HwaRun) -> f64 {
    if h.frames_total == 0 {
        return if h.deadlines_missed == 0 { h.target_fps } else { 0.0 };
    }
    h.target_fps * (h.frames_total - h.frames_dropped) as f64 / h.frames_total as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn run(instr: u64, cycles: u64) -> CoreRun {
        CoreRun {
            retired_instructions: instr,
            cycles,
        }
    }

    fn uniform(n: usize) -> RunStats {
        RunStats {
            shared: vec![run(1000, 1000); n],
            alone: vec![Some(run(1000, 1000)); n],
            hwas: Vec::new(),
        }
    }

    fn hwa(met: u64, missed: u64, frames: u64, dropped: u64) -> HwaRun {
        HwaRun {
            deadlines_met: met,
            deadlines_missed: missed,
            frames_total: frames,
            frames_dropped: dropped,
            target_fps: 30.0,
        }
    }

    #[test]
    fn no_interference() {
        let s = uniform(4);
        assert_eq!(weighted_speedup(&s).unwrap(), 4.0);
        assert_eq!(maximum_slowdown(&s).unwrap(), 1.0);
    }

    #[test]
    fn one_core_at_half_speed() {
        let mut s = uniform(4);
        s.shared[2] = run(500, 1000);
        assert_eq!(weighted_speedup(&s).unwrap(), 3.5);
        assert_eq!(maximum_slowdown(&s).unwrap(), 2.0);
    }

    #[test]
    fn missing_or_zero_alone_runs_are_refused() {
        let mut s = uniform(2);
        s.alone[1] = None;
        assert_eq!(weighted_speedup(&s), Err(MetricsError::MissingAlone(1)));
        s.alone[1] = Some(run(0, 10));
        assert_eq!(maximum_slowdown(&s), Err(MetricsError::ZeroAloneIpc(1)));
        s.alone.pop();
        assert_eq!(weighted_speedup(&s), Err(MetricsError::CoreCountMismatch));
    }

    #[test]
    fn stalled_core_has_infinite_slowdown() {
        let mut s = uniform(2);
        s.shared[0] = run(0, 1000);
        assert!(maximum_slowdown(&s).unwrap().is_infinite());
    }

    #[test]
    fn met_ratio_cases() {
        assert_eq!(deadline_met_ratio(&hwa(10, 0, 1, 0)), Some(1.0));
        assert_eq!(deadline_met_ratio(&hwa(1999, 1, 1, 1)), Some(0.9995));
        assert_eq!(deadline_met_ratio(&hwa(0, 0, 0, 0)), None);
    }

    #[test]
    fn frame_rate_cases() {
        assert_eq!(frame_rate(&hwa(30, 0, 30, 0)), 30.0);
        assert_eq!(frame_rate(&hwa(15, 15, 30, 15)), 15.0);
        assert_eq!(frame_rate(&hwa(29, 1, 30, 1)), 29.0);
    }

    #[test]
    fn partial_frame_counts_in_half_met_stream() {
        // Half of each frame's periods met, concentrated so that every
        // other frame drops.
        let h = hwa(540, 460, 10, 5);
        assert!((deadline_met_ratio(&h).unwrap() - 0.54).abs() < 1e-12);
        assert_eq!(frame_rate(&h), 15.0);
    }

    proptest! {
        #[test]
        fn speedup_is_invariant_under_relabeling(
            cores in proptest::collection::vec((1u64..10_000, 1u64..10_000), 1..8),
            rot in 0usize..8,
        ) {
            let s = RunStats {
                shared: cores.iter().map(|&(a, _)| run(a, 10_000)).collect(),
                alone: cores.iter().map(|&(_, b)| Some(run(b, 10_000))).collect(),
                hwas: Vec::new(),
            };
            let mut r = s.clone();
            let k = rot % cores.len();
            r.shared.rotate_left(k);
            r.alone.rotate_left(k);
            let (a, b) = (weighted_speedup(&s).unwrap(), weighted_speedup(&r).unwrap());
            prop_assert!((a - b).abs() < 1e-9);
            prop_assert_eq!(maximum_slowdown(&s).unwrap(), maximum_slowdown(&r).unwrap());
        }

        #[test]
        fn slowed_cores_have_slowdown_at_least_one(
            cores in proptest::collection::vec((1u64..10_000, 0u64..10_000), 1..8),
        ) {
            let s = RunStats {
                shared: cores.iter().map(|&(a, d)| run(a.saturating_sub(d).max(1), 10_000)).collect(),
                alone: cores.iter().map(|&(a, _)| Some(run(a, 10_000))).collect(),
                hwas: Vec::new(),
            };
            prop_assert!(maximum_slowdown(&s).unwrap() >= 1.0);
        }

        #[test]
        fn frame_rate_bounded_by_target(frames in 1u64..100, dropped in 0u64..100) {
            let dropped = dropped.min(frames);
            let h = hwa(0, 0, frames, dropped);
            let f = frame_rate(&h);
            prop_assert!(f <= h.target_fps);
            prop_assert_eq!(f == h.target_fps, dropped == 0);
        }
    }
}
