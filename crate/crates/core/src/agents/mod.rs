pub mod cpu;
pub mod hwa;
pub mod trace;

pub use cpu::{Cluster, CpuParams, CpuState, CpuStep};
pub use hwa::{HwaClass, HwaSpec, HwaState, PeriodSpec};
pub use trace::{synthesize_trace, SynthProfile, TraceRecord};
