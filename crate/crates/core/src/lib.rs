//! Cycle-level simulator of a DRAM system shared by trace-driven CPU cores
//! and periodic hardware accelerators, with the memory schedulers used to
//! trade CPU throughput against accelerator deadlines.

pub mod agents;
pub mod config;
pub mod dram;
pub mod error;
pub mod harness;
pub mod meta;
pub mod metrics;
pub mod oracle;
pub mod policy;
pub mod request;
pub mod scenarios;
pub mod sim;

pub use config::ExperimentConfig;
pub use dram::{DramConfig, TimingParams};
pub use error::{ConfigError, MetricsError, SimError};
pub use policy::{PolicyKind, PolicyParams, SquashFeatures};
pub use request::{AccessKind, AgentId, MemoryRequest};
