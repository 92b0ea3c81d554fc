use thiserror::Error;

/// Invalid experiment or component configuration; `field` names the
/// offending config key.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("invalid `{field}`: {reason}")]
    Invalid { field: String, reason: String },
    #[error("failed to parse config: {0}")]
    Parse(String),
    #[error("trace `{path}` line {line}: {reason}")]
    Trace {
        path: String,
        line: usize,
        reason: String,
    },
    #[error("i/o error on `{path}`: {reason}")]
    Io { path: String, reason: String },
}

impl ConfigError {
    pub fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        ConfigError::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

/// Runtime failures of a simulation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("address {address:#x} outside the {limit:#x}-byte address space")]
    AddressOutOfRange { address: u64, limit: u64 },
    #[error("request issued at cycle {cycle} before its earliest legal cycle {earliest}")]
    IllegalIssue { cycle: u64, earliest: u64 },
    #[error("timing auditor found {count} violation(s); first: {first}")]
    TimingViolation { count: usize, first: String },
    #[error("simulation left requests unserved: {0}")]
    Unserved(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

/// Metric computations that cannot produce a value.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("no alone-run statistics for core {0}")]
    MissingAlone(usize),
    #[error("alone-run IPC of core {0} is zero")]
    ZeroAloneIpc(usize),
    #[error("shared and alone statistics cover different core counts")]
    CoreCountMismatch,
}
