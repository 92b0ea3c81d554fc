use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dram::{decode_address, Coords, DramConfig};
use crate::error::SimError;

/// Owner of a memory request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AgentId {
    Cpu(u16),
    Hwa(u16),
}

impl AgentId {
    pub fn is_hwa(self) -> bool {
        matches!(self, AgentId::Hwa(_))
    }

    pub fn index(self) -> usize {
        match self {
            AgentId::Cpu(i) | AgentId::Hwa(i) => i as usize,
        }
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AgentId::Cpu(i) => write!(f, "cpu{i}"),
            AgentId::Hwa(i) => write!(f, "hwa{i}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AccessKind {
    Read,
    Write,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemoryRequest {
    pub id: u64,
    pub agent: AgentId,
    pub address: u64,
    pub kind: AccessKind,
    pub coords: Coords,
    pub arrival_cycle: u64,
    pub completion_cycle: Option<u64>,
    /// Accelerator period the request belongs to; zero for CPU requests.
    pub period: u64,
}

impl MemoryRequest {
    pub fn new(
        id: u64,
        agent: AgentId,
        address: u64,
        kind: AccessKind,
        config: &DramConfig,
        arrival_cycle: u64,
    ) -> Result<Self, SimError> {
        Ok(Self {
            id,
            agent,
            address,
            kind,
            coords: decode_address(address, config)?,
            arrival_cycle,
            completion_cycle: None,
            period: 0,
        })
    }
}
