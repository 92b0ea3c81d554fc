//! Experiment configuration files.
//!
//! A config is TOML with top-level `seed` and `horizon`, an optional
//! `[dram]` table (defaults to the DDR3-1333 preset), optional `[cpu]`
//! core parameters, one `[[core]]` entry per CPU (`trace = "path"` or
//! `synth = { mpki, instructions, locality, seed }`), one `[[hwa]]` entry
//! per accelerator, a `[policy]` block and an optional `[sweep]` grid.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::agents::trace::{load_trace, synthesize_trace};
use crate::agents::{CpuParams, HwaClass, HwaSpec, PeriodSpec, SynthProfile, TraceRecord};
use crate::dram::DramConfig;
use crate::error::ConfigError;
use crate::policy::{PolicyKind, PolicyParams};
use crate::sim::SimConfig;

pub const DEFAULT_HORIZON: u64 = 20_000_000;

/// Default private region reserved for each accelerator.
pub const DEFAULT_HWA_REGION: u64 = 64 << 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_horizon")]
    pub horizon: u64,
    #[serde(default = "DramConfig::ddr3_1333")]
    pub dram: DramConfig,
    #[serde(default)]
    pub cpu: CpuParams,
    #[serde(default, rename = "core")]
    pub cores: Vec<CoreConfig>,
    #[serde(default, rename = "hwa")]
    pub hwas: Vec<HwaConfig>,
    #[serde(default)]
    pub policy: PolicyParams,
    #[serde(default)]
    pub sweep: Option<SweepGrid>,
}

fn default_horizon() -> u64 {
    DEFAULT_HORIZON
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoreConfig {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub trace: Option<PathBuf>,
    #[serde(default)]
    pub synth: Option<SynthProfile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HwaConfig {
    pub name: String,
    pub class: HwaClass,
    /// Period in DRAM cycles.
    #[serde(default)]
    pub period: Option<u64>,
    /// Period in microseconds, converted with the DRAM clock.
    #[serde(default)]
    pub period_us: Option<f64>,
    #[serde(default)]
    pub requests_per_period: Option<u64>,
    /// Bandwidth demand, converted to requests per period.
    #[serde(default)]
    pub bandwidth_mb_s: Option<f64>,
    /// Variable-period accelerators list their periods here instead.
    #[serde(default)]
    pub schedule: Option<Vec<PeriodSpec>>,
    #[serde(default = "one")]
    pub periods_per_frame: u64,
    #[serde(default = "thirty")]
    pub target_fps: f64,
    #[serde(default)]
    pub address_base: Option<u64>,
    #[serde(default)]
    pub region_bytes: Option<u64>,
    #[serde(default)]
    pub stride: Option<u64>,
    #[serde(default = "sixteen")]
    pub max_inflight: u32,
}

fn one() -> u64 {
    1
}

fn thirty() -> f64 {
    30.0
}

fn sixteen() -> u32 {
    16
}

/// Parameter grid; every combination is run.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepGrid {
    pub policy: Vec<PolicyKind>,
    pub emergent_threshold: Vec<f64>,
    pub cluster_factor: Vec<f64>,
    pub seed: Vec<u64>,
}

/// One point of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub policy: PolicyKind,
    pub seed: u64,
    pub emergent_threshold: f64,
    pub cluster_factor: f64,
}

impl SweepGrid {
    fn validate(&self) -> Result<(), ConfigError> {
        if self.policy.is_empty()
            && self.emergent_threshold.is_empty()
            && self.cluster_factor.is_empty()
            && self.seed.is_empty()
        {
            return Err(ConfigError::invalid("sweep", "grid has no parameters"));
        }
        for (field, vals) in [
            ("sweep.emergent_threshold", &self.emergent_threshold),
            ("sweep.cluster_factor", &self.cluster_factor),
        ] {
            if vals.iter().any(|v| !v.is_finite() || !(0.0..=1.0).contains(v)) {
                return Err(ConfigError::invalid(field, "values must be finite and within [0, 1]"));
            }
        }
        Ok(())
    }

    /// Cartesian product of the grid; empty axes take the base value.
    pub fn points(&self, base: &ExperimentConfig) -> Vec<GridPoint> {
        fn axis<T: Copy>(v: &[T], d: T) -> Vec<T> {
            if v.is_empty() {
                vec![d]
            } else {
                v.to_vec()
            }
        }
        let mut out = Vec::new();
        for &policy in &axis(&self.policy, base.policy.name) {
            for &seed in &axis(&self.seed, base.seed) {
                for &emergent_threshold in &axis(&self.emergent_threshold, base.policy.emergent_threshold) {
                    for &cluster_factor in &axis(&self.cluster_factor, base.policy.cluster_factor) {
                        out.push(GridPoint {
                            policy,
                            seed,
                            emergent_threshold,
                            cluster_factor,
                        });
                    }
                }
            }
        }
        out
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Reads and validates a config; relative trace paths resolve against
    /// the config file's directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        let mut cfg = Self::from_toml(&text)?;
        if let Some(dir) = path.parent() {
            for core in &mut cfg.cores {
                if let Some(t) = core.trace.as_mut() {
                    if t.is_relative() {
                        *t = dir.join(&*t);
                    }
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_point(&self, p: GridPoint) -> Self {
        let mut c = self.clone();
        c.policy.name = p.policy;
        c.seed = p.seed;
        c.policy.emergent_threshold = p.emergent_threshold;
        c.policy.cluster_factor = p.cluster_factor;
        c.sweep = None;
        c
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.dram.validate()?;
        self.policy.validate()?;
        if self.horizon == 0 {
            return Err(ConfigError::invalid("horizon", "must be at least 1"));
        }
        if self.cores.is_empty() && self.hwas.is_empty() {
            return Err(ConfigError::invalid("core", "no CPU cores or accelerators configured"));
        }
        if self.cpu.max_inflight == 0 || self.cpu.issue_width == 0 || self.cpu.window == 0 {
            return Err(ConfigError::invalid("cpu", "max_inflight, issue_width and window must be at least 1"));
        }
        for (i, core) in self.cores.iter().enumerate() {
            match (&core.trace, &core.synth) {
                (Some(path), None) => {
                    if !path.exists() {
                        return Err(ConfigError::invalid(
                            format!("core[{i}].trace"),
                            format!("file `{}` does not exist", path.display()),
                        ));
                    }
                }
                (None, Some(_)) => {}
                _ => {
                    return Err(ConfigError::invalid(
                        format!("core[{i}]"),
                        "set exactly one of `trace` or `synth`",
                    ))
                }
            }
        }
        let specs = self.hwa_specs()?;
        let total = self.dram.total_bytes();
        for (i, s) in specs.iter().enumerate() {
            if s.address_base.checked_add(s.region_bytes).is_none_or(|end| end > total) {
                return Err(ConfigError::invalid(
                    format!("hwa[{i}].region_bytes"),
                    "region extends past the end of memory",
                ));
            }
            if s.stride == 0 || s.region_bytes < s.stride {
                return Err(ConfigError::invalid(format!("hwa[{i}].stride"), "must be non-zero and fit the region"));
            }
        }
        if let Some(grid) = &self.sweep {
            grid.validate()?;
        }
        Ok(())
    }

    pub fn cycles_from_us(&self, us: f64) -> u64 {
        (us * 1000.0 / self.dram.timing.clock_period_ns).round() as u64
    }

    fn requests_for(&self, field: &str, h: &HwaConfig, period: u64) -> Result<u64, ConfigError> {
        match (h.requests_per_period, h.bandwidth_mb_s) {
            (Some(n), None) => Ok(n),
            (None, Some(bw)) if bw >= 0.0 && bw.is_finite() => {
                let seconds = period as f64 * self.dram.timing.clock_period_ns * 1e-9;
                Ok((bw * 1e6 * seconds / self.dram.line_size as f64).round() as u64)
            }
            (None, Some(_)) => Err(ConfigError::invalid(format!("{field}.bandwidth_mb_s"), "must be finite and non-negative")),
            _ => Err(ConfigError::invalid(
                field,
                "set exactly one of `requests_per_period` or `bandwidth_mb_s`",
            )),
        }
    }

    /// Accelerator descriptions resolved to cycles and request counts.
    pub fn hwa_specs(&self) -> Result<Vec<HwaSpec>, ConfigError> {
        let total = self.dram.total_bytes();
        self.hwas
            .iter()
            .enumerate()
            .map(|(i, h)| {
                let field = format!("hwa[{i}]");
                let schedule = match (&h.schedule, h.period, h.period_us) {
                    (Some(s), None, None) => {
                        if s.is_empty() {
                            return Err(ConfigError::invalid(format!("{field}.schedule"), "must not be empty"));
                        }
                        s.clone()
                    }
                    (None, Some(p), None) => vec![PeriodSpec {
                        period: p,
                        requests: self.requests_for(&field, h, p)?,
                    }],
                    (None, None, Some(us)) => {
                        let p = self.cycles_from_us(us);
                        vec![PeriodSpec {
                            period: p,
                            requests: self.requests_for(&field, h, p)?,
                        }]
                    }
                    _ => {
                        return Err(ConfigError::invalid(
                            format!("{field}.period"),
                            "set exactly one of `period`, `period_us` or `schedule`",
                        ))
                    }
                };
                if schedule.iter().any(|p| p.period == 0) {
                    return Err(ConfigError::invalid(format!("{field}.period"), "must be at least 1"));
                }
                if h.periods_per_frame == 0 {
                    return Err(ConfigError::invalid(format!("{field}.periods_per_frame"), "must be at least 1"));
                }
                if !(h.target_fps > 0.0 && h.target_fps.is_finite()) {
                    return Err(ConfigError::invalid(format!("{field}.target_fps"), "must be positive"));
                }
                if h.max_inflight == 0 {
                    return Err(ConfigError::invalid(format!("{field}.max_inflight"), "must be at least 1"));
                }
                let region_bytes = h.region_bytes.unwrap_or(DEFAULT_HWA_REGION);
                // Regions stack downward from the top of memory.
                let address_base = h
                    .address_base
                    .unwrap_or_else(|| total.saturating_sub(region_bytes * (i as u64 + 1)));
                Ok(HwaSpec {
                    name: h.name.clone(),
                    class: h.class,
                    schedule,
                    periods_per_frame: h.periods_per_frame,
                    target_fps: h.target_fps,
                    address_base,
                    region_bytes,
                    stride: h.stride.unwrap_or(self.dram.line_size),
                    max_inflight: h.max_inflight,
                })
            })
            .collect()
    }

    /// Loads or synthesizes every core's trace.
    pub fn traces(&self) -> Result<Vec<Arc<[TraceRecord]>>, ConfigError> {
        self.cores
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let t = match (&c.trace, &c.synth) {
                    (Some(path), None) => load_trace(path)?,
                    (None, Some(p)) => synthesize_trace(p, &self.dram).map_err(|e| match e {
                        ConfigError::Invalid { field, reason } => {
                            ConfigError::invalid(format!("core[{i}].synth.{field}"), reason)
                        }
                        other => other,
                    })?,
                    _ => {
                        return Err(ConfigError::invalid(
                            format!("core[{i}]"),
                            "set exactly one of `trace` or `synth`",
                        ))
                    }
                };
                let limit = self.dram.total_bytes();
                if let Some(bad) = t.iter().filter_map(|r| r.access).find(|a| a.address >= limit) {
                    return Err(ConfigError::invalid(
                        format!("core[{i}].trace"),
                        format!("address {:#x} outside the {limit:#x}-byte address space", bad.address),
                    ));
                }
                Ok(Arc::from(t))
            })
            .collect()
    }

    pub fn core_name(&self, i: usize) -> String {
        self.cores[i].name.clone().unwrap_or_else(|| format!("cpu{i}"))
    }

    /// Simulation input for the shared run.
    pub fn sim_config(&self, traces: Vec<Arc<[TraceRecord]>>) -> Result<SimConfig, ConfigError> {
        let mut sim = SimConfig::new(self.dram.clone(), self.policy.clone(), self.horizon);
        sim.cpu_traces = traces;
        sim.cpu_params = self.cpu;
        sim.hwas = self.hwa_specs()?;
        sim.seed = self.seed;
        Ok(sim)
    }
}

/// Shipped presets.
pub mod presets {
    use super::*;

    pub const CONFIG_A: &str = include_str!("../../../configs/config-a.toml");
    pub const CONFIG_B: &str = include_str!("../../../configs/config-b.toml");
    pub const DDR3_1333: &str = include_str!("../../../configs/ddr3-1333.toml");

    /// Four accelerators (two image filters, a matcher, a Hessian
    /// detector) and eight synthetic cores, scaled to a 20M-cycle run.
    pub fn config_a() -> ExperimentConfig {
        ExperimentConfig::from_toml(CONFIG_A).expect("shipped preset parses")
    }

    /// Matcher, Hessian detector and the variable-period resize/detect pair.
    pub fn config_b() -> ExperimentConfig {
        ExperimentConfig::from_toml(CONFIG_B).expect("shipped preset parses")
    }

    pub fn ddr3_1333() -> ExperimentConfig {
        ExperimentConfig::from_toml(DDR3_1333).expect("shipped preset parses")
    }

    pub fn by_name(name: &str) -> Option<ExperimentConfig> {
        match name {
            "config-a" => Some(config_a()),
            "config-b" => Some(config_b()),
            "ddr3-1333" => Some(ddr3_1333()),
            _ => None,
        }
    }
}
