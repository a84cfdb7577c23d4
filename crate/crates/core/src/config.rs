//! JSON-facing simulator configuration.
//!
//! Every field has a default; the defaults describe the baseline design
//! (VLEN 256, 2 KiB IL1, 4 KiB DL1, 256 KiB LLC with 16384-bit blocks,
//! 32 sub-blocks, 150 MHz). L1 block sizes may be omitted, in which case they
//! follow VLEN; an omitted LLC sub-block count defaults to
//! [`DEFAULT_LLC_SUBBLOCKS`], capped at one sub-block per L1 block.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid configuration: {0}")]
pub struct ConfigError(pub String);

fn invalid<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Il1Config {
    pub sets: u32,
    pub block_bits: Option<u32>,
}

impl Default for Il1Config {
    fn default() -> Self {
        Il1Config { sets: 64, block_bits: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Dl1Config {
    pub sets: u32,
    pub ways: u32,
    pub block_bits: Option<u32>,
}

impl Default for Dl1Config {
    fn default() -> Self {
        Dl1Config { sets: 32, ways: 4, block_bits: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LlcConfig {
    pub sets: u32,
    pub ways: u32,
    pub block_bits: u32,
    pub subblocks: Option<u32>,
}

impl Default for LlcConfig {
    fn default() -> Self {
        LlcConfig { sets: 32, ways: 4, block_bits: 16384, subblocks: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BusConfig {
    pub width_bits: u32,
    pub beats_per_cycle: u32,
    pub setup_cycles: u32,
}

impl Default for BusConfig {
    fn default() -> Self {
        BusConfig { width_bits: 128, beats_per_cycle: 1, setup_cycles: 30 }
    }
}

/// Core and cache timing knobs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimingConfig {
    /// Cycles from a DL1 hit to the first cycle a dependent instruction may execute.
    pub dl1_hit_cycles: u32,
    /// LLC BRAM access plus its output register, for one L1-sized block.
    pub llc_hit_cycles: u32,
    pub mul_cycles: u32,
    pub div_cycles: u32,
}

impl Default for TimingConfig {
    fn default() -> Self {
        TimingConfig { dl1_hit_cycles: 3, llc_hit_cycles: 2, mul_cycles: 1, div_cycles: 32 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MemoryConfig {
    pub base: u32,
    pub size_bytes: u32,
}

impl Default for MemoryConfig {
    fn default() -> Self {
        MemoryConfig { base: 0, size_bytes: 16 << 20 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ReplacementPolicy {
    #[default]
    Nru,
    /// Uniformly random victim, seeded for reproducibility.
    Random { seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub name: String,
    pub bytes: u64,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig { name: "memcpy".into(), bytes: 256 << 10, seed: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub vlen_bits: u32,
    pub il1: Il1Config,
    pub dl1: Dl1Config,
    pub llc: LlcConfig,
    pub bus: BusConfig,
    pub freq_mhz: f64,
    pub timing: TimingConfig,
    pub memory: MemoryConfig,
    pub replacement: ReplacementPolicy,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bench: Option<BenchConfig>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            vlen_bits: 256,
            il1: Il1Config::default(),
            dl1: Dl1Config::default(),
            llc: LlcConfig::default(),
            bus: BusConfig::default(),
            freq_mhz: 150.0,
            timing: TimingConfig::default(),
            memory: MemoryConfig::default(),
            replacement: ReplacementPolicy::Nru,
            bench: None,
        }
    }
}

/// Fully resolved, validated cache and memory parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct CacheConfig {
    pub vlen_bits: u32,
    pub il1_sets: u32,
    pub il1_block_bits: u32,
    pub dl1_sets: u32,
    pub dl1_ways: u32,
    pub dl1_block_bits: u32,
    pub llc_sets: u32,
    pub llc_ways: u32,
    pub llc_block_bits: u32,
    pub llc_subblocks: u32,
    pub bus_width_bits: u32,
    pub beats_per_cycle: u32,
    pub mem_setup_latency_cycles: u32,
    pub modeled_frequency_mhz: f64,
    pub dl1_hit_cycles: u32,
    /// LLC BRAM access plus its output register, for one L1-sized block.
    pub llc_hit_cycles: u32,
    pub mem_base: u32,
    pub mem_size_bytes: u32,
    pub replacement: ReplacementPolicy,
}

impl CacheConfig {
    pub fn il1_bytes(&self) -> u64 {
        self.il1_sets as u64 * self.il1_block_bits as u64 / 8
    }

    pub fn dl1_bytes(&self) -> u64 {
        self.dl1_sets as u64 * self.dl1_ways as u64 * self.dl1_block_bits as u64 / 8
    }

    pub fn llc_bytes(&self) -> u64 {
        self.llc_sets as u64 * self.llc_ways as u64 * self.llc_block_bits as u64 / 8
    }
}

impl Default for CacheConfig {
    fn default() -> Self {
        SimConfig::default().cache_config().expect("default configuration is valid")
    }
}

/// Sub-block count used when the configuration leaves it out, capped so a
/// sub-block is never narrower than an L1 block.
pub const DEFAULT_LLC_SUBBLOCKS: u32 = 32;

fn pow2(name: &str, value: u32) -> Result<(), ConfigError> {
    if value == 0 || !value.is_power_of_two() {
        return invalid(format!("{name} = {value} must be a power of two"));
    }
    Ok(())
}

impl SimConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Resolves derived fields and checks every structural invariant.
    pub fn cache_config(&self) -> Result<CacheConfig, ConfigError> {
        let vlen = self.vlen_bits;
        if vlen < 64 || !vlen.is_power_of_two() {
            return invalid(format!("vlen_bits = {vlen} must be a power of two >= 64"));
        }
        let dl1_block = self.dl1.block_bits.unwrap_or(vlen);
        if dl1_block != vlen {
            return invalid(format!("dl1.block_bits = {dl1_block} must equal vlen_bits = {vlen}"));
        }
        let il1_block = self.il1.block_bits.unwrap_or(dl1_block);
        if il1_block != dl1_block {
            return invalid(format!("il1.block_bits = {il1_block} must equal dl1.block_bits = {dl1_block}"));
        }
        let llc_block = self.llc.block_bits;
        if llc_block < dl1_block {
            return invalid(format!("llc.block_bits = {llc_block} is narrower than the L1 block"));
        }
        let max_subblocks = llc_block / dl1_block;
        let subblocks = self.llc.subblocks.unwrap_or(DEFAULT_LLC_SUBBLOCKS.min(max_subblocks));
        if subblocks == 0 || !subblocks.is_power_of_two() || subblocks > max_subblocks {
            return invalid(format!(
                "llc.subblocks = {subblocks} must split llc.block_bits = {llc_block} into power-of-two \
                 sub-blocks no narrower than the {dl1_block}-bit L1 block"
            ));
        }
        for (name, value) in [
            ("il1.sets", self.il1.sets),
            ("dl1.sets", self.dl1.sets),
            ("dl1.ways", self.dl1.ways),
            ("llc.sets", self.llc.sets),
            ("llc.ways", self.llc.ways),
            ("llc.block_bits", llc_block),
            ("llc.subblocks", subblocks),
            ("bus.width_bits", self.bus.width_bits),
        ] {
            pow2(name, value)?;
        }
        if self.bus.width_bits < 8 {
            return invalid("bus.width_bits must be at least 8");
        }
        if !matches!(self.bus.beats_per_cycle, 1 | 2) {
            return invalid(format!("bus.beats_per_cycle = {} must be 1 or 2", self.bus.beats_per_cycle));
        }
        if !(self.freq_mhz.is_finite() && self.freq_mhz > 0.0) {
            return invalid("freq_mhz must be positive");
        }
        if self.timing.dl1_hit_cycles == 0 || self.timing.llc_hit_cycles == 0 {
            return invalid("cache hit latencies must be at least one cycle");
        }
        if self.timing.mul_cycles == 0 || self.timing.div_cycles == 0 {
            return invalid("mul/div latencies must be at least one cycle");
        }
        let llc_bytes = llc_block / 8;
        if !self.memory.base.is_multiple_of(llc_bytes) || !self.memory.size_bytes.is_multiple_of(llc_bytes) || self.memory.size_bytes == 0 {
            return invalid("memory base and size must be non-zero multiples of the LLC block size");
        }
        if self.memory.base as u64 + self.memory.size_bytes as u64 > 1u64 << 32 {
            return invalid("memory image exceeds the 32-bit address space");
        }
        Ok(CacheConfig {
            vlen_bits: vlen,
            il1_sets: self.il1.sets,
            il1_block_bits: il1_block,
            dl1_sets: self.dl1.sets,
            dl1_ways: self.dl1.ways,
            dl1_block_bits: dl1_block,
            llc_sets: self.llc.sets,
            llc_ways: self.llc.ways,
            llc_block_bits: llc_block,
            llc_subblocks: subblocks,
            bus_width_bits: self.bus.width_bits,
            beats_per_cycle: self.bus.beats_per_cycle,
            mem_setup_latency_cycles: self.bus.setup_cycles,
            modeled_frequency_mhz: self.freq_mhz,
            dl1_hit_cycles: self.timing.dl1_hit_cycles,
            llc_hit_cycles: self.timing.llc_hit_cycles,
            mem_base: self.memory.base,
            mem_size_bytes: self.memory.size_bytes,
            replacement: self.replacement,
        })
    }

    /// Sets a parameter by dotted path, e.g. `llc.block_bits`. Used by sweeps.
    pub fn set_param(&mut self, path: &str, value: &serde_json::Value) -> Result<(), ConfigError> {
        let mut tree = serde_json::to_value(&*self).map_err(|e| ConfigError(e.to_string()))?;
        let mut node = &mut tree;
        let parts: Vec<&str> = path.split('.').collect();
        for (i, part) in parts.iter().enumerate() {
            let obj = node
                .as_object_mut()
                .ok_or_else(|| ConfigError(format!("{path}: {part} is not inside an object")))?;
            if i + 1 == parts.len() {
                obj.insert(part.to_string(), value.clone());
                break;
            }
            node = obj.entry(part.to_string()).or_insert_with(|| serde_json::json!({}));
        }
        *self = serde_json::from_value(tree).map_err(|e| ConfigError(format!("{path}: {e}")))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_baseline_configuration() {
        let c = CacheConfig::default();
        assert_eq!((c.il1_sets, c.il1_block_bits), (64, 256));
        assert_eq!((c.dl1_sets, c.dl1_ways, c.dl1_block_bits), (32, 4, 256));
        assert_eq!((c.llc_sets, c.llc_ways, c.llc_block_bits, c.llc_subblocks), (32, 4, 16384, 32));
        assert_eq!(c.vlen_bits, 256);
        assert_eq!(c.modeled_frequency_mhz, 150.0);
        assert_eq!(c.il1_bytes(), 2 << 10);
        assert_eq!(c.dl1_bytes(), 4 << 10);
        assert_eq!(c.llc_bytes(), 256 << 10);
    }

    #[test]
    fn rejects_dl1_block_different_from_vlen() {
        let mut cfg = SimConfig::default();
        cfg.dl1.block_bits = Some(512);
        assert!(cfg.cache_config().is_err());
    }

    #[test]
    fn rejects_mismatched_subblocks() {
        let mut cfg = SimConfig::default();
        cfg.llc.subblocks = Some(128);
        assert!(cfg.cache_config().is_err());
        cfg.llc.subblocks = Some(24);
        assert!(cfg.cache_config().is_err());
        cfg.llc.subblocks = Some(64);
        assert!(cfg.cache_config().is_ok());
    }

    #[test]
    fn parses_nested_json_with_partial_fields() {
        let cfg = SimConfig::from_json(
            r#"{"vlen_bits": 512, "llc": {"block_bits": 8192}, "bus": {"beats_per_cycle": 2},
                "bench": {"name": "sort_simd", "bytes": 65536, "seed": 7}}"#,
        )
        .unwrap();
        let c = cfg.cache_config().unwrap();
        assert_eq!((c.vlen_bits, c.dl1_block_bits, c.llc_subblocks), (512, 512, 16));
        assert_eq!(c.beats_per_cycle, 2);
        assert_eq!(cfg.bench.unwrap().seed, 7);
        assert!(SimConfig::from_json(r#"{"vlen": 256}"#).is_err());
    }

    #[test]
    fn set_param_by_path() {
        let mut cfg = SimConfig::default();
        cfg.set_param("llc.block_bits", &serde_json::json!(4096)).unwrap();
        cfg.set_param("vlen_bits", &serde_json::json!(128)).unwrap();
        assert_eq!(cfg.llc.block_bits, 4096);
        assert_eq!(cfg.cache_config().unwrap().llc_subblocks, 32);
        assert!(cfg.set_param("llc.nonsense", &serde_json::json!(1)).is_err());
    }

    #[test]
    fn json_roundtrip() {
        let cfg = SimConfig { replacement: ReplacementPolicy::Random { seed: 9 }, ..SimConfig::default() };
        assert_eq!(SimConfig::from_json(&cfg.to_json()).unwrap(), cfg);
    }
}
