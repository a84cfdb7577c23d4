//! Bundled benchmarks: assembly kernels run on the simulator and checked
//! against host-side oracles.
//!
//! Every kernel reads its arguments from `s0`..`s5`, brackets the timed
//! region with two cycle-counter host calls and leaves the difference in
//! `s11`. Throughput is `bytes_moved * freq_mhz / cycles` MB/s, where
//! `bytes_moved` counts reads plus writes for memcpy and STREAM (the STREAM
//! convention) and the input size for sort and prefix sum.

mod sweep;

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::asm::{assemble, AsmError};
use crate::config::{BenchConfig, ConfigError, SimConfig};
use crate::cpu::{ExecStats, SimError, Simulator};
use crate::image::Image;
use crate::isa::Reg;
use crate::mem::MemError;

pub use sweep::{sweep, write_csv, Axis, Grid, GridPoint};

pub const MEMCPY_SRC: &str = include_str!("../../kernels/memcpy.s");
pub const STREAM_SRC: &str = include_str!("../../kernels/stream.s");
pub const SORT_SIMD_SRC: &str = include_str!("../../kernels/sort_simd.s");
pub const SORT_SCALAR_SRC: &str = include_str!("../../kernels/sort_scalar.s");
pub const PSUM_SIMD_SRC: &str = include_str!("../../kernels/psum_simd.s");
pub const PSUM_SCALAR_SRC: &str = include_str!("../../kernels/psum_scalar.s");

/// Multiplier used by STREAM scale and triad.
pub const STREAM_SCALAR: u32 = 3;

/// Version of the CSV column layout.
pub const CSV_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchName {
    Memcpy,
    StreamCopy,
    StreamScale,
    StreamAdd,
    StreamTriad,
    SortSimd,
    SortScalar,
    PsumSimd,
    PsumScalar,
}

impl BenchName {
    pub const ALL: [BenchName; 9] = [
        BenchName::Memcpy,
        BenchName::StreamCopy,
        BenchName::StreamScale,
        BenchName::StreamAdd,
        BenchName::StreamTriad,
        BenchName::SortSimd,
        BenchName::SortScalar,
        BenchName::PsumSimd,
        BenchName::PsumScalar,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BenchName::Memcpy => "memcpy",
            BenchName::StreamCopy => "stream_copy",
            BenchName::StreamScale => "stream_scale",
            BenchName::StreamAdd => "stream_add",
            BenchName::StreamTriad => "stream_triad",
            BenchName::SortSimd => "sort_simd",
            BenchName::SortScalar => "sort_scalar",
            BenchName::PsumSimd => "psum_simd",
            BenchName::PsumScalar => "psum_scalar",
        }
    }

    pub fn source(self) -> &'static str {
        match self {
            BenchName::Memcpy => MEMCPY_SRC,
            BenchName::StreamCopy | BenchName::StreamScale | BenchName::StreamAdd | BenchName::StreamTriad => {
                STREAM_SRC
            }
            BenchName::SortSimd => SORT_SIMD_SRC,
            BenchName::SortScalar => SORT_SCALAR_SRC,
            BenchName::PsumSimd => PSUM_SIMD_SRC,
            BenchName::PsumScalar => PSUM_SCALAR_SRC,
        }
    }

    pub fn is_vector(self) -> bool {
        matches!(self, BenchName::Memcpy | BenchName::SortSimd | BenchName::PsumSimd)
    }
}

impl fmt::Display for BenchName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BenchName {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BenchName::ALL
            .into_iter()
            .find(|b| b.as_str() == s)
            .ok_or_else(|| BenchError::UnknownBench(s.to_string()))
    }
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("unknown benchmark `{0}`")]
    UnknownBench(String),
    #[error("invalid configuration: {0}")]
    Config(#[from] ConfigError),
    #[error("{bench}: {message}")]
    InvalidSize { bench: BenchName, message: String },
    #[error("kernel failed to assemble: {0}")]
    Assemble(#[from] AsmError),
    #[error("simulation failed: {0}")]
    Sim(#[from] SimError),
    #[error("host memory access failed: {0}")]
    Memory(#[from] MemError),
    #[error("output failed: {0}")]
    Io(String),
    #[error("{bench} output does not match the oracle: {message}")]
    ValidationFailed { bench: BenchName, message: String },
}

/// One benchmark run request.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchSpec {
    pub name: BenchName,
    /// Bytes of input data: copy size for memcpy, per-array size for STREAM,
    /// key/value array size for sort and prefix sum.
    pub data_bytes: u64,
    pub seed: u64,
    pub config: SimConfig,
}

impl BenchSpec {
    /// Takes size and seed from the config's `bench` section (or defaults).
    pub fn from_config(name: BenchName, config: &SimConfig) -> Self {
        let bench = config.bench.clone().unwrap_or_default();
        BenchSpec { name, data_bytes: bench.bytes, seed: bench.seed, config: config.clone() }
    }

    /// Spec named by the config's `bench.name`.
    pub fn from_config_name(config: &SimConfig) -> Result<Self, BenchError> {
        let bench: BenchConfig = config.bench.clone().unwrap_or_default();
        Ok(Self::from_config(bench.name.parse()?, config))
    }
}

/// One CSV row. Columns are fixed; see [`CSV_FORMAT_VERSION`].
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct MetricsRow {
    pub format_version: u32,
    pub bench: String,
    pub vlen_bits: u32,
    pub il1_sets: u32,
    pub dl1_sets: u32,
    pub dl1_ways: u32,
    pub llc_sets: u32,
    pub llc_ways: u32,
    pub llc_block_bits: u32,
    pub llc_subblocks: u32,
    pub bus_width_bits: u32,
    pub beats_per_cycle: u32,
    pub setup_cycles: u32,
    pub freq_mhz: f64,
    pub data_bytes: u64,
    pub seed: u64,
    /// Cycles of the timed kernel region.
    pub cycles: u64,
    pub total_cycles: u64,
    pub instructions: u64,
    pub bytes_moved: u64,
    pub mb_per_s: f64,
    pub dl1_hits: u64,
    pub dl1_misses: u64,
    pub llc_hits: u64,
    pub llc_misses: u64,
    pub burst_reads: u64,
    pub burst_writes: u64,
    pub validated: bool,
    pub error: String,
}

impl MetricsRow {
    fn for_config(bench: &str, config: &SimConfig, data_bytes: u64, seed: u64) -> Self {
        MetricsRow {
            format_version: CSV_FORMAT_VERSION,
            bench: bench.to_string(),
            vlen_bits: config.vlen_bits,
            il1_sets: config.il1.sets,
            dl1_sets: config.dl1.sets,
            dl1_ways: config.dl1.ways,
            llc_sets: config.llc.sets,
            llc_ways: config.llc.ways,
            llc_block_bits: config.llc.block_bits,
            llc_subblocks: config.cache_config().map(|c| c.llc_subblocks).unwrap_or(0),
            bus_width_bits: config.bus.width_bits,
            beats_per_cycle: config.bus.beats_per_cycle,
            setup_cycles: config.bus.setup_cycles,
            freq_mhz: config.freq_mhz,
            data_bytes,
            seed,
            ..MetricsRow::default()
        }
    }

    /// Row for a point that could not be run.
    pub fn failed(bench: &str, config: &SimConfig, data_bytes: u64, seed: u64, error: &str) -> Self {
        MetricsRow { error: error.to_string(), ..Self::for_config(bench, config, data_bytes, seed) }
    }
}

#[derive(Debug, Clone)]
pub struct BenchResult {
    pub row: MetricsRow,
    pub stats: ExecStats,
    /// Host-call output of the kernel.
    pub output: Vec<u8>,
    /// Register reads issued before their producer finished (should be 0).
    pub scoreboard_violations: u64,
}

impl BenchResult {
    pub fn ensure_validated(&self) -> Result<(), BenchError> {
        if self.row.validated {
            Ok(())
        } else {
            let bench = self.row.bench.parse()?;
            Err(BenchError::ValidationFailed { bench, message: self.row.error.clone() })
        }
    }
}

fn words_to_bytes(words: &[u32]) -> Vec<u8> {
    words.iter().flat_map(|w| w.to_le_bytes()).collect()
}

fn random_words(rng: &mut ChaCha8Rng, n: usize) -> Vec<u32> {
    (0..n).map(|_| rng.random()).collect()
}

/// First address of the first mismatch, for error messages.
fn first_mismatch(got: &[u32], want: &[u32]) -> Option<usize> {
    got.iter().zip(want).position(|(a, b)| a != b)
}

type Check = Box<dyn FnOnce(&Simulator) -> Result<(), String>>;

struct Prepared {
    sim: Simulator,
    check: Check,
    bytes_moved: u64,
}

fn size_error(bench: BenchName, message: impl Into<String>) -> BenchError {
    BenchError::InvalidSize { bench, message: message.into() }
}

/// Checks the size rules and returns the element count for word benches.
fn element_count(spec: &BenchSpec, vector_bytes: u64) -> Result<usize, BenchError> {
    let name = spec.name;
    let bytes = spec.data_bytes;
    if bytes == 0 || !bytes.is_multiple_of(4) {
        return Err(size_error(name, format!("{bytes} bytes is not a positive multiple of 4")));
    }
    if name.is_vector() && !bytes.is_multiple_of(vector_bytes) {
        return Err(size_error(name, format!("{bytes} bytes is not a multiple of the {vector_bytes}-byte vector")));
    }
    let n = bytes / 4;
    match name {
        BenchName::SortSimd | BenchName::SortScalar if !n.is_power_of_two() => {
            return Err(size_error(name, format!("{n} keys is not a power of two")));
        }
        BenchName::SortSimd if bytes < 2 * vector_bytes => {
            return Err(size_error(name, "needs at least two vectors of keys"));
        }
        _ => {}
    }
    Ok(n as usize)
}

/// Loads the kernel and its data, growing memory if the buffers need it.
fn prepare(spec: &BenchSpec) -> Result<Prepared, BenchError> {
    let mut config = spec.config.clone();
    let cache = config.cache_config()?;
    let vector_bytes = (cache.vlen_bits / 8) as u64;
    let n = element_count(spec, vector_bytes)?;
    let image: Image = assemble(spec.name.source())?;

    let align = (cache.llc_block_bits as u64 / 8).max(4096);
    let region = image.end().next_multiple_of(align).max(cache.mem_base as u64 + align);
    let stride = spec.data_bytes.next_multiple_of(align);
    let buffers = match spec.name {
        BenchName::StreamCopy | BenchName::StreamScale | BenchName::StreamAdd | BenchName::StreamTriad => 3,
        _ => 2,
    };
    let needed = region + buffers * stride - cache.mem_base as u64;
    if needed > cache.mem_size_bytes as u64 {
        let size = needed.next_multiple_of(1 << 20);
        if cache.mem_base as u64 + size >= 1 << 32 {
            return Err(size_error(spec.name, "buffers do not fit in the 32-bit address space"));
        }
        config.memory.size_bytes = size as u32;
    }
    let addr = |i: u64| (region + i * stride) as u32;

    let mut sim = Simulator::new(&config)?;
    sim.load_image(&image)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let set = |sim: &mut Simulator, regs: &[(u32, u32)]| {
        for &(r, v) in regs {
            sim.set_reg(Reg::new(r).expect("register index"), v);
        }
    };
    const S0: u32 = 8;
    const S1: u32 = 9;
    const S2: u32 = 18;
    const S3: u32 = 19;
    const S4: u32 = 20;
    const S5: u32 = 21;
    let vb = vector_bytes as u32;

    let prepared = match spec.name {
        BenchName::Memcpy => {
            let data: Vec<u8> = (0..spec.data_bytes).map(|_| rng.random()).collect();
            sim.write_memory(addr(0), &data)?;
            set(&mut sim, &[(S0, addr(0)), (S1, addr(1)), (S2, spec.data_bytes as u32), (S3, vb)]);
            let dst = addr(1);
            let check = move |sim: &Simulator| {
                let got = sim.read_memory(dst, data.len()).map_err(|e| e.to_string())?;
                match got.iter().zip(&data).position(|(a, b)| a != b) {
                    None => Ok(()),
                    Some(i) => Err(format!("destination byte {i} differs")),
                }
            };
            Prepared { sim, check: Box::new(check), bytes_moved: 2 * spec.data_bytes }
        }
        BenchName::StreamCopy | BenchName::StreamScale | BenchName::StreamAdd | BenchName::StreamTriad => {
            let kernel = match spec.name {
                BenchName::StreamCopy => 0,
                BenchName::StreamScale => 1,
                BenchName::StreamAdd => 2,
                _ => 3,
            };
            set(
                &mut sim,
                &[(S0, addr(0)), (S1, addr(1)), (S2, addr(2)), (S3, n as u32), (S4, STREAM_SCALAR), (S5, kernel)],
            );
            let s = STREAM_SCALAR;
            let mut a: Vec<u32> = (0..n as u32).map(|i| i + 1).collect();
            let mut b: Vec<u32> = (0..n as u32).map(|i| 2 * i + 3).collect();
            let mut c: Vec<u32> = (0..n as u32).map(|i| 5 * i + 7).collect();
            let arrays = 2 + (kernel >= 2) as u64;
            for i in 0..n {
                match kernel {
                    0 => c[i] = a[i],
                    1 => b[i] = s.wrapping_mul(c[i]),
                    2 => c[i] = a[i].wrapping_add(b[i]),
                    _ => a[i] = b[i].wrapping_add(s.wrapping_mul(c[i])),
                }
            }
            let (a0, a1, a2) = (addr(0), addr(1), addr(2));
            let check = move |sim: &Simulator| {
                for (name, base, want) in [("a", a0, &a), ("b", a1, &b), ("c", a2, &c)] {
                    let got = sim.read_words(base, n).map_err(|e| e.to_string())?;
                    if let Some(i) = first_mismatch(&got, want) {
                        return Err(format!("{name}[{i}] = {} but expected {}", got[i], want[i]));
                    }
                }
                Ok(())
            };
            Prepared { sim, check: Box::new(check), bytes_moved: arrays * spec.data_bytes }
        }
        BenchName::SortSimd | BenchName::SortScalar => {
            let keys = random_words(&mut rng, n);
            sim.write_memory(addr(0), &words_to_bytes(&keys))?;
            set(&mut sim, &[(S0, addr(0)), (S1, addr(1)), (S2, n as u32), (S3, vb)]);
            let mut want = keys;
            want.sort_unstable();
            let bufs = [addr(0), addr(1)];
            let check = move |sim: &Simulator| {
                let out = sim.state().reg(Reg::new(S4).unwrap());
                if !bufs.contains(&out) {
                    return Err(format!("result pointer {out:#x} is neither buffer"));
                }
                let got = sim.read_words(out, n).map_err(|e| e.to_string())?;
                match first_mismatch(&got, &want) {
                    None => Ok(()),
                    Some(i) => Err(format!("key {i} = {} but expected {}", got[i], want[i])),
                }
            };
            Prepared { sim, check: Box::new(check), bytes_moved: spec.data_bytes }
        }
        BenchName::PsumSimd | BenchName::PsumScalar => {
            let values = random_words(&mut rng, n);
            sim.write_memory(addr(0), &words_to_bytes(&values))?;
            set(&mut sim, &[(S0, addr(0)), (S1, addr(1)), (S2, n as u32), (S3, vb)]);
            let want: Vec<u32> = values
                .iter()
                .scan(0u32, |acc, &v| {
                    *acc = acc.wrapping_add(v);
                    Some(*acc)
                })
                .collect();
            let dst = addr(1);
            let check = move |sim: &Simulator| {
                let got = sim.read_words(dst, n).map_err(|e| e.to_string())?;
                match first_mismatch(&got, &want) {
                    None => Ok(()),
                    Some(i) => Err(format!("sum {i} = {} but expected {}", got[i], want[i])),
                }
            };
            Prepared { sim, check: Box::new(check), bytes_moved: spec.data_bytes }
        }
    };
    Ok(prepared)
}

/// Generous cycle budget so a broken kernel cannot spin forever.
fn cycle_budget(data_bytes: u64) -> u64 {
    100_000_000 + data_bytes.saturating_mul(2_000)
}

/// Runs one benchmark. Simulation and setup problems are errors; a wrong
/// result is reported through `row.validated` / `row.error`.
pub fn run_bench(spec: &BenchSpec) -> Result<BenchResult, BenchError> {
    let Prepared { mut sim, check, bytes_moved } = prepare(spec)?;
    sim.set_audit(true);
    let stats = sim.run(Some(cycle_budget(spec.data_bytes)))?;
    let cycles = sim.state().reg(Reg::new(27).unwrap()) as u64;
    let validation = check(&sim);

    let mut row = MetricsRow::for_config(spec.name.as_str(), &spec.config, spec.data_bytes, spec.seed);
    row.cycles = cycles;
    row.total_cycles = stats.cycles;
    row.instructions = stats.instructions;
    row.bytes_moved = bytes_moved;
    row.mb_per_s = if cycles == 0 { 0.0 } else { bytes_moved as f64 * spec.config.freq_mhz / cycles as f64 };
    row.dl1_hits = stats.mem.dl1.hits;
    row.dl1_misses = stats.mem.dl1.misses;
    row.llc_hits = stats.mem.llc.hits;
    row.llc_misses = stats.mem.llc.misses;
    row.burst_reads = stats.mem.burst_reads;
    row.burst_writes = stats.mem.burst_writes;
    match validation {
        Ok(()) => row.validated = true,
        Err(message) => row.error = message,
    }
    Ok(BenchResult { row, stats, output: sim.output().to_vec(), scoreboard_violations: sim.scoreboard_violations() })
}

/// Runs a benchmark and turns every failure into a flagged row.
pub fn run_bench_row(spec: &BenchSpec) -> MetricsRow {
    match run_bench(spec) {
        Ok(result) => result.row,
        Err(e) => MetricsRow::failed(spec.name.as_str(), &spec.config, spec.data_bytes, spec.seed, &e.to_string()),
    }
}

/// Seed from the `VEXSIM_SEED` environment variable, if set and numeric.
pub fn seed_override() -> Option<u64> {
    std::env::var("VEXSIM_SEED").ok().and_then(|s| s.trim().parse().ok())
}

#[cfg(test)]
mod tests;
