//! Three-level cache hierarchy in front of a flat, burst-accessed main memory.
//!
//! * IL1: direct-mapped, read-only, adds no latency on a hit.
//! * DL1: set-associative writeback cache with NRU replacement whose block
//!   equals VLEN. A full-block aligned write miss allocates without fetching.
//! * LLC: unified set-associative writeback cache with very wide blocks stored
//!   as narrower sub-blocks. Each LLC block moves to and from memory as a
//!   single burst, and sub-blocks are forwarded to L1 as soon as their beats
//!   have arrived.
//!
//! Caches hold real data, so the byte image is only guaranteed to match main
//! memory after [`MemoryHierarchy::flush_all`].

mod cache;

use serde::Serialize;
use thiserror::Error;

use crate::config::CacheConfig;
use crate::vector::VectorMemory;

use cache::{Cache, Line};
pub use cache::{nru_touch, nru_victim};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum MemError {
    #[error("misaligned {width}-byte access at {addr:#010x}")]
    Misaligned { addr: u32, width: usize },
    #[error("access of {len} bytes at {addr:#010x} is outside memory")]
    OutOfRange { addr: u32, len: usize },
}

/// Flat little-endian byte image starting at `base`.
#[derive(Debug, Clone)]
pub struct MainMemory {
    base: u32,
    bytes: Vec<u8>,
}

impl MainMemory {
    pub fn new(base: u32, size: u32) -> Self {
        MainMemory { base, bytes: vec![0; size as usize] }
    }

    pub fn base(&self) -> u32 {
        self.base
    }

    pub fn size(&self) -> usize {
        self.bytes.len()
    }

    pub fn contains(&self, addr: u32, len: usize) -> bool {
        addr >= self.base && (addr - self.base) as u64 + len as u64 <= self.bytes.len() as u64
    }

    fn offset(&self, addr: u32, len: usize) -> Result<usize, MemError> {
        if self.contains(addr, len) {
            Ok((addr - self.base) as usize)
        } else {
            Err(MemError::OutOfRange { addr, len })
        }
    }

    pub fn slice(&self, addr: u32, len: usize) -> Result<&[u8], MemError> {
        let off = self.offset(addr, len)?;
        Ok(&self.bytes[off..off + len])
    }

    pub fn slice_mut(&mut self, addr: u32, len: usize) -> Result<&mut [u8], MemError> {
        let off = self.offset(addr, len)?;
        Ok(&mut self.bytes[off..off + len])
    }

    pub fn bytes(&self) -> &[u8] {
        &self.bytes
    }
}

/// Counters for one cache level.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct LevelStats {
    pub accesses: u64,
    pub hits: u64,
    pub misses: u64,
    pub writebacks: u64,
}

impl LevelStats {
    pub fn hit_rate(&self) -> f64 {
        if self.accesses == 0 {
            0.0
        } else {
            self.hits as f64 / self.accesses as f64
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct MemStats {
    pub il1: LevelStats,
    pub dl1: LevelStats,
    pub llc: LevelStats,
    /// Block reads requested from the LLC by either L1.
    pub llc_read_requests: u64,
    /// Block writebacks from DL1 into the LLC.
    pub llc_write_requests: u64,
    pub burst_reads: u64,
    pub burst_writes: u64,
    pub total_beats: u64,
    /// Cycles DL1 requests spent waiting for the previous access to finish.
    pub dl1_wait_cycles: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AccessResult {
    /// Read data; empty for writes.
    pub data: Vec<u8>,
    /// Cycles from the request until a dependent instruction may use the result.
    pub latency_cycles: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Access<'a> {
    Read { bytes: usize },
    Write(&'a [u8]),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LlcRequest<'a> {
    Read,
    Write(&'a [u8]),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BurstKind {
    Fill,
    Writeback,
}

/// Cycles for one burst moving a `block_bits` block over a `bus_bits` bus.
pub fn burst_latency(block_bits: u32, bus_bits: u32, beats_per_cycle: u32, setup_cycles: u32) -> u64 {
    let beats = (block_bits as u64).div_ceil(bus_bits as u64);
    setup_cycles as u64 + beats.div_ceil(beats_per_cycle as u64)
}

/// LLC plus main memory and the shared memory bus.
#[derive(Debug, Clone)]
struct Backside {
    llc: Cache,
    mem: MainMemory,
    bus_free_at: u64,
    llc_hit_cycles: u64,
    setup_cycles: u64,
    bus_bits: u64,
    beats_per_cycle: u64,
    llc_block_bits: u64,
    subblock_bits: u64,
    stats: MemStats,
}

impl Backside {
    fn beats(&self, bits: u64) -> u64 {
        bits.div_ceil(self.bus_bits)
    }

    fn burst_cycles(&self) -> u64 {
        self.setup_cycles + self.beats(self.llc_block_bits).div_ceil(self.beats_per_cycle)
    }

    /// Cycles after a fill starts until sub-block `sub` has fully arrived.
    fn arrival_offset(&self, sub: u64) -> u64 {
        self.setup_cycles + self.beats((sub + 1) * self.subblock_bits).div_ceil(self.beats_per_cycle)
    }

    /// Makes the block holding `addr` resident, bursting it in on a miss.
    fn ensure(&mut self, addr: u32, t: u64) -> Result<(usize, usize), MemError> {
        let (set, tag) = self.llc.locate(addr);
        self.stats.llc.accesses += 1;
        if let Some(way) = self.llc.find(set, tag) {
            self.stats.llc.hits += 1;
            self.llc.touch(set, way);
            return Ok((set, way));
        }
        self.stats.llc.misses += 1;
        let block_bytes = self.llc.block_bytes() as usize;
        let block_addr = self.llc.block_addr(addr);
        // Validate before disturbing the victim.
        self.mem.slice(block_addr, block_bytes)?;

        let way = self.llc.victim(set);
        let victim = *self.llc.line(set, way);
        let burst = self.burst_cycles();
        if victim.valid && victim.dirty {
            let victim_addr = self.llc.addr_of(set, way);
            self.mem
                .slice_mut(victim_addr, block_bytes)?
                .copy_from_slice(self.llc.block(set, way));
            self.stats.llc.writebacks += 1;
            self.stats.burst_writes += 1;
            self.stats.total_beats += self.beats(self.llc_block_bits);
        }
        self.llc
            .block_mut(set, way)
            .copy_from_slice(self.mem.slice(block_addr, block_bytes)?);
        // The victim's way is the fill target, so a dirty victim is written
        // out before the read burst starts.
        let mut start = t.max(self.bus_free_at);
        if victim.valid && victim.dirty {
            start += burst;
        }
        *self.llc.line_mut(set, way) = Line { tag, valid: true, dirty: false, fill_start: start };
        self.bus_free_at = start + burst;
        self.stats.burst_reads += 1;
        self.stats.total_beats += self.beats(self.llc_block_bits);
        self.llc.touch(set, way);
        Ok((set, way))
    }

    /// Cycle at which the L1-sized piece at `addr` of a resident block is available.
    fn ready(&self, set: usize, way: usize, addr: u32, t: u64) -> u64 {
        let offset = (addr - self.llc.addr_of(set, way)) as u64;
        let sub = offset * 8 / self.subblock_bits;
        let arrival = self.llc.line(set, way).fill_start + self.arrival_offset(sub);
        (t + self.llc_hit_cycles).max(arrival)
    }

    fn read_block(&mut self, addr: u32, out: &mut [u8], t: u64) -> Result<u64, MemError> {
        self.stats.llc_read_requests += 1;
        let (set, way) = self.ensure(addr, t)?;
        let off = (addr - self.llc.addr_of(set, way)) as usize;
        out.copy_from_slice(&self.llc.block(set, way)[off..off + out.len()]);
        Ok(self.ready(set, way, addr, t))
    }

    fn write_block(&mut self, addr: u32, data: &[u8], t: u64) -> Result<u64, MemError> {
        self.stats.llc_write_requests += 1;
        let (set, way) = self.ensure(addr, t)?;
        let off = (addr - self.llc.addr_of(set, way)) as usize;
        self.llc.block_mut(set, way)[off..off + data.len()].copy_from_slice(data);
        self.llc.line_mut(set, way).dirty = true;
        Ok(self.ready(set, way, addr, t))
    }
}

enum L1Op<'a> {
    Read(&'a mut [u8]),
    Write(&'a [u8]),
}

/// IL1 + DL1 + LLC + main memory, with cycle accounting.
#[derive(Debug, Clone)]
pub struct MemoryHierarchy {
    cfg: CacheConfig,
    il1: Cache,
    dl1: Cache,
    back: Backside,
    dl1_free_at: u64,
    l1_block_bytes: u32,
    dl1_hit_cycles: u64,
}

impl MemoryHierarchy {
    /// Builds a cold hierarchy over a zeroed memory image. `cfg` is assumed
    /// validated (see [`crate::config::SimConfig::cache_config`]).
    pub fn new(cfg: &CacheConfig) -> Self {
        let l1_block_bytes = cfg.dl1_block_bits / 8;
        let llc = Cache::new(cfg.llc_sets, cfg.llc_ways, cfg.llc_block_bits / 8, cfg.replacement);
        MemoryHierarchy {
            cfg: cfg.clone(),
            il1: Cache::new(cfg.il1_sets, 1, cfg.il1_block_bits / 8, cfg.replacement),
            dl1: Cache::new(cfg.dl1_sets, cfg.dl1_ways, l1_block_bytes, cfg.replacement),
            back: Backside {
                llc,
                mem: MainMemory::new(cfg.mem_base, cfg.mem_size_bytes),
                bus_free_at: 0,
                llc_hit_cycles: cfg.llc_hit_cycles as u64,
                setup_cycles: cfg.mem_setup_latency_cycles as u64,
                bus_bits: cfg.bus_width_bits as u64,
                beats_per_cycle: cfg.beats_per_cycle as u64,
                llc_block_bits: cfg.llc_block_bits as u64,
                subblock_bits: (cfg.llc_block_bits / cfg.llc_subblocks) as u64,
                stats: MemStats::default(),
            },
            dl1_free_at: 0,
            l1_block_bytes,
            dl1_hit_cycles: cfg.dl1_hit_cycles as u64,
        }
    }

    pub fn config(&self) -> &CacheConfig {
        &self.cfg
    }

    pub fn memory(&self) -> &MainMemory {
        &self.back.mem
    }

    pub fn vector_bytes(&self) -> usize {
        self.l1_block_bytes as usize
    }

    /// First cycle at which DL1 accepts a new request.
    pub fn dl1_ready_at(&self) -> u64 {
        self.dl1_free_at
    }

    pub fn stats_snapshot(&self) -> MemStats {
        self.back.stats
    }

    pub fn reset_stats(&mut self) {
        self.back.stats = MemStats::default();
    }

    /// NRU bits of one DL1 set, lowest way first.
    pub fn dl1_nru_bits(&self, set: usize) -> &[bool] {
        self.dl1.nru_bits(set)
    }

    /// Which DL1 way holds `addr`, if any.
    pub fn dl1_lookup(&self, addr: u32) -> Option<(usize, usize)> {
        let (set, tag) = self.dl1.locate(addr);
        self.dl1.find(set, tag).map(|way| (set, way))
    }

    fn check(&self, addr: u32, width: usize) -> Result<(), MemError> {
        let ok_width = matches!(width, 1 | 2 | 4) || width == self.l1_block_bytes as usize;
        if !ok_width || !(addr as usize).is_multiple_of(width) {
            return Err(MemError::Misaligned { addr, width });
        }
        if !self.back.mem.contains(addr, width) {
            return Err(MemError::OutOfRange { addr, len: width });
        }
        Ok(())
    }

    /// Cycles for one burst of an LLC block; `block_addr` must be block aligned.
    pub fn burst_transfer(&self, block_addr: u32, _kind: BurstKind) -> Result<u64, MemError> {
        let block_bytes = self.back.llc.block_bytes();
        if !block_addr.is_multiple_of(block_bytes) {
            return Err(MemError::Misaligned { addr: block_addr, width: block_bytes as usize });
        }
        Ok(self.back.burst_cycles())
    }

    fn dl1_access(&mut self, addr: u32, op: L1Op<'_>, now: u64) -> Result<u64, MemError> {
        let t0 = now.max(self.dl1_free_at);
        let stats = &mut self.back.stats;
        stats.dl1_wait_cycles += t0 - now;
        stats.dl1.accesses += 1;
        let (set, tag) = self.dl1.locate(addr);
        let offset = (addr & (self.l1_block_bytes - 1)) as usize;
        let (way, t) = match self.dl1.find(set, tag) {
            Some(way) => {
                stats.dl1.hits += 1;
                self.dl1_free_at = t0 + 1;
                (way, t0)
            }
            None => {
                stats.dl1.misses += 1;
                let way = self.dl1.victim(set);
                let victim = *self.dl1.line(set, way);
                let mut t = t0 + 1;
                if victim.valid && victim.dirty {
                    let victim_addr = self.dl1.addr_of(set, way);
                    self.back.stats.dl1.writebacks += 1;
                    t = self.back.write_block(victim_addr, self.dl1.block(set, way), t)?;
                }
                let full_block = matches!(&op, L1Op::Write(d) if d.len() == self.l1_block_bytes as usize);
                if !full_block {
                    let block_addr = self.dl1.block_addr(addr);
                    t = self.back.read_block(block_addr, self.dl1.block_mut(set, way), t)?;
                }
                *self.dl1.line_mut(set, way) = Line { tag, valid: true, dirty: false, fill_start: 0 };
                self.dl1_free_at = t + 1;
                (way, t)
            }
        };
        self.dl1.touch(set, way);
        match op {
            L1Op::Read(out) => {
                let len = out.len();
                out.copy_from_slice(&self.dl1.block(set, way)[offset..offset + len]);
            }
            L1Op::Write(data) => {
                self.dl1.block_mut(set, way)[offset..offset + data.len()].copy_from_slice(data);
                self.dl1.line_mut(set, way).dirty = true;
            }
        }
        Ok(t - now + self.dl1_hit_cycles)
    }

    /// Reads `out.len()` bytes (1, 2, 4 or VLEN/8, naturally aligned) through
    /// DL1 and returns the load-to-use latency.
    pub fn read(&mut self, addr: u32, out: &mut [u8], now: u64) -> Result<u64, MemError> {
        self.check(addr, out.len())?;
        self.dl1_access(addr, L1Op::Read(out), now)
    }

    /// Writes `data` (1, 2, 4 or VLEN/8 bytes, naturally aligned) through DL1.
    pub fn write(&mut self, addr: u32, data: &[u8], now: u64) -> Result<u64, MemError> {
        self.check(addr, data.len())?;
        self.dl1_access(addr, L1Op::Write(data), now)
    }

    pub fn data_access(&mut self, addr: u32, access: Access<'_>, now: u64) -> Result<AccessResult, MemError> {
        match access {
            Access::Read { bytes } => {
                let mut data = vec![0; bytes];
                let latency_cycles = self.read(addr, &mut data, now)?;
                Ok(AccessResult { data, latency_cycles })
            }
            Access::Write(data) => {
                let latency_cycles = self.write(addr, data, now)?;
                Ok(AccessResult { data: Vec::new(), latency_cycles })
            }
        }
    }

    /// Fetches the instruction word at `pc`. The returned latency is the
    /// number of stall cycles added: zero on an IL1 hit.
    pub fn fetch_instr(&mut self, pc: u32, now: u64) -> Result<(u32, u64), MemError> {
        if !pc.is_multiple_of(4) {
            return Err(MemError::Misaligned { addr: pc, width: 4 });
        }
        if !self.back.mem.contains(pc, 4) {
            return Err(MemError::OutOfRange { addr: pc, len: 4 });
        }
        let (set, tag) = self.il1.locate(pc);
        let offset = (pc & (self.il1.block_bytes() - 1)) as usize;
        self.back.stats.il1.accesses += 1;
        let stall = if self.il1.find(set, tag).is_some() {
            self.back.stats.il1.hits += 1;
            0
        } else {
            self.back.stats.il1.misses += 1;
            let block_addr = self.il1.block_addr(pc);
            let ready = self.back.read_block(block_addr, self.il1.block_mut(set, 0), now)?;
            *self.il1.line_mut(set, 0) = Line { tag, valid: true, dirty: false, fill_start: 0 };
            ready - now
        };
        let b = &self.il1.block(set, 0)[offset..offset + 4];
        Ok((u32::from_le_bytes([b[0], b[1], b[2], b[3]]), stall))
    }

    /// Direct LLC request for one L1-sized block; returns the data (for reads)
    /// and the cycles until it is available.
    pub fn llc_access(&mut self, block_addr: u32, request: LlcRequest<'_>, now: u64) -> Result<AccessResult, MemError> {
        let bytes = self.l1_block_bytes as usize;
        if !(block_addr as usize).is_multiple_of(bytes) {
            return Err(MemError::Misaligned { addr: block_addr, width: bytes });
        }
        match request {
            LlcRequest::Read => {
                let mut data = vec![0; bytes];
                let ready = self.back.read_block(block_addr, &mut data, now)?;
                Ok(AccessResult { data, latency_cycles: ready - now })
            }
            LlcRequest::Write(data) => {
                if data.len() != bytes {
                    return Err(MemError::Misaligned { addr: block_addr, width: data.len() });
                }
                let ready = self.back.write_block(block_addr, data, now)?;
                Ok(AccessResult { data: Vec::new(), latency_cycles: ready - now })
            }
        }
    }

    /// Writes every dirty block down to main memory without charging cycles
    /// or touching the counters.
    pub fn flush_all(&mut self) {
        let block = self.l1_block_bytes as usize;
        for (set, way) in self.dl1.dirty_lines() {
            let addr = self.dl1.addr_of(set, way);
            let (lset, ltag) = self.back.llc.locate(addr);
            let data = self.dl1.block(set, way);
            match self.back.llc.find(lset, ltag) {
                Some(lway) => {
                    let off = (addr - self.back.llc.addr_of(lset, lway)) as usize;
                    self.back.llc.block_mut(lset, lway)[off..off + block].copy_from_slice(data);
                    self.back.llc.line_mut(lset, lway).dirty = true;
                }
                None => self
                    .back
                    .mem
                    .slice_mut(addr, block)
                    .expect("cached blocks lie inside memory")
                    .copy_from_slice(data),
            }
            self.dl1.line_mut(set, way).dirty = false;
        }
        let llc_block = self.back.llc.block_bytes() as usize;
        for (set, way) in self.back.llc.dirty_lines() {
            let addr = self.back.llc.addr_of(set, way);
            self.back
                .mem
                .slice_mut(addr, llc_block)
                .expect("cached blocks lie inside memory")
                .copy_from_slice(self.back.llc.block(set, way));
            self.back.llc.line_mut(set, way).dirty = false;
        }
    }

    /// Reads the current architectural bytes at `addr` without side effects.
    pub fn peek(&self, addr: u32, out: &mut [u8]) -> Result<(), MemError> {
        if !self.back.mem.contains(addr, out.len()) {
            return Err(MemError::OutOfRange { addr, len: out.len() });
        }
        let block = self.l1_block_bytes;
        let mut done = 0;
        while done < out.len() {
            let a = addr + done as u32;
            let in_block = (a & (block - 1)) as usize;
            let n = (block as usize - in_block).min(out.len() - done);
            let dst = &mut out[done..done + n];
            let (set, tag) = self.dl1.locate(a);
            if let Some(way) = self.dl1.find(set, tag) {
                dst.copy_from_slice(&self.dl1.block(set, way)[in_block..in_block + n]);
            } else {
                let llc = &self.back.llc;
                let (lset, ltag) = llc.locate(a);
                match llc.find(lset, ltag) {
                    Some(lway) => {
                        let off = (a - llc.addr_of(lset, lway)) as usize;
                        dst.copy_from_slice(&llc.block(lset, lway)[off..off + n]);
                    }
                    None => dst.copy_from_slice(self.back.mem.slice(a, n)?),
                }
            }
            done += n;
        }
        Ok(())
    }

    /// Host-side write: flushes, updates main memory and drops every cached
    /// copy, leaving the caches cold.
    pub fn load_bytes(&mut self, addr: u32, data: &[u8]) -> Result<(), MemError> {
        self.back.mem.slice(addr, data.len())?;
        self.flush_all();
        self.back.mem.slice_mut(addr, data.len())?.copy_from_slice(data);
        self.il1.invalidate_all();
        self.dl1.invalidate_all();
        self.back.llc.invalidate_all();
        Ok(())
    }
}

impl VectorMemory for MemoryHierarchy {
    fn load_vector(&mut self, addr: u32, out: &mut [u8], now: u64) -> Result<u64, MemError> {
        self.read(addr, out, now)
    }

    fn store_vector(&mut self, addr: u32, data: &[u8], now: u64) -> Result<u64, MemError> {
        self.write(addr, data, now)
    }
}

#[cfg(test)]
mod tests;
