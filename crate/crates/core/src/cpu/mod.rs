//! Single-stage RV32IM core with the vector unit attached.
//!
//! Timing rules:
//!
//! * Every instruction occupies the core for one cycle, except divisions
//!   (`div_cycles`, blocking) and multiplies (`mul_cycles`).
//! * Simple results are available to the next instruction without stalls.
//! * A load's destination becomes readable `latency` cycles after issue,
//!   where `latency` comes from the cache (3 on a DL1 hit, so an immediately
//!   dependent instruction waits 2 cycles).
//! * Custom instructions go to the vector unit, which tracks its own
//!   destinations; readers of those stall until writeback.
//! * Instruction fetch costs nothing on an IL1 hit.
//! * `ecall` waits for every in-flight result before acting.
//!
//! Traps stop the simulation; there are no trap vectors.

mod alu;

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::config::{CacheConfig, ConfigError, SimConfig, TimingConfig};
use crate::image::Image;
use crate::isa::{decode_with, Instr, LoadKind, Reg, StoreKind};
use crate::mem::{MemError, MemStats, MemoryHierarchy};
use crate::vector::{InstrHandle, IssueOutcome, MemoryRole, VectorError, VectorUnit};

pub use alu::{alu, alu_imm, branch_taken, muldiv};

pub const HOST_EXIT: u32 = 93;
pub const HOST_WRITE: u32 = 64;
pub const HOST_CYCLES: u32 = 1000;

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
pub enum Trap {
    #[error("illegal instruction {word:#010x} at pc {pc:#010x}")]
    IllegalInstruction { pc: u32, word: u32 },
    #[error("misaligned access to {addr:#010x} at pc {pc:#010x}")]
    Misaligned { pc: u32, addr: u32 },
    #[error("access to {addr:#010x} outside memory at pc {pc:#010x}")]
    OutOfRange { pc: u32, addr: u32 },
    #[error("ebreak at pc {pc:#010x}")]
    Ebreak { pc: u32 },
    #[error("custom instruction fault at pc {pc:#010x}: {message}")]
    CustomFault { pc: u32, message: String },
}

impl Trap {
    fn from_mem(pc: u32, err: MemError) -> Trap {
        match err {
            MemError::Misaligned { addr, .. } => Trap::Misaligned { pc, addr },
            MemError::OutOfRange { addr, .. } => Trap::OutOfRange { pc, addr },
        }
    }

    fn from_vector(pc: u32, word: u32, err: VectorError) -> Trap {
        match err {
            VectorError::Unregistered => Trap::IllegalInstruction { pc, word },
            VectorError::MisalignedVectorAccess { addr } => Trap::Misaligned { pc, addr },
            VectorError::Memory(e) => Trap::from_mem(pc, e),
            other => Trap::CustomFault { pc, message: other.to_string() },
        }
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Vector(#[from] VectorError),
    #[error("image does not fit in memory: {0}")]
    Load(MemError),
    #[error("stopped after {cycles} cycles without exiting")]
    MaxCyclesExceeded { cycles: u64 },
    #[error("trap: {0}")]
    Trap(Trap),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepResult {
    pub retired: bool,
    /// Cycles from the start of this step to the start of the next one.
    pub cycles_consumed: u64,
    pub trap: Option<Trap>,
}

/// Why an instruction could not proceed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Stall {
    LoadUse,
    Dcache,
    VectorData,
    Structural,
    Icache,
    Drain,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct StallCycles {
    /// Waiting for a load that hit in DL1.
    pub load_use: u64,
    /// Waiting for a load that missed, or for DL1 to accept a request.
    pub dcache: u64,
    /// Waiting for a custom instruction's result.
    pub vector_data: u64,
    /// Waiting for a blocking custom instruction to leave its unit.
    pub structural: u64,
    pub icache: u64,
    /// Waiting for in-flight results at an `ecall`.
    pub drain: u64,
}

impl StallCycles {
    pub fn total(&self) -> u64 {
        self.load_use + self.dcache + self.vector_data + self.structural + self.icache + self.drain
    }

    fn add(&mut self, cause: Stall, cycles: u64) {
        let slot = match cause {
            Stall::LoadUse => &mut self.load_use,
            Stall::Dcache => &mut self.dcache,
            Stall::VectorData => &mut self.vector_data,
            Stall::Structural => &mut self.structural,
            Stall::Icache => &mut self.icache,
            Stall::Drain => &mut self.drain,
        };
        *slot += cycles;
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct InstrMix {
    pub alu: u64,
    /// Conditional branches and jumps.
    pub branch: u64,
    pub load: u64,
    pub store: u64,
    pub muldiv: u64,
    /// `ecall`, `ebreak` and `fence`.
    pub system: u64,
    pub custom: BTreeMap<String, u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ExecStats {
    pub cycles: u64,
    pub instructions: u64,
    /// Cycles spent executing, excluding stalls. `cycles == busy_cycles + stalls.total()`.
    pub busy_cycles: u64,
    pub mix: InstrMix,
    pub stalls: StallCycles,
    pub mem: MemStats,
    pub exit_code: Option<i32>,
}

impl ExecStats {
    pub fn custom_count(&self, mnemonic: &str) -> u64 {
        self.mix.custom.get(mnemonic).copied().unwrap_or(0)
    }
}

/// One issued custom instruction, recorded when tracing is on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CustomTrace {
    pub pc: u32,
    pub mnemonic: String,
    pub issued_at: u64,
    pub completes_at: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Counters {
    alu: u64,
    branch: u64,
    load: u64,
    store: u64,
    muldiv: u64,
    system: u64,
    retired: u64,
    busy: u64,
}

/// Architectural state plus the load scoreboard.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoreState {
    pub pc: u32,
    pub xregs: [u32; 32],
    pub cycle: u64,
    /// Cycle each base register's pending load result becomes readable.
    /// Custom-instruction writers are tracked by the vector unit.
    pub load_ready: [u64; 32],
    load_hit: [bool; 32],
    pub halted: bool,
    pub exit_code: Option<i32>,
}

impl CoreState {
    fn new() -> Self {
        CoreState {
            pc: 0,
            xregs: [0; 32],
            cycle: 0,
            load_ready: [0; 32],
            load_hit: [true; 32],
            halted: false,
            exit_code: None,
        }
    }

    pub fn reg(&self, r: Reg) -> u32 {
        self.xregs[r.index()]
    }

    fn set(&mut self, r: Reg, value: u32) {
        if !r.is_zero() {
            self.xregs[r.index()] = value;
        }
    }

    /// Registers with a load still in flight at the current cycle.
    pub fn pending_loads(&self) -> Vec<Reg> {
        (1..32)
            .filter(|&i| self.load_ready[i] > self.cycle)
            .map(|i| Reg::new(i as u32).unwrap())
            .collect()
    }
}

/// Core, vector unit and memory hierarchy of one simulated system.
#[derive(Debug)]
pub struct Simulator {
    state: CoreState,
    mem: MemoryHierarchy,
    vunit: VectorUnit,
    timing: TimingConfig,
    counters: Counters,
    stalls: StallCycles,
    output: Vec<u8>,
    trace: Option<Vec<CustomTrace>>,
    audit: bool,
    violations: u64,
    last_trap: Option<Trap>,
}

impl Simulator {
    pub fn new(config: &SimConfig) -> Result<Self, SimError> {
        let cache = config.cache_config()?;
        let vunit = VectorUnit::with_builtins(cache.vlen_bits)?;
        Ok(Self::with_parts(&cache, config.timing, vunit))
    }

    /// Builds a simulator around a caller-prepared vector unit, e.g. one
    /// with extra custom instructions registered.
    pub fn with_parts(cache: &CacheConfig, timing: TimingConfig, vunit: VectorUnit) -> Self {
        let mut state = CoreState::new();
        state.pc = cache.mem_base;
        Simulator {
            state,
            mem: MemoryHierarchy::new(cache),
            vunit,
            timing,
            counters: Counters::default(),
            stalls: StallCycles::default(),
            output: Vec::new(),
            trace: None,
            audit: false,
            violations: 0,
            last_trap: None,
        }
    }

    /// Copies the image into memory, points the pc at its entry and the
    /// stack pointer at the top of memory.
    pub fn load_image(&mut self, image: &Image) -> Result<(), SimError> {
        self.mem.load_bytes(image.base, &image.bytes).map_err(SimError::Load)?;
        self.state.pc = image.entry;
        let m = self.mem.memory();
        let top = (m.base() as u64 + m.size() as u64).min(u32::MAX as u64) as u32 & !15;
        self.state.set(Reg::SP, top);
        Ok(())
    }

    /// Host-side write into simulated memory; leaves all caches cold.
    pub fn write_memory(&mut self, addr: u32, data: &[u8]) -> Result<(), MemError> {
        self.mem.load_bytes(addr, data)
    }

    /// Coherent host-side read of simulated memory.
    pub fn read_memory(&self, addr: u32, len: usize) -> Result<Vec<u8>, MemError> {
        let mut out = vec![0; len];
        self.mem.peek(addr, &mut out)?;
        Ok(out)
    }

    pub fn read_words(&self, addr: u32, count: usize) -> Result<Vec<u32>, MemError> {
        let bytes = self.read_memory(addr, count * 4)?;
        Ok(bytes.chunks_exact(4).map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect())
    }

    pub fn state(&self) -> &CoreState {
        &self.state
    }

    pub fn set_reg(&mut self, r: Reg, value: u32) {
        self.state.set(r, value);
    }

    pub fn set_pc(&mut self, pc: u32) {
        self.state.pc = pc;
    }

    pub fn memory(&self) -> &MemoryHierarchy {
        &self.mem
    }

    pub fn memory_mut(&mut self) -> &mut MemoryHierarchy {
        &mut self.mem
    }

    pub fn vector_unit(&self) -> &VectorUnit {
        &self.vunit
    }

    pub fn vector_unit_mut(&mut self) -> &mut VectorUnit {
        &mut self.vunit
    }

    /// Bytes written through the write host call.
    pub fn output(&self) -> &[u8] {
        &self.output
    }

    pub fn set_trace(&mut self, on: bool) {
        self.trace = if on { Some(Vec::new()) } else { None };
    }

    pub fn trace(&self) -> &[CustomTrace] {
        self.trace.as_deref().unwrap_or(&[])
    }

    /// When on, every register read checks that no writer is in flight.
    pub fn set_audit(&mut self, on: bool) {
        self.audit = on;
    }

    /// Register reads that happened while a writer was in flight (audit mode).
    pub fn scoreboard_violations(&self) -> u64 {
        self.violations
    }

    pub fn last_trap(&self) -> Option<&Trap> {
        self.last_trap.as_ref()
    }

    pub fn stats(&self) -> ExecStats {
        let c = &self.counters;
        let custom = self
            .vunit
            .descriptors()
            .map(|(h, d)| (d.mnemonic.clone(), self.vunit.issue_counts()[h.0]))
            .filter(|&(_, n)| n > 0)
            .collect();
        ExecStats {
            cycles: self.state.cycle,
            instructions: c.retired,
            busy_cycles: c.busy,
            mix: InstrMix {
                alu: c.alu,
                branch: c.branch,
                load: c.load,
                store: c.store,
                muldiv: c.muldiv,
                system: c.system,
                custom,
            },
            stalls: self.stalls,
            mem: self.mem.stats_snapshot(),
            exit_code: self.state.exit_code,
        }
    }

    /// Steps until the program exits. Traps and the cycle limit are errors;
    /// [`Simulator::stats`] still reports the work done up to that point.
    pub fn run(&mut self, max_cycles: Option<u64>) -> Result<ExecStats, SimError> {
        while !self.state.halted {
            if let Some(limit) = max_cycles {
                if self.state.cycle >= limit {
                    return Err(SimError::MaxCyclesExceeded { cycles: self.state.cycle });
                }
            }
            if let Some(trap) = self.step().trap {
                return Err(SimError::Trap(trap));
            }
        }
        Ok(self.stats())
    }

    fn wait_until(&mut self, t: u64, cause: Stall) {
        if t > self.state.cycle {
            self.stalls.add(cause, t - self.state.cycle);
            self.state.cycle = t;
        }
    }

    fn retire_vector(&mut self) {
        for r in self.vunit.tick(self.state.cycle) {
            if let Some((reg, value)) = r.rd_write {
                self.state.set(reg, value);
            }
        }
    }

    fn reg_ready(&self, r: Reg) -> (u64, Stall) {
        let i = r.index();
        let load = self.state.load_ready[i];
        let custom = self.vunit.base_ready_at(r);
        if custom > load {
            (custom, Stall::VectorData)
        } else if self.state.load_hit[i] {
            (load, Stall::LoadUse)
        } else {
            (load, Stall::Dcache)
        }
    }

    /// Stalls until every listed register is free of in-flight writers.
    fn wait_regs(&mut self, regs: &[Reg]) {
        for &r in regs {
            if !r.is_zero() {
                let (t, cause) = self.reg_ready(r);
                self.wait_until(t, cause);
            }
        }
        self.retire_vector();
    }

    fn read(&mut self, r: Reg) -> u32 {
        if self.audit && !r.is_zero() && self.reg_ready(r).0 > self.state.cycle {
            self.violations += 1;
        }
        self.state.reg(r)
    }

    fn drain(&mut self) {
        let loads = self.state.load_ready.iter().copied().max().unwrap_or(0);
        let vector = self.vunit.drain_cycle().unwrap_or(0);
        self.wait_until(loads.max(vector), Stall::Drain);
        self.retire_vector();
    }

    fn trap(&mut self, start: u64, trap: Trap) -> StepResult {
        self.counters.busy += 1;
        self.state.cycle += 1;
        self.state.halted = true;
        self.last_trap = Some(trap.clone());
        StepResult { retired: false, cycles_consumed: self.state.cycle - start, trap: Some(trap) }
    }

    fn jump_target(&mut self, start: u64, pc: u32, target: u32) -> Result<u32, StepResult> {
        if !target.is_multiple_of(4) {
            return Err(self.trap(start, Trap::Misaligned { pc, addr: target }));
        }
        Ok(target)
    }

    /// Executes one instruction. Does nothing on a halted core.
    pub fn step(&mut self) -> StepResult {
        if self.state.halted {
            return StepResult { retired: false, cycles_consumed: 0, trap: None };
        }
        let start = self.state.cycle;
        let pc = self.state.pc;
        let (word, stall) = match self.mem.fetch_instr(pc, start) {
            Ok(f) => f,
            Err(e) => return self.trap(start, Trap::from_mem(pc, e)),
        };
        self.wait_until(start + stall, Stall::Icache);
        let instr = match decode_with(word, &self.vunit) {
            Ok(i) => i,
            Err(_) => return self.trap(start, Trap::IllegalInstruction { pc, word }),
        };
        self.retire_vector();

        let mut next_pc = pc.wrapping_add(4);
        let mut busy = 1;
        match instr {
            Instr::Lui { rd, imm } => {
                self.wait_regs(&[rd]);
                self.state.set(rd, imm << 12);
                self.counters.alu += 1;
            }
            Instr::Auipc { rd, imm } => {
                self.wait_regs(&[rd]);
                self.state.set(rd, pc.wrapping_add(imm << 12));
                self.counters.alu += 1;
            }
            Instr::Jal { rd, offset } => {
                self.wait_regs(&[rd]);
                next_pc = match self.jump_target(start, pc, pc.wrapping_add(offset as u32)) {
                    Ok(t) => t,
                    Err(r) => return r,
                };
                self.state.set(rd, pc.wrapping_add(4));
                self.counters.branch += 1;
            }
            Instr::Jalr { rd, rs1, offset } => {
                self.wait_regs(&[rs1, rd]);
                let base = self.read(rs1);
                next_pc = match self.jump_target(start, pc, base.wrapping_add(offset as u32) & !1) {
                    Ok(t) => t,
                    Err(r) => return r,
                };
                self.state.set(rd, pc.wrapping_add(4));
                self.counters.branch += 1;
            }
            Instr::Branch { kind, rs1, rs2, offset } => {
                self.wait_regs(&[rs1, rs2]);
                let (a, b) = (self.read(rs1), self.read(rs2));
                if branch_taken(kind, a, b) {
                    next_pc = match self.jump_target(start, pc, pc.wrapping_add(offset as u32)) {
                        Ok(t) => t,
                        Err(r) => return r,
                    };
                }
                self.counters.branch += 1;
            }
            Instr::Load { kind, rd, rs1, offset } => {
                self.wait_regs(&[rs1, rd]);
                self.wait_until(self.mem.dl1_ready_at(), Stall::Dcache);
                let addr = self.read(rs1).wrapping_add(offset as u32);
                let mut buf = [0u8; 4];
                let width = match kind {
                    LoadKind::Lb | LoadKind::Lbu => 1,
                    LoadKind::Lh | LoadKind::Lhu => 2,
                    LoadKind::Lw => 4,
                };
                let latency = match self.mem.read(addr, &mut buf[..width], self.state.cycle) {
                    Ok(l) => l,
                    Err(e) => return self.trap(start, Trap::from_mem(pc, e)),
                };
                let raw = u32::from_le_bytes(buf);
                let value = match kind {
                    LoadKind::Lb => raw as u8 as i8 as u32,
                    LoadKind::Lh => raw as u16 as i16 as u32,
                    LoadKind::Lbu | LoadKind::Lhu | LoadKind::Lw => raw,
                };
                if !rd.is_zero() {
                    self.state.set(rd, value);
                    self.state.load_ready[rd.index()] = self.state.cycle + latency;
                    self.state.load_hit[rd.index()] = latency <= self.timing.dl1_hit_cycles as u64;
                }
                self.counters.load += 1;
            }
            Instr::Store { kind, rs1, rs2, offset } => {
                self.wait_regs(&[rs1, rs2]);
                self.wait_until(self.mem.dl1_ready_at(), Stall::Dcache);
                let addr = self.read(rs1).wrapping_add(offset as u32);
                let bytes = self.read(rs2).to_le_bytes();
                let width = match kind {
                    StoreKind::Sb => 1,
                    StoreKind::Sh => 2,
                    StoreKind::Sw => 4,
                };
                if let Err(e) = self.mem.write(addr, &bytes[..width], self.state.cycle) {
                    return self.trap(start, Trap::from_mem(pc, e));
                }
                self.counters.store += 1;
            }
            Instr::OpImm { op, rd, rs1, imm } => {
                self.wait_regs(&[rs1, rd]);
                let v = alu_imm(op, self.read(rs1), imm);
                self.state.set(rd, v);
                self.counters.alu += 1;
            }
            Instr::Op { op, rd, rs1, rs2 } => {
                self.wait_regs(&[rs1, rs2, rd]);
                let v = alu(op, self.read(rs1), self.read(rs2));
                self.state.set(rd, v);
                self.counters.alu += 1;
            }
            Instr::MulDiv { op, rd, rs1, rs2 } => {
                self.wait_regs(&[rs1, rs2, rd]);
                let v = muldiv(op, self.read(rs1), self.read(rs2));
                self.state.set(rd, v);
                busy = if op.is_division() { self.timing.div_cycles } else { self.timing.mul_cycles } as u64;
                self.counters.muldiv += 1;
            }
            Instr::Fence { .. } => self.counters.system += 1,
            Instr::Ebreak => {
                self.counters.system += 1;
                return self.trap(start, Trap::Ebreak { pc });
            }
            Instr::Ecall => {
                self.counters.system += 1;
                self.drain();
                if let Err(trap) = self.host_call(pc, word) {
                    return self.trap(start, trap);
                }
            }
            Instr::CustomI(_) | Instr::CustomS(_) => {
                if let Err(trap) = self.issue_custom(pc, word, &instr) {
                    return self.trap(start, trap);
                }
            }
        }
        self.counters.busy += busy;
        self.counters.retired += 1;
        self.state.cycle += busy;
        self.state.pc = next_pc;
        StepResult { retired: true, cycles_consumed: self.state.cycle - start, trap: None }
    }

    fn issue_custom(&mut self, pc: u32, word: u32, instr: &Instr) -> Result<(), Trap> {
        let handle: InstrHandle = self.vunit.handle_for(instr).ok_or(Trap::IllegalInstruction { pc, word })?;
        let (rd, rs1, rs2) = match *instr {
            Instr::CustomI(c) => (c.rd, c.rs1, Reg::ZERO),
            Instr::CustomS(c) => (c.rd, c.rs1, c.rs2),
            _ => unreachable!(),
        };
        let uses_memory = self.vunit.descriptor(handle).memory != MemoryRole::None;
        self.wait_regs(&[rs1, rs2, rd]);
        loop {
            if uses_memory {
                self.wait_until(self.mem.dl1_ready_at(), Stall::Dcache);
            }
            self.retire_vector();
            let (a, b) = (self.read(rs1), self.read(rs2));
            let now = self.state.cycle;
            match self.vunit.issue(instr, a, b, now, &mut self.mem) {
                Ok(IssueOutcome::Accepted { completes_at, .. }) => {
                    if let Some(trace) = &mut self.trace {
                        let mnemonic = self.vunit.descriptor(handle).mnemonic.clone();
                        trace.push(CustomTrace { pc, mnemonic, issued_at: now, completes_at });
                    }
                    return Ok(());
                }
                Ok(IssueOutcome::StallData { until }) => self.wait_until(until, Stall::VectorData),
                Ok(IssueOutcome::StallStructural { until }) => self.wait_until(until, Stall::Structural),
                Err(e) => return Err(Trap::from_vector(pc, word, e)),
            }
        }
    }

    fn host_call(&mut self, pc: u32, word: u32) -> Result<(), Trap> {
        let selector = self.state.reg(Reg::A7);
        match selector {
            HOST_EXIT => {
                self.state.halted = true;
                self.state.exit_code = Some(self.state.reg(Reg::A0) as i32);
            }
            HOST_WRITE => {
                let addr = self.state.reg(Reg::A1);
                let len = self.state.reg(Reg::A2) as usize;
                let mut buf = vec![0; len];
                self.mem.peek(addr, &mut buf).map_err(|e| Trap::from_mem(pc, e))?;
                self.output.extend_from_slice(&buf);
                self.state.set(Reg::A0, len as u32);
            }
            HOST_CYCLES => {
                let c = self.state.cycle;
                self.state.set(Reg::A0, c as u32);
                self.state.set(Reg::A1, (c >> 32) as u32);
            }
            _ => return Err(Trap::IllegalInstruction { pc, word }),
        }
        Ok(())
    }
}
