//! Custom SIMD instruction framework.
//!
//! A [`VectorUnit`] owns the vector register file, a registry of custom
//! instructions and their in-flight pipeline slots. Each registered
//! instruction has a fixed pipeline latency; non-blocking instructions accept
//! one new issue per cycle and write their destinations back when the latency
//! has elapsed, mirroring a hardware template that carries destination names
//! down the pipeline next to the data.

mod builtins;
mod network;
mod scan;
mod unit;

use thiserror::Error;

use crate::mem::MemError;

pub use builtins::{builtin_descriptors, BuiltinLatencies};
pub use network::{apply_cas_network, gen_merge_network, gen_sort_network, CasNetwork};
pub use scan::{psum_exec, ScanSteps};
pub use unit::{
    CustomInstrDescriptor, CustomSemantics, Destinations, Effects, InstrHandle, IssueOutcome, MemRequest, MemoryRole,
    Operands, PipelineSlot, Retirement, Vector, VectorMemory, VectorRegisterFile, VectorUnit,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VectorError {
    #[error("network width {0} is not a supported power of two")]
    InvalidWidth(usize),
    #[error("invalid network: {0}")]
    InvalidNetwork(String),
    #[error("VLEN {0} must be a power of two of at least 64 bits")]
    InvalidVlen(u32),
    #[error("encoding point custom-{slot} funct3 {funct3} is already registered")]
    DuplicateSlot { slot: u8, funct3: u8 },
    #[error("mnemonic {0} is already registered")]
    DuplicateMnemonic(String),
    #[error("invalid descriptor: {0}")]
    InvalidDescriptor(String),
    #[error("custom instruction is not registered")]
    Unregistered,
    #[error("misaligned vector access at {addr:#010x}")]
    MisalignedVectorAccess { addr: u32 },
    #[error("vector result has {got} lanes, expected {expected}")]
    WidthMismatch { expected: usize, got: usize },
    #[error("{0} requested a memory access it does not declare")]
    UndeclaredMemoryAccess(String),
    #[error(transparent)]
    Memory(#[from] MemError),
}

impl VectorUnit {
    /// A unit with the six built-in instructions at their default latencies.
    pub fn with_builtins(vlen_bits: u32) -> Result<Self, VectorError> {
        let mut unit = VectorUnit::new(vlen_bits)?;
        let lanes = unit.lanes();
        for desc in builtin_descriptors(lanes, BuiltinLatencies::for_lanes(lanes)?)? {
            unit.register_custom_instr(desc)?;
        }
        Ok(unit)
    }
}
