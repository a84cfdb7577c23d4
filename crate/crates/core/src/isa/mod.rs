//! Instruction encoding, decoding and disassembly for RV32IM plus the two
//! custom vector formats I' and S'.
//!
//! Both custom formats keep the standard I-type positions of `opcode`, `rd`,
//! `funct3` and `rs1`, and reuse the 12-bit immediate span for register names:
//!
//! ```text
//!        31   29 28   26 25   23 22   20 19  15 14  12 11   7 6      0
//!  I'   | vrd2  | vrs2  | vrd1  | vrs1  | rs1  |funct3|  rd  | opcode |
//!  S'   |0| rs2 (30:26)  | vrd1  | vrs1  | rs1  |funct3|  rd  | opcode |
//! ```
//!
//! The ordering of the four 3-bit vector fields is a normalization; only the
//! requirement that they occupy the immediate span is fixed.

mod codec;
mod disasm;
mod instr;

use thiserror::Error;

pub use codec::{decode_with, encode};
pub use disasm::{disassemble, disassemble_with};
pub use instr::*;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IsaError {
    #[error("illegal instruction {0:#010x}")]
    IllegalInstruction(u32),
    #[error("unencodable instruction: {0}")]
    Unencodable(String),
}

/// Lookup of custom instructions by encoding point or by mnemonic.
///
/// Decoding a custom opcode slot needs to know which format the `funct3`
/// namespace entry uses; disassembly and assembly need its name.
pub trait CustomTable {
    fn format_of(&self, slot: OpcodeSlot, funct3: u8) -> Option<CustomFormat>;
    fn mnemonic_of(&self, slot: OpcodeSlot, funct3: u8) -> Option<&str>;
    fn by_mnemonic(&self, mnemonic: &str) -> Option<(OpcodeSlot, u8, CustomFormat)>;
}

/// The built-in custom instructions, as (mnemonic, slot, funct3, format).
pub const BUILTIN_CUSTOMS: [(&str, u8, u8, CustomFormat); 6] = [
    ("c0_lv", 0, 0, CustomFormat::SPrime),
    ("c0_sv", 0, 1, CustomFormat::SPrime),
    ("c1_merge", 1, 0, CustomFormat::IPrime),
    ("c2_sort", 2, 0, CustomFormat::IPrime),
    ("c3_psum", 3, 0, CustomFormat::IPrime),
    ("c3_psum_init", 3, 1, CustomFormat::IPrime),
];

/// Custom table holding only [`BUILTIN_CUSTOMS`].
#[derive(Debug, Clone, Copy, Default)]
pub struct BuiltinCustoms;

impl CustomTable for BuiltinCustoms {
    fn format_of(&self, slot: OpcodeSlot, funct3: u8) -> Option<CustomFormat> {
        BUILTIN_CUSTOMS
            .iter()
            .find(|(_, s, f, _)| *s == slot.index() && *f == funct3)
            .map(|entry| entry.3)
    }

    fn mnemonic_of(&self, slot: OpcodeSlot, funct3: u8) -> Option<&str> {
        BUILTIN_CUSTOMS
            .iter()
            .find(|(_, s, f, _)| *s == slot.index() && *f == funct3)
            .map(|entry| entry.0)
    }

    fn by_mnemonic(&self, mnemonic: &str) -> Option<(OpcodeSlot, u8, CustomFormat)> {
        BUILTIN_CUSTOMS
            .iter()
            .find(|entry| entry.0 == mnemonic)
            .map(|&(_, s, f, fmt)| (OpcodeSlot::new(s as u32).unwrap(), f, fmt))
    }
}

/// Decodes `word` against the built-in custom instruction table.
pub fn decode(word: u32) -> Result<Instr, IsaError> {
    decode_with(word, &BuiltinCustoms)
}
