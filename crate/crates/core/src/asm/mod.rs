//! Two-pass assembler for RV32IM plus registered custom mnemonics.
//!
//! Grammar, one statement per line:
//!
//! ```text
//! line      := { label ":" } [ statement ] [ "#" comment ]
//! statement := mnemonic [ operand { "," operand } ]
//!            | directive [ operand { "," operand } ]
//! ```
//!
//! Operands are registers (`x0`..`x31`, ABI names, `v0`..`v7`), integers
//! (decimal or `0x` hex, optionally negative), labels, or `offset(reg)` for
//! memory operands. Branch and jump targets are labels or numeric byte
//! offsets relative to the instruction.
//!
//! Custom I' mnemonics take `vrd1, vrd2, vrs1, vrs2, rd, rs1` and S'
//! mnemonics take `vrd1, vrs1, rd, rs1, rs2`, destinations before sources and
//! base registers last. Trailing operands may be left out and default to
//! `v0`/`x0`.
//!
//! Directives: `.text`, `.data`, `.word`, `.byte`, `.asciz`, `.org <offset>`
//! (relative to the current section), `.align <log2 bytes>`, `.space <bytes>`.
//! The data section starts at the first 256-byte boundary after the text.
//! The entry point is `_start` if defined, else the start of the text.
//!
//! Pseudo-instructions: `nop`, `li`, `la`, `mv`, `not`, `neg`, `seqz`,
//! `snez`, `j`, `jr`, `jal label`, `call`, `ret`, `beqz`, `bnez`, `blez`,
//! `bgez`, `bltz`, `bgtz`, `bgt`, `ble`, `bgtu`, `bleu`.

mod parse;

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use thiserror::Error;

use crate::image::Image;
use crate::isa::{
    decode_with, disassemble_with, encode, AluImmOp, AluOp, BranchKind, BuiltinCustoms, CustomFormat, CustomI,
    CustomS, CustomTable, Instr, LoadKind, MulDivOp, Reg, StoreKind, VReg,
};

use parse::{parse_int, parse_line, parse_mem_operand, parse_reg, parse_vreg, Statement};

/// Alignment of the data section start.
pub const DATA_ALIGN: u32 = 256;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AsmErrorKind {
    #[error("unknown mnemonic `{0}`")]
    UnknownMnemonic(String),
    #[error("unknown directive `{0}`")]
    UnknownDirective(String),
    #[error("undefined label `{0}`")]
    UndefinedLabel(String),
    #[error("label `{0}` defined twice")]
    DuplicateLabel(String),
    #[error("`{mnemonic}` takes {expected} operands, got {got}")]
    OperandArity { mnemonic: String, expected: String, got: usize },
    #[error("{0}")]
    RangeError(String),
    #[error("{0}")]
    Syntax(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {kind}")]
pub struct AsmError {
    pub line: usize,
    pub kind: AsmErrorKind,
}

type Res<T> = Result<T, AsmErrorKind>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    Text,
    Data,
}

struct Item {
    line: usize,
    section: Section,
    offset: u32,
    stmt: Statement,
}

struct Layout<'a> {
    customs: &'a dyn CustomTable,
    labels: HashMap<String, (Section, u32)>,
    text_base: u32,
    data_base: u32,
}

impl Layout<'_> {
    fn base(&self, section: Section) -> u32 {
        match section {
            Section::Text => self.text_base,
            Section::Data => self.data_base,
        }
    }

    fn label(&self, name: &str) -> Res<u32> {
        self.labels
            .get(name)
            .map(|&(s, off)| self.base(s) + off)
            .ok_or_else(|| AsmErrorKind::UndefinedLabel(name.to_string()))
    }

    /// A numeric literal or a label address.
    fn value(&self, text: &str) -> Res<i64> {
        match parse_int(text) {
            Some(v) => Ok(v),
            None if parse::is_identifier(text) => Ok(self.label(text)? as i64),
            None => Err(AsmErrorKind::Syntax(format!("expected a number or label, found `{text}`"))),
        }
    }

    /// A branch target: numeric offset, or a label turned into an offset from `pc`.
    fn target(&self, text: &str, pc: u32) -> Res<i32> {
        match parse_int(text) {
            Some(v) => i32::try_from(v).map_err(|_| AsmErrorKind::RangeError(format!("offset {v} out of range"))),
            None if parse::is_identifier(text) => Ok(self.label(text)?.wrapping_sub(pc) as i32),
            None => Err(AsmErrorKind::Syntax(format!("expected a label or offset, found `{text}`"))),
        }
    }
}

/// Assembles against the built-in custom instructions with the image at address 0.
pub fn assemble(src: &str) -> Result<Image, AsmError> {
    assemble_with(src, &BuiltinCustoms, 0)
}

/// Assembles `src` with the text section at `base`.
pub fn assemble_with(src: &str, customs: &dyn CustomTable, base: u32) -> Result<Image, AsmError> {
    let err = |line: usize| move |kind: AsmErrorKind| AsmError { line, kind };

    // Pass 1: sizes and label offsets.
    let mut items = Vec::new();
    let mut labels: HashMap<String, (Section, u32)> = HashMap::new();
    let mut section = Section::Text;
    let mut offsets = [0u32; 2];
    for (i, raw) in src.lines().enumerate() {
        let line = i + 1;
        let (line_labels, stmt) = parse_line(raw).map_err(err(line))?;
        let slot = section as usize;
        for name in line_labels {
            if labels.insert(name.clone(), (section, offsets[slot])).is_some() {
                return Err(err(line)(AsmErrorKind::DuplicateLabel(name)));
            }
        }
        let Some(stmt) = stmt else { continue };
        match stmt.name.as_str() {
            ".text" => section = Section::Text,
            ".data" => section = Section::Data,
            _ => {
                let size = statement_size(&stmt, offsets[slot], customs).map_err(err(line))?;
                items.push(Item { line, section, offset: offsets[slot], stmt });
                offsets[slot] += size;
            }
        }
    }
    let [text_size, data_size] = offsets;
    let data_base = (base as u64 + text_size as u64).next_multiple_of(DATA_ALIGN as u64);
    let end = if data_size > 0 { data_base + data_size as u64 } else { base as u64 + text_size as u64 };
    if end > 1 << 32 {
        return Err(err(0)(AsmErrorKind::RangeError("program exceeds the 32-bit address space".into())));
    }
    let layout = Layout { customs, labels, text_base: base, data_base: data_base as u32 };

    // Pass 2: encode.
    let mut bytes = vec![0u8; (end - base as u64) as usize];
    for item in &items {
        let addr = layout.base(item.section) + item.offset;
        let out = emit(&item.stmt, addr, &layout).map_err(err(item.line))?;
        let at = (addr - base) as usize;
        bytes[at..at + out.len()].copy_from_slice(&out);
    }

    let symbols: BTreeMap<String, u32> =
        layout.labels.iter().map(|(name, &(s, off))| (name.clone(), layout.base(s) + off)).collect();
    let entry = symbols.get("_start").copied().unwrap_or(base);
    Ok(Image { base, entry, bytes, symbols })
}

fn arity(stmt: &Statement, expected: &[usize]) -> Res<()> {
    if expected.contains(&stmt.operands.len()) {
        return Ok(());
    }
    let expected = expected.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(" or ");
    Err(AsmErrorKind::OperandArity { mnemonic: stmt.name.clone(), expected, got: stmt.operands.len() })
}

fn small_imm(v: i64) -> bool {
    (-2048..2048).contains(&v)
}

fn statement_size(stmt: &Statement, offset: u32, customs: &dyn CustomTable) -> Res<u32> {
    let ops = &stmt.operands;
    Ok(match stmt.name.as_str() {
        ".word" => 4 * ops.len() as u32,
        ".byte" => ops.len() as u32,
        ".asciz" => {
            arity(stmt, &[1])?;
            parse::string_literal(&ops[0])?.len() as u32 + 1
        }
        ".space" => {
            arity(stmt, &[1])?;
            literal_u32(&ops[0])?
        }
        ".align" => {
            arity(stmt, &[1])?;
            let p = literal_u32(&ops[0])?;
            if p > 16 {
                return Err(AsmErrorKind::RangeError(format!(".align {p} is larger than 64 KiB")));
            }
            offset.next_multiple_of(1 << p) - offset
        }
        ".org" => {
            arity(stmt, &[1])?;
            let target = literal_u32(&ops[0])?;
            if target < offset {
                return Err(AsmErrorKind::RangeError(format!(".org {target:#x} moves backwards from {offset:#x}")));
            }
            target - offset
        }
        "li" => {
            arity(stmt, &[2])?;
            let v = li_value(&ops[1])?;
            if small_imm(v as i32 as i64) { 4 } else { 8 }
        }
        "la" => 8,
        name if name.starts_with('.') => return Err(AsmErrorKind::UnknownDirective(name.to_string())),
        name => {
            if !is_known_mnemonic(name, customs) {
                return Err(AsmErrorKind::UnknownMnemonic(name.to_string()));
            }
            4
        }
    })
}

fn literal_u32(text: &str) -> Res<u32> {
    let v = parse_int(text).ok_or_else(|| AsmErrorKind::Syntax(format!("expected a number, found `{text}`")))?;
    u32::try_from(v).map_err(|_| AsmErrorKind::RangeError(format!("{v} is out of range")))
}

fn li_value(text: &str) -> Res<u32> {
    let v = parse_int(text).ok_or_else(|| AsmErrorKind::Syntax(format!("li needs a numeric immediate, found `{text}`")))?;
    if !(i32::MIN as i64..=u32::MAX as i64).contains(&v) {
        return Err(AsmErrorKind::RangeError(format!("li immediate {v} does not fit in 32 bits")));
    }
    Ok(v as u32)
}

const BASE_MNEMONICS: &[&str] = &[
    "lui", "auipc", "jal", "jalr", "beq", "bne", "blt", "bge", "bltu", "bgeu", "lb", "lh", "lw", "lbu", "lhu", "sb",
    "sh", "sw", "addi", "slti", "sltiu", "xori", "ori", "andi", "slli", "srli", "srai", "add", "sub", "sll", "slt",
    "sltu", "xor", "srl", "sra", "or", "and", "mul", "mulh", "mulhsu", "mulhu", "div", "divu", "rem", "remu",
    "fence", "ecall", "ebreak", "nop", "mv", "not", "neg", "seqz", "snez", "j", "jr", "call", "ret", "beqz", "bnez",
    "blez", "bgez", "bltz", "bgtz", "bgt", "ble", "bgtu", "bleu",
];

fn is_known_mnemonic(name: &str, customs: &dyn CustomTable) -> bool {
    BASE_MNEMONICS.contains(&name) || customs.by_mnemonic(name).is_some()
}

fn imm12(v: i64) -> Res<i32> {
    if small_imm(v) {
        Ok(v as i32)
    } else {
        Err(AsmErrorKind::RangeError(format!("immediate {v} does not fit in 12 signed bits")))
    }
}

fn enc(instr: Instr) -> Res<Vec<u8>> {
    encode(&instr)
        .map(|w| w.to_le_bytes().to_vec())
        .map_err(|e| AsmErrorKind::RangeError(e.to_string()))
}

fn enc2(a: Instr, b: Instr) -> Res<Vec<u8>> {
    let mut out = enc(a)?;
    out.extend(enc(b)?);
    Ok(out)
}

/// Splits a 32-bit value into `lui`/`addi` parts.
fn hi_lo(value: u32) -> (u32, i32) {
    let lo = ((value & 0xfff) as i32) << 20 >> 20;
    let hi = value.wrapping_sub(lo as u32) >> 12;
    (hi, lo)
}

fn emit(stmt: &Statement, pc: u32, layout: &Layout<'_>) -> Res<Vec<u8>> {
    let ops: Vec<&str> = stmt.operands.iter().map(String::as_str).collect();
    let name = stmt.name.as_str();
    let reg = |i: usize| parse_reg(ops[i]);
    let target = |i: usize| layout.target(ops[i], pc);
    let imm = |i: usize| imm12(layout.value(ops[i])?);

    if name.starts_with('.') {
        return emit_directive(stmt, layout);
    }
    if let Some((slot, funct3, format)) = layout.customs.by_mnemonic(name) {
        return emit_custom(stmt, slot, funct3, format);
    }

    let alu_imm_op = |op: AluImmOp| -> Res<Vec<u8>> {
        arity(stmt, &[3])?;
        let imm = if op.is_shift() {
            let v = layout.value(ops[2])?;
            if !(0..32).contains(&v) {
                return Err(AsmErrorKind::RangeError(format!("shift amount {v} out of range")));
            }
            v as i32
        } else {
            imm(2)?
        };
        enc(Instr::OpImm { op, rd: reg(0)?, rs1: reg(1)?, imm })
    };
    let alu_op = |op: AluOp| -> Res<Vec<u8>> {
        arity(stmt, &[3])?;
        enc(Instr::Op { op, rd: reg(0)?, rs1: reg(1)?, rs2: reg(2)? })
    };
    let muldiv = |op: MulDivOp| -> Res<Vec<u8>> {
        arity(stmt, &[3])?;
        enc(Instr::MulDiv { op, rd: reg(0)?, rs1: reg(1)?, rs2: reg(2)? })
    };
    let branch = |kind: BranchKind, swap: bool| -> Res<Vec<u8>> {
        arity(stmt, &[3])?;
        let (a, b) = if swap { (reg(1)?, reg(0)?) } else { (reg(0)?, reg(1)?) };
        enc(Instr::Branch { kind, rs1: a, rs2: b, offset: target(2)? })
    };
    let branch_zero = |kind: BranchKind, zero_first: bool| -> Res<Vec<u8>> {
        arity(stmt, &[2])?;
        let r = reg(0)?;
        let (a, b) = if zero_first { (Reg::ZERO, r) } else { (r, Reg::ZERO) };
        enc(Instr::Branch { kind, rs1: a, rs2: b, offset: target(1)? })
    };
    let load = |kind: LoadKind| -> Res<Vec<u8>> {
        arity(stmt, &[2])?;
        let (offset, rs1) = parse_mem_operand(ops[1], |t| layout.value(t))?;
        enc(Instr::Load { kind, rd: reg(0)?, rs1, offset: imm12(offset)? })
    };
    let store = |kind: StoreKind| -> Res<Vec<u8>> {
        arity(stmt, &[2])?;
        let (offset, rs1) = parse_mem_operand(ops[1], |t| layout.value(t))?;
        enc(Instr::Store { kind, rs1, rs2: reg(0)?, offset: imm12(offset)? })
    };
    let upper = |i: usize| -> Res<u32> {
        let v = layout.value(ops[i])?;
        if !(0..=0xf_ffff).contains(&v) {
            return Err(AsmErrorKind::RangeError(format!("upper immediate {v:#x} exceeds 20 bits")));
        }
        Ok(v as u32)
    };

    match name {
        "lui" => {
            arity(stmt, &[2])?;
            enc(Instr::Lui { rd: reg(0)?, imm: upper(1)? })
        }
        "auipc" => {
            arity(stmt, &[2])?;
            enc(Instr::Auipc { rd: reg(0)?, imm: upper(1)? })
        }
        "jal" => {
            arity(stmt, &[1, 2])?;
            if ops.len() == 1 {
                enc(Instr::Jal { rd: Reg::RA, offset: target(0)? })
            } else {
                enc(Instr::Jal { rd: reg(0)?, offset: target(1)? })
            }
        }
        "jalr" => {
            arity(stmt, &[1, 2, 3])?;
            match ops.len() {
                1 => enc(Instr::Jalr { rd: Reg::RA, rs1: reg(0)?, offset: 0 }),
                2 => {
                    let (offset, rs1) = parse_mem_operand(ops[1], |t| layout.value(t))?;
                    enc(Instr::Jalr { rd: reg(0)?, rs1, offset: imm12(offset)? })
                }
                _ => enc(Instr::Jalr { rd: reg(0)?, rs1: reg(1)?, offset: imm(2)? }),
            }
        }
        "beq" => branch(BranchKind::Beq, false),
        "bne" => branch(BranchKind::Bne, false),
        "blt" => branch(BranchKind::Blt, false),
        "bge" => branch(BranchKind::Bge, false),
        "bltu" => branch(BranchKind::Bltu, false),
        "bgeu" => branch(BranchKind::Bgeu, false),
        "bgt" => branch(BranchKind::Blt, true),
        "ble" => branch(BranchKind::Bge, true),
        "bgtu" => branch(BranchKind::Bltu, true),
        "bleu" => branch(BranchKind::Bgeu, true),
        "beqz" => branch_zero(BranchKind::Beq, false),
        "bnez" => branch_zero(BranchKind::Bne, false),
        "blez" => branch_zero(BranchKind::Bge, true),
        "bgez" => branch_zero(BranchKind::Bge, false),
        "bltz" => branch_zero(BranchKind::Blt, false),
        "bgtz" => branch_zero(BranchKind::Blt, true),
        "lb" => load(LoadKind::Lb),
        "lh" => load(LoadKind::Lh),
        "lw" => load(LoadKind::Lw),
        "lbu" => load(LoadKind::Lbu),
        "lhu" => load(LoadKind::Lhu),
        "sb" => store(StoreKind::Sb),
        "sh" => store(StoreKind::Sh),
        "sw" => store(StoreKind::Sw),
        "addi" => alu_imm_op(AluImmOp::Addi),
        "slti" => alu_imm_op(AluImmOp::Slti),
        "sltiu" => alu_imm_op(AluImmOp::Sltiu),
        "xori" => alu_imm_op(AluImmOp::Xori),
        "ori" => alu_imm_op(AluImmOp::Ori),
        "andi" => alu_imm_op(AluImmOp::Andi),
        "slli" => alu_imm_op(AluImmOp::Slli),
        "srli" => alu_imm_op(AluImmOp::Srli),
        "srai" => alu_imm_op(AluImmOp::Srai),
        "add" => alu_op(AluOp::Add),
        "sub" => alu_op(AluOp::Sub),
        "sll" => alu_op(AluOp::Sll),
        "slt" => alu_op(AluOp::Slt),
        "sltu" => alu_op(AluOp::Sltu),
        "xor" => alu_op(AluOp::Xor),
        "srl" => alu_op(AluOp::Srl),
        "sra" => alu_op(AluOp::Sra),
        "or" => alu_op(AluOp::Or),
        "and" => alu_op(AluOp::And),
        "mul" => muldiv(MulDivOp::Mul),
        "mulh" => muldiv(MulDivOp::Mulh),
        "mulhsu" => muldiv(MulDivOp::Mulhsu),
        "mulhu" => muldiv(MulDivOp::Mulhu),
        "div" => muldiv(MulDivOp::Div),
        "divu" => muldiv(MulDivOp::Divu),
        "rem" => muldiv(MulDivOp::Rem),
        "remu" => muldiv(MulDivOp::Remu),
        "fence" => {
            arity(stmt, &[0, 2])?;
            let (pred, succ) = if ops.is_empty() {
                (0xf, 0xf)
            } else {
                (parse::fence_set(ops[0])?, parse::fence_set(ops[1])?)
            };
            enc(Instr::Fence { pred, succ })
        }
        "ecall" => {
            arity(stmt, &[0])?;
            enc(Instr::Ecall)
        }
        "ebreak" => {
            arity(stmt, &[0])?;
            enc(Instr::Ebreak)
        }
        "nop" => {
            arity(stmt, &[0])?;
            enc(Instr::NOP)
        }
        "mv" => {
            arity(stmt, &[2])?;
            enc(Instr::OpImm { op: AluImmOp::Addi, rd: reg(0)?, rs1: reg(1)?, imm: 0 })
        }
        "not" => {
            arity(stmt, &[2])?;
            enc(Instr::OpImm { op: AluImmOp::Xori, rd: reg(0)?, rs1: reg(1)?, imm: -1 })
        }
        "neg" => {
            arity(stmt, &[2])?;
            enc(Instr::Op { op: AluOp::Sub, rd: reg(0)?, rs1: Reg::ZERO, rs2: reg(1)? })
        }
        "seqz" => {
            arity(stmt, &[2])?;
            enc(Instr::OpImm { op: AluImmOp::Sltiu, rd: reg(0)?, rs1: reg(1)?, imm: 1 })
        }
        "snez" => {
            arity(stmt, &[2])?;
            enc(Instr::Op { op: AluOp::Sltu, rd: reg(0)?, rs1: Reg::ZERO, rs2: reg(1)? })
        }
        "j" => {
            arity(stmt, &[1])?;
            enc(Instr::Jal { rd: Reg::ZERO, offset: target(0)? })
        }
        "call" => {
            arity(stmt, &[1])?;
            enc(Instr::Jal { rd: Reg::RA, offset: target(0)? })
        }
        "jr" => {
            arity(stmt, &[1])?;
            enc(Instr::Jalr { rd: Reg::ZERO, rs1: reg(0)?, offset: 0 })
        }
        "ret" => {
            arity(stmt, &[0])?;
            enc(Instr::Jalr { rd: Reg::ZERO, rs1: Reg::RA, offset: 0 })
        }
        "li" => {
            let rd = reg(0)?;
            let v = li_value(ops[1])?;
            if small_imm(v as i32 as i64) {
                enc(Instr::OpImm { op: AluImmOp::Addi, rd, rs1: Reg::ZERO, imm: v as i32 })
            } else {
                let (hi, lo) = hi_lo(v);
                enc2(Instr::Lui { rd, imm: hi }, Instr::OpImm { op: AluImmOp::Addi, rd, rs1: rd, imm: lo })
            }
        }
        "la" => {
            arity(stmt, &[2])?;
            let rd = reg(0)?;
            let (hi, lo) = hi_lo(layout.label(ops[1])?.wrapping_sub(pc));
            enc2(Instr::Auipc { rd, imm: hi & 0xf_ffff }, Instr::OpImm { op: AluImmOp::Addi, rd, rs1: rd, imm: lo })
        }
        other => Err(AsmErrorKind::UnknownMnemonic(other.to_string())),
    }
}

fn emit_custom(stmt: &Statement, slot: crate::isa::OpcodeSlot, funct3: u8, format: CustomFormat) -> Res<Vec<u8>> {
    let ops = &stmt.operands;
    let v = |i: usize| ops.get(i).map_or(Ok(VReg::V0), |t| parse_vreg(t));
    let x = |i: usize| ops.get(i).map_or(Ok(Reg::ZERO), |t| parse_reg(t));
    match format {
        CustomFormat::IPrime => {
            if ops.len() > 6 {
                return Err(AsmErrorKind::OperandArity { mnemonic: stmt.name.clone(), expected: "at most 6".into(), got: ops.len() });
            }
            enc(Instr::CustomI(CustomI {
                slot,
                funct3,
                vrd1: v(0)?,
                vrd2: v(1)?,
                vrs1: v(2)?,
                vrs2: v(3)?,
                rd: x(4)?,
                rs1: x(5)?,
            }))
        }
        CustomFormat::SPrime => {
            if ops.len() > 5 {
                return Err(AsmErrorKind::OperandArity { mnemonic: stmt.name.clone(), expected: "at most 5".into(), got: ops.len() });
            }
            enc(Instr::CustomS(CustomS { slot, funct3, vrd1: v(0)?, vrs1: v(1)?, rd: x(2)?, rs1: x(3)?, rs2: x(4)? }))
        }
    }
}

fn emit_directive(stmt: &Statement, layout: &Layout<'_>) -> Res<Vec<u8>> {
    let ops = &stmt.operands;
    match stmt.name.as_str() {
        ".word" => {
            let mut out = Vec::with_capacity(4 * ops.len());
            for op in ops {
                let v = layout.value(op)?;
                if !(i32::MIN as i64..=u32::MAX as i64).contains(&v) {
                    return Err(AsmErrorKind::RangeError(format!(".word value {v} does not fit in 32 bits")));
                }
                out.extend_from_slice(&(v as u32).to_le_bytes());
            }
            Ok(out)
        }
        ".byte" => ops
            .iter()
            .map(|op| {
                let v = layout.value(op)?;
                if (-128..256).contains(&v) {
                    Ok(v as u8)
                } else {
                    Err(AsmErrorKind::RangeError(format!(".byte value {v} does not fit in 8 bits")))
                }
            })
            .collect(),
        ".asciz" => {
            let mut out = parse::string_literal(&ops[0])?;
            out.push(0);
            Ok(out)
        }
        // Padding was sized in pass 1 and the image buffer starts zeroed.
        ".space" | ".align" | ".org" => Ok(Vec::new()),
        other => Err(AsmErrorKind::UnknownDirective(other.to_string())),
    }
}

/// Address / word / disassembly listing of the whole image. Words that do
/// not decode are shown as `.word`, so every row assembles back to its word.
pub fn link_and_dump(image: &Image) -> String {
    link_and_dump_with(image, &BuiltinCustoms)
}

pub fn link_and_dump_with(image: &Image, customs: &dyn CustomTable) -> String {
    let mut out = String::new();
    let mut by_addr: BTreeMap<u32, Vec<&str>> = BTreeMap::new();
    for (name, &addr) in &image.symbols {
        by_addr.entry(addr).or_default().push(name);
    }
    let chunks = image.bytes.chunks_exact(4);
    let tail = chunks.remainder();
    for (i, chunk) in chunks.enumerate() {
        let addr = image.base + 4 * i as u32;
        for name in by_addr.get(&addr).into_iter().flatten() {
            let _ = writeln!(out, "{name}:");
        }
        let word = u32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]);
        let _ = writeln!(out, "{addr:08x}: {word:08x}  {}", listing_text(word, customs));
    }
    if !tail.is_empty() {
        let addr = image.base + (image.bytes.len() - tail.len()) as u32;
        let bytes: Vec<String> = tail.iter().map(|b| format!("{b:#04x}")).collect();
        let _ = writeln!(out, "{addr:08x}: {:8}  .byte {}", "", bytes.join(", "));
    }
    out
}

/// Text that assembles back to `word`.
pub fn listing_text(word: u32, customs: &dyn CustomTable) -> String {
    match decode_with(word, customs) {
        Ok(instr) => disassemble_with(&instr, customs),
        Err(_) => format!(".word {word:#010x}"),
    }
}
