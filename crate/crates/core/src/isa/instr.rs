use std::fmt;

use super::IsaError;

/// Base integer register `x0`..`x31`. `x0` reads as zero and ignores writes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Reg(u8);

impl Reg {
    pub const ZERO: Reg = Reg(0);
    pub const RA: Reg = Reg(1);
    pub const SP: Reg = Reg(2);
    pub const A0: Reg = Reg(10);
    pub const A1: Reg = Reg(11);
    pub const A2: Reg = Reg(12);
    pub const A3: Reg = Reg(13);
    pub const A7: Reg = Reg(17);

    pub fn new(index: u32) -> Result<Self, IsaError> {
        if index < 32 {
            Ok(Reg(index as u8))
        } else {
            Err(IsaError::Unencodable(format!("base register index {index} out of range")))
        }
    }

    /// Builds a register from the low five bits of `bits`.
    pub(crate) const fn from_field(bits: u32) -> Self {
        Reg((bits & 0x1f) as u8)
    }

    pub const fn index(self) -> usize {
        self.0 as usize
    }

    pub const fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for Reg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{}", self.0)
    }
}

/// Vector register `v0`..`v7`. `v0` reads as an all-zero vector and ignores writes,
/// which lets any unused operand position be aliased to it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct VReg(u8);

impl VReg {
    pub const V0: VReg = VReg(0);
    pub const COUNT: usize = 8;

    pub fn new(index: u32) -> Result<Self, IsaError> {
        if index < Self::COUNT as u32 {
            Ok(VReg(index as u8))
        } else {
            Err(IsaError::Unencodable(format!("vector register index {index} out of range")))
        }
    }

    pub(crate) const fn from_field(bits: u32) -> Self {
        VReg((bits & 0x7) as u8)
    }

    pub const fn index(self) -> usize {
        self.0 as usize
    }

    pub const fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for VReg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

/// One of the four major opcodes RISC-V reserves for custom extensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OpcodeSlot(u8);

impl OpcodeSlot {
    const OPCODES: [u32; 4] = [0b000_1011, 0b010_1011, 0b101_1011, 0b111_1011];

    pub fn new(slot: u32) -> Result<Self, IsaError> {
        if slot < 4 {
            Ok(OpcodeSlot(slot as u8))
        } else {
            Err(IsaError::Unencodable(format!("custom opcode slot {slot} out of range")))
        }
    }

    pub fn from_opcode(opcode: u32) -> Option<Self> {
        Self::OPCODES
            .iter()
            .position(|&op| op == opcode)
            .map(|i| OpcodeSlot(i as u8))
    }

    pub const fn opcode(self) -> u32 {
        Self::OPCODES[self.0 as usize]
    }

    pub const fn index(self) -> u8 {
        self.0
    }
}

impl fmt::Display for OpcodeSlot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "custom-{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BranchKind {
    Beq,
    Bne,
    Blt,
    Bge,
    Bltu,
    Bgeu,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LoadKind {
    Lb,
    Lh,
    Lw,
    Lbu,
    Lhu,
}

impl LoadKind {
    pub const fn width_bytes(self) -> usize {
        match self {
            LoadKind::Lb | LoadKind::Lbu => 1,
            LoadKind::Lh | LoadKind::Lhu => 2,
            LoadKind::Lw => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StoreKind {
    Sb,
    Sh,
    Sw,
}

impl StoreKind {
    pub const fn width_bytes(self) -> usize {
        match self {
            StoreKind::Sb => 1,
            StoreKind::Sh => 2,
            StoreKind::Sw => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AluImmOp {
    Addi,
    Slti,
    Sltiu,
    Xori,
    Ori,
    Andi,
    Slli,
    Srli,
    Srai,
}

impl AluImmOp {
    pub const fn is_shift(self) -> bool {
        matches!(self, AluImmOp::Slli | AluImmOp::Srli | AluImmOp::Srai)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AluOp {
    Add,
    Sub,
    Sll,
    Slt,
    Sltu,
    Xor,
    Srl,
    Sra,
    Or,
    And,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MulDivOp {
    Mul,
    Mulh,
    Mulhsu,
    Mulhu,
    Div,
    Divu,
    Rem,
    Remu,
}

impl MulDivOp {
    pub const fn is_division(self) -> bool {
        matches!(self, MulDivOp::Div | MulDivOp::Divu | MulDivOp::Rem | MulDivOp::Remu)
    }
}

/// Layout of a custom instruction word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CustomFormat {
    /// I': `rd`, `rs1` and four vector names packed into the immediate span.
    IPrime,
    /// S': like I' but `vrs2`/`vrd2` are traded for a second base source `rs2`.
    SPrime,
}

/// I'-type custom instruction: six register operands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CustomI {
    pub slot: OpcodeSlot,
    pub funct3: u8,
    pub rd: Reg,
    pub rs1: Reg,
    pub vrd1: VReg,
    pub vrd2: VReg,
    pub vrs1: VReg,
    pub vrs2: VReg,
}

/// S'-type custom instruction: five register operands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CustomS {
    pub slot: OpcodeSlot,
    pub funct3: u8,
    pub rd: Reg,
    pub rs1: Reg,
    pub rs2: Reg,
    pub vrd1: VReg,
    pub vrs1: VReg,
}

/// A decoded RV32IM or custom vector instruction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Instr {
    /// `imm` is the 20-bit upper immediate field (not shifted).
    Lui { rd: Reg, imm: u32 },
    Auipc { rd: Reg, imm: u32 },
    Jal { rd: Reg, offset: i32 },
    Jalr { rd: Reg, rs1: Reg, offset: i32 },
    Branch { kind: BranchKind, rs1: Reg, rs2: Reg, offset: i32 },
    Load { kind: LoadKind, rd: Reg, rs1: Reg, offset: i32 },
    Store { kind: StoreKind, rs1: Reg, rs2: Reg, offset: i32 },
    /// For shifts `imm` is the shift amount.
    OpImm { op: AluImmOp, rd: Reg, rs1: Reg, imm: i32 },
    Op { op: AluOp, rd: Reg, rs1: Reg, rs2: Reg },
    MulDiv { op: MulDivOp, rd: Reg, rs1: Reg, rs2: Reg },
    /// `pred`/`succ` are the 4-bit IORW sets.
    Fence { pred: u8, succ: u8 },
    Ecall,
    Ebreak,
    CustomI(CustomI),
    CustomS(CustomS),
}

impl Instr {
    pub const NOP: Instr = Instr::OpImm { op: AluImmOp::Addi, rd: Reg::ZERO, rs1: Reg::ZERO, imm: 0 };

    pub fn is_custom(&self) -> bool {
        matches!(self, Instr::CustomI(_) | Instr::CustomS(_))
    }
}
