use super::instr::*;
use super::{CustomTable, IsaError};

const OP_LUI: u32 = 0x37;
const OP_AUIPC: u32 = 0x17;
const OP_JAL: u32 = 0x6f;
const OP_JALR: u32 = 0x67;
const OP_BRANCH: u32 = 0x63;
const OP_LOAD: u32 = 0x03;
const OP_STORE: u32 = 0x23;
const OP_IMM: u32 = 0x13;
const OP_REG: u32 = 0x33;
const OP_FENCE: u32 = 0x0f;
const OP_SYSTEM: u32 = 0x73;

const ECALL: u32 = 0x0000_0073;
const EBREAK: u32 = 0x0010_0073;

#[inline]
fn bits(word: u32, hi: u32, lo: u32) -> u32 {
    (word >> lo) & ((1u32 << (hi - lo + 1)) - 1)
}

#[inline]
fn sign_extend(value: u32, width: u32) -> i32 {
    let shift = 32 - width;
    ((value << shift) as i32) >> shift
}

fn rd(w: u32) -> Reg {
    Reg::from_field(w >> 7)
}

fn rs1(w: u32) -> Reg {
    Reg::from_field(w >> 15)
}

fn rs2(w: u32) -> Reg {
    Reg::from_field(w >> 20)
}

fn funct3(w: u32) -> u32 {
    bits(w, 14, 12)
}

fn imm_i(w: u32) -> i32 {
    (w as i32) >> 20
}

fn imm_s(w: u32) -> i32 {
    sign_extend((bits(w, 31, 25) << 5) | bits(w, 11, 7), 12)
}

fn imm_b(w: u32) -> i32 {
    let v = (bits(w, 31, 31) << 12) | (bits(w, 7, 7) << 11) | (bits(w, 30, 25) << 5) | (bits(w, 11, 8) << 1);
    sign_extend(v, 13)
}

fn imm_j(w: u32) -> i32 {
    let v = (bits(w, 31, 31) << 20) | (bits(w, 19, 12) << 12) | (bits(w, 20, 20) << 11) | (bits(w, 30, 21) << 1);
    sign_extend(v, 21)
}

/// Decodes `word`, resolving custom opcode slots through `customs`.
pub fn decode_with(word: u32, customs: &dyn CustomTable) -> Result<Instr, IsaError> {
    let illegal = || IsaError::IllegalInstruction(word);
    if word & 0b11 != 0b11 {
        return Err(illegal());
    }
    let opcode = word & 0x7f;
    let f3 = funct3(word);
    let f7 = bits(word, 31, 25);

    let instr = match opcode {
        OP_LUI => Instr::Lui { rd: rd(word), imm: word >> 12 },
        OP_AUIPC => Instr::Auipc { rd: rd(word), imm: word >> 12 },
        OP_JAL => Instr::Jal { rd: rd(word), offset: imm_j(word) },
        OP_JALR if f3 == 0 => Instr::Jalr { rd: rd(word), rs1: rs1(word), offset: imm_i(word) },
        OP_BRANCH => {
            let kind = match f3 {
                0 => BranchKind::Beq,
                1 => BranchKind::Bne,
                4 => BranchKind::Blt,
                5 => BranchKind::Bge,
                6 => BranchKind::Bltu,
                7 => BranchKind::Bgeu,
                _ => return Err(illegal()),
            };
            Instr::Branch { kind, rs1: rs1(word), rs2: rs2(word), offset: imm_b(word) }
        }
        OP_LOAD => {
            let kind = match f3 {
                0 => LoadKind::Lb,
                1 => LoadKind::Lh,
                2 => LoadKind::Lw,
                4 => LoadKind::Lbu,
                5 => LoadKind::Lhu,
                _ => return Err(illegal()),
            };
            Instr::Load { kind, rd: rd(word), rs1: rs1(word), offset: imm_i(word) }
        }
        OP_STORE => {
            let kind = match f3 {
                0 => StoreKind::Sb,
                1 => StoreKind::Sh,
                2 => StoreKind::Sw,
                _ => return Err(illegal()),
            };
            Instr::Store { kind, rs1: rs1(word), rs2: rs2(word), offset: imm_s(word) }
        }
        OP_IMM => {
            let shamt = bits(word, 24, 20) as i32;
            let (op, imm) = match (f3, f7) {
                (0, _) => (AluImmOp::Addi, imm_i(word)),
                (2, _) => (AluImmOp::Slti, imm_i(word)),
                (3, _) => (AluImmOp::Sltiu, imm_i(word)),
                (4, _) => (AluImmOp::Xori, imm_i(word)),
                (6, _) => (AluImmOp::Ori, imm_i(word)),
                (7, _) => (AluImmOp::Andi, imm_i(word)),
                (1, 0x00) => (AluImmOp::Slli, shamt),
                (5, 0x00) => (AluImmOp::Srli, shamt),
                (5, 0x20) => (AluImmOp::Srai, shamt),
                _ => return Err(illegal()),
            };
            Instr::OpImm { op, rd: rd(word), rs1: rs1(word), imm }
        }
        OP_REG => {
            let (rd, rs1, rs2) = (rd(word), rs1(word), rs2(word));
            if f7 == 0x01 {
                let op = match f3 {
                    0 => MulDivOp::Mul,
                    1 => MulDivOp::Mulh,
                    2 => MulDivOp::Mulhsu,
                    3 => MulDivOp::Mulhu,
                    4 => MulDivOp::Div,
                    5 => MulDivOp::Divu,
                    6 => MulDivOp::Rem,
                    _ => MulDivOp::Remu,
                };
                Instr::MulDiv { op, rd, rs1, rs2 }
            } else {
                let op = match (f3, f7) {
                    (0, 0x00) => AluOp::Add,
                    (0, 0x20) => AluOp::Sub,
                    (1, 0x00) => AluOp::Sll,
                    (2, 0x00) => AluOp::Slt,
                    (3, 0x00) => AluOp::Sltu,
                    (4, 0x00) => AluOp::Xor,
                    (5, 0x00) => AluOp::Srl,
                    (5, 0x20) => AluOp::Sra,
                    (6, 0x00) => AluOp::Or,
                    (7, 0x00) => AluOp::And,
                    _ => return Err(illegal()),
                };
                Instr::Op { op, rd, rs1, rs2 }
            }
        }
        // Only the plain (fm = 0) form with zero rd/rs1 is accepted.
        OP_FENCE if f3 == 0 && bits(word, 31, 28) == 0 && bits(word, 19, 15) == 0 && bits(word, 11, 7) == 0 => {
            Instr::Fence { pred: bits(word, 27, 24) as u8, succ: bits(word, 23, 20) as u8 }
        }
        OP_SYSTEM if word == ECALL => Instr::Ecall,
        OP_SYSTEM if word == EBREAK => Instr::Ebreak,
        _ => match OpcodeSlot::from_opcode(opcode) {
            Some(slot) => decode_custom(word, slot, f3 as u8, customs)?,
            None => return Err(illegal()),
        },
    };
    Ok(instr)
}

fn decode_custom(word: u32, slot: OpcodeSlot, funct3: u8, customs: &dyn CustomTable) -> Result<Instr, IsaError> {
    let format = customs
        .format_of(slot, funct3)
        .ok_or(IsaError::IllegalInstruction(word))?;
    let vrd1 = VReg::from_field(word >> 23);
    let vrs1 = VReg::from_field(word >> 20);
    Ok(match format {
        CustomFormat::IPrime => Instr::CustomI(CustomI {
            slot,
            funct3,
            rd: rd(word),
            rs1: rs1(word),
            vrd1,
            vrd2: VReg::from_field(word >> 29),
            vrs1,
            vrs2: VReg::from_field(word >> 26),
        }),
        // Bit 31 is reserved and ignored here.
        CustomFormat::SPrime => Instr::CustomS(CustomS {
            slot,
            funct3,
            rd: rd(word),
            rs1: rs1(word),
            rs2: Reg::from_field(word >> 26),
            vrd1,
            vrs1,
        }),
    })
}

fn check_imm(value: i32, width: u32, what: &str) -> Result<u32, IsaError> {
    let min = -(1i64 << (width - 1));
    let max = (1i64 << (width - 1)) - 1;
    if (value as i64) < min || (value as i64) > max {
        return Err(IsaError::Unencodable(format!("{what} {value} does not fit in {width} signed bits")));
    }
    Ok((value as u32) & ((1u32 << width) - 1))
}

fn check_even(value: i32, what: &str) -> Result<(), IsaError> {
    if value & 1 != 0 {
        return Err(IsaError::Unencodable(format!("{what} {value} is not a multiple of 2")));
    }
    Ok(())
}

fn r_type(opcode: u32, rd: Reg, f3: u32, rs1: Reg, rs2: Reg, f7: u32) -> u32 {
    (f7 << 25) | ((rs2.index() as u32) << 20) | ((rs1.index() as u32) << 15) | (f3 << 12) | ((rd.index() as u32) << 7) | opcode
}

fn i_type(opcode: u32, rd: Reg, f3: u32, rs1: Reg, imm12: u32) -> u32 {
    (imm12 << 20) | ((rs1.index() as u32) << 15) | (f3 << 12) | ((rd.index() as u32) << 7) | opcode
}

fn s_type(opcode: u32, f3: u32, rs1: Reg, rs2: Reg, imm12: u32) -> u32 {
    ((imm12 >> 5) << 25)
        | ((rs2.index() as u32) << 20)
        | ((rs1.index() as u32) << 15)
        | (f3 << 12)
        | ((imm12 & 0x1f) << 7)
        | opcode
}

/// Encodes `instr` into its 32-bit machine word.
pub fn encode(instr: &Instr) -> Result<u32, IsaError> {
    let word = match *instr {
        Instr::Lui { rd, imm } | Instr::Auipc { rd, imm } => {
            if imm > 0xf_ffff {
                return Err(IsaError::Unencodable(format!("upper immediate {imm:#x} exceeds 20 bits")));
            }
            let opcode = if matches!(instr, Instr::Lui { .. }) { OP_LUI } else { OP_AUIPC };
            (imm << 12) | ((rd.index() as u32) << 7) | opcode
        }
        Instr::Jal { rd, offset } => {
            check_even(offset, "jump offset")?;
            let v = check_imm(offset, 21, "jump offset")?;
            (bits(v, 20, 20) << 31)
                | (bits(v, 10, 1) << 21)
                | (bits(v, 11, 11) << 20)
                | (bits(v, 19, 12) << 12)
                | ((rd.index() as u32) << 7)
                | OP_JAL
        }
        Instr::Jalr { rd, rs1, offset } => i_type(OP_JALR, rd, 0, rs1, check_imm(offset, 12, "offset")?),
        Instr::Branch { kind, rs1, rs2, offset } => {
            check_even(offset, "branch offset")?;
            let v = check_imm(offset, 13, "branch offset")?;
            let f3 = match kind {
                BranchKind::Beq => 0,
                BranchKind::Bne => 1,
                BranchKind::Blt => 4,
                BranchKind::Bge => 5,
                BranchKind::Bltu => 6,
                BranchKind::Bgeu => 7,
            };
            (bits(v, 12, 12) << 31)
                | (bits(v, 10, 5) << 25)
                | ((rs2.index() as u32) << 20)
                | ((rs1.index() as u32) << 15)
                | (f3 << 12)
                | (bits(v, 4, 1) << 8)
                | (bits(v, 11, 11) << 7)
                | OP_BRANCH
        }
        Instr::Load { kind, rd, rs1, offset } => {
            let f3 = match kind {
                LoadKind::Lb => 0,
                LoadKind::Lh => 1,
                LoadKind::Lw => 2,
                LoadKind::Lbu => 4,
                LoadKind::Lhu => 5,
            };
            i_type(OP_LOAD, rd, f3, rs1, check_imm(offset, 12, "offset")?)
        }
        Instr::Store { kind, rs1, rs2, offset } => {
            let f3 = match kind {
                StoreKind::Sb => 0,
                StoreKind::Sh => 1,
                StoreKind::Sw => 2,
            };
            s_type(OP_STORE, f3, rs1, rs2, check_imm(offset, 12, "offset")?)
        }
        Instr::OpImm { op, rd, rs1, imm } => {
            if op.is_shift() {
                if !(0..32).contains(&imm) {
                    return Err(IsaError::Unencodable(format!("shift amount {imm} out of range")));
                }
                let (f3, f7) = match op {
                    AluImmOp::Slli => (1, 0x00),
                    AluImmOp::Srli => (5, 0x00),
                    _ => (5, 0x20),
                };
                i_type(OP_IMM, rd, f3, rs1, (f7 << 5) | imm as u32)
            } else {
                let f3 = match op {
                    AluImmOp::Addi => 0,
                    AluImmOp::Slti => 2,
                    AluImmOp::Sltiu => 3,
                    AluImmOp::Xori => 4,
                    AluImmOp::Ori => 6,
                    _ => 7,
                };
                i_type(OP_IMM, rd, f3, rs1, check_imm(imm, 12, "immediate")?)
            }
        }
        Instr::Op { op, rd, rs1, rs2 } => {
            let (f3, f7) = match op {
                AluOp::Add => (0, 0x00),
                AluOp::Sub => (0, 0x20),
                AluOp::Sll => (1, 0x00),
                AluOp::Slt => (2, 0x00),
                AluOp::Sltu => (3, 0x00),
                AluOp::Xor => (4, 0x00),
                AluOp::Srl => (5, 0x00),
                AluOp::Sra => (5, 0x20),
                AluOp::Or => (6, 0x00),
                AluOp::And => (7, 0x00),
            };
            r_type(OP_REG, rd, f3, rs1, rs2, f7)
        }
        Instr::MulDiv { op, rd, rs1, rs2 } => {
            let f3 = match op {
                MulDivOp::Mul => 0,
                MulDivOp::Mulh => 1,
                MulDivOp::Mulhsu => 2,
                MulDivOp::Mulhu => 3,
                MulDivOp::Div => 4,
                MulDivOp::Divu => 5,
                MulDivOp::Rem => 6,
                MulDivOp::Remu => 7,
            };
            r_type(OP_REG, rd, f3, rs1, rs2, 0x01)
        }
        Instr::Fence { pred, succ } => {
            if pred > 0xf || succ > 0xf {
                return Err(IsaError::Unencodable("fence sets are 4 bits wide".into()));
            }
            ((pred as u32) << 24) | ((succ as u32) << 20) | OP_FENCE
        }
        Instr::Ecall => ECALL,
        Instr::Ebreak => EBREAK,
        Instr::CustomI(c) => {
            check_funct3(c.funct3)?;
            ((c.vrd2.index() as u32) << 29)
                | ((c.vrs2.index() as u32) << 26)
                | ((c.vrd1.index() as u32) << 23)
                | ((c.vrs1.index() as u32) << 20)
                | ((c.rs1.index() as u32) << 15)
                | ((c.funct3 as u32) << 12)
                | ((c.rd.index() as u32) << 7)
                | c.slot.opcode()
        }
        Instr::CustomS(c) => {
            check_funct3(c.funct3)?;
            ((c.rs2.index() as u32) << 26)
                | ((c.vrd1.index() as u32) << 23)
                | ((c.vrs1.index() as u32) << 20)
                | ((c.rs1.index() as u32) << 15)
                | ((c.funct3 as u32) << 12)
                | ((c.rd.index() as u32) << 7)
                | c.slot.opcode()
        }
    };
    Ok(word)
}

fn check_funct3(funct3: u8) -> Result<(), IsaError> {
    if funct3 > 7 {
        Err(IsaError::Unencodable(format!("funct3 {funct3} exceeds 3 bits")))
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::isa::{decode, BuiltinCustoms};

    #[test]
    fn immediate_extractors_sign_extend() {
        // beq x0, x0, -4
        assert_eq!(imm_b(0xfe00_0ee3), -4);
        // jal x0, -8
        assert_eq!(imm_j(0xff9f_f06f), -8);
        // sw x1, -1(x2)
        assert_eq!(imm_s(0xfe11_2fa3), -1);
    }

    #[test]
    fn rejects_compressed_and_unknown_opcodes() {
        assert!(matches!(decode(0x0000_0001), Err(IsaError::IllegalInstruction(_))));
        assert!(matches!(decode(0x0000_0007), Err(IsaError::IllegalInstruction(_))));
        assert!(matches!(decode(0xffff_ffff), Err(IsaError::IllegalInstruction(_))));
    }

    #[test]
    fn custom_slot_with_unregistered_funct3_is_illegal() {
        // custom-2, funct3 = 5 has no built-in.
        let word = (5 << 12) | OpcodeSlot::new(2).unwrap().opcode();
        assert_eq!(decode_with(word, &BuiltinCustoms), Err(IsaError::IllegalInstruction(word)));
    }

    #[test]
    fn sprime_reserved_bit_is_ignored_on_decode() {
        let word = (1 << 23) | (10 << 15) | OpcodeSlot::new(0).unwrap().opcode();
        let a = decode(word).unwrap();
        let b = decode(word | 0x8000_0000).unwrap();
        assert_eq!(a, b);
        assert_eq!(encode(&b).unwrap(), word);
    }

    #[test]
    fn out_of_range_immediates_are_unencodable() {
        let r = Reg::new(1).unwrap();
        let bad = Instr::OpImm { op: AluImmOp::Addi, rd: r, rs1: r, imm: 2048 };
        assert!(matches!(encode(&bad), Err(IsaError::Unencodable(_))));
        let odd = Instr::Branch { kind: BranchKind::Beq, rs1: r, rs2: r, offset: 3 };
        assert!(matches!(encode(&odd), Err(IsaError::Unencodable(_))));
        let shift = Instr::OpImm { op: AluImmOp::Slli, rd: r, rs1: r, imm: 32 };
        assert!(matches!(encode(&shift), Err(IsaError::Unencodable(_))));
    }
}
