use crate::isa::{AluImmOp, AluOp, BranchKind, MulDivOp};

pub fn alu(op: AluOp, a: u32, b: u32) -> u32 {
    let shamt = b & 31;
    match op {
        AluOp::Add => a.wrapping_add(b),
        AluOp::Sub => a.wrapping_sub(b),
        AluOp::Sll => a << shamt,
        AluOp::Slt => ((a as i32) < (b as i32)) as u32,
        AluOp::Sltu => (a < b) as u32,
        AluOp::Xor => a ^ b,
        AluOp::Srl => a >> shamt,
        AluOp::Sra => ((a as i32) >> shamt) as u32,
        AluOp::Or => a | b,
        AluOp::And => a & b,
    }
}

pub fn alu_imm(op: AluImmOp, a: u32, imm: i32) -> u32 {
    let b = imm as u32;
    match op {
        AluImmOp::Addi => alu(AluOp::Add, a, b),
        AluImmOp::Slti => alu(AluOp::Slt, a, b),
        AluImmOp::Sltiu => alu(AluOp::Sltu, a, b),
        AluImmOp::Xori => a ^ b,
        AluImmOp::Ori => a | b,
        AluImmOp::Andi => a & b,
        AluImmOp::Slli => alu(AluOp::Sll, a, b),
        AluImmOp::Srli => alu(AluOp::Srl, a, b),
        AluImmOp::Srai => alu(AluOp::Sra, a, b),
    }
}

/// RV32M results, including the defined values for division by zero and
/// signed overflow.
pub fn muldiv(op: MulDivOp, a: u32, b: u32) -> u32 {
    let (sa, sb) = (a as i32, b as i32);
    match op {
        MulDivOp::Mul => a.wrapping_mul(b),
        MulDivOp::Mulh => ((sa as i64 * sb as i64) >> 32) as u32,
        MulDivOp::Mulhsu => ((sa as i64 * b as i64) >> 32) as u32,
        MulDivOp::Mulhu => ((a as u64 * b as u64) >> 32) as u32,
        MulDivOp::Div => match b {
            0 => u32::MAX,
            _ => sa.wrapping_div(sb) as u32,
        },
        MulDivOp::Divu => a.checked_div(b).unwrap_or(u32::MAX),
        MulDivOp::Rem => match b {
            0 => a,
            _ => sa.wrapping_rem(sb) as u32,
        },
        MulDivOp::Remu => a.checked_rem(b).unwrap_or(a),
    }
}

pub fn branch_taken(kind: BranchKind, a: u32, b: u32) -> bool {
    match kind {
        BranchKind::Beq => a == b,
        BranchKind::Bne => a != b,
        BranchKind::Blt => (a as i32) < (b as i32),
        BranchKind::Bge => (a as i32) >= (b as i32),
        BranchKind::Bltu => a < b,
        BranchKind::Bgeu => a >= b,
    }
}
