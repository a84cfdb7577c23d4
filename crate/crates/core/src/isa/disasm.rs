use super::instr::*;
use super::{BuiltinCustoms, CustomTable};

/// Renders `instr` in the assembler's syntax using the built-in custom names.
pub fn disassemble(instr: &Instr) -> String {
    disassemble_with(instr, &BuiltinCustoms)
}

pub fn disassemble_with(instr: &Instr, customs: &dyn CustomTable) -> String {
    match *instr {
        Instr::Lui { rd, imm } => format!("lui {rd}, {imm:#x}"),
        Instr::Auipc { rd, imm } => format!("auipc {rd}, {imm:#x}"),
        Instr::Jal { rd, offset } => format!("jal {rd}, {offset}"),
        Instr::Jalr { rd, rs1, offset } => format!("jalr {rd}, {offset}({rs1})"),
        Instr::Branch { kind, rs1, rs2, offset } => {
            let name = match kind {
                BranchKind::Beq => "beq",
                BranchKind::Bne => "bne",
                BranchKind::Blt => "blt",
                BranchKind::Bge => "bge",
                BranchKind::Bltu => "bltu",
                BranchKind::Bgeu => "bgeu",
            };
            format!("{name} {rs1}, {rs2}, {offset}")
        }
        Instr::Load { kind, rd, rs1, offset } => {
            let name = match kind {
                LoadKind::Lb => "lb",
                LoadKind::Lh => "lh",
                LoadKind::Lw => "lw",
                LoadKind::Lbu => "lbu",
                LoadKind::Lhu => "lhu",
            };
            format!("{name} {rd}, {offset}({rs1})")
        }
        Instr::Store { kind, rs1, rs2, offset } => {
            let name = match kind {
                StoreKind::Sb => "sb",
                StoreKind::Sh => "sh",
                StoreKind::Sw => "sw",
            };
            format!("{name} {rs2}, {offset}({rs1})")
        }
        Instr::OpImm { op, rd, rs1, imm } => {
            let name = match op {
                AluImmOp::Addi => "addi",
                AluImmOp::Slti => "slti",
                AluImmOp::Sltiu => "sltiu",
                AluImmOp::Xori => "xori",
                AluImmOp::Ori => "ori",
                AluImmOp::Andi => "andi",
                AluImmOp::Slli => "slli",
                AluImmOp::Srli => "srli",
                AluImmOp::Srai => "srai",
            };
            format!("{name} {rd}, {rs1}, {imm}")
        }
        Instr::Op { op, rd, rs1, rs2 } => {
            let name = match op {
                AluOp::Add => "add",
                AluOp::Sub => "sub",
                AluOp::Sll => "sll",
                AluOp::Slt => "slt",
                AluOp::Sltu => "sltu",
                AluOp::Xor => "xor",
                AluOp::Srl => "srl",
                AluOp::Sra => "sra",
                AluOp::Or => "or",
                AluOp::And => "and",
            };
            format!("{name} {rd}, {rs1}, {rs2}")
        }
        Instr::MulDiv { op, rd, rs1, rs2 } => {
            let name = match op {
                MulDivOp::Mul => "mul",
                MulDivOp::Mulh => "mulh",
                MulDivOp::Mulhsu => "mulhsu",
                MulDivOp::Mulhu => "mulhu",
                MulDivOp::Div => "div",
                MulDivOp::Divu => "divu",
                MulDivOp::Rem => "rem",
                MulDivOp::Remu => "remu",
            };
            format!("{name} {rd}, {rs1}, {rs2}")
        }
        Instr::Fence { pred, succ } => format!("fence {}, {}", fence_set(pred), fence_set(succ)),
        Instr::Ecall => "ecall".to_string(),
        Instr::Ebreak => "ebreak".to_string(),
        Instr::CustomI(c) => format!(
            "{} {}, {}, {}, {}, {}, {}",
            custom_name(customs, c.slot, c.funct3),
            c.vrd1,
            c.vrd2,
            c.vrs1,
            c.vrs2,
            c.rd,
            c.rs1
        ),
        Instr::CustomS(c) => format!(
            "{} {}, {}, {}, {}, {}",
            custom_name(customs, c.slot, c.funct3),
            c.vrd1,
            c.vrs1,
            c.rd,
            c.rs1,
            c.rs2
        ),
    }
}

fn custom_name(customs: &dyn CustomTable, slot: OpcodeSlot, funct3: u8) -> String {
    customs
        .mnemonic_of(slot, funct3)
        .map(str::to_owned)
        .unwrap_or_else(|| format!("c{}_f{}", slot.index(), funct3))
}

fn fence_set(bits: u8) -> String {
    if bits == 0 {
        return "0".to_string();
    }
    "iorw"
        .chars()
        .enumerate()
        .filter(|(i, _)| bits & (8 >> i) != 0)
        .map(|(_, c)| c)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::isa::decode;

    #[test]
    fn renders_custom_iprime_with_all_six_operands() {
        let instr = decode(0x00a0_005b).unwrap();
        assert_eq!(disassemble(&instr), "c2_sort v1, v0, v2, v0, x0, x0");
    }

    #[test]
    fn renders_custom_sprime_with_all_five_operands() {
        let word = 0x0b | (10 << 15) | (1 << 23) | (11 << 26);
        assert_eq!(disassemble(&decode(word).unwrap()), "c0_lv v1, v0, x0, x10, x11");
    }

    #[test]
    fn renders_standard_forms() {
        // add x3, x1, x2
        assert_eq!(disassemble(&decode(0x0020_81b3).unwrap()), "add x3, x1, x2");
        // lw x5, 8(x2)
        assert_eq!(disassemble(&decode(0x0081_2283).unwrap()), "lw x5, 8(x2)");
        assert_eq!(disassemble(&decode(0x0ff0_000f).unwrap()), "fence iorw, iorw");
    }
}
