use proptest::prelude::*;
use vexsim::asm::{assemble, link_and_dump};
use vexsim::isa::{decode, disassemble, encode, Instr};

proptest! {
    #[test]
    fn accepted_words_reencode(word in any::<u32>()) {
        if let Ok(instr) = decode(word) {
            let canonical = if matches!(instr, Instr::CustomS(_)) { word & !(1 << 31) } else { word };
            prop_assert_eq!(encode(&decode(canonical).unwrap()).unwrap(), canonical);
        }
    }

    #[test]
    fn disassembly_reassembles(word in any::<u32>()) {
        if let Ok(instr) = decode(word) {
            // Branch and jump offsets are relative, so assemble at address 0.
            let text = disassemble(&instr);
            let img = assemble(&text).unwrap();
            prop_assert_eq!(decode(img.word_at(0).unwrap()).unwrap(), instr);
        }
    }

    #[test]
    fn immediates_in_range_assemble(imm in -2048i32..2048, rd in 0u32..32, rs1 in 0u32..32) {
        let img = assemble(&format!("addi x{rd}, x{rs1}, {imm}")).unwrap();
        let listing = link_and_dump(&img);
        let needle = imm.to_string();
        prop_assert!(listing.contains(&needle));
        let expected = Instr::OpImm {
            op: vexsim::isa::AluImmOp::Addi,
            rd: vexsim::isa::Reg::new(rd).unwrap(),
            rs1: vexsim::isa::Reg::new(rs1).unwrap(),
            imm,
        };
        prop_assert_eq!(decode(img.word_at(0).unwrap()).unwrap(), expected);
    }
}
