//! Test-side oracles that share no code with the simulator: a plain RV32IM
//! interpreter working on raw instruction bits, and a generator of random
//! programs that cannot trap.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vexsim::config::SimConfig;
use vexsim::cpu::Simulator;
use vexsim::image::Image;
use vexsim::isa::Reg;

/// Where generated programs keep their data; `x31` always holds it.
pub const DATA_BASE: u32 = 0x1_0000;
pub const DATA_LEN: usize = 4096;
const BASE_REG: u32 = 31;

fn r_type(f7: u32, rs2: u32, rs1: u32, f3: u32, rd: u32, op: u32) -> u32 {
    (f7 << 25) | (rs2 << 20) | (rs1 << 15) | (f3 << 12) | (rd << 7) | op
}

fn i_type(imm: i32, rs1: u32, f3: u32, rd: u32, op: u32) -> u32 {
    (((imm as u32) & 0xfff) << 20) | (rs1 << 15) | (f3 << 12) | (rd << 7) | op
}

fn s_type(imm: i32, rs2: u32, rs1: u32, f3: u32) -> u32 {
    let imm = imm as u32;
    (((imm >> 5) & 0x7f) << 25) | (rs2 << 20) | (rs1 << 15) | (f3 << 12) | ((imm & 0x1f) << 7) | 0x23
}

fn b_type(imm: i32, rs2: u32, rs1: u32, f3: u32) -> u32 {
    let imm = imm as u32;
    (((imm >> 12) & 1) << 31)
        | (((imm >> 5) & 0x3f) << 25)
        | (rs2 << 20)
        | (rs1 << 15)
        | (f3 << 12)
        | (((imm >> 1) & 0xf) << 8)
        | (((imm >> 11) & 1) << 7)
        | 0x63
}

fn j_type(imm: i32, rd: u32) -> u32 {
    let imm = imm as u32;
    (((imm >> 20) & 1) << 31)
        | (((imm >> 1) & 0x3ff) << 21)
        | (((imm >> 11) & 1) << 20)
        | (((imm >> 12) & 0xff) << 12)
        | (rd << 7)
        | 0x6f
}

/// Random trap-free RV32IM program of `len` instructions plus the exit
/// sequence. Control flow only moves forward, so it always terminates.
pub fn random_program(seed: u64, len: usize) -> Vec<u32> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut words = vec![(DATA_BASE >> 12 << 12) | (BASE_REG << 7) | 0x37]; // lui x31, DATA_BASE
    let exit_at = len + 1;
    let mut targets = std::collections::HashSet::new();
    while words.len() < exit_at {
        let i = words.len();
        let rd = rng.random_range(0..31);
        let rs1 = rng.random_range(0..32);
        let rs2 = rng.random_range(0..32);
        let room = (exit_at - i) as i32;
        let w = match rng.random_range(0..100) {
            0..=24 => {
                let (f7, f3) = match rng.random_range(0..10) {
                    0 => (0x20, 0),
                    1 => (0x20, 5),
                    n => (0, n as u32 - 2),
                };
                r_type(f7, rs2, rs1, f3, rd, 0x33)
            }
            25..=34 => r_type(1, rs2, rs1, rng.random_range(0..8), rd, 0x33),
            35..=54 => match rng.random_range(0..9) {
                0 => r_type(0, rng.random_range(0..32), rs1, 1, rd, 0x13),
                1 => r_type(0, rng.random_range(0..32), rs1, 5, rd, 0x13),
                2 => r_type(0x20, rng.random_range(0..32), rs1, 5, rd, 0x13),
                n => {
                    let f3 = [0, 2, 3, 4, 6, 7][n - 3];
                    i_type(rng.random_range(-2048..2048), rs1, f3, rd, 0x13)
                }
            },
            55..=59 => (rng.random::<u32>() & 0xffff_f000) | (rd << 7) | 0x37,
            60..=62 => (rng.random::<u32>() & 0xffff_f000) | (rd << 7) | 0x17,
            63..=74 => {
                let (f3, width) = [(0, 1), (1, 2), (2, 4), (4, 1), (5, 2)][rng.random_range(0..5)];
                let off = rng.random_range(0..(DATA_LEN / width) as i32 - 1) * width as i32;
                let off = off.min(2047 / width as i32 * width as i32);
                i_type(off, BASE_REG, f3, rd, 0x03)
            }
            75..=84 => {
                let (f3, width) = [(0, 1), (1, 2), (2, 4)][rng.random_range(0..3)];
                let off = rng.random_range(0..2048 / width) * width;
                s_type(off, rs2, BASE_REG, f3)
            }
            85..=94 => {
                let f3 = [0, 1, 4, 5, 6, 7][rng.random_range(0..6)];
                let k = rng.random_range(1..=room.min(16));
                targets.insert(i + k as usize);
                b_type(4 * k, rs2, rs1, f3)
            }
            95..=97 => {
                let k = rng.random_range(1..=room.min(16));
                targets.insert(i + k as usize);
                j_type(4 * k, rd)
            }
            // The jalr must not be a branch target, or x30 would be stale.
            _ if room >= 3 && !targets.contains(&(i + 1)) => {
                // auipc x30, 0 ; jalr rd, 12(x30): skips the next instruction.
                words.push((30 << 7) | 0x17);
                targets.insert(i + 3);
                i_type(12, 30, 0, rd, 0x67)
            }
            _ => 0x13,
        };
        words.push(w);
    }
    words.truncate(exit_at);
    words.push(i_type(93, 0, 0, 17, 0x13)); // addi a7, x0, 93
    words.push(0x73);
    words
}

pub fn program_image(words: &[u32]) -> Image {
    Image {
        base: 0,
        entry: 0,
        bytes: words.iter().flat_map(|w| w.to_le_bytes()).collect(),
        symbols: Default::default(),
    }
}

/// Reference interpreter state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RefState {
    pub pc: u32,
    pub x: [u32; 32],
    pub data: Vec<u8>,
    pub retired: u64,
    pub exit_code: Option<i32>,
}

fn sext(value: u32, bits: u32) -> i32 {
    ((value << (32 - bits)) as i32) >> (32 - bits)
}

impl RefState {
    pub fn new(x: [u32; 32]) -> Self {
        RefState { pc: 0, x, data: vec![0; DATA_LEN], retired: 0, exit_code: None }
    }

    fn addr(&self, a: u32, width: usize) -> usize {
        let off = a.wrapping_sub(DATA_BASE) as usize;
        assert!(off + width <= DATA_LEN, "generator produced an access outside the data window: {a:#x}");
        off
    }

    fn load(&self, a: u32, width: usize) -> u32 {
        let o = self.addr(a, width);
        let mut v = 0u32;
        for i in 0..width {
            v |= (self.data[o + i] as u32) << (8 * i);
        }
        v
    }

    fn store(&mut self, a: u32, width: usize, v: u32) {
        let o = self.addr(a, width);
        for i in 0..width {
            self.data[o + i] = (v >> (8 * i)) as u8;
        }
    }

    /// Runs until the exit host call; panics on anything the generator
    /// should never emit.
    pub fn run(&mut self, program: &[u32], limit: u64) {
        while self.exit_code.is_none() {
            assert!(self.retired < limit, "reference run did not finish");
            let w = program[(self.pc / 4) as usize];
            self.step(w);
        }
    }

    fn step(&mut self, w: u32) {
        let op = w & 0x7f;
        let rd = ((w >> 7) & 31) as usize;
        let f3 = (w >> 12) & 7;
        let rs1 = self.x[((w >> 15) & 31) as usize];
        let rs2 = self.x[((w >> 20) & 31) as usize];
        let f7 = w >> 25;
        let imm_i = sext(w >> 20, 12);
        let mut next = self.pc.wrapping_add(4);
        let mut result: Option<u32> = None;
        match op {
            0x37 => result = Some(w & 0xffff_f000),
            0x17 => result = Some(self.pc.wrapping_add(w & 0xffff_f000)),
            0x6f => {
                let imm = ((w >> 31) << 20) | (((w >> 12) & 0xff) << 12) | (((w >> 20) & 1) << 11) | (((w >> 21) & 0x3ff) << 1);
                result = Some(next);
                next = self.pc.wrapping_add(sext(imm, 21) as u32);
            }
            0x67 => {
                result = Some(next);
                next = rs1.wrapping_add(imm_i as u32) & !1;
            }
            0x63 => {
                let imm = ((w >> 31) << 12) | (((w >> 7) & 1) << 11) | (((w >> 25) & 0x3f) << 5) | (((w >> 8) & 0xf) << 1);
                let taken = match f3 {
                    0 => rs1 == rs2,
                    1 => rs1 != rs2,
                    4 => (rs1 as i32) < (rs2 as i32),
                    5 => (rs1 as i32) >= (rs2 as i32),
                    6 => rs1 < rs2,
                    7 => rs1 >= rs2,
                    _ => panic!("bad branch {w:#x}"),
                };
                if taken {
                    next = self.pc.wrapping_add(sext(imm, 13) as u32);
                }
            }
            0x03 => {
                let a = rs1.wrapping_add(imm_i as u32);
                result = Some(match f3 {
                    0 => sext(self.load(a, 1), 8) as u32,
                    1 => sext(self.load(a, 2), 16) as u32,
                    2 => self.load(a, 4),
                    4 => self.load(a, 1),
                    5 => self.load(a, 2),
                    _ => panic!("bad load {w:#x}"),
                });
            }
            0x23 => {
                let imm = sext(((w >> 25) << 5) | ((w >> 7) & 31), 12);
                let a = rs1.wrapping_add(imm as u32);
                match f3 {
                    0 => self.store(a, 1, rs2),
                    1 => self.store(a, 2, rs2),
                    2 => self.store(a, 4, rs2),
                    _ => panic!("bad store {w:#x}"),
                }
            }
            0x13 => {
                let imm = imm_i as u32;
                let sh = (w >> 20) & 31;
                result = Some(match f3 {
                    0 => rs1.wrapping_add(imm),
                    1 => rs1 << sh,
                    2 => ((rs1 as i32) < imm_i) as u32,
                    3 => (rs1 < imm) as u32,
                    4 => rs1 ^ imm,
                    5 if f7 == 0x20 => ((rs1 as i32) >> sh) as u32,
                    5 => rs1 >> sh,
                    6 => rs1 | imm,
                    _ => rs1 & imm,
                });
            }
            0x33 if f7 == 1 => {
                let (a, b) = (rs1 as i32, rs2 as i32);
                result = Some(match f3 {
                    0 => rs1.wrapping_mul(rs2),
                    1 => ((a as i64 * b as i64) >> 32) as u32,
                    2 => ((a as i64 * rs2 as i64) >> 32) as u32,
                    3 => ((rs1 as u64 * rs2 as u64) >> 32) as u32,
                    4 if b == 0 => u32::MAX,
                    4 if a == i32::MIN && b == -1 => a as u32,
                    4 => (a / b) as u32,
                    5 if rs2 == 0 => u32::MAX,
                    5 => rs1 / rs2,
                    6 if b == 0 => rs1,
                    6 if a == i32::MIN && b == -1 => 0,
                    6 => (a % b) as u32,
                    _ if rs2 == 0 => rs1,
                    _ => rs1 % rs2,
                });
            }
            0x33 => {
                let sh = rs2 & 31;
                result = Some(match (f7, f3) {
                    (0, 0) => rs1.wrapping_add(rs2),
                    (0x20, 0) => rs1.wrapping_sub(rs2),
                    (0, 1) => rs1 << sh,
                    (0, 2) => ((rs1 as i32) < (rs2 as i32)) as u32,
                    (0, 3) => (rs1 < rs2) as u32,
                    (0, 4) => rs1 ^ rs2,
                    (0, 5) => rs1 >> sh,
                    (0x20, 5) => ((rs1 as i32) >> sh) as u32,
                    (0, 6) => rs1 | rs2,
                    (0, 7) => rs1 & rs2,
                    _ => panic!("bad op {w:#x}"),
                });
            }
            0x73 if w == 0x73 => {
                assert_eq!(self.x[17], 93, "only exit is generated");
                self.exit_code = Some(self.x[10] as i32);
            }
            _ => panic!("reference interpreter does not handle {w:#x}"),
        }
        if let Some(v) = result {
            if rd != 0 {
                self.x[rd] = v;
            }
        }
        self.pc = next;
        self.retired += 1;
    }
}

/// Runs `program` on both the simulator and the reference interpreter and
/// returns a description of the first difference, if any.
pub fn compare_with_reference(program: &[u32]) -> Result<u64, String> {
    let mut sim = Simulator::new(&SimConfig::default()).map_err(|e| e.to_string())?;
    sim.load_image(&program_image(program)).map_err(|e| e.to_string())?;
    let mut init = [0u32; 32];
    for (i, slot) in init.iter_mut().enumerate() {
        *slot = sim.state().reg(Reg::new(i as u32).unwrap());
    }
    let mut reference = RefState::new(init);
    reference.run(program, 10 * program.len() as u64);
    let stats = sim.run(Some(1_000_000_000)).map_err(|e| format!("simulator: {e}"))?;

    let state = sim.state();
    for i in 0..32 {
        let got = state.reg(Reg::new(i).unwrap());
        if got != reference.x[i as usize] {
            return Err(format!("x{i}: simulator {got:#x}, reference {:#x}", reference.x[i as usize]));
        }
    }
    if state.pc != reference.pc {
        return Err(format!("pc: simulator {:#x}, reference {:#x}", state.pc, reference.pc));
    }
    let data = sim.read_memory(DATA_BASE, DATA_LEN).map_err(|e| e.to_string())?;
    if let Some(i) = data.iter().zip(&reference.data).position(|(a, b)| a != b) {
        return Err(format!("data byte {i}: simulator {}, reference {}", data[i], reference.data[i]));
    }
    if stats.instructions != reference.retired {
        return Err(format!("retired: simulator {}, reference {}", stats.instructions, reference.retired));
    }
    if state.exit_code != reference.exit_code {
        return Err(format!("exit code: simulator {:?}, reference {:?}", state.exit_code, reference.exit_code));
    }
    Ok(reference.retired)
}
