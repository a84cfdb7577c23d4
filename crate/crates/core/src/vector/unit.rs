use std::fmt;

use crate::isa::{CustomFormat, CustomTable, Instr, OpcodeSlot, Reg, VReg};
use crate::mem::MemError;

use super::VectorError;

/// One VLEN-wide vector value viewed as 32-bit lanes.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct Vector(Vec<u32>);

impl Vector {
    pub fn zeros(lanes: usize) -> Self {
        Vector(vec![0; lanes])
    }

    pub fn from_lanes(lanes: Vec<u32>) -> Self {
        Vector(lanes)
    }

    pub fn from_le_bytes(bytes: &[u8]) -> Self {
        Vector(
            bytes
                .chunks_exact(4)
                .map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect(),
        )
    }

    pub fn write_le_bytes(&self, out: &mut [u8]) {
        for (chunk, lane) in out.chunks_exact_mut(4).zip(&self.0) {
            chunk.copy_from_slice(&lane.to_le_bytes());
        }
    }

    pub fn to_le_bytes(&self) -> Vec<u8> {
        let mut out = vec![0; self.0.len() * 4];
        self.write_le_bytes(&mut out);
        out
    }

    pub fn lanes(&self) -> &[u32] {
        &self.0
    }

    pub fn lanes_mut(&mut self) -> &mut [u32] {
        &mut self.0
    }

    pub fn into_lanes(self) -> Vec<u32> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Debug for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(&self.0).finish()
    }
}

/// Eight VLEN-bit registers; `v0` is hardwired to zero.
#[derive(Debug, Clone)]
pub struct VectorRegisterFile {
    vlen_bits: u32,
    regs: Vec<Vector>,
}

impl VectorRegisterFile {
    pub fn new(vlen_bits: u32) -> Result<Self, VectorError> {
        if vlen_bits < 64 || !vlen_bits.is_power_of_two() {
            return Err(VectorError::InvalidVlen(vlen_bits));
        }
        let lanes = (vlen_bits / 32) as usize;
        Ok(VectorRegisterFile { vlen_bits, regs: vec![Vector::zeros(lanes); VReg::COUNT] })
    }

    pub fn vlen_bits(&self) -> u32 {
        self.vlen_bits
    }

    pub fn lanes(&self) -> usize {
        (self.vlen_bits / 32) as usize
    }

    pub fn read(&self, reg: VReg) -> &Vector {
        &self.regs[reg.index()]
    }

    /// Writes to `v0` are discarded.
    pub fn write(&mut self, reg: VReg, value: Vector) {
        assert_eq!(value.len(), self.lanes(), "vector width mismatch");
        if !reg.is_zero() {
            self.regs[reg.index()] = value;
        }
    }
}

/// Operand values handed to a custom instruction's semantics.
#[derive(Debug)]
pub struct Operands<'a> {
    pub rs1: u32,
    /// Zero for I' instructions.
    pub rs2: u32,
    /// For store-role instructions this is the register named by the `vrd1` field.
    pub vrs1: &'a Vector,
    /// All-zero for S' instructions.
    pub vrs2: &'a Vector,
}

impl Operands<'_> {
    pub fn lanes(&self) -> usize {
        self.vrs1.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MemRequest {
    /// Loads one vector into `vrd1`.
    LoadVector { addr: u32 },
    StoreVector { addr: u32, data: Vector },
}

/// Results produced by a custom instruction. Values for destinations the
/// descriptor does not declare are ignored.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Effects {
    pub rd: Option<u32>,
    pub vrd1: Option<Vector>,
    pub vrd2: Option<Vector>,
    pub mem: Option<MemRequest>,
}

/// Behaviour of a custom instruction. Any state it keeps is local to the
/// instruction.
pub trait CustomSemantics: Send {
    fn execute(&mut self, ops: &Operands<'_>) -> Effects;
}

impl<F> CustomSemantics for F
where
    F: FnMut(&Operands<'_>) -> Effects + Send,
{
    fn execute(&mut self, ops: &Operands<'_>) -> Effects {
        self(ops)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MemoryRole {
    None,
    Load,
    /// The `vrd1` field names the vector being stored.
    Store,
}

/// Architectural destinations an instruction writes back.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Destinations {
    pub rd: bool,
    pub vrd1: bool,
    pub vrd2: bool,
}

impl Destinations {
    pub const NONE: Destinations = Destinations { rd: false, vrd1: false, vrd2: false };
    pub const VRD1: Destinations = Destinations { rd: false, vrd1: true, vrd2: false };
    pub const VRD1_VRD2: Destinations = Destinations { rd: false, vrd1: true, vrd2: true };

    pub fn all_of(format: CustomFormat) -> Self {
        Destinations { rd: true, vrd1: true, vrd2: format == CustomFormat::IPrime }
    }
}

pub struct CustomInstrDescriptor {
    pub mnemonic: String,
    pub slot: OpcodeSlot,
    pub funct3: u8,
    pub format: CustomFormat,
    pub latency_cycles: u32,
    pub blocking: bool,
    pub memory: MemoryRole,
    pub writes: Destinations,
    pub semantics: Box<dyn CustomSemantics>,
}

impl CustomInstrDescriptor {
    pub fn new(
        mnemonic: impl Into<String>,
        slot: OpcodeSlot,
        funct3: u8,
        format: CustomFormat,
        latency_cycles: u32,
        semantics: impl CustomSemantics + 'static,
    ) -> Self {
        CustomInstrDescriptor {
            mnemonic: mnemonic.into(),
            slot,
            funct3,
            format,
            latency_cycles,
            blocking: false,
            memory: MemoryRole::None,
            writes: Destinations::all_of(format),
            semantics: Box::new(semantics),
        }
    }

    pub fn blocking(mut self, blocking: bool) -> Self {
        self.blocking = blocking;
        self
    }

    pub fn memory(mut self, role: MemoryRole) -> Self {
        self.memory = role;
        self
    }

    pub fn writes(mut self, writes: Destinations) -> Self {
        self.writes = writes;
        self
    }
}

impl fmt::Debug for CustomInstrDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomInstrDescriptor")
            .field("mnemonic", &self.mnemonic)
            .field("slot", &self.slot)
            .field("funct3", &self.funct3)
            .field("format", &self.format)
            .field("latency_cycles", &self.latency_cycles)
            .field("blocking", &self.blocking)
            .field("memory", &self.memory)
            .field("writes", &self.writes)
            .finish_non_exhaustive()
    }
}

/// Index of a registered custom instruction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct InstrHandle(pub usize);

/// Memory port used by load/store-role custom instructions. Returns the access
/// latency in cycles, counted from `now`.
pub trait VectorMemory {
    fn load_vector(&mut self, addr: u32, out: &mut [u8], now: u64) -> Result<u64, MemError>;
    fn store_vector(&mut self, addr: u32, data: &[u8], now: u64) -> Result<u64, MemError>;
}

/// An issued custom instruction waiting for its writeback cycle.
#[derive(Debug, Clone)]
pub struct PipelineSlot {
    pub seq: u64,
    pub handle: InstrHandle,
    pub issued_at: u64,
    pub completes_at: u64,
    pub rd: Reg,
    pub vrd1: VReg,
    pub vrd2: VReg,
    rd_value: Option<u32>,
    vrd1_value: Option<Vector>,
    vrd2_value: Option<Vector>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IssueOutcome {
    Accepted { seq: u64, completes_at: u64 },
    /// A source or destination register has an in-flight writer.
    StallData { until: u64 },
    /// A blocking instruction of the same kind is still in flight.
    StallStructural { until: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Retirement {
    pub seq: u64,
    pub handle: InstrHandle,
    pub issued_at: u64,
    pub completes_at: u64,
    /// Base register write the core must apply.
    pub rd_write: Option<(Reg, u32)>,
}

/// Registered custom instructions, the vector register file and the
/// in-flight pipeline slots.
pub struct VectorUnit {
    vrf: VectorRegisterFile,
    descriptors: Vec<CustomInstrDescriptor>,
    by_encoding: [Option<usize>; 32],
    in_flight: Vec<PipelineSlot>,
    next_seq: u64,
    issued: Vec<u64>,
    zero: Vector,
}

impl fmt::Debug for VectorUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VectorUnit")
            .field("vlen_bits", &self.vrf.vlen_bits())
            .field("descriptors", &self.descriptors)
            .field("in_flight", &self.in_flight.len())
            .finish()
    }
}

fn encoding_index(slot: OpcodeSlot, funct3: u8) -> usize {
    slot.index() as usize * 8 + (funct3 as usize & 7)
}

impl VectorUnit {
    /// An empty unit with no registered instructions.
    pub fn new(vlen_bits: u32) -> Result<Self, VectorError> {
        let vrf = VectorRegisterFile::new(vlen_bits)?;
        let zero = Vector::zeros(vrf.lanes());
        Ok(VectorUnit {
            vrf,
            descriptors: Vec::new(),
            by_encoding: [None; 32],
            in_flight: Vec::new(),
            next_seq: 0,
            issued: Vec::new(),
            zero,
        })
    }

    pub fn vlen_bits(&self) -> u32 {
        self.vrf.vlen_bits()
    }

    pub fn lanes(&self) -> usize {
        self.vrf.lanes()
    }

    pub fn registers(&self) -> &VectorRegisterFile {
        &self.vrf
    }

    pub fn registers_mut(&mut self) -> &mut VectorRegisterFile {
        &mut self.vrf
    }

    /// Registers `desc`. Each `(slot, funct3)` encoding point holds one instruction.
    pub fn register_custom_instr(&mut self, desc: CustomInstrDescriptor) -> Result<InstrHandle, VectorError> {
        if desc.funct3 > 7 {
            return Err(VectorError::InvalidDescriptor(format!("funct3 {} exceeds 3 bits", desc.funct3)));
        }
        if desc.latency_cycles == 0 {
            return Err(VectorError::InvalidDescriptor("latency must be at least one cycle".into()));
        }
        if desc.format == CustomFormat::IPrime && desc.memory != MemoryRole::None {
            return Err(VectorError::InvalidDescriptor("memory instructions use the S' format".into()));
        }
        if desc.format == CustomFormat::SPrime && desc.writes.vrd2 {
            return Err(VectorError::InvalidDescriptor("S' instructions have no vrd2".into()));
        }
        if desc.memory == MemoryRole::Store && desc.writes.vrd1 {
            return Err(VectorError::InvalidDescriptor("store-role instructions read the vrd1 field".into()));
        }
        if self.descriptors.iter().any(|d| d.mnemonic == desc.mnemonic) {
            return Err(VectorError::DuplicateMnemonic(desc.mnemonic));
        }
        let key = encoding_index(desc.slot, desc.funct3);
        if self.by_encoding[key].is_some() {
            return Err(VectorError::DuplicateSlot { slot: desc.slot.index(), funct3: desc.funct3 });
        }
        let handle = InstrHandle(self.descriptors.len());
        self.by_encoding[key] = Some(handle.0);
        self.descriptors.push(desc);
        self.issued.push(0);
        Ok(handle)
    }

    pub fn descriptor(&self, handle: InstrHandle) -> &CustomInstrDescriptor {
        &self.descriptors[handle.0]
    }

    pub fn descriptors(&self) -> impl Iterator<Item = (InstrHandle, &CustomInstrDescriptor)> {
        self.descriptors.iter().enumerate().map(|(i, d)| (InstrHandle(i), d))
    }

    pub fn lookup(&self, slot: OpcodeSlot, funct3: u8) -> Option<InstrHandle> {
        if funct3 > 7 {
            return None;
        }
        self.by_encoding[encoding_index(slot, funct3)].map(InstrHandle)
    }

    /// Resolves the descriptor for a decoded custom instruction.
    pub fn handle_for(&self, instr: &Instr) -> Option<InstrHandle> {
        let (slot, funct3, format) = match instr {
            Instr::CustomI(c) => (c.slot, c.funct3, CustomFormat::IPrime),
            Instr::CustomS(c) => (c.slot, c.funct3, CustomFormat::SPrime),
            _ => return None,
        };
        self.lookup(slot, funct3)
            .filter(|h| self.descriptors[h.0].format == format)
    }

    /// Issue count per registered instruction, indexed by handle.
    pub fn issue_counts(&self) -> &[u64] {
        &self.issued
    }

    pub fn in_flight(&self) -> &[PipelineSlot] {
        &self.in_flight
    }

    pub fn is_idle(&self) -> bool {
        self.in_flight.is_empty()
    }

    /// Cycle at which `reg` has no pending writer (0 if none is in flight).
    pub fn vector_ready_at(&self, reg: VReg) -> u64 {
        if reg.is_zero() {
            return 0;
        }
        self.in_flight
            .iter()
            .filter(|s| s.vrd1 == reg || s.vrd2 == reg)
            .map(|s| s.completes_at)
            .max()
            .unwrap_or(0)
    }

    /// Cycle at which base register `reg` has no pending custom-instruction writer.
    pub fn base_ready_at(&self, reg: Reg) -> u64 {
        if reg.is_zero() {
            return 0;
        }
        self.in_flight
            .iter()
            .filter(|s| s.rd == reg)
            .map(|s| s.completes_at)
            .max()
            .unwrap_or(0)
    }

    /// Latest pending completion, if anything is in flight.
    pub fn drain_cycle(&self) -> Option<u64> {
        self.in_flight.iter().map(|s| s.completes_at).max()
    }

    /// Attempts to issue the custom instruction `instr` at cycle `now`.
    ///
    /// `rs1`/`rs2` are the base register values read by the core. On
    /// acceptance the semantics run immediately and their results are held
    /// until the writeback cycle.
    pub fn issue(
        &mut self,
        instr: &Instr,
        rs1: u32,
        rs2: u32,
        now: u64,
        mem: &mut dyn VectorMemory,
    ) -> Result<IssueOutcome, VectorError> {
        let handle = self.handle_for(instr).ok_or(VectorError::Unregistered)?;
        let desc = &self.descriptors[handle.0];

        let (rs1_reg, rs2_reg, rd, vrd1, vrd2, src1, src2) = match *instr {
            Instr::CustomI(c) => (c.rs1, Reg::ZERO, c.rd, c.vrd1, c.vrd2, c.vrs1, c.vrs2),
            Instr::CustomS(c) if desc.memory == MemoryRole::Store => {
                (c.rs1, c.rs2, c.rd, c.vrd1, VReg::V0, c.vrd1, VReg::V0)
            }
            Instr::CustomS(c) => (c.rs1, c.rs2, c.rd, c.vrd1, VReg::V0, c.vrs1, VReg::V0),
            _ => unreachable!("handle_for only resolves custom forms"),
        };
        let dest_rd = if desc.writes.rd { rd } else { Reg::ZERO };
        let dest_v1 = if desc.writes.vrd1 { vrd1 } else { VReg::V0 };
        let dest_v2 = if desc.writes.vrd2 { vrd2 } else { VReg::V0 };

        if desc.blocking {
            let busy = self
                .in_flight
                .iter()
                .filter(|s| s.handle == handle)
                .map(|s| s.completes_at)
                .max();
            if let Some(until) = busy {
                return Ok(IssueOutcome::StallStructural { until });
            }
        }

        let data_ready = [
            self.vector_ready_at(src1),
            self.vector_ready_at(src2),
            self.vector_ready_at(dest_v1),
            self.vector_ready_at(dest_v2),
            self.base_ready_at(rs1_reg),
            self.base_ready_at(rs2_reg),
            self.base_ready_at(dest_rd),
        ]
        .into_iter()
        .max()
        .unwrap_or(0);
        if data_ready > now {
            return Ok(IssueOutcome::StallData { until: data_ready });
        }

        let desc = &mut self.descriptors[handle.0];
        let vrs1_value = self.vrf.read(src1);
        let vrs2_value = if src2.is_zero() { &self.zero } else { self.vrf.read(src2) };
        let ops = Operands { rs1, rs2, vrs1: vrs1_value, vrs2: vrs2_value };
        let mut effects = desc.semantics.execute(&ops);

        let lanes = self.vrf.lanes();
        let vbytes = lanes * 4;
        let mut latency = desc.latency_cycles as u64;
        match (desc.memory, effects.mem.take()) {
            (MemoryRole::Load, Some(MemRequest::LoadVector { addr })) => {
                if !(addr as usize).is_multiple_of(vbytes) {
                    return Err(VectorError::MisalignedVectorAccess { addr });
                }
                let mut buf = vec![0u8; vbytes];
                latency = latency.max(mem.load_vector(addr, &mut buf, now)?);
                effects.vrd1 = Some(Vector::from_le_bytes(&buf));
            }
            (MemoryRole::Store, Some(MemRequest::StoreVector { addr, data })) => {
                if !(addr as usize).is_multiple_of(vbytes) {
                    return Err(VectorError::MisalignedVectorAccess { addr });
                }
                if data.len() != lanes {
                    return Err(VectorError::WidthMismatch { expected: lanes, got: data.len() });
                }
                latency = latency.max(mem.store_vector(addr, &data.to_le_bytes(), now)?);
            }
            (_, None) => {}
            (_, Some(_)) => return Err(VectorError::UndeclaredMemoryAccess(desc.mnemonic.clone())),
        }
        for v in [&effects.vrd1, &effects.vrd2].into_iter().flatten() {
            if v.len() != lanes {
                return Err(VectorError::WidthMismatch { expected: lanes, got: v.len() });
            }
        }

        let seq = self.next_seq;
        self.next_seq += 1;
        self.issued[handle.0] += 1;
        let completes_at = now + latency;
        let slot = PipelineSlot {
            seq,
            handle,
            issued_at: now,
            completes_at,
            rd: dest_rd,
            vrd1: dest_v1,
            vrd2: dest_v2,
            rd_value: effects.rd.filter(|_| !dest_rd.is_zero()),
            vrd1_value: effects.vrd1.filter(|_| !dest_v1.is_zero()),
            vrd2_value: effects.vrd2.filter(|_| !dest_v2.is_zero()),
        };
        let pos = self
            .in_flight
            .partition_point(|s| (s.completes_at, s.seq) <= (completes_at, seq));
        self.in_flight.insert(pos, slot);
        Ok(IssueOutcome::Accepted { seq, completes_at })
    }

    /// Writes back every slot due at or before `now`, in completion then
    /// issue order. Called once per cycle this retires exactly the slots
    /// completing at `now`.
    pub fn tick(&mut self, now: u64) -> Vec<Retirement> {
        let due = self.in_flight.partition_point(|s| s.completes_at <= now);
        if due == 0 {
            return Vec::new();
        }
        let mut retired = Vec::with_capacity(due);
        for slot in self.in_flight.drain(..due) {
            if let Some(v) = slot.vrd1_value {
                self.vrf.write(slot.vrd1, v);
            }
            if let Some(v) = slot.vrd2_value {
                self.vrf.write(slot.vrd2, v);
            }
            retired.push(Retirement {
                seq: slot.seq,
                handle: slot.handle,
                issued_at: slot.issued_at,
                completes_at: slot.completes_at,
                rd_write: slot.rd_value.map(|v| (slot.rd, v)),
            });
        }
        retired
    }
}

impl CustomTable for VectorUnit {
    fn format_of(&self, slot: OpcodeSlot, funct3: u8) -> Option<CustomFormat> {
        self.lookup(slot, funct3).map(|h| self.descriptors[h.0].format)
    }

    fn mnemonic_of(&self, slot: OpcodeSlot, funct3: u8) -> Option<&str> {
        self.lookup(slot, funct3).map(|h| self.descriptors[h.0].mnemonic.as_str())
    }

    fn by_mnemonic(&self, mnemonic: &str) -> Option<(OpcodeSlot, u8, CustomFormat)> {
        self.descriptors
            .iter()
            .find(|d| d.mnemonic == mnemonic)
            .map(|d| (d.slot, d.funct3, d.format))
    }
}
