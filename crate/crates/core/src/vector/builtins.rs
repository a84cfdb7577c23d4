//! The built-in custom instructions: vector load/store, sort, merge and prefix sum.

use std::sync::atomic::{AtomicU32, Ordering};
use std::sync::Arc;

use crate::isa::{CustomFormat, OpcodeSlot};

use super::network::{gen_merge_network, gen_sort_network};
use super::scan::ScanSteps;
use super::unit::{CustomInstrDescriptor, Destinations, Effects, MemRequest, MemoryRole, Operands, Vector};
use super::VectorError;

fn slot(index: u32) -> OpcodeSlot {
    OpcodeSlot::new(index).expect("built-in slots are in range")
}

/// Default pipeline latencies for a given lane count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BuiltinLatencies {
    pub load_store: u32,
    pub merge: u32,
    pub sort: u32,
    pub psum: u32,
}

impl BuiltinLatencies {
    /// Latency equals the number of network layers (pipeline stages) of each
    /// instruction. Loads and stores take whatever the cache reports.
    pub fn for_lanes(lanes: usize) -> Result<Self, VectorError> {
        Ok(BuiltinLatencies {
            load_store: 1,
            merge: gen_merge_network(2 * lanes)?.depth() as u32,
            sort: gen_sort_network(lanes)?.depth() as u32,
            psum: ScanSteps::new(lanes)?.stage_count() as u32,
        })
    }
}

/// Builds descriptors for all built-in instructions at `lanes` 32-bit lanes.
pub fn builtin_descriptors(lanes: usize, latencies: BuiltinLatencies) -> Result<Vec<CustomInstrDescriptor>, VectorError> {
    let sort_net = gen_sort_network(lanes)?;
    let merge_net = gen_merge_network(2 * lanes)?;
    let scan = ScanSteps::new(lanes)?;
    let carry = Arc::new(AtomicU32::new(0));

    let lv = CustomInstrDescriptor::new(
        "c0_lv",
        slot(0),
        0,
        CustomFormat::SPrime,
        latencies.load_store,
        |ops: &Operands<'_>| Effects {
            mem: Some(MemRequest::LoadVector { addr: ops.rs1.wrapping_add(ops.rs2) }),
            ..Effects::default()
        },
    )
    .memory(MemoryRole::Load)
    .writes(Destinations::VRD1);

    let sv = CustomInstrDescriptor::new(
        "c0_sv",
        slot(0),
        1,
        CustomFormat::SPrime,
        latencies.load_store,
        |ops: &Operands<'_>| Effects {
            mem: Some(MemRequest::StoreVector { addr: ops.rs1.wrapping_add(ops.rs2), data: ops.vrs1.clone() }),
            ..Effects::default()
        },
    )
    .memory(MemoryRole::Store)
    .writes(Destinations::NONE);

    let merge = CustomInstrDescriptor::new(
        "c1_merge",
        slot(1),
        0,
        CustomFormat::IPrime,
        latencies.merge,
        move |ops: &Operands<'_>| {
            let mut keys: Vec<u32> = ops.vrs1.lanes().iter().chain(ops.vrs2.lanes()).copied().collect();
            merge_net.apply(&mut keys);
            let upper = keys.split_off(lanes);
            Effects {
                vrd1: Some(Vector::from_lanes(keys)),
                vrd2: Some(Vector::from_lanes(upper)),
                ..Effects::default()
            }
        },
    )
    .writes(Destinations::VRD1_VRD2);

    let sort = CustomInstrDescriptor::new(
        "c2_sort",
        slot(2),
        0,
        CustomFormat::IPrime,
        latencies.sort,
        move |ops: &Operands<'_>| {
            let mut keys = ops.vrs1.clone();
            sort_net.apply(keys.lanes_mut());
            Effects { vrd1: Some(keys), ..Effects::default() }
        },
    )
    .writes(Destinations::VRD1);

    let psum = {
        let carry = Arc::clone(&carry);
        let scan = scan.clone();
        CustomInstrDescriptor::new(
            "c3_psum",
            slot(3),
            0,
            CustomFormat::IPrime,
            latencies.psum,
            move |ops: &Operands<'_>| {
                let mut sums = ops.vrs1.clone();
                let next = scan.run(sums.lanes_mut(), carry.load(Ordering::Relaxed));
                carry.store(next, Ordering::Relaxed);
                Effects { vrd1: Some(sums), ..Effects::default() }
            },
        )
        .writes(Destinations::VRD1)
    };

    let psum_init = CustomInstrDescriptor::new(
        "c3_psum_init",
        slot(3),
        1,
        CustomFormat::IPrime,
        latencies.psum,
        move |ops: &Operands<'_>| {
            let mut sums = ops.vrs1.clone();
            let next = scan.run(sums.lanes_mut(), 0);
            carry.store(next, Ordering::Relaxed);
            Effects { vrd1: Some(sums), ..Effects::default() }
        },
    )
    .writes(Destinations::VRD1);

    Ok(vec![lv, sv, merge, sort, psum, psum_init])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_latencies_follow_network_depths() {
        let l8 = BuiltinLatencies::for_lanes(8).unwrap();
        assert_eq!((l8.sort, l8.merge, l8.psum), (6, 5, 4));
        let l4 = BuiltinLatencies::for_lanes(4).unwrap();
        assert_eq!((l4.sort, l4.merge, l4.psum), (3, 4, 3));
    }

    #[test]
    fn builtin_names_match_isa_table() {
        let descs = builtin_descriptors(8, BuiltinLatencies::for_lanes(8).unwrap()).unwrap();
        for (desc, entry) in descs.iter().zip(crate::isa::BUILTIN_CUSTOMS.iter()) {
            assert_eq!(desc.mnemonic, entry.0);
            assert_eq!(desc.slot.index(), entry.1);
            assert_eq!(desc.funct3, entry.2);
            assert_eq!(desc.format, entry.3);
        }
    }
}
