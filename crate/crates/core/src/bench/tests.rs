use super::*;

fn spec(name: BenchName, data_bytes: u64) -> BenchSpec {
    BenchSpec { name, data_bytes, seed: 7, config: SimConfig::default() }
}

#[test]
fn names_roundtrip() {
    for b in BenchName::ALL {
        assert_eq!(b.as_str().parse::<BenchName>().unwrap(), b);
    }
    assert!("quicksort".parse::<BenchName>().is_err());
}

#[test]
fn every_kernel_validates_at_small_sizes() {
    for b in BenchName::ALL {
        for bytes in [256, 4096] {
            let r = run_bench(&spec(b, bytes)).unwrap();
            assert!(r.row.validated, "{b} {bytes}: {}", r.row.error);
            assert!(r.row.cycles > 0 && r.row.cycles < r.row.total_cycles, "{b}");
            assert!(r.row.mb_per_s > 0.0);
            r.ensure_validated().unwrap();
        }
    }
}

#[test]
fn memcpy_handles_an_odd_vector_count() {
    let r = run_bench(&spec(BenchName::Memcpy, 32 * 7)).unwrap();
    assert!(r.row.validated, "{}", r.row.error);
    assert_eq!(r.row.bytes_moved, 2 * 32 * 7);
}

#[test]
fn bad_sizes_are_rejected() {
    assert!(matches!(run_bench(&spec(BenchName::Memcpy, 100)), Err(BenchError::InvalidSize { .. })));
    assert!(matches!(run_bench(&spec(BenchName::SortSimd, 4 * 24)), Err(BenchError::InvalidSize { .. })));
    assert!(matches!(run_bench(&spec(BenchName::SortSimd, 32)), Err(BenchError::InvalidSize { .. })));
    assert!(matches!(run_bench(&spec(BenchName::PsumScalar, 6)), Err(BenchError::InvalidSize { .. })));
}

#[test]
fn memory_grows_for_large_buffers() {
    let mut s = spec(BenchName::PsumScalar, 4096);
    s.config.memory.size_bytes = 1 << 20;
    assert!(run_bench(&s).unwrap().row.validated);
    s.data_bytes = 1 << 20;
    let r = run_bench(&s).unwrap();
    assert!(r.row.validated, "{}", r.row.error);
}

#[test]
fn same_seed_same_row() {
    let a = run_bench_row(&spec(BenchName::SortSimd, 1024));
    let b = run_bench_row(&spec(BenchName::SortSimd, 1024));
    assert_eq!(a, b);
}

#[test]
fn grid_expands_in_order_and_flags_bad_points() {
    let grid = Grid::from_json(
        r#"{"benches": ["memcpy", "nope"], "bytes": [1024],
            "axes": [{"param": "llc.block_bits", "values": [4096, 3000]},
                     {"param": "vlen_bits", "values": [128, 256]}]}"#,
    )
    .unwrap();
    let points = grid.points();
    assert_eq!(points.len(), 8);
    let rows = sweep(&grid);
    assert_eq!(rows.len(), 8);
    assert_eq!((rows[0].llc_block_bits, rows[0].vlen_bits), (4096, 128));
    assert_eq!((rows[1].llc_block_bits, rows[1].vlen_bits), (4096, 256));
    assert!(rows[0].validated && rows[1].validated);
    assert!(!rows[2].validated && !rows[2].error.is_empty());
    assert!(rows[4..].iter().all(|r| !r.validated && r.bench == "nope"));

    let mut out = Vec::new();
    write_csv(&rows, &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    assert_eq!(text.lines().count(), 9);
    assert!(text.starts_with("format_version,bench,"));
}
