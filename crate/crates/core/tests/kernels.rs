use vexsim::bench::{run_bench, run_bench_row, sweep, BenchName, BenchSpec, Grid};
use vexsim::config::SimConfig;

fn spec(name: BenchName, data_bytes: u64, config: SimConfig) -> BenchSpec {
    BenchSpec { name, data_bytes, seed: 5, config }
}

#[test]
fn kernels_validate_across_vector_widths() {
    for vlen in [128, 256, 512, 1024] {
        let config = SimConfig { vlen_bits: vlen, ..SimConfig::default() };
        for b in BenchName::ALL {
            let r = run_bench(&spec(b, 16 << 10, config.clone())).unwrap();
            assert!(r.row.validated, "{b} at VLEN {vlen}: {}", r.row.error);
        }
    }
}

#[test]
fn kernels_respect_the_scoreboard() {
    // The audit counts every register read whose pending write has not landed.
    for b in BenchName::ALL {
        let r = run_bench(&spec(b, 8 << 10, SimConfig::default())).unwrap();
        assert!(r.row.validated);
        assert_eq!(r.scoreboard_violations, 0, "{b}");
        assert_eq!(r.stats.cycles, r.stats.busy_cycles + r.stats.stalls.total());
    }
}

#[test]
fn vector_memcpy_beats_scalar_stream_copy() {
    let mem = run_bench(&spec(BenchName::Memcpy, 256 << 10, SimConfig::default())).unwrap().row;
    let copy = run_bench(&spec(BenchName::StreamCopy, 256 << 10, SimConfig::default())).unwrap().row;
    assert!(mem.validated && copy.validated);
    assert!(mem.mb_per_s > copy.mb_per_s, "{} vs {}", mem.mb_per_s, copy.mb_per_s);
}

#[test]
fn small_stream_arrays_are_faster_than_large_ones() {
    for b in [BenchName::StreamCopy, BenchName::StreamScale, BenchName::StreamAdd, BenchName::StreamTriad] {
        let small = run_bench(&spec(b, 1 << 10, SimConfig::default())).unwrap().row;
        let large = run_bench(&spec(b, 1 << 20, SimConfig::default())).unwrap().row;
        assert!(small.validated && large.validated);
        assert!(small.mb_per_s > large.mb_per_s, "{b}: {} vs {}", small.mb_per_s, large.mb_per_s);
    }
}

#[test]
fn runs_are_deterministic() {
    for b in [BenchName::SortSimd, BenchName::Memcpy, BenchName::PsumScalar] {
        let s = spec(b, 32 << 10, SimConfig::default());
        let (x, y) = (run_bench(&s).unwrap(), run_bench(&s).unwrap());
        assert_eq!(x.stats, y.stats, "{b}");
        assert_eq!(x.row, y.row);
    }
}

#[test]
fn seeds_change_inputs_not_correctness() {
    let rows: Vec<_> = (0..4)
        .map(|seed| run_bench_row(&BenchSpec { seed, ..spec(BenchName::SortScalar, 4 << 10, SimConfig::default()) }))
        .collect();
    assert!(rows.iter().all(|r| r.validated));
    assert!(rows.windows(2).any(|w| w[0].cycles != w[1].cycles));
}

#[test]
fn llc_block_grid_gives_one_row_per_point() {
    let grid = Grid::from_json(
        r#"{"benches": ["memcpy"], "bytes": [65536], "seed": 1,
            "axes": [{"param": "llc.block_bits", "values": [512, 1024, 2048, 4096, 8192, 16384]}]}"#,
    )
    .unwrap();
    let rows = sweep(&grid);
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|r| r.validated));
    let blocks: Vec<u32> = rows.iter().map(|r| r.llc_block_bits).collect();
    assert_eq!(blocks, [512, 1024, 2048, 4096, 8192, 16384]);
    assert!(rows.windows(2).all(|w| w[1].mb_per_s >= w[0].mb_per_s));
}
