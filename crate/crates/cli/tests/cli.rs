use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn vexsim(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vexsim")).args(args).current_dir(dir).env_remove("VEXSIM_SEED").output().unwrap()
}

const HELLO: &str = "_start:\n    la a1, msg\n    li a2, 6\n    li a7, 64\n    ecall\n    li a7, 93\n    li a0, 0\n    ecall\n\
                     .data\nmsg: .asciz \"hello\\n\"\n";

#[test]
fn asm_run_disasm_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("hello.s"), HELLO).unwrap();
    let out = vexsim(&["asm", "hello.s", "-o", "hello.img"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let img = fs::read(dir.path().join("hello.img")).unwrap();
    assert_eq!(&img[..4], b"VXS1");
    assert!(fs::read_to_string(dir.path().join("hello.img.sym")).unwrap().contains("msg 0x"));

    let out = vexsim(&["run", "hello.img", "--stats", "stats.json"], dir.path());
    assert!(out.status.success());
    assert_eq!(out.stdout, b"hello\n");
    let stats: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("stats.json")).unwrap()).unwrap();
    assert_eq!(stats["instructions"], 8);

    let out = vexsim(&["disasm", "hello.img"], dir.path());
    let listing = String::from_utf8(out.stdout).unwrap();
    assert!(listing.contains("_start:") && listing.contains("ecall"), "{listing}");
}

#[test]
fn nonzero_exit_code_fails_the_run() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.s"), "li a7, 93\nli a0, 3\necall\n").unwrap();
    assert!(vexsim(&["asm", "bad.s", "-o", "bad.img"], dir.path()).status.success());
    assert_eq!(vexsim(&["run", "bad.img"], dir.path()).status.code(), Some(1));
}

#[test]
fn assembler_errors_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("err.s"), "nop\nfrob x1\n").unwrap();
    let out = vexsim(&["asm", "err.s", "-o", "err.img"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("err.s:"), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn bench_writes_a_validated_row_and_honours_the_seed_variable() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("cfg.json"), r#"{"bench": {"name": "sort_simd", "bytes": 4096, "seed": 1}}"#).unwrap();
    let out = vexsim(&["bench", "sort_simd", "--config", "cfg.json", "--csv", "a.csv"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let a = fs::read_to_string(dir.path().join("a.csv")).unwrap();
    assert_eq!(a.lines().count(), 2);
    assert!(a.lines().nth(1).unwrap().contains(",true,"));

    let out = Command::new(env!("CARGO_BIN_EXE_vexsim"))
        .args(["bench", "sort_simd", "--config", "cfg.json", "--csv", "b.csv"])
        .current_dir(dir.path())
        .env("VEXSIM_SEED", "99")
        .output()
        .unwrap();
    assert!(out.status.success());
    let b = fs::read_to_string(dir.path().join("b.csv")).unwrap();
    let seed_col = a.lines().next().unwrap().split(',').position(|c| c == "seed").unwrap();
    assert_eq!(b.lines().nth(1).unwrap().split(',').nth(seed_col), Some("99"));
}

#[test]
fn bench_rejects_unknown_names() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(vexsim(&["bench", "quicksort"], dir.path()).status.code(), Some(2));
}

#[test]
fn sweep_flags_invalid_points_and_fails() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("grid.json"),
        r#"{"benches": ["memcpy"], "bytes": [8192], "axes": [{"param": "vlen_bits", "values": [128, 256, 100]}]}"#,
    )
    .unwrap();
    let out = vexsim(&["sweep", "--grid", "grid.json", "--csv", "out.csv"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let csv = fs::read_to_string(dir.path().join("out.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[0].contains(",true,") && rows[1].contains(",true,"));
    assert!(rows[2].contains(",false,"));

    fs::write(
        dir.path().join("ok.json"),
        r#"{"benches": ["psum_simd", "psum_scalar"], "bytes": [4096], "axes": []}"#,
    )
    .unwrap();
    assert!(vexsim(&["sweep", "--grid", "ok.json", "--csv", "ok.csv"], dir.path()).status.success());
}
