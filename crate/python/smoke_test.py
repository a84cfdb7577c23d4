"""Smoke test for the pyvexsim extension module.

Build and install first:  pip install ./crates/python --no-build-isolation
Then run:                 python python/smoke_test.py
"""

import pyvexsim as vx

SRC = """
_start:
    la      a0, keys
    c0_lv   v1, v0, x0, a0
    c2_sort v2, v0, v1
    c0_sv   v2, v0, x0, a0
    la      a1, msg
    li      a2, 3
    li      a7, 64
    ecall
    li      a7, 93
    li      a0, 0
    ecall
.data
.align 5
keys: .word 9, 3, 7, 1, 8, 2, 6, 4
msg:  .asciz "ok\\n"
"""


def main():
    img = vx.assemble(SRC)
    roundtrip = vx.Image.from_bytes(img.to_bytes())
    assert roundtrip.entry == img.entry

    sim = vx.Simulator()
    sim.load_image(img)
    stats = sim.run(max_cycles=100_000)
    assert sim.exit_code == 0
    assert sim.read_words(img.symbol("keys"), 8) == [1, 2, 3, 4, 6, 7, 8, 9]
    assert sim.output() == b"ok\n"
    assert stats["cycles"] == stats["busy_cycles"] + sum(stats["stalls"].values())
    print(f"sorted one chunk in {stats['cycles']} cycles, {stats['instructions']} instructions")

    # Header is magic, base, entry, length; the first word follows it.
    first = int.from_bytes(img.to_bytes()[16:20], "little")
    assert vx.disassemble(first).startswith("auipc x10")
    assert "c2_sort" in img.listing()

    for name in vx.bench_names():
        row = vx.run_bench(name, 4096, seed=3)
        assert row["validated"], row
        print(f"{name:13s} {row['mb_per_s']:8.1f} MB/s")

    rows = vx.sweep({"benches": ["memcpy"], "bytes": [16384],
                     "axes": [{"param": "vlen_bits", "values": [128, 256, 512]}]})
    rates = [r["mb_per_s"] for r in rows]
    assert rates == sorted(rates), rates
    print("smoke test passed")


if __name__ == "__main__":
    main()
