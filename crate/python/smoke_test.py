"""Smoke test for the twinrelay Python module.

Build first, e.g. `maturin develop -m crates/py/Cargo.toml`, then run
`python python/smoke_test.py`.
"""

import math

import twinrelay as tr


def check(cond, what):
    if not cond:
        raise SystemExit(f"FAIL: {what}")
    print(f"ok: {what}")


def main():
    snr = tr.db_to_linear(10.0)
    check(abs(tr.rate_upper(snr) - 0.5 * math.log2(1 + snr)) < 1e-12, "upper rate at 10 dB")
    check(tr.rate_lattice(snr) < tr.rate_upper(snr), "lattice rate below the upper bound")
    lo, hi = tr.crossover_window()
    check(abs(lo + 0.659) < 0.01 and abs(hi - 3.46) < 0.01, f"crossover window ({lo:.3f}, {hi:.3f}) dB")
    rate, beta = tr.envelope(tr.db_to_linear(1.0))
    check(0.0 < beta < 1.0 and rate > tr.rate_anc(tr.db_to_linear(1.0)), "envelope time-shares inside the window")
    check(len(tr.rate_curve_csv(-10, 30, 0.5).splitlines()) == 82, "rate curve has 81 rows")

    pair = tr.NestedLatticePair(5, 1, 2)
    check(pair.size == 5, repr(pair))
    quiet = tr.ChannelParams(1.0, 0.0)
    for a in range(pair.size):
        for b in range(pair.size):
            t = tr.run_session(a, b, quiet, pair, seed=a * 5 + b)
            assert t["u_b_at_a"] == b and t["u_a_at_b"] == a
    check(True, "noiseless exchange recovers every message pair")
    counts = [0] * pair.size
    for a in range(pair.size):
        for b in range(pair.size):
            counts[pair.sum_index(a, b)] += 1
    check(set(counts) == {pair.size}, "modulo sums are uniform")

    params = tr.ChannelParams.from_snr_db(12.0)
    one = tr.simulate_lattice(tr.NestedLatticePair(4, 1, 1), params, 20000, seed=3, workers=1)
    many = tr.simulate_lattice(tr.NestedLatticePair(4, 1, 1), params, 20000, seed=3, workers=4)
    check(one == many, "lattice report independent of worker count")
    relay = next(c for c in one["classes"] if c["name"] == "relay")
    check(0.05 < relay["estimate"] < 0.12, f"relay error at 12 dB = {relay['estimate']:.4f}")

    bsc = tr.simulate_bsc(0.0, 256, seed=1)
    check(all(c["errors"] == 0 for c in bsc["classes"]), "noiseless BSC relay")
    check(abs(1 - tr.binary_entropy(0.11) - 0.5000840418) < 1e-9, "binary entropy")

    m = tr.min_angle(3, 2.0, 15.0, 2000, seed=1)
    check(m["M1"] == 56 and m["M2"] == 56, "ball codebook sizes")
    c = tr.concentration(8, 1.0, 0.1, 10000, seed=1)
    check(0.0 < c["fraction"] < 1.0, f"off-shell fraction n=8: {c['fraction']:.3f}")

    sched = tr.HopSchedule(3, 6)
    check(sched.table1_mismatches() == [], "three-relay schedule table")
    check(sched.throughput()["steady_period"] == 2, "steady-state period")
    run = sched.run("numeric-noiseless", pair=tr.NestedLatticePair(8, 1, 2))
    check(run["end_errors"] == 0, "noiseless multihop run")

    try:
        tr.ChannelParams(-1.0, 1.0)
    except ValueError:
        check(True, "invalid power rejected")
    else:
        raise SystemExit("FAIL: invalid power accepted")
    print("smoke test passed")


if __name__ == "__main__":
    main()
