"""Acceptance checks, one test and one printed PASS/FAIL line per criterion.

Tolerances are fixed up front and trial counts are chosen from runtime
budgets, never from the outcome.  Run alone with::

    pytest -v -s tests/test_acceptance.py
"""

from __future__ import annotations

import math
import time
from fractions import Fraction

import numpy as np
import pytest
import yaml

from q1prep.analytic import factory_rate_analytic, first_order_loss, prep_error_probs_analytic
from q1prep.cli import main as cli_main
from q1prep.factory import estimate_error_probs_mc, estimate_rate_mc
from q1prep.logical import logical_error_rate, sc_density_evolution, steane_input_probs
from q1prep.noise import RandomFaults, stream
from q1prep.polar import Q1Code, k_min
from q1prep.prep import BlockSpec, classify_single_faults, run_block_batch

from oracles import exact_bit_errors, stabilizers

THREADS = 4


def report(capsys, number, ok, detail):
    line = f"CRITERION {number:>2} {'PASS' if ok else 'FAIL'}: {detail}"
    with capsys.disabled():
        print("\n" + line)
    return ok


# -- 1 ------------------------------------------------------------------------


def _expected_cnot_fraction(k, j, km):
    if k == j:
        return Fraction(8, 15)
    if km is not None and k >= km:
        return Fraction(12, 15)
    return Fraction(14, 15)


def test_single_fault_classes_equal_closed_form_fractions(capsys):
    t0 = time.perf_counter()
    bad = []
    checked = 0
    for N in (2, 4, 8):
        for basis in "ZX":
            for i in range(1, N + 1):
                code = Q1Code.from_length(N, i, basis)
                n = code.n
                km = k_min(0, n, code.bits)
                per_cnot = {}
                for f, kind, _ in classify_single_faults(BlockSpec.for_code(code, 0, n)):
                    if f.pauli is not None:
                        per_cnot.setdefault((f.level, f.t, f.index), []).append(kind)
                    elif f.level == 0:
                        want = "rough" if (code.degenerate or sum(code.bits)) else "not rough"
                        got = "rough" if kind == "rough" else "not rough"
                        if want != got:
                            bad.append((N, i, basis, "init", f.index))
                    elif kind != "rough":
                        bad.append((N, i, basis, "ancilla", f.level, f.t, f.index))
                for (k, t, a), kinds in per_cnot.items():
                    checked += 1
                    if Fraction(kinds.count("rough"), 15) != _expected_cnot_fraction(k, n, km):
                        bad.append((N, i, basis, "cnot", k, t, a))
    dt = time.perf_counter() - t0
    ok = not bad and dt < 60
    assert report(capsys, 1, ok, f"{checked} CNOT locations + all init/ancilla faults, N in (2,4,8), "
                                 f"{len(bad)} mismatches, {dt:.1f}s (< 60s)")


# -- 2 ------------------------------------------------------------------------

# (N, i, basis): an all-ZZ code and the mixed code with bits (0, 1, 0)
SLOPE_CODES = ((4, 4, "Z"), (8, 3, "Z"))
SLOPE_POINTS = ((1e-5, 4 * 10**7), (1e-6, 10**8))


def test_first_order_success_slope(capsys):
    t0 = time.perf_counter()
    parts, ok = [], True
    for N, i, basis in SLOPE_CODES:
        code = Q1Code.from_length(N, i, basis)
        slope = float(first_order_loss(0, code.n, code.bits, code.degenerate))
        (p1, r1), (p2, r2) = SLOPE_POINTS
        e1 = estimate_rate_mc(code, 1, (code.n,), p1, r1, seed=2, threads=THREADS, key=(0,))
        e2 = estimate_rate_mc(code, 1, (code.n,), p2, r2, seed=2, threads=THREADS, key=(1,))
        secant = (e2.rate - e1.rate) / (p1 - p2)
        rel = abs(secant - slope) / slope
        ok &= rel <= 0.05
        parts.append(f"N={N} i={i}: -dS/dp {secant:.2f} vs {slope:.2f} ({100 * rel:.1f}%)")
    dt = time.perf_counter() - t0
    ok &= dt < 600
    assert report(capsys, 2, ok, "; ".join(parts) + f"; tol 5%, {dt:.0f}s")


# -- 3 ------------------------------------------------------------------------

RATE_POINTS = (
    # N, i, T, sched, target
    (64, 23, 1, (6,), 0.47),
    (64, 23, 128, (2, 4, 6), 0.70),
    (256, 91, 128, (2, 4, 6, 8), 0.27),
)


def test_preparation_rates_reproduce_reported_values(capsys):
    parts, ok = [], True
    for g, (N, i, T, sched, target) in enumerate(RATE_POINTS):
        R = math.ceil(10**5 / T)
        est = estimate_rate_mc(Q1Code.from_length(N, i), T, sched, 1e-3, R, seed=3, threads=THREADS, key=(g,))
        hit = abs(est.rate - target) <= 0.05
        ok &= hit
        parts.append(f"N={N} T={T}: {est.rate:.4f} (target {target} +- 0.05, R*T={R * T})")
    assert report(capsys, 3, ok, "; ".join(parts))


# -- 4 ------------------------------------------------------------------------

AGREE_CODES = ((64, 23, (2, 4, 6)), (256, 91, (2, 4, 6, 8)))
AGREE_P = (3e-4, 1e-3, 3e-3)


def test_analytic_rate_tracks_monte_carlo(capsys):
    T = 128
    R = math.ceil(10**5 / T)
    parts, ok = [], True
    g = 0
    for N, i, sched in AGREE_CODES:
        code = Q1Code.from_length(N, i)
        for p in AGREE_P:
            est = estimate_rate_mc(code, T, sched, p, R, seed=4, threads=THREADS, key=(g,))
            g += 1
            an = float(factory_rate_analytic(code, sched, p))
            tol = max(0.1 * est.rate, 3 * est.stderr)
            hit = abs(an - est.rate) <= tol
            ok &= hit
            parts.append(f"N={N} p={p:g}: mc {est.rate:.4f} an {an:.4f}{'' if hit else ' X'}")
    assert report(capsys, 4, ok, "; ".join(parts) + f"; tol max(10%, 3 sigma), T={T}")


# -- 5 ------------------------------------------------------------------------

SAT_CODES = ((64, 23, (2, 4, 6)), (256, 91, (2, 4, 6, 8)))
SAT_T = tuple(2**k for k in range(0, 11))


def test_rate_saturates_in_factory_size(capsys):
    parts, ok = [], True
    g = 0
    for N, i, sched in SAT_CODES:
        code = Q1Code.from_length(N, i)
        ests = []
        for T in SAT_T:
            R = max(100, math.ceil(10**5 / T))
            ests.append(estimate_rate_mc(code, T, sched, 1e-3, R, seed=5, threads=THREADS, key=(g,)))
            g += 1
        mono = all(b.rate >= a.rate - 3 * math.hypot(a.stderr, b.stderr) for a, b in zip(ests, ests[1:]))
        a, b = ests[SAT_T.index(128)], ests[SAT_T.index(1024)]
        sigma = math.hypot(a.stderr, b.stderr)
        flat = abs(b.rate - a.rate) < 3 * sigma
        ok &= mono and flat
        curve = " ".join(f"{e.rate:.3f}" for e in ests)
        parts.append(f"N={N} rates T=1..1024 [{curve}] monotone={mono} "
                     f"|r(1024)-r(128)|={abs(b.rate - a.rate):.4f} vs 3sigma={3 * sigma:.4f}")
    assert report(capsys, 5, ok, "; ".join(parts))


# -- 6 ------------------------------------------------------------------------

ERR_CODES = ((16, 6, (2, 4)), (64, 23, (2, 4, 6)))
ERR_P = (1e-3, 3e-3)


def test_preparation_error_probabilities(capsys):
    T, R = 128, 2000
    parts, ok = [], True
    g = 0
    for N, i, sched in ERR_CODES:
        code = Q1Code.from_length(N, i)
        for p in ERR_P:
            est = estimate_error_probs_mc(code, T, sched, p, R, seed=6, threads=THREADS, key=(g,))
            g += 1
            ax, az = (float(v) for v in prep_error_probs_analytic(code, p))
            zx = (est.p_X - ax) / est.stderr_X
            zz = (est.p_Z - az) / est.stderr_Z
            # the accumulated smooth channel is an upper bound, so only an MC
            # excess counts against it
            hit = zx <= 3 and zz <= 3
            ok &= hit
            parts.append(f"N={N} p={p:g}: pX {est.p_X:.3e}/{ax:.3e} (z={zx:+.1f}) "
                         f"pZ {est.p_Z:.3e}/{az:.3e} (z={zz:+.1f})")
    assert report(capsys, 6, ok, "; ".join(parts) + f"; one-sided tol MC <= analytic + 3 sigma, T={T}, R={R}")


# -- 7 ------------------------------------------------------------------------


def test_sampled_density_evolution_matches_enumeration(capsys):
    t0 = time.perf_counter()
    samples = 10**5
    worst, count, misses = 0.0, 0, 0
    for n in (1, 2, 3, 4):
        for q in (0.01, 0.05, 0.1):
            exact = exact_bit_errors(n, q)
            rng = stream(7, n, int(q * 1000))
            for t in range(1, (1 << n) + 1):
                est = sc_density_evolution(n, q, t, samples=samples, rng=rng)
                e = exact[t - 1]
                sigma = math.sqrt(e * (1 - e) / samples)
                z = abs(est - e) / sigma if sigma > 0 else (0.0 if est == e else math.inf)
                worst = max(worst, z)
                misses += z > 3
                count += 1
    dt = time.perf_counter() - t0
    ok = misses == 0 and dt < 300
    assert report(capsys, 7, ok, f"{count} (n, q, position) cases, worst |z| = {worst:.2f}, "
                                 f"{misses} beyond 3 sigma, {dt:.0f}s")


# -- 8 ------------------------------------------------------------------------


def _logical(code, sched, p, seed):
    px, pz = (float(v) for v in prep_error_probs_analytic(code, p))
    dec = steane_input_probs(p, px, pz)
    return logical_error_rate(code, dec, samples=10**5, rng=stream(seed), method="auto")


def test_logical_rate_orders_of_magnitude(capsys):
    p = 1e-3
    c256 = Q1Code.from_length(256, 91)
    r256 = _logical(c256, (2, 4, 6, 8), p, 81)
    lo, hi = r256.bracket
    ok256 = lo <= 1e-10 and hi >= 1e-12
    # N = 1024 at the position picked by the selector (see README)
    c1024 = Q1Code.from_length(1024, 363)
    sched = (2, 4, 6, 8, 10)
    T = 128
    rate = estimate_rate_mc(c1024, T, sched, p, math.ceil(10**5 / T), seed=8, threads=THREADS)
    ok_rate = abs(rate.rate - 0.005) <= 0.003
    r1024 = _logical(c1024, sched, p, 82)
    lo2, hi2 = r1024.bracket
    ok1024 = lo2 / 100 <= 4.08e-22 <= hi2 * 100
    ok = ok256 and ok_rate and ok1024
    assert report(
        capsys, 8, ok,
        f"N=256: P_e_L {r256.P_e_L:.2e} [{r256.method}], bracket [{lo:.1e}, {hi:.1e}] vs 1e-11 (10x window); "
        f"N=1024: rate {100 * rate.rate:.3f}% (0.5 +- 0.3 pp), P_e_L {r1024.P_e_L:.2e} [{r1024.method}], "
        f"bracket [{lo2:.1e}, {hi2:.1e}] vs 4.08e-22 (100x); mapping 'default'",
    )


# -- 9 ------------------------------------------------------------------------


class _CountingFaults:
    """Wraps a fault source and counts the faults each batch element receives."""

    def __init__(self, inner, batch):
        self.inner = inner
        self.batch = batch
        self.count = np.zeros(batch, dtype=np.int64)

    def sample(self, level, t, count, two_qubit):
        idx, paulis = self.inner.sample(level, t, count, two_qubit)
        np.add.at(self.count, idx // (count // self.batch), 1)
        return idx, paulis


def _coset_table(gens, N):
    """Minimum weight over ``e + span(gens)`` for every ``e``, by direct relaxation."""
    idx = np.arange(1 << N)
    best = np.array([bin(v).count("1") for v in idx])
    place = 1 << np.arange(N)
    # min over {0, g1} + {0, g2} + ... one generator at a time
    for g in gens:
        best = np.minimum(best, best[idx ^ int(g @ place)])
    return best


FT_CODES = ((8, 3, "Z"), (16, 6, "Z"), (16, 4, "Z"), (16, 13, "Z"), (16, 1, "X"))


def test_residual_weight_bounded_by_fault_count(capsys):
    B = 10**5
    runs = accepted = violations = 0
    for N, i, basis in FT_CODES:
        code = Q1Code.from_length(N, i, basis)
        xs, zs = stabilizers(N, code.i_n)
        tx, tz = _coset_table(xs, N), _coset_table(zs, N)
        place = 1 << np.arange(N)
        for p in (0.01, 0.03):
            faults = _CountingFaults(RandomFaults(stream(9, N, i, int(p * 100)), p), B)
            out = run_block_batch(BlockSpec.for_code(code, 0, code.n), faults, B)
            acc = out.accepted
            wx = tx[out.x[acc].astype(np.int64) @ place]
            wz = tz[out.z[acc].astype(np.int64) @ place]
            violations += int((np.maximum(wx, wz) > faults.count[acc]).sum())
            runs += B
            accepted += int(acc.sum())
    ok = violations == 0 and runs >= 10**5
    assert report(capsys, 9, ok, f"{runs} runs, {accepted} accepted, {violations} with X or Z coset weight "
                                 f"above the injected fault count")


# -- 10 -----------------------------------------------------------------------


def test_cli_output_identical_across_threads(capsys, tmp_path):
    cfg = {
        "code": {"N": 64, "i": 23},
        "p_grid": [5e-4, 1e-3, 3e-3],
        "T_grid": [1, 16, 128],
        "sched": [2, 4, 6],
        "trials": 4000,
        "seed": 10,
    }
    path = tmp_path / "det.yaml"
    path.write_text(yaml.safe_dump(cfg))
    same = True
    for mode in ("rate", "errors"):
        blobs = []
        for t in (1, 4, 16):
            out = tmp_path / f"{mode}{t}.csv"
            assert cli_main([mode, "--config", str(path), "--threads", str(t), "--out", str(out)]) == 0
            blobs.append(out.read_bytes())
        same &= blobs[0] == blobs[1] == blobs[2]
    assert report(capsys, 10, same, "rate and errors CSVs byte-identical at 1, 4 and 16 threads")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v", "-s"]))
