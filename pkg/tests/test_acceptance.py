"""Acceptance gate: one test per criterion, each with its runtime limit.

Run with ``pytest tests/test_acceptance.py -v``; the terminal summary prints
one PASS/FAIL line per criterion (see ``conftest.py``).
"""

import math
import subprocess
import sys
import time
from contextlib import contextmanager
from fractions import Fraction

import numpy as np
import pytest

from concat_ir import analysis as an
from concat_ir.analysis import ModelKind
from concat_ir.auth import MacKey, crc_hash, default_poly, mac_tag, mac_verify, run_selftest
from concat_ir.codec import build_code, weight_distribution_bruteforce, weight_distribution_closed_form
from concat_ir.errors import KeyReuseError
from concat_ir.protocol import ProtocolId, SessionConfig
from concat_ir.sim import ChannelModel, end_to_end, monte_carlo_single_round

from oracles import quintic_p1_n7

C7, C15 = build_code(3), build_code(4)

CRITERIA = {
    1: "weight distribution n=7, closed form = enumeration",
    2: "weight distribution n=15, closed form = enumeration = corrected listing",
    3: "distance-model p1 equals the n=7 quintic",
    4: "n=7 fixed points",
    5: "round table for [15,11,3] at p=0.03",
    6: "depth tables for [15,11,3] and [7,4,3]",
    7: "threshold / contraction / 1/(n-1) chain",
    8: "Monte-Carlo single round under the worst-case bound",
    9: "end-to-end protocols I-III, zero mismatches over >= 1e7 bits",
    10: "syndrome gate discrimination",
    11: "MAC suite",
    12: "neighbour-ratio closed form vs weight distribution",
    13: "simulate reports are byte-identical across runs",
}


@contextmanager
def within(seconds):
    start = time.perf_counter()
    yield
    elapsed = time.perf_counter() - start
    assert elapsed < seconds, f"took {elapsed:.2f} s, limit {seconds} s"


def test_criterion_01():
    with within(1):
        expected = (1, 0, 0, 7, 7, 0, 0, 1)
        assert weight_distribution_closed_form(7).coefficients == expected
        assert weight_distribution_bruteforce(C7).coefficients == expected


def test_criterion_02():
    with within(1):
        listing = (1, 0, 0, 35, 105, 168, 280, 435, 435, 280, 168, 105, 35, 0, 0, 1)
        closed = weight_distribution_closed_form(15).coefficients
        brute = weight_distribution_bruteforce(C15)
        assert closed == brute.coefficients == listing
        assert brute.total == sum(listing) == 2048


def test_criterion_03():
    with within(1):
        ps = np.random.default_rng(3).random(100)
        gap = np.abs(an.p1_distance_model(7, ps) - quintic_p1_n7(ps))
        assert gap.max() < 1e-12


def test_criterion_04():
    with within(1):
        pts = an.fixed_points(7)
        assert len(pts) == 5
        exact = [0.0, (3 - math.sqrt(3)) / 6, 0.5, (3 + math.sqrt(3)) / 6, 1.0]
        assert all(abs(got - want) < 1e-8 for got, want in zip(pts, exact))
        # the listed 0.2113249 and 0.7886751 are 7-digit roundings of the exact roots
        assert [round(x, 7) for x in pts] == [0.0, 0.2113249, 0.5, 0.7886751, 1.0]


def test_criterion_05():
    with within(1):
        printed_rates = ["1.53e-02", "4.40e-03", "3.93e-04", "3.23e-06", "2.20e-10", "5.92e-17"]
        printed_left = [0.733, 0.538, 0.394, 0.289, 0.212, 0.156]
        rows = an.round_table(C15, p=0.03, rounds=6, model=ModelKind.WORST_CASE, closed_form=True)
        assert [f"{r:.2e}" for _, r, _ in rows] == printed_rates
        assert [left for _, _, left in rows] == [Fraction(11, 15) ** i for i in range(1, 7)]
        assert [round(float(left), 3) for _, _, left in rows] == printed_left


TABLE_1 = {  # p: (l, eta, alpha)
    0.01: (4, 0.289, 3.58e-13), 0.02: (5, 0.212, 2.59e-15), 0.04: (6, 0.156, 1.77e-12),
    0.05: (7, 0.114, 2.72e-14), 0.06: (8, 0.084, 8.86e-15), 0.07: (9, 0.061, 2.35e-11),
    0.08: (11, 0.024, 2.04e-11),
}
TABLE_2 = {
    0.05: (5, 0.061, 5.22e-14), 0.07: (5, 0.061, 5.93e-10), 0.09: (6, 0.035, 1.20e-12),
    0.10: (6, 0.035, 1.74e-10), 0.12: (7, 0.020, 1.66e-12), 0.13: (7, 0.011, 6.96e-10),
    0.14: (8, 0.011, 1.04e-13),
}


def _within_a_decade(computed, printed):
    """True if some value that rounds to ``printed`` (3 significant figures) is within 10x of ``computed``."""
    half_ulp = 0.005 * 10 ** math.floor(math.log10(printed))
    lo, hi = printed - half_ulp, printed + half_ulp
    return lo / 10 <= computed <= hi * 10


def test_criterion_06():
    with within(5):
        problems = []
        for code, table in ((C15, TABLE_1), (C7, TABLE_2)):
            rows = an.depth_table(code, sorted(table), 1e-9, ModelKind.DISTANCE)
            for p, l, eta, alpha in rows:
                want_l, want_eta, want_alpha = table[p]
                if l != want_l:
                    problems.append(f"n={code.n} p={p}: l={l}, printed {want_l}")
                if round(float(eta), 3) != want_eta:
                    problems.append(f"n={code.n} p={p}: eta={float(eta):.3f}, printed {want_eta}")
                if not _within_a_decade(alpha, want_alpha):
                    problems.append(f"n={code.n} p={p}: alpha={alpha:.3g}, printed {want_alpha}")
        assert not problems, "; ".join(problems)


def test_criterion_07():
    with within(1):
        # exact rationals: near p = 1 the middle term rounds to 1/(n-1) in floats
        ps = [Fraction(x) for x in np.random.default_rng(7).uniform(0, 1, 1000)]
        assert all(0 < p < 1 for p in ps) and len(ps) == 1000
        for n in (7, 15):
            low = Fraction(2, 3 * (n - 1))
            assert an.p_threshold(n) == float(low)
            for p in ps:
                assert low < an.contraction_bound(n, p) < Fraction(1, n - 1)


def test_criterion_08():
    with within(60):
        for code in (C7, C15):
            for p in (0.01, 0.02, 0.03, 0.05):
                rep = monte_carlo_single_round(code, p, 10**6, seed=8)
                bound = an.chi_upper(code.n, p) / code.n
                assert rep.post_round_error_rate <= bound + 5 * rep.post_round_stderr, (code.n, p)


def test_criterion_09():
    with within(120):
        raw_len = 15**5 * 16
        for pid in ProtocolId:
            cfg = SessionConfig(pid, C15, 5, expected_p=0.03)
            rep = end_to_end(cfg, raw_len, ChannelModel(0.03, seed=9), trials=4)
            assert rep.reconciled_bits >= 10**7, (pid, rep.reconciled_bits)
            assert rep.end_to_end_mismatch_count == 0 and rep.mismatched_bits == 0, pid
            assert rep.abort_count == 0, pid


def test_criterion_10():
    with within(30):
        cfg = SessionConfig(ProtocolId.SYNDROME_IR, C15, 1, expected_p=0.03, gate_margin_delta=0.02)
        blocks = 10**4
        honest = end_to_end(cfg, 15 * blocks, ChannelModel(0.03, seed=10), trials=1000)
        hostile = end_to_end(cfg, 15 * blocks, ChannelModel(0.15, seed=10), trials=1000)
        assert 1000 - honest.abort_count >= 997
        assert hostile.abort_count >= 990


def test_criterion_11():
    with within(5):
        assert run_selftest(cases=1000, seed=11) == []
        # exhaustive single flips under x^3 + x + 1
        msg = np.array([1, 0, 1, 0], dtype=np.uint8)
        tag = mac_tag(msg, MacKey(0b1011, 0b101))
        for i in range(4):
            bad = msg.copy()
            bad[i] ^= 1
            assert not mac_verify(bad, tag, MacKey(0b1011, 0b101))
        rng = np.random.default_rng(11)
        poly = default_poly(64)
        for _ in range(200):
            a, b = rng.integers(0, 2, (2, 300), dtype=np.uint8)
            assert np.array_equal(crc_hash(a, poly) ^ crc_hash(b, poly), crc_hash(a ^ b, poly))
        key = MacKey(poly, 12345)
        mac_tag(msg, key)
        with pytest.raises(KeyReuseError):
            mac_tag(msg, key)


def test_criterion_12():
    with within(1):
        for n in (7, 15):
            assert an.ratio_closed_form_check(n)
            w = weight_distribution_closed_form(n)
            for k in range(1, n):
                closed = an.neighbour_ratio_closed_form(n, k)
                if closed is not None:
                    assert isinstance(closed, Fraction)
                    assert closed == an.neighbour_ratio(w, k)


def test_criterion_13(tmp_path):
    argv = [sys.executable, "-m", "concat_ir", "simulate", "--protocol", "1", "--code", "15",
            "--depth", "5", "--p", "0.03", "--len", "1000000", "--trials", "2", "--seed", "7"]
    runs = [subprocess.run(argv + ["--out", str(tmp_path / f"{i}.csv")], capture_output=True)
            for i in range(2)]
    assert runs[0].returncode == runs[1].returncode == 0
    assert runs[0].stdout == runs[1].stdout
    assert (tmp_path / "0.csv").read_bytes() == (tmp_path / "1.csv").read_bytes()


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
