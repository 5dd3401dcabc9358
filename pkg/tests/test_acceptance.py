"""Acceptance criteria 1-14, each with its tolerance and time budget.

Every criterion prints one ``PASS``/``FAIL`` line in the pytest terminal
summary (and when this file is run directly as a script).
"""

import time
from math import comb

import numpy as np
import pytest

from abelfun import abelianfn as af
from abelfun import charcomb as cc
from abelfun import dcomplex as dc
from abelfun import exteralg as ea
from abelfun import thetafn as tf
from abelfun.suites import DEFAULT_TAU, probe_labels

RESULTS: dict[int, str] = {}

PMS = {g: tf.PeriodMatrix.from_pairs(t) for g, t in DEFAULT_TAU.items()}


def _clear_caches():
    for fn in (ea.graded_basis, ea._omega_block, ea.coset_basis, dc.monomials):
        fn.cache_clear()


class Criterion:
    """Context manager that times a criterion and records its outcome."""

    def __init__(self, number: int, title: str, budget: float):
        self.number, self.title, self.budget = number, title, budget
        self.detail = ""

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.perf_counter() - self.t0
        within = elapsed < self.budget
        ok = exc_type is None and within
        note = self.detail if exc_type is None else f"{exc_type.__name__}: {str(exc).splitlines()[0][:120]}"
        RESULTS[self.number] = (
            f"criterion {self.number:>2} {'PASS' if ok else 'FAIL'}  {self.title}  "
            f"[{elapsed:.2f}s / {self.budget:g}s] {note}"
        )
        if exc_type is None and not within:
            raise AssertionError(f"criterion {self.number} exceeded {self.budget}s ({elapsed:.1f}s)")
        return False


def _samples(pm, count, seed):
    return af.draw_samples(pm, af.SamplePlan(seed, count))


def test_criterion_01_dimension_tables():
    tables = {2: [1, 0, 3, 1], 3: [1, 0, 7, 6, 1], 4: [1, 0, 15, 25, 10, 1], 5: [1, 0, 31, 96, 66, 15, 1]}
    totals = {2: 5, 3: 15, 4: 52, 5: 210}
    with Criterion(1, "dimension tables g=2..5", 1.0) as c:
        for g in tables:
            assert [cc.a_dim(g, n) for n in range(g + 2)] == tables[g]
            assert cc.dim_table(g).total == totals[g]
        c.detail = "sums 5, 15, 52, 210"


def test_criterion_02_top_value_is_one():
    with Criterion(2, "closed formula equals 1 at n = g+1, g=2..25", 1.0) as c:
        for g in range(2, 26):
            assert cc.eq12(g, g + 1) == 1
        c.detail = "24 genera"


def test_criterion_03_closed_character():
    with Criterion(3, "closed character equals table character, g=2..12", 1.0) as c:
        for g in range(2, 13):
            assert cc.ch_H_top_closed(g) == cc.ch_H_top_table(g)
        c.detail = "11 genera"


def test_criterion_04_quotient_characters():
    _clear_caches()
    with Criterion(4, "brute-force W^k dims equal closed character, g<=6, k<=g", 30.0) as c:
        n = 0
        for g in range(1, 7):
            for k in range(g + 1):
                assert ea.w_space_dims(g, k) == cc.ch_W_closed(g, k).coeffs
                n += 1
        # independent size check: the per-degree counts of wedge^k V add up
        assert all(len(ea.graded_basis(g, k)) == comb(2 * g, k) for g in range(1, 7) for k in range(g + 1))
        c.detail = f"{n} (g, k) pairs"


def test_criterion_05_euler_identity():
    with Criterion(5, "Euler characteristic identity to t^(2g+5), g=2..6", 10.0) as c:
        for g in range(2, 7):
            lhs, rhs = cc.euler_identity_sides(g, 2 * g + 5)
            assert lhs == rhs
        c.detail = "exact series"


SLICE_CUTOFFS = {2: 8, 3: 6, 4: 4}
_slice_reports: dict = {}


def test_criterion_06_exactness():
    _clear_caches()
    with Criterion(6, "slice exactness at k != g, d o d = 0", 300.0) as c:
        count = 0
        for g, tmax in SLICE_CUTOFFS.items():
            for t in range(-g, tmax + 1):
                sl = dc.build_slice(g, t, check=False)
                assert dc.d_squared_zero(sl)
                assert sl.dims == dc.predicted_slice_dims(g, t)
                rep = dc.exactness_check(g, t, sl=sl)
                assert rep.certified and rep.all_exact, (g, t, rep.entries)
                _slice_reports[(g, t)] = rep
                count += 1
        c.detail = f"{count} slices"


def test_criterion_07_top_cokernels():
    with Criterion(7, "top cokernel dims match the character prediction", 300.0) as c:
        for g, tmax in SLICE_CUTOFFS.items():
            for t in range(-g, tmax + 1):
                rep = _slice_reports.get((g, t)) or dc.exactness_check(g, t)
                chk = dc.top_cokernel_dims(g, t, rep)
                gr = (t + g) ** g - (t + g - 1) ** g if t + g >= 2 else int(t + g == 0)
                assert chk.gr_dim == gr
                if g == 2:
                    assert chk.cokernel == gr
                elif g == 3:
                    # one generator of degree -1 in the complement: binom(t+3, 2) extra monomials
                    assert chk.cokernel == gr - (comb(t + 3, 2) if t >= -1 else 0)
                assert chk.ok
        c.detail = "g=2 direct, g=3 corrected, g=4 via character"


def test_criterion_08_theta_engine():
    with Criterion(8, "theta quasi-periodicity, derivatives, radius doubling", 60.0) as c:
        worst = [0.0, 0.0, 0.0]
        for g in range(1, 5):
            pm = PMS[g]
            rng = np.random.default_rng(100 + g)
            Z = tf.sample_cell(pm, 20, rng)
            for z in Z:
                p, q = rng.integers(-2, 3, g), rng.integers(-2, 3, g)
                worst[0] = max(worst[0], tf.quasiperiodicity_residual(z, p, q, pm))
            h = 1e-5
            for i in range(g):
                e = np.zeros(g)
                e[i] = h
                d = tuple(int(j == i) for j in range(g))
                fd = (tf.theta_derivatives(Z + e, pm, [(0,) * g]) - tf.theta_derivatives(Z - e, pm, [(0,) * g]))[:, 0] / (2 * h)
                ex = tf.theta_derivatives(Z, pm, [d])[:, 0]
                worst[1] = max(worst[1], float(np.max(np.abs(fd - ex) / np.abs(ex))))
            idx = tf.multi_indices(g, 2)
            a = tf.theta_derivatives(Z, pm, idx, normalized=True)
            b = tf.theta_derivatives(Z, pm, idx, cfg=tf.ThetaEvalConfig(radius_scale=2.0), normalized=True)
            worst[2] = max(worst[2], float(np.max(np.abs(a - b))))
        assert worst[0] < 1e-9
        assert worst[1] < 1e-6
        assert worst[2] <= 1e-12
        c.detail = f"qp {worst[0]:.1e}, fd {worst[1]:.1e}, doubling {worst[2]:.1e}"


def test_criterion_09_order_n_ranks():
    with Criterion(9, "order-n theta quotients have rank n^g", 120.0) as c:
        gaps = []
        for g, n in [(2, 2), (2, 3), (2, 4), (3, 2), (3, 3)]:
            pm = PMS[g]
            basis = tf.order_n_basis(pm, n)
            Z = _samples(pm, 3 * n**g, seed=g * 10 + n)
            M = np.column_stack([f(Z) for f in basis])
            rep = af.rank_report(M, 1e-8, expected=n**g)
            assert rep.rank == n**g
            gaps.append(rep.gap())
        c.detail = f"smallest kept singular value ratio {min(gaps):.1e}"


def test_criterion_10_basis_ranks():
    with Criterion(10, "explicit bases: rank n^2 (g=2, n<=5), n^3 (g=3, n<=3)", 180.0) as c:
        plan = af.SamplePlan(7, 64)
        for n in range(0, 6):
            labels = af.cumulative_labels(2, n)
            rep = af.gr_rank_test(2, n, labels, plan, PMS[2])
            assert rep.rank == len(labels) == (n**2 if n else 1)
        v, info = af.select_v3(PMS[3], plan)
        assert info["combined_rank"] == 8 and info["base_rank"] == 7
        for n in range(0, 4):
            labels = af.cumulative_labels(3, n, v)
            rep = af.gr_rank_test(3, n, labels, plan, PMS[3])
            assert rep.rank == len(labels) == (n**3 if n else 1)
        c.detail = f"v = {v}"


def test_criterion_11_relations():
    with Criterion(11, "relations R43 < 1e-12, R44 and R41 < 1e-8", 60.0) as c:
        Z2, Z3, Z4 = (_samples(PMS[g], 20, seed=11) for g in (2, 3, 4))
        r43 = max(af.relation_residuals("R43", (1, 2, 3), Z3, PMS[3]).max(),
                  af.relation_residuals("R43", (1, 1, 2), Z2, PMS[2]).max())
        r44 = max(af.relation_residuals("R44", idx, Z3, PMS[3]).max()
                  for idx in [(1, 2, 1, 2, 3), (1, 3, 2, 3, 1), (2, 3, 1, 2, 3)])
        r41 = max(af.relation_residuals("R41", idx, Z4, PMS[4]).max() for idx in [(1, 2, 3, 4), (2, 1, 3, 4)])
        assert r43 < 1e-12 and r44 < 1e-8 and r41 < 1e-8
        c.detail = f"R43 {r43:.1e}, R44 {r44:.1e}, R41 {r41:.1e}"


def test_criterion_12_frobenius_stickelberger():
    with Criterion(12, "genus-one addition formula, n=2,3,4, two tau", 30.0) as c:
        worst = 0.0
        for tau in (1j, 0.5 + 1.5j):
            for n in (2, 3, 4):
                rng = np.random.default_rng(n)
                done = 0
                while done < 10:
                    z = rng.random(n) + tau * rng.random(n)
                    try:
                        worst = max(worst, af.frobenius_stickelberger_residual(z, tau))
                        done += 1
                    except af.NearDivisorError:
                        continue
        assert worst < 1e-8
        c.detail = f"max relative residual {worst:.1e}"


def test_criterion_13_bilinear_identity():
    with Criterion(13, "fourth-order bilinear identity, g in {1, 3}", 10.0) as c:
        worst = 0.0
        for g, j in ((1, 1), (3, 2)):
            Z = _samples(PMS[g], 20, seed=13)
            worst = max(worst, float(af.hirota4_residual(Z, PMS[g], j).max()))
        assert worst < 1e-8
        c.detail = f"max residual {worst:.1e}"


def test_criterion_14_pole_orders():
    with Criterion(14, "pole-order probes for every basis family + negative control", 60.0) as c:
        v, _ = af.select_v3(PMS[3], af.SamplePlan(0, 64))
        checked = 0
        for lab, order, expect in probe_labels(v):
            res = af.pole_order_probe(lab, PMS[lab.g], order)
            assert res.bounded == expect, (str(lab), order, res.ratios)
            checked += 1
        c.detail = f"{checked} probes, (12;12) at order 2 unbounded"


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
