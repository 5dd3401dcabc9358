"""Verification suites: configuration, check records and the suite runners.

Each suite returns a list of :class:`CheckRecord`. Suites run sequentially
in dependency order (characters, exterior, complex, theta, abelian), so a
report depends only on the configuration and seed.
"""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import abelianfn as af
from . import charcomb as cc
from . import dcomplex as dc
from . import exteralg as ea
from . import thetafn as tf
from .validation import ValidationError

SUITES = ("characters", "exterior", "complex", "theta", "abelian")

# Published dimension rows, used as the oracle for the characters suite.
REFERENCE_TABLES = {
    2: (1, 0, 3, 1),
    3: (1, 0, 7, 6, 1),
    4: (1, 0, 15, 25, 10, 1),
    5: (1, 0, 31, 96, 66, 15, 1),
}
REFERENCE_TOTALS = {2: 5, 3: 15, 4: 52, 5: 210}

DEFAULT_TAU = {
    1: [[[0.0, 1.0]]],
    2: [
        [[0.2, 1.0], [0.3, 0.5]],
        [[0.3, 0.5], [-0.1, 1.5]],
    ],
    3: [
        [[0.1, 1.2], [0.2, 0.3], [-0.1, 0.2]],
        [[0.2, 0.3], [-0.2, 1.0], [0.15, 0.25]],
        [[-0.1, 0.2], [0.15, 0.25], [0.3, 1.4]],
    ],
    4: [
        [[0.1, 1.2], [0.2, 0.3], [-0.1, 0.2], [0.05, 0.1]],
        [[0.2, 0.3], [-0.2, 1.0], [0.15, 0.25], [0.1, -0.15]],
        [[-0.1, 0.2], [0.15, 0.25], [0.3, 1.4], [-0.2, 0.3]],
        [[0.05, 0.1], [0.1, -0.15], [-0.2, 0.3], [0.25, 1.3]],
    ],
}

DEFAULT_CUTOFFS = {
    "characters_max_g": 12,
    "prop3_max_g": 25,
    "euler_max_g": 6,
    "exterior_max_g": 6,
    "complex_max_t": {"2": 8, "3": 6, "4": 4},
    "order_n_pairs": [[2, 2], [2, 3], [2, 4], [3, 2], [3, 3]],
    "gr_max_n": {"2": 5, "3": 3},
    "fs_max_n": 4,
}

# Upper limits for cutoffs; beyond these the exact suites stop being desk-scale.
SAFE_CUTOFFS = {
    "characters_max_g": 40,
    "prop3_max_g": 60,
    "euler_max_g": 10,
    "exterior_max_g": 7,
    "complex_max_t": {"2": 14, "3": 9, "4": 5},
    "gr_max_n": {"2": 7, "3": 4},
    "fs_max_n": 6,
}


@dataclass
class WorkbenchConfig:
    """Settings for a verification run; see the README for the JSON schema."""

    genus: list[int] | None = None
    tau: dict[int, list] = field(default_factory=lambda: dict(DEFAULT_TAU))
    fs_tau: list[list[float]] = field(default_factory=lambda: [[0.0, 1.0], [0.5, 1.5]])
    seed: int = 0
    samples: int = 20
    rank_samples: int = 64
    fs_configurations: int = 10
    theta_floor: float = 1e-2
    target_abs_error: float = 1e-12
    rank_tol: float = 1e-8
    cutoffs: dict = field(default_factory=lambda: json.loads(json.dumps(DEFAULT_CUTOFFS)))
    suites: list[str] = field(default_factory=lambda: list(SUITES))

    def __post_init__(self):
        self.tau = {int(k): v for k, v in self.tau.items()}
        self.period_matrices = {}
        for g, entries in sorted(self.tau.items()):
            try:
                pm = tf.PeriodMatrix.from_pairs(entries)
            except ValidationError as exc:
                raise ValidationError(f"tau[{g}]: {exc}") from None
            if pm.g != g:
                raise ValidationError(f"tau[{g}]: matrix has size {pm.g}")
            self.period_matrices[g] = pm
        for name in ("theta_floor", "target_abs_error", "rank_tol"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be positive")
        for name in ("samples", "rank_samples", "fs_configurations"):
            if int(getattr(self, name)) < 1:
                raise ValidationError(f"{name} must be >= 1")
        for s in self.suites:
            if s not in SUITES:
                raise ValidationError(f"suites: unknown suite {s!r}")
        merged = json.loads(json.dumps(DEFAULT_CUTOFFS))
        for k, v in self.cutoffs.items():
            if k not in merged:
                raise ValidationError(f"cutoffs: unknown key {k!r}")
            merged[k] = {**merged[k], **v} if isinstance(merged[k], dict) else v
        for k, limit in SAFE_CUTOFFS.items():
            vals = merged[k]
            pairs = vals.items() if isinstance(vals, dict) else [(None, vals)]
            for sub, v in pairs:
                cap = limit[sub] if isinstance(limit, dict) else limit
                if not isinstance(v, int) or v > cap:
                    where = f"{k}.{sub}" if sub else k
                    raise ValidationError(f"cutoffs.{where} = {v!r} outside the safe range (<= {cap})")
        self.cutoffs = merged
        self.theta_config = tf.ThetaEvalConfig(target_abs_error=self.target_abs_error)

    @classmethod
    def from_dict(cls, data: dict) -> "WorkbenchConfig":
        if not isinstance(data, dict):
            raise ValidationError("config root must be a JSON object")
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_file(cls, path) -> "WorkbenchConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ValidationError(f"cannot read config {path}: {exc.strerror}") from None
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
        return cls.from_dict(data)

    def wants(self, g: int) -> bool:
        return self.genus is None or g in self.genus


@dataclass
class CheckRecord:
    suite: str
    name: str
    params: dict
    status: str
    payload: dict
    elapsed: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer, int)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        return float(x)
    return x


class _Recorder:
    def __init__(self, suite: str):
        self.suite = suite
        self.records: list[CheckRecord] = []

    def check(self, name: str, params: dict, fn: Callable[[], tuple[bool, dict]]) -> CheckRecord:
        t0 = time.perf_counter()
        try:
            ok, payload = fn()
            status = "pass" if ok else "fail"
        except (ArithmeticError, ValueError) as exc:
            status, payload = "fail", {"error": f"{type(exc).__name__}: {exc}"}
        rec = CheckRecord(self.suite, name, _jsonable(params), status, _jsonable(payload),
                          round(time.perf_counter() - t0, 4))
        self.records.append(rec)
        return rec


# ---------------------------------------------------------------- suites


def suite_characters(cfg: WorkbenchConfig) -> list[CheckRecord]:
    r = _Recorder("characters")
    top = cfg.cutoffs["characters_max_g"]
    for g in range(2, top + 1):
        if not cfg.wants(g):
            continue

        def table(g=g):
            t = cc.dim_table(g)
            payload = {"values": t.values, "total": t.total, "row": t.row()}
            ok = True
            if g in REFERENCE_TABLES:
                payload["expected"] = REFERENCE_TABLES[g]
                payload["expected_total"] = REFERENCE_TOTALS[g]
                ok = t.values == REFERENCE_TABLES[g] and t.total == REFERENCE_TOTALS[g]
            return ok, payload

        r.check("table", {"g": g}, table)

        def closed(g=g):
            a, b = cc.ch_H_top_closed(g), cc.ch_H_top_table(g)
            return a == b, {"closed": dict(a.coeffs), "table": dict(b.coeffs)}

        r.check("closed_form", {"g": g}, closed)
    for g in range(2, cfg.cutoffs["prop3_max_g"] + 1):
        if not cfg.wants(g):
            continue

        def prop3(g=g):
            top, betti = cc.prop3_identities(g)
            return top and betti, {
                "a_top": cc.eq12(g, g + 1),
                "expected_a_top": 1,
                "sum": sum(cc.a_dim(g, n) for n in range(g + 2)),
                "expected_sum": cc.top_betti_affine(g),
            }

        r.check("boundary_and_betti", {"g": g}, prop3)
    for g in range(2, cfg.cutoffs["euler_max_g"] + 1):
        if not cfg.wants(g):
            continue

        def euler(g=g):
            order = 2 * g + 5
            lhs, rhs = cc.euler_identity_sides(g, order)
            return lhs == rhs, {"order": order, "lhs": dict(lhs.coeffs), "rhs": dict(rhs.coeffs)}

        r.check("euler_identity", {"g": g}, euler)
    return r.records


def suite_exterior(cfg: WorkbenchConfig) -> list[CheckRecord]:
    r = _Recorder("exterior")
    for g in range(1, cfg.cutoffs["exterior_max_g"] + 1):
        if not cfg.wants(g):
            continue
        for k in range(g + 1):

            def lemma(g=g, k=k):
                brute = ea.w_character(g, k)
                closed = cc.ch_W_closed(g, k)
                return brute == closed, {"brute": dict(brute.coeffs), "expected": dict(closed.coeffs)}

            r.check("w_character", {"g": g, "k": k}, lemma)
    return r.records


def suite_complex(cfg: WorkbenchConfig) -> list[CheckRecord]:
    r = _Recorder("complex")
    for gs, tmax in sorted(cfg.cutoffs["complex_max_t"].items()):
        g = int(gs)
        if not cfg.wants(g):
            continue
        for t in range(-g, tmax + 1):

            def slice_check(g=g, t=t):
                sl = dc.build_slice(g, t)  # raises unless d o d = 0
                dims = sl.dims
                predicted = dc.predicted_slice_dims(g, t)
                rep = dc.exactness_check(g, t, sl=sl)
                cok = dc.top_cokernel_dims(g, t, rep)
                euler = dc.slice_euler_check(g, t, dims)
                ok = dims == predicted and rep.certified and rep.all_exact and cok.ok and euler
                return ok, {
                    "dims": dims,
                    "expected_dims": predicted,
                    "ranks": rep.ranks,
                    "exact": [e.exact for e in rep.entries],
                    "prime": rep.prime,
                    "d_squared_zero": True,
                    "top_cokernel": cok.cokernel,
                    "expected_top_cokernel": cok.predicted,
                    "gr_dim": cok.gr_dim,
                    "free_part": cok.free_part,
                    "euler": euler,
                }

            r.check("slice", {"g": g, "t": t}, slice_check)
    return r.records


def _theta_points(pm, count, rng):
    return tf.sample_cell(pm, count, rng)


def suite_theta(cfg: WorkbenchConfig) -> list[CheckRecord]:
    r = _Recorder("theta")
    tc = cfg.theta_config
    for g, pm in sorted(cfg.period_matrices.items()):
        if not cfg.wants(g):
            continue
        rng = np.random.default_rng([cfg.seed, g])
        Z = _theta_points(pm, cfg.samples, rng)

        def quasi(pm=pm, Z=Z, rng=rng):
            worst = 0.0
            for z in Z:
                p = rng.integers(-2, 3, pm.g)
                q = rng.integers(-2, 3, pm.g)
                worst = max(worst, tf.quasiperiodicity_residual(z, p, q, pm, tc))
            return worst < 1e-9, {"max_residual": worst, "tolerance": 1e-9}

        r.check("quasi_periodicity", {"g": g}, quasi)

        def fd(pm=pm, Z=Z):
            g = pm.g
            h = 1e-5
            worst = 0.0
            zero = [(0,) * g]
            for i in range(g):
                e = np.zeros(g)
                e[i] = h
                diff = tf.theta_derivatives(Z + e, pm, zero, cfg=tc) - tf.theta_derivatives(Z - e, pm, zero, cfg=tc)
                approx = diff[:, 0] / (2 * h)
                exact = tf.theta_derivatives(Z, pm, [tuple(int(j == i) for j in range(g))], cfg=tc)[:, 0]
                worst = max(worst, float(np.max(np.abs(approx - exact) / np.abs(exact))))
            return worst < 1e-6, {"max_relative_error": worst, "tolerance": 1e-6, "step": h}

        r.check("finite_difference", {"g": g}, fd)

        def doubling(pm=pm, Z=Z):
            idx = tf.multi_indices(pm.g, 2)
            a = tf.theta_derivatives(Z, pm, idx, cfg=tc, normalized=True)
            wide = tf.ThetaEvalConfig(target_abs_error=tc.target_abs_error, radius_scale=2.0)
            b = tf.theta_derivatives(Z, pm, idx, cfg=wide, normalized=True)
            d = float(np.max(np.abs(a - b)))
            return d <= 1e-12, {"max_change": d, "tolerance": 1e-12}

        r.check("radius_doubling", {"g": g}, doubling)
    for g, n in cfg.cutoffs["order_n_pairs"]:
        if not cfg.wants(g) or g not in cfg.period_matrices:
            continue

        def order_n(g=g, n=n):
            pm = cfg.period_matrices[g]
            basis = tf.order_n_basis(pm, n)
            plan = af.SamplePlan(cfg.seed, max(cfg.rank_samples, 3 * len(basis)), cfg.theta_floor)
            Z = af.draw_samples(pm, plan, tc)
            M = np.column_stack([f(Z, tc) for f in basis])
            rep = af.rank_report(M, cfg.rank_tol, expected=n**g)
            return rep.verdict, {"rank": rep.rank, "expected": n**g, "gap": rep.gap()}

        r.check("order_n_rank", {"g": g, "n": n}, order_n)
    return r.records


def suite_abelian(cfg: WorkbenchConfig) -> list[CheckRecord]:
    r = _Recorder("abelian")
    tc = cfg.theta_config
    pms = cfg.period_matrices
    plan = af.SamplePlan(cfg.seed, cfg.rank_samples, cfg.theta_floor)
    v = None
    if cfg.wants(3) and 3 in pms:

        def pick():
            nonlocal v
            v, info = af.select_v3(pms[3], plan, tc, cfg.rank_tol)
            ok = info["base_rank"] == 7 and info["combined_rank"] == 8
            return ok, {**info, "v": str(v), "expected_base_rank": 7, "expected_combined_rank": 8}

        r.check("select_v3", {"g": 3}, pick)
    for gs, nmax in sorted(cfg.cutoffs["gr_max_n"].items()):
        g = int(gs)
        if not cfg.wants(g) or g not in pms or (g == 3 and v is None):
            continue
        for n in range(nmax + 1):

            def rank(g=g, n=n):
                labels = af.cumulative_labels(g, n, v)
                rep = af.gr_rank_test(g, n, labels, plan, pms[g], tc, cfg.rank_tol)
                return rep.verdict, {"labels": len(labels), "rank": rep.rank, "expected": rep.expected,
                                     "gap": rep.gap()}

            r.check("basis_rank", {"g": g, "n": n}, rank)
    relations = [("R43", 2, (1, 1, 2)), ("R43", 3, (1, 2, 3)), ("R44", 3, (1, 2, 1, 2, 3)),
                 ("R44", 3, (1, 3, 2, 3, 1)), ("R41", 4, (1, 2, 3, 4))]
    for kind, g, idx in relations:
        if not cfg.wants(g) or g not in pms:
            continue

        def rel(kind=kind, g=g, idx=idx):
            tol = 1e-12 if kind == "R43" else 1e-8
            Z = af.draw_samples(pms[g], af.SamplePlan(cfg.seed + 1, cfg.samples, cfg.theta_floor), tc)
            res = af.relation_residuals(kind, idx, Z, pms[g], tc, cfg.theta_floor)
            return float(res.max()) < tol, {"max_residual": float(res.max()), "tolerance": tol}

        r.check("relation", {"kind": kind, "g": g, "indices": idx}, rel)
    if cfg.wants(1):
        for tau in cfg.fs_tau:
            for n in range(2, cfg.cutoffs["fs_max_n"] + 1):

                def fs(tau=tau, n=n):
                    t = complex(tau[0], tau[1])
                    rng = np.random.default_rng([cfg.seed, n])
                    worst, done = 0.0, 0
                    while done < cfg.fs_configurations:
                        z = rng.random(n) + t * rng.random(n)
                        try:
                            worst = max(worst, af.frobenius_stickelberger_residual(z, t, tc, cfg.theta_floor))
                            done += 1
                        except af.NearDivisorError:
                            continue
                    return worst < 1e-8, {"max_residual": worst, "tolerance": 1e-8}

                r.check("frobenius_stickelberger", {"tau": tau, "n": n}, fs)
    for g, j in ((1, 1), (3, 2)):
        if not cfg.wants(g) or g not in pms:
            continue

        def hirota(g=g, j=j):
            Z = af.draw_samples(pms[g], af.SamplePlan(cfg.seed + 2, cfg.samples, cfg.theta_floor), tc)
            res = af.hirota4_residual(Z, pms[g], j, tc, cfg.theta_floor)
            return float(res.max()) < 1e-8, {"max_residual": float(res.max()), "tolerance": 1e-8}

        r.check("hirota", {"g": g, "j": j}, hirota)
    for lab, order, expect in probe_labels(v):
        g = lab.g
        if not cfg.wants(g) or g not in pms:
            continue

        def probe(lab=lab, order=order, expect=expect):
            res = af.pole_order_probe(lab, pms[lab.g], order, cfg.seed, tc)
            return res.bounded == expect, {"ratios": res.ratios, "bounded": res.bounded,
                                           "expected_bounded": expect}

        r.check("pole_order", {"label": str(lab), "order": order}, probe)
    return r.records


def probe_labels(v: af.V3Element | None) -> list[tuple]:
    """One representative per basis family, plus the negative control."""
    out = [
        (af.Zeta((2, 0)), 2, True),
        (af.Zeta((2, 1)), 3, True),
        (af.Det((1, 2), (1, 2), (0, 0)), 3, True),
        (af.Det((1, 2), (1, 2), (1, 0)), 4, True),
        (af.Det((1, 2), (1, 2), (0, 0)), 2, False),
        (af.Zeta((1, 1, 0)), 2, True),
        (af.Det((1, 2), (1, 3), (0, 1, 0)), 4, True),
        (af.Det((1, 3), (2, 3), (0, 0, 1)), 4, True),
        (af.Det((1, 2, 3), (1, 2, 3), (0, 0, 0)), 4, True),
    ]
    if v is not None:
        out += [(v, 2, True), (v.differentiate((0, 0, 1)), 3, True)]
    return [(lab, order, expect) for lab, order, expect in out]


RUNNERS = {
    "characters": suite_characters,
    "exterior": suite_exterior,
    "complex": suite_complex,
    "theta": suite_theta,
    "abelian": suite_abelian,
}


def run(cfg: WorkbenchConfig, suites=None) -> tuple[list[CheckRecord], int]:
    """Run the selected suites in dependency order; exit status 0 iff nothing failed."""
    selected = [s for s in SUITES if s in (cfg.suites if suites is None else suites)]
    if not selected:
        return [CheckRecord("none", "warning", {}, "skip", {"message": "no suites selected"})], 0
    records: list[CheckRecord] = []
    for s in selected:
        records += RUNNERS[s](cfg)
    status = int(any(rec.status == "fail" for rec in records))
    return records, status


def emit_report(records: list[CheckRecord], fmt: str = "json") -> str:
    """Render records as stable JSON or as aligned text."""
    if fmt == "json":
        return json.dumps({"records": [rec.to_dict() for rec in records]}, indent=2, sort_keys=True)
    if fmt != "table":
        raise ValueError(f"unknown format {fmt!r}")
    lines = []
    rows = []
    for rec in records:
        params = " ".join(f"{k}={v}" for k, v in rec.params.items())
        detail = rec.payload.get("row") or rec.payload.get("message") or rec.payload.get("error") or ""
        if rec.status == "fail" and not detail:
            detail = json.dumps(rec.payload, sort_keys=True)[:200]
        rows.append((rec.suite, rec.name, params, rec.status.upper(), str(detail)))
    widths = [max(len(row[i]) for row in rows) for i in range(4)]
    for row in rows:
        lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)) + ("  " + row[4] if row[4] else ""))
    tables = [rec for rec in records if rec.suite == "characters" and rec.name == "table" and "row" in rec.payload]
    if tables:
        lines.append("")
        lines.append("a_n by genus (n = 0 .. g+1) | total")
        for rec in tables:
            lines.append(f"g={rec.params['g']:<3} {rec.payload['row']}")
    failed = sum(rec.status == "fail" for rec in records)
    lines.append("")
    lines.append(f"{len(records)} checks, {failed} failed")
    return "\n".join(lines)


def records_from_json(text: str) -> list[CheckRecord]:
    return [CheckRecord(**d) for d in json.loads(text)["records"]]
