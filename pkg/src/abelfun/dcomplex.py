"""Homogeneous slices of the free complex ``0 -> D -> D(x)W^1 -> ... -> D(x)W^g``.

The differential is ``d(P (x) eta) = sum_i (d_i P) (x) (alpha_i ^ eta)``,
with ``d_i P`` the product in ``D = C[d_1..d_g]`` (not a derivative of a
polynomial). Monomials in ``D`` have degree equal to their total order, and
``d`` preserves total degree, so each degree ``t`` gives a finite complex of
integer matrices.

Within a slice ``d`` sends the W-degree ``e`` part to the W-degree ``e - 1``
part, so every map is block diagonal and ranks are computed block by block.

Ranks come from elimination modulo a large prime. Reduction mod p can only
lower a rank, and ``d o d = 0`` (checked exactly) gives
``rank d_(k-1) + rank d_k <= dim_k`` over Q. Modular ranks that already
reach ``dim_k`` at every ``k < g`` (with ``d_0`` injective) therefore pin
the rational ranks and certify exactness.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations_with_replacement

import numpy as np

from .charcomb import ch_D_series, ch_U_top, ch_W_closed, dim_grA
from .exact import DEFAULT_PRIME, bareiss_rank, modular_rank
from .exteralg import Blade, alpha, coset_basis, w_space_dims, wedge
from .validation import check_genus

PRIMES = (DEFAULT_PRIME, 2_147_483_629, 2_147_483_587)


@dataclass(frozen=True, order=True)
class MonomialD:
    """Monomial ``d_1^e_1 ... d_g^e_g`` in the operator ring."""

    exponents: tuple[int, ...]

    @property
    def degree(self) -> int:
        return sum(self.exponents)

    def times(self, i: int) -> "MonomialD":
        e = list(self.exponents)
        e[i - 1] += 1
        return MonomialD(tuple(e))

    def __str__(self) -> str:
        parts = [f"d{i + 1}^{e}" if e > 1 else f"d{i + 1}" for i, e in enumerate(self.exponents) if e]
        return "*".join(parts) or "1"


@lru_cache(maxsize=None)
def monomials(g: int, degree: int) -> tuple[MonomialD, ...]:
    if degree < 0:
        return ()
    out = []
    for combo in combinations_with_replacement(range(g), degree):
        e = [0] * g
        for i in combo:
            e[i] += 1
        out.append(MonomialD(tuple(e)))
    return tuple(sorted(out))


@dataclass(frozen=True)
class SliceElement:
    """Basis element ``P (x) [rep]`` with ``rep`` the ``index``-th coset at ``w_degree``."""

    mono: MonomialD
    w_degree: int
    index: int
    rep: Blade


@dataclass
class SparseMap:
    """Integer matrix stored by columns, together with its block structure."""

    rows: int
    cols: int
    columns: list[dict[int, int]]
    blocks: list[tuple[list[int], list[int]]] = field(default_factory=list)

    def dense_block(self, rows: list[int], cols: list[int]) -> list[list[int]]:
        pos = {r: i for i, r in enumerate(rows)}
        M = [[0] * len(cols) for _ in rows]
        for j, c in enumerate(cols):
            for r, v in self.columns[c].items():
                M[pos[r]][j] = v
        return M

    def compose(self, first: "SparseMap") -> list[dict[int, int]]:
        """Columns of ``self o first``, exact, zeros dropped."""
        out = []
        for col in first.columns:
            acc: dict[int, int] = {}
            for mid, a in col.items():
                for r, b in self.columns[mid].items():
                    acc[r] = acc.get(r, 0) + a * b
            out.append({r: v for r, v in acc.items() if v})
        return out

    def rank(self, method: str = "modular", p: int = DEFAULT_PRIME) -> int:
        total = 0
        for rows, cols in self.blocks:
            if not rows or not cols:
                continue
            M = self.dense_block(rows, cols)
            if method == "modular":
                total += modular_rank(np.array(M, dtype=object) % p, p)
            elif method == "bareiss":
                total += bareiss_rank(M)
            else:
                raise ValueError(f"unknown rank method {method!r}")
        return total


@dataclass
class ComplexSlice:
    """Degree-``t`` part of the complex, with bases and differentials per ``k``."""

    g: int
    t: int
    bases: list[list[SliceElement]]
    maps: list[SparseMap]

    @property
    def dims(self) -> list[int]:
        return [len(b) for b in self.bases]


def _slice_basis(g: int, t: int, k: int) -> list[SliceElement]:
    out = []
    for d in sorted(w_space_dims(g, k)):
        cb = coset_basis(g, k, d)
        for mono in monomials(g, t - d):
            for j, rep in enumerate(cb.reps):
                out.append(SliceElement(mono, d, j, rep))
    return out


def _differential(g: int, src: list[SliceElement], dst: list[SliceElement], k: int) -> SparseMap:
    pos = {(e.mono, e.w_degree, e.index): i for i, e in enumerate(dst)}
    columns: list[dict[int, int]] = []
    for e in src:
        col: dict[int, Fraction] = {}
        for i in range(1, g + 1):
            r = wedge(alpha(i), e.rep, g)
            if r is None:
                continue
            sign, blade = r
            target_deg = blade.degree
            if target_deg != e.w_degree - 1:
                raise ArithmeticError("differential failed to preserve degree")
            mono = e.mono.times(i)
            for j, x in coset_basis(g, k + 1, target_deg).blade_coords(blade).items():
                key = pos[(mono, target_deg, j)]
                col[key] = col.get(key, 0) + sign * x
        clean = {}
        for key, v in col.items():
            if v:
                v = Fraction(v)
                if v.denominator != 1:
                    raise ArithmeticError("non-integral coset coordinate")
                clean[key] = int(v)
        columns.append(clean)
    src_deg: dict[int, list[int]] = {}
    dst_deg: dict[int, list[int]] = {}
    for i, e in enumerate(src):
        src_deg.setdefault(e.w_degree, []).append(i)
    for i, e in enumerate(dst):
        dst_deg.setdefault(e.w_degree, []).append(i)
    blocks = [(dst_deg.get(d - 1, []), cols) for d, cols in sorted(src_deg.items())]
    return SparseMap(len(dst), len(src), columns, blocks)


def build_slice(g: int, t: int, check: bool = True) -> ComplexSlice:
    """Build the degree-``t`` slice and (by default) verify ``d o d = 0`` exactly."""
    check_genus(g, minimum=2)
    if t < -g:
        raise ValueError(f"total degree must be >= -g = {-g}, got {t}")
    bases = [_slice_basis(g, t, k) for k in range(g + 1)]
    maps = [_differential(g, bases[k], bases[k + 1], k) for k in range(g)]
    sl = ComplexSlice(g, t, bases, maps)
    if check and not d_squared_zero(sl):
        raise ArithmeticError(f"d o d != 0 on slice g={g}, t={t}")
    return sl


def d_squared_zero(sl: ComplexSlice) -> bool:
    return all(
        not any(sl.maps[k + 1].compose(sl.maps[k])) for k in range(len(sl.maps) - 1)
    )


@dataclass(frozen=True)
class ExactnessEntry:
    k: int
    dim: int
    rank_in: int
    rank_out: int
    exact: bool


@dataclass
class ExactnessReport:
    g: int
    t: int
    entries: list[ExactnessEntry]
    ranks: list[int]
    dims: list[int]
    prime: int | None
    certified: bool

    @property
    def all_exact(self) -> bool:
        return all(e.exact for e in self.entries)


def _entries(g: int, dims: list[int], ranks: list[int]) -> list[ExactnessEntry]:
    out = []
    for k in range(g):
        rin = ranks[k - 1] if k > 0 else 0
        rout = ranks[k]
        out.append(ExactnessEntry(k, dims[k], rin, rout, rin + rout == dims[k]))
    return out


def exactness_check(g: int, t: int, method: str = "modular", sl: ComplexSlice | None = None) -> ExactnessReport:
    """Rank-nullity report for every ``k < g`` of the degree-``t`` slice.

    With ``method="modular"`` several primes are tried until one certifies
    exactness; if none does, the last prime's report is returned with
    ``certified=False``.
    """
    sl = sl if sl is not None else build_slice(g, t)
    dims = sl.dims
    if method == "bareiss":
        ranks = [m.rank("bareiss") for m in sl.maps]
        entries = _entries(g, dims, ranks)
        return ExactnessReport(g, t, entries, ranks, dims, None, True)
    report = None
    for p in PRIMES:
        ranks = [m.rank("modular", p) for m in sl.maps]
        entries = _entries(g, dims, ranks)
        ok = all(e.exact for e in entries)
        report = ExactnessReport(g, t, entries, ranks, dims, p, ok)
        if ok:
            break
    return report


def predicted_slice_dims(g: int, t: int) -> list[int]:
    """``dim (D (x) W^k)_t`` read off the product ``ch D * ch W^k``."""
    out = []
    for k in range(g + 1):
        ch = ch_W_closed(g, k)
        span = t - ch.min_exp
        dser = ch_D_series(g, max(span, 0))
        out.append(sum(c * dser[t - e] for e, c in ch if 0 <= t - e <= span))
    return out


def _free_part_dim(g: int, t: int) -> int:
    """``dim (D (x) U^g)_t`` for the complement ``U^g`` of ``W^g``."""
    ch = ch_U_top(g)
    if not ch:
        return 0
    span = t - ch.min_exp
    if span < 0:
        return 0
    dser = ch_D_series(g, span)
    return sum(c * dser[t - e] for e, c in ch if t - e >= 0)


@dataclass(frozen=True)
class CokernelCheck:
    g: int
    t: int
    cokernel: int
    predicted: int
    gr_dim: int
    free_part: int

    @property
    def ok(self) -> bool:
        return self.cokernel == self.predicted


def top_cokernel_dims(g: int, t: int, report: ExactnessReport | None = None) -> CokernelCheck:
    """Cokernel of ``d: D(x)W^(g-1) -> D(x)W^g`` at degree ``t`` vs the character prediction.

    The prediction is ``dim gr_(t+g) A - dim (D (x) U^g)_t``.
    """
    report = report if report is not None else exactness_check(g, t)
    coker = report.dims[g] - report.ranks[g - 1]
    gr = dim_grA(g, t + g)
    free = _free_part_dim(g, t)
    return CokernelCheck(g, t, coker, gr - free, gr, free)


def slice_euler_check(g: int, t: int, dims: list[int]) -> bool:
    """Alternating slice dimensions plus the ``U^g`` correction equal ``dim gr_(t+g) A``."""
    chi = sum((-1) ** (g - k) * d for k, d in enumerate(dims))
    return chi + _free_part_dim(g, t) == dim_grA(g, t + g)
