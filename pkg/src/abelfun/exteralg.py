"""Graded exterior algebra on ``V = V_+ (+) V_-`` and the quotients ``W^k``.

Generators are ``beta_1..beta_g`` (spanning ``V_+``) and ``alpha_1..alpha_g``
(spanning ``V_-``). A blade is stored as a pair of bitmasks; its canonical
form lists beta factors first, then alpha factors, each ascending. Wedge
signs follow from counting transpositions against that global order
``beta_1 < ... < beta_g < alpha_1 < ... < alpha_g``.

Degree rule: a blade with at least one beta factor and ``k`` alpha factors
has degree ``1 - k``; a pure alpha blade of length ``k`` has degree ``-k``.
This grading is not additive. In particular ``omega = sum beta_i ^ alpha_i``
has degree 0, yet wedging with it lowers the degree of blades that already
carry a beta factor. The image ``omega ^ (wedge^(k-2) V)`` is nonetheless a
graded subspace: every source blade with ``m`` alpha factors lands in
degree ``-m``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations

from .exact import EchelonSpan, IntMatrix, bareiss_rank, modular_rank, solve_exact
from .laurent import LaurentPoly
from .validation import check_genus


def _popcount(x: int) -> int:
    return bin(x).count("1")


def _mask_to_indices(mask: int) -> tuple[int, ...]:
    return tuple(i + 1 for i in range(mask.bit_length()) if mask >> i & 1)


def _indices_to_mask(idx) -> int:
    m = 0
    for i in idx:
        m |= 1 << (i - 1)
    return m


@dataclass(frozen=True, order=True)
class Blade:
    """Basis element ``beta_I ^ alpha_J`` with ``I = beta_set``, ``J = alpha_set``.

    Ordering compares ``(beta_set, alpha_set)`` lexicographically, which is
    the canonical order used for greedy coset selection.
    """

    beta_set: tuple[int, ...] = ()
    alpha_set: tuple[int, ...] = ()

    def __post_init__(self):
        for s in (self.beta_set, self.alpha_set):
            if list(s) != sorted(set(s)) or any(i < 1 for i in s):
                raise ValueError(f"index sets must be strictly increasing and positive: {s}")

    @classmethod
    def from_masks(cls, beta_mask: int, alpha_mask: int) -> "Blade":
        return cls(_mask_to_indices(beta_mask), _mask_to_indices(alpha_mask))

    @property
    def beta_mask(self) -> int:
        return _indices_to_mask(self.beta_set)

    @property
    def alpha_mask(self) -> int:
        return _indices_to_mask(self.alpha_set)

    @property
    def grade(self) -> int:
        return len(self.beta_set) + len(self.alpha_set)

    @property
    def degree(self) -> int:
        if self.beta_set:
            return 1 - len(self.alpha_set)
        return -len(self.alpha_set)

    def global_mask(self, g: int) -> int:
        return self.beta_mask | (self.alpha_mask << g)

    def __str__(self) -> str:
        parts = [f"b{i}" for i in self.beta_set] + [f"a{j}" for j in self.alpha_set]
        return "^".join(parts) if parts else "1"


def _reorder_sign(a: int, b: int) -> int:
    """Sign of ``e_A ^ e_B`` relative to the sorted blade ``e_(A|B)``."""
    a >>= 1
    swaps = 0
    while a:
        swaps += _popcount(a & b)
        a >>= 1
    return -1 if swaps & 1 else 1


def wedge(x: Blade, y: Blade, g: int) -> tuple[int, Blade] | None:
    """``x ^ y`` as ``(sign, blade)``, or ``None`` when it vanishes."""
    mx, my = x.global_mask(g), y.global_mask(g)
    if mx & my:
        return None
    sign = _reorder_sign(mx, my)
    m = mx | my
    full = (1 << g) - 1
    return sign, Blade.from_masks(m & full, m >> g)


def beta(i: int) -> Blade:
    return Blade((i,), ())


def alpha(i: int) -> Blade:
    return Blade((), (i,))


def omega_terms(g: int) -> list[tuple[int, Blade]]:
    """``omega = sum_i beta_i ^ alpha_i`` as signed canonical blades."""
    return [wedge(beta(i), alpha(i), g) for i in range(1, g + 1)]


class GradedBasis:
    """All blades of ``wedge^k V`` in canonical order, grouped by degree."""

    def __init__(self, g: int, k: int):
        self.g = check_genus(g)
        if not 0 <= k <= 2 * g:
            raise ValueError(f"k must lie in [0, {2 * g}], got {k}")
        self.k = k
        blades = []
        for nb in range(0, k + 1):
            na = k - nb
            if nb > g or na > g:
                continue
            for bs in combinations(range(1, g + 1), nb):
                for as_ in combinations(range(1, g + 1), na):
                    blades.append(Blade(bs, as_))
        self.blades: list[Blade] = sorted(blades)
        self.index = {b: i for i, b in enumerate(self.blades)}
        self.by_degree: dict[int, list[Blade]] = {}
        for b in self.blades:
            self.by_degree.setdefault(b.degree, []).append(b)

    def __len__(self) -> int:
        return len(self.blades)

    def character(self) -> LaurentPoly:
        return LaurentPoly({d: len(bs) for d, bs in self.by_degree.items()})


@lru_cache(maxsize=None)
def graded_basis(g: int, k: int) -> GradedBasis:
    return GradedBasis(g, k)


def omega_image(b: Blade, g: int) -> dict[Blade, int]:
    """``omega ^ b`` as a sparse signed combination of canonical blades."""
    out: dict[Blade, int] = {}
    for s, w in omega_terms(g):
        r = wedge(w, b, g)
        if r is not None:
            sign, blade = r
            out[blade] = out.get(blade, 0) + s * sign
    return {k: v for k, v in out.items() if v}


def wedge_omega_matrix(g: int, k: int) -> IntMatrix:
    """Matrix of ``omega ^ (-)``: ``wedge^k V -> wedge^(k+2) V`` in blade bases."""
    check_genus(g)
    if not 0 <= k <= 2 * g - 2:
        raise ValueError(f"k must lie in [0, {2 * g - 2}], got {k}")
    src, dst = graded_basis(g, k), graded_basis(g, k + 2)
    M = IntMatrix.zeros(len(dst), len(src))
    for j, b in enumerate(src.blades):
        for blade, c in omega_image(b, g).items():
            M[dst.index[blade], j] = c
    return M


@lru_cache(maxsize=None)
def _omega_block(g: int, k: int, degree: int) -> tuple[tuple[Blade, ...], tuple[tuple[int, ...], ...]]:
    """Rows of degree ``degree`` in ``wedge^k V`` against the omega-image columns.

    Returns the target blades and the image vectors (one tuple per source
    blade whose image lands in that degree, zero images dropped).
    """
    dst = graded_basis(g, k)
    rows = tuple(dst.by_degree.get(degree, ()))
    if k < 2 or not rows:
        return rows, ()
    pos = {b: i for i, b in enumerate(rows)}
    cols = []
    for b in graded_basis(g, k - 2).blades:
        img = omega_image(b, g)
        if not img or next(iter(img)).degree != degree:
            continue
        v = [0] * len(rows)
        for blade, c in img.items():
            v[pos[blade]] = c
        cols.append(tuple(v))
    return rows, tuple(cols)


def omega_block_rank(g: int, k: int, degree: int, method: str = "bareiss") -> int:
    """Exact rank of the omega-image inside ``wedge^k V`` at one degree."""
    _, cols = _omega_block(g, k, degree)
    if not cols:
        return 0
    if method == "bareiss":
        return bareiss_rank(cols)
    if method == "modular":
        return modular_rank(cols)
    raise ValueError(f"unknown rank method {method!r}")


def w_space_dims(g: int, k: int, method: str = "bareiss") -> dict[int, int]:
    """Per-degree dimensions of ``W^k = wedge^k V / omega ^ wedge^(k-2) V``."""
    check_genus(g)
    if not 0 <= k <= g:
        raise ValueError(f"k must lie in [0, {g}], got {k}")
    basis = graded_basis(g, k)
    out = {}
    for d, blades in sorted(basis.by_degree.items()):
        dim = len(blades) - omega_block_rank(g, k, d, method)
        if dim:
            out[d] = dim
    return out


def w_character(g: int, k: int, method: str = "bareiss") -> LaurentPoly:
    return LaurentPoly(w_space_dims(g, k, method))


class CosetBasis:
    """Chosen blade representatives of ``W^k`` at one degree, with reduction.

    ``coords(vec)`` expresses any element of ``wedge^k V`` at this degree
    (given as ``{blade: coefficient}``) in the basis of chosen cosets, by
    solving exactly against the representatives plus an independent set of
    omega-image vectors.
    """

    def __init__(self, g: int, k: int, degree: int):
        self.g, self.k, self.degree = g, k, degree
        rows, cols = _omega_block(g, k, degree)
        self.ambient = list(rows)
        n = len(rows)
        span = EchelonSpan(n)
        image = []
        for c in cols:
            if span.add(c):
                image.append(c)
        reps = []
        for i, b in enumerate(rows):
            e = [0] * n
            e[i] = 1
            if span.add(e):
                reps.append(b)
        if span.dim != n:
            raise ArithmeticError("representatives and omega-image fail to span")
        self.reps: list[Blade] = reps
        self._image = image
        rep_set = set(reps)
        self._free_rows = [i for i, b in enumerate(rows) if b not in rep_set]
        self._pos = {b: i for i, b in enumerate(rows)}
        self._square = [[col[i] for col in image] for i in self._free_rows]
        self._cache: dict[Blade, dict[int, Fraction]] = {}

    def __len__(self) -> int:
        return len(self.reps)

    def blade_coords(self, b: Blade) -> dict[int, Fraction]:
        """Coordinates of the coset of a single ambient blade."""
        if b in self._cache:
            return self._cache[b]
        n = len(self.ambient)
        v = [0] * n
        v[self._pos[b]] = 1
        if self._image:
            e = solve_exact(self._square, [v[i] for i in self._free_rows])
            for col, coeff in zip(self._image, e):
                if coeff:
                    for i, x in enumerate(col):
                        if x:
                            v[i] = v[i] - coeff * x
        out = {}
        for j, r in enumerate(self.reps):
            c = Fraction(v[self._pos[r]])
            if c:
                out[j] = c
        self._cache[b] = out
        return out

    def coords(self, vec: dict[Blade, int]) -> dict[int, Fraction]:
        out: dict[int, Fraction] = {}
        for b, c in vec.items():
            for j, x in self.blade_coords(b).items():
                out[j] = out.get(j, 0) + c * x
        return {j: x for j, x in out.items() if x}


@lru_cache(maxsize=None)
def coset_basis(g: int, k: int, degree: int) -> CosetBasis:
    return CosetBasis(g, k, degree)


def w_basis_cosets(g: int, k: int, degree: int) -> list[Blade]:
    """Blade representatives whose cosets form a basis of ``W^k`` at ``degree``.

    Selection is greedy in canonical blade order after seeding with the
    omega-image.
    """
    check_genus(g)
    if not 0 <= k <= g:
        raise ValueError(f"k must lie in [0, {g}], got {k}")
    return list(coset_basis(g, k, degree).reps)


def lemma8_check(g: int, k: int) -> bool:
    """Brute-force quotient dimensions agree with the closed character."""
    from .charcomb import ch_W_closed

    return w_character(g, k) == ch_W_closed(g, k)
