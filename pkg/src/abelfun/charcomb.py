"""Exact dimension and character formulas for the graded de Rham cohomology.

Everything here works with Python integers, so values are exact for any
genus (the ``i**g`` terms overflow 64-bit arithmetic already around g = 20).

Notation: ``a_dim(g, n)`` is the dimension of the top cohomology in degree
``n - g``; characters are :class:`~abelfun.laurent.LaurentPoly` objects in
the variable ``t``.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb, factorial

from .laurent import LaurentPoly
from .validation import check_genus


def binom(n: int, k: int) -> int:
    """Binomial coefficient that vanishes outside ``0 <= k <= n``."""
    if k < 0 or n < 0 or k > n:
        return 0
    return comb(n, k)


@dataclass(frozen=True)
class DimTable:
    """Dimensions ``a_0 .. a_{g+1}`` of the top cohomology for one genus."""

    g: int
    values: tuple[int, ...]

    def __post_init__(self):
        if len(self.values) != self.g + 2:
            raise ValueError(f"expected {self.g + 2} values, got {len(self.values)}")
        if self.values[0] != 1 or self.values[1] != 0 or self.values[-1] != 1:
            raise ValueError(f"boundary values violated: {self.values}")
        if any(v < 0 for v in self.values):
            raise ValueError(f"negative dimension in {self.values}")

    @property
    def total(self) -> int:
        return sum(self.values)

    def row(self) -> str:
        return " ".join(str(v) for v in self.values) + f" | {self.total}"


def eq12(g: int, n: int) -> int:
    """Literal term-by-term value of the closed formula for ``a_n``.

    No boundary dispatch happens here; the formula is only claimed for
    ``2 <= n <= g + 1`` and :func:`a_dim` is the function to call for
    dimensions.
    """
    first = (-1) ** (n - 1) * binom(g, n - 2)
    second = sum((-1) ** (n - i) * binom(g + 1, n - i) * i**g for i in range(2, n + 1))
    third = sum(
        (-1) ** i * (binom(g, n - 1) * binom(g, n - 2 - i) - binom(g, n) * binom(g, n - 3 - i))
        for i in range(0, n - 2)
    )
    return first + second + third


def a_dim(g: int, n: int) -> int:
    """Dimension of the degree ``n - g`` part of the top cohomology."""
    check_genus(g, minimum=2)
    if n == 0:
        return 1
    if n < 0 or n == 1 or n >= g + 2:
        return 0
    return eq12(g, n)


def dim_table(g: int) -> DimTable:
    return DimTable(g, tuple(a_dim(g, n) for n in range(g + 2)))


def ch_H_top_table(g: int) -> LaurentPoly:
    """Character ``sum_n a_n t^(n-g)`` assembled from :func:`a_dim`."""
    check_genus(g, minimum=2)
    return LaurentPoly({n - g: a_dim(g, n) for n in range(g + 2)})


def _series_mul(a: list[int], b: list[int], order: int) -> list[int]:
    out = [0] * (order + 1)
    for i, x in enumerate(a[: order + 1]):
        if x:
            for j, y in enumerate(b[: order + 1 - i]):
                out[i + j] += x * y
    return out


def _one_minus_t_pow(k: int, order: int) -> list[int]:
    return [(-1) ** j * binom(k, j) for j in range(order + 1)]


def euler_operator_series(g: int, order: int) -> list[int]:
    """Coefficients of ``(t d/dt)^g (1-t)^(-1) = sum_{n>=1} n^g t^n`` up to ``t^order``."""
    return [0] + [n**g for n in range(1, order + 1)]


def ch_H_top_closed(g: int) -> LaurentPoly:
    """Top cohomology character from the closed generating-function form.

    The product ``(1-t)^(g+1) (1 + (t d/dt)^g (1-t)^(-1))`` is expanded to
    order ``g + 3``; the coefficients beyond ``t^(g+2)`` must cancel, which
    is checked.
    """
    check_genus(g, minimum=2)
    order = g + 3
    inner = euler_operator_series(g, order)
    inner[0] += 1
    prod = _series_mul(_one_minus_t_pow(g + 1, order), inner, order)
    if any(prod[g + 2 :]):
        raise ArithmeticError(
            f"truncated product does not terminate: tail {prod[g + 2:]} for g={g}"
        )
    acc = LaurentPoly({0: 1}) - LaurentPoly.from_sequence(_one_minus_t_pow(g, g))
    acc = acc + LaurentPoly.from_sequence(prod[: g + 2])
    terms: dict[int, int] = {}
    for m in range(0, g):
        for i in range(1, g - m):
            terms[g + 1 - m] = terms.get(g + 1 - m, 0) - (-1) ** i * binom(g, m + i) * binom(g, m)
    for m in range(0, g - 1):
        for i in range(1, g - 1 - m):
            terms[g - m] = terms.get(g - m, 0) + (-1) ** i * binom(g, m + i + 2) * binom(g, m)
    acc = acc + LaurentPoly(terms)
    return acc.shift(-g)


def top_betti_affine(g: int) -> int:
    """Top Betti number of the complement of the theta divisor."""
    check_genus(g, minimum=2)
    return (
        comb(2 * g, g)
        - comb(2 * g, g - 2)
        + factorial(g)
        - factorial(2 * g) // (factorial(g) * factorial(g + 1))
    )


def prop3_identities(g: int) -> tuple[bool, bool]:
    """(formula at n = g+1 equals 1, dimensions sum to the top Betti number)."""
    check_genus(g, minimum=2)
    return eq12(g, g + 1) == 1, sum(a_dim(g, n) for n in range(g + 2)) == top_betti_affine(g)


def ch_W_closed(g: int, k: int) -> LaurentPoly:
    """Character of ``W^k`` = exterior power modulo the omega-image."""
    check_genus(g, minimum=1)
    if not 0 <= k <= g:
        raise ValueError(f"k must lie in [0, {g}], got {k}")
    if k == 0:
        return LaurentPoly({0: 1})
    terms: dict[int, int] = {-k: binom(g, k)}
    for m in range(k):
        terms[1 - m] = terms.get(1 - m, 0) + binom(g, k - m) * binom(g, m)
    for m in range(k - 1):
        terms[-m] = terms.get(-m, 0) - binom(g, k - 2 - m) * binom(g, m)
    return LaurentPoly(terms)


def ch_U_top(g: int) -> LaurentPoly:
    """Character of a graded complement of ``W^g`` inside the top cohomology."""
    return ch_H_top_table(g) - ch_W_closed(g, g)


def ch_grA_top(g: int, order: int) -> list[int]:
    """``dim gr_n A`` for ``n = 0 .. order`` via ``(1-t)(1 + sum n^g t^n)``."""
    check_genus(g, minimum=1)
    if order < 0:
        raise ValueError("order must be nonnegative")
    inner = euler_operator_series(g, order)
    inner[0] += 1
    return _series_mul(_one_minus_t_pow(1, order), inner, order)


def dim_grA(g: int, n: int) -> int:
    """``dim gr_n A`` directly from ``dim A_n = n^g``."""
    if n < 0 or n == 1:
        return 0
    if n == 0:
        return 1
    return n**g - (n - 1) ** g


def ch_D_series(g: int, order: int) -> list[int]:
    """Coefficients of ``(1-t)^(-g)``: number of degree-n monomials in g variables."""
    return [binom(n + g - 1, g - 1) for n in range(order + 1)]


def mul_by_ch_D(g: int, poly: LaurentPoly, max_exp: int) -> LaurentPoly:
    """``ch D * poly`` truncated to exponents ``<= max_exp``."""
    if not poly:
        return LaurentPoly()
    span = max_exp - poly.min_exp
    if span < 0:
        return LaurentPoly()
    dser = ch_D_series(g, span)
    acc: dict[int, int] = {}
    for e, c in poly:
        for j in range(0, max_exp - e + 1):
            acc[e + j] = acc.get(e + j, 0) + c * dser[j]
    return LaurentPoly(acc)


def euler_identity_sides(g: int, order: int) -> tuple[LaurentPoly, LaurentPoly]:
    """Both sides of the Euler-characteristic identity, truncated at ``t^order``.

    Left: ``t^(-g) sum_n dim gr_n A t^n``. Right: the alternating sum of
    ``ch D * ch H^(g-i)`` with ``H^i = W^i`` below the top degree.
    """
    check_genus(g, minimum=2)
    gr = ch_grA_top(g, order + g)
    lhs = LaurentPoly.from_sequence(gr, start=-g)
    rhs = LaurentPoly()
    for i in range(g + 1):
        h = ch_H_top_table(g) if i == 0 else ch_W_closed(g, g - i)
        rhs = rhs + mul_by_ch_D(g, h, order) * ((-1) ** i)
    return lhs, rhs


def euler_identity_check(g: int, order: int) -> bool:
    if order < g + 3:
        raise ValueError(f"order must be at least g+3 = {g + 3}")
    lhs, rhs = euler_identity_sides(g, order)
    return lhs == rhs
