"""Finitely supported Laurent polynomials with exact integer coefficients."""

from __future__ import annotations

from typing import Iterable, Mapping


class LaurentPoly:
    """Immutable Laurent polynomial ``sum c_n t^n`` over the integers.

    Zero coefficients are never stored, so two polynomials compare equal iff
    their coefficient maps are identical.
    """

    __slots__ = ("_coeffs",)

    def __init__(self, coeffs: Mapping[int, int] | Iterable[tuple[int, int]] = ()):
        items = coeffs.items() if isinstance(coeffs, Mapping) else coeffs
        acc: dict[int, int] = {}
        for exp, c in items:
            if not isinstance(exp, int) or not isinstance(c, int):
                raise TypeError("exponents and coefficients must be integers")
            acc[exp] = acc.get(exp, 0) + c
        self._coeffs = {e: c for e, c in sorted(acc.items()) if c != 0}

    @classmethod
    def monomial(cls, exp: int, coeff: int = 1) -> "LaurentPoly":
        return cls({exp: coeff})

    @classmethod
    def from_sequence(cls, values: Iterable[int], start: int = 0) -> "LaurentPoly":
        """Build ``sum values[i] t^(start + i)``."""
        return cls({start + i: int(v) for i, v in enumerate(values)})

    @property
    def coeffs(self) -> dict[int, int]:
        return dict(self._coeffs)

    @property
    def min_exp(self) -> int | None:
        return next(iter(self._coeffs), None)

    @property
    def max_exp(self) -> int | None:
        return next(reversed(self._coeffs), None) if self._coeffs else None

    def __getitem__(self, exp: int) -> int:
        return self._coeffs.get(exp, 0)

    def __iter__(self):
        return iter(self._coeffs.items())

    def __len__(self) -> int:
        return len(self._coeffs)

    def __bool__(self) -> bool:
        return bool(self._coeffs)

    def __eq__(self, other) -> bool:
        if isinstance(other, int):
            other = LaurentPoly({0: other})
        if not isinstance(other, LaurentPoly):
            return NotImplemented
        return self._coeffs == other._coeffs

    def __hash__(self) -> int:
        return hash(tuple(self._coeffs.items()))

    def __add__(self, other: "LaurentPoly | int") -> "LaurentPoly":
        if isinstance(other, int):
            other = LaurentPoly({0: other})
        return LaurentPoly(list(self._coeffs.items()) + list(other._coeffs.items()))

    __radd__ = __add__

    def __neg__(self) -> "LaurentPoly":
        return LaurentPoly({e: -c for e, c in self._coeffs.items()})

    def __sub__(self, other: "LaurentPoly | int") -> "LaurentPoly":
        if isinstance(other, int):
            other = LaurentPoly({0: other})
        return self + (-other)

    def __rsub__(self, other: int) -> "LaurentPoly":
        return LaurentPoly({0: other}) - self

    def __mul__(self, other: "LaurentPoly | int") -> "LaurentPoly":
        if isinstance(other, int):
            return LaurentPoly({e: c * other for e, c in self._coeffs.items()})
        acc: dict[int, int] = {}
        for e1, c1 in self._coeffs.items():
            for e2, c2 in other._coeffs.items():
                acc[e1 + e2] = acc.get(e1 + e2, 0) + c1 * c2
        return LaurentPoly(acc)

    __rmul__ = __mul__

    def shift(self, k: int) -> "LaurentPoly":
        """Multiply by ``t^k``."""
        return LaurentPoly({e + k: c for e, c in self._coeffs.items()})

    def truncate(self, max_exp: int) -> "LaurentPoly":
        return LaurentPoly({e: c for e, c in self._coeffs.items() if e <= max_exp})

    def evaluate(self, t):
        return sum(c * t**e for e, c in self._coeffs.items())

    def __repr__(self) -> str:
        if not self._coeffs:
            return "LaurentPoly(0)"
        terms = []
        for e, c in self._coeffs.items():
            if e == 0:
                terms.append(f"{c}")
            elif e == 1:
                terms.append(f"{c}*t")
            else:
                terms.append(f"{c}*t^{e}")
        return "LaurentPoly(" + " + ".join(terms) + ")"
