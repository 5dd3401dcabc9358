"""Exact linear algebra over Z and Q, plus a numpy rank modulo a prime.

The fraction-free routine is the authority for exact ranks. The modular
rank is a fast lower bound for the rational rank (reduction mod p can only
lose rank), which is what makes it usable as a certificate: when modular
ranks already saturate an upper bound, the rational ranks are pinned.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

# Largest prime below 2**31; products of two residues fit in int64.
DEFAULT_PRIME = 2_147_483_647


@dataclass
class IntMatrix:
    """Dense matrix of exact Python integers."""

    rows: int
    cols: int
    entries: list[list[int]] = field(repr=False)

    def __post_init__(self):
        if len(self.entries) != self.rows or any(len(r) != self.cols for r in self.entries):
            raise ValueError("entries do not match the declared shape")

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "IntMatrix":
        return cls(rows, cols, [[0] * cols for _ in range(rows)])

    def __getitem__(self, idx):
        i, j = idx
        return self.entries[i][j]

    def __setitem__(self, idx, value):
        i, j = idx
        self.entries[i][j] = int(value)

    def __matmul__(self, other: "IntMatrix") -> "IntMatrix":
        if self.cols != other.rows:
            raise ValueError("shape mismatch")
        out = IntMatrix.zeros(self.rows, other.cols)
        for i, row in enumerate(self.entries):
            acc = out.entries[i]
            for k, a in enumerate(row):
                if a:
                    for j, b in enumerate(other.entries[k]):
                        if b:
                            acc[j] += a * b
        return out

    def __eq__(self, other) -> bool:
        if not isinstance(other, IntMatrix):
            return NotImplemented
        return (self.rows, self.cols, self.entries) == (other.rows, other.cols, other.entries)

    def is_zero(self) -> bool:
        return not any(any(r) for r in self.entries)

    def submatrix(self, row_idx: Sequence[int], col_idx: Sequence[int]) -> "IntMatrix":
        return IntMatrix(
            len(row_idx), len(col_idx), [[self.entries[i][j] for j in col_idx] for i in row_idx]
        )

    def to_numpy(self) -> np.ndarray:
        return np.array(self.entries, dtype=object).reshape(self.rows, self.cols)

    def rank(self) -> int:
        return bareiss_rank(self.entries)


def bareiss_rank(matrix: Iterable[Sequence[int]]) -> int:
    """Rank of an integer matrix by fraction-free (Bareiss) elimination.

    Every division is exact, so intermediate values stay integral; rows
    with a zero in the pivot column are only rescaled, which keeps the
    sparse 0/+-1 matrices produced here cheap.
    """
    A = [list(map(int, r)) for r in matrix]
    A = [r for r in A if any(r)]
    if not A:
        return 0
    m, n = len(A), len(A[0])
    rank = 0
    prev = 1
    for c in range(n):
        piv = None
        for r in range(rank, m):
            if A[r][c]:
                piv = r
                break
        if piv is None:
            continue
        A[rank], A[piv] = A[piv], A[rank]
        prow = A[rank]
        p = prow[c]
        for r in range(rank + 1, m):
            row = A[r]
            a = row[c]
            if a:
                for j in range(c + 1, n):
                    row[j] = (p * row[j] - a * prow[j]) // prev
            else:
                for j in range(c + 1, n):
                    if row[j]:
                        row[j] = (p * row[j]) // prev
            row[c] = 0
        prev = p
        rank += 1
        if rank == m:
            break
    return rank


def modular_rank(matrix, p: int = DEFAULT_PRIME) -> int:
    """Rank of an integer (or p-integral rational) matrix over GF(p).

    Accepts anything numpy can turn into an int64 array. Elimination is
    vectorized over the rows that are nonzero in the pivot column.
    """
    A = np.array(matrix, dtype=np.int64) % p
    if A.ndim != 2 or A.size == 0:
        return 0
    m, n = A.shape
    rank = 0
    for c in range(n):
        if rank == m:
            break
        col = A[rank:, c]
        nz = np.flatnonzero(col)
        if nz.size == 0:
            continue
        piv = rank + nz[0]
        if piv != rank:
            A[[rank, piv]] = A[[piv, rank]]
        inv = pow(int(A[rank, c]), p - 2, p)
        A[rank, c:] = (A[rank, c:] * inv) % p
        below = rank + 1 + np.flatnonzero(A[rank + 1 :, c])
        if below.size:
            factors = A[below, c][:, None]
            A[np.ix_(below, np.arange(c, n))] = (
                A[np.ix_(below, np.arange(c, n))] - factors * A[rank, c:][None, :]
            ) % p
        rank += 1
    return rank


def fraction_to_mod(x: Fraction | int, p: int = DEFAULT_PRIME) -> int:
    x = Fraction(x)
    if x.denominator % p == 0:
        raise ZeroDivisionError(f"denominator {x.denominator} not invertible mod {p}")
    return (x.numerator % p) * pow(x.denominator % p, p - 2, p) % p


class EchelonSpan:
    """Incrementally maintained exact row-echelon basis of a subspace of Q^n.

    ``add`` reports whether the vector enlarged the span; ``reduce`` returns
    the remainder after subtracting the span. Reduced rows are kept in a
    dict keyed by pivot column.
    """

    def __init__(self, n: int):
        self.n = n
        self._rows: dict[int, list[Fraction]] = {}

    @property
    def dim(self) -> int:
        return len(self._rows)

    def reduce(self, vec: Sequence) -> list[Fraction]:
        v = [Fraction(x) for x in vec]
        if len(v) != self.n:
            raise ValueError("length mismatch")
        for c in sorted(self._rows):
            if v[c]:
                f = v[c]
                row = self._rows[c]
                for j in range(c, self.n):
                    if row[j]:
                        v[j] -= f * row[j]
        return v

    def contains(self, vec: Sequence) -> bool:
        return not any(self.reduce(vec))

    def add(self, vec: Sequence) -> bool:
        v = self.reduce(vec)
        piv = next((j for j, x in enumerate(v) if x), None)
        if piv is None:
            return False
        inv = 1 / v[piv]
        v = [x * inv for x in v]
        for c, row in self._rows.items():
            if row[piv]:
                f = row[piv]
                for j in range(self.n):
                    if v[j]:
                        row[j] -= f * v[j]
        self._rows[piv] = v
        return True


def solve_exact(A: Sequence[Sequence], b: Sequence) -> list[Fraction]:
    """Solve a square nonsingular system over Q by Gauss-Jordan elimination."""
    n = len(A)
    M = [[Fraction(x) for x in row] + [Fraction(bi)] for row, bi in zip(A, b)]
    for c in range(n):
        piv = next((r for r in range(c, n) if M[r][c]), None)
        if piv is None:
            raise ZeroDivisionError("singular system")
        M[c], M[piv] = M[piv], M[c]
        inv = 1 / M[c][c]
        M[c] = [x * inv for x in M[c]]
        for r in range(n):
            if r != c and M[r][c]:
                f = M[r][c]
                M[r] = [x - f * y for x, y in zip(M[r], M[c])]
    return [M[r][n] for r in range(n)]
