"""Abelian functions built from logarithmic derivatives of theta.

Every function here is evaluated from a *jet* of theta: all partial
derivatives up to some order at a batch of points. Logarithmic derivatives
follow from the Leibniz recursion on ``theta * zeta_i = theta_i``;
determinants of second log-derivatives are differentiated by distributing
the derivative over rows, so nothing uses numerical differencing.

Theta magnitudes grow like ``exp(pi y^T Y^-1 y)`` across a period cell, so
closeness to the divisor is judged on the normalized theta (that factor
divided out). Log-derivatives do not see the factor at all.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations_with_replacement, product
from math import comb, factorial, prod

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .thetafn import (
    DEFAULT_CONFIG,
    Characteristic,
    OrderNTheta,
    PeriodMatrix,
    ThetaEvalConfig,
    multi_indices,
    order_n_basis,
    sample_cell,
    theta_derivatives,
)
from .validation import ValidationError, check_points

MultiIndex = tuple[int, ...]


class NearDivisorError(ValueError):
    """A point is too close to the theta divisor for stable division."""


# ---------------------------------------------------------------- labels


def _unit(g: int, i: int) -> MultiIndex:
    return tuple(int(j == i - 1) for j in range(g))


def _add(*alphas: MultiIndex) -> MultiIndex:
    return tuple(map(sum, zip(*alphas)))


def _fmt_multi(alpha: MultiIndex) -> str:
    return "".join(str(i + 1) * a for i, a in enumerate(alpha))


@dataclass(frozen=True)
class One:
    g: int

    @property
    def pole_order(self) -> int:
        return 0

    @property
    def theta_order(self) -> int:
        return 0

    def __str__(self) -> str:
        return "1"


@dataclass(frozen=True)
class Zeta:
    """``d^multi log theta`` with ``|multi| >= 2`` (periodic log-derivatives)."""

    multi: MultiIndex

    def __post_init__(self):
        if sum(self.multi) < 2:
            raise ValidationError("Zeta labels need total order >= 2; zeta_i itself is not periodic")

    @property
    def g(self) -> int:
        return len(self.multi)

    @property
    def pole_order(self) -> int:
        return sum(self.multi)

    @property
    def theta_order(self) -> int:
        return sum(self.multi)

    def __str__(self) -> str:
        return f"zeta_{_fmt_multi(self.multi)}"


@dataclass(frozen=True)
class Det:
    """``d^derivs det(zeta_{I_k J_l})``."""

    I: tuple[int, ...]
    J: tuple[int, ...]
    derivs: MultiIndex

    def __post_init__(self):
        g = len(self.derivs)
        if len(self.I) != len(self.J) or not self.I:
            raise ValidationError("Det needs |I| = |J| >= 1")
        if any(not 1 <= i <= g for i in self.I + self.J):
            raise ValidationError(f"indices must lie in 1..{g}")

    @property
    def g(self) -> int:
        return len(self.derivs)

    @property
    def pole_order(self) -> int:
        return len(self.I) + 1 + sum(self.derivs)

    @property
    def theta_order(self) -> int:
        return 2 + sum(self.derivs)

    def __str__(self) -> str:
        s = f"({''.join(map(str, self.I))};{''.join(map(str, self.J))})"
        return s + (f"_{_fmt_multi(self.derivs)}" if any(self.derivs) else "")


@dataclass(frozen=True)
class OrderNQuotient:
    """``d^derivs [theta[a/n, 0](n z | n tau) / theta(z)^n]``."""

    n: int
    a: tuple[int, ...]
    derivs: MultiIndex = ()

    def __post_init__(self):
        if not self.derivs:
            object.__setattr__(self, "derivs", (0,) * len(self.a))
        if len(self.derivs) != len(self.a):
            raise ValidationError("derivative multi-index length mismatch")

    @property
    def g(self) -> int:
        return len(self.a)

    @property
    def pole_order(self) -> int:
        return self.n + sum(self.derivs)

    @property
    def theta_order(self) -> int:
        return sum(self.derivs)

    def __str__(self) -> str:
        s = f"Q{self.n}[{''.join(map(str, self.a))}]"
        return s + (f"_{_fmt_multi(self.derivs)}" if any(self.derivs) else "")


@dataclass(frozen=True)
class V3Element:
    """The extra genus-3 generator ``v`` in ``gr_2 A``: a chosen order-2 quotient."""

    a: tuple[int, ...]
    derivs: MultiIndex = ()

    def __post_init__(self):
        if not self.derivs:
            object.__setattr__(self, "derivs", (0,) * len(self.a))

    @property
    def g(self) -> int:
        return len(self.a)

    @property
    def quotient(self) -> OrderNQuotient:
        return OrderNQuotient(2, self.a, self.derivs)

    @property
    def pole_order(self) -> int:
        return self.quotient.pole_order

    @property
    def theta_order(self) -> int:
        return self.quotient.theta_order

    def differentiate(self, alpha: MultiIndex) -> "V3Element":
        return V3Element(self.a, _add(self.derivs, alpha))

    def __str__(self) -> str:
        s = f"v[{''.join(map(str, self.a))}]"
        return s + (f"_{_fmt_multi(self.derivs)}" if any(self.derivs) else "")


AbelianLabel = One | Zeta | Det | OrderNQuotient | V3Element


def pole_order(label: AbelianLabel) -> int:
    return label.pole_order


# ---------------------------------------------------------------- jets


def _binom_multi(gamma: MultiIndex, beta: MultiIndex) -> int:
    return prod(comb(a, b) for a, b in zip(gamma, beta))


def _sub_indices(gamma: MultiIndex):
    """All ``beta <= gamma`` componentwise."""
    return product(*(range(x + 1) for x in gamma))


def log_derivatives(jet: dict[MultiIndex, np.ndarray], max_order: int, lead: dict | None = None) -> dict:
    """``d^gamma log f`` for ``1 <= |gamma| <= max_order`` from the jet of ``f``.

    Uses ``f * d^(gamma - e_i) zeta_i = d^(gamma - e_i) f_i - sum ...`` with
    ``zeta_i = d_i log f``; ``lead`` may fix the index ``i`` per multi-index
    (default: the first nonzero coordinate).
    """
    lead = lead or {}
    g = len(next(iter(jet)))
    f0 = jet[(0,) * g]
    L: dict[MultiIndex, np.ndarray] = {}
    for gamma in multi_indices(g, max_order):
        if sum(gamma) == 0:
            continue
        i = lead.get(gamma, next(j for j, x in enumerate(gamma) if x))
        rest = tuple(x - (j == i) for j, x in enumerate(gamma))
        acc = jet[gamma].copy()
        for beta in _sub_indices(rest):
            if sum(beta) == 0:
                continue
            acc -= _binom_multi(rest, beta) * jet[beta] * L[_sub(gamma, beta)]
        L[gamma] = acc / f0
    return L


def _sub(a: MultiIndex, b: MultiIndex) -> MultiIndex:
    return tuple(x - y for x, y in zip(a, b))


def _product_jet(f: dict, h: dict, max_order: int) -> dict:
    g = len(next(iter(f)))
    out = {}
    for gamma in multi_indices(g, max_order):
        acc = 0
        for beta in _sub_indices(gamma):
            acc = acc + _binom_multi(gamma, beta) * f[beta] * h[_sub(gamma, beta)]
        out[gamma] = acc
    return out


def _quotient_jet(num: dict, den: dict, max_order: int) -> dict:
    g = len(next(iter(num)))
    d0 = den[(0,) * g]
    q = {}
    for gamma in multi_indices(g, max_order):
        acc = num[gamma].copy()
        for beta in _sub_indices(gamma):
            if sum(beta):
                acc -= _binom_multi(gamma, beta) * den[beta] * q[_sub(gamma, beta)]
        q[gamma] = acc / d0
    return q


def _distributions(delta: MultiIndex, r: int):
    """Ways to split ``delta`` over ``r`` rows, with multinomial weights."""
    per_coord = []
    for d in delta:
        opts = []
        for cuts in combinations_with_replacement(range(d + 1), r - 1):
            parts = [b - a for a, b in zip((0,) + cuts, cuts + (d,))]
            w = factorial(d) // prod(factorial(p) for p in parts)
            opts.append((parts, w))
        per_coord.append(opts)
    for choice in product(*per_coord):
        weight = prod(w for _, w in choice)
        rows = tuple(tuple(parts[k] for parts, _ in choice) for k in range(r))
        yield rows, weight


class ThetaJet:
    """Theta derivatives and log-derivatives at a batch of points."""

    def __init__(self, Z, pm: PeriodMatrix, max_order: int, cfg: ThetaEvalConfig = DEFAULT_CONFIG,
                 char: Characteristic | None = None):
        self.pm = pm
        self.cfg = cfg
        self.Z = check_points(Z, pm.g)
        self.max_order = max_order
        idx = multi_indices(pm.g, max_order)
        vals = theta_derivatives(self.Z, pm, idx, char, cfg, normalized=True)
        # log-derivatives are blind to the normalizing factor, except through
        # its own derivatives; keep the raw jet for anything beyond order 0.
        shift = np.pi * np.einsum("ij,jk,ik->i", self.Z.imag, pm.Yinv, self.Z.imag)
        self.normalized_value = vals[:, 0]
        raw = vals * np.exp(shift)[:, None]
        self.jet = {a: raw[:, k] for k, a in enumerate(idx)}
        self._L: dict | None = None

    @property
    def theta(self) -> np.ndarray:
        return self.jet[(0,) * self.pm.g]

    def logd(self) -> dict:
        if self._L is None:
            self._L = log_derivatives(self.jet, self.max_order)
        return self._L


def _check_floor(jet: ThetaJet, theta_floor: float) -> None:
    if theta_floor > 0:
        bad = np.abs(jet.normalized_value) < theta_floor
        if bad.any():
            raise NearDivisorError(
                f"{int(bad.sum())} point(s) with normalized |theta| < {theta_floor:g}"
            )


def evaluate_labels(labels, Z, pm: PeriodMatrix, cfg: ThetaEvalConfig = DEFAULT_CONFIG,
                    theta_floor: float = 1e-2) -> np.ndarray:
    """Value matrix ``M[s, f] = f(z_s)`` for a list of labels."""
    labels = list(labels)
    g = pm.g
    Z = check_points(Z, g)
    K = max([lab.theta_order for lab in labels] + [0])
    jet = ThetaJet(Z, pm, K, cfg)
    _check_floor(jet, theta_floor)
    L = jet.logd() if K else {}
    out = np.empty((Z.shape[0], len(labels)), dtype=complex)
    quotient_cache: dict = {}
    for c, lab in enumerate(labels):
        if isinstance(lab, One):
            out[:, c] = 1.0
        elif isinstance(lab, Zeta):
            out[:, c] = L[lab.multi]
        elif isinstance(lab, Det):
            out[:, c] = _det_value(lab, L)
        elif isinstance(lab, OrderNQuotient):
            out[:, c] = _quotient_value(lab, jet, cfg, quotient_cache)
        elif isinstance(lab, V3Element):
            out[:, c] = _quotient_value(lab.quotient, jet, cfg, quotient_cache)
        else:
            raise TypeError(f"unknown label {lab!r}")
    return out


def _det_value(lab: Det, L: dict) -> np.ndarray:
    g = lab.g
    r = len(lab.I)
    total = 0
    for rows, weight in _distributions(lab.derivs, r):
        M = np.empty(L[_unit(g, 1) if g else ()].shape + (r, r), dtype=complex)
        for k in range(r):
            for l in range(r):
                M[..., k, l] = L[_add(_unit(g, lab.I[k]), _unit(g, lab.J[l]), rows[k])]
        total = total + weight * np.linalg.det(M)
    return total


def _quotient_value(lab: OrderNQuotient, jet: ThetaJet, cfg, cache: dict) -> np.ndarray:
    g = lab.g
    K = sum(lab.derivs)
    key = (lab.n, lab.a, K)
    if key not in cache:
        idx = multi_indices(g, K)
        f = OrderNTheta(jet.pm, lab.n, lab.a)
        nvals = f.numerator_derivatives(jet.Z, idx, cfg)
        num = {a: nvals[:, k] for k, a in enumerate(idx)}
        th = {a: jet.jet[a] for a in idx}
        den = th
        for _ in range(lab.n - 1):
            den = _product_jet(den, th, K)
        cache[key] = _quotient_jet(num, den, K)
    return cache[key][lab.derivs]


# ---------------------------------------------------------------- primitives


def zeta_multi(multi, Z, pm: PeriodMatrix, cfg: ThetaEvalConfig = DEFAULT_CONFIG,
               lead: int | None = None, theta_floor: float = 1e-2) -> np.ndarray:
    """``d^multi log theta`` at each point; ``|multi| >= 1``.

    ``lead`` (1-based) selects which first derivative ``zeta_lead`` the
    recursion differentiates at the top level.
    """
    multi = tuple(int(x) for x in multi)
    if len(multi) != pm.g or sum(multi) < 1:
        raise ValidationError(f"invalid multi-index {multi}")
    jet = ThetaJet(Z, pm, sum(multi), cfg)
    _check_floor(jet, theta_floor)
    if lead is None:
        return jet.logd()[multi]
    if multi[lead - 1] < 1:
        raise ValidationError("lead index must occur in the multi-index")
    L = log_derivatives(jet.jet, sum(multi), lead={multi: lead - 1})
    return L[multi]


def det_IJ(I, J, derivs, Z, pm: PeriodMatrix, cfg: ThetaEvalConfig = DEFAULT_CONFIG,
           theta_floor: float = 1e-2) -> np.ndarray:
    derivs = tuple(derivs) if derivs is not None else (0,) * pm.g
    return evaluate_labels([Det(tuple(I), tuple(J), derivs)], Z, pm, cfg, theta_floor)[:, 0]


def relation_residuals(kind: str, indices, Z, pm: PeriodMatrix, cfg: ThetaEvalConfig = DEFAULT_CONFIG,
                       theta_floor: float = 1e-2) -> np.ndarray:
    """Scaled size of the left-hand side of a linear relation at each point.

    The residual is ``|sum_i s_i t_i| / (1 + sum_i |t_i|)`` over the signed
    terms ``s_i t_i``. Terms grow like a power of ``1 / theta`` near the
    divisor, so an unscaled left-hand side would mostly measure rounding.

    ``R41``: ``(i j1; j2 j3) - (i j2; j1 j3) + (i j3; j1 j2)``, indices ``(i, j1, j2, j3)``.
    ``R43``: ``d_k zeta_ij - d_j zeta_ik``, indices ``(i, j, k)``; the two
    sides are computed through different Leibniz recursions, so the check
    is not an identity of floating-point operations.
    ``R44``: ``d_m (ij;kl) - d_l (ij;km) + d_k (ij;lm)``, indices ``(i, j, k, l, m)``.
    """
    g = pm.g
    z0 = (0,) * g
    if kind == "R41":
        if g < 4:
            raise ValidationError("the r = 2 relation needs g >= 4")
        i, j1, j2, j3 = indices
        labs = [Det((i, j1), (j2, j3), z0), Det((i, j2), (j1, j3), z0), Det((i, j3), (j1, j2), z0)]
        return _signed_sum_residual(evaluate_labels(labs, Z, pm, cfg, theta_floor), (1, -1, 1))
    if kind == "R43":
        i, j, k = indices
        multi = _add(_unit(g, i), _unit(g, j), _unit(g, k))
        jet = ThetaJet(Z, pm, 3, cfg)
        _check_floor(jet, theta_floor)
        a = log_derivatives(jet.jet, 3, lead={multi: j - 1})[multi]
        b = log_derivatives(jet.jet, 3, lead={multi: k - 1})[multi]
        return _signed_sum_residual(np.column_stack([a, b]), (1, -1))
    if kind == "R44":
        if g < 3:
            raise ValidationError("the r = 2 derivative relation needs g >= 3")
        i, j, k, l, m = indices
        labs = [
            Det((i, j), (k, l), _unit(g, m)),
            Det((i, j), (k, m), _unit(g, l)),
            Det((i, j), (l, m), _unit(g, k)),
        ]
        return _signed_sum_residual(evaluate_labels(labs, Z, pm, cfg, theta_floor), (1, -1, 1))
    raise ValidationError(f"unknown relation kind {kind!r}")


# ---------------------------------------------------------------- sampling / rank


def _signed_sum_residual(terms: np.ndarray, signs) -> np.ndarray:
    signs = np.asarray(signs)
    return np.abs(terms @ signs) / (1 + np.abs(terms).sum(axis=1))


@dataclass(frozen=True)
class SamplePlan:
    seed: int = 0
    count: int = 64
    theta_floor: float = 1e-2


def draw_samples(pm: PeriodMatrix, plan: SamplePlan, cfg: ThetaEvalConfig = DEFAULT_CONFIG) -> np.ndarray:
    """``plan.count`` cell points whose normalized theta clears the floor."""
    rng = np.random.default_rng(plan.seed)
    kept: list[np.ndarray] = []
    drawn = 0
    while sum(len(k) for k in kept) < plan.count:
        batch = sample_cell(pm, max(plan.count, 16), rng)
        drawn += len(batch)
        v = theta_derivatives(batch, pm, [(0,) * pm.g], cfg=cfg, normalized=True)[:, 0]
        kept.append(batch[np.abs(v) >= plan.theta_floor])
        accepted = sum(len(k) for k in kept)
        if drawn >= 10 * plan.count and accepted < 0.1 * drawn:
            raise ValidationError(
                f"sample rejection rate above 90% (theta_floor={plan.theta_floor:g} too aggressive)"
            )
    return np.vstack(kept)[: plan.count]


@dataclass
class RankReport:
    shape: tuple[int, int]
    singular_values: np.ndarray
    tolerance: float
    rank: int
    expected: int | None = None
    labels: list[str] = field(default_factory=list)

    @property
    def verdict(self) -> bool:
        if self.expected is None:
            return True
        return self.rank == self.expected == self.shape[1]

    def gap(self) -> float:
        """Ratio of the smallest kept singular value to the largest."""
        s = self.singular_values
        if self.rank == 0 or not s.size:
            return 0.0
        return float(s[self.rank - 1] / s[0])


class NumericalRank(BaseEstimator):
    """Numerical rank of a sampled value matrix.

    Rows are scaled to unit max-magnitude (function values vary over
    orders of magnitude near the divisor) and columns to unit norm, then
    singular values above ``rtol * s_max`` are counted.
    """

    def __init__(self, rtol=1e-8, row_scale=True, col_scale=True):
        self.rtol = rtol
        self.row_scale = row_scale
        self.col_scale = col_scale

    def fit(self, X, y=None):
        M = np.asarray(X, dtype=complex)
        if M.ndim != 2:
            raise ValidationError("value matrix must be 2-D")
        if not np.all(np.isfinite(M)):
            raise ValidationError("value matrix contains non-finite entries")
        if self.row_scale:
            m = np.abs(M).max(axis=1, keepdims=True)
            M = M / np.where(m > 0, m, 1)
        if self.col_scale:
            n = np.linalg.norm(M, axis=0, keepdims=True)
            M = M / np.where(n > 0, n, 1)
        s = np.linalg.svd(M, compute_uv=False) if M.size else np.zeros(0)
        self.singular_values_ = s
        self.rank_ = int(np.sum(s > self.rtol * s[0])) if s.size and s[0] > 0 else 0
        self.n_features_in_ = M.shape[1]
        return self


def rank_report(M, rtol: float = 1e-8, expected: int | None = None, labels=()) -> RankReport:
    est = NumericalRank(rtol=rtol).fit(M)
    return RankReport(
        shape=tuple(np.shape(M)),
        singular_values=est.singular_values_,
        tolerance=rtol,
        rank=est.rank_,
        expected=expected,
        labels=[str(x) for x in labels],
    )


class AbelianFeatures(TransformerMixin, BaseEstimator):
    """Transform sample points into the value matrix of a list of abelian functions.

    Parameters
    ----------
    labels : list of labels
        Functions to evaluate; one output column each.
    tau : array-like (g, g)
        Period matrix.
    theta_floor : float
        Points with normalized ``|theta|`` below this are rejected.
    """

    def __init__(self, labels=None, tau=None, theta_floor=1e-2, target_abs_error=1e-12):
        self.labels = labels
        self.tau = tau
        self.theta_floor = theta_floor
        self.target_abs_error = target_abs_error

    def fit(self, X=None, y=None):
        if self.tau is None or not self.labels:
            raise ValidationError("labels and tau are required")
        self.period_matrix_ = PeriodMatrix(np.asarray(self.tau, dtype=complex))
        g = self.period_matrix_.g
        for lab in self.labels:
            if lab.g != g:
                raise ValidationError(f"label {lab} has genus {lab.g}, expected {g}")
        self.config_ = ThetaEvalConfig(target_abs_error=self.target_abs_error)
        self.n_features_in_ = g
        return self

    def transform(self, X):
        if not hasattr(self, "period_matrix_"):
            from sklearn.exceptions import NotFittedError

            raise NotFittedError("AbelianFeatures is not fitted yet")
        return evaluate_labels(self.labels, X, self.period_matrix_, self.config_, self.theta_floor)

    def get_feature_names_out(self, input_features=None):
        return np.array([str(x) for x in self.labels], dtype=object)


# ---------------------------------------------------------------- bases


def _monomials(g: int, degree: int, variables=None) -> list[MultiIndex]:
    """Multi-indices of the given degree supported on ``variables`` (1-based)."""
    variables = tuple(range(1, g + 1)) if variables is None else tuple(variables)
    if degree < 0:
        return []
    out = []
    for combo in combinations_with_replacement(variables, degree):
        out.append(_add((0,) * g, *[_unit(g, i) for i in combo]) if combo else (0,) * g)
    return sorted(set(out), reverse=True)


def basis_labels_g2(n: int) -> list[AbelianLabel]:
    """Labels whose classes form a basis of ``gr_n A`` for genus 2."""
    if n < 0:
        raise ValidationError("n must be >= 0")
    if n == 0:
        return [One(2)]
    if n == 1:
        return []
    out: list[AbelianLabel] = [Zeta(m) for m in _monomials(2, n)]
    out += [Det((1, 2), (1, 2), m) for m in _monomials(2, n - 3)]
    return out


def basis_labels_g3(n: int, v: V3Element) -> list[AbelianLabel]:
    """Labels whose classes form a basis of ``gr_n A`` for genus 3."""
    if n < 0:
        raise ValidationError("n must be >= 0")
    if n == 0:
        return [One(3)]
    if n == 1:
        return []
    out: list[AbelianLabel] = [Zeta(m) for m in _monomials(3, n)]
    out += [v.differentiate(m) for m in _monomials(3, n - 2)]
    for J in ((1, 2), (1, 3), (2, 3)):
        out += [Det((1, 2), J, m) for m in _monomials(3, n - 3, variables=(1, 2))]
    for I, J in (((1, 3), (1, 3)), ((1, 3), (2, 3)), ((2, 3), (2, 3))):
        out += [Det(I, J, m) for m in _monomials(3, n - 3)]
    out += [Det((1, 2, 3), (1, 2, 3), m) for m in _monomials(3, n - 4)]
    return out


def cumulative_labels(g: int, n: int, v: V3Element | None = None) -> list[AbelianLabel]:
    """Union of the ``gr_m A`` bases for ``m <= n``: candidates for a basis of ``A_n``."""
    out: list[AbelianLabel] = []
    for m in range(n + 1):
        if g == 2:
            out += basis_labels_g2(m)
        elif g == 3:
            if v is None:
                raise ValidationError("genus 3 bases need the element v")
            out += basis_labels_g3(m, v)
        else:
            raise ValidationError("explicit bases are only available for g = 2, 3")
    return out


def select_v3(pm: PeriodMatrix, plan: SamplePlan, cfg: ThetaEvalConfig = DEFAULT_CONFIG,
              rtol: float = 1e-8) -> tuple[V3Element, dict]:
    """Pick the order-2 quotient farthest from ``span{1, zeta_ij}``.

    Returns the label and diagnostics (ranks and orthogonal residuals).
    Raises if the combined rank differs from ``dim A_2 = 8``.
    """
    if pm.g != 3:
        raise ValidationError("v is defined for genus 3")
    Z = draw_samples(pm, SamplePlan(plan.seed, max(plan.count, 32), plan.theta_floor), cfg)
    base = [One(3)] + [Zeta(m) for m in _monomials(3, 2)]
    quots = [OrderNQuotient(2, f.a) for f in order_n_basis(pm, 2)]
    B = evaluate_labels(base, Z, pm, cfg, plan.theta_floor)
    Q = evaluate_labels(quots, Z, pm, cfg, plan.theta_floor)
    scale = np.abs(np.hstack([B, Q])).max(axis=1, keepdims=True)
    Bs, Qs = B / scale, Q / scale
    Bs = Bs / np.linalg.norm(Bs, axis=0)
    Qs = Qs / np.linalg.norm(Qs, axis=0)
    U, s, _ = np.linalg.svd(Bs, full_matrices=False)
    U = U[:, s > rtol * s[0]]
    resid = np.linalg.norm(Qs - U @ (U.conj().T @ Qs), axis=0)
    base_rank = rank_report(B, rtol).rank
    combined = rank_report(np.hstack([B, Q]), rtol).rank
    if combined != 8:
        raise ArithmeticError(f"combined rank of 1, zeta_ij and order-2 quotients is {combined}, expected 8")
    best = int(np.argmax(resid))
    v = V3Element(a=quots[best].a)
    return v, {"base_rank": base_rank, "combined_rank": combined, "residuals": resid.tolist(), "chosen": best}


def gr_rank_test(g: int, n: int, labels, plan: SamplePlan, pm: PeriodMatrix,
                 cfg: ThetaEvalConfig = DEFAULT_CONFIG, rtol: float = 1e-8) -> RankReport:
    """Numerical rank of the labels' value matrix against ``dim A_n = n^g``.

    The verdict passes when the labels are independent and their number
    equals the dimension, i.e. they form a basis of ``A_n``.
    """
    labels = list(labels)
    if any(lab.pole_order > n for lab in labels):
        raise ValidationError("labels must have pole order <= n")
    count = max(plan.count, 2 * len(labels))
    Z = draw_samples(pm, SamplePlan(plan.seed, count, plan.theta_floor), cfg)
    M = evaluate_labels(labels, Z, pm, cfg, plan.theta_floor)
    return rank_report(M, rtol, expected=dim_A(g, n), labels=labels)


def dim_A(g: int, n: int) -> int:
    """``dim A_n``: ``n^g`` for ``n >= 1``, and the constants for ``n = 0``."""
    return 1 if n == 0 else n**g


# ---------------------------------------------------------------- probes


def find_divisor_point(pm: PeriodMatrix, seed: int = 0, cfg: ThetaEvalConfig = DEFAULT_CONFIG,
                       tol: float = 1e-13, max_iter: int = 60) -> np.ndarray:
    """A point with ``theta(z) = 0``, by minimum-norm Newton from the best sample."""
    rng = np.random.default_rng(seed)
    Z = sample_cell(pm, 200, rng)
    v = theta_derivatives(Z, pm, [(0,) * pm.g], cfg=cfg, normalized=True)[:, 0]
    z = Z[int(np.argmin(np.abs(v)))]
    grad_idx = [_unit(pm.g, i) for i in range(1, pm.g + 1)]
    for _ in range(max_iter):
        vals = theta_derivatives(z, pm, [(0,) * pm.g] + grad_idx, cfg=cfg, normalized=True)[0]
        f, grad = vals[0], vals[1:]
        if abs(f) < tol:
            return z
        # the normalizing factor is real-analytic, not holomorphic; Newton on
        # the raw function's zero set is unaffected since the factor is nonzero
        raw = theta_derivatives(z, pm, [(0,) * pm.g] + grad_idx, cfg=cfg)[0]
        f, grad = raw[0], raw[1:]
        z = z - f * np.conj(grad) / np.vdot(grad, grad).real
    raise ArithmeticError("Newton iteration did not reach the theta divisor")


GROWTH_LIMIT = 10**0.5


@dataclass
class ProbeResult:
    label: str
    order: int
    ratios: list[float]
    bounded: bool
    magnitudes: list[list[float]] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.bounded


def pole_order_probe(label: AbelianLabel, pm: PeriodMatrix, order: int | None = None, seed: int = 0,
                     cfg: ThetaEvalConfig = DEFAULT_CONFIG, steps=(1e-1, 1e-2, 1e-3),
                     n_directions: int = 3) -> ProbeResult:
    """Check that ``theta^order * f`` stays bounded approaching the divisor.

    ``|theta^order f|`` is sampled along ``z_0 + s u`` for each random unit
    direction ``u``. A bounded product tends to a constant (or to zero), so
    its growth over the innermost decade of ``s`` is about 1; one excess
    pole order gives a factor of about 10. The verdict compares the
    innermost-decade growth with ``GROWTH_LIMIT`` (the geometric midpoint).
    Larger steps are kept in ``magnitudes`` for inspection only: there the
    product may still be far from its limit, and transient cancellations
    make ratios against them unreliable.
    """
    order = label.pole_order if order is None else order
    z0 = None
    for attempt in range(5):
        try:
            z0 = find_divisor_point(pm, seed + attempt, cfg)
            break
        except ArithmeticError:
            continue
    if z0 is None:
        raise ArithmeticError("could not locate a point on the theta divisor")
    steps = sorted(steps, reverse=True)
    rng = np.random.default_rng(seed + 1000)
    ratios, growth = [], []
    for _ in range(n_directions):
        u = rng.normal(size=pm.g) + 1j * rng.normal(size=pm.g)
        u /= np.linalg.norm(u)
        Z = np.array([z0 + s * u for s in steps])
        f = evaluate_labels([label], Z, pm, cfg, theta_floor=0.0)[:, 0]
        th = theta_derivatives(Z, pm, [(0,) * pm.g], cfg=cfg)[:, 0]
        mag = np.abs(th**order * f)
        growth.append(mag.tolist())
        ratios.append(float(mag[-1] / mag[-2]))
    return ProbeResult(str(label), order, ratios, all(r <= GROWTH_LIMIT for r in ratios), growth)


# ---------------------------------------------------------------- genus one and Hirota


def frobenius_stickelberger_residual(z, tau, cfg: ThetaEvalConfig = DEFAULT_CONFIG, floor: float = 1e-2) -> float:
    """Relative defect of the Frobenius-Stickelberger addition formula.

    ``sigma`` is realized as ``theta[1/2,1/2](z) / theta'[1/2,1/2](0)`` and
    ``wp`` as ``-(log sigma)''``; the quadratic-exponential and additive-
    constant ambiguities both cancel in the identity.
    """
    pm = tau if isinstance(tau, PeriodMatrix) else PeriodMatrix(np.array([[complex(tau)]]))
    if pm.g != 1:
        raise ValidationError("the addition formula is a genus-one statement")
    z = np.asarray(z, dtype=complex).ravel()
    n = len(z)
    if n < 2:
        raise ValidationError("need at least two points")
    odd = Characteristic((0.5,), (0.5,))
    pts = list(z) + [z.sum()] + [z[i] - z[j] for i in range(n) for j in range(i + 1, n)]
    P = np.array(pts)[:, None]
    K = n
    raw = theta_derivatives(P, pm, [(k,) for k in range(K + 1)], odd, cfg)
    norm = theta_derivatives(P, pm, [(0,)], odd, cfg, normalized=True)[:, 0]
    if np.any(np.abs(norm) < floor):
        raise NearDivisorError("configuration too close to the period lattice")
    d0 = theta_derivatives(np.zeros((1, 1)), pm, [(1,)], odd, cfg)[0, 0]
    sig = raw[:, 0] / d0
    sig_z, sig_sum, sig_diff = sig[:n], sig[n], sig[n + 1 :]
    jet = {(k,): raw[:n, k] for k in range(K + 1)}
    L = log_derivatives(jet, K)
    sign = (-1) ** ((n - 1) * (n - 2) // 2)
    lhs = sign * prod(factorial(k) for k in range(1, n)) * sig_sum * np.prod(sig_diff) / np.prod(sig_z**n)
    M = np.empty((n, n), dtype=complex)
    M[0] = 1
    for r in range(1, n):
        M[r] = -L[(r + 1,)]  # wp^{(r-1)} = -(log sigma)^{(r+1)}
    rhs = np.linalg.det(M)
    return float(abs(lhs - rhs) / (abs(lhs) + abs(rhs)))


def hirota4_residual(Z, pm: PeriodMatrix, j: int, cfg: ThetaEvalConfig = DEFAULT_CONFIG,
                     theta_floor: float = 1e-2) -> np.ndarray:
    """Defect of ``D_j^4 theta.theta / theta^2 = 2(zeta_jjjj + 6 zeta_jj^2)``.

    The bilinear side is expanded as
    ``2(theta_jjjj theta - 4 theta_jjj theta_j + 3 theta_jj^2)``. The residual
    is relative: ``|lhs - rhs| / (1 + |lhs|)``.
    """
    g = pm.g
    jet = ThetaJet(Z, pm, 4, cfg)
    _check_floor(jet, theta_floor)
    e = _unit(g, j)
    d = [tuple(k * x for x in e) for k in range(5)]
    th = [jet.jet[a] for a in d]
    lhs = 2 * (th[4] * th[0] - 4 * th[3] * th[1] + 3 * th[2] ** 2) / th[0] ** 2
    L = jet.logd()
    rhs = 2 * (L[d[4]] + 6 * L[d[2]] ** 2)
    return np.abs(lhs - rhs) / (1 + np.abs(lhs))
