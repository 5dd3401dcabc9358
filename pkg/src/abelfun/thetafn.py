r"""Riemann theta functions with characteristics and their derivatives.

.. math::

    \theta[a, b](z \mid \tau) = \sum_{n \in \mathbb{Z}^g}
        \exp\big(\pi i (n+a)^T \tau (n+a) + 2\pi i (n+a)^T (z+b)\big)

Derivatives are taken term by term, so ``d^alpha`` multiplies each term by
``prod_j (2 pi i (n+a)_j)^alpha_j``. The lattice sum runs over a Euclidean
ball centred on the dominant term, whose radius comes from a Gaussian tail
bound in the smallest eigenvalue of ``Im tau``. All requested derivatives
of a batch of points are evaluated together as one matrix product.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product
from math import exp, pi, sqrt

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .validation import ValidationError, check_multi_index, check_points, check_positive


class TruncationError(RuntimeError):
    """The lattice radius needed for the requested accuracy exceeds the cap."""


@dataclass(frozen=True, eq=False)
class PeriodMatrix:
    """Symmetric ``g x g`` complex matrix with positive definite imaginary part."""

    tau: np.ndarray
    sym_tol: float = 1e-12
    g: int = field(init=False)
    Y: np.ndarray = field(init=False, repr=False)
    Yinv: np.ndarray = field(init=False, repr=False)
    lambda_min: float = field(init=False)

    def __post_init__(self):
        tau = np.atleast_2d(np.asarray(self.tau, dtype=complex))
        if tau.ndim != 2 or tau.shape[0] != tau.shape[1]:
            raise ValidationError(f"tau must be square, got shape {tau.shape}")
        asym = np.max(np.abs(tau - tau.T)) if tau.size else 0.0
        if asym > self.sym_tol:
            raise ValidationError(f"tau is not symmetric (max asymmetry {asym:.3e})")
        tau = (tau + tau.T) / 2
        Y = tau.imag.copy()
        lam = float(np.linalg.eigvalsh(Y).min())
        if not lam > 0:
            raise ValidationError(f"Im(tau) is not positive definite (min eigenvalue {lam:.3e})")
        object.__setattr__(self, "tau", tau)
        object.__setattr__(self, "g", tau.shape[0])
        object.__setattr__(self, "Y", Y)
        object.__setattr__(self, "Yinv", np.linalg.inv(Y))
        object.__setattr__(self, "lambda_min", lam)

    @classmethod
    def from_pairs(cls, entries) -> "PeriodMatrix":
        """Build from nested ``[re, im]`` pairs, the config-file encoding."""
        arr = np.asarray(entries, dtype=float)
        if arr.ndim != 3 or arr.shape[-1] != 2:
            raise ValidationError(f"expected a g x g array of [re, im] pairs, got shape {arr.shape}")
        return cls(arr[..., 0] + 1j * arr[..., 1])

    def to_pairs(self) -> list:
        return [[[float(x.real), float(x.imag)] for x in row] for row in self.tau]

    def scaled(self, n: int) -> "PeriodMatrix":
        return PeriodMatrix(n * self.tau)

    def lattice_point(self, p, q) -> np.ndarray:
        """``tau p + q`` for integer vectors ``p``, ``q``."""
        return self.tau @ np.asarray(p, dtype=float) + np.asarray(q, dtype=float)

    def reduce_to_cell(self, Z) -> np.ndarray:
        """Coordinates ``(x, y)`` with ``z = x + tau y``."""
        Z = check_points(Z, self.g)
        y = Z.imag @ self.Yinv.T
        x = Z.real - y @ self.tau.real.T
        return x, y


@dataclass(frozen=True)
class Characteristic:
    """Real characteristic ``[a, b]``; ``a`` shifts the lattice, ``b`` the argument."""

    a: tuple[float, ...]
    b: tuple[float, ...]

    def __post_init__(self):
        a = tuple(float(x) for x in np.atleast_1d(self.a))
        b = tuple(float(x) for x in np.atleast_1d(self.b))
        if len(a) != len(b):
            raise ValidationError("characteristic halves differ in length")
        if not all(np.isfinite(a + b)):
            raise ValidationError("characteristic must be finite")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @classmethod
    def zero(cls, g: int) -> "Characteristic":
        return cls((0.0,) * g, (0.0,) * g)

    @classmethod
    def half(cls, a_bits, b_bits) -> "Characteristic":
        return cls(tuple(0.5 * x for x in a_bits), tuple(0.5 * x for x in b_bits))

    @property
    def g(self) -> int:
        return len(self.a)


@dataclass(frozen=True)
class ThetaEvalConfig:
    target_abs_error: float = 1e-12
    max_radius: int = 40
    max_deriv_order: int = 8
    radius_scale: float = 1.0

    def __post_init__(self):
        check_positive(self.target_abs_error, "target_abs_error")
        if not self.target_abs_error < 1:
            raise ValidationError("target_abs_error must be < 1")
        if self.max_radius < 1 or self.max_deriv_order < 0:
            raise ValidationError("max_radius must be >= 1 and max_deriv_order >= 0")
        check_positive(self.radius_scale, "radius_scale")


DEFAULT_CONFIG = ThetaEvalConfig()


def tail_bound(R: float, g: int, lambda_min: float, deriv_order: int, shift_norm: float = 0.0) -> float:
    """Upper bound for the lattice tail outside radius ``R``.

    Lattice points in the shell ``r <= |m| < r+1`` number at most
    ``(2r+3)^g``; each contributes at most
    ``(2 pi (r+1+shift_norm))^order * exp(-pi lambda_min r^2)``.
    """
    total = 0.0
    r = int(np.floor(R))
    while True:
        term = (2 * r + 3) ** g * (2 * pi * (r + 1 + shift_norm)) ** deriv_order * exp(-pi * lambda_min * r * r)
        total += term
        if r > R + 2 and term < 1e-3 * total:
            return total
        r += 1


def truncation_radius(
    pm: PeriodMatrix,
    deriv_order: int,
    target_abs_error: float,
    max_radius: int = DEFAULT_CONFIG.max_radius,
    shift_norm: float = 0.0,
    prefactor: float = 1.0,
) -> int:
    """Smallest integer ``R`` whose tail bound (times ``prefactor``) is below target."""
    check_positive(target_abs_error, "target_abs_error")
    for R in range(1, max_radius + 1):
        if prefactor * tail_bound(R, pm.g, pm.lambda_min, deriv_order, shift_norm) < target_abs_error:
            return R
    raise TruncationError(
        f"radius {max_radius} insufficient for error {target_abs_error:g} "
        f"(lambda_min={pm.lambda_min:.3e}, order={deriv_order})"
    )


@lru_cache(maxsize=64)
def _ball(g: int, radius: float) -> np.ndarray:
    r = int(np.ceil(radius))
    axis = np.arange(-r, r + 1)
    pts = np.array(np.meshgrid(*([axis] * g), indexing="ij")).reshape(g, -1).T
    keep = np.einsum("ij,ij->i", pts, pts) <= radius * radius
    pts = pts[keep]
    order = np.lexsort(pts.T[::-1])
    return pts[order]


def multi_indices(g: int, max_order: int) -> list[tuple[int, ...]]:
    """All multi-indices of total order ``<= max_order``, graded then lexicographic."""
    out = []
    for k in range(max_order + 1):
        for alpha in product(range(k + 1), repeat=g):
            if sum(alpha) == k:
                out.append(alpha)
    return sorted(out, key=lambda a: (sum(a), tuple(-x for x in a)))


def theta_derivatives(
    Z,
    pm: PeriodMatrix,
    derivs,
    char: Characteristic | None = None,
    cfg: ThetaEvalConfig = DEFAULT_CONFIG,
    normalized: bool = False,
) -> np.ndarray:
    """Values ``d^alpha theta[char](z | tau)`` for every point and multi-index.

    Returns a complex array of shape ``(n_points, len(derivs))``. Every
    term is bounded by ``exp(pi y^T Y^-1 y)`` with ``y = Im z``; with
    ``normalized=True`` that factor is divided out, and the result's
    truncation error is at most ``cfg.target_abs_error``. Unnormalized
    values carry the same relative accuracy.
    """
    g = pm.g
    Z = check_points(Z, g)
    derivs = [check_multi_index(a, g, cfg.max_deriv_order) for a in derivs]
    char = char if char is not None else Characteristic.zero(g)
    if char.g != g:
        raise ValidationError("characteristic length does not match genus")
    a = np.array(char.a)
    b = np.array(char.b)
    order = max((sum(d) for d in derivs), default=0)
    D = np.array(derivs, dtype=int).reshape(len(derivs), g)

    shift = Z.imag @ pm.Yinv.T  # dominant term sits at n + a = -shift
    log_pref = np.pi * np.einsum("ij,ij->i", Z.imag, shift)
    base = np.rint(-shift - a).astype(int)
    out = np.empty((Z.shape[0], len(derivs)), dtype=complex)
    groups: dict[tuple[int, ...], list[int]] = {}
    for i, c in enumerate(map(tuple, base)):
        groups.setdefault(c, []).append(i)

    for c, idx in groups.items():
        idx = np.array(idx)
        shift_norm = float(np.max(np.linalg.norm(shift[idx] + a, axis=1)))
        R = truncation_radius(pm, order, cfg.target_abs_error, cfg.max_radius, shift_norm=shift_norm)
        R = R * cfg.radius_scale + sqrt(g) / 2
        n = np.array(c)[None, :] + _ball(g, R)
        na = n + a[None, :]
        quad = np.pi * 1j * np.einsum("ni,ij,nj->n", na, pm.tau, na)
        lin = 2j * np.pi * (na @ (Z[idx] + b[None, :]).T)
        E = np.exp(quad[:, None] + lin - log_pref[idx][None, :])
        fac = 2j * np.pi * na
        W = np.ones((na.shape[0], len(derivs)), dtype=complex)
        for j in range(g):
            if D[:, j].any():
                W *= fac[:, j : j + 1] ** D[None, :, j]
        out[idx] = E.T @ W
    if not normalized:
        out *= np.exp(log_pref)[:, None]
    return out


def theta(z, pm: PeriodMatrix, char: Characteristic | None = None, deriv=None, cfg: ThetaEvalConfig = DEFAULT_CONFIG):
    """Single value of ``d^deriv theta[char](z | tau)``."""
    deriv = (0,) * pm.g if deriv is None else deriv
    return complex(theta_derivatives(np.atleast_1d(z), pm, [deriv], char, cfg)[0, 0])


def quasiperiodicity_residual(z, p, q, pm: PeriodMatrix, cfg: ThetaEvalConfig = DEFAULT_CONFIG) -> float:
    """Defect of ``theta(z + tau p + q) = exp(-pi i p.tau.p - 2 pi i p.z) theta(z)``.

    The shifted value is multiplied back by the inverse automorphy factor
    before comparing, so the residual is measured on the scale of
    ``theta(z)``: ``|e^-1 theta(z + tau p + q) - theta(z)| / (1 + |theta(z)|)``.
    """
    z = check_points(z, pm.g)[0]
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    w = z + pm.lattice_point(p, q)
    vals = theta_derivatives(np.vstack([z, w]), pm, [(0,) * pm.g], cfg=cfg)[:, 0]
    log_factor = -1j * np.pi * p @ pm.tau @ p - 2j * np.pi * p @ z
    back = vals[1] * np.exp(-log_factor)
    return float(abs(back - vals[0]) / (1 + abs(vals[0])))


@dataclass(frozen=True)
class OrderNTheta:
    """``theta[a/n, 0](n z | n tau) / theta(z)^n``: an abelian function with poles of order <= n."""

    pm: PeriodMatrix
    n: int
    a: tuple[int, ...]

    @property
    def label(self) -> str:
        return f"Q{self.n}[{','.join(map(str, self.a))}]"

    def numerator_derivatives(self, Z, derivs, cfg: ThetaEvalConfig = DEFAULT_CONFIG) -> np.ndarray:
        """Derivatives in ``z`` of the numerator (chain rule gives ``n^|alpha|``)."""
        Z = check_points(Z, self.pm.g)
        char = Characteristic(tuple(x / self.n for x in self.a), (0.0,) * self.pm.g)
        vals = theta_derivatives(self.n * Z, self.pm.scaled(self.n), derivs, char, cfg)
        scale = np.array([float(self.n) ** sum(d) for d in derivs])
        return vals * scale[None, :]

    def __call__(self, Z, cfg: ThetaEvalConfig = DEFAULT_CONFIG) -> np.ndarray:
        zero = [(0,) * self.pm.g]
        num = self.numerator_derivatives(Z, zero, cfg)[:, 0]
        den = theta_derivatives(Z, self.pm, zero, cfg=cfg)[:, 0]
        return num / den**self.n


def order_n_basis(pm: PeriodMatrix, n: int) -> list[OrderNTheta]:
    """The ``n^g`` quotients indexed by ``a`` in ``(Z/n)^g``."""
    if n < 1:
        raise ValidationError(f"n must be >= 1, got {n}")
    return [OrderNTheta(pm, n, a) for a in product(range(n), repeat=pm.g)]


def order_n_residual(f: OrderNTheta, z, p, q, cfg: ThetaEvalConfig = DEFAULT_CONFIG) -> float:
    """Relative defect of lattice periodicity ``f(z + tau p + q) = f(z)``."""
    z = check_points(z, f.pm.g)[0]
    w = z + f.pm.lattice_point(p, q)
    v = f(np.vstack([z, w]), cfg)
    return float(abs(v[1] - v[0]) / (1 + abs(v[0])))


def sample_cell(pm: PeriodMatrix, count: int, rng: np.random.Generator) -> np.ndarray:
    """Points ``x + tau y`` with ``x, y`` uniform in ``[0, 1)^g``."""
    x = rng.random((count, pm.g))
    y = rng.random((count, pm.g))
    return x + y @ pm.tau.T


class ThetaTransformer(TransformerMixin, BaseEstimator):
    """Map sample points to theta-function derivative values.

    Parameters
    ----------
    tau : array-like of shape (g, g)
        Period matrix (complex).
    derivs : sequence of multi-indices, optional
        Derivatives to return, one output column each. Defaults to the
        function value only.
    a, b : array-like, optional
        Characteristic.
    target_abs_error : float
        Absolute truncation error per value.
    """

    def __init__(self, tau=None, derivs=None, a=None, b=None, target_abs_error=1e-12, max_radius=40):
        self.tau = tau
        self.derivs = derivs
        self.a = a
        self.b = b
        self.target_abs_error = target_abs_error
        self.max_radius = max_radius

    def fit(self, X=None, y=None):
        if self.tau is None:
            raise ValidationError("tau is required")
        self.period_matrix_ = PeriodMatrix(np.asarray(self.tau, dtype=complex))
        g = self.period_matrix_.g
        self.n_features_in_ = g
        derivs = self.derivs if self.derivs is not None else [(0,) * g]
        self.derivs_ = [check_multi_index(d, g) for d in derivs]
        a = np.zeros(g) if self.a is None else self.a
        b = np.zeros(g) if self.b is None else self.b
        self.characteristic_ = Characteristic(tuple(np.atleast_1d(a)), tuple(np.atleast_1d(b)))
        self.config_ = ThetaEvalConfig(
            target_abs_error=self.target_abs_error,
            max_radius=self.max_radius,
            max_deriv_order=max(8, max(sum(d) for d in self.derivs_)),
        )
        if X is not None:
            check_points(X, g)
        return self

    def transform(self, X):
        if not hasattr(self, "period_matrix_"):
            from sklearn.exceptions import NotFittedError

            raise NotFittedError("ThetaTransformer is not fitted yet")
        X = check_points(X, self.period_matrix_.g)
        return theta_derivatives(X, self.period_matrix_, self.derivs_, self.characteristic_, self.config_)
