"""Input validation helpers shared by the exact and numerical layers."""

from __future__ import annotations

import numbers

import numpy as np


class ValidationError(ValueError):
    """Raised when user-supplied input violates a documented invariant."""


def check_genus(g, minimum: int = 1) -> int:
    if isinstance(g, bool) or not isinstance(g, numbers.Integral):
        raise ValidationError(f"genus must be an integer, got {g!r}")
    if g < minimum:
        raise ValidationError(f"genus must be >= {minimum}, got {g}")
    return int(g)


def check_multi_index(alpha, g: int, max_order: int | None = None) -> tuple[int, ...]:
    """Normalize a derivative multi-index to a tuple of ``g`` nonnegative ints."""
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != g:
        raise ValidationError(f"multi-index {alpha} has length {len(alpha)}, expected {g}")
    if any(a < 0 for a in alpha):
        raise ValidationError(f"multi-index {alpha} has negative entries")
    if max_order is not None and sum(alpha) > max_order:
        raise ValidationError(f"derivative order {sum(alpha)} exceeds maximum {max_order}")
    return alpha


def check_points(Z, g: int) -> np.ndarray:
    """Coerce sample points to a complex ``(n_samples, g)`` array.

    A single point of shape ``(g,)`` is promoted to one row.
    """
    Z = np.asarray(Z, dtype=complex)
    if Z.ndim == 1:
        if Z.shape[0] != g:
            raise ValidationError(f"point has {Z.shape[0]} coordinates, expected {g}")
        Z = Z[None, :]
    if Z.ndim != 2 or Z.shape[1] != g:
        raise ValidationError(f"expected array of shape (n, {g}), got {Z.shape}")
    if not np.all(np.isfinite(Z)):
        raise ValidationError("points contain non-finite values")
    return Z


def check_positive(value, name: str) -> float:
    value = float(value)
    if not np.isfinite(value) or value <= 0:
        raise ValidationError(f"{name} must be a positive finite number, got {value}")
    return value
