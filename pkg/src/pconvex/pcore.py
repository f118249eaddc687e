"""Arithmetic for p-convex combinations.

For ``0 < p <= 1`` a pair of coefficients ``(lam, mu)`` is admissible when
``lam**p + mu**p == 1``.  Every admissible pair is parameterised by ``lam``
alone through the conjugate coefficient ``mu = (1 - lam**p) ** (1/p)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np
from scipy import optimize

COEFFICIENT_RTOL = 1e-12

SegmentKind = Literal["open", "half_open", "closed"]


class DomainError(ValueError):
    """An argument lies outside the domain of an operation."""


class PExponent(float):
    """A float restricted to ``0 < p <= 1``."""

    def __new__(cls, value):
        v = float(value)
        if not (0.0 < v <= 1.0):
            raise DomainError(f"p must satisfy 0 < p <= 1, got {value!r}")
        return super().__new__(cls, v)

    def __repr__(self) -> str:
        return f"PExponent({float(self)!r})"


def as_p(p) -> PExponent:
    return p if isinstance(p, PExponent) else PExponent(p)


def as_vector(x) -> np.ndarray:
    """Return ``x`` as a finite 1-D float array (scalars become length 1)."""
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"expected a non-empty vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("vector coordinates must be finite")
    return arr


def _check_lambda(lam: float) -> float:
    lam = float(lam)
    if not (0.0 <= lam <= 1.0):
        raise DomainError(f"lambda must lie in [0, 1], got {lam!r}")
    return lam


@dataclass(frozen=True)
class PCoefficients:
    """An admissible coefficient pair for exponent ``p``."""

    lam: float
    mu: float
    p: float

    def __post_init__(self):
        p = as_p(self.p)
        if self.lam < 0 or self.mu < 0:
            raise DomainError("coefficients must be nonnegative")
        total = self.lam**p + self.mu**p
        if abs(total - 1.0) > COEFFICIENT_RTOL * max(1.0, abs(total)):
            raise DomainError(
                f"lam**p + mu**p = {total!r} differs from 1 (lam={self.lam}, mu={self.mu}, p={float(p)})"
            )

    @classmethod
    def from_lambda(cls, lam: float, p) -> "PCoefficients":
        return cls(_check_lambda(lam), conjugate_coefficient(lam, p), float(p))


def conjugate_coefficient(lam: float, p) -> float:
    """Return ``(1 - lam**p) ** (1/p)``, the partner of ``lam``."""
    lam = _check_lambda(lam)
    p = as_p(p)
    base = min(1.0, max(0.0, 1.0 - lam**p))
    return base ** (1.0 / p)


def conjugate_coefficients(lams, p) -> np.ndarray:
    """Vectorised :func:`conjugate_coefficient`."""
    lams = np.asarray(lams, dtype=float)
    if np.any((lams < 0) | (lams > 1)):
        raise DomainError("lambda values must lie in [0, 1]")
    p = as_p(p)
    return np.clip(1.0 - lams**p, 0.0, 1.0) ** (1.0 / p)


def p_combine(x, y, lam: float, p) -> np.ndarray:
    """``lam * x + (1 - lam**p)**(1/p) * y``."""
    x = as_vector(x)
    y = as_vector(y)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.size} vs {y.size}")
    mu = conjugate_coefficient(lam, p)
    return float(lam) * x + mu * y


def scaling_g(lam: float, p) -> float:
    """``lam + (1 - lam**p)**(1/p)``; lies in ``[2**((p-1)/p), 1]``."""
    return float(lam) + conjugate_coefficient(lam, p)


def g_argmin(p) -> tuple[float, float]:
    """Closed-form minimiser of :func:`scaling_g` and its minimum value.

    The minimum sits at ``lam = 2**(-1/p)`` with value ``2**((p-1)/p)``.
    Undefined for ``p = 1`` where ``scaling_g`` is identically 1.
    """
    p = as_p(p)
    if p == 1.0:
        raise DomainError("scaling_g is constant for p = 1; no strict minimiser")
    return 2.0 ** (-1.0 / p), 2.0 ** ((p - 1.0) / p)


def g_argmin_numeric(p, tol: float = 1e-12) -> tuple[float, float]:
    """Golden-section minimisation of :func:`scaling_g` on ``[0, 1]``."""
    p = as_p(p)
    # g(0) = g(1) = 1 > g(1/2) for p < 1, so (0, 1/2, 1) brackets the minimum
    lam = optimize.golden(scaling_g, args=(p,), brack=(0.0, 0.5, 1.0), tol=tol)
    lam = min(1.0, max(0.0, float(lam)))
    return lam, scaling_g(lam, p)


def segment_lambdas(count: int, kind: SegmentKind = "closed") -> np.ndarray:
    """Uniform lambda grid for an open, half-open or closed p-segment.

    ``closed`` spans ``[0, 1]``, ``half_open`` spans ``(0, 1]`` and ``open``
    spans ``(0, 1)``.  Values are returned in increasing order.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    if kind == "closed":
        return np.array([1.0]) if count == 1 else np.linspace(0.0, 1.0, count)
    if kind == "half_open":
        return np.arange(1, count + 1) / count
    if kind == "open":
        return np.arange(1, count + 1) / (count + 1)
    raise ValueError(f"unknown segment kind {kind!r}")


def sample_p_segment(x, y, p, count: int, kind: SegmentKind = "closed") -> list[np.ndarray]:
    """Points of the p-segment between ``y`` (lambda=0) and ``x`` (lambda=1)."""
    x = as_vector(x)
    y = as_vector(y)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.size} vs {y.size}")
    lams = segment_lambdas(count, kind)
    mus = conjugate_coefficients(lams, p)
    return [lam * x + mu * y for lam, mu in zip(lams, mus)]


def adversarial_lambdas(p, extra: Sequence[float] = ()) -> list[float]:
    """Lambda values where counterexamples concentrate, in search order.

    Endpoints, the symmetric point ``2**(-1/p)`` (where lam == mu) and values
    within 1e-3 of each endpoint, followed by caller-supplied extras.
    """
    p = as_p(p)
    out: list[float] = []
    for lam in (2.0 ** (-1.0 / p), 0.0, 1.0, 1e-3, 1e-4, 1.0 - 1e-3, 1.0 - 1e-4, *extra):
        lam = float(lam)
        if 0.0 <= lam <= 1.0 and lam not in out:
            out.append(lam)
    return out
