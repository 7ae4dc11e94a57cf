"""Signals, supports and weights.

Signals are plain 1-D float arrays. Supports are small immutable
:class:`SupportSet` objects so that set algebra and dimension checks stay
in one place.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import DimensionError, DomainError

__all__ = [
    "SupportSet",
    "SupportEstimate",
    "as_signal",
    "weighted_l1_norm",
    "best_k_term",
    "support_accuracy",
    "build_weights",
    "gen_sparse_signal",
    "gen_compressible_signal",
    "gen_support_estimate",
    "round_half_up",
]


def round_half_up(x: float) -> int:
    """Round to the nearest integer, halves away from zero (for x >= 0)."""
    # guards against 0.7*40 = 28.000000000000004 style noise
    return int(math.floor(x + 0.5 + 1e-9))


def as_signal(x, name="signal") -> np.ndarray:
    """Validate and return ``x`` as a finite 1-D float64 array."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise DimensionError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size < 1:
        raise DimensionError(f"{name} must have length >= 1")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} contains non-finite entries")
    return arr


@dataclass(frozen=True)
class SupportSet:
    """A sorted set of indices into ``range(ambient_dim)``."""

    indices: tuple
    ambient_dim: int

    def __init__(self, indices: Iterable[int], ambient_dim: int):
        ambient_dim = int(ambient_dim)
        if ambient_dim < 0:
            raise DomainError("ambient_dim must be nonnegative")
        idx = [int(i) for i in np.asarray(list(indices), dtype=np.int64).ravel()]
        uniq = sorted(set(idx))
        if len(uniq) != len(idx):
            raise DomainError("support indices must be distinct")
        if uniq and (uniq[0] < 0 or uniq[-1] >= ambient_dim):
            raise DomainError(f"support indices must lie in [0, {ambient_dim})")
        object.__setattr__(self, "indices", tuple(uniq))
        object.__setattr__(self, "ambient_dim", ambient_dim)

    @classmethod
    def from_mask(cls, mask) -> "SupportSet":
        mask = np.asarray(mask, dtype=bool)
        return cls(np.flatnonzero(mask), mask.size)

    def __len__(self):
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)

    def __contains__(self, i):
        return int(i) in set(self.indices)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.indices, dtype=np.int64)

    def mask(self) -> np.ndarray:
        m = np.zeros(self.ambient_dim, dtype=bool)
        m[self.as_array()] = True
        return m

    def _check(self, other):
        if self.ambient_dim != other.ambient_dim:
            raise DimensionError("supports live in different ambient dimensions")

    def __and__(self, other):
        self._check(other)
        return SupportSet(set(self.indices) & set(other.indices), self.ambient_dim)

    def __or__(self, other):
        self._check(other)
        return SupportSet(set(self.indices) | set(other.indices), self.ambient_dim)

    def __sub__(self, other):
        self._check(other)
        return SupportSet(set(self.indices) - set(other.indices), self.ambient_dim)

    def complement(self) -> "SupportSet":
        return SupportSet.from_mask(~self.mask())


@dataclass(frozen=True)
class SupportEstimate:
    """A support estimate together with the support it is scored against.

    Cardinalities produced by :func:`gen_support_estimate` are rounded half
    up, so ``alpha`` and ``rho`` match the requested values to within
    ``1/(rho*k)``.
    """

    indices: SupportSet
    reference: SupportSet

    def __post_init__(self):
        if self.indices.ambient_dim != self.reference.ambient_dim:
            raise DimensionError("estimate and reference have different ambient dimensions")

    @property
    def alpha(self) -> float:
        if len(self.indices) == 0:
            return 0.0
        return len(self.indices & self.reference) / len(self.indices)

    @property
    def rho(self) -> float:
        k = len(self.reference)
        if k == 0:
            raise DomainError("rho is undefined for an empty reference support")
        return len(self.indices) / k


def weighted_l1_norm(z, w) -> float:
    """Return ``sum(w * |z|)``."""
    z = np.asarray(z, dtype=float)
    w = np.asarray(w, dtype=float)
    if z.shape != w.shape:
        raise DimensionError(f"length mismatch: z has shape {z.shape}, w has {w.shape}")
    if not (np.all(np.isfinite(z)) and np.all(np.isfinite(w))):
        raise DomainError("z and w must be finite")
    return float(np.sum(w * np.abs(z)))


def best_k_term(x, k: int):
    """Keep the ``k`` largest-magnitude entries of ``x``.

    Ties are broken toward the lower index. Returns ``(x_k, support)``.
    """
    x = as_signal(x, "x")
    k = int(k)
    if not 0 <= k <= x.size:
        raise DomainError(f"k must lie in [0, {x.size}], got {k}")
    order = np.argsort(-np.abs(x), kind="stable")
    keep = order[:k]
    xk = np.zeros_like(x)
    xk[keep] = x[keep]
    return xk, SupportSet(keep, x.size)


def support_accuracy(est: SupportEstimate):
    """Return ``(alpha, rho)`` for a support estimate."""
    return est.alpha, est.rho


def build_weights(support: SupportSet, omega: float, N: int | None = None) -> np.ndarray:
    """Weight vector equal to ``omega`` on ``support`` and 1 elsewhere."""
    if N is None:
        N = support.ambient_dim
    if support.ambient_dim != N:
        raise DimensionError("support ambient dimension does not match N")
    if not 0.0 <= omega <= 1.0:
        raise DomainError(f"omega must lie in [0, 1], got {omega}")
    w = np.ones(int(N))
    w[support.as_array()] = omega
    return w


def gen_sparse_signal(N: int, k: int, seed) -> np.ndarray:
    """Exactly ``k`` standard-normal nonzeros on a uniformly random support."""
    if not 0 <= k <= N:
        raise DomainError(f"need 0 <= k <= N, got k={k}, N={N}")
    rng = np.random.default_rng(seed)
    x = np.zeros(N)
    idx = rng.choice(N, size=k, replace=False)
    vals = rng.standard_normal(k)
    # a zero draw would silently shrink the support
    vals[vals == 0.0] = 1.0
    x[idx] = vals
    return x


def gen_compressible_signal(N: int, p: float, seed) -> np.ndarray:
    """Randomly signed and permuted entries with magnitudes ``j**-p``."""
    if not p > 1:
        raise DomainError(f"decay power p must exceed 1, got {p}")
    rng = np.random.default_rng(seed)
    mags = np.arange(1, N + 1, dtype=float) ** (-float(p))
    signs = rng.choice([-1.0, 1.0], size=N)
    perm = rng.permutation(N)
    x = np.empty(N)
    x[perm] = signs * mags
    return x


def gen_support_estimate(T0: SupportSet, rho: float, alpha: float, seed) -> SupportEstimate:
    """Draw a support estimate with relative size ``rho`` and accuracy ``alpha``.

    ``round(alpha*rho*k)`` indices come from ``T0`` and
    ``round((1-alpha)*rho*k)`` from its complement, both uniformly.
    """
    if not 0.0 <= alpha <= 1.0:
        raise DomainError(f"alpha must lie in [0, 1], got {alpha}")
    if rho < 0:
        raise DomainError(f"rho must be nonnegative, got {rho}")
    k = len(T0)
    N = T0.ambient_dim
    n_in = round_half_up(alpha * rho * k)
    n_out = round_half_up((1.0 - alpha) * rho * k)
    if n_in > k or n_out > N - k:
        raise DomainError(
            f"cannot draw {n_in} indices inside a support of size {k} "
            f"and {n_out} outside it (N={N})"
        )
    rng = np.random.default_rng(seed)
    inside = T0.as_array()
    outside = T0.complement().as_array()
    chosen = np.concatenate([
        rng.choice(inside, size=n_in, replace=False) if n_in else np.empty(0, np.int64),
        rng.choice(outside, size=n_out, replace=False) if n_out else np.empty(0, np.int64),
    ])
    return SupportEstimate(SupportSet(chosen, N), T0)
