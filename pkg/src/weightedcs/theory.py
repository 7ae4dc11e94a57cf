"""Recovery guarantees for weighted l1 minimization.

All functions take RIP constants as inputs; nothing here estimates them
from a matrix ensemble except :func:`empirical_rip_delta`, which
enumerates column subsets of a small explicit matrix.

Notation follows the usual one: ``k`` sparsity level, ``a > 1`` oversize
factor, ``rho = |T~|/k`` relative size and ``alpha`` accuracy of the
support estimate, ``omega`` the weight placed on it.
"""
from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass
from math import comb
from typing import Optional

import numpy as np

from .errors import DomainError, ResourceError
from .model import SupportSet, best_k_term, as_signal

__all__ = [
    "GuaranteeInputs",
    "GuaranteeResult",
    "gamma",
    "weighted_sufficient_condition",
    "delta_hat",
    "weighted_constants",
    "evaluate",
    "error_bound",
    "candes_delta2k_conditions",
    "best_bound_over_a",
    "vaswani_condition",
    "vaswani_u0_boundary",
    "reduced_condition_max_u_over_k",
    "empirical_rip_delta",
    "condition_table",
    "write_condition_csv",
    "read_delta_csv",
    "RIP_SUBSET_CAP",
]

RIP_SUBSET_CAP = 1_000_000


@dataclass(frozen=True)
class GuaranteeInputs:
    a: float
    k: int
    rho: float
    alpha: float
    omega: float
    delta_ak: float
    delta_a1k: float

    def __post_init__(self):
        if not self.a > 1:
            raise DomainError(f"a must exceed 1, got {self.a}")
        if self.k < 1:
            raise DomainError("k must be at least 1")
        if self.rho < 0:
            raise DomainError("rho must be nonnegative")
        if not 0 <= self.alpha <= 1:
            raise DomainError("alpha must lie in [0, 1]")
        if not 0 <= self.omega <= 1:
            raise DomainError("omega must lie in [0, 1]")
        if self.a < (1 - self.alpha) * self.rho - 1e-12:
            raise DomainError("need a >= (1 - alpha) * rho")
        for name in ("delta_ak", "delta_a1k"):
            d = getattr(self, name)
            if not 0 <= d < 1:
                raise DomainError(f"{name} must lie in [0, 1), got {d}")

    @property
    def gamma(self) -> float:
        return gamma(self.omega, self.rho, self.alpha)


@dataclass(frozen=True)
class GuaranteeResult:
    gamma: float
    condition_holds: bool
    delta_hat: float
    C0p: float
    C1p: float


def gamma(omega, rho, alpha) -> float:
    """``omega + (1 - omega) * sqrt(1 + rho - 2*alpha*rho)``."""
    radicand = 1.0 + rho - 2.0 * alpha * rho
    if radicand < 0:
        if radicand > -1e-12:
            radicand = 0.0
        else:
            raise DomainError(f"1 + rho - 2*alpha*rho is negative ({radicand})")
    return omega + (1.0 - omega) * math.sqrt(radicand)


def weighted_sufficient_condition(g: GuaranteeInputs) -> bool:
    """RIP condition under which the weighted error bound holds.

    ``delta_ak + (a/gamma^2) delta_(a+1)k < a/gamma^2 - 1``; with
    ``gamma = 0`` the ratio is infinite and the condition reduces to
    ``delta_(a+1)k < 1``.
    """
    gm = g.gamma
    if gm == 0:
        return g.delta_a1k < 1 and g.delta_ak < 1
    ratio = g.a / gm**2
    return g.delta_ak + ratio * g.delta_a1k < ratio - 1


def delta_hat(a, omega, rho, alpha) -> float:
    """Threshold on ``delta_(a+1)k`` that suffices for weighted recovery."""
    if not a > 1:
        raise DomainError(f"a must exceed 1, got {a}")
    g2 = gamma(omega, rho, alpha) ** 2
    return (a - g2) / (a + g2)


def weighted_constants(g: GuaranteeInputs):
    """Return ``(C0', C1')``; both are ``inf`` when the denominator is <= 0."""
    gm = g.gamma
    sa = math.sqrt(g.a)
    lo = math.sqrt(1 - g.delta_a1k)
    hi = math.sqrt(1 + g.delta_ak)
    denom = lo - (gm / sa) * hi
    if denom <= 0:
        return math.inf, math.inf
    c0 = 2 * (1 + gm / sa) / denom
    c1 = 2 * (lo + hi) / (sa * denom)
    return c0, c1


def evaluate(g: GuaranteeInputs) -> GuaranteeResult:
    c0, c1 = weighted_constants(g)
    return GuaranteeResult(
        gamma=g.gamma,
        condition_holds=weighted_sufficient_condition(g),
        delta_hat=delta_hat(g.a, g.omega, g.rho, g.alpha),
        C0p=c0,
        C1p=c1,
    )


def error_bound(g: GuaranteeInputs, epsilon, x, support_estimate: SupportSet) -> float:
    """Right-hand side of the weighted recovery error bound.

    ``C0' eps + C1' k^{-1/2} (omega ||x - x_k||_1 + (1-omega) ||x_{T~c & T0c}||_1)``
    where ``T0`` is the support of the best k-term approximation.
    """
    if not weighted_sufficient_condition(g):
        raise DomainError("RIP condition does not hold; the bound is not valid")
    x = as_signal(x, "x")
    xk, T0 = best_k_term(x, g.k)
    tail = float(np.sum(np.abs(x - xk)))
    outside = ~(support_estimate.mask() | T0.mask())
    off = float(np.sum(np.abs(x[outside])))
    c0, c1 = weighted_constants(g)
    return c0 * epsilon + c1 / math.sqrt(g.k) * (g.omega * tail + (1 - g.omega) * off)


def candes_delta2k_conditions(omega, rho, alpha) -> float:
    """Alternative sufficient threshold on ``delta_2k``: ``1/(sqrt(2) gamma + 1)``."""
    return 1.0 / (math.sqrt(2.0) * gamma(omega, rho, alpha) + 1.0)


def vaswani_condition(delta_2u, delta_3u, delta_k, delta_ku, delta_k2u) -> bool:
    """Modified-CS condition ``2d_2u + d_3u + d_k + d_{k+u}^2 + 2 d_{k+2u}^2 < 1``."""
    for d in (delta_2u, delta_3u, delta_k, delta_ku, delta_k2u):
        if not 0 <= d < 1:
            raise DomainError(f"RIP constants must lie in [0, 1), got {d}")
    return 2 * delta_2u + delta_3u + delta_k + delta_ku**2 + 2 * delta_k2u**2 < 1


def vaswani_u0_boundary() -> float:
    """Largest ``delta_k`` allowed by the modified-CS condition (u = 0).

    Positive root of ``3 d^2 + d - 1 = 0``.
    """
    return (-1.0 + math.sqrt(13.0)) / 6.0


def reduced_condition_max_u_over_k(delta_2k) -> float:
    """Largest ``u/k`` with ``delta_2k < 1 / (2 sqrt(u/k) + 1)``."""
    if not 0 < delta_2k < 1:
        raise DomainError(f"delta_2k must lie in (0, 1), got {delta_2k}")
    return ((1.0 / delta_2k - 1.0) / 2.0) ** 2


def empirical_rip_delta(A_dense, k: int, cap: int = RIP_SUBSET_CAP) -> float:
    """Exact restricted isometry constant of order ``k`` by enumeration."""
    A = np.asarray(A_dense, dtype=float)
    N = A.shape[1]
    if not 1 <= k <= N:
        raise DomainError(f"k must lie in [1, {N}]")
    if comb(N, k) > cap:
        raise ResourceError(f"C({N}, {k}) = {comb(N, k)} column subsets exceeds cap {cap}")
    G = A.T @ A
    worst = 0.0
    for S in itertools.combinations(range(N), k):
        ev = np.linalg.eigvalsh(G[np.ix_(S, S)])
        worst = max(worst, ev[-1] - 1.0, 1.0 - ev[0])
    return float(worst)


def condition_table(omegas, alphas, rhos, a=3.0, delta=0.1):
    """Rows ``(omega, alpha, rho, a, delta_hat, C0p, C1p)`` over a grid.

    The constants use ``delta_ak = delta_(a+1)k = delta``. Grid points
    with ``1 + rho - 2*alpha*rho < 0`` (e.g. ``rho = 2, alpha > 0.75``)
    describe no realizable support estimate and are skipped.
    """
    rows = []
    for rho in rhos:
        for alpha in alphas:
            if 1.0 + rho - 2.0 * alpha * rho < -1e-12:
                continue
            for omega in omegas:
                g = GuaranteeInputs(a=a, k=1, rho=rho, alpha=alpha, omega=omega,
                                    delta_ak=delta, delta_a1k=delta)
                c0, c1 = weighted_constants(g)
                rows.append((omega, alpha, rho, a, delta_hat(a, omega, rho, alpha), c0, c1))
    return rows


CONDITION_COLUMNS = ("omega", "alpha", "rho", "a", "delta_hat", "C0p", "C1p")


def write_condition_csv(rows, path_or_file):
    """Write :func:`condition_table` rows with fixed 6-decimal formatting."""
    def emit(fh):
        fh.write(",".join(CONDITION_COLUMNS) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")

    if hasattr(path_or_file, "write"):
        emit(path_or_file)
    else:
        with open(path_or_file, "w", newline="\n", encoding="utf-8") as fh:
            emit(fh)


def _fmt(v):
    if math.isinf(v):
        return "inf"
    return f"{v:.6f}"


def read_delta_csv(path) -> dict:
    """Read ``label,delta_name,value`` rows into ``{label: {delta_name: value}}``.

    A header row is optional. Values must lie in [0, 1).
    """
    out: dict = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or row[0].startswith("#"):
                continue
            if len(row) != 3:
                raise DomainError(f"line {lineno}: expected 3 fields, got {len(row)}")
            label, name, value = (c.strip() for c in row)
            try:
                val = float(value)
            except ValueError:
                if lineno == 1:
                    continue
                raise DomainError(f"line {lineno}: value {value!r} is not a number")
            if not 0 <= val < 1:
                raise DomainError(f"line {lineno}: RIP constant {val} outside [0, 1)")
            out.setdefault(label, {})[name] = val
    return out


def best_bound_over_a(k, rho, alpha, omega, epsilon, x, support_estimate, deltas) -> Optional[float]:
    """Smallest valid error bound over the oversize factors in ``deltas``.

    ``deltas`` maps a sparsity level ``s`` to ``delta_s``; ``a`` ranges over
    ``j/k`` for integers ``j > k`` with both ``ak`` and ``(a+1)k`` present.
    Returns ``None`` when no admissible ``a`` satisfies the RIP condition.
    """
    best = None
    for j in sorted(deltas):
        a = j / k
        if j <= k or a < (1 - alpha) * rho or (j + k) not in deltas:
            continue
        if not (deltas[j] < 1 and deltas[j + k] < 1):
            continue
        g = GuaranteeInputs(a=a, k=k, rho=rho, alpha=alpha, omega=omega,
                            delta_ak=deltas[j], delta_a1k=deltas[j + k])
        if weighted_sufficient_condition(g):
            b = error_bound(g, epsilon, x, support_estimate)
            best = b if best is None else min(best, b)
    return best
