"""Decoupled Markov-chain model of threshold-based age-dependent random access.

Every device is modelled as an independent age chain in which a transmission
succeeds with a constant probability ``q``.  The chain is flat up to the
threshold and geometric beyond it; ``q`` is the root of

    g(q) = 1/f(q) + q**(1/(N-1)) - 1,    f(q) = delta*q + 1/p - q,

found by bisection.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ProtocolConfig",
    "FixedPointSolution",
    "StationaryAgeDistribution",
    "AoiStatistics",
    "NoSignChangeError",
    "g_eval",
    "lemma_lower_bound",
    "solve_success_probability",
    "stationary_distribution",
    "stationary_pmf",
    "average_aoi_adra",
    "average_aoi_aira",
]

DEFAULT_TOL = 1e-12
MAX_ITER = 200
Q_FLOOR = 1e-15
SCAN_POINTS = 256


class NoSignChangeError(ArithmeticError):
    """Raised when no bracket for the fixed point can be located."""


@dataclass(frozen=True)
class ProtocolConfig:
    n_devices: int
    cap: float
    threshold: int = 1

    def __post_init__(self):
        if int(self.n_devices) != self.n_devices or self.n_devices < 2:
            raise ValueError(f"n_devices must be an integer >= 2, got {self.n_devices!r}")
        if not (0.0 < self.cap <= 1.0):
            raise ValueError(f"cap must lie in (0, 1], got {self.cap!r}")
        if int(self.threshold) != self.threshold or self.threshold < 1:
            raise ValueError(f"threshold must be an integer >= 1, got {self.threshold!r}")

    @property
    def in_lemma_regime(self) -> bool:
        """True when N >= 3 and p <= 2/N, where the root is provably unique."""
        return self.n_devices >= 3 and self.cap <= 2.0 / self.n_devices


@dataclass(frozen=True)
class FixedPointSolution:
    q: float
    eta: float
    iterations: int
    residual: float
    regime_warning: bool = False


@dataclass(frozen=True)
class StationaryAgeDistribution:
    threshold: int
    head_mass: float
    decay: float

    def pmf(self, ages):
        """Probability of each age in ``ages`` (scalar or array, ages >= 1)."""
        ages = np.asarray(ages)
        if np.any(ages < 1):
            raise ValueError("ages must be >= 1")
        excess = np.maximum(ages - self.threshold, 0)
        out = self.head_mass * np.power(self.decay, excess)
        return out if out.ndim else float(out)

    def tail_mass(self, age: int) -> float:
        """Probability that the age exceeds ``age``."""
        if age < self.threshold:
            return 1.0 - self.head_mass * age
        return self.head_mass * self.decay ** (age - self.threshold + 1) / (1.0 - self.decay)

    def total_mass(self) -> float:
        return self.head_mass * (self.threshold + self.decay / (1.0 - self.decay))


@dataclass(frozen=True)
class AoiStatistics:
    average_aoi: float


def _check_config(config):
    if not isinstance(config, ProtocolConfig):
        raise TypeError("config must be a ProtocolConfig")


def _g(q, n, p, delta):
    # Works on scalars and arrays; q**(1/(N-1)) goes through logs for large N.
    f = delta * q + 1.0 / p - q
    return 1.0 / f + np.exp(np.log(q) / (n - 1)) - 1.0


def g_eval(config: ProtocolConfig, q):
    """Evaluate the fixed-point function g at ``q`` (scalar or array)."""
    _check_config(config)
    arr = np.asarray(q, dtype=float)
    if np.any(~(arr > 0)) or np.any(arr > 1):
        raise ValueError("q must lie in (0, 1]")
    out = _g(arr, config.n_devices, config.cap, config.threshold)
    return out if out.ndim else float(out)


def lemma_lower_bound(n_devices: int) -> float:
    """Lower bound ((N-2)/N)**(N-1) on q, valid for p <= 2/N."""
    return ((n_devices - 2) / n_devices) ** (n_devices - 1)


def eta_from_q(p, q, delta):
    """Per-slot transmit probability of one device given q."""
    return p / (delta * p * q + 1.0 - p * q)


def bisect_many(n, p, delta, lo, hi, tol=DEFAULT_TOL, max_iter=MAX_ITER):
    """Vectorised bisection of g on brackets with g(lo) <= 0 <= g(hi).

    All inputs broadcast.  Returns ``(q, iterations)``.  Each element stops
    independently once its bracket is narrower than ``tol``.
    """
    n, p, delta, lo, hi = np.broadcast_arrays(
        *(np.asarray(x, dtype=float) for x in (n, p, delta, lo, hi)))
    lo = lo.copy()
    hi = hi.copy()
    iters = np.zeros(lo.shape, dtype=np.int64)
    for _ in range(max_iter):
        active = (hi - lo) > tol
        if not active.any():
            break
        mid = 0.5 * (lo + hi)
        below = _g(mid, n, p, delta) <= 0.0
        lo = np.where(active & below, mid, lo)
        hi = np.where(active & ~below, mid, hi)
        iters += active
    return 0.5 * (lo + hi), iters


def _closed_form_delta1(n, p):
    return math.exp((n - 1) * math.log1p(-p)) if p < 1.0 else 0.0


def solve_success_probability(config: ProtocolConfig, tol: float = DEFAULT_TOL) -> FixedPointSolution:
    """Solve for the conditional success probability q.

    Threshold 1 uses the closed form ``(1-p)**(N-1)``.  Otherwise g is bisected
    on ``[max((1-p)**(N-1), 1e-15), 1]``; g is nonpositive at the left end
    because eta <= p.  Outside the regime N >= 3, p <= 2/N the root is not
    known to be unique, so a sign scan picks the smallest root and the result
    carries ``regime_warning=True``.
    """
    _check_config(config)
    if not tol > 0:
        raise ValueError("tol must be positive")
    n, p, delta = config.n_devices, config.cap, config.threshold
    warn = not config.in_lemma_regime

    if delta == 1:
        q = _closed_form_delta1(n, p)
        residual = abs(_g(q, n, p, delta)) if q > 0 else 0.0
        return FixedPointSolution(q, eta_from_q(p, q, delta), 0, float(residual), warn)

    lo = max(_closed_form_delta1(n, p), Q_FLOOR)
    hi = 1.0
    if warn:
        grid = np.linspace(lo, hi, SCAN_POINTS)
        vals = _g(grid, n, p, delta)
        nonpos = vals <= 0.0
        changes = np.flatnonzero(nonpos[:-1] & ~nonpos[1:])
        if changes.size == 0:
            g_lo = float(vals[0])
            if abs(g_lo) <= tol:
                # degenerate root pinned at the floor (e.g. p == 1)
                return FixedPointSolution(lo, eta_from_q(p, lo, delta), 0, abs(g_lo), True)
            raise NoSignChangeError(
                f"g has no sign change on [{lo:.3g}, 1] for N={n}, p={p}, delta={delta}")
        k = changes[0]
        lo, hi = float(grid[k]), float(grid[k + 1])

    q_arr, it = bisect_many(n, p, delta, lo, hi, tol=tol)
    q = float(q_arr)
    return FixedPointSolution(q, eta_from_q(p, q, delta), int(it), abs(float(_g(q, n, p, delta))), warn)


def stationary_distribution(config: ProtocolConfig, solution: FixedPointSolution) -> StationaryAgeDistribution:
    _check_config(config)
    pq = config.cap * solution.q
    delta = config.threshold
    return StationaryAgeDistribution(delta, pq / (delta * pq + 1.0 - pq), 1.0 - pq)


def stationary_pmf(config: ProtocolConfig, solution: FixedPointSolution, l) -> float:
    """Stationary probability that a device's age equals ``l``."""
    if np.any(np.asarray(l) < 1):
        raise ValueError("age must be >= 1")
    return stationary_distribution(config, solution).pmf(l)


def _avg_aoi(p, q, delta):
    pq = p * q
    return delta / 2.0 + 1.0 / pq - delta / (2.0 * (delta * pq + 1.0 - pq))


def average_aoi_adra(config: ProtocolConfig, solution: FixedPointSolution) -> AoiStatistics:
    """Closed-form stationary mean age under threshold ADRA."""
    _check_config(config)
    if not solution.q > 0:
        raise ValueError("average AoI is unbounded when q == 0")
    return AoiStatistics(float(_avg_aoi(config.cap, solution.q, config.threshold)))


def average_aoi_aira(n_devices: int, cap: float) -> AoiStatistics:
    """Mean age under age-independent slotted ALOHA: 1/(p(1-p)^(N-1))."""
    if n_devices < 2:
        raise ValueError("n_devices must be >= 2")
    if not (0.0 < cap < 1.0):
        raise ValueError("cap must lie strictly between 0 and 1")
    return AoiStatistics(1.0 / (cap * math.exp((n_devices - 1) * math.log1p(-cap))))


def solve(n_devices: int, cap: float, threshold: int = 1,
          tol: float = DEFAULT_TOL) -> tuple[FixedPointSolution, AoiStatistics]:
    """Convenience wrapper: fixed point and mean age for one parameter set."""
    config = ProtocolConfig(n_devices, cap, threshold)
    sol = solve_success_probability(config, tol)
    return sol, average_aoi_adra(config, sol)

