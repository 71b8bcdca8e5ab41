"""Exact joint age chain for very small networks.

The decoupled model treats the success probability as a constant.  For
N <= 3 the joint chain on (age_1, ..., age_N) is small enough to solve
directly, which measures how much that approximation costs.  Ages saturate
at ``age_cap``; the cap is sized from the decoupled geometric tail.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .analytic import (AoiStatistics, NoSignChangeError, ProtocolConfig,
                       solve_success_probability, stationary_distribution)

MAX_DEVICES = 3
MAX_STATES = 5_000_000
TAIL_MASS = 1e-8


@dataclass(frozen=True)
class ExactAoiStatistics(AoiStatistics):
    age_cap: int = 0
    iterations: int = 0
    residual: float = float("nan")
    boundary_mass: float = 0.0
    degenerate: bool = False


def _decoupled_tail(config):
    """Decoupled stationary law, or None when the model has no resets."""
    try:
        sol = solve_success_probability(config)
    except NoSignChangeError:
        return None
    if config.cap * sol.q < 1e-12:
        return None
    return stationary_distribution(config, sol)


def required_age_cap(config: ProtocolConfig, tail: float = TAIL_MASS) -> int:
    """Smallest cap whose decoupled tail mass beyond it is below ``tail``."""
    dist = _decoupled_tail(config)
    if dist is None:
        raise ValueError("decoupled model has no resets; choose age_cap explicitly")
    # head_mass * decay**(L - delta + 1) / (1 - decay) < tail
    k = math.log(tail * (1.0 - dist.decay) / dist.head_mass) / math.log(dist.decay)
    return max(config.threshold, config.threshold - 1 + math.floor(k) + 1)


def _shift(x, axis):
    # age -> min(age + 1, cap) along one axis
    out = np.zeros_like(x)
    src = [slice(None)] * x.ndim
    dst = [slice(None)] * x.ndim
    src[axis], dst[axis] = slice(None, -1), slice(1, None)
    out[tuple(dst)] = x[tuple(src)]
    src[axis] = dst[axis] = slice(-1, None)
    out[tuple(dst)] += x[tuple(src)]
    return out


def _reset(x, axis):
    # collapse one axis onto age 1
    out = np.zeros_like(x)
    idx = [slice(None)] * x.ndim
    idx[axis] = slice(0, 1)
    out[tuple(idx)] = x.sum(axis=axis, keepdims=True)
    return out


def exact_small_n_average_aoi(config: ProtocolConfig, age_cap: int | None = None,
                              tol: float = 1e-12, max_iter: int = 200_000,
                              tail_check: bool = True) -> ExactAoiStatistics:
    """Mean age of one device from the exact coupled chain (N <= 3).

    Power iteration starts from all ages equal to 1, the simulator's initial
    state, and stops when successive distributions differ by less than
    ``tol`` in L1.  If the decoupled model has no resets (for instance p = 1,
    threshold 1) the tail check is skipped and the result is flagged
    ``degenerate``; its mean then grows with ``age_cap``.  ``tail_check=False``
    accepts a small cap anyway, which is only useful for testing.
    """
    n, p, delta = config.n_devices, config.cap, config.threshold
    if n > MAX_DEVICES:
        raise ValueError(f"exact chain supports at most {MAX_DEVICES} devices, got {n}")
    dist = _decoupled_tail(config)
    if age_cap is None:
        if dist is None:
            raise ValueError("decoupled model has no resets; choose age_cap explicitly")
        age_cap = required_age_cap(config)
    if age_cap < max(delta, 2):
        raise ValueError("age_cap must be at least max(threshold, 2)")
    if tail_check and dist is not None and dist.tail_mass(age_cap) >= TAIL_MASS:
        raise ValueError(
            f"age_cap={age_cap} too small: decoupled tail mass {dist.tail_mass(age_cap):.2e} >= {TAIL_MASS}")
    if age_cap ** n > MAX_STATES:
        raise ValueError(f"{age_cap}**{n} states exceeds the limit of {MAX_STATES}")

    ages = np.arange(1, age_cap + 1)
    access = np.where(ages >= delta, p, 0.0)
    shape = (age_cap,) * n
    axis_p = []
    for i in range(n):
        s = [1] * n
        s[i] = age_cap
        axis_p.append(access.reshape(s))
    single = []
    for i in range(n):
        w = axis_p[i]
        for j in range(n):
            if j != i:
                w = w * (1.0 - axis_p[j])
        single.append(np.broadcast_to(w, shape))
    no_reset = 1.0 - sum(single)

    pi = np.zeros(shape)
    pi[(0,) * n] = 1.0
    residual = np.inf
    it = 0
    while it < max_iter and residual >= tol:
        nxt = pi * no_reset
        for axis in range(n):
            nxt = _shift(nxt, axis)
        for i in range(n):
            part = pi * single[i]
            for axis in range(n):
                if axis != i:
                    part = _shift(part, axis)
            nxt += _reset(part, i)
        residual = float(np.abs(nxt - pi).sum())
        pi = nxt
        it += 1
    if residual >= tol:
        raise ArithmeticError(f"power iteration did not converge in {max_iter} steps (residual {residual:.2e})")

    means = []
    for i in range(n):
        marginal = pi.sum(axis=tuple(j for j in range(n) if j != i))
        means.append(float(ages @ marginal) / float(marginal.sum()))
    at_cap = 1.0 - float(pi[(slice(0, age_cap - 1),) * n].sum())
    return ExactAoiStatistics(
        average_aoi=float(np.mean(means)),
        age_cap=int(age_cap),
        iterations=it,
        residual=residual,
        boundary_mass=at_cap,
        degenerate=dist is None or at_cap > 1e-3,
    )
