"""Grid search over access probability and age threshold."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .analytic import (DEFAULT_TOL, NoSignChangeError, ProtocolConfig, Q_FLOOR,
                       _avg_aoi, _closed_form_delta1, bisect_many,
                       solve_success_probability)
from .sim import CapPolicy, SimConfig, run

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SearchSpace:
    p_grid: tuple
    delta_grid: tuple

    def __post_init__(self):
        if not self.p_grid or not self.delta_grid:
            raise ValueError("grids must be nonempty")
        if any(not (0.0 < p <= 1.0) for p in self.p_grid):
            raise ValueError("p values must lie in (0, 1]")
        if any(int(d) != d or d < 1 for d in self.delta_grid):
            raise ValueError("delta values must be integers >= 1")

    @classmethod
    def default(cls, n_devices: int, n_p: int = 200, delta_max: Optional[int] = None,
                p_max: Optional[float] = None) -> "SearchSpace":
        """``n_p`` evenly spaced p in (0, p_max], delta in 1..delta_max.

        ``p_max`` defaults to 2/N and ``delta_max`` to 5N.  Passing a larger
        ``p_max`` leaves the region where the fixed point is known unique.
        """
        p_max = min(1.0, 2.0 / n_devices) if p_max is None else float(p_max)
        delta_max = 5 * n_devices if delta_max is None else int(delta_max)
        p_grid = tuple(p_max * k / n_p for k in range(1, n_p + 1))
        return cls(p_grid, tuple(range(1, delta_max + 1)))


@dataclass
class SweepRecord:
    n: int
    p: float
    delta: int
    analytic_q: float
    analytic_avg_aoi: float
    regime_warning: bool = False
    sim_avg_aoi: Optional[float] = None
    sim_stderr: Optional[float] = None
    empirical_q: Optional[float] = None


@dataclass
class OptimumReport:
    n_devices: int
    best_p: float
    best_delta: int
    best_avg_aoi: float
    best_q: float
    regime_warning: bool
    full_surface: Optional[np.ndarray] = field(default=None, repr=False)
    failures: list = field(default_factory=list)


def evaluate_grid(n_devices: int, p, delta, tol: float = DEFAULT_TOL):
    """Fixed point and mean age at each (p, delta) pair.

    Returns ``(q, avg_aoi, warn, ok)`` arrays.  Points with N >= 3 and
    p <= 2/N share one vectorised bisection whose arithmetic matches
    :func:`solve_success_probability` exactly; the rest are solved one by one.
    Points whose solver fails have ``ok`` False and NaN outputs.
    """
    p = np.asarray(p, dtype=float).ravel()
    delta = np.asarray(delta, dtype=np.int64).ravel()
    q = np.full(p.shape, np.nan)
    warn = np.zeros(p.shape, dtype=bool)
    ok = np.ones(p.shape, dtype=bool)
    lo = np.array([_closed_form_delta1(n_devices, x) for x in p])

    fast = (n_devices >= 3) & (p <= 2.0 / n_devices)
    d1 = fast & (delta == 1)
    q[d1] = lo[d1]
    bis = fast & (delta > 1)
    if bis.any():
        q[bis], _ = bisect_many(n_devices, p[bis], delta[bis], np.maximum(lo[bis], Q_FLOOR), 1.0, tol=tol)
    for k in np.flatnonzero(~fast):
        try:
            sol = solve_success_probability(ProtocolConfig(n_devices, float(p[k]), int(delta[k])), tol)
        except NoSignChangeError as exc:
            log.warning("skipping p=%g delta=%d: %s", p[k], delta[k], exc)
            ok[k] = False
            continue
        q[k] = sol.q
        warn[k] = sol.regime_warning
    with np.errstate(divide="ignore", invalid="ignore"):
        aoi = np.where(q > 0, _avg_aoi(p, q, delta), np.inf)
    aoi[~ok] = np.nan
    return q, aoi, warn, ok


def argmin_surface(p, delta, values) -> int:
    """Index of the smallest value; ties go to smaller delta, then smaller p."""
    values = np.asarray(values, dtype=float)
    finite = np.isfinite(values)
    if not finite.any():
        raise ValueError("no finite values on the surface")
    best = values[finite].min()
    cand = np.flatnonzero(finite & (values == best))
    order = np.lexsort((np.asarray(p)[cand], np.asarray(delta)[cand]))
    return int(cand[order[0]])


def optimize(n_devices: int, space: Optional[SearchSpace] = None,
             keep_surface: bool = False) -> OptimumReport:
    """Exhaustive search for the (p, delta) pair minimising the mean age."""
    if n_devices < 2:
        raise ValueError("n_devices must be >= 2")
    space = space or SearchSpace.default(n_devices)
    pp, dd = np.meshgrid(np.asarray(space.p_grid, dtype=float),
                         np.asarray(space.delta_grid, dtype=np.int64), indexing="ij")
    pp, dd = pp.ravel(), dd.ravel()
    q, aoi, warn, ok = evaluate_grid(n_devices, pp, dd)
    failures = [(float(pp[k]), int(dd[k])) for k in np.flatnonzero(~ok)]
    if not ok.any():
        raise NoSignChangeError("solver failed at every grid point")
    k = argmin_surface(pp, dd, aoi)
    surface = np.column_stack([pp, dd, aoi]) if keep_surface else None
    return OptimumReport(n_devices, float(pp[k]), int(dd[k]), float(aoi[k]), float(q[k]),
                         bool(warn[k]), surface, failures)


def sweep_delta(n_devices: int, cap: float, delta_grid: Sequence[int],
                simulate: Optional[SimConfig] = None) -> list:
    """One :class:`SweepRecord` per threshold at a fixed access probability.

    ``simulate`` may be a :class:`~adra.sim.SimConfig`; each row then also
    carries the simulated mean age, its standard error and the empirical q.
    """
    delta = np.asarray(list(delta_grid), dtype=np.int64)
    if delta.size == 0:
        raise ValueError("delta_grid must be nonempty")
    q, aoi, warn, ok = evaluate_grid(n_devices, np.full(delta.shape, float(cap)), delta)
    if not ok.any():
        raise NoSignChangeError("solver failed at every grid point")
    rows = []
    for k, d in enumerate(delta):
        if not ok[k]:
            continue
        rec = SweepRecord(n_devices, float(cap), int(d), float(q[k]), float(aoi[k]), bool(warn[k]))
        if simulate is not None:
            rep = run(n_devices, CapPolicy.adra(int(d), float(cap)), simulate)
            rec.sim_avg_aoi = rep.network_avg_aoi
            rec.sim_stderr = rep.avg_aoi_stderr
            rec.empirical_q = rep.conditional_success_rate
        rows.append(rec)
    return rows
