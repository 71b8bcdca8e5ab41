import itertools

import numpy as np
import pytest

from adra.analytic import (ProtocolConfig, average_aoi_adra, average_aoi_aira,
                           solve_success_probability)
from adra.exact_chain import exact_small_n_average_aoi, required_age_cap
from adra.sim import CapPolicy, SimConfig, run


def brute_force_mean(n, p, delta, cap):
    """Dense transition matrix over all age vectors, solved as a linear system."""
    states = list(itertools.product(range(1, cap + 1), repeat=n))
    index = {s: k for k, s in enumerate(states)}
    P = np.zeros((len(states), len(states)))
    for s in states:
        probs = [p if a >= delta else 0.0 for a in s]
        for tx in itertools.product((0, 1), repeat=n):
            w = np.prod([pi if t else 1 - pi for pi, t in zip(probs, tx)])
            if w == 0:
                continue
            nxt = [min(a + 1, cap) for a in s]
            if sum(tx) == 1:
                nxt[tx.index(1)] = 1
            P[index[s], index[tuple(nxt)]] += w
    A = np.vstack([P.T - np.eye(len(states)), np.ones(len(states))])
    b = np.zeros(len(states) + 1)
    b[-1] = 1
    pi = np.linalg.lstsq(A, b, rcond=None)[0]
    return float(sum(pi[k] * s[0] for k, s in enumerate(states)))


@pytest.mark.parametrize("n,p,delta,cap", [(2, 0.5, 1, 12), (2, 0.6, 3, 10), (3, 0.4, 2, 7), (3, 0.3, 3, 6)])
def test_matches_dense_solver(n, p, delta, cap):
    got = exact_small_n_average_aoi(ProtocolConfig(n, p, delta), age_cap=cap, tail_check=False)
    assert got.average_aoi == pytest.approx(brute_force_mean(n, p, delta, cap), abs=1e-9)


def test_delta1_is_exactly_aloha():
    # with threshold 1 devices act independently of ages, so the decoupled formula is exact
    cfg = ProtocolConfig(3, 0.3, 1)
    got = exact_small_n_average_aoi(cfg)
    assert got.average_aoi == pytest.approx(average_aoi_aira(3, 0.3).average_aoi, rel=1e-6)
    assert not got.degenerate


def test_certain_collision_is_degenerate():
    a = exact_small_n_average_aoi(ProtocolConfig(2, 1.0, 1), age_cap=40)
    b = exact_small_n_average_aoi(ProtocolConfig(2, 1.0, 1), age_cap=80)
    assert a.degenerate and b.degenerate
    assert a.average_aoi == 40 and b.average_aoi == 80


def test_two_devices_match_simulation():
    got = exact_small_n_average_aoi(ProtocolConfig(2, 0.5, 1), age_cap=200)
    rep = run(2, CapPolicy.aira(0.5), SimConfig(horizon=1_000_000, warmup=1000, replications=8, seed=21))
    assert abs(rep.network_avg_aoi - got.average_aoi) <= 3 * rep.avg_aoi_stderr


def test_decoupling_error_reported():
    cfg = ProtocolConfig(3, 0.4, 3)
    got = exact_small_n_average_aoi(cfg)
    approx = average_aoi_adra(cfg, solve_success_probability(cfg)).average_aoi
    assert got.residual < 1e-12
    assert got.boundary_mass < 1e-6
    assert 0 < abs(approx - got.average_aoi) / got.average_aoi < 0.05


def test_required_cap_meets_tail_rule():
    cfg = ProtocolConfig(3, 0.4, 3)
    cap = required_age_cap(cfg)
    exact_small_n_average_aoi(cfg, age_cap=cap)
    with pytest.raises(ValueError, match="too small"):
        exact_small_n_average_aoi(cfg, age_cap=cap - 1)


def test_rejects_large_networks():
    with pytest.raises(ValueError):
        exact_small_n_average_aoi(ProtocolConfig(4, 0.2, 2))


def test_rejects_huge_state_space():
    with pytest.raises(ValueError, match="exceeds"):
        exact_small_n_average_aoi(ProtocolConfig(3, 0.4, 3), age_cap=400)
