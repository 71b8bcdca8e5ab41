import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from adra.analytic import NoSignChangeError, average_aoi_aira, solve
from adra.opt import SearchSpace, argmin_surface, evaluate_grid, optimize, sweep_delta
from adra.sim import SimConfig

AIRA_10 = 25.811747917131972


def test_single_point_grid():
    rep = optimize(10, SearchSpace((0.1,), (1,)))
    assert rep.best_avg_aoi == pytest.approx(AIRA_10, rel=1e-13)
    assert (rep.best_p, rep.best_delta) == (0.1, 1)


def test_default_space():
    space = SearchSpace.default(10)
    assert len(space.p_grid) == 200
    assert max(space.p_grid) == pytest.approx(0.2)
    assert space.delta_grid == tuple(range(1, 51))
    wide = SearchSpace.default(10, p_max=0.4)
    assert max(wide.p_grid) == pytest.approx(0.4)


@pytest.mark.parametrize("kw", [dict(p_grid=(), delta_grid=(1,)), dict(p_grid=(0.0,), delta_grid=(1,)),
                                dict(p_grid=(0.1,), delta_grid=(0,))])
def test_space_rejects(kw):
    with pytest.raises(ValueError):
        SearchSpace(**kw)


def test_beats_aira():
    rep = optimize(10)
    assert rep.best_avg_aoi < AIRA_10
    assert 1 < rep.best_delta < 50


def test_surface_consistency():
    rep = optimize(12, SearchSpace.default(12, n_p=40, delta_max=30), keep_surface=True)
    assert rep.best_avg_aoi == rep.full_surface[:, 2].min()
    k = argmin_surface(rep.full_surface[:, 0], rep.full_surface[:, 1], rep.full_surface[:, 2])
    assert (rep.full_surface[k, 0], rep.full_surface[k, 1]) == (rep.best_p, rep.best_delta)
    rng = np.random.default_rng(0)
    for p, d, v in rep.full_surface[rng.choice(len(rep.full_surface), 60, replace=False)]:
        assert abs(solve(12, p, int(d))[1].average_aoi - v) <= 1e-12


def test_outside_regime_points_use_scalar_solver():
    q, aoi, warn, ok = evaluate_grid(10, [0.1, 0.3, 0.3], [4, 4, 1])
    assert ok.all()
    assert warn.tolist() == [False, True, True]
    for k, (p, d) in enumerate([(0.1, 4), (0.3, 4), (0.3, 1)]):
        sol, stats = solve(10, p, d)
        assert q[k] == sol.q and aoi[k] == stats.average_aoi


def test_failures_are_skipped(monkeypatch):
    import adra.opt as opt

    def boom(*a, **k):
        raise NoSignChangeError("forced")
    monkeypatch.setattr(opt, "solve_success_probability", boom)
    rep = opt.optimize(10, SearchSpace((0.1, 0.5), (2,)))
    assert rep.failures == [(0.5, 2)]
    assert rep.best_p == 0.1
    with pytest.raises(NoSignChangeError):
        opt.optimize(10, SearchSpace((0.5,), (2,)))


def test_ties_prefer_small_delta_then_small_p():
    p = np.array([0.2, 0.1, 0.1, 0.3])
    d = np.array([3, 3, 5, 1])
    v = np.array([1.0, 1.0, 1.0, 2.0])
    assert argmin_surface(p, d, v) == 1
    v2 = np.array([1.0, 1.0, 1.0, 1.0])
    assert argmin_surface(p, d, v2) == 3


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(1.0, 1e3), min_size=2, max_size=30), st.floats(1e-3, 1e3))
def test_argmin_invariant_under_rescaling(values, scale):
    v = np.array(values)
    p = np.linspace(0.01, 0.2, len(v))
    d = np.arange(1, len(v) + 1)
    assert argmin_surface(p, d, v) == argmin_surface(p, d, v * scale)


def test_small_p_blows_up():
    q, aoi, _, _ = evaluate_grid(10, [1e-2, 1e-4, 1e-6], [5, 5, 5])
    assert np.all(np.diff(aoi) > 0)
    assert aoi[-1] > 1e5


class TestSweep:
    def test_delta1_row_is_aira(self):
        rows = sweep_delta(20, 0.075, range(1, 101))
        assert rows[0].delta == 1
        assert rows[0].analytic_avg_aoi == pytest.approx(average_aoi_aira(20, 0.075).average_aoi, rel=1e-12)

    def test_interior_minimum(self):
        rows = sweep_delta(20, 1.5 / 20, range(1, 101))
        v = np.array([r.analytic_avg_aoi for r in rows])
        assert np.all(np.isfinite(v)) and np.all(v > 0)
        k = int(np.argmin(v))
        assert 0 < k < len(v) - 1
        assert v[k] < v[0]

    def test_with_simulation(self):
        rows = sweep_delta(5, 0.3, [1, 4], simulate=SimConfig(horizon=100_000, warmup=1000, replications=2, seed=1))
        for r in rows:
            assert r.sim_avg_aoi == pytest.approx(r.analytic_avg_aoi, rel=0.05)
            assert r.empirical_q is not None and r.sim_stderr is not None

    def test_empty(self):
        with pytest.raises(ValueError):
            sweep_delta(10, 0.1, [])
