import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qlbe.errors import ParameterError
from qlbe.physics import CrossSectionModel, GasSpec, relaxation_rate, total_rate
from qlbe.sampling import RngStream, sample_equilibrium_momentum
from qlbe.stats import ensemble_series
from qlbe.trajectory import (
    JumpTrajectory,
    eigenstate_ensemble,
    evaluate_at,
    sample_on_grid,
    simulate_eigenstate_trajectory,
)

SPEC1 = GasSpec(1.0)


@settings(max_examples=60, deadline=None)
@given(
    seed=st.integers(0, 2**40),
    mr=st.floats(0.01, 20.0),
    gauss=st.booleans(),
    u0=st.lists(st.floats(-4, 4), min_size=3, max_size=3),
)
def test_trajectory_structure(seed, mr, gauss, u0):
    model = CrossSectionModel.gaussian(0.7) if gauss else CrossSectionModel.constant()
    spec = GasSpec(mr, model)
    tr = simulate_eigenstate_trajectory(u0, 5.0, spec, RngStream(seed, 0))
    assert tr.times[0] == 0.0 and np.array_equal(tr.momenta[0], np.asarray(u0, float))
    assert np.all(np.diff(tr.times) > 0) and tr.times[-1] <= 5.0
    assert len(tr) == tr.n_jumps + 1 == len(tr.events)
    # every step is a nonzero recoil kick
    kicks = np.linalg.norm(np.diff(tr.momenta, axis=0), axis=1)
    assert np.all(kicks > 0)


def test_evaluate_at_conventions():
    tr = simulate_eigenstate_trajectory([1, 0, 0], 20.0, SPEC1, RngStream(1, 0))
    assert tr.n_jumps >= 3
    assert np.array_equal(evaluate_at(tr, 0.0), [1, 0, 0])
    t1, t2 = tr.times[1], tr.times[2]
    assert np.array_equal(evaluate_at(tr, 0.5 * (t1 + t2)), tr.momenta[1])
    assert np.array_equal(evaluate_at(tr, t1), tr.momenta[1])
    assert np.array_equal(evaluate_at(tr, np.nextafter(t1, 0)), tr.momenta[0])
    assert np.array_equal(evaluate_at(tr, 20.0), tr.momenta[-1])
    with pytest.raises(ParameterError):
        evaluate_at(tr, 20.5)
    with pytest.raises(ParameterError):
        evaluate_at(tr, -1e-9)


def test_grid_sampling_matches_event_list():
    grid = np.linspace(0, 15, 301)
    for seed in range(5):
        tr = simulate_eigenstate_trajectory([0.3, -1, 2], 15.0, SPEC1, RngStream(seed, 9))
        on_grid = sample_on_grid([0.3, -1, 2], grid, SPEC1, RngStream(seed, 9))
        expect = np.array([evaluate_at(tr, t) for t in grid])
        assert np.array_equal(on_grid, expect)


def test_ensemble_rows_use_their_own_streams():
    grid = np.linspace(0, 4, 41)
    ens = eigenstate_ensemble(SPEC1, grid, 6, 99, U0=[1, 0, 0])
    for r in range(6):
        assert np.array_equal(ens[r], sample_on_grid([1, 0, 0], grid, SPEC1, RngStream(99, r)))
    tail = eigenstate_ensemble(SPEC1, grid, 3, 99, U0=[1, 0, 0], start=3)
    assert np.array_equal(tail, ens[3:])


def test_equilibrium_start_draws_from_the_same_stream():
    grid = np.linspace(0, 2, 11)
    ens = eigenstate_ensemble(SPEC1, grid, 3, 5)
    for r in range(3):
        rng = RngStream(5, r)
        u0 = sample_equilibrium_momentum(1.0, rng)
        assert np.array_equal(ens[r], sample_on_grid(u0, grid, SPEC1, rng))


def test_vanishing_mass_ratio_freezes_momentum():
    for mr in (1e-2, 1e-4, 1e-6):
        tr = simulate_eigenstate_trajectory([1, 0, 0], 10.0, GasSpec(mr), RngStream(2, 2))
        assert np.linalg.norm(tr.momenta[-1] - [1, 0, 0]) < 50 * mr


def test_jump_count_is_poisson_clock():
    grid = np.array([0.0, 2.0])
    spec = GasSpec(1e-9)
    _, jumps = eigenstate_ensemble(spec, grid, 20_000, 4, U0=[0, 2.0, 0], return_jumps=True)
    lam = total_rate(2.0, spec.cross_section) * 2.0
    assert abs(jumps.mean() - lam) < 3 * math.sqrt(lam / jumps.size)
    assert jumps.var(ddof=1) == pytest.approx(lam, rel=0.05)


def test_few_kicks_thermalize_equal_masses():
    grid = np.array([0.0, 3.0])
    ens = eigenstate_ensemble(SPEC1, grid, 4000, 8, U0=[1, 0, 0])
    sq = (ens[:, -1] ** 2).sum(axis=1)
    assert abs(sq.mean() - 1.5) < 0.15


def test_bad_inputs():
    with pytest.raises(ParameterError):
        simulate_eigenstate_trajectory([1, 0, 0], 0.0, SPEC1, RngStream(0))
    with pytest.raises(ParameterError):
        sample_on_grid([1, 0, 0], [0.0, 2.0, 1.0], SPEC1, RngStream(0))
    with pytest.raises(ParameterError):
        sample_on_grid([1, 0], [0.0, 1.0], SPEC1, RngStream(0))
    assert isinstance(simulate_eigenstate_trajectory([0, 0, 0], 1.0, SPEC1, RngStream(0)), JumpTrajectory)


@pytest.mark.slow
def test_stationarity_from_equilibrium():
    g_r = relaxation_rate(SPEC1)
    grid = np.linspace(0, 10 / g_r, 51)
    s = ensemble_series(grid, eigenstate_ensemble(SPEC1, grid, 10_000, 31))
    assert np.all(np.abs(s.sq_mean - 1.5) < 3 * s.sq_mean_se)


@pytest.mark.slow
@pytest.mark.xfail(strict=True, reason="at a signal of 10 SE the sampling noise alone is 10% relative")
def test_pointwise_relaxation_of_mean_squared():
    spec = GasSpec(0.1)
    grid = np.linspace(0, 40, 161)
    s = ensemble_series(grid, eigenstate_ensemble(spec, grid, 10_000, 3, U0=[1, 0, 0]))
    m = s.mean_sq > 10 * s.mean_sq_se
    rel = s.mean_sq[m] / np.exp(-relaxation_rate(spec) * grid[m]) - 1
    assert np.all(np.abs(rel) < 0.10)


@pytest.mark.slow
def test_pointwise_relaxation_where_signal_is_strong():
    # same comparison restricted to where the noise is below 2% relative
    spec = GasSpec(0.1)
    grid = np.linspace(0, 40, 161)
    s = ensemble_series(grid, eigenstate_ensemble(spec, grid, 10_000, 3, U0=[1, 0, 0]))
    m = s.mean_sq > 50 * s.mean_sq_se
    rel = s.mean_sq[m] / np.exp(-relaxation_rate(spec) * grid[m]) - 1
    assert m.sum() > 20
    assert np.all(np.abs(rel) < 0.10)
