import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qlbe.coherence import (
    SuperpositionState,
    branch_probabilities,
    coherence,
    coherence_ensemble,
    drift,
    jump,
    simulate_superposition,
)
from qlbe.errors import ParameterError
from qlbe.physics import CrossSectionModel, GasSpec, total_rate
from qlbe.sampling import RngStream
from qlbe.stats import coherence_curve
from qlbe.trajectory import sample_on_grid

SPEC = GasSpec(1.0)


def pair(u0, amps=(1.0, 1.0)):
    u = np.asarray(u0, float)
    return SuperpositionState.from_amplitudes([u, -u], list(amps))


# --- drift ----------------------------------------------------------------------

def test_drift_single_branch_keeps_unit_modulus():
    s = SuperpositionState.from_amplitudes([[1, 2, 3]], [0.3 + 0.4j])
    d = drift(s, 2.7, GasSpec(1.0, phase_const=1.3))
    assert abs(d.amplitudes[0]) == pytest.approx(1.0, abs=1e-15)
    # phase advances by -kappa U^2 tau (mod 2 pi)
    expect = np.angle(0.3 + 0.4j) - 1.3 * 14 * 2.7
    assert np.exp(1j * d.phase[0]) == pytest.approx(np.exp(1j * expect), abs=1e-12)


def test_drift_equal_rates_keeps_moduli():
    s = pair([0, 0, 4])
    d = drift(s, 3.0, SPEC)
    assert np.allclose(d.weights, [0.5, 0.5], atol=1e-15)
    assert coherence(d) == pytest.approx(0.5, abs=1e-15)


def test_drift_unequal_rates_value():
    s = pair([0, 0, 1])
    d = drift(s, 1.0, SPEC, rates=[1.0, 3.0])
    expect = math.exp(-1) / (math.exp(-1) + math.exp(-3))
    assert d.weights[0] == pytest.approx(expect, rel=1e-14)
    assert expect == pytest.approx(0.8808, abs=5e-5)


def test_drift_rejects_nonpositive_tau():
    with pytest.raises(ParameterError):
        drift(pair([1, 0, 0]), 0.0, SPEC)


# --- branch choice -----------------------------------------------------------------

def test_branch_probabilities_examples():
    one = SuperpositionState.from_amplitudes([[1, 0, 0]], [1.0])
    assert np.array_equal(branch_probabilities(one, 0.3, SPEC), [1.0])
    same = SuperpositionState.from_amplitudes([[1, 0, 0]] * 3, [1, 1, 1])
    assert np.allclose(branch_probabilities(same, 0.3, SPEC), 1 / 3, atol=1e-15)
    p = branch_probabilities(pair([1, 0, 0]), math.log(2), SPEC, rates=[1.0, 2.0])
    assert p[0] == pytest.approx(0.5, abs=1e-15)


# --- jumps ------------------------------------------------------------------------

def test_jump_single_branch():
    s = SuperpositionState.from_amplitudes([[1, 0, 0]], [1j])
    k = np.array([0.3, -2.0, 1.0])
    j = jump(s, k, SPEC)
    assert abs(j.amplitudes[0]) == pytest.approx(1.0, abs=1e-15)
    assert np.allclose(j.momenta[0], [1, 0, 0] + SPEC.recoil * k, rtol=0, atol=1e-15)


@settings(max_examples=100, deadline=None)
@given(
    u=st.lists(st.floats(-5, 5), min_size=3, max_size=3),
    k=st.lists(st.floats(-8, 8), min_size=3, max_size=3),
)
def test_jump_product_is_sech(u, k):
    k = np.array(k)
    if np.linalg.norm(k) < 1e-6:
        return
    u = np.array(u)
    j = jump(pair(u), k, SPEC)
    # |alpha_1||alpha_2| = 1/2 * f1 f2 = 1/2 sech(K . U0)
    assert coherence(j) == pytest.approx(0.5 / math.cosh(k @ u), rel=1e-12, abs=1e-300)
    assert j.weights.sum() == pytest.approx(1.0, abs=1e-12)


def test_jump_perpendicular_keeps_coherence():
    j = jump(pair([0, 0, 4]), np.array([1.5, -0.7, 0.0]), SPEC)
    assert coherence(j) == pytest.approx(0.5, abs=1e-15)


def test_jump_rejects_zero_transfer():
    with pytest.raises(ParameterError):
        jump(pair([1, 0, 0]), np.zeros(3), SPEC)


def test_coherence_needs_two_branches():
    with pytest.raises(ParameterError):
        coherence(SuperpositionState.from_amplitudes([[1, 0, 0]], [1.0]))
    assert coherence(pair([0, 0, 4])) == pytest.approx(0.5, abs=1e-16)


def test_state_validation():
    with pytest.raises(ParameterError):
        SuperpositionState.from_amplitudes([[1, 0, 0]], [0.0])
    with pytest.raises(ParameterError):
        SuperpositionState.from_amplitudes([[1, 0, 0], [0, 1, 0]], [1.0])


# --- full realizations --------------------------------------------------------------

@settings(max_examples=25, deadline=None)
@given(
    n=st.integers(1, 4),
    seed=st.integers(0, 2**32),
    gauss=st.booleans(),
    kappa=st.sampled_from([0.0, 2.0]),
)
def test_realization_invariants(n, seed, gauss, kappa):
    rng = np.random.default_rng(seed)
    moms = rng.normal(size=(n, 3)) * 2
    amps = rng.normal(size=n) + 1j * rng.normal(size=n)
    spec = GasSpec(1.0, CrossSectionModel.gaussian(1.0) if gauss else CrossSectionModel.constant(), kappa)
    s0 = SuperpositionState.from_amplitudes(moms, amps)
    grid = np.linspace(0, 10, 51)
    path = simulate_superposition(s0, 10.0, grid, spec, RngStream(seed, 1))
    w = np.exp(2 * path.log_modulus).sum(axis=1)
    assert np.allclose(w, 1.0, rtol=0, atol=1e-10)
    diffs = path.momenta - path.momenta[:, :1, :]
    assert np.allclose(diffs, (moms - moms[0])[None], rtol=0, atol=1e-12)
    assert len(path) == grid.size
    for t, a, m in path:
        assert a.shape == (n,) and m.shape == (n, 3)


def test_separation_after_many_jumps():
    s0 = pair([0, 0, 4])
    path = simulate_superposition(s0, 40.0, [40.0], SPEC, RngStream(3, 3))
    assert path.n_jumps >= 50
    sep = path.momenta[-1, 0] - path.momenta[-1, 1]
    assert np.allclose(sep, [0, 0, 8], rtol=0, atol=1e-12)


def test_phase_constant_does_not_change_moduli():
    s0 = pair([0, 0, 2], amps=(1.0, 0.5j))
    grid = np.linspace(0, 6, 61)
    for seed in range(10):
        p0 = simulate_superposition(s0, 6.0, grid, GasSpec(1.0, phase_const=0.0), RngStream(seed, 0))
        p5 = simulate_superposition(s0, 6.0, grid, GasSpec(1.0, phase_const=5.0), RngStream(seed, 0))
        assert np.allclose(p0.log_modulus, p5.log_modulus, rtol=0, atol=1e-12)
        assert np.array_equal(p0.momenta, p5.momenta)


def test_single_branch_reduces_to_eigenstate_trajectory():
    grid = np.linspace(0, 12, 97)
    for seed in range(5):
        s0 = SuperpositionState.from_amplitudes([[1.0, 0.5, 0.0]], [1.0])
        path = simulate_superposition(s0, 12.0, grid, SPEC, RngStream(seed, 4))
        eig = sample_on_grid([1.0, 0.5, 0.0], grid, SPEC, RngStream(seed, 4))
        assert np.array_equal(path.momenta[:, 0, :], eig)


def test_output_grid_may_end_before_final_time():
    path = simulate_superposition(pair([1, 0, 0]), 5.0, [0.0, 1.0, 2.0], SPEC, RngStream(0, 0))
    assert np.array_equal(path.times, [0.0, 1.0, 2.0])
    with pytest.raises(ParameterError):
        simulate_superposition(pair([1, 0, 0]), 1.0, [0.0, 2.0], SPEC, RngStream(0, 0))


def test_ensemble_matches_single_realizations():
    s0 = pair([0, 0, 1.5])
    grid = np.linspace(0, 3, 31)
    ens = coherence_ensemble(SPEC, s0, grid, 5, 12, start=2)
    for r in range(5):
        path = simulate_superposition(s0, 3.0, grid, SPEC, RngStream(12, r + 2))
        assert np.allclose(ens[r], np.exp(path.log_modulus.sum(axis=1)), rtol=1e-15, atol=0)


def test_first_jump_clock_at_speed_four():
    # both branches share Gamma(4), so the first jump is exponential with that rate
    s0 = pair([0, 0, 4])
    t = 0.15
    _, jumps = coherence_ensemble(SPEC, s0, [0.0, t], 40_000, 6, return_jumps=True)
    p = 1 - math.exp(-total_rate(4.0, SPEC.cross_section) * t)
    hit = np.mean(jumps > 0)
    assert abs(hit - p) < 3 * math.sqrt(p * (1 - p) / jumps.size)


def test_balanced_start_gives_unit_coherence():
    c, se = coherence_curve(coherence_ensemble(SPEC, pair([0, 0, 4]), np.linspace(0, 1, 5), 50, 1))
    assert c[0] == 1.0 and se[0] == 0.0
    assert np.all(c <= 1.0)


def test_ensemble_needs_pair():
    s = SuperpositionState.from_amplitudes([[1, 0, 0]], [1.0])
    with pytest.raises(ParameterError):
        coherence_ensemble(SPEC, s, [0, 1], 2, 0)
