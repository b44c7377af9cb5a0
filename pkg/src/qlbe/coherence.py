"""Superpositions of momentum eigenstates under the jump unraveling.

A state ``sum_i alpha_i |U_i>`` keeps its form along every realization.
Between jumps the momenta are frozen and the amplitudes drift as

    alpha_i <- exp(-i kappa U_i^2 tau) exp(-Gamma(U_i) tau / 2) alpha_i / norm,

and a jump with transfer ``K`` shifts every momentum by ``(m_*/M) K`` while
multiplying the amplitudes by

    f_i = exp(-x_i^2 / 2) / sqrt(sum_j |alpha_j|^2 exp(-x_j^2)),
    x_i = K/2 + K.U_i / |K|.

Amplitudes are stored as log-modulus plus phase; the ``exp(-x_i^2)``
weights underflow for well separated branches otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba
import numpy as np

from .errors import ParameterError
from .physics import GasSpec, rate
from .sampling import RngStream, new_state, sample_transfer, solve_mixture, uniform
from .trajectory import _check_grid, _check_time

__all__ = [
    "SuperpositionState",
    "SuperpositionPath",
    "drift",
    "branch_probabilities",
    "jump",
    "simulate_superposition",
    "coherence",
    "coherence_ensemble",
]

TWO_PI = 2.0 * math.pi


@numba.njit(cache=True)
def _normalize(logmod):
    m = logmod.max()
    s = 0.0
    for i in range(logmod.shape[0]):
        s += math.exp(2.0 * (logmod[i] - m))
    c = m + 0.5 * math.log(s)
    for i in range(logmod.shape[0]):
        logmod[i] -= c


@numba.njit(cache=True)
def _rates(moms, kind, a, out):
    for i in range(moms.shape[0]):
        u = moms[i]
        out[i] = rate(math.sqrt(u[0] * u[0] + u[1] * u[1] + u[2] * u[2]), kind, a)


@numba.njit(cache=True)
def drift_kernel(moms, logmod, phase, rates, tau, kappa):
    for i in range(moms.shape[0]):
        u = moms[i]
        logmod[i] -= 0.5 * rates[i] * tau
        if kappa != 0.0:
            phase[i] = np.fmod(phase[i] - kappa * (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]) * tau, TWO_PI)
    _normalize(logmod)


@numba.njit(cache=True)
def jump_kernel(moms, logmod, kvec, recoil):
    k = math.sqrt(kvec[0] * kvec[0] + kvec[1] * kvec[1] + kvec[2] * kvec[2])
    for i in range(moms.shape[0]):
        u = moms[i]
        x = 0.5 * k + (kvec[0] * u[0] + kvec[1] * u[1] + kvec[2] * u[2]) / k
        logmod[i] -= 0.5 * x * x
        for d in range(3):
            u[d] += recoil * kvec[d]
    _normalize(logmod)


@numba.njit(cache=True)
def path_kernel(moms, logmod, phase, grid, kind, a, kappa, recoil, st, out_logmod, out_phase, out_moms):
    """Run one realization in place, recording snapshots on ``grid``; return the jump count."""
    n = moms.shape[0]
    nt = grid.shape[0]
    t_final = grid[nt - 1]
    rates = np.empty(n)
    logw = np.empty(n)
    lm = np.empty(n)
    ph = np.empty(n)
    kvec = np.empty(3)
    t = 0.0
    j = 0
    jumps = 0
    while True:
        _rates(moms, kind, a, rates)
        for i in range(n):
            logw[i] = 2.0 * logmod[i]
        t_next = t + solve_mixture(logw, rates, uniform(st))
        while j < nt and grid[j] < t_next:
            lm[:] = logmod
            ph[:] = phase
            drift_kernel(moms, lm, ph, rates, grid[j] - t, kappa)
            out_logmod[j] = lm
            out_phase[j] = ph
            out_moms[j] = moms
            j += 1
        if t_next > t_final:
            break
        drift_kernel(moms, logmod, phase, rates, t_next - t, kappa)
        t = t_next
        b = 0
        if n > 1:
            # p_i ∝ |alpha_i|^2 Gamma_i on the drifted amplitudes
            m = logmod.max()
            tot = 0.0
            for i in range(n):
                logw[i] = math.exp(2.0 * (logmod[i] - m)) * rates[i]
                tot += logw[i]
            r = uniform(st) * tot
            acc = 0.0
            b = n - 1
            for i in range(n):
                acc += logw[i]
                if r < acc:
                    b = i
                    break
        sample_transfer(moms[b], a, st, kvec)
        jump_kernel(moms, logmod, kvec, recoil)
        jumps += 1
    return jumps


@numba.njit(cache=True)
def _coherence_ensemble_kernel(moms0, logmod0, grid, kind, a, recoil, seed, start, out, jumps):
    n = moms0.shape[0]
    nt = grid.shape[0]
    olm = np.empty((nt, n))
    oph = np.empty((nt, n))
    om = np.empty((nt, n, 3))
    phase = np.zeros(n)
    for r in range(out.shape[0]):
        st = new_state(seed, start + np.uint64(r))
        moms = moms0.copy()
        logmod = logmod0.copy()
        jumps[r] = path_kernel(moms, logmod, phase, grid, kind, a, 0.0, recoil, st, olm, oph, om)
        for j in range(nt):
            out[r, j] = math.exp(olm[j, 0] + olm[j, 1])


@dataclass(frozen=True)
class SuperpositionState:
    """``N`` momentum branches with normalized complex amplitudes.

    Amplitudes are held as ``log_modulus`` and ``phase``; use
    :meth:`from_amplitudes` to build a state from complex numbers.
    """

    momenta: np.ndarray
    log_modulus: np.ndarray
    phase: np.ndarray
    time: float = 0.0

    @classmethod
    def from_amplitudes(cls, momenta, amplitudes, time=0.0):
        moms = np.array(momenta, dtype=float, ndmin=2)
        amps = np.asarray(amplitudes, dtype=complex).ravel()
        if moms.shape != (amps.size, 3) or amps.size < 1:
            raise ParameterError("need one 3-vector momentum per amplitude")
        if not (np.all(np.isfinite(moms)) and np.all(np.isfinite(amps))):
            raise ParameterError("momenta and amplitudes must be finite")
        if not np.any(amps != 0):
            raise ParameterError("amplitudes must not all vanish")
        with np.errstate(divide="ignore"):
            logmod = np.log(np.abs(amps))
        logmod = np.ascontiguousarray(logmod)
        _normalize(logmod)
        return cls(np.ascontiguousarray(moms), logmod, np.angle(amps), float(time))

    @classmethod
    def balanced_pair(cls, U0):
        """``(|U0> + |-U0>) / sqrt(2)``."""
        u = np.asarray(U0, dtype=float)
        return cls.from_amplitudes([u, -u], [1.0, 1.0])

    @property
    def n_branches(self):
        return self.momenta.shape[0]

    @property
    def amplitudes(self):
        return np.exp(self.log_modulus + 1j * self.phase)

    @property
    def weights(self):
        return np.exp(2.0 * self.log_modulus)

    def rates(self, spec: GasSpec):
        out = np.empty(self.n_branches)
        _rates(self.momenta, spec.cross_section.code, spec.cross_section.width, out)
        return out


@dataclass(frozen=True)
class SuperpositionPath:
    """Snapshots of one realization on an output grid."""

    times: np.ndarray
    log_modulus: np.ndarray
    phase: np.ndarray
    momenta: np.ndarray
    n_jumps: int = field(default=0)

    @property
    def amplitudes(self):
        return np.exp(self.log_modulus + 1j * self.phase)

    def state(self, j):
        return SuperpositionState(self.momenta[j], self.log_modulus[j], self.phase[j], float(self.times[j]))

    def __iter__(self):
        for j in range(len(self.times)):
            yield self.times[j], self.amplitudes[j], self.momenta[j]

    def __len__(self):
        return len(self.times)


def _check_tau(tau):
    tau = float(tau)
    if not (math.isfinite(tau) and tau > 0):
        raise ParameterError("tau must be positive")
    return tau


def drift(state: SuperpositionState, tau, spec: GasSpec, rates=None):
    """Deterministic no-jump evolution over ``tau``.

    ``rates`` overrides the per-branch ``Gamma(U_i)`` (useful for isolated checks).
    """
    tau = _check_tau(tau)
    r = state.rates(spec) if rates is None else np.asarray(rates, dtype=float)
    moms = state.momenta.copy()
    lm = state.log_modulus.copy()
    ph = state.phase.copy()
    drift_kernel(moms, lm, ph, r, tau, spec.phase_const)
    return SuperpositionState(moms, lm, ph, state.time + tau)


def branch_probabilities(state: SuperpositionState, tau, spec: GasSpec, rates=None):
    """Probabilities of the branch whose momentum seeds the next transfer.

    ``p_i ∝ |alpha_i|^2 exp(-Gamma_i tau) Gamma_i`` with ``alpha`` taken at the
    start of the waiting period of length ``tau``.
    """
    tau = _check_tau(tau)
    r = state.rates(spec) if rates is None else np.asarray(rates, dtype=float)
    logp = 2.0 * state.log_modulus - r * tau + np.log(r)
    p = np.exp(logp - logp.max())
    return p / p.sum()


def jump(state: SuperpositionState, K_vec, spec: GasSpec):
    """Apply a collision with transfer ``K_vec`` to every branch."""
    k = np.ascontiguousarray(K_vec, dtype=float)
    if k.shape != (3,) or not np.linalg.norm(k) > 0:
        raise ParameterError("K_vec must be a nonzero 3-vector")
    moms = state.momenta.copy()
    lm = state.log_modulus.copy()
    jump_kernel(moms, lm, k, spec.recoil)
    return SuperpositionState(moms, lm, state.phase.copy(), state.time)


def coherence(state: SuperpositionState):
    """Per-realization coherence contribution ``|alpha_1| |alpha_2|``."""
    if state.n_branches != 2:
        raise ParameterError("coherence is defined for two-branch states")
    return float(math.exp(state.log_modulus[0] + state.log_modulus[1]))


def simulate_superposition(state0: SuperpositionState, t_f, output_times, spec: GasSpec, rng: RngStream):
    """Run one realization to ``t_f`` and return snapshots at ``output_times``.

    Waiting times follow the mixture survival ``sum_i |alpha_i|^2 exp(-Gamma_i t)``;
    the jumping branch is chosen with :func:`branch_probabilities` and the
    transfer is drawn from that branch's jump density.
    """
    t_f = _check_time(t_f)
    grid = _check_grid(output_times)
    if grid[-1] > t_f:
        raise ParameterError("output times must lie in [0, t_f]")
    if grid[-1] < t_f:
        grid = np.append(grid, t_f)
        keep = slice(0, -1)
    else:
        keep = slice(None)
    n = state0.n_branches
    nt = grid.size
    olm = np.empty((nt, n))
    oph = np.empty((nt, n))
    om = np.empty((nt, n, 3))
    cs = spec.cross_section
    jumps = path_kernel(
        state0.momenta.copy(), state0.log_modulus.copy(), state0.phase.copy(), grid,
        cs.code, cs.width, spec.phase_const, spec.recoil, rng.state, olm, oph, om,
    )
    return SuperpositionPath(grid[keep] + state0.time, olm[keep], oph[keep], om[keep], int(jumps))


def coherence_ensemble(spec: GasSpec, state0: SuperpositionState, times, n, master_seed, start=0, return_jumps=False):
    """``|alpha_1 alpha_2|`` on the grid for realizations ``start .. start+n-1``.

    Returns an array of shape ``(n, len(times))``; realization ``i`` uses
    ``RngStream(master_seed, i)``. Phases do not influence the moduli, so
    they are not propagated here.
    """
    if state0.n_branches != 2:
        raise ParameterError("coherence ensembles need two-branch states")
    grid = _check_grid(times)
    out = np.empty((int(n), grid.size))
    jumps = np.empty(int(n), dtype=np.int64)
    cs = spec.cross_section
    _coherence_ensemble_kernel(
        state0.momenta, state0.log_modulus, grid, cs.code, cs.width, spec.recoil,
        np.uint64(master_seed), np.uint64(start), out, jumps,
    )
    return (out, jumps) if return_jumps else out
