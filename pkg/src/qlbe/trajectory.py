"""Pure-jump momentum process for a tracer prepared in a momentum eigenstate.

Between jumps the scaled momentum ``U`` is constant. Waiting times are
exponential with rate ``Gamma(|U|)``, and each jump adds ``(m_*/M) K`` with
``K`` drawn from the jump density at the current ``U``. Trajectories are
right-continuous: at a jump time the value is the post-jump momentum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .errors import ParameterError
from .physics import GasSpec, rate
from .sampling import (
    RngStream,
    _as_vec3,
    equilibrium_momentum,
    new_state,
    sample_transfer,
    uniform,
)

__all__ = [
    "JumpTrajectory",
    "simulate_eigenstate_trajectory",
    "evaluate_at",
    "sample_on_grid",
    "eigenstate_ensemble",
]


@dataclass(frozen=True)
class JumpTrajectory:
    """Piecewise-constant realization ``U(t)`` on ``[0, t_final]``.

    ``times[0] == 0`` holds the initial momentum; every later entry is a jump.
    The last segment runs to ``t_final`` without a closing event.
    """

    times: np.ndarray
    momenta: np.ndarray
    t_final: float

    @property
    def events(self):
        return [(float(t), u.copy()) for t, u in zip(self.times, self.momenta)]

    @property
    def n_jumps(self):
        return len(self.times) - 1

    def __len__(self):
        return len(self.times)


@numba.njit(cache=True)
def _events_kernel(u0, t_final, kind, a, recoil, st):
    cap = 64
    times = np.empty(cap)
    moms = np.empty((cap, 3))
    times[0] = 0.0
    moms[0] = u0
    n = 1
    u = u0.copy()
    k = np.empty(3)
    t = 0.0
    while True:
        g = rate(math.sqrt(u[0] * u[0] + u[1] * u[1] + u[2] * u[2]), kind, a)
        t += -math.log(uniform(st)) / g
        if t > t_final:
            break
        sample_transfer(u, a, st, k)
        for i in range(3):
            u[i] += recoil * k[i]
        if n == cap:
            cap *= 2
            nt = np.empty(cap)
            nm = np.empty((cap, 3))
            nt[:n] = times[:n]
            nm[:n] = moms[:n]
            times = nt
            moms = nm
        times[n] = t
        moms[n] = u
        n += 1
    return times[:n].copy(), moms[:n].copy()


@numba.njit(cache=True)
def grid_kernel(u0, grid, kind, a, recoil, st, out):
    """Record ``U`` at every grid time (right-continuous); return the jump count.

    ``grid`` is ascending and its last entry is the final time.
    """
    u = u0.copy()
    k = np.empty(3)
    t = 0.0
    j = 0
    nt = grid.shape[0]
    t_final = grid[nt - 1]
    jumps = 0
    while True:
        g = rate(math.sqrt(u[0] * u[0] + u[1] * u[1] + u[2] * u[2]), kind, a)
        t_next = t - math.log(uniform(st)) / g
        while j < nt and grid[j] < t_next:
            out[j, 0] = u[0]
            out[j, 1] = u[1]
            out[j, 2] = u[2]
            j += 1
        if t_next > t_final:
            break
        sample_transfer(u, a, st, k)
        for i in range(3):
            u[i] += recoil * k[i]
        t = t_next
        jumps += 1
    return jumps


@numba.njit(cache=True)
def _ensemble_kernel(u0, equilibrium, mass_ratio, grid, kind, a, recoil, seed, start, out, jumps):
    u = np.empty(3)
    for r in range(out.shape[0]):
        st = new_state(seed, start + np.uint64(r))
        if equilibrium:
            equilibrium_momentum(mass_ratio, st, u)
        else:
            u[:] = u0
        jumps[r] = grid_kernel(u, grid, kind, a, recoil, st, out[r])


def _check_time(t_f):
    t_f = float(t_f)
    if not (math.isfinite(t_f) and t_f > 0):
        raise ParameterError("final time must be positive")
    return t_f


def simulate_eigenstate_trajectory(U0, t_f, spec: GasSpec, rng: RngStream):
    """Generate one realization of ``U(t)`` on ``[0, t_f]`` starting from ``U0``."""
    t_f = _check_time(t_f)
    cs = spec.cross_section
    times, moms = _events_kernel(_as_vec3(U0, "U0"), t_f, cs.code, cs.width, spec.recoil, rng.state)
    return JumpTrajectory(times, moms, t_f)


def evaluate_at(traj: JumpTrajectory, t):
    """Momentum at time ``t``; at a jump time this is the post-jump value."""
    if not 0.0 <= t <= traj.t_final:
        raise ParameterError(f"t={t} outside [0, {traj.t_final}]")
    i = int(np.searchsorted(traj.times, t, side="right")) - 1
    return traj.momenta[i].copy()


def _check_grid(times):
    grid = np.ascontiguousarray(times, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ParameterError("output times must be a nonempty 1-d grid")
    if grid[0] < 0 or np.any(np.diff(grid) < 0) or not np.all(np.isfinite(grid)):
        raise ParameterError("output times must be finite, nonnegative and ascending")
    if grid[-1] <= 0:
        raise ParameterError("final output time must be positive")
    return grid


def sample_on_grid(U0, times, spec: GasSpec, rng: RngStream):
    """Simulate to ``times[-1]`` and return ``U`` at each time, shape ``(len(times), 3)``."""
    grid = _check_grid(times)
    out = np.empty((grid.size, 3))
    cs = spec.cross_section
    grid_kernel(_as_vec3(U0, "U0"), grid, cs.code, cs.width, spec.recoil, rng.state, out)
    return out


def eigenstate_ensemble(spec: GasSpec, times, n, master_seed, U0=None, start=0, return_jumps=False):
    """Momenta of realizations ``start .. start+n-1`` on the grid, shape ``(n, len(times), 3)``.

    Realization ``i`` uses ``RngStream(master_seed, i)``. With ``U0=None``
    the initial momentum is drawn from the thermal distribution using the
    realization's own stream; otherwise every realization starts at ``U0``.
    """
    grid = _check_grid(times)
    equilibrium = U0 is None
    u0 = np.zeros(3) if equilibrium else _as_vec3(U0, "U0")
    out = np.empty((int(n), grid.size, 3))
    jumps = np.empty(int(n), dtype=np.int64)
    cs = spec.cross_section
    _ensemble_kernel(
        u0, equilibrium, spec.mass_ratio, grid, cs.code, cs.width, spec.recoil,
        np.uint64(master_seed), np.uint64(start), out, jumps,
    )
    return (out, jumps) if return_jumps else out
