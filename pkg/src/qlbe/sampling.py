"""Random variates for the jump process.

Every trajectory owns an :class:`RngStream`, a Philox4x64-10 counter-based
generator keyed by ``(master_seed, stream_index)``. Its state is a small
``uint64`` array so compiled kernels can advance it in place. The raw output
is bit-identical to ``numpy.random.Philox(key=[master_seed, stream_index])``.

Momentum transfers ``(K, xi)`` are drawn exactly from the jump density

    R(K, xi) ∝ K exp[-(K/2 + U xi)^2 - a K^2 / 4]

(``a = 0`` for a constant cross section) by rejection in the variables
``y = K/2`` and ``s = y + U xi``. In those variables the density is
``y exp(-s^2 - a y^2)`` on ``y >= 0``, ``|s - y| <= U``; ``s`` is drawn by
rejection from a Gaussian-type envelope and ``y`` given ``s`` by inversion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .errors import NumericError, ParameterError
from .physics import CrossSectionModel, rate as _rate

__all__ = [
    "RngStream",
    "MomentumTransferSample",
    "invert_waiting_time",
    "invert_waiting_time_mixture",
    "sample_waiting_time",
    "sample_waiting_time_mixture",
    "jump_density",
    "sample_momentum_transfer",
    "sample_momentum_transfers",
    "random_unit_vector",
    "sample_equilibrium_momentum",
    "MAX_REJECTIONS",
]

MAX_REJECTIONS = 1_000_000
PARALLEL_EPS = 1e-12

_M32 = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)
_S12 = np.uint64(12)
_ONE = np.uint64(1)
_ZERO = np.uint64(0)
_FOUR = np.uint64(4)
_PM0 = np.uint64(0xD2E7470EE14C6C93)
_PM1 = np.uint64(0xCA5A826395121157)
_W0 = np.uint64(0x9E3779B97F4A7C15)
_W1 = np.uint64(0xBB67AE8584CAA73B)
_TWO_M52 = 2.0 ** -52
_SQRT_PI = math.sqrt(math.pi)
_SQRT_HALF = math.sqrt(0.5)

# state layout: key[0:2], counter[2:6], buffer[6:10], buffer position[10]
_STATE_SIZE = 11


@numba.njit(cache=True)
def _mulhilo(a, b):
    alo = a & _M32
    ahi = a >> _S32
    blo = b & _M32
    bhi = b >> _S32
    ll = alo * blo
    hl = ahi * blo
    lh = alo * bhi
    cross = (ll >> _S32) + (hl & _M32) + lh
    hi = ahi * bhi + (hl >> _S32) + (cross >> _S32)
    return hi, a * b


@numba.njit(cache=True)
def _refill(st):
    # 256-bit counter increment, then one Philox4x64-10 block
    for i in range(2, 6):
        st[i] += _ONE
        if st[i] != _ZERO:
            break
    c0, c1, c2, c3 = st[2], st[3], st[4], st[5]
    k0, k1 = st[0], st[1]
    for _ in range(10):
        hi0, lo0 = _mulhilo(_PM0, c0)
        hi1, lo1 = _mulhilo(_PM1, c2)
        c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
        k0 += _W0
        k1 += _W1
    st[6] = c0
    st[7] = c1
    st[8] = c2
    st[9] = c3
    st[10] = _ZERO


@numba.njit(cache=True)
def next_raw(st):
    if st[10] >= _FOUR:
        _refill(st)
    x = st[6 + np.int64(st[10])]
    st[10] += _ONE
    return x


@numba.njit(cache=True)
def uniform(st):
    """Uniform double on the open interval (0, 1).

    52 bits plus one half: ``k + 0.5`` is exact for ``k < 2**52``, so the
    result lies in ``[2**-53, 1 - 2**-53]``.
    """
    return (np.float64(next_raw(st) >> _S12) + 0.5) * _TWO_M52


@numba.njit(cache=True)
def std_normal(st):
    u1 = uniform(st)
    u2 = uniform(st)
    return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)


@numba.njit(cache=True)
def fill_uniform(st, out):
    for i in range(out.shape[0]):
        out[i] = uniform(st)


@numba.njit(cache=True)
def fill_raw(st, out):
    for i in range(out.shape[0]):
        out[i] = next_raw(st)


class RngStream:
    """Reproducible random stream for one trajectory.

    Two streams built from the same ``(master_seed, stream_index)`` produce
    identical sequences; distinct indices give distinct Philox keys and hence
    independent streams. A stream must not be shared between threads.
    """

    __slots__ = ("master_seed", "stream_index", "state")

    def __init__(self, master_seed, stream_index=0):
        master_seed = int(master_seed)
        stream_index = int(stream_index)
        for name, v in (("master_seed", master_seed), ("stream_index", stream_index)):
            if not 0 <= v < 2**64:
                raise ParameterError(f"{name} must be an unsigned 64-bit integer")
        self.master_seed = master_seed
        self.stream_index = stream_index
        self.state = np.zeros(_STATE_SIZE, dtype=np.uint64)
        self.state[0] = master_seed
        self.state[1] = stream_index
        self.state[10] = 4

    def __repr__(self):
        return f"RngStream(master_seed={self.master_seed}, stream_index={self.stream_index})"

    def copy(self):
        new = RngStream(self.master_seed, self.stream_index)
        new.state[:] = self.state
        return new

    def random_raw(self, n=None):
        out = np.empty(1 if n is None else n, dtype=np.uint64)
        fill_raw(self.state, out)
        return int(out[0]) if n is None else out

    def uniform(self, n=None):
        out = np.empty(1 if n is None else n)
        fill_uniform(self.state, out)
        return float(out[0]) if n is None else out


# ---------------------------------------------------------------------------
# waiting times


def invert_waiting_time(rate, eta):
    """Time at which the survival ``exp(-rate t)`` equals ``eta``."""
    if not rate > 0:
        raise ParameterError("rate must be positive")
    return -math.log(eta) / rate


@numba.njit(cache=True)
def solve_mixture(logw, rates, eta):
    """Solve ``sum_i exp(logw_i - rates_i t) = eta`` for ``t``.

    ``logw`` must be log-normalized. The log-survival is convex and
    decreasing, so Newton iteration started at the lower bracket
    ``-ln(eta)/max(rate)`` climbs monotonically to the root.
    """
    n = rates.shape[0]
    target = math.log(eta)
    if n == 1:
        return -target / rates[0]
    rmax = rates.max()
    rmin = rates.min()
    lo = -target / rmax
    hi = -target / rmin
    if hi - lo <= 1e-15 * hi:
        return lo
    t = lo
    g_prev = np.inf
    for _ in range(200):
        m = -np.inf
        for i in range(n):
            v = logw[i] - rates[i] * t
            if v > m:
                m = v
        s = 0.0
        sr = 0.0
        for i in range(n):
            e = math.exp(logw[i] - rates[i] * t - m)
            s += e
            sr += e * rates[i]
        g = m + math.log(s) - target
        # g decreases monotonically until roundoff takes over
        if g <= 0.0 or g >= g_prev:
            return t
        g_prev = g
        step = g * s / sr
        t_new = t + step
        if t_new > hi:
            t_new = 0.5 * (t + hi)
        if t_new - t <= 1e-15 * t_new:
            return t_new
        t = t_new
    raise NumericError("waiting-time inversion did not converge")


def _check_mixture(weights, rates):
    w = np.asarray(weights, dtype=float).ravel()
    r = np.asarray(rates, dtype=float).ravel()
    if w.size == 0 or w.size != r.size:
        raise ParameterError("weights and rates must be nonempty and of equal length")
    if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-10:
        raise ParameterError("weights must be nonnegative and sum to 1")
    if np.any(~(r > 0)) or not np.all(np.isfinite(r)):
        raise ParameterError("rates must be positive")
    with np.errstate(divide="ignore"):
        logw = np.log(w / w.sum())
    keep = w > 0
    return logw[keep], r[keep]


def invert_waiting_time_mixture(weights, rates, eta):
    """Time ``t`` with ``sum_i w_i exp(-Gamma_i t) = eta``."""
    logw, r = _check_mixture(weights, rates)
    return float(solve_mixture(logw, r, float(eta)))


@numba.njit(cache=True)
def waiting_time(rate, st):
    return -math.log(uniform(st)) / rate


def sample_waiting_time(rate, rng: RngStream):
    if not rate > 0:
        raise ParameterError("rate must be positive")
    return float(waiting_time(float(rate), rng.state))


def sample_waiting_time_mixture(weights, rates, rng: RngStream):
    """Waiting time whose survival function is ``sum_i w_i exp(-Gamma_i t)``."""
    logw, r = _check_mixture(weights, rates)
    return float(solve_mixture(logw, r, uniform(rng.state)))


# ---------------------------------------------------------------------------
# momentum transfers


def jump_density(K, xi, U, model: CrossSectionModel):
    """Normalized joint density ``R(K, xi)`` of transfer size and cosine."""
    K = np.asarray(K, dtype=float)
    xi = np.asarray(xi, dtype=float)
    a = model.width
    g = _rate(float(U), model.code, a)
    return K * np.exp(-((0.5 * K + U * xi) ** 2) - 0.25 * a * K * K) / (2.0 * _SQRT_PI * g)


@numba.njit(cache=True)
def _sample_shifted(U, st, budget):
    # t ~ t exp(-(t - U)^2) on t > 0, Gaussian proposal centred on the mode
    nu = 0.5 * (U + math.sqrt(U * U + 2.0))
    used = 0
    while used < budget:
        used += 1
        t = nu + _SQRT_HALF * std_normal(st)
        if t <= 0.0:
            continue
        r = t / nu
        if uniform(st) < r * math.exp(1.0 - r):
            return t, used
    return -1.0, used


@numba.njit(cache=True)
def sample_k_xi(U, a, st):
    """Draw ``(K, xi)`` from the jump density at speed ``U > 0``."""
    erfc_m = math.erfc(-U)
    mass_lin = 2.0 * U * (0.5 * math.exp(-U * U) + U * 0.5 * _SQRT_PI * erfc_m)
    use_flat = a > 0.0 and 0.25 * _SQRT_PI * erfc_m / a < mass_lin
    budget = MAX_REJECTIONS
    while budget > 0:
        if use_flat:
            # envelope exp(-s^2) / (2a) on s > -U
            budget -= 1
            s = _SQRT_HALF * std_normal(st)
            if s <= -U:
                continue
            t = s + U
        else:
            # envelope 2U (s + U) exp(-s^2) on s > -U
            t, used = _sample_shifted(U, st, budget)
            budget -= used
            if t < 0.0:
                break
            s = t - U
        if s >= U:
            lo2 = (s - U) * (s - U)
            D = 4.0 * s * U
        else:
            lo2 = 0.0
            D = t * t
        if a > 0.0:
            em = -math.expm1(-a * D)
            h = math.exp(-a * lo2) * em / (2.0 * a)
        else:
            em = 0.0
            h = 0.5 * D
        ratio = 2.0 * a * h if use_flat else h / (2.0 * U * t)
        if uniform(st) >= ratio:
            continue
        eta = uniform(st)
        if a > 0.0:
            q = -math.log1p(-eta * em) / a
        else:
            q = eta * D
        if s >= U:
            y = math.sqrt(lo2 + q)
            xi = (2.0 * s * U - U * U - q) / (U * (s + y))
        else:
            y = math.sqrt(q)
            xi = (s - y) / U
        if xi > 1.0:
            xi = 1.0
        elif xi < -1.0:
            xi = -1.0
        return 2.0 * y, xi
    raise NumericError("momentum-transfer rejection loop exceeded its iteration cap")


@numba.njit(cache=True)
def unit_vector(st, out):
    z = 2.0 * uniform(st) - 1.0
    phi = 2.0 * math.pi * uniform(st)
    r = math.sqrt(max(0.0, 1.0 - z * z))
    out[0] = r * math.cos(phi)
    out[1] = r * math.sin(phi)
    out[2] = z


@numba.njit(cache=True)
def sample_transfer(u, a, st, out):
    """Fill ``out`` with a transfer vector for momentum ``u``; return ``(K, xi)``."""
    U = math.sqrt(u[0] * u[0] + u[1] * u[1] + u[2] * u[2])
    e = np.empty(3)
    if U < PARALLEL_EPS:
        # exactly isotropic: |K| has density K exp(-(1 + a) K^2 / 4)
        K = 2.0 * math.sqrt(-math.log(uniform(st)) / (1.0 + a))
        unit_vector(st, e)
        for i in range(3):
            out[i] = K * e[i]
        return K, e[2]
    K, xi = sample_k_xi(U, a, st)
    while True:
        unit_vector(st, e)
        w0 = u[1] * e[2] - u[2] * e[1]
        w1 = u[2] * e[0] - u[0] * e[2]
        w2 = u[0] * e[1] - u[1] * e[0]
        wn = math.sqrt(w0 * w0 + w1 * w1 + w2 * w2)
        if wn > PARALLEL_EPS * U:
            break
    par = K * xi / U
    perp = K * math.sqrt(max(0.0, 1.0 - xi * xi)) / wn
    out[0] = par * u[0] + perp * w0
    out[1] = par * u[1] + perp * w1
    out[2] = par * u[2] + perp * w2
    return K, xi


@numba.njit(cache=True)
def _transfer_batch(u, a, st, K, xi, vec):
    row = np.empty(3)
    for i in range(K.shape[0]):
        K[i], xi[i] = sample_transfer(u, a, st, row)
        vec[i, 0] = row[0]
        vec[i, 1] = row[1]
        vec[i, 2] = row[2]


@dataclass(frozen=True)
class MomentumTransferSample:
    K: float
    xi: float
    K_vec: np.ndarray


def _as_vec3(v, name="U_vec"):
    v = np.ascontiguousarray(v, dtype=float)
    if v.shape != (3,) or not np.all(np.isfinite(v)):
        raise ParameterError(f"{name} must be a finite 3-vector")
    return v


def sample_momentum_transfer(U_vec, model: CrossSectionModel, rng: RngStream):
    """One momentum transfer for a tracer with scaled momentum ``U_vec``."""
    u = _as_vec3(U_vec)
    out = np.empty(3)
    K, xi = sample_transfer(u, model.width, rng.state, out)
    return MomentumTransferSample(float(K), float(xi), out)


def sample_momentum_transfers(U_vec, model: CrossSectionModel, rng: RngStream, n):
    """Draw ``n`` transfers; returns arrays ``K``, ``xi`` and ``K_vec`` (n, 3)."""
    u = _as_vec3(U_vec)
    K = np.empty(n)
    xi = np.empty(n)
    vec = np.empty((n, 3))
    _transfer_batch(u, model.width, rng.state, K, xi, vec)
    return K, xi, vec


def random_unit_vector(rng: RngStream):
    out = np.empty(3)
    unit_vector(rng.state, out)
    return out


@numba.njit(cache=True)
def equilibrium_momentum(mass_ratio, st, out):
    sd = math.sqrt(0.5 * mass_ratio)
    for i in range(3):
        out[i] = sd * std_normal(st)


def sample_equilibrium_momentum(mass_ratio, rng: RngStream):
    """Thermal scaled momentum: i.i.d. normal components of variance ``(m/M)/2``."""
    if not mass_ratio > 0:
        raise ParameterError("mass_ratio must be positive")
    out = np.empty(3)
    equilibrium_momentum(float(mass_ratio), rng.state, out)
    return out


@numba.njit(cache=True)
def new_state(master_seed, stream_index):
    """Kernel-side equivalent of ``RngStream(master_seed, stream_index).state``."""
    st = np.zeros(_STATE_SIZE, dtype=np.uint64)
    st[0] = np.uint64(master_seed)
    st[1] = np.uint64(stream_index)
    st[10] = _FOUR
    return st
