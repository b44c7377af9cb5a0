"""Ensemble estimators with standard errors.

Standard errors of nonlinear estimators (squared mean, cumulants) come from
the delta method: each realization contributes an influence value whose
sample standard deviation over ``sqrt(n)`` is the reported error.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError

__all__ = [
    "Moments",
    "Cumulants",
    "EnsembleSeries",
    "moments",
    "cumulants",
    "coherence_curve",
    "fit_exponential_rate",
    "ensemble_series",
]


@dataclass(frozen=True)
class Moments:
    mean: np.ndarray
    mean_sq: float
    sq_mean: float
    mean_se: np.ndarray
    mean_sq_se: float
    sq_mean_se: float


@dataclass(frozen=True)
class Cumulants:
    k2: float
    k3: float
    k4: float
    k2_se: float = 0.0
    k3_se: float = 0.0
    k4_se: float = 0.0

    def __iter__(self):
        return iter((self.k2, self.k3, self.k4))


def _samples(samples):
    x = np.asarray(samples, dtype=float)
    if x.ndim != 2 or x.shape[1] != 3:
        raise ParameterError("samples must have shape (n, 3)")
    if x.shape[0] < 2:
        raise ParameterError("need at least two samples")
    return x


def _se(values, axis=0):
    n = values.shape[axis]
    return values.std(axis=axis, ddof=1) / np.sqrt(n)


def moments(samples):
    """Mean vector, ``<U>^2``, ``<U^2>`` and their standard errors.

    The error of ``<U>^2 = |mean|^2`` uses the influence ``2 mean . (U - mean)``,
    i.e. twice ``|mean|`` times the error of the mean along its own direction.
    """
    x = _samples(samples)
    mean = x.mean(axis=0)
    sq = np.einsum("ij,ij->i", x, x)
    dev = x - mean
    return Moments(
        mean=mean,
        mean_sq=float(mean @ mean),
        sq_mean=float(sq.mean()),
        mean_se=_se(x),
        mean_sq_se=float(_se(2.0 * dev @ mean)),
        sq_mean_se=float(_se(sq)),
    )


def _cumulant_arrays(x, axis):
    # x: (..., n, 3) with realizations along ``axis``; returns estimates and influences
    mu = x.mean(axis=axis, keepdims=True)
    d = x - mu
    d2 = d * d
    m2 = d2.mean(axis=axis, keepdims=True)
    m3 = (d2 * d).mean(axis=axis, keepdims=True)
    m4 = (d2 * d2).mean(axis=axis, keepdims=True)
    k2 = m2.sum(axis=-1)
    k3 = m3.sum(axis=-1)
    k4 = (m4 - 3.0 * m2 * m2).sum(axis=-1)
    infl2 = (d2 - m2).sum(axis=-1)
    infl3 = (d2 * d - m3 - 3.0 * m2 * d).sum(axis=-1)
    infl4 = (d2 * d2 - m4 - 4.0 * m3 * d - 6.0 * m2 * (d2 - m2)).sum(axis=-1)
    return k2, k3, k4, infl2, infl3, infl4


def cumulants(samples):
    """Component-summed cumulants ``kappa_2``, ``kappa_3``, ``kappa_4``.

    Plain (biased) central-moment estimators; the ``O(1/n)`` bias is far below
    the statistical error at the ensemble sizes used here.
    """
    x = _samples(samples)
    k2, k3, k4, i2, i3, i4 = _cumulant_arrays(x, axis=0)
    return Cumulants(
        float(k2[0]), float(k3[0]), float(k4[0]),
        float(_se(i2)), float(_se(i3)), float(_se(i4)),
    )


def coherence_curve(contributions, times=None):
    """Coherence ``C(t) = 2 E|alpha_1 alpha_2|`` and its standard error.

    ``contributions`` has shape ``(n_realizations, n_times)`` and holds the
    per-realization ``|alpha_1 alpha_2|``; ``times`` is checked against it.
    A balanced start contributes exactly ``1/2`` so ``C(0) = 1``.
    """
    c = np.asarray(contributions, dtype=float)
    if c.ndim != 2 or c.shape[0] < 2:
        raise ParameterError("contributions must be (n_realizations >= 2, n_times)")
    if times is not None and np.asarray(times).shape != (c.shape[1],):
        raise ParameterError("time grid does not match the realizations")
    return 2.0 * c.mean(axis=0), 2.0 * _se(c)


def fit_exponential_rate(times, values, fit_floor=0.01, errors=None, min_snr=0.0):
    """Least-squares decay rate of ``values ~ exp(intercept - rate t)``.

    Only the leading stretch with ``values >= fit_floor * values[0]`` is used;
    everything from the first crossing below that level onward is dropped.
    With ``errors`` given, the stretch also ends where ``values`` first falls
    below ``min_snr * errors``. Returns ``(rate, intercept, r_squared)``.
    """
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    if t.shape != v.shape or t.ndim != 1:
        raise ParameterError("times and values must be 1-d and of equal length")
    if not 0 < fit_floor < 1:
        raise ParameterError("fit_floor must lie in (0, 1)")
    if v.size == 0 or not v[0] > 0:
        raise ParameterError("first value must be positive")
    keep = v >= fit_floor * v[0]
    if errors is not None:
        e = np.asarray(errors, dtype=float)
        if e.shape != v.shape:
            raise ParameterError("errors must match values")
        keep &= v >= min_snr * e
    below = np.flatnonzero(~keep)
    stop = below[0] if below.size else v.size
    if stop < 3:
        raise ParameterError("fewer than 3 points in the fit window")
    tw, vw = t[:stop], v[:stop]
    y = np.log(vw)
    slope, intercept = np.polyfit(tw, y, 1)
    resid = y - (intercept + slope * tw)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    # flat data: the mean itself carries roundoff, so test the spread directly
    r2 = 1.0 - float((resid ** 2).sum()) / ss_tot if np.ptp(y) > 0 else 1.0
    return float(-slope), float(intercept), r2


@dataclass
class EnsembleSeries:
    """Per-time ensemble estimates on a common grid, each with a standard error."""

    times: np.ndarray
    n_realizations: int
    mean: np.ndarray
    mean_se: np.ndarray
    mean_sq: np.ndarray
    mean_sq_se: np.ndarray
    sq_mean: np.ndarray
    sq_mean_se: np.ndarray
    k2: np.ndarray
    k2_se: np.ndarray
    k3: np.ndarray
    k3_se: np.ndarray
    k4: np.ndarray
    k4_se: np.ndarray
    coherence: np.ndarray | None = field(default=None)
    coherence_se: np.ndarray | None = field(default=None)


def ensemble_series(times, momenta, contributions=None):
    """Reduce realizations ``momenta[n, t, 3]`` to an :class:`EnsembleSeries`.

    The reduction runs over the realization axis in index order, so equal
    inputs give bit-identical outputs.
    """
    x = np.asarray(momenta, dtype=float)
    times = np.asarray(times, dtype=float)
    if x.ndim != 3 or x.shape[2] != 3 or x.shape[1] != times.size:
        raise ParameterError("momenta must have shape (n, len(times), 3)")
    n = x.shape[0]
    if n < 2:
        raise ParameterError("need at least two realizations")
    mean = x.mean(axis=0)
    dev = x - mean
    sq = np.einsum("ntk,ntk->nt", x, x)
    k2, k3, k4, i2, i3, i4 = _cumulant_arrays(x, axis=0)
    series = EnsembleSeries(
        times=times,
        n_realizations=n,
        mean=mean,
        mean_se=_se(x),
        mean_sq=np.einsum("tk,tk->t", mean, mean),
        mean_sq_se=_se(2.0 * np.einsum("ntk,tk->nt", dev, mean)),
        sq_mean=sq.mean(axis=0),
        sq_mean_se=_se(sq),
        k2=k2[0], k2_se=_se(i2),
        k3=k3[0], k3_se=_se(i3),
        k4=k4[0], k4_se=_se(i4),
    )
    if contributions is not None:
        series.coherence, series.coherence_se = coherence_curve(contributions, times)
    return series
