"""Deterministic physics of the tracer/gas collision model.

All rates are measured in units of the reference scattering rate
``Gamma_0 = n_gas * v_mp * 4 * pi * sigma`` and all times in ``1/Gamma_0``.
Momenta are the scaled variables ``U = P / (M v_mp)`` (tracer) and
``K = Q / (m_* v_mp)`` (momentum transfer), with ``v_mp = sqrt(2 / (m beta))``
the most probable gas velocity.

The scalar rate functions are compiled with numba so the simulation kernels
can call them directly; the public wrappers validate their arguments.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field

import numba
import numpy as np
from scipy import integrate

from .errors import NumericError, ParameterError

__all__ = [
    "CrossSectionKind",
    "CrossSectionModel",
    "GasSpec",
    "Statistics",
    "BoseFermiParams",
    "energy_transfer",
    "structure_factor_mb",
    "structure_factor_bf",
    "detailed_balance_residual",
    "total_rate",
    "total_rate_quadrature",
    "relaxation_rate",
    "decoherence_rate_analytic",
    "rate_ratios",
    "SMALL_U",
]

SQRT_PI = math.sqrt(math.pi)

# Below this scaled momentum the closed forms are replaced by their Taylor series.
SMALL_U = 1e-4

CONSTANT = 0
GAUSSIAN = 1


class CrossSectionKind(str, enum.Enum):
    CONSTANT = "constant"
    GAUSSIAN = "gaussian"


@dataclass(frozen=True)
class CrossSectionModel:
    """Momentum-transfer dependence of the cross section.

    ``constant``: ``sigma(K) = sigma``.
    ``gaussian``: ``sigma(K) = sigma * exp(-a K^2 / 4)`` with ``a > 0``.
    """

    kind: CrossSectionKind = CrossSectionKind.CONSTANT
    a: float = 0.0

    def __post_init__(self):
        try:
            kind = CrossSectionKind(self.kind)
        except ValueError:
            raise ParameterError(f"unknown cross-section kind {self.kind!r}") from None
        object.__setattr__(self, "kind", kind)
        a = float(self.a)
        if kind is CrossSectionKind.GAUSSIAN and not a > 0:
            raise ParameterError("gaussian cross section needs a > 0")
        if not math.isfinite(a) or a < 0:
            raise ParameterError("a must be finite and nonnegative")
        object.__setattr__(self, "a", a)

    @classmethod
    def constant(cls):
        return cls(CrossSectionKind.CONSTANT)

    @classmethod
    def gaussian(cls, a):
        return cls(CrossSectionKind.GAUSSIAN, a)

    @property
    def code(self):
        """Integer tag used by the compiled kernels."""
        return CONSTANT if self.kind is CrossSectionKind.CONSTANT else GAUSSIAN

    @property
    def width(self):
        """Width parameter passed to kernels (0 for the constant model)."""
        return self.a if self.kind is CrossSectionKind.GAUSSIAN else 0.0

    def sigma(self, K):
        """Relative cross section ``sigma(K) / sigma``."""
        if self.kind is CrossSectionKind.CONSTANT:
            return np.ones_like(np.asarray(K, dtype=float))
        return np.exp(-self.a * np.asarray(K, dtype=float) ** 2 / 4.0)


@dataclass(frozen=True)
class GasSpec:
    """Dimensionless configuration of tracer plus gas.

    Parameters
    ----------
    mass_ratio : float
        Gas particle mass over tracer mass, ``m / M``.
    cross_section : CrossSectionModel
    phase_const : float
        ``M v_mp^2 / (2 hbar Gamma_0)``; multiplies ``U^2`` in the free phase.
    """

    mass_ratio: float
    cross_section: CrossSectionModel = field(default_factory=CrossSectionModel)
    phase_const: float = 0.0

    def __post_init__(self):
        mr = float(self.mass_ratio)
        if not (math.isfinite(mr) and mr > 0):
            raise ParameterError("mass_ratio must be positive")
        pc = float(self.phase_const)
        if not (math.isfinite(pc) and pc >= 0):
            raise ParameterError("phase_const must be nonnegative")
        if not isinstance(self.cross_section, CrossSectionModel):
            raise ParameterError("cross_section must be a CrossSectionModel")
        object.__setattr__(self, "mass_ratio", mr)
        object.__setattr__(self, "phase_const", pc)

    @property
    def recoil(self):
        """Reduced-mass ratio ``m_* / M = (m/M) / (1 + m/M)``."""
        return self.mass_ratio / (1.0 + self.mass_ratio)


class Statistics(str, enum.Enum):
    BOSE = "bose"
    FERMI = "fermi"


@dataclass(frozen=True)
class BoseFermiParams:
    statistics: Statistics
    fugacity: float
    beta: float
    mass: float
    density: float
    hbar: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "statistics", Statistics(self.statistics))
        for name in ("fugacity", "beta", "mass", "density", "hbar"):
            v = float(getattr(self, name))
            if not (math.isfinite(v) and v > 0):
                raise ParameterError(f"{name} must be positive")
            object.__setattr__(self, name, v)
        if self.statistics is Statistics.BOSE and self.fugacity >= 1:
            raise ParameterError("Bose gas requires fugacity < 1")


# ---------------------------------------------------------------------------
# kinematics and structure factors


def energy_transfer(Q, P, M):
    """Energy gained by a tracer of mass ``M`` and momentum ``P`` on a kick ``Q``."""
    if not M > 0:
        raise ParameterError("M must be positive")
    Q = np.asarray(Q, dtype=float)
    P = np.asarray(P, dtype=float)
    return float(Q @ Q / (2.0 * M) + P @ Q / M)


def _check_q(Q):
    if not (math.isfinite(Q) and Q > 0):
        raise ParameterError("momentum transfer magnitude Q must be positive")


def _mb_exponent(Q, E, beta, m):
    return beta / (8.0 * m) * (2.0 * m * E + Q * Q) ** 2 / (Q * Q)


def _log_structure_factor_mb(Q, E, beta, m):
    return 0.5 * math.log(beta * m / (2.0 * math.pi)) - math.log(Q) - _mb_exponent(Q, E, beta, m)


def structure_factor_mb(Q, E, beta, m):
    """Dynamic structure factor of a free Maxwell-Boltzmann gas."""
    _check_q(Q)
    if not (beta > 0 and m > 0):
        raise ParameterError("beta and m must be positive")
    return math.exp(_log_structure_factor_mb(Q, E, beta, m))


def _log_structure_factor_bf(Q, E, p: BoseFermiParams):
    beta, m = p.beta, p.mass
    s = 1.0 if p.statistics is Statistics.BOSE else -1.0
    z = p.fugacity
    lognorm = math.log(2.0 * math.pi * m * m / (p.density * beta * Q)) - 3.0 * math.log(
        2.0 * math.pi * p.hbar
    )
    a_minus = beta / (8.0 * m) * (2.0 * m * E - Q * Q) ** 2 / (Q * Q)
    x = beta * E
    lze = math.log(z) - a_minus
    ze = math.exp(lze)
    # S ∝ (-s) ln[(1 - s z e^{-A+}) / (1 - s z e^{-A-})] / (1 - e^x), A+ - A- = x.
    # With y = -s ze expm1(-x) / (1 - s ze) the log-ratio is log1p(y) and
    # ln S = lognorm + ln(ze) - x - log1p(-s ze) + ln(log1p(y) / y); the last
    # term vanishes at x = 0 and as ze underflows.
    l1 = math.log1p(-s * ze)
    if x == 0.0 or ze == 0.0:
        lr = 0.0
    else:
        em = math.expm1(-x)
        ly = lze + math.log(abs(em)) - l1
        if ly > 700.0:
            lr = math.log(ly) - ly
        else:
            y = -s * ze * em / (1.0 - s * ze)
            lr = math.log(math.log1p(y) / y) if y != 0.0 else 0.0
    return lognorm + lze - x - l1 + lr


def structure_factor_bf(Q, E, params: BoseFermiParams):
    """Free Bose (upper sign) or Fermi (lower sign) gas structure factor.

    The absolute prefactor ``(2 pi hbar)^-3 * 2 pi m^2 / (n beta Q)`` is kept
    as written; only its ``E`` dependence is physically comparable with the
    Maxwell-Boltzmann form.
    """
    _check_q(Q)
    return math.exp(_log_structure_factor_bf(Q, E, params))


def detailed_balance_residual(Q, E, beta=None, m=None, bose_fermi: BoseFermiParams | None = None):
    """Relative violation of ``S(Q, E) = exp(-beta E) S(-Q, -E)``.

    Uses the Maxwell-Boltzmann form unless ``bose_fermi`` is given, in which
    case ``beta`` and ``m`` are taken from it. Evaluated in log space so that
    deep tails do not underflow.
    """
    _check_q(Q)
    if bose_fermi is not None:
        lf = lambda e: _log_structure_factor_bf(Q, e, bose_fermi)  # noqa: E731
        beta = bose_fermi.beta
    else:
        if not (beta is not None and m is not None and beta > 0 and m > 0):
            raise ParameterError("beta and m must be positive")
        lf = lambda e: _log_structure_factor_mb(Q, e, beta, m)  # noqa: E731
    return abs(math.expm1(lf(-E) - beta * E - lf(E)))


# ---------------------------------------------------------------------------
# total transition rate


@numba.njit(cache=True)
def rate_constant(U):
    if U < SMALL_U:
        u2 = U * U
        return (2.0 + u2 * (2.0 / 3.0 - u2 / 15.0)) / SQRT_PI
    return (1.0 + 2.0 * U * U) * math.erf(U) / (2.0 * U) + math.exp(-U * U) / SQRT_PI


@numba.njit(cache=True)
def rate_gaussian(U, a):
    b = 1.0 + a
    if U < SMALL_U:
        u2 = U * U
        c0 = 2.0 / b
        c2 = -2.0 * (a - 1.0) / (3.0 * b * b)
        c4 = (3.0 * a * a - 6.0 * a - 1.0) / (15.0 * b * b * b)
        return (c0 + u2 * (c2 + u2 * c4)) / SQRT_PI
    sb = math.sqrt(b)
    return (math.erf(U) - math.erf(U / sb) * math.exp(-a * U * U / b) / sb) / (a * U)


@numba.njit(cache=True)
def rate(U, kind, a):
    """Total transition rate for cross-section code ``kind`` (0 constant, 1 gaussian)."""
    if kind == CONSTANT:
        return rate_constant(U)
    return rate_gaussian(U, a)


@numba.njit(cache=True)
def erf_over_u(U):
    if U < SMALL_U:
        u2 = U * U
        return (2.0 + u2 * (-2.0 / 3.0 + u2 / 5.0)) / SQRT_PI
    return math.erf(U) / U


def _check_u(U):
    U = float(U)
    if not (math.isfinite(U) and U >= 0):
        raise ParameterError("U must be finite and nonnegative")
    return U


def total_rate(U, model: CrossSectionModel):
    """Total rate ``Gamma(U) / Gamma_0`` for jumps out of momentum ``U``.

    Examples
    --------
    >>> round(total_rate(1.0, CrossSectionModel.constant()), 5)
    1.4716
    """
    return float(rate(_check_u(U), model.code, model.width))


def total_rate_quadrature(U, sigma_of_K, *, tol=1e-10, limit=400):
    """Total rate by direct quadrature over the transfer magnitude.

    ``sigma_of_K`` is the cross section relative to the constant ``sigma``
    that defines ``Gamma_0``. For ``U > 0`` the angular integral is done
    analytically, leaving
    ``(1 / 4U) * int_0^Kmax K sigma(K) [erf(K/2 + U) - erf(K/2 - U)] dK``;
    at ``U = 0`` the limit ``(1/sqrt(pi)) int K sigma(K) exp(-K^2/4) dK`` is used.
    The integrand is negligible beyond ``Kmax = 2U + 12``.
    """
    U = _check_u(U)
    kmax = 2.0 * U + 12.0
    if U == 0.0:
        def f(K):
            return K * sigma_of_K(K) * math.exp(-0.25 * K * K) / SQRT_PI
        points = None
    else:
        def f(K):
            return K * sigma_of_K(K) * (math.erf(0.5 * K + U) - math.erf(0.5 * K - U)) / (4.0 * U)
        points = [min(2.0 * U, kmax)] if 0 < 2.0 * U < kmax else None
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(f, 0.0, kmax, epsabs=tol, epsrel=tol, limit=limit, points=points)
        except integrate.IntegrationWarning as exc:
            raise NumericError(f"quadrature did not converge at U={U}: {exc}") from None
    return val


# ---------------------------------------------------------------------------
# relaxation and decoherence rates


def relaxation_rate(spec: GasSpec):
    """Small-mass-ratio relaxation rate of ``<U>^2`` and ``<U^2>``."""
    g = 16.0 / (3.0 * SQRT_PI) * spec.mass_ratio
    if spec.cross_section.kind is CrossSectionKind.GAUSSIAN:
        g /= (1.0 + spec.cross_section.a) ** 2
    return g


def decoherence_rate_analytic(U0, model: CrossSectionModel):
    """First-jump estimate of the decay rate of a balanced pair ``+-U0``.

    ``Gamma(U0) - erf(U0) / U0`` for a constant cross section; the second term
    picks up a factor ``1 / (1 + a)`` for the Gaussian one. Both forms equal
    ``Gamma(U0) * (1 - <sech(K . U0)>)`` averaged over the jump density.
    """
    U0 = _check_u(U0)
    if U0 < SMALL_U:
        # leading terms cancel exactly; keep the series difference
        u2 = U0 * U0
        if model.kind is CrossSectionKind.CONSTANT:
            return u2 * (4.0 / 3.0 - 4.0 * u2 / 15.0) / SQRT_PI
        a = model.a
        b = 1.0 + a
        c2 = -2.0 * (a - 1.0) / (3.0 * b * b) + 2.0 / (3.0 * b)
        c4 = (3.0 * a * a - 6.0 * a - 1.0) / (15.0 * b ** 3) - 1.0 / (5.0 * b)
        return max(u2 * (c2 + u2 * c4) / SQRT_PI, 0.0)
    second = float(erf_over_u(U0))
    if model.kind is CrossSectionKind.GAUSSIAN:
        second /= 1.0 + model.a
    return total_rate(U0, model) - second


def rate_ratios(spec: GasSpec, U0):
    """Return ``(gamma_D / gamma_R, eta_D / gamma_R)``.

    ``eta_D = 2 / sqrt(pi)`` is the position-space decoherence rate of a slow
    tracer, so ``eta_D / gamma_R = (3/8) (M/m)`` for the constant model.
    """
    gR = relaxation_rate(spec)
    gD = decoherence_rate_analytic(U0, spec.cross_section)
    return gD / gR, 0.375 / spec.mass_ratio
