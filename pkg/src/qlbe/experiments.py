"""Experiment drivers: ensembles, reductions and CSV result tables.

Realization ``i`` always draws from ``RngStream(master_seed, i)``. Workers
receive contiguous index blocks and the blocks are concatenated in index
order before any reduction, so the output bytes do not depend on
``n_workers``.
"""

from __future__ import annotations

import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .coherence import SuperpositionState, coherence_ensemble
from .config import RunConfig, emit_config
from .errors import ParameterError
from .physics import (
    CrossSectionModel,
    decoherence_rate_analytic,
    relaxation_rate,
    total_rate,
)
from .stats import coherence_curve, ensemble_series, fit_exponential_rate
from .trajectory import eigenstate_ensemble

__all__ = ["ResultTable", "COLUMNS", "output_grid", "run", "format_number"]

_MOMENT_COLUMNS = [
    "time",
    "mean_Ux", "mean_Uy", "mean_Uz", "meanU_sq", "mean_Usq", "k2", "k3", "k4",
    "mean_Ux_se", "mean_Uy_se", "mean_Uz_se", "meanU_sq_se", "mean_Usq_se", "k2_se", "k3_se", "k4_se",
]

COLUMNS = {
    "rates": ["U", "gamma_constant", "gamma_gaussian"],
    "relax": _MOMENT_COLUMNS + ["approx_meanU_sq", "approx_mean_Usq"],
    "cumulants": list(_MOMENT_COLUMNS),
    "decohere": ["time", "C", "C_se"],
}

# fits stop once the curve is within this many standard errors of zero
MIN_SNR = 10.0


def format_number(x):
    return format(float(x), ".17g")


@dataclass
class ResultTable:
    """Columns of one experiment plus header metadata and a fit summary."""

    columns: list
    data: np.ndarray
    config: RunConfig
    fit: dict = field(default_factory=dict)

    def column(self, name):
        return self.data[:, self.columns.index(name)]

    def __getitem__(self, name):
        return self.column(name)

    def to_csv(self):
        buf = io.StringIO()
        buf.write(f"# qlbe {__version__}\n")
        buf.write(f"# experiment: {self.config.experiment}\n")
        buf.write(f"# seed: {self.config.master_seed}\n")
        for line in emit_config(self.config, execution=False).splitlines():
            buf.write(f"# config: {line}\n")
        buf.write(",".join(self.columns) + "\n")
        for row in self.data:
            buf.write(",".join(format_number(v) for v in row) + "\n")
        for key, value in self.fit.items():
            v = format_number(value) if isinstance(value, (float, np.floating)) else str(value)
            buf.write(f"# fit: {key} = {v}\n")
        return buf.getvalue()

    def write(self, path):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.to_csv())


def output_grid(cfg: RunConfig):
    """Uniform grid with ``n_output_times`` points from 0 to ``t_final``."""
    return np.linspace(0.0, cfg.t_final, cfg.n_output_times)


def _blocks(n, workers):
    edges = np.linspace(0, n, min(workers, n) + 1).astype(np.int64)
    return [(int(lo), int(hi - lo)) for lo, hi in zip(edges[:-1], edges[1:]) if hi > lo]


def _eigen_block(cfg, start, count):
    grid = output_grid(cfg)
    u0 = None if cfg.initial == "equilibrium" else cfg.u0
    return eigenstate_ensemble(cfg.gas, grid, count, cfg.master_seed, U0=u0, start=start)


def _pair(cfg):
    u = np.asarray(cfg.u0, dtype=float)
    return SuperpositionState.from_amplitudes([u, -u], list(cfg.amplitudes))


def _coherence_block(cfg, start, count):
    return coherence_ensemble(cfg.gas, _pair(cfg), output_grid(cfg), count, cfg.master_seed, start=start)


def _gather(func, cfg: RunConfig):
    blocks = _blocks(cfg.n_realizations, cfg.n_workers)
    if len(blocks) == 1:
        parts = [func(cfg, *blocks[0])]
    else:
        with ProcessPoolExecutor(max_workers=len(blocks)) as pool:
            futures = [pool.submit(func, cfg, lo, cnt) for lo, cnt in blocks]
            parts = [f.result() for f in futures]
    return np.concatenate(parts, axis=0)


def _safe_fit(times, values, errors, floor):
    try:
        return fit_exponential_rate(times, values, floor, errors=errors, min_snr=MIN_SNR)
    except ParameterError:
        return float("nan"), float("nan"), float("nan")


def _run_rates(cfg):
    u = np.linspace(0.0, cfg.u_max, cfg.n_u)
    const = CrossSectionModel.constant()
    gauss = CrossSectionModel.gaussian(cfg.a)
    data = np.column_stack([
        u,
        [total_rate(x, const) for x in u],
        [total_rate(x, gauss) for x in u],
    ])
    return ResultTable(COLUMNS["rates"], data, cfg)


def _moment_table(cfg, s):
    return [
        s.times,
        s.mean[:, 0], s.mean[:, 1], s.mean[:, 2], s.mean_sq, s.sq_mean, s.k2, s.k3, s.k4,
        s.mean_se[:, 0], s.mean_se[:, 1], s.mean_se[:, 2], s.mean_sq_se, s.sq_mean_se,
        s.k2_se, s.k3_se, s.k4_se,
    ]


def _run_relax(cfg):
    grid = output_grid(cfg)
    s = ensemble_series(grid, _gather(_eigen_block, cfg))
    gas = cfg.gas
    g_r = relaxation_rate(gas)
    eq = 1.5 * gas.mass_ratio
    decay = np.exp(-g_r * grid)
    cols = _moment_table(cfg, s) + [s.mean_sq[0] * decay, (s.sq_mean[0] - eq) * decay + eq]
    fit = {}
    rate, _, r2 = _safe_fit(grid, s.mean_sq, s.mean_sq_se, cfg.fit_floor)
    fit["gamma_R_fit"] = rate
    fit["gamma_R_fit_r2"] = r2
    rate, _, r2 = _safe_fit(grid, np.abs(s.sq_mean - eq), s.sq_mean_se, cfg.fit_floor)
    fit["energy_rate_fit"] = rate
    fit["energy_rate_fit_r2"] = r2
    fit["gamma_R_analytic"] = g_r
    fit["mean_Usq_eq"] = eq
    return ResultTable(COLUMNS["relax"], np.column_stack(cols), cfg, fit)


def _run_cumulants(cfg):
    grid = output_grid(cfg)
    s = ensemble_series(grid, _gather(_eigen_block, cfg))
    fit = {}
    for name in ("k3", "k4"):
        v = getattr(s, name)
        j = int(np.argmax(np.abs(v)))
        fit[f"max_abs_{name}"] = float(abs(v[j]))
        fit[f"max_abs_{name}_time"] = float(grid[j])
        fit[f"max_abs_{name}_se"] = float(getattr(s, name + "_se")[j])
        fit[f"max_abs_{name}_over_k2"] = float(abs(v[j]) / s.k2[j]) if s.k2[j] > 0 else float("nan")
    return ResultTable(COLUMNS["cumulants"], np.column_stack(_moment_table(cfg, s)), cfg, fit)


def _run_decohere(cfg):
    grid = output_grid(cfg)
    contrib = _gather(_coherence_block, cfg)
    s_c, s_se = coherence_curve(contrib, grid)
    rate, _, r2 = _safe_fit(grid, s_c, s_se, cfg.fit_floor)
    fit = {
        "gamma_D_fit": rate,
        "gamma_D_fit_r2": r2,
        "gamma_D_analytic": decoherence_rate_analytic(float(np.linalg.norm(cfg.u0)), cfg.gas.cross_section),
        "gamma_R_analytic": relaxation_rate(cfg.gas),
    }
    return ResultTable(COLUMNS["decohere"], np.column_stack([grid, s_c, s_se]), cfg, fit)


_RUNNERS = {
    "rates": _run_rates,
    "relax": _run_relax,
    "cumulants": _run_cumulants,
    "decohere": _run_decohere,
}


def run(cfg: RunConfig) -> ResultTable:
    """Execute ``cfg`` and return its :class:`ResultTable` (nothing is written)."""
    return _RUNNERS[cfg.experiment](cfg)
