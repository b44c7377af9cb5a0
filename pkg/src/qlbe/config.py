"""Run configuration in a flat ``key = value`` text format.

Lines are ``key = value``; ``#`` starts a comment and blank lines are
ignored. Every key has an explicit default (see :data:`DEFAULTS`), so an
empty file plus an experiment name is a complete configuration.
:func:`emit_config` writes the effective configuration back in the same
format and ``parse_config(emit_config(c)) == c``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace

from .errors import ConfigError, ParameterError
from .physics import CrossSectionModel, GasSpec

__all__ = [
    "EXPERIMENTS",
    "INITIAL_CONDITIONS",
    "DEFAULTS",
    "RunConfig",
    "parse_config",
    "parse_pairs",
    "build_config",
    "emit_config",
    "config_from_header",
    "with_overrides",
]

EXPERIMENTS = ("rates", "relax", "cumulants", "decohere")
INITIAL_CONDITIONS = ("sharp", "equilibrium", "superposition")

ALIASES = {"seed": "master_seed", "workers": "n_workers", "n_real": "n_realizations"}

# key -> (default, help)
DEFAULTS = {
    "experiment": ("relax", "one of rates, relax, cumulants, decohere"),
    "mass_ratio": (1.0, "m/M, positive"),
    "cross_section": ("constant", "constant or gaussian"),
    "a": (1.0, "Gaussian width parameter, positive (ignored for constant)"),
    "phase_const": (0.0, "phase constant of the free evolution"),
    "n_realizations": (10000, "number of realizations, positive"),
    "t_final": (10.0, "final time in units of 1/Gamma0, positive"),
    "n_output_times": (101, "uniform output grid size including 0 and t_final, >= 2"),
    "initial": (None, "sharp, equilibrium or superposition (default: superposition for decohere, sharp otherwise)"),
    "u0": ((1.0, 0.0, 0.0), "initial momentum U0 as x,y,z; the pair is +U0, -U0"),
    "amplitudes": ((1.0, 1.0), "branch amplitudes of the pair, complex literals allowed"),
    "master_seed": (0, "master seed, 0 <= seed < 2**64"),
    "n_workers": (1, "worker processes, positive"),
    "output": ("-", "output path, - for stdout"),
    "fit_floor": (0.01, "fit window ends where the curve drops below this fraction of its start"),
    "u_max": (10.0, "largest U of the rates table, positive"),
    "n_u": (201, "rates table size, >= 2"),
}


@dataclass(frozen=True)
class RunConfig:
    experiment: str = "relax"
    mass_ratio: float = 1.0
    cross_section: str = "constant"
    a: float = 1.0
    phase_const: float = 0.0
    n_realizations: int = 10000
    t_final: float = 10.0
    n_output_times: int = 101
    initial: str = "sharp"
    u0: tuple = (1.0, 0.0, 0.0)
    amplitudes: tuple = (1.0, 1.0)
    master_seed: int = 0
    # execution settings: they never change results, so equality and the
    # result-file echo ignore them
    n_workers: int = field(default=1, compare=False)
    output: str = field(default="-", compare=False)
    fit_floor: float = 0.01
    u_max: float = 10.0
    n_u: int = 201

    @property
    def gas(self) -> GasSpec:
        if self.cross_section == "gaussian":
            model = CrossSectionModel.gaussian(self.a)
        else:
            model = CrossSectionModel.constant()
        return GasSpec(self.mass_ratio, model, self.phase_const)


def _real(key, text):
    try:
        v = float(text)
    except ValueError:
        raise ConfigError(key, f"expected a real number, got {text!r}") from None
    if not math.isfinite(v):
        raise ConfigError(key, f"must be finite, got {text!r}")
    return v


def _int(key, text):
    try:
        return int(str(text).strip())
    except ValueError:
        raise ConfigError(key, f"expected an integer, got {text!r}") from None


def _choice(key, text, options):
    v = str(text).strip().lower()
    if v not in options:
        raise ConfigError(key, f"expected one of {', '.join(options)}, got {text!r}")
    return v


def _vector(key, text):
    parts = [p for p in str(text).replace(" ", "").split(",")]
    if len(parts) != 3:
        raise ConfigError(key, f"expected x,y,z, got {text!r}")
    return tuple(_real(key, p) for p in parts)


def _amplitudes(key, text):
    parts = str(text).replace(" ", "").split(",")
    if len(parts) != 2:
        raise ConfigError(key, f"expected two amplitudes, got {text!r}")
    out = []
    for p in parts:
        try:
            c = complex(p)
        except ValueError:
            raise ConfigError(key, f"bad amplitude {p!r}") from None
        if not (math.isfinite(c.real) and math.isfinite(c.imag)):
            raise ConfigError(key, "amplitudes must be finite")
        out.append(c.real if c.imag == 0 else c)
    if all(c == 0 for c in out):
        raise ConfigError(key, "amplitudes must not both vanish")
    return tuple(out)


def parse_pairs(text):
    """Raw ``{key: value}`` strings from config text, aliases resolved."""
    pairs = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", f"expected key = value, got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        key = ALIASES.get(key, key)
        if key not in DEFAULTS:
            raise ConfigError(key, "unknown key")
        if key in pairs:
            raise ConfigError(key, "given more than once")
        pairs[key] = value
    return pairs


def build_config(pairs) -> RunConfig:
    """Validate raw string values and fill in defaults."""
    unknown = set(pairs) - set(DEFAULTS)
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown key")
    p = dict(pairs)
    kw = {}
    kw["experiment"] = _choice("experiment", p.get("experiment", DEFAULTS["experiment"][0]), EXPERIMENTS)
    for key in ("mass_ratio", "t_final", "u_max", "a"):
        if key in p:
            kw[key] = _real(key, p[key])
            if kw[key] <= 0:
                raise ConfigError(key, f"must be positive, got {p[key]!r}")
    if "phase_const" in p:
        kw["phase_const"] = _real("phase_const", p["phase_const"])
    if "cross_section" in p:
        kw["cross_section"] = _choice("cross_section", p["cross_section"], ("constant", "gaussian"))
    for key, lo in (("n_realizations", 2), ("n_workers", 1), ("n_output_times", 2), ("n_u", 2)):
        if key in p:
            kw[key] = _int(key, p[key])
            if kw[key] < lo:
                raise ConfigError(key, f"must be >= {lo}, got {p[key]!r}")
    if "master_seed" in p:
        kw["master_seed"] = _int("master_seed", p["master_seed"])
        if not 0 <= kw["master_seed"] < 2**64:
            raise ConfigError("master_seed", "must lie in [0, 2**64)")
    if "fit_floor" in p:
        kw["fit_floor"] = _real("fit_floor", p["fit_floor"])
        if not 0 < kw["fit_floor"] < 1:
            raise ConfigError("fit_floor", "must lie in (0, 1)")
    if "u0" in p:
        kw["u0"] = _vector("u0", p["u0"])
    if "amplitudes" in p:
        kw["amplitudes"] = _amplitudes("amplitudes", p["amplitudes"])
    if "output" in p:
        if not p["output"]:
            raise ConfigError("output", "must not be empty")
        kw["output"] = p["output"]
    default_initial = "superposition" if kw["experiment"] == "decohere" else "sharp"
    kw["initial"] = _choice("initial", p.get("initial", default_initial), INITIAL_CONDITIONS)

    cfg = RunConfig(**kw)
    exp = cfg.experiment
    if exp == "decohere" and cfg.initial != "superposition":
        raise ConfigError("initial", "decohere needs initial = superposition")
    if exp in ("relax", "cumulants") and cfg.initial == "superposition":
        raise ConfigError("initial", f"{exp} needs initial = sharp or equilibrium")
    if exp == "decohere" and not any(cfg.u0):
        raise ConfigError("u0", "superposition branches coincide for u0 = 0")
    return cfg


def parse_config(text, overrides=None) -> RunConfig:
    """Parse config text; ``overrides`` (raw strings) win over file keys."""
    pairs = parse_pairs(text)
    for key, value in (overrides or {}).items():
        if value is not None:
            pairs[ALIASES.get(key, key)] = str(value)
    return build_config(pairs)


def _fmt(v):
    if isinstance(v, tuple):
        return ",".join(_fmt(x) for x in v)
    if isinstance(v, complex):
        return repr(v).strip("()")
    if isinstance(v, float):
        return repr(v)
    return str(v)


def emit_config(cfg: RunConfig, execution=True):
    """Effective configuration as ``key = value`` lines.

    With ``execution=False`` the keys that cannot affect results
    (``n_workers``, ``output``) are left out.
    """
    return "".join(
        f"{f.name} = {_fmt(getattr(cfg, f.name))}\n"
        for f in fields(cfg)
        if execution or f.compare
    )


def config_from_header(csv_text) -> RunConfig:
    """Recover the :class:`RunConfig` echoed in a result file's header."""
    prefix = "# config: "
    lines = [ln[len(prefix):] for ln in csv_text.splitlines() if ln.startswith(prefix)]
    if not lines:
        raise ParameterError("no config echo found")
    return parse_config("\n".join(lines))


def with_overrides(cfg: RunConfig, **changes) -> RunConfig:
    """Re-validated copy with ``changes`` applied."""
    merged = replace(cfg, **changes)
    return parse_config(emit_config(merged))
