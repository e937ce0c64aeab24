"""Run configuration: schema validation and the physical-unit boundary.

Configs are YAML mappings with explicit units on every dimensional key
(amplitude_mm, nu_mm2_per_s, alpha_deg, ...); everything downstream of
this module is nondimensional.  Validation is strict: unknown keys are
rejected, every error names the offending key path, and the fully
resolved mapping (defaults filled in) is kept for the run manifest.
"""

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

import yaml

from .errors import ConfigError
from .geometry import BottomSpec
from .grid import PeriodicGrid
from .params import DimensionalFluidSpec, G_DEFAULT, Params, nondimensionalize
from .solvers import StepControl

EXPERIMENTS = (
    "stationary",
    "evolve",
    "sweep-rcrit",
    "reconstruct",
    "dispersion",
    "consistency",
    "metrics",
)

_TRANSIENT = ("evolve", "metrics")

_MISSING = object()


@dataclass(frozen=True)
class SolverSettings:
    tol: float = 1e-11
    max_iter: int = 25
    constraint: str = "flux"
    flux_target: float = 1.0
    continuation: bool = True
    continuation_start: float = 0.2
    continuation_step: float = 0.05


@dataclass(frozen=True)
class TimeSettings:
    t_end: float
    n_snapshots: int = 64
    rtol: float = 1e-6
    atol: float = 1e-8
    dt_init: float = 1e-3
    dt_max: float = 10.0
    max_steps: int = 500_000

    def snapshot_times(self) -> List[float]:
        return [self.t_end * k / self.n_snapshots for k in range(1, self.n_snapshots + 1)]

    def step_control(self) -> StepControl:
        return StepControl(rtol=self.rtol, atol=self.atol, dt_init=self.dt_init,
                           dt_max=self.dt_max, max_steps=self.max_steps)


@dataclass(frozen=True)
class RunConfig:
    experiment: str
    model: str
    bottom: BottomSpec
    grid: PeriodicGrid
    params: Params
    solver: SolverSettings
    time: Optional[TimeSettings]
    options: Dict[str, Any]
    resolved: Dict[str, Any] = field(repr=False, default_factory=dict)


class _Section:
    """One mapping level: typed key extraction with path-tagged errors.

    Accepted keys (and defaults for absent ones) are echoed into the
    resolved tree so the manifest can show the config exactly as the
    run used it; close() rejects keys the schema never asked for.
    """

    def __init__(self, raw: Any, path: str):
        if raw is None:
            raw = {}
        if not isinstance(raw, dict):
            raise ConfigError(f"{path or 'config'}: expected a mapping, got {type(raw).__name__}")
        self.raw = dict(raw)
        self.path = path
        self.resolved: Dict[str, Any] = {}

    def tag(self, key: str) -> str:
        return f"{self.path}.{key}" if self.path else key

    def take(self, key: str, kind: str, default=_MISSING, required: bool = False):
        if key not in self.raw:
            if required:
                raise ConfigError(f"missing required key {self.tag(key)!r}")
            value = None if default is _MISSING else default
            self.resolved[key] = value
            return value
        v = _coerce(self.raw.pop(key), kind, self.tag(key))
        self.resolved[key] = v
        return v

    def section(self, key: str) -> "_Section":
        sub = _Section(self.raw.pop(key, None), self.tag(key))
        self.resolved[key] = sub.resolved
        return sub

    def has(self, key: str) -> bool:
        return key in self.raw

    def close(self):
        if self.raw:
            extra = ", ".join(sorted(repr(k) for k in self.raw))
            raise ConfigError(f"unknown key(s) in {self.path or 'config'}: {extra}")


def _coerce(v, kind: str, tag: str):
    if kind == "float":
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"{tag}: expected a number, got {v!r}")
        return float(v)
    if kind == "int":
        if isinstance(v, bool) or not isinstance(v, int):
            raise ConfigError(f"{tag}: expected an integer, got {v!r}")
        return int(v)
    if kind == "bool":
        if not isinstance(v, bool):
            raise ConfigError(f"{tag}: expected true/false, got {v!r}")
        return v
    if kind == "str":
        if not isinstance(v, str):
            raise ConfigError(f"{tag}: expected a string, got {v!r}")
        return v
    if kind == "float_list":
        if not isinstance(v, (list, tuple)) or not v:
            raise ConfigError(f"{tag}: expected a non-empty list of numbers")
        return [_coerce(x, "float", tag) for x in v]
    if kind == "pair_list":
        if not isinstance(v, (list, tuple)) or not v:
            raise ConfigError(f"{tag}: expected a non-empty list of [a, b] pairs")
        out = []
        for item in v:
            if not isinstance(item, (list, tuple)) or len(item) != 2:
                raise ConfigError(f"{tag}: expected [a, b] pairs, got {item!r}")
            out.append((_coerce(item[0], "float", tag), _coerce(item[1], "float", tag)))
        return out
    raise AssertionError(kind)


def _positive(v: float, tag: str) -> float:
    if not v > 0.0:
        raise ConfigError(f"{tag}: must be positive, got {v}")
    return v


def load_config(path) -> RunConfig:
    """Read and validate a YAML run configuration file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed YAML in {path}: {exc}") from exc
    return parse_config(raw)


def parse_config(raw: Any) -> RunConfig:
    """Validate a config mapping and resolve it to run-ready objects."""
    top = _Section(raw, "")

    experiment = top.take("experiment", "str", required=True)
    if experiment not in EXPERIMENTS:
        raise ConfigError(
            f"experiment: must be one of {', '.join(EXPERIMENTS)}, got {experiment!r}")
    model = top.take("model", "str", required=True)
    if model not in ("wribl", "rwribl"):
        raise ConfigError(f"model: must be 'wribl' or 'rwribl', got {model!r}")

    bottom = _parse_bottom(top.section("bottom"))
    grid = _parse_grid(top.section("grid"))
    fluid = _parse_fluid(top.section("fluid")) if top.has("fluid") else None
    if fluid is None:
        top.resolved["fluid"] = None
    params = _parse_params(top.section("params"), fluid, bottom)
    solver = _parse_solver(top.section("solver"))

    if top.has("time"):
        if experiment not in _TRANSIENT:
            raise ConfigError(
                f"time: settings only apply to {' / '.join(_TRANSIENT)} experiments")
        time = _parse_time(top.section("time"))
    elif experiment in _TRANSIENT:
        raise ConfigError(f"missing required section 'time' for experiment {experiment!r}")
    else:
        time = None
        top.resolved["time"] = None

    options = _parse_options(top.section("options"), experiment, params)
    top.close()

    return RunConfig(
        experiment=experiment,
        model=model,
        bottom=bottom,
        grid=grid,
        params=params,
        solver=solver,
        time=time,
        options=options,
        resolved=top.resolved,
    )


def _parse_bottom(sec: _Section) -> BottomSpec:
    kind = sec.take("kind", "str", default="sinusoid")
    amp = _positive(sec.take("amplitude_mm", "float", required=True), sec.tag("amplitude_mm"))
    lam = _positive(sec.take("wavelength_mm", "float", required=True), sec.tag("wavelength_mm"))
    coeffs = None
    if kind == "fourier":
        coeffs = tuple(sec.take("fourier_coeffs", "pair_list", required=True))
    sec.close()
    try:
        bottom = BottomSpec(kind=kind, amplitude_hat=amp, wavelength_hat=lam,
                            fourier_coeffs=coeffs)
    except ValueError as exc:
        raise ConfigError(f"bottom: {exc}") from exc
    sec.resolved["fourier_coeffs"] = (
        None if coeffs is None else [list(c) for c in coeffs])
    return bottom


def _parse_grid(sec: _Section) -> PeriodicGrid:
    n_waves = sec.take("n_waves", "int", required=True)
    ppw = sec.take("points_per_wave", "int", required=True)
    fd_order = sec.take("fd_order", "int", default=2)
    sec.close()
    try:
        return PeriodicGrid(n_waves=n_waves, points_per_wave=ppw, fd_order=fd_order)
    except ValueError as exc:
        raise ConfigError(f"grid: {exc}") from exc


def _parse_fluid(sec: _Section) -> DimensionalFluidSpec:
    nu = sec.take("nu_mm2_per_s", "float", required=True)
    rho = sec.take("rho_g_per_cm3", "float", required=True)
    sigma = sec.take("sigma_mn_per_m", "float", required=True)
    g = sec.take("g_mm_per_s2", "float", default=G_DEFAULT)
    sec.close()
    try:
        return DimensionalFluidSpec(nu=nu, rho=rho, sigma=sigma, g=g)
    except ValueError as exc:
        raise ConfigError(f"fluid: {exc}") from exc


def _parse_params(sec: _Section, fluid: Optional[DimensionalFluidSpec],
                  bottom: BottomSpec) -> Params:
    alpha_deg = sec.take("alpha_deg", "float", required=True)
    if not 0.0 < alpha_deg <= 90.0:
        raise ConfigError(f"params.alpha_deg: must lie in (0, 90], got {alpha_deg}")
    r = _positive(sec.take("R", "float", required=True), sec.tag("R"))
    alpha = math.radians(alpha_deg)
    if fluid is not None:
        for key in ("delta", "Bi"):
            if sec.has(key):
                raise ConfigError(
                    f"params.{key}: derived from the fluid section; remove one of the two")
        zeta = sec.take("zeta", "float")
        sec.close()
        try:
            params = nondimensionalize(fluid, bottom, alpha=alpha, R=r, zeta=zeta)
        except ValueError as exc:
            raise ConfigError(f"params: {exc}") from exc
        sec.resolved["zeta"] = params.zeta
        return params
    delta = sec.take("delta", "float", required=True)
    zeta = sec.take("zeta", "float", required=True)
    bi = sec.take("Bi", "float", required=True)
    sec.close()
    try:
        return Params(alpha=alpha, delta=delta, zeta=zeta, Bi=bi, R=r)
    except ValueError as exc:
        raise ConfigError(f"params: {exc}") from exc


def _parse_solver(sec: _Section) -> SolverSettings:
    settings = SolverSettings(
        tol=_positive(sec.take("tol", "float", default=SolverSettings.tol),
                      sec.tag("tol")),
        max_iter=sec.take("max_iter", "int", default=SolverSettings.max_iter),
        constraint=sec.take("constraint", "str", default=SolverSettings.constraint),
        flux_target=_positive(
            sec.take("flux_target", "float", default=SolverSettings.flux_target),
            sec.tag("flux_target")),
        continuation=sec.take("continuation", "bool", default=SolverSettings.continuation),
        continuation_start=sec.take("continuation_start", "float",
                                    default=SolverSettings.continuation_start),
        continuation_step=_positive(
            sec.take("continuation_step", "float", default=SolverSettings.continuation_step),
            sec.tag("continuation_step")),
    )
    if settings.max_iter < 1:
        raise ConfigError(f"solver.max_iter: must be >= 1, got {settings.max_iter}")
    if settings.constraint not in ("flux", "mean", "mass"):
        raise ConfigError(
            f"solver.constraint: expected one of ['flux', 'mass', 'mean'], "
            f"got {settings.constraint!r}"
        )
    sec.close()
    return settings


def _parse_time(sec: _Section) -> TimeSettings:
    t = TimeSettings(
        t_end=_positive(sec.take("t_end", "float", required=True), sec.tag("t_end")),
        n_snapshots=sec.take("n_snapshots", "int", default=TimeSettings.n_snapshots),
        rtol=_positive(sec.take("rtol", "float", default=TimeSettings.rtol), sec.tag("rtol")),
        atol=_positive(sec.take("atol", "float", default=TimeSettings.atol), sec.tag("atol")),
        dt_init=_positive(sec.take("dt_init", "float", default=TimeSettings.dt_init),
                          sec.tag("dt_init")),
        dt_max=_positive(sec.take("dt_max", "float", default=TimeSettings.dt_max),
                         sec.tag("dt_max")),
        max_steps=sec.take("max_steps", "int", default=TimeSettings.max_steps),
    )
    if t.n_snapshots < 1:
        raise ConfigError(f"time.n_snapshots: must be >= 1, got {t.n_snapshots}")
    sec.close()
    return t


def _parse_perturbation(parent: _Section) -> Optional[Dict[str, Any]]:
    if not parent.has("perturbation"):
        parent.resolved["perturbation"] = None
        return None
    sec = parent.section("perturbation")
    kind = sec.take("kind", "str", default="bump")
    if kind not in ("bump", "harmonic"):
        raise ConfigError(f"{sec.tag('kind')}: must be 'bump' or 'harmonic', got {kind!r}")
    mode = sec.take("mode", "int", default=1)
    if mode < 1:
        raise ConfigError(f"{sec.tag('mode')}: must be >= 1, got {mode}")
    out = {
        "amplitude": sec.take("amplitude", "float", required=True),
        "width": _positive(sec.take("width", "float", default=2.0 * math.pi / 10.0),
                           sec.tag("width")),
        "center": sec.take("center", "float"),
        "kind": kind,
        "mode": mode,
    }
    sec.close()
    return out


def _parse_options(sec: _Section, experiment: str, params: Params) -> Dict[str, Any]:
    opts: Dict[str, Any] = {}
    if experiment in ("evolve", "metrics"):
        initial = sec.take("initial", "str", default="stationary")
        if initial not in ("stationary", "uniform"):
            raise ConfigError(
                f"options.initial: must be 'stationary' or 'uniform', got {initial!r}")
        opts["initial"] = initial
        opts["perturbation"] = _parse_perturbation(sec)
        if experiment == "metrics":
            tail = sec.take("tail_snapshots", "int", default=0)
            if tail < 0:
                raise ConfigError(f"options.tail_snapshots: must be >= 0, got {tail}")
            opts["tail_snapshots"] = tail
            opts["steady_tol"] = _positive(
                sec.take("steady_tol", "float", default=1e-7), sec.tag("steady_tol"))
            opts["min_period_corr"] = sec.take("min_period_corr", "float", default=0.5)
    elif experiment == "sweep-rcrit":
        opts["zeta_values"] = sec.take("zeta_values", "float_list", required=True)
        if any(z < 0.0 for z in opts["zeta_values"]):
            raise ConfigError("options.zeta_values: waviness must be >= 0")
        bracket = sec.take("bracket", "float_list", default=[0.5, 2.0])
        if len(bracket) != 2 or not bracket[0] < bracket[1] or bracket[0] <= 0.0:
            raise ConfigError(
                f"options.bracket: expected [lo, hi] with 0 < lo < hi, got {bracket}")
        opts["bracket"] = (bracket[0], bracket[1])
        opts["tol"] = _positive(sec.take("tol", "float", default=0.05), sec.tag("tol"))
        opts["horizon"] = _positive(sec.take("horizon", "float", default=500.0),
                                    sec.tag("horizon"))
        opts["max_doublings"] = sec.take("max_doublings", "int", default=1)
        opts["k_up"] = _positive(sec.take("k_up", "float", default=10.0), sec.tag("k_up"))
        opts["k_down"] = _positive(sec.take("k_down", "float", default=0.1),
                                   sec.tag("k_down"))
        if not opts["k_down"] < 1.0 < opts["k_up"]:
            raise ConfigError(
                f"options: need k_down < 1 < k_up, got {opts['k_down']}, {opts['k_up']}")
        opts["perturbation"] = _parse_perturbation(sec)
    elif experiment == "reconstruct":
        opts["n_z"] = sec.take("n_z", "int", default=64)
        if opts["n_z"] < 2:
            raise ConfigError(f"options.n_z: must be >= 2, got {opts['n_z']}")
        opts["dimensional"] = sec.take("dimensional", "bool", default=False)
        if opts["dimensional"] and params.fluid is None:
            raise ConfigError(
                "options.dimensional: requires a fluid section to anchor the scales")
        opts["streamline_seeds"] = sec.take("streamline_seeds", "pair_list")
        opts["streamline_step"] = _positive(
            sec.take("streamline_step", "float", default=0.02),
            sec.tag("streamline_step"))
        opts["streamline_max_steps"] = sec.take("streamline_max_steps", "int", default=4000)
    elif experiment == "dispersion":
        if params.zeta != 0.0:
            raise ConfigError(
                "dispersion experiment requires params.zeta = 0 (flat-film theory)")
        k_min = _positive(sec.take("k_min", "float", default=1e-3), sec.tag("k_min"))
        k_max = sec.take("k_max", "float", default=10.0)
        if not k_max > k_min:
            raise ConfigError(f"options.k_max: must exceed k_min, got {k_max}")
        n_k = sec.take("n_k", "int", default=200)
        if n_k < 2:
            raise ConfigError(f"options.n_k: must be >= 2, got {n_k}")
        opts.update(k_min=k_min, k_max=k_max, n_k=n_k)
    elif experiment == "consistency":
        opts["epsilons"] = sec.take("epsilons", "float_list",
                                    default=[0.1, 0.05, 0.025])
        if any(not e > 0.0 for e in opts["epsilons"]):
            raise ConfigError("options.epsilons: all entries must be positive")
        opts["thickness_amplitude"] = sec.take("thickness_amplitude", "float", default=0.1)
    # stationary takes no options
    sec.close()
    return opts
