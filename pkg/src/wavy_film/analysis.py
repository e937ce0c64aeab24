"""Stability diagnostics and wave-pattern metrics.

Flat-bottom linear stability is available in closed form from the
normal-mode linearization about the uniform film.  Over a wavy bottom,
stability is probed in the time domain: perturb the stationary state,
integrate, and classify growth or decay of the L2 deviation.  A
bisection on the Reynolds number turns the classifier into critical-R
sweeps over the waviness.  Saturated time series are reduced to pulse
amplitude, dominant wave count and propagation speed.
"""

from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import FilmRuptureError, SolverError
from .geometry import BottomSpec, GeometryField, expand_geometry
from .grid import PeriodicGrid
from .model import MODELS, StateFields
from .params import Params
from .solvers import (
    StepControl,
    TimeSeries,
    inject_perturbation,
    integrate,
    solve_stationary,
)

Array = np.ndarray

_TWO_PI = 2.0 * np.pi


# ---------------------------------------------------------------------------
# flat-bottom dispersion relation


def flat_dispersion(p: Params, k, model: str = "rwribl"):
    """Leading growth rate of the uniform film at wave number k.

    Normal modes (F, Q) = (1, 1) + (F', Q') e^(ikX + lam T) reduce the
    flat-bottom system to a 2x2 eigenproblem per k; the eigenvalue with
    the larger real part is returned (complex growth rate, Im part the
    oscillation frequency).  Both model variants share this
    linearization: the regularization factor equals one at the uniform
    state and multiplies a residual that vanishes there, and the
    second-order inertia correction is quadratic in dX(Q).

    Accepts scalar or array k; rejects wavy setups (zeta must be zero).
    """
    if model not in MODELS:
        raise ValueError(f"unknown model {model!r}")
    if p.zeta != 0.0:
        raise ValueError("dispersion relation requires a flat bottom (zeta=0)")
    ik = 1j * np.asarray(k, dtype=float)
    dr = p.delta * p.R
    a = (
        7.5
        + ik * (9.0 * dr / 7.0 - 2.5 * p.delta * p.cot_alpha)
        + 2.5 * p.Bi * p.delta * ik**3
        - 6.0 * p.delta**2 * ik**2
    )
    b = -2.5 - (17.0 / 7.0) * dr * ik + 4.5 * p.delta**2 * ik**2
    tr = b / dr
    disc = np.sqrt(tr**2 - 4.0 * ik * a / dr)
    lam1 = 0.5 * (tr + disc)
    lam2 = 0.5 * (tr - disc)
    lam = np.where(lam1.real >= lam2.real, lam1, lam2)
    if np.isscalar(k):
        return complex(lam)
    return lam


def dispersion_critical_reynolds(
    p: Params,
    *,
    model: str = "rwribl",
    bracket: Tuple[float, float] = (0.01, 50.0),
    tol: float = 1e-4,
    k_probe: float = 1e-3,
) -> float:
    """Onset Reynolds number of the long-wave instability, flat bottom.

    Bisects R on the sign of Re lam(k_probe), i.e. on the curvature of
    the growth-rate curve at k = 0 (the zero mode pins lam(0) = 0, so a
    small probe wave number reads the curvature sign directly).  If the
    lower bracket endpoint is already unstable the onset lies below the
    bracket and that endpoint is returned.  Raises ValueError when the
    upper endpoint is still stable.
    """

    def unstable(R: float) -> bool:
        return flat_dispersion(p.with_r(R), k_probe, model).real > 0.0

    lo, hi = float(bracket[0]), float(bracket[1])
    if not 0.0 < lo < hi:
        raise ValueError(f"bad bracket {bracket}")
    if unstable(lo):
        return lo
    if not unstable(hi):
        raise ValueError(f"no instability onset inside bracket {bracket}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if unstable(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# time-domain stability classification


@dataclass(frozen=True)
class PerturbationConfig:
    """Multiplicative perturbation applied to the stationary film.

    The default is a localized gaussian bump; kind "harmonic" selects
    a single domain Fourier mode instead (width is then unused and
    center acts as the phase reference).
    """

    amplitude: float = 0.05
    width: float = _TWO_PI / 10.0
    center: Optional[float] = None
    kind: str = "bump"
    mode: int = 1


@dataclass(frozen=True)
class ClassifyOptions:
    """Decision thresholds for the growth/decay classifier.

    The deviation norm must exceed k_up times its initial value for an
    unstable verdict, or drop below k_down times for a stable one,
    within the horizon; otherwise the horizon is doubled up to
    max_doublings times before giving up with an inconclusive verdict.
    """

    k_up: float = 10.0
    k_down: float = 0.1
    horizon: float = 500.0
    max_doublings: int = 1


@dataclass(frozen=True)
class StabilityVerdict:
    reynolds: float
    verdict: str  # stable | unstable | inconclusive
    growth_times: Array
    growth_metric: Array
    classification_time: Optional[float]

    def __post_init__(self):
        if self.verdict not in ("stable", "unstable", "inconclusive"):
            raise ValueError(f"bad verdict {self.verdict!r}")


def classify_stability(
    geom: GeometryField,
    p: Params,
    model: str = "rwribl",
    *,
    perturbation: Optional[PerturbationConfig] = None,
    options: Optional[ClassifyOptions] = None,
    control: Optional[StepControl] = None,
    init: Optional[StateFields] = None,
) -> StabilityVerdict:
    """Perturb the stationary state and classify growth or decay.

    Solves the stationary problem (failures propagate), injects the
    configured bump, and integrates while tracking the deviation norm
    ||F - F_s||_2.  Film rupture during the run counts as unstable: the
    deviation left the linear regime entirely.  init warm-starts the
    stationary solve (useful along parameter sweeps).
    """
    pert = perturbation or PerturbationConfig()
    opt = options or ClassifyOptions()
    stat = solve_stationary(geom, p, model=model, init=init)
    f_base = stat.state.F
    dX = geom.grid.dX

    def deviation(F: Array) -> float:
        return float(np.sqrt(np.sum((F - f_base) ** 2) * dX))

    state = inject_perturbation(
        stat.state, geom, p,
        amplitude=pert.amplitude, center=pert.center, width=pert.width,
        kind=pert.kind, mode=pert.mode,
    )
    g0 = deviation(state.F)
    if g0 <= 0.0:
        raise ValueError("perturbation left the stationary state unchanged")
    up, down = opt.k_up * g0, opt.k_down * g0

    times: List[float] = [0.0]
    metric: List[float] = [g0]
    verdict: Optional[str] = None
    t_cross: Optional[float] = None
    t_offset = 0.0

    def monitor(t: float, s: StateFields) -> bool:
        nonlocal verdict, t_cross
        g = deviation(s.F)
        times.append(t_offset + t)
        metric.append(g)
        if g >= up:
            verdict, t_cross = "unstable", t_offset + t
            return True
        if g <= down:
            verdict, t_cross = "stable", t_offset + t
            return True
        return False

    for _ in range(opt.max_doublings + 1):
        try:
            ts = integrate(state, geom, p, model, opt.horizon,
                           control=control, monitor=monitor)
        except FilmRuptureError as exc:
            verdict = "unstable"
            t_cross = t_offset + exc.t if exc.t is not None else None
            break
        if verdict is not None:
            break
        state = ts.final
        t_offset += opt.horizon

    return StabilityVerdict(
        reynolds=p.R,
        verdict=verdict or "inconclusive",
        growth_times=np.asarray(times),
        growth_metric=np.asarray(metric),
        classification_time=t_cross,
    )


# ---------------------------------------------------------------------------
# critical Reynolds number


@dataclass(frozen=True)
class CriticalReynoldsPoint:
    zeta: float
    r_crit: float
    tolerance: float
    delta_at_crit: float
    bracket: Tuple[float, float]


def _bisect_threshold(
    unstable: Callable[[float], bool],
    lo: float,
    hi: float,
    tol: float,
) -> Tuple[float, float, float]:
    """Bisect a monotone bool transition; returns (mid, lo, hi).

    Requires unstable(lo) false and unstable(hi) true; shrinks the
    bracket until hi - lo <= 2 tol, so the midpoint is within tol of
    the transition.
    """
    if unstable(lo):
        raise ValueError(f"lower bracket endpoint R={lo} is already unstable")
    if not unstable(hi):
        raise ValueError(f"upper bracket endpoint R={hi} is still stable")
    while hi - lo > 2.0 * tol:
        mid = 0.5 * (lo + hi)
        if unstable(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi), lo, hi


def critical_reynolds(
    geom: GeometryField,
    base: Params,
    *,
    model: str = "rwribl",
    bracket: Tuple[float, float] = (0.5, 2.0),
    tol: float = 0.05,
    perturbation: Optional[PerturbationConfig] = None,
    options: Optional[ClassifyOptions] = None,
    control: Optional[StepControl] = None,
) -> CriticalReynoldsPoint:
    """Bisection on R with the time-domain classifier.

    base provides everything but R; base.with_r keeps the film
    parameter consistent when a fluid spec is attached.  Inconclusive
    classifications abort the bisection rather than silently biasing
    the bracket.
    """
    warm: Dict[str, Optional[StateFields]] = {"state": None}

    def unstable(R: float) -> bool:
        v = classify_stability(
            geom, base.with_r(R), model,
            perturbation=perturbation, options=options, control=control,
            init=warm["state"],
        )
        if v.verdict == "inconclusive":
            raise SolverError(f"stability classification inconclusive at R={R:g}")
        return v.verdict == "unstable"

    mid, lo, hi = _bisect_threshold(unstable, float(bracket[0]), float(bracket[1]), tol)
    return CriticalReynoldsPoint(
        zeta=base.zeta,
        r_crit=mid,
        tolerance=0.5 * (hi - lo),
        delta_at_crit=base.with_r(mid).delta,
        bracket=(lo, hi),
    )


def critical_reynolds_sweep(
    zeta_values: Sequence[float],
    base: Params,
    bottom: BottomSpec,
    *,
    model: str = "rwribl",
    n_waves: int = 8,
    points_per_wave: int = 100,
    bracket: Tuple[float, float] = (0.5, 2.0),
    tol: float = 0.05,
    perturbation: Optional[PerturbationConfig] = None,
    options: Optional[ClassifyOptions] = None,
    control: Optional[StepControl] = None,
) -> List[CriticalReynoldsPoint]:
    """Critical Reynolds number for each waviness, ordered by zeta.

    Every point is an independent job (geometry rebuilt per zeta, no
    state shared), so callers may fan the points out to worker
    processes and merge by zeta; this reference implementation runs
    them sequentially in sorted order.
    """
    points = []
    for zeta in sorted(float(z) for z in zeta_values):
        grid = PeriodicGrid(n_waves=n_waves, points_per_wave=points_per_wave)
        geom = expand_geometry(bottom, grid, zeta)
        points.append(
            critical_reynolds(
                geom, base.with_zeta(zeta),
                model=model, bracket=bracket, tol=tol,
                perturbation=perturbation, options=options, control=control,
            )
        )
    return points


# ---------------------------------------------------------------------------
# pattern metrics


@dataclass(frozen=True)
class PatternMetrics:
    """Reduced description of a saturated wave pattern.

    status is one of steady | periodic | inconclusive.  amplitude is
    the largest peak-to-trough excursion any single point sees over one
    temporal period, wave_count the dominant spatial mode of the
    traveling part of Q, speed the downstream phase speed, period the
    temporal period of the probe signal.  Non-periodic input yields
    inconclusive with NaN metrics and the raw numbers in diagnostics.
    """

    status: str
    amplitude: float
    wave_count: int
    speed: float
    period: float
    diagnostics: Dict[str, float] = field(default_factory=dict)


def _parabolic_offset(ym: float, y0: float, yp: float) -> float:
    denom = ym - 2.0 * y0 + yp
    if denom == 0.0:
        return 0.0
    off = 0.5 * (ym - yp) / denom
    return float(np.clip(off, -1.0, 1.0))


def _autocorr_period(signal: Array, min_corr: float) -> Tuple[Optional[float], float]:
    """First local autocorrelation peak above min_corr, in samples."""
    s = signal - np.mean(signal)
    n = s.size
    var = float(np.dot(s, s))
    if var == 0.0:
        return None, 0.0
    # windowed linear autocorrelation, normalized by the window's own
    # autocorrelation: the raw sum tapers with the lag and its edge
    # terms ripple at the signal frequency, both of which bias the peak
    # position; the Hann weights kill the edge terms and the ratio
    # removes the taper
    w = 0.5 * (1.0 - np.cos(2.0 * np.pi * np.arange(n) / n))
    nfft = 2 * n

    def _acorr(x):
        spec = np.fft.rfft(x, nfft)
        return np.fft.irfft(spec * np.conj(spec), nfft)[:n]

    ac = _acorr(s * w)
    ww = _acorr(w)
    n_search = int(0.75 * n)
    ac = ac[:n_search] / ww[:n_search]
    ac /= ac[0]
    best = 0.0
    for lag in range(2, n_search - 1):
        if ac[lag] >= ac[lag - 1] and ac[lag] > ac[lag + 1]:
            best = max(best, float(ac[lag]))
            if ac[lag] >= min_corr:
                off = _parabolic_offset(ac[lag - 1], ac[lag], ac[lag + 1])
                return lag + off, float(ac[lag])
    return None, best


def _circular_shift(ref: Array, cur: Array) -> float:
    """Displacement (in samples) maximizing the circular cross-correlation."""
    n = ref.size
    corr = np.fft.irfft(np.conj(np.fft.rfft(ref)) * np.fft.rfft(cur), n)
    i0 = int(np.argmax(corr))
    off = _parabolic_offset(corr[(i0 - 1) % n], corr[i0], corr[(i0 + 1) % n])
    shift = i0 + off
    if shift > 0.5 * n:
        shift -= n
    return float(shift)


def pattern_metrics(
    series: TimeSeries,
    *,
    steady_tol: float = 1e-7,
    min_period_corr: float = 0.5,
) -> PatternMetrics:
    """Reduce a uniformly sampled time series to pattern numbers.

    Feed the converged tail of a run, sampled at a fixed stride (via
    snapshot_times); the temporal period comes from the autocorrelation
    of the probe point with the largest excursion, the amplitude is the
    per-point max - min of F over the final period, the wave count is
    the dominant mode of the spatial power spectrum of Q with its
    time-averaged (bottom-locked) part removed, and the speed comes
    from circular cross-correlation of consecutive snapshots.
    """
    times = np.asarray(series.times, dtype=float)
    if times.size < 8:
        raise ValueError("need at least 8 snapshots for pattern metrics")
    dts = np.diff(times)
    dt = float(np.mean(dts))
    if np.max(np.abs(dts - dt)) > 1e-6 * dt:
        raise ValueError("pattern metrics require uniform snapshot spacing")

    F = series.thickness_matrix()
    Q = series.flux_matrix()
    grid = series.final.grid

    point_range = F.max(axis=0) - F.min(axis=0)
    max_range = float(point_range.max())
    if max_range < steady_tol:
        return PatternMetrics(
            status="steady", amplitude=0.0, wave_count=0, speed=0.0, period=0.0,
            diagnostics={"max_temporal_range": max_range},
        )

    probe = int(np.argmax(point_range))
    lag, corr_peak = _autocorr_period(F[:, probe], min_period_corr)
    if lag is None or lag * dt >= 0.5 * (times[-1] - times[0]):
        return PatternMetrics(
            status="inconclusive",
            amplitude=float("nan"), wave_count=0,
            speed=float("nan"), period=float("nan"),
            diagnostics={
                "max_temporal_range": max_range,
                "autocorr_peak": corr_peak,
            },
        )
    period = lag * dt

    # analysis window: the last full period
    n_win = max(int(np.ceil(lag)) + 1, 3)
    Fw = F[-n_win:]
    Qw = Q[-n_win:]
    amplitude = float((Fw.max(axis=0) - Fw.min(axis=0)).max())

    q_locked = Qw.mean(axis=0)
    power = np.abs(np.fft.rfft(Qw - q_locked, axis=1)) ** 2
    power = power.mean(axis=0)
    wave_count = int(np.argmax(power[1:]) + 1) if power[1:].max() > 0.0 else 0

    f_locked = Fw.mean(axis=0)
    shifts = [
        _circular_shift(Fw[j] - f_locked, Fw[j + 1] - f_locked)
        for j in range(n_win - 1)
    ]
    speed = float(np.mean(shifts) * grid.dX / dt)

    return PatternMetrics(
        status="periodic",
        amplitude=amplitude,
        wave_count=wave_count,
        speed=speed,
        period=float(period),
        diagnostics={
            "max_temporal_range": max_range,
            "autocorr_peak": corr_peak,
            "spectrum_peak_power": float(power[1:].max()) if power.size > 1 else 0.0,
            "window_snapshots": float(n_win),
        },
    )
