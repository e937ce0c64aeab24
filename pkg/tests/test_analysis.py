"""Stability and pattern-metric checks.

The dispersion relation is validated against the eigenvalues of the
assembled discrete Jacobian (independent route through the nonlinear
residual code), the onset against the analytic critical Reynolds
number, and the pattern metrics against synthetic traveling waves with
known amplitude, mode count, speed and period.
"""

import numpy as np
import pytest
import scipy.linalg as sla

from wavy_film import (
    BottomSpec,
    ClassifyOptions,
    DimensionalFluidSpec,
    Params,
    PeriodicGrid,
    PerturbationConfig,
    StepControl,
    classify_stability,
    critical_reynolds,
    dispersion_critical_reynolds,
    expand_geometry,
    flat_dispersion,
    nondimensionalize,
    pattern_metrics,
    uniform_state,
)
from wavy_film.analysis import _bisect_threshold
from wavy_film.errors import SolverError
from wavy_film.jacobian import assemble_jacobian
from wavy_film.model import StateFields
from wavy_film.solvers import StepStats, TimeSeries

from conftest import random_params

SIN = BottomSpec(kind="sinusoid", amplitude_hat=1.0, wavelength_hat=10.0)
WATER = DimensionalFluidSpec(nu=1.0, rho=1.0, sigma=70.0)


# ---------------------------------------------------------------------------
# dispersion relation


def test_dispersion_zero_mode_is_exact(rng):
    for _ in range(10):
        p = random_params(rng, zeta=0.0)
        for model in ("wribl", "rwribl"):
            assert flat_dispersion(p, 0.0, model) == 0.0


def test_dispersion_models_agree(rng):
    p = random_params(rng, zeta=0.0)
    ks = np.linspace(0.0, 5.0, 40)
    lam_w = flat_dispersion(p, ks, "wribl")
    lam_r = flat_dispersion(p, ks, "rwribl")
    assert np.array_equal(lam_w, lam_r)


def test_dispersion_rejects_wavy_setup():
    p = Params(alpha=np.pi / 4, delta=0.1, zeta=0.2, Bi=1.0, R=1.0)
    with pytest.raises(ValueError):
        flat_dispersion(p, 1.0)
    with pytest.raises(ValueError):
        flat_dispersion(Params(alpha=np.pi / 4, delta=0.1, zeta=0.0, Bi=1.0, R=1.0),
                        1.0, model="nope")


def test_dispersion_matches_discrete_jacobian_spectrum():
    # independent oracle: the closed form must be the h->0 limit of the
    # eigenvalues of the assembled Jacobian at the uniform state
    p = Params(alpha=np.pi / 4, delta=0.1, zeta=0.0, Bi=1.0, R=2.0)
    errs = {}
    for n in (128, 256):
        grid = PeriodicGrid(n_waves=1, points_per_wave=n)
        geom = expand_geometry(SIN, grid, 0.0)
        J = assemble_jacobian(uniform_state(grid), geom, p, "wribl").toarray()
        eig = sla.eigvals(J)
        errs[n] = [
            np.min(np.abs(eig - flat_dispersion(p, float(k))))
            / max(1.0, abs(flat_dispersion(p, float(k))))
            for k in (1, 2, 3, 4)
        ]
    assert max(errs[256]) < 5e-3
    for e1, e2 in zip(errs[128], errs[256]):
        assert 1.8 <= np.log2(e1 / e2) <= 2.2


def test_dispersion_growth_is_quadratic_in_k_at_small_k():
    p = Params(alpha=np.pi / 4, delta=0.1, zeta=0.0, Bi=1.0, R=2.0)
    r1 = flat_dispersion(p, 1e-3).real
    r2 = flat_dispersion(p, 2e-3).real
    assert r2 / r1 == pytest.approx(4.0, rel=1e-4)


@pytest.mark.parametrize("alpha_deg", [45.0, 60.0])
def test_dispersion_onset_matches_analytic_threshold(alpha_deg):
    alpha = np.radians(alpha_deg)
    p = Params(alpha=alpha, delta=0.1, zeta=0.0, Bi=1.0, R=1.0)
    rc = dispersion_critical_reynolds(p)
    assert rc == pytest.approx(5.0 / 6.0 / np.tan(alpha), rel=0.01)


def test_dispersion_onset_vertical_wall_below_bracket():
    p = Params(alpha=np.pi / 2, delta=0.1, zeta=0.0, Bi=1.0, R=1.0)
    assert dispersion_critical_reynolds(p, bracket=(0.01, 50.0)) <= 0.05


def test_dispersion_onset_unbracketed_raises():
    p = Params(alpha=np.pi / 4, delta=0.1, zeta=0.0, Bi=1.0, R=1.0)
    with pytest.raises(ValueError):
        dispersion_critical_reynolds(p, bracket=(0.01, 0.1))


def test_no_short_wave_instability_island_for_flat_water_film():
    bottom = BottomSpec(kind="sinusoid", amplitude_hat=0.1, wavelength_hat=10.0)
    alpha = np.radians(10.0)
    ks = np.concatenate([np.linspace(1e-3, 2.0, 800), np.linspace(2.0, 50.0, 800)])
    rc = dispersion_critical_reynolds(
        nondimensionalize(WATER, bottom, alpha, 5.0, zeta=0.0))
    for R in (3.0, 5.0, 7.0, 9.7):
        p = nondimensionalize(WATER, bottom, alpha, R, zeta=0.0)
        re = flat_dispersion(p, ks).real
        crossings = int(np.sum(np.diff(np.sign(re)) != 0))
        assert crossings == (1 if R > rc else 0)


# ---------------------------------------------------------------------------
# bisection helper


def test_bisection_brackets_the_transition():
    r_star = 0.8371
    calls = []

    def f(r):
        calls.append(r)
        return r > r_star

    mid, lo, hi = _bisect_threshold(f, 0.5, 2.0, 0.01)
    assert lo <= r_star <= hi
    assert hi - lo <= 0.02
    assert mid == 0.5 * (lo + hi)
    assert abs(mid - r_star) <= 0.01 + 1e-12


def test_bisection_rejects_unbracketed_endpoints():
    with pytest.raises(ValueError):
        _bisect_threshold(lambda r: True, 0.5, 2.0, 0.01)
    with pytest.raises(ValueError):
        _bisect_threshold(lambda r: False, 0.5, 2.0, 0.01)


# ---------------------------------------------------------------------------
# time-domain classification


def test_classify_flat_below_threshold_is_stable():
    grid = PeriodicGrid(n_waves=2, points_per_wave=32)
    geom = expand_geometry(SIN, grid, 0.0)
    p = Params(alpha=np.pi / 4, delta=0.1, zeta=0.0, Bi=1.0, R=0.5)
    v = classify_stability(geom, p, "rwribl")
    assert v.verdict == "stable"
    g0 = v.growth_metric[0]
    assert v.growth_metric[-1] <= 0.1 * g0
    assert v.classification_time == pytest.approx(v.growth_times[-1])
    assert np.all(np.diff(v.growth_times) > 0)


def test_classify_flat_above_threshold_is_unstable():
    grid = PeriodicGrid(n_waves=2, points_per_wave=32)
    geom = expand_geometry(SIN, grid, 0.0)
    p = Params(alpha=np.pi / 4, delta=0.1, zeta=0.0, Bi=1.0, R=2.5)
    v = classify_stability(geom, p, "rwribl",
                           perturbation=PerturbationConfig(amplitude=0.01))
    assert v.verdict == "unstable"
    assert v.growth_metric[-1] >= 10.0 * v.growth_metric[0]
    assert v.reynolds == 2.5


def test_classify_wavy_bottom_both_verdicts():
    grid = PeriodicGrid(n_waves=2, points_per_wave=32)
    geom = expand_geometry(SIN, grid, 0.25)
    base = Params(alpha=np.pi / 4, delta=0.1, zeta=0.25, Bi=1.0, R=4.0)
    v = classify_stability(geom, base, "rwribl",
                           perturbation=PerturbationConfig(amplitude=0.01))
    assert v.verdict == "unstable"
    v = classify_stability(geom, base.with_r(0.5), "rwribl")
    assert v.verdict == "stable"


def test_classify_short_horizon_is_inconclusive():
    grid = PeriodicGrid(n_waves=2, points_per_wave=32)
    geom = expand_geometry(SIN, grid, 0.0)
    p = Params(alpha=np.pi / 4, delta=0.1, zeta=0.0, Bi=1.0, R=0.5)
    v = classify_stability(geom, p, "rwribl",
                           options=ClassifyOptions(horizon=2.0, max_doublings=0))
    assert v.verdict == "inconclusive"
    assert v.classification_time is None
    g0 = v.growth_metric[0]
    assert np.all(v.growth_metric < 10.0 * g0)
    assert np.all(v.growth_metric > 0.1 * g0)


def test_critical_reynolds_brackets_linear_threshold():
    # time-domain bisection must land on the same transition the
    # dispersion relation predicts for the smallest resolved mode
    grid = PeriodicGrid(n_waves=2, points_per_wave=32)
    geom = expand_geometry(SIN, grid, 0.0)
    base = Params(alpha=np.pi / 4, delta=0.1, zeta=0.0, Bi=1.0, R=1.0)

    lo, hi = 0.5, 2.5
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        if flat_dispersion(base.with_r(mid), 0.5).real > 0.0:
            hi = mid
        else:
            lo = mid
    rc_linear = 0.5 * (lo + hi)

    # small seed amplitude keeps the near-threshold run in the linear
    # regime long enough to cross the growth threshold before saturating
    pt = critical_reynolds(
        geom, base, model="rwribl", bracket=(0.5, 2.5), tol=0.5,
        perturbation=PerturbationConfig(amplitude=0.002),
    )
    assert pt.bracket[0] < rc_linear < pt.bracket[1]
    assert abs(pt.r_crit - rc_linear) <= pt.tolerance + 1e-12
    assert pt.tolerance <= 0.5
    assert pt.delta_at_crit == base.delta  # no fluid attached: delta fixed
    assert pt.zeta == 0.0


# ---------------------------------------------------------------------------
# pattern metrics (synthetic oracles)


def _series(grid, times, f_of_xt):
    snaps = []
    for t in times:
        F = f_of_xt(grid.X, t)
        snaps.append(StateFields(grid=grid, F=F, Q=F**3))
    return TimeSeries(times=np.asarray(times, float), snapshots=tuple(snaps),
                      stats=StepStats())


def test_pattern_metrics_traveling_wave():
    grid = PeriodicGrid(n_waves=8, points_per_wave=32)
    kw = 4.0 * 2.0 * np.pi / grid.length  # four crests over the domain
    c = 1.3
    period = 2.0 * np.pi / kw / c
    dt = 0.29  # deliberately incommensurate with the period
    times = dt * np.arange(120)
    m = pattern_metrics(
        _series(grid, times, lambda X, t: 1.0 + 0.3 * np.cos(kw * (X - c * t))))
    assert m.status == "periodic"
    assert m.wave_count == 4
    assert m.amplitude == pytest.approx(0.6, rel=1e-2)
    assert m.speed == pytest.approx(c, rel=5e-3)
    assert m.period == pytest.approx(period, rel=5e-3)


def test_pattern_metrics_steady_state():
    grid = PeriodicGrid(n_waves=4, points_per_wave=32)
    times = 0.5 * np.arange(20)
    m = pattern_metrics(
        _series(grid, times, lambda X, t: 1.0 + 0.2 * np.cos(X / 4.0)))
    assert m.status == "steady"
    assert m.amplitude == 0.0
    assert m.speed == 0.0
    assert m.wave_count == 0
    assert m.period == 0.0


def test_pattern_metrics_noise_is_inconclusive():
    rng = np.random.default_rng(7)
    grid = PeriodicGrid(n_waves=4, points_per_wave=32)
    times = 0.5 * np.arange(40)
    snaps = tuple(
        StateFields(grid=grid, F=1.0 + 0.01 * rng.standard_normal(grid.n),
                    Q=np.ones(grid.n))
        for _ in times
    )
    m = pattern_metrics(TimeSeries(times=times, snapshots=snaps, stats=StepStats()))
    assert m.status == "inconclusive"
    assert np.isnan(m.amplitude) and np.isnan(m.speed) and np.isnan(m.period)
    assert "autocorr_peak" in m.diagnostics


def test_pattern_metrics_input_validation():
    grid = PeriodicGrid(n_waves=2, points_per_wave=16)
    short = _series(grid, np.arange(4), lambda X, t: np.ones_like(X))
    with pytest.raises(ValueError):
        pattern_metrics(short)
    uneven = _series(grid, [0.0, 1.0, 2.0, 3.5, 4.0, 5.0, 6.0, 7.0, 8.0],
                     lambda X, t: np.ones_like(X))
    with pytest.raises(ValueError):
        pattern_metrics(uneven)
