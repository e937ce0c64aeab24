"""End-to-end acceptance runs over the regimes the solver targets.

Each test prints one "[ACCEPTANCE] <label>: PASS" line on success so a
full run doubles as a sign-off checklist.  The transient cases are slow
by design (tens of minutes in total): they reproduce emergent behavior
(instability onsets, saturated wave patterns, overhangs) rather than
unit-level identities, which the rest of the suite covers.
"""

import numpy as np
import pytest

from wavy_film import (
    BottomSpec,
    DimensionalFluidSpec,
    Params,
    PeriodicGrid,
    SolverError,
    StateFields,
    assemble_jacobian,
    eddy_diagnostic,
    expand_geometry,
    inject_perturbation,
    integrate,
    nondimensionalize,
    reconstruct_field,
    rhs,
    solve_stationary,
    uniform_state,
)
from wavy_film.analysis import (
    ClassifyOptions,
    PerturbationConfig,
    classify_stability,
    critical_reynolds,
    dispersion_critical_reynolds,
    pattern_metrics,
)
from wavy_film.benney import consistency_scan, q2_term_arrays, u2_profile
from wavy_film.geometry import trig_factors
from wavy_film.grid import diff
from wavy_film.model import mass_functional, residual_split, state_derivatives
from wavy_film.reconstruction import surface_curve
from wavy_film.solvers import TimeSeries

from conftest import random_params, smooth_field
from test_model import reference_momentum_groups

OIL = DimensionalFluidSpec(nu=24.1, rho=0.969, sigma=20.0)
WATERY = DimensionalFluidSpec(nu=1.0, rho=1.0, sigma=70.0)

SIN10 = BottomSpec(kind="sinusoid", amplitude_hat=1.0, wavelength_hat=10.0)

TWO_PI = 2.0 * np.pi


def _ok(label: str) -> None:
    print(f"[ACCEPTANCE] {label}: PASS", flush=True)


def _tail(series: TimeSeries, t_lo: float) -> TimeSeries:
    keep = [i for i, t in enumerate(series.times) if t >= t_lo - 1e-9]
    return TimeSeries(
        times=np.asarray([series.times[i] for i in keep]),
        snapshots=tuple(series.snapshots[i] for i in keep),
        stats=series.stats,
    )


# --- model evaluators --------------------------------------------------------


def test_uniform_film_is_fixed_point_of_both_models():
    rng = np.random.default_rng(1)
    grid = PeriodicGrid(n_waves=1, points_per_wave=64)
    geom = expand_geometry(SIN10, grid, zeta=0.0)
    state = uniform_state(grid)
    for _ in range(20):
        p = Params(
            alpha=rng.uniform(0.2, np.pi / 2),
            delta=rng.uniform(0.02, 0.3),
            zeta=0.0,
            Bi=10.0 ** rng.uniform(-2, 1.2),
            R=rng.uniform(0.1, 20.0),
        )
        for model in ("wribl", "rwribl"):
            dF, dQ = rhs(state, geom, p, model)
            assert np.max(np.abs(dF)) < 1e-13
            assert np.max(np.abs(dQ)) < 1e-13
    _ok("uniform film fixed point, both models, 20 draws")


def test_momentum_rates_match_transcription_oracle():
    # second, structurally different transcription of the momentum
    # balance: exact Fraction coefficients, fsum accumulation per point
    rng = np.random.default_rng(2)
    grid = PeriodicGrid(n_waves=1, points_per_wave=64)
    for _ in range(50):
        p = random_params(rng)
        geom = expand_geometry(SIN10, grid, zeta=p.zeta)
        state = StateFields(
            grid=grid,
            F=smooth_field(rng, grid, base=1.0, amp=0.2),
            Q=smooth_field(rng, grid, base=1.0, amp=0.25),
        )
        F1, F2, F3, Q1, Q2 = state_derivatives(state)
        sr, cr = trig_factors(geom, p.alpha)
        res0, res1, res2, s_tilde = reference_momentum_groups(
            state.F, state.Q, F1, F2, F3, Q1, Q2,
            sr, cr, geom.dX_theta, geom.K, geom.dX_K,
            p.delta, p.zeta, p.R, p.Bi,
        )
        dR = p.delta * p.R
        ref_w = (res0 + res1 + res2) / dR
        ref_r = (s_tilde * res0 + res1) / dR
        _, dQ_w = rhs(state, geom, p, "wribl")
        _, dQ_r = rhs(state, geom, p, "rwribl")
        scale = max(1.0, np.max(np.abs(ref_w)), np.max(np.abs(ref_r)))
        assert np.max(np.abs(dQ_w - ref_w)) <= 1e-12 * scale
        assert np.max(np.abs(dQ_r - ref_r)) <= 1e-12 * scale
    _ok("momentum rates match transcription oracle, 50 states")


def test_enslaved_expansion_consistency_order():
    grid = PeriodicGrid(n_waves=1, points_per_wave=64)
    geom = expand_geometry(SIN10, grid, zeta=0.15)
    p = Params(alpha=np.pi / 3, delta=0.2, zeta=0.15, Bi=1.0, R=2.0)
    F = 1.0 + 0.15 * np.cos(grid.X)
    for model in ("wribl", "rwribl"):
        norms, slope = consistency_scan(F, geom, p, [0.1, 0.05, 0.025], model=model)
        assert np.all(np.diff(norms) < 0)
        assert slope >= 2.8, (model, slope)
    _ok("enslaved expansion residual order >= 2.8, both models")


def test_second_order_flux_closed_form_vs_quadrature():
    rng = np.random.default_rng(4)
    nodes, weights = np.polynomial.legendre.leggauss(12)
    for _ in range(100):
        F = rng.uniform(0.5, 2.0)
        F1, F2, F3, F4, k0, dk0, d2k0, th1, dth1 = rng.standard_normal(9)
        co = dict(
            delta=rng.uniform(0.05, 0.3), zeta=rng.uniform(0.01, 0.3),
            R=rng.uniform(0.1, 10.0), Bi=rng.uniform(0.0, 5.0),
            cot_alpha=rng.uniform(0.0, 3.0),
        )
        z = 0.5 * F * (nodes + 1.0)
        got = 0.5 * F * np.dot(
            weights,
            u2_profile(z, F, F1, F2, F3, F4, k0, dk0, d2k0, th1, dth1, **co),
        )
        terms = q2_term_arrays(
            np.array([F]), np.array([F1]), np.array([F2]), np.array([F3]),
            np.array([F4]), np.array([k0]), np.array([dk0]), np.array([d2k0]),
            np.array([th1]), np.array([dth1]), **co,
        )
        want = float(sum(terms.values())[0])
        assert got == pytest.approx(want, rel=1e-8, abs=1e-12)
    _ok("second-order flux closed form matches quadrature, 100 draws")


# --- flat-bottom instability threshold ---------------------------------------


def test_flat_bottom_instability_threshold():
    for model in ("wribl", "rwribl"):
        for deg in (45.0, 60.0):
            alpha = np.deg2rad(deg)
            p = Params(alpha=alpha, delta=0.1, zeta=0.0, Bi=1.0, R=1.0)
            want = (5.0 / 6.0) / np.tan(alpha)
            got = dispersion_critical_reynolds(p, model=model)
            assert got == pytest.approx(want, rel=0.01), (model, deg)
        p = Params(alpha=np.pi / 2, delta=0.1, zeta=0.0, Bi=1.0, R=1.0)
        assert dispersion_critical_reynolds(p, model=model) < 0.05
    _ok("flat-bottom threshold (5/6)cot(alpha) within 1%, vertical < 0.05")


# --- stationary-solution diagnostics ------------------------------------------


def test_eddy_onset_waviness_in_expected_window():
    # warm-start continuation in waviness; onset = first sign change of
    # the minimal downstream velocity over the reconstructed field
    grid = PeriodicGrid(n_waves=1, points_per_wave=128)
    alpha = np.deg2rad(10.0)
    zetas = [round(0.02 * i, 2) for i in range(1, 26)]
    u_min = []
    init = None
    for z in zetas:
        p = nondimensionalize(WATERY, SIN10, alpha, 4.2, zeta=z)
        geom = expand_geometry(SIN10, grid, zeta=z)
        sol = solve_stationary(geom, p, model="rwribl", tol=1e-9, init=init)
        init = sol.state
        field = reconstruct_field(sol, geom, p, n_z=64)
        u_min.append(eddy_diagnostic(field)["u_min"])
    sign = [u >= 0.0 for u in u_min]
    onsets = [zetas[i + 1] for i in range(len(zetas) - 1) if sign[i] != sign[i + 1]]
    assert len(onsets) == 1
    assert 0.33 <= onsets[0] <= 0.43
    _ok(f"eddy onset at waviness {onsets[0]:.2f} inside [0.33, 0.43]")


def test_trough_recirculation_switches_with_reynolds():
    grid = PeriodicGrid(n_waves=1, points_per_wave=128)
    geom = expand_geometry(SIN10, grid, zeta=0.35)
    verdicts = {}
    for R, delta in ((5.0, 0.15), (20.0, 0.24)):
        p = Params(alpha=np.pi / 2, delta=delta, zeta=0.35, Bi=17.92, R=R)
        sol = solve_stationary(geom, p, model="rwribl", tol=1e-9)
        verdicts[R] = eddy_diagnostic(reconstruct_field(sol, geom, p, n_z=64))
    assert verdicts[5.0]["has_eddy"] is False
    assert verdicts[20.0]["has_eddy"] is True
    assert verdicts[20.0]["u_min"] < 0.0
    _ok("trough recirculation absent at R=5, present at R=20")


# --- emergent transient patterns ----------------------------------------------


def test_saturated_wave_counts_track_waviness_and_reynolds():
    grid = PeriodicGrid(n_waves=8, points_per_wave=48)
    alpha = np.deg2rad(10.0)
    cases = [(0.06, 9.7, 4), (0.08, 9.7, 5), (0.2, 6.1, 6), (0.04, 7.4, 1)]
    snap_times = list(np.round(np.arange(0.25, 150.0 + 1e-9, 0.25), 10))
    for z, R, want_count in cases:
        p = nondimensionalize(WATERY, SIN10, alpha, R, zeta=z)
        geom = expand_geometry(SIN10, grid, zeta=z)
        sol = solve_stationary(geom, p, model="rwribl", tol=1e-9)
        state = inject_perturbation(sol.state, geom, p, amplitude=0.01)
        series = integrate(state, geom, p, "rwribl", 150.0, snapshot_times=snap_times)
        m = pattern_metrics(_tail(series, 90.0))
        assert m.status == "periodic", (z, R, m.status)
        assert m.wave_count == want_count, (z, R, m.wave_count)
    _ok("saturated wave counts 4/5/6 and single-pulse case")


# --- property suite ------------------------------------------------------------


def test_mass_conservation_properties():
    grid = PeriodicGrid(n_waves=1, points_per_wave=64)
    # flat bottom: the cell sum of F is a linear invariant of every step
    geom = expand_geometry(SIN10, grid, zeta=0.0)
    p = Params(alpha=np.pi / 3, delta=0.15, zeta=0.0, Bi=1.5, R=3.0)
    state0 = inject_perturbation(uniform_state(grid), geom, p, amplitude=0.05)
    ts = integrate(state0, geom, p, "wribl", 8.0)
    m0 = np.sum(state0.F) * grid.dX
    m1 = np.sum(ts.final.F) * grid.dX
    assert abs(m1 - m0) / m0 < 1e-12
    # wavy bottom: the metric-weighted mass functional drifts only at
    # the order of the neglected terms
    drifts = {}
    for z in (0.3, 0.15):
        geom = expand_geometry(SIN10, grid, zeta=z)
        p = Params(alpha=np.pi / 3, delta=0.15, zeta=z, Bi=1.5, R=3.0)
        stat = solve_stationary(geom, p, tol=1e-12)
        state0 = inject_perturbation(stat.state, geom, p, amplitude=0.05)
        ts = integrate(state0, geom, p, "wribl", 15.0)
        drifts[z] = abs(
            mass_functional(ts.final, geom, p) - mass_functional(state0, geom, p)
        ) / mass_functional(state0, geom, p)
        assert drifts[z] < 0.05 * (p.delta * z) ** 2
    assert drifts[0.15] < drifts[0.3]
    _ok("mass conserved: flat exactly, wavy within O((delta*zeta)^2)")


def test_jacobian_matches_finite_differences():
    rng = np.random.default_rng(11)
    grid = PeriodicGrid(n_waves=1, points_per_wave=64)
    for model in ("wribl", "rwribl"):
        for _ in range(4):
            p = random_params(rng)
            geom = expand_geometry(SIN10, grid, zeta=p.zeta)
            F = smooth_field(rng, grid, base=1.0, amp=0.2)
            Q = smooth_field(rng, grid, base=1.0, amp=0.25)
            state = StateFields(grid=grid, F=F, Q=Q)
            J = assemble_jacobian(state, geom, p, model)
            y0 = np.concatenate([F, Q])

            def rhs_vec(y):
                s = StateFields(grid=grid, F=y[: grid.n], Q=y[grid.n :])
                dF, dQ = rhs(s, geom, p, model)
                return np.concatenate([dF, dQ])

            for _ in range(3):
                v = rng.standard_normal(y0.size)
                v /= np.linalg.norm(v)
                h = 1e-6
                fd = (rhs_vec(y0 + h * v) - rhs_vec(y0 - h * v)) / (2 * h)
                assert np.max(np.abs(J @ v - fd)) <= 1e-6 * max(1.0, np.max(np.abs(fd)))
    _ok("analytic jacobian matches finite differences, both models")


def test_difference_operators_second_order():
    for order in (1, 2, 3, 4):
        errs = []
        sizes = [64, 128, 256]
        for ppw in sizes:
            g = PeriodicGrid(n_waves=1, points_per_wave=ppw, fd_order=2)
            f = np.sin(g.X)
            exact = [np.cos, lambda x: -np.sin(x), lambda x: -np.cos(x), np.sin][
                order - 1
            ](g.X)
            errs.append(np.max(np.abs(diff(f, order, g) - exact)))
        slopes = np.diff(np.log(errs)) / np.diff(np.log([TWO_PI / s for s in sizes]))
        assert np.all(np.abs(slopes - 2.0) <= 0.1), (order, slopes)
    _ok("difference operators converge at slope 2.0 +/- 0.1")


def test_newton_terminal_convergence_is_quadratic():
    grid = PeriodicGrid(n_waves=1, points_per_wave=100)
    geom = expand_geometry(SIN10, grid, zeta=0.15)
    p = Params(alpha=np.pi / 3, delta=0.15, zeta=0.15, Bi=1.5, R=3.0)
    for model in ("wribl", "rwribl"):
        sol = solve_stationary(geom, p, model=model, tol=1e-12)
        hist = sol.residual_history
        assert sol.newton_iterations <= 8
        assert all(b < a for a, b in zip(hist, hist[1:]))
        checked = 0
        for a, b in zip(hist, hist[1:]):
            if a <= 0.1 and b > 1e-12:
                assert b <= 10.0 * a**1.8
                checked += 1
        assert checked >= 2, hist
    _ok("newton terminal convergence quadratic, both models")


def test_repeated_runs_are_byte_identical():
    grid = PeriodicGrid(n_waves=1, points_per_wave=64)
    geom = expand_geometry(SIN10, grid, zeta=0.25)
    p = Params(alpha=np.pi / 3, delta=0.15, zeta=0.25, Bi=1.5, R=3.0)

    def run():
        sol = solve_stationary(geom, p, tol=1e-12)
        state0 = inject_perturbation(sol.state, geom, p, amplitude=0.03)
        ts = integrate(state0, geom, p, "rwribl", 3.0)
        return sol, ts

    a, tsa = run()
    b, tsb = run()
    assert a.state.F.tobytes() == b.state.F.tobytes()
    assert a.residual_history == b.residual_history
    assert tsa.final.F.tobytes() == tsb.final.F.tobytes()
    assert tsa.final.Q.tobytes() == tsb.final.Q.tobytes()
    _ok("stationary solve and transient rerun byte-identical")
