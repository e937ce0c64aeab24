"""Stationary Newton solver and adaptive implicit time integration.

Stationary states have spatially constant flow rate.  By default that
rate is prescribed (the wavy solution carries the same flux as the flat
film it continues from, matching how R is anchored to the flat-film
thickness) and Newton iterates on the F samples alone.  The film can
instead be closed by a mean-thickness or mass-functional constraint
with q as an extra unknown; those branches thin out over the bottom
crests as the waviness grows and terminate by rupture where the
prescribed-flux branch continues.  Newton uses the analytic Jacobian
with Armijo backtracking on the residual norm.

Time stepping is BDF2 with an implicit-Euler startup step.  The local
error is estimated by step doubling: the macro step advances on two
half steps, a full step is computed only to difference against.  Each
implicit sub-step is solved by a modified Newton iteration with the
Jacobian assembled once per macro step and the iteration matrix
refactored per sub-step.  Linear solves follow the size rule used
throughout: dense LU below 1000 unknowns, sparse LU above.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import FilmRuptureError, RegularizationPoleError, SolverError
from .geometry import GeometryField
from .grid import Array
from .jacobian import assemble_jacobian, stationary_system
from .model import StateFields, mass_functional, rhs, uniform_state
from .params import Params

_DENSE_LIMIT = 1000


def _make_linear_solver(M):
    """Factor once, solve many; dense below the size rule, sparse above."""
    if M.shape[0] <= _DENSE_LIMIT:
        lu_piv = sla.lu_factor(M.toarray() if sp.issparse(M) else M)
        return lambda b: sla.lu_solve(lu_piv, b)
    factor = spla.splu(M.tocsc())
    return lambda b: factor.solve(b)


# ---------------------------------------------------------------------------
# stationary solve


@dataclass(frozen=True)
class StationarySolution:
    """Converged steady state; Q is the constant q_value at every point."""

    state: StateFields
    q_value: float
    residual_norm: float
    newton_iterations: int
    residual_history: tuple[float, ...]


def _newton_stationary(
    F0: Array,
    q0: float,
    geom: GeometryField,
    p: Params,
    model: str,
    tol: float,
    max_iter: int,
    constraint: str,
    mass_target: float | None,
) -> tuple[Array, float, float, int, list[float]]:
    n = geom.grid.n
    F, q = F0.copy(), float(q0)
    r, J = stationary_system(F, q, geom, p, model, constraint, mass_target)
    rn = float(np.max(np.abs(r)))
    history = [rn]
    iterations = 0
    for _ in range(max_iter):
        if rn <= tol:
            return F, q, rn, iterations, history
        solve = _make_linear_solver(J)
        step = solve(-r)
        dF = step[:n]
        dq = float(step[n]) if step.size > n else 0.0
        lam = 1.0
        # keep the film strictly positive along the damped step
        while np.any(F + lam * dF <= 0.0):
            lam *= 0.5
            if lam < 1e-12:
                raise SolverError(
                    "stationary Newton step cannot keep the film positive"
                )
        accepted = False
        while lam >= 1e-6:
            F_try, q_try = F + lam * dF, q + lam * dq
            try:
                r_try, J_try = stationary_system(
                    F_try, q_try, geom, p, model, constraint, mass_target
                )
            except (FilmRuptureError, RegularizationPoleError):
                lam *= 0.5
                continue
            rn_try = float(np.max(np.abs(r_try)))
            if rn_try <= (1.0 - 1e-4 * lam) * rn or rn_try <= tol:
                F, q, r, J, rn = F_try, q_try, r_try, J_try, rn_try
                accepted = True
                break
            lam *= 0.5
        if not accepted:
            raise SolverError(
                f"stationary Newton stalled in line search at residual {rn:.3e}"
            )
        iterations += 1
        history.append(rn)
    if rn <= tol:
        return F, q, rn, iterations, history
    raise SolverError(
        f"stationary Newton did not converge in {max_iter} iterations; "
        f"last residual {rn:.3e}"
    )


def solve_stationary(
    geom: GeometryField,
    p: Params,
    model: str = "wribl",
    init: StateFields | None = None,
    *,
    tol: float = 1e-11,
    max_iter: int = 25,
    constraint: str = "flux",
    flux_target: float = 1.0,
    mass_target: float | None = None,
    continuation: bool = True,
    continuation_start: float = 0.2,
    continuation_step: float = 0.05,
) -> StationarySolution:
    """Solve for the steady state over the wavy bottom.

    With the default "flux" constraint the flow rate is held at
    flux_target (1 = the flat-film rate) and only the thickness profile
    is solved for; "mean" and "mass" treat q as an unknown closed by
    mean(F) = 1 or the mass functional.  Starts from the flat-film
    state unless an initial guess is given.  For zeta above
    continuation_start a cold Newton start is unreliable, so the
    waviness is ramped in continuation_step increments, reusing each
    converged profile as the next initial guess.
    """
    grid = geom.grid
    if constraint == "mass" and mass_target is None:
        mass_target = mass_functional(uniform_state(grid), geom, p)
    if init is not None:
        F0 = init.F
        q0 = flux_target if constraint == "flux" else float(np.mean(init.Q))
        rungs = [p.zeta]
    elif continuation and p.zeta > continuation_start + 1e-12:
        F0, q0 = np.ones(grid.n), flux_target if constraint == "flux" else 1.0
        n_steps = int(math.ceil((p.zeta - continuation_start) / continuation_step))
        rungs = [continuation_start + k * continuation_step for k in range(n_steps)]
        rungs = [z for z in rungs if z < p.zeta] + [p.zeta]
    else:
        F0, q0 = np.ones(grid.n), flux_target if constraint == "flux" else 1.0
        rungs = [p.zeta]

    total_iters = 0
    history: list[float] = []
    F, q = F0, q0
    for z in rungs:
        geom_z = geom if z == p.zeta else geom.with_zeta(z)
        p_z = p if z == p.zeta else p.with_zeta(z)
        F, q, rn, iters, history = _newton_stationary(
            F, q, geom_z, p_z, model, tol, max_iter, constraint, mass_target
        )
        total_iters += iters
    state = StateFields(grid=grid, F=F, Q=np.full(grid.n, q))
    return StationarySolution(
        state=state,
        q_value=q,
        residual_norm=rn,
        newton_iterations=total_iters,
        residual_history=tuple(history),
    )


# ---------------------------------------------------------------------------
# time integration


@dataclass(frozen=True)
class StepControl:
    """Adaptive step controller settings."""

    rtol: float = 1e-6
    atol: float = 1e-8
    dt_init: float = 1e-3
    dt_min: float = 1e-11
    dt_max: float = 10.0
    safety: float = 0.9
    max_steps: int = 500_000
    newton_tol: float = 0.03
    newton_max_iter: int = 8
    f_floor: float = 0.0
    fixed_dt: float | None = None


@dataclass
class StepStats:
    """Counters filled in while stepping."""

    accepted: int = 0
    rejected: int = 0
    newton_failures: int = 0
    jacobian_evals: int = 0
    last_error: float = float("nan")
    dt_final: float = float("nan")


@dataclass(frozen=True)
class TimeSeries:
    """Snapshots of the evolving state at strictly increasing times."""

    times: Array
    snapshots: tuple[StateFields, ...]
    stats: StepStats

    @property
    def final(self) -> StateFields:
        return self.snapshots[-1]

    def thickness_matrix(self) -> Array:
        return np.stack([s.F for s in self.snapshots])

    def flux_matrix(self) -> Array:
        return np.stack([s.Q for s in self.snapshots])


class _NewtonFailure(Exception):
    """Internal: implicit sub-step did not converge; carries the cause."""

    def __init__(self, cause: Exception | None = None):
        super().__init__()
        self.cause = cause


class _Stepper:
    """One implicit sub-step: G(y) = y - gamma*f(y) - r0 = 0."""

    def __init__(self, grid, geom, p, model, control: StepControl, stats: StepStats):
        self.grid, self.geom, self.p, self.model = grid, geom, p, model
        self.control = control
        self.stats = stats
        self.n = grid.n
        self._jac = None

    def rhs_vec(self, y: Array) -> Array:
        state = StateFields(grid=self.grid, F=y[: self.n], Q=y[self.n :])
        dF, dQ = rhs(state, self.geom, self.p, self.model)
        return np.concatenate([dF, dQ])

    def refresh_jacobian(self, y: Array) -> None:
        state = StateFields(grid=self.grid, F=y[: self.n], Q=y[self.n :])
        self._jac = assemble_jacobian(state, self.geom, self.p, self.model)
        self.stats.jacobian_evals += 1

    def solve(self, y_pred: Array, gamma: float, r0: Array, weights: Array) -> Array:
        """Modified Newton from the predictor; raises _NewtonFailure."""
        c = self.control
        M = sp.identity(2 * self.n, format="csr") - gamma * self._jac
        lin_solve = _make_linear_solver(M)
        y = y_pred.copy()
        prev_norm = np.inf
        for _ in range(c.newton_max_iter):
            try:
                f = self.rhs_vec(y)
            except (FilmRuptureError, RegularizationPoleError) as exc:
                raise _NewtonFailure(exc)
            g = y - gamma * f - r0
            delta = lin_solve(-g)
            y = y + delta
            dnorm = float(np.sqrt(np.mean((delta / weights) ** 2)))
            if dnorm < c.newton_tol:
                if np.any(y[: self.n] <= c.f_floor):
                    raise _NewtonFailure(
                        FilmRuptureError(
                            "film thickness reached the floor inside a step",
                            index=int(np.argmin(y[: self.n])),
                        )
                    )
                return y
            if dnorm > 2.0 * prev_norm:
                break
            prev_norm = dnorm
        raise _NewtonFailure()


def _bdf2_coeffs(dt: float, dt_prev: float, y_n: Array, y_nm1: Array):
    rho = dt / dt_prev
    denom = 1.0 + 2.0 * rho
    # history combination in difference form so constant states pass
    # through bit-exactly (the coefficients sum to one only in exact
    # arithmetic)
    r0 = y_n + (rho**2 / denom) * (y_n - y_nm1)
    gamma = dt * (1.0 + rho) / denom
    return gamma, r0


def integrate(
    state0: StateFields,
    geom: GeometryField,
    p: Params,
    model: str,
    t_end: float,
    *,
    control: StepControl | None = None,
    snapshot_times=None,
    monitor=None,
) -> TimeSeries:
    """Advance the state to t_end, recording snapshots.

    snapshot_times: increasing times in (0, t_end] to record (t=0 and
    t_end are always included); the step size is clipped to land on
    them exactly.  monitor(t, state) is called after every accepted
    step; a truthy return stops the integration early.
    """
    control = control or StepControl()
    grid = state0.grid
    n = grid.n
    stats = StepStats()
    stepper = _Stepper(grid, geom, p, model, control, stats)

    if snapshot_times is None:
        targets = [float(t_end)]
    else:
        targets = sorted(float(t) for t in snapshot_times if 0.0 < t <= t_end)
        if not targets or targets[-1] < t_end:
            targets.append(float(t_end))

    y = np.concatenate([state0.F, state0.Q]).astype(float)
    t = 0.0
    times = [0.0]
    snaps = [StateFields(grid=grid, F=y[:n].copy(), Q=y[n:].copy())]

    fixed = control.fixed_dt is not None
    dt = control.fixed_dt if fixed else min(control.dt_init, targets[0])
    dt = min(dt, targets[0])
    y_prev = None  # history point behind y
    dt_hist = None  # spacing between y_prev and y
    target_idx = 0
    rupture_streak = 0
    pending_cause: Exception | None = None

    def record(t_now: float, y_now: Array) -> StateFields:
        s = StateFields(grid=grid, F=y_now[:n].copy(), Q=y_now[n:].copy())
        times.append(t_now)
        snaps.append(s)
        return s

    steps = 0
    while t < t_end - 1e-12 * max(1.0, t_end):
        if steps >= control.max_steps:
            raise SolverError(f"exceeded max_steps={control.max_steps} at t={t:.6g}")
        steps += 1
        dt = min(dt, control.dt_max, targets[target_idx] - t)
        if dt < control.dt_min:
            cause = pending_cause
            if isinstance(cause, (FilmRuptureError, RegularizationPoleError)) and rupture_streak >= 2:
                raise cause
            raise SolverError(f"time step underflow at t={t:.6g} (dt={dt:.3e})")

        first = y_prev is None
        weights = control.atol + control.rtol * np.abs(y)
        stepper.refresh_jacobian(y)
        try:
            if first:
                y_big = stepper.solve(y, dt, y, weights)
                y_h1 = stepper.solve(y, 0.5 * dt, y, weights)
                y_h2 = stepper.solve(y_h1, 0.5 * dt, y_h1, weights)
                err_div, order = 1.0, 2
            else:
                g_big, r_big = _bdf2_coeffs(dt, dt_hist, y, y_prev)
                pred = y + (dt / dt_hist) * (y - y_prev)
                y_big = stepper.solve(pred, g_big, r_big, weights)
                g_h1, r_h1 = _bdf2_coeffs(0.5 * dt, dt_hist, y, y_prev)
                pred1 = y + (0.5 * dt / dt_hist) * (y - y_prev)
                y_h1 = stepper.solve(pred1, g_h1, r_h1, weights)
                g_h2, r_h2 = _bdf2_coeffs(0.5 * dt, 0.5 * dt, y_h1, y)
                pred2 = y_h1 + (y_h1 - y)
                y_h2 = stepper.solve(pred2, g_h2, r_h2, weights)
                err_div, order = 3.0, 3
        except _NewtonFailure as fail:
            stats.newton_failures += 1
            stats.rejected += 1
            pending_cause = fail.cause
            rupture_streak = rupture_streak + 1 if fail.cause is not None else 0
            dt *= 0.25
            continue

        if fixed:
            err_norm = 0.0
        else:
            err_norm = float(
                np.sqrt(np.mean(((y_big - y_h2) / weights) ** 2)) / err_div
            )
        stats.last_error = err_norm
        if not fixed and err_norm > 1.0:
            stats.rejected += 1
            pending_cause = None
            rupture_streak = 0
            dt *= min(0.9, max(0.1, control.safety * err_norm ** (-1.0 / order)))
            continue

        # accept the half-step chain
        y_prev, y = y_h1, y_h2
        dt_hist = 0.5 * dt
        t += dt
        stats.accepted += 1
        stats.dt_final = dt
        rupture_streak = 0
        pending_cause = None

        hit_target = abs(t - targets[target_idx]) <= 1e-9 * max(1.0, targets[target_idx])
        if hit_target:
            record(targets[target_idx], y)
            t = targets[target_idx]
            target_idx += 1
        state_now = snaps[-1] if hit_target else StateFields(
            grid=grid, F=y[:n].copy(), Q=y[n:].copy()
        )
        if monitor is not None and monitor(t, state_now):
            if not hit_target:
                record(t, y)
            break
        if target_idx >= len(targets):
            break
        if not fixed:
            factor = control.safety * err_norm ** (-1.0 / order) if err_norm > 0 else 2.5
            dt *= min(2.5, max(0.2, factor))
        else:
            dt = control.fixed_dt

    return TimeSeries(times=np.array(times), snapshots=tuple(snaps), stats=stats)


# ---------------------------------------------------------------------------
# perturbations


def inject_perturbation(
    state: StateFields,
    geom: GeometryField,
    p: Params,
    *,
    amplitude: float,
    center: float | None = None,
    width: float = 2.0 * np.pi / 10.0,
    kind: str = "bump",
    mode: int = 1,
) -> StateFields:
    """Multiply F by (1 + amplitude * shape), preserving mass.

    kind "bump" shapes the perturbation as a gaussian of the given
    width around the center (periodic distance); kind "harmonic" uses
    cos(2*pi*mode*(X - center)/L), which excites a single Fourier mode
    of the domain up to the sidebands the stationary profile induces.
    After the multiplication, F is rescaled so the mass functional
    matches its value before the perturbation (the scale solves the
    quadratic the K-weighted term introduces); Q is left unchanged.
    """
    grid = state.grid
    L = grid.length
    if kind == "bump":
        if center is None:
            center = 0.5 * L
        d = grid.X - center
        d -= L * np.round(d / L)
        shape = np.exp(-0.5 * (d / width) ** 2)
    elif kind == "harmonic":
        if mode < 1:
            raise ValueError("harmonic perturbation needs mode >= 1")
        phase = 0.0 if center is None else center
        shape = np.cos(2.0 * np.pi * mode * (grid.X - phase) / L)
    else:
        raise ValueError(f"unknown perturbation kind {kind!r}")
    F_pert = state.F * (1.0 + amplitude * shape)
    if np.any(F_pert <= 0.0):
        raise ValueError("perturbation amplitude makes the film nonpositive")

    m0 = mass_functional(state, geom, p)
    b = float(np.sum(F_pert) * grid.dX)
    a_q = float(0.5 * p.delta * p.zeta * np.sum(geom.K * F_pert**2) * grid.dX)
    if abs(a_q) < 1e-14 * abs(b):
        scale = m0 / b
    else:
        scale = (-b + math.sqrt(b * b + 4.0 * a_q * m0)) / (2.0 * a_q)
    F_new = scale * F_pert
    if np.any(F_new <= 0.0):
        raise ValueError("mass renormalization makes the film nonpositive")
    return StateFields(grid=grid, F=F_new, Q=state.Q.copy())
