"""Depth-integrated evolution equations for film thickness and flow rate.

State is (F, Q) sampled on a periodic grid.  Kinematics:

    dT(F) = -(1 - delta*zeta*K*F) * dX(Q)

and the momentum balance grouped as in kernels.py:

    delta*R*dT(Q) = res0 + res1 + res2          (full second-order model)
    delta*R*dT(Q) = s_tilde*res0 + res1         (regularized model)

with s_tilde = 1/(1 - delta*R*Q*dX(F)/70) absorbing the second-order
inertia correction res2.  Evaluation refuses nonpositive film thickness and
(for the regularized model) states at or beyond the s_tilde pole.
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from . import kernels
from .errors import FilmRuptureError, RegularizationPoleError
from .geometry import GeometryField, trig_factors
from .grid import Array, PeriodicGrid, diff
from .params import Params

MODELS = ("wribl", "rwribl")


@dataclass(frozen=True)
class StateFields:
    """Film thickness and flow rate samples on a grid."""

    grid: PeriodicGrid
    F: Array
    Q: Array

    def __post_init__(self):
        if self.F.shape != (self.grid.n,) or self.Q.shape != (self.grid.n,):
            raise ValueError(
                f"F/Q shapes {self.F.shape}/{self.Q.shape} do not match grid size {self.grid.n}"
            )


@dataclass(frozen=True)
class RhsSplit:
    """Momentum-balance groups; res1 excludes the dT(Q) term."""

    res0: Array
    res1: Array
    res2: Array
    s_tilde: Array


def uniform_state(grid: PeriodicGrid, F: float = 1.0, Q: float = 1.0) -> StateFields:
    return StateFields(grid=grid, F=np.full(grid.n, F), Q=np.full(grid.n, Q))


def _check_film(F: Array, t=None):
    if np.any(F <= 0.0):
        idx = int(np.argmin(F))
        raise FilmRuptureError(f"nonpositive film thickness at grid index {idx}", t=t, index=idx)


def state_derivatives(state: StateFields) -> Tuple[Array, Array, Array, Array, Array]:
    g = state.grid
    return (
        diff(state.F, 1, g),
        diff(state.F, 2, g),
        diff(state.F, 3, g),
        diff(state.Q, 1, g),
        diff(state.Q, 2, g),
    )


def _groups(state: StateFields, geom: GeometryField, p: Params):
    _check_film(state.F)
    F1, F2, F3, Q1, Q2 = state_derivatives(state)
    sr, cr = trig_factors(geom, p.alpha)
    res0, res1, res2, s_tilde = kernels.rhs_groups(
        state.F, state.Q, F1, F2, F3, Q1, Q2,
        sr, cr, geom.dX_theta, geom.K, geom.dX_K,
        p.delta, p.zeta, p.R, p.Bi,
    )
    return F1, Q1, res0, res1, res2, s_tilde


def residual_split(state: StateFields, geom: GeometryField, p: Params) -> RhsSplit:
    """Evaluate the momentum-balance groups without assembling a rate."""
    _, _, res0, res1, res2, s_tilde = _groups(state, geom, p)
    return RhsSplit(res0=res0, res1=res1, res2=res2, s_tilde=s_tilde)


def _df_dt(state: StateFields, geom: GeometryField, p: Params, Q1: Array) -> Array:
    return -(1.0 - p.delta * p.zeta * geom.K * state.F) * Q1


def rhs_wribl(state: StateFields, geom: GeometryField, p: Params) -> Tuple[Array, Array]:
    """Rates (dT F, dT Q) of the full second-order model."""
    _, Q1, res0, res1, res2, _ = _groups(state, geom, p)
    dQ = (res0 + res1 + res2) / (p.delta * p.R)
    return _df_dt(state, geom, p, Q1), dQ


def rhs_rwribl(state: StateFields, geom: GeometryField, p: Params) -> Tuple[Array, Array]:
    """Rates (dT F, dT Q) of the regularized model.

    Raises RegularizationPoleError when delta*R*Q*dX(F)/70 >= 1 anywhere.
    """
    F1, Q1, res0, res1, _, s_tilde = _groups(state, geom, p)
    pole_arg = (p.delta * p.R / 70.0) * state.Q * F1
    if np.any(pole_arg >= 1.0):
        idx = np.flatnonzero(pole_arg >= 1.0)
        raise RegularizationPoleError(
            f"regularization factor pole reached at {idx.size} grid points "
            f"(first at X={state.grid.X[idx[0]]:.6g})",
            indices=idx,
            x_locations=state.grid.X[idx],
        )
    dQ = (s_tilde * res0 + res1) / (p.delta * p.R)
    return _df_dt(state, geom, p, Q1), dQ


def rhs(state: StateFields, geom: GeometryField, p: Params, model: str) -> Tuple[Array, Array]:
    if model == "wribl":
        return rhs_wribl(state, geom, p)
    if model == "rwribl":
        return rhs_rwribl(state, geom, p)
    raise ValueError(f"unknown model {model!r}, expected one of {MODELS}")


def mass_functional(state: StateFields, geom: GeometryField, p: Params) -> float:
    """M = int (F + delta*zeta*K*F^2/2) dX; conserved up to O((delta*zeta)^2)."""
    integrand = state.F + 0.5 * p.delta * p.zeta * geom.K * state.F**2
    return float(np.sum(integrand) * state.grid.dX)
