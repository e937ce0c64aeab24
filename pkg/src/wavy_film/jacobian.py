"""Analytic Jacobians of the semi-discrete system.

The rate at a grid point depends on (F, F', F'', F''', Q, Q', Q'') at that
point, so the Jacobian w.r.t. the sample vectors is a sum of diagonal
channel matrices chained with the periodic stencil matrices: periodic-banded
blocks plus wraparound corners.
"""

from typing import Tuple

import numpy as np
import scipy.sparse as sp

from . import kernels
from .geometry import GeometryField, trig_factors
from .grid import Array, diff_matrix
from .model import StateFields, _groups, mass_functional, state_derivatives
from .params import Params


def _channels(state: StateFields, geom: GeometryField, p: Params, model: str):
    F1, F2, F3, Q1, Q2 = state_derivatives(state)
    sr, cr = trig_factors(geom, p.alpha)
    return kernels.jac_channels(
        state.F, state.Q, F1, F2, F3, Q1, Q2,
        sr, cr, geom.dX_theta, geom.K, geom.dX_K,
        p.delta, p.zeta, p.R, p.Bi,
        model == "rwribl",
    ), F1, Q1


def assemble_jacobian(state: StateFields, geom: GeometryField, p: Params, model: str) -> sp.csr_matrix:
    """Jacobian of (dT F, dT Q) w.r.t. the stacked samples [F; Q], 2n x 2n."""
    g = state.grid
    D1 = diff_matrix(g, 1)
    D2 = diff_matrix(g, 2)
    D3 = diff_matrix(g, 3)
    (gF, gF1, gF2, gF3, gQ, gQ1, gQ2), F1, Q1 = _channels(state, geom, p, model)
    idr = 1.0 / (p.delta * p.R)

    dia = sp.diags
    # film-thickness row: dT F = -(1 - delta*zeta*K*F) * Q'
    A_FF = dia(p.delta * p.zeta * geom.K * Q1)
    A_FQ = dia(-(1.0 - p.delta * p.zeta * geom.K * state.F)) @ D1
    # flow-rate row
    A_QF = dia(idr * gF) + dia(idr * gF1) @ D1 + dia(idr * gF2) @ D2 + dia(idr * gF3) @ D3
    A_QQ = dia(idr * gQ) + dia(idr * gQ1) @ D1 + dia(idr * gQ2) @ D2
    return sp.bmat([[A_FF, A_FQ], [A_QF, A_QQ]], format="csr")


def stationary_system(
    F: Array,
    q: float,
    geom: GeometryField,
    p: Params,
    model: str,
    constraint: str = "mean",
    mass_target: float | None = None,
) -> Tuple[Array, sp.csr_matrix]:
    """Residual and sparse Jacobian of the stationary problem.

    With constraint "flux" the flow rate q is a prescribed parameter and
    the unknowns are the F samples alone (momentum balance with
    dT(Q) = 0 at every point).  "mean" and "mass" instead treat q as an
    extra unknown closed by mean(F) = 1 or by pinning the mass
    functional to mass_target.
    """
    if constraint not in ("flux", "mean", "mass"):
        raise ValueError(
            f"unknown constraint {constraint!r}, expected 'flux', 'mean' or 'mass'"
        )
    g = geom.grid
    n = g.n
    state = StateFields(grid=g, F=F, Q=np.full(n, q))
    _, _, res0, res1, res2, s_tilde = _groups(state, geom, p)
    if model == "rwribl":
        resid = s_tilde * res0 + res1
    else:
        resid = res0 + res1 + res2

    (gF, gF1, gF2, gF3, gQ, gQ1, gQ2), _, _ = _channels(state, geom, p, model)
    dia = sp.diags
    J_FF = dia(gF) + dia(gF1) @ diff_matrix(g, 1) + dia(gF2) @ diff_matrix(g, 2) + dia(gF3) @ diff_matrix(g, 3)
    if constraint == "flux":
        return resid, sp.csr_matrix(J_FF)

    r = np.empty(n + 1)
    r[:n] = resid
    if constraint == "mass":
        if mass_target is None:
            raise ValueError("mass constraint needs mass_target")
        r[n] = mass_functional(state, geom, p) - mass_target
        row = (1.0 + p.delta * p.zeta * geom.K * F) * g.dX
    else:
        r[n] = np.mean(F) - 1.0
        row = np.full(n, 1.0 / n)
    # Q == q everywhere, so the q-column is the plain Q channel (stencil rows sum to zero)
    q_col = sp.csr_matrix(gQ.reshape(n, 1))
    constraint_row = sp.csr_matrix(row.reshape(1, n))
    J = sp.bmat([[J_FF, q_col], [constraint_row, None]], format="csr")
    return r, J
