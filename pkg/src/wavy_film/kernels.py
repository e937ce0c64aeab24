"""Fused numeric cores for the depth-integrated model.

Everything here is written as plain elementwise array algebra so the same
source compiles under numba (backend "numba") or runs as vectorized numpy
(backend "numpy").  The *_plain aliases always point at the uncompiled
versions for benchmarking and cross-checks.

Inputs are the point values F, Q, their X-derivatives (F1..F3, Q1, Q2) and
the sampled geometry: sr/cr the inclination ratios, thx = dX(theta),
K and dK the composed curvature and its derivative.

The momentum balance is grouped as res0 + res1 + res2 = delta*R*dT(Q) with

  res0 = 5/2*sr*F - 5/2*Q/F^2 - 5/2*delta*cr*F1*F - 15/16*delta*sr*thx*F^2
         + 5/2*Bi*(delta*F3 - zeta*dK)*F + 9/2*delta^2*Q2
         + 45/16*delta*zeta*K*Q/F + 4*delta^2*Q*F1^2/F^2
         - 6*delta^2*Q*F2/F - 9/2*delta^2*Q1*F1/F
  res1 = delta*R*(-17/7*Q*Q1/F + 9/7*Q^2*F1/F^2)   (dT(Q) kept separate)
  res2 = -(delta*R)^2/210 * Q1^2*Q

and the regularization factor is s = 1/(1 - delta*R*Q*F1/70).  The
regularized rate equation is delta*R*dT(Q) = s*res0 + res1, the unregularized
one delta*R*dT(Q) = res0 + res1 + res2.
"""

import numpy as np

from .backend import maybe_jit


def _rhs_groups(F, Q, F1, F2, F3, Q1, Q2, sr, cr, thx, K, dK, delta, zeta, R, Bi):
    dR = delta * R
    d2 = delta * delta
    iF = 1.0 / F
    iF2 = iF * iF
    res0 = (
        2.5 * sr * F
        - 2.5 * Q * iF2
        - 2.5 * delta * cr * F1 * F
        - 0.9375 * delta * sr * thx * F * F
        + 2.5 * Bi * (delta * F3 - zeta * dK) * F
        + 4.5 * d2 * Q2
        + 2.8125 * delta * zeta * K * Q * iF
        + 4.0 * d2 * Q * F1 * F1 * iF2
        - 6.0 * d2 * Q * F2 * iF
        - 4.5 * d2 * Q1 * F1 * iF
    )
    res1 = dR * (-(17.0 / 7.0) * Q * Q1 * iF + (9.0 / 7.0) * Q * Q * F1 * iF2)
    res2 = -(dR * dR / 210.0) * Q1 * Q1 * Q
    s_tilde = 1.0 / (1.0 - (dR / 70.0) * Q * F1)
    return res0, res1, res2, s_tilde


def _jac_channels(F, Q, F1, F2, F3, Q1, Q2, sr, cr, thx, K, dK, delta, zeta, R, Bi, regularized):
    """Partial derivatives of G = delta*R*dT(Q) w.r.t. the point channels.

    Returns (gF, gF1, gF2, gF3, gQ, gQ1, gQ2); the Jacobian w.r.t. the grid
    samples is assembled by chaining these with the stencil matrices.
    """
    dR = delta * R
    d2 = delta * delta
    iF = 1.0 / F
    iF2 = iF * iF
    iF3 = iF2 * iF

    r0_F = (
        2.5 * sr
        + 5.0 * Q * iF3
        - 2.5 * delta * cr * F1
        - 1.875 * delta * sr * thx * F
        + 2.5 * Bi * (delta * F3 - zeta * dK)
        - 2.8125 * delta * zeta * K * Q * iF2
        - 8.0 * d2 * Q * F1 * F1 * iF3
        + 6.0 * d2 * Q * F2 * iF2
        + 4.5 * d2 * Q1 * F1 * iF2
    )
    r0_F1 = -2.5 * delta * cr * F + 8.0 * d2 * Q * F1 * iF2 - 4.5 * d2 * Q1 * iF
    r0_F2 = -6.0 * d2 * Q * iF
    r0_F3 = 2.5 * Bi * delta * F
    r0_Q = -2.5 * iF2 + 2.8125 * delta * zeta * K * iF + 4.0 * d2 * F1 * F1 * iF2 - 6.0 * d2 * F2 * iF
    r0_Q1 = -4.5 * d2 * F1 * iF
    r0_Q2 = 4.5 * d2 * np.ones_like(F)

    c17 = (17.0 / 7.0) * dR
    c9 = (9.0 / 7.0) * dR
    r1_F = c17 * Q * Q1 * iF2 - 2.0 * c9 * Q * Q * F1 * iF3
    r1_F1 = c9 * Q * Q * iF2
    r1_Q = -c17 * Q1 * iF + 2.0 * c9 * Q * F1 * iF2
    r1_Q1 = -c17 * Q * iF

    if regularized:
        res0 = (
            2.5 * sr * F
            - 2.5 * Q * iF2
            - 2.5 * delta * cr * F1 * F
            - 0.9375 * delta * sr * thx * F * F
            + 2.5 * Bi * (delta * F3 - zeta * dK) * F
            + 4.5 * d2 * Q2
            + 2.8125 * delta * zeta * K * Q * iF
            + 4.0 * d2 * Q * F1 * F1 * iF2
            - 6.0 * d2 * Q * F2 * iF
            - 4.5 * d2 * Q1 * F1 * iF
        )
        s = 1.0 / (1.0 - (dR / 70.0) * Q * F1)
        ds = (dR / 70.0) * s * s  # d(s)/d(Q*F1)
        gF = s * r0_F + r1_F
        gF1 = s * r0_F1 + res0 * ds * Q + r1_F1
        gF2 = s * r0_F2
        gF3 = s * r0_F3
        gQ = s * r0_Q + res0 * ds * F1 + r1_Q
        gQ1 = s * r0_Q1 + r1_Q1
        gQ2 = s * r0_Q2
    else:
        r2_Q = -(dR * dR / 210.0) * Q1 * Q1
        r2_Q1 = -(dR * dR / 105.0) * Q1 * Q
        gF = r0_F + r1_F
        gF1 = r0_F1 + r1_F1
        gF2 = r0_F2
        gF3 = r0_F3
        gQ = r0_Q + r1_Q + r2_Q
        gQ1 = r0_Q1 + r1_Q1 + r2_Q1
        gQ2 = r0_Q2
    return gF, gF1, gF2, gF3, gQ, gQ1, gQ2


rhs_groups_plain = _rhs_groups
jac_channels_plain = _jac_channels

rhs_groups = maybe_jit(_rhs_groups)
jac_channels = maybe_jit(_jac_channels)
