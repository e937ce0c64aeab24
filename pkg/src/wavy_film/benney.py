"""Enslaved flux expansion in the long-wave parameter.

For slow dynamics the flux is slaved to the film thickness order by
order in the formal parameter carried jointly by ``delta`` and ``zeta``
(their ratio xi stays fixed).  With primes denoting X derivatives:

    Q0 = F^3
    Q1 = (6/5) delta R F' F^6 - F^3 * (delta cot(alpha) F' - delta Bi F'''
         + zeta Bi K0' + zeta cot(alpha) theta1)

Q2 collects fifteen terms, kept individually under stable string IDs so
a transcription error localizes to one term.  Each term (or group of
terms sharing a wall-normal polynomial) is paired one to one with a
velocity polynomial in ``u2_profile`` whose depth integral reproduces
it; quadrature of that profile is the independent route used to check
the transcription.

The module also evaluates the velocity profiles themselves, the
evolution right hand side of the single-equation model with the flux
fully enslaved (the Benney equation adapted to wavy walls), and the
residual of the depth-averaged momentum balance under the enslaved
flux, whose decay order in the long-wave parameter is the consistency
diagnostic for the averaged models.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .geometry import GeometryField, expand_geometry, trig_factors
from .grid import PeriodicGrid, diff, spectral_diff
from .kernels import rhs_groups_plain
from .params import Params

Array = np.ndarray

# Step for complex-step differentiation of the enslaved flux in time.
# Small enough that the O(h^2) truncation vanishes below roundoff, large
# enough that tenth-power products stay far from the underflow floor.
_CSTEP = 1.0e-100

PROFILE_KINDS = ("u0", "u1", "utilde", "utilde2")


@dataclass(frozen=True)
class BenneyExpansion:
    """Flux orders on the grid; ``q2_terms`` keeps the named terms."""

    q0: Array
    q1: Array
    q2: Array
    q2_terms: dict[str, Array]

    @property
    def q_total(self) -> Array:
        return self.q0 + self.q1 + self.q2


def q2_term_arrays(
    F: Array,
    F1: Array,
    F2: Array,
    F3: Array,
    F4: Array,
    k0: Array,
    dk0: Array,
    d2k0: Array,
    th1: Array,
    dth1: Array,
    *,
    delta: float,
    zeta: float,
    R: float,
    Bi: float,
    cot_alpha: float,
) -> dict[str, Array]:
    """The fifteen second-order flux terms; plain algebra, broadcasts freely."""
    d, z = delta, zeta
    terms = {
        "inertia_f2": (12.0 / 7.0) * d * d * R * R * F2 * F**10,
        "inertia_f1sq": (381.0 / 35.0) * d * d * R * R * F1 * F1 * F**9,
        "grav_cap_f7": (10.0 / 7.0) * d * d * R * (Bi * F4 - cot_alpha * F2) * F**7,
        "bottom_r_f7": -(8.0 / 35.0) * d * z * R * (Bi * d2k0 + cot_alpha * dth1) * F**7,
        "mixed_bi_f2sq": (36.0 / 5.0) * d * d * R * Bi * F2 * F2 * F**6,
        "mixed_cot_f1sq": -(24.0 / 5.0) * d * d * R * cot_alpha * F1 * F1 * F**6,
        "mixed_bi_f3f1": 12.0 * d * d * R * Bi * F3 * F1 * F**6,
        "mixed_bottom_f1": -(12.0 / 5.0) * d * z * R * (Bi * dk0 + cot_alpha * th1) * F1 * F**6,
        "cap_f1sq_f2": (72.0 / 5.0) * d * d * R * Bi * F1 * F1 * F2 * F**5,
        "curv_f4": (9.0 / 8.0) * d * z * k0 * F**4,
        "slope_x_f4": -(3.0 / 8.0) * d * z * dth1 * F**4,
        "visc_f2_f4": 3.0 * d * d * F2 * F**4,
        "slope_f1_f3": -d * z * th1 * F1 * F**3,
        "visc_f1sq_f3": 7.0 * d * d * F1 * F1 * F**3,
        "slope_sq_f3": -0.5 * z * z * th1 * th1 * F**3,
    }
    return terms


def q_expansion(
    F: Array,
    geom: GeometryField,
    p: Params,
    deriv: Callable[[Array, int], Array] | None = None,
) -> BenneyExpansion:
    """Evaluate the enslaved flux orders for a thickness field on the grid.

    ``deriv`` maps (field, order) to the X derivative; defaults to the
    grid finite-difference stencils.  All algebra broadcasts, so a
    complex thickness perturbation passes through unchanged, which is
    what the complex-step time derivative relies on.
    """
    grid = geom.grid
    if deriv is None:
        deriv = lambda f, m: diff(f, m, grid)
    F1 = deriv(F, 1)
    F2 = deriv(F, 2)
    F3 = deriv(F, 3)
    F4 = deriv(F, 4)
    d, z = p.delta, p.zeta
    q0 = F**3
    kappa1 = (
        d * p.cot_alpha * F1
        - d * p.Bi * F3
        + z * p.Bi * geom.dX_K0
        + z * p.cot_alpha * geom.theta1
    )
    q1 = 1.2 * d * p.R * F1 * F**6 - F**3 * kappa1
    terms = q2_term_arrays(
        F,
        F1,
        F2,
        F3,
        F4,
        geom.K0,
        geom.dX_K0,
        geom.d2X_K0,
        geom.theta1,
        geom.dX_theta1,
        delta=d,
        zeta=z,
        R=p.R,
        Bi=p.Bi,
        cot_alpha=p.cot_alpha,
    )
    q2 = sum(terms.values())
    return BenneyExpansion(q0=q0, q1=q1, q2=q2, q2_terms=terms)


def benney_evolution_rhs(
    F: Array,
    geom: GeometryField,
    p: Params,
    deriv: Callable[[Array, int], Array] | None = None,
) -> Array:
    """dF/dT for the single-equation model with the flux fully enslaved."""
    grid = geom.grid
    if deriv is None:
        deriv = lambda f, m: diff(f, m, grid)
    q = q_expansion(F, geom, p, deriv).q_total
    return -(1.0 - p.delta * p.zeta * geom.K * F) * deriv(q, 1)


def enslaved_rate(
    F: Array,
    geom: GeometryField,
    p: Params,
    deriv: Callable[[Array, int], Array] | None = None,
) -> Array:
    """dQ/dT implied by the enslaved flux, via a complex step.

    The chain rule through the expansion is exact to machine precision:
    dQ/dT = Im Q(F + i h dF/dT) / h with dF/dT from the kinematic
    balance evaluated on the enslaved flux itself.
    """
    grid = geom.grid
    if deriv is None:
        deriv = lambda f, m: diff(f, m, grid)
    q = q_expansion(F, geom, p, deriv).q_total
    f_dot = -(1.0 - p.delta * p.zeta * geom.K * F) * deriv(q, 1)
    q_pert = q_expansion(F + 1j * _CSTEP * f_dot, geom, p, deriv).q_total
    return np.imag(q_pert) / _CSTEP


def averaged_residual_field(
    F: Array,
    geom: GeometryField,
    p: Params,
    model: str = "wribl",
    deriv: Callable[[Array, int], Array] | None = None,
) -> Array:
    """Pointwise residual of the averaged momentum balance under enslaving.

    Inserting (Q0 + Q1 + Q2)(F) into the averaged balance, with dQ/dT
    eliminated through the enslaved chain rule and the kinematic
    equation, leaves a remainder of third order in the long-wave
    parameter for both model variants.  Spectral derivatives are the
    default: at small sweep amplitudes a stencil truncation error would
    mask the decay being measured.
    """
    grid = geom.grid
    if deriv is None:
        deriv = lambda f, m: spectral_diff(f, m, grid)
    Q = q_expansion(F, geom, p, deriv).q_total
    F1 = deriv(F, 1)
    F2 = deriv(F, 2)
    F3 = deriv(F, 3)
    Q1 = deriv(Q, 1)
    Q2 = deriv(Q, 2)
    sin_ratio, cos_ratio = trig_factors(geom, p.alpha)
    res0, res1, res2, s_tilde = rhs_groups_plain(
        F,
        Q,
        F1,
        F2,
        F3,
        Q1,
        Q2,
        sin_ratio,
        cos_ratio,
        geom.dX_theta,
        geom.K,
        geom.dX_K,
        p.delta,
        p.zeta,
        p.R,
        p.Bi,
    )
    dq_dt = enslaved_rate(F, geom, p, deriv)
    if model == "rwribl":
        return s_tilde * res0 + res1 - p.delta * p.R * dq_dt
    return res0 + res1 + res2 - p.delta * p.R * dq_dt


def consistency_residual(
    F: Array,
    geom: GeometryField,
    p: Params,
    eps_scale: float = 1.0,
    model: str = "wribl",
) -> float:
    """RMS residual norm with delta and zeta jointly scaled by eps_scale.

    The ratio zeta/delta stays fixed and the geometry is rebuilt at the
    scaled waviness, so halving eps_scale probes the formal order of
    the remainder (third order for both model variants).
    """
    p_eps = Params(
        alpha=p.alpha,
        delta=eps_scale * p.delta,
        zeta=eps_scale * p.zeta,
        Bi=p.Bi,
        R=p.R,
    )
    geom_eps = geom.with_zeta(p_eps.zeta)
    resid = averaged_residual_field(F, geom_eps, p_eps, model=model)
    return float(np.sqrt(np.mean(resid**2)))


def consistency_scan(
    F: Array,
    geom: GeometryField,
    p: Params,
    eps_values,
    model: str = "wribl",
) -> tuple[Array, float]:
    """Residual norms over an eps ladder plus the fitted log-log slope."""
    eps_values = np.asarray(eps_values, dtype=float)
    norms = np.array(
        [consistency_residual(F, geom, p, eps, model=model) for eps in eps_values]
    )
    slope = float(np.polyfit(np.log(eps_values), np.log(norms), 1)[0])
    return norms, slope


def u0_profile(Z: Array, F: Array) -> Array:
    """Leading parabolic profile; flux F^3 at Z = F."""
    return -1.5 * Z**2 + 3.0 * F * Z


def u1_profile(
    Z: Array,
    F: Array,
    F1: Array,
    F3: Array,
    dk0: Array,
    th1: Array,
    *,
    delta: float,
    zeta: float,
    R: float,
    Bi: float,
    cot_alpha: float,
) -> Array:
    """First correction profile; depth integral reproduces Q1."""
    s = Z / F
    kappa1 = (
        delta * cot_alpha * F1
        - delta * Bi * F3
        + zeta * Bi * dk0
        + zeta * cot_alpha * th1
    )
    inertial = delta * R * F1 * F**5 * (0.375 * s**4 - 1.5 * s**3 + 3.0 * s)
    return inertial - 3.0 * F**2 * kappa1 * (s - 0.5 * s**2)


def u2_profile(
    Z: Array,
    F: Array,
    F1: Array,
    F2: Array,
    F3: Array,
    F4: Array,
    k0: Array,
    dk0: Array,
    d2k0: Array,
    th1: Array,
    dth1: Array,
    *,
    delta: float,
    zeta: float,
    R: float,
    Bi: float,
    cot_alpha: float,
) -> Array:
    """Second correction profile, grouped to pair with ``q2_term_arrays``.

    Each group's polynomial integrates over [0, F] to the matching flux
    term (the four ``mixed_*`` terms share one polynomial), so Gauss
    quadrature of this profile is an independent route to Q2.
    """
    d, z = delta, zeta
    u = d * d * R * R * F2 * (
        -(27.0 / 4480.0) * F * Z**8
        + (27.0 / 560.0) * F**2 * Z**7
        - 0.15 * F**3 * Z**6
        + 0.225 * F**4 * Z**5
        + 0.375 * F**5 * Z**4
        - 2.1 * F**6 * Z**3
        + (30.0 / 7.0) * F**8 * Z
    )
    u = u + d * d * R * R * F1 * F1 * (
        -(27.0 / 4480.0) * Z**8
        + (27.0 / 560.0) * F * Z**7
        - (21.0 / 80.0) * F**2 * Z**6
        + 0.9 * F**3 * Z**5
        + 1.875 * F**4 * Z**4
        - 12.6 * F**5 * Z**3
        + (948.0 / 35.0) * F**7 * Z
    )
    u = u + d * d * R * (Bi * F4 - cot_alpha * F2) * (
        0.025 * Z**6
        - 0.15 * F * Z**5
        + 0.75 * F**2 * Z**4
        - 2.0 * F**3 * Z**3
        + 3.6 * F**5 * Z
    )
    u = u - d * z * R * (Bi * d2k0 + cot_alpha * dth1) * (
        0.025 * Z**6
        - 0.15 * F * Z**5
        + 0.375 * F**2 * Z**4
        - 0.5 * F**3 * Z**3
        + 0.6 * F**5 * Z
    )
    u = u + d * R * (
        3.0 * d * Bi * F2 * F2
        - 2.0 * d * cot_alpha * F1 * F1
        + 5.0 * d * Bi * F3 * F1
        - z * (Bi * dk0 + cot_alpha * th1) * F1
    ) * (0.75 * F * Z**4 - 3.0 * F**2 * Z**3 + 6.0 * F**4 * Z)
    u = u + d * d * R * Bi * F1 * F1 * F2 * (
        4.5 * Z**4 - 18.0 * F * Z**3 + 36.0 * F**3 * Z
    )
    u = u + d * z * k0 * (0.5 * Z**3 - 1.5 * F * Z**2 + 3.0 * F**2 * Z)
    u = u + d * z * dth1 * (-0.5 * Z**3 + 1.5 * F * Z**2 - 1.5 * F**2 * Z)
    u = u + d * d * F2 * (-(Z**3) - 1.5 * F * Z**2 + 7.5 * F**2 * Z)
    u = u + d * z * th1 * F1 * (1.5 * Z**2 - 3.0 * F * Z)
    u = u + d * d * F1 * F1 * (-1.5 * Z**2 + 15.0 * F * Z)
    u = u + z * z * th1 * th1 * (0.75 * Z**2 - 1.5 * F * Z)
    return u


def utilde_profile(
    Z: Array,
    F: Array,
    Q: Array,
    Qx: Array,
    *,
    delta: float,
    R: float,
) -> Array:
    """Averaged-model closure profile for given (F, Q).

    The parabolic part carries the full flux Q; the inertial corrector
    proportional to dQ/dX integrates to zero across the depth.
    """
    s = Z / F
    base = (3.0 * Q / F) * (s - 0.5 * s**2)
    corr = delta * R * Qx * Q * (0.125 * s**4 - 0.5 * s**3 + 0.6 * s**2 - 0.2 * s)
    return base + corr


def stationary_profile_coeffs(
    F: Array,
    Q: float,
    geom: GeometryField,
    p: Params,
) -> tuple[Array, Array, Array, Array, Array, Array]:
    """Monomial coefficients (c1..c6) of the steady second-order profile.

    u(X, Z) = sum_k c_k(X) Z^k for a steady state over a single-harmonic
    bottom, where the flux Q is an X-independent constant.  The depth
    integral returns exactly Q at every X, and the wall-normal companion
    follows from incompressibility in the fitted frame.  cos X enters
    through the leading bottom curvature, which is why the recipe is
    restricted to single-harmonic bottoms (checked by the caller).
    """
    d, z = p.delta, p.zeta
    cosx = geom.K0
    amp = d * z * p.R * (p.cot_alpha + p.Bi) * cosx
    c1 = 3.0 * Q / F**2 + 4.0 * amp * Q**2 / (35.0 * F)
    c2 = (
        -1.5 * Q / F**3
        - 0.75 * d * z * cosx * Q / F**2
        - 9.0 * amp * Q**2 / (35.0 * F**2)
    )
    c3 = d * z * cosx * Q / F**3 + np.zeros_like(F)
    c4 = amp * Q**2 / (4.0 * F**4)
    c5 = -3.0 * amp * Q**2 / (20.0 * F**5)
    c6 = amp * Q**2 / (40.0 * F**6)
    return c1, c2, c3, c4, c5, c6


def profile_eval(
    kind: str,
    Z: Array,
    F: Array,
    geom: GeometryField,
    p: Params,
    Q: Array | float | None = None,
    deriv: Callable[[Array, int], Array] | None = None,
) -> Array:
    """Evaluate a named velocity profile at heights Z above the wall.

    Kinds: "u0" and "u1" are the expansion profiles slaved to F alone;
    "utilde" is the averaged-model closure profile for given (F, Q);
    "utilde2" is the steady second-order profile for a single-harmonic
    bottom with scalar flux Q.  Z must lie in [0, F] pointwise.
    """
    if kind not in PROFILE_KINDS:
        raise ValueError(f"unknown profile kind {kind!r}; expected one of {PROFILE_KINDS}")
    Z = np.asarray(Z, dtype=float)
    if np.any(Z < 0.0) or np.any(Z > np.asarray(F) * (1.0 + 1e-12)):
        raise ValueError("Z must lie within [0, F]")
    grid = geom.grid
    if deriv is None:
        deriv = lambda f, m: diff(f, m, grid)
    common = dict(
        delta=p.delta, zeta=p.zeta, R=p.R, Bi=p.Bi, cot_alpha=p.cot_alpha
    )
    if kind == "u0":
        return u0_profile(Z, F)
    if kind == "u1":
        return u1_profile(
            Z, F, deriv(F, 1), deriv(F, 3), geom.dX_K0, geom.theta1, **common
        )
    if kind == "utilde":
        if Q is None:
            raise ValueError("utilde profile needs the flux Q")
        Q = np.broadcast_to(np.asarray(Q, dtype=float), F.shape)
        return utilde_profile(Z, F, Q, deriv(Q, 1), delta=p.delta, R=p.R)
    if geom.bottom.kind != "sinusoid":
        raise ValueError("utilde2 profile is defined for single-harmonic bottoms only")
    if Q is None or np.ndim(Q) > 0:
        raise ValueError("utilde2 profile needs a scalar flux Q")
    c1, c2, c3, c4, c5, c6 = stationary_profile_coeffs(F, float(Q), geom, p)
    return Z * (c1 + Z * (c2 + Z * (c3 + Z * (c4 + Z * (c5 + Z * c6)))))
