"""Momentum-balance groups against an independent transcription oracle.

reference_momentum_groups below is a second, structurally different
transcription of the depth-integrated momentum balance: every term carries
its coefficient as an exact Fraction and points are accumulated with
math.fsum, so agreement with the vectorized kernels is meaningful.
"""

import math
from fractions import Fraction as Fr

import numpy as np
import pytest

from wavy_film import (
    FilmRuptureError,
    Params,
    PeriodicGrid,
    RegularizationPoleError,
    StateFields,
    expand_geometry,
    residual_split,
    rhs,
    uniform_state,
)
from wavy_film.geometry import trig_factors
from wavy_film.grid import diff
from wavy_film.kernels import rhs_groups_plain
from wavy_film.model import mass_functional, state_derivatives

from conftest import random_params, smooth_field


def reference_momentum_groups(F, Q, F1, F2, F3, Q1, Q2, sr, cr, thx, K, dK,
                              delta, zeta, R, Bi):
    n = len(F)
    res0 = np.empty(n)
    res1 = np.empty(n)
    res2 = np.empty(n)
    s_tilde = np.empty(n)
    dR = delta * R
    for i in range(n):
        f, q = F[i], Q[i]
        terms0 = [
            Fr(5, 2) * sr[i] * f,
            -Fr(5, 2) * q / f**2,
            -Fr(5, 2) * delta * cr[i] * F1[i] * f,
            -Fr(15, 16) * delta * sr[i] * thx[i] * f**2,
            Fr(5, 2) * Bi * delta * F3[i] * f,
            -Fr(5, 2) * Bi * zeta * dK[i] * f,
            Fr(9, 2) * delta**2 * Q2[i],
            Fr(45, 16) * delta * zeta * K[i] * q / f,
            Fr(4, 1) * delta**2 * q * F1[i] ** 2 / f**2,
            -Fr(6, 1) * delta**2 * q * F2[i] / f,
            -Fr(9, 2) * delta**2 * Q1[i] * F1[i] / f,
        ]
        res0[i] = math.fsum(terms0)
        res1[i] = dR * math.fsum(
            [-Fr(17, 7) * q * Q1[i] / f, Fr(9, 7) * q**2 * F1[i] / f**2]
        )
        res2[i] = -(dR**2) / 210.0 * Q1[i] ** 2 * q
        s_tilde[i] = 1.0 / (1.0 - dR * q * F1[i] / 70.0)
    return res0, res1, res2, s_tilde


def _random_setup(rng, grid, bottom, zeta=None):
    p = random_params(rng, zeta=zeta)
    geom = expand_geometry(bottom, grid, zeta=p.zeta)
    F = smooth_field(rng, grid, base=1.0, amp=0.2)
    Q = smooth_field(rng, grid, base=1.0, amp=0.25)
    return StateFields(grid=grid, F=F, Q=Q), geom, p


def test_nusselt_fixed_point(rng, grid64, sinusoid):
    # F = 1, Q = 1 over a flat bottom is stationary for both models
    for _ in range(20):
        p = random_params(rng, zeta=0.0)
        geom = expand_geometry(sinusoid, grid64, zeta=0.0)
        state = uniform_state(grid64)
        for model in ("wribl", "rwribl"):
            dF, dQ = rhs(state, geom, p, model)
            assert np.max(np.abs(dF)) < 1e-13
            assert np.max(np.abs(dQ)) < 1e-13


def test_groups_match_reference_transcription(rng, grid64, sinusoid):
    for _ in range(50):
        state, geom, p = _random_setup(rng, grid64, sinusoid)
        F1, F2, F3, Q1, Q2 = state_derivatives(state)
        sr, cr = trig_factors(geom, p.alpha)
        got = residual_split(state, geom, p)
        want = reference_momentum_groups(
            state.F, state.Q, F1, F2, F3, Q1, Q2,
            sr, cr, geom.dX_theta, geom.K, geom.dX_K,
            p.delta, p.zeta, p.R, p.Bi,
        )
        for g, w in zip((got.res0, got.res1, got.res2, got.s_tilde), want):
            assert np.max(np.abs(g - w)) <= 1e-12 * max(1.0, np.max(np.abs(w)))

        # assembled rates recombine the same groups
        dR = p.delta * p.R
        dF_w, dQ_w = rhs(state, geom, p, "wribl")
        dF_r, dQ_r = rhs(state, geom, p, "rwribl")
        ref_w = (want[0] + want[1] + want[2]) / dR
        ref_r = (want[3] * want[0] + want[1]) / dR
        scale = max(1.0, np.max(np.abs(ref_w)), np.max(np.abs(ref_r)))
        assert np.max(np.abs(dQ_w - ref_w)) <= 1e-12 * scale
        assert np.max(np.abs(dQ_r - ref_r)) <= 1e-12 * scale
        # kinematics shared between models
        ref_dF = -(1.0 - p.delta * p.zeta * geom.K * state.F) * diff(state.Q, 1, grid64)
        assert np.array_equal(dF_w, dF_r)
        assert np.max(np.abs(dF_w - ref_dF)) <= 1e-13 * max(1.0, np.max(np.abs(ref_dF)))


def test_split_recombines_to_unsplit_rate(rng, grid64, sinusoid):
    state, geom, p = _random_setup(rng, grid64, sinusoid)
    split = residual_split(state, geom, p)
    dR = p.delta * p.R
    _, dQ_w = rhs(state, geom, p, "wribl")
    _, dQ_r = rhs(state, geom, p, "rwribl")
    scale = max(1.0, np.max(np.abs(dQ_w)))
    assert np.max(np.abs(dQ_w * dR - (split.res0 + split.res1 + split.res2))) < 1e-13 * dR * scale
    assert np.max(np.abs(dQ_r * dR - (split.s_tilde * split.res0 + split.res1))) < 1e-13 * dR * scale


def test_regularization_factor_anchor():
    one = np.ones(1)
    _, _, _, s = rhs_groups_plain(
        one, one, 0.1 * one, 0 * one, 0 * one, 0 * one, 0 * one,
        one, one, 0 * one, 0 * one, 0 * one,
        0.3, 0.0, 10.0, 0.0,
    )
    assert s[0] == pytest.approx(700.0 / 697.0, rel=1e-14)
    assert s[0] == pytest.approx(1.0043041606886657, rel=1e-12)


def test_regularization_factor_is_one_on_plateaus(rng, grid64, sinusoid):
    geom = expand_geometry(sinusoid, grid64, zeta=0.2)
    p = random_params(rng, zeta=0.2)
    Q = smooth_field(rng, grid64, base=1.0, amp=0.3)
    state = StateFields(grid=grid64, F=np.full(grid64.n, 1.3), Q=Q)
    split = residual_split(state, geom, p)
    assert np.all(split.s_tilde == 1.0)


def test_enslaved_flux_residual_groups(sinusoid):
    # with Q enslaved to F^3 over a flat bottom, the first-order group
    # (time derivative folded in) reduces to 3*delta*R*dX(F)*F^4 and the
    # second-order one to -(3/70)*(delta*R)^2*(dX F)^2*F^7, up to one more
    # order in the film parameter
    grid = PeriodicGrid(n_waves=1, points_per_wave=256)
    geom = expand_geometry(sinusoid, grid, zeta=0.0)
    p = Params(alpha=np.pi / 3, delta=0.15, zeta=0.0, Bi=1.0, R=4.0)
    X = grid.X
    dR = p.delta * p.R

    def errs(eps):
        F = 1.0 + eps * (0.3 * np.cos(X) + 0.2 * np.sin(2 * X))
        state = StateFields(grid=grid, F=F, Q=F**3)
        split = residual_split(state, geom, p)
        F1 = diff(F, 1, grid)
        Q1 = diff(state.Q, 1, grid)
        # kinematics at zeta=0: dT(F) = -dX(Q); enslaved dT(Q) = 3F^2 dT(F)
        dtq = 3.0 * F**2 * (-Q1)
        lhs1 = split.res1 - dR * dtq
        want1 = 3.0 * dR * F1 * F**4
        want2 = -(3.0 / 70.0) * dR**2 * F1**2 * F**7
        e1 = np.max(np.abs(lhs1 - want1)) / np.max(np.abs(want1))
        e2 = np.max(np.abs(split.res2 - want2)) / np.max(np.abs(want2))
        return e1, e2

    e1a, e2a = errs(0.05)
    e1b, e2b = errs(0.025)
    assert e1a < 0.1 and e2a < 0.1
    # remainders are one order higher, so the relative error scales like eps
    assert e1a / e1b > 1.6
    assert e2a / e2b > 1.6


def test_flat_bottom_translation_commutes(rng, grid64, sinusoid):
    state, geom, p = _random_setup(rng, grid64, sinusoid, zeta=0.0)
    shift = 7
    rolled = StateFields(grid=grid64, F=np.roll(state.F, shift), Q=np.roll(state.Q, shift))
    for model in ("wribl", "rwribl"):
        dF, dQ = rhs(state, geom, p, model)
        dF_r, dQ_r = rhs(rolled, geom, p, model)
        assert np.array_equal(dF_r, np.roll(dF, shift))
        assert np.array_equal(dQ_r, np.roll(dQ, shift))


def test_rupture_raises(grid64, sinusoid, rng):
    geom = expand_geometry(sinusoid, grid64, zeta=0.0)
    p = random_params(rng, zeta=0.0)
    F = np.ones(grid64.n)
    F[5] = -0.01
    state = StateFields(grid=grid64, F=F, Q=np.ones(grid64.n))
    with pytest.raises(FilmRuptureError) as exc:
        rhs(state, geom, p, "wribl")
    assert exc.value.index == 5


def test_regularization_pole_raises(grid64, sinusoid):
    geom = expand_geometry(sinusoid, grid64, zeta=0.0)
    p = Params(alpha=np.pi / 2, delta=0.3, zeta=0.0, Bi=0.0, R=20.0)
    F = 1.0 + 0.9 * np.sin(grid64.X)
    state = StateFields(grid=grid64, F=F, Q=np.full(grid64.n, 15.0))
    with pytest.raises(RegularizationPoleError) as exc:
        rhs(state, geom, p, "rwribl")
    assert exc.value.indices is not None and len(exc.value.indices) > 0
    assert len(exc.value.x_locations) == len(exc.value.indices)
    # the full model evaluates the same state without complaint
    rhs(state, geom, p, "wribl")


def test_state_shape_validation(grid64):
    with pytest.raises(ValueError):
        StateFields(grid=grid64, F=np.ones(grid64.n - 1), Q=np.ones(grid64.n))
    with pytest.raises(ValueError):
        rhs(uniform_state(grid64), None, None, "bogus")


def test_mass_functional_flat(grid64, sinusoid, rng):
    geom = expand_geometry(sinusoid, grid64, zeta=0.0)
    p = random_params(rng, zeta=0.0)
    state = uniform_state(grid64, F=1.25)
    assert mass_functional(state, geom, p) == pytest.approx(1.25 * grid64.length, rel=1e-14)
