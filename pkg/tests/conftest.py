"""Shared helpers: random smooth periodic fields and parameter draws."""

import numpy as np
import pytest

from wavy_film import BottomSpec, Params, PeriodicGrid, expand_geometry


def smooth_field(rng, grid, base=1.0, amp=0.2, modes=4):
    """Random periodic field with decaying harmonic content, bounded away from 0."""
    X = grid.X
    L = grid.length
    f = np.full(grid.n, float(base))
    for m in range(1, modes + 1):
        a = rng.normal() * amp / m**2
        b = rng.normal() * amp / m**2
        f += a * np.cos(2 * np.pi * m * X / L) + b * np.sin(2 * np.pi * m * X / L)
    return f


def random_params(rng, zeta=None, fluid=None):
    """Physically plausible random parameter draw."""
    alpha = rng.uniform(0.2, np.pi / 2)
    delta = rng.uniform(0.02, 0.3)
    z = rng.uniform(0.0, 0.4) if zeta is None else zeta
    Bi = 10.0 ** rng.uniform(-2, 1.2)
    R = rng.uniform(0.1, 20.0)
    return Params(alpha=alpha, delta=delta, zeta=z, Bi=Bi, R=R, fluid=fluid)


@pytest.fixture
def rng():
    return np.random.default_rng(20260816)


@pytest.fixture
def grid64():
    return PeriodicGrid(n_waves=1, points_per_wave=64)


@pytest.fixture
def sinusoid():
    return BottomSpec(kind="sinusoid", amplitude_hat=1.0, wavelength_hat=10.0)


@pytest.fixture
def wavy_setup(grid64, sinusoid):
    """Moderate-waviness geometry plus matching params."""
    zeta = 0.25
    geom = expand_geometry(sinusoid, grid64, zeta=zeta)
    p = Params(alpha=np.pi / 3, delta=0.15, zeta=zeta, Bi=1.5, R=3.0)
    return geom, p
