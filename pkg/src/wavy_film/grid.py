"""Uniform periodic grids and derivative operators.

The streamwise coordinate X is arclength along the bottom contour scaled so
that one bottom undulation spans 2*pi.  Grids cover an integer number of
undulations and are uniform; all derivatives are central finite differences
with periodic wraparound.  Formal accuracy is second order by default, with
a fourth-order alternative (stencil widths 3/3/5/5 and 5/5/7/7 for
derivative orders 1..4).

Spectral (FFT) derivatives and antiderivatives are provided as well; they
are exact for band-limited fields and serve as reference operators in
diagnostics, never in the solvers.
"""

from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np
import scipy.sparse as sp

Array = np.ndarray

# Central stencils in symmetric-pair form: odd derivative orders combine
# c_k*(f[i+k] - f[i-k]), even orders c_k*(f[i+k] + f[i-k] - 2 f[i]), so a
# constant field cancels exactly in floating point.  Coefficients are to be
# divided by dX**order.  {fd_order: {derivative order: ((k, c_k), ...)}}
_PAIR_STENCILS = {
    2: {
        1: ((1, 0.5),),
        2: ((1, 1.0),),
        3: ((1, -1.0), (2, 0.5)),
        4: ((1, -4.0), (2, 1.0)),
    },
    4: {
        1: ((1, 2.0 / 3.0), (2, -1.0 / 12.0)),
        2: ((1, 4.0 / 3.0), (2, -1.0 / 12.0)),
        3: ((1, -13.0 / 8.0), (2, 1.0), (3, -1.0 / 8.0)),
        4: ((1, -6.5), (2, 2.0), (3, -1.0 / 6.0)),
    },
}
_STENCILS = _PAIR_STENCILS  # validation key set alias


@dataclass(frozen=True)
class PeriodicGrid:
    """Uniform periodic grid over n_waves bottom undulations.

    dX = 2*pi/points_per_wave and X covers [0, 2*pi*n_waves).  At least 16
    points per wave are required to keep the widest stencil meaningful.
    """

    n_waves: int
    points_per_wave: int
    fd_order: int = 2

    def __post_init__(self):
        if self.n_waves < 1:
            raise ValueError(f"n_waves must be >= 1, got {self.n_waves}")
        if self.points_per_wave < 16:
            raise ValueError(f"points_per_wave must be >= 16, got {self.points_per_wave}")
        if self.fd_order not in _STENCILS:
            raise ValueError(f"fd_order must be one of {sorted(_STENCILS)}, got {self.fd_order}")

    @property
    def n(self) -> int:
        return self.n_waves * self.points_per_wave

    @property
    def dX(self) -> float:
        return 2.0 * np.pi / self.points_per_wave

    @property
    def length(self) -> float:
        return 2.0 * np.pi * self.n_waves

    @cached_property
    def X(self) -> Array:
        return self.dX * np.arange(self.n)


def diff(f: Array, order: int, grid: PeriodicGrid) -> Array:
    """Periodic central finite-difference derivative of the given order (1..4)."""
    if order not in (1, 2, 3, 4):
        raise ValueError(f"derivative order must be 1..4, got {order}")
    pairs = _PAIR_STENCILS[grid.fd_order][order]
    out = np.zeros_like(f)
    if order % 2:
        for k, c in pairs:
            out += c * (np.roll(f, -k) - np.roll(f, k))
    else:
        for k, c in pairs:
            out += c * (np.roll(f, -k) + np.roll(f, k) - 2.0 * f)
    out /= grid.dX**order
    return out


def _flat_stencil(fd_order: int, order: int):
    """(offsets, coefficients) expanded from the pair form."""
    pairs = _PAIR_STENCILS[fd_order][order]
    sign = -1.0 if order % 2 else 1.0
    table = {}
    for k, c in pairs:
        table[k] = table.get(k, 0.0) + c
        table[-k] = table.get(-k, 0.0) + sign * c
        if order % 2 == 0:
            table[0] = table.get(0, 0.0) - 2.0 * c
    offsets = sorted(table)
    return tuple(offsets), tuple(table[o] for o in offsets)


@lru_cache(maxsize=None)
def diff_matrix(grid: PeriodicGrid, order: int) -> sp.csr_matrix:
    """Sparse circulant matrix applying diff(., order, grid)."""
    offsets, coeffs = _flat_stencil(grid.fd_order, order)
    n = grid.n
    rows = np.repeat(np.arange(n), len(offsets))
    cols = (rows + np.tile(offsets, n)) % n
    vals = np.tile(np.asarray(coeffs) / grid.dX**order, n)
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


def _wavenumbers(n: int, length: float) -> Array:
    return np.fft.rfftfreq(n, d=1.0 / n) * (2.0 * np.pi / length)


def spectral_diff(f: Array, order: int, grid: PeriodicGrid) -> Array:
    """FFT derivative; exact for fields resolved on the grid."""
    if np.iscomplexobj(f):
        # transform the channels separately: a full complex fft would
        # leak real-channel roundoff into a tiny imaginary channel,
        # which breaks complex-step differentiation through this routine
        return (spectral_diff(f.real, order, grid)
                + 1j * spectral_diff(f.imag, order, grid))
    k = _wavenumbers(grid.n, grid.length)
    fhat = np.fft.rfft(f)
    return np.fft.irfft(fhat * (1j * k) ** order, n=grid.n)


def spectral_antiderivative(f: Array, grid: PeriodicGrid) -> Array:
    """Antiderivative of the zero-mean part of f, itself zero-mean in Fourier space.

    The caller is responsible for the secular mean(f)*X contribution.
    """
    k = _wavenumbers(grid.n, grid.length)
    fhat = np.fft.rfft(f)
    fhat[0] = 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        ihat = np.where(k > 0, fhat / (1j * np.where(k > 0, k, 1.0)), 0.0)
    return np.fft.irfft(ihat, n=grid.n)
