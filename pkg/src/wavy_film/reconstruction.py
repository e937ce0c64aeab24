"""Two-dimensional flow fields from (F, Q) solutions.

The downstream velocity uses the second-order self-similar profile for
stationary flow over a sinusoidal bottom; the wall-normal component
follows from continuity with the wall-normal integral done exactly on
the polynomial profile, so the only discretization error in w is the
downstream derivative of the profile coefficients.  Cartesian mapping,
free-surface curves with overhang detection, streamline tracing and the
recirculation diagnostic live here too.
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .geometry import BottomSpec, GeometryField, _ArclengthMap, _eval_shape
from .grid import diff
from .model import StateFields
from .params import Params
from .solvers import StationarySolution

Array = np.ndarray

_TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class FlowField:
    """Velocity samples on a film-fitted curvilinear mesh.

    X has shape (nx,), everything else (nx, nz).  Z runs from the wall
    (0) to the free surface (F(X)); u is the downstream component along
    the bottom, w the wall-normal one.  x_cart/z_cart are the mapped
    coordinates (one bottom wavelength spans 2 pi when nondimensional,
    mm when dimensional).  approximate marks reconstructions from time
    snapshots, where the stationarity assumption behind the profile
    holds only approximately.
    """

    X: Array
    Z: Array
    u: Array
    w: Array
    x_cart: Array
    z_cart: Array
    metric_coeff: float  # delta*zeta, for the 1 + delta*zeta*cos(X)*Z factor
    dimensional: bool
    approximate: bool

    @property
    def film_top(self) -> Array:
        return self.Z[:, -1]


def _profile_coeffs(F: Array, Q: Array, X: Array, p: Params):
    """Coefficients a_k(X) of U = sum_k a_k(X) Z^k, k = 1..6.

    The stationary second-order profile over the sinusoid collapses to
    three self-similar shapes in Z/F; expanding them in Z keeps the
    wall-normal integral of dX(U) an exact polynomial.
    """
    cosx = np.cos(X)
    g = p.delta * p.zeta * p.R * (p.cot_alpha + p.Bi) * cosx * Q**2
    h = p.delta * p.zeta * cosx * Q
    base = 3.0 * Q / F
    c = [
        base + (4.0 / 35.0) * g,
        -0.5 * base - 0.75 * h - (9.0 / 35.0) * g,
        h,
        0.25 * g,
        -(3.0 / 20.0) * g,
        (1.0 / 40.0) * g,
    ]
    return [ck / F ** (k + 1) for k, ck in enumerate(c)]


def _eval_profile(coeffs: Sequence[Array], Z: Array) -> Array:
    u = np.zeros_like(Z)
    for k, ak in enumerate(coeffs, start=1):
        u += ak[:, None] * Z**k
    return u


def reconstruct_field(
    source: Union[StationarySolution, StateFields],
    geom: GeometryField,
    p: Params,
    *,
    n_z: int = 64,
    dimensional: bool = False,
) -> FlowField:
    """Second-order velocity field from a (F, Q) solution.

    Valid for sinusoidal bottoms only (the profile is derived for that
    shape); other bottoms are rejected.  Passing a time snapshot is
    allowed but flagged approximate, since the profile assumes
    stationary flow.  With dimensional=True the velocities come out in
    mm/s and the Cartesian coordinates in mm (requires a fluid-anchored
    parameter set); w always includes the long-wave aspect factor, so
    it is the physical wall-normal velocity on the same scale as u.
    """
    if geom.bottom.kind != "sinusoid":
        raise ValueError("flow reconstruction requires a sinusoidal bottom")
    approximate = not isinstance(source, StationarySolution)
    state = source if isinstance(source, StateFields) else source.state
    grid = geom.grid
    F, Q = state.F, state.Q
    X = grid.X

    coeffs = _profile_coeffs(F, Q, X, p)
    dcoeffs = [diff(ak, 1, grid) for ak in coeffs]

    eta = np.linspace(0.0, 1.0, n_z)
    Z = F[:, None] * eta[None, :]
    u = _eval_profile(coeffs, Z)
    flux_prime = np.zeros_like(Z)
    for k, dak in enumerate(dcoeffs, start=1):
        flux_prime += dak[:, None] * Z ** (k + 1) / (k + 1)
    metric = 1.0 + p.delta * p.zeta * np.cos(X)[:, None] * Z
    w = -flux_prime / metric

    x_cart, z_cart = to_cartesian(np.repeat(X[:, None], n_z, axis=1), Z, geom, p)

    if dimensional:
        p._need_fluid()
        scale_x = p.lam_hat / _TWO_PI
        u = u * p.u_mean
        w = w * p.delta * p.u_mean
        x_cart = x_cart * scale_x
        z_cart = z_cart * scale_x

    return FlowField(
        X=X, Z=Z, u=u, w=w, x_cart=x_cart, z_cart=z_cart,
        metric_coeff=p.delta * p.zeta,
        dimensional=dimensional, approximate=approximate,
    )


# ---------------------------------------------------------------------------
# coordinate maps


def to_cartesian(X, Z, geom: GeometryField, p: Params) -> Tuple[Array, Array]:
    """Map curvilinear (X, Z) to Cartesian, one wavelength spanning 2 pi.

    X is the rescaled arclength along the bottom, Z the wall-normal
    distance in film units.  The point is the bottom point plus Z times
    the film scale along the exact unit normal.
    """
    X = np.asarray(X, dtype=float)
    Z = np.asarray(Z, dtype=float)
    amap = _ArclengthMap(geom.bottom, geom.zeta)
    chi = amap.invert(X * amap.wave_length / _TWO_PI)
    b = geom.zeta * _eval_shape(geom.bottom, chi, 0)
    bp = geom.zeta * _eval_shape(geom.bottom, chi, 1)
    theta = np.arctan(bp)
    off = p.delta * Z
    return chi - np.sin(theta) * off, b + np.cos(theta) * off


def from_cartesian(x_hat, z_hat, geom: GeometryField, p: Params,
                   tol: float = 1e-12, max_iter: int = 50) -> Tuple[Array, Array]:
    """Invert to_cartesian by Newton on the foot-point normal condition.

    Finds the bottom point whose normal passes through the query point;
    unique for weakly undulated bottoms (delta*zeta*|K| < 1 within the
    film).
    """
    x_hat = np.asarray(x_hat, dtype=float)
    z_hat = np.asarray(z_hat, dtype=float)
    zeta = geom.zeta
    bottom = geom.bottom
    chi = np.array(x_hat, dtype=float, copy=True)
    for _ in range(max_iter):
        b = zeta * _eval_shape(bottom, chi, 0)
        bp = zeta * _eval_shape(bottom, chi, 1)
        bpp = zeta * _eval_shape(bottom, chi, 2)
        # tangency residual: (P - C(chi)) . (1, b')
        r = (x_hat - chi) + (z_hat - b) * bp
        dr = -1.0 - bp**2 + (z_hat - b) * bpp
        chi = chi - r / dr
        if np.max(np.abs(r)) < tol:
            break
    b = zeta * _eval_shape(bottom, chi, 0)
    bp = zeta * _eval_shape(bottom, chi, 1)
    theta = np.arctan(bp)
    off = (z_hat - b) * np.cos(theta) - (x_hat - chi) * np.sin(theta)
    amap = _ArclengthMap(bottom, zeta)
    X = amap.arclength(chi) * _TWO_PI / amap.wave_length
    return X, off / p.delta


# ---------------------------------------------------------------------------
# free surface


@dataclass(frozen=True)
class SurfaceCurve:
    """Free surface mapped to Cartesian coordinates.

    points has shape (n, 2); overhang_spans lists (lo, hi) intervals of
    x_hat over which the curve is multivalued, detected by sign changes
    of dx_hat along the curve; is_graph is true iff there are none.
    """

    points: Array
    is_graph: bool
    overhang_spans: Tuple[Tuple[float, float], ...]


def surface_curve(
    source: Union[StationarySolution, StateFields],
    geom: GeometryField,
    p: Params,
) -> SurfaceCurve:
    state = source if isinstance(source, StateFields) else source.state
    X = geom.grid.X
    xh, zh = to_cartesian(X, state.F, geom, p)
    dx = np.diff(xh)
    spans: List[Tuple[float, float]] = []
    i = 0
    while i < dx.size:
        if dx[i] < 0.0:
            j = i
            while j < dx.size and dx[j] < 0.0:
                j += 1
            spans.append((float(xh[j]), float(xh[i])))
            i = j
        else:
            i += 1
    return SurfaceCurve(
        points=np.column_stack([xh, zh]),
        is_graph=not spans,
        overhang_spans=tuple(spans),
    )


def vertical_thickness(
    source: Union[StationarySolution, StateFields],
    geom: GeometryField,
    p: Params,
    x_hat: Array,
) -> Array:
    """Film thickness measured along the z axis, in film units.

    The convention of thickness over the station coordinate rather than
    along the bottom normal; requires the surface to be a graph.
    """
    curve = surface_curve(source, geom, p)
    if not curve.is_graph:
        raise ValueError("surface overhangs; vertical thickness is undefined")
    x_hat = np.asarray(x_hat, dtype=float)
    xs, zs = curve.points[:, 0], curve.points[:, 1]
    L = geom.grid.length  # also the x_hat period: chi and X share 2 pi per wave
    xq = (x_hat - xs[0]) % L + xs[0]
    z_top = np.interp(xq, xs, zs, period=L)
    z_bot = geom.zeta * _eval_shape(geom.bottom, x_hat, 0)
    return (z_top - z_bot) / p.delta


# ---------------------------------------------------------------------------
# diagnostics


def eddy_diagnostic(field: FlowField) -> dict:
    """Recirculation check: a negative downstream velocity anywhere
    inside the film means a back-flow eddy."""
    u_min = float(field.u.min())
    u_max = float(field.u.max())
    return {"u_min": u_min, "u_max": u_max, "has_eddy": bool(u_min < 0.0)}


# ---------------------------------------------------------------------------
# streamlines


class _BilinearField:
    """Periodic-in-X bilinear sampler on the (X, eta) mesh."""

    def __init__(self, field: FlowField):
        self.x0 = field.X[0]
        self.dx = field.X[1] - field.X[0]
        self.nx = field.X.size
        self.length = self.nx * self.dx
        self.eta = np.linspace(0.0, 1.0, field.Z.shape[1])
        self.f_top = field.film_top
        self.u = field.u
        self.w = field.w
        self.c = field.metric_coeff
        self.X = field.X

    def film_at(self, x: float) -> float:
        return float(np.interp(
            (x - self.x0) % self.length + self.x0, self.X, self.f_top,
            period=self.length,
        ))

    def sample(self, x: float, z: float) -> Tuple[float, float]:
        f_here = self.film_at(x)
        if f_here <= 0.0:
            return 0.0, 0.0
        s = (x - self.x0) / self.dx
        i = int(np.floor(s)) % self.nx
        tx = s - np.floor(s)
        ip = (i + 1) % self.nx
        eta = z / f_here
        nz = self.eta.size
        te = eta * (nz - 1)
        j = min(max(int(np.floor(te)), 0), nz - 2)
        tz = te - j
        out = []
        for comp in (self.u, self.w):
            v00, v01 = comp[i, j], comp[i, j + 1]
            v10, v11 = comp[ip, j], comp[ip, j + 1]
            out.append(
                (1 - tx) * ((1 - tz) * v00 + tz * v01)
                + tx * ((1 - tz) * v10 + tz * v11)
            )
        u, w = out
        # advect (u, m*w): trajectories of that pair are the level sets
        # of the stream function in these coordinates
        return u, (1.0 + self.c * np.cos(x) * z) * w


def streamlines(
    field: FlowField,
    seeds: Sequence[Tuple[float, float]],
    *,
    step: float = 0.02,
    max_steps: int = 4000,
) -> List[Array]:
    """Fixed-step RK4 traces of the reconstructed velocity field.

    Each seed yields a polyline of (X, Z) points; tracing stops at the
    wall, the free surface, or after max_steps.  Seeds outside the film
    are rejected.
    """
    sampler = _BilinearField(field)
    out = []
    for x0, z0 in seeds:
        if not 0.0 <= z0 <= sampler.film_at(x0):
            raise ValueError(f"seed ({x0}, {z0}) lies outside the film")
        pts = [(float(x0), float(z0))]
        x, z = float(x0), float(z0)
        for _ in range(max_steps):
            k1 = sampler.sample(x, z)
            k2 = sampler.sample(x + 0.5 * step * k1[0], z + 0.5 * step * k1[1])
            k3 = sampler.sample(x + 0.5 * step * k2[0], z + 0.5 * step * k2[1])
            k4 = sampler.sample(x + step * k3[0], z + step * k3[1])
            x += step / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
            z += step / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
            if not 0.0 <= z <= sampler.film_at(x):
                break
            pts.append((x, z))
        out.append(np.asarray(pts))
    return out
