"""Nondimensional parameter groups and dimensional conversion.

With nu the kinematic viscosity (mm^2/s), h_hat the Nusselt flat-film
thickness (mm), lambda_hat the bottom wavelength (mm) and alpha the mean
inclination angle, the groups are

    delta = 2*pi*h_hat/lambda_hat          film parameter
    zeta  = 2*pi*a_hat/lambda_hat          bottom waviness
    xi    = zeta/delta                     relative waviness
    Bi    = 4*pi^2*sigma/(rho*g*lambda_hat^2*sin(alpha))
    R     = g*sin(alpha)*h_hat^3/(3*nu^2)  Reynolds number

The surface velocity scale is u_mean = g*sin(alpha)*h_hat^2/(3*nu) and time
is scaled by lambda_hat/(2*pi*u_mean).  rho enters in g/cm^3 and sigma in
mN/m, per the usual lab units; both are converted internally to the mm-g-s
system (1 g/cm^3 = 1e-3 g/mm^3, 1 mN/m = 1 g/s^2).
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .geometry import BottomSpec

G_DEFAULT = 9810.0  # mm/s^2

_TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class DimensionalFluidSpec:
    """Fluid properties in lab units."""

    nu: float  # kinematic viscosity, mm^2/s
    rho: float  # density, g/cm^3
    sigma: float  # surface tension, mN/m
    g: float = G_DEFAULT  # gravity, mm/s^2

    def __post_init__(self):
        for name in ("nu", "rho", "sigma", "g"):
            v = getattr(self, name)
            if not v > 0.0:
                raise ValueError(f"{name} must be positive, got {v}")


@dataclass(frozen=True)
class Params:
    """Nondimensional parameter set for one run.

    alpha is in radians.  When the run is anchored to a physical setup,
    fluid and lam_hat are set and delta/R stay mutually consistent through
    the flat-film thickness.
    """

    alpha: float
    delta: float
    zeta: float
    Bi: float
    R: float
    fluid: Optional[DimensionalFluidSpec] = None
    lam_hat: Optional[float] = None  # mm

    def __post_init__(self):
        if not 0.0 < self.alpha <= 0.5 * np.pi:
            raise ValueError(f"alpha must lie in (0, pi/2], got {self.alpha}")
        if not self.delta > 0.0:
            raise ValueError(f"delta must be positive, got {self.delta}")
        if self.zeta < 0.0:
            raise ValueError(f"zeta must be nonnegative, got {self.zeta}")
        if self.Bi < 0.0:
            raise ValueError(f"Bi must be nonnegative, got {self.Bi}")
        if not self.R > 0.0:
            raise ValueError(f"R must be positive, got {self.R}")
        if (self.fluid is None) != (self.lam_hat is None):
            raise ValueError("fluid and lam_hat must be given together")
        if self.fluid is not None:
            delta_check = _TWO_PI * _h_hat(self.fluid, self.alpha, self.R) / self.lam_hat
            if abs(delta_check - self.delta) > 1e-10 * max(1.0, abs(self.delta)):
                raise ValueError(
                    f"delta={self.delta} inconsistent with fluid spec "
                    f"(h_hat from R gives delta={delta_check})"
                )

    @property
    def xi(self) -> float:
        return self.zeta / self.delta

    @property
    def cot_alpha(self) -> float:
        return np.cos(self.alpha) / np.sin(self.alpha)

    # --- dimensional scales (require fluid) -------------------------------
    def _need_fluid(self):
        if self.fluid is None:
            raise ValueError("dimensional scales need a fluid spec")

    @property
    def h_hat(self) -> float:
        """Flat-film thickness, mm."""
        self._need_fluid()
        return _h_hat(self.fluid, self.alpha, self.R)

    @property
    def u_mean(self) -> float:
        """Surface velocity scale g*sin(alpha)*h_hat^2/(3*nu), mm/s."""
        self._need_fluid()
        return self.fluid.g * np.sin(self.alpha) * self.h_hat**2 / (3.0 * self.fluid.nu)

    @property
    def t_scale(self) -> float:
        """Time unit lambda_hat/(2*pi*u_mean), s."""
        return self.lam_hat / (_TWO_PI * self.u_mean)

    @property
    def a_hat(self) -> float:
        """Bottom amplitude zeta*lambda_hat/(2*pi), mm."""
        self._need_fluid()
        return self.zeta * self.lam_hat / _TWO_PI

    def with_r(self, R: float) -> "Params":
        """Same setup at a different Reynolds number.

        With a fluid attached, delta follows R through the film thickness;
        purely nondimensional parameter sets keep delta fixed.
        """
        if self.fluid is not None:
            delta = _TWO_PI * _h_hat(self.fluid, self.alpha, R) / self.lam_hat
            return Params(
                alpha=self.alpha,
                delta=delta,
                zeta=self.zeta,
                Bi=self.Bi,
                R=R,
                fluid=self.fluid,
                lam_hat=self.lam_hat,
            )
        return Params(alpha=self.alpha, delta=self.delta, zeta=self.zeta, Bi=self.Bi, R=R)

    def with_zeta(self, zeta: float) -> "Params":
        """Same setup at a different bottom waviness."""
        return Params(
            alpha=self.alpha,
            delta=self.delta,
            zeta=float(zeta),
            Bi=self.Bi,
            R=self.R,
            fluid=self.fluid,
            lam_hat=self.lam_hat,
        )


def _h_hat(fluid: DimensionalFluidSpec, alpha: float, R: float) -> float:
    return (3.0 * fluid.nu**2 * R / (fluid.g * np.sin(alpha))) ** (1.0 / 3.0)


def biot_number(fluid: DimensionalFluidSpec, lam_hat: float, alpha: float) -> float:
    """Bi = 4*pi^2*sigma/(rho*g*lambda_hat^2*sin(alpha)), unit-checked.

    sigma [mN/m] = [g/s^2] and rho [g/cm^3] = 1e-3 [g/mm^3] combine with g
    [mm/s^2] and lambda_hat [mm] to a dimensionless group.
    """
    rho_mgs = 1e-3 * fluid.rho
    return 4.0 * np.pi**2 * fluid.sigma / (rho_mgs * fluid.g * lam_hat**2 * np.sin(alpha))


def nondimensionalize(
    fluid: DimensionalFluidSpec,
    bottom: BottomSpec,
    alpha: float,
    R: float,
    zeta: Optional[float] = None,
) -> Params:
    """Build Params from a physical setup at Reynolds number R.

    zeta defaults to 2*pi*amplitude_hat/wavelength_hat from the bottom spec;
    passing it explicitly allows waviness sweeps at fixed wavelength.
    """
    lam = bottom.wavelength_hat
    if zeta is None:
        zeta = _TWO_PI * bottom.amplitude_hat / lam
    delta = _TWO_PI * _h_hat(fluid, alpha, R) / lam
    return Params(
        alpha=alpha,
        delta=delta,
        zeta=float(zeta),
        Bi=biot_number(fluid, lam, alpha),
        R=R,
        fluid=fluid,
        lam_hat=lam,
    )


def dimensionalize(p: Params, X=None, Z=None, U=None, W=None, T=None, F=None) -> dict:
    """Convert nondimensional samples to mm / mm/s / s fields.

    Returns a dict holding only the converted entries: x (mm, arclength),
    z (mm), u, w (mm/s), t (s), f (film thickness, mm).
    """
    p._need_fluid()
    out = {}
    if X is not None:
        out["x"] = np.asarray(X) * p.lam_hat / _TWO_PI
    if Z is not None:
        out["z"] = np.asarray(Z) * p.h_hat
    if U is not None:
        out["u"] = np.asarray(U) * p.u_mean
    if W is not None:
        out["w"] = np.asarray(W) * p.u_mean
    if T is not None:
        out["t"] = np.asarray(T) * p.t_scale
    if F is not None:
        out["f"] = np.asarray(F) * p.h_hat
    return out
