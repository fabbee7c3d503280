"""Isotropic material parameters and the constants derived from them.

Both the shell and the 3D solver read their moduli and wave speeds from
:class:`DerivedConstants`, so every formula lives here once:

    lambda = E nu / ((1 + nu)(1 - 2 nu)),   mu = E / (2 (1 + nu))
    D      = E h^3 / (12 (1 - nu^2)),       I  = rho h^3 / 12
    cp_shell = sqrt(E / (rho (1 - nu^2))),  cs_shell = sqrt(mu / rho)
    cp_3d    = sqrt((lambda + 2 mu) / rho), cs_3d    = sqrt(mu / rho)
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

ShearConvention = Literal["engineering", "tensor"]
SHEAR_CONVENTIONS = ("engineering", "tensor")


class MaterialError(ValueError):
    """Invalid material parameter. ``field`` names the offending entry."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


@dataclass(frozen=True)
class Material:
    """Isotropic elastic material with a plate thickness.

    Attributes
    ----------
    E : float
        Young's modulus [Pa].
    nu : float
        Poisson's ratio, strictly inside (-1, 0.5).
    rho : float
        Density [kg/m^3].
    h : float
        Plate thickness [m].
    """

    E: float
    nu: float
    rho: float
    h: float = 1.0

    def __post_init__(self):
        for name in ("E", "nu", "rho", "h"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or not math.isfinite(value):
                raise MaterialError(name, f"must be a finite number, got {value!r}")
        if self.E <= 0:
            raise MaterialError("E", f"must be positive, got {self.E}")
        if self.rho <= 0:
            raise MaterialError("rho", f"must be positive, got {self.rho}")
        if self.h <= 0:
            raise MaterialError("h", f"must be positive, got {self.h}")
        if not -1.0 < self.nu < 0.5:
            raise MaterialError("nu", f"must lie in (-1, 0.5), got {self.nu}")

    def with_thickness(self, h: float) -> Material:
        return Material(E=self.E, nu=self.nu, rho=self.rho, h=h)


STEEL = Material(E=210e9, nu=0.30, rho=7800.0, h=0.02)


@dataclass(frozen=True)
class DerivedConstants:
    lam: float
    mu: float
    D: float
    I: float  # noqa: E741
    cp_shell: float
    cs_shell: float
    cp_3d: float
    cs_3d: float


def derive_constants(m: Material) -> DerivedConstants:
    """Evaluate every derived modulus and wave speed of ``m`` in closed form."""
    E, nu, rho, h = m.E, m.nu, m.rho, m.h
    lam = E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu))
    mu = E / (2.0 * (1.0 + nu))
    return DerivedConstants(
        lam=lam,
        mu=mu,
        D=E * h**3 / (12.0 * (1.0 - nu**2)),
        I=rho * h**3 / 12.0,
        cp_shell=math.sqrt(E / (rho * (1.0 - nu**2))),
        cs_shell=math.sqrt(E / (2.0 * rho * (1.0 + nu))),
        cp_3d=math.sqrt((lam + 2.0 * mu) / rho),
        cs_3d=math.sqrt(mu / rho),
    )


def shell_shear_modulus(m: Material, convention: ShearConvention = "engineering") -> float:
    """Coefficient of the in-plane shear-rate term of the shell system.

    ``engineering`` gives G = E / (2 (1 + nu)); ``tensor`` gives the
    E / (4 (1 + nu)) variant, whose shear speed is sqrt(2) slower.
    """
    if convention == "engineering":
        return m.E / (2.0 * (1.0 + m.nu))
    if convention == "tensor":
        return m.E / (4.0 * (1.0 + m.nu))
    raise ValueError(f"unknown shear convention {convention!r}; expected one of {SHEAR_CONVENTIONS}")
