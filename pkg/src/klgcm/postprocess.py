"""Moment extraction, resampling, profiles and the NRMSE field metric."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np


@dataclass
class ScalarField2D:
    """Node values ``values[i, j]`` at ``(x0 + i*dx, y0 + j*dy)``."""

    values: np.ndarray
    dx: float
    dy: float
    origin: tuple[float, float] = (0.0, 0.0)
    name: str = "value"
    time: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2:
            raise ValueError(f"expected a 2D array, got shape {self.values.shape}")
        if not np.isfinite(self.values).all():
            raise ValueError(f"field {self.name!r} contains non-finite values")

    @property
    def nx(self) -> int:
        return self.values.shape[0]

    @property
    def ny(self) -> int:
        return self.values.shape[1]

    @property
    def extent(self) -> tuple[float, float]:
        return ((self.nx - 1) * self.dx, (self.ny - 1) * self.dy)

    @property
    def center(self) -> tuple[float, float]:
        return (self.origin[0] + self.extent[0] / 2, self.origin[1] + self.extent[1] / 2)

    def coords(self) -> tuple[np.ndarray, np.ndarray]:
        return (
            self.origin[0] + self.dx * np.arange(self.nx),
            self.origin[1] + self.dy * np.arange(self.ny),
        )

    def contains(self, point, tol: float = 1e-9) -> bool:
        (x0, y0), (lx, ly) = self.origin, self.extent
        return x0 - tol <= point[0] <= x0 + lx + tol and y0 - tol <= point[1] <= y0 + ly + tol

    def component(self, name: str) -> np.ndarray:
        if name != self.name:
            raise KeyError(f"field holds {self.name!r}, not {name!r}")
        return self.values

    def same_geometry(self, other: ScalarField2D, rtol: float = 1e-12) -> bool:
        return (
            self.values.shape == other.values.shape
            and np.allclose((self.dx, self.dy), (other.dx, other.dy), rtol=rtol, atol=0)
            and np.allclose(self.origin, other.origin, rtol=0, atol=rtol * max(self.extent))
        )


@dataclass
class ComparisonReport:
    component: str
    reference: str
    times: list[float] = field(default_factory=list)
    values: list[float] = field(default_factory=list)
    alignment: str = ""

    def add(self, t: float, value: float) -> None:
        if value < 0:
            raise ValueError("NRMSE cannot be negative")
        self.times.append(t)
        self.values.append(value)


# -- moments -----------------------------------------------------------------

MomentComponent = Literal["xx", "yy", "xy"]


def moment_from_faces(s_up: np.ndarray, s_down: np.ndarray, h: float) -> np.ndarray:
    """Moment of a stress assumed linear across the thickness:
    ``(s_up - s_down) * h**2 / 12``."""
    return (np.asarray(s_up) - np.asarray(s_down)) * h**2 / 12.0


def moment_by_quadrature(stress: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Integral of ``stress * z`` with the stress linear between layers.

    Each layer interval contributes the exact first moment of its
    trapezoidal stress diagram, so a stress linear in ``z`` is integrated
    without error. ``stress`` has the layer index on its last axis.
    """
    s = np.asarray(stress, dtype=float)
    z = np.asarray(z, dtype=float)
    z0, z1 = z[:-1], z[1:]
    s0, s1 = s[..., :-1], s[..., 1:]
    seg = (z1 - z0) / 6.0 * (s0 * (2 * z0 + z1) + s1 * (z0 + 2 * z1))
    return seg.sum(axis=-1)


def extract_moments(f3d, component: MomentComponent = "xx", method: str = "faces") -> ScalarField2D:
    """Bending/twisting moment per (x, y) column of a 3D plate field.

    ``method="faces"`` uses only the top and bottom layers; ``"quadrature"``
    integrates over all layers. The twisting moment carries a minus sign:
    ``M_xy = -integral(sigma_xy z dz)``.
    """
    from .elastic3d import S11, S12, S22

    if f3d.nz < 2:
        raise ValueError(f"moment extraction needs at least 2 z-layers, got {f3d.nz}")
    idx, sign = {"xx": (S11, 1.0), "yy": (S22, 1.0), "xy": (S12, -1.0)}[component]
    s = f3d.u[idx]
    if method == "faces":
        m = moment_from_faces(s[..., -1], s[..., 0], f3d.thickness)
    elif method == "quadrature":
        m = moment_by_quadrature(s, f3d.z_coords())
    else:
        raise ValueError(f"unknown moment method {method!r}")
    return ScalarField2D(sign * m, f3d.dx, f3d.dy, f3d.origin[:2], name=f"M_{component}", time=f3d.t)


# -- NRMSE -------------------------------------------------------------------


def nrmse(a: ScalarField2D | np.ndarray, b: ScalarField2D | np.ndarray) -> float:
    """Root-mean-square difference normalised by the value range of ``b``."""
    if isinstance(a, ScalarField2D) and isinstance(b, ScalarField2D) and not a.same_geometry(b):
        raise ValueError("fields differ in geometry; call resample_to first")
    av = a.values if isinstance(a, ScalarField2D) else np.asarray(a, dtype=float)
    bv = b.values if isinstance(b, ScalarField2D) else np.asarray(b, dtype=float)
    if av.shape != bv.shape:
        raise ValueError(f"shape mismatch {av.shape} vs {bv.shape}; call resample_to first")
    span = bv.max() - bv.min()
    if span == 0:
        raise ZeroDivisionError("reference field is constant; NRMSE normalisation is undefined")
    mse = np.mean((av - bv) ** 2)
    return float(np.sqrt(mse) / span)


# -- resampling and profiles -------------------------------------------------


def resample_to(src: ScalarField2D, nx: int, ny: int, dx: float, dy: float, origin=(0.0, 0.0)) -> ScalarField2D:
    """Bilinear interpolation of ``src`` onto another node grid."""
    tx = origin[0] + dx * np.arange(nx)
    ty = origin[1] + dy * np.arange(ny)
    fx = (tx - src.origin[0]) / src.dx
    fy = (ty - src.origin[1]) / src.dy
    eps = 1e-9
    if fx.min() < -eps or fx.max() > src.nx - 1 + eps or fy.min() < -eps or fy.max() > src.ny - 1 + eps:
        raise ValueError("target grid extends outside the source field")
    fx = np.clip(fx, 0, src.nx - 1)
    fy = np.clip(fy, 0, src.ny - 1)
    ix = np.minimum(np.floor(fx).astype(int), src.nx - 2)
    iy = np.minimum(np.floor(fy).astype(int), src.ny - 2)
    ax = (fx - ix)[:, None]
    ay = (fy - iy)[None, :]
    v = src.values
    I, J = ix[:, None], iy[None, :]  # noqa: E741
    out = (
        (1 - ax) * (1 - ay) * v[I, J]
        + ax * (1 - ay) * v[I + 1, J]
        + (1 - ax) * ay * v[I, J + 1]
        + ax * ay * v[I + 1, J + 1]
    )
    return ScalarField2D(out, dx, dy, (float(origin[0]), float(origin[1])), src.name, src.time)


def resample_like(src: ScalarField2D, target: ScalarField2D) -> ScalarField2D:
    if src.same_geometry(target):
        return src
    return resample_to(src, target.nx, target.ny, target.dx, target.dy, target.origin)


def extract_profile(
    f: ScalarField2D, axis: str, band_width: float = 1.0, through=None
) -> tuple[np.ndarray, np.ndarray]:
    """Profile along ``axis`` through ``through`` (default: the centre),
    averaged over a transverse band of ``band_width`` metres.

    Returns ``(stations, values)`` with stations measured in metres along the axis.
    """
    x, y = f.coords()
    cx, cy = f.center if through is None else through
    half = band_width / 2
    if axis == "x":
        d = f.dy
        band = np.abs(y - cy) <= half + 1e-9 * d
        if not f.contains((cx, cy - half)) or not f.contains((cx, cy + half)):
            raise ValueError("profile band leaves the domain")
        return x, f.values[:, band].mean(axis=1)
    if axis == "y":
        d = f.dx
        band = np.abs(x - cx) <= half + 1e-9 * d
        if not f.contains((cx - half, cy)) or not f.contains((cx + half, cy)):
            raise ValueError("profile band leaves the domain")
        return y, f.values[band, :].mean(axis=0)
    raise ValueError(f"axis must be 'x' or 'y', got {axis!r}")
