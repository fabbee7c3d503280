"""Kirchhoff-Love shell solver on a structured 2D grid.

The state array has shape ``(10, nx, ny)`` with the component layout of
:mod:`klgcm.kl_system`; ``u[c, i, j]`` lives at
``(x0 + i*dx, y0 + j*dy)``. All four edges use zero-gradient ghosts.
"""

from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import dataclass, replace

import numpy as np

from . import kl_system as kl
from .gcm import AxisSpec, ZeroGradient, compute_time_step, full_step, march
from .materials import Material, ShearConvention, derive_constants, shell_shear_modulus


class SimulationError(RuntimeError):
    """The state became non-finite during time stepping."""


@dataclass
class ShellField:
    u: np.ndarray
    dx: float
    dy: float
    origin: tuple[float, float] = (0.0, 0.0)
    t: float = 0.0

    @property
    def nx(self) -> int:
        return self.u.shape[1]

    @property
    def ny(self) -> int:
        return self.u.shape[2]

    @property
    def extent(self) -> tuple[float, float]:
        return ((self.nx - 1) * self.dx, (self.ny - 1) * self.dy)

    @property
    def center(self) -> tuple[float, float]:
        return (self.origin[0] + self.extent[0] / 2, self.origin[1] + self.extent[1] / 2)

    def coords(self) -> tuple[np.ndarray, np.ndarray]:
        x = self.origin[0] + self.dx * np.arange(self.nx)
        y = self.origin[1] + self.dy * np.arange(self.ny)
        return x, y

    def nearest_node(self, point: tuple[float, float]) -> tuple[int, int]:
        i = int(round((point[0] - self.origin[0]) / self.dx))
        j = int(round((point[1] - self.origin[1]) / self.dy))
        return i, j

    def contains(self, point: tuple[float, float], tol: float = 1e-9) -> bool:
        (x0, y0), (lx, ly) = self.origin, self.extent
        return x0 - tol <= point[0] <= x0 + lx + tol and y0 - tol <= point[1] <= y0 + ly + tol

    def component(self, name: str) -> np.ndarray:
        """One component as an ``(nx, ny)`` array; ``v_mag`` is sqrt(v_x^2 + v_y^2)."""
        if name == "v_mag":
            return np.hypot(self.u[kl.V_X], self.u[kl.V_Y])
        return self.u[kl.index(name)]

    def copy(self) -> ShellField:
        return replace(self, u=self.u.copy())


def empty_field(nx: int, ny: int, extent_x: float, extent_y: float, origin=(0.0, 0.0)) -> ShellField:
    if nx < 2 or ny < 2:
        raise ValueError(f"need at least 2 nodes per axis, got {nx}x{ny}")
    return ShellField(
        u=np.zeros((kl.NCOMP, nx, ny)),
        dx=extent_x / (nx - 1),
        dy=extent_y / (ny - 1),
        origin=(float(origin[0]), float(origin[1])),
    )


# -- initial conditions ------------------------------------------------------


@dataclass(frozen=True)
class ZeroIC:
    def apply(self, f: ShellField) -> None:
        f.u[...] = 0.0


@dataclass(frozen=True)
class PointVelocity:
    """Top-hat of ``magnitude`` in one component; ``radius=0`` hits the nearest node only.

    ``center=None`` means the plate centre.
    """

    component: str
    magnitude: float
    center: tuple[float, float] | None = None
    radius: float = 0.0

    def apply(self, f: ShellField) -> None:
        c = kl.index(self.component)
        center = f.center if self.center is None else self.center
        if not f.contains(center):
            raise ValueError(f"initial condition centre {center} lies outside the domain")
        if self.radius < 0:
            raise ValueError(f"radius must be non-negative, got {self.radius}")
        if self.radius == 0:
            i, j = f.nearest_node(center)
            f.u[c, i, j] = self.magnitude
            return
        x, y = f.coords()
        inside = np.hypot(x[:, None] - center[0], y[None, :] - center[1]) <= self.radius * (1 + 1e-12)
        f.u[c][inside] = self.magnitude


@dataclass(frozen=True)
class PlaneWave:
    """A single characteristic family: ``u = profile(s) * r`` where ``r`` is the
    right eigenvector ``mode`` of the matrix for ``axis`` and ``s`` the coordinate
    along that axis."""

    material: Material
    axis: str
    mode: int
    profile: Callable[[np.ndarray], np.ndarray]
    shear_convention: ShearConvention = "engineering"

    def apply(self, f: ShellField) -> None:
        d = kl.decompose(kl.build_matrix(self.material, self.axis, self.shear_convention))
        x, y = f.coords()
        s = x[:, None] + 0 * y[None, :] if self.axis == "x" else y[None, :] + 0 * x[:, None]
        f.u[...] = d.right[:, self.mode][:, None, None] * self.profile(s)[None]


def init_field(nx, ny, extent_x, extent_y, ic=None, origin=(0.0, 0.0)) -> ShellField:
    f = empty_field(nx, ny, extent_x, extent_y, origin)
    (ic or ZeroIC()).apply(f)
    return f


def init(scenario) -> ShellField:
    """Build the initial field of a shell :class:`~klgcm.scenario.Scenario`."""
    g = scenario.geometry
    return init_field(g.nx, g.ny, g.extent_x, g.extent_y, shell_ic(scenario.ic))


def shell_ic(ic) -> ZeroIC | PointVelocity:
    if ic.kind == "zero":
        return ZeroIC()
    if ic.kind == "point":
        if ic.component not in kl.COMPONENTS:
            raise ValueError(f"ic.component {ic.component!r} is not a shell component")
        return PointVelocity(ic.component, ic.magnitude, ic.center, ic.radius)
    raise ValueError(f"shell solver does not support ic.kind={ic.kind!r}")


# -- sensors and measurements ------------------------------------------------


@dataclass(frozen=True)
class SensorSpec:
    """Rectangular area sensor, positioned by its centre's offset from the plate centre."""

    name: str
    offset: tuple[float, float]
    size: tuple[float, float] = (1.0, 1.0)
    component: str = "v_x"

    def mask(self, f) -> np.ndarray:
        x, y = f.coords()[:2]
        cx, cy = f.center[0] + self.offset[0], f.center[1] + self.offset[1]
        hx, hy = self.size[0] / 2, self.size[1] / 2
        tol = 1e-9 * max(f.dx, f.dy)
        if not (f.contains((cx - hx, cy - hy)) and f.contains((cx + hx, cy + hy))):
            raise ValueError(f"sensor {self.name!r} does not fit inside the domain")
        mx = np.abs(x - cx) <= hx + tol
        my = np.abs(y - cy) <= hy + tol
        return mx[:, None] & my[None, :]


DEFAULT_SENSORS = (
    SensorSpec("sensor_y", offset=(0.0, 1.5)),
    SensorSpec("sensor_x", offset=(1.5, 0.0)),
)


def record_sensor(f, spec: SensorSpec) -> float:
    """Mean of ``spec.component`` over the nodes inside the sensor rectangle."""
    return float(np.mean(f.component(spec.component)[spec.mask(f)]))


def ray(f: ShellField, name: str, axis: str) -> tuple[np.ndarray, np.ndarray]:
    """Distances from the centre node and values along the positive ``axis`` half-line."""
    i0, j0 = f.nearest_node(f.center)
    values = f.component(name)
    if axis == "x":
        return f.dx * np.arange(f.nx - i0), values[i0:, j0]
    return f.dy * np.arange(f.ny - j0), values[i0, j0:]


def front_radius(distance: np.ndarray, values: np.ndarray, threshold: float = 0.01) -> float:
    """Outermost distance where ``|values|`` exceeds ``threshold`` times its maximum."""
    a = np.abs(values)
    peak = a.max()
    if peak == 0:
        return 0.0
    return float(distance[np.flatnonzero(a > threshold * peak).max()])


def energy(f: ShellField, m: Material, shear_convention: ShearConvention = "engineering") -> float:
    """Discrete quadratic energy: kinetic plus complementary strain energy per node.

    The in-plane block is per unit volume and the bending block per unit
    area; each block is conserved separately by the continuous system.
    """
    c = derive_constants(m)
    u = f.u
    shear = shell_shear_modulus(m, shear_convention)
    twist = c.D * (1 - m.nu) / 2
    bend = c.D * (1 - m.nu**2)
    density = (
        0.5 * m.rho * (u[kl.V_X] ** 2 + u[kl.V_Y] ** 2)
        + (u[kl.SIGMA_X] ** 2 + u[kl.SIGMA_Y] ** 2 - 2 * m.nu * u[kl.SIGMA_X] * u[kl.SIGMA_Y]) / (2 * m.E)
        + u[kl.SIGMA_XY] ** 2 / (2 * shear)
        + 0.5 * c.I * (u[kl.W_X] ** 2 + u[kl.W_Y] ** 2)
        + (u[kl.M_X] ** 2 + u[kl.M_Y] ** 2 - 2 * m.nu * u[kl.M_X] * u[kl.M_Y]) / (2 * bend)
        + u[kl.M_XY] ** 2 / (2 * twist)
    )
    return float(np.sum(density) * f.dx * f.dy)


# -- time loop ---------------------------------------------------------------


@dataclass
class ShellRun:
    field: ShellField
    snapshots: dict[float, ShellField]
    traces: dict[str, list[tuple[float, float]]]
    steps: int


def check_finite(u: np.ndarray, index: int) -> None:
    if np.isfinite(u).all():
        return
    bad = np.argwhere(~np.isfinite(u))[0]
    raise SimulationError(f"non-finite state at step {index}, component {int(bad[0])}, node {tuple(int(b) for b in bad[1:])}")


class ShellSolver:
    """Split grid-characteristic stepping of the Kirchhoff-Love system."""

    def __init__(
        self,
        material: Material,
        order: int = 5,
        courant: float = 0.9,
        limiter: str = "none",
        shear_convention: ShearConvention = "engineering",
        threads: int = 1,
    ):
        self.material = material
        self.order = order
        self.courant = courant
        self.limiter = limiter
        self.shear_convention = shear_convention
        self.threads = threads
        self.decompositions = {
            ax: kl.decompose(kl.build_matrix(material, ax, shear_convention)) for ax in ("x", "y")
        }

    @property
    def max_speed(self) -> float:
        return max(d.max_speed for d in self.decompositions.values())

    def time_step(self, f: ShellField) -> float:
        return compute_time_step((f.dx, f.dy), self.max_speed, self.courant)

    def axes(self, f: ShellField) -> list[AxisSpec]:
        zg = ZeroGradient()
        return [
            AxisSpec(0, self.decompositions["x"], f.dx, zg, zg),
            AxisSpec(1, self.decompositions["y"], f.dy, zg, zg),
        ]

    def step(self, f: ShellField, tau: float, index: int = 0) -> ShellField:
        """One full step; odd ``index`` sweeps y before x."""
        u = full_step(f.u, self.axes(f), tau, self.order, self.limiter, reverse=bool(index % 2), threads=self.threads)
        check_finite(u, index)
        return replace(f, u=u, t=f.t + tau)

    def run(
        self,
        f: ShellField,
        t_end: float,
        snapshot_times: Sequence[float] = (),
        sensors: Sequence[SensorSpec] = (),
        on_step: Callable[[ShellField, int], None] | None = None,
    ) -> ShellRun:
        """Advance to ``t_end``, landing exactly on every snapshot time."""
        snaps: dict[float, ShellField] = {}
        traces: dict[str, list[tuple[float, float]]] = {s.name: [] for s in sensors}
        wanted = {float(t) for t in snapshot_times}

        def record(state: ShellField, t: float, index: int) -> None:
            for s in sensors:
                traces[s.name].append((t, record_sensor(state, s)))
            state.t = t
            if t in wanted:
                snaps[t] = state.copy()
            if on_step is not None:
                on_step(state, index)

        final, _, n = march(f, self.step, self.time_step(f), f.t, t_end, wanted, record)
        return ShellRun(field=final, snapshots=snaps, traces=traces, steps=n)
