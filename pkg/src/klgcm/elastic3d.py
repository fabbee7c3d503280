"""3D linear elasticity on a structured plate grid.

State layout: ``(v_1, v_2, v_3, s_11, s_12, s_13, s_22, s_23, s_33)``
on an array of shape ``(9, nx, ny, nz)``. The plate spans
``z in [-h/2, h/2]``; lateral faces use zero-gradient ghosts and the two
plate faces are traction-free unless configured otherwise.
"""

from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import dataclass, replace

import numpy as np

from .gcm import AxisSpec, FreeSurface, ZeroGradient, compute_time_step, full_step, march
from .kl_system import SpectralDecomposition, SystemMatrix, apply_sparse, decompose
from .materials import Material, derive_constants
from .postprocess import ScalarField2D
from .shell import SensorSpec, check_finite, record_sensor

COMPONENTS = ("v_1", "v_2", "v_3", "s_11", "s_12", "s_13", "s_22", "s_23", "s_33")
NCOMP = len(COMPONENTS)
V1, V2, V3, S11, S12, S13, S22, S23, S33 = range(NCOMP)
VELOCITIES = (V1, V2, V3)
Z_TRACTIONS = (S13, S23, S33)

ALIASES = {
    "v_x": V1, "v_y": V2, "v_z": V3,
    "sigma_xx": S11, "sigma_xy": S12, "sigma_xz": S13,
    "sigma_yy": S22, "sigma_yz": S23, "sigma_zz": S33,
}

def component_index(name: str) -> int:
    if name in COMPONENTS:
        return COMPONENTS.index(name)
    if name in ALIASES:
        return ALIASES[name]
    raise KeyError(f"unknown 3D component {name!r}")


def build_matrices_3d(m: Material) -> dict[str, SystemMatrix]:
    """``A_x, A_y, A_z`` of ``du/dt + A_x du/dx + A_y du/dy + A_z du/dz = 0``."""
    c = derive_constants(m)
    lam, mu = c.lam, c.mu
    longitudinal = lam + 2 * mu
    # axis -> (velocity, stress) pairs as (v, s, stiffness), plus slaved normal stresses
    layout = {
        "x": ([(V1, S11, longitudinal), (V2, S12, mu), (V3, S13, mu)], {S22: V1, S33: V1}),
        "y": ([(V1, S12, mu), (V2, S22, longitudinal), (V3, S23, mu)], {S11: V2, S33: V2}),
        "z": ([(V1, S13, mu), (V2, S23, mu), (V3, S33, longitudinal)], {S11: V3, S22: V3}),
    }
    out = {}
    for axis, (pairs, slaves) in layout.items():
        a = np.zeros((NCOMP, NCOMP))
        for v, s, k in pairs:
            a[v, s] = 1.0 / m.rho
            a[s, v] = k
        for s, v in slaves.items():
            a[s, v] = lam
        out[axis] = SystemMatrix(matrix=-a, axis=axis, velocity_indices=VELOCITIES)
    return out


@dataclass
class ElasticField3D:
    u: np.ndarray
    dx: float
    dy: float
    dz: float
    origin: tuple[float, float, float]
    t: float = 0.0

    @property
    def nx(self) -> int:
        return self.u.shape[1]

    @property
    def ny(self) -> int:
        return self.u.shape[2]

    @property
    def nz(self) -> int:
        return self.u.shape[3]

    @property
    def thickness(self) -> float:
        return (self.nz - 1) * self.dz

    @property
    def extent(self) -> tuple[float, float]:
        return ((self.nx - 1) * self.dx, (self.ny - 1) * self.dy)

    @property
    def center(self) -> tuple[float, float]:
        return (self.origin[0] + self.extent[0] / 2, self.origin[1] + self.extent[1] / 2)

    def coords(self):
        return (
            self.origin[0] + self.dx * np.arange(self.nx),
            self.origin[1] + self.dy * np.arange(self.ny),
            self.z_coords(),
        )

    def z_coords(self) -> np.ndarray:
        return self.origin[2] + self.dz * np.arange(self.nz)

    def central_column(self) -> tuple[int, int]:
        return (int(round(self.extent[0] / 2 / self.dx)), int(round(self.extent[1] / 2 / self.dy)))

    def component(self, name: str) -> np.ndarray:
        if name == "v_mag":
            return np.sqrt(self.u[V1] ** 2 + self.u[V2] ** 2 + self.u[V3] ** 2)
        return self.u[component_index(name)]

    def layer(self, name: str, z: float | str = "mid") -> ScalarField2D:
        """XY slice of a component: ``"mid"`` (interpolated at z = 0 when
        there is no mid layer), ``"top"``, ``"bottom"`` or a layer index."""
        data = self.component(name)
        if z == "top":
            values = data[..., -1]
        elif z == "bottom":
            values = data[..., 0]
        elif z == "mid":
            k = (self.nz - 1) / 2
            lo, hi = int(np.floor(k)), int(np.ceil(k))
            values = data[..., lo] if lo == hi else 0.5 * (data[..., lo] + data[..., hi])
        else:
            values = data[..., int(z)]
        return ScalarField2D(values, self.dx, self.dy, self.origin[:2], name=name, time=self.t)

    def slice_xz(self, name: str) -> np.ndarray:
        """``(nx, nz)`` cross section through the central column."""
        return self.component(name)[:, self.central_column()[1], :]

    def slice_yz(self, name: str) -> np.ndarray:
        return self.component(name)[self.central_column()[0], :, :]

    def copy(self) -> ElasticField3D:
        return replace(self, u=self.u.copy())


def empty_field_3d(nx, ny, nz, extent_x, extent_y, thickness) -> ElasticField3D:
    if min(nx, ny, nz) < 2:
        raise ValueError(f"need at least 2 nodes per axis, got {nx}x{ny}x{nz}")
    return ElasticField3D(
        u=np.zeros((NCOMP, nx, ny, nz)),
        dx=extent_x / (nx - 1),
        dy=extent_y / (ny - 1),
        dz=thickness / (nz - 1),
        origin=(0.0, 0.0, -thickness / 2),
    )


def init_field_3d(
    nx, ny, nz, extent_x, extent_y, thickness,
    kind: str = "zero",
    component: str = "v_1",
    magnitude: float = 100.0,
    through_thickness: str = "midplane",
) -> ElasticField3D:
    """Initial field.

    ``kind="point"`` sets ``magnitude`` at the central column, either on the
    node nearest the mid-plane (``through_thickness="midplane"``) or on every
    node of the column (``"column"``). ``kind="gradient"`` prescribes
    ``magnitude * 2z/h`` along the central column, i.e. ``±magnitude`` on
    the two faces.
    """
    f = empty_field_3d(nx, ny, nz, extent_x, extent_y, thickness)
    c = component_index(component)
    i, j = f.central_column()
    if kind == "zero":
        pass
    elif kind == "point":
        if through_thickness == "midplane":
            k = int(np.argmin(np.abs(f.z_coords())))
            f.u[c, i, j, k] = magnitude
        elif through_thickness == "column":
            f.u[c, i, j, :] = magnitude
        else:
            raise ValueError(f"unknown through_thickness {through_thickness!r}")
    elif kind == "gradient":
        f.u[c, i, j, :] = magnitude * 2.0 * f.z_coords() / thickness
    else:
        raise ValueError(f"3D solver does not support ic.kind={kind!r}")
    return f


def init_3d(scenario, thickness: float | None = None, nz: int | None = None) -> ElasticField3D:
    g, ic = scenario.geometry, scenario.ic
    h = thickness if thickness is not None else g.thickness
    return init_field_3d(
        g.nx, g.ny, nz or g.nz, g.extent_x, g.extent_y, h,
        kind=ic.kind,
        component=ic.component if ic.kind != "zero" else "v_1",
        magnitude=ic.magnitude,
        through_thickness=ic.through_thickness,
    )


def free_surface_correction(u: np.ndarray, d: SpectralDecomposition, side: str) -> None:
    """Make the boundary layer ``u[..., 0]`` or ``u[..., -1]`` traction free, in place.

    Characteristics arriving from inside the plate are kept; each entering
    one is set equal to its partner so the face traction vanishes exactly.
    """
    k = 0 if side == "lo" else -1
    layer = u[..., k]
    r = apply_sparse(d.left, layer)
    for s in Z_TRACTIONS:
        modes = [j for j in np.flatnonzero(d.right[s]) if d.eigenvalues[j] != 0.0]
        plus = next(j for j in modes if d.eigenvalues[j] > 0)
        minus = next(j for j in modes if d.eigenvalues[j] < 0)
        if side == "lo":
            r[plus] = r[minus]
        else:
            r[minus] = r[plus]
    u[..., k] = apply_sparse(d.right, r)


def traction_residual(f: ElasticField3D) -> float:
    """Largest face traction on the top/bottom layers relative to max |stress|."""
    faces = np.abs(f.u[list(Z_TRACTIONS)][..., [0, -1]]).max()
    smax = np.abs(f.u[S11:]).max()
    return float(faces / smax) if smax > 0 else 0.0


@dataclass
class Elastic3DRun:
    field: ElasticField3D
    snapshots: dict[float, ElasticField3D]
    traces: dict[str, list[tuple[float, float]]]
    steps: int


class Elastic3DSolver:
    """Split grid-characteristic stepping of the 9-variable elasticity system.

    ``faces`` selects the top/bottom condition: ``"free"`` (traction free)
    or ``"zero_gradient"``.
    """

    def __init__(self, material: Material, order: int = 5, courant: float = 0.9,
                 limiter: str = "none", faces: str = "free", threads: int = 1):
        if faces not in ("free", "zero_gradient"):
            raise ValueError(f"unknown face condition {faces!r}")
        self.material = material
        self.order = order
        self.courant = courant
        self.limiter = limiter
        self.faces = faces
        self.threads = threads
        self.matrices = build_matrices_3d(material)
        self.decompositions = {ax: decompose(a) for ax, a in self.matrices.items()}

    @property
    def max_speed(self) -> float:
        return max(d.max_speed for d in self.decompositions.values())

    def time_step(self, f: ElasticField3D) -> float:
        return compute_time_step((f.dx, f.dy, f.dz), self.max_speed, self.courant)

    def axes(self, f: ElasticField3D) -> list[AxisSpec]:
        zg = ZeroGradient()
        face = FreeSurface(Z_TRACTIONS) if self.faces == "free" else zg
        d = self.decompositions
        return [
            AxisSpec(0, d["x"], f.dx, zg, zg),
            AxisSpec(1, d["y"], f.dy, zg, zg),
            AxisSpec(2, d["z"], f.dz, face, face),
        ]

    def step(self, f: ElasticField3D, tau: float, index: int = 0) -> ElasticField3D:
        u = full_step(f.u, self.axes(f), tau, self.order, self.limiter, reverse=bool(index % 2), threads=self.threads)
        if self.faces == "free":
            free_surface_correction(u, self.decompositions["z"], "lo")
            free_surface_correction(u, self.decompositions["z"], "hi")
        check_finite(u, index)
        return replace(f, u=u, t=f.t + tau)

    def run(
        self,
        f: ElasticField3D,
        t_end: float,
        snapshot_times: Sequence[float] = (),
        sensors: Sequence[SensorSpec] = (),
        on_step: Callable[[ElasticField3D, int], None] | None = None,
        reducer: Callable[[ElasticField3D, str], ScalarField2D] | None = None,
    ) -> Elastic3DRun:
        """Advance to ``t_end``.

        Sensors read ``reducer(state, component)``, by default the mid-plane layer.
        """
        reducer = reducer or (lambda state, name: state.layer(name, "mid"))
        snaps: dict[float, ElasticField3D] = {}
        traces: dict[str, list[tuple[float, float]]] = {s.name: [] for s in sensors}
        wanted = {float(t) for t in snapshot_times}

        def record(state, t, index):
            state.t = t
            for s in sensors:
                traces[s.name].append((t, record_sensor(reducer(state, s.component), s)))
            if t in wanted:
                snaps[t] = state.copy()
            if on_step is not None:
                on_step(state, index)

        final, _, n = march(f, self.step, self.time_step(f), f.t, t_end, wanted, record)
        return Elastic3DRun(field=final, snapshots=snaps, traces=traces, steps=n)
