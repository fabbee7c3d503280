"""Directional matrices of the Kirchhoff-Love hyperbolic system.

The shell state is the 10-vector

    U = (v_x, v_y, w_x, w_y, sigma_x, sigma_y, sigma_xy, M_x, M_y, M_xy)

and evolves as ``dU/dt + A_x dU/dx + A_y dU/dy = 0``. Every row of
``A_x`` / ``A_y`` couples one velocity-type component (v or w) to one
stress-type component (sigma or M), possibly with extra "slaved" stress
rows (Poisson coupling). :func:`decompose` exploits that structure to
produce exact eigenpairs for any matrix of this family, which is also
how the 3D elasticity matrices are decomposed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .materials import Material, ShearConvention, derive_constants, shell_shear_modulus

Axis = Literal["x", "y", "z"]

COMPONENTS = (
    "v_x", "v_y", "w_x", "w_y",
    "sigma_x", "sigma_y", "sigma_xy",
    "M_x", "M_y", "M_xy",
)
NCOMP = len(COMPONENTS)
V_X, V_Y, W_X, W_Y, SIGMA_X, SIGMA_Y, SIGMA_XY, M_X, M_Y, M_XY = range(NCOMP)

IN_PLANE = (V_X, V_Y, SIGMA_X, SIGMA_Y, SIGMA_XY)
OUT_OF_PLANE = (W_X, W_Y, M_X, M_Y, M_XY)
VELOCITY_LIKE = (V_X, V_Y, W_X, W_Y)

# x <-> y relabelling used by the symmetry tests and transposed runs
XY_SWAP = (V_Y, V_X, W_Y, W_X, SIGMA_Y, SIGMA_X, SIGMA_XY, M_Y, M_X, M_XY)


def index(name: str) -> int:
    try:
        return COMPONENTS.index(name)
    except ValueError:
        raise KeyError(f"unknown shell component {name!r}; expected one of {COMPONENTS}") from None


@dataclass(frozen=True)
class SystemMatrix:
    """A directional matrix together with the layout facts needed to split it."""

    matrix: np.ndarray
    axis: str
    velocity_indices: tuple[int, ...]

    @property
    def size(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenvalues (descending) with right eigenvectors as columns of ``right``
    and left eigenvectors as rows of ``left`` (``left = inv(right)``)."""

    eigenvalues: np.ndarray
    right: np.ndarray
    left: np.ndarray

    @property
    def max_speed(self) -> float:
        return float(np.max(np.abs(self.eigenvalues)))

    def reconstruct(self) -> np.ndarray:
        return self.right @ np.diag(self.eigenvalues) @ self.left


def build_matrix(m: Material, axis: Axis, shear_convention: ShearConvention = "engineering") -> SystemMatrix:
    """Assemble ``A_x`` (``axis="x"``) or ``A_y`` for the shell system.

    The leading minus sign is folded in, so that e.g. ``A_x[v_x, sigma_x] = -1/rho``.
    """
    c = derive_constants(m)
    stiff = m.E / (1.0 - m.nu**2)
    shear = shell_shear_modulus(m, shear_convention)
    twist = c.D * (1.0 - m.nu) / 2.0

    a = np.zeros((NCOMP, NCOMP))
    if axis == "x":
        a[V_X, SIGMA_X] = 1.0 / m.rho
        a[V_Y, SIGMA_XY] = 1.0 / m.rho
        a[W_X, M_X] = 1.0 / c.I
        a[W_Y, M_XY] = 1.0 / c.I
        a[SIGMA_X, V_X] = stiff
        a[SIGMA_Y, V_X] = stiff * m.nu
        a[SIGMA_XY, V_Y] = shear
        a[M_X, W_X] = c.D
        a[M_Y, W_X] = c.D * m.nu
        a[M_XY, W_Y] = twist
    elif axis == "y":
        a[V_X, SIGMA_XY] = 1.0 / m.rho
        a[V_Y, SIGMA_Y] = 1.0 / m.rho
        a[W_X, M_XY] = 1.0 / c.I
        a[W_Y, M_Y] = 1.0 / c.I
        a[SIGMA_X, V_Y] = stiff * m.nu
        a[SIGMA_Y, V_Y] = stiff
        a[SIGMA_XY, V_X] = shear
        a[M_X, W_Y] = c.D * m.nu
        a[M_Y, W_Y] = c.D
        a[M_XY, W_X] = twist
    else:
        raise ValueError(f"shell system has no axis {axis!r}")
    return SystemMatrix(matrix=-a, axis=axis, velocity_indices=VELOCITY_LIKE)


def decompose(a: SystemMatrix) -> SpectralDecomposition:
    """Closed-form eigen-decomposition of a velocity/stress coupling matrix.

    Each velocity row ``v`` must reference exactly one stress column ``s``,
    whose row in turn references only ``v``; any further rows referencing
    ``v`` are slaved stresses and carry zero eigenvalues. For the pair the
    speeds are ``±sqrt(a_vs * a_sv)``. Eigenvectors are scaled so the
    velocity entry is 1 (the stress entry for zero modes).
    """
    A = a.matrix
    n = a.size
    modes: list[tuple[float, np.ndarray, np.ndarray]] = []
    used: set[int] = set()

    for v in a.velocity_indices:
        cols = np.flatnonzero(A[v])
        if len(cols) != 1:
            raise ValueError(f"velocity row {v} must couple to exactly one stress, found columns {cols.tolist()}")
        s = int(cols[0])
        if np.flatnonzero(A[s]).tolist() != [v] or np.flatnonzero(A[:, s]).tolist() != [v]:
            raise ValueError(f"stress {s} is not a pure partner of velocity {v}")
        coupling = -A[v, s]
        stiffness = -A[s, v]
        if coupling * stiffness <= 0:
            raise ValueError(f"pair ({v}, {s}) is not hyperbolic: product {coupling * stiffness}")
        speed = np.sqrt(coupling * stiffness)
        slaves = [int(k) for k in np.flatnonzero(A[:, v]) if k != s]

        for lam in (speed, -speed):
            r = np.zeros(n)
            r[v] = 1.0
            r[s] = -lam / coupling
            for k in slaves:
                r[k] = A[k, v] / lam
            l = np.zeros(n)  # noqa: E741
            l[v] = 0.5
            l[s] = -coupling / (2.0 * lam)
            modes.append((lam, r, l))
        for k in slaves:
            if np.any(A[k, np.arange(n) != v]) or np.any(A[:, k]):
                raise ValueError(f"slaved row {k} couples to more than velocity {v}")
            r = np.zeros(n)
            r[k] = 1.0
            l = np.zeros(n)  # noqa: E741
            l[k] = 1.0
            l[s] = -A[k, v] / A[s, v]
            modes.append((0.0, r, l))
        for idx in (v, s, *slaves):
            if idx in used:
                raise ValueError(f"component {idx} belongs to more than one characteristic family")
            used.add(idx)

    for k in range(n):
        if k in used:
            continue
        if np.any(A[k]) or np.any(A[:, k]):
            raise ValueError(f"component {k} is coupled but belongs to no velocity/stress pair")
        e = np.zeros(n)
        e[k] = 1.0
        modes.append((0.0, e, e.copy()))

    modes.sort(key=lambda mode: (-mode[0], int(np.flatnonzero(mode[1])[0])))
    return SpectralDecomposition(
        eigenvalues=np.array([mode[0] for mode in modes]),
        right=np.column_stack([mode[1] for mode in modes]),
        left=np.vstack([mode[2] for mode in modes]),
    )


def apply_sparse(matrix: np.ndarray, u: np.ndarray) -> np.ndarray:
    """``matrix @ u`` over the leading (component) axis of ``u``.

    Only nonzero entries are touched and the summation order is fixed, so
    the result is bit-identical for any slicing of the trailing axes and
    structurally zero blocks stay exactly zero.
    """
    out = np.zeros((matrix.shape[0],) + u.shape[1:], dtype=np.result_type(matrix, u))
    for i in range(matrix.shape[0]):
        for j in np.flatnonzero(matrix[i]):
            out[i] += matrix[i, j] * u[j]
    return out


def to_invariants(u: np.ndarray, d: SpectralDecomposition) -> np.ndarray:
    """Riemann invariants ``L u``; ``u`` has components along axis 0."""
    return apply_sparse(d.left, np.asarray(u, dtype=float))


def from_invariants(r: np.ndarray, d: SpectralDecomposition) -> np.ndarray:
    return apply_sparse(d.right, np.asarray(r, dtype=float))
