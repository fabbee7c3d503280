"""Grid-characteristic time stepping on structured grids.

A field is an array of shape ``(ncomp, n0, n1, ...)``. One sweep along a
grid axis transforms the state into Riemann invariants of that axis'
matrix, moves every invariant to the foot of its characteristic with an
upwind-biased Newton interpolation polynomial, and transforms back.
A full step chains one sweep per axis; the order alternates between
steps to symmetrise the splitting error.

Sweeps read from one buffer and write into a fresh one. Grid lines are
split into disjoint chunks across worker threads; every output value is
produced by the same sequence of floating point operations whatever the
chunking, so results do not depend on the thread count.
"""

from __future__ import annotations

from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .kl_system import SpectralDecomposition, apply_sparse

Limiter = Literal["none", "clamp"]
LIMITERS = ("none", "clamp")
MAX_ORDER = 5


class CFLError(ValueError):
    """Time step too large for the characteristic sweep."""


class StencilError(RuntimeError):
    """Stencil reaches past the ghost layer (a ghost sizing bug)."""


def compute_time_step(spacings: Sequence[float], max_speed: float, courant: float = 0.9) -> float:
    """``courant * min(spacings) / max_speed``."""
    if not spacings or any(d <= 0 for d in spacings):
        raise ValueError(f"grid spacings must be positive, got {list(spacings)}")
    if max_speed <= 0:
        raise ValueError(f"max_speed must be positive, got {max_speed}")
    if not 0 < courant <= 1:
        raise ValueError(f"courant must lie in (0, 1], got {courant}")
    return courant * min(spacings) / max_speed


def stencil_offsets(order: int, speed_sign: int) -> np.ndarray:
    """Node offsets of the interpolation stencil relative to the updated node.

    For a positive speed the foot point lies in ``[-1, 0]``. Odd orders use
    the nodes symmetric about that interval; even orders add the extra node
    on the upwind side.
    """
    if not 1 <= order <= MAX_ORDER:
        raise ValueError(f"interpolation order must be in 1..{MAX_ORDER}, got {order}")
    if order % 2:
        lo, hi = -(order + 1) // 2, (order - 1) // 2
    else:
        lo, hi = -(order // 2) - 1, order // 2 - 1
    offsets = np.arange(lo, hi + 1)
    return offsets if speed_sign > 0 else -offsets[::-1]


def newton_interpolate(nodes: np.ndarray, values: np.ndarray, x: float) -> np.ndarray:
    """Evaluate the Newton-form interpolation polynomial at ``x``.

    ``values`` has the node index on axis 0; any trailing axes are carried
    along, so passing an identity matrix returns the interpolation weights.
    """
    nodes = np.asarray(nodes, dtype=float)
    coef = np.array(values, dtype=float, copy=True)
    n = len(nodes)
    # divided differences, in place: coef[m] = f[x_0, ..., x_m]
    for level in range(1, n):
        for i in range(n - 1, level - 1, -1):
            coef[i] = (coef[i] - coef[i - 1]) / (nodes[i] - nodes[i - level])
    result = coef[n - 1].copy()
    for i in range(n - 2, -1, -1):
        result = result * (x - nodes[i]) + coef[i]
    return result


def interpolation_weights(order: int, shift: float) -> tuple[np.ndarray, np.ndarray]:
    """Stencil offsets and weights for a characteristic moving ``shift`` nodes per step.

    ``shift = speed * tau / spacing``; the foot point sits at ``-shift``.
    """
    offsets = stencil_offsets(order, 1 if shift > 0 else -1)
    weights = newton_interpolate(offsets, np.eye(len(offsets)), -shift)
    return offsets, weights


# -- boundary handlers -------------------------------------------------------


class BoundaryCondition:
    """Fills the ghost layer on one side of one axis of a padded array."""

    name = "abstract"

    def fill(self, padded: np.ndarray, axis: int, width: int, side: str) -> None:
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}()"


def _take(a: np.ndarray, axis: int, index) -> tuple:
    sl = [slice(None)] * a.ndim
    sl[axis] = index
    return tuple(sl)


class ZeroGradient(BoundaryCondition):
    """Every ghost node copies the nearest interior node."""

    name = "zero_gradient"

    def fill(self, padded, axis, width, side):
        n = padded.shape[axis]
        if side == "lo":
            edge = padded[_take(padded, axis, slice(width, width + 1))]
            padded[_take(padded, axis, slice(0, width))] = edge
        else:
            edge = padded[_take(padded, axis, slice(n - width - 1, n - width))]
            padded[_take(padded, axis, slice(n - width, n))] = edge


class Periodic(BoundaryCondition):
    """Ghost nodes wrap around; node 0 and node n-1 are distinct points."""

    name = "periodic"

    def fill(self, padded, axis, width, side):
        n = padded.shape[axis]
        if side == "lo":
            padded[_take(padded, axis, slice(0, width))] = padded[_take(padded, axis, slice(n - 2 * width, n - width))]
        else:
            padded[_take(padded, axis, slice(n - width, n))] = padded[_take(padded, axis, slice(width, 2 * width))]


class FreeSurface(BoundaryCondition):
    """Traction-free face: mirror about the boundary node, negating tractions.

    ``tractions`` are the component indices (axis 0 of the field) of the
    stresses acting on the face.
    """

    name = "free_surface"

    def __init__(self, tractions: Sequence[int]):
        self.tractions = tuple(tractions)

    def fill(self, padded, axis, width, side):
        n = padded.shape[axis]
        if n - 2 * width <= width:
            raise StencilError(f"free surface needs more than {width} nodes along axis {axis}")
        for m in range(1, width + 1):
            if side == "lo":
                ghost, src = width - m, width + m
            else:
                ghost, src = n - width - 1 + m, n - width - 1 - m
            padded[_take(padded, axis, ghost)] = padded[_take(padded, axis, src)]
            for c in self.tractions:
                padded[(c,) + _take(padded, axis, ghost)[1:]] *= -1.0

    def __repr__(self):
        return f"FreeSurface(tractions={self.tractions})"


# -- sweeps ------------------------------------------------------------------


@dataclass(frozen=True)
class SweepPlan:
    """Parameters of one sweep. ``axis`` counts grid axes (0 = first spatial axis)."""

    axis: int
    spacing: float
    tau: float
    order: int = 5
    limiter: Limiter = "none"

    def __post_init__(self):
        if self.spacing <= 0 or self.tau <= 0:
            raise ValueError("spacing and tau must be positive")
        if not 1 <= self.order <= MAX_ORDER:
            raise ValueError(f"interpolation order must be in 1..{MAX_ORDER}, got {self.order}")
        if self.limiter not in LIMITERS:
            raise ValueError(f"unknown limiter {self.limiter!r}; expected one of {LIMITERS}")

    def courant(self, d: SpectralDecomposition) -> float:
        return d.max_speed * self.tau / self.spacing


@dataclass(frozen=True)
class AxisSpec:
    """Everything a full step needs to sweep one grid axis."""

    axis: int
    decomposition: SpectralDecomposition
    spacing: float
    lo: BoundaryCondition
    hi: BoundaryCondition


def ghost_width(order: int) -> int:
    """Ghost nodes needed per side: the reach of the widest stencil."""
    return int(np.abs(stencil_offsets(order, 1)).max())


def _sweep_block(u, ax, d, plan, lo, hi):
    width = ghost_width(plan.order)
    n = u.shape[ax]
    shape = list(u.shape)
    shape[ax] = n + 2 * width
    padded = np.empty(shape)
    padded[_take(padded, ax, slice(width, width + n))] = u
    lo.fill(padded, ax, width, "lo")
    hi.fill(padded, ax, width, "hi")

    r = apply_sparse(d.left, padded)
    out_r = np.empty((len(d.eigenvalues),) + u.shape[1:])
    for j, lam in enumerate(d.eigenvalues):
        if lam == 0.0:
            out_r[j] = r[j][_take(r[j], ax - 1, slice(width, width + n))]
            continue
        offsets, weights = interpolation_weights(plan.order, lam * plan.tau / plan.spacing)
        if offsets.min() < -width or offsets.max() > width:
            raise StencilError(f"stencil {offsets.tolist()} exceeds ghost width {width}")
        acc = None
        lo_v = hi_v = None
        for o, w in zip(offsets, weights):
            shifted = r[j][_take(r[j], ax - 1, slice(width + o, width + o + n))]
            acc = w * shifted if acc is None else acc + w * shifted
            if plan.limiter == "clamp":
                lo_v = shifted if lo_v is None else np.minimum(lo_v, shifted)
                hi_v = shifted if hi_v is None else np.maximum(hi_v, shifted)
        if plan.limiter == "clamp":
            acc = np.clip(acc, lo_v, hi_v)
        out_r[j] = acc
    return apply_sparse(d.right, out_r)


def characteristic_sweep(
    u: np.ndarray,
    d: SpectralDecomposition,
    plan: SweepPlan,
    lo: BoundaryCondition | None = None,
    hi: BoundaryCondition | None = None,
    threads: int = 1,
) -> np.ndarray:
    """Advance ``u`` by ``plan.tau`` along grid axis ``plan.axis``.

    Returns a new array; ``u`` is left untouched. Zero-speed invariants are
    copied unchanged.
    """
    gamma = plan.courant(d)
    if gamma > 1.0 + 1e-12:
        raise CFLError(f"Courant number {gamma:.6g} > 1 on axis {plan.axis}; reduce the time step")
    lo = lo or ZeroGradient()
    hi = hi or ZeroGradient()
    ax = plan.axis + 1
    if u.shape[ax] < 2:
        raise ValueError(f"need at least 2 nodes along axis {plan.axis}, got {u.shape[ax]}")

    chunk_axes = [a for a in range(1, u.ndim) if a != ax]
    if threads <= 1 or not chunk_axes:
        return _sweep_block(u, ax, d, plan, lo, hi)

    cax = max(chunk_axes, key=lambda a: u.shape[a])
    bounds = np.linspace(0, u.shape[cax], min(threads, u.shape[cax]) + 1).astype(int)
    out = np.empty_like(u, dtype=float)

    def work(i):
        sl = _take(u, cax, slice(bounds[i], bounds[i + 1]))
        out[sl] = _sweep_block(u[sl], ax, d, plan, lo, hi)

    with ThreadPoolExecutor(max_workers=threads) as pool:
        list(pool.map(work, range(len(bounds) - 1)))
    return out


def full_step(
    u: np.ndarray,
    axes: Sequence[AxisSpec],
    tau: float,
    order: int = 5,
    limiter: Limiter = "none",
    reverse: bool = False,
    threads: int = 1,
) -> np.ndarray:
    """One split time step: a sweep per axis, in reverse order if ``reverse``."""
    seq = list(axes)[::-1] if reverse else list(axes)
    for spec in seq:
        plan = SweepPlan(axis=spec.axis, spacing=spec.spacing, tau=tau, order=order, limiter=limiter)
        u = characteristic_sweep(u, spec.decomposition, plan, spec.lo, spec.hi, threads=threads)
    return u


def march(state, step, max_tau: float, t0: float, t_end: float, stops: Sequence[float] = (), on_step=None):
    """Advance ``state`` from ``t0`` to ``t_end`` with steps of at most ``max_tau``.

    ``step(state, tau, index)`` returns the new state. Steps are shortened
    so that every time in ``stops`` is hit exactly; ``on_step(state, t, index)``
    runs after each step and once for the initial state with ``index = -1``.
    """
    if t_end <= t0:
        raise ValueError(f"t_end must exceed the start time {t0}, got {t_end}")
    targets = sorted({float(s) for s in stops if t0 < s < t_end} | {float(t_end)})
    t = t0
    index = 0
    if on_step is not None:
        on_step(state, t, -1)
    for target in targets:
        while t < target:
            remaining = target - t
            if remaining <= max_tau:
                tau, t_next = remaining, target
            else:
                tau, t_next = max_tau, t + max_tau
            state = step(state, tau, index)
            t = t_next
            if on_step is not None:
                on_step(state, t, index)
            index += 1
    return state, t, index
