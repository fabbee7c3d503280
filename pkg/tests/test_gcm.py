import math

import numpy as np
import pytest

from klgcm import kl_system as kl
from klgcm import shell
from klgcm.gcm import (
    CFLError,
    FreeSurface,
    Periodic,
    SweepPlan,
    ZeroGradient,
    characteristic_sweep,
    compute_time_step,
    ghost_width,
    interpolation_weights,
    march,
    newton_interpolate,
    stencil_offsets,
)
from klgcm.materials import STEEL

C = 2.0  # wave speed of the toy acoustic pair below


def acoustic():
    """u = (v, p): v_t = -p_x, p_t = -4 v_x, so the speeds are +-2."""
    a = np.array([[0.0, -1.0], [-4.0, 0.0]])
    return kl.decompose(kl.SystemMatrix(a, "x", (0,)))


def lagrange_weights(nodes, x):
    w = []
    for i, xi in enumerate(nodes):
        others = [xj for j, xj in enumerate(nodes) if j != i]
        w.append(math.prod((x - xj) / (xi - xj) for xj in others))
    return np.array(w)


@pytest.mark.parametrize("order, expect", [(1, [-1, 0]), (2, [-2, -1, 0]), (3, [-2, -1, 0, 1]), (5, [-3, -2, -1, 0, 1, 2])])
def test_stencil_offsets(order, expect):
    assert stencil_offsets(order, 1).tolist() == expect
    assert stencil_offsets(order, -1).tolist() == [-o for o in expect[::-1]]


def test_ghost_width_covers_stencil():
    for k in range(1, 6):
        assert ghost_width(k) == max(abs(o) for o in stencil_offsets(k, 1))


@pytest.mark.parametrize("order", [1, 2, 3, 4, 5])
@pytest.mark.parametrize("shift", [0.3, -0.7, 1.0])
def test_weights_match_lagrange(order, shift):
    offsets, w = interpolation_weights(order, shift)
    assert np.allclose(w, lagrange_weights(offsets.astype(float), -shift), atol=1e-13)
    assert w.sum() == pytest.approx(1.0, abs=1e-13)


def test_newton_reproduces_polynomial():
    nodes = np.array([-2.0, -1.0, 0.0, 1.0, 2.5])
    poly = np.poly1d([0.5, -1.0, 2.0, 0.0, 3.0])
    assert newton_interpolate(nodes, poly(nodes), 0.37) == pytest.approx(poly(0.37), rel=1e-13)


def test_compute_time_step():
    assert compute_time_step((0.05, 0.04), 5000.0, 0.9) == pytest.approx(0.9 * 0.04 / 5000.0)
    with pytest.raises(ValueError):
        compute_time_step((0.05,), 5000.0, 1.5)
    with pytest.raises(ValueError):
        compute_time_step((0.0,), 5000.0)


def test_cfl_violation_raises():
    d = acoustic()
    u = np.zeros((2, 20))
    with pytest.raises(CFLError):
        characteristic_sweep(u, d, SweepPlan(axis=0, spacing=0.1, tau=0.051))


@pytest.mark.parametrize("order", [1, 2, 3, 4, 5])
def test_constant_state_is_preserved(order):
    d = acoustic()
    u = np.empty((2, 30))
    u[0], u[1] = 1.5, -3.0
    out = characteristic_sweep(u, d, SweepPlan(axis=0, spacing=0.1, tau=0.037, order=order))
    assert np.allclose(out, u, rtol=1e-14)


def test_zero_state_stays_zero():
    f = shell.empty_field(21, 21, 1.0, 1.0)
    solver = shell.ShellSolver(STEEL)
    out = solver.step(f, solver.time_step(f))
    assert not out.u.any()


def _sine_error(order, n=64, steps=40, courant=0.5):
    d = acoustic()
    length = 1.0
    dx = length / n
    x = dx * np.arange(n)
    k = 2 * np.pi / length
    u = np.stack([np.sin(k * x), -2.0 * np.sin(k * x)])  # right-running family
    tau = courant * dx / C
    plan = SweepPlan(axis=0, spacing=dx, tau=tau, order=order)
    for _ in range(steps):
        u = characteristic_sweep(u, d, plan, Periodic(), Periodic())
    exact = np.sin(k * (x - C * steps * tau))
    return np.abs(u[0] - exact).max()


def test_sine_translation_converges_with_order():
    errors = [_sine_error(k) for k in (1, 2, 3, 4, 5)]
    assert all(b < a for a, b in zip(errors, errors[1:]))
    assert errors[-1] < 1e-6


def test_sine_translation_fifth_order_rate():
    e1, e2 = _sine_error(5, n=32, steps=20), _sine_error(5, n=64, steps=40)
    assert math.log2(e1 / e2) > 4.5


def test_free_surface_ghost_gives_zero_traction_for_static_load():
    d = acoustic()
    u = np.zeros((2, 10))
    u[1] = 1.0
    out = characteristic_sweep(u, d, SweepPlan(axis=0, spacing=0.1, tau=0.05, order=1),
                               FreeSurface([1]), FreeSurface([1]))
    # the boundary node sees the mirrored negative pressure and relaxes
    assert out[1, 0] == pytest.approx(0.0, abs=1e-14)


def test_sweep_does_not_mutate_input():
    d = acoustic()
    u = np.random.default_rng(0).normal(size=(2, 15))
    keep = u.copy()
    characteristic_sweep(u, d, SweepPlan(axis=0, spacing=0.1, tau=0.02), ZeroGradient(), ZeroGradient())
    assert np.array_equal(u, keep)


def _point_field():
    f = shell.init_field(41, 33, 4.0, 3.2, shell.PointVelocity("v_x", 1.0, center=(1.5, 1.7), radius=0.3))
    f.u[kl.W_Y] = 0.1 * f.u[kl.V_X]
    return f


def test_transposed_run_mirrors_original():
    solver = shell.ShellSolver(STEEL.with_thickness(0.2))
    f = _point_field()
    g = shell.ShellField(u=np.stack([f.u[c].T for c in kl.XY_SWAP]), dx=f.dy, dy=f.dx)
    tau = compute_time_step((f.dx, f.dy), solver.max_speed)
    for i in range(6):
        f = solver.step(f, tau, i)
        g = solver.step(g, tau, i + 1)
    back = np.stack([g.u[c].T for c in kl.XY_SWAP])
    assert np.allclose(back, f.u, rtol=0, atol=1e-12 * np.abs(f.u).max(axis=(1, 2), keepdims=True).max())


def test_thread_count_does_not_change_bits():
    results = []
    for threads in (1, 3, 4):
        solver = shell.ShellSolver(STEEL.with_thickness(0.2), threads=threads)
        f = _point_field()
        for i in range(4):
            f = solver.step(f, solver.time_step(f), i)
        results.append(f.u)
    assert all(np.array_equal(results[0], r) for r in results[1:])


def test_march_lands_on_stops():
    seen = []

    def step(state, tau, index):
        assert tau <= 0.3 + 1e-15
        return state + tau

    final, t, n = march(0.0, step, 0.3, 0.0, 1.0, stops=[0.45, 0.5], on_step=lambda s, t, i: seen.append((t, i)))
    times = [t for t, _ in seen]
    assert 0.45 in times and 0.5 in times and times[-1] == 1.0
    assert seen[0] == (0.0, -1)
    assert final == pytest.approx(1.0)
    assert n == len(seen) - 1


def test_march_rejects_backwards_interval():
    with pytest.raises(ValueError):
        march(0.0, lambda s, t, i: s, 0.1, 1.0, 0.5)
