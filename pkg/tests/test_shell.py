import numpy as np
import pytest

from klgcm import kl_system as kl
from klgcm import shell
from klgcm.materials import STEEL


def test_point_source_hits_centre_node():
    f = shell.init_field(21, 11, 2.0, 1.0, shell.PointVelocity("v_x", 100.0))
    assert f.u[kl.V_X, 10, 5] == 100.0
    assert np.count_nonzero(f.u) == 1


def test_top_hat_node_count_matches_brute_force():
    f = shell.init_field(41, 41, 4.0, 4.0, shell.PointVelocity("w_x", 2.0, center=(1.9, 2.3), radius=0.55))
    count = 0
    for i in range(41):
        for j in range(41):
            if (0.1 * i - 1.9) ** 2 + (0.1 * j - 2.3) ** 2 <= 0.55**2 + 1e-12:
                count += 1
    assert np.count_nonzero(f.u[kl.W_X]) == count
    assert set(np.unique(f.u[kl.W_X])) == {0.0, 2.0}


def test_source_outside_domain():
    with pytest.raises(ValueError):
        shell.init_field(11, 11, 1.0, 1.0, shell.PointVelocity("v_x", 1.0, center=(2.0, 0.5)))


def test_unknown_component():
    with pytest.raises(KeyError):
        shell.init_field(11, 11, 1.0, 1.0, shell.PointVelocity("q", 1.0))


def test_sensor_on_uniform_and_ramp():
    f = shell.empty_field(101, 101, 10.0, 10.0)
    f.u[kl.V_X] = 3.0
    spec = shell.SensorSpec("s", offset=(1.5, 0.0))
    assert shell.record_sensor(f, spec) == pytest.approx(3.0)
    x, _ = f.coords()
    f.u[kl.V_X] = x[:, None]
    assert shell.record_sensor(f, spec) == pytest.approx(6.5)
    # 11 x 11 nodes fall inside a 1 m square at 0.1 m spacing
    assert spec.mask(f).sum() == 121


def test_sensor_outside_domain():
    f = shell.empty_field(11, 11, 1.0, 1.0)
    with pytest.raises(ValueError):
        shell.record_sensor(f, shell.SensorSpec("s", offset=(0.4, 0.0)))


def test_front_radius():
    d = np.arange(10.0)
    v = np.array([5, 3, 1, 0.2, 0.04, 0.01, 0.0, 0, 0, 0])
    assert shell.front_radius(d, v, threshold=0.01) == 3.0
    assert shell.front_radius(d, np.zeros(10)) == 0.0


def test_point_source_stays_mirror_symmetric():
    solver = shell.ShellSolver(STEEL)
    f = shell.init_field(61, 61, 6.0, 6.0, shell.PointVelocity("v_x", 100.0))
    run = solver.run(f, 3e-4)
    vx = run.field.u[kl.V_X]
    scale = np.abs(vx).max()
    assert np.abs(vx - vx[::-1, :]).max() <= 1e-12 * scale
    assert np.abs(vx - vx[:, ::-1]).max() <= 1e-12 * scale


def test_energy_is_quadratic_and_positive():
    m = STEEL.with_thickness(0.3)
    rng = np.random.default_rng(3)
    f = shell.empty_field(8, 9, 1.0, 1.0)
    f.u[...] = rng.normal(size=f.u.shape)
    e = shell.energy(f, m)
    assert e > 0
    g = f.copy()
    g.u *= 2
    assert shell.energy(g, m) == pytest.approx(4 * e, rel=1e-13)
    assert shell.energy(shell.empty_field(4, 4, 1.0, 1.0), m) == 0.0


def _plane_wave_error(n):
    m = STEEL.with_thickness(0.2)
    profile = lambda s: np.exp(-(((s - 2.0) / 0.4) ** 2))  # noqa: E731
    f = shell.init_field(n, 5, 8.0, 8.0 * 4 / (n - 1), shell.PlaneWave(m, "x", 0, profile))
    solver = shell.ShellSolver(m, order=3, courant=0.8)
    t = 3.0 / solver.max_speed
    run = solver.run(f, t)
    d = solver.decompositions["x"]
    x, _ = f.coords()
    exact = profile(x - d.eigenvalues[0] * t)
    return np.abs(kl.to_invariants(run.field.u, d)[0][:, 2] - exact).max()


def test_refinement_converges():
    coarse, fine = _plane_wave_error(81), _plane_wave_error(161)
    assert coarse / fine > 6.0


def test_run_records_snapshots_and_traces():
    solver = shell.ShellSolver(STEEL)
    f = shell.init_field(41, 41, 4.0, 4.0, shell.PointVelocity("v_x", 1.0))
    run = solver.run(f, 2e-4, snapshot_times=[0.0, 1e-4, 2e-4], sensors=[shell.SensorSpec("s", (0.5, 0.0))])
    assert sorted(run.snapshots) == [0.0, 1e-4, 2e-4]
    assert run.snapshots[1e-4].t == 1e-4
    assert len(run.traces["s"]) == run.steps + 1


def test_non_finite_state_is_reported():
    solver = shell.ShellSolver(STEEL)
    f = shell.init_field(11, 11, 1.0, 1.0)
    f.u[kl.SIGMA_X, 3, 3] = np.nan
    with pytest.raises(shell.SimulationError, match="step 0"):
        solver.step(f, solver.time_step(f), 0)


def test_v_mag():
    f = shell.empty_field(3, 3, 1.0, 1.0)
    f.u[kl.V_X], f.u[kl.V_Y] = 3.0, 4.0
    assert np.all(f.component("v_mag") == 5.0)


def test_wave_peaks_travel_at_plate_speeds():
    from klgcm.materials import derive_constants

    solver = shell.ShellSolver(STEEL)
    f = shell.init_field(201, 201, 10.0, 10.0, shell.PointVelocity("v_x", 100.0))
    times = [1e-4 * k for k in range(2, 8)]
    run = solver.run(f, times[-1], times)
    c = derive_constants(STEEL)
    for axis, speed in (("x", c.cp_shell), ("y", c.cs_shell)):
        peaks = []
        for t in times:
            d, v = shell.ray(run.snapshots[t], "v_x", axis)
            peaks.append(d[5 + np.argmax(np.abs(v[5:]))])  # skip the source node's near field
        assert np.polyfit(times, peaks, 1)[0] == pytest.approx(speed, rel=0.02)
