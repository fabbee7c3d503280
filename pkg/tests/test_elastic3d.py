import numpy as np
import pytest

from klgcm import elastic3d as e3
from klgcm.kl_system import decompose
from klgcm.materials import STEEL, derive_constants


@pytest.mark.parametrize("axis", ["x", "y", "z"])
def test_speeds_match_numpy(axis):
    a = e3.build_matrices_3d(STEEL)[axis]
    ours = np.sort(decompose(a).eigenvalues)
    ref = np.sort(np.linalg.eigvals(a.matrix).real)
    c = derive_constants(STEEL)
    assert np.allclose(ours, ref, atol=1e-9 * c.cp_3d)
    assert ours[-1] == pytest.approx(c.cp_3d, rel=1e-12)
    assert sorted(set(np.round(np.abs(ours), 6))) == pytest.approx([0.0, c.cs_3d, c.cp_3d])


@pytest.mark.parametrize("axis", ["x", "y", "z"])
def test_reconstruction(axis):
    a = e3.build_matrices_3d(STEEL)[axis]
    rec = decompose(a).reconstruct()
    assert np.linalg.norm(rec - a.matrix) <= 1e-12 * np.linalg.norm(a.matrix)


def test_gradient_ic_is_linear_in_z():
    f = e3.init_field_3d(11, 11, 9, 1.0, 1.0, 0.4, kind="gradient", component="v_x", magnitude=100.0)
    col = f.u[e3.V1, 5, 5]
    assert col[0] == pytest.approx(-100.0) and col[-1] == pytest.approx(100.0)
    assert np.allclose(np.diff(col, 2), 0.0, atol=1e-12)
    assert np.count_nonzero(f.u[:, :5]) == 0


def test_point_ic_midplane_and_column():
    f = e3.init_field_3d(11, 11, 5, 1.0, 1.0, 0.4, kind="point", component="v_2", magnitude=7.0)
    assert f.u[e3.V2, 5, 5, 2] == 7.0 and np.count_nonzero(f.u) == 1
    g = e3.init_field_3d(11, 11, 5, 1.0, 1.0, 0.4, kind="point", through_thickness="column")
    assert np.count_nonzero(g.u) == 5


def test_zero_ic_stays_zero():
    f = e3.init_field_3d(9, 9, 5, 1.0, 1.0, 0.2)
    solver = e3.Elastic3DSolver(STEEL)
    assert not solver.step(f, solver.time_step(f)).u.any()


def test_faces_are_traction_free_after_every_step():
    f = e3.init_field_3d(21, 21, 7, 2.0, 2.0, 0.3, kind="point", magnitude=100.0)
    f.u[e3.S33, 10, 10, -1] = 1e6  # loaded face initially
    solver = e3.Elastic3DSolver(STEEL)
    worst = []
    solver.run(f, 1e-4, on_step=lambda s, i: worst.append(e3.traction_residual(s)) if i >= 0 else None)
    assert max(worst) <= 1e-10


def test_gradient_source_keeps_v1_odd_in_z():
    f = e3.init_field_3d(31, 31, 9, 3.0, 3.0, 0.7, kind="gradient", component="v_1")
    run = e3.Elastic3DSolver(STEEL).run(f, 1e-4)
    v1 = run.field.u[e3.V1]
    assert np.abs(v1 + v1[..., ::-1]).max() <= 1e-9 * np.abs(v1).max()


def test_layer_modes():
    f = e3.empty_field_3d(4, 4, 4, 1.0, 1.0, 0.3)
    f.u[e3.V1] = np.arange(4.0)[None, None, :]
    assert np.all(f.layer("v_x", "mid").values == 1.5)
    assert np.all(f.layer("v_1", "top").values == 3.0)
    assert np.all(f.layer("v_1", 1).values == 1.0)
    assert f.slice_xz("v_1").shape == (4, 4)


def test_threads_do_not_change_bits():
    out = []
    for threads in (1, 4):
        f = e3.init_field_3d(17, 13, 5, 1.6, 1.2, 0.2, kind="point", magnitude=1.0)
        solver = e3.Elastic3DSolver(STEEL, threads=threads)
        for i in range(3):
            f = solver.step(f, solver.time_step(f), i)
        out.append(f.u)
    assert np.array_equal(*out)


def test_unknown_component():
    with pytest.raises(KeyError):
        e3.component_index("w_x")
