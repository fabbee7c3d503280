import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from klgcm import kl_system as kl
from klgcm.materials import STEEL, Material, derive_constants


def test_matrix_entries():
    a = kl.build_matrix(STEEL, "x").matrix
    c = derive_constants(STEEL)
    assert a[kl.V_X, kl.SIGMA_X] == -1 / STEEL.rho
    assert a[kl.SIGMA_X, kl.V_X] == pytest.approx(-STEEL.E / (1 - STEEL.nu**2))
    assert a[kl.SIGMA_Y, kl.V_X] == pytest.approx(-STEEL.nu * STEEL.E / (1 - STEEL.nu**2))
    assert a[kl.W_X, kl.M_X] == pytest.approx(-1 / c.I)
    assert a[kl.M_X, kl.W_X] == pytest.approx(-c.D)


@pytest.mark.parametrize("axis", ["x", "y"])
def test_blocks_decouple(axis):
    a = kl.build_matrix(STEEL, axis).matrix
    assert not a[np.ix_(kl.IN_PLANE, kl.OUT_OF_PLANE)].any()
    assert not a[np.ix_(kl.OUT_OF_PLANE, kl.IN_PLANE)].any()


def test_axis_swap_is_a_relabelling():
    ax = kl.build_matrix(STEEL, "x").matrix
    ay = kl.build_matrix(STEEL, "y").matrix
    p = list(kl.XY_SWAP)
    assert np.array_equal(ax[np.ix_(p, p)], ay)


def test_unknown_axis():
    with pytest.raises(ValueError):
        kl.build_matrix(STEEL, "z")


def test_eigenvalues_closed_form():
    d = kl.decompose(kl.build_matrix(STEEL, "x"))
    c = derive_constants(STEEL)
    expect = np.array([c.cp_shell] * 2 + [c.cs_shell] * 2 + [0.0] * 2 + [-c.cs_shell] * 2 + [-c.cp_shell] * 2)
    assert np.allclose(d.eigenvalues, expect, rtol=1e-12)
    assert np.all(np.diff(d.eigenvalues) <= 0)


@pytest.mark.parametrize("axis", ["x", "y"])
def test_left_is_inverse_of_right(axis):
    d = kl.decompose(kl.build_matrix(STEEL, axis))
    scale = np.abs(d.left).max() * np.abs(d.right).max()
    assert np.abs(d.left @ d.right - np.eye(kl.NCOMP)).max() <= 1e-12 * scale


def test_fast_mode_matches_numpy_eigenvector():
    a = kl.build_matrix(STEEL, "x").matrix
    w, v = np.linalg.eig(a)
    ours = kl.decompose(kl.build_matrix(STEEL, "x"))
    # the two +cp vectors span the same space as numpy's
    numpy_fast = np.real(v[:, np.isclose(w.real, ours.eigenvalues[0], rtol=1e-9)])
    ours_fast = ours.right[:, :2]
    proj = numpy_fast @ np.linalg.lstsq(numpy_fast, ours_fast, rcond=None)[0]
    assert np.allclose(proj, ours_fast, atol=1e-9 * np.abs(ours_fast).max())


def test_pure_mode_has_single_invariant():
    d = kl.decompose(kl.build_matrix(STEEL, "y"))
    u = d.right[:, 0][:, None] * np.linspace(1, 2, 5)[None, :]
    r = kl.to_invariants(u, d)
    assert np.allclose(r[0], np.linspace(1, 2, 5))
    assert np.abs(r[1:]).max() <= 1e-14 * np.abs(u).max()


def test_invariant_round_trip():
    rng = np.random.default_rng(1)
    d = kl.decompose(kl.build_matrix(STEEL, "x"))
    u = rng.normal(size=(kl.NCOMP, 4, 3)) * np.array([1, 1, 1, 1, 1e8, 1e8, 1e8, 1e4, 1e4, 1e4])[:, None, None]
    back = kl.from_invariants(kl.to_invariants(u, d), d)
    assert np.allclose(back, u, rtol=1e-10, atol=1e-10 * np.abs(u).max())


def test_decompose_rejects_unstructured_matrix():
    bad = kl.build_matrix(STEEL, "x")
    m = bad.matrix.copy()
    m[kl.V_X, kl.M_X] = 1.0
    with pytest.raises(ValueError):
        kl.decompose(kl.SystemMatrix(m, "x", bad.velocity_indices))


def test_apply_sparse_matches_matmul():
    rng = np.random.default_rng(2)
    a = rng.normal(size=(4, 4)) * (rng.random((4, 4)) > 0.5)
    u = rng.normal(size=(4, 7, 3))
    assert np.allclose(kl.apply_sparse(a, u), np.einsum("ij,j...->i...", a, u))


def test_index():
    assert kl.index("M_xy") == kl.M_XY
    with pytest.raises(KeyError):
        kl.index("p")


@settings(max_examples=150, deadline=None)
@given(
    E=st.floats(1e8, 1e12),
    nu=st.floats(0.0, 0.49),
    rho=st.floats(100.0, 30000.0),
    h=st.floats(1e-3, 1.0),
    axis=st.sampled_from(["x", "y"]),
)
def test_hyperbolic_for_valid_materials(E, nu, rho, h, axis):
    a = kl.build_matrix(Material(E, nu, rho, h), axis)
    d = kl.decompose(a)
    assert np.isrealobj(d.eigenvalues)
    rec = d.reconstruct()
    assert np.linalg.norm(rec - a.matrix) <= 1e-10 * np.linalg.norm(a.matrix)
