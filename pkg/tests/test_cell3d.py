"""Unit tests for the three-dimensional construction."""
import numpy as np
import pytest

from blochframe.cells import CellGeometry
from blochframe.cell3d import construct_3d, restricted_family, _chart_units
from blochframe.cell3d import _node_to_global
from blochframe.frames import input_frame
from blochframe.models import builtin_model


@pytest.fixture(scope="module")
def fam3():
    return builtin_model("random-trs", n=4, m=2, d=3, seed=5)


def test_restricted_family_matches_frozen_slice(rng, fam3):
    fam2 = restricted_family(fam3)
    assert fam2.d == 2
    assert (fam2.n, fam2.m) == (fam3.n, fam3.m)
    for _ in range(20):
        k = rng.uniform(-1, 1, size=2)
        want = fam3.hamiltonian((0.0, k[0], k[1]))
        assert np.linalg.norm(fam2.hamiltonian(k) - want) < 1e-12
    with pytest.raises(ValueError):
        restricted_family(fam2)


def test_chart_units_cover_the_cell():
    geo = CellGeometry(3, 4)
    n, big = geo.grid_n, geo.n_side
    boundary = set(geo.boundary_points_3d())
    apex = (n // 2, 0, 0)
    for g in geo.cell_points():
        sig, region, s_f, t_f = _chart_units(geo, g)
        assert 0.0 <= sig <= 1.0 + 1e-12
        assert region in (0, 1)
        if region == 0:
            assert -2 * n - 1e-9 <= s_f <= 2 * n + 1e-9
            assert -n - 1e-9 <= t_f <= n + 1e-9
        else:
            assert -n - 1e-9 <= s_f <= n + 1e-9
            assert n - 1e-9 <= t_f <= 5 * n + 1e-9
        if g == apex:
            assert sig == 0.0
        if g in boundary:
            assert sig == pytest.approx(1.0, abs=1e-12)
        else:
            assert sig < 1.0


def test_chart_units_fix_boundary_points():
    """On the boundary the chart projection is the identity."""
    geo = CellGeometry(3, 4)
    n = geo.grid_n
    for g in sorted(geo.boundary_points_3d()):
        sig, region, s_f, t_f = _chart_units(geo, g)
        assert sig == pytest.approx(1.0, abs=1e-12)
        s_u, t_u = int(round(s_f)), int(round(t_f))
        assert abs(s_f - s_u) < 1e-9 and abs(t_f - t_u) < 1e-9
        assert _node_to_global(n, s_u, t_u) == g


@pytest.fixture(scope="module")
def built3(fam3):
    geo = CellGeometry(3, 8)
    psi = input_frame(fam3, geo)
    torus, diag = construct_3d(psi, fam3)
    return geo, torus, diag


def test_construct_3d_face_windings_corrected(built3):
    _, _, diag = built3
    for key in ("face_k1_0", "face_k2_plus", "face_k3_plus", "face_k1_plus"):
        face = diag[key]
        assert face["winding_after_correction"] == 0
    assert diag["corner_residual"] < 1e-10
    assert diag["assembly"]["glue_residual"] < 1e-6


def test_construct_3d_field_is_orthonormal_and_in_span(fam3, built3):
    geo, torus, _ = built3
    assert torus.region == "full-torus"
    assert torus.orthonormality_defect() < 1e-12
    rng = np.random.default_rng(11)
    pts = torus.points()
    for i in rng.choice(len(pts), size=200, replace=False):
        g = pts[i]
        k = np.asarray(g, dtype=float) * geo.h
        p = fam3.projector(k)
        f = torus.get(g)
        assert np.linalg.norm(p @ f - f) < 1e-9


def test_construct_3d_reflection_symmetry(fam3, built3):
    geo, torus, _ = built3
    c = fam3.theta_matrix()
    rng = np.random.default_rng(12)
    pts = torus.points()
    worst = 0.0
    for i in rng.choice(len(pts), size=200, replace=False):
        g = pts[i]
        minus = tuple(-x for x in g)
        want = c @ np.conj(torus.get(g))
        worst = max(worst, np.linalg.norm(torus.get(minus) - want))
    assert worst < 1e-6


def test_construct_3d_rejects_wrong_dimension(haldane):
    psi = input_frame(haldane, CellGeometry(2, 4))
    with pytest.raises(ValueError):
        construct_3d(psi, haldane)
