"""Unit tests for the square-cell construction and determinant windings."""
import numpy as np
import pytest

from blochframe.cells import CellGeometry
from blochframe.errors import GridTooCoarse
from blochframe.face2d import construct_2d, winding_degree
from blochframe.frames import input_frame

from conftest import planted_loop


@pytest.mark.parametrize("m,r", [(1, 0), (1, 2), (2, -2), (2, 1), (3, 3), (3, -1)])
def test_winding_degree_counts_planted_turns(rng, m, r):
    ts = np.arange(48) / 48
    nodes = planted_loop(ts, m, r, rng, scale=0.3, order=2)
    got, info = winding_degree(nodes)
    assert got == r
    assert abs(info["closure_defect"]) < 1e-10


def test_winding_degree_refuses_undersampled_loops(rng):
    ts = np.arange(16) / 16
    nodes = planted_loop(ts, 1, 5, rng, scale=0.0, order=1)
    with pytest.raises(GridTooCoarse):
        winding_degree(nodes)


@pytest.fixture(scope="module")
def haldane_face(haldane):
    geo = CellGeometry(2, 8)
    psi = input_frame(haldane, geo)
    torus, diag = construct_2d(psi, haldane)
    return geo, torus, diag


def test_construct_2d_corrects_the_winding(haldane_face):
    _, _, diag = haldane_face
    assert diag["winding_after_correction"] == 0
    assert diag["vertex_residual"] < 1e-10
    assert diag["left_edge"]["origin_residual"] < 1e-10
    assert diag["left_edge"]["top_residual"] < 1e-10
    assert diag["bottom_edge"]["corner_residual"] < 1e-10
    assert abs(diag["det_closure"]) < 1e-8


def test_construct_2d_field_is_orthonormal_and_in_span(haldane, haldane_face):
    geo, torus, _ = haldane_face
    assert torus.region == "full-torus"
    assert torus.orthonormality_defect() < 1e-12
    worst = 0.0
    for g in torus.points():
        k = np.asarray(g, dtype=float) * geo.h
        p = haldane.projector(k)
        f = torus.get(g)
        worst = max(worst, np.linalg.norm(p @ f - f))
    assert worst < 1e-9


def test_construct_2d_reflection_symmetry(haldane, haldane_face):
    geo, torus, _ = haldane_face
    c = haldane.theta_matrix()
    worst = 0.0
    for g in torus.points():
        minus = tuple(-x for x in g)
        want = c @ np.conj(torus.get(g))
        worst = max(worst, np.linalg.norm(torus.get(minus) - want))
    assert worst < 1e-8


def _max_step(torus):
    worst = 0.0
    for g in torus.points():
        for step in ((1, 0), (0, 1)):
            nb = (g[0] + step[0], g[1] + step[1])
            worst = max(worst, np.linalg.norm(torus.get(nb) - torus.get(g)))
    return worst


def test_construct_2d_continuity_improves_with_the_grid(haldane, haldane_face):
    _, torus, _ = haldane_face
    coarse = _max_step(torus)
    assert coarse < 1.2  # far from an actual jump, which would be ~2
    fine, _ = construct_2d(input_frame(haldane, CellGeometry(2, 16)), haldane)
    assert _max_step(fine) < 0.7 * coarse


def test_construct_2d_is_deterministic(haldane):
    geo = CellGeometry(2, 4)
    a, _ = construct_2d(input_frame(haldane, geo), haldane)
    b, _ = construct_2d(input_frame(haldane, geo), haldane)
    assert np.array_equal(a.data, b.data)


def test_construct_2d_cell_region(haldane):
    geo = CellGeometry(2, 4)
    cell, _ = construct_2d(input_frame(haldane, geo), haldane, extend=False)
    assert cell.region == "effective-cell"
    assert len(cell.points()) == np.prod(geo.cell_shape)


def test_construct_2d_rejects_wrong_dimension(ssh):
    geo = CellGeometry(1, 4)
    psi = input_frame(ssh, geo)
    with pytest.raises(ValueError):
        construct_2d(psi, ssh)
