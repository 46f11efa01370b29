"""Unit tests for vertex corrections and segment transport.

The square-root factorization is checked against its defining property
directly (u u^T reproduces the input, u is unitary and itself symmetric),
including branch-point and near-degenerate edge cases that a naive
eigenphase halving would get wrong.
"""
import numpy as np
import pytest
import scipy.linalg

from blochframe.cells import CellGeometry
from blochframe.errors import ObstructionAsymmetric
from blochframe.frames import input_frame, unitary_between
from blochframe.vertex import (
    construct_1d,
    interpolate_unitaries,
    macro1,
    obstruction_unitary,
    symmetric_sqrt,
    vertex_solution,
)

from conftest import random_symmetric_unitary, random_unitary


@pytest.mark.parametrize("m", [1, 2, 3, 5])
def test_symmetric_sqrt_factorizes(rng, m):
    for _ in range(50):
        v = random_symmetric_unitary(rng, m)
        u, info = symmetric_sqrt(v)
        assert np.linalg.norm(u @ u.T - v) < 1e-11
        assert np.linalg.norm(u.conj().T @ u - np.eye(m)) < 1e-12
        # the principal functional square root is itself symmetric
        assert np.linalg.norm(u - u.T) < 1e-10
        assert info["residual"] < 1e-11


def test_symmetric_sqrt_rejects_asymmetric(rng):
    u = random_unitary(rng, 3)
    if np.linalg.norm(u - u.T) < 1e-3:  # essentially impossible, but be safe
        u = u @ np.diag([1, 1j, 1])
    with pytest.raises(ValueError):
        symmetric_sqrt(u)


def test_symmetric_sqrt_snaps_wraparound_phase():
    v = np.diag([np.exp(-1e-14j), 1.0]).astype(complex)
    u, info = symmetric_sqrt(v)
    assert info["branch_snap"]
    # the snapped root sits near +1, not near the opposite branch -1
    assert np.linalg.norm(u - np.eye(2)) < 1e-6


def test_symmetric_sqrt_keeps_split_degeneracy_together(rng):
    """A degenerate pair straddling the 0/2 pi cut stays on one branch."""
    eps = 1e-10
    q = scipy.linalg.qr(rng.standard_normal((3, 3)))[0]  # real orthogonal
    v = q @ np.diag(np.exp(1j * np.array([eps, -eps, 1.3]))) @ q.T
    u, _ = symmetric_sqrt(v)
    assert np.linalg.norm(u @ u.T - v) < 1e-11
    # both members of the cluster took the branch near zero phase
    w = np.linalg.eigvals(u)
    assert sorted(np.abs(np.angle(w)))[1] < 1e-6


def test_obstruction_unitary_closed_form(rng):
    q = random_unitary(rng, 4)
    v = obstruction_unitary(q, np.eye(4))
    want = q.conj().T @ np.conj(q)
    assert np.linalg.norm(v - want) < 1e-12
    assert np.linalg.norm(v - v.T) == 0.0


def test_obstruction_unitary_real_frame_is_identity(rng):
    r = scipy.linalg.qr(rng.standard_normal((4, 2)))[0][:, :2]
    v = obstruction_unitary(r, np.eye(4))
    assert np.linalg.norm(v - np.eye(2)) < 1e-12


def test_obstruction_unitary_rejects_antisymmetric():
    a = np.array([[0.0, 1.0], [-1.0, 0.0]])  # squares to -1: no valid vertex
    with pytest.raises(ObstructionAsymmetric):
        obstruction_unitary(np.eye(2), a)


def test_vertex_solution_fixes_the_frame(rng):
    # an invariant span: real basis rotated by an arbitrary unitary
    r = scipy.linalg.qr(rng.standard_normal((4, 2)))[0][:, :2]
    frame = r @ random_unitary(rng, 2)
    sol = vertex_solution((0, 0), frame, np.eye(4), (0, 0))
    phi = frame @ sol.u
    assert np.linalg.norm(phi - np.conj(phi)) < 1e-10
    assert sol.residual < 1e-10
    assert sol.point == (0, 0)


def test_interpolate_endpoints_and_unitarity(rng):
    u1 = random_unitary(rng, 3)
    u2 = random_unitary(rng, 3)
    assert np.linalg.norm(interpolate_unitaries(u1, u2, 0.0) - u1) < 1e-12
    assert np.linalg.norm(interpolate_unitaries(u1, u2, 0.5) - u2) < 1e-12
    ts = np.linspace(0.0, 0.5, 11)
    path = interpolate_unitaries(u1, u2, ts)
    assert path.shape == (11, 3, 3)
    for w in path:
        assert np.linalg.norm(w.conj().T @ w - np.eye(3)) < 1e-12


def test_interpolate_is_a_geodesic(rng):
    """Increments depend only on the parameter difference."""
    u1 = random_unitary(rng, 2)
    u2 = random_unitary(rng, 2)
    w = lambda t: interpolate_unitaries(u1, u2, t)
    inc1 = w(0.1).conj().T @ w(0.3)
    inc2 = w(0.2).conj().T @ w(0.4)
    assert np.linalg.norm(inc1 - inc2) < 1e-11


def test_interpolate_minus_one_takes_positive_halfturn():
    u2 = np.diag([-1.0, 1.0]).astype(complex)
    w = interpolate_unitaries(np.eye(2), u2, 0.25)
    assert np.linalg.norm(w - np.diag([1j, 1.0])) < 1e-12


def test_interpolate_conjugate_pair_near_minus_one():
    delta = 1e-9
    u2 = np.diag(np.exp(1j * np.array([np.pi - delta, -(np.pi - delta)])))
    w = interpolate_unitaries(np.eye(2), u2, 0.5)
    assert np.linalg.norm(w - u2) < 1e-7


def test_macro1_reproduces_start_and_fixes_end(rng):
    r = scipy.linalg.qr(rng.standard_normal((4, 2)))[0][:, :2]
    h = 0.3 * (lambda a: a + a.conj().T)(
        rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    )
    points = [(i,) for i in range(9)]
    frames_in = {g: r @ scipy.linalg.expm(1j * g[0] / 8 * h) for g in points}
    psi = frames_in.get
    start_sol = vertex_solution(points[0], psi(points[0]), np.eye(4), (0,))
    start = psi(points[0]) @ start_sol.u
    frames, end_sol = macro1(psi, points, start, np.eye(4), (1,))
    assert np.linalg.norm(frames[0] - start) < 1e-12
    phi_end = frames[-1]
    assert np.linalg.norm(phi_end - np.conj(phi_end)) < 1e-10
    assert end_sol.residual < 1e-10
    steps = [np.linalg.norm(a - b) for a, b in zip(frames, frames[1:])]
    assert max(steps) < 0.6


def test_construct_1d_symmetric_frame(ssh):
    geo = CellGeometry(1, 8)
    psi = input_frame(ssh, geo)
    torus, diag = construct_1d(psi, ssh)
    assert torus.region == "full-torus"
    assert torus.orthonormality_defect() < 1e-12
    assert all(v < 1e-10 for v in diag["vertex_residuals"].values())
    n_side = geo.n_side
    # reflection symmetry on the whole torus (theta is plain conjugation)
    for g in range(n_side):
        a = torus.get((g,))
        b = torus.get((-g,))
        assert np.linalg.norm(b - np.conj(a)) < 1e-10
    # frames still span the spectral subspace
    for g in range(n_side):
        p = ssh.projector((g * geo.h,))
        f = torus.get((g,))
        assert np.linalg.norm(p @ f - f) < 1e-9
    steps = [
        np.linalg.norm(torus.get((g + 1,)) - torus.get((g,))) for g in range(n_side)
    ]
    assert max(steps) < 0.8


def test_construct_1d_without_extension(ssh):
    geo = CellGeometry(1, 8)
    psi = input_frame(ssh, geo)
    cell, _ = construct_1d(psi, ssh, extend=False)
    assert cell.region == "effective-cell"
    phi0, phi_half = cell.get((0,)), cell.get((8,))
    assert np.linalg.norm(phi0 - np.conj(phi0)) < 1e-10
    assert np.linalg.norm(phi_half - np.conj(phi_half)) < 1e-10
    # the input frame is only rotated inside its span
    u = unitary_between(psi.get((3,)), cell.get((3,)))
    assert np.linalg.norm(psi.get((3,)) @ u - cell.get((3,))) < 1e-10
