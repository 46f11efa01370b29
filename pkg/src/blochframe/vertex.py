"""Pointwise and one-dimensional steps of the symmetric frame construction.

At a high-symmetry (half-integer) point ``k`` the combined operation
``tau_lam o theta`` (with ``lam = 2k``) maps ``Ran P(k)`` to itself, so for
any input frame ``psi`` there is an obstruction unitary ``V`` with

    tau_lam theta psi = psi <| conj(V),   equivalently  V_ab = <psi_a, tau_lam theta psi_b>.

Structural symmetry of the family forces ``V`` to be complex symmetric,
``V = V^T``, and any factorization ``V = U U^T`` turns ``psi <| U`` into a
frame invariant under ``tau_lam o theta``.  The factorization used here is
``U = W exp(i M / 2) W^H`` from an eigendecomposition ``V = W exp(i M) W^H``
with all eigenphases taken in ``[0, 2 pi)`` on a synchronized branch.

Between two such points a geodesic interpolation of unitaries transports one
frame correction into the other, which settles the construction in d = 1.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ObstructionAsymmetric
from .frames import FrameField, act, unitary_between
from .linalg import cluster_phases, polish_unitary, unitary_eigensystem, wrap_to_pi

__all__ = [
    "VertexSolution",
    "obstruction_unitary",
    "symmetric_sqrt",
    "vertex_solution",
    "interpolate_unitaries",
    "macro1",
    "construct_1d",
]

TWO_PI = 2.0 * np.pi


def obstruction_unitary(frame, antiunitary, sym_tol=1e-10):
    """Obstruction unitary of ``frame`` under an antiunitary ``v -> A conj(v)``.

    Parameters
    ----------
    frame : (n, m) array
        Orthonormal frame at a high-symmetry point.
    antiunitary : (n, n) array
        Matrix ``A`` of the antiunitary operation (``tau_lam @ theta``).
    sym_tol : float
        Largest tolerated asymmetry ``||V - V^T||``; a violation signals a
        family whose time-reversal or periodicity structure is broken and
        raises :class:`ObstructionAsymmetric`.
    """
    frame = np.asarray(frame)
    image = np.asarray(antiunitary) @ np.conj(frame)
    v = polish_unitary(frame.conj().T @ image)
    asym = float(np.linalg.norm(v - v.T))
    if asym > sym_tol:
        raise ObstructionAsymmetric(
            f"obstruction unitary asymmetric (defect {asym:.3e} > {sym_tol:.1e})",
            defect=asym,
        )
    # exact symmetrization of the roundoff remainder
    return 0.5 * (v + v.T)


def symmetric_sqrt(v, cluster_tol=1e-8, snap_tol=1e-12, check_tol=1e-10):
    """Factor a complex symmetric unitary as ``v = u @ u.T``.

    Eigenphases are synchronized to a common branch ``[0, 2 pi)``; clusters of
    numerically repeated eigenvalues share one representative phase so that a
    degeneracy split across the branch point cannot desynchronize the square
    root.  Phases within ``snap_tol`` of ``2 pi`` are snapped to ``0``; the
    returned diagnostics flag records whether the snap fired.

    Returns ``(u, info)`` with ``info`` containing the factorization residual
    and the snap flag.  Residuals above ``check_tol`` raise ``ValueError``.
    """
    v = np.asarray(v, dtype=complex)
    sym_defect = float(np.linalg.norm(v - v.T))
    if sym_defect > check_tol:
        raise ValueError(f"input is not symmetric (defect {sym_defect:.3e})")
    w, q, labels = unitary_eigensystem(v, cluster_tol=cluster_tol)

    snapped = False

    def to_positive_branch(angle):
        nonlocal snapped
        mu = angle % TWO_PI
        if mu >= TWO_PI - snap_tol:
            mu = 0.0
            snapped = True
        return mu

    phases = cluster_phases(w, labels, to_positive_branch)
    u = q @ (np.exp(0.5j * phases)[:, None] * q.conj().T)
    u = polish_unitary(u)
    residual = float(np.linalg.norm(u @ u.T - v))
    if residual > check_tol:
        raise ValueError(
            f"symmetric square root residual {residual:.3e} exceeds {check_tol:.1e}"
        )
    return u, {"residual": residual, "branch_snap": snapped}


@dataclass
class VertexSolution:
    """Frame correction solving the invariance condition at one point."""

    point: tuple
    lam: tuple
    obstruction: np.ndarray
    u: np.ndarray
    residual: float
    branch_snap: bool


def vertex_solution(point, frame, antiunitary, lam):
    """Solve the invariance condition at a high-symmetry point.

    The corrected frame ``frame <| u`` satisfies ``phi = tau_lam theta phi``
    up to the reported residual.
    """
    v = obstruction_unitary(frame, antiunitary)
    u, info = symmetric_sqrt(v)
    phi = act(frame, u, check=False)
    image = np.asarray(antiunitary) @ np.conj(phi)
    res = float(np.linalg.norm(phi - image))
    return VertexSolution(
        point=tuple(point), lam=tuple(lam), obstruction=v, u=u,
        residual=res, branch_snap=info["branch_snap"],
    )


def interpolate_unitaries(u1, u2, t):
    """Geodesic path ``W(t)`` with ``W(0) = u1`` and ``W(1/2) = u2``.

    Writes ``u1^{-1} u2 = S exp(i D) S^H`` with eigenphases on the principal
    branch ``(-pi, pi]`` (an eigenvalue at ``-1`` contributes ``+pi``) and
    returns ``u1 S exp(2 i t D) S^H``.  ``t`` may be a scalar or an array;
    the result gains one leading axis per ``t`` axis.
    """
    u1 = np.asarray(u1, dtype=complex)
    u2 = np.asarray(u2, dtype=complex)
    ustar = polish_unitary(u1.conj().T @ u2)
    w, q, labels = unitary_eigensystem(ustar)

    def principal(angle):
        # map to (-pi, pi], sending -pi to +pi
        a = wrap_to_pi(angle)
        if a <= -np.pi + 1e-15:
            a = np.pi
        return float(a)

    phases = cluster_phases(w, labels, principal)
    t_arr = np.asarray(t, dtype=float)
    scalar = t_arr.ndim == 0
    t_flat = np.atleast_1d(t_arr)
    out = np.empty(t_flat.shape + u1.shape, dtype=complex)
    for i, ti in enumerate(t_flat):
        out[i] = u1 @ (q @ (np.exp(2j * ti * phases)[:, None] * q.conj().T))
    return out[0] if scalar else out.reshape(t_arr.shape + u1.shape)


def macro1(psi, points, start_frame, end_antiunitary, end_lam):
    """Transport a symmetric frame along a straight high-symmetry segment.

    Parameters
    ----------
    psi : callable
        Maps a grid tuple to the input frame there (must cover ``points``).
    points : list of grid tuples
        Ordered segment; the first point carries ``start_frame`` (already
        invariant under its own vertex operation) and the last point is a
        high-symmetry point with antiunitary matrix ``end_antiunitary``.
    start_frame : (n, m) array
        Value prescribed at ``points[0]``; reproduced exactly.
    end_antiunitary : (n, n) array
        Matrix of ``tau_lam o theta`` at the end point.
    end_lam : tuple
        Lattice vector of the end point condition (for diagnostics).

    Returns ``(frames, end_solution)`` where ``frames`` is the list of
    corrected frames along the segment.
    """
    steps = len(points) - 1
    u_start = unitary_between(psi(points[0]), start_frame)
    sol = vertex_solution(points[-1], psi(points[-1]), end_antiunitary, end_lam)
    ts = 0.5 * np.arange(steps + 1) / steps
    path = interpolate_unitaries(u_start, sol.u, ts)
    frames = [act(psi(g), path[i], check=False) for i, g in enumerate(points)]
    return frames, sol


def construct_1d(psi_field, family, extend=True):
    """Symmetric frame on the 1-torus from an input frame on ``[0, 1/2]``.

    Solves the invariance condition at both half-integer points and joins the
    two corrections by geodesic interpolation.  With ``extend`` (default) the
    result is the symmetric extension to the full torus; otherwise the
    effective-cell field is returned.  The second element of the returned
    pair collects diagnostics.
    """
    from .wannier import extend_symmetric

    geo = psi_field.geometry
    n_pts = geo.grid_n
    points = [(i,) for i in range(0, n_pts + 1)]

    origin_sol = vertex_solution(
        points[0], psi_field.get(points[0]), family.antiunitary_matrix((0,)), (0,)
    )
    start_frame = act(psi_field.get(points[0]), origin_sol.u, check=False)
    frames, end_sol = macro1(
        psi_field.get, points, start_frame, family.antiunitary_matrix((1,)), (1,)
    )

    fld = FrameField.empty(geo, family.n, family.m, region="effective-cell")
    for g, f in zip(points, frames):
        fld.set(g, f)
    diagnostics = {
        "vertex_residuals": {
            str(points[0]): origin_sol.residual,
            str(points[-1]): end_sol.residual,
        },
        "branch_snaps": bool(origin_sol.branch_snap or end_sol.branch_snap),
    }
    if not extend:
        return fld, diagnostics
    torus = extend_symmetric(fld, family)
    return torus, diagnostics
