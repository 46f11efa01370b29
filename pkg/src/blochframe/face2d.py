"""Symmetric frame construction on a square cell (d = 2 and cube faces).

The effective cell of a two-dimensional symmetric family is the half square
``[0, 1/2] x [-1/2, 1/2]``.  Its boundary carries six special half-integer
points; a frame satisfying the invariance conditions there is transported
along the left and bottom edges, completed along the right edge by geodesic
interpolation, and mirrored onto the remaining edges by the symmetries.  A
winding correction makes the resulting boundary loop contractible, after
which the cone extension fills the interior.

The same construction runs on any square face of a higher-dimensional cell
once the face's own translation and time-reversal operations are supplied;
:class:`FaceContext` packages those, so the routines here never look at the
ambient dimension.
"""

import numpy as np

from .cells import CellGeometry
from .errors import BoundaryRelationViolated
from .extension import LoopDomain, extend_unitary_cone, phase_lift_cyclic
from .frames import FrameField, act, unitary_between
from .vertex import interpolate_unitaries, macro1, vertex_solution

__all__ = [
    "FaceContext",
    "winding_degree",
    "macro2",
    "construct_2d",
]


def _upow(u, k):
    """Integer power of a unitary matrix (negative powers via the adjoint)."""
    n = u.shape[0]
    out = np.eye(n, dtype=complex)
    step = u if k >= 0 else u.conj().T
    for _ in range(abs(int(k))):
        out = out @ step
    return out


class FaceContext:
    """A square cell together with its symmetry operations and input frames.

    Parameters
    ----------
    geometry : CellGeometry
        Local two-dimensional grid geometry of the face.
    psi : callable
        Maps a local grid tuple to the input frame at the corresponding
        global point.
    t1, t2 : (n, n) arrays
        Unitaries of the two local translations.
    theta : (n, n) array
        Matrix ``C`` of the local antiunitary involution ``v -> C conj(v)``.
    label : str
        Name used in error messages.
    """

    def __init__(self, geometry, psi, t1, t2, theta, label="cell"):
        if geometry.d != 2:
            raise ValueError("FaceContext needs a two-dimensional geometry")
        self.geometry = geometry
        self.psi = psi
        self.t1 = np.asarray(t1, dtype=complex)
        self.t2 = np.asarray(t2, dtype=complex)
        self.theta = np.asarray(theta, dtype=complex)
        self.label = label
        self._powers = {}

    def translation(self, lam):
        """Unitary of the local translation by the lattice vector ``lam``."""
        lam = (int(lam[0]), int(lam[1]))
        if lam not in self._powers:
            self._powers[lam] = _upow(self.t1, lam[0]) @ _upow(self.t2, lam[1])
        return self._powers[lam]

    def antiunitary(self, lam):
        """Matrix of the local operation ``tau_lam o theta``."""
        return self.translation(lam) @ self.theta

    def apply_anti(self, lam, frame):
        return self.antiunitary(lam) @ np.conj(frame)


def winding_degree(unitaries):
    """Winding number of the determinant along a closed loop of unitaries.

    Steps of the determinant phase at or above ``pi / 2`` raise
    :class:`GridTooCoarse`; below that the lift is unambiguous.
    """
    dets = np.linalg.det(np.asarray(unitaries, dtype=complex))
    lift, winding, defect = phase_lift_cyclic(dets)
    return winding, {"lift": lift, "closure_defect": defect}


def _loop_units(geo, g):
    """Cone coordinates of a cell grid point: (sigma, loop node units).

    ``sigma`` is 1 on the boundary and 0 at the apex ``(1/4, 0)``; the loop
    coordinate matches the node ordering of ``boundary_loop_2d`` (starting at
    the origin, running down the left edge first).
    """
    n = geo.grid_n
    big = geo.n_side
    a1 = 4 * g[0] - big
    a2 = 2 * g[1]
    sig = max(abs(a1), abs(a2))
    if sig == 0:
        return 0.0, 0.0
    scale = big / sig
    b1 = n / 2.0 + (g[0] - n / 2.0) * scale
    b2 = g[1] * scale
    if abs(a2) >= abs(a1):
        units = n + b1 if g[1] < 0 else 5 * n - b1
    elif a1 > 0:
        units = 3 * n + b2
    else:
        units = -b2 if g[1] <= 0 else 6 * n - b2
    return sig / big, units


def _check(cond_value, tol, what, point, label):
    if cond_value > tol:
        raise BoundaryRelationViolated(
            f"{what} fails on {label} at local {point} "
            f"(residual {cond_value:.3e} > {tol:.1e})",
            residual=cond_value,
            point=tuple(point),
        )


def macro2(ctx, left_edge, bottom_edge, tol=1e-8, seed=0):
    """Fill a square cell from symmetric frames on its left and bottom edges.

    Parameters
    ----------
    ctx : FaceContext
        Geometry, input frames and symmetry operations of the cell.
    left_edge : (2 grid_n + 1, n, m) array
        Frames on the edge ``k_1 = 0``, indexed by ``g_2 + grid_n``; must
        satisfy ``Phi(0, -k_2) = theta Phi(0, k_2)`` and the invariance
        conditions at ``(0, 0)`` and ``(0, +-1/2)``.
    bottom_edge : (grid_n + 1, n, m) array
        Frames on the edge ``k_2 = -1/2``, indexed by ``g_1``; must agree
        with the left edge at the shared corner and satisfy the invariance
        condition at the corner ``(1/2, -1/2)``.
    tol : float
        Acceptance tolerance for the input conditions.

    Returns ``(field, diag)``: the filled effective-cell frame field and a
    diagnostics dict (winding number, vertex residuals, extension data).
    """
    geo = ctx.geometry
    n = geo.grid_n

    def left(g2):
        return left_edge[g2 + n]

    # --- input conditions -------------------------------------------------
    _check(
        float(np.linalg.norm(left(-n) - bottom_edge[0])),
        tol, "corner agreement", (0, -n), ctx.label,
    )
    worst = 0.0
    for g2 in range(0, n + 1):
        worst = max(
            worst,
            float(np.linalg.norm(left(-g2) - ctx.apply_anti((0, 0), left(g2)))),
        )
    _check(worst, tol, "left edge reflection relation", (0, "*"), ctx.label)
    for g2, lam in (((0), (0, 0)), ((n), (0, 1))):
        res = float(np.linalg.norm(left(g2) - ctx.apply_anti((0, lam[1]), left(g2))))
        _check(res, tol, "vertex condition", (0, g2), ctx.label)
    corner = bottom_edge[n]
    res = float(np.linalg.norm(corner - ctx.apply_anti((1, -1), corner)))
    _check(res, tol, "vertex condition", (n, -n), ctx.label)

    # --- right edge: interpolate into the vertex solution at (1/2, 0) -----
    u3 = unitary_between(ctx.psi((n, -n)), corner)
    sol4 = vertex_solution((n, 0), ctx.psi((n, 0)), ctx.antiunitary((1, 0)), (1, 0))
    ts = 0.5 * np.arange(n + 1) / n
    path = interpolate_unitaries(u3, sol4.u, ts)

    skel = {}
    for g2 in range(-n, n + 1):
        skel[(0, g2)] = left(g2)
    for g1 in range(0, n + 1):
        skel[(g1, -n)] = bottom_edge[g1]
    for j in range(n + 1):
        skel[(n, -n + j)] = act(ctx.psi((n, -n + j)), path[j], check=False)
    for g2 in range(1, n + 1):
        skel[(n, g2)] = ctx.apply_anti((1, 0), skel[(n, -g2)])
    for g1 in range(1, n):
        skel[(g1, n)] = ctx.t2 @ skel[(g1, -n)]
    skel[(n, n)] = ctx.apply_anti((1, 0), skel[(n, -n)])

    # --- winding of the correction loop and its removal -------------------
    loop = geo.boundary_loop_2d()
    u_nodes = np.stack([unitary_between(ctx.psi(g), skel[g]) for g in loop])
    r, wind_diag = winding_degree(u_nodes)
    r_after = r
    if r != 0:
        m = u_nodes.shape[-1]
        for idx, g in enumerate(loop):
            if g[0] == n and -n < g[1] < n:
                xi = np.exp(-2j * np.pi * r * (g[1] + n) / geo.n_side)
                x = np.eye(m, dtype=complex)
                x[0, 0] = xi
                skel[g] = skel[g] @ x
                u_nodes[idx] = u_nodes[idx] @ x
        r_after, _ = winding_degree(u_nodes)

    # --- cone extension into the cell -------------------------------------
    points = geo.cell_points()
    sigma = np.empty(len(points))
    units = np.empty(len(points))
    for i, g in enumerate(points):
        sigma[i], units[i] = _loop_units(geo, g)
    dom = LoopDomain(len(loop), units)
    u_cell, ext_diag = extend_unitary_cone(u_nodes, dom, sigma, seed=seed)

    field = FrameField.empty(geo, ctx.psi((0, 0)).shape[0], u_nodes.shape[-1])
    for i, g in enumerate(points):
        field.set(g, act(ctx.psi(g), u_cell[i], check=False))
    for g in loop:
        field.set(g, skel[g])

    diag = {
        "winding": int(r),
        "winding_after_correction": int(r_after),
        "vertex_residual": sol4.residual,
        "branch_snap": bool(sol4.branch_snap),
        "det_closure": wind_diag["closure_defect"],
        "extension": ext_diag,
    }
    return field, diag


def _left_edge_frames(ctx):
    """Symmetric frames on the edge ``k_1 = 0`` of a face context."""
    n = ctx.geometry.grid_n
    origin = vertex_solution((0, 0), ctx.psi((0, 0)), ctx.antiunitary((0, 0)), (0, 0))
    start = act(ctx.psi((0, 0)), origin.u, check=False)
    points = [(0, j) for j in range(n + 1)]
    upper, top_sol = macro1(ctx.psi, points, start, ctx.antiunitary((0, 1)), (0, 1))
    edge = np.empty((2 * n + 1,) + upper[0].shape, dtype=complex)
    for j in range(n + 1):
        edge[n + j] = upper[j]
        edge[n - j] = ctx.apply_anti((0, 0), upper[j])
    diag = {
        "origin_residual": origin.residual,
        "top_residual": top_sol.residual,
        "branch_snap": bool(origin.branch_snap or top_sol.branch_snap),
    }
    return edge, diag


def _bottom_edge_frames(ctx, start):
    """Symmetric frames on the edge ``k_2 = -1/2``, continuing ``start``."""
    n = ctx.geometry.grid_n
    points = [(i, -n) for i in range(n + 1)]
    frames, end_sol = macro1(ctx.psi, points, start, ctx.antiunitary((1, -1)), (1, -1))
    return np.stack(frames), {"corner_residual": end_sol.residual,
                              "branch_snap": bool(end_sol.branch_snap)}


def build_face(ctx, tol=1e-8, seed=0):
    """Run the full square-cell construction on a face context."""
    left, left_diag = _left_edge_frames(ctx)
    bottom, bottom_diag = _bottom_edge_frames(ctx, left[0])
    field, diag = macro2(ctx, left, bottom, tol=tol, seed=seed)
    diag["left_edge"] = left_diag
    diag["bottom_edge"] = bottom_diag
    return field, diag


def construct_2d(psi_field, family, tol=1e-8, seed=0, extend=True):
    """Symmetric frame on the 2-torus from input frames on the half cell.

    Returns ``(field, diag)``; with ``extend`` (default) the field covers the
    full torus, otherwise the effective cell.
    """
    from .wannier import extend_symmetric

    geo = psi_field.geometry
    if geo.d != 2:
        raise ValueError("construct_2d needs a two-dimensional field")
    ctx = FaceContext(
        geo,
        psi_field.get,
        family.tau_power((1, 0)),
        family.tau_power((0, 1)),
        family.theta_matrix(),
        label="cell",
    )
    field, diag = build_face(ctx, tol=tol, seed=seed)
    if not extend:
        return field, diag
    torus = extend_symmetric(field, family)
    return torus, diag
