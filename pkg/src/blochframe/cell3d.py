"""Symmetric frame construction on the three-dimensional cell.

The effective cell is the half cube ``[0, 1/2] x [-1/2, 1/2]^2``.  The
boundary frame is assembled face by face:

* the face ``k_1 = 0`` is itself a two-dimensional symmetric problem for the
  family restricted to that plane and is solved by the full square-cell
  construction;
* the edge ``k_2 = k_3 = 1/2`` is filled by geodesic transport between its
  endpoint solutions, and translated copies of it seed the faces
  ``k_2 = 1/2`` and ``k_3 = 1/2``, each solved by the square-cell routine
  with its own composed time-reversal operation;
* translation copies fill ``k_2 = -1/2`` and ``k_3 = -1/2``;
* on the last face ``k_1 = 1/2`` the half with ``k_2 >= 0`` is again a
  square-cell problem in mirrored coordinates, and the other half follows
  from the residual symmetry of that face.

The assembled boundary map is then extended into the interior by the cone
construction.  The boundary of the half cube is unfolded onto a T-shaped
planar chart; a continuous argument lift for determinant phases is computed
directly on the boundary surface graph, so the unfolding seams are coherent
by construction and are verified explicitly.
"""

import numpy as np

from .cells import CellGeometry
from .errors import BoundaryRelationViolated, ChartSeamMismatch, GridTooCoarse
from .extension import extend_unitary_cone
from .face2d import FaceContext, build_face, macro2
from .frames import FrameField, act, evaluate, unitary_between
from .models import ProjectorFamily
from .vertex import macro1

__all__ = ["restricted_family", "DiskDomain", "construct_3d"]


def restricted_family(family):
    """Two-dimensional family obtained by freezing ``k_1 = 0``.

    Hoppings with the same transverse displacement are summed; the symmetry
    operations in the remaining directions are inherited unchanged.
    """
    if family.d != 3:
        raise ValueError("restriction requires a three-dimensional family")
    hop = {}
    for r, mat in family.hoppings.items():
        key = (r[1], r[2])
        hop[key] = hop.get(key, 0) + mat
    tau = None
    if family.tau is not None:
        tau = [family.tau[1], family.tau[2]]
    return ProjectorFamily(
        d=2,
        n=family.n,
        m=family.m,
        hoppings=hop,
        theta=family.theta,
        tau=tau,
        gap_tolerance=family.gap_tolerance,
        name=family.name + "[k1=0]",
        params=dict(family.params),
    )


# ---------------------------------------------------------------------------
# planar chart of the cell boundary
#
# The boundary of the half cube unfolds onto the T-shaped domain
#
#     D = [-1, 1] x [-1/2, 1/2]  union  [-1/2, 1/2] x [1/2, 5/2],
#
# in chart coordinates (s, t), with the six faces placed as
#
#     s in [-1, -1/2]: (k) = (-s - 1/2, -1/2, t)        face k2 = -1/2
#     s in [-1/2, 1/2]: (k) = (0, s, t)                 face k1 = 0
#     s in [1/2, 1]:   (k) = (s - 1/2, 1/2, t)          face k2 = +1/2
#     t in [1/2, 1]:   (k) = (t - 1/2, s, 1/2)          face k3 = +1/2
#     t in [1, 2]:     (k) = (1/2, s, 3/2 - t)          face k1 = 1/2
#     t in [2, 5/2]:   (k) = (5/2 - t, s, -1/2)         face k3 = -1/2
#
# Node coordinates are kept in grid units S = s * 2 grid_n, T = t * 2 grid_n,
# which are integers exactly on the face grids.


def _node_to_global(n, s_u, t_u):
    """Global face grid point of a chart node (integer chart units)."""
    if t_u <= n and abs(s_u) <= 2 * n and abs(t_u) <= n:
        if s_u < -n:
            return (-s_u - n, -n, t_u)
        if s_u <= n:
            return (0, s_u, t_u)
        return (s_u - n, n, t_u)
    if t_u <= 2 * n:
        return (t_u - n, s_u, n)
    if t_u <= 4 * n:
        return (n, s_u, 3 * n - t_u)
    return (5 * n - t_u, s_u, -n)


def _chart_nodes(geo):
    """All chart nodes (integer units) with their global face points."""
    n = geo.grid_n
    nodes = []
    for s_u in range(-2 * n, 2 * n + 1):
        for t_u in range(-n, n + 1):
            nodes.append((s_u, t_u))
    for s_u in range(-n, n + 1):
        for t_u in range(n + 1, 5 * n + 1):
            nodes.append((s_u, t_u))
    globals_ = [_node_to_global(n, s, t) for s, t in nodes]
    return nodes, globals_


def _boundary_graph(geo):
    """Boundary grid points of the cell and their surface adjacency."""
    pts = sorted(geo.boundary_points_3d())
    index = {p: i for i, p in enumerate(pts)}
    edges = []
    for p in pts:
        for axis in range(3):
            q = list(p)
            q[axis] += 1
            q = tuple(q)
            if q in index:
                edges.append((index[p], index[q]))
    return pts, index, edges


class DiskDomain:
    """Chart adapter for the cone extension over the half-cube boundary.

    Argument lifts are computed on the boundary surface graph itself (a
    simply connected closed surface), then read back through the chart, so
    nodes identified by the unfolding automatically receive equal lift
    values; the identification of nodal data across seams is still verified
    and a disagreement raises :class:`ChartSeamMismatch`.
    """

    def __init__(self, geo):
        self.geo = geo
        self.nodes, self.node_globals = _chart_nodes(geo)
        self.node_id = {st: i for i, st in enumerate(self.nodes)}
        self.points, self.point_index, self.surface_edges = _boundary_graph(geo)
        self.node_of_point = np.array(
            [self.point_index[g] for g in self.node_globals]
        )
        groups = [[] for _ in self.points]
        for i, pid in enumerate(self.node_of_point):
            groups[pid].append(i)
        self.point_nodes = groups
        order = [self.point_index[(0, 0, 0)]]
        parent = {order[0]: None}
        adj = [[] for _ in self.points]
        for a, b in self.surface_edges:
            adj[a].append(b)
            adj[b].append(a)
        head = 0
        while head < len(order):
            cur = order[head]
            head += 1
            for nxt in adj[cur]:
                if nxt not in parent:
                    parent[nxt] = cur
                    order.append(nxt)
        if len(order) != len(self.points):
            raise RuntimeError("boundary surface graph is not connected")
        self._bfs_order = order
        self._bfs_parent = parent
        self._corner_ids = None
        self._weights = None

    # -- queries --------------------------------------------------------
    def set_queries(self, coords):
        """Attach query chart coordinates: sequence of (region, s_units,
        t_units) triples, region 0 for the horizontal bar, 1 for the
        vertical one."""
        n = self.geo.grid_n
        q = len(coords)
        ids = np.zeros((q, 4), dtype=int)
        wts = np.zeros((q, 4))
        for i, (region, s_f, t_f) in enumerate(coords):
            if region == 0:
                s_lo, s_hi, t_lo, t_hi = -2 * n, 2 * n, -n, n
            else:
                s_lo, s_hi, t_lo, t_hi = -n, n, n, 5 * n
            s_f = min(max(s_f, s_lo), s_hi)
            t_f = min(max(t_f, t_lo), t_hi)
            s0 = int(np.floor(s_f))
            if s0 >= s_hi:
                s0 = s_hi - 1
            t0 = int(np.floor(t_f))
            if t0 >= t_hi:
                t0 = t_hi - 1
            fs = s_f - s0
            ft = t_f - t0
            ids[i] = (
                self.node_id[(s0, t0)],
                self.node_id[(s0 + 1, t0)],
                self.node_id[(s0, t0 + 1)],
                self.node_id[(s0 + 1, t0 + 1)],
            )
            wts[i] = ((1 - fs) * (1 - ft), fs * (1 - ft), (1 - fs) * ft, fs * ft)
        self._corner_ids = ids
        self._weights = wts

    # -- adapter interface ---------------------------------------------
    def collapse(self, values, tol=1e-10):
        """Per-surface-point value of chart-node data; seams must agree."""
        values = np.asarray(values)
        out = np.empty((len(self.points),) + values.shape[1:], dtype=values.dtype)
        worst = 0.0
        for pid, group in enumerate(self.point_nodes):
            ref = values[group[0]]
            out[pid] = ref
            for other in group[1:]:
                worst = max(worst, float(np.max(np.abs(values[other] - ref))))
        if worst > tol:
            raise ChartSeamMismatch(
                f"chart nodes identified by the unfolding disagree by {worst:.3e}",
                defect=worst,
            )
        return out, worst

    def lift(self, values, max_step=0.5 * np.pi):
        """Continuous argument lift of nodal scalars across the surface."""
        by_point, seam = self.collapse(values)
        theta = np.empty(len(self.points))
        theta[self._bfs_order[0]] = np.angle(by_point[self._bfs_order[0]])
        for pid in self._bfs_order[1:]:
            par = self._bfs_parent[pid]
            theta[pid] = theta[par] + np.angle(by_point[pid] / by_point[par])
        worst_step = 0.0
        worst_defect = 0.0
        for a, b in self.surface_edges:
            step = np.angle(by_point[b] / by_point[a])
            worst_step = max(worst_step, abs(step))
            worst_defect = max(worst_defect, abs(theta[b] - theta[a] - step))
        if worst_step >= max_step:
            raise GridTooCoarse(
                f"boundary phase step {worst_step:.3f} rad exceeds "
                f"{max_step:.3f}; refine the grid",
                step=float(worst_step),
            )
        if worst_defect > 1e-8:
            raise ChartSeamMismatch(
                f"argument lift inconsistent around the boundary surface "
                f"(defect {worst_defect:.3e})",
                defect=float(worst_defect),
            )
        info = {"seam_defect": seam, "max_step": float(worst_step),
                "lift_defect": float(worst_defect)}
        return theta[self.node_of_point], info

    def interp(self, nodal):
        nodal = np.asarray(nodal)
        gathered = nodal[self._corner_ids]
        w = self._weights.reshape(self._weights.shape + (1,) * (nodal.ndim - 1))
        return np.sum(w * gathered, axis=1)


def _chart_units(geo, g):
    """Cone coordinates of a 3d cell grid point.

    Returns ``(sigma, region, s_units, t_units)`` with ``sigma`` in [0, 1]
    (0 at the apex ``(1/4, 0, 0)``) and chart coordinates of the radial
    projection of ``g`` onto the boundary, in node units.
    """
    n = geo.grid_n
    big = geo.n_side
    a1 = 4 * g[0] - big
    a2 = 2 * g[1]
    a3 = 2 * g[2]
    sig = max(abs(a1), abs(a2), abs(a3))
    if sig == 0:
        return 0.0, 0, 0.0, 0.0
    scale = big / sig
    b1 = n / 2.0 + (g[0] - n / 2.0) * scale
    b2 = g[1] * scale
    b3 = g[2] * scale
    if abs(a1) == sig and a1 < 0:
        region, s_f, t_f = 0, b2, b3
    elif abs(a2) == sig:
        if g[1] < 0:
            region, s_f, t_f = 0, -b1 - n, b3
        else:
            region, s_f, t_f = 0, b1 + n, b3
    elif abs(a3) == sig:
        if g[2] > 0:
            region, s_f, t_f = 1, b2, b1 + n
        else:
            region, s_f, t_f = 1, b2, 5 * n - b1
    else:
        region, s_f, t_f = 1, b2, 3 * n - b3
    return sig / big, region, s_f, t_f


# ---------------------------------------------------------------------------
# boundary assembly


class _BoundaryWriter:
    """Accumulates face values, checking duplicate writes for agreement."""

    def __init__(self, tol):
        self.values = {}
        self.tol = tol
        self.worst = 0.0
        self.worst_point = None

    def write(self, g, value):
        if g in self.values:
            diff = float(np.linalg.norm(self.values[g] - value))
            if diff > self.worst:
                self.worst = diff
                self.worst_point = g
            if diff > self.tol:
                raise BoundaryRelationViolated(
                    f"face values disagree at grid point {g} "
                    f"(residual {diff:.3e} > {self.tol:.1e})",
                    point=g,
                    residual=diff,
                )
        else:
            self.values[g] = value


def _assemble_boundary(geo, family, face10, field2p, field3p, door, tol):
    """Glue the six face constructions into one boundary value map."""
    n = geo.grid_n
    t2_inv = family.tau_power((0, -1, 0))
    t3_inv = family.tau_power((0, 0, -1))
    a_door = family.antiunitary_matrix((1, 0, 0))
    w = _BoundaryWriter(tol)
    for b in range(-n, n + 1):
        for c in range(-n, n + 1):
            w.write((0, b, c), face10(b, c))
    for a in range(0, n + 1):
        for c in range(-n, n + 1):
            val = field2p.get((a, c))
            w.write((a, n, c), val)
            w.write((a, -n, c), t2_inv @ val)
    for a in range(0, n + 1):
        for b in range(-n, n + 1):
            val = field3p.get((a, b))
            w.write((a, b, n), val)
            w.write((a, b, -n), t3_inv @ val)
    for at in range(0, n + 1):
        for c in range(-n, n + 1):
            w.write((n, n - at, c), door.get((at, c)))
    for b in range(-n, 0):
        for c in range(-n, n + 1):
            w.write((n, b, c), a_door @ np.conj(w.values[(n, -b, -c)]))
    missing = geo.boundary_points_3d() - set(w.values)
    if missing:
        raise RuntimeError(f"boundary assembly left {len(missing)} points unset")
    return w.values, {"glue_residual": w.worst, "glue_point": w.worst_point}


def construct_3d(psi_field, family, tol=1e-8, seed=0, extend=True):
    """Symmetric frame on the 3-torus from input frames on the half cell.

    Returns ``(field, diag)``; with ``extend`` (default) the field covers
    the full torus, otherwise the effective cell.
    """
    from .wannier import extend_symmetric

    geo = psi_field.geometry
    if geo.d != 3:
        raise ValueError("construct_3d needs a three-dimensional field")
    n = geo.grid_n
    diag = {}

    # face k1 = 0: full two-dimensional construction of the frozen family
    fam2 = restricted_family(family)
    geo2 = CellGeometry(2, n)
    psi2 = FrameField.empty(geo2, family.n, family.m)
    for b in range(0, n + 1):
        for c in range(-n, n + 1):
            psi2.set((b, c), psi_field.get((0, b, c)))
    ctx10 = FaceContext(
        geo2,
        psi2.get,
        fam2.tau_power((1, 0)),
        fam2.tau_power((0, 1)),
        fam2.theta_matrix(),
        label="face k1=0",
    )
    face10_half, diag10 = build_face(ctx10, tol=tol, seed=seed)
    face10_torus = extend_symmetric(face10_half, fam2)

    def face10(b, c):
        return evaluate(face10_torus, fam2, (b, c))

    diag["face_k1_0"] = diag10

    # edge k2 = k3 = 1/2 and its translated copies
    edge_points = [(i, n, n) for i in range(0, n + 1)]
    edge_frames, vstar = macro1(
        psi_field.get,
        edge_points,
        face10(n, n),
        family.antiunitary_matrix((1, 1, 1)),
        (1, 1, 1),
    )
    diag["corner_residual"] = vstar.residual

    t2_inv = family.tau_power((0, -1, 0))
    t3_inv = family.tau_power((0, 0, -1))

    # faces k2 = 1/2 and k3 = 1/2
    ctx2p = FaceContext(
        geo2,
        lambda g: psi_field.get((g[0], n, g[1])),
        family.tau_power((1, 0, 0)),
        family.tau_power((0, 0, 1)),
        family.tau_power((0, 1, 0)) @ family.theta_matrix(),
        label="face k2=+1/2",
    )
    left2p = np.stack([face10(n, c) for c in range(-n, n + 1)])
    bottom2p = np.stack([t3_inv @ f for f in edge_frames])
    field2p, diag2p = macro2(ctx2p, left2p, bottom2p, tol=tol, seed=seed)
    diag["face_k2_plus"] = diag2p

    ctx3p = FaceContext(
        geo2,
        lambda g: psi_field.get((g[0], g[1], n)),
        family.tau_power((1, 0, 0)),
        family.tau_power((0, 1, 0)),
        family.tau_power((0, 0, 1)) @ family.theta_matrix(),
        label="face k3=+1/2",
    )
    left3p = np.stack([face10(b, n) for b in range(-n, n + 1)])
    bottom3p = np.stack([t2_inv @ f for f in edge_frames])
    field3p, diag3p = macro2(ctx3p, left3p, bottom3p, tol=tol, seed=seed)
    diag["face_k3_plus"] = diag3p

    # half of the face k1 = 1/2, in mirrored coordinates
    ctx_door = FaceContext(
        geo2,
        lambda g: psi_field.get((n, n - g[0], g[1])),
        family.tau_power((0, -1, 0)),
        family.tau_power((0, 0, 1)),
        family.tau_power((1, 1, 0)) @ family.theta_matrix(),
        label="face k1=1/2 (mirrored)",
    )
    left_door = np.stack([field2p.get((n, c)) for c in range(-n, n + 1)])
    bottom_door = np.stack(
        [t3_inv @ field3p.get((n, n - at)) for at in range(0, n + 1)]
    )
    door, diag_door = macro2(ctx_door, left_door, bottom_door, tol=tol, seed=seed)
    diag["face_k1_plus"] = diag_door

    boundary, glue_diag = _assemble_boundary(
        geo, family, face10, field2p, field3p, door, max(100 * tol, 1e-6)
    )
    diag["assembly"] = glue_diag

    # cone extension into the interior
    dom = DiskDomain(geo)
    u_by_point = np.stack(
        [unitary_between(psi_field.get(g), boundary[g]) for g in dom.points]
    )
    u_nodes = u_by_point[dom.node_of_point]
    cell_pts = geo.cell_points()
    sigma = np.empty(len(cell_pts))
    coords = []
    for i, g in enumerate(cell_pts):
        sig, region, s_f, t_f = _chart_units(geo, g)
        sigma[i] = sig
        coords.append((region, s_f, t_f))
    dom.set_queries(coords)
    u_cell, ext_diag = extend_unitary_cone(u_nodes, dom, sigma, seed=seed)
    diag["extension"] = ext_diag

    field = FrameField.empty(geo, family.n, family.m)
    for i, g in enumerate(cell_pts):
        field.set(g, act(psi_field.get(g), u_cell[i], check=False))
    for g, val in boundary.items():
        field.set(g, val)

    if not extend:
        return field, diag
    torus = extend_symmetric(field, family)
    return torus, diag
