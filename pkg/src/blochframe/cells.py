"""Grid geometry of the periodicity cell and its symmetry-reduced half.

All quasimomenta are handled in adapted coordinates where the periodicity
lattice is the integer lattice.  Grid points are stored as integer tuples in
units of the grid step ``h = 1 / (2 * grid_n)``; a point ``g`` represents the
quasimomentum ``k = g * h``.  Working in integers keeps every reduction and
identification exact.

The effective cell keeps the half with nonnegative first coordinate,

    0 <= k_1 <= 1/2,   -1/2 <= k_j <= 1/2  (j >= 2),

and every grid point of the torus reduces to it through

    g = (-1)**s * g' + 2 * grid_n * lam,

with ``s`` in {0, 1} and ``lam`` an integer lattice vector.
"""

from dataclasses import dataclass
from itertools import product

import numpy as np

__all__ = ["CellGeometry", "ReducedPoint"]


@dataclass(frozen=True)
class ReducedPoint:
    """Decomposition of a grid point into its effective-cell representative.

    Attributes
    ----------
    k_prime : tuple of int
        Representative inside the effective cell (grid units).
    lam : tuple of int
        Lattice translation providing the wrap (lattice units).
    s : int
        0 when only a translation is involved, 1 when the point is reached
        from the representative through inversion followed by translation.
    """

    k_prime: tuple
    lam: tuple
    s: int


@dataclass(frozen=True)
class CellGeometry:
    """Uniform symmetric grid on the periodicity cell, d in {1, 2, 3}.

    ``grid_n`` is half the number of subdivisions per unit length; it must be
    even so that the extension cone apex (1/4, 0, ...) lands on a grid point.
    """

    d: int
    grid_n: int

    def __post_init__(self):
        if self.d not in (1, 2, 3):
            raise ValueError(f"dimension must be 1, 2 or 3, got {self.d}")
        if self.grid_n < 2 or self.grid_n % 2 != 0:
            raise ValueError(f"grid_n must be an even integer >= 2, got {self.grid_n}")

    # ------------------------------------------------------------------
    # basic measures
    # ------------------------------------------------------------------
    @property
    def n_side(self):
        """Number of grid steps per unit length of the torus."""
        return 2 * self.grid_n

    @property
    def h(self):
        """Grid step."""
        return 1.0 / self.n_side

    def k_of(self, g):
        """Quasimomentum (float array) of a grid point."""
        return np.asarray(g, dtype=float) * self.h

    # ------------------------------------------------------------------
    # effective cell membership and indexing
    # ------------------------------------------------------------------
    def in_effective_cell(self, g):
        g = tuple(int(x) for x in g)
        if len(g) != self.d:
            return False
        n = self.grid_n
        if not 0 <= g[0] <= n:
            return False
        return all(-n <= gj <= n for gj in g[1:])

    @property
    def cell_shape(self):
        """Array shape covering the effective cell (closed, both boundaries)."""
        return (self.grid_n + 1,) + (self.n_side + 1,) * (self.d - 1)

    def cell_index(self, g):
        """Array index of an effective-cell grid point."""
        g = tuple(int(x) for x in g)
        return (g[0],) + tuple(gj + self.grid_n for gj in g[1:])

    def cell_point(self, idx):
        """Inverse of :meth:`cell_index`."""
        return (int(idx[0]),) + tuple(int(i) - self.grid_n for i in idx[1:])

    def cell_points(self):
        """All effective-cell grid points in array order."""
        return [self.cell_point(idx) for idx in np.ndindex(self.cell_shape)]

    # ------------------------------------------------------------------
    # torus indexing: stored fundamental domain is {0, ..., 2 grid_n - 1}^d
    # ------------------------------------------------------------------
    @property
    def torus_shape(self):
        return (self.n_side,) * self.d

    def torus_wrap(self, g):
        """Torus representative and the lattice shift absorbed by wrapping."""
        n = self.n_side
        g = tuple(int(x) for x in g)
        rep = tuple(gj % n for gj in g)
        lam = tuple((gj - rj) // n for gj, rj in zip(g, rep))
        return rep, lam

    # ------------------------------------------------------------------
    # reduction to the effective cell
    # ------------------------------------------------------------------
    def _reduction_candidates(self, g):
        n = self.n_side
        g = tuple(int(x) for x in g)
        found = []
        for s in (0, 1):
            ranges = []
            for gj in g:
                base = round(gj / n)
                ranges.append(range(base - 1, base + 2))
            for lam in product(*ranges):
                gp = tuple((gj - n * lj) * (-1) ** s for gj, lj in zip(g, lam))
                if self.in_effective_cell(gp):
                    found.append(ReducedPoint(gp, lam, s))
        return found

    def reduce(self, g):
        """Canonical reduction of an arbitrary grid point to the effective cell.

        Ties on the boundary are broken deterministically: prefer ``s = 0``,
        then the lexicographically smallest ``lam``.
        """
        cands = self._reduction_candidates(g)
        if not cands:
            raise ValueError(f"no effective-cell reduction found for {g}")
        cands.sort(key=lambda rp: (rp.s, rp.lam))
        return cands[0]

    def all_reductions(self, g):
        """Every valid decomposition of ``g`` (used for consistency checks)."""
        cands = self._reduction_candidates(g)
        cands.sort(key=lambda rp: (rp.s, rp.lam))
        return cands

    # ------------------------------------------------------------------
    # high-symmetry points
    # ------------------------------------------------------------------
    def trims(self):
        """Time-reversal invariant momenta inside the effective cell.

        These are the half-integer points; there are ``2 * 3**(d-1)`` of them.
        """
        n = self.grid_n
        axes = [(0, n)] + [(-n, 0, n)] * (self.d - 1)
        return sorted(product(*axes))

    def is_trim(self, g):
        n = self.grid_n
        return all(gj % n == 0 for gj in g) and self.in_effective_cell(g)

    def trim_lambda(self, g):
        """Lattice vector ``lam = 2 k`` attached to a high-symmetry point."""
        if not self.is_trim(g):
            raise ValueError(f"{g} is not a high-symmetry grid point")
        return tuple(2 * gj // self.n_side for gj in g)

    # ------------------------------------------------------------------
    # d = 2 boundary structure
    # ------------------------------------------------------------------
    def vertices_2d(self):
        """The six half-integer points on the boundary of the effective cell,
        in traversal order v1, ..., v6."""
        if self.d != 2:
            raise ValueError("vertices_2d requires d = 2")
        n = self.grid_n
        return [(0, 0), (0, -n), (n, -n), (n, 0), (n, n), (0, n)]

    def edges_2d(self):
        """Ordered grid points of the six boundary edges, keyed 'E1'...'E6'.

        Edge ``Ei`` runs from vertex ``v_i`` to ``v_{i+1}`` (cyclically); each
        list contains both endpoints.
        """
        if self.d != 2:
            raise ValueError("edges_2d requires d = 2")
        n = self.grid_n
        edges = {
            "E1": [(0, -j) for j in range(0, n + 1)],
            "E2": [(i, -n) for i in range(0, n + 1)],
            "E3": [(n, -n + j) for j in range(0, n + 1)],
            "E4": [(n, j) for j in range(0, n + 1)],
            "E5": [(n - i, n) for i in range(0, n + 1)],
            "E6": [(0, n - j) for j in range(0, n + 1)],
        }
        return edges

    def boundary_loop_2d(self):
        """Boundary grid points, ordered v1 -> v2 -> ... -> v6 -> v1.

        The closing point is not repeated; the list has ``6 * grid_n``
        entries.
        """
        edges = self.edges_2d()
        loop = []
        for name in ("E1", "E2", "E3", "E4", "E5", "E6"):
            loop.extend(edges[name][:-1])
        return loop

    def boundary_points_2d(self):
        """Set of all boundary grid points of the effective cell (d = 2)."""
        return set(self.boundary_loop_2d())

    # ------------------------------------------------------------------
    # d = 3 face structure
    # ------------------------------------------------------------------
    def faces_3d(self):
        """Grid points of the six faces of the effective cell, d = 3.

        Keys are ``(axis, side)`` with ``axis`` in {1, 2, 3} and ``side`` in
        {'0', '+', '-'}: ``(1, '0')`` is the face ``k_1 = 0``, ``(1, '+')``
        the face ``k_1 = 1/2``, and ``(j, '+'/'-')`` the faces
        ``k_j = +-1/2`` for j in {2, 3}.
        """
        if self.d != 3:
            raise ValueError("faces_3d requires d = 3")
        n = self.grid_n
        rng1 = range(0, n + 1)
        rng = range(-n, n + 1)
        faces = {
            (1, "0"): [(0, b, c) for b in rng for c in rng],
            (1, "+"): [(n, b, c) for b in rng for c in rng],
            (2, "+"): [(a, n, c) for a in rng1 for c in rng],
            (2, "-"): [(a, -n, c) for a in rng1 for c in rng],
            (3, "+"): [(a, b, n) for a in rng1 for b in rng],
            (3, "-"): [(a, b, -n) for a in rng1 for b in rng],
        }
        return faces

    def boundary_points_3d(self):
        """Set of all grid points on the boundary of the effective cell."""
        pts = set()
        for face in self.faces_3d().values():
            pts.update(face)
        return pts

    def door_points_3d(self, sign):
        """Half of the face k_1 = 1/2 with ``sign * k_2 >= 0`` (d = 3)."""
        if self.d != 3:
            raise ValueError("door_points_3d requires d = 3")
        n = self.grid_n
        rng = range(-n, n + 1)
        if sign > 0:
            return [(n, b, c) for b in range(0, n + 1) for c in rng]
        return [(n, b, c) for b in range(-n, 1) for c in rng]
