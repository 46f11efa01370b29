"""Cone extension of unitary-valued boundary maps into a cell.

A map on the boundary of a star-shaped cell is extended inward by pulling
each boundary value toward a base point along a stereographic chart of the
sphere it lives on.  Writing ``sigma`` for the radial coordinate (1 on the
boundary, 0 at the apex) and ``psi_p`` for stereographic projection from a
base point ``p``, the scalar and column extensions are

    phase:   F(k) = exp(i sigma(k) theta(t(k)))      (theta a continuous lift),
    sphere:  F(k) = psi_p^{-1}( sigma(k) psi_p(phi(t(k))) ).

A full U(m) map is extended by recursion on m: the determinant phase is
split off and cone-extended as a scalar, the first column of the remaining
SU(m) part is cone-extended on the unit sphere of C^m, a pointwise rotation
completes the column to a unitary, and the stripped (m-1) x (m-1) remainder
recurses.  For m = 2 the first column determines the whole matrix, so the
recursion bottoms out there.

The domain geometry (how boundary nodes are indexed, how a continuous
argument lift is produced, how nodal data is interpolated at the query
points) is supplied by a small domain adapter, so the same recursion serves
square cells in 2d and cube boundaries in 3d.
"""

import numpy as np

from .errors import GridTooCoarse, NonzeroDegree, NoStereographicPoint

__all__ = [
    "phase_lift_cyclic",
    "LoopDomain",
    "select_stereographic_point",
    "chart_forward",
    "chart_backward",
    "rotation_to",
    "su2_from_column",
    "extend_unitary_cone",
]

TWO_PI = 2.0 * np.pi


# ---------------------------------------------------------------------------
# phase lifts and interpolation along a closed loop


def phase_lift_cyclic(values, max_step=0.5 * np.pi, close_tol=1e-8):
    """Continuous argument lift along a closed loop of nonzero complex values.

    Returns ``(lift, winding, defect)`` where ``lift`` has length ``L + 1``
    (the final entry closes the loop), ``winding`` is the integer number of
    turns and ``defect = lift[-1] - lift[0] - 2 pi winding`` is the numerical
    closure error.  Any single step of the argument at or above ``max_step``
    raises :class:`GridTooCoarse`: the sampling cannot certify the winding.
    """
    values = np.asarray(values, dtype=complex).ravel()
    if np.any(np.abs(values) < 1e-13):
        raise ValueError("phase lift of a vanishing value")
    ratios = np.empty(len(values), dtype=complex)
    ratios[:-1] = values[1:] / values[:-1]
    ratios[-1] = values[0] / values[-1]
    steps = np.angle(ratios)
    worst = float(np.max(np.abs(steps)))
    if max_step is not None and worst >= max_step:
        raise GridTooCoarse(
            f"phase step {worst:.3f} rad exceeds {max_step:.3f}; "
            "refine the grid to certify the winding",
            step=worst,
        )
    lift = np.empty(len(values) + 1)
    lift[0] = np.angle(values[0])
    np.cumsum(steps, out=lift[1:])
    lift[1:] += lift[0]
    total = lift[-1] - lift[0]
    winding = int(np.round(total / TWO_PI))
    defect = float(total - TWO_PI * winding)
    if abs(defect) > close_tol:
        raise ValueError(f"phase lift fails to close (defect {defect:.3e})")
    return lift, winding, defect


class LoopDomain:
    """Boundary adapter for a cell whose boundary is one closed loop.

    Parameters
    ----------
    n_nodes : int
        Number of nodes along the loop (node ``n_nodes`` is node ``0``).
    t_units : (Q,) array
        Loop coordinate of each query point, in node units in ``[0, n_nodes]``.
    """

    def __init__(self, n_nodes, t_units):
        self.n_nodes = int(n_nodes)
        t = np.mod(np.asarray(t_units, dtype=float), self.n_nodes)
        self._i0 = np.floor(t).astype(int) % self.n_nodes
        self._i1 = (self._i0 + 1) % self.n_nodes
        self._frac = t - np.floor(t)

    def lift(self, values):
        """Closed argument lift of nodal values; degree must vanish.

        Returns one lift value per node; across the seam (interpolating
        between the last node and node 0) the lift values differ from true
        continuation only by the closure defect, reported in the info dict.
        """
        lift, winding, defect = phase_lift_cyclic(values)
        if winding != 0:
            raise NonzeroDegree(
                f"boundary determinant winds {winding} times; correct the "
                "degree before extending",
                degree=winding,
            )
        return lift[:-1], {"closure_defect": defect}

    def interp(self, nodal):
        """Linear interpolation of nodal data at the query points.

        ``nodal`` may have length ``n_nodes`` (cyclic data) or ``n_nodes + 1``
        (a lift with its closing entry); both are interpolated consistently.
        """
        nodal = np.asarray(nodal)
        frac = self._frac.reshape((-1,) + (1,) * (nodal.ndim - 1))
        return (1.0 - frac) * nodal[self._i0] + frac * nodal[self._i1]


# ---------------------------------------------------------------------------
# stereographic machinery on the unit sphere of C^D


def _real_ip(a, b):
    """Real inner product on C^D viewed as R^{2D}; broadcasts over rows."""
    return np.real(np.sum(np.conj(a) * b, axis=-1))


def chart_forward(p, v):
    """Stereographic chart about ``p``: sphere minus ``p`` to the plane ``p^perp``."""
    den = _real_ip(v, p) - 1.0
    return p - (v - p) / den[..., None]


def chart_backward(p, w):
    """Inverse stereographic chart; output is normalized onto the sphere."""
    diff = w - p
    d2 = np.sum(np.abs(diff) ** 2, axis=-1)
    v = p + 2.0 * diff / d2[..., None]
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def _line_clearance(p, w, cut=1e-9):
    """Sine of the angle between chart vectors ``w`` and the line R(i p).

    The inverse chart sends that line to the circle of complex multiples of
    ``-p``, where completing a column by rotation is ill posed, so the cone
    (which scales ``w`` and preserves its direction) must keep clear of it.
    Vectors shorter than ``cut`` are harmless and report full clearance.
    """
    ip = 1j * p
    norms = np.linalg.norm(w, axis=-1)
    t = _real_ip(np.broadcast_to(ip, w.shape), w)
    perp2 = np.maximum(norms**2 - t**2, 0.0)
    out = np.ones_like(norms)
    big = norms > cut
    out[big] = np.sqrt(perp2[big]) / norms[big]
    return out


def select_stereographic_point(
    samples,
    chordal_margin=0.1,
    line_margin=0.05,
    need_line_margin=False,
    seed=0,
    n_candidates=64,
):
    """Choose a chart base point well separated from all boundary samples.

    The first candidate is the antipode of the normalized sample mean, which
    in particular reproduces a constant map exactly (its chart image is the
    origin, fixed by the cone).  If it violates a margin, randomized unit
    vectors are tried and the one maximizing the worst margin is kept.

    Margins: every sample must lie at chordal distance at least
    ``chordal_margin`` from ``p``; when ``need_line_margin`` is set (column
    completion by rotation follows), every chart image must additionally make
    an angle of at least ``asin(line_margin)`` with the line R(i p).

    Raises :class:`NoStereographicPoint` when no candidate satisfies both.
    """
    samples = np.asarray(samples, dtype=complex)
    dim = samples.shape[-1]

    def score(p):
        chordal = np.linalg.norm(samples - p, axis=-1)
        s = float(np.min(chordal)) / chordal_margin
        if need_line_margin:
            w = chart_forward(p, samples)
            s = min(s, float(np.min(_line_clearance(p, w))) / line_margin)
        return s

    mean = np.mean(samples, axis=0)
    norm = np.linalg.norm(mean)
    candidates = []
    if norm > 1e-8:
        candidates.append(-mean / norm)
    rng = np.random.default_rng(seed)
    for _ in range(n_candidates):
        raw = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        candidates.append(raw / np.linalg.norm(raw))

    best, best_score = None, -np.inf
    for idx, p in enumerate(candidates):
        s = score(p)
        if idx == 0 and norm > 1e-8 and s >= 1.0:
            return p, {"source": "mean", "margin_score": s}
        if s > best_score:
            best, best_score = p, s
    if best_score >= 1.0:
        return best, {"source": "random", "margin_score": best_score}
    raise NoStereographicPoint(
        "no admissible stereographic base point found "
        f"(best margin score {best_score:.3f} of 1.0)",
        margin_score=best_score,
    )


def rotation_to(u, targets):
    """Unitaries rotating the fixed unit vector ``u`` onto each target column.

    Each rotation is the identity on the orthogonal complement of the complex
    plane spanned by ``u`` and the target, has determinant one, and maps ``u``
    to the target exactly.  ``targets`` may be a single vector or a batch
    ``(Q, m)``; the result has matching leading shape.
    """
    u = np.asarray(u, dtype=complex)
    targets = np.asarray(targets, dtype=complex)
    single = targets.ndim == 1
    c = np.atleast_2d(targets)
    m = u.shape[0]
    alpha = c @ np.conj(u)
    r = c - alpha[:, None] * u[None, :]
    beta = np.linalg.norm(r, axis=-1)
    v = np.zeros_like(c)
    ok = beta > 1e-15
    v[ok] = r[ok] / beta[ok, None]
    eye = np.eye(m, dtype=complex)
    uu = np.outer(u, np.conj(u))
    vv = np.einsum("qi,qj->qij", v, np.conj(v))
    vu = np.einsum("qi,j->qij", v, np.conj(u))
    uv = np.einsum("i,qj->qij", u, np.conj(v))
    a = (
        eye[None, :, :]
        + (alpha - 1.0)[:, None, None] * uu[None, :, :]
        + (np.conj(alpha) - 1.0)[:, None, None] * vv
        + beta[:, None, None] * (vu - uv)
    )
    return a[0] if single else a


def su2_from_column(c):
    """The unique SU(2) matrix with prescribed first column(s)."""
    c = np.asarray(c, dtype=complex)
    a, b = c[..., 0], c[..., 1]
    out = np.empty(c.shape[:-1] + (2, 2), dtype=complex)
    out[..., 0, 0] = a
    out[..., 1, 0] = b
    out[..., 0, 1] = -np.conj(b)
    out[..., 1, 1] = np.conj(a)
    return out


def _su2_column_nodes(mats):
    """First-column sphere points of nearly-SU(2) matrices, symmetrized."""
    a = 0.5 * (mats[..., 0, 0] + np.conj(mats[..., 1, 1]))
    b = 0.5 * (mats[..., 1, 0] - np.conj(mats[..., 0, 1]))
    c = np.stack([a, b], axis=-1)
    return c / np.linalg.norm(c, axis=-1, keepdims=True)


def _interp_columns(dom, c_nodes):
    """Domain interpolation of nodal sphere points, renormalized."""
    c = dom.interp(c_nodes)
    norms = np.linalg.norm(c, axis=-1)
    if np.any(norms < 0.5):
        raise GridTooCoarse(
            "adjacent boundary columns nearly antipodal; refine the grid"
        )
    return c / norms[..., None]


def _cone_columns(p, c_nodes, dom, sigma):
    """Cone the nodal sphere points toward the chart base point ``p``."""
    c_q = _interp_columns(dom, c_nodes)
    w = chart_forward(p, c_q)
    return chart_backward(p, sigma[..., None] * w)


def _extend_su(nodes, dom, sigma, seed, diag):
    """Extend SU(m)-valued boundary nodes; recursion on m."""
    m = nodes.shape[-1]
    if m == 1:
        return np.ones(sigma.shape + (1, 1), dtype=complex)
    if m == 2:
        c_nodes = _su2_column_nodes(nodes)
        p, info = select_stereographic_point(c_nodes, seed=seed)
        diag.append({"m": 2, **info})
        return su2_from_column(_cone_columns(p, c_nodes, dom, sigma))
    c_nodes = nodes[..., :, 0]
    p, info = select_stereographic_point(c_nodes, need_line_margin=True, seed=seed)
    diag.append({"m": m, **info})
    u = -p
    c_cone = _cone_columns(p, c_nodes, dom, sigma)
    base = rotation_to(np.eye(m, dtype=complex)[0], u)
    q_nodes = rotation_to(u, c_nodes) @ base
    q_query = rotation_to(u, c_cone) @ base
    g_nodes = np.einsum("qji,qjk->qik", np.conj(q_nodes), nodes)[..., 1:, 1:]
    g_ext = _extend_su(g_nodes, dom, sigma, seed, diag)
    full = np.zeros(sigma.shape + (m, m), dtype=complex)
    full[..., 0, 0] = 1.0
    full[..., 1:, 1:] = g_ext
    return np.einsum("qij,qjk->qik", q_query, full)


def extend_unitary_cone(nodes, dom, sigma, seed=0):
    """Extend a degree-zero unitary boundary map into the cell.

    Parameters
    ----------
    nodes : (L, m, m) array
        Unitary values at the boundary nodes, ordered as the domain expects.
    dom : domain adapter
        Provides ``lift`` (continuous argument lift of nodal scalars) and
        ``interp`` (nodal data at the query points); see :class:`LoopDomain`.
    sigma : (Q,) array
        Cone coordinate of each query point, 1 on the boundary, 0 at the apex.
    seed : int
        Seed for the randomized chart-point fallback; fixed for determinism.

    Returns ``(values, diag)``: unitary values at the query points and a
    diagnostics dict (chart choices per recursion level, determinant lift
    closure).  The boundary determinant must have winding zero; otherwise
    :class:`NonzeroDegree` is raised.
    """
    nodes = np.asarray(nodes, dtype=complex)
    sigma = np.asarray(sigma, dtype=float)
    m = nodes.shape[-1]
    dets = np.linalg.det(nodes)
    lift, lift_info = dom.lift(dets)
    diag_levels = []
    theta_q = dom.interp(lift)
    scalar = np.exp(1j * sigma * theta_q / m)
    if m == 1:
        values = scalar[..., None, None]
    else:
        f_nodes = nodes * np.exp(-1j * lift / m)[..., None, None]
        f_ext = _extend_su(f_nodes, dom, sigma, seed, diag_levels)
        values = scalar[..., None, None] * f_ext
    diag = {"det_lift": lift_info, "levels": diag_levels}
    return values, diag
