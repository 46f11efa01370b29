"""Symmetry-preserving smoothing of torus frame fields.

The constructed frame is continuous but only piecewise smooth (the cone
extensions have sector kinks), which would spoil the localization of its
Wannier images.  This module provides the three tools that repair that
without losing the symmetries:

* geodesic midpoints on the unitary group (principal logarithms,
  ``exp(A/2)``), used to average a frame with a symmetry image of itself;
* a band-limiting smoother: the frame entries are made genuinely periodic
  by untwisting the translation cocycle, damped with a flat-top Fourier
  multiplier (weight one up to half the cutoff, linear taper to zero at the
  cutoff), twisted back, re-projected onto the fibers and
  re-orthonormalized; the cutoff is raised until the result is within the
  requested distance of the input;
* an exact re-symmetrization that restores the reflection property at
  every grid point by midpointing each frame with the time-reversed image
  of its partner.

Averaging with a translation-invariant kernel commutes with the lattice
action, and real even multipliers commute with the reflection symmetry, so
both structures survive to roundoff; only closeness to the input has to be
measured.  The flat-top kernel is not positive, but its summed magnitude
stays bounded by a small constant, and the reprojection step removes
whatever orthonormality drift the averaging introduces.
"""

import numpy as np

from .errors import (
    EigenphaseNearPi,
    EpsilonInfeasible,
    ProjectionRankLoss,
    TooFarApart,
    UsageError,
)
from .frames import FrameField, act, frame_distance, unitary_between
from .linalg import cluster_phases, polish_unitary, unitary_eigensystem

__all__ = [
    "DELTA_DEFAULT",
    "unitary_log",
    "midpoint_unitary",
    "geodesic_distance",
    "frame_midpoint",
    "reflection_defect",
    "symmetrize",
    "twist_gauge",
    "periodic_smooth",
    "smooth_symmetric",
]

# Radius of the ball on which the principal logarithm is used.  Everything
# this module midpoints is far closer to the identity than this.
DELTA_DEFAULT = 0.5 * np.pi


def _log_eigensystem(u, margin=1e-8):
    """Clustered eigenphases in (-pi, pi) and the unitary eigenbasis."""
    w, q, labels = unitary_eigensystem(u)
    phases = cluster_phases(w, labels, lambda a: a)
    worst = float(np.pi - np.max(np.abs(phases))) if len(phases) else np.pi
    if worst <= margin:
        raise EigenphaseNearPi(
            f"eigenphase within {worst:.2e} of the branch cut at pi",
            margin=worst,
        )
    return phases, q


def unitary_log(u, margin=1e-8):
    """Principal logarithm of a unitary matrix.

    Returns the skew-Hermitian ``A`` with ``exp(A) = u`` and all eigenvalues
    of ``A/i`` in ``(-pi, pi)``.  An eigenphase within ``margin`` of the
    branch cut raises :class:`EigenphaseNearPi`; the Hilbert-Schmidt norm of
    the result is the geodesic distance from the identity to ``u``.
    """
    phases, q = _log_eigensystem(u, margin=margin)
    a = (q * (1j * phases)) @ q.conj().T
    return 0.5 * (a - a.conj().T)


def midpoint_unitary(u, margin=1e-8):
    """Geodesic midpoint between the identity and ``u``: ``exp(log(u)/2)``."""
    phases, q = _log_eigensystem(u, margin=margin)
    return polish_unitary((q * np.exp(0.5j * phases)) @ q.conj().T)


def geodesic_distance(u):
    """Geodesic distance from the identity, ``(sum of eigenphases^2)^(1/2)``."""
    phases, _ = _log_eigensystem(u, margin=0.0)
    return float(np.sqrt(np.sum(phases**2)))


def frame_midpoint(a, b, delta=DELTA_DEFAULT):
    """Midpoint of two frames spanning the same subspace.

    The frames must be closer than ``delta / 2`` in frame distance
    (:class:`TooFarApart` otherwise); the result is ``a`` acted on by the
    geodesic midpoint of the unitary carrying ``a`` to ``b``.  Commutative in
    its arguments and equivariant under unitary and antiunitary maps of the
    ambient space, up to roundoff.
    """
    u = unitary_between(a, b)
    sep = float(np.linalg.norm(u - np.eye(u.shape[0])))
    if sep >= 0.5 * delta:
        raise TooFarApart(
            f"frames at distance {sep:.3f}, limit {0.5 * delta:.3f}",
            distance=sep,
            limit=0.5 * delta,
        )
    return act(a, midpoint_unitary(u), check=False)


# ---------------------------------------------------------------------------
# reflection pairs on the torus grid


def _reflection_pairs(geometry):
    """Owner-ordered pairs ``(g, partner, lam)`` with ``-g = partner + N lam``."""
    big = geometry.n_side
    pairs = []
    for g in np.ndindex(*geometry.torus_shape):
        partner = tuple((-c) % big for c in g)
        if g > partner:
            continue
        lam = tuple((-a - b) // big for a, b in zip(g, partner))
        pairs.append((g, partner, lam))
    return pairs


def _reflected(family, lam, frame):
    """Value of ``tau^(-lam) theta`` applied to a stored frame."""
    minus = tuple(-x for x in lam)
    return family.antiunitary_matrix(minus) @ np.conj(frame)


def reflection_defect(field, family):
    """Largest violation of ``Phi(-k) = theta Phi(k)`` over the torus grid."""
    worst = 0.0
    for g, partner, lam in _reflection_pairs(field.geometry):
        worst = max(
            worst,
            frame_distance(field.get(partner), _reflected(family, lam, field.get(g))),
        )
    return worst


def symmetrize(field, family, delta=DELTA_DEFAULT):
    """Restore the reflection property exactly by pairwise midpointing.

    For each grid pair ``(k, -k)`` the owner frame is replaced by its
    midpoint with the time-reversed partner frame and the partner is set to
    the exact time-reversed image of the result; self-paired points (where
    ``-k = k`` on the torus) are midpointed with their own image, which is a
    fixed point of the involution.  Frames farther apart than ``delta / 2``
    are collected and reported in a single :class:`TooFarApart`.

    Returns ``(field, report)`` with the worst defect before and after and
    the largest pointwise shift.
    """
    if field.region != "full-torus":
        raise UsageError("symmetrize needs a full-torus field")
    out = field.copy()
    before = 0.0
    shift = 0.0
    failures = []
    for g, partner, lam in _reflection_pairs(field.geometry):
        a = out.get(g)
        image = _reflected(family, lam, out.get(partner))
        defect = frame_distance(a, image)
        before = max(before, defect)
        try:
            mid = frame_midpoint(a, image, delta=delta)
        except TooFarApart:
            failures.append({"point": g, "distance": defect})
            continue
        out.set(g, mid)
        shift = max(shift, defect / 2.0)
        if partner != g:
            out.set(partner, _reflected(family, tuple(-x for x in lam), mid))
    if failures:
        raise TooFarApart(
            f"{len(failures)} grid pair(s) too far apart to midpoint",
            points=failures,
        )
    after = reflection_defect(out, family)
    out.meta = dict(out.meta)
    out.meta["reflection_defect"] = after
    report = {
        "reflection_before": float(before),
        "reflection_after": float(after),
        "max_shift": float(shift),
    }
    return out, report


# ---------------------------------------------------------------------------
# Fejer smoothing


def _joint_log_eigenbasis(generators, attempts=8, tol=1e-10):
    """Joint eigenbasis of commuting unitaries and their phase exponents.

    Returns ``(v, ell)`` with ``generators[j] = v diag(exp(2 pi i ell[j])) v*``
    and ``ell[j]`` real in ``[0, 1)``.  Obtained from one Hermitian random
    linear combination, which splits all joint eigenspaces generically;
    failure to diagonalize every generator is retried with fresh weights.
    """
    dim = generators[0].shape[0]
    rng = np.random.default_rng(1234)
    for _ in range(attempts):
        h = np.zeros((dim, dim), dtype=complex)
        for gen in generators:
            c = rng.standard_normal() + 1j * rng.standard_normal()
            h += c * gen + np.conj(c) * gen.conj().T
        _, v = np.linalg.eigh(h)
        ells = []
        ok = True
        for gen in generators:
            d = v.conj().T @ gen @ v
            off = float(np.max(np.abs(d - np.diag(np.diag(d)))))
            if off > tol:
                ok = False
                break
            ells.append(np.mod(np.angle(np.diag(d)) / (2.0 * np.pi), 1.0))
        if ok:
            return v, np.asarray(ells)
    raise UsageError(
        "translation generators could not be simultaneously diagonalized"
    )


def twist_gauge(geometry, family):
    """Diagonalized translation twist of a family, or ``None`` if trivial.

    Returns ``(v, phases)`` defining the pointwise gauge ``D(k) = v
    diag(phases(k)) v*`` that carries the unit translation action;
    multiplying a field by ``D(k)^{-1}`` yields exactly periodic samples
    (the adapted gauge), multiplying back restores the stored one.
    """
    if family.tau is None:
        return None
    v, ells = _joint_log_eigenbasis([np.asarray(t) for t in family.tau])
    return v, _twist_phases(geometry, v, ells)


def _twist_phases(geometry, v, ells):
    """Per-point diagonal phases of the untwisting gauge, shape grid + (dim,).

    The gauge is ``D(k) = v diag(exp(2 pi i k . ell)) v*``; multiplying the
    field by ``D(k)^{-1}`` makes it exactly periodic on the grid.
    """
    big = geometry.n_side
    d = geometry.d
    axes = np.arange(big) / big
    expo = np.zeros(geometry.torus_shape + (v.shape[0],))
    for j in range(d):
        shape = [1] * (d + 1)
        shape[j] = big
        expo = expo + axes.reshape(shape) * ells[j].reshape((1,) * d + (-1,))
    return np.exp(2j * np.pi * expo)


def _second_difference(data, d):
    """Largest centered second difference of the entries along any axis."""
    worst = 0.0
    for axis in range(d):
        f = np.roll(data, -1, axis=axis) - 2.0 * data + np.roll(data, 1, axis=axis)
        worst = max(worst, float(np.max(np.abs(f))))
    return worst


def _spectral_shells(coeffs, d):
    """Max coefficient magnitude per sup-norm frequency shell."""
    big = coeffs.shape[0]
    freqs = np.fft.fftfreq(big, d=1.0 / big).astype(int)
    radius = np.zeros(coeffs.shape[:d], dtype=int)
    for j in range(d):
        shape = [1] * d
        shape[j] = big
        radius = np.maximum(radius, np.abs(freqs).reshape(shape))
    mags = np.max(np.abs(coeffs).reshape(coeffs.shape[:d] + (-1,)), axis=-1)
    out = np.zeros(big // 2 + 1)
    for r in range(big // 2 + 1):
        mask = radius == r
        if np.any(mask):
            out[r] = float(np.max(mags[mask]))
    return out


def _decay_slope(shells):
    """Least-squares slope of ``log`` shell magnitudes above roundoff."""
    radii = np.arange(len(shells))
    keep = shells > 1e-14
    if np.count_nonzero(keep) < 3:
        return None
    coeff = np.polyfit(radii[keep], np.log(shells[keep]), 1)
    return float(coeff[0])


def periodic_smooth(
    field,
    family,
    epsilon,
    k_start=2,
    k_max=None,
    rank_floor=0.1,
    precondition_tol=1e-6,
):
    """Band-limit a symmetric torus field to within ``0.9 * epsilon``.

    The field entries are untwisted to exactly periodic functions, their
    discrete Fourier coefficients are damped by the flat-top multiplier
    ``prod_j min(1, max(0, 2 - 2 |q_j| / K))`` (untouched harmonics up to
    ``K/2``, linear taper to zero at ``K``), and the result is twisted
    back, projected onto ``Ran P(k)`` and symmetrically re-orthonormalized.
    The cutoff ``K`` climbs a geometric ladder until the sup frame distance
    to the input drops below ``0.9 * epsilon``; the smallest workable
    cutoff is kept, since every extra harmonic slows the Wannier decay.
    Exhausting ``k_max`` raises :class:`EpsilonInfeasible`.  A projection losing rank (smallest singular
    value below ``rank_floor``) marks the cutoff as infeasible and the
    search continues upward; if no cutoff succeeds the last rank failure is
    re-raised as :class:`ProjectionRankLoss`.

    Returns ``(field, report)``; the report records the chosen cutoff, the
    measured distance, the attempted cutoffs, second-difference and spectral
    shell summaries.
    """
    if field.region != "full-torus":
        raise UsageError("periodic_smooth needs a full-torus field")
    if epsilon <= 0:
        raise UsageError("epsilon must be positive")
    geometry = field.geometry
    d = geometry.d
    big = geometry.n_side
    if k_max is None:
        k_max = 64 * big

    ortho = field.orthonormality_defect()
    refl = reflection_defect(field, family)
    if max(ortho, refl) > precondition_tol:
        raise UsageError(
            "input field violates its symmetry preconditions "
            f"(orthonormality {ortho:.2e}, reflection {refl:.2e})"
        )

    data = np.asarray(field.data)
    untwist = twist_gauge(geometry, family)
    if untwist is not None:
        v, phases = untwist
        data = np.einsum(
            "ab,...b,bc,...cm->...am", v, np.conj(phases), v.conj().T, data
        )

    axes = tuple(range(d))
    coeffs = np.fft.fftn(data, axes=axes)
    freqs = np.abs(np.fft.fftfreq(big, d=1.0 / big)).astype(int)

    projectors = np.empty(geometry.torus_shape + (family.n, family.n), dtype=complex)
    for g in np.ndindex(*geometry.torus_shape):
        projectors[g] = family.projector(np.asarray(g) / big)

    shells_before = _spectral_shells(coeffs, d)
    diff_before = _second_difference(data, d)

    tried = []
    k = int(k_start)
    last_rank_error = None
    while k <= k_max:
        mult = np.ones(geometry.torus_shape)
        for j in range(d):
            shape = [1] * d
            shape[j] = big
            mult = mult * np.clip(2.0 - 2.0 * freqs / k, 0.0, 1.0).reshape(shape)
        smoothed = np.fft.ifftn(
            coeffs * mult.reshape(geometry.torus_shape + (1, 1)), axes=axes
        )
        if untwist is not None:
            v, phases = untwist
            smoothed = np.einsum(
                "ab,...b,bc,...cm->...am", v, phases, v.conj().T, smoothed
            )
        candidate = np.einsum("...ab,...bm->...am", projectors, smoothed)
        sing = np.linalg.svd(candidate, compute_uv=False)
        worst_sing = float(np.min(sing))
        if worst_sing < rank_floor:
            bad = np.unravel_index(
                int(np.argmin(sing[..., -1])), geometry.torus_shape
            )
            last_rank_error = ProjectionRankLoss(
                f"smoothed frame falls out of the fibers at grid point {bad} "
                f"(singular value {worst_sing:.3e} < {rank_floor})",
                point=bad,
                singular_value=worst_sing,
            )
            tried.append({"cutoff": k, "rank_loss": worst_sing})
            k = max(k + 1, int(np.ceil(1.25 * k)))
            continue
        u, _, vh = np.linalg.svd(candidate, full_matrices=False)
        ortho_frames = np.einsum("...ab,...bm->...am", u, vh)
        dist = float(
            np.max(
                np.sqrt(
                    np.sum(
                        np.abs(ortho_frames - field.data) ** 2,
                        axis=(-2, -1),
                    )
                )
            )
        )
        tried.append({"cutoff": k, "sup_distance": dist})
        if dist < 0.9 * epsilon:
            out = FrameField(
                geometry,
                "full-torus",
                ortho_frames,
                dict(field.meta, smoothing_cutoff=k),
            )
            diff_after = _second_difference(
                ortho_frames
                if untwist is None
                else np.einsum(
                    "ab,...b,bc,...cm->...am",
                    untwist[0],
                    np.conj(untwist[1]),
                    untwist[0].conj().T,
                    ortho_frames,
                ),
                d,
            )
            shells_after = _spectral_shells(
                np.fft.fftn(
                    ortho_frames
                    if untwist is None
                    else np.einsum(
                        "ab,...b,bc,...cm->...am",
                        untwist[0],
                        np.conj(untwist[1]),
                        untwist[0].conj().T,
                        ortho_frames,
                    ),
                    axes=axes,
                ),
                d,
            )
            report = {
                "cutoff": k,
                "sup_distance": dist,
                "target": 0.9 * epsilon,
                "tried": tried,
                "second_difference_before": diff_before,
                "second_difference_after": diff_after,
                "spectral_slope_before": _decay_slope(shells_before),
                "spectral_slope_after": _decay_slope(shells_after),
            }
            return out, report
        k = max(k + 1, int(np.ceil(1.25 * k)))
    if last_rank_error is not None and all("rank_loss" in t for t in tried):
        raise last_rank_error
    raise EpsilonInfeasible(
        f"no cutoff up to {k_max} brings the smoothed field within "
        f"{0.9 * epsilon:.3e} of the input",
        tried=tried,
    )


def smooth_symmetric(field, family, epsilon, **kwargs):
    """Smooth and re-symmetrize; the standard last pipeline stage.

    Runs :func:`periodic_smooth` to within ``0.9 * epsilon`` and then
    :func:`symmetrize`; if the combined sup distance to the input still
    reaches ``epsilon`` the smoothing is retried once at half the target.
    Returns ``(field, report)``.
    """
    smoothed, sm_report = periodic_smooth(field, family, epsilon, **kwargs)
    final, sym_report = symmetrize(smoothed, family)
    dist = _sup_distance(final, field)
    if dist >= epsilon:
        kwargs.pop("k_start", None)
        smoothed, sm_report = periodic_smooth(
            field, family, 0.5 * epsilon, k_start=sm_report["cutoff"], **kwargs
        )
        final, sym_report = symmetrize(smoothed, family)
        dist = _sup_distance(final, field)
        if dist >= epsilon:
            raise EpsilonInfeasible(
                f"smoothing plus symmetrization moved the field by {dist:.3e}, "
                f"target {epsilon:.3e}",
                distance=dist,
            )
    report = {
        "smoothing": sm_report,
        "symmetrization": sym_report,
        "sup_distance_total": dist,
        "epsilon": epsilon,
    }
    return final, report


def _sup_distance(a, b):
    """Sup over the grid of the frame distance between two fields."""
    return float(
        np.max(
            np.sqrt(np.sum(np.abs(np.asarray(a.data) - np.asarray(b.data)) ** 2,
                           axis=(-2, -1)))
        )
    )
