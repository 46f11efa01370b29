"""Small dense linear-algebra helpers shared across the construction.

Everything here operates on modest matrices (n, m <= a few dozen), so the
implementations favour robustness and determinism over asymptotic speed.
The one nontrivial ingredient is an eigendecomposition of a unitary matrix
with an exactly-unitary eigenvector factor and eigenvalue clustering, used
wherever a fractional power of a unitary must be taken with a consistent
branch on (numerically) repeated eigenvalues.
"""

import numpy as np
import scipy.linalg

__all__ = [
    "lowdin",
    "polish_unitary",
    "unitary_eigensystem",
    "wrap_to_pi",
]

TWO_PI = 2.0 * np.pi


def wrap_to_pi(x):
    """Wrap angles into the half-open interval [-pi, pi)."""
    return np.mod(np.asarray(x) + np.pi, TWO_PI) - np.pi


def lowdin(mat, rank_tol=0.0):
    """Closest matrix with orthonormal columns (symmetric orthonormalization).

    Computed through the polar factor of the SVD.  If ``rank_tol`` is positive
    and the smallest singular value falls below it, a ``ValueError`` is raised
    so callers can map the failure onto their own error type.
    """
    u, s, vh = np.linalg.svd(np.asarray(mat), full_matrices=False)
    if rank_tol > 0.0 and s[-1] < rank_tol:
        raise ValueError(f"rank-deficient input, smallest singular value {s[-1]:.3e}")
    return u @ vh


def polish_unitary(u):
    """Project a nearly-unitary square matrix onto the unitary group."""
    return lowdin(u)


def _cluster_labels(values, tol):
    """Union-find clustering of complex numbers by pairwise distance <= tol."""
    k = len(values)
    parent = list(range(k))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(k):
        for j in range(i + 1, k):
            if abs(values[i] - values[j]) <= tol:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[rj] = ri
    return np.array([find(i) for i in range(k)])


def unitary_eigensystem(u, cluster_tol=1e-8):
    """Eigendecomposition of a unitary matrix.

    Parameters
    ----------
    u : (m, m) array
        Unitary (within roundoff) matrix.
    cluster_tol : float
        Eigenvalues whose pairwise chordal distance is below this are treated
        as one degenerate cluster.

    Returns
    -------
    w : (m,) complex array
        Eigenvalues (diagonal of the Schur factor).
    q : (m, m) complex array
        Exactly-unitary eigenvector matrix, ``u ~= q @ diag(w) @ q^H``.
    labels : (m,) int array
        Cluster label per eigenvalue; equal labels mark a degenerate cluster.

    The Schur form of a normal matrix is diagonal up to roundoff, so ``q``
    from a unitary Schur factorization is an orthonormal eigenbasis without
    the loss of orthogonality that plain ``eig`` suffers on repeated spectra.
    """
    u = np.asarray(u, dtype=complex)
    if u.shape == (1, 1):
        w = u[0, 0] / abs(u[0, 0])
        return np.array([w]), np.eye(1, dtype=complex), np.array([0])
    t, q = scipy.linalg.schur(u, output="complex")
    w = np.diag(t).copy()
    w = w / np.abs(w)
    labels = _cluster_labels(w, cluster_tol)
    return w, q, labels


def cluster_phases(w, labels, center):
    """Per-eigenvalue phases with a branch synchronized inside each cluster.

    The representative phase of each cluster is taken from the normalized mean
    of its eigenvalues, mapped by ``center`` (a callable turning a principal
    argument into the desired branch); individual eigenvalues then deviate
    from the representative by their wrapped offset, so numerically split
    degeneracies never straddle a branch cut.
    """
    w = np.asarray(w)
    phases = np.empty(len(w))
    for lab in np.unique(labels):
        idx = np.flatnonzero(labels == lab)
        mean = w[idx].sum()
        if abs(mean) < 1e-14:
            # Pathological cluster spread over the whole circle; fall back to
            # the first member as representative.
            mean = w[idx[0]]
        rep = center(float(np.angle(mean)))
        phases[idx] = rep + wrap_to_pi(np.angle(w[idx]) - rep)
    return phases
