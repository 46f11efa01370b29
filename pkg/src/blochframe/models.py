"""Gapped periodic projector families with bosonic time-reversal symmetry.

A family is described by a finite set of hopping matrices ``H_R`` indexed by
integer lattice vectors ``R``; the Bloch Hamiltonian in adapted coordinates is

    H(k) = sum_R H_R exp(2 pi i k . R),

Hermitian provided ``H_{-R} = H_R^dagger``.  The spectral projector ``P(k)``
onto the lowest ``m`` bands is the object the rest of the package works with.
Time reversal acts as ``theta = C o conj`` with a unitary ``C`` satisfying
``C conj(C) = 1`` (plain conjugation when ``C = 1``); the lattice may act
through a unitary representation ``tau`` (identity for all built-in models,
the general interface is kept for user-supplied configurations).
"""

import json
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .errors import AssumptionsFailed, GapClosed, ModelConfigError

__all__ = [
    "ProjectorFamily",
    "AssumptionReport",
    "evaluate_projector",
    "verify_assumptions",
    "load_model",
    "builtin_model",
]

TWO_PI_I = 2j * np.pi


def _as_matrix(x, n, what):
    a = np.asarray(x, dtype=complex)
    if a.shape != (n, n):
        raise ModelConfigError(f"{what} must be {n}x{n}, got shape {a.shape}")
    return a


def _canon_coord(x):
    """Canonical hopping coordinate: ints stay ints, floats are rounded
    just enough that a vector and its negation hash to partner keys."""
    v = round(float(x), 9)
    return int(v) if v.is_integer() else v


@dataclass
class ProjectorFamily:
    """Spectral projector family of a finite-range tight-binding model.

    Attributes
    ----------
    d : int
        Spatial dimension, 1 to 3.
    n : int
        Number of orbitals (ambient dimension).
    m : int
        Rank of the projector (number of occupied bands).
    hoppings : dict
        Maps tuples ``R`` to ``(n, n)`` complex matrices.  Integer vectors
        give an exactly periodic Bloch Hamiltonian; fractional vectors
        (orbitals sitting away from the cell origin) produce the
        quasi-periodic form whose unit shifts are carried by ``tau``.
    theta : (n, n) array or None
        Unitary part of the time-reversal operator; ``None`` means plain
        complex conjugation.
    tau : list of arrays or None
        Unitary lattice generators ``tau_1 .. tau_d``; ``None`` means the
        identity representation.
    gap_tolerance : float
        Smallest admissible spectral gap between bands m and m+1.
    """

    d: int
    n: int
    m: int
    hoppings: dict
    theta: np.ndarray | None = None
    tau: list | None = None
    gap_tolerance: float = 1e-8
    name: str = "custom"
    params: dict = field(default_factory=dict)
    gap_floor: float | None = None

    def __post_init__(self):
        self._tau_cache = {}
        errors = self.validate()
        if errors:
            raise ModelConfigError(
                "invalid model configuration:\n  - " + "\n  - ".join(errors)
            )

    # ------------------------------------------------------------------
    # validation
    # ------------------------------------------------------------------
    def validate(self):
        """Collect every violated structural invariant (empty list if valid)."""
        errors = []
        if self.d not in (1, 2, 3):
            errors.append(f"dimension must be 1, 2 or 3, got {self.d}")
        if not 1 <= self.m < self.n:
            errors.append(f"need 1 <= m < n, got m={self.m}, n={self.n}")
        if self.gap_tolerance <= 0:
            errors.append("gap_tolerance must be positive")
        hop = {}
        for r, mat in self.hoppings.items():
            r = tuple(_canon_coord(x) for x in np.atleast_1d(r))
            if len(r) != self.d:
                errors.append(f"hopping vector {r} has wrong dimension")
                continue
            mat = np.asarray(mat, dtype=complex)
            if mat.shape != (self.n, self.n):
                errors.append(f"hopping H_{r} has shape {mat.shape}, expected ({self.n}, {self.n})")
                continue
            hop[r] = mat
        for r, mat in hop.items():
            mr = tuple(-x for x in r)
            partner = hop.get(mr)
            if partner is None:
                errors.append(f"hopping H_{r} lacks the Hermitian partner H_{mr}")
            elif np.linalg.norm(partner - mat.conj().T) > 1e-12 * max(1.0, np.linalg.norm(mat)):
                errors.append(f"H_{mr} != H_{r}^dagger (Hermiticity broken)")
        self.hoppings = hop
        eye = np.eye(self.n)
        if self.theta is not None:
            c = np.asarray(self.theta, dtype=complex)
            if c.shape != (self.n, self.n):
                errors.append("theta unitary has wrong shape")
            else:
                if np.linalg.norm(c @ c.conj().T - eye) > 1e-10:
                    errors.append("theta matrix is not unitary")
                if np.linalg.norm(c @ c.conj() - eye) > 1e-10:
                    errors.append("theta does not square to the identity (need C conj(C) = 1)")
                self.theta = c
        if self.tau is not None:
            gens = [np.asarray(t, dtype=complex) for t in self.tau]
            if len(gens) != self.d:
                errors.append(f"need {self.d} lattice generators, got {len(gens)}")
            else:
                for j, t in enumerate(gens):
                    if t.shape != (self.n, self.n):
                        errors.append(f"tau generator {j + 1} has wrong shape")
                    elif np.linalg.norm(t @ t.conj().T - eye) > 1e-10:
                        errors.append(f"tau generator {j + 1} is not unitary")
                for i in range(len(gens)):
                    for j in range(i + 1, len(gens)):
                        if np.linalg.norm(gens[i] @ gens[j] - gens[j] @ gens[i]) > 1e-10:
                            errors.append(f"tau generators {i + 1} and {j + 1} do not commute")
                c = self.theta if self.theta is not None else eye
                for j, t in enumerate(gens):
                    # theta tau_j theta^{-1} = tau_j^{-1}  <=>  C conj(tau_j) = tau_j^dagger C
                    if np.linalg.norm(c @ t.conj() - t.conj().T @ c) > 1e-10:
                        errors.append(f"tau generator {j + 1} incompatible with time reversal")
                if all(np.linalg.norm(t - eye) < 1e-14 for t in gens):
                    gens = None
                self.tau = gens
        return errors

    # ------------------------------------------------------------------
    # Bloch data
    # ------------------------------------------------------------------
    def hamiltonian(self, k):
        """Bloch Hamiltonian at quasimomentum ``k`` (adapted coordinates)."""
        k = np.asarray(k, dtype=float)
        h = np.zeros((self.n, self.n), dtype=complex)
        for r, mat in self.hoppings.items():
            h += mat * np.exp(TWO_PI_I * float(np.dot(k, r)))
        return h

    def eigensystem(self, k):
        """Eigenvalues (ascending) and eigenvectors of ``H(k)``."""
        h = self.hamiltonian(k)
        h = 0.5 * (h + h.conj().T)
        return np.linalg.eigh(h)

    def spectral_frame(self, k, gap_tol=None):
        """Orthonormal eigenbasis of the lowest ``m`` bands plus the gap."""
        tol = self.gap_tolerance if gap_tol is None else gap_tol
        evals, evecs = self.eigensystem(k)
        gap = float(evals[self.m] - evals[self.m - 1])
        if gap < tol:
            raise GapClosed(
                f"spectral gap {gap:.3e} below tolerance {tol:.3e}",
                k=tuple(np.asarray(k, dtype=float)),
                below=float(evals[self.m - 1]),
                above=float(evals[self.m]),
            )
        return evecs[:, : self.m], gap

    def projector(self, k, gap_tol=None):
        frame, _ = self.spectral_frame(k, gap_tol)
        return frame @ frame.conj().T

    # ------------------------------------------------------------------
    # symmetry actions
    # ------------------------------------------------------------------
    @property
    def theta_is_conjugation(self):
        return self.theta is None

    def theta_matrix(self):
        return np.eye(self.n, dtype=complex) if self.theta is None else self.theta

    def theta_apply(self, frame):
        """Apply time reversal to a frame (or any stack of column vectors)."""
        if self.theta is None:
            return np.conj(frame)
        return self.theta @ np.conj(frame)

    def tau_power(self, lam):
        """Unitary representing the lattice vector ``lam``."""
        lam = tuple(int(x) for x in lam)
        if self.tau is None:
            return np.eye(self.n, dtype=complex)
        if lam not in self._tau_cache:
            mat = np.eye(self.n, dtype=complex)
            for j, lj in enumerate(lam):
                gen = self.tau[j] if lj >= 0 else self.tau[j].conj().T
                for _ in range(abs(lj)):
                    mat = gen @ mat
            self._tau_cache[lam] = mat
        return self._tau_cache[lam]

    def tau_apply(self, lam, frame):
        if self.tau is None:
            return np.asarray(frame)
        return self.tau_power(lam) @ frame

    def antiunitary_matrix(self, lam):
        """Matrix ``A`` of the antiunitary ``tau_lam o theta``; acts as
        ``v -> A conj(v)``."""
        return self.tau_power(lam) @ self.theta_matrix()

    # ------------------------------------------------------------------
    # serialization
    # ------------------------------------------------------------------
    def describe(self):
        """JSON-safe summary used in manifests."""
        return {
            "name": self.name,
            "params": self.params,
            "dimension": self.d,
            "orbitals": self.n,
            "rank": self.m,
            "hopping_count": len(self.hoppings),
            "theta": "conjugation" if self.theta is None else "unitary",
            "tau": "identity" if self.tau is None else "unitary",
            "gap_tolerance": self.gap_tolerance,
        }


def evaluate_projector(family, k, gap_tol=None):
    """Spectral projector ``P(k)`` with a protected gap.

    Raises :class:`GapClosed` when the gap between bands ``m`` and ``m + 1``
    falls below tolerance.
    """
    return family.projector(k, gap_tol)


# ----------------------------------------------------------------------
# model assumptions
# ----------------------------------------------------------------------
@dataclass
class AssumptionReport:
    """Measured residuals of the structural assumptions on a grid."""

    gap_floor: float
    periodicity: float
    time_reversal: float
    compatibility: float
    smoothness_proxy: float
    smoothness_flagged: bool
    tolerance: float
    passed: bool

    def as_dict(self):
        return {
            "gap_floor": self.gap_floor,
            "periodicity_residual": self.periodicity,
            "time_reversal_residual": self.time_reversal,
            "compatibility_residual": self.compatibility,
            "smoothness_proxy": self.smoothness_proxy,
            "smoothness_flagged": self.smoothness_flagged,
            "tolerance": self.tolerance,
            "passed": self.passed,
        }


def _grid_axes(grid_n):
    n = 2 * grid_n
    return np.arange(n) / n


def _smoothness_proxy(family, grid_n):
    """max ||second difference of P|| * grid_n**2 over a coarse grid."""
    pts = _grid_axes(grid_n)
    h = 1.0 / (2 * grid_n)
    worst = 0.0
    if family.d == 1:
        samples = [(x,) for x in pts]
    elif family.d == 2:
        samples = [(x, y) for x in pts for y in pts]
    else:
        step = max(1, grid_n // 4)
        coarse = pts[::step]
        samples = [(x, y, z) for x in coarse for y in coarse for z in coarse]
    for k in samples:
        k = np.asarray(k)
        for j in range(family.d):
            e = np.zeros(family.d)
            e[j] = h
            d2 = family.projector(k + e) - 2 * family.projector(k) + family.projector(k - e)
            worst = max(worst, float(np.linalg.norm(d2, 2)))
    return worst * grid_n**2


def verify_assumptions(family, grid_n=16, tol=1e-8):
    """Check periodicity, time reversal, compatibility and the gap on a grid.

    Returns an :class:`AssumptionReport`; ``passed`` is False when any
    residual exceeds ``tol`` or the measured gap floor drops below the
    family's gap tolerance.
    """
    d = family.d
    n_side = 2 * grid_n
    pts = _grid_axes(grid_n)
    if d == 1:
        samples = [(x,) for x in pts]
    elif d == 2:
        samples = [(x, y) for x in pts for y in pts]
    else:
        step = max(1, grid_n // 8)
        coarse = pts[::step]
        samples = [(x, y, z) for x in coarse for y in coarse for z in coarse]

    c = family.theta_matrix()
    gap_floor = np.inf
    res_p2 = 0.0
    res_p3 = 0.0
    for k in samples:
        k = np.asarray(k)
        evals, evecs = family.eigensystem(k)
        gap_floor = min(gap_floor, float(evals[family.m] - evals[family.m - 1]))
        p = evecs[:, : family.m] @ evecs[:, : family.m].conj().T
        for j in range(d):
            e = np.zeros(d)
            e[j] = 1.0
            tau_j = family.tau_power(tuple(int(x) for x in e))
            shifted = family.projector(k + e)
            res_p2 = max(res_p2, float(np.linalg.norm(shifted - tau_j @ p @ tau_j.conj().T, 2)))
        rev = family.projector(-k)
        res_p3 = max(res_p3, float(np.linalg.norm(rev - c @ p.conj() @ c.conj().T, 2)))

    res_p4 = 0.0
    if family.tau is not None:
        for t in family.tau:
            res_p4 = max(res_p4, float(np.linalg.norm(c @ t.conj() - t.conj().T @ c, 2)))

    proxy_fine = _smoothness_proxy(family, grid_n)
    proxy_coarse = _smoothness_proxy(family, max(2, grid_n // 2))
    flagged = proxy_coarse > 1e-12 and proxy_fine / max(proxy_coarse, 1e-300) > 6.0

    passed = (
        res_p2 <= tol
        and res_p3 <= tol
        and res_p4 <= tol
        and gap_floor >= family.gap_tolerance
    )
    family.gap_floor = float(gap_floor)
    return AssumptionReport(
        gap_floor=float(gap_floor),
        periodicity=res_p2,
        time_reversal=res_p3,
        compatibility=res_p4,
        smoothness_proxy=proxy_fine,
        smoothness_flagged=bool(flagged),
        tolerance=tol,
        passed=bool(passed),
    )


def require_assumptions(family, grid_n=16, tol=1e-8):
    """Raise :class:`AssumptionsFailed` unless :func:`verify_assumptions` passes."""
    report = verify_assumptions(family, grid_n=grid_n, tol=tol)
    if not report.passed:
        raise AssumptionsFailed(
            "model violates the structural assumptions",
            periodicity=report.periodicity,
            time_reversal=report.time_reversal,
            compatibility=report.compatibility,
            gap_floor=report.gap_floor,
            tolerance=tol,
        )
    return report


# ----------------------------------------------------------------------
# built-in models
# ----------------------------------------------------------------------
def _haldane(t1=1.0, t2=0.1, phi=0.0, mass=0.5):
    """Two-band honeycomb model with staggered mass and complex second-neighbour
    hoppings; time reversal holds exactly when ``sin(phi) = 0``."""
    n = 2
    z = np.zeros((n, n), dtype=complex)
    hop = {}

    def add(r, i, j, val):
        r = tuple(r)
        if r not in hop:
            hop[r] = z.copy()
        hop[r] = hop[r].copy()
        hop[r][i, j] += val

    add((0, 0), 0, 0, mass)
    add((0, 0), 1, 1, -mass)
    # nearest neighbours: H_01(k) = t1 (1 + e^{-2 pi i k_1} + e^{-2 pi i k_2})
    for r in [(0, 0), (-1, 0), (0, -1)]:
        add(r, 0, 1, t1)
        add(tuple(-x for x in r), 1, 0, t1)
    # second neighbours with flux phi, opposite chirality on the two sites
    for b in [(1, 0), (-1, 1), (0, -1)]:
        mb = tuple(-x for x in b)
        add(b, 0, 0, t2 * np.exp(1j * phi))
        add(mb, 0, 0, t2 * np.exp(-1j * phi))
        add(b, 1, 1, t2 * np.exp(-1j * phi))
        add(mb, 1, 1, t2 * np.exp(1j * phi))
    return ProjectorFamily(
        d=2, n=2, m=1, hoppings=hop,
        name="haldane", params={"t1": t1, "t2": t2, "phi": phi, "M": mass},
    )


def _ssh(v=1.0, w=0.4):
    """Two-orbital chain with alternating real hoppings, gapped for |v| != |w|."""
    hop = {
        (0,): np.array([[0.0, v], [v, 0.0]], dtype=complex),
        (-1,): np.array([[0.0, w], [0.0, 0.0]], dtype=complex),
        (1,): np.array([[0.0, 0.0], [w, 0.0]], dtype=complex),
    }
    return ProjectorFamily(d=1, n=2, m=1, hoppings=hop, name="ssh", params={"v": v, "w": w})


def _random_trs(n=4, m=2, d=2, hop_range=1, seed=0, amplitude=0.3):
    """Random real-hopping family around a gapped diagonal reference.

    All hoppings are real; the combined perturbation is rescaled so its total
    spectral norm equals ``amplitude``, which keeps the gap between bands m
    and m+1 at least ``2 - 2 * amplitude`` uniformly in k.
    """
    n, m, d, hop_range = int(n), int(m), int(d), int(hop_range)
    if not 1 <= m < n:
        raise ModelConfigError(f"random-trs needs 1 <= m < n, got m={m}, n={n}")
    if not 0 < amplitude < 1:
        raise ModelConfigError("random-trs amplitude must lie in (0, 1)")
    rng = np.random.default_rng(int(seed))
    base = np.diag(np.concatenate([-np.ones(m), np.ones(n - m)])).astype(complex)
    raw = {}
    vectors = [r for r in product(*[range(-hop_range, hop_range + 1)] * d)]
    for r in vectors:
        raw[r] = rng.standard_normal((n, n))
    # symmetrize: H_R <- (H_R + H_{-R}^T) / 2 makes H(k) Hermitian with all
    # entries real, hence theta = conjugation holds exactly
    hop = {}
    for r in vectors:
        mr = tuple(-x for x in r)
        hop[r] = 0.5 * (raw[r] + raw[mr].T)
    total = sum(np.linalg.norm(mat, 2) for mat in hop.values())
    scale = amplitude / total
    hoppings = {r: scale * mat.astype(complex) for r, mat in hop.items()}
    hoppings[(0,) * d] = hoppings.get((0,) * d, 0.0) + base
    return ProjectorFamily(
        d=d, n=n, m=m, hoppings=hoppings,
        name="random-trs",
        params={"n": n, "m": m, "d": d, "range": hop_range, "seed": int(seed),
                "amplitude": amplitude},
    )


_BUILTINS = {"haldane": _haldane, "ssh": _ssh, "random-trs": _random_trs}

_BUILTIN_PARAM_NAMES = {
    "haldane": {"t1", "t2", "phi", "M"},
    "ssh": {"v", "w"},
    "random-trs": {"n", "m", "d", "range", "seed", "amplitude"},
}


def builtin_model(name, **params):
    """Instantiate a built-in model by name."""
    if name not in _BUILTINS:
        raise ModelConfigError(
            f"unknown built-in model {name!r}; available: {sorted(_BUILTINS)}"
        )
    allowed = _BUILTIN_PARAM_NAMES[name]
    bad = set(params) - allowed
    if bad:
        raise ModelConfigError(
            f"unknown parameter(s) {sorted(bad)} for model {name!r}; allowed: {sorted(allowed)}"
        )
    if name == "haldane":
        mapped = {"t1": params.get("t1", 1.0), "t2": params.get("t2", 0.1),
                  "phi": params.get("phi", 0.0), "mass": params.get("M", 0.5)}
        return _haldane(**mapped)
    if name == "ssh":
        return _ssh(**params)
    return _random_trs(**params)


def _matrix_from_json(obj, n, what):
    if isinstance(obj, dict):
        re = np.asarray(obj.get("re", np.zeros((n, n))), dtype=float)
        im = np.asarray(obj.get("im", np.zeros((n, n))), dtype=float)
        if re.shape != (n, n) or im.shape != (n, n):
            raise ModelConfigError(f"{what}: matrix blocks must be {n}x{n}")
        return re + 1j * im
    return _as_matrix(obj, n, what)


def load_model(source, params=None):
    """Load a projector family from a built-in name or a JSON description.

    ``source`` may be a built-in model name, a path to a JSON file, or an
    already-parsed configuration dictionary.  The JSON schema:

    .. code-block:: json

        {
          "dimension": 2, "orbitals": 2, "rank": 1,
          "hoppings": [{"R": [0, 0], "re": [[...]], "im": [[...]]}, ...],
          "theta": "conjugation",
          "tau": "identity",
          "gap_tolerance": 1e-8
        }

    ``theta`` may instead be ``{"unitary": {"re": ..., "im": ...}}`` and
    ``tau`` may be ``{"generators": [matrix, ...]}`` with one generator per
    dimension.  Every violated invariant is reported at once.
    """
    params = dict(params or {})
    if isinstance(source, str) and source in _BUILTINS:
        return builtin_model(source, **params)
    if isinstance(source, str):
        try:
            with open(source) as fh:
                cfg = json.load(fh)
        except OSError as exc:
            raise ModelConfigError(f"cannot read model file {source!r}: {exc}")
        except json.JSONDecodeError as exc:
            raise ModelConfigError(f"model file {source!r} is not valid JSON: {exc}")
    elif isinstance(source, dict):
        cfg = source
    else:
        raise ModelConfigError(f"unsupported model source {source!r}")
    if params:
        raise ModelConfigError("parameter overrides only apply to built-in models")

    try:
        d = int(cfg["dimension"])
        n = int(cfg["orbitals"])
        m = int(cfg["rank"])
    except KeyError as exc:
        raise ModelConfigError(f"model config missing required key {exc}")
    hoppings = {}
    for item in cfg.get("hoppings", []):
        r = tuple(_canon_coord(x) for x in item["R"])
        hoppings[r] = _matrix_from_json(item, n, f"hopping {r}")
    theta_cfg = cfg.get("theta", "conjugation")
    if theta_cfg == "conjugation":
        theta = None
    elif isinstance(theta_cfg, dict) and "unitary" in theta_cfg:
        theta = _matrix_from_json(theta_cfg["unitary"], n, "theta")
    else:
        raise ModelConfigError("theta must be 'conjugation' or {'unitary': matrix}")
    tau_cfg = cfg.get("tau", "identity")
    if tau_cfg == "identity":
        tau = None
    elif isinstance(tau_cfg, dict) and "generators" in tau_cfg:
        tau = [_matrix_from_json(g, n, f"tau generator {j + 1}")
               for j, g in enumerate(tau_cfg["generators"])]
    else:
        raise ModelConfigError("tau must be 'identity' or {'generators': [...]}")
    return ProjectorFamily(
        d=d, n=n, m=m, hoppings=hoppings, theta=theta, tau=tau,
        gap_tolerance=float(cfg.get("gap_tolerance", 1e-8)),
        name=str(cfg.get("name", "custom")),
    )
