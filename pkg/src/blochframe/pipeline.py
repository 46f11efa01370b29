"""End-to-end pipeline driving model -> frame -> smoothing -> Wannier.

Each ``run_*`` function corresponds to one command-line subcommand and can
equally be used programmatically.  Artifacts are only written when the
configuration carries an output directory; everything is also returned in
memory.  All randomness flows from the single configured seed, so repeated
runs produce byte-identical artifacts.
"""

import os
import time
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from . import io as io_mod
from .cells import CellGeometry
from .errors import UsageError
from .frames import evaluate, frame_distance, input_frame, unitary_between
from .models import builtin_model, load_model, require_assumptions, verify_assumptions
from .smoothing import reflection_defect, smooth_symmetric
from .vertex import construct_1d
from .face2d import construct_2d
from .cell3d import construct_3d
from .wannier import (
    localization_report,
    reality_check,
    wannier_transform,
)

__all__ = [
    "RunConfig",
    "load_family",
    "run_verify",
    "run_construct",
    "run_wannierize",
    "run_report",
    "final_residuals",
]

_BUILTIN_NAMES = {"haldane", "ssh", "random-trs"}


@dataclass
class RunConfig:
    """Everything a pipeline run depends on."""

    model: str
    params: dict = dataclass_field(default_factory=dict)
    grid_n: int = 16
    tol: float = 1e-8
    gap_tol: float = 1e-8
    epsilon: float = 0.1
    out: str = None
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        if self.grid_n < 2 or self.grid_n % 2:
            raise UsageError("grid_n must be even and at least 2")
        for name in ("tol", "gap_tol", "epsilon"):
            if getattr(self, name) <= 0:
                raise UsageError(f"{name} must be positive")


def load_family(config):
    """Model family named by the configuration (built-in or config file)."""
    if config.model in _BUILTIN_NAMES:
        params = dict(config.params)
        if config.model == "random-trs":
            params.setdefault("seed", config.seed)
        family = builtin_model(config.model, **params)
    else:
        if not os.path.exists(config.model):
            raise UsageError(
                f"model {config.model!r} is neither a built-in name "
                f"({sorted(_BUILTIN_NAMES)}) nor an existing config file"
            )
        family = load_model(config.model, params=config.params)
    if config.gap_tol is not None:
        family.gap_tolerance = config.gap_tol
    return family


def _outpath(config, name):
    if config.out is None:
        return None
    os.makedirs(config.out, exist_ok=True)
    return os.path.join(config.out, name)


def run_verify(config):
    """Verify the structural assumptions; returns (family, report)."""
    family = load_family(config)
    report = verify_assumptions(family, grid_n=config.grid_n, tol=config.tol)
    if config.out is not None:
        io_mod.write_json(_outpath(config, "assumptions.json"), report.as_dict())
    return family, report


def _trim_obstruction_defects(psi_field, family, geometry):
    """Symmetry defect of the obstruction unitary at every high-symmetry point."""
    out = {}
    for trim in geometry.trims():
        lam = geometry.trim_lambda(trim)
        frame = psi_field.get(trim)
        image = family.antiunitary_matrix(lam) @ np.conj(frame)
        u = unitary_between(frame, image)
        out[str(trim)] = float(np.linalg.norm(u - u.T))
    return out


def final_residuals(field, family):
    """The four certificate residuals of a full-torus frame field.

    Periodicity is measured through the equivariant accessor by stepping a
    full period along each axis; reflection compares every grid pair
    ``(k, -k)``; the projector and orthonormality defects are pointwise.
    """
    geometry = field.geometry
    big = geometry.n_side
    proj_worst = 0.0
    for g in np.ndindex(*geometry.torus_shape):
        frame = field.get(g)
        p = family.projector(np.asarray(g) / big)
        proj_worst = max(proj_worst, float(np.linalg.norm(p @ frame - frame)))
    periodicity = 0.0
    for g in np.ndindex(*geometry.torus_shape):
        if not any(c == 0 for c in g):
            continue
        for j in range(geometry.d):
            if g[j] != 0:
                continue
            shifted = list(g)
            shifted[j] += big
            stepped = evaluate(field, family, tuple(shifted))
            translated = family.tau_power(
                tuple(1 if i == j else 0 for i in range(geometry.d))
            ) @ field.get(g)
            periodicity = max(
                periodicity, frame_distance(stepped, translated)
            )
    return {
        "projector": proj_worst,
        "orthonormality": field.orthonormality_defect(),
        "periodicity": periodicity,
        "reflection": reflection_defect(field, family),
    }


def run_construct(config):
    """Full frame construction; returns a dict of fields and the manifest."""
    t0 = time.monotonic()
    family = load_family(config)
    report = require_assumptions(family, grid_n=config.grid_n, tol=config.tol)
    geometry = CellGeometry(family.d, config.grid_n)
    psi = input_frame(family, geometry)
    obstructions = _trim_obstruction_defects(psi, family, geometry)

    if family.d == 1:
        phi, diag = construct_1d(psi, family)
    elif family.d == 2:
        phi, diag = construct_2d(psi, family, tol=config.tol, seed=config.seed)
    else:
        phi, diag = construct_3d(psi, family, tol=config.tol, seed=config.seed)

    phi_sm, smooth_report = smooth_symmetric(phi, family, config.epsilon)
    residuals = final_residuals(phi_sm, family)
    elapsed = time.monotonic() - t0

    manifest = {
        "model": family.describe(),
        "config": {
            "model": config.model,
            "params": config.params,
            "grid_n": config.grid_n,
            "tol": config.tol,
            "gap_tol": config.gap_tol,
            "epsilon": config.epsilon,
            "seed": config.seed,
        },
        "assumptions": report.as_dict(),
        "obstruction_symmetry_defects": obstructions,
        "construction": io_mod.jsonable(diag),
        "extension_mismatch": phi.meta.get("extension_mismatch"),
        "smoothing": io_mod.jsonable(smooth_report),
        "final_residuals": residuals,
        "elapsed_seconds": elapsed,
    }

    if config.out is not None:
        io_mod.save_frames(_outpath(config, "psi.blf1"), psi,
                           {"transport_step_sup": psi.meta.get("transport_step_sup")})
        io_mod.save_frames(_outpath(config, "phi.blf1"), phi,
                           {"extension_mismatch": phi.meta.get("extension_mismatch")})
        io_mod.save_frames(_outpath(config, "phi_sm.blf1"), phi_sm, residuals)
        manifest["artifacts"] = {
            name: io_mod.file_sha256(_outpath(config, name))
            for name in ("psi.blf1", "phi.blf1", "phi_sm.blf1")
        }
        io_mod.write_json(_outpath(config, "manifest.json"), manifest)

    return {
        "family": family,
        "geometry": geometry,
        "psi": psi,
        "phi": phi,
        "phi_sm": phi_sm,
        "manifest": manifest,
    }


def run_wannierize(config):
    """Wannier transform plus certificates; reuses construct artifacts if present."""
    manifest_path = _outpath(config, "manifest.json")
    phi_sm_path = _outpath(config, "phi_sm.blf1")
    family = None
    if (
        manifest_path is not None
        and os.path.exists(manifest_path)
        and os.path.exists(phi_sm_path)
    ):
        family = load_family(config)
        phi_sm = io_mod.load_frames(phi_sm_path)
        manifest = io_mod.read_json(manifest_path)
        geometry = phi_sm.geometry
    else:
        built = run_construct(config)
        family = built["family"]
        phi_sm = built["phi_sm"]
        manifest = built["manifest"]
        geometry = built["geometry"]

    wset = wannier_transform(phi_sm)
    reality = reality_check(wset, family)

    control_field = input_frame(family, geometry, region="full-torus")
    control = reality_check(wannier_transform(control_field), family)

    cutoff = manifest.get("smoothing", {}).get("smoothing", {}).get("cutoff")
    fit_max = geometry.grid_n // 2
    if cutoff is not None:
        fit_max = min(fit_max, int(cutoff))
    localization = localization_report(wset, fit_max=fit_max)

    wannier_report = {
        "reality": reality,
        "control_reality": control,
        "localization": localization,
        "band_norms": wset.band_norms().tolist(),
        "fit_max": fit_max,
    }

    if config.out is not None:
        io_mod.save_wannier(_outpath(config, "wannier.wan1"), wset)
        io_mod.write_wannier_csv(_outpath(config, "wannier.csv"), wset)
        io_mod.write_json(_outpath(config, "wannier_report.json"), wannier_report)

    return {
        "family": family,
        "wannier": wset,
        "report": wannier_report,
        "manifest": manifest,
    }


def _fmt(x):
    if x is None:
        return "n/a"
    if isinstance(x, float):
        return f"{x:.3e}"
    return str(x)


def run_report(config):
    """Consolidated text certificate assembled from existing artifacts."""
    if config.out is None:
        raise UsageError("report needs --out pointing at an artifact directory")
    manifest_path = os.path.join(config.out, "manifest.json")
    if not os.path.exists(manifest_path):
        raise UsageError(
            f"no manifest.json in {config.out!r}; run the construct "
            "subcommand first"
        )
    manifest = io_mod.read_json(manifest_path)
    lines = []
    model = manifest.get("model", {})
    lines.append(f"model: {model.get('name')} (d={model.get('dimension')}, "
                 f"n={model.get('orbitals')}, m={model.get('rank')})")
    assumptions = manifest.get("assumptions", {})
    lines.append("assumptions:")
    for key in (
        "gap_floor",
        "periodicity_residual",
        "time_reversal_residual",
        "compatibility_residual",
        "smoothness_proxy",
    ):
        lines.append(f"  {key}: {_fmt(assumptions.get(key))}")
    lines.append(f"  passed: {assumptions.get('passed')}")
    lines.append("obstruction symmetry defects:")
    for trim, defect in sorted(manifest.get("obstruction_symmetry_defects", {}).items()):
        lines.append(f"  {trim}: {_fmt(defect)}")
    construction = manifest.get("construction", {})
    degrees = _collect_degrees(construction)
    if degrees:
        lines.append("boundary degrees (before correction):")
        for label, r in degrees:
            lines.append(f"  {label}: {r}")
    lines.append(f"extension mismatch: {_fmt(manifest.get('extension_mismatch'))}")
    smoothing = manifest.get("smoothing", {})
    sm = smoothing.get("smoothing", {})
    lines.append("smoothing:")
    lines.append(f"  cutoff: {sm.get('cutoff')}")
    lines.append(f"  sup distance: {_fmt(sm.get('sup_distance'))}")
    lines.append(
        f"  total move (with symmetrization): "
        f"{_fmt(smoothing.get('sup_distance_total'))} "
        f"(epsilon {_fmt(smoothing.get('epsilon'))})"
    )
    lines.append("final residuals:")
    for key, val in sorted(manifest.get("final_residuals", {}).items()):
        lines.append(f"  {key}: {_fmt(val)}")

    wannier_path = os.path.join(config.out, "wannier_report.json")
    if os.path.exists(wannier_path):
        wr = io_mod.read_json(wannier_path)
        reality = wr.get("reality", {})
        lines.append("wannier:")
        lines.append(
            f"  reality defect ({reality.get('mode')}): "
            f"{_fmt(reality.get('defect'))}"
        )
        control = wr.get("control_reality", {})
        lines.append(f"  raw-frame control defect: {_fmt(control.get('defect'))}")
        loc = wr.get("localization", {})
        lines.append(f"  decay rate: {_fmt(loc.get('decay_rate'))} "
                     f"(R^2 {_fmt(loc.get('r_squared'))})")
        lines.append(
            f"  decreasing shells: {loc.get('max_decreasing_run')}"
        )
        moments = loc.get("moments", {})
        for r in sorted(moments, key=int):
            vals = ", ".join(_fmt(v) for v in moments[r])
            lines.append(f"  moment r={r}: {vals}")
    text = "\n".join(lines)
    if config.out is not None:
        with open(os.path.join(config.out, "report.txt"), "w") as fh:
            fh.write(text + "\n")
    return text


def _collect_degrees(diag, prefix=""):
    """Pull every recorded winding number out of a nested diagnostics dict."""
    found = []
    if isinstance(diag, dict):
        if "winding" in diag:
            found.append((prefix or "cell", diag["winding"]))
        for key, val in diag.items():
            if isinstance(val, dict):
                label = f"{prefix}.{key}" if prefix else key
                found.extend(_collect_degrees(val, label))
    return found
