"""Pointwise structure classification of conformal Kaehler examples.

For every sample point of the chart: build the light-cone representative
``F``, take its second fundamental form ``alpha^F``, couple it with ``J``,
check flatness and that the coupled kernel is trivial, and decompose.  The
per-point records are then aggregated:

* every classified point ``DEG_L`` with ``s = 2`` and a constant ``delta``:
  ``CASE_I_REAL_KAEHLER`` (conformally congruent to an isometric immersion);
* the same with a varying ``delta``: ``CASE_II_COMPOSITION``;
* ``s = 4`` everywhere, null coupled form and ``A_1 = J A_2``:
  ``MINIMAL_S4``;
* anything else: ``MIXED``; fewer than 10 usable points: ``UNDETERMINED``.
"""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field

import jsonschema
import numpy as np

from . import __version__, gallery
from . import jets as jt
from .bilinear import DEG_L, ComplexStructure, flatness_defect, j_couple, nullity_defect
from .errors import GeometryError
from .immersion import ChartPatch, KaehlerChart, curvature_at, mean_curvature, sff_batch, sff_from_jet
from .lightcone import (
    alpha_L,
    decompose_point,
    make_rep,
    normal_alpha,
    sff_radial_defect,
    shape_op_F_defect,
)

CLASSIFICATIONS = ("CASE_I_REAL_KAEHLER", "CASE_II_COMPOSITION", "MINIMAL_S4", "MIXED", "UNDETERMINED")
MIN_POINTS = 10
CHUNK = 64


@dataclass
class AnalysisConfig:
    example: str | None = None
    patch: dict | None = None
    n: int | None = None
    grid: int = 3
    rank_tol: float = 1e-8
    flat_tol: float = 1e-6
    var_tol: float = 1e-6
    seed: int = 0
    out: str | None = None
    max_points: int = 512

    def validate(self):
        if (self.example is None) == (self.patch is None):
            raise GeometryError("BAD_CONFIG", "give exactly one of example and patch")
        if int(self.grid) < 2:
            raise GeometryError("BAD_CONFIG", "grid must be at least 2")
        for name in ("rank_tol", "flat_tol", "var_tol"):
            if not float(getattr(self, name)) > 0:
                raise GeometryError("BAD_CONFIG", f"{name} must be positive")
        if int(self.max_points) < 1:
            raise GeometryError("BAD_CONFIG", "max_points must be positive")
        return self

    @classmethod
    def from_dict(cls, d):
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise GeometryError("BAD_CONFIG", f"unknown config keys {sorted(extra)}")
        return cls(**d).validate()

    def to_dict(self):
        return asdict(self)

    def example_id(self):
        """The example id, with ``-n<k>`` appended when ``n`` is given separately."""
        if self.example is None:
            return None
        if self.n is not None and not self.example.rsplit("-", 1)[-1].startswith("n"):
            return f"{self.example}-n{int(self.n)}"
        return self.example


def build_from_config(cfg):
    """The :class:`~conformal_kaehler.gallery.GalleryExample` a config refers to."""
    try:
        if cfg.example is not None:
            e = gallery.build_example(cfg.example_id())
            if cfg.n is not None and e.n != int(cfg.n):
                raise GeometryError("BAD_CONFIG", f"example has n = {e.n}, config says {cfg.n}")
            return e
        desc = cfg.patch
        patch = ChartPatch.from_json(desc["patch"])
        ref = ChartPatch.from_json(desc["reference"]) if "reference" in desc else patch
        J = ComplexStructure(np.array(desc["J"])) if "J" in desc else ComplexStructure.standard(patch.dim)
        lam = jt.from_json(desc["lambda"])[0][0] if "lambda" in desc else jt.const(1.0)
        return gallery.GalleryExample(desc.get("name", patch.name or "inline"), patch, KaehlerChart(ref, J), lam, patch.dim // 2)
    except GeometryError as exc:
        raise GeometryError("GENERATION_FAILED", str(exc)) from exc
    except (KeyError, TypeError, ValueError) as exc:
        raise GeometryError("GENERATION_FAILED", f"bad inline patch: {exc}") from exc


def sample_points(patch, grid, max_points, seed):
    """Tensor grid over the chart box, in lexicographic order.

    Grids with more than ``max_points`` nodes are thinned by stratified
    sampling: the lexicographic index range is cut into ``max_points``
    equal strata and one index is drawn from each with the run seed.
    """
    d = patch.dim
    total = grid**d
    if total <= max_points:
        idx = np.arange(total)
    else:
        rng = np.random.default_rng(seed)
        edges = np.linspace(0, total, max_points + 1)
        lo = np.ceil(edges[:-1]).astype(np.int64)
        hi = np.maximum(np.ceil(edges[1:]).astype(np.int64), lo + 1)
        idx = lo + (rng.random(max_points) * (hi - lo)).astype(np.int64)
    digits = np.array(np.unravel_index(idx, (grid,) * d)).T
    t = digits / (grid - 1)
    return patch.lo + t * (patch.hi - patch.lo)


def _fin(x):
    if x is None:
        return None
    x = float(x)
    return x if np.isfinite(x) else None


@dataclass
class PointRecord:
    coords: list
    s: int | None = None
    case: str | None = None
    dim_delta: int | None = None
    residuals: dict = field(default_factory=dict)
    delta: list | None = None
    flat_point: bool = False
    error: str | None = None

    def to_json(self):
        return {
            "coords": [float(c) for c in self.coords],
            "s": self.s,
            "case": self.case,
            "dim_delta": self.dim_delta,
            "residuals": {k: _fin(v) for k, v in sorted(self.residuals.items())},
            "delta": None if self.delta is None else [float(c) for c in self.delta],
            "flat_point": bool(self.flat_point),
            "error": self.error,
        }


def rotation_defect(sff, report, J):
    """``min_orientation |A_1 - J A_2| / |A_1|`` over an orthonormal frame of ``U1``.

    Rotating the frame leaves the relation invariant, so only the
    orientation of the second vector is free.
    """
    if report.U1_basis is None or report.U1_basis.dim != 2:
        return None
    Fr = report.u1_frame()
    xi = sff.normal @ Fr
    A1, A2 = sff.shape_op(xi[:, 0]), sff.shape_op(xi[:, 1])
    Jm = J.matrix
    s = max(np.abs(A1).max(), np.abs(A2).max(), 1e-300)
    return float(min(np.abs(A1 - Jm @ A2).max(), np.abs(A1 + Jm @ A2).max()) / s)


def point_record(x, sff, J, cfg, ref_sff=None):
    """Run the pointwise pipeline on precomputed second-order data."""
    rec = PointRecord(coords=list(map(float, x)))
    res = rec.residuals
    res["sff_radial"] = sff_radial_defect(sff)
    res["a_f"] = shape_op_F_defect(sff)
    curv = curvature_at(sff, cfg.flat_tol)
    rec.flat_point = curv.flat_point
    alpha = normal_alpha(sff)
    beta = j_couple(alpha, J.matrix, cfg.rank_tol)
    res["flat"] = flatness_defect(beta)
    res["nullity"] = nullity_defect(beta)
    if ref_sff is not None:
        H = mean_curvature(ref_sff)
        res["source_mean_curvature"] = float(np.abs(H).max() / max(1.0, ref_sff.alpha_norm()))
    try:
        report, delta = decompose_point(sff, J, cfg.rank_tol, cfg.flat_tol)
    except GeometryError as exc:
        rec.error = exc.code
        return rec, None
    if report.dim_N != 0:
        rec.error = "KERNEL_NONTRIVIAL"
    rec.s = report.s
    rec.case = report.case_tag
    rec.dim_delta = report.dim_Delta
    res["alpha1_sym"] = report.alpha1_symmetry_defect
    res["delta_orth"] = report.delta_orthogonality_defect
    if delta is not None:
        rec.delta = list(map(float, delta))
        res["a_delta"] = float(np.abs(sff.shape_op(delta)).max())
        aL, _ = alpha_L(sff, delta)
        tr = np.einsum("ij,ija->a", np.linalg.inv(sff.metric), aL)
        res["alpha_L_trace"] = float(np.abs(tr).max() / max(1.0, np.abs(aL).max()))
    if report.s == 4:
        res["rotation"] = rotation_defect(sff, report, J)
    return rec, report


def _in_range(codim, n):
    if codim == 1:
        return n >= 4
    if codim == 2:
        return n >= 5
    return False


def aggregate(records, n, codim, cfg):
    usable = [r for r in records if not r.flat_point and r.error is None]
    counts = {
        "total": len(records),
        "flat": sum(r.flat_point for r in records),
        "error": sum(r.error is not None for r in records),
        "classified": len(usable),
        "by_s": {},
        "by_case": {},
        "errors": {},
    }
    for r in usable:
        counts["by_s"][str(r.s)] = counts["by_s"].get(str(r.s), 0) + 1
        counts["by_case"][str(r.case)] = counts["by_case"].get(str(r.case), 0) + 1
    for r in records:
        if r.error is not None:
            counts["errors"][r.error] = counts["errors"].get(r.error, 0) + 1
    keys = sorted({k for r in usable for k in r.residuals})
    maxres = {}
    for k in keys:
        vals = [r.residuals[k] for r in usable if r.residuals.get(k) is not None]
        maxres[k] = _fin(max(vals)) if vals else None

    deltas = np.array([r.delta for r in usable if r.delta is not None])
    variance = None
    if len(deltas):
        mean = deltas.mean(axis=0)
        variance = float(np.linalg.norm(deltas - mean, axis=1).max() / max(1.0, np.linalg.norm(mean)))

    agg = {
        "classification": "UNDETERMINED",
        "delta_variance": variance,
        "counts": counts,
        "max_residuals": maxres,
        "in_theorem_range": _in_range(codim, n),
        "n": n,
        "codim": codim,
        "assertions": {},
        "delta_mean": None,
        "dim_delta_range": None,
    }
    if usable:
        dd = [r.dim_delta for r in usable]
        agg["dim_delta_range"] = [min(dd), max(dd)]
    if len(usable) < MIN_POINTS:
        return agg
    # pipeline invariants at every classified point
    agg["assertions"]["flatness"] = bool(maxres.get("flat", 0.0) <= cfg.flat_tol)
    agg["assertions"]["a_f"] = bool(maxres.get("a_f", 0.0) <= 1e-8)
    all_deg2 = all(r.case == DEG_L and r.s == 2 for r in usable)
    all_s4 = all(r.s == 4 for r in usable)
    if all_deg2 and len(deltas) == len(usable):
        if variance <= cfg.var_tol:
            agg["classification"] = "CASE_I_REAL_KAEHLER"
            agg["delta_mean"] = [float(c) for c in deltas.mean(axis=0)]
            agg["assertions"]["a_delta"] = bool(maxres.get("a_delta", 0.0) <= 1e-6)
            if codim == 1:
                agg["assertions"]["dim_delta_2n_minus_2"] = all(r.dim_delta == 2 * n - 2 for r in usable)
        else:
            agg["classification"] = "CASE_II_COMPOSITION"
    elif all_s4:
        null_ok = maxres.get("nullity", np.inf) <= cfg.flat_tol
        rot_ok = maxres.get("rotation") is not None and maxres["rotation"] <= cfg.flat_tol
        agg["assertions"]["nullity"] = bool(null_ok)
        agg["assertions"]["rotation"] = bool(rot_ok)
        agg["classification"] = "MINIMAL_S4" if null_ok and rot_ok else "MIXED"
        if "source_mean_curvature" in maxres:
            agg["assertions"]["source_minimal"] = bool(maxres["source_mean_curvature"] <= 1e-8)
    else:
        agg["classification"] = "MIXED"
    return agg


@dataclass
class RunReport:
    config: dict
    points: list
    aggregate: dict
    version: str
    timing_ms: float

    def to_json(self):
        return {
            "config": self.config,
            "points": [p.to_json() for p in self.points],
            "aggregate": self.aggregate,
            "version": self.version,
            "timing_ms": self.timing_ms,
        }

    def dumps(self):
        return json.dumps(self.to_json(), sort_keys=True, indent=1)

    @property
    def classification(self):
        return self.aggregate["classification"]

    def failed_assertions(self):
        return sorted(k for k, v in self.aggregate.get("assertions", {}).items() if not v)


def analyze(config, points=None, example=None):
    """Run the pipeline over the sample grid and aggregate.

    ``points`` overrides the grid; ``example`` overrides the config's
    example (both are conveniences for tests).  Per-point failures are
    recorded, never raised.
    """
    t0 = time.perf_counter()
    cfg = config if isinstance(config, AnalysisConfig) else AnalysisConfig.from_dict(config)
    cfg.validate()
    e = build_from_config(cfg) if example is None else example
    try:
        rep = make_rep(e.patch, e.kaehler)
    except GeometryError as exc:
        raise GeometryError("GENERATION_FAILED", str(exc)) from exc
    X = sample_points(e.patch, int(cfg.grid), int(cfg.max_points), int(cfg.seed)) if points is None else np.atleast_2d(points)
    want_ref = e.codim == 2
    records = []
    for start in range(0, len(X), CHUNK):
        Xc = X[start : start + CHUNK]
        try:
            jet = rep.F.jet(Xc, 2)
        except GeometryError:
            jet = None
        ref_sffs = None
        if want_ref:
            try:
                ref_sffs = sff_batch(e.kaehler.reference, Xc)
            except GeometryError:
                ref_sffs = None
        for b, x in enumerate(Xc):
            try:
                j = jet[b : b + 1] if jet is not None else rep.F.jet(x[None], 2)
                sff = sff_from_jet(rep.F, x[None], j)[0]
            except GeometryError as exc:
                records.append(PointRecord(coords=list(map(float, x)), error=exc.code))
                continue
            rec, _ = point_record(x, sff, e.J, cfg, None if ref_sffs is None else ref_sffs[b])
            records.append(rec)
    agg = aggregate(records, e.n, e.codim, cfg)
    want = e.expected.get("classification")
    if want is not None:
        agg["expected_classification"] = want
        agg["assertions"]["expected_classification"] = agg["classification"] == want
    cfg_echo = cfg.to_dict()
    cfg_echo["resolved_example"] = e.name
    elapsed = (time.perf_counter() - t0) * 1000.0
    return RunReport(cfg_echo, records, agg, __version__, round(elapsed, 3))


# ---------------------------------------------------------------------------
# report schema

_num = {"type": ["number", "null"]}
_residuals = {
    "type": "object",
    "required": ["flat", "sff_radial"],
    "properties": {"flat": _num, "sff_radial": _num, "alpha1_sym": _num, "delta_orth": _num},
    "additionalProperties": _num,
}
REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["config", "points", "aggregate", "version", "timing_ms"],
    "properties": {
        "config": {"type": "object"},
        "points": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["coords", "s", "case", "dim_delta", "residuals", "delta", "flat_point", "error"],
                "properties": {
                    "coords": {"type": "array", "items": {"type": "number"}},
                    "s": {"type": ["integer", "null"]},
                    "case": {"enum": ["NONDEG_L", "DEG_L", None]},
                    "dim_delta": {"type": ["integer", "null"]},
                    "residuals": _residuals,
                    "delta": {"type": ["array", "null"], "items": {"type": "number"}},
                    "flat_point": {"type": "boolean"},
                    "error": {"type": ["string", "null"]},
                },
            },
        },
        "aggregate": {
            "type": "object",
            "required": ["classification", "delta_variance", "counts", "max_residuals"],
            "properties": {
                "classification": {"enum": list(CLASSIFICATIONS)},
                "delta_variance": _num,
                "counts": {"type": "object"},
                "max_residuals": {"type": "object"},
            },
        },
        "version": {"type": "string"},
        "timing_ms": {"type": "number"},
    },
}

CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "example": {"type": ["string", "null"]},
        "patch": {"type": ["object", "null"]},
        "n": {"type": ["integer", "null"]},
        "grid": {"type": "integer", "minimum": 2},
        "rank_tol": {"type": "number", "exclusiveMinimum": 0},
        "flat_tol": {"type": "number", "exclusiveMinimum": 0},
        "var_tol": {"type": "number", "exclusiveMinimum": 0},
        "seed": {"type": "integer", "minimum": 0},
        "out": {"type": ["string", "null"]},
        "max_points": {"type": "integer", "minimum": 1},
    },
    "additionalProperties": False,
}


def validate_report(doc):
    jsonschema.validate(doc, REPORT_SCHEMA)
