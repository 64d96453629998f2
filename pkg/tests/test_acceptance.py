"""Acceptance criteria 1-11 at their stated tolerances.

Run with ``pytest tests/test_acceptance.py -v``; a ``criterion k: PASS|FAIL``
line per criterion is printed in the terminal summary.
"""

import numpy as np
import pytest

from conformal_kaehler import gallery
from conformal_kaehler.bilinear import DEG_L, flatness_defect, j_couple
from conformal_kaehler.classifier import AnalysisConfig, analyze, sample_points
from conformal_kaehler.immersion import curvature_at
from conformal_kaehler.lightcone import delta_detect, make_rep, normal_alpha, sff_radial_defect
from conformal_kaehler.suites import (
    Check,
    metric_deviation,
    suite_congruence,
    suite_costum,
    suite_psi,
    suite_roundtrip,
)

REP_EXAMPLES = (
    "catenoid-cyl-n2",
    "catenoid-cyl-n4",
    "catenoid-prod-n5",
    "holo-sumsq-n5",
    "inv-catenoid-cyl-n2",
    "inv-catenoid-cyl-n4",
    "inv-catenoid-prod-n5",
    "inv-holo-sumsq-n5",
)
FLAT_EXAMPLES = REP_EXAMPLES + (
    "enneper-cyl-n4",
    "inv-helicoid-cyl-n4",
    "holo-z1z2-n5",
    "inv-holo-z1z2-n5",
)
INVARIANCE_BASES = (
    "catenoid-cyl-n2",
    "catenoid-cyl-n4",
    "enneper-cyl-n4",
    "helicoid-cyl-n4",
    "catenoid-prod-n5",
    "holo-sumsq-n5",
    "holo-z1z2-n5",
)


def _uniform(patch, rng, k):
    return patch.lo + (patch.hi - patch.lo) * rng.random((k, patch.dim))


def _usable(report):
    return [p for p in report.points if not p.flat_point and p.error is None]


def _res(points, key):
    vals = [p.residuals.get(key) for p in points]
    return max(v for v in vals if v is not None)


def test_criterion_1_psi_identities(criterion):
    criterion(1, suite_psi(seed=0, count=1000).checks)


def test_criterion_2_isometric_representative(criterion):
    rng = np.random.default_rng(2)
    metric = radial = 0.0
    for eid in REP_EXAMPLES:
        e = gallery.build_example(eid)
        rep = make_rep(e.patch, e.kaehler)
        X = _uniform(e.patch, rng, 200)
        metric = max(metric, metric_deviation(rep, X))
        radial = max(radial, max(sff_radial_defect(s) for s in rep.sff(X)))
    criterion(2, [Check("metric deviation", metric, 1e-9), Check("sff radial residual", radial, 1e-6)])


def test_criterion_3_flatness_chain(criterion):
    rng = np.random.default_rng(3)
    worst = 0.0
    nonflat = 0
    for eid in FLAT_EXAMPLES:
        e = gallery.build_example(eid)
        rep = make_rep(e.patch, e.kaehler)
        for s in rep.sff(_uniform(e.patch, rng, 60)):
            if curvature_at(s).flat_point:
                continue
            nonflat += 1
            worst = max(worst, flatness_defect(j_couple(normal_alpha(s), e.J.matrix)))
    criterion(3, [Check("flatness of beta^F", worst, 1e-6), Check("non-flat points checked", nonflat, 1, "min")])


def test_criterion_4_kernel_bound(criterion):
    criterion(4, suite_costum(seed=0, count=1000).checks)


def test_criterion_5_structure_roundtrip(criterion):
    criterion(5, suite_roundtrip(seed=0, count=200).checks)


def test_criterion_6_hypersurface_case_i(criterion):
    r = analyze(AnalysisConfig(example="inv-catenoid-cyl-n4", grid=3, max_points=512))
    pts = _usable(r)
    agg = r.aggregate
    checks = [
        Check("classified non-flat points", len(pts), 200, "min"),
        Check("classification is CASE_I", float(r.classification == "CASE_I_REAL_KAEHLER"), 1.0, "eq"),
        Check("points with s != 2 or not DEG_L", sum(p.s != 2 or p.case != DEG_L for p in pts), 0, "eq"),
        Check("points with dim Delta != 6", sum(p.dim_delta != 6 for p in pts), 0, "eq"),
        Check("delta variance", agg["delta_variance"], 1e-6),
        Check("|A_delta|", _res(pts, "a_delta"), 1e-6),
        Check("|A_F + I|", _res(pts, "a_f"), 1e-8),
    ]
    criterion(6, checks)


def test_criterion_7_product_case_i(criterion):
    r = analyze(AnalysisConfig(example="inv-catenoid-prod-n5", grid=3, max_points=256))
    pts = _usable(r)
    checks = [
        Check("classification is CASE_I", float(r.classification == "CASE_I_REAL_KAEHLER"), 1.0, "eq"),
        Check("delta variance", r.aggregate["delta_variance"], 1e-6),
        Check("min dim Delta", min(p.dim_delta for p in pts), 6, "min"),
        Check("classified points", len(pts), 10, "min"),
    ]
    criterion(7, checks)


def test_criterion_8_minimal_s4(criterion):
    r = analyze(AnalysisConfig(example="inv-holo-sumsq-n5", grid=3, max_points=256))
    pts = _usable(r)
    checks = [
        Check("classification is MINIMAL_S4", float(r.classification == "MINIMAL_S4"), 1.0, "eq"),
        Check("points with s != 4", sum(p.s != 4 for p in pts), 0, "eq"),
        Check("nullity defect", _res(pts, "nullity"), 1e-6),
        Check("A_xi1 = J A_xi2 defect", _res(pts, "rotation"), 1e-6),
        Check("source mean curvature", _res(pts, "source_mean_curvature"), 1e-8),
        Check("classified points", len(pts), 10, "min"),
    ]
    criterion(8, checks)


def test_criterion_9_congruence(criterion):
    criterion(9, suite_congruence(seed=0, count=40).checks)


def test_criterion_10_no_constant_delta(criterion):
    var_tol = 1e-6
    e = gallery.build_example("zsq-annulus-n1")
    rep = make_rep(e.patch, e.kaehler)
    X = _uniform(e.patch, np.random.default_rng(10), 40)
    res = delta_detect(rep, X, var_tol, return_all=True)
    checks = [
        Check("returns none", float(res.delta is None), 1.0, "eq"),
        Check("variance / var_tol", res.variance / var_tol, 10.0, "min"),
    ]
    criterion(10, checks)


def test_criterion_11_moebius_invariance(criterion):
    mismatches = compared = classified = 0
    for base in INVARIANCE_BASES:
        e = gallery.build_example(base)
        X = sample_points(e.patch, 3, 24, 11)
        # the error code is compared too, so out-of-range points must fail alike
        key = lambda r: [(p.s, p.case, p.dim_delta, p.error) for p in r.points]
        ref = key(analyze(AnalysisConfig(example=base), points=X))
        for prefix in gallery.PREFIXES:
            got = key(analyze(AnalysisConfig(example=f"{prefix}-{base}"), points=X))
            compared += len(got)
            classified += sum(k[0] is not None for k in got)
            mismatches += sum(a != b for a, b in zip(ref, got))
    checks = [
        Check("per-point (s, case, dim Delta) mismatches", mismatches, 0, "eq"),
        Check("points compared", compared, len(INVARIANCE_BASES) * 4 * 24, "eq"),
        Check("classified points compared", classified, (len(INVARIANCE_BASES) - 1) * 4 * 24, "min"),
    ]
    criterion(11, checks)


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
