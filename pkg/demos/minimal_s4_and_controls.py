"""The s = 4 stratum and two negative controls.

A holomorphic graph ``z -> (z, sum z_k^2)`` in C^6 is minimal and real
Kaehler in codimension two.  Its inversion image lands in the stratum where
the J-coupled second fundamental form has a four-dimensional light-like
part.  The holomorphic map ``z -> z^2`` on a flat annulus shows what happens
when no constant light-like normal exists.

    python demos/minimal_s4_and_controls.py
"""

import numpy as np

from conformal_kaehler import gallery
from conformal_kaehler.classifier import AnalysisConfig, analyze
from conformal_kaehler.lightcone import congruence_defect, delta_detect, make_rep

report = analyze(AnalysisConfig(example="inv-holo-sumsq-n5", max_points=64))
agg = report.aggregate
res = agg["max_residuals"]
print(f"inv-holo-sumsq-n5: {agg['classification']}, s counts {agg['counts']['by_s']}")
print(f"  nullity {res['nullity']:.1e}, rotation A1 = J A2 {res['rotation']:.1e}")
print(f"  mean curvature of the undeformed graph {res['source_mean_curvature']:.1e}")

rng = np.random.default_rng(1)
plane = gallery.build_example("plane-annulus-n1")
zsq = gallery.build_example("zsq-annulus-n1")
X = plane.patch.lo + (plane.patch.hi - plane.patch.lo) * rng.random((40, 2))
rp, rz = make_rep(plane.patch, plane.kaehler), make_rep(zsq.patch, zsq.kaehler)

# both representatives are isometric to the flat annulus, yet not congruent
print(f"identity vs z^2 congruence defect: {congruence_defect(rp, rz, np.array([1.25, 0.0]), X):.2f}")
d = delta_detect(rz, X, return_all=True)
print(f"z^2 light-like normal spread: {d.variance:.2e} (constant? {d.delta is not None})")
