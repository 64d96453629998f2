"""Recovering a real Kaehler hypersurface hidden behind an inversion.

The catenoid cylinder ``(u, v, t) -> (catenoid(u, v), t)`` is an isometric
immersion of a Kaehler 4-fold into R^9.  After a unit inversion the map is
only conformal.  Its light-cone representative still carries a constant
light-like normal ``delta``, which marks it as Moebius equivalent to an
isometric immersion.

    python demos/real_kaehler_hypersurface.py
"""

import numpy as np

from conformal_kaehler import gallery
from conformal_kaehler.classifier import AnalysisConfig, analyze
from conformal_kaehler.lightcone import (
    congruence_defect,
    delta_detect,
    fake_delta,
    gauss_check_alpha_L,
    make_rep,
)
from conformal_kaehler.suites import metric_deviation

rng = np.random.default_rng(0)

plain = gallery.build_example("catenoid-cyl-n4")
inverted = gallery.build_example("inv-catenoid-cyl-n4")
X = rng.uniform(-1, 1, (40, plain.patch.dim))

lam = inverted.lam_values(X)
print(f"conformal factor of the inverted patch ranges over [{lam.min():.3f}, {lam.max():.3f}]")

rep = make_rep(inverted.patch, inverted.kaehler)
print(f"representative metric vs Kaehler metric: {metric_deviation(rep, X):.1e}")

d = delta_detect(rep, X)
print(f"constant light-like normal found by {d.method}, spread {d.variance:.1e}")
print(f"  |A_delta| = {d.A_delta_defect:.1e}, <delta,delta> = {d.null_defect:.1e}")

x = X[0]
print(f"Gauss equation of the L-component: {gauss_check_alpha_L(rep, d.delta, x):.1e}")
bad = fake_delta(rep, d.delta, x)
print(f"  ... with a perturbed light-like normal: {gauss_check_alpha_L(rep, bad, x):.1e}")

rep0 = make_rep(plain.patch, plain.kaehler)
print(f"congruence defect, plain vs inverted: {congruence_defect(rep0, rep, np.zeros(8), X):.1e}")

report = analyze(AnalysisConfig(example="inv-catenoid-cyl-n4", max_points=128))
agg = report.aggregate
print(f"classification: {agg['classification']} over {agg['counts']['classified']} points")
print(f"  dim Delta range {agg['dim_delta_range']}, delta variance {agg['delta_variance']:.1e}")
