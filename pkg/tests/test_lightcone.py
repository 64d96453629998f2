import numpy as np
import pytest

from conformal_kaehler.bilinear import DEG_L
from conformal_kaehler.errors import GeometryError
from conformal_kaehler.gallery import build_example
from conformal_kaehler.immersion import sff_at
from conformal_kaehler.indefinite import GramSpace
from conformal_kaehler.lightcone import (
    LightConeTriple,
    congruence_defect,
    decompose_point,
    delta_detect,
    fake_delta,
    gauss_check_alpha_L,
    make_rep,
    psi,
    random_lorentz,
    sff_radial_defect,
    shape_op_F_defect,
)
from conformal_kaehler.suites import metric_deviation


def rep_of(eid, triple=None):
    e = build_example(eid)
    return make_rep(e.patch, e.kaehler, triple), e


def test_canonical_triple_values():
    t = LightConeTriple.canonical(2)
    np.testing.assert_allclose(t.psi_value(np.zeros(2))[0], t.v)


def test_bad_triple():
    t = LightConeTriple.canonical(2)
    with pytest.raises(GeometryError) as e:
        LightConeTriple(2, t.v, t.v, t.C, t.ambient)
    assert e.value.code == "BAD_TRIPLE"


def test_transformed_triple_is_valid():
    t = LightConeTriple.canonical(3)
    L = random_lorentz(5, np.random.default_rng(0))
    G = t.ambient.gram
    assert np.abs(L.T @ G @ L - G).max() <= 1e-12
    t.transformed(L)


def test_psi_pairing_identity():
    t = LightConeTriple.canonical(3)
    P = psi(t, -2, 2)
    x, y = np.array([0.1, 0.5, -1.0]), np.array([1.0, -0.3, 0.2])
    a, b = P(x[None])[0], P(y[None])[0]
    assert a @ t.ambient.gram @ b == pytest.approx(-0.5 * np.sum((x - y) ** 2))


def test_psi_is_umbilical():
    t = LightConeTriple.canonical(4)
    s = sff_at(psi(t), np.array([0.2, -0.1, 0.3, 0.0]))
    np.testing.assert_allclose(s.alpha_ambient, -np.einsum("ij,a->ija", np.eye(4), t.w), atol=1e-12)


def test_isometric_rep_is_psi():
    rep, e = rep_of("catenoid-cyl-n2")
    X = np.array([[0.1, -0.2, 0.3, 0.4]])
    np.testing.assert_allclose(rep.F(X), rep.triple.psi_value(e.patch(X)), atol=1e-14)
    np.testing.assert_allclose(rep.lam(X), [1.0])


def test_inversion_rep_closed_form():
    # the unit inversion h has lambda = 1/|y|^2, so F = |y|^2 Psi(h(y)) = |y|^2 v + C y - w/2
    rep, e = rep_of("inv-catenoid-cyl-n2")
    base = build_example("catenoid-cyl-n2").patch
    X = np.random.default_rng(0).uniform(-1, 1, (5, 4))
    Y = base(X)
    t = rep.triple
    want = np.sum(Y * Y, axis=1)[:, None] * t.v + Y @ t.C.T - 0.5 * t.w
    np.testing.assert_allclose(rep.F(X), want, atol=1e-12)


@pytest.mark.parametrize("eid", ["catenoid-cyl-n2", "inv-catenoid-cyl-n4", "inv-catenoid-prod-n5", "inv-holo-sumsq-n5"])
def test_rep_isometric_and_radial(eid):
    rep, e = rep_of(eid)
    X = e.patch.lo + (e.patch.hi - e.patch.lo) * np.random.default_rng(1).random((20, e.patch.dim))
    assert metric_deviation(rep, X) <= 1e-9
    for s in rep.sff(X):
        assert sff_radial_defect(s) <= 1e-6
        assert shape_op_F_defect(s) <= 1e-8


def test_make_rep_rejects_nonconformal():
    e = build_example("catenoid-cyl-n2")
    wrong = build_example("catenoid-cyl-n2").patch
    from conformal_kaehler import jets as jt
    from conformal_kaehler.immersion import ChartPatch, KaehlerChart

    x = jt.coords(4)
    sheared = ChartPatch.from_exprs([x[0] + x[1], x[1], x[2], x[3], jt.const(0.0)], 4)
    with pytest.raises(GeometryError) as exc:
        make_rep(sheared, KaehlerChart(wrong, e.J))
    assert exc.value.code == "NOT_CONFORMAL"


# -- delta ----------------------------------------------------------------


def test_isometric_delta_is_w():
    rep, e = rep_of("catenoid-cyl-n4")
    X = np.random.default_rng(2).uniform(-1, 1, (10, 8))
    d = delta_detect(rep, X)
    np.testing.assert_allclose(d.delta, rep.triple.w, atol=1e-10)


def test_decompose_point_deg_l():
    rep, e = rep_of("inv-catenoid-cyl-n4")
    s = rep.sff(np.full((1, 8), 0.3))[0]
    r, delta = decompose_point(s, e.J)
    assert (r.case_tag, r.s, r.dim_Delta) == (DEG_L, 2, 6)
    G = s.ambient.gram
    assert abs(delta @ G @ delta) <= 1e-10
    assert delta @ G @ s.value == pytest.approx(1.0)


def test_zsq_has_no_constant_delta():
    rep, e = rep_of("zsq-annulus-n1")
    X = e.patch.lo + (e.patch.hi - e.patch.lo) * np.random.default_rng(3).random((30, 2))
    assert delta_detect(rep, X) is None
    res = delta_detect(rep, X, return_all=True)
    assert res.variance >= 10 * 1e-6
    assert res.method == "least_squares"


def test_gauss_check_and_fake_delta():
    rep, e = rep_of("inv-catenoid-cyl-n4")
    X = np.random.default_rng(4).uniform(-1, 1, (10, 8))
    d = delta_detect(rep, X)
    x = X[0]
    assert gauss_check_alpha_L(rep, d.delta, x) <= 1e-6
    assert gauss_check_alpha_L(rep, fake_delta(rep, d.delta, x), x) >= 1e-4


def test_gauss_check_without_delta():
    rep, _ = rep_of("catenoid-cyl-n2")
    with pytest.raises(GeometryError) as e:
        gauss_check_alpha_L(rep, None, np.zeros(4))
    assert e.value.code == "NO_DELTA"


# -- congruence ----------------------------------------------------------------


def test_congruence_of_moebius_pair():
    a, e = rep_of("catenoid-cyl-n2")
    b, _ = rep_of("inv-catenoid-cyl-n2")
    X = np.random.default_rng(5).uniform(-1, 1, (20, 4))
    d, T, lor = congruence_defect(a, b, np.zeros(4), X, return_map=True)
    assert d <= 1e-6
    G = a.ambient.gram
    assert np.abs(T.T @ G @ T - G).max() <= 1e-6


def test_congruence_metric_mismatch():
    a, _ = rep_of("catenoid-cyl-n2")
    b, _ = rep_of("holo-sumsq-n2")
    X = np.random.default_rng(6).uniform(-1, 1, (10, 4))
    with pytest.raises(GeometryError) as e:
        congruence_defect(a, b, np.zeros(4), X)
    assert e.value.code == "METRIC_MISMATCH"


def test_isometric_but_not_congruent():
    # catenoid and helicoid share their induced metric but differ extrinsically
    a, _ = rep_of("catenoid-cyl-n2")
    b, _ = rep_of("helicoid-cyl-n2")
    X = np.random.default_rng(6).uniform(-1, 1, (10, 4))
    assert congruence_defect(a, b, np.zeros(4), X) >= 0.1


def test_triple_independence():
    rng = np.random.default_rng(7)
    a, e = rep_of("catenoid-cyl-n2")
    t2 = a.triple.transformed(random_lorentz(a.ambient.dim, rng))
    b = make_rep(e.patch, e.kaehler, t2)
    X = rng.uniform(-1, 1, (10, 4))
    assert congruence_defect(a, b, np.zeros(4), X) <= 1e-8


def test_ambient_is_lorentzian():
    a, _ = rep_of("catenoid-cyl-n2")
    assert isinstance(a.ambient, GramSpace) and a.ambient.is_lorentzian()
