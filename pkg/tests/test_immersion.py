import numpy as np
import pytest

from conformal_kaehler import jets as jt
from conformal_kaehler.bilinear import ComplexStructure
from conformal_kaehler.errors import GeometryError
from conformal_kaehler.gallery import build_example
from conformal_kaehler.immersion import (
    ChartPatch,
    KaehlerChart,
    conformal_factor,
    curvature_at,
    kaehler_curvature_check,
    mean_curvature,
    metric_at,
    sff_at,
)
from conformal_kaehler.indefinite import GramSpace


def linear(A):
    x = jt.coords(A.shape[1])
    outs = []
    for i in range(A.shape[0]):
        e = jt.const(0.0)
        for j in range(A.shape[1]):
            e = e + A[i, j] * x[j]
        outs.append(e)
    return ChartPatch.from_exprs(outs, A.shape[1])


def catenoid():
    u, v = jt.coords(2)
    return ChartPatch.from_exprs([jt.cosh(v) * jt.cos(u), jt.cosh(v) * jt.sin(u), v], 2)


def sphere(r=1.0):
    th, ph = jt.coords(2)
    return ChartPatch.from_exprs([r * jt.cos(th) * jt.cos(ph), r * jt.cos(th) * jt.sin(ph), r * jt.sin(th)], 2)


# -- metric ----------------------------------------------------------------


def test_identity_metric():
    np.testing.assert_allclose(metric_at(linear(np.eye(3)), [0.1, 0.2, 0.3]), np.eye(3))


def test_dilation_metric():
    np.testing.assert_allclose(metric_at(linear(2 * np.eye(3)), [0.1, 0.2, 0.3]), 4 * np.eye(3))


def test_catenoid_metric_is_conformal():
    v = 0.6
    np.testing.assert_allclose(metric_at(catenoid(), [0.3, v]), np.cosh(v) ** 2 * np.eye(2), atol=1e-13)


def test_lorentzian_ambient_metric():
    x = jt.coords(2)
    p = ChartPatch(2, GramSpace.lorentzian(3), -1, 1, outputs=(x[0], x[1], jt.const(0.0)))
    np.testing.assert_allclose(metric_at(p, [0, 0]), np.eye(2))


def test_out_of_domain_point():
    with pytest.raises(GeometryError) as e:
        metric_at(catenoid(), [0.0, 1.5])
    assert e.value.code == "OUT_OF_DOMAIN"


def test_wrong_point_dimension():
    with pytest.raises(GeometryError) as e:
        metric_at(catenoid(), [0.0, 0.1, 0.2])
    assert e.value.code == "BAD_POINT"


def test_patch_json_roundtrip():
    p = catenoid()
    q = ChartPatch.from_json(p.to_json())
    x = np.array([[0.2, -0.4]])
    np.testing.assert_array_equal(p.jet(x, 2).coeff(2), q.jet(x, 2).coeff(2))


def test_jet_against_fd_on_gallery_patches():
    # 100 random points per patch, first derivatives within 1e-6 relative
    rng = np.random.default_rng(0)
    for eid in ("catenoid-cyl-n2", "inv-catenoid-cyl-n2", "inv-holo-sumsq-n2", "enneper-cyl-n2"):
        p = build_example(eid).patch
        X = p.lo + 0.1 + (p.hi - p.lo - 0.2) * rng.random((100, p.dim))
        j = p.jet(X, 1)
        for b in range(0, 100, 10):
            _, g, _ = jt.finite_difference(lambda x: p(x[None])[0], X[b], 1e-5)
            T = j.coeff(1)[b]
            assert np.abs(T - g).max() <= 1e-6 * max(1.0, np.abs(T).max())


# -- second fundamental form --------------------------------------------------


def test_plane_has_zero_sff():
    s = sff_at(linear(np.array([[1.0, 2.0], [0.0, 1.0], [3.0, -1.0]])), [0.1, 0.2])
    assert s.alpha_norm() <= 1e-15


def test_sphere_shape_operator():
    r = 2.0
    s = sff_at(sphere(r), [0.3, 0.5])
    ev = np.linalg.eigvals(s.shape_ops[0]).real
    np.testing.assert_allclose(np.abs(ev), [1 / r, 1 / r], atol=1e-12)


def test_catenoid_is_minimal():
    s = sff_at(catenoid(), [0.2, 0.7])
    assert np.abs(mean_curvature(s)).max() <= 1e-12


def test_catenoid_principal_curvatures():
    v = 0.4
    s = sff_at(catenoid(), [0.0, v])
    ev = np.sort(np.linalg.eigvals(s.shape_ops[0]).real)
    np.testing.assert_allclose(ev, [-1 / np.cosh(v) ** 2, 1 / np.cosh(v) ** 2], atol=1e-12)


def test_normal_frame_in_lorentzian_ambient():
    e = build_example("catenoid-cyl-n2")
    from conformal_kaehler.lightcone import make_rep

    s = make_rep(e.patch, e.kaehler).sff(np.array([[0.1, 0.2, 0.3, 0.4]]))[0]
    # normal space of F has signature (codim + 1, 1), positive directions first
    np.testing.assert_array_equal(np.diag(s.normal_gram), [1, 1, -1])
    G = s.ambient.gram
    assert np.abs(s.normal.T @ G @ s.tangent).max() <= 1e-12


# -- conformal factor -------------------------------------------------------


def test_conformal_factor_of_inversion():
    x = jt.coords(3)
    q = jt.norm2(x)
    inv = ChartPatch.from_exprs([xi / q for xi in x], 3, lo=0.5, hi=1.5)
    ident = linear(np.eye(3))
    ident = ChartPatch.from_exprs(list(ident.outputs), 3, lo=0.5, hi=1.5)
    p = np.array([0.7, 1.1, 0.9])
    lam, defect = conformal_factor(inv, ident, p)
    assert lam == pytest.approx(1 / (p @ p))
    assert defect <= 1e-12


def test_shear_is_not_conformal():
    with pytest.raises(GeometryError) as e:
        conformal_factor(linear(np.array([[1.0, 1.0], [0.0, 1.0]])), linear(np.eye(2)), [0.0, 0.0])
    assert e.value.code == "NOT_CONFORMAL"


# -- curvature --------------------------------------------------------------


def test_sphere_gauss_curvature():
    r = 1.5
    s = sff_at(sphere(r), [0.2, -0.3])
    c = curvature_at(s)
    assert c.R[0, 1, 1, 0] / np.linalg.det(s.metric) == pytest.approx(1 / r**2)
    assert c.symmetry_defect() <= 1e-12
    assert not c.flat_point


def test_cylinder_is_flat():
    u, t = jt.coords(2)
    s = sff_at(ChartPatch.from_exprs([jt.cos(u), jt.sin(u), t], 2), [0.3, 0.1])
    assert curvature_at(s).flat_point


def test_kaehler_check_on_gallery():
    e = build_example("catenoid-cyl-n2")
    s = sff_at(e.patch, [0.1, 0.3, -0.2, 0.4])
    assert kaehler_curvature_check(curvature_at(s), e.J) <= 1e-12


def test_kaehler_check_wrong_J():
    # pair each surface direction with a flat direction instead of its partner
    e = build_example("catenoid-cyl-n2")
    s = sff_at(e.patch, [0.1, 0.3, -0.2, 0.4])
    J = np.zeros((4, 4))
    J[2, 0], J[0, 2] = 1.0, -1.0
    J[3, 1], J[1, 3] = 1.0, -1.0
    assert kaehler_curvature_check(curvature_at(s), ComplexStructure(J)) > 0.1


def test_kaehler_chart_orthogonality():
    e = build_example("catenoid-cyl-n2")
    X = np.random.default_rng(0).uniform(-1, 1, (20, 4))
    assert e.kaehler.orthogonality_defect(X) <= 1e-12
    assert isinstance(e.kaehler, KaehlerChart)
