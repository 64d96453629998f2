import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conformal_kaehler.bilinear import (
    DEG_L,
    NONDEG_L,
    BilinearForm,
    ComplexStructure,
    SynthSpec,
    costum_verify,
    flatness_defect,
    j_couple,
    nullity_defect,
    span_and_kernel,
    structure_decompose,
    synth_flat,
)
from conformal_kaehler.errors import GeometryError
from conformal_kaehler.indefinite import GramSpace, rank, signature


def brute_flatness(beta):
    """Exhaustive 4-tuple loop, normalized like the library."""
    c, G = beta.coeffs, beta.target.gram
    n = c.shape[0]
    worst = 0.0
    for i, j, k, l in itertools.product(range(n), repeat=4):
        v = c[i, j] @ G @ c[k, l] - c[i, l] @ G @ c[k, j]
        worst = max(worst, abs(v))
    return worst / max(1.0, np.abs(c).max() ** 2)


def test_complex_structure_checked():
    with pytest.raises(GeometryError):
        ComplexStructure(np.eye(2))
    J = ComplexStructure.standard(4).matrix
    np.testing.assert_allclose(J @ J, -np.eye(4))


# -- flatness and nullity -------------------------------------------------------


def test_zero_form_flat_and_null():
    b = BilinearForm(np.zeros((3, 3, 2)), GramSpace.euclidean(2))
    assert flatness_defect(b) == 0.0
    assert nullity_defect(b) == 0.0


def test_rank_one_null_form_flat():
    rng = np.random.default_rng(0)
    phi, psi = rng.standard_normal(4), rng.standard_normal(4)
    xi = np.array([1.0, 0, 1.0])
    c = np.einsum("i,j,a->ija", phi, psi, xi)
    b = BilinearForm(c, GramSpace.lorentzian(3))
    assert flatness_defect(b) <= 1e-15
    assert nullity_defect(b) <= 1e-15


def test_metric_times_unit_vector_not_null():
    c = np.einsum("ij,a->ija", np.eye(3), np.array([1.0, 0.0]))
    b = BilinearForm(c, GramSpace.euclidean(2))
    assert nullity_defect(b) == pytest.approx(1.0)


@pytest.mark.parametrize("seed", range(5))
def test_synth_flatness_matches_brute_force(seed):
    a, J, _ = synth_flat(n=6, p=3, s=2, case_tag=DEG_L, seed=seed)
    b = j_couple(a, J)
    assert brute_flatness(b) <= 1e-12
    assert flatness_defect(b) == pytest.approx(brute_flatness(b), abs=1e-15)


def test_flatness_detects_generic_form():
    rng = np.random.default_rng(1)
    c = rng.standard_normal((4, 4, 3))
    b = BilinearForm(c, GramSpace.euclidean(3))
    assert flatness_defect(b) > 0.1


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_flatness_invariant_under_basis_changes(seed):
    rng = np.random.default_rng(seed)
    a, J, _ = synth_flat(n=8, p=3, s=2, case_tag=DEG_L, seed=seed)
    b = j_couple(a, J)
    Q, _ = np.linalg.qr(rng.standard_normal((8, 8)))
    P = rng.standard_normal((6, 6)) + 3 * np.eye(6)
    # new target basis: columns of P; coefficients transform by P^{-1}
    c = np.einsum("ai,bj,abc->ijc", Q, Q, b.coeffs)
    c = np.einsum("ca,ija->ijc", np.linalg.inv(P), c)
    b2 = BilinearForm(c, GramSpace(P.T @ b.target.gram @ P))
    assert flatness_defect(b2) <= 1e-10


# -- span and kernel ---------------------------------------------------------


def test_span_kernel_of_zero():
    b = BilinearForm(np.zeros((4, 4, 2)), GramSpace.euclidean(2))
    S, N = span_and_kernel(b)
    assert S.dim == 0
    assert N.shape[1] == 4


def test_kernel_contains_planted_subspace():
    rng = np.random.default_rng(2)
    c = np.zeros((6, 6, 3))
    c[:4, :4] = rng.standard_normal((4, 4, 3))
    b = BilinearForm(c, GramSpace.euclidean(3))
    _, N = span_and_kernel(b)
    E = np.eye(6)[:, 4:]
    # planted kernel is inside the computed one
    assert np.abs(E - N @ (N.T @ E)).max() < 1e-12


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 6), st.integers(1, 4), st.integers(1, 5))
def test_span_kernel_rank_oracle(seed, n, w, r):
    rng = np.random.default_rng(seed)
    # low-rank right factor gives a kernel of dimension n - min(r, n)
    R = rng.standard_normal((min(r, n), n))
    c = np.einsum("ika,kj->ija", rng.standard_normal((n, min(r, n), w)), R)
    b = BilinearForm(c, GramSpace.euclidean(w))
    S, N = span_and_kernel(b)
    assert S.dim == rank(c.reshape(-1, w))
    assert N.shape[1] == n - rank(c.transpose(0, 2, 1).reshape(-1, n))


# -- J-coupling ------------------------------------------------------------


def test_j_couple_zero():
    a = BilinearForm(np.zeros((2, 2, 1)), GramSpace.euclidean(1))
    b = j_couple(a, ComplexStructure.standard(2))
    assert np.all(b.coeffs == 0)


def test_j_couple_target_signature():
    a = BilinearForm(np.zeros((2, 2, 3)), GramSpace.euclidean(3))
    b = j_couple(a, ComplexStructure.standard(2))
    assert signature(b.target) == (3, 3, 0)
    a = BilinearForm(np.zeros((2, 2, 4)), GramSpace.lorentzian(4))
    assert signature(j_couple(a, ComplexStructure.standard(2)).target) == (4, 4, 0)


def test_j_couple_reads_back_alpha():
    a, J, _ = synth_flat(n=8, p=4, s=2, case_tag=DEG_L, seed=3)
    b = j_couple(a, J)
    np.testing.assert_array_equal(b.coeffs[:, :, :4], a.coeffs)
    np.testing.assert_allclose(b.coeffs[:, :, 4:], np.einsum("ikc,kj->ijc", a.coeffs, J.matrix))


def test_j_couple_rejects_asymmetric():
    c = np.zeros((2, 2, 1))
    c[0, 1, 0] = 1.0
    with pytest.raises(GeometryError) as e:
        j_couple(BilinearForm(c, GramSpace.euclidean(1)), ComplexStructure.standard(2))
    assert e.value.code == "NONSYMMETRIC_ALPHA"


def test_j_couple_symmetrizes_noise():
    c = np.zeros((2, 2, 1))
    c[0, 1, 0], c[1, 0, 0] = 1.0, 1.0 + 1e-12
    b = j_couple(BilinearForm(c, GramSpace.euclidean(1)), ComplexStructure.standard(2))
    assert b.coeffs[0, 1, 0] == b.coeffs[1, 0, 0]


# -- kernel bound ----------------------------------------------------------


def test_costum_zero_form():
    a = BilinearForm(np.zeros((6, 6, 2)), GramSpace.euclidean(2))
    r = costum_verify(a, ComplexStructure.standard(6))
    assert r.applicable and r.nondegenerate and r.satisfied and r.dim_N == 6


def test_costum_many_nondegenerate_instances():
    rng = np.random.default_rng(5)
    done = 0
    for seed in range(150):
        n = int(rng.choice([6, 8, 10, 12]))
        p = int(rng.integers(1, min(5, (n - 1) // 2) + 1))
        a, J, _ = synth_flat(n=n, p=p, s=0, case_tag=None, seed=seed, signature="mixed")
        r = costum_verify(a, J)
        assert r.applicable
        if r.nondegenerate:
            done += 1
            assert r.satisfied, r
    assert done == 150


def test_costum_degenerate_span_is_vacuous():
    a, J, _ = synth_flat(n=10, p=4, s=2, case_tag=DEG_L, seed=0)
    r = costum_verify(a, J)
    assert r.applicable and not r.nondegenerate


def test_costum_out_of_range():
    a, J, _ = synth_flat(n=6, p=3, s=0, case_tag=None, seed=0)
    assert not costum_verify(a, J).applicable


def test_costum_not_flat():
    rng = np.random.default_rng(0)
    c = rng.standard_normal((6, 6, 2))
    c = c + c.transpose(1, 0, 2)
    with pytest.raises(GeometryError) as e:
        costum_verify(BilinearForm(c, GramSpace.euclidean(2)), ComplexStructure.standard(6))
    assert e.value.code == "NOT_FLAT"


# -- structure decomposition ------------------------------------------------------


def _delta_err(r, planted):
    x = r.delta / np.linalg.norm(r.delta)
    y = planted.delta / np.linalg.norm(planted.delta)
    return min(np.linalg.norm(x - y), np.linalg.norm(x + y))


@pytest.mark.parametrize(
    "n,p,s",
    [(10, 4, 2), (12, 5, 4), (10, 4, 4), (12, 5, 2)],
)
def test_decompose_deg_l_roundtrip(n, p, s):
    for seed in range(5):
        a, J, planted = synth_flat(n=n, p=p, s=s, case_tag=DEG_L, seed=seed)
        r = structure_decompose(a, J)
        assert (r.case_tag, r.s) == (DEG_L, s)
        assert _delta_err(r, planted) <= 1e-6
        assert r.dim_Delta == planted.dim_Delta >= n - 2 * (p - s)
        assert r.alpha1_symmetry_defect <= 1e-8
        assert r.delta_orthogonality_defect <= 1e-8
        G = a.target.gram
        assert abs(r.delta @ G @ r.delta) <= 1e-10
        assert r.delta @ G @ r.zeta == pytest.approx(1.0)
        assert r.U1_basis.dim == s - 2 and r.U2_basis.dim == p - s


@pytest.mark.parametrize("n,p,s,sig", [(12, 5, 2, "lorentzian"), (12, 5, 4, "definite"), (8, 3, 2, "definite")])
def test_decompose_nondeg_l_roundtrip(n, p, s, sig):
    for seed in range(5):
        a, J, planted = synth_flat(n=n, p=p, s=s, case_tag=NONDEG_L, seed=seed, signature=sig)
        r = structure_decompose(a, J)
        assert (r.case_tag, r.s) == (NONDEG_L, s)
        assert r.L_basis.dim == s
        assert np.all(np.linalg.eigvalsh(r.L_basis.restricted_gram()) > 0)
        assert r.dim_Delta == planted.dim_Delta
        assert r.alpha1_symmetry_defect <= 1e-8


def test_decompose_pure_algebra_delta_normalization():
    a, J, _ = synth_flat(n=10, p=4, s=2, case_tag=DEG_L, seed=7)
    d = structure_decompose(a, J).delta
    assert np.linalg.norm(d) == pytest.approx(1.0)
    assert d[np.flatnonzero(np.abs(d) > 1e-6)[0]] > 0


def test_decompose_zero_form():
    a = BilinearForm(np.zeros((10, 10, 4)), GramSpace.lorentzian(4))
    with pytest.raises(GeometryError) as e:
        structure_decompose(a, ComplexStructure.standard(10))
    assert e.value.code == "NULLITY_TOO_LARGE"


def test_decompose_bad_signature():
    G = np.diag([1.0, 1.0, -1.0, -1.0])
    a = BilinearForm(np.zeros((10, 10, 4)), GramSpace(G))
    with pytest.raises(GeometryError) as e:
        structure_decompose(a, ComplexStructure.standard(10))
    assert e.value.code == "BAD_SIGNATURE"


def test_decompose_not_flat():
    rng = np.random.default_rng(0)
    c = rng.standard_normal((10, 10, 4))
    c = c + c.transpose(1, 0, 2)
    with pytest.raises(GeometryError) as e:
        structure_decompose(BilinearForm(c, GramSpace.lorentzian(4)), ComplexStructure.standard(10))
    assert e.value.code == "NOT_FLAT"


# -- generator --------------------------------------------------------------


def test_synth_odd_s_rejected():
    with pytest.raises(GeometryError) as e:
        synth_flat(n=10, p=4, s=3, case_tag=DEG_L)
    assert e.value.code == "INCONSISTENT_SPEC"


def test_synth_deterministic():
    a1, J1, _ = synth_flat(SynthSpec(n=10, p=4, s=2, case_tag=DEG_L, seed=11))
    a2, J2, _ = synth_flat(SynthSpec(n=10, p=4, s=2, case_tag=DEG_L, seed=11))
    np.testing.assert_array_equal(a1.coeffs, a2.coeffs)
    np.testing.assert_array_equal(J1.matrix, J2.matrix)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1), st.sampled_from([(10, 4, 2), (12, 5, 4), (12, 5, 2)]))
def test_synth_always_flat(seed, nps):
    n, p, s = nps
    a, J, _ = synth_flat(n=n, p=p, s=s, case_tag=DEG_L, seed=seed)
    assert flatness_defect(j_couple(a, J)) <= 1e-12
