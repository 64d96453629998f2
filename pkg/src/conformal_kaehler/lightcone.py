"""The light-cone model of conformal geometry.

Euclidean ``R^m`` sits in the light cone of Lorentzian ``L^{m+2}`` through the
umbilical embedding ``Psi(x) = v + C x - |x|^2 w / 2``.  A conformal immersion
``f`` with conformal factor ``lambda`` has the isometric representative
``F = Psi(f) / lambda``, an isometric immersion of the reference metric into
the cone.  Moebius-equivalent immersions have representatives that differ
by a Lorentz transformation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from . import jets as jt
from .bilinear import BilinearForm, ComplexStructure, DEG_L, structure_decompose
from .errors import GeometryError
from .immersion import (
    ChartPatch,
    KaehlerChart,
    conformal_factor_batch,
    curvature_at,
    gauss_tensor,
    metric_batch,
    sff_at,
    sff_batch,
    sff_from_jet,
)
from .indefinite import GramSpace, null_partner

TRIPLE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class LightConeTriple:
    """Null vectors ``v, w`` with ``<v, w> = 1`` and an isometry ``C`` onto ``{v, w}^perp``."""

    m: int
    v: np.ndarray
    w: np.ndarray
    C: np.ndarray
    ambient: GramSpace

    def __post_init__(self):
        G = self.ambient.gram
        v, w, C = (np.asarray(a, dtype=float) for a in (self.v, self.w, self.C))
        if self.ambient.dim != self.m + 2 or C.shape != (self.m + 2, self.m):
            raise GeometryError("BAD_TRIPLE", "shapes do not match m")
        checks = [
            abs(v @ G @ v),
            abs(w @ G @ w),
            abs(v @ G @ w - 1.0),
            np.abs(C.T @ G @ C - np.eye(self.m)).max() if self.m else 0.0,
            np.abs(C.T @ G @ v).max() if self.m else 0.0,
            np.abs(C.T @ G @ w).max() if self.m else 0.0,
        ]
        scale = max(1.0, np.abs(v).max() * np.abs(w).max(), np.abs(C).max() ** 2 if self.m else 1.0)
        if max(checks) > 1e3 * TRIPLE_TOL * scale:
            raise GeometryError("BAD_TRIPLE", f"triple identities fail by {max(checks):.2e}")
        for name, a in (("v", v), ("w", w), ("C", C)):
            object.__setattr__(self, name, a)

    @classmethod
    def canonical(cls, m):
        """``v, w = (e_1 +- e_{m+2}) / sqrt 2`` and ``C`` onto coordinates ``2 .. m+1``."""
        D = m + 2
        v = np.zeros(D)
        w = np.zeros(D)
        v[0] = w[0] = 1 / np.sqrt(2)
        v[-1], w[-1] = 1 / np.sqrt(2), -1 / np.sqrt(2)
        C = np.zeros((D, m))
        C[1 : m + 1, :] = np.eye(m)
        return cls(m, v, w, C, GramSpace.lorentzian(D))

    def transformed(self, Lam):
        return LightConeTriple(self.m, Lam @ self.v, Lam @ self.w, Lam @ self.C, self.ambient)

    def psi_value(self, x):
        x = np.atleast_2d(x)
        return self.v + x @ self.C.T - 0.5 * np.sum(x * x, axis=1)[:, None] * self.w


def random_lorentz(D, rng, size=0.5):
    """A random element of the identity component of ``O(D-1, 1)``.

    ``exp`` of a random element of the Lie algebra (``G A`` antisymmetric,
    with ``G = diag(1, ..., 1, -1)``).
    """
    G = np.diag(np.r_[np.ones(D - 1), -1.0])
    S = rng.normal(size=(D, D)) * size
    S = S - S.T
    return expm(G @ S)


def psi(triple, lo=-1.0, hi=1.0):
    """The patch ``Psi : R^m -> L^{m+2}`` as an expression patch."""
    m = triple.m
    x = jt.coords(m)
    r2 = jt.norm2(x) if m else jt.const(0.0)
    outs = []
    for a in range(m + 2):
        e = jt.const(triple.v[a])
        for i in range(m):
            if triple.C[a, i] != 0.0:
                e = e + triple.C[a, i] * x[i]
        if triple.w[a] != 0.0:
            e = e - (0.5 * triple.w[a]) * r2
        outs.append(e)
    return ChartPatch.from_exprs(outs, m, triple.ambient, lo, hi, name="psi")


def psi_of_jet(triple, fj):
    """``Psi`` applied to a vector jet with batch shape ``(B, m)``."""
    r2 = (fj * fj).sum(axis=1).expand(1)
    lin = fj.contract(triple.C, axis=1)
    return lin + jt.Jet.constant(triple.v[None, :], fj.d, fj.order) - r2 * jt.Jet.constant(0.5 * triple.w[None, :], fj.d, fj.order)


def _trace_metric_jet(fj, gram):
    d = fj.d
    eta = np.diag(gram)
    if np.abs(gram - np.diag(eta)).max() > 0:
        raise GeometryError("BAD_GRAM", "trace-ratio factor needs a diagonal ambient Gram")
    tot = None
    for i in range(d):
        di = fj.deriv(i)
        t = (di * di * jt.Jet.constant(eta[None, :], d, di.order)).sum(axis=1)
        tot = t if tot is None else tot + t
    return tot


def lambda_jet(f, reference, X, order):
    """Jet of the conformal factor, from ``lambda^2 = tr G_f / tr G_ref``.

    Exact for conformal ``f`` (where ``G_f = lambda^2 G_ref``); the
    pointwise conformality is verified separately.
    """
    fj = f.jet(X, order + 1)
    rj = reference.jet(X, order + 1)
    lam2 = _trace_metric_jet(fj, f.ambient.gram) / _trace_metric_jet(rj, reference.ambient.gram)
    return lam2.sqrt(), fj


@dataclass(frozen=True, eq=False)
class LightConeRep:
    """Isometric light-cone representative ``F = Psi(f) / lambda``."""

    F: ChartPatch
    source: ChartPatch
    chart: KaehlerChart
    triple: LightConeTriple

    @property
    def n(self):
        return self.source.dim // 2

    @property
    def ambient(self):
        return self.triple.ambient

    def lam(self, X):
        lj, _ = lambda_jet(self.source, self.chart.reference, np.atleast_2d(X), 0)
        return lj.value

    def jet(self, X, order=2):
        return self.F.jet(X, order)

    def sff(self, X):
        return sff_batch(self.F, np.atleast_2d(X))


def make_rep(f, chart, triple=None, check_points=None, tol=1e-9):
    """Build the isometric light-cone representative of a conformal patch.

    ``chart`` supplies the reference metric.  Conformality is checked at
    ``check_points`` (default: the box centre and corners subsample) and a
    violation raises ``NOT_CONFORMAL``.
    """
    if triple is None:
        triple = LightConeTriple.canonical(f.ambient.dim)
    if triple.m != f.ambient.dim:
        raise GeometryError("BAD_TRIPLE", f"triple for R^{triple.m}, patch in R^{f.ambient.dim}")
    if not f.ambient.is_definite():
        raise GeometryError("BAD_GRAM", "source ambient must be Euclidean")
    ref = chart.reference
    if check_points is None:
        check_points = np.vstack([0.5 * (f.lo + f.hi), 0.75 * f.lo + 0.25 * f.hi, 0.25 * f.lo + 0.75 * f.hi])
    _, defect = conformal_factor_batch(f, ref, np.atleast_2d(check_points))
    if defect.max() > tol:
        raise GeometryError("NOT_CONFORMAL", f"relative defect {defect.max():.3e}")

    def jet_fn(X, order):
        lj, fj = lambda_jet(f, ref, X, order)
        P = psi_of_jet(triple, fj.truncate(order))
        return P * lj.reciprocal().expand(1)

    F = ChartPatch(f.dim, triple.ambient, f.lo, f.hi, jet_fn=jet_fn, name=f"rep({f.name})")
    return LightConeRep(F, f, chart, triple)


# ---------------------------------------------------------------------------
# checks on representatives


def sff_radial_defect(sff):
    """``max |<alpha(e_i,e_j), F> + G_ij|`` relative to ``max |G|``."""
    P = sff.pair(sff.value)
    return float(np.abs(P + sff.metric).max() / np.abs(sff.metric).max())


def sff_radial_check(rep, x):
    return sff_radial_defect(sff_at(rep.F, x))


def shape_op_F_defect(sff):
    """``|A_F + I|``: the shape operator along the position vector is ``-I``."""
    A = sff.shape_op(sff.value)
    return float(np.abs(A + np.eye(A.shape[0])).max())


def normal_alpha(sff):
    """``alpha`` as a :class:`BilinearForm` into the normal space."""
    return BilinearForm(sff.alpha, GramSpace(sff.normal_gram))


def decompose_point(sff, J, rank_tol=1e-8, flat_tol=1e-6):
    """Structure decomposition of ``alpha^F`` with ``F`` as the null-partner hint.

    Returns the report together with ``delta`` as an ambient vector.
    """
    hint = sff.normal_coords(sff.value)
    rep = structure_decompose(normal_alpha(sff), J, rank_tol, flat_tol, zeta_hint=hint)
    delta = None if rep.delta is None else sff.normal @ rep.delta
    return rep, delta


def _lsq_delta(sff):
    """Null normal ``delta`` with ``<F, delta> = 1`` minimizing ``|<alpha, delta>|``.

    In a two-dimensional normal space the answer is forced: the null
    partner of ``F``.  Otherwise least squares under the linear constraint.
    """
    Ng = sff.normal_gram
    fz = sff.normal_coords(sff.value)
    if sff.normal.shape[1] == 2:
        z = null_partner(fz, GramSpace(Ng), tol=1e-6)
        return sff.normal @ z
    M = np.einsum("ijk,kl->ijl", sff.alpha, Ng).reshape(-1, Ng.shape[0])
    c = Ng @ fz
    # minimize |M z|^2 subject to c.z = 1
    K = np.block([[2 * M.T @ M, c[:, None]], [c[None, :], np.zeros((1, 1))]])
    rhs = np.r_[np.zeros(len(c)), 1.0]
    z = np.linalg.lstsq(K, rhs, rcond=None)[0][:-1]
    return sff.normal @ z


@dataclass
class DeltaResult:
    delta: np.ndarray | None
    variance: float
    A_delta_defect: float
    null_defect: float
    pairing_defect: float
    per_point: np.ndarray
    method: str


def delta_field(rep, X, rank_tol=1e-8, flat_tol=1e-6, allow_fallback=True):
    """Per-point ``delta(x)`` (ambient coordinates) and the method used."""
    X = np.atleast_2d(X)
    sffs = rep.sff(X)
    J = rep.chart.J
    out = []
    method = "decomposition"
    for s in sffs:
        try:
            r, d = decompose_point(s, J, rank_tol, flat_tol)
            if r.case_tag != DEG_L:
                raise GeometryError("UNCLASSIFIED_POINT", f"case {r.case_tag}")
        except GeometryError as exc:
            if not allow_fallback:
                raise GeometryError("UNCLASSIFIED_POINT", str(exc)) from exc
            d = _lsq_delta(s)
            method = "least_squares"
        out.append(d)
    return np.array(out), sffs, method


def delta_detect(rep, X, tol=1e-6, rank_tol=1e-8, flat_tol=1e-6, allow_fallback=True, return_all=False):
    """Detect a constant light-like normal ``delta`` with ``<F, delta> = 1``.

    Returns ``None`` when the per-point directions vary by more than ``tol``
    (``max |delta(x) - mean| / max(1, |mean|)``), unless ``return_all``, in
    which case the :class:`DeltaResult` is returned with ``delta=None``.
    """
    D, sffs, method = delta_field(rep, X, rank_tol, flat_tol, allow_fallback)
    G = rep.ambient.gram
    mean = D.mean(axis=0)
    var = float(np.linalg.norm(D - mean, axis=1).max() / max(1.0, np.linalg.norm(mean)))
    A = max(float(np.abs(s.shape_op(d)).max()) for s, d in zip(sffs, D))
    null = float(np.abs(np.einsum("ba,ac,bc->b", D, G, D)).max())
    pair = float(np.abs(np.array([s.value @ G @ d for s, d in zip(sffs, D)]) - 1.0).max())
    res = DeltaResult(mean if var <= tol else None, var, A, null, pair, D, method)
    if res.delta is None and not return_all:
        return None
    return res


# ---------------------------------------------------------------------------
# congruence


def _frame(jet, b):
    cols = [jet.coeff(0)[b]]
    T = jet.coeff(1)[b]
    H = jet.coeff(2)[b]
    d = T.shape[1]
    cols += [T[:, i] for i in range(d)]
    cols += [H[:, i, j] for i in range(d) for j in range(i, d)]
    return np.column_stack(cols)


def congruence_map(repF, repG, base_point, tol=1e-8):
    """Linear map ``T`` with ``T F = G`` to second order at ``base_point``.

    Returns ``(T, lorentz_defect)``.
    """
    x0 = np.atleast_2d(base_point)
    A = _frame(repF.jet(x0, 2), 0)
    B = _frame(repG.jet(x0, 2), 0)
    GF, GG = repF.ambient.gram, repG.ambient.gram
    sA = np.linalg.svd(A, compute_uv=False)
    r = int(np.sum(sA > tol * sA[0]))
    if r < A.shape[0]:
        raise GeometryError("FRAME_DEGENERATE", f"2-jet frame spans {r} of {A.shape[0]} dimensions")
    T = B @ np.linalg.pinv(A)
    lor = float(np.abs(T.T @ GG @ T - GF).max() / max(1.0, np.abs(GF).max()))
    return T, lor


def congruence_defect(repF, repG, base_point, sample_points, metric_tol=1e-6, return_map=False):
    """Largest ``|T F(x) - G(x)| / (1 + |G(x)|)`` over samples.

    ``T`` is fixed by second-order contact at ``base_point``.  The induced
    metrics are compared first (``METRIC_MISMATCH``), and the Gram
    preservation defect of ``T`` is folded into the returned value.
    """
    X = np.atleast_2d(sample_points)
    Gf = metric_batch(repF.F, X)
    Gg = metric_batch(repG.F, X)
    mm = float((np.abs(Gf - Gg).max(axis=(1, 2)) / np.abs(Gf).max(axis=(1, 2))).max())
    if mm > metric_tol:
        raise GeometryError("METRIC_MISMATCH", f"induced metrics differ by {mm:.3e}")
    T, lor = congruence_map(repF, repG, base_point)
    F = repF.F(X)
    G = repG.F(X)
    d = float((np.linalg.norm(F @ T.T - G, axis=1) / (1.0 + np.linalg.norm(G, axis=1))).max())
    out = max(d, lor)
    if return_map:
        return out, T, lor
    return out


# ---------------------------------------------------------------------------
# Gauss equation of the L-component


def alpha_L(sff, delta):
    """``alpha_L = alpha^F + <,> delta``, the component in ``L = {delta, F}^perp``.

    Returned as ambient vectors ``(d, d, D)`` together with the defect of
    its values from ``L`` (pairings with ``delta`` and ``F``).
    """
    aL = sff.alpha_ambient + sff.metric[:, :, None] * np.asarray(delta)[None, None, :]
    G = sff.ambient.gram
    off = max(
        float(np.abs(aL @ G @ delta).max()),
        float(np.abs(aL @ G @ sff.value).max()),
    )
    return aL, off


def gauss_check_alpha_L(rep, delta, x, reference_sff=None):
    """Defect of the Gauss equation for ``alpha_L`` against the intrinsic curvature.

    The intrinsic curvature comes from the reference patch (an isometric
    immersion of the Kaehler metric).  The defect also includes how far the
    values of ``alpha_L`` leave ``{delta, F}^perp``; both are relative to
    ``max(1, |R|)`` and ``max(1, |alpha|)``.
    """
    if delta is None:
        raise GeometryError("NO_DELTA", "no constant light-like normal available")
    s = sff_at(rep.F, x)
    G = s.ambient.gram
    if abs(s.value @ G @ delta - 1.0) > 1e-6:
        raise GeometryError("NO_DELTA", "delta is not normalized by <F, delta> = 1")
    aL, off = alpha_L(s, delta)
    P = np.einsum("ija,ab,klb->ijkl", aL, G, aL)
    RL = P.transpose(0, 2, 3, 1) - P.transpose(0, 2, 1, 3)
    ref = sff_at(rep.chart.reference, x) if reference_sff is None else reference_sff
    R = curvature_at(ref).R
    scale_R = max(1.0, np.abs(R).max())
    scale_a = max(1.0, np.abs(aL).max())
    return float(max(np.abs(RL - R).max() / scale_R, off / scale_a))


def fake_delta(rep, delta, x, eps=1e-2):
    """A light-like normal ``delta + eps xi - eps^2 |xi|^2 F / 2`` still with ``<F, .> = 1``.

    ``xi`` is a unit space-like normal orthogonal to ``delta`` and ``F``; the
    result is a non-parallel perturbation used as a negative control.
    """
    s = sff_at(rep.F, x)
    G = s.ambient.gram
    F = s.value
    # delta and F form a hyperbolic pair, so this removes both components
    for k in range(s.normal.shape[1]):
        v = s.normal[:, k]
        xi = v - (v @ G @ F) * delta - (v @ G @ delta) * F
        nrm = xi @ G @ xi
        if nrm > 1e-6:
            return delta + eps * xi / np.sqrt(nrm) - 0.5 * eps**2 * F
    raise GeometryError("NO_DELTA", "no space-like normal orthogonal to delta and F")
