"""Immersion patches and their first and second fundamental forms.

A :class:`ChartPatch` maps a box in ``R^d`` into an ambient
:class:`~conformal_kaehler.indefinite.GramSpace`.  Its derivatives come from
jet evaluation (see :mod:`conformal_kaehler.jets`), either of an expression
DAG or of a user supplied jet function.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import jets as jt
from .bilinear import ComplexStructure
from .errors import GeometryError
from .indefinite import GramSpace, null_space

METRIC_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class ChartPatch:
    """Smooth parametrized patch ``f : box in R^d -> ambient``.

    Exactly one of ``outputs`` (expression DAG, one node per ambient
    coordinate) and ``jet_fn`` (callable ``(X, order) -> Jet`` with batch
    shape ``(B, D)``) is given.
    """

    dim: int
    ambient: GramSpace
    lo: np.ndarray
    hi: np.ndarray
    outputs: tuple | None = None
    jet_fn: Callable | None = None
    name: str = ""

    def __post_init__(self):
        lo = np.broadcast_to(np.asarray(self.lo, dtype=float), (self.dim,)).copy()
        hi = np.broadcast_to(np.asarray(self.hi, dtype=float), (self.dim,)).copy()
        if np.any(hi < lo):
            raise GeometryError("BAD_DOMAIN", "box with hi < lo")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        if (self.outputs is None) == (self.jet_fn is None):
            raise GeometryError("BAD_PATCH", "give exactly one of outputs and jet_fn")
        if self.outputs is not None:
            outs = tuple(self.outputs)
            if len(outs) != self.ambient.dim:
                raise GeometryError("BAD_PATCH", f"{len(outs)} outputs for a {self.ambient.dim}-dim ambient")
            object.__setattr__(self, "outputs", outs)

    @classmethod
    def from_exprs(cls, outputs, dim, ambient=None, lo=-1.0, hi=1.0, name=""):
        ambient = GramSpace.euclidean(len(outputs)) if ambient is None else ambient
        return cls(dim, ambient, lo, hi, outputs=tuple(outputs), name=name)

    @property
    def codim(self):
        return self.ambient.dim - self.dim

    def in_domain(self, X, slack=1e-12):
        X = np.atleast_2d(X)
        return np.all((X >= self.lo - slack) & (X <= self.hi + slack), axis=1)

    def jet(self, X, order=2):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.dim:
            raise GeometryError("BAD_POINT", f"expected {self.dim} coordinates, got {X.shape[1]}")
        if not np.all(self.in_domain(X)):
            raise GeometryError("OUT_OF_DOMAIN", "point outside the chart box")
        if self.outputs is not None:
            return jt.evaluate(list(self.outputs), X, order)
        return self.jet_fn(X, order)

    def __call__(self, X):
        return self.jet(X, 0).value

    def to_json(self):
        if self.outputs is None:
            raise GeometryError("NOT_SERIALIZABLE", "patch is defined by a jet function")
        desc = jt.to_json(list(self.outputs), self.dim)
        desc.update(
            name=self.name,
            ambient_gram=self.ambient.gram.tolist(),
            lo=self.lo.tolist(),
            hi=self.hi.tolist(),
        )
        return desc

    @classmethod
    def from_json(cls, desc):
        outputs, dim = jt.from_json(desc)
        gram = desc.get("ambient_gram")
        ambient = GramSpace.euclidean(len(outputs)) if gram is None else GramSpace(np.array(gram, dtype=float))
        return cls(dim, ambient, desc.get("lo", -1.0), desc.get("hi", 1.0), outputs=tuple(outputs), name=desc.get("name", ""))


@dataclass(frozen=True, eq=False)
class KaehlerChart:
    """A chart with constant complex structure and a reference Kaehler metric.

    The reference metric is the pullback metric of ``reference`` (an
    isometric patch of the Kaehler manifold); ``J`` acts on chart
    coordinates.
    """

    reference: ChartPatch
    J: ComplexStructure

    def metric(self, X):
        return metric_batch(self.reference, X)

    def orthogonality_defect(self, X):
        G = self.metric(X)
        Jm = self.J.matrix
        D = np.einsum("ki,bkl,lj->bij", Jm, G, Jm) - G
        return float((np.abs(D).max(axis=(1, 2)) / np.abs(G).max(axis=(1, 2))).max())


# ---------------------------------------------------------------------------
# first and second fundamental forms


def metric_batch(patch, X, jet=None):
    """Pullback metrics at every row of ``X``: ``(B, d, d)``."""
    j = patch.jet(X, 1) if jet is None else jet
    T = j.coeff(1)
    return np.einsum("bai,ac,bcj->bij", T, patch.ambient.gram, T)


def metric_at(patch, x):
    """``G_ij = <d_i f, d_j f>`` at a single point."""
    return metric_batch(patch, np.atleast_2d(x))[0]


@dataclass
class SFFData:
    """Second-order data of a patch at one point.

    ``alpha[i, j]`` holds the coordinates of ``alpha(e_i, e_j)`` in the
    normal frame (columns of ``normal``); ``normal_gram`` is the restricted
    ambient Gram matrix of that frame (diagonal with entries +-1).
    ``shape_ops[k]`` is the shape operator of the ``k``-th frame vector as a
    ``d x d`` matrix acting on chart coordinates.
    """

    point: np.ndarray
    value: np.ndarray
    tangent: np.ndarray
    metric: np.ndarray
    normal: np.ndarray
    normal_gram: np.ndarray
    alpha: np.ndarray
    shape_ops: np.ndarray
    ambient: GramSpace = field(repr=False)

    @property
    def alpha_ambient(self):
        return np.einsum("ijk,ak->ija", self.alpha, self.normal)

    def normal_coords(self, x):
        """Frame coordinates of the normal component of ambient vector ``x``."""
        y = self.normal.T @ self.ambient.gram @ np.asarray(x, dtype=float)
        return np.linalg.solve(self.normal_gram, y)

    def pair(self, xi):
        """``<alpha(e_i, e_j), xi>`` for an ambient vector ``xi``."""
        return np.einsum("ija,ab,b->ij", self.alpha_ambient, self.ambient.gram, xi)

    def shape_op(self, xi):
        """Shape operator ``A_xi`` (chart coordinates) of an ambient normal ``xi``."""
        return np.linalg.solve(self.metric, self.pair(xi))

    def alpha_norm(self):
        return float(np.abs(self.alpha).max()) if self.alpha.size else 0.0


def _normal_frame(T, G_amb, tol):
    N = null_space(T.T @ G_amb, tol)
    if N.shape[1] == 0:
        return N, np.zeros((0, 0))
    M = N.T @ G_amb @ N
    w, V = np.linalg.eigh(M)
    if np.any(np.abs(w) <= tol * max(np.abs(G_amb).max(), 1.0)):
        raise GeometryError("NORMAL_DEGENERATE", "normal space is degenerate")
    order = np.argsort(-w, kind="stable")
    w, V = w[order], V[:, order]
    frame = N @ V / np.sqrt(np.abs(w))
    return frame, np.diag(np.sign(w))


def sff_from_jet(patch, X, jet, tol=1e-10):
    """:class:`SFFData` for every row of ``X`` from a precomputed order-2 jet."""
    G_amb = patch.ambient.gram
    vals, T_all, H_all = jet.coeff(0), jet.coeff(1), jet.coeff(2)
    out = []
    for b in range(X.shape[0]):
        T = T_all[b]
        G = T.T @ G_amb @ T
        ev = np.linalg.eigvalsh(G)
        if ev[0] <= tol * max(ev[-1], 1e-300):
            raise GeometryError("TANGENT_DEGENERATE", "pullback metric is not positive definite")
        Nf, Ng = _normal_frame(T, G_amb, tol)
        H = H_all[b]
        # normal frame is pseudo-orthonormal, so coordinates are Ng * pairings
        pairs = np.einsum("aij,ac,ck->ijk", H, G_amb, Nf)
        alpha = pairs * np.diag(Ng)
        alpha = 0.5 * (alpha + alpha.transpose(1, 0, 2))
        shape_ops = np.stack([np.linalg.solve(G, pairs[:, :, k]) for k in range(Nf.shape[1])]) if Nf.shape[1] else np.zeros((0, patch.dim, patch.dim))
        out.append(SFFData(X[b].copy(), vals[b].copy(), T.copy(), G, Nf, Ng, alpha, shape_ops, patch.ambient))
    return out


def sff_batch(patch, X):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    return sff_from_jet(patch, X, patch.jet(X, 2))


def sff_at(patch, x):
    """Second fundamental form, normal frame and shape operators at ``x``."""
    return sff_batch(patch, np.atleast_2d(x))[0]


def mean_curvature(sff):
    """Frame coordinates of ``trace_G alpha``."""
    Ginv = np.linalg.inv(sff.metric)
    return np.einsum("ij,ijk->k", Ginv, sff.alpha)


# ---------------------------------------------------------------------------
# conformal factor


def conformal_factor(patch, reference, x, tol=METRIC_TOL):
    """``(lambda, defect)`` with ``G_f ~ lambda^2 G_ref`` at ``x``.

    ``reference`` is a :class:`KaehlerChart` or a patch whose pullback metric
    is the reference metric.  Raises ``NOT_CONFORMAL`` when the relative
    deviation exceeds ``tol``.
    """
    lam, defect = conformal_factor_batch(patch, reference, np.atleast_2d(x))
    if defect[0] > tol:
        raise GeometryError("NOT_CONFORMAL", f"relative defect {defect[0]:.3e}")
    return float(lam[0]), float(defect[0])


def conformal_factor_batch(patch, reference, X):
    ref = reference.reference if isinstance(reference, KaehlerChart) else reference
    Gf = metric_batch(patch, X)
    Gr = metric_batch(ref, X)
    d = Gf.shape[-1]
    lam2 = np.trace(np.linalg.solve(Gr, Gf), axis1=1, axis2=2) / d
    if np.any(lam2 <= 0):
        raise GeometryError("NOT_CONFORMAL", "pullback metric is not positive")
    diff = Gf - lam2[:, None, None] * Gr
    defect = np.linalg.norm(diff, axis=(1, 2)) / np.linalg.norm(lam2[:, None, None] * Gr, axis=(1, 2))
    return np.sqrt(lam2), defect


# ---------------------------------------------------------------------------
# curvature


@dataclass
class Curvature:
    """Covariant curvature ``R[i, j, k, l] = R(e_i, e_j, e_k, e_l)``."""

    R: np.ndarray
    metric: np.ndarray
    flat_point: bool
    scale: float

    def endomorphisms(self):
        """``E[i, j]`` is the matrix of ``Z -> R(e_i, e_j) Z`` on chart coordinates."""
        Ginv = np.linalg.inv(self.metric)
        # <R(X,Y)Z, T> = R(X,Y,Z,T): raise the last index
        return np.einsum("ijkm,lm->ijlk", self.R, Ginv)

    def symmetry_defect(self):
        R = self.R
        s = max(np.abs(R).max(), 1e-300)
        d = [
            np.abs(R + R.transpose(1, 0, 2, 3)).max(),
            np.abs(R + R.transpose(0, 1, 3, 2)).max(),
            np.abs(R - R.transpose(2, 3, 0, 1)).max(),
            np.abs(R + R.transpose(1, 2, 0, 3) + R.transpose(2, 0, 1, 3)).max(),
        ]
        return float(max(d) / s)


def gauss_tensor(alpha, normal_gram):
    """``<a(X,T),a(Y,Z)> - <a(X,Z),a(Y,T)>`` for a normal-valued ``alpha``."""
    P = np.einsum("ija,ab,klb->ijkl", alpha, normal_gram, alpha)
    return P.transpose(0, 2, 3, 1) - P.transpose(0, 2, 1, 3)


def curvature_at(sff, tol=1e-6):
    """Curvature tensor from the Gauss equation; flags flat points.

    A point is flat when ``max|R| <= tol * max|alpha|^2`` (with
    ``max|alpha|`` measured in the pseudo-orthonormal normal frame).
    """
    R = gauss_tensor(sff.alpha, sff.normal_gram)
    a = sff.alpha_norm()
    scale = a * a
    flat = bool(np.abs(R).max() <= tol * scale) if scale > 0 else True
    return Curvature(R, sff.metric, flat, scale)


def kaehler_curvature_check(curv, J):
    """``max_ij |J R(e_i,e_j) - R(e_i,e_j) J|`` relative to ``max |R(e_i,e_j)|``."""
    Jm = J.matrix if isinstance(J, ComplexStructure) else np.asarray(J, dtype=float)
    E = curv.endomorphisms()
    s = np.abs(E).max()
    if s == 0:
        return 0.0
    C = np.einsum("ab,ijbc->ijac", Jm, E) - np.einsum("ijab,bc->ijac", E, Jm)
    return float(np.abs(C).max() / s)
