"""Linear algebra over real inner-product spaces of arbitrary signature.

Everything goes through Gram matrices restricted to explicit bases.  Bases
are kept in coordinates (columns of a ``dim x k`` array); they may be
orthonormal for the *coordinate* dot product but are never Gram-Schmidt
orthonormalized for the indefinite pairing, which breaks on null vectors.

Rank and signature decisions use one relative threshold, ``RANK_TOL`` times
the largest relevant magnitude.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GeometryError

RANK_TOL = 1e-8


def _unit_columns(B):
    B = np.asarray(B, dtype=float)
    if B.ndim == 1:
        B = B[:, None]
    norms = np.linalg.norm(B, axis=0)
    keep = norms > 0
    return B[:, keep] / norms[keep]


def column_basis(B, tol=RANK_TOL, scale=None):
    """Coordinate-orthonormal basis of the column span of ``B``.

    By default columns are rescaled to unit length first so that the
    relative threshold does not depend on how the spanning vectors were
    scaled.  With an explicit ``scale`` the columns are taken as they are
    and singular values below ``tol * scale`` are dropped; use this when
    some columns may be pure round-off.
    """
    B = np.asarray(B, dtype=float)
    if B.ndim == 1:
        B = B[:, None]
    if scale is None:
        B = _unit_columns(B)
    if B.shape[1] == 0:
        return np.zeros((B.shape[0], 0))
    U, s, _ = np.linalg.svd(B, full_matrices=False)
    if not s.size:
        return np.zeros((B.shape[0], 0))
    cut = tol * (s[0] if scale is None else scale)
    r = int(np.sum(s > cut))
    return U[:, :r]


def null_space(M, tol=RANK_TOL, scale=None):
    """Coordinate-orthonormal basis of ``{x : M x = 0}``.

    Singular values below ``tol * scale`` count as zero; ``scale`` defaults
    to the largest singular value of ``M``.
    """
    M = np.atleast_2d(np.asarray(M, dtype=float))
    ncols = M.shape[1]
    if M.size == 0:
        return np.eye(ncols)
    _, s, Vt = np.linalg.svd(M, full_matrices=True)
    ref = (s[0] if s.size else 0.0) if scale is None else scale
    if ref == 0.0:
        return np.eye(ncols)
    r = int(np.sum(s > tol * ref))
    return Vt[r:].T.copy()


def rank(M, tol=RANK_TOL):
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.sum(s > tol * s[0]))


@dataclass(frozen=True)
class GramSpace:
    """A real vector space with a symmetric, possibly indefinite, pairing."""

    gram: np.ndarray
    tol: float = RANK_TOL
    signature_cache: tuple = field(init=False, compare=False)

    def __post_init__(self):
        G = np.array(self.gram, dtype=float)
        if G.ndim != 2 or G.shape[0] != G.shape[1] or G.shape[0] == 0:
            raise GeometryError("BAD_GRAM", f"gram must be square, got {G.shape}")
        scale = max(np.abs(G).max(), 1e-300)
        if np.abs(G - G.T).max() > self.tol * scale:
            raise GeometryError("NONSYMMETRIC", "gram matrix is not symmetric")
        G = 0.5 * (G + G.T)
        G.setflags(write=False)
        object.__setattr__(self, "gram", G)
        object.__setattr__(self, "signature_cache", _eigen_signature(G, self.tol))

    @classmethod
    def euclidean(cls, dim):
        return cls(np.eye(dim))

    @classmethod
    def lorentzian(cls, dim):
        """Minkowski space with the time-like direction last."""
        G = np.eye(dim)
        G[-1, -1] = -1.0
        return cls(G)

    @property
    def dim(self):
        return self.gram.shape[0]

    @property
    def norm(self):
        return float(np.linalg.norm(self.gram, 2))

    def inner(self, x, y):
        return np.asarray(x) @ self.gram @ np.asarray(y)

    def whole(self):
        return Subspace(self, np.eye(self.dim))

    def span(self, vectors, tol=None):
        return Subspace(self, vectors, tol=self.tol if tol is None else tol)

    def is_lorentzian(self):
        return self.signature_cache[1] == 1 and self.signature_cache[2] == 0

    def is_definite(self):
        return self.signature_cache[1] == 0 and self.signature_cache[2] == 0


def _eigen_signature(G, tol):
    ev = np.linalg.eigvalsh(G)
    scale = np.abs(ev).max() if ev.size else 0.0
    if scale == 0.0:
        return (0, 0, G.shape[0])
    band = tol * scale
    return (int(np.sum(ev > band)), int(np.sum(ev < -band)), int(np.sum(np.abs(ev) <= band)))


def signature(space, tol=RANK_TOL):
    """Counts ``(n_plus, n_minus, n_zero)`` of the Gram eigenvalues."""
    if not isinstance(space, GramSpace):
        space = GramSpace(np.asarray(space, dtype=float), tol=tol)
    if tol == space.tol:
        return space.signature_cache
    return _eigen_signature(space.gram, tol)


class Subspace:
    """Span of a set of vectors in a :class:`GramSpace`.

    The stored basis is a coordinate-orthonormal basis of the span of the
    given vectors; linearly dependent input is reduced under the rank
    threshold.
    """

    def __init__(self, ambient, vectors, tol=RANK_TOL, scale=None):
        self.ambient = ambient
        V = np.asarray(vectors, dtype=float)
        if V.ndim == 1:
            V = V[:, None]
        if V.shape[0] != ambient.dim:
            raise GeometryError("BAD_BASIS", f"vectors of length {V.shape[0]} in a {ambient.dim}-space")
        self.tol = tol
        self.basis = column_basis(V, tol, scale) if V.shape[1] else np.zeros((ambient.dim, 0))

    @classmethod
    def zero(cls, ambient):
        return cls(ambient, np.zeros((ambient.dim, 0)))

    @property
    def dim(self):
        return self.basis.shape[1]

    def restricted_gram(self):
        return self.basis.T @ self.ambient.gram @ self.basis

    def contains(self, x, tol=None):
        tol = self.tol if tol is None else tol
        x = np.asarray(x, dtype=float)
        nx = np.linalg.norm(x)
        if nx == 0:
            return True
        resid = x - self.basis @ (self.basis.T @ x)
        return np.linalg.norm(resid) <= 10 * tol * nx

    def __repr__(self):
        return f"Subspace(dim={self.dim}, ambient_dim={self.ambient.dim})"


def radical(S, tol=None):
    """``S`` intersected with its orthogonal complement.

    Computed as the null space of the restricted Gram matrix, thresholded
    relative to the norm of the ambient pairing (basis columns have unit
    length, so this is scale-consistent).  The zero subspace is
    nondegenerate by convention.
    """
    tol = S.tol if tol is None else tol
    if S.dim == 0:
        return Subspace.zero(S.ambient)
    M = S.restricted_gram()
    w, V = np.linalg.eigh(M)
    band = tol * max(S.ambient.norm, 1e-300)
    null = V[:, np.abs(w) <= band]
    return Subspace(S.ambient, S.basis @ null, tol=tol)


def is_degenerate(S, tol=None):
    return radical(S, tol).dim > 0


def orthogonal_complement(S, tol=None):
    """``{x : <x, s> = 0 for all s in S}``."""
    tol = S.tol if tol is None else tol
    if S.dim == 0:
        return S.ambient.whole()
    M = (S.ambient.gram @ S.basis).T
    return Subspace(S.ambient, null_space(M, tol), tol=tol)


def sum_of(*subspaces):
    amb = subspaces[0].ambient
    return Subspace(amb, np.hstack([s.basis for s in subspaces]), tol=subspaces[0].tol)


def intersection(S, T, tol=None):
    """Intersection of two subspaces (coordinate computation, metric-free)."""
    tol = S.tol if tol is None else tol
    if S.dim == 0 or T.dim == 0:
        return Subspace.zero(S.ambient)
    K = null_space(np.hstack([S.basis, -T.basis]), tol)
    return Subspace(S.ambient, S.basis @ K[: S.dim], tol=tol)


def projector(S, tol=None):
    """Matrix of the orthogonal projection onto a nondegenerate ``S``."""
    tol = S.tol if tol is None else tol
    if S.dim == 0:
        return np.zeros((S.ambient.dim, S.ambient.dim))
    if is_degenerate(S, tol):
        raise GeometryError(
            "DEGENERATE_SUBSPACE",
            "radical is nontrivial; use the null-partner pairing instead",
        )
    G = S.ambient.gram
    B = S.basis
    return B @ np.linalg.solve(B.T @ G @ B, B.T @ G)


def project_onto(x, S, tol=None):
    """The component in ``S`` of the splitting ``x = p + q``, ``q`` orthogonal to ``S``."""
    return projector(S, tol) @ np.asarray(x, dtype=float)


def null_partner(delta, U, avoid=None, tol=RANK_TOL):
    """A null vector ``zeta`` with ``<delta, zeta> = 1`` orthogonal to ``avoid``.

    ``delta`` must be null.  The candidate is the vector of ``avoid``'s
    complement pairing most strongly with ``delta``, corrected along
    ``delta`` to become null.
    """
    if not isinstance(U, GramSpace):
        U = GramSpace(np.asarray(U, dtype=float))
    delta = np.asarray(delta, dtype=float)
    nd = np.linalg.norm(delta)
    if nd == 0:
        raise GeometryError("NO_PARTNER", "delta is zero")
    G = U.gram
    scale = U.norm * nd * nd
    if abs(delta @ G @ delta) > tol * max(scale, 1e-300):
        raise GeometryError("NO_PARTNER", "delta is not light-like")
    if avoid is None or avoid.dim == 0:
        Q = np.eye(U.dim)
    else:
        if np.abs(avoid.basis.T @ G @ delta).max() > tol * U.norm * nd:
            raise GeometryError("NO_PARTNER", "delta is not orthogonal to the avoided subspace")
        Q = orthogonal_complement(avoid, tol).basis
    c = Q.T @ (G @ delta)
    if np.linalg.norm(c) <= tol * U.norm * nd:
        raise GeometryError("NO_PARTNER", "no vector outside delta's orthogonal complement")
    y = Q @ c
    y = y / (delta @ G @ y)
    zeta = y - 0.5 * (y @ G @ y) * delta
    return zeta
