"""Vector-valued bilinear forms: flatness, nullity, the J-coupled form and
its structure decomposition.

A form ``beta: V x V -> W`` is stored as an ``(n, n, w)`` coefficient array,
``coeffs[i, j] = beta(e_i, e_j)`` in a basis of ``W`` whose pairing is the
Gram matrix of ``target``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import indefinite as il
from .errors import GeometryError
from .indefinite import GramSpace, Subspace

RANK_TOL = il.RANK_TOL
FLAT_TOL = 1e-6


@dataclass(frozen=True)
class ComplexStructure:
    matrix: np.ndarray

    def __post_init__(self):
        J = np.array(self.matrix, dtype=float)
        n = J.shape[0]
        if J.ndim != 2 or J.shape != (n, n) or n % 2:
            raise GeometryError("BAD_J", f"J must be square of even size, got {J.shape}")
        if np.abs(J @ J + np.eye(n)).max() > 1e-12 * max(1.0, np.abs(J).max() ** 2):
            raise GeometryError("BAD_J", "J^2 + I does not vanish")
        J.setflags(write=False)
        object.__setattr__(self, "matrix", J)

    @classmethod
    def standard(cls, n):
        """Rotation ``e_{2k} -> e_{2k+1}`` on consecutive coordinate pairs."""
        J = np.zeros((n, n))
        for k in range(0, n, 2):
            J[k + 1, k] = 1.0
            J[k, k + 1] = -1.0
        return cls(J)

    @property
    def dim(self):
        return self.matrix.shape[0]


@dataclass(frozen=True)
class BilinearForm:
    coeffs: np.ndarray
    target: GramSpace

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float)
        if c.ndim != 3 or c.shape[0] != c.shape[1] or c.shape[2] != self.target.dim:
            raise GeometryError("BAD_TENSOR", f"coefficients of shape {c.shape} for a {self.target.dim}-dim target")
        if not np.all(np.isfinite(c)):
            raise GeometryError("BAD_TENSOR", "non-finite coefficients")
        object.__setattr__(self, "coeffs", c)

    @property
    def domain_dim(self):
        return self.coeffs.shape[0]

    @property
    def size(self):
        """Largest coefficient magnitude (the scale used for relative thresholds)."""
        return float(np.abs(self.coeffs).max()) if self.coeffs.size else 0.0

    def __call__(self, X, Y):
        return np.einsum("i,j,ijc->c", X, Y, self.coeffs)

    def pairings(self):
        """``P[i, j, k, l] = <beta(e_i, e_j), beta(e_k, e_l)>``."""
        c = self.coeffs
        return np.einsum("ija,ab,klb->ijkl", c, self.target.gram, c)

    def asymmetry(self):
        c = self.coeffs
        return float(np.abs(c - c.transpose(1, 0, 2)).max()) / max(self.size, 1e-300)

    def changed_basis(self, Q):
        """The form ``(X, Y) -> beta(Q X, Q Y)``."""
        return BilinearForm(np.einsum("ai,bj,abc->ijc", Q, Q, self.coeffs), self.target)


def _pairing_scale(beta):
    mags = np.linalg.norm(beta.coeffs, axis=2)
    top = mags.max() if mags.size else 0.0
    return max(1.0, beta.target.norm * top * top)


def flatness_defect(beta):
    """``max |<b(X,Y), b(Z,T)> - <b(X,T), b(Z,Y)>|`` over basis vectors.

    Normalized by ``max(1, |gram| * max |b(e_i, e_j)|^2)``; zero means flat.
    """
    P = beta.pairings()
    if P.size == 0:
        return 0.0
    return float(np.abs(P - P.transpose(0, 3, 2, 1)).max()) / _pairing_scale(beta)


def nullity_defect(beta):
    """Largest pairing between values of ``beta``, normalized as in :func:`flatness_defect`."""
    P = beta.pairings()
    if P.size == 0:
        return 0.0
    return float(np.abs(P).max()) / _pairing_scale(beta)


def span_and_kernel(beta, tol=RANK_TOL, scale=None):
    """``(S(beta), N(beta))``: the span of the values and the right kernel.

    ``S`` is the column span of the ``n^2 x w`` unfolding, ``N`` the null
    space of ``Y -> beta(., Y)``.  Thresholds are relative to the largest
    singular value unless ``scale`` is given.
    """
    n, _, w = beta.coeffs.shape
    unfolded = beta.coeffs.reshape(n * n, w)
    S = Subspace(beta.target, unfolded.T, tol=tol, scale=scale if scale is not None else _svd_top(unfolded))
    right = beta.coeffs.transpose(0, 2, 1).reshape(n * w, n)
    N = null_space_in(right, n, tol, scale)
    return S, N


def _svd_top(M):
    if M.size == 0:
        return 0.0
    return float(np.linalg.svd(M, compute_uv=False)[0])


def null_space_in(M, n, tol=RANK_TOL, scale=None):
    """Kernel of ``M`` as a coordinate basis of ``R^n``; ``(n, k)`` array."""
    if scale is not None and scale == 0.0:
        return np.eye(n)
    return il.null_space(M, tol, scale)


def j_couple(alpha, J, tol=RANK_TOL):
    """``beta(X, Y) = (alpha(X, Y), alpha(X, JY))`` into ``U + U`` with pairing ``G (+) -G``."""
    Jm = J.matrix if isinstance(J, ComplexStructure) else np.asarray(J, dtype=float)
    if alpha.domain_dim != Jm.shape[0]:
        raise GeometryError("BAD_TENSOR", "J and alpha act on spaces of different dimension")
    c = alpha.coeffs
    if alpha.asymmetry() > tol:
        raise GeometryError("NONSYMMETRIC_ALPHA", f"asymmetry {alpha.asymmetry():.3e}")
    c = 0.5 * (c + c.transpose(1, 0, 2))
    cj = np.einsum("ikc,kj->ijc", c, Jm)
    G = alpha.target.gram
    p = G.shape[0]
    W = np.zeros((2 * p, 2 * p))
    W[:p, :p] = G
    W[p:, p:] = -G
    return BilinearForm(np.concatenate([c, cj], axis=2), GramSpace(W))


@dataclass
class CostumReport:
    """Outcome of checking the nullity bound ``dim N(beta) >= n - 2p``."""

    applicable: bool
    n: int
    p: int
    dim_N: int | None = None
    bound: int | None = None
    nondegenerate: bool | None = None
    satisfied: bool | None = None


def costum_verify(alpha, J, tol=FLAT_TOL, rank_tol=RANK_TOL):
    n = alpha.domain_dim
    p = alpha.target.dim
    if not (1 <= p <= 5 and 2 * p < n):
        return CostumReport(applicable=False, n=n, p=p)
    beta = j_couple(alpha, J, rank_tol)
    fd = flatness_defect(beta)
    if fd > tol:
        raise GeometryError("NOT_FLAT", f"flatness defect {fd:.3e}")
    S, N = span_and_kernel(beta, rank_tol)
    nondeg = il.radical(S, rank_tol).dim == 0
    rep = CostumReport(applicable=True, n=n, p=p, dim_N=N.shape[1], bound=n - 2 * p, nondegenerate=nondeg)
    if nondeg:
        rep.satisfied = rep.dim_N >= rep.bound
    return rep


NONDEG_L = "NONDEG_L"
DEG_L = "DEG_L"


@dataclass
class StructureReport:
    s: int
    case_tag: str | None
    L_basis: Subspace | None = None
    U0_basis: Subspace | None = None
    U1_basis: Subspace | None = None
    U2_basis: Subspace | None = None
    delta: np.ndarray | None = None
    zeta: np.ndarray | None = None
    alpha1_symmetry_defect: float = 0.0
    delta_orthogonality_defect: float = 0.0
    dim_Delta: int | None = None
    dim_N: int | None = None
    residuals: dict = field(default_factory=dict)
    parts: dict = field(default_factory=dict)

    def u1_frame(self):
        """Orthonormal basis (for the pairing) of the space-like factor ``U1``."""
        if self.U1_basis is None or self.U1_basis.dim == 0:
            return np.zeros((0, 0))
        B = self.U1_basis.basis
        M = B.T @ self.U1_basis.ambient.gram @ B
        w, V = np.linalg.eigh(M)
        if np.any(w <= 0):
            raise GeometryError("BAD_SIGNATURE", "U1 is not space-like")
        return B @ V / np.sqrt(w)


def _coupled_right(c, J):
    n = J.shape[0]
    cj = np.einsum("ikc,kj->ijc", c, J)
    return np.concatenate([c, cj], axis=2).transpose(0, 2, 1).reshape(-1, n)


def _kernel_of(alpha_part, J, tol, scale):
    """``N(a) ∩ J N(a)``, computed as the right kernel of the coupled form.

    ``scale`` is the reference singular value (that of the whole form), so
    a part that is pure round-off has the full space as kernel.
    """
    return null_space_in(_coupled_right(alpha_part, J), J.shape[0], tol, scale)


def _part(alpha_coeffs, P):
    """Apply a projector (acting on target coordinates) to every value."""
    return np.einsum("ab,ijb->ija", P, alpha_coeffs)


def _symmetry_exchange_defect(c, J, scale):
    """``max |a(X, JY) - a(JX, Y)|`` over basis vectors, relative to ``scale``."""
    left = np.einsum("ikc,kj->ijc", c, J)
    right = np.einsum("kjc,ki->ijc", c, J)
    if scale == 0.0:
        return 0.0
    return float(np.abs(left - right).max()) / scale


def structure_decompose(alpha, J, rank_tol=RANK_TOL, flat_tol=FLAT_TOL, zeta_hint=None):
    """Split a symmetric ``alpha`` whose J-coupled form is flat.

    Computes ``U = S(beta) ∩ S(beta)^perp`` (``s = dim U``), its first-factor
    projection ``L``, and either the orthogonal splitting ``U = L (+) L^perp``
    (``NONDEG_L``) or ``U = span{delta, zeta} (+) U1 (+) U2`` (``DEG_L``).
    The identities and the nullity bound that the splitting guarantees are
    checked and raised on as :class:`GeometryError`.

    ``zeta_hint`` (target coordinates) fixes the scale of ``delta`` by
    ``<delta, zeta_hint> = 1`` and, when it is null, is used as ``zeta``
    with ``U1 = L ∩ zeta_hint^perp``.  Without it ``delta`` has unit
    coordinate norm with its first significant entry positive.
    """
    Jm = J.matrix if isinstance(J, ComplexStructure) else np.asarray(J, dtype=float)
    n = alpha.domain_dim
    U = alpha.target
    p = U.dim
    G = U.gram
    if not (U.is_definite() or U.is_lorentzian()):
        raise GeometryError("BAD_SIGNATURE", f"target signature {U.signature_cache}")
    if p > 5:
        raise GeometryError("P_OUT_OF_RANGE", f"p = {p} > 5")
    beta = j_couple(alpha, Jm, rank_tol)
    fd = flatness_defect(beta)
    if fd > flat_tol:
        raise GeometryError("NOT_FLAT", f"flatness defect {fd:.3e}")
    c = beta.coeffs[:, :, :p]
    size = float(np.abs(c).max()) if c.size else 0.0
    kscale = _svd_top(_coupled_right(c, Jm))
    S, N = span_and_kernel(beta, rank_tol)
    dim_N = N.shape[1]
    if dim_N > n - 2 * p - 1:
        raise GeometryError("NULLITY_TOO_LARGE", f"dim N(beta) = {dim_N} > n - 2p - 1 = {n - 2 * p - 1}")

    radU = il.radical(S, rank_tol)
    s = radU.dim
    if s % 2:
        raise GeometryError("ODD_S", f"dim U = {s}")
    if s == 0:
        raise GeometryError("ZERO_S", "S(beta) is nondegenerate")

    # first-factor projection; U's basis columns have unit length, so an
    # absolute cut of rank_tol separates genuine directions from round-off
    L = Subspace(U, radU.basis[:p], tol=rank_tol, scale=1.0)
    radL = il.radical(L, rank_tol)
    res = {"flatness": fd, "asymmetry": alpha.asymmetry()}

    if radL.dim == 0:
        if L.dim != s:
            raise GeometryError("CASE_I_VIOLATED", f"dim L = {L.dim} but s = {s}")
        ev = np.linalg.eigvalsh(L.restricted_gram())
        if np.any(ev <= 0):
            raise GeometryError("CASE_I_VIOLATED", "L is not positive definite")
        P1 = il.projector(L, rank_tol)
        a1 = _part(c, P1)
        a2 = c - a1
        L_perp = il.orthogonal_complement(L, rank_tol)
        sym = _symmetry_exchange_defect(a1, Jm, size)
        Delta = _kernel_of(a2, Jm, rank_tol, kscale)
        report = StructureReport(
            s=s, case_tag=NONDEG_L, L_basis=L, U2_basis=L_perp,
            alpha1_symmetry_defect=sym, dim_Delta=Delta.shape[1], dim_N=dim_N,
            parts={"alpha1": a1, "alpha2": a2, "Delta": Delta},
        )
    else:
        if radL.dim != 1:
            raise GeometryError("CASE_II_VIOLATED", f"radical of L has dimension {radL.dim}")
        if s not in (2, 4):
            raise GeometryError("CASE_II_VIOLATED", f"s = {s} with degenerate L")
        if L.dim != s - 1:
            raise GeometryError("CASE_II_VIOLATED", f"dim L = {L.dim} but s = {s}")
        delta = radL.basis[:, 0].copy()
        hint = None if zeta_hint is None else np.asarray(zeta_hint, dtype=float)
        zeta = None
        if hint is not None and abs(delta @ G @ hint) > rank_tol * np.linalg.norm(hint) * U.norm:
            delta = delta / (delta @ G @ hint)
            U1 = il.intersection(L, il.orthogonal_complement(Subspace(U, hint, tol=rank_tol), rank_tol), rank_tol)
            hint_null = abs(hint @ G @ hint) <= 1e-6 * U.norm * (hint @ hint)
            hint_perp = U1.dim == 0 or np.abs(U1.basis.T @ G @ hint).max() <= 1e-6 * np.linalg.norm(hint) * U.norm
            if hint_null and hint_perp:
                zeta = hint
        else:
            big = np.flatnonzero(np.abs(delta) > 1e-6 * np.abs(delta).max())[0]
            delta = delta * np.sign(delta[big]) / np.linalg.norm(delta)
            M = L.restricted_gram()
            w, V = np.linalg.eigh(M)
            U1 = Subspace(U, L.basis @ V[:, w > rank_tol * U.norm], tol=rank_tol)
        if U1.dim != s - 2:
            raise GeometryError("CASE_II_VIOLATED", f"dim U1 = {U1.dim} but s = {s}")
        if zeta is None:
            zeta = il.null_partner(delta, U, U1, tol=max(rank_tol, 1e-6))
        U0 = Subspace(U, np.column_stack([delta, zeta]), tol=rank_tol)
        U2 = il.orthogonal_complement(il.sum_of(U0, U1) if U1.dim else U0, rank_tol)
        if U2.dim != p - s:
            raise GeometryError("CASE_II_VIOLATED", f"dim U2 = {U2.dim} but p - s = {p - s}")
        # projection onto span{delta, zeta}: x -> <x,zeta> delta + <x,delta> zeta
        P0 = np.outer(delta, G @ zeta) + np.outer(zeta, G @ delta)
        P1 = il.projector(U1, rank_tol) if U1.dim else np.zeros((p, p))
        P2 = il.projector(U2, rank_tol) if U2.dim else np.zeros((p, p))
        a0, a1, a2 = _part(c, P0), _part(c, P1), _part(c, P2)
        pair = np.einsum("ija,ab,b->ij", c, G, delta)
        scale = size * np.linalg.norm(delta) * U.norm
        orth = float(np.abs(pair).max()) / scale if scale else 0.0
        sym = _symmetry_exchange_defect(a1, Jm, size)
        Delta = _kernel_of(a2, Jm, rank_tol, kscale)
        res["recombination"] = float(np.abs(a0 + a1 + a2 - c).max()) / size if size else 0.0
        report = StructureReport(
            s=s, case_tag=DEG_L, L_basis=L, U0_basis=U0, U1_basis=U1, U2_basis=U2,
            delta=delta, zeta=zeta, alpha1_symmetry_defect=sym,
            delta_orthogonality_defect=orth, dim_Delta=Delta.shape[1], dim_N=dim_N,
            parts={"alpha0": a0, "alpha1": a1, "alpha2": a2, "Delta": Delta},
        )

    bound = n - 2 * (p - s)
    if report.dim_Delta < bound:
        raise GeometryError("BOUND_VIOLATED", f"dim Delta = {report.dim_Delta} < n - 2(p - s) = {bound}")
    res["alpha1_sym"] = report.alpha1_symmetry_defect
    res["delta_orth"] = report.delta_orthogonality_defect
    report.residuals = res
    return report


# ---------------------------------------------------------------------------
# synthetic instances


@dataclass(frozen=True)
class SynthSpec:
    n: int
    p: int
    s: int
    case_tag: str | None
    kernel_dim: int | None = None
    seed: int = 0
    signature: str = "lorentzian"


def _random_frame(rng, k, spread=0.3):
    """Well-conditioned random invertible matrix."""
    Q1, _ = np.linalg.qr(rng.standard_normal((k, k)))
    Q2, _ = np.linalg.qr(rng.standard_normal((k, k)))
    return Q1 @ np.diag(np.exp(spread * rng.standard_normal(k))) @ Q2


def _check_spec(spec):
    n, p, s, tag = spec.n, spec.p, spec.s, spec.case_tag
    bad = None
    if n < 2 or n % 2:
        bad = "n must be even and positive"
    elif p < 1:
        bad = "p must be positive"
    elif s < 0 or s % 2:
        bad = "s must be even"
    elif tag is None and s != 0:
        bad = "s > 0 needs a case tag"
    elif tag == DEG_L and s not in (2, 4):
        bad = "DEG_L needs s in {2, 4}"
    elif tag == NONDEG_L and s < 2:
        bad = "NONDEG_L needs s >= 2"
    elif tag not in (None, DEG_L, NONDEG_L):
        bad = f"unknown case tag {tag!r}"
    elif s > p:
        bad = "s cannot exceed p"
    elif tag == DEG_L and spec.signature != "lorentzian":
        bad = "DEG_L requires a Lorentzian target"
    elif tag == NONDEG_L and spec.signature == "lorentzian" and p - s < 1:
        bad = "a Lorentzian target needs p - s >= 1 in the NONDEG_L case"
    elif spec.signature not in ("lorentzian", "definite", "mixed"):
        bad = f"unknown signature {spec.signature!r}"
    if bad:
        raise GeometryError("INCONSISTENT_SPEC", bad)
    q = p - s
    if q == 0:
        if spec.kernel_dim not in (None, n):
            raise GeometryError("INCONSISTENT_SPEC", "with p == s the flat part vanishes; kernel_dim must be n")
        return 0
    kd = n - 2 * q if spec.kernel_dim is None else spec.kernel_dim
    if (n - kd) % 2 or kd < 0:
        raise GeometryError("INCONSISTENT_SPEC", "n - kernel_dim must be even and nonnegative")
    planes = (n - kd) // 2
    if planes > n // 2:
        raise GeometryError("INCONSISTENT_SPEC", "not enough J-invariant planes")
    if not ((q + 1) // 2 <= planes <= q) or planes < 1:
        raise GeometryError(
            "INCONSISTENT_SPEC",
            f"kernel_dim {kd} incompatible with {q} flat components (need n - 2q <= kernel_dim <= n - 2*ceil(q/2))",
        )
    return planes


def synth_flat(spec=None, **kwargs):
    """Random symmetric ``alpha`` with flat J-coupled form and a planted structure.

    ``alpha = alpha0 + alpha1 + alpha2`` with values in mutually orthogonal
    pieces of the target: ``alpha0 = a(X, Y) delta`` along a null vector,
    ``alpha1`` the real form of a complex-bilinear form (so its coupled form
    is null), and ``alpha2`` a sum of components each supported on one
    J-invariant plane of ``V`` (so its coupled form is flat with a
    nondegenerate span).  Random changes of basis of ``V`` and of the target
    hide the splitting.

    ``s = 0`` (``case_tag=None``) gives the pure ``alpha2`` family, whose
    ``S(beta)`` is nondegenerate; ``signature`` may then be ``"mixed"``.

    Returns ``(alpha, J, planted)``.
    """
    if spec is None:
        spec = SynthSpec(**kwargs)
    planes = _check_spec(spec)
    n, p, s, tag = spec.n, spec.p, spec.s, spec.case_tag
    rng = np.random.default_rng(spec.seed)
    h = n // 2
    # complex coordinates z_j = x_{2j} + i x_{2j+1}
    Pc = np.zeros((n, h), dtype=complex)
    idx = np.arange(h)
    Pc[2 * idx, idx] = 1.0
    Pc[2 * idx + 1, idx] = 1.0j

    coeffs = np.zeros((n, n, p))
    gram = np.zeros((p, p))
    col = 0
    delta = None
    if tag == DEG_L:
        gram[0, 1] = gram[1, 0] = 1.0
        a = rng.standard_normal((n, n))
        coeffs[:, :, 0] = a + a.T
        delta = np.zeros(p)
        delta[0] = 1.0
        col = 2
        complex_dim = (s - 2) // 2
    elif tag == NONDEG_L:
        complex_dim = s // 2
    else:
        complex_dim = 0
    for _ in range(complex_dim):
        M = rng.standard_normal((h, h)) + 1j * rng.standard_normal((h, h))
        B = Pc @ (M + M.T) @ Pc.T
        coeffs[:, :, col] = B.real
        coeffs[:, :, col + 1] = B.imag
        gram[col, col] = gram[col + 1, col + 1] = 1.0
        col += 2
    q = p - col
    signs = np.ones(q)
    if q:
        if spec.signature == "lorentzian" and tag != DEG_L:
            signs[rng.integers(q)] = -1.0
        elif spec.signature == "mixed":
            signs = rng.choice([-1.0, 1.0], size=q)
        pairs = rng.permutation(h)[:planes]
        for k in range(q):
            j = pairs[k % planes]
            A = rng.standard_normal((2, 2))
            coeffs[2 * j:2 * j + 2, 2 * j:2 * j + 2, col + k] = A + A.T
            gram[col + k, col + k] = signs[k]

    J0 = ComplexStructure.standard(n).matrix
    Q = _random_frame(rng, n)
    P = _random_frame(rng, p)
    Pinv = np.linalg.inv(P)
    c = np.einsum("ai,bj,abc->ijc", Q, Q, coeffs)
    c = np.einsum("ca,ija->ijc", Pinv, c)
    c = 0.5 * (c + c.transpose(1, 0, 2))
    target = GramSpace(P.T @ gram @ P)
    alpha = BilinearForm(c, target)
    J = ComplexStructure(np.linalg.solve(Q, J0 @ Q))
    kernel_dim = n if q == 0 else n - 2 * planes
    planted = StructureReport(s=s, case_tag=tag, dim_Delta=kernel_dim)
    if delta is not None:
        planted.delta = Pinv @ delta
    return alpha, J, planted
