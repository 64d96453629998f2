"""Deterministic example immersions with exact conformal factors.

Every example carries the patch ``f``, a Kaehler chart (constant ``J`` and a
reference patch whose pullback metric is the Kaehler metric) and the exact
conformal factor ``lambda`` as an expression.  Examples are addressable by
string id, e.g. ``"inv-catenoid-cyl-n4"``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from . import jets as jt
from .bilinear import ComplexStructure
from .errors import GeometryError
from .immersion import ChartPatch, KaehlerChart

SURFACES = ("catenoid", "enneper", "helicoid", "plane")


@dataclass(frozen=True, eq=False)
class GalleryExample:
    name: str
    patch: ChartPatch
    kaehler: KaehlerChart
    lam: jt.Expr
    n: int
    expected: dict = field(default_factory=dict)

    @property
    def codim(self):
        return self.patch.ambient.dim - self.patch.dim

    @property
    def J(self):
        return self.kaehler.J

    def lam_values(self, X):
        return jt.evaluate([self.lam], np.atleast_2d(X), 0).value[:, 0]

    def is_isometric(self):
        return self.lam.op == "const" and self.lam.value == 1.0


def _surface(name, u, v):
    """Isothermal parametrization ``(u, v) -> R^3`` and its conformal factor."""
    if name == "catenoid":
        return [jt.cosh(v) * jt.cos(u), jt.cosh(v) * jt.sin(u), v], jt.cosh(v)
    if name == "helicoid":
        return [jt.sinh(v) * jt.cos(u), jt.sinh(v) * jt.sin(u), u], jt.cosh(v)
    if name == "enneper":
        return (
            [u - u**3 / 3 + u * v * v, -v + v**3 / 3 - v * u * u, u * u - v * v],
            1 + u * u + v * v,
        )
    if name == "plane":
        return [u, v, jt.const(0.0)], jt.const(1.0)
    raise GeometryError("BAD_PARAMS", f"unknown surface {name!r}")


def _isometric(name, outputs, d, n, lo=-1.0, hi=1.0, expected=None):
    patch = ChartPatch.from_exprs(outputs, d, None, lo, hi, name=name)
    chart = KaehlerChart(patch, ComplexStructure.standard(d))
    return GalleryExample(name, patch, chart, jt.const(1.0), n, dict(expected or {}))


def cylinder_hypersurface(surface_id, n, lo=-1.0, hi=1.0):
    """``(u, v, t) -> (S(u, v), t)`` in ``R^{2n+1}`` over an isothermal surface ``S``."""
    if n < 1:
        raise GeometryError("BAD_PARAMS", "n must be at least 1")
    x = jt.coords(2 * n)
    S, _ = _surface(surface_id, x[0], x[1])
    expected = {}
    if n >= 4 and surface_id != "plane":
        expected = {"classification": "CASE_I_REAL_KAEHLER", "s": 2, "case": "DEG_L", "dim_delta": 2 * n - 2}
    return _isometric(f"{surface_id}-cyl-n{n}", S + x[2:], 2 * n, n, lo, hi, expected)


def product_pair(e1, e2):
    """Extrinsic product of two isometric hypersurface examples."""
    for e in (e1, e2):
        if e.codim != 1:
            raise GeometryError("BAD_CODIM", f"{e.name} has codimension {e.codim}")
        if not e.is_isometric():
            raise GeometryError("BAD_PARAMS", f"{e.name} is not isometric")
    d1, d2 = e1.patch.dim, e2.patch.dim
    x = jt.coords(d1 + d2)
    out1 = jt.substitute(list(e1.patch.outputs), x[:d1])
    out2 = jt.substitute(list(e2.patch.outputs), x[d1:])
    n = e1.n + e2.n
    lo = np.r_[e1.patch.lo, e2.patch.lo]
    hi = np.r_[e1.patch.hi, e2.patch.hi]
    expected = {}
    if n >= 5:
        expected = {"classification": "CASE_I_REAL_KAEHLER", "s": 2, "case": "DEG_L", "dim_delta_min": 2 * n - 4}
    return _isometric(f"prod({e1.name},{e2.name})", out1 + out2, d1 + d2, n, lo, hi, expected)


def _cmul(a, b):
    return (a[0] * b[0] - a[1] * b[1], a[0] * b[1] + a[1] * b[0])


def holomorphic_graph(poly, n, lo=-1.0, hi=1.0, name=None):
    """Graph ``z -> (z, phi(z))`` of a complex polynomial as a patch in ``R^{2n+2}``.

    ``poly`` maps exponent tuples of length ``n`` to complex coefficients.
    Chart coordinates are ``(x_1, y_1, ..., x_n, y_n)`` with ``z_k = x_k + i y_k``.
    """
    if n < 1:
        raise GeometryError("BAD_PARAMS", "n must be at least 1")
    x = jt.coords(2 * n)
    z = [(x[2 * k], x[2 * k + 1]) for k in range(n)]
    re, im = jt.const(0.0), jt.const(0.0)
    for expo, coef in sorted(poly.items()):
        if len(expo) != n or min(expo) < 0:
            raise GeometryError("BAD_PARAMS", f"bad exponent {expo}")
        coef = complex(coef)
        term = (jt.const(coef.real), jt.const(coef.imag))
        for k, e in enumerate(expo):
            for _ in range(e):
                term = _cmul(term, z[k])
        re, im = re + term[0], im + term[1]
    expected = {}
    if n >= 5 and any(sum(e) >= 2 for e in poly):
        expected = {"classification": "MINIMAL_S4", "s": 4, "case": "DEG_L"}
    return _isometric(name or f"holo-n{n}", list(x) + [re, im], 2 * n, n, lo, hi, expected)


def sum_of_squares(n):
    return {tuple(2 if j == k else 0 for j in range(n)): 1.0 for k in range(n)}


# ---------------------------------------------------------------------------
# Moebius maps


@dataclass(frozen=True, eq=False)
class MoebiusMap:
    """A Moebius transformation of ``R^N`` with its exact conformal factor."""

    kind: str
    N: int
    outputs: tuple
    lam: jt.Expr
    params: dict
    center: np.ndarray | None = None

    def __call__(self, X):
        return jt.evaluate(list(self.outputs), np.atleast_2d(X), 0).value

    def factor(self, X):
        return jt.evaluate([self.lam], np.atleast_2d(X), 0).value[:, 0]


def moebius_map(kind, params=None, N=3):
    """``translation`` (b), ``orthogonal`` (Q or seed), ``dilation`` (a) or ``inversion`` (c, r)."""
    params = dict(params or {})
    x = jt.coords(N)
    center = None
    if kind == "translation":
        b = np.asarray(params.get("b", np.zeros(N)), dtype=float)
        if b.shape != (N,):
            raise GeometryError("BAD_PARAMS", "translation vector has the wrong length")
        outs, lam = [x[i] + b[i] for i in range(N)], jt.const(1.0)
        params["b"] = b.tolist()
    elif kind == "orthogonal":
        if "Q" in params:
            Q = np.asarray(params["Q"], dtype=float)
        else:
            Q, R = np.linalg.qr(np.random.default_rng(params.get("seed", 0)).standard_normal((N, N)))
            Q = Q * np.sign(np.diag(R))
        if Q.shape != (N, N) or np.abs(Q.T @ Q - np.eye(N)).max() > 1e-12:
            raise GeometryError("BAD_PARAMS", "Q is not orthogonal")
        outs = []
        for i in range(N):
            e = jt.const(0.0)
            for j in range(N):
                e = e + Q[i, j] * x[j]
            outs.append(e)
        lam = jt.const(1.0)
        params["Q"] = Q.tolist()
    elif kind == "dilation":
        a = float(params.get("a", 2.0))
        if a <= 0:
            raise GeometryError("BAD_PARAMS", "dilation factor must be positive")
        outs, lam = [a * x[i] for i in range(N)], jt.const(a)
        params["a"] = a
    elif kind == "inversion":
        c = np.asarray(params.get("c", np.zeros(N)), dtype=float)
        r = float(params.get("r", 1.0))
        if c.shape != (N,) or r <= 0:
            raise GeometryError("BAD_PARAMS", "inversion needs a center in R^N and r > 0")
        y = [x[i] - c[i] for i in range(N)]
        q = jt.norm2(y)
        outs = [c[i] + (r * r) * y[i] / q for i in range(N)]
        lam = (r * r) / q
        center = c
        params.update(c=c.tolist(), r=r)
    else:
        raise GeometryError("BAD_PARAMS", f"unknown Moebius kind {kind!r}")
    return MoebiusMap(kind, N, tuple(outs), lam, params, center)


def compose_maps(h2, h1):
    """``h2 o h1`` with ``lambda = (lambda_2 o h1) lambda_1``."""
    if h1.N != h2.N:
        raise GeometryError("BAD_PARAMS", "maps on different spaces")
    outs = jt.substitute(list(h2.outputs), list(h1.outputs))
    lam = jt.substitute([h2.lam], list(h1.outputs))[0] * h1.lam
    return MoebiusMap(f"{h2.kind}o{h1.kind}", h1.N, tuple(outs), lam, {"outer": h2.params, "inner": h1.params})


def _min_distance(patch, c, grid=5):
    """Smallest ``|f(x) - c|`` over a grid of the chart box, refined locally."""
    d = patch.dim
    axes = [np.linspace(patch.lo[i], patch.hi[i], grid) for i in range(d)]
    if grid**d > 4096:
        rng = np.random.default_rng(0)
        X = patch.lo + (patch.hi - patch.lo) * rng.random((4096, d))
    else:
        X = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, d)
    dist = np.linalg.norm(patch(X) - c, axis=1)
    x0 = X[np.argmin(dist)]
    res = minimize(
        lambda x: float(np.sum((patch(x[None])[0] - c) ** 2)),
        x0,
        bounds=list(zip(patch.lo, patch.hi)),
        method="L-BFGS-B",
    )
    return min(float(dist.min()), float(np.sqrt(max(res.fun, 0.0))))


def compose(h, e, tol=1e-6):
    """The example ``h o f`` with ``lambda = (lambda_h o f) lambda_f``."""
    if h.N != e.patch.ambient.dim:
        raise GeometryError("BAD_PARAMS", f"map on R^{h.N}, example in R^{e.patch.ambient.dim}")
    if h.center is not None:
        r = float(h.params.get("r", 1.0))
        if _min_distance(e.patch, h.center) <= tol * r:
            raise GeometryError("DOMAIN_VIOLATION", "the patch meets the inversion center")
    outs = jt.substitute(list(h.outputs), list(e.patch.outputs))
    lam = jt.substitute([h.lam], list(e.patch.outputs))[0] * e.lam
    p = e.patch
    patch = ChartPatch(p.dim, p.ambient, p.lo, p.hi, outputs=tuple(outs), name=f"{h.kind}({p.name})")
    return GalleryExample(f"{h.kind}({e.name})", patch, e.kaehler, lam, e.n, dict(e.expected))


# ---------------------------------------------------------------------------
# flat annulus pair for negative controls


def annulus_pair(kind):
    """``plane``: identity of an annulus box; ``zsq``: ``z -> z^2`` on it.

    Both use the flat annulus as reference metric.
    """
    lo, hi = np.array([0.5, -1.0]), np.array([2.0, 1.0])
    x = jt.coords(2)
    ref = ChartPatch.from_exprs(list(x), 2, None, lo, hi, name="annulus")
    chart = KaehlerChart(ref, ComplexStructure.standard(2))
    if kind == "plane":
        return GalleryExample("plane-annulus", ref, chart, jt.const(1.0), 1)
    if kind == "zsq":
        f = [x[0] * x[0] - x[1] * x[1], 2 * x[0] * x[1]]
        patch = ChartPatch.from_exprs(f, 2, None, lo, hi, name="zsq")
        return GalleryExample("zsq-annulus", patch, chart, 2 * jt.sqrt(jt.norm2(x)), 1)
    raise GeometryError("BAD_PARAMS", f"unknown annulus kind {kind!r}")


# ---------------------------------------------------------------------------
# ids

BASES = (
    "catenoid-cyl",
    "enneper-cyl",
    "helicoid-cyl",
    "catenoid-prod",
    "holo-sumsq",
    "holo-z1z2",
    "holo-zero",
    "plane-annulus",
    "zsq-annulus",
)
PREFIXES = {"inv": "inversion", "dil": "dilation", "orth": "orthogonal", "trans": "translation"}
_ID = re.compile(r"^(?:(inv|dil|orth|trans)-)?([a-z0-9-]+?)-n(\d+)$")


def _base(base, n):
    if base.endswith("-cyl"):
        return cylinder_hypersurface(base[:-4], n)
    if base == "catenoid-prod":
        if n < 3:
            raise GeometryError("BAD_PARAMS", "catenoid-prod needs n >= 3")
        return product_pair(cylinder_hypersurface("catenoid", 2), cylinder_hypersurface("catenoid", n - 2))
    if base == "holo-sumsq":
        return holomorphic_graph(sum_of_squares(n), n, name=f"holo-sumsq-n{n}")
    if base == "holo-z1z2":
        if n < 2:
            raise GeometryError("BAD_PARAMS", "holo-z1z2 needs n >= 2")
        expo = tuple(1 if k < 2 else 0 for k in range(n))
        return holomorphic_graph({expo: 1.0}, n, name=f"holo-z1z2-n{n}")
    if base == "holo-zero":
        return holomorphic_graph({}, n, name=f"holo-zero-n{n}")
    if base in ("plane-annulus", "zsq-annulus"):
        if n != 1:
            raise GeometryError("BAD_PARAMS", f"{base} exists only for n = 1")
        return annulus_pair(base.split("-")[0])
    raise GeometryError("BAD_PARAMS", f"unknown example base {base!r}")


def default_params(kind, base, N):
    """Parameters of the Moebius map applied for an id prefix."""
    if kind == "inversion":
        c = np.zeros(N)
        if base.startswith(("helicoid", "enneper")):
            c[0] = 3.0
        elif base.startswith("holo"):
            c[0] = 2.0
        return {"c": c, "r": 1.0}
    if kind == "dilation":
        return {"a": 2.0}
    if kind == "translation":
        return {"b": 0.5 * np.cos(np.arange(N) + 1.0)}
    return {"seed": 0}


def build_example(example_id):
    """Example from an id ``[inv-|dil-|orth-|trans-]<base>-n<k>``."""
    m = _ID.match(example_id)
    if not m or m.group(2) not in BASES:
        raise GeometryError("BAD_PARAMS", f"unknown example id {example_id!r}")
    prefix, base, n = m.group(1), m.group(2), int(m.group(3))
    e = _base(base, n)
    if prefix is None:
        return GalleryExample(example_id, e.patch, e.kaehler, e.lam, e.n, e.expected)
    kind = PREFIXES[prefix]
    N = e.patch.ambient.dim
    h = moebius_map(kind, default_params(kind, base, N), N)
    out = compose(h, e)
    return GalleryExample(example_id, out.patch, out.kaehler, out.lam, out.n, out.expected)


def example_ids():
    """Representative ids (any ``n`` valid for the base is accepted)."""
    plain = [
        "catenoid-cyl-n2",
        "catenoid-cyl-n4",
        "enneper-cyl-n4",
        "helicoid-cyl-n4",
        "catenoid-prod-n5",
        "holo-sumsq-n5",
        "holo-z1z2-n5",
        "holo-zero-n2",
        "plane-annulus-n1",
        "zsq-annulus-n1",
    ]
    out = []
    for p in plain:
        out.append(p)
        for pre in PREFIXES:
            out.append(f"{pre}-{p}")
    return out
