"""Truncated Taylor arithmetic to third order and an expression DAG.

A :class:`Jet` carries a value together with its first, second and third
partial derivatives with respect to ``d`` chart coordinates.  Coefficient
arrays have shapes ``batch``, ``batch + (d,)``, ``batch + (d, d)`` and
``batch + (d, d, d)``; the batch shape is arbitrary and broadcasts like
numpy.  A coefficient that is identically zero is stored as ``None``.

Derivative arrays hold the partial derivatives themselves (not Taylor
coefficients divided by factorials), so ``c2[..., i, j]`` is
``d^2 u / dx_i dx_j``.

Expressions are immutable :class:`Expr` nodes.  They are evaluated into jets
over a batch of points by :func:`evaluate`, and round-trip through a JSON node
table with :func:`to_json` / :func:`from_json`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GeometryError

MAX_ORDER = 3


# ---------------------------------------------------------------------------
# jets


def _add(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return a + b


def _scale(a, s):
    """Multiply coefficient array ``a`` (batch + k axes) by batch array ``s``."""
    if a is None:
        return None
    if np.ndim(s) == 0:
        return a * s
    return a * np.reshape(s, np.shape(s) + (1,) * (a.ndim - np.ndim(s)))


def _sym3(T2, v1):
    """``T_ij v_k + T_ik v_j + T_jk v_i`` over the last three axes."""
    X = T2[..., :, :, None] * v1[..., None, None, :]
    return X + np.swapaxes(X, -1, -2) + np.moveaxis(X, -1, -3)


class Jet:
    """Value and partial derivatives up to ``order`` of a (batched) quantity."""

    __slots__ = ("c", "d", "order")

    def __init__(self, c, d, order):
        c = list(c) + [None] * (MAX_ORDER + 1 - len(c))
        for k in range(order + 1, MAX_ORDER + 1):
            c[k] = None
        self.c = c
        self.d = d
        self.order = order

    # construction ----------------------------------------------------------

    @classmethod
    def constant(cls, value, d, order):
        return cls([np.asarray(value, dtype=float)], d, order)

    @classmethod
    def variable(cls, values, index, d, order):
        values = np.asarray(values, dtype=float)
        c1 = None
        if order >= 1:
            c1 = np.zeros(values.shape + (d,))
            c1[..., index] = 1.0
        return cls([values, c1], d, order)

    @property
    def value(self):
        return self.c[0]

    @property
    def shape(self):
        return np.shape(self.c[0])

    def coeff(self, k):
        """Coefficient array of order ``k`` with zeros materialized."""
        if k > self.order:
            raise ValueError(f"jet of order {self.order} has no order-{k} part")
        a = self.c[k]
        if a is None:
            return np.zeros(self.shape + (self.d,) * k)
        return np.broadcast_to(a, self.shape + (self.d,) * k)

    def _coerce(self, other):
        if isinstance(other, Jet):
            if other.d != self.d:
                raise ValueError("jets over different numbers of variables")
            return other
        return Jet.constant(other, self.d, self.order)

    # arithmetic ------------------------------------------------------------

    def __add__(self, other):
        o = self._coerce(other)
        order = min(self.order, o.order)
        return Jet([_add(a, b) for a, b in zip(self.c, o.c)], self.d, order)

    __radd__ = __add__

    def __neg__(self):
        return Jet([None if a is None else -a for a in self.c], self.d, self.order)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._coerce(other)
        order = min(self.order, o.order)
        a, b = self.c, o.c
        out = [a[0] * b[0]]
        if order >= 1:
            out.append(_add(_scale(a[1], b[0]), _scale(b[1], a[0])))
        if order >= 2:
            t = _add(_scale(a[2], b[0]), _scale(b[2], a[0]))
            if a[1] is not None and b[1] is not None:
                x = a[1][..., :, None] * b[1][..., None, :]
                t = _add(t, x + np.swapaxes(x, -1, -2))
            out.append(t)
        if order >= 3:
            t = _add(_scale(a[3], b[0]), _scale(b[3], a[0]))
            if a[2] is not None and b[1] is not None:
                t = _add(t, _sym3(a[2], b[1]))
            if b[2] is not None and a[1] is not None:
                t = _add(t, _sym3(b[2], a[1]))
            out.append(t)
        return Jet(out, self.d, order)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        return self * o.reciprocal()

    def __rtruediv__(self, other):
        return self._coerce(other) * self.reciprocal()

    def __pow__(self, p):
        if isinstance(p, Jet):
            return (p * self.log()).exp()
        p = float(p)
        if p == int(p) and 0 <= p <= 4:
            out = Jet.constant(np.ones(self.shape), self.d, self.order)
            for _ in range(int(p)):
                out = out * self
            return out
        u = self.c[0]
        return self.apply(
            u**p, p * u ** (p - 1), p * (p - 1) * u ** (p - 2), p * (p - 1) * (p - 2) * u ** (p - 3)
        )

    # univariate composition ------------------------------------------------

    def apply(self, f0, f1, f2, f3):
        """Compose with a scalar function whose derivatives at the value are ``f0..f3``."""
        u = self.c
        out = [np.asarray(f0, dtype=float)]
        if self.order >= 1:
            out.append(_scale(u[1], f1))
        if self.order >= 2:
            t = _scale(u[2], f1)
            if u[1] is not None:
                t = _add(t, _scale(u[1][..., :, None] * u[1][..., None, :], f2))
            out.append(t)
        if self.order >= 3:
            t = _scale(u[3], f1)
            if u[1] is not None:
                u11 = u[1][..., :, None] * u[1][..., None, :]
                t = _add(t, _scale(u11[..., None] * u[1][..., None, None, :], f3))
                if u[2] is not None:
                    t = _add(t, _scale(_sym3(u[2], u[1]), f2))
            out.append(t)
        return Jet(out, self.d, self.order)

    def reciprocal(self):
        u = self.c[0]
        if np.any(u == 0):
            raise GeometryError("OUT_OF_DOMAIN", "division by zero")
        r = 1.0 / u
        return self.apply(r, -(r**2), 2 * r**3, -6 * r**4)

    def exp(self):
        e = np.exp(self.c[0])
        return self.apply(e, e, e, e)

    def log(self):
        u = self.c[0]
        if np.any(u <= 0):
            raise GeometryError("OUT_OF_DOMAIN", "log of a nonpositive value")
        r = 1.0 / u
        return self.apply(np.log(u), r, -(r**2), 2 * r**3)

    def sqrt(self):
        u = self.c[0]
        if np.any(u <= 0):
            raise GeometryError("OUT_OF_DOMAIN", "sqrt of a nonpositive value")
        s = np.sqrt(u)
        return self.apply(s, 0.5 / s, -0.25 / (s * u), 0.375 / (s * u * u))

    def sin(self):
        s, c = np.sin(self.c[0]), np.cos(self.c[0])
        return self.apply(s, c, -s, -c)

    def cos(self):
        s, c = np.sin(self.c[0]), np.cos(self.c[0])
        return self.apply(c, -s, -c, s)

    def sinh(self):
        s, c = np.sinh(self.c[0]), np.cosh(self.c[0])
        return self.apply(s, c, s, c)

    def cosh(self):
        s, c = np.sinh(self.c[0]), np.cosh(self.c[0])
        return self.apply(c, s, c, s)

    # calculus and reshaping --------------------------------------------------

    def deriv(self, i):
        """The jet of ``du/dx_i``, one order lower."""
        if self.order == 0:
            raise ValueError("cannot differentiate an order-0 jet")
        out = []
        for k in range(1, self.order + 1):
            a = self.c[k]
            out.append(None if a is None else a[(..., i) + (slice(None),) * (k - 1)])
        if out[0] is None:
            out[0] = np.zeros(self.shape)
        return Jet(out, self.d, self.order - 1)

    def truncate(self, order):
        return Jet(self.c, self.d, min(order, self.order))

    def map(self, fn):
        """Apply a linear map acting on batch axes to every coefficient.

        ``fn(array, k)`` receives an array with ``k`` trailing derivative
        axes and must act only on the leading batch axes.
        """
        return Jet([None if a is None else fn(a, k) for k, a in enumerate(self.c)], self.d, self.order)

    def contract(self, M, axis=-1):
        """Apply matrix ``M`` along a batch axis (``y_a = M_ab x_b``)."""
        nb = len(self.shape)
        ax = axis % nb

        def fn(a, k):
            a = np.broadcast_to(a, self.shape + (self.d,) * k)
            return np.moveaxis(np.tensordot(M, a, axes=([1], [ax])), 0, ax)

        return self.map(fn)

    def sum(self, axis):
        nb = len(self.shape)
        ax = axis % nb

        def fn(a, k):
            return np.broadcast_to(a, self.shape + (self.d,) * k).sum(axis=ax)

        return self.map(fn)

    def expand(self, axis):
        """Insert a unit batch axis (for broadcasting scalars against vectors)."""
        nb = len(self.shape)
        ax = axis % (nb + 1)

        def fn(a, k):
            return np.expand_dims(np.broadcast_to(a, self.shape + (self.d,) * k), ax)

        return self.map(fn)

    def __getitem__(self, idx):
        """Index the batch axes."""
        if not isinstance(idx, tuple):
            idx = (idx,)

        def fn(a, k):
            a = np.broadcast_to(a, self.shape + (self.d,) * k)
            return a[idx]

        return self.map(fn)

    @staticmethod
    def stack(jets, axis=-1):
        d = jets[0].d
        order = min(j.order for j in jets)
        shape = jets[0].shape
        nb = len(shape) + 1
        ax = axis % nb
        out = []
        for k in range(order + 1):
            if all(j.c[k] is None for j in jets):
                out.append(None)
                continue
            arrs = [j.coeff(k) for j in jets]
            out.append(np.stack(arrs, axis=ax))
        return Jet(out, d, order)

    def arrays(self):
        """All coefficients up to ``order`` with zeros materialized."""
        return [np.array(self.coeff(k)) for k in range(self.order + 1)]


# ---------------------------------------------------------------------------
# expressions

UNARY = ("exp", "log", "sin", "cos", "sinh", "cosh", "sqrt", "neg")
BINARY = ("add", "sub", "mul", "div")


@dataclass(frozen=True, eq=False)
class Expr:
    """Node of an expression DAG over chart coordinates."""

    op: str
    args: tuple = ()
    value: float | None = None

    def _wrap(self, other):
        return other if isinstance(other, Expr) else const(other)

    def __add__(self, o):
        return Expr("add", (self, self._wrap(o)))

    def __radd__(self, o):
        return Expr("add", (self._wrap(o), self))

    def __sub__(self, o):
        return Expr("sub", (self, self._wrap(o)))

    def __rsub__(self, o):
        return Expr("sub", (self._wrap(o), self))

    def __mul__(self, o):
        return Expr("mul", (self, self._wrap(o)))

    def __rmul__(self, o):
        return Expr("mul", (self._wrap(o), self))

    def __truediv__(self, o):
        return Expr("div", (self, self._wrap(o)))

    def __rtruediv__(self, o):
        return Expr("div", (self._wrap(o), self))

    def __neg__(self):
        return Expr("neg", (self,))

    def __pow__(self, p):
        if isinstance(p, Expr):
            return Expr("pow", (self, p))
        return Expr("pow", (self,), float(p))

    def __repr__(self):
        if self.op == "coord":
            return f"x{int(self.value)}"
        if self.op == "const":
            return repr(self.value)
        return f"{self.op}({', '.join(map(repr, self.args))})"


def coord(i):
    return Expr("coord", (), float(i))


def coords(d):
    return [coord(i) for i in range(d)]


def const(c):
    return Expr("const", (), float(c))


def _unary(name):
    def f(e):
        return Expr(name, (e if isinstance(e, Expr) else const(e),))

    f.__name__ = name
    return f


exp = _unary("exp")
log = _unary("log")
sin = _unary("sin")
cos = _unary("cos")
sinh = _unary("sinh")
cosh = _unary("cosh")
sqrt = _unary("sqrt")


def norm2(exprs):
    """Sum of squares of the given expressions."""
    return Expr("norm2", tuple(e if isinstance(e, Expr) else const(e) for e in exprs))


def _toposort(outputs):
    """Nodes reachable from ``outputs``, children before parents."""
    order, seen = [], set()
    stack = [(e, False) for e in reversed(outputs)]
    while stack:
        node, done = stack.pop()
        if done:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for a in reversed(node.args):
            if id(a) not in seen:
                stack.append((a, False))
    return order


def evaluate(outputs, X, order=2):
    """Jets of the output expressions at points ``X`` (shape ``(B, d)``).

    Returns a :class:`Jet` with batch shape ``(B, len(outputs))``.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    B, d = X.shape
    memo = {}
    for node in _toposort(outputs):
        op = node.op
        if op == "coord":
            j = Jet.variable(X[:, int(node.value)], int(node.value), d, order)
        elif op == "const":
            j = Jet.constant(np.full(B, node.value), d, order)
        else:
            a = [memo[id(x)] for x in node.args]
            if op == "add":
                j = a[0] + a[1]
            elif op == "sub":
                j = a[0] - a[1]
            elif op == "mul":
                j = a[0] * a[1]
            elif op == "div":
                j = a[0] / a[1]
            elif op == "neg":
                j = -a[0]
            elif op == "pow":
                j = a[0] ** (a[1] if len(a) == 2 else node.value)
            elif op == "norm2":
                j = a[0] * a[0]
                for t in a[1:]:
                    j = j + t * t
            elif op in UNARY:
                j = getattr(a[0], op)()
            else:
                raise GeometryError("BAD_EXPRESSION", f"unknown op {op!r}")
        memo[id(node)] = j
    return Jet.stack([memo[id(e)] for e in outputs], axis=1)


def substitute(outputs, inputs):
    """Replace ``coord(i)`` by ``inputs[i]`` throughout ``outputs`` (composition)."""
    memo = {}
    for node in _toposort(outputs):
        if node.op == "coord":
            i = int(node.value)
            if i >= len(inputs):
                raise GeometryError("BAD_EXPRESSION", f"coordinate {i} has no substitute")
            memo[id(node)] = inputs[i]
        elif not node.args:
            memo[id(node)] = node
        else:
            memo[id(node)] = Expr(node.op, tuple(memo[id(a)] for a in node.args), node.value)
    return [memo[id(e)] for e in outputs]


def to_json(outputs, dim):
    """Node-table description: ``{"dim", "nodes": [...], "outputs": [...]}``."""
    nodes, index = [], {}
    for node in _toposort(outputs):
        rec = {"op": node.op}
        if node.op == "coord":
            rec["index"] = int(node.value)
        elif node.op == "const":
            rec["value"] = node.value
        else:
            rec["args"] = [index[id(a)] for a in node.args]
            if node.op == "pow" and len(node.args) == 1:
                rec["exponent"] = node.value
        index[id(node)] = len(nodes)
        nodes.append(rec)
    return {"dim": int(dim), "nodes": nodes, "outputs": [index[id(e)] for e in outputs]}


def from_json(desc):
    """Inverse of :func:`to_json`.

    Also accepts ``{"op": "compose", "patch": <description>, "args": [...]}``
    nodes whose sub-description has a single output; they are expanded by
    substitution at load time.
    """
    try:
        built = []
        for rec in desc["nodes"]:
            op = rec["op"]
            if op == "coord":
                e = coord(int(rec["index"]))
            elif op == "const":
                e = const(float(rec["value"]))
            elif op == "compose":
                inner, _ = from_json(rec["patch"])
                if len(inner) != 1:
                    raise GeometryError("BAD_EXPRESSION", "compose node needs a single-output patch")
                e = substitute(inner, [built[k] for k in rec["args"]])[0]
            elif op == "pow" and "exponent" in rec:
                e = Expr("pow", (built[rec["args"][0]],), float(rec["exponent"]))
            elif op in UNARY or op in BINARY or op in ("pow", "norm2"):
                e = Expr(op, tuple(built[k] for k in rec["args"]))
            else:
                raise GeometryError("BAD_EXPRESSION", f"unknown op {op!r}")
            built.append(e)
        outputs = [built[k] for k in desc["outputs"]]
        return outputs, int(desc["dim"])
    except (KeyError, IndexError, TypeError) as exc:
        raise GeometryError("BAD_EXPRESSION", f"malformed description: {exc}") from exc


def finite_difference(fn, x, h=1e-4):
    """Central-difference gradient and Hessian of ``fn: R^d -> R^D``.

    A cross-check oracle for the jet arithmetic, not used by the pipeline.
    """
    x = np.asarray(x, dtype=float)
    d = x.size
    f0 = np.asarray(fn(x), dtype=float)
    grad = np.zeros(f0.shape + (d,))
    hess = np.zeros(f0.shape + (d, d))
    E = np.eye(d) * h
    for i in range(d):
        fp, fm = np.asarray(fn(x + E[i])), np.asarray(fn(x - E[i]))
        grad[..., i] = (fp - fm) / (2 * h)
        hess[..., i, i] = (fp - 2 * f0 + fm) / h**2
        for j in range(i):
            fpp = np.asarray(fn(x + E[i] + E[j]))
            fpm = np.asarray(fn(x + E[i] - E[j]))
            fmp = np.asarray(fn(x - E[i] + E[j]))
            fmm = np.asarray(fn(x - E[i] - E[j]))
            hess[..., i, j] = hess[..., j, i] = (fpp - fpm - fmp + fmm) / (4 * h * h)
    return f0, grad, hess

