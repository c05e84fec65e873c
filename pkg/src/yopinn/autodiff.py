"""Tape-based reverse-mode automatic differentiation over numpy scalars/arrays.

The engine records a computation as an append-only tape of nodes.  Two
differentiation entry points are provided:

* :func:`gradient` -- one raw reverse sweep producing plain numpy gradients
  of a scalar output with respect to any set of leaves.  This is the fast
  path used once per optimization step.

* :func:`derivative_graph` -- the derivative of an output with respect to an
  input leaf, returned as a new value *recorded on the tape*, so it can be
  differentiated again (second derivatives in the inputs) and so that
  parameter gradients flow through it.  Internally this propagates a tangent
  through the recorded subgraph, emitting ordinary tape operations; pushes
  are memoized per leaf so repeated requests share work.

Values are numpy arrays (0-d for scalars).  Batched use is supported with a
diagonal-Jacobian convention: when output and leaf are same-shaped arrays,
component i of the output must depend only on component i of the leaf (the
case for pointwise field evaluation over a batch of sample points).
"""

from __future__ import annotations

import itertools

import numpy as np

__all__ = [
    "Tape",
    "DiffValue",
    "TapeMixError",
    "NonLeafError",
    "record",
    "gradient",
    "derivative_graph",
    "check_gradient_fd",
    "tanh",
    "exp",
    "sin",
    "cos",
    "square",
    "total_sum",
    "total_mean",
    "sum_squares",
    "affine",
    "scaled_tanh",
    "matmul",
    "get_row",
    "row_stack",
]

EPS_FLOOR = 1e-12  # floor for relative comparisons throughout the package

_generation = itertools.count(1)

_malloc_tuned = False


def enable_large_alloc_reuse():
    """Raise glibc's mmap threshold so the large arrays churned by tape
    construction are recycled from the heap instead of being mapped and
    faulted in afresh on every operation.  Idempotent; no-op off glibc."""
    global _malloc_tuned
    if _malloc_tuned:
        return
    _malloc_tuned = True
    try:
        import ctypes

        libc = ctypes.CDLL("libc.so.6")
        libc.mallopt(-3, 1 << 30)  # M_MMAP_THRESHOLD
    except Exception:
        pass


class TapeMixError(RuntimeError):
    """Raised when values from different tape generations are combined."""


class NonLeafError(ValueError):
    """Raised when a derivative is requested with respect to a non-leaf."""


class _Node:
    __slots__ = ("op", "parents", "value", "aux", "req")

    def __init__(self, op, parents, value, aux, req):
        self.op = op
        self.parents = parents
        self.value = value
        self.aux = aux
        self.req = req


class Tape:
    """Append-only record of operations; node parents always precede it."""

    __slots__ = ("nodes", "generation", "dtype", "_tangents", "_memos")

    def __init__(self, dtype=np.float64):
        self.nodes = []
        self.generation = next(_generation)
        self.dtype = np.dtype(dtype)
        self._tangents = {}  # leaf node id -> {node id: tangent id or -1}
        self._memos = {}     # (tag, node id) -> node id, shared across pushes

    def __len__(self):
        return len(self.nodes)

    def _append(self, op, parents, value, aux=None, req=None):
        if req is None:
            nodes = self.nodes
            req = any(nodes[p].req for p in parents)
        self.nodes.append(_Node(op, parents, value, aux, req))
        return DiffValue(self, len(self.nodes) - 1)

    def leaf(self, value):
        """Create a differentiable input/parameter leaf."""
        return self._append("leaf", (), np.asarray(value, self.dtype), req=True)

    def constant(self, value):
        """Create a non-differentiable constant."""
        return self._append("const", (), np.asarray(value, self.dtype), req=False)


class DiffValue:
    """Handle to one tape node.  Supports arithmetic with values of the
    same tape generation and with plain numbers/arrays (lifted to consts)."""

    __slots__ = ("tape", "idx")

    def __init__(self, tape, idx):
        self.tape = tape
        self.idx = idx

    @property
    def value(self):
        return self.tape.nodes[self.idx].value

    @property
    def shape(self):
        return self.tape.nodes[self.idx].value.shape

    def is_leaf(self):
        return self.tape.nodes[self.idx].op == "leaf"

    def __repr__(self):
        return f"DiffValue(gen={self.tape.generation}, idx={self.idx}, value={self.value!r})"

    # -- arithmetic ----------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, DiffValue):
            if other.tape is not self.tape:
                raise TapeMixError(
                    f"cannot combine values from tape generations "
                    f"{self.tape.generation} and {other.tape.generation}"
                )
            return other
        return self.tape.constant(other)

    def __add__(self, other):
        if not isinstance(other, DiffValue):
            return self.tape._append("addc", (self.idx,), self.value + other, aux=other)
        other = self._coerce(other)
        return self.tape._append("add", (self.idx, other.idx), self.value + other.value)

    __radd__ = __add__

    def __sub__(self, other):
        if not isinstance(other, DiffValue):
            return self.tape._append("addc", (self.idx,), self.value - other, aux=-other)
        other = self._coerce(other)
        return self.tape._append("sub", (self.idx, other.idx), self.value - other.value)

    def __rsub__(self, other):
        neg = self.tape._append("neg", (self.idx,), -self.value)
        return neg.__add__(other)

    def __mul__(self, other):
        if not isinstance(other, DiffValue):
            return self.tape._append("scale", (self.idx,), self.value * other, aux=other)
        other = self._coerce(other)
        return self.tape._append("mul", (self.idx, other.idx), self.value * other.value)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, DiffValue):
            return self.tape._append("scale", (self.idx,), self.value / other, aux=1.0 / other)
        other = self._coerce(other)
        return self.tape._append("div", (self.idx, other.idx), self.value / other.value)

    def __rtruediv__(self, other):
        other = self._coerce(other)
        return self.tape._append("div", (other.idx, self.idx), other.value / self.value)

    def __neg__(self):
        return self.tape._append("neg", (self.idx,), -self.value)

    def __pow__(self, k):
        if not isinstance(k, int) or k < 2:
            raise ValueError("only integer powers k >= 2 are supported; use * for k=1")
        return self.tape._append("powi", (self.idx,), self.value ** k, aux=k)


# ---------------------------------------------------------------------------
# elementwise / structural operations
# ---------------------------------------------------------------------------

def tanh(x: DiffValue) -> DiffValue:
    return x.tape._append("tanh", (x.idx,), np.tanh(x.value))


def exp(x: DiffValue) -> DiffValue:
    return x.tape._append("exp", (x.idx,), np.exp(x.value))


def sin(x: DiffValue) -> DiffValue:
    return x.tape._append("sin", (x.idx,), np.sin(x.value))


def cos(x: DiffValue) -> DiffValue:
    return x.tape._append("cos", (x.idx,), np.cos(x.value))


def square(x: DiffValue) -> DiffValue:
    return x.tape._append("square", (x.idx,), x.value * x.value)


def one_minus_sq(x: DiffValue) -> DiffValue:
    """1 - x*x as a single node (the tanh-derivative factor)."""
    v = x.value
    return x.tape._append("omsq", (x.idx,), 1.0 - v * v)


def total_sum(x: DiffValue) -> DiffValue:
    """Sum of all elements, as a scalar tape value."""
    return x.tape._append("sum", (x.idx,), np.asarray(x.value.sum()), aux=x.value.shape)


def total_mean(x: DiffValue) -> DiffValue:
    n = x.value.size
    return total_sum(x) * (1.0 / n)


def sum_squares(x: DiffValue) -> DiffValue:
    """Sum of squared elements, as a scalar tape value."""
    v = x.value.ravel()
    return x.tape._append("sumsq", (x.idx,), np.asarray(v @ v), aux=x.value.shape)


def affine(W: DiffValue, X: DiffValue, b: DiffValue) -> DiffValue:
    """W @ X + b with b broadcast over columns; one fused node."""
    _same_tape(W, X, b)
    return W.tape._append("affine", (W.idx, X.idx, b.idx), W.value @ X.value + b.value)


def scaled_tanh(a: DiffValue, Z: DiffValue, scale: float) -> DiffValue:
    """Per-row adaptive activation tanh(scale * a * Z); a broadcasts over columns."""
    _same_tape(a, Z)
    # (scale * a) first: with a = 1/scale the product is exactly 1, reducing
    # the activation bit-exactly to a plain tanh layer.
    return a.tape._append(
        "ltanh", (a.idx, Z.idx), np.tanh((scale * a.value) * Z.value), aux=scale
    )


def matmul(A: DiffValue, B: DiffValue, trans_a=False, trans_b=False) -> DiffValue:
    _same_tape(A, B)
    av = A.value.T if trans_a else A.value
    bv = B.value.T if trans_b else B.value
    return A.tape._append("matmul", (A.idx, B.idx), av @ bv, aux=(trans_a, trans_b))


def get_row(X: DiffValue, i: int) -> DiffValue:
    return X.tape._append("getrow", (X.idx,), X.value[i], aux=i)


def row_stack(values) -> DiffValue:
    values = list(values)
    _same_tape(*values)
    data = np.stack([v.value for v in values])
    return values[0].tape._append("rowstack", tuple(v.idx for v in values), data)


def _row_embed(v: DiffValue, i: int, nrows: int) -> DiffValue:
    out = np.zeros((nrows,) + v.value.shape, dtype=v.tape.dtype)
    out[i] = v.value
    return v.tape._append("rowembed", (v.idx,), out, aux=(i, nrows))


def _same_tape(*vals):
    t = vals[0].tape
    for v in vals[1:]:
        if v.tape is not t:
            raise TapeMixError(
                f"cannot combine values from tape generations "
                f"{t.generation} and {v.tape.generation}"
            )


def record(op_kind, inputs, value, partials) -> DiffValue:
    """Record a custom node with explicit local partials.

    The backward contribution to input i is ``partials[i] * adjoint``
    (broadcast, then reduced to the input's shape).  Partials are treated as
    constants by :func:`derivative_graph`, so custom nodes are first-order
    only; the built-in operations support arbitrary nesting.
    """
    inputs = list(inputs)
    if not inputs:
        raise ValueError("record() needs at least one input")
    if len(partials) != len(inputs):
        raise ValueError("partials must have the same length as inputs")
    _same_tape(*inputs)
    tape = inputs[0].tape
    parts = tuple(np.asarray(p, tape.dtype) for p in partials)
    return tape._append(
        "custom",
        tuple(v.idx for v in inputs),
        np.asarray(value, tape.dtype),
        aux=(op_kind, parts),
    )


# ---------------------------------------------------------------------------
# reverse sweep (raw numpy adjoints)
# ---------------------------------------------------------------------------

def _unbroadcast(g, shape):
    if g.shape == shape:
        return g
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, s in enumerate(shape):
        if s == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


def gradient(output: DiffValue, wrt) -> list:
    """Gradients of a scalar output with respect to each value in ``wrt``.

    One reverse sweep over the tape; leaves not on any path from the output
    receive an exact zero.  Returns plain numpy arrays shaped like the
    corresponding wrt values.
    """
    single = isinstance(wrt, DiffValue)
    wrt_list = [wrt] if single else list(wrt)
    tape = output.tape
    for w in wrt_list:
        if w.tape is not tape:
            raise TapeMixError("wrt value lives on a different tape generation")
    if output.value.size != 1:
        raise ValueError(f"gradient() needs a scalar output, got shape {output.shape}")

    nodes = tape.nodes
    keep = {w.idx for w in wrt_list}
    adj = [None] * (output.idx + 1)
    owned = [False] * (output.idx + 1)
    adj[output.idx] = np.ones_like(output.value)
    owned[output.idx] = True

    def push(pid, contrib, fresh):
        if adj[pid] is None:
            adj[pid] = contrib
            owned[pid] = fresh
        elif owned[pid] and adj[pid].shape == np.shape(contrib):
            adj[pid] += contrib
        else:
            adj[pid] = adj[pid] + contrib
            owned[pid] = True

    for nid in range(output.idx, -1, -1):
        g = adj[nid]
        if g is None:
            continue
        node = nodes[nid]
        op = node.op
        if op in ("leaf", "const"):
            continue
        pr = node.parents
        pn = [nodes[p] for p in pr]

        if op == "add":
            if pn[0].req:
                push(pr[0], _unbroadcast(g, pn[0].value.shape), False)
            if pn[1].req:
                push(pr[1], _unbroadcast(g, pn[1].value.shape), False)
        elif op == "mul":
            if pn[0].req:
                push(pr[0], _unbroadcast(g * pn[1].value, pn[0].value.shape), True)
            if pn[1].req:
                push(pr[1], _unbroadcast(g * pn[0].value, pn[1].value.shape), True)
        elif op == "sub":
            if pn[0].req:
                push(pr[0], _unbroadcast(g, pn[0].value.shape), False)
            if pn[1].req:
                push(pr[1], _unbroadcast(-g, pn[1].value.shape), True)
        elif op == "div":
            if pn[0].req:
                push(pr[0], _unbroadcast(g / pn[1].value, pn[0].value.shape), True)
            if pn[1].req:
                push(pr[1], _unbroadcast(-g * node.value / pn[1].value, pn[1].value.shape), True)
        elif op == "scale":
            if pn[0].req:
                push(pr[0], g * node.aux, True)
        elif op == "addc":
            if pn[0].req:
                push(pr[0], g, False)
        elif op == "neg":
            if pn[0].req:
                push(pr[0], -g, True)
        elif op == "square":
            if pn[0].req:
                push(pr[0], 2.0 * pn[0].value * g, True)
        elif op == "omsq":
            if pn[0].req:
                push(pr[0], -2.0 * pn[0].value * g, True)
        elif op == "powi":
            if pn[0].req:
                k = node.aux
                push(pr[0], k * pn[0].value ** (k - 1) * g, True)
        elif op == "tanh":
            if pn[0].req:
                push(pr[0], (1.0 - node.value * node.value) * g, True)
        elif op == "exp":
            if pn[0].req:
                push(pr[0], node.value * g, True)
        elif op == "sin":
            if pn[0].req:
                push(pr[0], np.cos(pn[0].value) * g, True)
        elif op == "cos":
            if pn[0].req:
                push(pr[0], -np.sin(pn[0].value) * g, True)
        elif op == "sum":
            if pn[0].req:
                push(pr[0], np.broadcast_to(g, node.aux), False)
        elif op == "sumsq":
            if pn[0].req:
                push(pr[0], (2.0 * g) * pn[0].value, True)
        elif op == "affine":
            W, X, b = pn
            if W.req:
                push(pr[0], g @ X.value.T, True)
            if X.req:
                push(pr[1], W.value.T @ g, True)
            if b.req:
                push(pr[2], g.sum(axis=1, keepdims=True), True)
        elif op == "ltanh":
            a, Z = pn
            w = (node.aux * (1.0 - node.value * node.value)) * g
            if a.req:
                push(pr[0], (w * Z.value).sum(axis=1, keepdims=True), True)
            if Z.req:
                push(pr[1], w * a.value, True)
        elif op == "matmul":
            ta, tb = node.aux
            A, B = pn
            if A.req:
                if ta:
                    ga = (B.value.T @ g.T) if tb else (B.value @ g.T)
                else:
                    ga = (g @ B.value) if tb else (g @ B.value.T)
                push(pr[0], ga, True)
            if B.req:
                if tb:
                    gb = (g.T @ A.value.T) if ta else (g.T @ A.value)
                else:
                    gb = (A.value @ g) if ta else (A.value.T @ g)
                push(pr[1], gb, True)
        elif op == "getrow":
            if pn[0].req:
                full = np.zeros_like(pn[0].value)
                full[node.aux] = g
                push(pr[0], full, True)
        elif op == "rowembed":
            if pn[0].req:
                push(pr[0], g[node.aux[0]], False)
        elif op == "rowstack":
            for j, p in enumerate(pr):
                if pn[j].req:
                    push(p, g[j], False)
        elif op == "custom":
            parts = node.aux[1]
            for p, part in zip(pr, parts):
                if nodes[p].req:
                    push(p, _unbroadcast(part * g, nodes[p].value.shape), True)
        else:  # pragma: no cover
            raise RuntimeError(f"no backward rule for op {op!r}")

        if nid not in keep:
            adj[nid] = None  # processed; release promptly

    out = []
    for w in wrt_list:
        a = adj[w.idx] if w.idx <= output.idx else None
        if a is None:
            out.append(np.zeros_like(w.value))
        else:
            out.append(np.array(a, copy=True) if not owned[w.idx] else a)
    return out[0] if single else out


# ---------------------------------------------------------------------------
# on-tape derivatives (tangent propagation, memoized per leaf)
# ---------------------------------------------------------------------------

def derivative_graph(output: DiffValue, wrt: DiffValue) -> DiffValue:
    """Derivative of ``output`` w.r.t. the input leaf ``wrt``, on the tape.

    The result is an ordinary tape value: differentiating it again yields
    higher input derivatives, and :func:`gradient` of anything built from it
    propagates into network parameters.  ``output`` and ``wrt`` must be
    same-shaped (batched, diagonal Jacobian) or ``wrt`` must be scalar.
    """
    tape = output.tape
    if wrt.tape is not tape:
        raise TapeMixError("wrt value lives on a different tape generation")
    if not wrt.is_leaf():
        raise NonLeafError("derivative_graph requires wrt to be an input leaf")
    if wrt.value.size != 1 and output.shape != wrt.shape:
        raise ValueError(
            "output and wrt must be same-shaped for batched derivatives "
            f"(got {output.shape} vs {wrt.shape})"
        )

    cache = tape._tangents.setdefault(wrt.idx, {})
    if wrt.idx not in cache:
        cache[wrt.idx] = tape.constant(np.ones_like(wrt.value)).idx

    tid = _push_tangent(tape, cache, output.idx)
    if tid < 0:
        return tape.constant(np.zeros_like(output.value))
    return DiffValue(tape, tid)


def _push_tangent(tape, cache, target):
    """Ensure tangents exist for all ancestors of ``target``; return its id."""
    if target in cache:
        return cache[target]
    nodes = tape.nodes
    # collect ancestors whose tangent is still unknown
    todo = []
    seen = {target}
    stack = [target]
    while stack:
        nid = stack.pop()
        if nid in cache:
            continue
        todo.append(nid)
        for p in nodes[nid].parents:
            if p not in seen and p not in cache:
                seen.add(p)
                stack.append(p)
    for nid in sorted(todo):
        if nid not in cache:
            cache[nid] = _emit_jvp(tape, cache, nid)
    return cache[target]


def _emit_jvp(tape, cache, nid):
    """Emit tape ops for the tangent of node ``nid``; -1 encodes a zero tangent."""
    nodes = tape.nodes
    node = nodes[nid]
    op = node.op
    if op in ("leaf", "const"):
        return -1
    pr = node.parents
    tg = [cache.get(p, -1) for p in pr]
    if all(t < 0 for t in tg):
        return -1

    def dv(i):
        return DiffValue(tape, i)

    this = dv(nid)
    if op == "add":
        if tg[0] < 0:
            return tg[1] if nodes[tg[1]].value.shape == node.value.shape else _bcast(tape, tg[1], node)
        if tg[1] < 0:
            return _maybe_bcast(tape, tg[0], node)
        return (dv(tg[0]) + dv(tg[1])).idx
    if op == "sub":
        if tg[0] < 0:
            return _maybe_bcast(tape, (-dv(tg[1])).idx, node)
        if tg[1] < 0:
            return _maybe_bcast(tape, tg[0], node)
        return (dv(tg[0]) - dv(tg[1])).idx
    if op == "mul":
        a, b = dv(pr[0]), dv(pr[1])
        if tg[0] < 0:
            return (a * dv(tg[1])).idx
        if tg[1] < 0:
            return (dv(tg[0]) * b).idx
        return (dv(tg[0]) * b + a * dv(tg[1])).idx
    if op == "div":
        a, b = dv(pr[0]), dv(pr[1])
        if tg[1] < 0:
            return (dv(tg[0]) / b).idx
        if tg[0] < 0:
            return (-this * dv(tg[1]) / b).idx
        return ((dv(tg[0]) - this * dv(tg[1])) / b).idx
    if op == "scale":
        return (dv(tg[0]) * node.aux).idx
    if op == "addc":
        return tg[0]
    if op == "neg":
        return (-dv(tg[0])).idx
    if op == "square":
        return (dv(pr[0]) * dv(tg[0]) * 2.0).idx
    if op == "powi":
        k = node.aux
        base = dv(pr[0])
        p = base * base if k == 3 else (base if k == 2 else base ** (k - 1))
        return (p * dv(tg[0]) * float(k)).idx
    if op == "tanh":
        sig = _memo(tape, "omsq", nid, lambda: one_minus_sq(this))
        return (sig * dv(tg[0])).idx
    if op == "omsq":
        return (dv(pr[0]) * dv(tg[0]) * -2.0).idx
    if op == "exp":
        return (this * dv(tg[0])).idx
    if op == "sin":
        sig = _memo(tape, "cos", nid, lambda: cos(dv(pr[0])))
        return (sig * dv(tg[0])).idx
    if op == "cos":
        sig = _memo(tape, "msin", nid, lambda: -sin(dv(pr[0])))
        return (sig * dv(tg[0])).idx
    if op == "sum":
        return total_sum(dv(tg[0])).idx
    if op == "sumsq":
        return (total_sum(dv(pr[0]) * dv(tg[0])) * 2.0).idx
    if op == "affine":
        terms = []
        if tg[0] >= 0:
            terms.append(matmul(dv(tg[0]), dv(pr[1])))
        if tg[1] >= 0:
            terms.append(matmul(dv(pr[0]), dv(tg[1])))
        if tg[2] >= 0:
            terms.append(dv(tg[2]))
        t = terms[0]
        for extra in terms[1:]:
            t = t + extra
        return t.idx
    if op == "ltanh":
        a, Z = dv(pr[0]), dv(pr[1])
        # tangent = (1 - y^2) * (scale*da*Z + (scale*a)*dZ); the derivative
        # factor and the scaled slope are shared between pushes
        sig = _memo(tape, "omsq", nid, lambda: one_minus_sq(this))
        sa = _memo(tape, "sslope", pr[0], lambda: a * node.aux)
        if tg[0] < 0:
            inner = sa * dv(tg[1])
        elif tg[1] < 0:
            inner = dv(tg[0]) * node.aux * Z
        else:
            inner = dv(tg[0]) * node.aux * Z + sa * dv(tg[1])
        return (sig * inner).idx
    if op == "matmul":
        ta, tb = node.aux
        terms = []
        if tg[0] >= 0:
            terms.append(matmul(dv(tg[0]), dv(pr[1]), ta, tb))
        if tg[1] >= 0:
            terms.append(matmul(dv(pr[0]), dv(tg[1]), ta, tb))
        t = terms[0]
        for extra in terms[1:]:
            t = t + extra
        return t.idx
    if op == "getrow":
        return get_row(dv(tg[0]), node.aux).idx
    if op == "rowembed":
        return _row_embed(dv(tg[0]), node.aux[0], node.aux[1]).idx
    if op == "rowstack":
        parts = [
            dv(t) if t >= 0 else tape.constant(np.zeros_like(nodes[p].value))
            for t, p in zip(tg, pr)
        ]
        return row_stack(parts).idx
    if op == "custom":
        parts = node.aux[1]
        t = None
        for tgi, part in zip(tg, parts):
            if tgi < 0:
                continue
            term = dv(tgi) * part
            t = term if t is None else t + term
        return t.idx
    raise RuntimeError(f"no tangent rule for op {op!r}")  # pragma: no cover


def _memo(tape, tag, nid, build):
    key = (tag, nid)
    hit = tape._memos.get(key)
    if hit is None:
        hit = build().idx
        tape._memos[key] = hit
    return DiffValue(tape, hit)


def _maybe_bcast(tape, tid, node):
    if tape.nodes[tid].value.shape == node.value.shape:
        return tid
    return _bcast(tape, tid, node)


def _bcast(tape, tid, node):
    # add of a broadcast-shaped tangent: materialize via + 0 const
    zero = tape.constant(np.zeros_like(node.value))
    return (DiffValue(tape, tid) + zero).idx


# ---------------------------------------------------------------------------
# finite-difference gradient checking
# ---------------------------------------------------------------------------

def check_gradient_fd(fun_and_grad, point, step):
    """Max relative deviation between an analytic gradient and central FD.

    ``fun_and_grad(x)`` must return ``(value, gradient)`` for a flat numpy
    vector ``x``; only the value is used for the finite differences.
    Relative deviation uses an absolute floor of ``EPS_FLOOR``.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    x0 = np.asarray(point, dtype=np.float64).ravel().copy()
    f0, g0 = fun_and_grad(x0)
    g0 = np.asarray(g0, dtype=np.float64).ravel()
    if not np.isfinite(f0) or not np.all(np.isfinite(g0)):
        raise FloatingPointError("non-finite value in function or gradient")
    worst = 0.0
    for i in range(x0.size):
        xp = x0.copy()
        xp[i] += step
        fp, _ = fun_and_grad(xp)
        xm = x0.copy()
        xm[i] -= step
        fm, _ = fun_and_grad(xm)
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise FloatingPointError(f"non-finite function value near coordinate {i}")
        fd = (fp - fm) / (2.0 * step)
        dev = abs(g0[i] - fd) / (abs(g0[i]) + EPS_FLOOR)
        worst = max(worst, dev)
    return worst
