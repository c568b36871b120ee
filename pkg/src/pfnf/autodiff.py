"""Reverse-mode automatic differentiation over dense numpy tensors.

Define-by-run: composing ops records an implicit DAG; ``Tensor.backward``
walks it once in reverse topological order. Single-threaded use of one graph
is assumed; distinct graphs are independent. Tensors are immutable after
creation except for gradient accumulation.

Default precision is float32; wrap test code in ``default_dtype(np.float64)``
for finite-difference checks.
"""

from __future__ import annotations

import contextlib
from typing import Iterable, Sequence

import numpy as np

from . import _kernels as K


class ShapeError(ValueError):
    """Operand shapes incompatible with the op; message names the op."""


class NonFiniteError(FloatingPointError):
    """An intermediate value became NaN or Inf; message names the op."""


class BackwardError(RuntimeError):
    """Backward invoked on a graph that cannot supply gradients."""


DEFAULT_DTYPE = np.float32

_grad_enabled = True
_finite_checks = True


@contextlib.contextmanager
def default_dtype(dtype):
    global DEFAULT_DTYPE
    prev = DEFAULT_DTYPE
    DEFAULT_DTYPE = np.dtype(dtype).type
    try:
        yield
    finally:
        DEFAULT_DTYPE = prev


@contextlib.contextmanager
def no_grad():
    """Disable graph recording (inference mode)."""
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


def set_finite_checks(enabled: bool) -> bool:
    """Toggle per-op NaN/Inf validation; returns the previous setting."""
    global _finite_checks
    prev = _finite_checks
    _finite_checks = bool(enabled)
    return prev


def _check_finite(data: np.ndarray, op: str) -> None:
    if _finite_checks and not np.isfinite(data).all():
        raise NonFiniteError(f"non-finite value produced by op '{op}'")


class Tensor:
    """A dense array plus its position in the autodiff graph."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "op")

    def __init__(self, data, requires_grad: bool = False, *, op: str = "leaf",
                 parents: tuple = (), backward=None, dtype=None):
        arr = np.asarray(data, dtype=dtype if dtype is not None else DEFAULT_DTYPE)
        self.data = arr
        self.grad = None
        self.requires_grad = requires_grad
        self._parents = parents
        self._backward = backward
        self.op = op

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def __repr__(self):
        return f"Tensor(op={self.op}, shape={self.data.shape}, grad={self.requires_grad})"

    def item(self) -> float:
        return float(self.data)

    def backward(self, grad=None) -> None:
        """Accumulate gradients into every reachable tensor with
        requires_grad set. ``grad`` defaults to ones for scalars."""
        if not self.requires_grad:
            raise BackwardError(
                "backward on a tensor with no recorded graph (no_grad mode, "
                "or no parameter requires gradients)")
        if grad is None:
            if self.data.ndim != 0 and self.data.size != 1:
                raise BackwardError(
                    "backward on a non-scalar output requires an explicit gradient")
            grad = np.ones_like(self.data)
        grad = np.asarray(grad, dtype=self.data.dtype)
        if grad.shape != self.data.shape:
            raise ShapeError(
                f"output gradient shape {grad.shape} does not match output {self.data.shape}")
        order = _toposort(self)
        self.grad = grad
        for node in order:
            if node._backward is None:
                continue
            if node.grad is None:
                continue
            node._backward(node.grad)
            _check_finite_grads(node)

    # light operator sugar; heavy ops are module functions
    def __add__(self, other):
        return add(self, _as_tensor(other, self.dtype))

    def __radd__(self, other):
        return add(_as_tensor(other, self.dtype), self)

    def __sub__(self, other):
        return sub(self, _as_tensor(other, self.dtype))

    def __rsub__(self, other):
        return sub(_as_tensor(other, self.dtype), self)

    def __mul__(self, other):
        return mul(self, _as_tensor(other, self.dtype))

    def __rmul__(self, other):
        return mul(_as_tensor(other, self.dtype), self)

    def __truediv__(self, other):
        return div(self, _as_tensor(other, self.dtype))

    def __matmul__(self, other):
        return matmul(self, other)

    def __neg__(self):
        return mul(self, _as_tensor(-1.0, self.dtype))

    def __pow__(self, exponent):
        return power(self, exponent)


def _check_finite_grads(node: Tensor) -> None:
    if not _finite_checks:
        return
    for p in node._parents:
        if p.grad is not None and not np.isfinite(p.grad).all():
            raise NonFiniteError(f"non-finite gradient flowing into op '{p.op}'")


def _as_tensor(value, dtype) -> Tensor:
    if isinstance(value, Tensor):
        return value
    return Tensor(np.asarray(value, dtype=dtype), dtype=dtype)


def tensor(data, requires_grad: bool = False) -> Tensor:
    return Tensor(data, requires_grad=requires_grad)


def param(data) -> Tensor:
    return Tensor(data, requires_grad=True)


def _toposort(root: Tensor) -> list[Tensor]:
    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, processed = stack.pop()
        if processed:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in seen:
                stack.append((p, False))
    order.reverse()
    return order


def _needs_graph(*tensors: Tensor) -> bool:
    return _grad_enabled and any(t.requires_grad for t in tensors)


def _accum(t: Tensor, g: np.ndarray) -> None:
    if t.grad is None:
        t.grad = g.astype(t.data.dtype, copy=False)
    else:
        t.grad = t.grad + g


def _make(data, op, parents, backward) -> Tensor:
    _check_finite(data, op)
    if _needs_graph(*parents):
        out = Tensor(data, requires_grad=True, op=op, parents=tuple(parents),
                     backward=None, dtype=data.dtype)
        out._backward = backward(out)
        return out
    return Tensor(data, op=op, dtype=data.dtype)


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    """Reduce a gradient back to the shape of a broadcast operand."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


# ---------------------------------------------------------------- basic ops

def add(a: Tensor, b: Tensor) -> Tensor:
    try:
        data = a.data + b.data
    except ValueError as e:
        raise ShapeError(f"add: {a.shape} vs {b.shape}") from e

    def bwd(out):
        def run(g):
            if a.requires_grad:
                _accum(a, _unbroadcast(g, a.data.shape))
            if b.requires_grad:
                _accum(b, _unbroadcast(g, b.data.shape))
        return run
    return _make(data, "add", (a, b), bwd)


def sub(a: Tensor, b: Tensor) -> Tensor:
    try:
        data = a.data - b.data
    except ValueError as e:
        raise ShapeError(f"sub: {a.shape} vs {b.shape}") from e

    def bwd(out):
        def run(g):
            if a.requires_grad:
                _accum(a, _unbroadcast(g, a.data.shape))
            if b.requires_grad:
                _accum(b, _unbroadcast(-g, b.data.shape))
        return run
    return _make(data, "sub", (a, b), bwd)


def mul(a: Tensor, b: Tensor) -> Tensor:
    try:
        data = a.data * b.data
    except ValueError as e:
        raise ShapeError(f"mul: {a.shape} vs {b.shape}") from e

    def bwd(out):
        def run(g):
            if a.requires_grad:
                _accum(a, _unbroadcast(g * b.data, a.data.shape))
            if b.requires_grad:
                _accum(b, _unbroadcast(g * a.data, b.data.shape))
        return run
    return _make(data, "mul", (a, b), bwd)


def div(a: Tensor, b: Tensor) -> Tensor:
    try:
        data = a.data / b.data
    except ValueError as e:
        raise ShapeError(f"div: {a.shape} vs {b.shape}") from e

    def bwd(out):
        def run(g):
            if a.requires_grad:
                _accum(a, _unbroadcast(g / b.data, a.data.shape))
            if b.requires_grad:
                _accum(b, _unbroadcast(-g * a.data / (b.data * b.data), b.data.shape))
        return run
    return _make(data, "div", (a, b), bwd)


def power(a: Tensor, exponent: float) -> Tensor:
    data = a.data ** exponent

    def bwd(out):
        def run(g):
            if a.requires_grad:
                _accum(a, g * exponent * a.data ** (exponent - 1))
        return run
    return _make(data, "pow", (a,), bwd)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.shape[-1] != b.data.shape[-2 if b.data.ndim > 1 else 0]:
        raise ShapeError(f"matmul: {a.shape} @ {b.shape}")
    data = a.data @ b.data

    def bwd(out):
        def run(g):
            if a.requires_grad:
                ga = g @ np.swapaxes(b.data, -1, -2)
                _accum(a, _unbroadcast(ga, a.data.shape))
            if b.requires_grad:
                gb = np.swapaxes(a.data, -1, -2) @ g
                _accum(b, _unbroadcast(gb, b.data.shape))
        return run
    return _make(data, "matmul", (a, b), bwd)


def linear(x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    """x @ w + b, fused."""
    if x.data.shape[-1] != w.data.shape[0]:
        raise ShapeError(f"linear: {x.shape} @ {w.shape}")
    data = x.data @ w.data
    data += b.data

    def bwd(out):
        def run(g):
            g2 = g.reshape(-1, g.shape[-1])
            if x.requires_grad:
                _accum(x, (g @ w.data.T))
            if w.requires_grad:
                x2 = x.data.reshape(-1, x.data.shape[-1])
                _accum(w, x2.T @ g2)
            if b.requires_grad:
                _accum(b, g2.sum(axis=0))
        return run
    return _make(data, "linear", (x, w, b), bwd)


def relu(x: Tensor) -> Tensor:
    data = np.maximum(x.data, 0)

    def bwd(out):
        def run(g):
            if x.requires_grad:
                _accum(x, g * (x.data > 0))
        return run
    return _make(data, "relu", (x,), bwd)


def gelu(x: Tensor) -> Tensor:
    """tanh-approximation GELU."""
    data, t_cache = K.gelu_fwd(x.data)

    def bwd(out):
        def run(g):
            if x.requires_grad:
                _accum(x, K.gelu_bwd(x.data, t_cache, g))
        return run
    return _make(data, "gelu", (x,), bwd)


def tanh(x: Tensor) -> Tensor:
    data = np.tanh(x.data)

    def bwd(out):
        def run(g):
            if x.requires_grad:
                _accum(x, g * (1 - data * data))
        return run
    return _make(data, "tanh", (x,), bwd)


def exp(x: Tensor) -> Tensor:
    data = np.exp(x.data)

    def bwd(out):
        def run(g):
            if x.requires_grad:
                _accum(x, g * data)
        return run
    return _make(data, "exp", (x,), bwd)


def log(x: Tensor) -> Tensor:
    with np.errstate(all="ignore"):
        data = np.log(x.data)

    def bwd(out):
        def run(g):
            if x.requires_grad:
                _accum(x, g / x.data)
        return run
    return _make(data, "log", (x,), bwd)


def softmax(x: Tensor, temperature: float = 1.0) -> Tensor:
    """Softmax over the last axis with logits divided by ``temperature``."""
    if temperature <= 0:
        raise ValueError("softmax temperature must be > 0")
    inv_t = x.data.dtype.type(1.0 / temperature)
    if x.data.ndim == 2:
        data = K.softmax2d(x.data, inv_t)
    elif x.data.ndim == 3:
        data = x.data * inv_t
        K.softmax3d_inplace(data)
    else:
        shifted = (x.data - x.data.max(axis=-1, keepdims=True)) * inv_t
        e = np.exp(shifted)
        data = e / e.sum(axis=-1, keepdims=True)

    def bwd(out):
        def run(g):
            if x.requires_grad:
                if data.ndim == 2:
                    _accum(x, K.softmax2d_bwd(data, g, inv_t))
                else:
                    dot = (g * data).sum(axis=-1, keepdims=True)
                    _accum(x, data * (g - dot) * inv_t)
        return run
    return _make(data, "softmax", (x,), bwd)


def layernorm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-5) -> Tensor:
    """Normalize the last axis of a 2D input, then scale and shift."""
    if x.data.ndim != 2:
        raise ShapeError(f"layernorm expects 2D input, got {x.shape}")
    if gain.data.shape != (x.data.shape[1],) or bias.data.shape != (x.data.shape[1],):
        raise ShapeError("layernorm: gain/bias must match the feature axis")
    data, xhat, inv = K.layernorm_fwd(x.data, gain.data, bias.data,
                                      x.data.dtype.type(eps))

    def bwd(out):
        def run(g):
            dx, dgain, dbias = K.layernorm_bwd(g, xhat, inv, gain.data)
            if x.requires_grad:
                _accum(x, dx)
            if gain.requires_grad:
                _accum(gain, dgain)
            if bias.requires_grad:
                _accum(bias, dbias)
        return run
    return _make(data, "layernorm", (x, gain, bias), bwd)


def gather_rows(x: Tensor, idx: np.ndarray) -> Tensor:
    """Pick one entry per row: out[i] = x[i, idx[i]]."""
    if idx.shape[0] != x.data.shape[0]:
        raise ShapeError(f"gather_rows: index length {idx.shape[0]} vs rows {x.data.shape[0]}")
    rows = np.arange(x.data.shape[0])
    data = x.data[rows, idx]

    def bwd(out):
        def run(g):
            if x.requires_grad:
                gx = np.zeros_like(x.data)
                gx[rows, idx] = g
                _accum(x, gx)
        return run
    return _make(data, "gather", (x,), bwd)


def reduce_sum(x: Tensor, axis=None) -> Tensor:
    data = x.data.sum(axis=axis)

    def bwd(out):
        def run(g):
            if x.requires_grad:
                if axis is None:
                    _accum(x, np.broadcast_to(g, x.data.shape).copy())
                else:
                    _accum(x, np.broadcast_to(np.expand_dims(g, axis), x.data.shape).copy())
        return run
    return _make(np.asarray(data, dtype=x.data.dtype), "reduce_sum", (x,), bwd)


def reduce_mean(x: Tensor, axis=None) -> Tensor:
    data = x.data.mean(axis=axis)
    denom = x.data.size if axis is None else x.data.shape[axis]

    def bwd(out):
        def run(g):
            if x.requires_grad:
                if axis is None:
                    _accum(x, np.broadcast_to(g / denom, x.data.shape).copy())
                else:
                    _accum(x, np.broadcast_to(np.expand_dims(g, axis) / denom,
                                              x.data.shape).copy())
        return run
    return _make(np.asarray(data, dtype=x.data.dtype), "reduce_mean", (x,), bwd)


def reshape(x: Tensor, shape) -> Tensor:
    data = x.data.reshape(shape)

    def bwd(out):
        def run(g):
            if x.requires_grad:
                _accum(x, g.reshape(x.data.shape))
        return run
    return _make(data, "reshape", (x,), bwd)


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    data = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.data.shape[axis] for t in tensors]

    def bwd(out):
        def run(g):
            offset = 0
            for t, s in zip(tensors, sizes):
                if t.requires_grad:
                    sl = [slice(None)] * g.ndim
                    sl[axis] = slice(offset, offset + s)
                    _accum(t, g[tuple(sl)])
                offset += s
        return run
    return _make(data, "concat", tuple(tensors), bwd)


def slice_last(x: Tensor, k: int) -> Tensor:
    """Keep the first k entries of the last axis."""
    if not 0 < k <= x.data.shape[-1]:
        raise ShapeError(f"slice_last: k={k} outside last axis of {x.shape}")
    data = np.ascontiguousarray(x.data[..., :k])

    def bwd(out):
        def run(g):
            if x.requires_grad:
                gx = np.zeros_like(x.data)
                gx[..., :k] = g
                _accum(x, gx)
        return run
    return _make(data, "slice_last", (x,), bwd)


def take_rows(x: Tensor, idx: np.ndarray) -> Tensor:
    """Row subset out = x[idx], differentiable scatter-add back."""
    data = x.data[idx]

    def bwd(out):
        def run(g):
            if x.requires_grad:
                gx = np.zeros_like(x.data)
                np.add.at(gx, idx, g)
                _accum(x, gx)
        return run
    return _make(data, "take_rows", (x,), bwd)


def cross_entropy(logits: Tensor, targets: np.ndarray) -> Tensor:
    """Mean negative log likelihood of integer targets under row logits."""
    if logits.data.ndim != 2:
        raise ShapeError(f"cross_entropy expects 2D logits, got {logits.shape}")
    targets = np.asarray(targets, dtype=np.int64)
    if targets.shape[0] != logits.data.shape[0]:
        raise ShapeError("cross_entropy: target length mismatch")
    if targets.min() < 0 or targets.max() >= logits.data.shape[1]:
        raise ShapeError("cross_entropy: target index out of range")
    loss, probs = K.cross_entropy_fwd(logits.data, targets)

    def bwd(out):
        def run(g):
            if logits.requires_grad:
                _accum(logits, K.cross_entropy_bwd(probs, targets, float(g)))
        return run
    return _make(np.asarray(loss, dtype=logits.data.dtype), "cross_entropy",
                 (logits,), bwd)


def multihead_attention(qkv: Tensor, B: int, R: int, C: int, n_heads: int,
                        axis: int, n_keys: int = -1) -> Tensor:
    """Fused scaled-dot-product attention over one grid axis.

    ``qkv`` is the token-major (B*R*C, 3E) projection. axis 0 attends along
    columns within each row; axis 1 attends along rows within each column.
    With ``n_keys`` >= 0 only the first n_keys rows of each sequence serve as
    keys/values (context-key restriction for axis 1): queries beyond that
    limit still produce outputs but are never attended to.
    """
    E3 = qkv.data.shape[1]
    E = E3 // 3
    if E3 != 3 * E or E % n_heads != 0:
        raise ShapeError(f"attention: qkv width {E3} incompatible with {n_heads} heads")
    if qkv.data.shape[0] != B * R * C:
        raise ShapeError(f"attention: token count {qkv.data.shape[0]} != B*R*C")
    hd = E // n_heads
    q = K.gather_heads(qkv.data, B, R, C, n_heads, hd, axis, 0, -1)
    k = K.gather_heads(qkv.data, B, R, C, n_heads, hd, axis, 1, n_keys)
    v = K.gather_heads(qkv.data, B, R, C, n_heads, hd, axis, 2, n_keys)
    scale = q.dtype.type(1.0 / np.sqrt(hd))
    s = np.matmul(q, k.transpose(0, 2, 1))
    s *= scale
    K.softmax3d_inplace(s)
    o = np.matmul(s, v)
    data = K.merge_heads(o, B, R, C, n_heads, hd, axis)

    def bwd(out):
        def run(g):
            if not qkv.requires_grad:
                return
            go = K.split_out_grad(g, B, R, C, n_heads, hd, axis)
            dv = np.matmul(s.transpose(0, 2, 1), go)
            ds = np.matmul(go, v.transpose(0, 2, 1))
            K.softmax3d_bwd_inplace(s, ds, scale)
            dq = np.matmul(ds, k)
            dk = np.matmul(ds.transpose(0, 2, 1), q)
            dqkv = np.zeros_like(qkv.data)
            K.scatter_heads_add(dqkv, dq, B, R, C, n_heads, hd, axis, 0, -1)
            K.scatter_heads_add(dqkv, dk, B, R, C, n_heads, hd, axis, 1, n_keys)
            K.scatter_heads_add(dqkv, dv, B, R, C, n_heads, hd, axis, 2, n_keys)
            _accum(qkv, dqkv)
        return run
    return _make(data, "attention", (qkv,), bwd)
