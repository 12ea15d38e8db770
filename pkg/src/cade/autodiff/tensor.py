"""Reverse-mode automatic differentiation over dense float64 tensors.

Every operation builds a node in an acyclic graph; `backward` walks the
graph once in reverse topological order and returns a gradient table.
Gradients are never written into the graph itself, so one forward graph
can serve several backward sweeps (the attention-map machinery relies on
this).

Fixed conventions: row-major layout, float64 everywhere, left-to-right
accumulation order. Identical inputs give bit-identical outputs.
"""

from __future__ import annotations

from typing import Callable, Iterable, Sequence

import numpy as np

Array = np.ndarray


def _as_f64(data) -> Array:
    arr = np.asarray(data, dtype=np.float64)
    # ascontiguousarray would promote 0-d to shape (1,)
    return arr if arr.ndim == 0 else np.ascontiguousarray(arr)


def _check_finite(arr: Array, what: str) -> None:
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{what}: non-finite values")


class Tensor:
    """A dense float64 array plus its position in the operation graph.

    Leaf tensors are created directly from data; interior tensors are
    produced by the op functions below, which attach the parent links
    and the vector-Jacobian product used by `backward`.
    """

    __slots__ = ("data", "requires_grad", "name", "op", "grad",
                 "_parents", "_vjp")

    def __init__(self, data, requires_grad: bool = False,
                 name: str | None = None):
        self.data = _as_f64(data)
        _check_finite(self.data, f"tensor {name or '<anon>'}")
        self.requires_grad = requires_grad
        self.name = name
        self.op = "leaf"
        self.grad: Array | None = None
        self._parents: tuple[Tensor, ...] = ()
        self._vjp: Callable[[Array], tuple[Array | None, ...]] | None = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        if self.data.size != 1:
            raise ValueError(f"item: tensor has {self.data.size} elements")
        return float(self.data.reshape(()))

    def detach(self) -> "Tensor":
        """Copy of the value with no graph history."""
        out = Tensor(self.data.copy())
        return out

    def reshape(self, *shape) -> "Tensor":
        return reshape(self, shape[0] if len(shape) == 1 and
                       isinstance(shape[0], (tuple, list)) else shape)

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return scale(self, float(other))
        return mul(self, other)

    def __rmul__(self, other):
        return self.__mul__(other)

    def __repr__(self) -> str:
        return f"Tensor(op={self.op}, shape={self.shape})"


def _make(out_data: Array, op: str, parents: tuple[Tensor, ...],
          vjp: Callable[[Array], tuple[Array | None, ...]]) -> Tensor:
    _check_finite(out_data, op)
    out = Tensor.__new__(Tensor)
    out.data = out_data
    out.requires_grad = any(p.requires_grad for p in parents)
    out.name = None
    out.op = op
    out.grad = None
    out._parents = parents
    out._vjp = vjp
    return out


def _want(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _same_shape(op: str, a: Tensor, b: Tensor) -> None:
    if a.shape != b.shape:
        raise ValueError(f"{op}: shape mismatch {a.shape} vs {b.shape}")


# ---------------------------------------------------------------------------
# elementwise and scalar ops
# ---------------------------------------------------------------------------

def add(a, b) -> Tensor:
    a, b = _want(a), _want(b)
    _same_shape("add", a, b)
    return _make(a.data + b.data, "add", (a, b), lambda g: (g, g))


def sub(a, b) -> Tensor:
    a, b = _want(a), _want(b)
    _same_shape("sub", a, b)
    return _make(a.data - b.data, "sub", (a, b), lambda g: (g, -g))


def mul(a, b) -> Tensor:
    a, b = _want(a), _want(b)
    _same_shape("mul", a, b)
    return _make(a.data * b.data, "mul", (a, b),
                 lambda g: (g * b.data, g * a.data))


def scale(a, c: float) -> Tensor:
    a = _want(a)
    c = float(c)
    if not np.isfinite(c):
        raise ValueError("scale: non-finite factor")
    return _make(a.data * c, "scale", (a,), lambda g: (g * c,))


def neg(a) -> Tensor:
    return scale(a, -1.0)


def abs_(a) -> Tensor:
    # subgradient 0 at the kink
    a = _want(a)
    return _make(np.abs(a.data), "abs", (a,),
                 lambda g: (g * np.sign(a.data),))


def log(a) -> Tensor:
    a = _want(a)
    if np.any(a.data <= 0.0):
        raise ValueError("log: non-positive input")
    return _make(np.log(a.data), "log", (a,), lambda g: (g / a.data,))


def relu(a) -> Tensor:
    a = _want(a)
    mask = a.data > 0.0
    return _make(np.where(mask, a.data, 0.0), "relu", (a,),
                 lambda g: (g * mask,))


def leaky_relu(a, slope: float = 0.01) -> Tensor:
    a = _want(a)
    factor = np.where(a.data > 0.0, 1.0, slope)
    return _make(a.data * factor, "leaky_relu", (a,),
                 lambda g: (g * factor,))


def _sigmoid(x: Array) -> Array:
    out = np.empty_like(x)
    pos = x >= 0.0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def sigmoid(a) -> Tensor:
    a = _want(a)
    s = _sigmoid(a.data)
    return _make(s, "sigmoid", (a,), lambda g: (g * s * (1.0 - s),))


def log_sigmoid(a) -> Tensor:
    """log(sigmoid(x)), stable for large |x|."""
    a = _want(a)
    x = a.data
    out = np.where(x >= 0.0, -np.log1p(np.exp(-np.abs(x))),
                   x - np.log1p(np.exp(-np.abs(x))))
    s_neg = _sigmoid(-x)   # d/dx log sigmoid(x) = sigmoid(-x)
    return _make(out, "log_sigmoid", (a,), lambda g: (g * s_neg,))


# ---------------------------------------------------------------------------
# reductions
# ---------------------------------------------------------------------------

def sum_(a, axis: int | None = None) -> Tensor:
    a = _want(a)
    if axis is None:
        out = np.asarray(a.data.sum())

        def vjp(g):
            return (np.broadcast_to(g, a.shape).copy(),)
    else:
        out = a.data.sum(axis=axis)

        def vjp(g):
            return (np.broadcast_to(np.expand_dims(g, axis), a.shape).copy(),)
    return _make(out, "sum", (a,), vjp)


def mean(a) -> Tensor:
    a = _want(a)
    n = a.size
    if n == 0:
        raise ValueError("mean: empty tensor")
    return _make(np.asarray(a.data.mean()), "mean", (a,),
                 lambda g: (np.broadcast_to(g / n, a.shape).copy(),))


def dot(a, b) -> Tensor:
    a, b = _want(a), _want(b)
    if a.data.ndim != 1 or b.data.ndim != 1 or a.shape != b.shape:
        raise ValueError(f"dot: need equal-length vectors, got {a.shape} and {b.shape}")
    return _make(np.asarray(a.data @ b.data), "dot", (a, b),
                 lambda g: (g * b.data, g * a.data))


def l2_norm(a) -> Tensor:
    """Euclidean norm of the whole tensor; zero tensor gets zero gradient."""
    a = _want(a)
    n = float(np.sqrt((a.data ** 2).sum()))

    def vjp(g):
        if n == 0.0:
            return (np.zeros_like(a.data),)
        return (g * a.data / n,)
    return _make(np.asarray(n), "l2_norm", (a,), vjp)


def l2_normalize(a, axis: int = -1) -> Tensor:
    """x / ||x||2 along `axis`; rows with zero norm map to zero vectors."""
    a = _want(a)
    norms = np.sqrt((a.data ** 2).sum(axis=axis, keepdims=True))
    safe = np.where(norms > 0.0, norms, 1.0)
    out = np.where(norms > 0.0, a.data / safe, 0.0)

    def vjp(g):
        # d(x/n)/dx = (I - x_hat x_hat^T) / n per slice; zero slices stay zero
        dotgx = (g * out).sum(axis=axis, keepdims=True)
        grad = (g - out * dotgx) / safe
        return (np.where(norms > 0.0, grad, 0.0),)
    return _make(out, "l2_normalize", (a,), vjp)


def cosine_similarity(a, b, axis: int = -1) -> Tensor:
    """Cosine of the angle between `a` and `b` along `axis`.

    1-D inputs give a scalar; [N, D] inputs give one value per row.
    A zero-norm slice yields similarity 0 with zero gradient.
    """
    a, b = _want(a), _want(b)
    _same_shape("cosine_similarity", a, b)
    na = np.sqrt((a.data ** 2).sum(axis=axis, keepdims=True))
    nb = np.sqrt((b.data ** 2).sum(axis=axis, keepdims=True))
    ok = (na > 0.0) & (nb > 0.0)
    denom = np.where(ok, na * nb, 1.0)
    ip = (a.data * b.data).sum(axis=axis, keepdims=True)
    cos = np.where(ok, ip / denom, 0.0)
    out = np.squeeze(cos, axis=axis)

    def vjp(g):
        ge = np.expand_dims(g, axis)
        da = np.where(ok, ge * (b.data / denom - cos * a.data / np.where(ok, na ** 2, 1.0)), 0.0)
        db = np.where(ok, ge * (a.data / denom - cos * b.data / np.where(ok, nb ** 2, 1.0)), 0.0)
        return (da, db)
    return _make(out, "cosine_similarity", (a, b), vjp)


def softmax_cross_entropy(logits, labels: Sequence[int]) -> Tensor:
    """Mean softmax cross-entropy of [N, K] logits against integer labels."""
    logits = _want(logits)
    if logits.data.ndim != 2:
        raise ValueError(f"softmax_cross_entropy: logits must be [N, K], got {logits.shape}")
    lab = np.asarray(labels, dtype=np.int64)
    n, k = logits.shape
    if lab.shape != (n,):
        raise ValueError(f"softmax_cross_entropy: {n} rows but {lab.shape} labels")
    if n == 0:
        raise ValueError("softmax_cross_entropy: empty batch")
    if np.any(lab < 0) or np.any(lab >= k):
        raise ValueError("softmax_cross_entropy: label out of range")
    z = logits.data
    zmax = z.max(axis=1, keepdims=True)
    lse = zmax[:, 0] + np.log(np.exp(z - zmax).sum(axis=1))
    losses = lse - z[np.arange(n), lab]
    out = np.asarray(losses.mean())

    def vjp(g):
        p = np.exp(z - lse[:, None])
        p[np.arange(n), lab] -= 1.0
        return (g * p / n,)
    return _make(out, "softmax_cross_entropy", (logits,), vjp)


# ---------------------------------------------------------------------------
# shape plumbing
# ---------------------------------------------------------------------------

def reshape(a, shape) -> Tensor:
    a = _want(a)
    shape = tuple(int(s) for s in shape)
    new = a.data.reshape(shape)
    old = a.shape
    return _make(new.copy(), "reshape", (a,),
                 lambda g: (g.reshape(old),))


# ---------------------------------------------------------------------------
# linear algebra / network layers
# ---------------------------------------------------------------------------

def matmul(a, b) -> Tensor:
    a, b = _want(a), _want(b)
    if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ValueError(f"matmul: incompatible shapes {a.shape} @ {b.shape}")
    return _make(a.data @ b.data, "matmul", (a, b),
                 lambda g: (g @ b.data.T, a.data.T @ g))


def dense(x, w, b) -> Tensor:
    """x [N, F] @ w [F, G] + b [G]."""
    x, w, b = _want(x), _want(w), _want(b)
    if x.data.ndim != 2 or w.data.ndim != 2 or x.shape[1] != w.shape[0]:
        raise ValueError(f"dense: input {x.shape} incompatible with weight {w.shape}")
    if b.shape != (w.shape[1],):
        raise ValueError(f"dense: bias {b.shape} does not match weight {w.shape}")
    return _make(x.data @ w.data + b.data, "dense", (x, w, b),
                 lambda g: (g @ w.data.T, x.data.T @ g, g.sum(axis=0)))


def _conv_windows(xp: Array, kh: int, kw: int, sh: int, sw: int) -> Array:
    # [N, C, Ho, Wo, kh, kw] view over the padded input
    win = np.lib.stride_tricks.sliding_window_view(xp, (kh, kw), axis=(2, 3))
    return win[:, :, ::sh, ::sw, :, :]


def conv2d(x, k, b=None, stride: int | tuple[int, int] = 1,
           padding: int | tuple[int, int] = 0) -> Tensor:
    """2-D convolution (cross-correlation), NCHW input, OIHW kernel.

    Zero padding, integer strides, no dilation.
    """
    x, k = _want(x), _want(k)
    if x.data.ndim != 4 or k.data.ndim != 4:
        raise ValueError(f"conv2d: need NCHW input and OIHW kernel, got {x.shape} and {k.shape}")
    n, c, h, w = x.shape
    o, ci, kh, kw = k.shape
    if ci != c:
        raise ValueError(f"conv2d: kernel channels {ci} != input channels {c}")
    sh, sw = (stride, stride) if isinstance(stride, int) else stride
    ph, pw = (padding, padding) if isinstance(padding, int) else padding
    if sh < 1 or sw < 1:
        raise ValueError("conv2d: stride must be positive")
    hp, wp = h + 2 * ph, w + 2 * pw
    if kh > hp or kw > wp:
        raise ValueError(f"conv2d: kernel {(kh, kw)} larger than padded input {(hp, wp)}")
    ho = (hp - kh) // sh + 1
    wo = (wp - kw) // sw + 1

    xp = np.pad(x.data, ((0, 0), (0, 0), (ph, ph), (pw, pw)))
    win = _conv_windows(xp, kh, kw, sh, sw)                    # [N,C,Ho,Wo,kh,kw]
    cols = win.transpose(0, 2, 3, 1, 4, 5).reshape(n, ho * wo, c * kh * kw)
    w2 = k.data.reshape(o, c * kh * kw)
    out = np.matmul(cols, w2.T).transpose(0, 2, 1).reshape(n, o, ho, wo)

    parents: tuple[Tensor, ...]
    if b is not None:
        b = _want(b)
        if b.shape != (o,):
            raise ValueError(f"conv2d: bias {b.shape} does not match {o} output channels")
        out = out + b.data[None, :, None, None]
        parents = (x, k, b)
    else:
        parents = (x, k)

    def vjp(g):
        g2 = g.reshape(n, o, ho * wo)                          # [N,O,P]
        dw = np.einsum("nop,npk->ok", g2, cols).reshape(o, c, kh, kw)
        dcols = np.einsum("nop,ok->npk", g2, w2)               # [N,P,CKK]
        dwin = dcols.reshape(n, ho, wo, c, kh, kw).transpose(0, 3, 1, 2, 4, 5)
        dxp = np.zeros((n, c, hp, wp))
        for i in range(kh):
            for j in range(kw):
                dxp[:, :, i:i + sh * ho:sh, j:j + sw * wo:sw] += dwin[:, :, :, :, i, j]
        dx = dxp[:, :, ph:ph + h, pw:pw + w]
        if b is not None:
            return (dx, dw, g.sum(axis=(0, 2, 3)))
        return (dx, dw)
    return _make(out, "conv2d", parents, vjp)


def maxpool2d(x, window: int | tuple[int, int],
              stride: int | tuple[int, int] | None = None) -> Tensor:
    """Max pooling; ties route the gradient to the lowest linear index."""
    x = _want(x)
    if x.data.ndim != 4:
        raise ValueError(f"maxpool2d: need NCHW input, got {x.shape}")
    wh, ww = (window, window) if isinstance(window, int) else window
    if stride is None:
        sh, sw = wh, ww
    else:
        sh, sw = (stride, stride) if isinstance(stride, int) else stride
    n, c, h, w = x.shape
    if wh > h or ww > w:
        raise ValueError(f"maxpool2d: window {(wh, ww)} larger than input {(h, w)}")
    ho = (h - wh) // sh + 1
    wo = (w - ww) // sw + 1
    win = _conv_windows(x.data, wh, ww, sh, sw)                # [N,C,Ho,Wo,wh,ww]
    flat = win.reshape(n, c, ho, wo, wh * ww)
    arg = flat.argmax(axis=-1)                                 # first max wins
    out = np.take_along_axis(flat, arg[..., None], axis=-1)[..., 0]

    def vjp(g):
        dx = np.zeros_like(x.data)
        oi, oj = np.meshgrid(np.arange(ho), np.arange(wo), indexing="ij")
        rows = oi[None, None] * sh + arg // ww
        colz = oj[None, None] * sw + arg % ww
        ni = np.arange(n)[:, None, None, None]
        cc = np.arange(c)[None, :, None, None]
        np.add.at(dx, (np.broadcast_to(ni, arg.shape),
                       np.broadcast_to(cc, arg.shape), rows, colz), g)
        return (dx,)
    return _make(out, "maxpool2d", (x,), vjp)


def global_avg_pool(x) -> Tensor:
    """[N, C, H, W] -> [N, C] spatial mean."""
    x = _want(x)
    if x.data.ndim != 4:
        raise ValueError(f"global_avg_pool: need NCHW input, got {x.shape}")
    n, c, h, w = x.shape
    out = x.data.mean(axis=(2, 3))
    return _make(out, "global_avg_pool", (x,),
                 lambda g: (np.broadcast_to(g[:, :, None, None] / (h * w), x.shape).copy(),))


# ---------------------------------------------------------------------------
# backward sweep
# ---------------------------------------------------------------------------

class Gradients:
    """Result of one backward sweep: gradient for every reachable node."""

    def __init__(self, table: dict[int, Array],
                 named: dict[str, Array]):
        self._table = table
        self.named = named

    def wrt(self, t: Tensor) -> Array:
        try:
            return self._table[id(t)]
        except KeyError:
            raise KeyError("tensor not reachable from the backward root") from None

    def __contains__(self, t: Tensor) -> bool:
        return id(t) in self._table


def _topo(root: Tensor) -> list[Tensor]:
    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in seen:
                stack.append((p, False))
    return order


def backward(root: Tensor) -> Gradients:
    """Gradient of a scalar `root` w.r.t. every node in its graph.

    Pure: nothing in the graph is mutated, and fan-out contributions
    accumulate by summation in fixed reverse-topological order.
    """
    if root.data.size != 1:
        raise ValueError(f"backward: root must be scalar, got shape {root.shape}")
    table: dict[int, Array] = {id(root): np.ones_like(root.data)}
    for node in reversed(_topo(root)):
        g = table.get(id(node))
        if g is None or node._vjp is None:
            continue
        parts = node._vjp(g)
        for parent, part in zip(node._parents, parts):
            if part is None:
                continue
            pid = id(parent)
            if pid in table:
                table[pid] = table[pid] + part
            else:
                table[pid] = part
    named = {n.name: table[id(n)] for n in _topo(root)
             if n.name is not None and id(n) in table}
    return Gradients(table, named)
