"""Dense tensors with reverse-mode automatic differentiation on numpy arrays.

Tensors are 2-D (or 1-D / scalar) row-major arrays; sequence length is always
the leading dimension. float32 is the training precision, float64 the
verification precision: an op's output dtype follows numpy promotion of its
inputs, so a model built from float64 parameters runs entirely in float64.
"""
from __future__ import annotations

import contextlib

import numpy as np


class NumericError(ArithmeticError):
    """A tensor holds NaN or Inf, or a checked evaluation went non-finite."""


class ShapeError(ValueError):
    """Operand shapes are incompatible for the requested operation."""


_FINITE_CHECKS = True


def set_finite_checks(enabled):
    """Toggle NaN/Inf checking on every op result. Returns the previous state."""
    global _FINITE_CHECKS
    previous = _FINITE_CHECKS
    _FINITE_CHECKS = bool(enabled)
    return previous


@contextlib.contextmanager
def finite_checks(enabled):
    previous = set_finite_checks(enabled)
    try:
        yield
    finally:
        set_finite_checks(previous)


def _as_float_array(data):
    # float32/float64 ndarrays keep their dtype; anything else becomes float64
    arr = np.asarray(data)
    if arr.dtype not in (np.float32, np.float64):
        arr = arr.astype(np.float64)
    return arr


class Tensor:
    """A dense array plus the closure that routes gradients to its inputs."""

    __slots__ = ("data", "grad", "_prev", "_backward")

    def __init__(self, data, _prev=(), _backward=None):
        self.data = _as_float_array(data)
        if _FINITE_CHECKS and not np.all(np.isfinite(self.data)):
            raise NumericError("tensor contains NaN/Inf")
        self.grad = None
        self._prev = tuple(_prev)
        self._backward = _backward

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def item(self):
        if self.data.size != 1:
            raise ShapeError(f"item() needs a single element, got shape {self.shape}")
        return self.data.item()

    def backward(self):
        """Run reverse-mode accumulation from a scalar root."""
        if self.data.size != 1:
            raise ShapeError(f"backward() needs a scalar root, got shape {self.shape}")
        topo = []
        seen = set()
        stack = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for child in node._prev:
                stack.append((child, False))
        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            if node._backward is not None:
                node._backward()

    def __repr__(self):
        return f"Tensor(shape={self.shape}, dtype={self.data.dtype})"

    # Elementwise arithmetic; tensor operands must match shapes exactly,
    # python scalars fold in as constants.
    def __add__(self, other):
        if isinstance(other, Tensor):
            _same_shape("add", self, other)
            out = Tensor(self.data + other.data, (self, other))

            def _back():
                _accum(self, out.grad)
                _accum(other, out.grad)

        else:
            out = Tensor(self.data + other, (self,))

            def _back():
                _accum(self, out.grad)

        out._backward = _back
        return out

    __radd__ = __add__

    def __neg__(self):
        out = Tensor(-self.data, (self,))

        def _back():
            _accum(self, -out.grad)

        out._backward = _back
        return out

    def __sub__(self, other):
        if isinstance(other, Tensor):
            _same_shape("sub", self, other)
            out = Tensor(self.data - other.data, (self, other))

            def _back():
                _accum(self, out.grad)
                _accum(other, -out.grad)

        else:
            out = Tensor(self.data - other, (self,))

            def _back():
                _accum(self, out.grad)

        out._backward = _back
        return out

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Tensor):
            _same_shape("mul", self, other)
            out = Tensor(self.data * other.data, (self, other))

            def _back():
                _accum(self, out.grad * other.data)
                _accum(other, out.grad * self.data)

        else:
            out = Tensor(self.data * other, (self,))

            def _back():
                _accum(self, out.grad * other)

        out._backward = _back
        return out

    __rmul__ = __mul__


class Parameter(Tensor):
    """Trainable tensor with persistent gradient and adaptive-rate accumulator.

    The gradient buffer survives across backward passes so per-sentence
    gradients accumulate over a mini-batch; call zero_grad() at batch start.
    """

    __slots__ = ("name", "accumulator")

    def __init__(self, data, name=""):
        super().__init__(data)
        self.name = name
        self.grad = np.zeros_like(self.data)
        self.accumulator = np.zeros_like(self.data)

    def zero_grad(self):
        self.grad.fill(0.0)

    def __repr__(self):
        return f"Parameter({self.name or '?'}, shape={self.shape})"


def _accum(t, g):
    if t.grad is None:
        t.grad = np.zeros_like(t.data)
    t.grad += g


def _same_shape(op, a, b):
    if a.shape != b.shape:
        raise ShapeError(f"{op}: shapes {a.shape} and {b.shape} differ")


def affine(x, w, b):
    """Row-wise affine map: out[i] = W^T x[i] + b, i.e. x @ W + b.

    x is n*a, w is a*b, b is a length-b vector.
    """
    if x.data.ndim != 2 or w.data.ndim != 2 or b.data.ndim != 1:
        raise ShapeError(
            f"affine: expected 2-D x, 2-D W, 1-D b; got {x.shape}, {w.shape}, {b.shape}"
        )
    if x.shape[1] != w.shape[0] or w.shape[1] != b.shape[0]:
        raise ShapeError(f"affine: x {x.shape} does not fit W {w.shape}, b {b.shape}")
    out = Tensor(x.data @ w.data + b.data, (x, w, b))

    def _back():
        g = out.grad
        _accum(x, g @ w.data.T)
        _accum(w, x.data.T @ g)
        _accum(b, g.sum(axis=0))

    out._backward = _back
    return out


def matmul(x, w):
    """2-D matrix product x @ w."""
    if x.data.ndim != 2 or w.data.ndim != 2 or x.shape[1] != w.shape[0]:
        raise ShapeError(f"matmul: x {x.shape} does not fit W {w.shape}")
    out = Tensor(x.data @ w.data, (x, w))

    def _back():
        g = out.grad
        _accum(x, g @ w.data.T)
        _accum(w, x.data.T @ g)

    out._backward = _back
    return out


def _sigmoid_array(z):
    # piecewise form avoids exp overflow for large |z|
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def sigmoid(x):
    out = Tensor(_sigmoid_array(x.data), (x,))

    def _back():
        s = out.data
        _accum(x, out.grad * s * (1.0 - s))

    out._backward = _back
    return out


def tanh(x):
    out = Tensor(np.tanh(x.data), (x,))

    def _back():
        _accum(x, out.grad * (1.0 - out.data * out.data))

    out._backward = _back
    return out


def activation(x, kind):
    """Elementwise nonlinearity, kind in {'sigmoid', 'tanh'}."""
    if kind == "sigmoid":
        return sigmoid(x)
    if kind == "tanh":
        return tanh(x)
    raise ValueError(f"unsupported activation kind {kind!r}")


def concat_cols(parts):
    """Concatenate 2-D tensors with equal row counts along columns."""
    parts = list(parts)
    rows = parts[0].shape[0]
    for p in parts:
        if p.data.ndim != 2 or p.shape[0] != rows:
            raise ShapeError(f"concat_cols: row mismatch in {[p.shape for p in parts]}")
    out = Tensor(np.concatenate([p.data for p in parts], axis=1), tuple(parts))

    def _back():
        ofs = 0
        for p in parts:
            w = p.shape[1]
            _accum(p, out.grad[:, ofs:ofs + w])
            ofs += w

    out._backward = _back
    return out


def concat_rows(parts):
    """Stack 2-D tensors with equal column counts along rows."""
    parts = list(parts)
    cols = parts[0].shape[1]
    for p in parts:
        if p.data.ndim != 2 or p.shape[1] != cols:
            raise ShapeError(f"concat_rows: column mismatch in {[p.shape for p in parts]}")
    out = Tensor(np.concatenate([p.data for p in parts], axis=0), tuple(parts))

    def _back():
        ofs = 0
        for p in parts:
            r = p.shape[0]
            _accum(p, out.grad[ofs:ofs + r])
            ofs += r

    out._backward = _back
    return out


def slice_cols(x, start, stop):
    out = Tensor(x.data[:, start:stop].copy(), (x,))

    def _back():
        g = np.zeros_like(x.data)
        g[:, start:stop] = out.grad
        _accum(x, g)

    out._backward = _back
    return out


def slice_rows(x, i):
    """Single row i as a 1*d tensor."""
    out = Tensor(x.data[i:i + 1].copy(), (x,))

    def _back():
        g = np.zeros_like(x.data)
        g[i:i + 1] = out.grad
        _accum(x, g)

    out._backward = _back
    return out


def window_concat(x, left, right):
    """Per-row window concatenation with zero padding at the margins.

    Row i of the output is the concatenation of rows i-left .. i+right of x,
    out-of-range rows replaced by zeros (wide-convolution padding). Output is
    n * ((left+right+1) * d).
    """
    if x.data.ndim != 2:
        raise ShapeError(f"window_concat: expected 2-D input, got {x.shape}")
    n, d = x.shape
    span = left + right + 1
    data = np.zeros((n, span * d), dtype=x.data.dtype)
    for j, off in enumerate(range(-left, right + 1)):
        dlo, dhi = max(0, -off), min(n, n - off)
        if dlo < dhi:
            data[dlo:dhi, j * d:(j + 1) * d] = x.data[dlo + off:dhi + off]
    out = Tensor(data, (x,))

    def _back():
        g = np.zeros_like(x.data)
        for j, off in enumerate(range(-left, right + 1)):
            dlo, dhi = max(0, -off), min(n, n - off)
            if dlo < dhi:
                g[dlo + off:dhi + off] += out.grad[dlo:dhi, j * d:(j + 1) * d]
        _accum(x, g)

    out._backward = _back
    return out


def sum_all(x):
    """Sum every element into a scalar tensor."""
    out = Tensor(x.data.sum(), (x,))

    def _back():
        _accum(x, np.ones_like(x.data) * out.grad)

    out._backward = _back
    return out


def grad_check(f, params, eps=1e-5):
    """Compare backprop gradients of scalar f() against central differences.

    f rebuilds its computation from the current parameter values on every
    call. Requires float64 parameters (verification mode). Returns the
    maximum relative error over every coordinate of every parameter, with
    denominator max(|g|, |g_fd|, 1e-8).
    """
    params = list(params)
    for p in params:
        if p.data.dtype != np.float64:
            raise ValueError(f"grad_check requires float64 parameters, {p.name or p.shape} is {p.data.dtype}")
    for p in params:
        p.zero_grad()
    out = f()
    if not np.all(np.isfinite(out.data)):
        raise NumericError("grad_check: f evaluated non-finite")
    out.backward()
    analytic = [p.grad.copy() for p in params]

    max_rel = 0.0
    for p, grads in zip(params, analytic):
        flat = p.data.ravel()
        gflat = grads.ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            f_plus = f().item()
            flat[i] = orig - eps
            f_minus = f().item()
            flat[i] = orig
            if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
                raise NumericError("grad_check: perturbed f evaluated non-finite")
            fd = (f_plus - f_minus) / (2.0 * eps)
            denom = max(abs(gflat[i]), abs(fd), 1e-8)
            max_rel = max(max_rel, abs(gflat[i] - fd) / denom)
    return max_rel
