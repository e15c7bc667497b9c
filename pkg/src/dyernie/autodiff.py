"""Minimal vectorised reverse-mode autodiff over numpy arrays.

A :class:`Var` wraps an ndarray and records how it was produced. Numpy
ufuncs (``np.tanh``, ``np.sqrt``, ...) and a few array functions
(``np.where``, ``np.clip``) dispatch to the tape through the numpy
override protocols, so kernels written against plain numpy can be run on
``Var`` inputs unchanged and then differentiated with :meth:`Var.backward`.

Only the operations needed by the embedding model are supported; anything
else raises ``TypeError`` rather than silently dropping gradients.
"""

from __future__ import annotations

import numpy as np


def _unbroadcast(grad, shape):
    """Sum ``grad`` down to ``shape`` (reverse of numpy broadcasting)."""
    if grad.shape == shape:
        return grad
    ndim_extra = grad.ndim - len(shape)
    if ndim_extra > 0:
        grad = grad.sum(axis=tuple(range(ndim_extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


def _is_basic(key):
    keys = key if isinstance(key, tuple) else (key,)
    return all(k is Ellipsis or isinstance(k, (slice, int, np.integer)) for k in keys)


def _row_gather_grad(idx, parent_shape):
    """Backward of ``x[idx]`` for an integer array: scatter-add rows."""
    n = parent_shape[0]
    flat = idx.ravel()

    def fn(g):
        rows = g.reshape(flat.size, -1)
        cols = [np.bincount(flat, weights=rows[:, j], minlength=n) for j in range(rows.shape[1])]
        return np.stack(cols, axis=1).reshape(parent_shape)

    return fn


def value(x):
    """Underlying ndarray of a ``Var``; plain arrays pass through."""
    return x.value if isinstance(x, Var) else x


class Var:
    """A node on the tape."""

    __array_priority__ = 1000

    def __init__(self, val, parents=()):
        self.value = np.asarray(val, dtype=np.float64)
        # parents: sequence of (Var, fn mapping upstream grad -> grad wrt parent)
        self.parents = parents
        self.grad = None

    shape = property(lambda self: self.value.shape)
    ndim = property(lambda self: self.value.ndim)

    def __repr__(self):
        return f"Var({self.value!r})"

    def __len__(self):
        return len(self.value)

    # -- backward ------------------------------------------------------
    def backward(self, seed=None):
        """Accumulate d(self)/d(leaf) into ``.grad`` of every ancestor."""
        order = []
        seen = set()
        stack = [(self, False)]
        while stack:
            node, done = stack.pop()
            if done:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent, _ in node.parents:
                if id(parent) not in seen:
                    stack.append((parent, False))

        grads = {id(self): np.ones_like(self.value) if seed is None else np.asarray(seed, float)}
        for node in reversed(order):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if not node.parents:
                node.grad = g if node.grad is None else node.grad + g
                continue
            for parent, fn in node.parents:
                pg = _unbroadcast(fn(g), parent.value.shape)
                key = id(parent)
                grads[key] = pg if key not in grads else grads[key] + pg

    # -- arithmetic ----------------------------------------------------
    def __add__(self, other):
        return np.add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return np.subtract(self, other)

    def __rsub__(self, other):
        return np.subtract(other, self)

    def __mul__(self, other):
        return np.multiply(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return np.divide(self, other)

    def __rtruediv__(self, other):
        return np.divide(other, self)

    def __neg__(self):
        return np.negative(self)

    def __pow__(self, exponent):
        if isinstance(exponent, Var):
            raise TypeError("variable exponents are not supported")
        return np.power(self, exponent)

    def __getitem__(self, key):
        parent_shape = self.value.shape
        if _is_basic(key):
            def fn(g):
                out = np.zeros(parent_shape)
                out[key] = g
                return out
        elif isinstance(key, np.ndarray) and key.dtype.kind in "iu":
            fn = _row_gather_grad(key, parent_shape)
        else:
            def fn(g):
                out = np.zeros(parent_shape)
                np.add.at(out, key, g)
                return out

        return Var(self.value[key], ((self, fn),))

    def sum(self, axis=None, keepdims=False):
        shape = self.value.shape
        out = self.value.sum(axis=axis, keepdims=keepdims)

        def fn(g):
            if axis is not None and not keepdims:
                g = np.expand_dims(g, axis)
            return np.broadcast_to(g, shape)

        return Var(out, ((self, fn),))

    def mean(self):
        return self.sum() / self.value.size

    # -- numpy protocol ------------------------------------------------
    def __array_ufunc__(self, ufunc, method, *inputs, **kwargs):
        if method != "__call__" or kwargs:
            return NotImplemented
        rule = _UFUNC_RULES.get(ufunc)
        if rule is None:
            raise TypeError(f"ufunc {ufunc.__name__} is not differentiable on the tape")
        vals = [value(x) for x in inputs]
        out = ufunc(*vals)
        parents = tuple(
            (x, rule(i, vals, out)) for i, x in enumerate(inputs) if isinstance(x, Var)
        )
        return Var(out, parents)

    def __array_function__(self, func, types, args, kwargs):
        handler = _FUNCTIONS.get(func)
        if handler is None:
            raise TypeError(f"{func.__name__} is not supported on the tape")
        return handler(*args, **kwargs)


def _binary_rules():
    rules = {
        np.add: lambda i, v, out: (lambda g: g),
        np.subtract: lambda i, v, out: (lambda g: g if i == 0 else -g),
        np.multiply: lambda i, v, out: (lambda g: g * v[1 - i]),
        np.negative: lambda i, v, out: (lambda g: -g),
    }

    def divide(i, v, out):
        if i == 0:
            return lambda g: g / v[1]
        return lambda g: -g * out / v[1]

    def power(i, v, out):
        if i != 0:
            raise TypeError("variable exponents are not supported")
        p = v[1]
        return lambda g: g * p * v[0] ** (p - 1)

    def minimum(i, v, out):
        mask = (v[0] <= v[1]) if i == 0 else (v[1] < v[0])
        return lambda g: g * mask

    def maximum(i, v, out):
        mask = (v[0] >= v[1]) if i == 0 else (v[1] > v[0])
        return lambda g: g * mask

    rules.update({np.divide: divide, np.power: power, np.minimum: minimum, np.maximum: maximum})
    return rules


_UFUNC_RULES = _binary_rules()
_UFUNC_RULES.update({
    np.sqrt: lambda i, v, out: (lambda g: g * 0.5 / out),
    np.tanh: lambda i, v, out: (lambda g: g * (1.0 - out * out)),
    np.arctanh: lambda i, v, out: (lambda g: g / (1.0 - v[0] * v[0])),
    np.tan: lambda i, v, out: (lambda g: g * (1.0 + out * out)),
    np.arctan: lambda i, v, out: (lambda g: g / (1.0 + v[0] * v[0])),
    np.sin: lambda i, v, out: (lambda g: g * np.cos(v[0])),
    np.cos: lambda i, v, out: (lambda g: -g * np.sin(v[0])),
    np.cosh: lambda i, v, out: (lambda g: g * np.sinh(v[0])),
    np.exp: lambda i, v, out: (lambda g: g * out),
    np.log: lambda i, v, out: (lambda g: g / v[0]),
    np.log1p: lambda i, v, out: (lambda g: g / (1.0 + v[0])),
    np.absolute: lambda i, v, out: (lambda g: g * np.sign(v[0])),
})


def _where(cond, a, b):
    cond = np.asarray(value(cond), dtype=bool)
    va, vb = value(a), value(b)
    parents = []
    if isinstance(a, Var):
        parents.append((a, lambda g: np.where(cond, g, 0.0)))
    if isinstance(b, Var):
        parents.append((b, lambda g: np.where(cond, 0.0, g)))
    return Var(np.where(cond, va, vb), tuple(parents))


def _clip(a, a_min, a_max):
    out = np.clip(a.value, a_min, a_max)
    lo = -np.inf if a_min is None else a_min
    hi = np.inf if a_max is None else a_max
    mask = (a.value > lo) & (a.value < hi)
    return Var(out, ((a, lambda g: g * mask),))


def _concatenate(arrays, axis=-1):
    vals = [value(x) for x in arrays]
    out = np.concatenate(vals, axis=axis)
    bounds = np.cumsum([0] + [v.shape[axis] for v in vals])
    parents = []
    for k, x in enumerate(arrays):
        if isinstance(x, Var):
            sl = slice(bounds[k], bounds[k + 1])

            def fn(g, sl=sl):
                idx = [slice(None)] * g.ndim
                idx[axis] = sl
                return g[tuple(idx)]

            parents.append((x, fn))
    return Var(out, tuple(parents))


_FUNCTIONS = {np.where: _where, np.clip: _clip, np.concatenate: _concatenate}
