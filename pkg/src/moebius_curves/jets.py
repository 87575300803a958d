"""Truncated Taylor series ("jets") with array-valued coefficients.

A :class:`Jet` stores ``c[k] = f^(k)(t0) / k!`` for ``k = 0..order``.  The
coefficient array has shape ``(order + 1, *shape)`` so a whole batch of sample
points, vectors or matrices is carried through every operation at once.
Products truncate to the lower of the two orders; differentiation drops one.
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np


class Jet:
    __slots__ = ("c",)
    __array_priority__ = 100.0

    def __init__(self, coeffs):
        self.c = np.asarray(coeffs, dtype=float)
        if self.c.ndim == 0:
            self.c = self.c.reshape(1)

    # -- construction -------------------------------------------------------
    @classmethod
    def constant(cls, value, order: int) -> "Jet":
        value = np.asarray(value, dtype=float)
        c = np.zeros((order + 1,) + value.shape)
        c[0] = value
        return cls(c)

    @classmethod
    def variable(cls, t0, order: int) -> "Jet":
        """The identity jet ``t0 + h`` (batched over ``t0``)."""
        t0 = np.asarray(t0, dtype=float)
        c = np.zeros((order + 1,) + t0.shape)
        c[0] = t0
        if order >= 1:
            c[1] = 1.0
        return cls(c)

    @classmethod
    def from_derivatives(cls, derivs) -> "Jet":
        d = np.asarray(derivs, dtype=float)
        fact = np.array([math.factorial(k) for k in range(d.shape[0])], dtype=float)
        return cls(d / fact.reshape((-1,) + (1,) * (d.ndim - 1)))

    # -- basic attributes ---------------------------------------------------
    @property
    def order(self) -> int:
        return self.c.shape[0] - 1

    @property
    def shape(self) -> tuple:
        return self.c.shape[1:]

    @property
    def value(self) -> np.ndarray:
        return self.c[0]

    def derivatives(self) -> np.ndarray:
        fact = np.array([math.factorial(k) for k in range(self.order + 1)], dtype=float)
        return self.c * fact.reshape((-1,) + (1,) * (self.c.ndim - 1))

    def truncate(self, order: int) -> "Jet":
        return Jet(self.c[: order + 1])

    def copy(self) -> "Jet":
        return Jet(self.c.copy())

    def __repr__(self) -> str:
        return f"Jet(order={self.order}, shape={self.shape})"

    # -- indexing -----------------------------------------------------------
    def __getitem__(self, key) -> "Jet":
        if not isinstance(key, tuple):
            key = (key,)
        return Jet(self.c[(slice(None),) + key])

    def __setitem__(self, key, val) -> None:
        if not isinstance(key, tuple):
            key = (key,)
        if isinstance(val, Jet):
            self.c[(slice(None),) + key] = val.c[: self.order + 1]
        else:
            self.c[(slice(None),) + key] = 0.0
            self.c[(0,) + key] = val

    @property
    def T(self) -> "Jet":
        """Swap the last two axes (matrix transpose per coefficient)."""
        return Jet(np.swapaxes(self.c, -1, -2))

    def reshape(self, *shape) -> "Jet":
        return Jet(self.c.reshape((self.c.shape[0],) + tuple(shape)))

    def expand(self, axis: int) -> "Jet":
        """Insert a singleton axis in the value shape (``axis`` counts value axes)."""
        if axis < 0:
            axis = len(self.shape) + axis + 1
        return Jet(np.expand_dims(self.c, axis + 1))

    # -- arithmetic ---------------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, Jet):
            return other
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            shape = np.broadcast_shapes(self.shape, np.shape(other))
            c = np.broadcast_to(self.c, (self.c.shape[0],) + shape).copy()
            c[0] = c[0] + other
            return Jet(c)
        m = min(self.order, o.order)
        return Jet(self.c[: m + 1] + o.c[: m + 1])

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.c)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return Jet(self.c * np.asarray(other, dtype=float))
        m = min(self.order, o.order)
        out = None
        for k in range(m + 1):
            acc = self.c[0] * o.c[k]
            for i in range(1, k + 1):
                acc = acc + self.c[i] * o.c[k - i]
            if out is None:
                out = np.empty((m + 1,) + acc.shape)
            out[k] = acc
        return Jet(out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return Jet(self.c / np.asarray(other, dtype=float))
        return self * reciprocal(o)

    def __rtruediv__(self, other):
        return reciprocal(self) * other

    def __matmul__(self, other):
        o = self._coerce(other)
        if o is None:
            return Jet(self.c @ np.asarray(other, dtype=float))
        m = min(self.order, o.order)
        out = None
        for k in range(m + 1):
            acc = self.c[0] @ o.c[k]
            for i in range(1, k + 1):
                acc = acc + self.c[i] @ o.c[k - i]
            if out is None:
                out = np.empty((m + 1,) + acc.shape)
            out[k] = acc
        return Jet(out)

    def __rmatmul__(self, other):
        return Jet(np.asarray(other, dtype=float) @ self.c)

    def __pow__(self, alpha):
        return power(self, alpha)

    # -- calculus -----------------------------------------------------------
    def deriv(self) -> "Jet":
        if self.order == 0:
            raise ValueError("cannot differentiate an order-0 jet")
        k = np.arange(1, self.order + 1, dtype=float).reshape((-1,) + (1,) * (self.c.ndim - 1))
        return Jet(self.c[1:] * k)

    def antideriv(self, value0) -> "Jet":
        """Jet of the antiderivative whose value at the base point is ``value0``."""
        k = np.arange(1, self.order + 2, dtype=float).reshape((-1,) + (1,) * (self.c.ndim - 1))
        c = np.empty((self.order + 2,) + self.shape)
        c[0] = value0
        c[1:] = self.c / k
        return Jet(c)

    def shift_eval(self, h) -> np.ndarray:
        """Evaluate the Taylor polynomial at offset ``h`` from the base point."""
        out = np.zeros(self.shape)
        for k in range(self.order, -1, -1):
            out = out * h + self.c[k]
        return out


def _scalar_recurrence_check(a: Jet) -> None:
    if not isinstance(a, Jet):
        raise TypeError("expected a Jet")


def reciprocal(a: Jet) -> Jet:
    _scalar_recurrence_check(a)
    b = np.empty_like(a.c)
    inv0 = 1.0 / a.c[0]
    b[0] = inv0
    for k in range(1, a.order + 1):
        acc = a.c[1] * b[k - 1]
        for i in range(2, k + 1):
            acc = acc + a.c[i] * b[k - i]
        b[k] = -inv0 * acc
    return Jet(b)


def power(a: Jet, alpha: float) -> Jet:
    """``a ** alpha`` for real ``alpha``; requires ``a.value > 0`` unless alpha is a small integer."""
    if float(alpha).is_integer() and 0 <= alpha <= 4:
        out = Jet.constant(np.ones(a.shape), a.order)
        for _ in range(int(alpha)):
            out = out * a
        return out
    b = np.empty_like(a.c)
    b[0] = a.c[0] ** alpha
    inv0 = 1.0 / a.c[0]
    for k in range(1, a.order + 1):
        acc = np.zeros(a.shape)
        for i in range(1, k + 1):
            acc = acc + ((alpha + 1.0) * i - k) * a.c[i] * b[k - i]
        b[k] = acc * inv0 / k
    return Jet(b)


def sqrt(a: Jet) -> Jet:
    b = np.empty_like(a.c)
    b[0] = np.sqrt(a.c[0])
    inv = 0.5 / b[0]
    for k in range(1, a.order + 1):
        acc = a.c[k].copy()
        for i in range(1, k):
            acc = acc - b[i] * b[k - i]
        b[k] = acc * inv
    return Jet(b)


def exp(a: Jet) -> Jet:
    b = np.empty_like(a.c)
    b[0] = np.exp(a.c[0])
    for k in range(1, a.order + 1):
        acc = np.zeros(a.shape)
        for i in range(1, k + 1):
            acc = acc + i * a.c[i] * b[k - i]
        b[k] = acc / k
    return Jet(b)


def sincos(a: Jet) -> tuple[Jet, Jet]:
    s = np.empty_like(a.c)
    c = np.empty_like(a.c)
    s[0] = np.sin(a.c[0])
    c[0] = np.cos(a.c[0])
    for k in range(1, a.order + 1):
        acc_s = np.zeros(a.shape)
        acc_c = np.zeros(a.shape)
        for i in range(1, k + 1):
            acc_s = acc_s + i * a.c[i] * c[k - i]
            acc_c = acc_c + i * a.c[i] * s[k - i]
        s[k] = acc_s / k
        c[k] = -acc_c / k
    return Jet(s), Jet(c)


def sin(a: Jet) -> Jet:
    return sincos(a)[0]


def cos(a: Jet) -> Jet:
    return sincos(a)[1]


def stack(jets: Sequence[Jet], axis: int = -1) -> Jet:
    """Stack jets along a new value axis."""
    m = min(j.order for j in jets)
    if axis < 0:
        axis = len(np.broadcast_shapes(*[j.shape for j in jets])) + axis + 1
    arrs = [np.broadcast_to(j.c[: m + 1], (m + 1,) + np.broadcast_shapes(*[jj.shape for jj in jets]))
            for j in jets]
    return Jet(np.stack(arrs, axis=axis + 1))


def dot(a: Jet, b: Jet) -> Jet:
    """Euclidean inner product over the last value axis."""
    return sum_last(a * b)


def sum_last(a: Jet) -> Jet:
    return Jet(a.c.sum(axis=-1))


def norm(a: Jet) -> Jet:
    return sqrt(dot(a, a))


def eye_like(n: int, batch_shape: tuple, order: int) -> Jet:
    c = np.zeros((order + 1,) + tuple(batch_shape) + (n, n))
    c[0] = np.eye(n)
    return Jet(c)


def as_jet(x, order: int) -> Jet:
    return x if isinstance(x, Jet) else Jet.constant(x, order)


def min_order(jets: Iterable[Jet]) -> int:
    return min(j.order for j in jets)
