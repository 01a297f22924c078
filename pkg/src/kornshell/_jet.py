"""Truncated bivariate Taylor arithmetic in the surface variables (theta, z).

A :class:`Jet` of order ``K`` carries the normalized Taylor coefficients

    c[i, j] = d^i/dtheta^i d^j/dz^j f / (i! j!),    i + j <= K,

evaluated at a batch of sample points. Products, quotients and smooth
univariate compositions propagate all partials exactly, which is what the
Ansatz constructions need: the developable fields involve up to sixth
derivatives of the phase function and writing those chains out by hand is
error prone.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = ["Jet"]


def _as_array(x):
    return np.asarray(x, dtype=float)


def _pad(c, ndim):
    """Insert unit sample axes so coefficient arrays broadcast on the sample shape."""
    extra = ndim - (c.ndim - 2)
    if extra <= 0:
        return c
    return c.reshape(c.shape[:2] + (1,) * extra + c.shape[2:])


class Jet:
    __slots__ = ("c", "order")
    __array_priority__ = 100.0

    def __init__(self, c, order: int):
        self.c = c
        self.order = int(order)

    # -- construction ------------------------------------------------------
    @classmethod
    def constant(cls, value, order: int, shape=None) -> "Jet":
        value = _as_array(value)
        if shape is not None:
            value = np.broadcast_to(value, shape)
        c = np.zeros((order + 1, order + 1) + value.shape)
        c[0, 0] = value
        return cls(c, order)

    @classmethod
    def variable(cls, values, axis: int, order: int) -> "Jet":
        """The coordinate itself: ``axis=0`` for theta, ``axis=1`` for z."""
        values = _as_array(values)
        c = np.zeros((order + 1, order + 1) + values.shape)
        c[0, 0] = values
        if order >= 1:
            if axis == 0:
                c[1, 0] = 1.0
            else:
                c[0, 1] = 1.0
        return cls(c, order)

    @classmethod
    def from_partials(cls, partials: dict, order: int) -> "Jet":
        """Build from raw partials ``{(i, j): d^{i+j} f}``; missing entries are zero."""
        first = _as_array(partials[(0, 0)])
        c = np.zeros((order + 1, order + 1) + first.shape)
        for (i, j), val in partials.items():
            if i + j <= order:
                c[i, j] = _as_array(val) / (math.factorial(i) * math.factorial(j))
        return cls(c, order)

    @classmethod
    def univariate(cls, derivs, axis: int, order: int) -> "Jet":
        """Function of one coordinate; ``derivs[k]`` is its k-th derivative."""
        first = _as_array(derivs[0])
        c = np.zeros((order + 1, order + 1) + first.shape)
        for k in range(min(order, len(derivs) - 1) + 1):
            idx = (k, 0) if axis == 0 else (0, k)
            c[idx] = _as_array(derivs[k]) / math.factorial(k)
        return cls(c, order)

    # -- access ------------------------------------------------------------
    @property
    def shape(self):
        return self.c.shape[2:]

    @property
    def value(self):
        return self.c[0, 0]

    def d(self, i: int, j: int):
        """Raw partial derivative d^i/dtheta^i d^j/dz^j."""
        if i + j > self.order:
            raise ValueError(f"jet of order {self.order} has no ({i},{j}) partial")
        return self.c[i, j] * (math.factorial(i) * math.factorial(j))

    def partial(self, axis: int) -> "Jet":
        """Differentiate; the result has order reduced by one."""
        if self.order < 1:
            raise ValueError("cannot differentiate an order-0 jet")
        K = self.order - 1
        c = np.zeros((K + 1, K + 1) + self.shape)
        for i in range(K + 1):
            for j in range(K + 1 - i):
                if axis == 0:
                    c[i, j] = (i + 1) * self.c[i + 1, j]
                else:
                    c[i, j] = (j + 1) * self.c[i, j + 1]
        return Jet(c, K)

    def truncate(self, order: int) -> "Jet":
        if order > self.order:
            raise ValueError("cannot raise jet order")
        c = self.c[: order + 1, : order + 1].copy()
        for i in range(order + 1):
            c[i, order + 1 - i:] = 0.0
        return Jet(c, order)

    def masked(self, mask) -> "Jet":
        """Zero all coefficients where ``mask`` is false."""
        return Jet(np.where(mask, self.c, 0.0), self.order)

    # -- arithmetic --------------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, Jet):
            return other
        other = _as_array(other)
        return Jet.constant(other, self.order, np.broadcast_shapes(other.shape, self.shape))

    def __add__(self, other):
        other = self._coerce(other)
        K = min(self.order, other.order)
        a = self.truncate(K).c if self.order > K else self.c
        b = other.truncate(K).c if other.order > K else other.c
        shape = np.broadcast_shapes(self.shape, other.shape)
        return Jet(_pad(a, len(shape)) + _pad(b, len(shape)), K)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.c, self.order)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) + (-self)

    def __mul__(self, other):
        if not isinstance(other, Jet):
            other = _as_array(other)
            return Jet(self.c * other, self.order)
        K = min(self.order, other.order)
        shape = np.broadcast_shapes(self.shape, other.shape)
        out = np.zeros((K + 1, K + 1) + shape)
        for i in range(K + 1):
            for j in range(K + 1 - i):
                a = self.c[i, j]
                if not np.any(a):
                    continue
                for k in range(K + 1 - i - j):
                    for l in range(K + 1 - i - j - k):
                        out[i + k, j + l] += a * other.c[k, l]
        return Jet(out, K)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.c / _as_array(other), self.order)
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, p):
        if isinstance(p, int) and p >= 0:
            out = Jet.constant(1.0, self.order, self.shape)
            for _ in range(p):
                out = out * self
            return out
        return self.power(p)

    # -- univariate compositions -------------------------------------------
    def compose(self, taylor) -> "Jet":
        """Compose with g given ``taylor[k] = g^(k)(f0) / k!`` for k = 0..order."""
        K = self.order
        delta = Jet(self.c.copy(), K)
        delta.c[0, 0] = 0.0
        out = Jet.constant(taylor[K], K, self.shape)
        for k in range(K - 1, -1, -1):
            out = out * delta + Jet.constant(taylor[k], K, self.shape)
        return out

    def sin(self):
        x = self.value
        return self.compose(
            [np.sin(x + k * np.pi / 2) / math.factorial(k) for k in range(self.order + 1)]
        )

    def cos(self):
        x = self.value
        return self.compose(
            [np.cos(x + k * np.pi / 2) / math.factorial(k) for k in range(self.order + 1)]
        )

    def exp(self):
        ex = np.exp(self.value)
        return self.compose([ex / math.factorial(k) for k in range(self.order + 1)])

    def power(self, p: float):
        x = self.value
        taylor = []
        coef = 1.0
        for k in range(self.order + 1):
            taylor.append(coef * x ** (p - k))
            coef *= (p - k) / (k + 1)
        return self.compose(taylor)

    def reciprocal(self):
        x = self.value
        return self.compose([(-1.0) ** k / x ** (k + 1) for k in range(self.order + 1)])

    def sqrt(self):
        return self.power(0.5)

    def __repr__(self):
        return f"Jet(order={self.order}, shape={self.shape})"
