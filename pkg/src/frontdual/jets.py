"""Truncated multivariate Taylor jets over R or C.

A jet stores the Taylor coefficients of a scalar quantity at a base point,
up to a fixed total degree.  The coefficient attached to a multi-index
``alpha`` equals the partial derivative of order ``alpha`` divided by
``alpha!``, so every derivative used elsewhere in the package is read off
a jet directly.  Coefficients may be plain scalars or numpy arrays of a
common shape, in which case a single jet carries the expansion at a whole
batch of base points at once.

Jets are immutable values and all operations are pure functions.
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np


class JetError(ValueError):
    """Shape mismatch, truncation-order misuse or an invalid operand."""


class JetDomainError(JetError):
    """Composition applied outside its domain (log of nonpositive reals,
    division by a jet with zero constant term, ...)."""


def _zero_index(nvars: int) -> tuple[int, ...]:
    return (0,) * nvars


def _abs(x):
    return np.abs(x)


class Jet:
    """Polynomial-in-offset representation of a Taylor expansion.

    Attributes
    ----------
    nvars : number of domain variables.
    order : truncation order (maximal total degree kept).
    coeffs : dict mapping multi-index tuples to scalar/array coefficients.
    """

    __slots__ = ("nvars", "order", "coeffs")

    def __init__(self, nvars: int, order: int, coeffs: dict | None = None):
        if nvars < 1:
            raise JetError(f"nvars must be >= 1, got {nvars}")
        if order < 0:
            raise JetError(f"order must be >= 0, got {order}")
        self.nvars = int(nvars)
        self.order = int(order)
        cs = {}
        if coeffs:
            for idx, c in coeffs.items():
                if len(idx) != nvars or any(e < 0 for e in idx):
                    raise JetError(f"bad multi-index {idx} for nvars={nvars}")
                if sum(idx) <= order:
                    cs[idx] = c
        self.coeffs = cs

    # -- constructors ------------------------------------------------------

    @classmethod
    def constant(cls, c, nvars: int, order: int) -> "Jet":
        return cls(nvars, order, {_zero_index(nvars): c})

    @classmethod
    def variable(cls, index: int, base, nvars: int, order: int) -> "Jet":
        """The coordinate function x_index expanded at ``base``."""
        if not 0 <= index < nvars:
            raise JetError(f"variable index {index} out of range for nvars={nvars}")
        coeffs = {_zero_index(nvars): base}
        if order >= 1:
            e = [0] * nvars
            e[index] = 1
            one = np.ones_like(np.asarray(base)) if isinstance(base, np.ndarray) else 1.0
            coeffs[tuple(e)] = one
        return cls(nvars, order, coeffs)

    # -- accessors ---------------------------------------------------------

    def value(self):
        """Constant term: the plain value at the base point."""
        return self.coeffs.get(_zero_index(self.nvars), 0.0)

    def gradient(self) -> list:
        """First-order coefficients, one per variable."""
        out = []
        for j in range(self.nvars):
            e = [0] * self.nvars
            e[j] = 1
            out.append(self.coeffs.get(tuple(e), 0.0))
        return out

    def coefficient(self, idx: Sequence[int]):
        return self.coeffs.get(tuple(idx), 0.0)

    def derivative_value(self, idx: Sequence[int]):
        """Partial derivative of order ``idx`` at the base point."""
        idx = tuple(idx)
        fact = 1.0
        for e in idx:
            fact *= math.factorial(e)
        return self.coefficient(idx) * fact

    def scale(self):
        """Largest coefficient magnitude; per-point for array coefficients."""
        if not self.coeffs:
            return 0.0
        mags = [_abs(c) for c in self.coeffs.values()]
        out = mags[0]
        for m in mags[1:]:
            out = np.maximum(out, m)
        return out

    def is_batched(self) -> bool:
        return any(isinstance(c, np.ndarray) for c in self.coeffs.values())

    # -- structural ops ----------------------------------------------------

    def truncate(self, order: int) -> "Jet":
        if order > self.order:
            raise JetError(f"cannot extend order {self.order} to {order}")
        if order == self.order:
            return self
        return Jet(self.nvars, order, {i: c for i, c in self.coeffs.items() if sum(i) <= order})

    def without_constant(self) -> "Jet":
        z = _zero_index(self.nvars)
        return Jet(self.nvars, self.order, {i: c for i, c in self.coeffs.items() if i != z})

    def partial(self, j: int) -> "Jet":
        """Derivative with respect to variable j; drops one order."""
        if self.order == 0:
            raise JetError("cannot differentiate an order-0 jet")
        if not 0 <= j < self.nvars:
            raise JetError(f"variable index {j} out of range")
        out = {}
        for idx, c in self.coeffs.items():
            if idx[j] == 0:
                continue
            e = list(idx)
            e[j] -= 1
            out[tuple(e)] = c * idx[j]
        return Jet(self.nvars, self.order - 1, out)

    def _check_same_shape(self, other: "Jet"):
        if self.nvars != other.nvars or self.order != other.order:
            raise JetError(
                f"jet shape mismatch: ({self.nvars},{self.order}) vs "
                f"({other.nvars},{other.order})"
            )

    # -- arithmetic --------------------------------------------------------

    def __add__(self, other):
        if not isinstance(other, Jet):
            out = dict(self.coeffs)
            z = _zero_index(self.nvars)
            out[z] = out.get(z, 0.0) + other
            return Jet(self.nvars, self.order, out)
        self._check_same_shape(other)
        out = dict(self.coeffs)
        for idx, c in other.coeffs.items():
            out[idx] = out[idx] + c if idx in out else c
        return Jet(self.nvars, self.order, out)

    __radd__ = __add__

    def __neg__(self):
        return Jet(self.nvars, self.order, {i: -c for i, c in self.coeffs.items()})

    def __sub__(self, other):
        if isinstance(other, Jet):
            return self + (-other)
        return self + (-1.0 * other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.nvars, self.order, {i: c * other for i, c in self.coeffs.items()})
        self._check_same_shape(other)
        order = self.order
        out: dict = {}
        for ia, ca in self.coeffs.items():
            da = sum(ia)
            for ib, cb in other.coeffs.items():
                if da + sum(ib) > order:
                    continue
                idx = tuple(a + b for a, b in zip(ia, ib))
                prod = ca * cb
                out[idx] = out[idx] + prod if idx in out else prod
        return Jet(self.nvars, order, out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            return self * (1.0 / other)
        return self * reciprocal(other)

    def __rtruediv__(self, other):
        return reciprocal(self) * other

    def __pow__(self, k: int):
        if not isinstance(k, int):
            raise JetError("jet ** exponent must be an integer; use exp/log for general powers")
        if k < 0:
            return reciprocal(self.ipow(-k))
        return self.ipow(k)

    def ipow(self, k: int) -> "Jet":
        """Integer power by repeated squaring."""
        result = Jet.constant(1.0, self.nvars, self.order)
        base = self
        while k > 0:
            if k & 1:
                result = result * base
            base = base * base if k > 1 else base
            k >>= 1
        return result

    def __repr__(self):
        terms = ", ".join(f"{i}: {c!r}" for i, c in sorted(self.coeffs.items()))
        return f"Jet(nvars={self.nvars}, order={self.order}, {{{terms}}})"


# -- composition with univariate series -------------------------------------


def compose_series(series: Sequence, g: Jet) -> Jet:
    """Taylor expansion of f(g) where ``series`` holds the 1-D Taylor
    coefficients of f at g's constant term (at least order+1 of them).

    Evaluated by Horner's scheme in the nilpotent part of g.
    """
    if len(series) < g.order + 1:
        raise JetError(
            f"series too short: need {g.order + 1} coefficients, got {len(series)}"
        )
    u = g.without_constant()
    acc = Jet.constant(series[g.order], g.nvars, g.order)
    for k in range(g.order - 1, -1, -1):
        acc = acc * u + series[k]
    return acc


def reciprocal(g: Jet) -> Jet:
    """1/g; requires a nonzero constant term (no Laurent expansions)."""
    c = g.value()
    if np.any(_abs(c) == 0.0):
        raise JetDomainError("division by a jet with zero constant term")
    series = []
    p = 1.0 / c
    for k in range(g.order + 1):
        series.append(p)
        p = -p / c
    return compose_series(series, g)


def _cycle_series(order: int, cycle) -> list:
    out = []
    fact = 1.0
    for k in range(order + 1):
        if k > 0:
            fact *= k
        out.append(cycle[k % 4] / fact)
    return out


def jet_exp(g: Jet) -> Jet:
    e = np.exp(g.value())
    series = []
    fact = 1.0
    for k in range(g.order + 1):
        if k > 0:
            fact *= k
        series.append(e / fact)
    return compose_series(series, g)


def jet_sin(g: Jet) -> Jet:
    c = g.value()
    return compose_series(_cycle_series(g.order, (np.sin(c), np.cos(c), -np.sin(c), -np.cos(c))), g)


def jet_cos(g: Jet) -> Jet:
    c = g.value()
    return compose_series(_cycle_series(g.order, (np.cos(c), -np.sin(c), -np.cos(c), np.sin(c))), g)


def jet_tan(g: Jet) -> Jet:
    return jet_sin(g) / jet_cos(g)


def jet_sinh(g: Jet) -> Jet:
    c = g.value()
    return compose_series(_cycle_series(g.order, (np.sinh(c), np.cosh(c), np.sinh(c), np.cosh(c))), g)


def jet_cosh(g: Jet) -> Jet:
    c = g.value()
    return compose_series(_cycle_series(g.order, (np.cosh(c), np.sinh(c), np.cosh(c), np.sinh(c))), g)


def _is_real(x) -> bool:
    return not np.iscomplexobj(np.asarray(x))


def jet_log(g: Jet) -> Jet:
    c = g.value()
    if _is_real(c) and np.any(np.asarray(c) <= 0.0):
        raise JetDomainError("log of a nonpositive real constant term")
    series = [np.log(c)]
    for k in range(1, g.order + 1):
        series.append((-1.0) ** (k - 1) / (k * c**k))
    return compose_series(series, g)


def _binomial_power_series(c, y0, r: float, order: int) -> list:
    # coefficients y0 * binom(r, k) / c**k
    series = [y0]
    b = y0
    for k in range(1, order + 1):
        b = b * (r - (k - 1)) / (k * c)
        series.append(b)
    return series


def jet_sqrt(g: Jet) -> Jet:
    c = g.value()
    if _is_real(c):
        if np.any(np.asarray(c) <= 0.0):
            raise JetDomainError("sqrt of a nonpositive real constant term")
        y0 = np.sqrt(c)
    else:
        if np.any(_abs(c) == 0.0):
            raise JetDomainError("sqrt at a zero constant term is not differentiable")
        y0 = np.sqrt(c)
    return compose_series(_binomial_power_series(c, y0, 0.5, g.order), g)


def jet_cbrt(g: Jet) -> Jet:
    """Cube root: odd real root for real jets, principal branch over C."""
    c = g.value()
    if np.any(_abs(np.asarray(c)) == 0.0):
        raise JetDomainError("cbrt at a zero constant term is not differentiable")
    if _is_real(c):
        y0 = np.cbrt(c)
    else:
        y0 = np.power(c, 1.0 / 3.0)
    return compose_series(_binomial_power_series(c, y0, 1.0 / 3.0, g.order), g)


def jet_pow_scalar(g: Jet, r) -> Jet:
    """g**r for non-integer r via exp(r*log g); real positive base required
    over R, principal branch over C."""
    return jet_exp(jet_log(g) * r)


# -- multilinear algebra -----------------------------------------------------


def jet_det(matrix: Sequence[Sequence[Jet]]) -> Jet:
    """Determinant of a square matrix of jets by memoized Laplace expansion."""
    k = len(matrix)
    if k == 0 or any(len(row) != k for row in matrix):
        raise JetError("jet_det requires a nonempty square matrix")
    if k > 6:
        raise JetError("jet_det supports matrices up to 6x6")
    proto = matrix[0][0]
    for row in matrix:
        for m in row:
            proto._check_same_shape(m)

    memo: dict = {}

    def minor(row: int, cols: tuple[int, ...]) -> Jet:
        if row == k:
            return Jet.constant(1.0, proto.nvars, proto.order)
        key = cols
        hit = memo.get(key)
        if hit is not None:
            return hit
        acc = None
        for pos, j in enumerate(cols):
            term = matrix[row][j] * minor(row + 1, cols[:pos] + cols[pos + 1:])
            if pos % 2:
                term = -term
            acc = term if acc is None else acc + term
        memo[key] = acc
        return acc

    return minor(0, tuple(range(k)))


def jet_adjugate(matrix: Sequence[Sequence[Jet]]) -> list[list[Jet]]:
    """Adjugate (transposed cofactor) matrix of a square matrix of jets."""
    k = len(matrix)
    if k == 1:
        one = Jet.constant(1.0, matrix[0][0].nvars, matrix[0][0].order)
        return [[one]]
    adj = [[None] * k for _ in range(k)]
    for i in range(k):
        for j in range(k):
            sub = [
                [matrix[r][c] for c in range(k) if c != j]
                for r in range(k)
                if r != i
            ]
            cof = jet_det(sub)
            if (i + j) % 2:
                cof = -cof
            adj[j][i] = cof
    return adj


def directional_derivative(phi: Jet, field: Sequence[Jet]) -> Jet:
    """Derivative of phi along a jet-valued vector field, one order lower."""
    if len(field) != phi.nvars:
        raise JetError(f"field needs {phi.nvars} components, got {len(field)}")
    if phi.order == 0:
        raise JetError("cannot take a directional derivative of an order-0 jet")
    out = None
    for j, fj in enumerate(field):
        term = fj.truncate(min(fj.order, phi.order - 1)) * phi.partial(j)
        out = term if out is None else out + term
    return out
