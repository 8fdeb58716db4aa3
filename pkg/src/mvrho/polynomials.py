"""Small multivariate polynomials with bounded per-axis degree.

Every closed-form dependence function in this package is a polynomial
whose degree in each single variable is at most 2, so a dense coefficient
table of shape (3,)*m stays tiny for any dimension we care about.  The
table representation supports the handful of operations the rest of the
package needs: arithmetic, the full mixed derivative, exact integration
over the unit cube, and vectorized evaluation.
"""

from __future__ import annotations

from itertools import combinations

import numpy as np


class Poly:
    """Polynomial over [0,1]^m stored as a dense coefficient array.

    ``coeffs[e1, ..., em]`` multiplies ``x1**e1 * ... * xm**em``.
    """

    __slots__ = ("m", "coeffs")

    def __init__(self, m: int, coeffs: np.ndarray):
        self.m = m
        self.coeffs = np.asarray(coeffs, dtype=float)
        if self.coeffs.ndim != m:
            raise ValueError("coefficient table rank must equal dimension")

    # hash/compare by identity so Poly-carrying dataclasses stay hashable
    def __hash__(self):
        return id(self)

    def __eq__(self, other):
        return self is other

    @classmethod
    def constant(cls, m: int, value: float) -> "Poly":
        c = np.zeros((1,) * m)
        c[(0,) * m] = value
        return cls(m, c)

    @classmethod
    def from_axis_factors(cls, m: int, factors) -> "Poly":
        """Product of univariate polynomials, one per axis.

        ``factors[j]`` is the 1-D coefficient sequence of the factor in
        x_{j+1}; e.g. x(1-x) is (0, 1, -1).
        """
        arrays = [np.asarray(f, dtype=float) for f in factors]
        out = arrays[0]
        for a in arrays[1:]:
            out = np.multiply.outer(out, a)
        return cls(m, out)

    def _padded_to(self, shape):
        pad = [(0, s - c) for s, c in zip(shape, self.coeffs.shape)]
        return np.pad(self.coeffs, pad)

    def __add__(self, other: "Poly") -> "Poly":
        shape = tuple(max(a, b) for a, b in
                      zip(self.coeffs.shape, other.coeffs.shape))
        return Poly(self.m, self._padded_to(shape) + other._padded_to(shape))

    def __sub__(self, other: "Poly") -> "Poly":
        return self + (other * -1.0)

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return Poly(self.m, self.coeffs * float(other))
        shape = tuple(a + b - 1 for a, b in
                      zip(self.coeffs.shape, other.coeffs.shape))
        out = np.zeros(shape)
        for ea in np.argwhere(self.coeffs != 0.0):
            ca = self.coeffs[tuple(ea)]
            for eb in np.argwhere(other.coeffs != 0.0):
                out[tuple(ea + eb)] += ca * other.coeffs[tuple(eb)]
        return Poly(self.m, out)

    __rmul__ = __mul__

    def mixed_derivative(self) -> "Poly":
        """d^m / dx_1 ... dx_m, one derivative per axis."""
        c = self.coeffs
        for axis in range(self.m):
            d = c.shape[axis]
            if d == 1:
                c = np.zeros(c.shape[:axis] + (1,) + c.shape[axis + 1:])
                continue
            exps = np.arange(1, d).reshape(
                [1] * axis + [d - 1] + [1] * (self.m - axis - 1))
            c = np.take(c, np.arange(1, d), axis=axis) * exps
        return Poly(self.m, c)

    def integral(self) -> float:
        """Exact integral over the unit cube."""
        c = self.coeffs
        for _ in range(self.m):
            w = 1.0 / np.arange(1, c.shape[0] + 1)
            c = np.tensordot(c, w, axes=([0], [0]))
        return float(c)

    def __call__(self, x) -> np.ndarray:
        """Evaluate at points of shape (N, m) (or a single (m,) point)."""
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        pts = np.atleast_2d(x)
        n = pts.shape[0]
        vals = self.coeffs
        for axis in range(self.m):
            deg = vals.shape[0]
            powers = pts[:, axis][None, :] ** np.arange(deg)[:, None]  # (deg, N)
            if axis == 0:
                vals = np.tensordot(vals, powers, axes=([0], [0]))
            else:
                # vals carries a trailing point index; contract per point
                vals = np.einsum("i...n,in->...n", vals, powers)
        out = np.asarray(vals, dtype=float).reshape(n)
        return float(out[0]) if single else out


# -- built-in dependence-function polynomials ------------------------------

def prod_x(m: int) -> Poly:
    """x_1 * ... * x_m."""
    return Poly.from_axis_factors(m, [(0.0, 1.0)] * m)


def sum_x(m: int) -> Poly:
    out = Poly.constant(m, 0.0)
    for j in range(m):
        f = [(1.0,)] * m
        f[j] = (0.0, 1.0)
        out = out + Poly.from_axis_factors(m, f)
    return out


def fgm_poly(m: int) -> Poly:
    """prod(x) * sum_{i<j} (1-x_i)(1-x_j), the pairwise product-moment
    dependence function (a multivariate Farlie-Gumbel-Morgenstern form)."""
    out = Poly.constant(m, 0.0)
    for i, j in combinations(range(m), 2):
        f = [(0.0, 1.0)] * m
        f[i] = (0.0, 1.0, -1.0)   # x(1-x)
        f[j] = (0.0, 1.0, -1.0)
        out = out + Poly.from_axis_factors(m, f)
    return out


def optimal_s_poly(m: int) -> Poly:
    """prod(x) * (prod(2-x) + sum(x) - (m+1))."""
    inner = Poly.from_axis_factors(m, [(2.0, -1.0)] * m) + sum_x(m) \
        - Poly.constant(m, m + 1.0)
    return prod_x(m) * inner


def optimal_w_poly(m: int) -> Poly:
    """prod(x) * (prod(x) - sum(x) + (m-1))."""
    inner = prod_x(m) - sum_x(m) + Poly.constant(m, m - 1.0)
    return prod_x(m) * inner
