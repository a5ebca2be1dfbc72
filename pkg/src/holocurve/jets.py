"""Truncated Wirtinger jets in the paired variables (lambda, conj(lambda)).

A jet stores Taylor-normalized coefficients

    coeff(I, J) = D^I Dbar^J f(base) / (I! J!)

for |I| <= p and |J| <= q, each a complex matrix of one fixed shape.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .indexing import MultiIndex, enumerate_upto, index_factorial, sub_indices

DEFAULT_MAX_COND = 1e6


class SingularJetError(ValueError):
    """Constant term of a jet is singular or too ill-conditioned to invert."""


@lru_cache(maxsize=None)
def index_table(m: int, cap: int) -> tuple[tuple[MultiIndex, ...], dict]:
    indices = enumerate_upto(m, cap)
    return indices, {I: k for k, I in enumerate(indices)}


@lru_cache(maxsize=None)
def _pair_table(m: int, cap: int):
    # For every target I, all splits I = I1 + I2, grouped contiguously by target.
    indices, pos = index_table(m, cap)
    left, right, starts = [], [], []
    for I in indices:
        starts.append(len(left))
        for I1 in sub_indices(I):
            left.append(pos[I1])
            right.append(pos[I - I1])
    return np.array(left), np.array(right), np.array(starts)


@lru_cache(maxsize=None)
def _shift_table(m: int, cap: int, coord: int):
    # Positions of I + e_coord for |I| <= cap - 1, with the factor (I_coord + 1).
    small, _ = index_table(m, cap - 1)
    _, pos = index_table(m, cap)
    e = MultiIndex.unit(m, coord)
    src = np.array([pos[I + e] for I in small], dtype=int)
    scale = np.array([I[coord] + 1 for I in small], dtype=float)
    return src, scale


@lru_cache(maxsize=None)
def _truncation_table(m: int, cap: int, new_cap: int):
    small, _ = index_table(m, new_cap)
    _, pos = index_table(m, cap)
    return np.array([pos[I] for I in small], dtype=int)


class WirtingerJet:
    """Immutable truncated jet of a matrix-valued real-analytic function."""

    __slots__ = ("coeffs", "base", "caps")
    __array_ufunc__ = None  # let ndarray @ jet reach __rmatmul__

    def __init__(self, coeffs, base, caps: tuple[int, int]):
        base = np.atleast_1d(np.asarray(base, dtype=complex)).copy()
        coeffs = np.array(coeffs, dtype=complex)
        p, q = int(caps[0]), int(caps[1])
        if p < 0 or q < 0:
            raise ValueError(f"caps must be non-negative, got {(p, q)}")
        m = base.shape[0]
        expected = (len(index_table(m, p)[0]), len(index_table(m, q)[0]))
        if coeffs.ndim != 4 or coeffs.shape[:2] != expected:
            raise ValueError(
                f"coefficient table shape {coeffs.shape} does not match caps {(p, q)} for m={m}"
            )
        coeffs.setflags(write=False)
        base.setflags(write=False)
        self.coeffs = coeffs
        self.base = base
        self.caps = (p, q)

    # construction -------------------------------------------------------

    @classmethod
    def zeros(cls, shape, base, caps) -> "WirtingerJet":
        m = np.atleast_1d(base).shape[0]
        nI = len(index_table(m, caps[0])[0])
        nJ = len(index_table(m, caps[1])[0])
        return cls(np.zeros((nI, nJ) + tuple(shape), dtype=complex), base, caps)

    @classmethod
    def constant(cls, value, base, caps) -> "WirtingerJet":
        value = np.asarray(value, dtype=complex)
        if value.ndim == 0:
            value = value.reshape(1, 1)
        coeffs = np.array(cls.zeros(value.shape, base, caps).coeffs)
        coeffs[0, 0] = value
        return cls(coeffs, base, caps)

    @classmethod
    def identity(cls, n: int, base, caps) -> "WirtingerJet":
        return cls.constant(np.eye(n), base, caps)

    @classmethod
    def variable(cls, coord: int, base, caps, conjugate: bool = False) -> "WirtingerJet":
        """Scalar jet of lambda_coord (or its conjugate), coordinate 0-based."""
        base = np.atleast_1d(np.asarray(base, dtype=complex))
        m = base.shape[0]
        coeffs = np.array(cls.zeros((1, 1), base, caps).coeffs)
        value = base[coord].conjugate() if conjugate else base[coord]
        coeffs[0, 0, 0, 0] = value
        e = MultiIndex.unit(m, coord)
        if conjugate and caps[1] >= 1:
            coeffs[0, index_table(m, caps[1])[1][e], 0, 0] = 1.0
        elif not conjugate and caps[0] >= 1:
            coeffs[index_table(m, caps[0])[1][e], 0, 0, 0] = 1.0
        return cls(coeffs, base, caps)

    # shape and access ---------------------------------------------------

    @property
    def m(self) -> int:
        return self.base.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.coeffs.shape[2:]

    @property
    def value(self) -> np.ndarray:
        return self.coeffs[0, 0]

    def coeff(self, I: Sequence[int], J: Sequence[int]) -> np.ndarray:
        p, q = self.caps
        if sum(I) > p or sum(J) > q:
            raise IndexError(f"({tuple(I)}, {tuple(J)}) exceeds caps {self.caps}")
        i = index_table(self.m, p)[1][MultiIndex(I)]
        j = index_table(self.m, q)[1][MultiIndex(J)]
        return self.coeffs[i, j]

    def extract(self, I: Sequence[int], J: Sequence[int]) -> np.ndarray:
        """D^I Dbar^J f at the base point."""
        return index_factorial(I) * index_factorial(J) * self.coeff(I, J)

    # algebra ------------------------------------------------------------

    def _aligned(self, other: "WirtingerJet"):
        if self.base.shape != other.base.shape or not np.array_equal(self.base, other.base):
            raise ValueError("jets have different base points")
        caps = (min(self.caps[0], other.caps[0]), min(self.caps[1], other.caps[1]))
        return self.truncate(*caps), other.truncate(*caps), caps

    def __add__(self, other):
        if not isinstance(other, WirtingerJet):
            return NotImplemented
        a, b, caps = self._aligned(other)
        if a.shape != b.shape:
            raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
        return WirtingerJet(a.coeffs + b.coeffs, self.base, caps)

    def __sub__(self, other):
        if not isinstance(other, WirtingerJet):
            return NotImplemented
        return self + (-other)

    def __neg__(self):
        return WirtingerJet(-self.coeffs, self.base, self.caps)

    def __mul__(self, scalar):
        if isinstance(scalar, WirtingerJet):
            return jet_mul(self, scalar)
        return WirtingerJet(self.coeffs * complex(scalar), self.base, self.caps)

    __rmul__ = __mul__

    def __matmul__(self, other):
        if isinstance(other, WirtingerJet):
            return jet_mul(self, other)
        other = np.asarray(other, dtype=complex)
        return WirtingerJet(self.coeffs @ other, self.base, self.caps)

    def __rmatmul__(self, other):
        other = np.asarray(other, dtype=complex)
        return WirtingerJet(other @ self.coeffs, self.base, self.caps)

    def truncate(self, p: int, q: int) -> "WirtingerJet":
        if (p, q) == self.caps:
            return self
        if p > self.caps[0] or q > self.caps[1]:
            raise ValueError(f"cannot raise caps {self.caps} to {(p, q)}")
        rows = _truncation_table(self.m, self.caps[0], p)
        cols = _truncation_table(self.m, self.caps[1], q)
        return WirtingerJet(self.coeffs[rows][:, cols], self.base, (p, q))

    def d(self, coord: int) -> "WirtingerJet":
        """Holomorphic derivative in coordinate ``coord`` (0-based)."""
        p, q = self.caps
        if p < 1:
            raise ValueError("holomorphic cap exhausted")
        src, scale = _shift_table(self.m, p, coord)
        coeffs = self.coeffs[src] * scale[:, None, None, None]
        return WirtingerJet(coeffs, self.base, (p - 1, q))

    def dbar(self, coord: int) -> "WirtingerJet":
        """Antiholomorphic derivative in coordinate ``coord`` (0-based)."""
        p, q = self.caps
        if q < 1:
            raise ValueError("antiholomorphic cap exhausted")
        src, scale = _shift_table(self.m, q, coord)
        coeffs = self.coeffs[:, src] * scale[None, :, None, None]
        return WirtingerJet(coeffs, self.base, (p, q - 1))

    def d_sum(self) -> "WirtingerJet":
        """Summed holomorphic derivative d_1 + ... + d_m."""
        out = self.d(0)
        for i in range(1, self.m):
            out = out + self.d(i)
        return out

    def dbar_sum(self) -> "WirtingerJet":
        out = self.dbar(0)
        for j in range(1, self.m):
            out = out + self.dbar(j)
        return out

    def adjoint(self) -> "WirtingerJet":
        """Jet of the pointwise conjugate transpose; caps swap."""
        coeffs = np.conj(np.swapaxes(self.coeffs, 0, 1)).swapaxes(2, 3)
        return WirtingerJet(coeffs, self.base, self.caps[::-1])

    def transpose(self) -> "WirtingerJet":
        return WirtingerJet(self.coeffs.swapaxes(2, 3), self.base, self.caps)

    def trace(self) -> "WirtingerJet":
        tr = np.trace(self.coeffs, axis1=2, axis2=3)
        return WirtingerJet(tr[:, :, None, None], self.base, self.caps)

    def __repr__(self) -> str:
        return f"WirtingerJet(shape={self.shape}, caps={self.caps}, base={self.base.tolist()})"


def jet_add(a: WirtingerJet, b: WirtingerJet) -> WirtingerJet:
    return a + b


def jet_mul(a: WirtingerJet, b: WirtingerJet) -> WirtingerJet:
    """Cauchy product truncated at the common caps.

    A 1x1 factor multiplies the other factor entrywise.
    """
    a, b, caps = a._aligned(b)
    scalar = a.shape == (1, 1) or b.shape == (1, 1)
    if not scalar and a.shape[1] != b.shape[0]:
        raise ValueError(f"inner dimensions differ: {a.shape} @ {b.shape}")
    m = a.m
    li, ri, si = _pair_table(m, caps[0])
    lj, rj, sj = _pair_table(m, caps[1])
    left = a.coeffs[li][:, lj]
    right = b.coeffs[ri][:, rj]
    terms = left * right if scalar else left @ right
    out = np.add.reduceat(np.add.reduceat(terms, si, axis=0), sj, axis=1)
    return WirtingerJet(out, a.base, caps)


def jet_invert(h: WirtingerJet, max_cond: float = DEFAULT_MAX_COND) -> WirtingerJet:
    """Inverse jet by Neumann recursion around the constant term."""
    rows, cols = h.shape
    if rows != cols:
        raise ValueError(f"cannot invert non-square jet of shape {h.shape}")
    h0 = h.value
    cond = np.linalg.cond(h0)
    if not np.isfinite(cond) or cond >= max_cond:
        raise SingularJetError(f"constant term condition number {cond:.3g} >= {max_cond:.3g}")
    h0_inv = np.linalg.inv(h0)
    # g = h0^-1 - h0^-1 (h - h0) g; the correction is nilpotent of order p + q + 1.
    step = h0_inv @ (h - WirtingerJet.constant(h0, h.base, h.caps))
    start = WirtingerJet.constant(h0_inv, h.base, h.caps)
    g = start
    for _ in range(sum(h.caps)):
        g = start - jet_mul(step, g)
    return g


def jet_log(h: WirtingerJet) -> WirtingerJet:
    """Jet of log h for a scalar jet with positive real constant term."""
    if h.shape != (1, 1):
        raise ValueError("jet_log needs a scalar jet")
    h0 = h.value[0, 0]
    if h0.real <= 0 or abs(h0.imag) > 1e-12 * abs(h0):
        raise ValueError(f"constant term must be real and positive, got {h0}")
    u = (h - WirtingerJet.constant(h0, h.base, h.caps)) * (1.0 / h0.real)
    out = WirtingerJet.constant(np.log(h0.real), h.base, h.caps)
    power = u
    for k in range(1, sum(h.caps) + 1):
        out = out + power * ((-1) ** (k + 1) / k)
        power = jet_mul(power, u)
    return out


def extract(j: WirtingerJet, I: Sequence[int], J: Sequence[int]) -> np.ndarray:
    return j.extract(I, J)


# finite differences -----------------------------------------------------

_STENCIL = ((-2, 1.0 / 12), (-1, -8.0 / 12), (1, 8.0 / 12), (2, -1.0 / 12))


def fd_step(order: int, step: float) -> float:
    """Step used for a nested derivative of the given total order.

    Each nesting level divides by the step once more, so rounding error grows
    like eps / h^order; the step is widened by half a decade per extra order.
    """
    return step * 10.0 ** (0.5 * max(order - 1, 0))


def fd_oracle(
    sampler: Callable[[np.ndarray], np.ndarray],
    base,
    I: Sequence[int],
    J: Sequence[int],
    step: float = 1e-4,
) -> np.ndarray:
    """Central-difference estimate of D^I Dbar^J sampler at base.

    Wirtinger derivatives are combined from fourth-order real stencils,
    d = (d_x - i d_y)/2 and dbar = (d_x + i d_y)/2, nested per order.
    """
    base = np.atleast_1d(np.asarray(base, dtype=complex))
    ops = []
    for coord, count in enumerate(I):
        ops += [(coord, -1.0)] * count
    for coord, count in enumerate(J):
        ops += [(coord, 1.0)] * count
    h = fd_step(len(ops), step)

    def evaluate(k: int, point: np.ndarray) -> np.ndarray:
        if k == len(ops):
            return np.asarray(sampler(point), dtype=complex)
        coord, sign = ops[k]
        dx = 0
        dy = 0
        for offset, weight in _STENCIL:
            shifted = point.copy()
            shifted[coord] += offset * h
            dx = dx + weight * evaluate(k + 1, shifted)
            shifted = point.copy()
            shifted[coord] += 1j * offset * h
            dy = dy + weight * evaluate(k + 1, shifted)
        return (dx + sign * 1j * dy) / (2 * h)

    return evaluate(0, base)
