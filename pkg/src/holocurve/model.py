"""Truncated models: diagonal kernels, polynomial sections, frames, FB2 data."""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb, factorial, sqrt
from typing import Mapping, Sequence

import numpy as np

from .indexing import MultiIndex, enumerate_upto, index_factorial, multinomial
from .jets import WirtingerJet, index_table

INDEPENDENCE_FLOOR = 1e-10


class HolomorphicPolynomial:
    """Matrix-valued polynomial in lambda_1..lambda_m.

    ``coeffs[k]`` is the matrix multiplying the k-th monomial of
    ``enumerate_upto(m, degree)``.
    """

    __array_ufunc__ = None

    def __init__(self, coeffs, m: int, degree: int):
        coeffs = np.array(coeffs, dtype=complex)
        monomials = enumerate_upto(m, degree)
        if coeffs.ndim != 3 or coeffs.shape[0] != len(monomials):
            raise ValueError(
                f"coefficient array {coeffs.shape} does not fit {len(monomials)} monomials"
            )
        coeffs.setflags(write=False)
        self.coeffs = coeffs
        self.m = m
        self.degree = degree

    @classmethod
    def constant(cls, value, m: int = 1) -> "HolomorphicPolynomial":
        value = np.asarray(value, dtype=complex)
        if value.ndim == 0:
            value = value.reshape(1, 1)
        return cls(value[None], m, 0)

    @classmethod
    def scalar(cls, coefficients: Sequence[complex]) -> "HolomorphicPolynomial":
        """One-variable scalar polynomial c_0 + c_1 lambda + ..."""
        c = np.asarray(coefficients, dtype=complex).reshape(-1, 1, 1)
        return cls(c, 1, c.shape[0] - 1)

    @property
    def monomials(self) -> tuple[MultiIndex, ...]:
        return enumerate_upto(self.m, self.degree)

    @property
    def shape(self) -> tuple[int, int]:
        return self.coeffs.shape[1:]

    def powers(self, point) -> np.ndarray:
        point = np.atleast_1d(np.asarray(point, dtype=complex))
        if point.shape != (self.m,):
            raise ValueError(f"point of shape {point.shape} for m={self.m}")
        exps = np.array(self.monomials, dtype=int)
        return np.prod(point[None, :] ** exps, axis=1)

    def evaluate(self, point) -> np.ndarray:
        return np.tensordot(self.powers(point), self.coeffs, axes=(0, 0))

    __call__ = evaluate

    def derivative(self, coord: int, times: int = 1) -> "HolomorphicPolynomial":
        out = self
        for _ in range(times):
            out = out._derivative(coord)
        return out

    def _derivative(self, coord: int) -> "HolomorphicPolynomial":
        if self.degree == 0:
            return HolomorphicPolynomial(np.zeros_like(self.coeffs), self.m, 0)
        _, pos = index_table(self.m, self.degree)
        e = MultiIndex.unit(self.m, coord)
        small = enumerate_upto(self.m, self.degree - 1)
        coeffs = np.array([(K[coord] + 1) * self.coeffs[pos[K + e]] for K in small])
        return HolomorphicPolynomial(coeffs, self.m, self.degree - 1)

    def partial(self, K: Sequence[int]) -> "HolomorphicPolynomial":
        out = self
        for coord, times in enumerate(K):
            out = out.derivative(coord, times)
        return out

    def jet(self, base, caps: tuple[int, int]) -> WirtingerJet:
        """Exact jet at ``base``; every antiholomorphic coefficient is zero."""
        base = np.atleast_1d(np.asarray(base, dtype=complex))
        p = caps[0]
        targets = enumerate_upto(self.m, p)
        monos = self.monomials
        shift = np.zeros((len(targets), len(monos)), dtype=complex)
        for a, K in enumerate(targets):
            for b, I in enumerate(monos):
                if K.leq(I):
                    shift[a, b] = multinomial(I, K) * np.prod(base ** np.array(I - K))
        holo = np.tensordot(shift, self.coeffs, axes=(1, 0))
        out = np.array(WirtingerJet.zeros(self.shape, base, caps).coeffs)
        out[:, 0] = holo
        return WirtingerJet(out, base, caps)

    def raise_degree(self, degree: int) -> "HolomorphicPolynomial":
        if degree <= self.degree:
            return self
        coeffs = np.zeros((len(enumerate_upto(self.m, degree)),) + self.shape, dtype=complex)
        coeffs[: self.coeffs.shape[0]] = self.coeffs
        return HolomorphicPolynomial(coeffs, self.m, degree)

    def __add__(self, other: "HolomorphicPolynomial") -> "HolomorphicPolynomial":
        if self.m != other.m or self.shape != other.shape:
            raise ValueError("polynomial shapes differ")
        degree = max(self.degree, other.degree)
        a, b = self.raise_degree(degree), other.raise_degree(degree)
        return HolomorphicPolynomial(a.coeffs + b.coeffs, self.m, degree)

    def __neg__(self):
        return HolomorphicPolynomial(-self.coeffs, self.m, self.degree)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, HolomorphicPolynomial):
            return self._product(other, scalar=True)
        return HolomorphicPolynomial(self.coeffs * complex(other), self.m, self.degree)

    def __rmul__(self, other):
        if isinstance(other, HolomorphicPolynomial):
            return other._product(self, scalar=True)
        return self * other

    def __matmul__(self, other):
        if isinstance(other, HolomorphicPolynomial):
            return self._product(other, scalar=False)
        return HolomorphicPolynomial(self.coeffs @ np.asarray(other, dtype=complex), self.m, self.degree)

    def __rmatmul__(self, other):
        return HolomorphicPolynomial(np.asarray(other, dtype=complex) @ self.coeffs, self.m, self.degree)

    def _product(self, other: "HolomorphicPolynomial", scalar: bool) -> "HolomorphicPolynomial":
        if self.m != other.m:
            raise ValueError("polynomials in different numbers of variables")
        degree = self.degree + other.degree
        _, pos = index_table(self.m, degree)
        if scalar and (self.shape == (1, 1) or other.shape == (1, 1)):
            shape = np.broadcast_shapes(self.shape, other.shape)
            mult = np.multiply
        else:
            if self.shape[1] != other.shape[0]:
                raise ValueError(f"inner dimensions differ: {self.shape} @ {other.shape}")
            shape = (self.shape[0], other.shape[1])
            mult = np.matmul
        out = np.zeros((len(pos),) + shape, dtype=complex)
        for I, a in zip(self.monomials, self.coeffs):
            if not a.any():
                continue
            for J, b in zip(other.monomials, other.coeffs):
                out[pos[I + J]] += mult(a, b)
        return HolomorphicPolynomial(out, self.m, degree)

    def embed(self, rows: int, offset: int) -> "HolomorphicPolynomial":
        """Place this matrix in rows offset.. of a taller zero matrix."""
        out = np.zeros((self.coeffs.shape[0], rows, self.shape[1]), dtype=complex)
        out[:, offset : offset + self.shape[0]] = self.coeffs
        return HolomorphicPolynomial(out, self.m, self.degree)


def hstack(columns: Sequence[HolomorphicPolynomial]) -> HolomorphicPolynomial:
    degree = max(c.degree for c in columns)
    raised = [c.raise_degree(degree) for c in columns]
    return HolomorphicPolynomial(np.concatenate([c.coeffs for c in raised], axis=2), columns[0].m, degree)


class PolynomialSection(HolomorphicPolynomial):
    """Holomorphic polynomial map into C^D (a D x 1 polynomial matrix)."""

    def __init__(self, coeffs, m: int, degree: int):
        super().__init__(coeffs, m, degree)
        if self.shape[1] != 1:
            raise ValueError("a section is a single column")

    @classmethod
    def of(cls, poly: HolomorphicPolynomial) -> "PolynomialSection":
        return cls(poly.coeffs, poly.m, poly.degree)

    @property
    def dim(self) -> int:
        return self.shape[0]


class Frame:
    """Ordered holomorphic sections sharing an ambient dimension."""

    def __init__(self, sections: Sequence[HolomorphicPolynomial]):
        sections = tuple(PolynomialSection.of(s) for s in sections)
        if not sections:
            raise ValueError("a frame needs at least one section")
        if len({(s.dim, s.m) for s in sections}) != 1:
            raise ValueError("sections must share ambient dimension and variables")
        self.sections = sections
        self.matrix = hstack(sections)

    @classmethod
    def from_matrix(cls, poly: HolomorphicPolynomial) -> "Frame":
        return cls([HolomorphicPolynomial(poly.coeffs[:, :, [k]], poly.m, poly.degree) for k in range(poly.shape[1])])

    @property
    def n(self) -> int:
        return len(self.sections)

    @property
    def dim(self) -> int:
        return self.sections[0].dim

    @property
    def m(self) -> int:
        return self.sections[0].m

    def evaluate(self, point) -> np.ndarray:
        return self.matrix.evaluate(point)

    def jet(self, base, caps) -> WirtingerJet:
        return self.matrix.jet(base, caps)

    def smallest_singular_value(self, point) -> float:
        """n-th singular value; zero when there are more sections than dimensions."""
        if self.n > self.dim:
            return 0.0
        return float(np.linalg.svd(self.evaluate(point), compute_uv=False)[-1])

    def check_independent(self, points, floor: float = INDEPENDENCE_FLOOR) -> None:
        for point in points:
            sigma = self.smallest_singular_value(point)
            if sigma <= floor:
                raise ValueError(f"frame degenerate at {point}: smallest singular value {sigma:.3g}")

    def __matmul__(self, phi) -> "Frame":
        """Frame change F -> F phi for a polynomial (or constant) n x n matrix."""
        return Frame.from_matrix(self.matrix @ phi)

    def conjugated(self, unitary) -> "Frame":
        return Frame.from_matrix(np.asarray(unitary, dtype=complex) @ self.matrix)


def frame_eval_jet(frame: Frame, base, caps) -> WirtingerJet:
    return frame.jet(base, caps)


# kernels ------------------------------------------------------------------


@dataclass(frozen=True)
class DiagonalKernelSpec:
    """Diagonal kernel sum_I a_I^2 w^I conj(lambda)^I truncated at |I| <= N."""

    m: int
    weights: Mapping[MultiIndex, float] = field(repr=False)
    truncation: int
    name: str = "explicit"

    def __post_init__(self):
        for I in enumerate_upto(self.m, self.truncation):
            a = self.weights.get(I)
            if a is None or not a > 0:
                raise ValueError(f"weight for {tuple(I)} must be positive, got {a}")

    @property
    def indices(self) -> tuple[MultiIndex, ...]:
        return enumerate_upto(self.m, self.truncation)

    @property
    def dim(self) -> int:
        return len(self.indices)

    def weight_vector(self) -> np.ndarray:
        return np.array([self.weights[I] for I in self.indices])

    def gram_value(self, point) -> float:
        """Truncated kernel diagonal sum a_I^2 |lambda^I|^2."""
        point = np.atleast_1d(np.asarray(point, dtype=complex))
        mono = np.array([np.prod(point ** np.array(I)) for I in self.indices])
        return float(np.sum(self.weight_vector() ** 2 * np.abs(mono) ** 2))

    def tail_ratio(self, point) -> float:
        """Share of the truncated Gram carried by the top-degree terms."""
        point = np.atleast_1d(np.asarray(point, dtype=complex))
        top = [I for I in self.indices if I.degree == self.truncation]
        tail = sum(self.weights[I] ** 2 * abs(np.prod(point ** np.array(I))) ** 2 for I in top)
        return float(tail / self.gram_value(point))


def hardy(m: int = 1, truncation: int = 60) -> DiagonalKernelSpec:
    weights = {I: 1.0 for I in enumerate_upto(m, truncation)}
    return DiagonalKernelSpec(m, weights, truncation, "hardy")


def bergman(truncation: int = 60) -> DiagonalKernelSpec:
    weights = {I: sqrt(I[0] + 1) for I in enumerate_upto(1, truncation)}
    return DiagonalKernelSpec(1, weights, truncation, "bergman")


def drury_arveson(m: int = 2, truncation: int = 8) -> DiagonalKernelSpec:
    weights = {I: sqrt(factorial(I.degree) / index_factorial(I)) for I in enumerate_upto(m, truncation)}
    return DiagonalKernelSpec(m, weights, truncation, "drury-arveson")


def explicit(weights: Sequence[float] | Mapping, m: int = 1, truncation: int | None = None) -> DiagonalKernelSpec:
    """Kernel from a weight list (m=1, index j) or a multi-index mapping."""
    if isinstance(weights, Mapping):
        table = {MultiIndex(k if isinstance(k, tuple) else (k,)): float(v) for k, v in weights.items()}
        if truncation is None:
            truncation = max(I.degree for I in table)
    else:
        if m != 1:
            raise ValueError("weight lists describe one-variable kernels")
        table = {MultiIndex((j,)): float(a) for j, a in enumerate(weights)}
        if truncation is None:
            truncation = len(table) - 1
    return DiagonalKernelSpec(m, table, truncation, "explicit")


def kernel_preset(name: str, m: int, truncation: int, weights=None) -> DiagonalKernelSpec:
    if name == "hardy":
        return hardy(m, truncation)
    if name == "bergman":
        if m != 1:
            raise ValueError("the bergman preset is one-variable")
        return bergman(truncation)
    if name == "drury-arveson":
        return drury_arveson(m, truncation)
    if name == "explicit":
        if weights is None:
            raise ValueError("explicit kernels need weights")
        return explicit(weights, m, truncation)
    raise ValueError(f"unknown kernel preset {name!r}")


def section_from_kernel(spec: DiagonalKernelSpec) -> PolynomialSection:
    """Section with entries a_I lambda^I in the orthonormal basis."""
    D = spec.dim
    coeffs = np.zeros((D, D, 1), dtype=complex)
    coeffs[np.arange(D), np.arange(D), 0] = spec.weight_vector()
    return PolynomialSection(coeffs, spec.m, spec.truncation)


def derivative_frame(section: HolomorphicPolynomial, rank: int) -> Frame:
    """Frame {D^K t} over the first ``rank`` multi-indices K in graded order."""
    degree = 0
    while len(enumerate_upto(section.m, degree)) < rank:
        degree += 1
    return Frame([section.partial(K) for K in enumerate_upto(section.m, degree)[:rank]])


def jet_frame(t: HolomorphicPolynomial, k: int, points=()) -> Frame:
    """Frame {t, t', ..., t^(k)} of the k-jet bundle (one variable)."""
    if t.m != 1:
        raise ValueError("jet frames are one-variable")
    frame = Frame([t.derivative(0, j) for j in range(k + 1)])
    frame.check_independent(points)
    return frame


# FB2 and OFB_n ---------------------------------------------------------------


def backward_shift(spec: DiagonalKernelSpec) -> np.ndarray:
    """Truncated weighted backward shift with the kernel section as eigenvector.

    B e_j = (a_{j-1}/a_j) e_{j-1}, so B gamma(lambda) = lambda gamma(lambda)
    up to the top-degree term.
    """
    if spec.m != 1:
        raise ValueError("backward shifts are modeled in one variable")
    a = spec.weight_vector()
    return np.diag(a[:-1] / a[1:], k=1).astype(complex)


@dataclass(frozen=True)
class Fb2Model:
    """Upper-triangular pair T = [[T0, S], [0, T1]] described by sections.

    ``coupling`` is the scalar s of the intertwiner S, which maps the
    kernel1 basis onto the kernel0 basis and is diagonal in them,
    S e_j = s (a0_j a1_0)/(a1_j a0_0) e_j, so that S t1 is a multiple of the
    kernel0 section. Optional unitaries conjugate the two summands.
    """

    kernel0: DiagonalKernelSpec
    kernel1: DiagonalKernelSpec
    coupling: complex = 1.0
    u0: np.ndarray | None = field(default=None, repr=False, compare=False)
    u1: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.kernel0.m != 1 or self.kernel1.m != 1:
            raise ValueError("FB2 models are one-variable")
        if self.kernel0.truncation != self.kernel1.truncation:
            raise ValueError("FB2 kernels need matching truncation")
        if self.coupling == 0:
            raise ValueError("coupling must be non-zero")

    def _u(self, which: int) -> np.ndarray:
        u = self.u0 if which == 0 else self.u1
        D = self.kernel0.dim
        return np.eye(D, dtype=complex) if u is None else np.asarray(u, dtype=complex)

    def intertwiner(self) -> np.ndarray:
        a0 = self.kernel0.weight_vector()
        a1 = self.kernel1.weight_vector()
        s = complex(self.coupling) * (a0 / a1) * (a1[0] / a0[0])
        return self._u(0) @ np.diag(s) @ self._u(1).conj().T

    def t1(self) -> PolynomialSection:
        return PolynomialSection.of(self._u(1) @ section_from_kernel(self.kernel1))

    def t0(self) -> PolynomialSection:
        return PolynomialSection.of(-self.intertwiner() @ self.t1())

    def summand_operators(self) -> tuple[np.ndarray, np.ndarray]:
        u0, u1 = self._u(0), self._u(1)
        t0 = u0 @ backward_shift(self.kernel0) @ u0.conj().T
        t1 = u1 @ backward_shift(self.kernel1) @ u1.conj().T
        return t0, t1

    def operator(self) -> np.ndarray:
        t0, t1 = self.summand_operators()
        top = np.hstack([t0, self.intertwiner()])
        bottom = np.hstack([np.zeros_like(t1), t1])
        return np.vstack([top, bottom])

    def conjugated(self, u0, u1) -> "Fb2Model":
        """Model for diag(u0, u1) T diag(u0, u1)^*."""
        new_u0 = np.asarray(u0, dtype=complex) @ self._u(0)
        new_u1 = np.asarray(u1, dtype=complex) @ self._u(1)
        return Fb2Model(self.kernel0, self.kernel1, self.coupling, new_u0, new_u1)


def fb2_frame(model: Fb2Model, sign: int = 1) -> Frame:
    """Frame {t0 + 0, t0' + sign t1} on C^(D0 + D1).

    ``sign=+1`` spans ker(T - lambda) for t0 = -S t1; ``sign=-1`` is the
    opposite-sign convention, exposed for comparison.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    t0, t1 = model.t0(), model.t1()
    rows = t0.dim + t1.dim
    gamma0 = t0.embed(rows, 0)
    gamma1 = t0.derivative(0).embed(rows, 0) + (t1 * sign).embed(rows, t0.dim)
    return Frame([gamma0, gamma1])


def ofb_sections(spec: DiagonalKernelSpec, n: int, coupling: complex = 1.0) -> list[PolynomialSection]:
    """Sections t_0..t_{n-1} with t_{n-1} the kernel section and t_{i-1} = -S t_i."""
    top = section_from_kernel(spec)
    return [PolynomialSection.of(top * (-complex(coupling)) ** (n - 1 - i)) for i in range(n)]


def ofb_frame(sections: Sequence[HolomorphicPolynomial], n: int | None = None) -> Frame:
    """Frame gamma_k = sum_{i<=k} i! C(k,i) t_i^(k-i) on the direct sum."""
    n = len(sections) if n is None else n
    if len(sections) < n:
        raise ValueError(f"need {n} sections, got {len(sections)}")
    sections = list(sections)[:n]
    if any(t.m != 1 for t in sections):
        raise ValueError("OFB frames are one-variable")
    dims = [t.shape[0] for t in sections]
    offsets = np.concatenate([[0], np.cumsum(dims)])
    rows = int(offsets[-1])
    gammas = []
    for k in range(n):
        terms = [
            (sections[i].derivative(0, k - i) * (factorial(i) * comb(k, i))).embed(rows, int(offsets[i]))
            for i in range(k + 1)
        ]
        total = terms[0]
        for term in terms[1:]:
            total = total + term
        gammas.append(total)
    return Frame(gammas)
