"""Classical bundle geometry of a frame pair: metric, connection, curvature."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache
from itertools import product
from math import comb
from typing import Callable, Iterator, Sequence, Union

import numpy as np

from .indexing import MultiIndex
from .jets import DEFAULT_MAX_COND, WirtingerJet, jet_invert
from .model import Frame, HolomorphicPolynomial
from .numerics import residual


@dataclass(frozen=True)
class Hol:
    """Holomorphic covariant step in coordinate ``coord`` (1-based)."""

    coord: int

    def __str__(self) -> str:
        return f"Hol({self.coord})"


@dataclass(frozen=True)
class AntiHol:
    """Antiholomorphic covariant step in coordinate ``coord`` (1-based)."""

    coord: int

    def __str__(self) -> str:
        return f"AntiHol({self.coord})"


Step = Union[Hol, AntiHol]


@dataclass(frozen=True)
class DerivPlan:
    """Ordered covariant-derivative steps applied to the curvature."""

    steps: tuple[Step, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))
        for step in self.steps:
            if not isinstance(step, (Hol, AntiHol)) or step.coord < 1:
                raise ValueError(f"invalid plan step {step!r}")

    @classmethod
    def parse(cls, text: str | Sequence[str]) -> "DerivPlan":
        """Parse tokens like ``"H1 A2"`` or ``["hol:1", "antihol:2"]``."""
        tokens = text.replace(",", " ").split() if isinstance(text, str) else list(text)
        steps = []
        for token in tokens:
            t = token.strip().lower().replace(":", "").replace("(", "").replace(")", "")
            for prefix, kind in (("antihol", AntiHol), ("hol", Hol), ("a", AntiHol), ("h", Hol)):
                if t.startswith(prefix) and t[len(prefix):].isdigit():
                    steps.append(kind(int(t[len(prefix):])))
                    break
            else:
                raise ValueError(f"cannot parse plan step {token!r}")
        return cls(tuple(steps))

    @classmethod
    def canonical(cls, I: Sequence[int], J: Sequence[int], convention: str = "antihol-first") -> "DerivPlan":
        anti = [AntiHol(k + 1) for k, j in enumerate(J) for _ in range(j)]
        hol = [Hol(k + 1) for k, i in enumerate(I) for _ in range(i)]
        if convention == "antihol-first":
            return cls(tuple(anti + hol))
        if convention == "hol-first":
            return cls(tuple(hol + anti))
        raise ValueError(f"unknown convention {convention!r}")

    def check(self, m: int) -> None:
        for step in self.steps:
            if step.coord > m:
                raise ValueError(f"{step} exceeds dimension m={m}")

    def I(self, m: int) -> MultiIndex:
        return MultiIndex(sum(1 for s in self.steps if isinstance(s, Hol) and s.coord == k + 1) for k in range(m))

    def J(self, m: int) -> MultiIndex:
        return MultiIndex(sum(1 for s in self.steps if isinstance(s, AntiHol) and s.coord == k + 1) for k in range(m))

    @property
    def n_hol(self) -> int:
        return sum(isinstance(s, Hol) for s in self.steps)

    @property
    def n_antihol(self) -> int:
        return len(self.steps) - self.n_hol

    def __len__(self) -> int:
        return len(self.steps)

    def __str__(self) -> str:
        return "[" + ", ".join(map(str, self.steps)) + "]"

    def elementary_pairs(self) -> list[tuple[tuple[int, int], "DerivPlan"]]:
        """Sub-plans keeping the steps of one (Hol p, AntiHol q) coordinate pair.

        Relative step order is preserved. When one direction is absent the
        pairs run over the other direction only (q or p reported as 0).
        """
        hol = sorted({s.coord for s in self.steps if isinstance(s, Hol)})
        anti = sorted({s.coord for s in self.steps if isinstance(s, AntiHol)})
        out = []
        for p, q in product(hol or [0], anti or [0]):
            keep = tuple(
                s for s in self.steps
                if (isinstance(s, Hol) and s.coord == p) or (isinstance(s, AntiHol) and s.coord == q)
            )
            out.append(((p, q), DerivPlan(keep)))
        return out


def all_plans(m: int, max_length: int) -> Iterator[DerivPlan]:
    """Every plan with at most ``max_length`` steps, in deterministic order."""
    alphabet = [AntiHol(k) for k in range(1, m + 1)] + [Hol(k) for k in range(1, m + 1)]
    for length in range(max_length + 1):
        for steps in product(alphabet, repeat=length):
            yield DerivPlan(steps)


def evaluate_plan(
    plan: DerivPlan,
    start,
    hol_step: Callable[[int, object], object],
    antihol_step: Callable[[int, object], object],
    cache: dict | None = None,
):
    """Covariant derivative of ``start`` along ``plan``.

    Extending along a coordinate applies the elementary step to the part of
    the derivative already taken in that coordinate and adds the part taken
    in the other coordinates:

        K_{I+e_l, J} = K_{I - i_l e_l, J} + step_l(K_{i_l e_l, J}),

    the first term present only when I has entries off coordinate l. The
    antiholomorphic direction is symmetric. Single-coordinate plans reduce to
    applying the steps one after another.
    """
    cache: dict = {}

    def run(steps: tuple) -> object:
        if steps in cache:
            return cache[steps]
        if not steps:
            return start
        *rest, last = steps
        kind = type(last)
        same = tuple(s for s in rest if not (type(s) is kind and s.coord != last.coord))
        other = tuple(s for s in rest if not (type(s) is kind and s.coord == last.coord))
        apply = hol_step if kind is Hol else antihol_step
        out = apply(last.coord - 1, run(same))
        if any(type(s) is kind for s in other):
            out = run(other) + out
        cache[steps] = out
        return out

    return run(plan.steps)


def apply_steps(plan: DerivPlan, start, hol_step, antihol_step):
    """Apply the plan's elementary steps one after another."""
    out = start
    for step in plan.steps:
        out = (hol_step if isinstance(step, Hol) else antihol_step)(step.coord - 1, out)
    return out


# metric, connection, curvature --------------------------------------------


def required_caps(plan: DerivPlan) -> tuple[int, int]:
    """Jet caps of the metric needed to evaluate a plan's covariant derivative."""
    return plan.n_hol + 1, plan.n_antihol + 1


def plans_by_caps(m: int, max_length: int, min_length: int = 0) -> dict[tuple[int, int], list[DerivPlan]]:
    """Plans grouped by the jet caps they need, so one jet set serves a group."""
    groups: dict = {}
    for plan in all_plans(m, max_length):
        if len(plan) >= min_length:
            groups.setdefault(required_caps(plan), []).append(plan)
    return groups


def gram(F: Frame, G: Frame, base, caps) -> WirtingerJet:
    """Jet of H = G^* F."""
    if F.n != G.n or F.dim != G.dim:
        raise ValueError("frames differ in rank or ambient dimension")
    p, q = caps
    return G.jet(base, (q, p)).adjoint() @ F.jet(base, (p, q))


class ClassicalGeometry:
    """Connection and curvature of a metric jet H, sharing one inverse."""

    def __init__(self, H: WirtingerJet, max_cond: float = DEFAULT_MAX_COND):
        self.H = H
        self.H_inv = jet_invert(H, max_cond)
        self._plan_cache: dict = {}

    @property
    def m(self) -> int:
        return self.H.m

    @lru_cache(maxsize=None)
    def connection_component(self, coord: int) -> WirtingerJet:
        """H^-1 d_i H with 0-based coordinate."""
        return self.H_inv @ self.H.d(coord)

    @property
    def connection(self) -> WirtingerJet:
        return self.H_inv @ self.H.d_sum()

    @cached_property
    def curvature(self) -> WirtingerJet:
        return -self.connection.dbar_sum()

    def hol_step(self, coord: int, X: WirtingerJet) -> WirtingerJet:
        theta = self.connection_component(coord)
        return X.d(coord) + (theta @ X - X @ theta)

    @staticmethod
    def antihol_step(coord: int, X: WirtingerJet) -> WirtingerJet:
        return X.dbar(coord)

    def covariant_derivative(self, plan: DerivPlan) -> WirtingerJet:
        plan.check(self.m)
        return evaluate_plan(plan, self.curvature, self.hol_step, self.antihol_step, self._plan_cache)

    def sequential(self, plan: DerivPlan) -> WirtingerJet:
        plan.check(self.m)
        return apply_steps(plan, self.curvature, self.hol_step, self.antihol_step)


def classical_connection(H: WirtingerJet) -> WirtingerJet:
    return ClassicalGeometry(H).connection


def classical_curvature(H: WirtingerJet) -> WirtingerJet:
    return ClassicalGeometry(H).curvature


def classical_covariant_derivative(H: WirtingerJet, plan: DerivPlan) -> WirtingerJet:
    return ClassicalGeometry(H).covariant_derivative(plan)


def classical_pair_decomposition_residual(H: WirtingerJet, plan: DerivPlan) -> float:
    """Plan value versus the sum of its elementary-pair sub-plans."""
    geo = ClassicalGeometry(H)
    total = geo.covariant_derivative(plan)
    parts = [geo.sequential(sub) for _, sub in plan.elementary_pairs()]
    acc = parts[0]
    for part in parts[1:]:
        acc = acc + part
    return residual(total.value, acc.value)


# frame changes ---------------------------------------------------------------


def frame_change_matrix(phi00: HolomorphicPolynomial, n: int) -> HolomorphicPolynomial:
    """Upper-triangular matrix with entries C(j, i) phi00^(j-i) for i <= j."""
    if phi00.shape != (1, 1) or phi00.m != 1:
        raise ValueError("phi00 must be a one-variable scalar polynomial")
    degree = phi00.degree
    coeffs = np.zeros((degree + 1, n, n), dtype=complex)
    for i in range(n):
        for j in range(i, n):
            entry = phi00.derivative(0, j - i).raise_degree(degree) * comb(j, i)
            coeffs[:, i, j] = entry.coeffs[:, 0, 0]
    return HolomorphicPolynomial(coeffs, 1, degree)


def conjugation_trace_check(
    H_F: WirtingerJet, H_G: WirtingerJet, phi, plan: DerivPlan
) -> dict[str, float]:
    """Residuals of K(G) = phi^-1 K(F) phi and tr K(G) = tr K(F) at the base."""
    if isinstance(phi, HolomorphicPolynomial):
        phi_value = phi.evaluate(H_F.base)
    else:
        phi_value = np.asarray(phi, dtype=complex)
    K_F = classical_covariant_derivative(H_F, plan).value
    K_G = classical_covariant_derivative(H_G, plan).value
    conj = np.linalg.solve(phi_value, K_F @ phi_value)
    return {
        "conjugation": residual(K_G, conj),
        "trace": residual(np.trace(K_G), np.trace(K_F)),
    }
