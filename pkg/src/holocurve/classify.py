"""Equivalence and similarity decisions built from curvature invariants."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .curves import CurveJets, ExtendedCurve
from .geometry import ClassicalGeometry, DerivPlan, gram, required_caps
from .indexing import MultiIndex, enumerate_upto
from .jets import WirtingerJet
from .model import DiagonalKernelSpec, Fb2Model, Frame
from .numerics import residual

EQUIVALENT = "equivalent"
NOT_EQUIVALENT = "not-equivalent"
INCONCLUSIVE = "inconclusive"

DEFAULT_TOLERANCE = 1e-8


@dataclass
class EquivalenceVerdict:
    verdict: str
    witness: str
    residuals: dict[str, float] = field(default_factory=dict)
    tolerance: float = DEFAULT_TOLERANCE
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.verdict not in (EQUIVALENT, NOT_EQUIVALENT, INCONCLUSIVE):
            raise ValueError(f"unknown verdict {self.verdict!r}")

    @property
    def equivalent(self) -> bool:
        return self.verdict == EQUIVALENT

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "witness": self.witness,
            "residuals": dict(self.residuals),
            "tolerance": self.tolerance,
            "details": self.details,
        }


def disk_samples(radius: float = 0.6, count: int = 25, m: int = 1) -> list[np.ndarray]:
    """Deterministic points in the disk: the center plus rings of eight.

    For m > 1 the same radii are used on the diagonal direction, scaled so
    every point stays in the ball of the given radius.
    """
    rings = max(1, (count - 1) // 8)
    points = [0j]
    for r in range(1, rings + 1):
        rho = radius * r / rings
        points.extend(rho * np.exp(2j * np.pi * (k + 0.5 * (r % 2)) / 8) for k in range(8))
    points = points[:count]
    if m == 1:
        return [np.array([p]) for p in points]
    return [np.array([p * np.exp(1j * k) for k in range(m)]) / np.sqrt(m) for p in points]


def curvature_value(frame: Frame, point) -> np.ndarray:
    """Classical curvature matrix of the frame's bundle at one point."""
    H = gram(frame, frame, point, (1, 1))
    return ClassicalGeometry(H).curvature.value


def _fmt(z: complex) -> str:
    z = complex(z)
    return f"{z.real:.6g}" if abs(z.imag) < 1e-12 else f"{z.real:.6g}{z.imag:+.6g}j"


def b1_unitary_equivalence(
    h1: Sequence[WirtingerJet] | Frame,
    h2: Sequence[WirtingerJet] | Frame,
    samples: Iterable | None = None,
    tolerance: float = DEFAULT_TOLERANCE,
) -> EquivalenceVerdict:
    """Rank-one test: equal curvature at every sample.

    ``h1`` and ``h2`` are Gram jets (one per sample, caps >= (1, 1)) or
    rank-one frames, in which case the Grams are taken at ``samples``.
    """
    if isinstance(h1, Frame) or isinstance(h2, Frame):
        samples = list(samples if samples is not None else disk_samples(m=(h1 if isinstance(h1, Frame) else h2).m))
        h1 = [gram(h1, h1, p, (1, 1)) for p in samples] if isinstance(h1, Frame) else list(h1)
        h2 = [gram(h2, h2, p, (1, 1)) for p in samples] if isinstance(h2, Frame) else list(h2)
    if len(h1) != len(h2):
        raise ValueError("need one Gram jet per sample on both sides")
    # the witness is the first failing sample, else the first sample
    worst, worst_at, pair = 0.0, None, (0.0, 0.0)
    for g1, g2 in zip(h1, h2):
        if g1.shape != (1, 1) or g2.shape != (1, 1):
            raise ValueError("b1 equivalence needs rank-one Grams")
        k1 = complex(ClassicalGeometry(g1).curvature.value[0, 0])
        k2 = complex(ClassicalGeometry(g2).curvature.value[0, 0])
        r = residual(k1, k2)
        if worst_at is None or (worst <= tolerance < r):
            worst_at, pair = g1.base, (k1, k2)
        worst = max(worst, r)
    at = ", ".join(_fmt(z) for z in worst_at)
    witness = f"K({at}): {_fmt(pair[0])} vs {_fmt(pair[1])}"
    verdict = EQUIVALENT if worst <= tolerance else NOT_EQUIVALENT
    return EquivalenceVerdict(verdict, witness, {"curvature": worst}, tolerance, {"samples": len(h1)})


def _line_data(section, point) -> tuple[complex, float]:
    frame = Frame([section])
    H = gram(frame, frame, point, (1, 1))
    return complex(ClassicalGeometry(H).curvature.value[0, 0]), float(H.value[0, 0].real)


def fb2_invariants(model: Fb2Model, point) -> dict[str, complex]:
    """Curvature of the t0 line bundle and the ratio ||S t1||^2 / ||t1||^2."""
    k0, h0 = _line_data(model.t0(), point)
    _, h1 = _line_data(model.t1(), point)
    return {"curvature": k0, "ratio": h0 / h1}


def fb2_unitary_equivalence(
    m1: Fb2Model, m2: Fb2Model, samples: Iterable | None = None, tolerance: float = DEFAULT_TOLERANCE
) -> EquivalenceVerdict:
    """Equal t0 curvature and equal coupling ratio at every sample."""
    samples = list(samples if samples is not None else disk_samples())
    worst = {"curvature": 0.0, "ratio": 0.0}
    witness_at = {"curvature": None, "ratio": None}
    for point in samples:
        a, b = fb2_invariants(m1, point), fb2_invariants(m2, point)
        for key in worst:
            r = residual(a[key], b[key])
            if witness_at[key] is None or (worst[key] <= tolerance < r):
                witness_at[key] = (point, a[key], b[key])
            worst[key] = max(worst[key], r)
    failing = [key for key in ("curvature", "ratio") if worst[key] > tolerance]
    key = failing[0] if failing else "curvature"
    point, a, b = witness_at[key]
    at = ", ".join(_fmt(z) for z in point)
    label = "K_T0" if key == "curvature" else "||St1||^2/||t1||^2"
    witness = f"{label}({at}): {_fmt(a)} vs {_fmt(b)}"
    verdict = NOT_EQUIVALENT if failing else EQUIVALENT
    return EquivalenceVerdict(verdict, witness, worst, tolerance, {"samples": len(samples)})


# weighted shifts ---------------------------------------------------------------

STABLE_GROWTH = 0.02
DIVERGENT_GROWTH = 0.1


def _log_ratio_spread(log_r: dict, degree: int) -> float:
    values = [v for I, v in log_r.items() if I.degree <= degree]
    return max(values) - min(values)


def weighted_shift_similarity(
    a: DiagonalKernelSpec,
    b: DiagonalKernelSpec,
    stable: float = STABLE_GROWTH,
    divergent: float = DIVERGENT_GROWTH,
) -> EquivalenceVerdict:
    """Similarity of two weighted shift tuples from the bounds of b_I / a_I.

    The shifts are similar iff the ratio stays within fixed positive bounds.
    At a finite truncation N this is read off from the growth of the
    log-ratio spread between N/2 and N: stabilized spread means equivalent,
    growth with a monotone extreme means not-equivalent, else inconclusive.
    """
    if a.m != b.m or a.truncation != b.truncation:
        raise ValueError("weighted shifts must share dimension and truncation")
    N = a.truncation
    log_r = {I: float(np.log(b.weights[I] / a.weights[I])) for I in enumerate_upto(a.m, N)}
    ratios = np.exp(np.array(list(log_r.values())))
    spread_full = _log_ratio_spread(log_r, N)
    spread_half = _log_ratio_spread(log_r, N // 2)
    growth = spread_full - spread_half
    # extreme |log r| per degree, over the upper half of the degrees
    extremes = [max(abs(v) for I, v in log_r.items() if I.degree == d) for d in range(N // 2, N + 1)]
    monotone = all(y > x for x, y in zip(extremes, extremes[1:]))
    telescoping = 0.0
    for I, v in log_r.items():
        for i in range(a.m):
            for n in range(1, N - I.degree + 1):
                J = MultiIndex(x + (n if k == i else 0) for k, x in enumerate(I))
                telescoping = max(telescoping, abs(log_r[J] - v))
    residuals = {"spread_growth": growth, "telescoping_log_max": telescoping}
    details = {
        "truncation": N,
        "ratio_min": float(ratios.min()),
        "ratio_max": float(ratios.max()),
        "spread_half": spread_half,
        "spread_full": spread_full,
        "trend": "monotone" if monotone else "bounded" if growth < stable else "mixed",
    }
    bounds = f"b/a in [{ratios.min():.6g}, {ratios.max():.6g}] up to N={N}"
    if growth < stable:
        verdict = EQUIVALENT
        witness = f"{bounds}; spread growth {growth:.3g} from N/2 to N"
    elif growth > divergent and monotone:
        verdict = NOT_EQUIVALENT
        witness = f"{bounds}; monotone unbounded ratio, spread growth {growth:.3g}"
    else:
        verdict = INCONCLUSIVE
        witness = f"{bounds}; spread growth {growth:.3g} undecided at this truncation"
    return EquivalenceVerdict(verdict, witness, residuals, stable, details)


# curve-level intertwiners ------------------------------------------------------


def product_intertwine_check(
    c1: ExtendedCurve, c2: ExtendedCurve, X, orders: tuple[int, int], points: Iterable
) -> dict[str, float]:
    """Worst residual of X D^I I1 Dbar^J I2 = D^I I2 Dbar^J I2 X over |I| <= p, |J| <= q."""
    X = np.asarray(X, dtype=complex)
    p, q = orders
    worst = 0.0
    count = 0
    for point in points:
        j1, j2 = CurveJets(c1, point, (p, q)), CurveJets(c2, point, (p, q))
        m = j1.m
        zero = MultiIndex.zero(m)
        for I in enumerate_upto(m, p):
            for J in enumerate_upto(m, q):
                lhs = X @ j1.I.extract(I, zero) @ j1.I.extract(zero, J)
                rhs = j2.I.extract(I, zero) @ j2.I.extract(zero, J) @ X
                worst = max(worst, residual(lhs, rhs))
                count += 1
    return {"residual": worst, "products": float(count)}


def classical_similarity_witness(
    c1: ExtendedCurve, c2: ExtendedCurve, U, plan: DerivPlan, base
) -> dict[str, float]:
    """Y = H2^-1 G2^* U F1 intertwines the classical covariant derivatives.

    Reports Y K1 - K2 Y, Y Z - 1 with Z = H1^-1 G1^* U^* F2, and the
    hypothesis U I1 = I2 U at the base point.
    """
    U = np.asarray(U, dtype=complex)
    caps = required_caps(plan)
    j1, j2 = CurveJets(c1, base, caps), CurveJets(c2, base, caps)
    F1, F2 = j1.F.value, j2.F.value
    G1s, G2s = j1.G_star.value, j2.G_star.value
    Y = np.linalg.solve(j2.H.value, G2s @ U @ F1)
    Z = np.linalg.solve(j1.H.value, G1s @ U.conj().T @ F2)
    K1 = j1.classical(plan).value
    K2 = j2.classical(plan).value
    return {
        "intertwining": residual(Y @ K1, K2 @ Y),
        "inverse": residual(Y @ Z, np.eye(Y.shape[0])),
        "hypothesis": residual(U @ j1.I.value, j2.I.value @ U),
    }


def unitary_invariance_residual(c: ExtendedCurve, U, plan: DerivPlan, base) -> float:
    """K_plan(U I U^*) versus U K_plan(I) U^*."""
    U = np.asarray(U, dtype=complex)
    caps = required_caps(plan)
    k = CurveJets(c, base, caps).covariant_derivative(plan).value
    k_conj = CurveJets(c.conjugated(U), base, caps).covariant_derivative(plan).value
    return residual(k_conj, U @ k @ U.conj().T)


# finite-rank curves --------------------------------------------------------------


def coefficient_gram(frame: Frame) -> np.ndarray:
    """M[j, k] = sum_i beta_ij conj(beta_ik) for a rank-one polynomial frame.

    The Gram of the section then reads sum_{j,k} M[j, k] w^j conj(w)^k.
    """
    if frame.n != 1 or frame.m != 1:
        raise ValueError("coefficient Grams are for one-variable rank-one frames")
    beta = frame.matrix.coeffs[:, :, 0].T  # rows: components i, columns: powers j
    return beta.T @ beta.conj()


def finite_rank_twist_equivalence(
    p: Frame, q: Frame, samples: Iterable | None = None, tolerance: float = DEFAULT_TOLERANCE
) -> EquivalenceVerdict:
    """Test H_P = |phi|^2 H_Q for some holomorphic phi.

    Equivalent iff ddbar log(det H_P / det H_Q) vanishes at every sample. The
    Laplacian is taken as tr K_Q - tr K_P, since ddbar log det H = -tr K.
    For rank-one frames the coefficient Grams are also compared up to a
    positive constant, which is the criterion when phi is constant.
    """
    if p.n != q.n or p.m != q.m:
        raise ValueError("frames must share rank and dimension")
    samples = list(samples if samples is not None else disk_samples(m=p.m))
    worst, witness_at = 0.0, None
    for point in samples:
        value = np.trace(curvature_value(q, point)) - np.trace(curvature_value(p, point))
        if witness_at is None or abs(value) > worst:
            worst, witness_at = abs(value), (point, value)
    residuals = {"log_ratio_laplacian": float(worst)}
    details: dict = {"samples": len(samples)}
    if p.n == 1 and p.m == 1:
        Mp, Mq = coefficient_gram(p), coefficient_gram(q)
        size = max(Mp.shape[0], Mq.shape[0])
        Mp = np.pad(Mp, ((0, size - Mp.shape[0]),) * 2)
        Mq = np.pad(Mq, ((0, size - Mq.shape[0]),) * 2)
        c = np.trace(Mp).real / np.trace(Mq).real
        residuals["constant_twist"] = residual(Mp, c * Mq)
        details["constant_twist_scale"] = float(c)
    point, value = witness_at
    at = ", ".join(_fmt(z) for z in point)
    witness = f"ddbar log(det H_P/det H_Q)({at}) = {_fmt(value)}"
    verdict = EQUIVALENT if worst <= tolerance else NOT_EQUIVALENT
    return EquivalenceVerdict(verdict, witness, residuals, tolerance, details)
