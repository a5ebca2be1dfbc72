"""FB2 projection decomposition, OFB frames and the jet-flag bundle maps."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .curves import ExtendedCurve
from .geometry import frame_change_matrix
from .model import Fb2Model, Frame, HolomorphicPolynomial, PolynomialSection, fb2_frame, ofb_frame
from .numerics import residual

SINGULAR_FLOOR = 1e-12


def _outer(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    return np.outer(u, v.conj())


def _pad(v: np.ndarray, before: int, after: int) -> np.ndarray:
    return np.concatenate([np.zeros(before, dtype=complex), v, np.zeros(after, dtype=complex)])


def gram_projection(frame_value: np.ndarray) -> np.ndarray:
    """Orthogonal projection gamma (gamma^* gamma)^-1 gamma^* onto the frame span."""
    g = frame_value
    return g @ np.linalg.solve(g.conj().T @ g, g.conj().T)


@dataclass
class Fb2Decomposition:
    """P_T = (1 - theta) diag(P_T0, P_T1) + theta [[F_P, S_P], [S_P^*, 0]] at one point."""

    point: complex
    theta: complex
    diag_part: tuple[np.ndarray, np.ndarray]
    coupling_part: np.ndarray
    direct: np.ndarray
    curvature: complex
    h0: float
    h1: float
    t0: np.ndarray
    t0_prime: np.ndarray
    t1: np.ndarray
    sign: int = 1

    @property
    def D0(self) -> int:
        return self.t0.shape[0]

    def reassembled(self) -> np.ndarray:
        P0, P1 = self.diag_part
        diag = np.block([[P0, np.zeros((P0.shape[0], P1.shape[1]))], [np.zeros((P1.shape[0], P0.shape[1])), P1]])
        return (1 - self.theta) * diag + self.theta * self.coupling_part

    def residuals(self) -> dict[str, float]:
        P = self.direct
        return {
            "reassembly": residual(self.reassembled(), P),
            "idempotent": residual(P @ P, P),
            "self_adjoint": residual(P, P.conj().T),
        }


def fb2_projection(model: Fb2Model, point, sign: int = 1) -> Fb2Decomposition:
    """Split the kernel projection of an FB2 model into diagonal and coupling parts.

    With h0 = ||t0||^2, h1 = ||t1||^2 and K the curvature of t0,
    theta = -K h0^2 / (h0 h1 - K h0^2). The direct projection uses the frame
    {t0, t0' + sign t1}.
    """
    lam = complex(np.atleast_1d(point)[0])
    t0p = model.t0()
    t0 = t0p.evaluate([lam])[:, 0]
    d0 = t0p.derivative(0).evaluate([lam])[:, 0]
    t1 = model.t1().evaluate([lam])[:, 0]
    h0 = float(np.vdot(t0, t0).real)
    h1 = float(np.vdot(t1, t1).real)
    dh0 = np.vdot(t0, d0)  # d h0 = <t0', t0>
    ddh0 = float(np.vdot(d0, d0).real)  # d dbar h0 = ||t0'||^2
    K_h0sq = abs(dh0) ** 2 - h0 * ddh0  # K h0^2 with K = -d dbar log h0
    det = h0 * h1 - K_h0sq
    if abs(det) < SINGULAR_FLOOR or abs(K_h0sq) < SINGULAR_FLOOR:
        raise ValueError(f"FB2 decomposition is singular at {lam}")
    theta = -K_h0sq / det
    F = (
        -ddh0 * _outer(t0, t0) + dh0 * _outer(t0, d0) + np.conj(dh0) * _outer(d0, t0) - h0 * _outer(d0, d0)
    ) / K_h0sq
    S = sign * (dh0 * _outer(t0, t1) - h0 * _outer(d0, t1)) / K_h0sq
    coupling = np.block([[F, S], [S.conj().T, np.zeros((t1.shape[0],) * 2)]])
    diag = (_outer(t0, t0) / h0, _outer(t1, t1) / h1)
    gamma = fb2_frame(model, sign).evaluate([lam])
    return Fb2Decomposition(
        point=lam,
        theta=complex(theta),
        diag_part=diag,
        coupling_part=coupling,
        direct=gram_projection(gamma),
        curvature=complex(K_h0sq / h0**2),
        h0=h0,
        h1=h1,
        t0=t0,
        t0_prime=d0,
        t1=t1,
        sign=sign,
    )


def fb2_theta_relation(model: Fb2Model, point, sign: int = 1) -> dict[str, float]:
    """R+ = theta h1 + (1 + theta) K h0 and R- = theta h1 + (1 - theta) K h0.

    Only R- vanishes for the theta of the decomposition; R+ is reported.
    """
    dec = fb2_projection(model, point, sign)
    theta, K = dec.theta, dec.curvature
    scale = max(1.0, abs(theta * dec.h1), abs(K * dec.h0))
    return {
        "R_plus": complex(theta * dec.h1 + (1 + theta) * K * dec.h0),
        "R_minus": complex(theta * dec.h1 + (1 - theta) * K * dec.h0),
        "scale": scale,
    }


def fb2_jet_action_check(model: Fb2Model, point, sign: int = 1) -> dict[str, float]:
    """The coupling block sends (t0, 0) to itself and (t0', 0) to (t0', sign t1).

    Together these make the top-left block F_P the identity on span{t0, t0'}.
    """
    dec = fb2_projection(model, point, sign)
    C = dec.coupling_part
    zeros = np.zeros(dec.t1.shape[0], dtype=complex)
    first_in = np.concatenate([dec.t0, zeros])
    second_in = np.concatenate([dec.t0_prime, zeros])
    second_target = np.concatenate([dec.t0_prime, sign * dec.t1])
    D0 = dec.D0
    span = np.column_stack([dec.t0, dec.t0_prime])
    return {
        "first": residual(C @ first_in, first_in),
        "second": residual(C @ second_in, second_target),
        "top_block_identity": residual(C[:D0, :D0] @ span, span),
    }


def fb2_kernel_residual(model: Fb2Model, point, sign: int = 1) -> float:
    """Diagnostic: (T - lambda) gamma_i for the truncated operator.

    Nonzero only through the top-degree truncation term and the sign
    convention (sign=-1 does not span the kernel).
    """
    lam = complex(np.atleast_1d(point)[0])
    T = model.operator()
    gamma = fb2_frame(model, sign).evaluate([lam])
    return residual((T - lam * np.eye(T.shape[0])) @ gamma, 0.0)


# projection curves ------------------------------------------------------------


def projection_curve(frame: Frame) -> ExtendedCurve:
    """The self-adjoint curve P(lambda) = alpha h^-1 alpha^* of a frame."""
    return ExtendedCurve(frame, frame)


def projection_residuals(frame: Frame, samples: Iterable) -> dict[str, float]:
    curve = projection_curve(frame)
    worst = {"idempotent": 0.0, "self_adjoint": 0.0, "range": 0.0}
    for point in samples:
        P = curve.evaluate(point)
        A = frame.evaluate(point)
        worst["idempotent"] = max(worst["idempotent"], residual(P @ P, P))
        worst["self_adjoint"] = max(worst["self_adjoint"], residual(P, P.conj().T))
        worst["range"] = max(worst["range"], residual(P @ A, A))
    return worst


def projection_congruence(frame1: Frame, frame2: Frame, U, samples: Iterable) -> float:
    """Worst residual of P2 = U P1 U^* over the samples."""
    U = np.asarray(U, dtype=complex)
    c1, c2 = projection_curve(frame1), projection_curve(frame2)
    return max(residual(c2.evaluate(p), U @ c1.evaluate(p) @ U.conj().T) for p in samples)


# jet flags ------------------------------------------------------------------------


class JetFlag:
    """Evaluated jet-flag data of sections t_0, ..., t_{n-1} at one point.

    Vectors live in the direct sum of the section spaces. The jet space of
    order k is spanned by t_0^(j) (j <= k) in the first summand; the bundle
    map J_k sends t_0^(j) to t_0^(j) + t_1^(j-1) + ... + t_j.
    """

    def __init__(self, sections: Sequence[HolomorphicPolynomial], point):
        if any(t.m != 1 for t in sections):
            raise ValueError("jet flags are one-variable")
        self.sections = list(sections)
        self.n = len(sections)
        self.point = complex(np.atleast_1d(point)[0])
        self.dims = [t.shape[0] for t in sections]
        self.offsets = np.concatenate([[0], np.cumsum(self.dims)]).astype(int)
        self.total = int(self.offsets[-1])
        # derivs[i][j] = t_i^(j)(point), embedded in the direct sum
        self.derivs = [
            [self._embed(i, t.derivative(0, j).evaluate([self.point])[:, 0]) for j in range(self.n)]
            for i, t in enumerate(self.sections)
        ]

    def _embed(self, block: int, v: np.ndarray) -> np.ndarray:
        return _pad(v, int(self.offsets[block]), self.total - int(self.offsets[block + 1]))

    def jet_basis(self, k: int) -> np.ndarray:
        """Columns t_0^(j), 0 <= j <= k."""
        return np.column_stack([self.derivs[0][j] for j in range(k + 1)])

    def image_basis(self, k: int) -> np.ndarray:
        """Columns t_0^(j) + t_1^(j-1) + ... + t_j, 0 <= j <= k."""
        return np.column_stack([sum(self.derivs[i][j - i] for i in range(j + 1)) for j in range(k + 1)])

    def bundle_map(self, k: int) -> np.ndarray:
        """J_k as a matrix on the direct sum, zero off the jet space."""
        B = self.jet_basis(k)
        return self.image_basis(k) @ np.linalg.pinv(B)


def _block_diag(blocks: Sequence[np.ndarray]) -> np.ndarray:
    size = sum(b.shape[0] for b in blocks)
    out = np.zeros((size, size), dtype=complex)
    pos = 0
    for b in blocks:
        out[pos : pos + b.shape[0], pos : pos + b.shape[0]] = b
        pos += b.shape[0]
    return out


def flag_diagram_check(
    sections: Sequence[HolomorphicPolynomial], n: int, point, unitaries: Sequence[np.ndarray] | None = None
) -> dict[str, float]:
    """Commutativity of the jet-flag diagram and its unitary transport.

    ``diagram``: J_{k+1} restricted to the order-k jet space agrees with
    J_k (both followed by the inclusions), for 0 <= k <= n - 2.
    ``conjugation``: with block unitaries U = diag(U_0, ...) and sections
    U_i t_i, U J_k = J~_k U on the jet space.
    ``nesting``: the projections onto the leading-block frames of the
    OFB frame (gamma_0, ..., gamma_i) are conjugated by the leading part of U.
    """
    sections = list(sections)[:n]
    if len(sections) < n:
        raise ValueError(f"need {n} sections")
    flag = JetFlag(sections, point)
    out = {"diagram": 0.0, "conjugation": 0.0, "nesting": 0.0}
    for k in range(n - 1):
        B = flag.jet_basis(k)
        out["diagram"] = max(out["diagram"], residual(flag.bundle_map(k + 1) @ B, flag.bundle_map(k) @ B))
    if unitaries is None:
        return out
    unitaries = [np.asarray(u, dtype=complex) for u in unitaries][:n]
    U = _block_diag(unitaries)
    moved = [PolynomialSection.of(u @ t) for u, t in zip(unitaries, sections)]
    tilde = JetFlag(moved, point)
    for k in range(n):
        B = flag.jet_basis(k)
        out["conjugation"] = max(out["conjugation"], residual(U @ flag.bundle_map(k) @ B, tilde.bundle_map(k) @ U @ B))
    gamma = ofb_frame(sections, n).evaluate([flag.point])
    gamma_t = ofb_frame(moved, n).evaluate([flag.point])
    for i in range(n):
        rows = int(flag.offsets[i + 1])
        P = gram_projection(gamma[:rows, : i + 1])
        Pt = gram_projection(gamma_t[:rows, : i + 1])
        Ui = U[:rows, :rows]
        out["nesting"] = max(out["nesting"], residual(Pt, Ui @ P @ Ui.conj().T))
    return out


def ofb_frame_change_check(
    sections: Sequence[HolomorphicPolynomial], n: int, phi00: HolomorphicPolynomial, points: Iterable
) -> float:
    """Frame of phi00 t_i against gamma phi with phi_ij = C(j, i) phi00^(j-i)."""
    sections = list(sections)[:n]
    gamma = ofb_frame(sections, n)
    scaled = [PolynomialSection.of(t * phi00) for t in sections]
    gamma_t = ofb_frame(scaled, n)
    phi = frame_change_matrix(phi00, n)
    worst = 0.0
    for point in points:
        lhs = gamma_t.evaluate(point)
        rhs = gamma.evaluate(point) @ phi.evaluate(point)
        worst = max(worst, residual(lhs, rhs))
    return worst

