"""Residual norms shared by every check."""

from __future__ import annotations

import numpy as np


def max_entry(x) -> float:
    x = np.asarray(x)
    return float(np.max(np.abs(x))) if x.size else 0.0


def residual(lhs, rhs=0.0, floor: float = 1.0) -> float:
    """Max-entry |lhs - rhs| scaled by the larger operand's max entry.

    The scale never drops below ``floor`` so that vanishing operands give an
    absolute residual instead of amplified rounding noise.
    """
    lhs = np.asarray(lhs, dtype=complex)
    rhs = np.asarray(rhs, dtype=complex)
    scale = max(max_entry(lhs), max_entry(rhs), floor)
    return max_entry(lhs - rhs) / scale


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary via QR with phase correction."""
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))
