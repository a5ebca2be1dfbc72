"""Named curves, models and sample points shared by the CLI and the tests."""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .curves import CurveJets, ExtendedCurve
from .indexing import enumerate_upto
from .jets import fd_oracle
from .model import (
    Fb2Model,
    Frame,
    bergman,
    derivative_frame,
    drury_arveson,
    explicit,
    hardy,
    section_from_kernel,
)
from .numerics import residual

ONE_VARIABLE_TRUNCATION = 60
TWO_VARIABLE_TRUNCATION = 8


def _frame(spec, rank: int) -> Frame:
    section = section_from_kernel(spec)
    return Frame([section]) if rank == 1 else derivative_frame(section, rank)


@lru_cache(maxsize=None)
def corpus_curves() -> dict[str, ExtendedCurve]:
    """Rank 1 and 2 curves in one and two variables, self-adjoint or not."""
    N1, N2 = ONE_VARIABLE_TRUNCATION, TWO_VARIABLE_TRUNCATION
    h, b = hardy(1, N1), bergman(N1)
    da, hp = drury_arveson(2, N2), hardy(2, N2)
    curves = {
        "hardy": ExtendedCurve(_frame(h, 1), name="hardy"),
        "bergman": ExtendedCurve(_frame(b, 1), name="bergman"),
        "hardy/bergman": ExtendedCurve(_frame(h, 1), _frame(b, 1), name="hardy/bergman"),
        "hardy/bergman-2": ExtendedCurve(_frame(h, 2), _frame(b, 2), name="hardy/bergman-2"),
        "drury-arveson": ExtendedCurve(_frame(da, 1), name="drury-arveson"),
        "drury-arveson-2": ExtendedCurve(_frame(da, 2), name="drury-arveson-2"),
        "drury-arveson/hardy-2": ExtendedCurve(_frame(da, 2), _frame(hp, 2), name="drury-arveson/hardy-2"),
    }
    return curves


def corpus_points(m: int) -> list[np.ndarray]:
    if m == 1:
        return [np.array([0.3 + 0j]), np.array([-0.2 + 0.35j])]
    if m == 2:
        return [np.array([0.2 + 0.1j, -0.15 + 0.05j]), np.array([-0.1 + 0j, 0.25j])]
    raise ValueError(f"no corpus points for m={m}")


def shifted_bergman_ratio(truncation: int = ONE_VARIABLE_TRUNCATION):
    """Weights b_j = sqrt((j + 2)/(j + 1)), a bounded perturbation of hardy."""
    return explicit([np.sqrt((j + 2) / (j + 1)) for j in range(truncation + 1)])


def corpus_fb2_models(truncation: int = ONE_VARIABLE_TRUNCATION) -> dict[str, Fb2Model]:
    h, b = hardy(1, truncation), bergman(truncation)
    return {
        "hardy/hardy": Fb2Model(h, h, 1.0),
        "bergman/hardy": Fb2Model(b, h, 1.0),
        "hardy/bergman": Fb2Model(h, b, 0.7),
        "hardy/hardy-2s": Fb2Model(h, h, 2.0),
    }


def fd_cross_check(curve: ExtendedCurve, point, order: int = 3, step: float = 1e-4) -> dict[str, float]:
    """Jet coefficients of I and H = G^* F against central differences.

    Covers every (I, J) with |I| + |J| <= order. Residuals are relative to
    the larger operand (floored at one).
    """
    jets = CurveJets(curve, point, (order, order))
    m = curve.m

    def gram_value(p):
        return curve.gram_value(p)

    worst = {"curve": 0.0, "gram": 0.0}
    for I in enumerate_upto(m, order):
        for J in enumerate_upto(m, order - I.degree):
            worst["curve"] = max(worst["curve"], residual(jets.I.extract(I, J), fd_oracle(curve.evaluate, point, I, J, step)))
            worst["gram"] = max(worst["gram"], residual(jets.H.extract(I, J), fd_oracle(gram_value, point, I, J, step)))
    return worst
