"""Acceptance criteria 1-10, each at its stated tolerance.

A PASS/FAIL line per criterion is printed in the terminal summary.
"""

import time

import numpy as np
import pytest

from holocurve import classify, curves as cv, flags
from holocurve.cli import main
from holocurve.classify import disk_samples
from holocurve.corpus import fd_cross_check, shifted_bergman_ratio
from holocurve.curves import CurveJets
from holocurve.geometry import DerivPlan, all_plans, plans_by_caps
from holocurve.indexing import enumerate_upto
from holocurve.jets import fd_oracle
from holocurve.model import Frame, HolomorphicPolynomial, bergman, hardy, ofb_sections, section_from_kernel
from holocurve.numerics import random_unitary, residual

ORIGIN = {1: np.array([0j]), 2: np.array([0j, 0j])}


def _points(curve, points):
    return [ORIGIN[curve.m]] + points(curve.m)


def test_criterion_1_curvature_oracles():
    start = time.perf_counter()
    samples = disk_samples(radius=0.6, count=25)
    assert len(samples) == 25 and max(abs(p[0]) for p in samples) <= 0.6 + 1e-15
    worst = 0.0
    for spec, scale in ((hardy(1, 60), 1.0), (bergman(60), 2.0)):
        frame = Frame([section_from_kernel(spec)])
        for p in samples:
            K = classify.curvature_value(frame, p)[0, 0]
            exact = -scale / (1 - abs(p[0]) ** 2) ** 2
            worst = max(worst, abs(K - exact))
    elapsed = time.perf_counter() - start
    assert worst < 1e-8
    assert elapsed < 5.0


def test_criterion_2_holomorphy_identities(curves, points):
    ranks, dims = set(), set()
    for name, c in curves.items():
        ranks.add(c.rank)
        dims.add(c.m)
        assert cv.holomorphy_check(c, _points(c, points)) < 1e-9, name
    assert ranks == {1, 2} and dims == {1, 2}


def test_criterion_3_intertwining_and_trace(curves, points):
    worst = {"intertwining": 0.0, "trace": 0.0}
    count = 0
    for name, c in curves.items():
        pts = _points(c, points) if c.m == 1 else [points(2)[0]]
        for p in pts:
            for caps, plans in plans_by_caps(c.m, 4).items():
                jets = CurveJets(c, p, caps)
                for plan in plans:
                    for key, value in cv.intertwining_residual(c, plan, p, jets).items():
                        worst[key] = max(worst[key], value)
                    count += 1
    assert count > 1000
    assert worst["intertwining"] < 1e-8
    assert worst["trace"] < 1e-8


def test_criterion_4_leibniz_and_monomials(curves, points):
    worst_leibniz = worst_monomial = 0.0
    for name, c in curves.items():
        p = points(c.m)[0]
        for I in enumerate_upto(c.m, 3):
            for J in enumerate_upto(c.m, 3 - I.degree):
                items = cv.leibniz_expansion_check(c, p, I, J)
                worst_leibniz = max(worst_leibniz, *items.values())
                mono = cv.monomial_expansion_check(c, I, J, p)
                worst_monomial = max(worst_monomial, mono["residual"])
                assert mono["form_violations"] == 0, (name, I, J)
    assert worst_leibniz < 1e-8
    assert worst_monomial < 1e-8


def test_criterion_5_order_witness(curves, points):
    largest = 0.0
    for name, c in curves.items():
        for p in points(c.m):
            for hol in range(1, c.m + 1):
                for antihol in range(1, c.m + 1):
                    forms = cv.mixed_order_forms(c, p, hol, antihol)
                    assert forms["antihol_first_closed_form"] < 1e-8, name
                    assert forms["hol_first_closed_form"] < 1e-8, name
                    largest = max(largest, forms["difference"])
    assert largest > 1e-6


def test_criterion_6_fb2_decomposition(fb2_models):
    pts = [0.0, 0.3 + 0.2j, -0.5, 0.1 - 0.4j]
    worst = {"reassembly": 0.0, "relation": 0.0, "action": 0.0}
    for name, model in fb2_models.items():
        for lam in pts:
            dec = flags.fb2_projection(model, lam)
            worst["reassembly"] = max(worst["reassembly"], dec.residuals()["reassembly"])
            rel = flags.fb2_theta_relation(model, lam)
            worst["relation"] = max(worst["relation"], abs(rel["R_minus"]) / rel["scale"])
            worst["action"] = max(worst["action"], *flags.fb2_jet_action_check(model, lam).values())
    assert abs(flags.fb2_projection(fb2_models["hardy/hardy"], 0.0).theta - 0.5) < 1e-12
    assert worst["reassembly"] < 1e-9
    assert worst["relation"] < 1e-9
    assert worst["action"] < 1e-10


def test_criterion_7_classification_verdicts(fb2_models):
    h, b = hardy(1, 60), bergman(60)
    unitary = classify.b1_unitary_equivalence(Frame([section_from_kernel(h)]), Frame([section_from_kernel(b)]))
    assert unitary.verdict == classify.NOT_EQUIVALENT
    assert unitary.witness == "K(0): -1 vs -2"

    similar = classify.weighted_shift_similarity(h, b)
    assert similar.verdict == classify.NOT_EQUIVALENT
    assert similar.details["trend"] == "monotone"
    assert similar.details["ratio_max"] == pytest.approx(np.sqrt(61))

    shifted = classify.weighted_shift_similarity(h, shifted_bergman_ratio())
    assert shifted.verdict == classify.EQUIVALENT
    assert 1.0 <= shifted.details["ratio_min"] and shifted.details["ratio_max"] <= np.sqrt(2) + 1e-15

    fb2 = classify.fb2_unitary_equivalence(fb2_models["hardy/hardy"], fb2_models["hardy/hardy-2s"])
    assert fb2.verdict == classify.NOT_EQUIVALENT
    assert fb2.witness == "||St1||^2/||t1||^2(0): 1 vs 4"


def test_criterion_8_finite_difference_cross_check(curves, points, fb2_models, capsys):
    for name, c in curves.items():
        worst = fd_cross_check(c, points(c.m)[0], order=3, step=1e-4)
        assert worst["curve"] < 1e-5, name
        assert worst["gram"] < 1e-5, name
    for name, model in fb2_models.items():
        t0 = model.t0()
        for k in range(1, 4):
            exact = t0.derivative(0, k).evaluate([0.3])
            assert residual(exact, fd_oracle(t0.evaluate, [0.3], (k,), (0,), 1e-4)) < 1e-5, name
    code = main(["verify", "--scenario", "hardy-basics", "--fd-check", "--task", "curvature"])
    out = capsys.readouterr().out
    assert code == 0
    assert "fd-check" in out


def test_criterion_9_unitary_and_similarity_invariance(curves, points, rng):
    worst_conj = worst_inverse = 0.0
    for name, c in curves.items():
        U = random_unitary(c.dim, rng)
        p = points(c.m)[0]
        for plan in all_plans(c.m, 2):
            worst_conj = max(worst_conj, classify.unitary_invariance_residual(c, U, plan, p))
        w = classify.classical_similarity_witness(c, c.conjugated(U), U, DerivPlan(), p)
        worst_inverse = max(worst_inverse, w["inverse"])
    assert worst_conj < 1e-8
    assert worst_inverse < 1e-9


def test_criterion_10_flag_diagram_and_frame_change(rng):
    spec = hardy(1, 12)
    worst = {"diagram": 0.0, "conjugation": 0.0, "nesting": 0.0}
    for n in (1, 2, 3):
        sections = ofb_sections(spec, n)
        unitaries = [random_unitary(spec.dim, rng) for _ in range(n)]
        for lam in (0.0, 0.2, -0.3 + 0.1j):
            for key, value in flags.flag_diagram_check(sections, n, lam, unitaries).items():
                worst[key] = max(worst[key], value)
    assert max(worst.values()) < 1e-10
    phis = {
        "constant": HolomorphicPolynomial.scalar([2.0]),
        "1+lambda": HolomorphicPolynomial.scalar([1.0, 1.0]),
        "1+lambda^2": HolomorphicPolynomial.scalar([1.0, 0.0, 1.0]),
    }
    pts = [np.array([0.2]), np.array([-0.3 + 0.1j]), np.array([0.45j])]
    for n in (1, 2, 3):
        for name, phi in phis.items():
            assert flags.ofb_frame_change_check(ofb_sections(spec, n), n, phi, pts) < 1e-9, (n, name)
