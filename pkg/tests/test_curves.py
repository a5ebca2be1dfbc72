import numpy as np
import pytest

from holocurve import curves as cv
from holocurve.curves import CurveJets, ExtendedCurve
from holocurve.geometry import DerivPlan, all_plans
from holocurve.indexing import MultiIndex
from holocurve.model import Frame, HolomorphicPolynomial, bergman, hardy, section_from_kernel

P1 = np.array([0.3 + 0j])
P2 = np.array([0.2 + 0.1j, -0.15 + 0.05j])


def e0e0(dim):
    out = np.zeros((dim, dim))
    out[0, 0] = 1
    return out


@pytest.fixture(scope="module")
def hardy_curve(curves):
    return curves["hardy"]


# evaluation ------------------------------------------------------------------------------


def test_constant_orthonormal_frame_gives_constant_projection():
    F = Frame([HolomorphicPolynomial.constant(np.array([[1.0], [0.0], [0.0]])), HolomorphicPolynomial.constant(np.array([[0.0], [1.0], [0.0]]))])
    c = ExtendedCurve(F)
    jet = cv.curve_eval_jet(c, [0.4j], (2, 2))
    assert np.allclose(jet.value, np.diag([1, 1, 0]))
    assert np.abs(jet.coeffs[1:]).max() == 0 and np.abs(jet.coeffs[:, 1:]).max() == 0
    assert np.abs(cv.extended_connection(c, [0.4j], (2, 2)).coeffs).max() < 1e-15
    assert np.abs(cv.extended_curvature(c, [0.4j], (2, 2)).coeffs).max() < 1e-15


def test_value_at_origin(curves):
    for name in ("hardy", "hardy/bergman"):
        c = curves[name]
        assert np.allclose(cv.curve_eval_jet(c, [0.0], (1, 1)).value, e0e0(c.dim))


def test_jet_value_matches_direct_evaluation(curves):
    for name, c in curves.items():
        p = P1 if c.m == 1 else P2
        assert np.allclose(cv.curve_eval_jet(c, p, (1, 1)).value, c.evaluate(p), atol=1e-13), name


def test_rank_and_shape_validation():
    with pytest.raises(ValueError):
        ExtendedCurve(Frame([section_from_kernel(hardy(1, 3))]), Frame([section_from_kernel(hardy(1, 4))]))


# holomorphy identities --------------------------------------------------------------------------


def test_holomorphy_on_corpus(curves):
    for name, c in curves.items():
        p = P1 if c.m == 1 else P2
        assert cv.holomorphy_check(c, [p]) < 1e-9, name


def test_holomorphy_negative_controls(curves):
    c = curves["hardy/bergman-2"]
    assert cv.holomorphy_check(c, [P1], "transpose") > 1e-3
    assert cv.holomorphy_check(c, [P1], "conjugate") > 1e-3


def test_adjoint_is_the_curve_of_the_swapped_pair(curves):
    c = curves["hardy/bergman-2"]
    swapped = ExtendedCurve(c.G, c.F)
    assert np.allclose(c.evaluate(P1).conj().T, swapped.evaluate(P1), atol=1e-13)
    assert cv.holomorphy_check(swapped, [P1]) < 1e-9


# connection --------------------------------------------------------------------------------------


def test_connection_absorbs_projection(hardy_curve):
    jets = CurveJets(hardy_curve, P1, (2, 2))
    theta = jets.connection.value
    assert np.abs(theta @ jets.I.value - theta).max() < 1e-9


def test_connection_matches_classical(curves):
    for name in ("hardy", "hardy/bergman-2"):
        jets = CurveJets(curves[name], P1, (2, 2))
        lhs = jets.connection.value @ jets.F.value
        rhs = jets.F.value @ jets.geometry.connection.value
        assert np.abs(lhs - rhs).max() < 1e-9, name


# curvature ---------------------------------------------------------------------------------------


def test_extended_curvature_at_origin(hardy_curve):
    K = cv.extended_curvature(hardy_curve, [0.0], (1, 1)).value
    F = hardy_curve.F.evaluate([0.0])
    assert np.allclose(K @ F, F)
    assert np.trace(K) == pytest.approx(1.0, abs=1e-12)


def test_extended_curvature_constant_projection():
    c = ExtendedCurve(Frame([HolomorphicPolynomial.constant(np.array([[0.6], [0.8]]))]))
    assert np.abs(cv.extended_curvature(c, [0.1], (1, 1)).coeffs).max() < 1e-15


# covariant derivatives ---------------------------------------------------------------------------


def test_empty_plan_is_curvature(hardy_curve):
    jets = CurveJets(hardy_curve, P1, (2, 2))
    assert np.array_equal(jets.covariant_derivative(DerivPlan()).coeffs, jets.curvature.coeffs)


def test_hol_step_absorbs_projection(hardy_curve):
    K = cv.extended_covariant_derivative(hardy_curve, DerivPlan.parse("H1"), [0.0]).value
    I = hardy_curve.evaluate([0.0])
    assert np.abs(K @ I - K).max() < 1e-9


def test_covariant_plan_exceeding_dimension(hardy_curve):
    with pytest.raises(ValueError):
        CurveJets(hardy_curve, P1, (2, 2)).covariant_derivative(DerivPlan.parse("H2"))


def test_order_dependence_in_two_variables(curves):
    forms = cv.mixed_order_forms(curves["drury-arveson-2"], P2, 1, 2)
    assert forms["difference"] > 1e-6
    assert forms["antihol_first_closed_form"] < 1e-8
    assert forms["hol_first_closed_form"] < 1e-8


def test_one_variable_mixed_orders_coincide(curves):
    # in one variable the two mixed orders agree; a difference needs m >= 2 and rank >= 2
    for name in ("hardy/bergman", "hardy/bergman-2"):
        forms = cv.mixed_order_forms(curves[name], np.array([0.4 + 0j]), 1, 1)
        assert forms["difference"] < 1e-12, name
        assert forms["antihol_first_closed_form"] < 1e-8
        assert forms["hol_first_closed_form"] < 1e-8


def test_alternative_closed_form_reading_fails(curves):
    forms = cv.mixed_order_forms(curves["drury-arveson-2"], P2, 1, 2)
    assert forms["antihol_first_alt_reading"] > 1e-3


def test_classical_order_difference_closed_form(curves):
    out = cv.classical_order_difference(curves["drury-arveson-2"], P2, 1, 2)
    assert out["difference"] > 1e-6
    assert out["closed_form"] < 1e-12


# pair decomposition --------------------------------------------------------------------------------


def test_pair_decomposition_single_pair_is_trivial(hardy_curve):
    out = cv.pair_decomposition_check(hardy_curve, DerivPlan.parse("A1 H1"), P1)
    assert out == {"extended": 0.0, "classical": 0.0}


def test_pair_decomposition_multivariable(curves):
    out = cv.pair_decomposition_check(curves["drury-arveson"], DerivPlan.parse("A1 H1 H2"), P2)
    assert max(out.values()) < 1e-8


def test_pair_decomposition_one_variable_long(hardy_curve):
    out = cv.pair_decomposition_check(hardy_curve, DerivPlan.parse("A1 H1 H1"), P1)
    assert max(out.values()) < 1e-8


def test_pair_decomposition_sequential_route_differs_on_multi_pair_plans(curves):
    # applying steps one after another is not additive over pairs; the evaluator is
    jets = CurveJets(curves["drury-arveson-2"], P2, (3, 2))
    plan = DerivPlan.parse("A1 H1 H2")
    parts = sum(jets.sequential(sub).value for _, sub in plan.elementary_pairs())
    assert np.abs(jets.sequential(plan).value - parts).max() > 1e-3
    assert np.abs(jets.covariant_derivative(plan).value - parts).max() < 1e-10


# intertwining -------------------------------------------------------------------------------------


def test_intertwining_examples(curves):
    assert max(cv.intertwining_residual(curves["hardy"], DerivPlan(), [0.0]).values()) < 1e-10
    assert max(cv.intertwining_residual(curves["hardy/bergman"], DerivPlan.parse("H1 A1"), P1).values()) < 1e-8
    assert max(cv.intertwining_residual(curves["drury-arveson"], DerivPlan.parse("A2 H1"), P2).values()) < 1e-8


def test_intertwining_all_short_plans_rank_two(curves):
    c = curves["hardy/bergman-2"]
    jets = CurveJets(c, P1, (4, 4))
    for plan in all_plans(1, 3):
        assert max(cv.intertwining_residual(c, plan, P1, jets).values()) < 1e-8, str(plan)


# Leibniz expansions --------------------------------------------------------------------------------


def test_leibniz_zero_index(hardy_curve):
    out = cv.leibniz_expansion_check(hardy_curve, P1)
    assert out["item1"] < 1e-15 and out["item3"] < 1e-15
    assert out["item2"] == 0.0 and out["item4"] == 0.0


def test_leibniz_examples(curves):
    assert max(cv.leibniz_expansion_check(curves["hardy"], P1, (2,), (0,)).values()) < 1e-9
    assert max(cv.leibniz_expansion_check(curves["drury-arveson"], P2, (0, 0), (1, 1)).values()) < 1e-9
    assert max(cv.leibniz_expansion_check(curves["drury-arveson/hardy-2"], P2, (1, 1), (2, 0)).values()) < 1e-9


def test_leibniz_literal_index_set_fails_in_two_variables(curves):
    out = cv.leibniz_expansion_check(curves["drury-arveson-2"], P2, (1, 1), (1, 1), literal=True)
    assert out["item1"] < 1e-9 and out["item3"] < 1e-9
    assert out["item2"] > 1e-2 and out["item4"] > 1e-2


def test_leibniz_literal_index_set_agrees_in_one_variable(curves):
    out = cv.leibniz_expansion_check(curves["hardy/bergman-2"], P1, (3,), (2,), literal=True)
    assert max(out.values()) < 1e-9


# monomial expansions -------------------------------------------------------------------------------


def test_monomial_first_mixed_order():
    m = 1
    e = MultiIndex.unit(m, 0)
    terms = cv.monomial_expansion(e, e)
    assert terms == {(("h", e), ("a", e)): 1, (("a", e), ("h", e)): -1}


def test_monomial_first_mixed_order_numerically(curves):
    jets = CurveJets(curves["hardy/bergman-2"], P1, (2, 2))
    D, Db = jets.D((1,)), jets.Dbar((1,))
    assert np.abs(jets.I.extract((1,), (1,)) - (D @ Db - Db @ D)).max() < 1e-9


def test_monomial_pure_antiholomorphic():
    J = MultiIndex((2, 1))
    terms = cv.monomial_expansion(MultiIndex((0, 0)), J)
    assert terms == {(("a", J),): 1}


def test_monomial_examples(curves):
    out = cv.monomial_expansion_check(curves["hardy"], (2,), (1,), P1)
    assert out["residual"] < 1e-8 and out["form_violations"] == 0
    out = cv.monomial_expansion_check(curves["drury-arveson-2"], (1, 1), (0, 1), P2)
    assert out["residual"] < 1e-8 and out["form_violations"] == 0


def test_word_form():
    I, J = MultiIndex((1,)), MultiIndex((1,))
    assert cv.word_form_ok((("h", I), ("a", J)), I, J)
    assert not cv.word_form_ok((("h", I), ("h", I)), I, J)


def test_curvature_monomials_bookkeeping(curves):
    c = curves["drury-arveson-2"]
    for plan in ("A1 H1", "H2 A1 H2", "A2 A2 H1"):
        out = cv.curvature_monomial_check(c, DerivPlan.parse(plan), P2)
        assert out["residual"] < 1e-8, plan
        assert out["form_violations"] == 0, plan


def test_curvature_monomials_need_single_pair(curves):
    with pytest.raises(ValueError):
        cv.curvature_monomial_check(curves["drury-arveson-2"], DerivPlan.parse("H1 H2 A1"), P2)


def test_curvature_monomials_empty_plan():
    m = 1
    e = MultiIndex.unit(m, 0)
    assert cv.curvature_monomials(DerivPlan(), m) == {(("a", e), ("h", e)): 1}


# bergman vs hardy sanity ---------------------------------------------------------------------------------


def test_non_self_adjoint_curve_is_idempotent_not_projection():
    c = ExtendedCurve(Frame([section_from_kernel(hardy(1, 30))]), Frame([section_from_kernel(bergman(30))]))
    I = c.evaluate([0.4])
    assert np.abs(I @ I - I).max() < 1e-12
    assert np.abs(I - I.conj().T).max() > 1e-3
