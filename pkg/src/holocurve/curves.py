"""Extended holomorphic curves I = F (G^* F)^-1 G^* and their curvature."""

from __future__ import annotations

from collections import defaultdict
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .geometry import AntiHol, ClassicalGeometry, DerivPlan, Hol, apply_steps, evaluate_plan, required_caps
from .indexing import MultiIndex, enumerate_upto, multinomial, sub_indices
from .jets import DEFAULT_MAX_COND, WirtingerJet, jet_invert
from .model import Frame
from .numerics import residual


class ExtendedCurve:
    """Idempotent-valued curve built from a frame pair (F, G)."""

    def __init__(self, F: Frame, G: Frame | None = None, name: str = ""):
        G = F if G is None else G
        if F.n != G.n or F.dim != G.dim or F.m != G.m:
            raise ValueError("F and G must share rank, ambient dimension and variables")
        self.F = F
        self.G = G
        self.name = name

    @property
    def m(self) -> int:
        return self.F.m

    @property
    def rank(self) -> int:
        return self.F.n

    @property
    def dim(self) -> int:
        return self.F.dim

    def gram_value(self, point) -> np.ndarray:
        return self.G.evaluate(point).conj().T @ self.F.evaluate(point)

    def evaluate(self, point) -> np.ndarray:
        """I(point) computed directly from the frames (no jets)."""
        F = self.F.evaluate(point)
        G = self.G.evaluate(point)
        return F @ np.linalg.solve(G.conj().T @ F, G.conj().T)

    def conjugated(self, unitary) -> "ExtendedCurve":
        """Curve U I U^* realized by the frames (U F, U G)."""
        return ExtendedCurve(self.F.conjugated(unitary), self.G.conjugated(unitary), self.name)

    def jets(self, base, caps, max_cond: float = DEFAULT_MAX_COND) -> "CurveJets":
        return CurveJets(self, base, caps, max_cond)


class CurveJets:
    """All jets of one curve at one base point, sharing a single H^-1."""

    def __init__(self, curve: ExtendedCurve, base, caps, max_cond: float = DEFAULT_MAX_COND):
        base = np.atleast_1d(np.asarray(base, dtype=complex))
        p, q = caps
        self.curve = curve
        self.base = base
        self.caps = (p, q)
        self.F = curve.F.jet(base, (p, q))
        self.G_star = curve.G.jet(base, (q, p)).adjoint()
        self.H = self.G_star @ self.F
        self.geometry = ClassicalGeometry(self.H, max_cond)
        self.H_inv = self.geometry.H_inv
        self.W = self.H_inv @ self.G_star
        self.I = self.F @ self.W
        self._plan_cache: dict = {}

    @property
    def m(self) -> int:
        return self.base.shape[0]

    @cached_property
    def curvature(self) -> WirtingerJet:
        return self.I.dbar_sum() @ self.I.d_sum()

    @cached_property
    def connection(self) -> WirtingerJet:
        return self.F.d_sum() @ self.W - self.I.d_sum()

    def hol_step(self, coord: int, X: WirtingerJet) -> WirtingerJet:
        return self.I @ X.d(coord)

    def antihol_step(self, coord: int, X: WirtingerJet) -> WirtingerJet:
        return X.dbar(coord) @ self.I

    def covariant_derivative(self, plan: DerivPlan) -> WirtingerJet:
        plan.check(self.m)
        return evaluate_plan(plan, self.curvature, self.hol_step, self.antihol_step, self._plan_cache)

    def sequential(self, plan: DerivPlan) -> WirtingerJet:
        plan.check(self.m)
        return apply_steps(plan, self.curvature, self.hol_step, self.antihol_step)

    def classical(self, plan: DerivPlan) -> WirtingerJet:
        return self.geometry.covariant_derivative(plan)

    def D(self, I: Sequence[int]) -> np.ndarray:
        return self.I.extract(I, (0,) * self.m)

    def Dbar(self, J: Sequence[int]) -> np.ndarray:
        return self.I.extract((0,) * self.m, J)


def curve_eval_jet(c: ExtendedCurve, base, caps) -> WirtingerJet:
    return CurveJets(c, base, caps).I


def extended_connection(c: ExtendedCurve, base, caps) -> WirtingerJet:
    return CurveJets(c, base, caps).connection


def extended_curvature(c: ExtendedCurve, base, caps) -> WirtingerJet:
    return CurveJets(c, base, caps).curvature


def extended_covariant_derivative(c: ExtendedCurve, plan: DerivPlan, base, caps=None) -> WirtingerJet:
    caps = required_caps(plan) if caps is None else caps
    return CurveJets(c, base, caps).covariant_derivative(plan)


# identity checks -------------------------------------------------------------

CORRUPTIONS = {
    None: lambda jet: jet,
    "transpose": lambda jet: jet.transpose(),
    # entrywise conjugate; the adjoint would not do, it is the curve of (G, F)
    "conjugate": lambda jet: jet.adjoint().transpose(),
}


def holomorphy_residuals(c: ExtendedCurve, point, corruption: str | None = None) -> dict[str, float]:
    """Residuals of the four Cauchy-Riemann-type identities, worst coordinate.

    d_i I . I = d_i I,  I . d_i I = 0,  I . dbar_j I = dbar_j I,  dbar_j I . I = 0,
    plus idempotency of the value.
    """
    jet = CORRUPTIONS[corruption](CurveJets(c, point, (1, 1)).I)
    value = jet.value
    out = {"d.I=d": 0.0, "I.d=0": 0.0, "I.dbar=dbar": 0.0, "dbar.I=0": 0.0}
    for coord in range(c.m):
        d = jet.d(coord).value
        db = jet.dbar(coord).value
        scale = max(1.0, np.abs(d).max(), np.abs(db).max(), np.abs(value).max())
        out["d.I=d"] = max(out["d.I=d"], residual(d @ value, d))
        out["I.d=0"] = max(out["I.d=0"], np.abs(value @ d).max() / scale)
        out["I.dbar=dbar"] = max(out["I.dbar=dbar"], residual(value @ db, db))
        out["dbar.I=0"] = max(out["dbar.I=0"], np.abs(db @ value).max() / scale)
    out["idempotent"] = residual(value @ value, value)
    return out


def holomorphy_check(c: ExtendedCurve, points: Iterable, corruption: str | None = None) -> float:
    """Worst residual of the holomorphy identities over ``points``."""
    return max(max(holomorphy_residuals(c, p, corruption).values()) for p in points)


def intertwining_residual(c: ExtendedCurve, plan: DerivPlan, base, jets: CurveJets | None = None) -> dict[str, float]:
    """Residuals of K_plan(I) F + F K_plan = 0 and of tr K_plan(I) = -tr K_plan."""
    jets = jets or CurveJets(c, base, required_caps(plan))
    ext = jets.covariant_derivative(plan).value
    cls = jets.classical(plan).value
    F = jets.F.value
    return {
        "intertwining": residual(ext @ F, -F @ cls),
        "trace": residual(np.trace(ext), -np.trace(cls)),
    }


def pair_decomposition_check(c: ExtendedCurve, plan: DerivPlan, base, jets: CurveJets | None = None) -> dict[str, float]:
    """Plan value versus the sum of its elementary-pair sub-plans, both sides.

    The sub-plans are evaluated by applying their steps one after another, a
    different route from the coordinate-splitting evaluator.
    """
    jets = jets or CurveJets(c, base, required_caps(plan))
    out = {}
    for label, full, seq in (
        ("extended", jets.covariant_derivative, jets.sequential),
        ("classical", jets.classical, jets.geometry.sequential),
    ):
        parts = [seq(sub).value for _, sub in plan.elementary_pairs()]
        out[label] = residual(full(plan).value, sum(parts))
    return out


# Leibniz expansions ------------------------------------------------------------


def _strict_between(index: MultiIndex) -> list[MultiIndex]:
    zero = MultiIndex.zero(len(index))
    return [K for K in sub_indices(index) if K != zero and K != index]


def _literal_between(index: MultiIndex) -> list[MultiIndex]:
    # union over p of e_p <= K <= index - e_p, repeats kept
    m = len(index)
    out = []
    for p in range(m):
        e = MultiIndex.unit(m, p)
        out.extend(K for K in sub_indices(index) if e.leq(K) and (K + e).leq(index))
    return out


def leibniz_expansion_check(c: ExtendedCurve, base, I=None, J=None, literal: bool = False) -> dict[str, float]:
    """Direct jet derivatives of I versus the four product expansions.

    (1) D^I I = sum C(I,I1) D^I1 F . D^(I-I1) H^-1 . G^*
    (3) Dbar^J I = sum C(J,J1) F . Dbar^J1 H^-1 . Dbar^(J-J1) G^*
    (2) Dbar_j D^I I = D^I I Dbar_j I - Dbar_j I D^I I
                       - sum_{0<I1<I} C(I,I1) D^(I-I1) I Dbar_j I D^I1 I
    (4) the mirror of (2) with the roles of D and Dbar swapped.

    ``literal=True`` replaces the inner index set of (2) and (4) by
    sum_p {e_p <= I1 <= I - e_p}, which agrees with the above only for m = 1.
    """
    base = np.atleast_1d(np.asarray(base, dtype=complex))
    m = base.shape[0]
    I = MultiIndex(I if I is not None else (0,) * m)
    J = MultiIndex(J if J is not None else (0,) * m)
    zero = MultiIndex.zero(m)
    p, q = I.degree + 1, J.degree + 1
    jets = CurveJets(c, base, (p, q))
    between = _literal_between if literal else _strict_between
    F, Hi, Gs = jets.F, jets.H_inv, jets.G_star

    def D(K):
        return jets.I.extract(K, zero)

    def Db(L):
        return jets.I.extract(zero, L)

    out = {}
    expansion = sum(
        multinomial(I, I1) * F.extract(I1, zero) @ Hi.extract(I - I1, zero) @ Gs.value for I1 in sub_indices(I)
    )
    out["item1"] = residual(D(I), expansion)
    expansion = sum(
        multinomial(J, J1) * F.value @ Hi.extract(zero, J1) @ Gs.extract(zero, J - J1) for J1 in sub_indices(J)
    )
    out["item3"] = residual(Db(J), expansion)

    item2 = item4 = 0.0
    for j in range(m):
        e = MultiIndex.unit(m, j)
        if I != zero:
            direct = jets.I.extract(I, e)
            rhs = D(I) @ Db(e) - Db(e) @ D(I)
            for I1 in between(I):
                rhs = rhs - multinomial(I, I1) * D(I - I1) @ Db(e) @ D(I1)
            item2 = max(item2, residual(direct, rhs))
        if J != zero:
            direct = jets.I.extract(e, J)
            rhs = D(e) @ Db(J) - Db(J) @ D(e)
            for J1 in between(J):
                rhs = rhs - multinomial(J, J1) * Db(J - J1) @ D(e) @ Db(J1)
            item4 = max(item4, residual(direct, rhs))
    out["item2"] = item2
    out["item4"] = item4
    return out


# monomial expansions -------------------------------------------------------------

# A word is a tuple of factors ("h", K) = D^K I or ("a", L) = Dbar^L I; ("h", 0) is I.
Word = tuple


def _is_identity(factor) -> bool:
    return factor[0] == "h" and not any(factor[1])


def _simplify(word: Word) -> Word | None:
    """Normal form of a word, or None when it vanishes identically.

    Rules, all consequences of the holomorphy identities:
    D^K I . I = D^K I and I . Dbar^L I = Dbar^L I absorb bare factors;
    I . D_l I = 0 and D^A I . D^B I = 0 for A, B != 0 (induction on B);
    Dbar^A I . Dbar^L I = 0 and Dbar^A I . I = 0 for A != 0.
    """
    factors = list(word)
    changed = True
    while changed:
        changed = False
        for k in range(len(factors) - 1):
            left, right = factors[k], factors[k + 1]
            if left[0] == "a" and (right[0] == "a" or _is_identity(right)):
                return None
            if left[0] == "h" and right[0] == "h" and not _is_identity(right):
                if not _is_identity(left) or sum(right[1]) == 1:
                    return None
            if _is_identity(right) and left[0] == "h":
                del factors[k + 1]
                changed = True
                break
            if _is_identity(left) and right[0] == "a":
                del factors[k]
                changed = True
                break
    return tuple(factors)


def _add(terms: dict, word: Word, coeff: int) -> None:
    word = _simplify(word)
    if word is None or coeff == 0:
        return
    terms[word] += coeff
    if terms[word] == 0:
        del terms[word]


def _d_factor(factor, coord: int, m: int, holomorphic: bool) -> list[tuple[Word, int]]:
    """Derivative of one factor as a signed sum of words."""
    e = MultiIndex.unit(m, coord)
    kind, index = factor
    same, other = ("h", "a") if holomorphic else ("a", "h")
    if kind == same or not any(index):
        return [(((same, index + e) if kind == same else (same, e),), 1)]
    # mixed derivative of a pure factor, expanded by the Leibniz identities
    out = [(((same, e), (other, index)), 1), (((other, index), (same, e)), -1)]
    for sub in _strict_between(index):
        out.append((((other, index - sub), (same, e), (other, sub)), -multinomial(index, sub)))
    return out


def _differentiate(terms: dict, coord: int, m: int, holomorphic: bool) -> dict:
    out: dict = defaultdict(int)
    for word, coeff in terms.items():
        for pos, factor in enumerate(word):
            for replacement, sign in _d_factor(factor, coord, m, holomorphic):
                _add(out, word[:pos] + replacement + word[pos + 1 :], coeff * sign)
    return out


def monomial_expansion(I: Sequence[int], J: Sequence[int]) -> dict[Word, int]:
    """Signed monomials in D^K I and Dbar^L I summing to D^I Dbar^J I."""
    m = len(I)
    terms: dict = defaultdict(int)
    terms[(("h", MultiIndex.zero(m)),)] = 1
    for coord, count in enumerate(J):
        for _ in range(count):
            terms = _differentiate(terms, coord, m, holomorphic=False)
    for coord, count in enumerate(I):
        for _ in range(count):
            terms = _differentiate(terms, coord, m, holomorphic=True)
    return dict(terms)


def _evaluate_words(terms: dict, jets: CurveJets) -> np.ndarray:
    zero = MultiIndex.zero(jets.m)
    total = np.zeros((jets.curve.dim,) * 2, dtype=complex)
    for word, coeff in terms.items():
        value = np.eye(jets.curve.dim, dtype=complex)
        for kind, index in word:
            value = value @ (jets.I.extract(index, zero) if kind == "h" else jets.I.extract(zero, index))
        total += coeff * value
    return total


def word_form_ok(word: Word, I: Sequence[int], J: Sequence[int]) -> bool:
    """Alternating D/Dbar factors whose indices sum to (I, J)."""
    hol = sum((np.array(idx) for kind, idx in word if kind == "h"), np.zeros(len(I), dtype=int))
    anti = sum((np.array(idx) for kind, idx in word if kind == "a"), np.zeros(len(J), dtype=int))
    kinds = [kind for kind, _ in word]
    alternating = all(a != b for a, b in zip(kinds, kinds[1:]))
    return alternating and tuple(hol) == tuple(I) and tuple(anti) == tuple(J)


def monomial_expansion_check(c: ExtendedCurve, I, J, base) -> dict[str, float]:
    """Direct D^I Dbar^J I versus the generated monomial sum."""
    I, J = MultiIndex(I), MultiIndex(J)
    terms = monomial_expansion(I, J)
    jets = CurveJets(c, base, (I.degree + 1, J.degree + 1))
    direct = jets.I.extract(I, J)
    return {
        "residual": residual(direct, _evaluate_words(terms, jets)),
        "terms": float(len(terms)),
        "form_violations": float(sum(not word_form_ok(w, I, J) for w in terms)),
    }


def curvature_monomials(plan: DerivPlan, m: int) -> dict[Word, int]:
    """Monomial expansion of the covariant derivative along a single-pair plan.

    Starts from K(I) = sum_{k,l} Dbar_k I D_l I and applies the elementary
    steps Hol(l): X -> I d_l X and AntiHol(k): X -> (dbar_k X) I.
    """
    terms: dict = defaultdict(int)
    for k in range(m):
        for l in range(m):
            _add(terms, (("a", MultiIndex.unit(m, k)), ("h", MultiIndex.unit(m, l))), 1)
    ident = ("h", MultiIndex.zero(m))
    for step in plan.steps:
        holomorphic = isinstance(step, Hol)
        terms = _differentiate(terms, step.coord - 1, m, holomorphic)
        wrapped: dict = defaultdict(int)
        for word, coeff in terms.items():
            _add(wrapped, (ident,) + word if holomorphic else word + (ident,), coeff)
        terms = wrapped
    return dict(terms)


def curvature_monomial_check(c: ExtendedCurve, plan: DerivPlan, base) -> dict[str, float]:
    """Generated monomials of K_plan(I) versus the evaluator, with bookkeeping.

    Each monomial should be a product of (Dbar^Jr I)(D^Ir I) pairs with
    sum |I_r| = |I| + 1 and sum |J_r| = |J| + 1.
    """
    if len(plan.elementary_pairs()) != 1:
        raise ValueError("monomial bookkeeping is generated for single-pair plans")
    m = c.m
    terms = curvature_monomials(plan, m)
    jets = CurveJets(c, base, required_caps(plan))
    value = jets.covariant_derivative(plan).value
    violations = 0
    for word in terms:
        kinds = [kind for kind, _ in word]
        paired = len(kinds) % 2 == 0 and all(k == ("a" if i % 2 == 0 else "h") for i, k in enumerate(kinds))
        hol = sum(sum(idx) for kind, idx in word if kind == "h")
        anti = sum(sum(idx) for kind, idx in word if kind == "a")
        if not (paired and hol == plan.n_hol + 1 and anti == plan.n_antihol + 1):
            violations += 1
    return {
        "residual": residual(value, _evaluate_words(terms, jets)),
        "terms": float(len(terms)),
        "form_violations": float(violations),
    }


# order dependence ----------------------------------------------------------------


def mixed_order_forms(c: ExtendedCurve, base, hol: int, antihol: int) -> dict[str, float]:
    """Both mixed second-order covariant derivatives against closed forms.

    AntiHol(k) then Hol(l):
        dbar_k dbar I d_l d I - dbar I d_l I dbar_k I d I - dbar_k I d_l I dbar I d I
    Hol(l) then AntiHol(k):
        dbar_k dbar I d_l d I - dbar I d_l I dbar_k I d I - dbar I d I dbar_k I d_l I
    Coordinates are 1-based.
    """
    jets = CurveJets(c, base, (2, 2))
    l, k = hol - 1, antihol - 1
    Ij = jets.I
    d = Ij.d_sum().value
    db = Ij.dbar_sum().value
    dl = Ij.d(l).value
    dbk = Ij.dbar(k).value
    dbk_db = Ij.dbar(k).dbar_sum().value
    dl_d = Ij.d(l).d_sum().value
    dbk_d = Ij.dbar(k).d_sum().value
    anti_first = jets.covariant_derivative(DerivPlan((AntiHol(antihol), Hol(hol)))).value
    hol_first = jets.covariant_derivative(DerivPlan((Hol(hol), AntiHol(antihol)))).value
    closed_anti_first = dbk_db @ dl_d - db @ dl @ dbk @ d - dbk @ dl @ db @ d
    closed_hol_first = dbk_db @ dl_d - db @ dl @ dbk @ d - db @ d @ dbk @ dl
    # the same first factor written with a holomorphic inner derivative
    alt_anti_first = dbk_d @ dl_d - db @ dl @ dbk @ d - dbk @ dl @ db @ d
    return {
        "difference": float(np.abs(anti_first - hol_first).max()),
        "antihol_first_closed_form": residual(anti_first, closed_anti_first),
        "hol_first_closed_form": residual(hol_first, closed_hol_first),
        "antihol_first_alt_reading": residual(anti_first, alt_anti_first),
    }


def classical_order_difference(c: ExtendedCurve, base, hol: int, antihol: int) -> dict[str, float]:
    """Classical mixed orders: their difference versus its closed form.

    K_{l,k} - K_{k,l} = dbar_k(H^-1 d_l H) dbar(H^-1 d H) - dbar(H^-1 d H) dbar_k(H^-1 d_l H)
    where K_{l,k} applies Hol(l) first.
    """
    jets = CurveJets(c, base, (2, 2))
    geo = jets.geometry
    l, k = hol - 1, antihol - 1
    hol_first = geo.covariant_derivative(DerivPlan((Hol(hol), AntiHol(antihol)))).value
    anti_first = geo.covariant_derivative(DerivPlan((AntiHol(antihol), Hol(hol)))).value
    a = geo.connection_component(l).dbar(k).value
    b = geo.connection.dbar_sum().value
    closed = a @ b - b @ a
    return {
        "difference": float(np.abs(hol_first - anti_first).max()),
        "closed_form": residual(-hol_first + anti_first, closed),
    }
