"""Scenario files: schema, loading, and the task registry behind the CLI."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import jsonschema
import numpy as np
import yaml

from . import classify, curves, flags
from .corpus import fd_cross_check
from .curves import CurveJets, ExtendedCurve
from .geometry import DerivPlan, all_plans, plans_by_caps, required_caps
from .indexing import MultiIndex, enumerate_upto
from .jets import SingularJetError, fd_oracle
from .model import (
    DiagonalKernelSpec,
    Fb2Model,
    Frame,
    HolomorphicPolynomial,
    derivative_frame,
    kernel_preset,
    ofb_sections,
    section_from_kernel,
)
from .numerics import random_unitary, residual

SCHEMA_VERSION = "1"
FD_TOLERANCE = 1e-5
ORDER_GAP = 1e-6
TRUNCATION_FLAG = 1e-10

BUNDLED = Path(__file__).parent / "scenarios"


class ScenarioError(ValueError):
    """Input problem: unreadable, schema-invalid or unresolved scenario."""


COMPLEX = {
    "oneOf": [
        {"type": "number"},
        {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
    ]
}
PAIR = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}
# a point is a complex number (m = 1) or a list of [re, im] pairs (any m)
POINT = {"anyOf": [COMPLEX, {"type": "array", "items": PAIR, "minItems": 1}]}

SCHEMA = {
    "type": "object",
    "required": ["schema_version"],
    "additionalProperties": False,
    "properties": {
        "schema_version": {"type": "string", "const": SCHEMA_VERSION},
        "name": {"type": "string"},
        "m": {"type": "integer", "minimum": 1},
        "truncation": {"type": "integer", "minimum": 1},
        "tolerance": {"type": "number", "exclusiveMinimum": 0},
        "orders": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 2, "maxItems": 2},
        "seed": {"type": "integer"},
        "kernels": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "required": ["preset"],
                "additionalProperties": False,
                "properties": {
                    "preset": {"enum": ["hardy", "bergman", "drury-arveson", "explicit"]},
                    "m": {"type": "integer", "minimum": 1},
                    "truncation": {"type": "integer", "minimum": 1},
                    "weights": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}},
                },
            },
        },
        "curves": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "required": ["F"],
                "additionalProperties": False,
                "properties": {
                    "F": {"type": "string"},
                    "G": {"type": "string"},
                    "rank": {"type": "integer", "minimum": 1},
                },
            },
        },
        "fb2_models": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "required": ["kernel0", "kernel1"],
                "additionalProperties": False,
                "properties": {
                    "kernel0": {"type": "string"},
                    "kernel1": {"type": "string"},
                    "coupling": COMPLEX,
                },
            },
        },
        "sample_points": {"type": "array", "items": POINT},
        "tasks": {
            "type": "array",
            "items": {"type": "object", "required": ["task"], "properties": {"task": {"type": "string"}}},
        },
    },
}


def _complex(value) -> complex:
    if isinstance(value, (list, tuple)):
        return complex(value[0], value[1])
    return complex(value)


def _point(value) -> np.ndarray:
    if isinstance(value, (list, tuple)) and value and isinstance(value[0], (list, tuple)):
        return np.array([_complex(v) for v in value])
    return np.array([_complex(value)])


def _fmt_point(point) -> str:
    parts = []
    for z in np.atleast_1d(point):
        z = complex(z)
        parts.append(f"{z.real:g}" if z.imag == 0 else f"{z.real:g}{z.imag:+g}j")
    return "(" + ", ".join(parts) + ")"


@dataclass
class CurveEntry:
    curve: ExtendedCurve
    kernels: tuple[DiagonalKernelSpec, DiagonalKernelSpec]
    rank: int


@dataclass
class Check:
    """One report row. ``relation`` says how value and tolerance compare."""

    task: str
    check: str
    value: float
    tolerance: float | None = None
    relation: str = "<="
    asserted: bool = True
    detail: str = ""

    @property
    def passed(self) -> bool | None:
        if not self.asserted:
            return None
        if self.relation == "<=":
            return bool(self.value <= self.tolerance)
        if self.relation == ">":
            return bool(self.value > self.tolerance)
        if self.relation == "==":
            return bool(self.value == self.tolerance)
        raise ValueError(f"unknown relation {self.relation!r}")

    @property
    def margin(self) -> float | None:
        if self.tolerance in (None, 0) or self.relation != "<=":
            return None
        return self.value / self.tolerance

    def to_dict(self) -> dict:
        return {
            "task": self.task,
            "check": self.check,
            "value": _round(self.value),
            "tolerance": self.tolerance,
            "relation": self.relation,
            "asserted": self.asserted,
            "passed": self.passed,
            "detail": self.detail,
        }


def _round(value: float) -> float:
    value = float(value)
    return float(f"{value:.6g}") if np.isfinite(value) else value


@dataclass
class Scenario:
    name: str
    tolerance: float
    orders: tuple[int, int]
    seed: int
    kernels: dict[str, DiagonalKernelSpec]
    curves: dict[str, CurveEntry]
    fb2_models: dict[str, Fb2Model]
    sample_points: list[np.ndarray]
    tasks: list[dict]
    source: str = ""
    load_checks: list[Check] = field(default_factory=list)

    def points(self, m: int) -> list[np.ndarray]:
        pts = [p for p in self.sample_points if p.shape[0] == m]
        if not pts:
            raise ScenarioError(f"no sample points of dimension {m}")
        return pts


def resolve_path(path: str | Path) -> Path:
    """A scenario path, or the name of a bundled scenario."""
    p = Path(path)
    if p.exists():
        return p
    for candidate in (BUNDLED / f"{path}.yaml", BUNDLED / str(path)):
        if candidate.exists():
            return candidate
    raise ScenarioError(f"scenario not found: {path}")


def load_scenario(path: str | Path) -> Scenario:
    p = resolve_path(path)
    try:
        doc = yaml.safe_load(p.read_text())
    except yaml.YAMLError as exc:
        raise ScenarioError(f"cannot parse {p}: {exc}") from exc
    return build_scenario(doc, str(p))


def build_scenario(doc, source: str = "<memory>") -> Scenario:
    try:
        jsonschema.validate(doc, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(map(str, exc.absolute_path)) or "<root>"
        raise ScenarioError(f"schema error at {where}: {exc.message}") from exc
    m = doc.get("m", 1)
    truncation = doc.get("truncation", 60)
    kernels = {}
    for name, spec in doc.get("kernels", {}).items():
        try:
            kernels[name] = kernel_preset(
                spec["preset"], spec.get("m", m), spec.get("truncation", truncation), spec.get("weights")
            )
        except ValueError as exc:
            raise ScenarioError(f"kernel {name!r}: {exc}") from exc

    def kernel(name: str) -> DiagonalKernelSpec:
        if name not in kernels:
            raise ScenarioError(f"unknown kernel {name!r}")
        return kernels[name]

    curve_map = {}
    for name, spec in doc.get("curves", {}).items():
        kf, kg = kernel(spec["F"]), kernel(spec.get("G", spec["F"]))
        if kf.m != kg.m or kf.dim != kg.dim:
            raise ScenarioError(f"curve {name!r}: F and G kernels are incompatible")
        rank = spec.get("rank", 1)
        frames = []
        for k in (kf, kg):
            section = section_from_kernel(k)
            frames.append(Frame([section]) if rank == 1 else derivative_frame(section, rank))
        curve_map[name] = CurveEntry(ExtendedCurve(frames[0], frames[1], name), (kf, kg), rank)

    models = {}
    for name, spec in doc.get("fb2_models", {}).items():
        try:
            models[name] = Fb2Model(
                kernel(spec["kernel0"]), kernel(spec["kernel1"]), _complex(spec.get("coupling", 1.0))
            )
        except ValueError as exc:
            raise ScenarioError(f"fb2 model {name!r}: {exc}") from exc

    tasks = list(doc.get("tasks", []))
    for k, task in enumerate(tasks):
        if task["task"] not in TASKS:
            raise ScenarioError(f"task {k}: unknown task {task['task']!r}")
        for key in ("curve", "model", "kernel"):
            ref = task.get(key)
            table = {"curve": curve_map, "model": models, "kernel": kernels}[key]
            if ref is not None and ref not in table:
                raise ScenarioError(f"task {k}: unknown {key} {ref!r}")
        for key, table in (("curves", curve_map), ("models", models), ("kernels", kernels)):
            for ref in task.get(key, []):
                if ref not in table:
                    raise ScenarioError(f"task {k}: unknown {key[:-1]} {ref!r}")

    scenario = Scenario(
        name=doc.get("name", Path(source).stem),
        tolerance=float(doc.get("tolerance", 1e-8)),
        orders=tuple(doc.get("orders", [3, 3])),
        seed=int(doc.get("seed", 0)),
        kernels=kernels,
        curves=curve_map,
        fb2_models=models,
        sample_points=[_point(p) for p in doc.get("sample_points", [])],
        tasks=tasks,
        source=source,
    )
    scenario.load_checks = _load_checks(scenario)
    return scenario


def _load_checks(s: Scenario) -> list[Check]:
    """Every curve's Gram must be invertible at every sample point of its dimension."""
    out = []
    for name, entry in s.curves.items():
        worst = 0.0
        for p in s.sample_points:
            if p.shape[0] != entry.curve.m:
                continue
            H = entry.curve.gram_value(p)
            worst = max(worst, float(np.linalg.cond(H)))
        if worst:
            out.append(Check("load", f"{name}/gram-condition", worst, 1e6, detail="sample points"))
    return out


# tasks ----------------------------------------------------------------------------

TaskFn = Callable[[Scenario, dict, str, float], list[Check]]
TASKS: dict[str, TaskFn] = {}


def task(name: str):
    def register(fn: TaskFn) -> TaskFn:
        TASKS[name] = fn
        return fn

    return register


def _subject(spec: dict, index: int) -> str:
    """What a task is about, for its default label."""
    for key in ("curve", "model", "kernel"):
        if spec.get(key):
            return str(spec[key])
    for key in ("curves", "models", "kernels"):
        if spec.get(key):
            return "~".join(map(str, spec[key]))
    return f"#{index}"


def _points_for(s: Scenario, spec: dict, m: int) -> list[np.ndarray]:
    if "points" in spec:
        return [_point(p) for p in spec["points"]]
    return s.points(m)


CLOSED_FORM_SCALES = {"hardy": 1.0, "bergman": 2.0}


@task("curvature")
def _curvature(s, spec, label, tol):
    entry = s.curves[spec["curve"]]
    oracle = spec.get("oracle")
    scale = CLOSED_FORM_SCALES.get(oracle, oracle)
    rows = []
    for p in _points_for(s, spec, entry.curve.m):
        K = float(np.trace(CurveJets(entry.curve, p, (1, 1)).geometry.curvature.value).real)
        if scale is None:
            rows.append(Check(label, f"K{_fmt_point(p)}", K, asserted=False, detail="trace of curvature"))
        else:
            exact = -float(scale) / (1 - float(np.sum(np.abs(p) ** 2))) ** 2
            rows.append(Check(label, f"K{_fmt_point(p)}", abs(K - exact), tol, detail=f"value {K:.10g}, closed form {exact:.10g}"))
    return rows


@task("holomorphy")
def _holomorphy(s, spec, label, tol):
    entry = s.curves[spec["curve"]]
    worst: dict[str, float] = {}
    for p in _points_for(s, spec, entry.curve.m):
        for key, value in curves.holomorphy_residuals(entry.curve, p, spec.get("corruption")).items():
            worst[key] = max(worst.get(key, 0.0), value)
    detail = f"corruption={spec['corruption']}" if spec.get("corruption") else ""
    return [Check(label, key, value, tol, detail=detail) for key, value in worst.items()]




@task("intertwining")
def _intertwining(s, spec, label, tol):
    entry = s.curves[spec["curve"]]
    worst = {"intertwining": 0.0, "trace": 0.0}
    count = 0
    for p in _points_for(s, spec, entry.curve.m):
        for caps, plans in plans_by_caps(entry.curve.m, spec.get("max_length", 4)).items():
            jets = CurveJets(entry.curve, p, caps)
            for plan in plans:
                for key, value in curves.intertwining_residual(entry.curve, plan, p, jets).items():
                    worst[key] = max(worst[key], value)
                count += 1
    return [Check(label, key, value, tol, detail=f"{count} plan evaluations") for key, value in worst.items()]


@task("pair_decomposition")
def _pair_decomposition(s, spec, label, tol):
    entry = s.curves[spec["curve"]]
    worst = {"extended": 0.0, "classical": 0.0}
    for p in _points_for(s, spec, entry.curve.m):
        for caps, plans in plans_by_caps(entry.curve.m, spec.get("max_length", 3), 1).items():
            jets = CurveJets(entry.curve, p, caps)
            for plan in plans:
                for key, value in curves.pair_decomposition_check(entry.curve, plan, p, jets).items():
                    worst[key] = max(worst[key], value)
    return [Check(label, key, value, tol) for key, value in worst.items()]


@task("leibniz")
def _leibniz(s, spec, label, tol):
    entry = s.curves[spec["curve"]]
    m = entry.curve.m
    p_cap, q_cap = spec.get("orders", s.orders)
    hol = list(enumerate_upto(m, p_cap))
    anti = list(enumerate_upto(m, q_cap))
    zero = MultiIndex.zero(m)
    pairs = [(hol[k] if k < len(hol) else zero, anti[k] if k < len(anti) else zero) for k in range(max(len(hol), len(anti)))]
    literal = bool(spec.get("literal", False))
    worst: dict[str, float] = {}
    for p in _points_for(s, spec, m):
        for I, J in pairs:
            for key, value in curves.leibniz_expansion_check(entry.curve, p, I, J, literal).items():
                worst[key] = max(worst.get(key, 0.0), value)
    detail = "literal index set" if literal else ""
    return [Check(label, key, value, tol, detail=detail) for key, value in worst.items()]


@task("monomial")
def _monomial(s, spec, label, tol):
    entry = s.curves[spec["curve"]]
    m = entry.curve.m
    order = spec.get("order", 3)
    worst, violations, count = 0.0, 0.0, 0
    for p in _points_for(s, spec, m):
        for I in enumerate_upto(m, order):
            for J in enumerate_upto(m, order - I.degree):
                r = curves.monomial_expansion_check(entry.curve, I, J, p)
                worst = max(worst, r["residual"])
                violations += r["form_violations"]
                count += 1
    return [
        Check(label, "residual", worst, tol, detail=f"{count} expansions up to order {order}"),
        Check(label, "form_violations", violations, 0.0, relation="=="),
    ]


@task("curvature_monomials")
def _curvature_monomials(s, spec, label, tol):
    entry = s.curves[spec["curve"]]
    m = entry.curve.m
    worst, violations, count = 0.0, 0.0, 0
    for p in _points_for(s, spec, m)[:1]:
        for plan in all_plans(m, spec.get("max_length", 3)):
            if len(plan.elementary_pairs()) != 1:
                continue
            r = curves.curvature_monomial_check(entry.curve, plan, p)
            worst = max(worst, r["residual"])
            violations += r["form_violations"]
            count += 1
    return [
        Check(label, "residual", worst, tol, detail=f"{count} single-pair plans"),
        Check(label, "form_violations", violations, 0.0, relation="=="),
    ]


@task("order_witness")
def _order_witness(s, spec, label, tol):
    entry = s.curves[spec["curve"]]
    hol, anti = spec.get("hol", 1), spec.get("antihol", 1)
    rows = []
    diff, closed_a, closed_h, alt, cls_diff, cls_closed = 0.0, 0.0, 0.0, np.inf, 0.0, 0.0
    for p in _points_for(s, spec, entry.curve.m):
        r = curves.mixed_order_forms(entry.curve, p, hol, anti)
        c = curves.classical_order_difference(entry.curve, p, hol, anti)
        diff = max(diff, r["difference"])
        closed_a = max(closed_a, r["antihol_first_closed_form"])
        closed_h = max(closed_h, r["hol_first_closed_form"])
        alt = min(alt, r["antihol_first_alt_reading"])
        cls_diff = max(cls_diff, c["difference"])
        cls_closed = max(cls_closed, c["closed_form"])
    expect = spec.get("expect_differ")
    rows.append(
        Check(
            label,
            "difference",
            diff,
            ORDER_GAP,
            relation=">" if expect else "<=",
            asserted=expect is not None,
            detail=f"Hol({hol})/AntiHol({anti}) orders",
        )
    )
    rows.append(Check(label, "antihol_first_closed_form", closed_a, tol))
    rows.append(Check(label, "hol_first_closed_form", closed_h, tol))
    rows.append(Check(label, "antihol_first_alt_reading", alt, tol, asserted=False, detail="inner holomorphic derivative"))
    rows.append(Check(label, "classical_difference", cls_diff, asserted=False))
    rows.append(Check(label, "classical_commutator_form", cls_closed, tol))
    return rows


def _rng(s: Scenario, spec: dict) -> np.random.Generator:
    return np.random.default_rng(spec.get("seed", s.seed))


@task("unitary_invariance")
def _unitary_invariance(s, spec, label, tol):
    entry = s.curves[spec["curve"]]
    c = entry.curve
    U = random_unitary(c.dim, _rng(s, spec))
    conj = c.conjugated(U)
    worst = 0.0
    count = 0
    point = _points_for(s, spec, c.m)[0]
    for caps, plans in plans_by_caps(c.m, spec.get("max_length", 2)).items():
        j1, j2 = CurveJets(c, point, caps), CurveJets(conj, point, caps)
        for plan in plans:
            k1 = j1.covariant_derivative(plan).value
            k2 = j2.covariant_derivative(plan).value
            worst = max(worst, residual(k2, U @ k1 @ U.conj().T))
            count += 1
    rows = [Check(label, "conjugation", worst, tol, detail=f"{count} plans")]
    # Y = H2^-1 G2^* U F1 for a frame-changed conjugate
    n = entry.rank
    phi = np.triu(np.ones((n, n))) + np.eye(n)
    changed = ExtendedCurve(conj.F @ HolomorphicPolynomial.constant(phi, c.m), conj.G, c.name)
    inverse, intertwining = 0.0, 0.0
    for plan in all_plans(c.m, spec.get("witness_length", 1)):
        r = classify.classical_similarity_witness(c, changed, U, plan, point)
        inverse = max(inverse, r["inverse"])
        intertwining = max(intertwining, r["intertwining"])
    rows.append(Check(label, "YZ=1", inverse, tol))
    rows.append(Check(label, "YK1=K2Y", intertwining, tol))
    orders = tuple(spec.get("orders", (2, 2)))
    prod = classify.product_intertwine_check(c, conj, U, orders, [point])
    rows.append(Check(label, "product_intertwining", prod["residual"], tol))
    return rows


@task("product_intertwine")
def _product_intertwine(s, spec, label, tol):
    names = spec["curves"]
    c1, c2 = s.curves[names[0]].curve, s.curves[names[1]].curve
    X = np.eye(c1.dim)
    r = classify.product_intertwine_check(c1, c2, X, tuple(spec.get("orders", (1, 1))), _points_for(s, spec, c1.m))
    return [Check(label, "residual", r["residual"], tol, detail="X = identity")]


def _verdict_row(label: str, v: classify.EquivalenceVerdict, expect: str) -> list[Check]:
    key = max(v.residuals, key=lambda k: v.residuals[k])
    return [
        Check(
            label,
            "verdict",
            float(v.verdict == expect),
            1.0,
            relation="==",
            detail=f"{v.verdict} (expected {expect}); {v.witness}",
        ),
        Check(label, key, v.residuals[key], v.tolerance, asserted=False, detail="separating residual"),
    ]


@task("b1_equivalence")
def _b1(s, spec, label, tol):
    a, b = (s.curves[n] for n in spec["curves"])
    samples = classify.disk_samples(spec.get("radius", 0.6), spec.get("count", 25), a.curve.m)
    v = classify.b1_unitary_equivalence(a.curve.F, b.curve.F, samples, tol)
    return _verdict_row(label, v, spec["expect"])


@task("fb2_equivalence")
def _fb2_equivalence(s, spec, label, tol):
    a, b = (s.fb2_models[n] for n in spec["models"])
    samples = classify.disk_samples(spec.get("radius", 0.6), spec.get("count", 25))
    return _verdict_row(label, classify.fb2_unitary_equivalence(a, b, samples, tol), spec["expect"])


@task("shift_similarity")
def _shift_similarity(s, spec, label, tol):
    a, b = (s.kernels[n] for n in spec["kernels"])
    return _verdict_row(label, classify.weighted_shift_similarity(a, b), spec["expect"])


def _coefficient_frame(coeffs) -> Frame:
    beta = np.array([[_complex(c) for c in row] for row in coeffs])  # rows: components, columns: powers
    poly = HolomorphicPolynomial(beta.T[:, :, None], 1, beta.shape[1] - 1)
    return Frame([poly])


@task("finite_rank")
def _finite_rank(s, spec, label, tol):
    p, q = _coefficient_frame(spec["p"]), _coefficient_frame(spec["q"])
    samples = classify.disk_samples(spec.get("radius", 0.6), spec.get("count", 25))
    return _verdict_row(label, classify.finite_rank_twist_equivalence(p, q, samples, tol), spec["expect"])


@task("fb2")
def _fb2(s, spec, label, tol):
    model = s.fb2_models[spec["model"]]
    action_tol = spec.get("action_tolerance", 1e-10)
    rows = []
    worst: dict[str, float] = {}
    r_plus = 0.0
    kernel = 0.0
    for p in _points_for(s, spec, 1):
        dec = flags.fb2_projection(model, p)
        for key, value in dec.residuals().items():
            worst[key] = max(worst.get(key, 0.0), value)
        rel = flags.fb2_theta_relation(model, p)
        worst["R_minus"] = max(worst.get("R_minus", 0.0), abs(rel["R_minus"]) / rel["scale"])
        r_plus = max(r_plus, abs(rel["R_plus"]) / rel["scale"])
        for key, value in flags.fb2_jet_action_check(model, p).items():
            worst[f"action/{key}"] = max(worst.get(f"action/{key}", 0.0), value)
        kernel = max(kernel, flags.fb2_kernel_residual(model, p))
    for key, value in worst.items():
        rows.append(Check(label, key, value, action_tol if key.startswith("action/") else tol))
    rows.append(Check(label, "R_plus", r_plus, asserted=False, detail="statement sign, reported only"))
    rows.append(Check(label, "kernel_of_T", kernel, asserted=False, detail="truncated operator diagnostic"))
    for point, expected in spec.get("theta", {}).items():
        theta = flags.fb2_projection(model, _complex(float(point))).theta
        rows.append(
            Check(label, f"theta({point})", abs(theta - float(expected)), tol, detail=f"value {theta.real:.10g}")
        )
    return rows


@task("flag_diagram")
def _flag_diagram(s, spec, label, tol):
    kernel = s.kernels[spec["kernel"]]
    n = spec.get("n", 2)
    sections = ofb_sections(kernel, n, _complex(spec.get("coupling", 1.0)))
    rng = _rng(s, spec)
    unitaries = [random_unitary(kernel.dim, rng) for _ in range(n)]
    out = flags.flag_diagram_check(sections, n, _complex(spec.get("point", 0.2)), unitaries)
    diagram_tol = spec.get("diagram_tolerance", 1e-10)
    return [Check(label, key, value, diagram_tol if key == "diagram" else tol, detail=f"n={n}") for key, value in out.items()]


@task("ofb_frame_change")
def _ofb_frame_change(s, spec, label, tol):
    kernel = s.kernels[spec["kernel"]]
    n = spec.get("n", 3)
    sections = ofb_sections(kernel, n)
    rows = []
    for coeffs in spec.get("phi00", [[1.0], [1.0, 1.0], [1.0, 0.0, 1.0]]):
        phi = HolomorphicPolynomial.scalar([_complex(c) for c in coeffs])
        value = flags.ofb_frame_change_check(sections, n, phi, _points_for(s, spec, 1))
        rows.append(Check(label, f"phi00={coeffs}", value, spec.get("frame_tolerance", 1e-9), detail=f"n={n}"))
    return rows


@task("projection")
def _projection(s, spec, label, tol):
    entry = s.curves[spec["curve"]]
    frame = entry.curve.F
    pts = _points_for(s, spec, entry.curve.m)
    rows = [Check(label, key, value, tol) for key, value in flags.projection_residuals(frame, pts).items()]
    U = random_unitary(frame.dim, _rng(s, spec))
    rows.append(Check(label, "congruence", flags.projection_congruence(frame, frame.conjugated(U), U, pts), tol))
    return rows


# running ------------------------------------------------------------------------


@dataclass
class Report:
    scenario: str
    source: str
    tolerance: float
    checks: list[Check]
    timings: dict[str, float] = field(default_factory=dict)

    @property
    def failures(self) -> list[Check]:
        return [c for c in self.checks if c.passed is False]

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_dict(self, include_timings: bool = False) -> dict:
        from . import __version__

        doc = {
            "schema_version": SCHEMA_VERSION,
            "tool_version": __version__,
            "scenario": self.scenario,
            "tolerance": self.tolerance,
            "status": "pass" if self.passed else "fail",
            "summary": {
                "checks": len(self.checks),
                "asserted": sum(c.asserted for c in self.checks),
                "failed": len(self.failures),
            },
            "checks": [c.to_dict() for c in self.checks],
        }
        if include_timings:
            doc["timings"] = {k: round(v, 3) for k, v in self.timings.items()}
        return doc


def _fd_rows(s: Scenario, used_curves: list[str], used_models: list[str]) -> list[Check]:
    rows = []
    for name in used_curves:
        entry = s.curves[name]
        point = s.points(entry.curve.m)[0]
        for key, value in fd_cross_check(entry.curve, point).items():
            rows.append(Check("fd-check", f"{name}/{key}", value, FD_TOLERANCE, detail="|I|+|J| <= 3, step 1e-4"))
    for name in used_models:
        model = s.fb2_models[name]
        t0 = model.t0()
        point = s.points(1)[0]
        worst = 0.0
        for k in range(1, 4):
            exact = t0.derivative(0, k).evaluate(point)
            approx = fd_oracle(t0.evaluate, point, (k,), (0,))
            worst = max(worst, residual(exact, approx))
        rows.append(Check("fd-check", f"{name}/t0", worst, FD_TOLERANCE, detail="t0', t0'', t0'''"))
    return rows


def run(
    s: Scenario,
    tolerance: float | None = None,
    max_order: tuple[int, int] | None = None,
    fd_check: bool = False,
    task_filter: list[str] | None = None,
) -> Report:
    tol = s.tolerance if tolerance is None else tolerance
    if max_order is not None:
        s.orders = tuple(max_order)
    checks = list(s.load_checks)
    timings: dict[str, float] = {}
    used_curves: list[str] = []
    used_models: list[str] = []
    for k, spec in enumerate(s.tasks):
        kind = spec["task"]
        label = spec.get("name") or f"{kind}:{_subject(spec, k)}"
        if task_filter and kind not in task_filter and label not in task_filter:
            continue
        for key, bucket in (("curve", used_curves), ("model", used_models)):
            if spec.get(key) and spec[key] not in bucket:
                bucket.append(spec[key])
        for ref in spec.get("curves", []):
            if ref not in used_curves:
                used_curves.append(ref)
        start = time.perf_counter()
        # explicit tolerances in a task are floors fixed by the check itself
        task_tol = spec.get("tolerance", tol) if tolerance is None else tolerance
        try:
            rows = TASKS[kind](s, spec, label, task_tol)
        except (SingularJetError, np.linalg.LinAlgError, ValueError) as exc:
            rows = [Check(label, "error", float("inf"), 0.0, detail=f"singular or invalid: {exc}")]
        if tolerance is not None:
            for row in rows:
                if row.asserted and row.relation == "<=":
                    row.tolerance = tolerance
        checks.extend(rows)
        timings[label] = time.perf_counter() - start
    if fd_check:
        start = time.perf_counter()
        checks.extend(_fd_rows(s, used_curves, used_models))
        timings["fd-check"] = time.perf_counter() - start
    return Report(s.name, s.source, tol, checks, timings)


# curvature grids -------------------------------------------------------------


def curvature_grid(s: Scenario, curve: str, radius: float, size: int, center: complex = 0j) -> list[dict]:
    """Rows (re, im, value, flag) on a size x size square grid of half-width radius.

    The grid runs over the first coordinate with the others at zero. The value
    is the curvature for rank one and its trace otherwise.
    """
    if curve not in s.curves:
        raise ScenarioError(f"unknown curve {curve!r}")
    entry = s.curves[curve]
    m = entry.curve.m
    axis = np.linspace(-radius, radius, size) if size > 1 else np.array([0.0])
    rows = []
    for im in axis[::-1]:
        for re in axis:
            lam = center + complex(re, im)
            point = np.zeros(m, dtype=complex)
            point[0] = lam
            flag = ""
            value = float("nan")
            if float(np.sum(np.abs(point) ** 2)) >= 1.0:
                flag = "outside-domain"
            else:
                try:
                    K = CurveJets(entry.curve, point, (1, 1)).geometry.curvature.value
                    value = float(np.trace(K).real)
                    tail = max(k.tail_ratio(point) for k in entry.kernels)
                    if tail > TRUNCATION_FLAG:
                        flag = "truncation"
                except (SingularJetError, np.linalg.LinAlgError):
                    flag = "singular"
            rows.append({"re": _round(lam.real), "im": _round(lam.imag), "value": _round(value), "flag": flag})
    return rows
