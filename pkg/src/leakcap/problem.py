"""Problem files: a JSON document describing one model plus constraints.

Exactly one of three model kinds is allowed::

    {"channel": {"inputs": [...], "outputs": [...], "matrix": [[...], ...]}}
    {"program": {"p": "1/3", "q": "1/3"}}
    {"network": {"nodes": [...], "edges": [[a, b], ...], "senders": [...],
                 "adversary": "3", "receiver": "R", "directed": true}}

``matrix`` is row-major (one row per secret); entries may be numbers or
rational strings such as ``"1/3"``.  Constraints are either expressions
(``{"expr": "h1 > 100*h2"}``) or explicit ``coeffs``/``relation``/``bound``.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .channel import Channel, ChannelError
from .constraints import ConstraintError, ConstraintSet, LinearConstraint, Relation, normalize
from .models import (
    ModelError,
    NetworkModel,
    ThreadedProgramParams,
    network_channel,
    threaded_program_channel,
)

MODEL_KINDS = ("channel", "program", "network")


class ProblemError(ValueError):
    pass


@dataclass(frozen=True)
class Options:
    tol: float | None = None
    seed: int = 0
    oracle: bool = False


@dataclass(frozen=True, eq=False)
class ProblemFile:
    kind: str
    model: dict
    constraints: tuple = ()
    options: Options = field(default_factory=Options)
    name: str = ""

    def channel(self) -> Channel:
        return build_channel(self.kind, self.model)

    def constraint_set(self) -> ConstraintSet:
        return ConstraintSet(self.constraints)


def parse_number(value, where: str) -> Fraction | float:
    """Numbers pass through; strings like ``"1/3"`` or ``"0.25"`` become exact fractions."""
    if isinstance(value, bool):
        raise ProblemError(f"{where}: expected a number, got {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return value
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError):
            pass
    raise ProblemError(f"{where}: expected a number or rational string, got {value!r}")


def _labels(values, where):
    if not isinstance(values, list) or not values:
        raise ProblemError(f"{where}: expected a non-empty list")
    return [str(v) for v in values]


def build_channel(kind: str, model: dict) -> Channel:
    try:
        if kind == "channel":
            return _channel_from_table(model)
        if kind == "program":
            p = parse_number(model.get("p"), "program.p")
            q = parse_number(model.get("q"), "program.q")
            return threaded_program_channel(ThreadedProgramParams(p, q))
        return network_channel(network_model(model))
    except (ChannelError, ModelError) as exc:
        raise ProblemError(f"{kind}: {exc}") from None


def network_model(model: dict) -> NetworkModel:
    edges = model.get("edges", [])
    if not all(isinstance(e, list) and len(e) == 2 for e in edges):
        raise ProblemError("network.edges: each edge must be a pair of node names")
    try:
        return NetworkModel(
            nodes=tuple(_labels(model.get("nodes"), "network.nodes")),
            edges=tuple(tuple(e) for e in edges),
            receiver=model.get("receiver"),
            adversary=model.get("adversary"),
            senders=tuple(_labels(model.get("senders"), "network.senders")),
            directed=bool(model.get("directed", False)),
        )
    except ModelError as exc:
        raise ProblemError(f"network: {exc}") from None


def _channel_from_table(model: dict) -> Channel:
    matrix = model.get("matrix")
    if not isinstance(matrix, list) or not matrix:
        raise ProblemError("channel.matrix: expected a list of rows")
    inputs = _labels(model.get("inputs") or [f"h{i + 1}" for i in range(len(matrix))],
                     "channel.inputs")
    width = len(matrix[0]) if isinstance(matrix[0], list) else 0
    outputs = _labels(model.get("outputs") or [f"o{j + 1}" for j in range(width)],
                      "channel.outputs")
    if len(inputs) != len(matrix):
        raise ProblemError(f"channel: {len(inputs)} input labels but {len(matrix)} rows")
    rows = []
    for i, row in enumerate(matrix):
        if not isinstance(row, list) or len(row) != len(outputs):
            raise ProblemError(f"channel.matrix[{i}]: expected {len(outputs)} entries")
        vals = [parse_number(v, f"channel.matrix[{i}][{j}]") for j, v in enumerate(row)]
        total = sum(vals)
        if abs(float(total) - 1.0) > 1e-9:
            raise ProblemError(f"channel.matrix[{i}] (secret {inputs[i]!r}) sums to {total}, expected 1")
        rows.append([float(v) for v in vals])
    return Channel.from_rows(rows, inputs, outputs)


# -- constraint expressions ---------------------------------------------------

_REL = re.compile(r"(>=|<=|==|=|>|<)")
_TERM = re.compile(
    r"\s*([+-])?\s*(?:(\d+(?:\.\d*)?(?:[eE][+-]?\d+)?(?:/\d+)?|\.\d+)\s*\*?\s*)?([A-Za-z_][A-Za-z0-9_]*)?\s*"
)


def _side(text: str, labels: list, where: str) -> tuple:
    coeffs = np.zeros(len(labels))
    const = 0.0
    pos = 0
    text = text.strip()
    if not text:
        raise ProblemError(f"{where}: empty side of the relation")
    while pos < len(text):
        m = _TERM.match(text, pos)
        if not m or m.end() == pos or (m.group(2) is None and m.group(3) is None):
            raise ProblemError(f"{where}: cannot parse {text[pos:]!r}")
        if pos > 0 and m.group(1) is None:
            raise ProblemError(f"{where}: missing operator before {text[pos:]!r}")
        sign = -1.0 if m.group(1) == "-" else 1.0
        num = float(Fraction(m.group(2))) if m.group(2) else 1.0
        if m.group(3):
            label = m.group(3)
            if label not in labels:
                raise ProblemError(f"{where}: unknown secret {label!r}; valid labels are {labels}")
            coeffs[labels.index(label)] += sign * num
        else:
            const += sign * num
        pos = m.end()
    return coeffs, const


def parse_expression(expr: str, labels: list, name: str = "") -> LinearConstraint:
    """Compile ``"h1 > 100*h2"`` style text into a normalized constraint."""
    where = f"constraint {name or expr!r}"
    parts = _REL.split(expr)
    if len(parts) != 3:
        raise ProblemError(f"{where}: expected exactly one relation operator")
    lhs, rel, rhs = parts
    lc, lk = _side(lhs, labels, where)
    rc, rk = _side(rhs, labels, where)
    coeffs = lc - rc
    try:
        c = LinearConstraint(coeffs, rk - lk, Relation.parse(rel), name or expr.strip())
    except ConstraintError as exc:
        raise ProblemError(f"{where}: {exc}") from None
    return normalize(c)


def _explicit(spec: dict, labels: list, where: str) -> LinearConstraint:
    raw = spec.get("coeffs")
    if isinstance(raw, dict):
        coeffs = np.zeros(len(labels))
        for label, v in raw.items():
            if label not in labels:
                raise ProblemError(f"{where}: unknown secret {label!r}; valid labels are {labels}")
            coeffs[labels.index(label)] = float(parse_number(v, where))
    elif isinstance(raw, list):
        if len(raw) != len(labels):
            raise ProblemError(f"{where}: expected {len(labels)} coefficients, got {len(raw)}")
        coeffs = np.array([float(parse_number(v, where)) for v in raw])
    else:
        raise ProblemError(f"{where}: 'coeffs' must be a list or an object")
    try:
        c = LinearConstraint(coeffs, float(parse_number(spec.get("bound", 0), where)),
                             Relation.parse(str(spec.get("relation", ">="))),
                             str(spec.get("name", "")))
    except ConstraintError as exc:
        raise ProblemError(f"{where}: {exc}") from None
    return normalize(c)


def parse_problem(text: str) -> ProblemFile:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ProblemError("top level must be an object")
    kinds = [k for k in MODEL_KINDS if k in doc]
    if len(kinds) != 1:
        raise ProblemError(f"exactly one of {MODEL_KINDS} is required, found {kinds or 'none'}")
    kind = kinds[0]
    model = doc[kind]
    if not isinstance(model, dict):
        raise ProblemError(f"{kind}: expected an object")
    ch = build_channel(kind, model)
    labels = list(ch.input_labels)

    constraints = []
    for k, spec in enumerate(doc.get("constraints", [])):
        where = f"constraints[{k}]"
        if isinstance(spec, str):
            spec = {"expr": spec}
        if not isinstance(spec, dict):
            raise ProblemError(f"{where}: expected an object or expression string")
        if "expr" in spec:
            constraints.append(parse_expression(str(spec["expr"]), labels, str(spec.get("name", ""))))
        else:
            constraints.append(_explicit(spec, labels, where))

    raw_opts = doc.get("options", {}) or {}
    try:
        opts = Options(
            tol=None if raw_opts.get("tol") is None else float(raw_opts["tol"]),
            seed=int(raw_opts.get("seed", 0)),
            oracle=bool(raw_opts.get("oracle", False)),
        )
    except (TypeError, ValueError) as exc:
        raise ProblemError(f"options: {exc}") from None
    return ProblemFile(kind, model, tuple(constraints), opts, str(doc.get("name", "")))


def load_problem(path) -> ProblemFile:
    with open(path, encoding="utf-8") as fh:
        return parse_problem(fh.read())


def serialize_problem(problem: ProblemFile) -> str:
    """JSON text that parses back to the same model and constraints."""
    labels = list(problem.channel().input_labels)
    doc = {}
    if problem.name:
        doc["name"] = problem.name
    doc[problem.kind] = problem.model
    doc["constraints"] = [
        {
            "name": c.name,
            "coeffs": {lab: float(v) for lab, v in zip(labels, c.coeffs) if v != 0.0},
            "relation": c.relation.value,
            "bound": c.bound,
        }
        for c in problem.constraints
    ]
    opts = {"seed": problem.options.seed, "oracle": problem.options.oracle}
    if problem.options.tol is not None:
        opts["tol"] = problem.options.tol
    doc["options"] = opts
    return json.dumps(doc, indent=2)
