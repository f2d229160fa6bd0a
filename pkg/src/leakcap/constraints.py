"""Linear prior-knowledge constraints ``g_k(h) = sum_i f[i, k] h_i  (rel)  F_k``.

The simplex constraint ``sum_i h_i = 1`` is implicit and never stored in a
:class:`ConstraintSet`; the solver adds it itself.  ``<=`` and ``<`` are
accepted on input and turned into ``>=`` / ``>`` by :func:`normalize`.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .channel import _as_vector

ACTIVITY_TOL = 1e-8


class ConstraintError(ValueError):
    pass


class Relation(enum.Enum):
    EQUAL = "="
    GREATER_EQUAL = ">="
    STRICTLY_GREATER = ">"
    LESS_EQUAL = "<="
    STRICTLY_LESS = "<"

    @classmethod
    def parse(cls, text: str) -> "Relation":
        text = text.strip()
        if text == "==":
            text = "="
        try:
            return cls(text)
        except ValueError:
            raise ConstraintError(f"unknown relation {text!r}") from None

    @property
    def is_strict(self) -> bool:
        return self in (Relation.STRICTLY_GREATER, Relation.STRICTLY_LESS)

    @property
    def is_inequality(self) -> bool:
        return self is not Relation.EQUAL

    def flipped(self) -> "Relation":
        return _FLIP[self]


_FLIP = {
    Relation.EQUAL: Relation.EQUAL,
    Relation.GREATER_EQUAL: Relation.LESS_EQUAL,
    Relation.LESS_EQUAL: Relation.GREATER_EQUAL,
    Relation.STRICTLY_GREATER: Relation.STRICTLY_LESS,
    Relation.STRICTLY_LESS: Relation.STRICTLY_GREATER,
}


@dataclass(frozen=True, eq=False)
class LinearConstraint:
    coeffs: np.ndarray
    bound: float = 0.0
    relation: Relation = Relation.GREATER_EQUAL
    name: str = ""

    def __post_init__(self):
        f = np.array(self.coeffs, dtype=float).ravel()
        if f.size == 0 or not np.all(np.isfinite(f)):
            raise ConstraintError("constraint coefficients must be a finite vector")
        if not np.any(f != 0.0):
            raise ConstraintError(f"constraint {self.name!r} has all-zero coefficients")
        f.setflags(write=False)
        rel = self.relation
        if isinstance(rel, str):
            rel = Relation.parse(rel)
        object.__setattr__(self, "coeffs", f)
        object.__setattr__(self, "bound", float(self.bound))
        object.__setattr__(self, "relation", rel)

    @property
    def is_strict(self) -> bool:
        return self.relation.is_strict

    def holds(self, value: float, margin: float = 0.0) -> bool:
        """Truth value of ``value (rel) bound``."""
        r, b = self.relation, self.bound
        if r is Relation.EQUAL:
            return abs(value - b) <= margin
        if r is Relation.GREATER_EQUAL:
            return value >= b - margin
        if r is Relation.LESS_EQUAL:
            return value <= b + margin
        if r is Relation.STRICTLY_GREATER:
            return value > b + margin
        return value < b - margin

    def __repr__(self):
        terms = " ".join(f"{c:+g}*h{i + 1}" for i, c in enumerate(self.coeffs) if c)
        label = f"{self.name}: " if self.name else ""
        return f"<{label}{terms} {self.relation.value} {self.bound:g}>"


def evaluate(c: LinearConstraint, h) -> float:
    """``g_k(h) = sum_i f[i, k] h_i``."""
    h = _as_vector(h)
    if h.shape != c.coeffs.shape:
        raise ConstraintError(
            f"constraint has {c.coeffs.size} coefficients but the prior has {h.size} entries"
        )
    return float(c.coeffs @ h)


def orient(c: LinearConstraint) -> LinearConstraint:
    """Rewrite ``<=``/``<`` as ``>=``/``>`` by negation, without rescaling."""
    if c.relation in (Relation.LESS_EQUAL, Relation.STRICTLY_LESS):
        return LinearConstraint(-c.coeffs, 0.0 - c.bound, c.relation.flipped(), c.name)
    return c


def normalize(c: LinearConstraint) -> LinearConstraint:
    """Orient to ``>=``/``>``/``=`` and rescale so ``max |f[i, k]| == 1``."""
    c = orient(c)
    scale = float(np.max(np.abs(c.coeffs)))
    if scale == 1.0:
        return c
    return LinearConstraint(c.coeffs / scale, c.bound / scale, c.relation, c.name)


@dataclass(frozen=True)
class ConstraintSet:
    """Ordered constraints ``C_1 .. C_m`` (the simplex constraint is implicit)."""

    constraints: tuple = ()

    def __post_init__(self):
        cs = tuple(self.constraints)
        sizes = {c.coeffs.size for c in cs}
        if len(sizes) > 1:
            raise ConstraintError(f"constraints disagree on the number of secrets: {sorted(sizes)}")
        object.__setattr__(self, "constraints", cs)

    def __iter__(self):
        return iter(self.constraints)

    def __len__(self):
        return len(self.constraints)

    def __getitem__(self, k):
        return self.constraints[k]

    def check_size(self, n: int):
        for c in self.constraints:
            if c.coeffs.size != n:
                raise ConstraintError(
                    f"constraint {c.name or c!r} has {c.coeffs.size} coefficients, expected {n}"
                )

    def oriented(self) -> "ConstraintSet":
        return ConstraintSet(tuple(orient(c) for c in self.constraints))

    def matrix(self) -> np.ndarray:
        """``F`` with ``F[i, k] = f[i, k]`` (shape ``n x m``)."""
        if not self.constraints:
            return np.zeros((0, 0))
        return np.column_stack([c.coeffs for c in self.constraints])

    def bounds(self) -> np.ndarray:
        return np.array([c.bound for c in self.constraints], dtype=float)

    def with_constraint(self, c: LinearConstraint) -> "ConstraintSet":
        return ConstraintSet(self.constraints + (c,))


@dataclass(frozen=True)
class ConstraintStatus:
    name: str
    value: float
    satisfied: bool
    active: bool
    approximate: bool = False


@dataclass(frozen=True)
class FeasibilityReport:
    entries: tuple = field(default_factory=tuple)

    @property
    def satisfied(self) -> bool:
        return all(e.satisfied for e in self.entries)

    @property
    def approximate(self) -> bool:
        return any(e.approximate for e in self.entries)

    def active_indices(self) -> list:
        return [k for k, e in enumerate(self.entries) if e.active]

    def __getitem__(self, k):
        return self.entries[k]

    def __len__(self):
        return len(self.entries)


def feasibility(cs: ConstraintSet | Iterable[LinearConstraint], h,
                tol: float = ACTIVITY_TOL, strict_margin: float = 0.0) -> FeasibilityReport:
    """Report value, satisfaction and activity of each constraint at ``h``.

    Activity is judged on the normalized constraint: ``|g - F| <= tol``.
    A strict constraint sitting on its boundary counts as satisfied but is
    flagged ``approximate`` (the supremum is approached, not attained).
    """
    if not isinstance(cs, ConstraintSet):
        cs = ConstraintSet(tuple(cs))
    h = _as_vector(h)
    out = []
    for k, c in enumerate(cs):
        value = evaluate(c, h)
        nc = normalize(c)
        slack = evaluate(nc, h) - nc.bound
        active = abs(slack) <= tol
        approximate = False
        rel = nc.relation
        if rel is Relation.EQUAL:
            satisfied = active
        elif rel is Relation.GREATER_EQUAL:
            satisfied = slack >= -tol
        elif active:
            # on the boundary up to rounding: the supremum is not attained
            satisfied, approximate = True, True
        else:
            satisfied = slack > strict_margin
        out.append(ConstraintStatus(c.name or f"C{k + 1}", value, bool(satisfied),
                                    bool(active), approximate))
    return FeasibilityReport(tuple(out))


def constraint(coeffs: Sequence[float], relation="=", bound: float = 0.0,
               name: str = "") -> LinearConstraint:
    """Shorthand constructor accepting the relation as text."""
    if isinstance(relation, str):
        relation = Relation.parse(relation)
    return LinearConstraint(np.asarray(coeffs, dtype=float), bound, relation, name)


__all__ = [
    "ACTIVITY_TOL", "ConstraintError", "Relation", "LinearConstraint", "ConstraintSet",
    "ConstraintStatus", "FeasibilityReport", "evaluate", "orient", "normalize",
    "feasibility", "constraint",
]
