import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from leakcap.constraints import (
    ConstraintError,
    ConstraintSet,
    LinearConstraint,
    Relation,
    constraint,
    evaluate,
    feasibility,
    normalize,
)

ONION_H1 = np.array([0.1735, 0.1603, 0.3902, 0.2760])
ONION_H2 = np.array([0.2868, 0.0029, 0.3979, 0.3125])


@pytest.mark.parametrize("coeffs, h, expected, tol", [
    ((1, -1, 0, 0), ONION_H1, 0.0132, 1e-12),
    ((1, 1, 1, 1), ONION_H1, 1.0, 1e-12),
    ((1, -100, 0, 0), ONION_H2, -0.0032, 1e-3),
])
def test_evaluate(coeffs, h, expected, tol):
    assert evaluate(constraint(coeffs, ">="), h) == pytest.approx(expected, abs=tol)


def test_evaluate_dimension_mismatch():
    with pytest.raises(ConstraintError, match="4 coefficients.*3 entries"):
        evaluate(constraint((1, -1, 0, 0)), [0.2, 0.3, 0.5])


def test_zero_coefficients_rejected():
    with pytest.raises(ConstraintError):
        LinearConstraint(np.zeros(3))


def test_relation_parsing():
    assert Relation.parse("==") is Relation.EQUAL
    assert Relation.parse(">") is Relation.STRICTLY_GREATER
    with pytest.raises(ConstraintError):
        Relation.parse("=>")


def test_mixed_sizes_rejected():
    with pytest.raises(ConstraintError):
        ConstraintSet((constraint((1, 0)), constraint((1, 0, 0))))


# -- feasibility ----------------------------------------------------------------

def test_onion_first_constraint_satisfied_and_inactive():
    rep = feasibility([constraint((1, -1, 0, 0), ">=")], ONION_H1)
    assert rep.satisfied and not rep[0].active and not rep.approximate


def test_simplex_equality_is_active():
    rep = feasibility([constraint((1, 1, 1, 1), "=", 1.0)], [0.1, 0.2, 0.3, 0.4])
    assert rep.satisfied and rep.active_indices() == [0]


def test_strict_boundary_is_flagged_approximate():
    # the reference prior is rounded to 4 decimals, so the boundary is only
    # reached within ~3e-5 on the normalized scale
    rep = feasibility([constraint((1, -100, 0, 0), ">")], ONION_H2, tol=1e-4)
    assert rep[0].active and rep[0].satisfied and rep[0].approximate
    assert rep.approximate


def test_strict_boundary_up_to_rounding():
    rep = feasibility([constraint((1, -1), ">")], [0.5 + 1e-17, 0.5])
    assert rep[0].active and rep[0].approximate


def test_strict_interior_is_not_approximate():
    rep = feasibility([constraint((1, -1), ">")], [0.6, 0.4])
    assert rep.satisfied and not rep.approximate and not rep[0].active


def test_strict_margin():
    c = [constraint((1, -1), ">")]
    assert feasibility(c, [0.6, 0.4], strict_margin=0.1).satisfied
    assert not feasibility(c, [0.6, 0.4], strict_margin=0.3).satisfied


def test_violation_detected():
    rep = feasibility([constraint((1, -1), ">=")], [0.3, 0.7])
    assert not rep.satisfied


# -- normalize ------------------------------------------------------------------

def test_normalize_flips_less_equal():
    c = normalize(constraint((1, -1), "<="))
    assert c.relation is Relation.GREATER_EQUAL
    np.testing.assert_array_equal(c.coeffs, [-1, 1])
    assert c.bound == 0.0


def test_normalize_rescales():
    c = normalize(constraint((1, -100, 0, 0), ">"))
    assert c.relation is Relation.STRICTLY_GREATER
    np.testing.assert_allclose(c.coeffs, [0.01, -1, 0, 0])
    assert c.bound == 0.0


def test_normalize_keeps_normalized_constraint():
    c = constraint((0.5, -1.0, 0.25), ">=", 0.1)
    n = normalize(c)
    np.testing.assert_array_equal(n.coeffs, c.coeffs)
    assert n.bound == c.bound and n.relation is c.relation


relations = st.sampled_from(["=", ">=", ">", "<=", "<"])
coeff_vectors = st.lists(st.floats(-50, 50, allow_nan=False), min_size=2, max_size=5).filter(
    lambda v: max(abs(x) for x in v) > 1e-3)


@settings(max_examples=300)
@given(coeff_vectors, st.floats(-5, 5, allow_nan=False), relations)
def test_normalize_idempotent(coeffs, bound, rel):
    once = normalize(constraint(coeffs, rel, bound))
    twice = normalize(once)
    np.testing.assert_array_equal(once.coeffs, twice.coeffs)
    assert once.bound == twice.bound and once.relation is twice.relation
    assert np.max(np.abs(once.coeffs)) == pytest.approx(1.0)
    assert once.relation in (Relation.EQUAL, Relation.GREATER_EQUAL, Relation.STRICTLY_GREATER)


@settings(max_examples=300)
@given(coeff_vectors, st.floats(-2, 2, allow_nan=False), st.sampled_from([">=", ">", "<=", "<"]),
       st.integers(0, 2**32 - 1))
def test_normalize_preserves_truth_value(coeffs, bound, rel, seed):
    c = constraint(coeffs, rel, bound)
    nc = normalize(c)
    h = np.random.default_rng(seed).dirichlet(np.ones(len(coeffs)))
    raw = evaluate(c, h)
    slack = evaluate(nc, h) - nc.bound
    # skip draws within rounding distance of the boundary
    if abs(raw - bound) < 1e-9 * max(1.0, np.max(np.abs(coeffs))):
        return
    assert c.holds(raw) == nc.holds(slack + nc.bound)


@settings(max_examples=200)
@given(coeff_vectors, st.floats(-2, 2, allow_nan=False), st.integers(0, 2**32 - 1))
def test_active_implies_satisfied(coeffs, bound, seed):
    h = np.random.default_rng(seed).dirichlet(np.ones(len(coeffs)))
    for e in feasibility([constraint(coeffs, ">=", bound)], h):
        assert not e.active or e.satisfied
