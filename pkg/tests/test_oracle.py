import math

import numpy as np
import pytest

from leakcap import Channel, constraint, mutual_information
from leakcap.oracle import (
    blahut_arimoto,
    constrained_brute_force,
    default_resolution,
    project_feasible,
    project_simplex,
    simplex_grid,
)
from leakcap.constraints import ConstraintSet

from conftest import random_channel


@pytest.mark.parametrize("n", [2, 3, 5, 8])
def test_ba_identity(n):
    res = blahut_arimoto(Channel.from_rows(np.eye(n)))
    assert res.capacity_bits == pytest.approx(math.log2(n), abs=1e-9)


def test_ba_threaded(threaded):
    res = blahut_arimoto(threaded, tol=1e-10)
    assert res.capacity_bits == pytest.approx(0.1542, abs=1e-4)
    np.testing.assert_allclose(res.argmax, (0.4836, 0.5164), atol=1e-3)
    # consistent with lambda0 = 0.8931 through d (1 - lambda0)
    assert res.capacity_bits == pytest.approx((1 - 0.8931) / math.log(2), abs=1e-3)


def test_ba_identical_columns():
    res = blahut_arimoto(Channel.from_rows([[0.1, 0.6, 0.3]] * 4))
    assert res.capacity_bits == pytest.approx(0.0, abs=1e-12)


def test_ba_gap_certified():
    ch = random_channel(np.random.default_rng(0), 5, 4)
    res = blahut_arimoto(ch, tol=1e-7)
    assert res.gap < 1e-7


def test_ba_rejects_bad_tol(threaded):
    with pytest.raises(ValueError):
        blahut_arimoto(threaded, tol=0)


def test_brute_force_onion(onion):
    res = constrained_brute_force(onion, [constraint((1, -1, 0, 0), ">=")], resolution=0.002, mode="grid")
    assert abs(res.capacity_bits - 1.3576) <= 2e-3
    assert res.argmax[0] >= res.argmax[1]


def test_brute_force_unique_point():
    ch = Channel.from_rows([[0.7, 0.3], [0.2, 0.8], [0.5, 0.5]])
    cs = [constraint((1, 0, 0), "=", 0.2), constraint((0, 1, 0), "=", 0.5)]
    expected = mutual_information(ch, [0.2, 0.5, 0.3])
    for mode in ("grid", "ascent"):
        res = constrained_brute_force(ch, cs, mode=mode)
        assert res.capacity_bits == pytest.approx(expected, abs=1e-9)
        np.testing.assert_allclose(res.argmax, [0.2, 0.5, 0.3], atol=1e-9)


def test_brute_force_infeasible():
    ch = Channel.from_rows(np.eye(2))
    res = constrained_brute_force(ch, [constraint((1, 0), ">=", 1.5)])
    assert not res.feasible and res.argmax is None


def test_grid_limited_to_four_inputs():
    with pytest.raises(ValueError):
        constrained_brute_force(Channel.from_rows(np.eye(5)), mode="grid")


def test_constraints_cannot_raise_capacity():
    rng = np.random.default_rng(7)
    for _ in range(30):
        ch = random_channel(rng, 3, 3)
        f = rng.normal(size=3)
        cs = [constraint(f, ">=", float(f @ rng.dirichlet(np.ones(3))))]
        ba = blahut_arimoto(ch).capacity_bits
        assert constrained_brute_force(ch, cs).capacity_bits <= ba + 1e-9


def test_oracles_are_deterministic():
    ch = random_channel(np.random.default_rng(8), 5, 4)
    cs = [constraint((1, -1, 0, 0, 0), ">=")]
    a = constrained_brute_force(ch, cs, mode="ascent", seed=3)
    b = constrained_brute_force(ch, cs, mode="ascent", seed=3)
    assert a.capacity_bits == b.capacity_bits
    np.testing.assert_array_equal(a.argmax, b.argmax)
    assert blahut_arimoto(ch).capacity_bits == blahut_arimoto(ch).capacity_bits


def test_ascent_matches_ba_without_constraints():
    ch = random_channel(np.random.default_rng(9), 6, 4)
    res = constrained_brute_force(ch, mode="ascent")
    assert res.capacity_bits == pytest.approx(blahut_arimoto(ch).capacity_bits, abs=1e-6)


def test_simplex_grid():
    g = simplex_grid(3, 4)
    assert len(g) == math.comb(6, 2)
    np.testing.assert_allclose(g.sum(axis=1), 1.0)
    assert len(simplex_grid(4, 10)) == math.comb(13, 3)
    assert default_resolution(3) == 1 / 500 and default_resolution(4) == 1 / 100


def test_projection():
    p = project_simplex(np.array([0.5, 0.9, -0.2]))
    np.testing.assert_allclose(p, [0.3, 0.7, 0.0])
    cs = ConstraintSet((constraint((1, -1, 0), ">=", 0.0),))
    x = project_feasible(np.array([0.1, 0.9, 0.0]), cs)
    assert x[0] >= x[1] - 1e-9 and abs(x.sum() - 1) < 1e-9 and x.min() >= -1e-9
