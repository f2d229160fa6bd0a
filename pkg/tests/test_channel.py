import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from leakcap import Channel, ChannelError, Prior, bits_to_nats, nats_to_bits
from leakcap.channel import (
    NATS_TO_BITS,
    entropy,
    mutual_information,
    mutual_information_nats,
    output_distribution,
)

from conftest import LN2, binary_entropy, random_channel, random_deterministic, threaded_rows

ONION_H = (0.1735, 0.1603, 0.3902, 0.2760)
THREADED_H = (0.4836, 0.5164)


# -- construction ---------------------------------------------------------------

def test_from_rows_transposes():
    ch = Channel.from_rows([[0.2, 0.8], [1.0, 0.0], [0.5, 0.5]])
    assert ch.phi.shape == (2, 3)
    assert ch.phi[1, 0] == 0.8
    np.testing.assert_allclose(ch.rows(), [[0.2, 0.8], [1.0, 0.0], [0.5, 0.5]])


def test_tiny_deviation_is_renormalized():
    ch = Channel.from_rows([[0.5, 0.5 + 1e-11], [0.0, 1.0]])
    assert abs(ch.phi[:, 0].sum() - 1.0) < 1e-15


def test_large_deviation_is_rejected_with_sum():
    with pytest.raises(ChannelError, match="1.1"):
        Channel.from_rows([[0.5, 0.6], [0.0, 1.0]])


def test_negative_entry_rejected():
    with pytest.raises(ChannelError):
        Channel.from_rows([[1.2, -0.2], [0.0, 1.0]])


def test_label_count_checked():
    with pytest.raises(ChannelError):
        Channel.from_rows([[1.0, 0.0], [0.0, 1.0]], input_labels=("a",))


def test_prior_validation():
    with pytest.raises(ChannelError):
        Prior([0.5, 0.6])
    with pytest.raises(ChannelError):
        Prior([1.5, -0.5])
    assert np.allclose(np.asarray(Prior.uniform(4)), 0.25)


def test_deterministic_flag(onion):
    assert not onion.is_deterministic()
    assert Channel.from_rows([[0, 1], [1, 0], [1, 0]]).is_deterministic()


# -- output distribution --------------------------------------------------------

def test_onion_output_of_sender3_equals_h3(onion):
    q = np.asarray(output_distribution(onion, ONION_H))
    assert q[onion.output_labels.index("(N, R)")] == pytest.approx(0.3902, abs=1e-12)


def test_identity_output():
    ch = Channel.from_rows(np.eye(2))
    np.testing.assert_allclose(np.asarray(output_distribution(ch, [0.5, 0.5])), [0.5, 0.5])


def test_threaded_output_hand_product():
    ch = Channel.from_rows(threaded_rows(1 / 3, 1 / 3))
    q = np.asarray(output_distribution(ch, THREADED_H))
    # a*h_odd + b*h_even with a = 10/27, b = 22/27
    assert q[0] == pytest.approx(10 / 27 * 0.4836 + 22 / 27 * 0.5164, abs=1e-12)
    np.testing.assert_allclose(q, [0.6, 0.4], atol=1e-3)


def test_dimension_mismatch_names_sizes(onion):
    with pytest.raises(ChannelError, match="3.*4|4.*3"):
        output_distribution(onion, [0.2, 0.3, 0.5])


# -- entropy --------------------------------------------------------------------

@pytest.mark.parametrize("h, expected", [
    ([0.25] * 4, 2.0),
    ([0.0, 1.0, 0.0], 0.0),
])
def test_entropy_trivial(h, expected):
    assert entropy(h) == pytest.approx(expected, abs=1e-15)


def test_entropy_of_onion_prior():
    assert entropy(ONION_H) == pytest.approx(1.9042, abs=1e-3)


# -- mutual information -----------------------------------------------------------

def test_identity_channel_one_bit():
    ch = Channel.from_rows(np.eye(2))
    assert mutual_information(ch, [0.5, 0.5]) == pytest.approx(1.0, abs=1e-15)


def test_identical_columns_leak_nothing():
    ch = Channel.from_rows([[0.3, 0.7]] * 3)
    assert mutual_information(ch, [0.2, 0.3, 0.5]) == pytest.approx(0.0, abs=1e-15)


def test_threaded_information_against_binary_entropies():
    a, b = 10 / 27, 22 / 27
    h_odd, h_even = THREADED_H
    q0 = a * h_odd + b * h_even
    expected = binary_entropy(q0) - h_odd * binary_entropy(a) - h_even * binary_entropy(b)
    ch = Channel.from_rows(threaded_rows(1 / 3, 1 / 3))
    assert mutual_information(ch, THREADED_H) == pytest.approx(expected, abs=1e-12)
    assert mutual_information(ch, THREADED_H) == pytest.approx(0.1542, abs=1e-3)
    assert mutual_information_nats(ch, THREADED_H) == pytest.approx(0.1069, abs=1e-3)


def test_zero_prior_entries_are_harmless():
    ch = Channel.from_rows([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    assert mutual_information(ch, [0.5, 0.5, 0.0]) == pytest.approx(1.0)


# -- units ------------------------------------------------------------------------

@pytest.mark.parametrize("nats, bits, tol", [
    (0.0, 0.0, 0.0),
    (LN2, 1.0, 1e-15),
    (0.1069, 0.1542, 1e-4),
])
def test_nats_to_bits(nats, bits, tol):
    assert nats_to_bits(nats) == pytest.approx(bits, abs=tol)


def test_conversion_constant():
    assert NATS_TO_BITS == 1 / math.log(2)


@given(st.floats(min_value=-1e6, max_value=1e6, allow_nan=False))
def test_unit_round_trip(x):
    assert abs(bits_to_nats(nats_to_bits(x)) - x) <= 1e-15 * max(1.0, abs(x))


# -- properties -------------------------------------------------------------------

def test_information_never_exceeds_prior_entropy():
    rng = np.random.default_rng(1)
    for _ in range(1000):
        n, m = rng.integers(1, 8, size=2)
        ch = random_channel(rng, n, m, sparsity=0.3)
        h = rng.dirichlet(np.ones(n) * rng.choice([0.2, 1.0, 5.0]))
        i = mutual_information(ch, h)
        assert 0.0 <= i <= entropy(h) + 1e-12
        assert i <= math.log2(min(n, m)) + 1e-12


def test_deterministic_information_is_output_entropy():
    rng = np.random.default_rng(2)
    for _ in range(300):
        n, m = rng.integers(1, 9, size=2)
        ch = random_deterministic(rng, n, m)
        h = rng.dirichlet(np.ones(n))
        q = np.asarray(output_distribution(ch, h))
        direct = -sum(x * math.log2(x) for x in q if x > 0)
        assert mutual_information(ch, h) == pytest.approx(direct, abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 6), st.integers(2, 6), st.integers(0, 2**32 - 1))
def test_permutation_invariance(n, m, seed):
    rng = np.random.default_rng(seed)
    ch = random_channel(rng, n, m, sparsity=0.2)
    h = rng.dirichlet(np.ones(n))
    order = rng.permutation(n)
    permuted = ch.permuted(order)
    assert mutual_information(permuted, h[order]) == pytest.approx(mutual_information(ch, h), abs=1e-12)
