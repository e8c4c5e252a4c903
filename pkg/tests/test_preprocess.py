import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from photonic_rl.errors import ConfigurationError, DimensionError
from photonic_rl.preprocess import (InputScaling, MaskMatrix, build_waveform, encode_state,
                                    generate_mask)

finite = st.floats(-5, 5, allow_nan=False)


def test_mask_shape_and_range():
    m = generate_mask(42, 4, 2)
    assert m.entries.shape == (3, 4)
    assert np.all(np.abs(m.entries) <= 1)


def test_mask_reproducible():
    assert np.array_equal(generate_mask(42, 4, 2).entries, generate_mask(42, 4, 2).entries)
    assert not np.array_equal(generate_mask(42, 4, 2).entries, generate_mask(43, 4, 2).entries)


def test_cartpole_mask_dimensions():
    assert generate_mask(0, 600, 4).entries.shape == (5, 600)


@pytest.mark.parametrize("N,N_s", [(0, 2), (3, 0)])
def test_mask_zero_dimension(N, N_s):
    with pytest.raises(ConfigurationError):
        generate_mask(0, N, N_s)


def test_mask_statistics():
    e = generate_mask(1, 2500, 3).entries.ravel()
    assert e.size >= 10_000
    assert abs(e.mean()) < 0.02
    assert abs(e.var() - 1 / 3) < 0.02


def test_zero_state_leaves_bias_row():
    m = generate_mask(3, 10, 4)
    u = encode_state(np.zeros(4), m, InputScaling(0.6, 0.8))
    assert np.allclose(u, 0.8 * m.bias_row)


def test_zero_scaling_gives_zero_input():
    m = generate_mask(3, 10, 4)
    assert not encode_state(np.ones(4), m, InputScaling(0.0, 0.0)).any()


def test_encode_small_example():
    m = MaskMatrix(np.array([[0.5, -0.2], [0.3, 0.7]]))
    # (1*2, 1) @ M computed by hand: (2*0.5 + 0.3, 2*-0.2 + 0.7)
    assert np.allclose(encode_state([2.0], m, InputScaling(1.0, 1.0)), [1.3, 0.3])


def test_encode_dimension_mismatch():
    with pytest.raises(DimensionError):
        encode_state(np.zeros(3), generate_mask(0, 5, 4), InputScaling())


def test_encode_matches_elementwise_expansion():
    rng = np.random.default_rng(0)
    m = generate_mask(5, 7, 3)
    s = rng.uniform(-1, 1, 3)
    mu, b = 0.6, 0.8
    expected = [mu * sum(m.entries[p, i] * s[p] for p in range(3)) + b * m.entries[3, i]
                for i in range(7)]
    assert np.allclose(encode_state(s, m, InputScaling(mu, b)), expected)


MASK = generate_mask(11, 16, 4)


@settings(max_examples=50)
@given(arrays(float, 4, elements=finite), arrays(float, 4, elements=finite), st.floats(0, 2))
def test_linearity_without_bias(s1, s2, mu):
    sc = InputScaling(mu, 0.0)
    lhs = encode_state(s1 + s2, MASK, sc)
    rhs = encode_state(s1, MASK, sc) + encode_state(s2, MASK, sc)
    assert np.allclose(lhs, rhs, atol=1e-9)


@settings(max_examples=50)
@given(arrays(float, 4, elements=finite), st.floats(0, 2), st.floats(-2, 2))
def test_bias_decomposition_and_bound(s, mu, b):
    full = encode_state(s, MASK, InputScaling(mu, b))
    parts = encode_state(s, MASK, InputScaling(mu, 0.0)) + encode_state(np.zeros(4), MASK, InputScaling(0.0, b))
    assert np.allclose(full, parts, atol=1e-9)
    assert np.all(np.abs(full) <= mu * 4 * np.abs(s).max() + abs(b) + 1e-9)


def test_waveform_interval_membership():
    w = build_waveform([1.0, 2.0, 3.0], 0.4e-9)
    assert w(0.1e-9) == 1.0
    assert w(0.5e-9) == 2.0
    assert w(1.1e-9) == 3.0
    assert w.span == pytest.approx(1.2e-9)


def test_waveform_boundaries_are_half_open():
    theta = 0.4e-9
    w = build_waveform([1.0, 2.0, 3.0], theta)
    assert w(0.0) == 1.0
    assert w(1 * theta) == 2.0
    assert w(2 * theta) == 3.0
    with pytest.raises(ValueError):
        w(3 * theta)


def test_constant_waveform():
    w = build_waveform(np.full(5, 0.3), 1.0)
    assert {w(t) for t in np.linspace(0, 4.99, 50)} == {0.3}
