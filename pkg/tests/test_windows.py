import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conelab.windows import make_windows


@pytest.fixture(scope="module")
def windows():
    return make_windows()


def test_support_is_half_to_two(windows):
    psi, phi = windows
    for w in (psi, phi):
        assert w(0.4) == 0.0
        assert w(2.1) == 0.0
        assert w(0.5) == 0.0
        assert w(2.0) == 0.0
        assert w(1.0) > 0
        assert w(-1.0) == 0.0


def test_window_is_nonnegative_and_bounded(windows):
    psi, _ = windows
    t = np.linspace(0, 3, 10_001)
    v = psi(t)
    assert np.all(v >= 0)
    assert np.all(v <= 1 + 1e-15)


@given(st.floats(1e-6, 1e6))
def test_dyadic_sum_is_one(t):
    psi, _ = make_windows()
    total = sum(float(psi(t * 2.0**l)) for l in range(-30, 31))
    assert total == pytest.approx(1.0, abs=1e-13)


@given(st.floats(0.5, 3.0))
def test_partition_holds_for_other_sharpness(s):
    psi, _ = make_windows(s)
    t = np.geomspace(1e-3, 1e3, 97)
    total = sum(psi(t * 2.0**l) for l in range(-15, 16))
    assert np.allclose(total, 1.0, atol=1e-13)


def test_derivative_is_bounded(windows):
    psi, _ = windows
    t = np.linspace(0.5, 2.0, 200_001)
    deriv = np.gradient(psi(t), t)
    assert np.max(np.abs(deriv)) < 10


def test_transform_is_negligible_past_bandwidth(windows):
    psi, _ = windows
    band = psi.bandwidth()
    t = np.linspace(0.5, 2.0, 40_001)
    dt = t[1] - t[0]
    g = psi(t)
    mag0 = np.sum(g) * dt
    for omega in (band, 1.3 * band):
        assert abs(np.sum(g * np.exp(-1j * omega * t)) * dt) < 1e-13 * mag0


def test_larger_sharpness_is_smoother():
    # the bump flattens at the edges as the sharpness grows, so fewer frequencies are needed
    assert make_windows(2.0)[0].bandwidth() < make_windows(1.0)[0].bandwidth()
