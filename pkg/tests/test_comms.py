import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import noise_variance, snr_db
from resbeam.comms import CommsParams, bs_noise_variance, snr, spectral_efficiency
from resbeam.errors import InvalidParameterError

SC, SP, SA = noise_variance(3, 5e8, 50), noise_variance(6, 5e8, 50), noise_variance(5, 5e8, 50)


def test_bs_noise_examples():
    assert bs_noise_variance(100, 3.99e-10, 7.97e-10, 6.33e-10) == pytest.approx(1.20e-7, rel=3e-3)
    assert bs_noise_variance(0, SC, SP, SA) == SA
    assert bs_noise_variance(0, 0, 0, 0) == 0
    with pytest.raises(InvalidParameterError):
        bs_noise_variance(-1, SC, SP, SA)


def test_snr_reference_point():
    s = snr(3e-3, 0.02, bs_noise_variance(100, SC, SP, SA), SC, 7, 5e8, 50)
    assert s == pytest.approx(snr_db(3e-3, 0.02, bs_noise_variance(100, SC, SP, SA), SC, 7, 5e8, 50),
                              rel=1e-13)
    assert s == pytest.approx(63.918050951, abs=1e-8)


def test_snr_zero_power_floor():
    assert snr(0.0, 0.02, 1e-7, SC, 7, 5e8, 50) == -math.inf
    with pytest.raises(InvalidParameterError):
        snr(-1.0, 0.02, 1e-7, SC, 7, 5e8, 50)


def test_spectral_efficiency_examples():
    assert spectral_efficiency(68, 3) == pytest.approx(math.log2(1 + 10 ** 6.5), rel=1e-15)
    assert spectral_efficiency(68, 3) == pytest.approx(21.59, abs=5e-3)
    assert spectral_efficiency(3, 3) == 1.0
    np.testing.assert_allclose(spectral_efficiency(np.array([3.0, 68.0]), 3),
                               [1.0, spectral_efficiency(68, 3)])


@given(st.floats(-50, 120), st.floats(0, 20), st.floats(1e-3, 10))
def test_spectral_efficiency_shift_and_monotone(s, d, ds):
    assert spectral_efficiency(s, d) == pytest.approx(spectral_efficiency(s - d, 0), rel=1e-12)
    assert spectral_efficiency(s + ds, d) > spectral_efficiency(s, d)


@given(st.floats(1e-9, 1), st.floats(1.01, 100), st.floats(1e-12, 1e-6))
def test_snr_monotone_in_power_and_noise(p, k, extra):
    base = snr(p, 0.02, 1e-7, SC, 7, 5e8, 50)
    assert snr(p * k, 0.02, 1e-7, SC, 7, 5e8, 50) > base
    assert snr(p, 0.02, 1e-7 + extra, SC, 7, 5e8, 50) < base
    assert snr(p, 0.02, 1e-7, SC + extra, 7, 5e8, 50) < base


def test_params_validation():
    with pytest.raises(InvalidParameterError):
        CommsParams(bs_noise="other")
