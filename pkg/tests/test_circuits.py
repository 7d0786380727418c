import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from oracles import rapp_output
from resbeam.channel import build_channel_matrix, field_power
from resbeam.circuits import (AmplifierParams, ConjugatorParams, DividerParams, LimiterParams,
                              amplify, conjugate, divide, limit, pa_gain, pa_output_power,
                              shift_phase)
from resbeam.errors import InvalidParameterError
from resbeam.geometry import ISOTROPIC, AntennaPattern, CarrierSpec, build_planar_array

finite = st.floats(-10, 10, allow_nan=False)
fields = st.integers(1, 40).flatmap(
    lambda n: st.tuples(arrays(float, n, elements=finite), arrays(float, n, elements=finite))
).map(lambda t: t[0] + 1j * t[1])
PA = AmplifierParams()


def test_limiter_below_limit_is_identity():
    s = np.array([0.2, 0.1j, -0.05])
    out, a = limit(s, LimiterParams())
    assert a == 1.0
    np.testing.assert_array_equal(out, s)


def test_limiter_scales_to_vm():
    s = np.array([1.0, 0.5j, -0.25])
    out, a = limit(s, LimiterParams())
    assert a == pytest.approx(math.sqrt(0.2), rel=1e-15)
    assert np.abs(out).max() == pytest.approx(math.sqrt(0.2), rel=1e-15)


def test_limiter_zero_vector():
    out, a = limit(np.zeros(4, complex), LimiterParams())
    assert a == 1.0 and not np.any(out)


@given(fields, st.booleans())
def test_limiter_idempotent(s, per_element):
    p = LimiterParams(per_element=per_element)
    once, _ = limit(s, p)
    twice, a2 = limit(once, p)
    np.testing.assert_allclose(twice, once, rtol=1e-15, atol=0)
    assert np.all(np.abs(once) <= p.v_m * (1 + 1e-15))


def test_conjugator_examples():
    p = ConjugatorParams()
    assert conjugate(np.array([np.exp(1j * np.pi / 3)]), p)[0] == pytest.approx(np.exp(-1j * np.pi / 3))
    np.testing.assert_array_equal(conjugate(np.array([0.3, 2.0]), p), [0.3, 2.0])
    assert ConjugatorParams(v_LO=4.0).amplitude_gain == pytest.approx(2.0)


@given(fields)
def test_conjugation_involution(s):
    p = ConjugatorParams()
    np.testing.assert_allclose(conjugate(conjugate(s, p), p), s, rtol=1e-12, atol=1e-12)


def test_phase_shifter():
    s = np.array([1 + 2j, -0.5j])
    np.testing.assert_array_equal(shift_phase(s, 0.0), s)
    np.testing.assert_allclose(shift_phase(s, np.pi), -s, atol=1e-15)


@given(fields, st.floats(-10, 10))
def test_phase_shifter_preserves_amplitude(s, phi):
    np.testing.assert_allclose(np.abs(shift_phase(s, phi)), np.abs(s), rtol=1e-13)


def test_pa_linear_region():
    P = float(pa_output_power(1e-3, PA))
    assert P == pytest.approx(0.1, rel=1e-3)
    assert 10 * math.log10(float(pa_gain(1e-3, PA))) == pytest.approx(20.0, abs=0.01)


def test_pa_saturation():
    P = float(pa_output_power(10.0, PA))
    assert P == pytest.approx(20.0, rel=1e-3)
    assert 10 * math.log10(P * 1e3) == pytest.approx(43.0, abs=0.05)


def test_pa_zero_input():
    out, G = amplify(np.zeros(3, complex), PA)
    assert not np.any(out) and G == PA.G0


@given(st.floats(1e-12, 1e6))
def test_pa_matches_rapp_formula(P):
    assert float(pa_output_power(P, PA)) == pytest.approx(rapp_output(P, 100.0, 20.0, 3.0), rel=1e-12)


@given(st.lists(st.floats(0, 1e9), min_size=2, max_size=30))
def test_pa_monotone_and_capped(P):
    P = np.sort(np.array(P))
    out = pa_output_power(P, PA)
    g = pa_gain(P, PA)
    assert np.all(np.diff(out) >= 0)
    assert np.all(np.diff(g) <= 1e-12 * g[:-1])
    assert np.all(out < PA.P_sat * 1.01)


def test_pa_strictly_increasing_on_grid():
    P = np.logspace(-9, 1, 500)
    assert np.all(np.diff(pa_output_power(P, PA)) > 0)


@given(fields)
def test_amplify_uses_one_aggregate_gain(s):
    out, G = amplify(s, PA)
    assert G == pytest.approx(float(pa_gain(field_power(s, 50.0), PA)))
    np.testing.assert_allclose(out, np.sqrt(G) * np.exp(1j * PA.phi_a) * s, rtol=1e-14)


def test_divider_example():
    p = DividerParams()
    s = np.array([math.sqrt(2 * 50 * 1e-3)])
    fb, pay = divide(s, p)
    assert field_power(fb, 50) == pytest.approx(0.02e-3, rel=1e-13)
    assert field_power(pay, 50) == pytest.approx(0.98e-3, rel=1e-13)
    fb, pay = divide(s, DividerParams(0.5))
    assert abs(fb[0]) == pytest.approx(abs(pay[0]), rel=1e-15)


@given(fields, st.floats(0, 0.999))
def test_divider_conserves_power(s, a):
    fb, pay = divide(s, DividerParams(a))
    total = field_power(s, 50)
    assert field_power(fb, 50) + field_power(pay, 50) == pytest.approx(total, rel=1e-12, abs=1e-300)


def test_parameter_validation():
    with pytest.raises(InvalidParameterError):
        DividerParams(1.0)
    with pytest.raises(InvalidParameterError):
        LimiterParams(v_m=0.0)
    with pytest.raises(InvalidParameterError):
        AmplifierParams(P_sat=-1)


@settings(max_examples=20, deadline=None)
@given(st.integers(3, 64), st.floats(0.5, 5.0))
def test_retrodirective_coherent_gain(N, R):
    """Conjugate-and-re-emit from a ring of elements equidistant to a point source."""
    carrier = CarrierSpec()
    iso = AntennaPattern(ISOTROPIC, 1.0)
    src = build_planar_array(1, 1, 0.01, (0, 0, 0), (0, 0, 1), iso)
    ring = build_planar_array(1, N, 0.01, (0, 0, R), (0, 0, -1), iso)
    ang = 2 * np.pi * np.arange(N) / N
    r0 = 0.3 * R
    pos = np.stack([r0 * np.cos(ang), r0 * np.sin(ang), np.sqrt(R ** 2 - r0 ** 2) * np.ones(N)], 1)
    ring = replace(ring, element_positions=pos)
    up = build_channel_matrix(src, ring, carrier)[:, 0]
    back = build_channel_matrix(ring, src, carrier)[0]
    re_emitted = conjugate(up, ConjugatorParams())
    at_source = back @ re_emitted
    single = back[0] * conjugate(up[:1], ConjugatorParams())[0]
    assert abs(at_source) == pytest.approx(N * abs(single), rel=1e-9)
