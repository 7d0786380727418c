import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import hemisphere_directivity, patch_shape
from resbeam.errors import DegenerateGeometryError, InvalidParameterError
from resbeam.geometry import (ISOTROPIC, AntennaPattern, CarrierSpec, build_planar_array,
                              element_gain, link_geometry, pair_geometry, subarrays)

LAM = CarrierSpec().wavelength


def test_grid_extent_40x40():
    a = build_planar_array(40, 40, 0.005)
    assert a.size == 1600
    span = a.element_positions.max(axis=0) - a.element_positions.min(axis=0)
    np.testing.assert_allclose(span[:2], [0.195, 0.195], rtol=1e-12)
    assert span[2] == 0


def test_single_element_at_origin():
    a = build_planar_array(1, 1, 0.01, pattern=AntennaPattern(ISOTROPIC, 1.0))
    np.testing.assert_array_equal(a.element_positions, [[0.0, 0.0, 0.0]])


def test_half_wavelength_aperture_is_about_20cm():
    a = build_planar_array(40, 40, LAM / 2)
    xs = a.element_positions[:, 0]
    # element cells reach half a pitch beyond the outermost centers
    assert xs.min() - LAM / 4 == pytest.approx(-0.1, abs=1e-3)
    assert xs.max() + LAM / 4 == pytest.approx(0.1, abs=1e-3)


def test_bad_grid_rejected():
    with pytest.raises(InvalidParameterError):
        build_planar_array(0, 3, 0.01)
    with pytest.raises(InvalidParameterError):
        build_planar_array(2, 2, -1.0)
    with pytest.raises(InvalidParameterError):
        build_planar_array(2, 2, 0.01, normal=(0, 0, 2))


@pytest.mark.parametrize("rows,cols", [(4, 4), (3, 5), (6, 2)])
def test_grid_point_symmetry(rows, cols):
    a = build_planar_array(rows, cols, 0.01, center=(0.1, -0.2, 0.3))
    rel = a.element_positions - a.center
    mirrored = np.sort(np.round(-rel, 12), axis=0)
    np.testing.assert_allclose(np.sort(np.round(rel, 12), axis=0), mirrored, atol=1e-12)


def test_mt_facing_bs_frame():
    mt = build_planar_array(2, 2, 0.01, (0, 0, 2), (0, 0, -1))
    np.testing.assert_allclose(mt.u_axis, [1, 0, 0])
    np.testing.assert_allclose(np.cross(mt.u_axis, mt.v_axis), mt.normal)


def test_subarrays_partition():
    a = build_planar_array(4, 6, 0.01)
    parts = subarrays(a, 2, 2)
    assert len(parts) == 4 and all(p.size == 6 for p in parts)
    got = np.sort(np.round(np.vstack([p.element_positions for p in parts]), 12), axis=0)
    np.testing.assert_allclose(got, np.sort(np.round(a.element_positions, 12), axis=0))
    with pytest.raises(InvalidParameterError):
        subarrays(a, 3, 4)


def test_microstrip_peak_is_pi():
    assert element_gain(AntennaPattern(), 0.0, 0.3) == pytest.approx(math.pi, rel=1e-15)


@given(st.floats(0, 2 * math.pi))
def test_boresight_gain_independent_of_azimuth(phi):
    assert element_gain(AntennaPattern(), 0.0, phi) == pytest.approx(math.pi, rel=1e-14)


@given(st.floats(0, math.pi), st.floats(0, 2 * math.pi))
def test_isotropic_constant(theta, phi):
    assert element_gain(AntennaPattern(ISOTROPIC, 1.0), theta, phi) == 1.0


def test_microstrip_60deg_against_hemisphere_integration():
    g = element_gain(AntennaPattern(), math.radians(60), 0.0)
    ratio = hemisphere_directivity(math.radians(60), 0.0) / hemisphere_directivity(0.0, 0.0)
    assert g == pytest.approx(math.pi * ratio, rel=1e-9)
    assert g == pytest.approx(0.13709250903917797, rel=1e-12)


@given(st.floats(0, math.pi / 2), st.floats(0, 2 * math.pi))
def test_microstrip_matches_reference_shape(theta, phi):
    expected = math.pi * patch_shape(theta, phi)
    assert element_gain(AntennaPattern(), theta, phi) == pytest.approx(expected, rel=1e-9, abs=1e-15)


def test_microstrip_rolloff_and_back_plane():
    g = AntennaPattern()
    for phi in (0.0, math.pi / 2):
        edge = element_gain(g, math.radians(89.0), phi)
        assert 10 * math.log10(max(edge, 1e-300) / math.pi) <= -15
    assert element_gain(g, math.radians(120), 0.0) == 0.0
    th = np.linspace(0, math.pi / 2, 50)
    assert np.all(np.diff(element_gain(g, th, 0.0)) <= 1e-15)


def test_boresight_pair():
    tx = build_planar_array(1, 1, 0.01)
    rx = build_planar_array(1, 1, 0.01, (0, 0, 2), (0, 0, -1))
    L, (tt, _), (tr, _) = link_geometry(tx, 0, rx, 0)
    assert L == pytest.approx(2.0, rel=1e-15)
    assert tt == pytest.approx(0.0, abs=1e-12) and tr == pytest.approx(0.0, abs=1e-12)


def test_offset_pair_trigonometry():
    tx = build_planar_array(1, 1, 0.01)
    rx = build_planar_array(1, 1, 0.01, (0.5, 0, 2), (0, 0, -1))
    L, (tt, _), (tr, _) = link_geometry(tx, 0, rx, 0)
    assert L == pytest.approx(math.sqrt(4.25), rel=1e-14)
    assert tt == pytest.approx(math.atan(0.25), rel=1e-12)
    assert tr == pytest.approx(math.atan(0.25), rel=1e-12)


def test_coincident_elements_rejected():
    a = build_planar_array(2, 2, 0.01)
    with pytest.raises(DegenerateGeometryError):
        pair_geometry(a, a)


@settings(max_examples=50)
@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(0.1, 5))
def test_link_distance_symmetric(x, y, z):
    a = build_planar_array(1, 1, 0.01)
    b = build_planar_array(1, 1, 0.01, (x, y, z), (0, 0, -1))
    assert link_geometry(a, 0, b, 0)[0] == pytest.approx(link_geometry(b, 0, a, 0)[0], rel=1e-15)
