import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from locagen.geometry import (
    ArrayGeometry,
    GeometryError,
    Medium,
    SourcePosition,
    apply_placement_jitter,
    azimuth_deg,
    doa_from_tdoa,
    pair_count,
    quantization_floor,
    true_toa,
)

GEO = ArrayGeometry.equilateral(0.1)
coord = st.floats(-200, 200, allow_nan=False)


def test_equilateral_layout():
    m = GEO.mic_positions
    assert np.allclose(m[0], [0, 0])
    assert np.allclose(m[1], [0.1, 0])
    assert np.allclose(m[2], [0.05, 0.1 * math.sqrt(3) / 2])
    assert np.allclose(GEO.pair_distances(), 0.1)


def test_circumcenter_source_gives_equal_toas():
    c = GEO.circumcenter()
    toa = true_toa(GEO, Medium(), SourcePosition(*c))
    assert np.ptp(toa) < 1e-15


def test_unit_toa():
    toa = true_toa(GEO, Medium(343.0), SourcePosition(343.0, 0.0))
    assert toa[0] == pytest.approx(1.0, abs=1e-15)


def test_toa_differences_match_exact_arithmetic():
    # exact rational distances squared, square root taken in high precision
    src = SourcePosition(100.0, 0.0)
    toa = true_toa(GEO, Medium(343.0), src)
    from decimal import Decimal, getcontext
    getcontext().prec = 50
    dist = []
    for mx, my in GEO.mic_positions:
        dx, dy = Fraction(src.x) - Fraction(float(mx)), Fraction(src.y) - Fraction(float(my))
        d2 = dx * dx + dy * dy
        dist.append((Decimal(d2.numerator) / Decimal(d2.denominator)).sqrt())
    for i in (1, 2):
        exact = float((dist[i] - dist[0]) / Decimal(343))
        assert abs((toa[i] - toa[0]) - exact) < 1e-12


def test_doa_examples():
    assert doa_from_tdoa(0.0, 0.1, 343.0) == 0.0
    assert doa_from_tdoa(0.05 / 343, 0.1, 343.0) == pytest.approx(30.0, abs=1e-9)
    assert doa_from_tdoa(0.1 / 343, 0.1, 343.0) == pytest.approx(90.0, abs=1e-9)


@given(st.floats(-0.1 / 343, 0.1 / 343))
def test_doa_is_odd(tau):
    assert doa_from_tdoa(-tau, 0.1, 343.0) == -doa_from_tdoa(tau, 0.1, 343.0)


def test_quantization_floor_examples():
    assert quantization_floor(343, 48000) == pytest.approx(343 / 48000)
    assert 7.1e-3 < quantization_floor(343, 48000) < 7.2e-3
    assert quantization_floor(343, 10000) == pytest.approx(0.0343)
    assert quantization_floor(343, 20000) * 2 == quantization_floor(343, 10000)


@given(st.floats(1, 2000), st.floats(1, 1e7))
def test_quantization_floor_times_fs(c, fs):
    assert math.isclose(quantization_floor(c, fs) * fs, c, rel_tol=2.3e-16)


def test_pair_count():
    assert [pair_count(n) for n in (2, 3, 10)] == [1, 3, 45]
    with pytest.raises(GeometryError):
        pair_count(1)


def test_jitter_zero_and_bound_and_determinism():
    assert np.array_equal(apply_placement_jitter(GEO, 0.0, 5).mic_positions, GEO.mic_positions)
    for seed in range(50):
        g = apply_placement_jitter(GEO, 0.001, seed)
        assert np.all(np.hypot(*(g.mic_positions - GEO.mic_positions).T) <= 0.001)
    a = apply_placement_jitter(GEO, 0.001, 7).mic_positions
    b = apply_placement_jitter(GEO, 0.001, 7).mic_positions
    assert np.array_equal(a, b)


@given(coord, coord)
def test_tdoa_bounded_by_spacing(x, y):
    if min(np.hypot(*(GEO.mic_positions - [x, y]).T)) < 1e-9:
        return
    med = Medium()
    toa = true_toa(GEO, med, SourcePosition(x, y))
    d = GEO.pair_distances()
    assert abs(toa[1] - toa[0]) <= 0.1 / med.speed_of_sound * (1 + 1e-9)
    assert abs(toa[2] - toa[0]) <= 0.1 / med.speed_of_sound * (1 + 1e-9)
    assert d.shape == (3,)


@given(st.floats(0.5, 500), st.floats(0, 359.999))
def test_azimuth_round_trip(r, theta):
    src = SourcePosition.polar(r, theta)
    got = src.azimuth(GEO)
    diff = abs((got - theta + 180) % 360 - 180)
    assert diff < 1e-9


def test_azimuth_range_and_wrap():
    az = azimuth_deg(np.array([1.0, 0.0, -1.0, 1.0]), np.array([0.0, 1.0, 0.0, -1e-18]))
    assert np.all((az >= 0) & (az < 360))
    assert az[0] == 0 and az[1] == 90 and az[2] == 180 and az[3] == 0


def test_temperature_model():
    assert Medium.from_temperature(20.0).speed_of_sound == pytest.approx(331.3 + 0.606 * 20)
    with pytest.raises(GeometryError):
        Medium(-1.0)


def test_degenerate_geometry_rejected():
    with pytest.raises(GeometryError):
        ArrayGeometry.equilateral(0.0)
