import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from locagen.geometry import ArrayGeometry, Medium, SourcePosition, true_toa
from locagen.locate import (
    LocateError,
    MultilaterationProblem,
    localize_pipeline,
    multilaterate,
    multilaterate_batch,
    objective,
    objective_gradient,
)
from locagen.models import circular_error
from oracles import objective_gradient_fd

GEO = ArrayGeometry.equilateral(0.1)
MED = Medium()


def exact_problem(src, geo=GEO):
    t = true_toa(geo, MED, src)
    return MultilaterationProblem(geo, MED, t[1] - t[0], t[2] - t[0])


def ang_diff(a, b):
    return abs((a - b + 180.0) % 360.0 - 180.0)


def test_objective_zero_at_truth_and_symmetry():
    src = SourcePosition(12.0, -40.0)
    assert objective(exact_problem(src), src.x, src.y) < 1e-24
    c = GEO.circumcenter()
    assert objective(MultilaterationProblem(GEO, MED, 0.0, 0.0), *c) < 1e-30


@given(st.floats(-80, 80), st.floats(-80, 80), st.floats(-3e-4, 3e-4), st.floats(-3e-4, 3e-4))
def test_gradient_matches_central_differences(x, y, t21, t31):
    if min(math.hypot(x - mx, y - my) for mx, my in GEO.mic_positions) < 0.5:
        return
    p = MultilaterationProblem(GEO, MED, t21, t31)
    g = objective_gradient(p, x, y)
    fd = objective_gradient_fd(p, x, y)
    scale = max(np.max(np.abs(fd)), 1e-15)
    assert np.max(np.abs(g - fd)) / scale <= 1e-6


@given(st.floats(-0.5, 0.5).map(lambda v: v) , st.floats(0, 360, exclude_max=True))
def test_objective_non_negative(u, az):
    p = MultilaterationProblem(GEO, MED, u * 1e-4, -u * 2e-4)
    s = SourcePosition.polar(30.0, az)
    assert objective(p, s.x, s.y) >= 0


@pytest.mark.parametrize("az", [0, 17, 30, 90, 133.3, 180, 245, 300, 359])
def test_recovers_azimuth_at_50m(az):
    src = SourcePosition.polar(50.0, az)
    est = multilaterate(exact_problem(src))
    assert ang_diff(est.azimuth, az) < 0.5


def test_zero_tdoa_points_along_circumcenter_ray():
    est = multilaterate(MultilaterationProblem(GEO, MED, 0.0, 0.0))
    c = GEO.circumcenter()
    ray = math.degrees(math.atan2(c[1], c[0]))
    assert ang_diff(est.azimuth, ray) < 1e-6
    assert est.residual < 1e-18


def test_refinement_never_worse_than_grid():
    rng = np.random.default_rng(0)
    tau = rng.uniform(-2.9e-4, 2.9e-4, (300, 2))
    out = multilaterate_batch(GEO, MED, tau)
    assert np.all(out["residual"] <= out["grid_best"])


# directions of the mic0-mic1 and mic0-mic2 axes; along them the two
# hyperbola intersections merge into a double root
PAIR_AXES = (0.0, 60.0, 180.0, 240.0)


def off_axis(az, margin=2.0):
    return min(ang_diff(az, a) for a in PAIR_AXES) > margin


@settings(max_examples=25)
@given(st.floats(5, 140), st.floats(0, 360, exclude_max=True), st.floats(-180, 180))
def test_rotation_equivariance(r, az, phi):
    if not off_axis(az):
        return
    src = SourcePosition.polar(r, az)
    base = multilaterate(exact_problem(src)).azimuth
    geo = GEO.rotated(phi, about=GEO.reference)
    rot = multilaterate(exact_problem(SourcePosition.polar(r, az + phi), geo)).azimuth
    assert ang_diff(rot, base + phi) < 1e-6


@settings(max_examples=25)
@given(st.floats(5, 140), st.floats(0, 360, exclude_max=True))
def test_swapping_mics_two_and_three(r, az):
    src = SourcePosition.polar(r, az)
    p = exact_problem(src)
    m = GEO.mic_positions
    swapped = GEO.with_positions(m[[0, 2, 1]])
    q = MultilaterationProblem(swapped, MED, p.tau31, p.tau21)
    a, b = multilaterate(p), multilaterate(q)
    assert ang_diff(a.azimuth, b.azimuth) < 1e-6
    assert math.hypot(a.x - b.x, a.y - b.y) <= 1e-6 * max(1.0, r)


def test_far_field_flags_range():
    est = multilaterate(exact_problem(SourcePosition.polar(400.0, 70.0)))
    assert est.range_unreliable


def test_pipeline_pass_through_and_errors():
    p = exact_problem(SourcePosition(20.0, 30.0))
    a = localize_pipeline(GEO, MED, tdoa=(p.tau21, p.tau31))
    b = multilaterate(p)
    assert a.azimuth == b.azimuth and not a.corrected
    with pytest.raises(LocateError):
        localize_pipeline(GEO, MED)
    with pytest.raises(LocateError):
        multilaterate_batch(GEO, MED, [[np.nan, 0.0]])


def test_batch_matches_single():
    rng = np.random.default_rng(3)
    tau = rng.uniform(-2e-4, 2e-4, (20, 2))
    out = multilaterate_batch(GEO, MED, tau)
    for i in range(20):
        est = multilaterate(MultilaterationProblem(GEO, MED, *tau[i]))
        assert est.azimuth == out["azimuth"][i]


def test_exact_tdoa_errors_tiny_over_disk():
    rng = np.random.default_rng(11)
    az = rng.uniform(0, 360, 300)
    r = np.sqrt(rng.uniform(1, 100 ** 2, 300))
    tau = []
    for ri, ai in zip(r, az):
        t = true_toa(GEO, MED, SourcePosition.polar(ri, ai))
        tau.append((t[1] - t[0], t[2] - t[0]))
    out = multilaterate_batch(GEO, MED, tau)
    assert np.max(circular_error(out["azimuth"], az)) < 0.5


@pytest.mark.parametrize("az", [0.0, 60.0, 180.0, 240.0])
def test_pair_axis_double_root_precision(az):
    # at a double root the position is only determined to ~sqrt(eps)
    for phi in (0.0, 1.5, -37.0):
        geo = GEO.rotated(phi, about=GEO.reference)
        est = multilaterate(exact_problem(SourcePosition.polar(50.0, az + phi), geo))
        assert ang_diff(est.azimuth, az + phi) < 1e-2
