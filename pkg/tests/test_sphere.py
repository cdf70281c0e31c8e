import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from opfsets.sphere import (Cap, GeodesicSegment, InfeasibleShrinkError,
                            OutOfHemisphereError, arc_normal, cap_area,
                            from_polar, geodesic_distance, gnomonic_project,
                            gnomonic_project_batch, gnomonic_unproject, is_unit,
                            lune_half_angle, point_arc_distance_range,
                            sample_uniform, sample_uniform_batch,
                            spherical_polygon_area, tangent_basis, to_polar,
                            unit_vector)

angles = st.floats(0.0, math.pi, allow_nan=False)
azimuths = st.floats(0.0, 2.0 * math.pi, exclude_max=True, allow_nan=False)


def test_unit_vector_normalizes():
    v = unit_vector(3.0, 4.0, 0.0)
    assert np.allclose(v, [0.6, 0.8, 0.0])
    with pytest.raises(ValueError):
        unit_vector(0.0, 0.0, 0.0)


@given(angles, azimuths)
@settings(max_examples=200)
def test_polar_round_trip(theta, phi):
    v = from_polar(theta, phi)
    assert is_unit(v)
    t2, p2 = to_polar(v)
    # arccos conditioning near the poles limits theta recovery to ~sqrt(eps)
    assert abs(t2 - theta) < 1e-7
    assert np.allclose(v, from_polar(t2, p2), atol=1e-7)
    # phi is unrecoverable at the poles
    if 1e-9 < theta < math.pi - 1e-9:
        dphi = (p2 - phi) % (2.0 * math.pi)
        assert min(dphi, 2.0 * math.pi - dphi) < 1e-9


def test_geodesic_distance_basics():
    e1, e3 = unit_vector(1, 0, 0), unit_vector(0, 0, 1)
    assert geodesic_distance(e1, e1) == 0.0
    assert abs(geodesic_distance(e1, e3) - math.pi / 2) < 1e-15
    assert abs(geodesic_distance(e1, -e1) - math.pi) < 1e-15


@given(angles, azimuths, angles, azimuths)
@settings(max_examples=200)
def test_distance_symmetry_and_triangle(t1, p1, t2, p2):
    u, v = from_polar(t1, p1), from_polar(t2, p2)
    w = unit_vector(0.3, -0.2, 0.93)
    duv = geodesic_distance(u, v)
    assert duv == geodesic_distance(v, u)
    assert duv <= geodesic_distance(u, w) + geodesic_distance(w, v) + 1e-12


def test_cap_area_values():
    assert cap_area(0.0) == 0.0
    assert abs(cap_area(math.pi) - 4.0 * math.pi) < 1e-14
    # a quarter-circle cap covers half the double-cap fraction 1 - 1/sqrt(2)
    assert abs(cap_area(math.pi / 4) / (4 * math.pi) - (1 - 0.5**0.5) / 2) < 1e-15
    with pytest.raises(ValueError):
        cap_area(-0.1)


def test_cap_contains():
    cap = Cap(np.array([0.0, 0.0, 1.0]), math.pi / 4)
    assert cap.contains(from_polar(0.7, 1.0))
    assert not cap.contains(from_polar(math.pi / 4, 1.0))  # open disc
    assert not cap.contains(from_polar(2.0, 0.0))


def test_segment_interpolation_endpoints():
    a, b = unit_vector(1, 0, 0), unit_vector(0, 1, 0)
    seg = GeodesicSegment(a, b)
    assert np.allclose(seg.point_at(0.0), a)
    assert np.allclose(seg.point_at(1.0), b)
    mid = seg.point_at(0.5)
    assert abs(geodesic_distance(a, mid) - seg.length() / 2) < 1e-12


def test_tangent_basis_orientation():
    for c in (unit_vector(0, 0, 1), unit_vector(1, 1, 1), unit_vector(0, -1, 0)):
        e1, e2 = tangent_basis(c)
        assert abs(e1 @ e2) < 1e-12
        assert abs(e1 @ c) < 1e-12
        assert np.allclose(np.cross(e1, e2), c)


@given(angles.filter(lambda t: t < 1.2), azimuths)
@settings(max_examples=200)
def test_gnomonic_round_trip(theta, phi):
    center = unit_vector(0, 0, 1)
    p = from_polar(theta, phi)
    x, y = gnomonic_project(center, p)
    q = gnomonic_unproject(center, x, y)
    # arccos resolution limits recovered distances to ~sqrt(eps)
    assert np.allclose(p, q, atol=1e-12)
    assert geodesic_distance(p, q) < 1e-7


def test_gnomonic_rejects_far_points():
    center = unit_vector(0, 0, 1)
    with pytest.raises(OutOfHemisphereError):
        gnomonic_project(center, unit_vector(1, 0, 0))
    with pytest.raises(OutOfHemisphereError):
        gnomonic_project_batch(center, np.array([[0.0, 0.0, -1.0]]))


def test_gnomonic_maps_arcs_to_lines():
    center = unit_vector(0, 0, 1)
    a, b = from_polar(0.8, 0.3), from_polar(0.6, 2.0)
    seg = GeodesicSegment(a, b)
    pa = np.array(gnomonic_project(center, a))
    pb = np.array(gnomonic_project(center, b))
    for t in (0.25, 0.5, 0.75):
        pm = np.array(gnomonic_project(center, seg.point_at(t)))
        cross = (pb - pa)[0] * (pm - pa)[1] - (pb - pa)[1] * (pm - pa)[0]
        assert abs(cross) < 1e-9


def test_lune_half_angle():
    # at the equator the rotation equals the shrink itself
    assert abs(lune_half_angle(0.01, math.pi / 2) - math.asin(math.sin(0.01))) < 1e-15
    assert lune_half_angle(0.0, 1.0) == 0.0
    with pytest.raises(InfeasibleShrinkError):
        lune_half_angle(0.2, 0.1)
    with pytest.raises(ValueError):
        lune_half_angle(0.1, 0.0)


def test_octant_triangle_area():
    tri = [unit_vector(1, 0, 0), unit_vector(0, 1, 0), unit_vector(0, 0, 1)]
    assert abs(spherical_polygon_area(tri) - math.pi / 2) < 1e-12


def test_polygon_area_rejects_hemisphere_spill():
    quad = [unit_vector(1, 0, 0), unit_vector(0, 1, 0),
            unit_vector(-1, 0.001, 0), unit_vector(0, -1, 0)]
    with pytest.raises(ValueError):
        spherical_polygon_area(quad)


def test_uniform_sampling_moments():
    rng = np.random.default_rng(7)
    pts = sample_uniform_batch(rng, 200_000)
    assert np.allclose(np.linalg.norm(pts, axis=1), 1.0, atol=1e-12)
    # all three coordinates have mean 0 and variance 1/3
    assert np.abs(pts.mean(axis=0)).max() < 0.01
    assert np.abs((pts**2).mean(axis=0) - 1.0 / 3.0).max() < 0.01
    single = sample_uniform(rng)
    assert is_unit(single)


def test_point_arc_distance_range_matches_sampling():
    rng = np.random.default_rng(3)
    for _ in range(50):
        a, b = sample_uniform(rng), sample_uniform(rng)
        if geodesic_distance(a, b) > 3.0:
            continue
        p = sample_uniform(rng)
        seg = GeodesicSegment(a, b)
        ds = [geodesic_distance(p, seg.point_at(t))
              for t in np.linspace(0.0, 1.0, 400)]
        lo, hi = point_arc_distance_range(p, a, b)
        assert lo <= min(ds) + 1e-9
        assert hi >= max(ds) - 1e-9
        # 400-point sampling resolves the extremes to ~1e-3
        assert abs(lo - min(ds)) < 1e-3
        assert abs(hi - max(ds)) < 1e-3


def test_arc_normal_degenerate():
    a = unit_vector(1, 0, 0)
    with pytest.raises(ValueError):
        arc_normal(a, a)
