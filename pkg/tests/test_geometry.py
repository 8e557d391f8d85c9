import math

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from shapely.geometry import MultiPoint

from astrocity.geometry import (
    DegenerateHeight,
    InvalidPolygon,
    Polygon2,
    SolidMesh,
    buffer2d,
    buffer3d,
    buffer_point,
    check_watertight,
    clip_bbox,
    extrude,
    point_in_polygon,
    points_in_polygon,
    polygon_area,
    polygon_from_shapely,
    polygon_perimeter,
    signed_area,
    solid_volume,
)
from astrocity.issues import codes

UNIT = Polygon2.rectangle(0, 0, 1, 1)


def square_with_hole():
    return Polygon2.from_rings([(0, 0), (10, 0), (10, 10), (0, 10)], [[(3, 3), (3, 6), (6, 6), (6, 3)]])


def test_rings_are_normalised():
    p = Polygon2.from_rings([(0, 0), (0, 1), (1, 1), (1, 0), (0, 0)])
    assert len(p.exterior) == 4
    assert signed_area(p.exterior) > 0
    h = square_with_hole()
    assert signed_area(h.holes[0]) < 0
    assert polygon_area(h) == pytest.approx(91.0)
    assert polygon_perimeter(h) == pytest.approx(52.0)


def test_invalid_polygons():
    with pytest.raises(InvalidPolygon):
        Polygon2.from_rings([(0, 0), (1, 1)])
    with pytest.raises(InvalidPolygon):
        Polygon2.from_rings([(0, 0), (2, 2), (2, 0), (0, 2)])  # bow tie


def test_signed_area_far_from_origin():
    ring = [(4.5e6 + x, 1.1e6 + y) for x, y in [(0, 0), (1e-3, 0), (1e-3, 1e-3), (0, 1e-3)]]
    assert signed_area(ring) == pytest.approx(1e-6, rel=1e-6)


def test_point_in_polygon():
    h = square_with_hole()
    assert point_in_polygon(h, (1, 1))
    assert not point_in_polygon(h, (4, 4))
    assert point_in_polygon(h, (0, 5))  # boundary counts as inside
    assert not point_in_polygon(h, (11, 5))
    mask = points_in_polygon(h, [1, 4, 11], [1, 4, 5])
    assert mask.tolist() == [True, False, False]


def test_buffer_zero_is_identity_and_point_needs_radius():
    assert buffer2d(UNIT, 0) == UNIT
    with pytest.raises(InvalidPolygon):
        buffer2d(UNIT, -1)
    with pytest.raises(InvalidPolygon):
        buffer_point(0, 0, 0)
    disc = buffer_point(5, 5, 2)
    assert polygon_area(disc) == pytest.approx(math.pi * 4, rel=2e-3)


def test_buffer_of_square_matches_formula():
    r = 2.0
    expected = 1 + 4 * r + math.pi * r * r
    assert polygon_area(buffer2d(UNIT, r)) == pytest.approx(expected, rel=0.01)


def test_extrude_volume_and_watertight():
    s = extrude(UNIT, 0, 1)
    assert solid_volume(s) == pytest.approx(1.0)
    assert check_watertight(s) == []
    h = extrude(square_with_hole(), -2, 3)
    assert solid_volume(h) == pytest.approx(91 * 5)
    assert check_watertight(h) == []


def test_extrude_requires_height():
    with pytest.raises(DegenerateHeight):
        extrude(UNIT, 1, 1)
    with pytest.raises(DegenerateHeight):
        buffer3d(UNIT, 2, 1, 1)


def test_buffer3d_grows_every_direction():
    s = buffer3d(UNIT, 0, 1, 0.5)
    assert s.z_range() == (-0.5, 1.5)
    box = clip_bbox(polygon_from_shapely(MultiPoint([v[:2] for v in s.vertices()]).convex_hull))
    assert (box.minx, box.maxx) == pytest.approx((-0.5, 1.5))
    assert check_watertight(s) == []


def test_open_prism_is_reported():
    s = extrude(UNIT, 0, 1)
    opened = SolidMesh((s.outer[1:],))
    assert "UNMATCHED_EDGE" in codes(check_watertight(opened))


def test_flipped_face_is_reported():
    s = extrude(UNIT, 0, 1)
    faces = list(s.outer)
    faces[1] = tuple(r[::-1] for r in faces[1])
    found = codes(check_watertight(SolidMesh((tuple(faces),))))
    assert "ORIENTATION" in found


def test_inverted_shell_has_negative_volume():
    s = extrude(UNIT, 0, 1)
    inverted = SolidMesh((tuple(tuple(r[::-1] for r in f) for f in s.outer),))
    assert solid_volume(inverted) == pytest.approx(-1.0)
    assert "NONPOSITIVE_VOLUME" in codes(check_watertight(inverted))


def test_non_planar_face_is_reported():
    s = extrude(UNIT, 0, 1)
    faces = list(s.outer)
    top = faces[1][0]
    bent = (top[0], top[1], (top[2][0], top[2][1], top[2][2] + 0.1), top[3])
    faces[1] = (bent,)
    assert "NON_PLANAR" in codes(check_watertight(SolidMesh((tuple(faces),))))


# -- properties ----------------------------------------------------------------

@st.composite
def simple_polygons(draw):
    """Star-shaped polygons around a random centre (always simple)."""
    n = draw(st.integers(3, 14))
    cx = draw(st.floats(-1e4, 1e4))
    cy = draw(st.floats(-1e4, 1e4))
    radii = draw(st.lists(st.floats(1.0, 500.0), min_size=n, max_size=n))
    jitter = draw(st.lists(st.floats(0.0, 0.8), min_size=n, max_size=n))
    pts = []
    for k in range(n):
        a = 2 * math.pi * (k + jitter[k]) / n
        pts.append((cx + radii[k] * math.cos(a), cy + radii[k] * math.sin(a)))
    try:
        return Polygon2.from_rings(pts)
    except InvalidPolygon:
        assume(False)


@settings(max_examples=150, deadline=None)
@given(simple_polygons(), st.floats(0.0, 200.0), st.floats(0.01, 200.0))
def test_buffer_area_is_monotone(p, r, dr):
    a1 = polygon_area(buffer2d(p, r))
    a2 = polygon_area(buffer2d(p, r + dr))
    assert a2 >= a1
    assert a1 >= polygon_area(p) * (1 - 1e-12)


@settings(max_examples=100, deadline=None)
@given(simple_polygons(), st.floats(0.5, 300.0))
def test_convex_buffer_area_formula(p, r):
    hull = polygon_from_shapely(p.to_shapely().convex_hull)
    expected = polygon_area(hull) + polygon_perimeter(hull) * r + math.pi * r * r
    assert polygon_area(buffer2d(hull, r, 16)) == pytest.approx(expected, rel=0.01)


@settings(max_examples=150, deadline=None)
@given(simple_polygons(), st.floats(-1000, 1000), st.floats(0.001, 600.0))
def test_extrusion_volume_is_area_times_height(p, z0, h):
    s = extrude(p, z0, z0 + h)
    assert solid_volume(s) == pytest.approx(polygon_area(p) * h, rel=1e-9)
    assert check_watertight(s) == []


@settings(max_examples=60, deadline=None)
@given(simple_polygons(), st.floats(0.001, 100.0))
def test_buffer3d_is_watertight(p, r):
    assert check_watertight(buffer3d(p, 0.0, 5.0, r)) == []
