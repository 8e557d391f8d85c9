import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from astrocity.builders import (
    AnalysisSpec,
    DegenerateGeometry,
    DuplicateUnitId,
    FeatureBuilder,
    InvalidEnum,
    MissingAttribute,
    SpaceSolidInput,
    TargetNotFound,
    TargetTypeNotAllowed,
    UnitInput,
    grid_from_center,
    mean_elevation,
)
from astrocity.crs import MARS_EQC, MOON_ALBERS, MOON_SOUTH_POLAR, forward
from astrocity.dem import DemGrid
from astrocity.geometry import (
    DegenerateHeight,
    Polygon2,
    SolidMesh,
    buffer_point,
    check_watertight,
    extrude,
    point_in_polygon,
    polygon_area,
    solid_volume,
)
from astrocity.model import new_document
from astrocity.validator import solid_mesh_of, validate

UNIT = Polygon2.rectangle(0, 0, 1, 1)
JEZERO = {"craterID": 14300, "craterName": "Jezero", "diameter": 47520.0, "approvalDate": 2007,
          "target": "Mars", "IAUID": 14300}


def builder(seed=1, z0=0.0):
    return FeatureBuilder(new_document(MARS_EQC.url), seed=seed, z0=z0)


def solid_of(b, oid):
    return solid_mesh_of(b.doc, b.doc.objects[oid].geometry[0].boundaries)


def z_range(b, oid):
    zs = [b.doc.world_vertex(i) for g in b.doc.objects[oid].geometry
          for shell in g.boundaries for s in shell for r in s for i in r]
    return min(z for _, _, z in zs), max(z for _, _, z in zs)


def flat_grid(value=-2200.0, n=40, cs=100.0, x0=-2000.0, y0=-2000.0):
    return DemGrid(n, n, cs, x0, y0, -9999.0, np.full((n, n), value))


def test_analysis_spec_invariants():
    with pytest.raises(InvalidEnum):
        AnalysisSpec("4DBuffer", 1)
    with pytest.raises(ValueError):
        AnalysisSpec("3DBuffer", 0)
    with pytest.raises(ValueError):
        AnalysisSpec("Extrusion", 5)
    with pytest.raises(ValueError):
        AnalysisSpec("BufferExtrusion", 5, extrusion_up=-1, extrusion_down=3)
    assert AnalysisSpec("Extrusion", 500, extrusion_down=500).extrusion == 500


def test_crater_keeps_attributes_verbatim():
    b = builder()
    fp = buffer_point(0, 0, 1500)
    oid = b.build_crater(fp, flat_grid(), JEZERO)
    assert oid == "14300"
    obj = b.doc.objects[oid]
    assert obj.object_type == "+SpaceCrater"
    assert obj.attributes == JEZERO
    assert obj.geometry[0].geometry_kind == "MultiSurface"
    # flat grid gives a planar surface
    zs = {b.doc.world_vertex(i)[2] for s in obj.geometry[0].boundaries for r in s for i in r}
    assert zs == {-2200.0}


def test_crater_requires_core_attributes():
    with pytest.raises(MissingAttribute):
        builder().build_crater(buffer_point(0, 0, 500), flat_grid(), {"craterID": 1, "craterName": "x"})


def test_overlapping_craters_stay_independent():
    b = builder()
    g = flat_grid()
    a = b.build_crater(buffer_point(0, 0, 900), g, {"craterID": 1, "craterName": "Shoemaker", "diameter": 1800.0})
    c = b.build_crater(buffer_point(600, 0, 500), g, {"craterID": 2, "craterName": "Tooley", "diameter": 1000.0})
    ga, gc = b.doc.objects[a].geometry, b.doc.objects[c].geometry
    assert len(ga) == len(gc) == 1 and ga[0] is not gc[0]
    assert b.doc.objects[a].parents == [] and b.doc.objects[c].parents == []


def test_surface_object():
    b = builder()
    ip = Polygon2.from_rings([(0, 0), (30, 5), (25, 20), (3, 15)])
    oid = b.build_surface_object(ip, 1, 1, {"objectName": "IP1", "objectType": "Irregular Patch"})
    assert b.doc.objects[oid].attributes["objectType"] == "Irregular Patch"
    assert z_range(b, oid) == pytest.approx((-1.0, 1.0))
    with pytest.raises(DegenerateHeight):
        b.build_surface_object(ip, 0, 0, {})
    unit = b.build_surface_object(UNIT, 1, 0, {})
    assert solid_volume(solid_of(b, unit)) == pytest.approx(1.0)


def test_plan_units():
    b = builder()
    mine = b.build_plan_unit(UNIT, "mining", underground=500, flat=True)
    attrs = b.doc.objects[mine].attributes
    assert attrs["planUseType"] == "mining" and attrs["undergroundDepth"] == 500
    assert b.doc.objects[mine].geometry[0].geometry_kind == "MultiSurface"
    settle = b.build_plan_unit(Polygon2.rectangle(0, 0, 10, 10), "settlement", 50, 50)
    assert z_range(b, settle) == pytest.approx((-50.0, 50.0))
    with pytest.raises(ValueError):
        b.build_plan_unit(UNIT, "")


def test_scientific_evidence():
    b = builder()
    psr = b.build_scientific_evidence(UNIT, AnalysisSpec("Extrusion", 25, extrusion_up=25, extrusion_down=25),
                                      "waterIce")
    assert b.doc.objects[psr].attributes["evidenceType"] == "waterIce"
    assert b.doc.objects[psr].attributes["legalObjectID"] == psr
    hp = b.build_scientific_evidence(UNIT, AnalysisSpec("BufferExtrusion", 1, extrusion_up=2.5, extrusion_down=2.5),
                                     "astrobiological")
    assert b.doc.objects[hp].attributes["evidenceType"] == "astrobiological"
    assert z_range(b, hp) == pytest.approx((-2.5, 2.5))
    with pytest.raises(InvalidEnum):
        b.build_scientific_evidence(UNIT, AnalysisSpec("Extrusion", 1, extrusion_up=1), "magnetic")


def test_protected_area_from_landing_site():
    b = FeatureBuilder(new_document(MOON_ALBERS.url), seed=3)
    site = forward(MOON_ALBERS, 20.19106, 30.77228)
    oid = b.build_protected_area(site, 5, 1, 1, "A17 LM")
    assert b.doc.objects[oid].attributes["areaName"] == "A17 LM"
    fp = b.footprints[oid].polygon
    assert point_in_polygon(fp, site)
    assert polygon_area(fp) == pytest.approx(np.pi * 25, rel=2e-3)
    plain = b.build_protected_area(UNIT, 0, 1, 1, "square")
    assert solid_volume(solid_of(b, plain)) == pytest.approx(2.0)
    with pytest.raises(DegenerateGeometry):
        b.build_protected_area(site, 0, 1, 1, "bare")


def test_restriction_settlement_3dbuffer():
    b = builder()
    pu = b.build_plan_unit(Polygon2.rectangle(0, 0, 100, 100), "settlement", 50, 50)
    r = b.build_restriction(pu, AnalysisSpec("3DBuffer", 50), "settlement")
    attrs = b.doc.objects[r].attributes
    assert attrs["restrictionAnalysisType"] == "3DBuffer"
    assert attrs["restrictionValue"] == 50
    assert attrs["restrictionUnit"] == "metre"
    assert attrs["relatedObjectID"] == pu
    assert z_range(b, r) == pytest.approx((-100.0, 100.0))


def test_restriction_home_plate_and_landing_site():
    b = builder()
    hp = b.build_scientific_evidence(UNIT, AnalysisSpec("BufferExtrusion", 1, extrusion_up=2.5, extrusion_down=2.5),
                                     "astrobiological")
    r = b.build_restriction(hp, AnalysisSpec("3DBuffer", 250, extrusion_up=25, extrusion_down=25), "scientific")
    assert b.doc.objects[r].attributes["restrictionValue"] == 250
    assert b.doc.objects[r].attributes["restrictionType"] == "scientific"
    pa = b.build_protected_area((0.0, 0.0), 5, 1, 1, "A11 LM")
    r2 = b.build_restriction(pa, AnalysisSpec("BufferExtrusion", 75, extrusion_up=25, extrusion_down=25),
                             "historicalSite")
    assert b.doc.objects[r2].attributes["restrictionValue"] == 75
    assert z_range(b, r2) == pytest.approx((-25.0, 25.0))


def test_restriction_errors():
    b = builder()
    crater = b.build_crater(buffer_point(0, 0, 500), flat_grid(), {"craterID": 9, "craterName": "c", "diameter": 1.0})
    with pytest.raises(TargetNotFound):
        b.build_restriction("ghost", AnalysisSpec("3DBuffer", 1), "scientific")
    # craters are surface objects, so a restriction may point at one
    assert b.build_restriction(crater, AnalysisSpec("3DBuffer", 1), "scientific")
    pu = b.build_plan_unit(UNIT, "mining")
    with pytest.raises(InvalidEnum):
        b.build_restriction(pu, AnalysisSpec("3DBuffer", 1), "tourism")
    bid, _ = b.build_building(SpaceSolidInput("b1"))
    with pytest.raises(TargetTypeNotAllowed):
        b.build_restriction(bid, AnalysisSpec("3DBuffer", 1), "settlement")


def test_legal_space():
    b = builder()
    mine = b.build_plan_unit(UNIT, "mining", underground=500, flat=True)
    legal = b.build_legal_space(mine, AnalysisSpec("Extrusion", 500, extrusion_down=500))
    attrs = b.doc.objects[legal].attributes
    assert attrs["relatedObjectID"] == mine and attrs["legalObjectID"] == legal
    assert z_range(b, legal) == pytest.approx((-500.0, 0.0))
    crater = b.build_crater(buffer_point(0, 0, 500), flat_grid(), {"craterID": 9, "craterName": "c", "diameter": 1.0})
    with pytest.raises(TargetTypeNotAllowed):
        b.build_legal_space(crater, AnalysisSpec("3DBuffer", 1))
    with pytest.raises(TargetNotFound):
        b.build_legal_space("ghost", AnalysisSpec("3DBuffer", 1))


def test_building_and_unit():
    b = builder()
    unit = UnitInput("0pNy6pOyf7JPmXRLgxs3sW", {"unitUseType": "laboratory"},
                     Polygon2.rectangle(0, 0, 20, 12), 0.0, 4.0)
    bid, units = b.build_building(SpaceSolidInput("building1", {"buildingID": "B-1"}, (unit,)))
    assert bid == "building1" and units == ["0pNy6pOyf7JPmXRLgxs3sW"]
    assert b.doc.objects[units[0]].parents == ["building1"]
    assert b.doc.objects["building1"].children == units
    legal = b.build_legal_space(units[0], AnalysisSpec("3DBuffer", 0.001))
    assert b.doc.objects[legal].attributes["relatedObjectID"] == units[0]


def test_building_variants():
    b = builder()
    bid, units = b.build_building(SpaceSolidInput("empty"))
    assert units == [] and b.doc.objects[bid].children == []
    with pytest.raises(DuplicateUnitId):
        b.build_building(SpaceSolidInput("b2", units=(UnitInput("u", footprint=UNIT, z_high=1),
                                                      UnitInput("u", footprint=UNIT, z_high=1))))
    with pytest.raises(DegenerateGeometry):
        b.build_building(SpaceSolidInput("b3", units=(UnitInput("v"),)))
    solid = extrude(Polygon2.rectangle(5, 5, 8, 9), 0, 3)
    env = extrude(Polygon2.rectangle(0, 0, 10, 10), 0, 10)
    bid, units = b.build_building(SpaceSolidInput("b4", units=(UnitInput("w", solid=solid),), envelope=env))
    assert solid_volume(solid_of(b, bid)) == pytest.approx(1000.0)
    assert solid_volume(solid_of(b, "w")) == pytest.approx(36.0)


def test_grid_from_center():
    sq = grid_from_center(MOON_SOUTH_POLAR, -88.76, -232.0, 4500)
    assert polygon_area(sq) == pytest.approx(20_250_000.0)
    cx = sum(x for x, _ in sq.exterior) / 4
    cy = sum(y for _, y in sq.exterior) / 4
    assert (cx, cy) == pytest.approx(forward(MOON_SOUTH_POLAR, -88.76, -232.0))
    unit = grid_from_center(MOON_ALBERS, MOON_ALBERS.lat_origin, MOON_ALBERS.lon_origin, 1)
    assert polygon_area(unit) == pytest.approx(1.0)
    assert sorted(unit.exterior)[0] == pytest.approx((MOON_ALBERS.false_easting - 0.5,
                                                      MOON_ALBERS.false_northing - 0.5))
    with pytest.raises(ValueError):
        grid_from_center(MOON_ALBERS, 0, 0, 0)


def test_mean_elevation():
    g = flat_grid(12.0)
    assert mean_elevation(g, Polygon2.rectangle(-500, -500, 500, 500)) == 12.0


def test_ids_are_seeded():
    a, c = builder(seed=5), builder(seed=5)
    assert [a.new_id() for _ in range(3)] == [c.new_id() for _ in range(3)]
    assert a.new_id() != builder(seed=6).new_id()


def test_every_builder_solid_is_watertight_and_valid():
    b = builder()
    pu = b.build_plan_unit(Polygon2.rectangle(0, 0, 100, 100), "settlement", 50, 50)
    b.build_restriction(pu, AnalysisSpec("3DBuffer", 50), "settlement")
    b.build_surface_object(Polygon2.from_rings([(0, 0), (30, 5), (25, 20), (3, 15)]), 1, 1, {})
    pa = b.build_protected_area((500.0, 500.0), 5, 1, 1, "site")
    b.build_restriction(pa, AnalysisSpec("BufferExtrusion", 75, extrusion_up=25, extrusion_down=25), "historicalSite")
    unit = UnitInput("u1", {}, Polygon2.rectangle(0, 0, 20, 12), 0.0, 4.0)
    b.build_building(SpaceSolidInput("bld", {}, (unit,)))
    b.build_legal_space("u1", AnalysisSpec("3DBuffer", 0.001))
    solids = 0
    for oid, obj in b.doc.objects.items():
        for g in obj.geometry:
            if g.geometry_kind == "Solid":
                solids += 1
                assert check_watertight(solid_mesh_of(b.doc, g.boundaries)) == [], oid
    assert solids == 8
    assert [i for i in validate(b.doc) if i.severity == "error"] == []


@settings(max_examples=40, deadline=None)
@given(st.floats(1.0, 200.0), st.floats(1.0, 200.0), st.floats(0.5, 100.0), st.floats(1.0, 50.0))
def test_restriction_contains_its_target(w, h, r, t):
    b = builder()
    pu = b.build_plan_unit(Polygon2.rectangle(0, 0, w, h), "settlement", t, t)
    rid = b.build_restriction(pu, AnalysisSpec("3DBuffer", r), "settlement")
    outer = b.footprints[rid]
    for x, y in b.footprints[pu].polygon.exterior:
        assert point_in_polygon(outer.polygon, (x, y))
    assert outer.z_low < -t and outer.z_high > t
    assert check_watertight(solid_of(b, rid)) == []


def test_custom_envelope_must_be_closed():
    s = extrude(UNIT, 0, 1)
    broken = SolidMesh((s.outer[1:],))
    b = builder()
    b.build_building(SpaceSolidInput("b", envelope=broken))
    assert "SOLID_OPEN" in {i.code for i in validate(b.doc)}
