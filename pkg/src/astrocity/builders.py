"""Construct 3DSpace features in a CityDocument.

Each ``build_*`` method turns a planar footprint (or a DEM) into one
extension object, records the footprint it was made from, and wires
``relatedObjectID`` or parent/child links to other objects.
"""

from __future__ import annotations

import random
import uuid
from dataclasses import dataclass, field

import numpy as np
import shapely
from shapely.geometry import MultiPoint
from shapely.geometry import Polygon as ShapelyPolygon

from . import dem as dem_mod
from .crs import ProjectionSpec, forward
from .geometry import (
    InvalidPolygon,
    Polygon2,
    SolidMesh,
    buffer2d,
    buffer_point,
    clip_bbox,
    extrude,
    points_in_polygon,
    polygon_from_shapely,
)
from .model import CityDocument, CityObjectRecord, iter_rings
from .registry import ExtensionRegistry, builtin_registry

ANALYSIS_TYPES = ("2DBuffer", "3DBuffer", "Extrusion", "BufferExtrusion")
DEFAULT_LOD = "1"


class MissingAttribute(ValueError):
    pass


class InvalidEnum(ValueError):
    pass


class TargetNotFound(KeyError):
    pass


class TargetTypeNotAllowed(ValueError):
    pass


class DuplicateUnitId(ValueError):
    pass


class DegenerateGeometry(ValueError):
    pass


@dataclass(frozen=True)
class AnalysisSpec:
    """How a logical space is derived from a footprint.

    ``value`` is the buffer distance for buffer analyses and the recorded
    amount for plain extrusions.
    """

    analysis: str
    value: float = 0.0
    unit: str = "metre"
    extrusion_up: float = 0.0
    extrusion_down: float = 0.0

    def __post_init__(self):
        if self.analysis not in ANALYSIS_TYPES:
            raise InvalidEnum(f"restrictionAnalysisType {self.analysis!r} not in {ANALYSIS_TYPES}")
        if self.extrusion_up < 0 or self.extrusion_down < 0:
            raise ValueError("extrusion distances must be non-negative")
        if self.uses_buffer and not self.value > 0:
            raise ValueError(f"{self.analysis} needs a positive buffer value")
        if self.analysis in ("Extrusion", "BufferExtrusion") and not self.extrusion > 0:
            raise ValueError(f"{self.analysis} needs a positive extrusion")

    @property
    def uses_buffer(self) -> bool:
        return self.analysis in ("2DBuffer", "3DBuffer", "BufferExtrusion")

    @property
    def extrusion(self) -> float:
        return self.extrusion_up + self.extrusion_down


@dataclass(frozen=True)
class UnitInput:
    unit_id: str
    attributes: dict = field(default_factory=dict)
    footprint: Polygon2 | None = None
    z_low: float = 0.0
    z_high: float = 0.0
    solid: SolidMesh | None = None


@dataclass(frozen=True)
class SpaceSolidInput:
    building_id: str
    building_attrs: dict = field(default_factory=dict)
    units: tuple[UnitInput, ...] = ()
    envelope: SolidMesh | None = None


@dataclass(frozen=True)
class Footprint:
    """Planar outline and vertical extent an object was built from."""

    polygon: Polygon2
    z_low: float
    z_high: float


def _solid_boundaries(s: SolidMesh):
    return [[[list(ring) for ring in surface] for surface in shell] for shell in s.shells]


def _flat_boundaries(p: Polygon2, z: float):
    return [[[(x, y, z) for x, y in ring] for ring in p.rings()]]


def grid_from_center(spec: ProjectionSpec, lat: float, lon: float, side: float) -> Polygon2:
    """Axis-aligned square of ``side`` metres centred on the projected point."""
    if not side > 0:
        raise ValueError("side must be positive")
    x, y = forward(spec, lat, lon)
    h = side / 2.0
    return Polygon2.rectangle(x - h, y - h, x + h, y + h)


def mean_elevation(grid: dem_mod.DemGrid, footprint: Polygon2) -> float:
    """Mean of the non-nodata cells whose centres fall inside ``footprint``."""
    sub = dem_mod.clip(grid, clip_bbox(footprint))
    rows, cols = np.indices(sub.values.shape)
    xs = sub.xll + (cols + 0.5) * sub.cellsize
    ys = sub.yll + (sub.nrows - rows - 0.5) * sub.cellsize
    inside = points_in_polygon(footprint, xs.ravel(), ys.ravel()).reshape(xs.shape) & ~sub.mask
    if not inside.any():
        raise dem_mod.EmptyResult("no DEM cell centre inside the footprint")
    return float(sub.values[inside].mean())


class FeatureBuilder:
    """Adds extension features to one document; not safe for concurrent use."""

    def __init__(self, doc: CityDocument, registry: ExtensionRegistry | None = None,
                 seed: int | None = None, z0: float = 0.0, lod: str = DEFAULT_LOD,
                 segments_per_quadrant: int = 16):
        self.doc = doc
        self.registry = registry or doc.registry or builtin_registry()
        if self.registry.extension_name not in doc.extensions:
            doc.declare_extension(self.registry)
        doc.registry = self.registry
        self.rng = random.Random(seed) if seed is not None else None
        self.z0 = z0
        self.lod = lod
        self.segments = segments_per_quadrant
        self.footprints: dict[str, Footprint] = {}

    # -- helpers -------------------------------------------------------------

    def new_id(self) -> str:
        if self.rng is None:
            return str(uuid.uuid4())
        return str(uuid.UUID(int=self.rng.getrandbits(128), version=4))

    def _add(self, object_id, object_type, attributes, geometries, footprint=None, parents=()):
        record = CityObjectRecord(object_id, object_type, dict(attributes), parents=list(parents))
        self.doc.add_object(record, geometries)
        if footprint is not None:
            self.footprints[object_id] = footprint
        return object_id

    def _prism(self, polygon: Polygon2, z_low: float, z_high: float):
        solid = extrude(polygon, z_low, z_high)
        return ("Solid", self.lod, _solid_boundaries(solid)), Footprint(polygon, z_low, z_high)

    def _volume(self, polygon: Polygon2, spec: AnalysisSpec, z_low: float, z_high: float, z0: float):
        """Geometry for ``spec`` applied to a footprint occupying ``[z_low, z_high]``."""
        if spec.analysis == "Extrusion":
            return self._prism(polygon, z0 - spec.extrusion_down, z0 + spec.extrusion_up)
        grown = buffer2d(polygon, spec.value, self.segments)
        if spec.analysis == "BufferExtrusion":
            return self._prism(grown, z0 - spec.extrusion_down, z0 + spec.extrusion_up)
        if spec.analysis == "3DBuffer":
            if spec.extrusion > 0:
                z_low, z_high = z0 - spec.extrusion_down, z0 + spec.extrusion_up
            return self._prism(grown, z_low - spec.value, z_high + spec.value)
        # 2DBuffer: flat outline unless an extrusion is requested
        if spec.extrusion > 0:
            return self._prism(grown, z0 - spec.extrusion_down, z0 + spec.extrusion_up)
        geom = ("MultiSurface", self.lod, _flat_boundaries(grown, z0))
        return geom, Footprint(grown, z0, z0)

    def target_footprint(self, object_id: str) -> Footprint:
        """Footprint recorded at build time, or one recovered from stored geometry."""
        if object_id in self.footprints:
            return self.footprints[object_id]
        obj = self.doc.objects[object_id]
        points = []
        for g in obj.geometry:
            for _, ring in iter_rings(g):
                points.extend(self.doc.world_vertex(i) for i in ring)
        if not points:
            raise DegenerateGeometry(f"object {object_id!r} has no geometry to derive a footprint from")
        zs = [p[2] for p in points]
        hull = MultiPoint([(p[0], p[1]) for p in points]).convex_hull
        if not isinstance(hull, ShapelyPolygon):
            raise DegenerateGeometry(f"object {object_id!r} has a degenerate planar outline")
        fp = Footprint(polygon_from_shapely(hull), min(zs), max(zs))
        self.footprints[object_id] = fp
        return fp

    def _check_target(self, target_id: str, source_type: str):
        if target_id not in self.doc.objects:
            raise TargetNotFound(target_id)
        target_type = self.doc.objects[target_id].object_type
        allowed = self.registry.allowed_related_targets(source_type)
        if not any(target_type in self.registry and self.registry.is_a(target_type, a) for a in allowed):
            raise TargetTypeNotAllowed(
                f"{source_type} cannot relate to {target_type} (allowed: {', '.join(allowed)})"
            )

    # -- builders --------------------------------------------------------------

    def build_crater(self, footprint: Polygon2, grid: dem_mod.DemGrid, attrs: dict,
                     aggregate_factor: int = 1, object_id: str | None = None) -> str:
        missing = [k for k in ("craterID", "craterName", "diameter") if k not in attrs]
        if missing:
            raise MissingAttribute(f"crater attributes missing: {', '.join(missing)}")
        # clip first so aggregation and meshing only touch the crater's window
        clipped = dem_mod.clip(grid, clip_bbox(footprint))
        clipped = dem_mod.aggregate(clipped, aggregate_factor)
        tin = dem_mod.tin_from_grid(clipped, footprint)
        oid = object_id or str(attrs["craterID"])
        surfaces = [[list(tri)] for tri in tin.triangles]
        zs = [v[2] for v in tin.vertices()]
        return self._add(
            oid,
            "+SpaceCrater",
            attrs,
            [("MultiSurface", self.lod, surfaces)],
            Footprint(footprint, min(zs), max(zs)),
        )

    def build_surface_object(self, footprint: Polygon2, up: float, down: float, attrs: dict,
                             object_id: str | None = None, z0: float | None = None) -> str:
        z0 = self.z0 if z0 is None else z0
        geom, fp = self._prism(footprint, z0 - down, z0 + up)
        return self._add(object_id or self.new_id(), "+SpaceSurfaceObject", attrs, [geom], fp)

    def build_plan_unit(self, footprint: Polygon2, use: str, underground: float = 0.0,
                        aboveground: float = 0.0, attrs: dict | None = None, flat: bool = False,
                        object_id: str | None = None, z0: float | None = None) -> str:
        """Planned-use area; extruded over its depths unless ``flat`` or both depths are zero."""
        if not use:
            raise ValueError("plan unit use must be non-empty")
        if underground < 0 or aboveground < 0:
            raise ValueError("depths must be non-negative")
        z0 = self.z0 if z0 is None else z0
        attributes = {
            "planUseType": use,
            "punitObjectType": use,
            "undergroundDepth": underground,
            "abovegroundDepth": aboveground,
        }
        attributes.update(attrs or {})
        if not flat and (underground > 0 or aboveground > 0):
            geom, fp = self._prism(footprint, z0 - underground, z0 + aboveground)
        else:
            geom = ("MultiSurface", self.lod, _flat_boundaries(footprint, z0))
            fp = Footprint(footprint, z0, z0)
        return self._add(object_id or self.new_id(), "+SpacePlanUnit", attributes, [geom], fp)

    def _enum(self, type_name: str, attr: str, value: str) -> None:
        spec = self.registry.effective_attributes(type_name)[attr]
        if value not in spec.allowed_values:
            raise InvalidEnum(f"{attr} {value!r} not in {list(spec.allowed_values)}")

    def build_scientific_evidence(self, footprint: Polygon2, spec: AnalysisSpec, evidence: str,
                                  attrs: dict | None = None, object_id: str | None = None,
                                  z0: float | None = None) -> str:
        self._enum("+SpaceScientificEvidence", "evidenceType", evidence)
        z0 = self.z0 if z0 is None else z0
        geom, fp = self._volume(footprint, spec, z0, z0, z0)
        oid = object_id or self.new_id()
        attributes = {"evidenceType": evidence, "legalObjectID": oid, **(attrs or {})}
        return self._add(oid, "+SpaceScientificEvidence", attributes, [geom], fp)

    def build_protected_area(self, footprint_or_point, buffer: float, up: float, down: float,
                             area_name: str, attrs: dict | None = None,
                             object_id: str | None = None, z0: float | None = None) -> str:
        if buffer < 0:
            raise ValueError("buffer must be non-negative")
        z0 = self.z0 if z0 is None else z0
        if isinstance(footprint_or_point, Polygon2):
            polygon = buffer2d(footprint_or_point, buffer, self.segments)
        else:
            x, y = footprint_or_point
            if not buffer > 0:
                raise DegenerateGeometry("a point site needs a positive buffer")
            polygon = buffer_point(x, y, buffer, self.segments)
        geom, fp = self._prism(polygon, z0 - down, z0 + up)
        oid = object_id or self.new_id()
        attributes = {"areaName": area_name, "legalObjectID": oid, **(attrs or {})}
        return self._add(oid, "+SpaceProtectedArea", attributes, [geom], fp)

    def build_restriction(self, target_id: str, spec: AnalysisSpec, rtype: str,
                          attrs: dict | None = None, object_id: str | None = None,
                          z0: float | None = None) -> str:
        self._check_target(target_id, "+SpaceRestriction")
        self._enum("+SpaceRestriction", "restrictionType", rtype)
        target = self.target_footprint(target_id)
        z0 = self.z0 if z0 is None else z0
        geom, fp = self._volume(target.polygon, spec, target.z_low, target.z_high, z0)
        oid = object_id or self.new_id()
        attributes = {
            "legalObjectID": oid,
            "relatedObjectID": target_id,
            "restrictionAnalysisType": spec.analysis,
            "restrictionType": rtype,
            "restrictionUnit": spec.unit,
            "restrictionValue": spec.value,
            **(attrs or {}),
        }
        return self._add(oid, "+SpaceRestriction", attributes, [geom], fp)

    def build_legal_space(self, target_id: str, spec: AnalysisSpec, attrs: dict | None = None,
                          object_id: str | None = None, z0: float | None = None) -> str:
        self._check_target(target_id, "+SpaceLegal")
        target = self.target_footprint(target_id)
        z0 = self.z0 if z0 is None else z0
        geom, fp = self._volume(target.polygon, spec, target.z_low, target.z_high, z0)
        oid = object_id or self.new_id()
        attributes = {"legalObjectID": oid, "relatedObjectID": target_id, **(attrs or {})}
        return self._add(oid, "+SpaceLegal", attributes, [geom], fp)

    def build_building(self, data: SpaceSolidInput) -> tuple[str, list[str]]:
        ids = [u.unit_id for u in data.units]
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        if dupes or data.building_id in ids:
            raise DuplicateUnitId(f"duplicate unit ids: {', '.join(dupes or [data.building_id])}")

        unit_geoms = []
        for u in data.units:
            if u.solid is not None:
                solid = u.solid
                pts = solid.vertices()
                hull = MultiPoint([(p[0], p[1]) for p in pts]).convex_hull
                zl, zh = solid.z_range()
                fp = Footprint(polygon_from_shapely(hull), zl, zh)
                geom = ("Solid", self.lod, _solid_boundaries(solid))
            elif u.footprint is not None:
                geom, fp = self._prism(u.footprint, u.z_low, u.z_high)
            else:
                raise DegenerateGeometry(f"unit {u.unit_id!r} has neither a solid nor a footprint")
            unit_geoms.append((u, geom, fp))

        if data.envelope is not None:
            zl, zh = data.envelope.z_range()
            pts = data.envelope.vertices()
            hull = MultiPoint([(p[0], p[1]) for p in pts]).convex_hull
            b_geom = ("Solid", self.lod, _solid_boundaries(data.envelope))
            b_fp = Footprint(polygon_from_shapely(hull), zl, zh)
        elif unit_geoms:
            polys = [fp.polygon for _, _, fp in unit_geoms]
            bounds = shapely.unary_union([p.to_shapely() for p in polys]).bounds
            zl = min(fp.z_low for _, _, fp in unit_geoms)
            zh = max(fp.z_high for _, _, fp in unit_geoms)
            b_geom, b_fp = self._prism(Polygon2.rectangle(*bounds), zl, zh)
        else:
            b_geom = b_fp = None

        bid = self._add(
            data.building_id, "+SpaceBuilding", data.building_attrs, [b_geom] if b_geom else [], b_fp
        )
        unit_ids = [
            self._add(u.unit_id, "+SpaceBuildingUnit", u.attributes, [geom], fp, parents=[bid])
            for u, geom, fp in unit_geoms
        ]
        return bid, unit_ids


__all__ = [
    "AnalysisSpec",
    "DegenerateGeometry",
    "DuplicateUnitId",
    "FeatureBuilder",
    "Footprint",
    "InvalidEnum",
    "InvalidPolygon",
    "MissingAttribute",
    "SpaceSolidInput",
    "TargetNotFound",
    "TargetTypeNotAllowed",
    "UnitInput",
    "grid_from_center",
    "mean_elevation",
]
