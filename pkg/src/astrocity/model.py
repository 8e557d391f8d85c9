"""In-memory CityJSON documents: quantised vertex pool, city objects, I/O and upgrade."""

from __future__ import annotations

import copy
import json
import math
import re
from dataclasses import dataclass, field

from .registry import ExtensionRegistry, builtin_registry

CURRENT_VERSION = "2.0"
SUPPORTED_VERSIONS = ("1.0", "2.0")
DEFAULT_SCALE = (0.001, 0.001, 0.001)

URL_PATTERN = re.compile(r"^https?://www\.opengis\.net/def/crs/([^/]+)/([^/]+)/([^/]+)$")
URN_PATTERN = re.compile(r"^urn:ogc:def:crs:([^:]+):([^:]*):([^:]+)$", re.IGNORECASE)

CORE_TYPES = frozenset(
    {
        "Bridge", "BridgePart", "BridgeInstallation", "BridgeConstructiveElement",
        "BridgeRoom", "BridgeFurniture", "Building", "BuildingPart",
        "BuildingInstallation", "BuildingConstructiveElement", "BuildingFurniture",
        "BuildingStorey", "BuildingRoom", "BuildingUnit", "CityFurniture",
        "CityObjectGroup", "GenericCityObject", "LandUse", "OtherConstruction",
        "PlantCover", "SolitaryVegetationObject", "TINRelief", "TransportSquare",
        "Railway", "Road", "Tunnel", "TunnelPart", "TunnelInstallation",
        "TunnelConstructiveElement", "TunnelHollowSpace", "TunnelFurniture",
        "WaterBody", "Waterway",
    }
)

# CityJSON 1.0 metadata keys that were renamed in later versions
_METADATA_RENAMES = {
    "datasetTitle": "title",
    "datasetReferenceDate": "referenceDate",
    "fileIdentifier": "identifier",
    "datasetPointOfContact": "pointOfContact",
}
_METADATA_V2_KEYS = {"geographicalExtent", "identifier", "pointOfContact", "referenceDate", "title"}


class ParseError(ValueError):
    def __init__(self, message: str, object_id: str | None = None):
        self.object_id = object_id
        prefix = f"CityObject {object_id!r}: " if object_id is not None else ""
        super().__init__(prefix + message)


class InvariantViolation(ValueError):
    pass


class UnknownType(ValueError):
    pass


class NonFiniteCoordinate(ValueError):
    pass


class AlreadyCurrent(ValueError):
    pass


@dataclass
class Transform:
    scale: tuple[float, float, float] = DEFAULT_SCALE
    translate: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        self.scale = tuple(float(s) for s in self.scale)
        self.translate = tuple(float(t) for t in self.translate)

    def quantize(self, p) -> tuple[int, int, int]:
        return tuple(round((p[k] - self.translate[k]) / self.scale[k]) for k in range(3))

    def world(self, v) -> tuple[float, float, float]:
        return tuple(v[k] * self.scale[k] + self.translate[k] for k in range(3))


@dataclass
class GeometryRecord:
    geometry_kind: str  # MultiSurface | Solid
    lod: str
    boundaries: list


@dataclass
class CityObjectRecord:
    id: str
    object_type: str
    attributes: dict = field(default_factory=dict)
    geometry: list[GeometryRecord] = field(default_factory=list)
    parents: list[str] = field(default_factory=list)
    children: list[str] = field(default_factory=list)


@dataclass
class CityDocument:
    version: str
    transform: Transform
    reference_system_url: str
    vertices: list[tuple[int, int, int]] = field(default_factory=list)
    objects: dict[str, CityObjectRecord] = field(default_factory=dict)
    extensions: dict[str, dict] = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)
    registry: ExtensionRegistry | None = field(default=None, compare=False, repr=False)
    _vertex_index: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        self._reindex()

    def _reindex(self) -> None:
        self._vertex_index = {}
        for i, v in enumerate(self.vertices):
            self._vertex_index.setdefault(tuple(v), i)

    # -- construction -----------------------------------------------------

    def declare_extension(self, registry: ExtensionRegistry) -> None:
        self.extensions[registry.extension_name] = {
            "url": registry.schema_url,
            "version": registry.extension_version,
        }
        self.registry = registry

    def known_type(self, object_type: str) -> bool:
        if object_type.startswith("+"):
            return self.registry is not None and object_type in self.registry
        return object_type in CORE_TYPES

    def add_vertex(self, p) -> int:
        if not all(math.isfinite(c) for c in p):
            raise NonFiniteCoordinate(f"non-finite coordinate {tuple(p)}")
        q = self.transform.quantize(p)
        idx = self._vertex_index.get(q)
        if idx is None:
            idx = len(self.vertices)
            self.vertices.append(q)
            self._vertex_index[q] = idx
        return idx

    def _ring_indices(self, ring) -> list[int] | None:
        idx = [self.add_vertex(p) for p in ring]
        # quantisation can merge neighbours; closing duplicates are implicit
        out = [v for i, v in enumerate(idx) if i == 0 or v != idx[i - 1]]
        while len(out) > 1 and out[0] == out[-1]:
            out.pop()
        return out if len(set(out)) >= 3 else None

    def _surface_indices(self, surface) -> list[list[int]] | None:
        rings = [self._ring_indices(r) for r in surface]
        if not rings or rings[0] is None:
            return None
        return [rings[0]] + [r for r in rings[1:] if r is not None]

    def quantize_geometry(self, kind: str, lod: str, world_boundaries) -> GeometryRecord:
        """Turn world-coordinate boundaries into an indexed geometry record.

        MultiSurface boundaries are ``[surface[ring[point]]]``; Solid ones add a
        shell level on top.
        """
        if kind == "MultiSurface":
            surfaces = [self._surface_indices(s) for s in world_boundaries]
            boundaries = [s for s in surfaces if s is not None]
        elif kind == "Solid":
            boundaries = []
            for shell in world_boundaries:
                surfaces = [self._surface_indices(s) for s in shell]
                boundaries.append([s for s in surfaces if s is not None])
        else:
            raise ValueError(f"unsupported geometry kind {kind!r}")
        return GeometryRecord(kind, str(lod), boundaries)

    def add_object(self, record: CityObjectRecord, world_geometries=()) -> str:
        """Insert ``record`` plus geometries given as ``(kind, lod, world_boundaries)``.

        Parent and child links are mirrored onto the objects they name.
        """
        if not self.known_type(record.object_type):
            raise UnknownType(f"type {record.object_type!r} is neither core nor in a declared extension")
        if record.id in self.objects:
            raise ValueError(f"duplicate object id {record.id!r}")
        for kind, lod, boundaries in world_geometries:
            record.geometry.append(self.quantize_geometry(kind, lod, boundaries))
        self.objects[record.id] = record
        for pid in record.parents:
            parent = self.objects.get(pid)
            if parent is not None and record.id not in parent.children:
                parent.children.append(record.id)
        for cid in record.children:
            child = self.objects.get(cid)
            if child is not None and record.id not in child.parents:
                child.parents.append(record.id)
        # objects added earlier may already name this one
        for other in self.objects.values():
            if other.id == record.id:
                continue
            if record.id in other.parents and other.id not in record.children:
                record.children.append(other.id)
            if record.id in other.children and other.id not in record.parents:
                record.parents.append(other.id)
        return record.id

    def rebase(self) -> None:
        """Move ``translate`` to the minimum vertex corner without changing any world coordinate."""
        if not self.vertices:
            return
        mins = [min(v[k] for v in self.vertices) for k in range(3)]
        if mins == [0, 0, 0]:
            return
        self.vertices = [tuple(v[k] - mins[k] for k in range(3)) for v in self.vertices]
        self.transform = Transform(
            self.transform.scale,
            tuple(self.transform.translate[k] + mins[k] * self.transform.scale[k] for k in range(3)),
        )
        self._reindex()

    # -- queries ----------------------------------------------------------

    def world_vertex(self, i: int) -> tuple[float, float, float]:
        return self.transform.world(self.vertices[i])

    def count_by_type(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for obj in self.objects.values():
            counts[obj.object_type] = counts.get(obj.object_type, 0) + 1
        return dict(sorted(counts.items()))


def new_document(crs_url: str, transform: Transform | None = None,
                 registry: ExtensionRegistry | None = None) -> CityDocument:
    if not crs_url:
        raise ValueError("crs_url must be non-empty")
    doc = CityDocument(CURRENT_VERSION, transform or Transform(), crs_url)
    if registry is not None:
        doc.declare_extension(registry)
    return doc


# -- index helpers ------------------------------------------------------------

def iter_rings(geom: GeometryRecord):
    """Yield ``(path, ring)`` for every ring of a geometry record."""
    if geom.geometry_kind == "MultiSurface":
        for si, surface in enumerate(geom.boundaries):
            for ri, ring in enumerate(surface):
                yield f"{si}/{ri}", ring
    elif geom.geometry_kind == "Solid":
        for hi, shell in enumerate(geom.boundaries):
            for si, surface in enumerate(shell):
                for ri, ring in enumerate(surface):
                    yield f"{hi}/{si}/{ri}", ring


def _max_index(geom: GeometryRecord) -> int:
    return max((max(ring) for _, ring in iter_rings(geom) if ring), default=-1)


# -- serialisation --------------------------------------------------------------

def _geometry_to_json(g: GeometryRecord) -> dict:
    return {"type": g.geometry_kind, "lod": g.lod, "boundaries": g.boundaries}


def document_to_dict(doc: CityDocument) -> dict:
    out: dict = {"type": "CityJSON", "version": doc.version}
    out["transform"] = {"scale": list(doc.transform.scale), "translate": list(doc.transform.translate)}
    city_objects = {}
    for oid, obj in doc.objects.items():
        # empty members are optional in CityJSON; leaving them out keeps upgrades verbatim
        entry: dict = {"type": obj.object_type}
        if obj.attributes:
            entry["attributes"] = obj.attributes
        if obj.geometry:
            entry["geometry"] = [_geometry_to_json(g) for g in obj.geometry]
        if obj.parents:
            entry["parents"] = list(obj.parents)
        if obj.children:
            entry["children"] = list(obj.children)
        city_objects[oid] = entry
    out["CityObjects"] = city_objects
    out["vertices"] = [list(v) for v in doc.vertices]
    metadata = {"referenceSystem": doc.reference_system_url}
    metadata.update(doc.metadata)
    out["metadata"] = metadata
    if doc.extensions:
        out["extensions"] = {k: dict(v) for k, v in doc.extensions.items()}
    out.update(doc.extra)
    return out


def check_writable(doc: CityDocument) -> None:
    if doc.version not in SUPPORTED_VERSIONS:
        raise InvariantViolation(f"unsupported version {doc.version!r}")
    if not all(s > 0 for s in doc.transform.scale):
        raise InvariantViolation("transform scale must be positive")
    if doc.version == CURRENT_VERSION and not URL_PATTERN.match(doc.reference_system_url):
        raise InvariantViolation(f"reference system {doc.reference_system_url!r} is not an OGC URL")
    n = len(doc.vertices)
    for obj in doc.objects.values():
        for g in obj.geometry:
            if _max_index(g) >= n:
                raise InvariantViolation(f"object {obj.id!r} references a vertex beyond {n - 1}")


def write_document(doc: CityDocument, indent: int | None = None) -> str:
    check_writable(doc)
    separators = (",", ":") if indent is None else None
    return json.dumps(document_to_dict(doc), indent=indent, separators=separators, ensure_ascii=False)


def _require(cond, message, object_id=None):
    if not cond:
        raise ParseError(message, object_id)


def _parse_geometry(raw, oid) -> GeometryRecord:
    _require(isinstance(raw, dict), "geometry entries must be objects", oid)
    kind = raw.get("type")
    _require(kind in ("MultiSurface", "CompositeSurface", "Solid"), f"unsupported geometry type {kind!r}", oid)
    if kind == "CompositeSurface":
        kind = "MultiSurface"
    lod = raw.get("lod")
    _require(lod is not None, "geometry without lod", oid)
    lod = f"{lod:g}" if isinstance(lod, (int, float)) and not isinstance(lod, bool) else str(lod)
    boundaries = raw.get("boundaries")
    depth = 3 if kind == "MultiSurface" else 4

    def check(node, level):
        _require(isinstance(node, list), "boundaries must be nested arrays", oid)
        if level == 1:
            for v in node:
                _require(isinstance(v, int) and not isinstance(v, bool) and v >= 0,
                         f"vertex index {v!r} is not a non-negative integer", oid)
        else:
            for child in node:
                check(child, level - 1)

    check(boundaries, depth)
    return GeometryRecord(kind, lod, boundaries)


def document_from_dict(data: dict, strict: bool = True,
                       registry: ExtensionRegistry | None = None) -> CityDocument:
    _require(isinstance(data, dict) and data.get("type") == "CityJSON", "not a CityJSON document")
    version = str(data.get("version", ""))
    if strict:
        _require(version in SUPPORTED_VERSIONS, f"unsupported CityJSON version {version!r}")

    raw_t = data.get("transform")
    if raw_t is not None:
        _require(
            isinstance(raw_t, dict) and len(raw_t.get("scale", [])) == 3 and len(raw_t.get("translate", [])) == 3,
            "transform needs 3 scale and 3 translate values",
        )
        transform = Transform(tuple(raw_t["scale"]), tuple(raw_t["translate"]))
    else:
        transform = None

    raw_vertices = data.get("vertices", [])
    _require(isinstance(raw_vertices, list), "vertices must be an array")
    if transform is None:
        # uncompressed input: quantise to the default millimetre grid
        transform = Transform()
        world = [tuple(float(c) for c in v) for v in raw_vertices]
        if world:
            transform = Transform(DEFAULT_SCALE, tuple(min(v[k] for v in world) for k in range(3)))
        vertices = [transform.quantize(v) for v in world]
    else:
        vertices = []
        for v in raw_vertices:
            _require(isinstance(v, list) and len(v) == 3, f"bad vertex {v!r}")
            vertices.append(tuple(int(c) for c in v))

    metadata = dict(data.get("metadata") or {})
    crs = metadata.pop("referenceSystem", None) or data.get("referenceSystem") or ""

    objects: dict[str, CityObjectRecord] = {}
    raw_objects = data.get("CityObjects", {})
    _require(isinstance(raw_objects, dict), "CityObjects must be an object")
    n = len(vertices)
    for oid, raw in raw_objects.items():
        _require(isinstance(raw, dict) and isinstance(raw.get("type"), str), "missing type", oid)
        geoms = [_parse_geometry(g, oid) for g in raw.get("geometry", []) or []]
        if strict:
            for g in geoms:
                top = _max_index(g)
                _require(top < n, f"vertex index {top} out of range (document has {n} vertices)", oid)
        objects[oid] = CityObjectRecord(
            oid,
            raw["type"],
            dict(raw.get("attributes") or {}),
            geoms,
            list(raw.get("parents") or []),
            list(raw.get("children") or []),
        )

    extensions = {k: dict(v) for k, v in (data.get("extensions") or {}).items()}
    known = {"type", "version", "transform", "vertices", "metadata", "CityObjects", "extensions",
             "referenceSystem"}
    extra = {k: v for k, v in data.items() if k not in known}

    doc = CityDocument(version, transform, crs, vertices, objects, extensions, metadata, extra)
    if registry is not None:
        doc.registry = registry
    else:
        builtin = builtin_registry()
        if builtin.extension_name in extensions:
            doc.registry = builtin
    return doc


def read_document(text: str, strict: bool = True,
                  registry: ExtensionRegistry | None = None) -> CityDocument:
    """Parse CityJSON text.

    With ``strict`` the document must have a supported version and in-range
    vertex indices; otherwise such problems are left for the validator.
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return document_from_dict(data, strict=strict, registry=registry)


# -- upgrade ---------------------------------------------------------------------

def urn_to_url(urn: str) -> str:
    """``urn:ogc:def:crs:EPSG::7415`` -> ``https://www.opengis.net/def/crs/EPSG/0/7415``."""
    if URL_PATTERN.match(urn):
        return urn
    m = URN_PATTERN.match(urn.strip())
    if not m:
        raise ValueError(f"unrecognised reference system {urn!r}")
    authority, version, code = m.groups()
    return f"https://www.opengis.net/def/crs/{authority}/{version or '0'}/{code}"


def upgrade_document(doc: CityDocument) -> CityDocument:
    if doc.version == CURRENT_VERSION:
        raise AlreadyCurrent("document is already CityJSON 2.0")
    if doc.version != "1.0":
        raise ValueError(f"cannot upgrade from version {doc.version!r}")

    metadata: dict = {}
    extended: dict = {}
    for key, value in doc.metadata.items():
        key = _METADATA_RENAMES.get(key, key)
        (metadata if key in _METADATA_V2_KEYS else extended)[key] = value
    extra = dict(doc.extra)
    if extended:
        extra["+metadata-extended"] = {**extra.get("+metadata-extended", {}), **extended}

    url = urn_to_url(doc.reference_system_url) if doc.reference_system_url else ""
    upgraded = CityDocument(
        CURRENT_VERSION,
        Transform(doc.transform.scale, doc.transform.translate),
        url,
        list(doc.vertices),
        copy.deepcopy(doc.objects),
        {k: dict(v) for k, v in doc.extensions.items()},
        metadata,
        extra,
    )
    upgraded.registry = doc.registry
    return upgraded
