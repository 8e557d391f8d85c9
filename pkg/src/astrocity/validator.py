"""Conformance checks for CityJSON documents against the core rules and the extension registry.

Issue codes
-----------
Core (``validate_core``)
    CORE_VERSION      version is not 1.0 or 2.0
    TRANSFORM_SCALE   a transform scale component is not positive
    VTX_RANGE         a boundary references a vertex that does not exist
    RING_SHORT        a ring has fewer than 3 distinct vertices
    REL_ASYMMETRY     parents/children links are missing or one-sided
    DUP_VERTEX        (warning) identical vertex triplets in the pool
    CRS_URL           a 2.0 reference system is not an OGC CRS URL

Extension (``validate_extension``)
    EXT_NOT_DECLARED  the document does not declare the registry's extension
    EXT_UNKNOWN_TYPE  a "+" type is not in the registry, or a bare type is not core
    EXT_NAME_PREFIX   an extension type is written without its "+" prefix
    ATTR_TYPE         an attribute value has the wrong JSON type
    ATTR_ENUM         an enum attribute holds a value outside its vocabulary
    ATTR_REQUIRED     a required attribute is absent
    ATTR_UNKNOWN      (warning, error when strict) attribute not defined for the type
    GEOM_REQUIRED     the type (or an ancestor) requires geometry and none is present
    REF_INTEGRITY     relatedObjectID names an object not in the document
    REF_TARGET_TYPE   relatedObjectID names an object of a type the model does not allow
    MULT_COMPOSITION  a composed child does not have exactly one parent of the owning type

Solids (``validate_solids``)
    SOLID_OPEN, SOLID_ORIENTATION, SOLID_NONPLANAR, SOLID_VOLUME
"""

from __future__ import annotations

import datetime as _dt
from collections import Counter

from .geometry import SolidMesh, check_watertight
from .issues import ERROR, WARNING, Issue
from .model import CORE_TYPES, CURRENT_VERSION, SUPPORTED_VERSIONS, URL_PATTERN, CityDocument, iter_rings
from .registry import ExtensionRegistry, builtin_registry

ISSUE_CODES = {
    "CORE_VERSION", "TRANSFORM_SCALE", "VTX_RANGE", "RING_SHORT", "REL_ASYMMETRY",
    "DUP_VERTEX", "CRS_URL", "EXT_NOT_DECLARED", "EXT_UNKNOWN_TYPE", "EXT_NAME_PREFIX",
    "ATTR_TYPE", "ATTR_ENUM", "ATTR_REQUIRED", "ATTR_UNKNOWN", "GEOM_REQUIRED",
    "REF_INTEGRITY", "REF_TARGET_TYPE", "MULT_COMPOSITION", "SOLID_OPEN",
    "SOLID_ORIENTATION", "SOLID_NONPLANAR", "SOLID_VOLUME",
}

_SOLID_CODES = {
    "UNMATCHED_EDGE": "SOLID_OPEN",
    "ORIENTATION": "SOLID_ORIENTATION",
    "NON_PLANAR": "SOLID_NONPLANAR",
    "NONPOSITIVE_VOLUME": "SOLID_VOLUME",
}


def validate_core(doc: CityDocument) -> list[Issue]:
    issues: list[Issue] = []
    if doc.version not in SUPPORTED_VERSIONS:
        issues.append(Issue("CORE_VERSION", path="version", message=f"unsupported version {doc.version!r}"))
    if not all(s > 0 for s in doc.transform.scale):
        issues.append(Issue("TRANSFORM_SCALE", path="transform.scale",
                            message=f"scale {list(doc.transform.scale)} must be positive"))
    if doc.version == CURRENT_VERSION and not URL_PATTERN.match(doc.reference_system_url or ""):
        issues.append(Issue("CRS_URL", path="metadata.referenceSystem",
                            message=f"{doc.reference_system_url!r} is not an OGC CRS URL"))

    n = len(doc.vertices)
    for oid, obj in doc.objects.items():
        for gi, geom in enumerate(obj.geometry):
            for path, ring in iter_rings(geom):
                bad = [i for i in ring if i >= n]
                if bad:
                    issues.append(Issue("VTX_RANGE", object_id=oid, path=f"geometry[{gi}]/{path}",
                                        message=f"index {bad[0]} >= vertex count {n}"))
                if len(set(ring)) < 3:
                    issues.append(Issue("RING_SHORT", object_id=oid, path=f"geometry[{gi}]/{path}",
                                        message=f"ring has {len(set(ring))} distinct vertices"))

        for pid in obj.parents:
            parent = doc.objects.get(pid)
            if parent is None:
                issues.append(Issue("REL_ASYMMETRY", object_id=oid, path="parents",
                                    message=f"parent {pid!r} does not exist"))
            elif oid not in parent.children:
                issues.append(Issue("REL_ASYMMETRY", object_id=oid, path="parents",
                                    message=f"parent {pid!r} does not list this object as a child"))
        for cid in obj.children:
            child = doc.objects.get(cid)
            if child is None:
                issues.append(Issue("REL_ASYMMETRY", object_id=oid, path="children",
                                    message=f"child {cid!r} does not exist"))
            elif oid not in child.parents:
                issues.append(Issue("REL_ASYMMETRY", object_id=oid, path="children",
                                    message=f"child {cid!r} does not list this object as a parent"))

    dupes = [v for v, c in Counter(map(tuple, doc.vertices)).items() if c > 1]
    if dupes:
        issues.append(Issue("DUP_VERTEX", WARNING, path="vertices",
                            message=f"{len(dupes)} duplicated vertex triplets"))
    return issues


def _is_date(value) -> bool:
    if not isinstance(value, str):
        return False
    try:
        _dt.date.fromisoformat(value)
    except ValueError:
        return False
    return True


def _type_ok(kind: str, value) -> bool:
    if kind in ("string", "enum"):
        return isinstance(value, str)
    if kind == "number":
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    if kind == "integer":
        return isinstance(value, int) and not isinstance(value, bool)
    if kind == "date-string":
        return _is_date(value)
    return False


def validate_extension(doc: CityDocument, registry: ExtensionRegistry | None = None,
                       strict: bool = False) -> list[Issue]:
    registry = registry or builtin_registry()
    if registry.extension_name not in doc.extensions:
        return [Issue("EXT_NOT_DECLARED", path="extensions",
                      message=f"extension {registry.extension_name!r} is not declared")]

    issues: list[Issue] = []
    unknown_severity = ERROR if strict else WARNING
    for oid, obj in doc.objects.items():
        t = obj.object_type
        if t not in registry:
            if not t.startswith("+") and ("+" + t) in registry:
                issues.append(Issue("EXT_NAME_PREFIX", object_id=oid, path="type",
                                    message=f"extension type must be written '+{t}'"))
            elif t.startswith("+") or t not in CORE_TYPES:
                issues.append(Issue("EXT_UNKNOWN_TYPE", object_id=oid, path="type",
                                    message=f"type {t!r} is not defined by the extension or core"))
            continue

        spec = registry.effective_attributes(t)
        for name, value in obj.attributes.items():
            a = spec.get(name)
            if a is None:
                issues.append(Issue("ATTR_UNKNOWN", unknown_severity, oid, f"attributes.{name}",
                                    f"{name} is not defined for {t}"))
            elif value is None and not a.required:
                continue
            elif not _type_ok(a.value_kind, value):
                issues.append(Issue("ATTR_TYPE", object_id=oid, path=f"attributes.{name}",
                                    message=f"{name}={value!r} is not a {a.value_kind}"))
            elif a.value_kind == "enum" and value not in a.allowed_values:
                issues.append(Issue("ATTR_ENUM", object_id=oid, path=f"attributes.{name}",
                                    message=f"{name}={value!r} not in {list(a.allowed_values)}"))
        for name, a in spec.items():
            if a.required and obj.attributes.get(name) is None:
                issues.append(Issue("ATTR_REQUIRED", object_id=oid, path=f"attributes.{name}",
                                    message=f"{t} requires {name}"))

        if registry.geometry_required(t) and not obj.geometry:
            issues.append(Issue("GEOM_REQUIRED", object_id=oid, path="geometry",
                                message=f"{t} requires geometry"))

        related = obj.attributes.get("relatedObjectID")
        if related is not None and isinstance(related, str):
            target = doc.objects.get(related)
            if target is None:
                issues.append(Issue("REF_INTEGRITY", object_id=oid, path="attributes.relatedObjectID",
                                    message=f"{related!r} does not exist"))
            else:
                allowed = registry.allowed_related_targets(t)
                ok = target.object_type in registry and any(
                    registry.is_a(target.object_type, a) for a in allowed
                )
                if not ok:
                    issues.append(Issue("REF_TARGET_TYPE", object_id=oid, path="attributes.relatedObjectID",
                                        message=f"{t} may not relate to {target.object_type}"))

        owners = registry.composition_parents(t)
        if owners:
            parent_types = [doc.objects[p].object_type for p in obj.parents if p in doc.objects]
            valid = [pt for pt in parent_types if any(pt in registry and registry.is_a(pt, o) for o in owners)]
            if len(obj.parents) != 1 or len(valid) != 1:
                issues.append(Issue("MULT_COMPOSITION", object_id=oid, path="parents",
                                    message=f"{t} needs exactly one parent of type {' or '.join(owners)}"))
    return issues


def solid_mesh_of(doc: CityDocument, boundaries) -> SolidMesh:
    n = len(doc.vertices)
    shells = []
    for shell in boundaries:
        surfaces = []
        for surface in shell:
            surfaces.append(tuple(tuple(doc.world_vertex(i) for i in ring if i < n) for ring in surface))
        shells.append(tuple(surfaces))
    return SolidMesh(tuple(shells))


def validate_solids(doc: CityDocument) -> list[Issue]:
    issues: list[Issue] = []
    if not all(s > 0 for s in doc.transform.scale):
        return issues  # world coordinates are meaningless; reported by validate_core
    n = len(doc.vertices)
    for oid, obj in doc.objects.items():
        for gi, geom in enumerate(obj.geometry):
            if geom.geometry_kind != "Solid":
                continue
            if any(i >= n for _, ring in iter_rings(geom) for i in ring):
                continue  # reported by validate_core
            found = check_watertight(solid_mesh_of(doc, geom.boundaries))
            by_code = Counter(_SOLID_CODES[i.code] for i in found)
            for code, count in sorted(by_code.items()):
                first = next(i for i in found if _SOLID_CODES[i.code] == code)
                issues.append(Issue(code, object_id=oid, path=f"geometry[{gi}]",
                                    message=f"{count} problem(s), e.g. {first.message} {first.path}".strip()))
    return issues


def validate(doc: CityDocument, registry: ExtensionRegistry | None = None,
             strict: bool = False) -> list[Issue]:
    """Core, extension and solid checks together."""
    return validate_core(doc) + validate_extension(doc, registry, strict) + validate_solids(doc)
