"""Feature types, attributes and relationships of the 3DSpace CityJSON extension.

The registry is plain data. :func:`emit_extension_schema` turns it into a
CityJSON extension file and :func:`load_extension_schema` reads such a file
back, so a registry survives a trip through its own schema text.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache

from .issues import Issue

VALUE_KINDS = ("string", "number", "integer", "date-string", "enum")
CORE_BASES = ("AbstractCityObject", "AbstractBuilding")

EXTENSION_NAME = "3DSpace"
EXTENSION_VERSION = "2.0"
EXTENSION_URL = (
    "https://raw.githubusercontent.com/geospatialstudies/space/refs/heads/main/space.ext.json"
)

_CORE_REFS = {
    "AbstractCityObject": "cityobjects.schema.json#/_AbstractCityObject",
    "AbstractBuilding": "cityobjects.schema.json#/_AbstractBuilding",
}


class RegistryInvalid(ValueError):
    def __init__(self, issues: list[Issue]):
        self.issues = issues
        super().__init__("; ".join(str(i) for i in issues))


@dataclass(frozen=True)
class AttributeSpec:
    name: str
    value_kind: str
    allowed_values: tuple[str, ...] | None = None
    required: bool = False


@dataclass(frozen=True)
class FeatureTypeSpec:
    name: str
    core_base: str = "AbstractCityObject"
    parent: str | None = None
    attributes: tuple[AttributeSpec, ...] = ()
    geometry_required: bool = False
    toplevel: bool = True


@dataclass(frozen=True)
class RelationshipSpec:
    kind: str  # composition | association
    source: str
    target: str
    source_multiplicity: str
    target_multiplicity: str
    realization: str  # parents-children | relatedObjectID


@dataclass(frozen=True)
class ExtensionRegistry:
    extension_name: str
    extension_version: str
    schema_url: str
    types: tuple[FeatureTypeSpec, ...]
    relationships: tuple[RelationshipSpec, ...] = ()
    _index: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        self._index.update({t.name: t for t in self.types})

    def names(self) -> list[str]:
        return [t.name for t in self.types]

    def lookup(self, name: str) -> FeatureTypeSpec:
        try:
            return self._index[name]
        except KeyError:
            raise KeyError(f"unknown feature type {name!r}") from None

    def __contains__(self, name: str) -> bool:
        return name in self._index

    def ancestors(self, name: str) -> list[str]:
        """``name`` followed by its parent chain, nearest first."""
        chain = [name]
        seen = {name}
        current = self._index.get(name)
        while current is not None and current.parent:
            if current.parent in seen:
                break
            chain.append(current.parent)
            seen.add(current.parent)
            current = self._index.get(current.parent)
        return chain

    def is_a(self, name: str, ancestor: str) -> bool:
        return ancestor in self.ancestors(name)

    def effective_attributes(self, name: str) -> dict[str, AttributeSpec]:
        out: dict[str, AttributeSpec] = {}
        for type_name in reversed(self.ancestors(name)):
            spec = self._index.get(type_name)
            if spec is not None:
                out.update({a.name: a for a in spec.attributes})
        return out

    def geometry_required(self, name: str) -> bool:
        return any(
            self._index[t].geometry_required for t in self.ancestors(name) if t in self._index
        )

    def allowed_related_targets(self, name: str) -> list[str]:
        """Target types a ``relatedObjectID`` on ``name`` may point at.

        A subtype with its own associations uses those; otherwise it inherits
        the associations of its nearest ancestor that declares any.
        """
        for type_name in self.ancestors(name):
            targets = [
                r.target
                for r in self.relationships
                if r.realization == "relatedObjectID" and r.source == type_name
            ]
            if targets:
                return targets
        return []

    def composition_parents(self, name: str) -> list[str]:
        return [
            r.source
            for r in self.relationships
            if r.kind == "composition" and r.target == name
        ]


def _attr(name, kind="string", allowed=None, required=False) -> AttributeSpec:
    return AttributeSpec(name, kind, tuple(allowed) if allowed else None, required)


@lru_cache(maxsize=1)
def builtin_registry() -> ExtensionRegistry:
    """The 3DSpace model: ten feature types and their relationships."""
    types = (
        FeatureTypeSpec(
            "+SpaceSurfaceObject",
            attributes=(
                _attr("objectName"),
                _attr("objectType"),
                _attr("registrationDate", "date-string"),
            ),
        ),
        FeatureTypeSpec(
            "+SpaceCrater",
            parent="+SpaceSurfaceObject",
            attributes=(
                _attr("craterID", "integer", required=True),
                _attr("craterName", required=True),
                _attr("diameter", "number", required=True),
                _attr("depth", "number"),
                _attr("albedo", "number"),
                _attr("IAUID", "integer"),
                _attr("approvalDate", "integer"),
                _attr("target"),
            ),
        ),
        FeatureTypeSpec(
            "+SpacePlanUnit",
            attributes=(
                _attr("planUseType", "enum", ("mining", "settlement"), required=True),
                _attr("punitObjectType"),
                _attr("undergroundDepth", "number"),
                _attr("abovegroundDepth", "number"),
            ),
        ),
        FeatureTypeSpec(
            "+SpaceBuilding",
            core_base="AbstractBuilding",
            attributes=(
                _attr("buildingState"),
                _attr("buildingID"),
                _attr("buildingObjectID"),
            ),
        ),
        FeatureTypeSpec(
            "+SpaceBuildingUnit",
            attributes=(_attr("unitUseType"),),
            toplevel=False,
        ),
        FeatureTypeSpec(
            "+SpaceLegal",
            attributes=(_attr("legalObjectID"), _attr("relatedObjectID")),
            geometry_required=True,
        ),
        FeatureTypeSpec(
            "+SpaceScientificEvidence",
            parent="+SpaceLegal",
            attributes=(
                _attr(
                    "evidenceType",
                    "enum",
                    ("waterIce", "geological", "astrobiological"),
                    required=True,
                ),
            ),
        ),
        FeatureTypeSpec(
            "+SpaceProtectedArea",
            parent="+SpaceLegal",
            attributes=(_attr("areaName", required=True),),
        ),
        FeatureTypeSpec(
            "+SpaceCommonArea",
            parent="+SpaceLegal",
            attributes=(_attr("areaUseType"),),
        ),
        FeatureTypeSpec(
            "+SpaceRestriction",
            parent="+SpaceLegal",
            attributes=(
                _attr(
                    "restrictionType",
                    "enum",
                    ("historicalSite", "mining", "scientific", "settlement"),
                    required=True,
                ),
                _attr(
                    "restrictionAnalysisType",
                    "enum",
                    ("2DBuffer", "3DBuffer", "Extrusion", "BufferExtrusion"),
                ),
                _attr("restrictionValue", "number"),
                _attr("restrictionUnit"),
            ),
        ),
    )

    def assoc(source, target):
        return RelationshipSpec("association", source, target, "0..*", "0..1", "relatedObjectID")

    relationships = (
        RelationshipSpec(
            "composition", "+SpaceBuilding", "+SpaceBuildingUnit", "1", "0..*", "parents-children"
        ),
        *(
            assoc("+SpaceRestriction", t)
            for t in (
                "+SpaceScientificEvidence",
                "+SpaceProtectedArea",
                "+SpaceSurfaceObject",
                "+SpacePlanUnit",
            )
        ),
        *(assoc("+SpaceLegal", t) for t in ("+SpaceBuilding", "+SpaceBuildingUnit", "+SpacePlanUnit")),
    )
    return ExtensionRegistry(EXTENSION_NAME, EXTENSION_VERSION, EXTENSION_URL, types, relationships)


def validate_registry(registry: ExtensionRegistry) -> list[Issue]:
    issues: list[Issue] = []
    names = [t.name for t in registry.types]
    seen: set[str] = set()
    for name in names:
        if name in seen:
            issues.append(Issue("DUPLICATE_NAME", object_id=name, message="type defined twice"))
        seen.add(name)

    for t in registry.types:
        if not t.name.startswith("+") or len(t.name) < 2:
            issues.append(
                Issue("NAME_PREFIX", object_id=t.name, message="extension types must start with '+'")
            )
        if t.core_base not in CORE_BASES:
            issues.append(Issue("CORE_BASE", object_id=t.name, message=f"bad core base {t.core_base!r}"))
        if t.parent is not None and t.parent not in seen:
            issues.append(
                Issue("DANGLING_REF", object_id=t.name, message=f"parent {t.parent!r} is not registered")
            )
        attr_names = [a.name for a in t.attributes]
        for a in t.attributes:
            if not a.name:
                issues.append(Issue("ATTR_SPEC", object_id=t.name, message="empty attribute name"))
            if attr_names.count(a.name) > 1:
                issues.append(
                    Issue("ATTR_SPEC", object_id=t.name, message=f"attribute {a.name!r} repeated")
                )
            if a.value_kind not in VALUE_KINDS:
                issues.append(
                    Issue("ATTR_SPEC", object_id=t.name, message=f"{a.name}: bad kind {a.value_kind!r}")
                )
            elif (a.value_kind == "enum") != bool(a.allowed_values):
                issues.append(
                    Issue(
                        "ATTR_SPEC",
                        object_id=t.name,
                        message=f"{a.name}: allowed_values must be given exactly for enum kind",
                    )
                )

    by_name = {t.name: t for t in registry.types}
    for t in registry.types:
        # walk the parent chain; revisiting a name means a cycle
        chain, current = [t.name], t
        while current.parent and current.parent in by_name:
            if current.parent in chain:
                issues.append(
                    Issue("CYCLE", object_id=t.name, message=" -> ".join(chain + [current.parent]))
                )
                break
            chain.append(current.parent)
            current = by_name[current.parent]
        else:
            inherited = set()
            for ancestor in chain[1:]:
                inherited.update(a.name for a in by_name[ancestor].attributes)
            for a in t.attributes:
                if a.name in inherited:
                    issues.append(
                        Issue("ATTR_SHADOW", object_id=t.name, message=f"{a.name} shadows an inherited attribute")
                    )

    for r in registry.relationships:
        for end in (r.source, r.target):
            if end not in by_name:
                issues.append(
                    Issue("DANGLING_REF", object_id=end, message=f"{r.kind} endpoint is not registered")
                )
        expected = {"composition": "parents-children", "association": "relatedObjectID"}.get(r.kind)
        if expected is None or r.realization != expected:
            issues.append(
                Issue(
                    "RELATIONSHIP_KIND",
                    object_id=r.source,
                    message=f"{r.kind} realised by {r.realization}",
                )
            )
    return issues


def _attribute_schema(a: AttributeSpec) -> dict:
    if a.value_kind == "enum":
        return {"type": "string", "enum": list(a.allowed_values)}
    if a.value_kind == "date-string":
        return {"type": "string", "format": "date"}
    return {"type": a.value_kind}


def _type_body(t: FeatureTypeSpec) -> dict:
    body: dict = {"properties": {}}
    attrs = {"type": "object", "properties": {a.name: _attribute_schema(a) for a in t.attributes}}
    required_attrs = [a.name for a in t.attributes if a.required]
    if required_attrs:
        attrs["required"] = required_attrs
    body["properties"]["attributes"] = attrs
    return body


def _base_ref(t: FeatureTypeSpec) -> str:
    if t.parent:
        return f"#/definitions/{t.parent}"
    return _CORE_REFS[t.core_base]


def emit_extension_schema(registry: ExtensionRegistry) -> str:
    issues = validate_registry(registry)
    if issues:
        raise RegistryInvalid(issues)

    definitions: dict = {}
    city_objects: dict = {}
    for t in registry.types:
        body = _type_body(t)
        definition = {"allOf": [{"$ref": _base_ref(t)}, body]}
        if t.geometry_required:
            definition["allOf"][1]["required"] = ["geometry"]
        definitions[t.name] = definition

        entry_body = {
            "properties": {
                "type": {"enum": [t.name]},
                "attributes": body["properties"]["attributes"],
            },
            "required": ["type"] + (["geometry"] if t.geometry_required else []),
        }
        if not t.toplevel:
            entry_body["required"].append("parents")
        city_objects[t.name] = {
            "allOf": [{"$ref": _base_ref(t)}, entry_body],
            "toplevel": t.toplevel,
            "coreBase": t.core_base,
        }

    doc = {
        "type": "CityJSONExtension",
        "name": registry.extension_name,
        "url": registry.schema_url,
        "version": registry.extension_version,
        "versionCityJSON": "2.0",
        "description": "Surface objects and related logical spaces on celestial bodies",
        "definitions": definitions,
        "extraRootProperties": {},
        "extraAttributes": {},
        "extraCityObjects": city_objects,
        "extraSemanticSurfaces": {},
        "relationships": [
            {
                "kind": r.kind,
                "source": r.source,
                "target": r.target,
                "sourceMultiplicity": r.source_multiplicity,
                "targetMultiplicity": r.target_multiplicity,
                "realization": r.realization,
            }
            for r in registry.relationships
        ],
    }
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def _attribute_from_schema(name: str, schema: dict, required: bool) -> AttributeSpec:
    if "enum" in schema:
        return AttributeSpec(name, "enum", tuple(schema["enum"]), required)
    if schema.get("format") == "date":
        return AttributeSpec(name, "date-string", None, required)
    return AttributeSpec(name, schema.get("type", "string"), None, required)


def load_extension_schema(text: str) -> ExtensionRegistry:
    """Rebuild a registry from an extension file written by :func:`emit_extension_schema`."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"extension file is not valid JSON: {exc}") from exc
    if doc.get("type") != "CityJSONExtension":
        raise ValueError("not a CityJSONExtension document")

    types = []
    for name, entry in doc.get("extraCityObjects", {}).items():
        base_ref = entry["allOf"][0]["$ref"]
        body = entry["allOf"][1]
        parent = base_ref.rsplit("/", 1)[-1] if base_ref.startswith("#/definitions/") else None
        core_base = entry.get("coreBase", "AbstractCityObject")
        attrs_schema = body.get("properties", {}).get("attributes", {})
        required = set(attrs_schema.get("required", []))
        attributes = tuple(
            _attribute_from_schema(a, s, a in required)
            for a, s in attrs_schema.get("properties", {}).items()
        )
        types.append(
            FeatureTypeSpec(
                name,
                core_base=core_base,
                parent=parent,
                attributes=attributes,
                geometry_required="geometry" in body.get("required", []),
                toplevel=bool(entry.get("toplevel", True)),
            )
        )
    relationships = tuple(
        RelationshipSpec(
            r["kind"],
            r["source"],
            r["target"],
            r["sourceMultiplicity"],
            r["targetMultiplicity"],
            r["realization"],
        )
        for r in doc.get("relationships", [])
    )
    return ExtensionRegistry(doc["name"], doc["version"], doc["url"], tuple(types), relationships)
