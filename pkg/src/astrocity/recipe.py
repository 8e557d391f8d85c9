"""Recipe files: a JSON description of how to assemble one document from input files.

A recipe looks like::

    {
      "crs": "IAU_2015:30185",
      "seed": 7,
      "z0": 0.0,
      "title": "Moon south pole",
      "output": "moon.city.json",
      "inputs": [
        {"name": "psr", "role": "scientific_evidence", "source": "data/psr.geojson",
         "parameters": {"evidence": "waterIce", "analysis": "Extrusion",
                        "extrusion_up": 25, "extrusion_down": 25}},
        {"name": "psr_zone", "role": "restriction", "targets": "psr",
         "parameters": {"restriction_type": "scientific", "analysis": "3DBuffer", "value": 250}}
      ]
    }

Paths are relative to the recipe file. GeoJSON coordinates must already be in
the projected metres of ``crs``; they are NOT longitude/latitude. Feature
``properties`` become object attributes, except ``id`` which becomes the object id.

Roles and their ``parameters``:

crater
    ``dem`` (path, required), ``aggregate_factor`` (default 1)
surface_object
    ``up``, ``down``
plan_unit
    ``use``, ``underground``, ``aboveground``, ``flat``; instead of a source,
    ``center`` = {lat, lon, side} builds a square around a projected point
scientific_evidence
    ``evidence`` plus analysis fields
protected_area
    ``buffer``, ``up``, ``down``; features may be Points; ``areaName`` comes from properties
restriction
    ``restriction_type`` plus analysis fields; needs ``targets``
legal_space
    analysis fields; needs ``targets``
building
    ``source`` is a JSON file: {building_id, attributes, units: [{unit_id, attributes,
    footprint: [[x, y], ...], z_low, z_high}]}

Analysis fields are ``analysis``, ``value``, ``unit``, ``extrusion_up`` and ``extrusion_down``.
Any role except building also accepts ``ground`` (path to a DEM): each object's
base elevation is then the mean DEM value inside its footprint.

``targets`` names an earlier step; ``"step:units"`` and ``"step:building"``
select part of a building step. One object is created per target.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from . import dem as dem_mod
from .builders import AnalysisSpec, FeatureBuilder, SpaceSolidInput, UnitInput, grid_from_center, mean_elevation
from .crs import lookup_crs
from .geometry import Polygon2
from .model import CityDocument, new_document

ROLES = (
    "crater",
    "surface_object",
    "plan_unit",
    "scientific_evidence",
    "protected_area",
    "restriction",
    "legal_space",
    "building",
)
_ANALYSIS_KEYS = ("analysis", "value", "unit", "extrusion_up", "extrusion_down")


class RecipeError(ValueError):
    pass


@dataclass
class Step:
    name: str
    role: str
    source: Path | None = None
    parameters: dict = field(default_factory=dict)
    attributes: dict = field(default_factory=dict)
    targets: str | None = None


@dataclass
class Recipe:
    crs: str
    steps: list[Step]
    output: Path
    base_dir: Path
    seed: int | None = None
    z0: float = 0.0
    title: str | None = None


def load_recipe(path: str | Path) -> Recipe:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise RecipeError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise RecipeError(f"{path}: top level must be an object")
    for key in ("crs", "inputs", "output"):
        if key not in data:
            raise RecipeError(f"{path}: missing {key!r}")
    base = path.resolve().parent

    steps: list[Step] = []
    seen: set[str] = set()
    for i, raw in enumerate(data["inputs"]):
        name = raw.get("name") or f"step{i}"
        role = raw.get("role")
        if role not in ROLES:
            raise RecipeError(f"input {name!r}: role {role!r} is not one of {', '.join(ROLES)}")
        if name in seen:
            raise RecipeError(f"duplicate step name {name!r}")
        seen.add(name)
        source = base / raw["source"] if raw.get("source") else None
        if source is not None and not source.exists():
            raise RecipeError(f"input {name!r}: source {source} does not exist")
        targets = raw.get("targets")
        if role in ("restriction", "legal_space"):
            if not targets or targets.split(":")[0] not in seen:
                raise RecipeError(f"input {name!r}: targets must name an earlier step")
        steps.append(Step(name, role, source, dict(raw.get("parameters", {})),
                          dict(raw.get("attributes", {})), targets))
    return Recipe(data["crs"], steps, base / data["output"], base, data.get("seed"),
                  float(data.get("z0", 0.0)), data.get("title"))


# -- input readers --------------------------------------------------------------

def _polygon(coords) -> Polygon2:
    if not coords:
        raise RecipeError("empty polygon coordinates")
    return Polygon2.from_rings(coords[0], coords[1:])


def read_features(path: Path) -> list[tuple[object, dict]]:
    """(Polygon2 or (x, y) point, properties) per feature of a GeoJSON file."""
    data = json.loads(Path(path).read_text())
    if data.get("type") == "FeatureCollection":
        features = data["features"]
    elif data.get("type") == "Feature":
        features = [data]
    else:
        features = [{"type": "Feature", "geometry": data, "properties": {}}]
    out = []
    for f in features:
        g = f.get("geometry") or {}
        props = dict(f.get("properties") or {})
        if "id" in f and "id" not in props:
            props["id"] = f["id"]
        if g.get("type") == "Polygon":
            out.append((_polygon(g["coordinates"]), props))
        elif g.get("type") == "Point":
            x, y = g["coordinates"][:2]
            out.append(((float(x), float(y)), props))
        else:
            raise RecipeError(f"{path}: unsupported geometry type {g.get('type')!r}")
    return out


def read_building(path: Path) -> SpaceSolidInput:
    data = json.loads(Path(path).read_text())
    units = tuple(
        UnitInput(
            u["unit_id"],
            dict(u.get("attributes", {})),
            Polygon2.from_rings(u["footprint"]),
            float(u["z_low"]),
            float(u["z_high"]),
        )
        for u in data.get("units", [])
    )
    return SpaceSolidInput(data["building_id"], dict(data.get("attributes", {})), units)


def _analysis(params: dict) -> AnalysisSpec:
    kw = {k: params[k] for k in _ANALYSIS_KEYS if k in params}
    if "analysis" not in kw:
        raise RecipeError("analysis type is required")
    return AnalysisSpec(**kw)


# -- execution -----------------------------------------------------------------

class _Runner:
    def __init__(self, recipe: Recipe, seed: int | None):
        self.recipe = recipe
        self.spec = lookup_crs(recipe.crs)
        self.doc = new_document(self.spec.url)
        if recipe.title:
            self.doc.metadata["title"] = recipe.title
        self.builder = FeatureBuilder(self.doc, seed=seed, z0=recipe.z0)
        self.produced: dict[str, list[str]] = {}
        self._grids: dict[Path, dem_mod.DemGrid] = {}

    def grid(self, rel: str) -> dem_mod.DemGrid:
        p = self.recipe.base_dir / rel
        if p not in self._grids:
            if not p.exists():
                raise RecipeError(f"DEM {p} does not exist")
            self._grids[p] = dem_mod.read_asc(p.read_text())
        return self._grids[p]

    def base(self, step: Step, polygon: Polygon2) -> float | None:
        if "ground" in step.parameters:
            return mean_elevation(self.grid(step.parameters["ground"]), polygon)
        return step.parameters.get("z0")

    def targets(self, ref: str) -> list[str]:
        name, _, part = ref.partition(":")
        ids = self.produced[name]
        if part == "building":
            return ids[:1]
        if part == "units":
            return ids[1:]
        return ids

    def features(self, step: Step):
        if step.source is None:
            raise RecipeError(f"input {step.name!r}: role {step.role} needs a source")
        for geom, props in read_features(step.source):
            oid = props.pop("id", None)
            yield geom, {**step.attributes, **props}, (str(oid) if oid is not None else None)

    def run_step(self, step: Step) -> list[str]:
        b, p = self.builder, step.parameters
        ids: list[str] = []
        if step.role == "building":
            bid, unit_ids = b.build_building(read_building(step.source))
            return [bid, *unit_ids]
        if step.role in ("restriction", "legal_space"):
            spec = _analysis(p)
            for target in self.targets(step.targets):
                z0 = self.base(step, b.target_footprint(target).polygon)
                if step.role == "restriction":
                    ids.append(b.build_restriction(target, spec, p["restriction_type"],
                                                   dict(step.attributes), z0=z0))
                else:
                    ids.append(b.build_legal_space(target, spec, dict(step.attributes), z0=z0))
            return ids
        if step.role == "plan_unit" and "center" in p:
            c = p["center"]
            poly = grid_from_center(self.spec, c["lat"], c["lon"], c["side"])
            return [b.build_plan_unit(poly, p["use"], p.get("underground", 0.0),
                                      p.get("aboveground", 0.0), dict(step.attributes),
                                      flat=p.get("flat", False), object_id=p.get("id"),
                                      z0=self.base(step, poly))]

        for geom, attrs, oid in self.features(step):
            if step.role == "protected_area":
                area = attrs.pop("areaName", None)
                if area is None:
                    raise RecipeError(f"input {step.name!r}: each site needs an areaName property")
                poly = geom if isinstance(geom, Polygon2) else Polygon2.rectangle(
                    geom[0] - 0.5, geom[1] - 0.5, geom[0] + 0.5, geom[1] + 0.5)
                ids.append(b.build_protected_area(geom, p.get("buffer", 0.0), p.get("up", 0.0),
                                                  p.get("down", 0.0), area, attrs, oid,
                                                  z0=self.base(step, poly)))
                continue
            if not isinstance(geom, Polygon2):
                raise RecipeError(f"input {step.name!r}: role {step.role} needs polygon features")
            if step.role == "crater":
                if "dem" not in p:
                    raise RecipeError(f"input {step.name!r}: crater needs a dem parameter")
                ids.append(b.build_crater(geom, self.grid(p["dem"]), attrs,
                                          int(p.get("aggregate_factor", 1)), oid))
            elif step.role == "surface_object":
                ids.append(b.build_surface_object(geom, p.get("up", 0.0), p.get("down", 0.0),
                                                  attrs, oid, z0=self.base(step, geom)))
            elif step.role == "plan_unit":
                ids.append(b.build_plan_unit(geom, p["use"], p.get("underground", 0.0),
                                             p.get("aboveground", 0.0), attrs,
                                             flat=p.get("flat", False), object_id=oid,
                                             z0=self.base(step, geom)))
            elif step.role == "scientific_evidence":
                ids.append(b.build_scientific_evidence(geom, _analysis(p), p["evidence"], attrs,
                                                       oid, z0=self.base(step, geom)))
        return ids


def run_recipe(recipe: Recipe, seed: int | None = None) -> CityDocument:
    """Build the document described by ``recipe``; ``seed`` overrides the recipe's own."""
    runner = _Runner(recipe, recipe.seed if seed is None else seed)
    for step in recipe.steps:
        try:
            runner.produced[step.name] = runner.run_step(step)
        except KeyError as exc:
            raise RecipeError(f"input {step.name!r}: missing parameter or target {exc}") from exc
    runner.doc.rebase()
    return runner.doc
