"""Regenerate the demo inputs under recipes/.

The terrain is synthetic: smooth bowl-shaped craters on a flat datum,
rasterised at desk scale. Footprints are written in projected metres.

    python3 scripts/make_demo_inputs.py
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from astrocity.builders import grid_from_center, mean_elevation
from astrocity.crs import MARS_EQC, MOON_ALBERS, MOON_SOUTH_POLAR, forward
from astrocity.dem import DemGrid, write_asc

ROOT = Path(__file__).resolve().parents[1] / "recipes"
DATA = ROOT / "data"
NODATA = -9999.0


def crater_profile(r: np.ndarray, radius: float, depth: float) -> np.ndarray:
    """Parabolic bowl with a raised rim that decays outside the crater."""
    rim = 0.04 * 2 * radius
    inside = -depth + (depth + rim) * (r / radius) ** 2
    outside = rim * np.exp(-(((r - radius) / (0.25 * radius)) ** 2))
    return np.where(r < radius, inside, outside)


def synthetic_dem(xmin, ymin, ncols, nrows, cellsize, craters, datum=0.0) -> DemGrid:
    xs = xmin + (np.arange(ncols) + 0.5) * cellsize
    ys = ymin + (np.arange(nrows)[::-1] + 0.5) * cellsize  # row 0 is north
    gx, gy = np.meshgrid(xs, ys)
    z = np.full(gx.shape, datum)
    for cx, cy, radius, depth in craters:
        z += crater_profile(np.hypot(gx - cx, gy - cy), radius, depth)
    return DemGrid(ncols, nrows, cellsize, xmin, ymin, NODATA, np.round(z, 1))


def circle(cx, cy, radius, n=64):
    pts = [[round(cx + radius * math.cos(2 * math.pi * k / n), 3),
            round(cy + radius * math.sin(2 * math.pi * k / n), 3)] for k in range(n)]
    return pts + [pts[0]]


def blob(cx, cy, radius, seed, n=24):
    """Irregular star-shaped outline."""
    rng = np.random.default_rng(seed)
    radii = radius * (0.7 + 0.3 * rng.random(n))
    pts = [[round(cx + radii[k] * math.cos(2 * math.pi * k / n), 3),
            round(cy + radii[k] * math.sin(2 * math.pi * k / n), 3)] for k in range(n)]
    return pts + [pts[0]]


def square(cx, cy, side):
    h = side / 2
    return [[cx - h, cy - h], [cx + h, cy - h], [cx + h, cy + h], [cx - h, cy + h], [cx - h, cy - h]]


def feature(coords, props, kind="Polygon"):
    geom = {"type": kind, "coordinates": [coords] if kind == "Polygon" else coords}
    return {"type": "Feature", "geometry": geom, "properties": props}


def dump(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=1) + "\n")


def collection(features):
    return {"type": "FeatureCollection", "features": features}


# -- Moon south pole -----------------------------------------------------------

def south_pole() -> None:
    spec = MOON_SOUTH_POLAR
    craters = {
        # name: (lat, lon, diameter m, depth m, synthetic id)
        "Shackleton": (-89.67, 129.78, 21_000.0, 4_000.0, 900001),
        "Shoemaker": (-88.14, 44.90, 51_800.0, 3_500.0, 900002),
        "Tooley": (-88.40, 60.50, 7_000.0, 1_200.0, 900003),
    }
    centres = {k: forward(spec, v[0], v[1]) for k, v in craters.items()}
    settle = grid_from_center(spec, -88.76, -232.0, 4500.0)
    (sx0, sy0), (sx1, sy1) = settle.exterior[0], settle.exterior[2]
    # crater discs plus the settlement square, with a 5 km margin
    boxes = [(c[0] - v[2] / 2, c[1] - v[2] / 2, c[0] + v[2] / 2, c[1] + v[2] / 2)
             for c, v in zip(centres.values(), craters.values())]
    boxes.append((sx0, sy0, sx1, sy1))
    margin = 5_000.0
    cell = 500.0
    xmin = math.floor((min(b[0] for b in boxes) - margin) / 1000) * 1000
    ymin = math.floor((min(b[1] for b in boxes) - margin) / 1000) * 1000
    xmax = max(b[2] for b in boxes) + margin
    ymax = max(b[3] for b in boxes) + margin
    ncols = int(math.ceil((xmax - xmin) / cell))
    nrows = int(math.ceil((ymax - ymin) / cell))
    grid = synthetic_dem(
        xmin, ymin, ncols, nrows, cell,
        [(centres[k][0], centres[k][1], v[2] / 2, v[3]) for k, v in craters.items()],
    )
    (DATA / "moon_south_pole.asc").write_text(write_asc(grid, "%.1f"))

    dump(DATA / "south_pole_craters.geojson", collection([
        feature(circle(*centres[k], v[2] / 2), {
            "craterID": v[4], "craterName": k, "diameter": v[2], "depth": v[3], "target": "Moon",
        })
        for k, v in craters.items()
    ]))

    # permanently shadowed floors, offset from the bowl centres
    psr = [
        feature(blob(centres["Shackleton"][0] + 800, centres["Shackleton"][1] - 600, 4_000, 1),
                {}),
        feature(blob(centres["Shoemaker"][0] - 3000, centres["Shoemaker"][1] + 2000, 12_000, 2),
                {}),
        feature(blob(centres["Tooley"][0], centres["Tooley"][1], 1_500, 3),
                {}),
    ]
    dump(DATA / "south_pole_psr.geojson", collection(psr))

    # four 1 km mining cells on the plain beyond the Shackleton rim
    cx, cy = centres["Shackleton"]
    ox = cx + 16_000
    mining = [
        feature(square(ox + 1000 * i, cy + 1000 * j, 1000.0), {})
        for i, j in [(0, 0), (1, 0), (0, 1), (1, 1)]
    ]
    dump(DATA / "south_pole_mining.geojson", collection(mining))

    # one building with one unit, inside the settlement square
    bx, by = (sx0 + sx1) / 2, (sy0 + sy1) / 2
    ground = round(mean_elevation(grid, settle), 3)
    building = {
        "building_id": "building1",
        "attributes": {"buildingID": "building1"},
        "units": [{
            "unit_id": "0pNy6pOyf7JPmXRLgxs3sW",
            "attributes": {"unitUseType": "laboratory"},
            "footprint": [[bx - 10, by - 6], [bx + 10, by - 6], [bx + 10, by + 6], [bx - 10, by + 6]],
            "z_low": ground,
            "z_high": ground + 4.0,
        }],
    }
    dump(DATA / "south_pole_building.json", building)

    dem = "data/moon_south_pole.asc"
    recipe = {
        "title": "Moon south pole",
        "crs": "EPSG:103878",
        "seed": 20240101,
        "output": "moon_south_pole.city.json",
        "inputs": [
            {"name": "craters", "role": "crater", "source": "data/south_pole_craters.geojson",
             "parameters": {"dem": dem, "aggregate_factor": 2}},
            {"name": "psr", "role": "scientific_evidence", "source": "data/south_pole_psr.geojson",
             "parameters": {"evidence": "waterIce", "analysis": "Extrusion",
                            "extrusion_up": 25, "extrusion_down": 25, "ground": dem}},
            {"name": "psr_zone", "role": "restriction", "targets": "psr",
             "parameters": {"restriction_type": "scientific", "analysis": "3DBuffer", "value": 250}},
            {"name": "mining", "role": "plan_unit", "source": "data/south_pole_mining.geojson",
             "parameters": {"use": "mining", "underground": 500, "flat": True, "ground": dem}},
            {"name": "mining_rights", "role": "legal_space", "targets": "mining",
             "parameters": {"analysis": "Extrusion", "value": 500, "extrusion_down": 500,
                            "ground": dem}},
            {"name": "settlement", "role": "plan_unit",
             "parameters": {"use": "settlement", "underground": 50, "aboveground": 50,
                            "center": {"lat": -88.76, "lon": -232.0, "side": 4500}, "ground": dem}},
            {"name": "settlement_zone", "role": "restriction", "targets": "settlement",
             "parameters": {"restriction_type": "settlement", "analysis": "3DBuffer", "value": 50}},
            {"name": "habitat", "role": "building", "source": "data/south_pole_building.json"},
            {"name": "habitat_legal", "role": "legal_space", "targets": "habitat",
             "parameters": {"analysis": "3DBuffer", "value": 0.001}},
        ],
    }
    dump(ROOT / "moon_south_pole.recipe", recipe)


# -- Moon near side --------------------------------------------------------------

LANDING_SITES = [
    # name, lat, lon, Y, X (projected with IAU_2015:30185)
    ("A11 LM", 0.67416, 23.47314, -1084015.403, 797715.8357),
    ("A17 LM", 20.19106, 30.77228, -482883.3008, 859698.0733),
    ("A12 LM", -3.01279, -23.42192, -1178748.525, -819780.9946),
    ("A14 LM", -3.64589, -17.47194, -1239858.902, -617302.2113),
    ("A15 LM", 26.13239, 3.63330, -438959.4181, 96283.52627),
    ("A16 LM", -8.97344, 15.50105, -1384487.867, 570180.2265),
    ("Surveyor 1", -2.47448, 316.66020, -923865.0175, -1473497.873),
    ("Surveyor 3", -3.01623, -23.41801, -1178868.968, -819668.6523),
    ("Surveyor 5", 1.45515, 23.19426, -1065991.24, 783350.0884),
    ("Surveyor 6", 0.47424, -1.42752, -1188202.836, -49090.49337),
    ("Surveyor 7", -40.98117, -11.51270, -2052661.123, -503268.1364),
    ("Chang'e 3", 44.12142, -19.51174, 173854.6813, -396367.0196),
    ("Yutu Rover", 44.12085, -19.51219, 173838.3572, -396379.8343),
]


def nearside() -> None:
    sites = [
        feature([x, y], {"areaName": name}, kind="Point")
        for name, _lat, _lon, y, x in LANDING_SITES
    ]
    dump(DATA / "nearside_landing_sites.geojson", collection(sites))

    # irregular patches in the Secchi highlands
    cx, cy = forward(MOON_ALBERS, 2.42, 43.55)
    ips = [
        feature(blob(cx + dx, cy + dy, r, 10 + k), {"objectName": f"Secchi IP {k + 1}",
                                                    "objectType": "Irregular Patch"})
        for k, (dx, dy, r) in enumerate([(0, 0, 150), (900, 400, 90), (-700, 1200, 220)])
    ]
    dump(DATA / "nearside_ips.geojson", collection(ips))

    recipe = {
        "title": "Moon near side",
        "crs": "IAU_2015:30185",
        "seed": 20240102,
        "output": "moon_nearside.city.json",
        "inputs": [
            {"name": "sites", "role": "protected_area", "source": "data/nearside_landing_sites.geojson",
             "parameters": {"buffer": 5, "up": 1, "down": 1}},
            {"name": "site_zones", "role": "restriction", "targets": "sites",
             "parameters": {"restriction_type": "historicalSite", "analysis": "BufferExtrusion",
                            "value": 75, "extrusion_up": 25, "extrusion_down": 25}},
            {"name": "ips", "role": "surface_object", "source": "data/nearside_ips.geojson",
             "parameters": {"up": 1, "down": 1}},
            {"name": "ip_zones", "role": "restriction", "targets": "ips",
             "parameters": {"restriction_type": "scientific", "analysis": "3DBuffer", "value": 10}},
        ],
    }
    dump(ROOT / "moon_nearside.recipe", recipe)


# -- Mars ------------------------------------------------------------------------

def mars() -> None:
    spec = MARS_EQC
    diameter = 47520.0
    jx, jy = forward(spec, 18.38, 77.58)
    cell = 500.0
    half = 40_000.0
    xmin = math.floor((jx - half) / 1000) * 1000
    ymin = math.floor((jy - half) / 1000) * 1000
    n = int(2 * half / cell)
    grid = synthetic_dem(xmin, ymin, n, n, cell, [(jx, jy, diameter / 2, 500.0)], datum=-2200.0)
    (DATA / "mars_jezero.asc").write_text(write_asc(grid, "%.1f"))

    dump(DATA / "mars_jezero.geojson", collection([
        feature(circle(jx, jy, diameter / 2, 96), {
            "id": "14300",
            "IAUID": 14300,
            "approvalDate": 2007,
            "craterID": 14300,
            "craterName": "Jezero",
            "diameter": diameter,
            "target": "Mars",
        })
    ]))

    hx, hy = forward(spec, -14.64, 175.53)
    outline = [[hx - 45, hy - 40], [hx + 38, hy - 40], [hx + 45, hy - 10], [hx + 40, hy + 40],
               [hx - 30, hy + 40], [hx - 45, hy + 5], [hx - 45, hy - 40]]
    outline = [[round(x, 3), round(y, 3)] for x, y in outline]
    dump(DATA / "mars_home_plate.geojson", collection([
        feature(outline, {})
    ]))

    recipe = {
        "title": "Mars",
        "crs": "EPSG:103885",
        "seed": 20240103,
        "output": "mars.city.json",
        "inputs": [
            {"name": "jezero", "role": "crater", "source": "data/mars_jezero.geojson",
             "parameters": {"dem": "data/mars_jezero.asc", "aggregate_factor": 2}},
            {"name": "home_plate", "role": "scientific_evidence", "source": "data/mars_home_plate.geojson",
             "parameters": {"evidence": "astrobiological", "analysis": "BufferExtrusion", "value": 1,
                            "extrusion_up": 2.5, "extrusion_down": 2.5}},
            {"name": "home_plate_zone", "role": "restriction", "targets": "home_plate",
             "parameters": {"restriction_type": "scientific", "analysis": "3DBuffer", "value": 250,
                            "extrusion_up": 25, "extrusion_down": 25}},
        ],
    }
    dump(ROOT / "mars.recipe", recipe)


def main() -> None:
    DATA.mkdir(parents=True, exist_ok=True)
    south_pole()
    nearside()
    mars()


if __name__ == "__main__":
    main()
