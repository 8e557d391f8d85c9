"""Spherical planetary map projections and CRS identifiers.

Only the projections the demo datasets need are supported, all on a sphere:
Albers equal-area conic, equidistant cylindrical and polar stereographic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

ALBERS = "AlbersEqualAreaSphere"
EQUIDISTANT_CYLINDRICAL = "EquidistantCylindricalSphere"
POLAR_STEREOGRAPHIC = "PolarStereographicSphere"


class OutOfDomain(ValueError):
    pass


class UnknownCRS(KeyError):
    pass


@dataclass(frozen=True)
class BodySphere:
    name: str
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError(f"sphere radius must be positive, got {self.radius}")


@dataclass(frozen=True)
class ProjectionSpec:
    kind: str
    body: BodySphere
    lat_origin: float = 0.0
    lon_origin: float = 0.0
    std_parallel_1: float = 0.0
    std_parallel_2: float = 0.0
    false_easting: float = 0.0
    false_northing: float = 0.0
    authority: str = ""
    code: str = ""

    def __post_init__(self):
        if self.kind not in (ALBERS, EQUIDISTANT_CYLINDRICAL, POLAR_STEREOGRAPHIC):
            raise ValueError(f"unsupported projection kind {self.kind!r}")
        if self.kind == POLAR_STEREOGRAPHIC and abs(self.lat_origin) != 90.0:
            raise ValueError("polar stereographic needs lat_origin of 90 or -90")
        if self.kind == ALBERS:
            p1, p2 = self.std_parallel_1, self.std_parallel_2
            if p1 == p2:
                raise ValueError("Albers standard parallels must differ")
            if max(abs(p1), abs(p2), abs(self.lat_origin)) > 90:
                raise ValueError("latitudes must lie in [-90, 90]")
            if abs(math.sin(math.radians(p1)) + math.sin(math.radians(p2))) < 1e-12:
                raise ValueError("Albers cone constant is zero")

    @property
    def authority_code(self) -> str:
        return f"{self.authority}:{self.code}"

    @property
    def url(self) -> str:
        return crs_url(self.authority, self.code)


def normalize_lon(lon: float) -> float:
    """Map a longitude in degrees into (-180, 180]."""
    lon = math.fmod(lon, 360.0)
    if lon <= -180.0:
        lon += 360.0
    elif lon > 180.0:
        lon -= 360.0
    return lon


def _albers_constants(spec: ProjectionSpec) -> tuple[float, float, float]:
    phi1 = math.radians(spec.std_parallel_1)
    phi2 = math.radians(spec.std_parallel_2)
    n = (math.sin(phi1) + math.sin(phi2)) / 2.0
    c = math.cos(phi1) ** 2 + 2.0 * n * math.sin(phi1)
    rho0 = spec.body.radius * math.sqrt(c - 2.0 * n * math.sin(math.radians(spec.lat_origin))) / n
    return n, c, rho0


def forward(spec: ProjectionSpec, lat: float, lon: float) -> tuple[float, float]:
    """Geographic degrees to projected metres ``(x, y)``."""
    if not (math.isfinite(lat) and math.isfinite(lon)) or abs(lat) > 90.0:
        raise OutOfDomain(f"latitude {lat} outside [-90, 90]")
    dlon = math.radians(normalize_lon(lon - spec.lon_origin))
    R = spec.body.radius

    if spec.kind == EQUIDISTANT_CYLINDRICAL:
        return R * dlon + spec.false_easting, R * math.radians(lat) + spec.false_northing

    if spec.kind == POLAR_STEREOGRAPHIC:
        # true scale at the pole; the opposite pole maps to infinity
        south = spec.lat_origin < 0
        if lat == (90.0 if south else -90.0):
            raise OutOfDomain(f"latitude {lat} is the antipode of the projection centre")
        phi = math.radians(lat)
        rho = 2.0 * R * math.tan(math.pi / 4 + (phi / 2 if south else -phi / 2))
        y = rho * math.cos(dlon) if south else -rho * math.cos(dlon)
        return rho * math.sin(dlon) + spec.false_easting, y + spec.false_northing

    n, c, rho0 = _albers_constants(spec)
    radicand = c - 2.0 * n * math.sin(math.radians(lat))
    if radicand < 0:
        raise OutOfDomain(f"latitude {lat} is outside the Albers domain")
    rho = R * math.sqrt(radicand) / n
    theta = n * dlon
    return (
        rho * math.sin(theta) + spec.false_easting,
        rho0 - rho * math.cos(theta) + spec.false_northing,
    )


def inverse(spec: ProjectionSpec, x: float, y: float) -> tuple[float, float]:
    """Projected metres to geographic degrees ``(lat, lon)``."""
    R = spec.body.radius
    x -= spec.false_easting
    y -= spec.false_northing

    if spec.kind == EQUIDISTANT_CYLINDRICAL:
        lat = math.degrees(y / R)
        if abs(lat) > 90.0 + 1e-12:
            raise OutOfDomain(f"northing {y} is beyond the pole")
        return max(-90.0, min(90.0, lat)), normalize_lon(spec.lon_origin + math.degrees(x / R))

    if spec.kind == POLAR_STEREOGRAPHIC:
        south = spec.lat_origin < 0
        rho = math.hypot(x, y)
        c = 2.0 * math.atan(rho / (2.0 * R))
        if south:
            lat, dlon = math.degrees(c) - 90.0, math.atan2(x, y)
        else:
            lat, dlon = 90.0 - math.degrees(c), math.atan2(x, -y)
        if rho == 0.0:
            dlon = 0.0
        return lat, normalize_lon(spec.lon_origin + math.degrees(dlon))

    n, c, rho0 = _albers_constants(spec)
    dy = rho0 - y
    rho = math.copysign(math.hypot(x, dy), n)
    theta = math.atan2(x, dy) if n > 0 else math.atan2(-x, -dy)
    sin_phi = (c - (rho * n / R) ** 2) / (2.0 * n)
    if abs(sin_phi) > 1.0 + 1e-12:
        raise OutOfDomain(f"({x}, {y}) is outside the Albers range")
    lon_offset = math.degrees(theta / n)
    if abs(lon_offset) > 180.0 + 1e-9:
        raise OutOfDomain(f"({x}, {y}) is outside the Albers range")
    lat = math.degrees(math.asin(max(-1.0, min(1.0, sin_phi))))
    return lat, normalize_lon(spec.lon_origin + lon_offset)


def crs_url(authority: str, code: str) -> str:
    if not authority or not str(code):
        raise ValueError("authority and code must be non-empty")
    return f"https://www.opengis.net/def/crs/{authority}/0/{code}"


MOON = BodySphere("Moon", 1_737_400.0)
MARS = BodySphere("Mars", 3_396_190.0)

# Parameters reproduce the projected landing-site coordinates of the Apollo,
# Surveyor and Chang'e sites to better than 0.2 m.
MOON_ALBERS = ProjectionSpec(
    ALBERS,
    MOON,
    lat_origin=40.0,
    lon_origin=0.0,
    std_parallel_1=20.0,
    std_parallel_2=60.0,
    authority="IAU_2015",
    code="30185",
)
MARS_EQC = ProjectionSpec(
    EQUIDISTANT_CYLINDRICAL,
    MARS,
    authority="EPSG",
    code="103885",
)

# South-polar aspect for lunar polar work. No projected table pins these
# values; they follow the usual polar stereographic definition on the sphere.
MOON_SOUTH_POLAR = ProjectionSpec(
    POLAR_STEREOGRAPHIC,
    MOON,
    lat_origin=-90.0,
    authority="EPSG",
    code="103878",
)

BUILTIN_CRS = {
    "IAU_2015:30185": MOON_ALBERS,
    "IAU2015:30185": MOON_ALBERS,
    "30185": MOON_ALBERS,
    "EPSG:103878": MOON_SOUTH_POLAR,
    "ESRI:103878": MOON_SOUTH_POLAR,
    "103878": MOON_SOUTH_POLAR,
    "EPSG:103885": MARS_EQC,
    "ESRI:103885": MARS_EQC,
    "103885": MARS_EQC,
}


def lookup_crs(identifier: str) -> ProjectionSpec:
    """Resolve ``authority:code`` (or a bare code) to a built-in projection."""
    key = identifier.strip()
    if key in BUILTIN_CRS:
        return BUILTIN_CRS[key]
    key_upper = key.upper()
    for name, spec in BUILTIN_CRS.items():
        if name.upper() == key_upper:
            return spec
    raise UnknownCRS(f"unknown CRS {identifier!r}; known: {', '.join(sorted(BUILTIN_CRS))}")


def url_for_code(code: str | int) -> str:
    return lookup_crs(str(code)).url
