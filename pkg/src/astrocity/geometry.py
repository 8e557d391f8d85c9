"""Planar polygons, prism solids and triangulated surfaces.

Rings are stored open (the first vertex is not repeated). Polygon exteriors
run counterclockwise and holes clockwise; solid surfaces are oriented so
their normals point out of the volume.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np
import shapely
from shapely.geometry import Point as ShapelyPoint
from shapely.geometry import Polygon as ShapelyPolygon

from .issues import Issue

PLANARITY_TOLERANCE = 1e-6
DEFAULT_SEGMENTS = 16

Point2 = tuple[float, float]
Point3 = tuple[float, float, float]
Ring2 = tuple[Point2, ...]
Ring3 = tuple[Point3, ...]


class InvalidPolygon(ValueError):
    pass


class DegenerateHeight(ValueError):
    pass


def signed_area(ring) -> float:
    n = len(ring)
    if n < 3:
        return 0.0
    # relative to the first vertex to avoid cancellation at projected magnitudes
    ox, oy = ring[0][0], ring[0][1]
    a = 0.0
    for i in range(1, n - 1):
        x1, y1 = ring[i][0] - ox, ring[i][1] - oy
        x2, y2 = ring[i + 1][0] - ox, ring[i + 1][1] - oy
        a += x1 * y2 - x2 * y1
    return a / 2.0


def _open_ring(points) -> list[Point2]:
    ring = [(float(p[0]), float(p[1])) for p in points]
    if len(ring) > 1 and ring[0] == ring[-1]:
        ring.pop()
    # drop consecutive repeats
    out = [p for i, p in enumerate(ring) if i == 0 or p != ring[i - 1]]
    if len(out) > 1 and out[0] == out[-1]:
        out.pop()
    return out


@dataclass(frozen=True)
class Aabb:
    minx: float
    miny: float
    maxx: float
    maxy: float

    def intersects(self, other: "Aabb") -> bool:
        return not (
            other.minx > self.maxx
            or other.maxx < self.minx
            or other.miny > self.maxy
            or other.maxy < self.miny
        )


@dataclass(frozen=True)
class Polygon2:
    exterior: Ring2
    holes: tuple[Ring2, ...] = ()

    @classmethod
    def from_rings(cls, exterior, holes=()) -> "Polygon2":
        """Build a polygon, fixing ring closure and orientation, and validate it."""
        ext = _open_ring(exterior)
        if len(ext) < 3:
            raise InvalidPolygon("exterior ring needs at least 3 distinct vertices")
        if signed_area(ext) < 0:
            ext.reverse()
        inner = []
        for h in holes:
            ring = _open_ring(h)
            if len(ring) < 3:
                raise InvalidPolygon("hole ring needs at least 3 distinct vertices")
            if signed_area(ring) > 0:
                ring.reverse()
            inner.append(tuple(ring))
        poly = cls(tuple(ext), tuple(inner))
        poly.validate()
        return poly

    @classmethod
    def rectangle(cls, minx, miny, maxx, maxy) -> "Polygon2":
        return cls.from_rings([(minx, miny), (maxx, miny), (maxx, maxy), (minx, maxy)])

    def rings(self) -> tuple[Ring2, ...]:
        return (self.exterior, *self.holes)

    def to_shapely(self) -> ShapelyPolygon:
        return ShapelyPolygon(self.exterior, self.holes)

    def validate(self) -> None:
        if signed_area(self.exterior) <= 0:
            raise InvalidPolygon("exterior must be counterclockwise with positive area")
        for h in self.holes:
            if signed_area(h) >= 0:
                raise InvalidPolygon("holes must be clockwise")
        shp = self.to_shapely()
        if not shp.is_valid:
            raise InvalidPolygon(shapely.is_valid_reason(shp))

    def translated(self, dx: float, dy: float) -> "Polygon2":
        def move(ring):
            return tuple((x + dx, y + dy) for x, y in ring)

        return Polygon2(move(self.exterior), tuple(move(h) for h in self.holes))


def polygon_from_shapely(geom) -> Polygon2:
    if geom.geom_type != "Polygon":
        raise InvalidPolygon(f"expected a single polygon, got {geom.geom_type}")
    return Polygon2.from_rings(
        list(geom.exterior.coords), [list(r.coords) for r in geom.interiors]
    )


def polygon_area(p: Polygon2) -> float:
    return signed_area(p.exterior) + sum(signed_area(h) for h in p.holes)


def polygon_perimeter(p: Polygon2) -> float:
    total = 0.0
    for ring in p.rings():
        total += sum(math.dist(ring[i], ring[(i + 1) % len(ring)]) for i in range(len(ring)))
    return total


def clip_bbox(p: Polygon2) -> Aabb:
    xs = [x for x, _ in p.exterior]
    ys = [y for _, y in p.exterior]
    return Aabb(min(xs), min(ys), max(xs), max(ys))


def _on_segment(px, py, a, b, eps=1e-12) -> bool:
    (ax, ay), (bx, by) = a, b
    cross = (bx - ax) * (py - ay) - (by - ay) * (px - ax)
    scale = max(1.0, abs(bx - ax) + abs(by - ay))
    if abs(cross) > eps * scale * scale:
        return False
    return min(ax, bx) - eps <= px <= max(ax, bx) + eps and min(ay, by) - eps <= py <= max(ay, by) + eps


def point_in_polygon(p: Polygon2, pt) -> bool:
    """Even-odd ray casting over all rings; boundary points count as inside."""
    x, y = float(pt[0]), float(pt[1])
    inside = False
    for ring in p.rings():
        n = len(ring)
        for i in range(n):
            a, b = ring[i], ring[(i + 1) % n]
            if _on_segment(x, y, a, b):
                return True
            if (a[1] > y) != (b[1] > y):
                xint = a[0] + (y - a[1]) * (b[0] - a[0]) / (b[1] - a[1])
                if x < xint:
                    inside = not inside
    return inside


def points_in_polygon(p: Polygon2, xs, ys) -> np.ndarray:
    """Vectorised even-odd test (boundary handling unspecified)."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    inside = np.zeros(xs.shape, dtype=bool)
    for ring in p.rings():
        r = np.asarray(ring, dtype=float)
        ax, ay = r[:, 0], r[:, 1]
        bx, by = np.roll(ax, -1), np.roll(ay, -1)
        for i in range(len(r)):
            crosses = (ay[i] > ys) != (by[i] > ys)
            if not crosses.any():
                continue
            with np.errstate(divide="ignore", invalid="ignore"):
                xint = ax[i] + (ys - ay[i]) * (bx[i] - ax[i]) / (by[i] - ay[i])
            inside ^= crosses & (xs < xint)
    return inside


def buffer2d(p: Polygon2, r: float, segments_per_quadrant: int = DEFAULT_SEGMENTS) -> Polygon2:
    """Expand ``p`` by a disc of radius ``r`` with round joins."""
    if r < 0 or not math.isfinite(r):
        raise InvalidPolygon(f"buffer radius must be a finite non-negative number, got {r}")
    if segments_per_quadrant < 1:
        raise InvalidPolygon("segments_per_quadrant must be >= 1")
    p.validate()
    if r == 0:
        return p
    grown = p.to_shapely().buffer(r, quad_segs=segments_per_quadrant, join_style="round")
    return polygon_from_shapely(grown)


def buffer_point(x: float, y: float, r: float, segments_per_quadrant: int = DEFAULT_SEGMENTS) -> Polygon2:
    if not r > 0:
        raise InvalidPolygon("a point needs a positive buffer to become a polygon")
    return polygon_from_shapely(ShapelyPoint(x, y).buffer(r, quad_segs=segments_per_quadrant))


@dataclass(frozen=True)
class SolidMesh:
    """Closed shells; each surface is a tuple of rings (exterior first)."""

    shells: tuple[tuple[tuple[Ring3, ...], ...], ...]

    @property
    def outer(self):
        return self.shells[0]

    def vertices(self) -> list[Point3]:
        return [v for shell in self.shells for surface in shell for ring in surface for v in ring]

    def z_range(self) -> tuple[float, float]:
        zs = [v[2] for v in self.vertices()]
        return min(zs), max(zs)


@dataclass(frozen=True)
class TriSurface:
    triangles: tuple[tuple[Point3, Point3, Point3], ...] = field(default_factory=tuple)

    def area(self) -> float:
        if not self.triangles:
            return 0.0
        t = np.asarray(self.triangles, dtype=float)
        return float(0.5 * np.linalg.norm(np.cross(t[:, 1] - t[:, 0], t[:, 2] - t[:, 0]), axis=1).sum())

    def vertices(self) -> list[Point3]:
        return [v for tri in self.triangles for v in tri]


def extrude(p: Polygon2, z_low: float, z_high: float) -> SolidMesh:
    if not z_high > z_low:
        raise DegenerateHeight(f"z_high ({z_high}) must exceed z_low ({z_low})")
    p.validate()

    def lift(ring, z):
        return tuple((x, y, float(z)) for x, y in ring)

    top = tuple(lift(r, z_high) for r in p.rings())
    bottom = tuple(lift(r, z_low)[::-1] for r in p.rings())
    walls = []
    for ring in p.rings():
        n = len(ring)
        for i in range(n):
            (ax, ay), (bx, by) = ring[i], ring[(i + 1) % n]
            walls.append(
                ((
                    (ax, ay, float(z_low)),
                    (bx, by, float(z_low)),
                    (bx, by, float(z_high)),
                    (ax, ay, float(z_high)),
                ),)
            )
    return SolidMesh((tuple([bottom, top, *walls]),))


def buffer3d(p: Polygon2, z_low: float, z_high: float, r: float,
             segments_per_quadrant: int = DEFAULT_SEGMENTS) -> SolidMesh:
    """Prism of ``p`` grown by ``r`` sideways and vertically (corners stay square in z)."""
    if not z_high > z_low:
        raise DegenerateHeight(f"z_high ({z_high}) must exceed z_low ({z_low})")
    return extrude(buffer2d(p, r, segments_per_quadrant), z_low - r, z_high + r)


def solid_volume(s: SolidMesh) -> float:
    """Signed volume summed over all shells (positive for outward normals)."""
    verts = s.vertices()
    if not verts:
        return 0.0
    ref = np.asarray(verts[0], dtype=float)
    total = 0.0
    for shell in s.shells:
        for surface in shell:
            for ring in surface:
                pts = np.asarray(ring, dtype=float) - ref
                if len(pts) < 3:
                    continue
                v0 = pts[0]
                a, b = pts[1:-1], pts[2:]
                total += float(np.einsum("ij,ij->i", np.broadcast_to(v0, a.shape), np.cross(a, b)).sum())
    return total / 6.0


def _plane_deviation(points) -> float:
    pts = np.asarray(points, dtype=float)
    if len(pts) <= 3:
        return 0.0
    centered = pts - pts.mean(axis=0)
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    normal = vt[-1]
    return float(np.abs(centered @ normal).max())


def check_watertight(s: SolidMesh, tolerance: float = PLANARITY_TOLERANCE) -> list[Issue]:
    """Edge pairing, orientation, planarity and volume checks for the outer shell."""
    issues: list[Issue] = []
    if not s.shells or not s.outer:
        return [Issue("UNMATCHED_EDGE", message="solid has no surfaces")]

    directed: Counter = Counter()
    for si, surface in enumerate(s.outer):
        for ring in surface:
            n = len(ring)
            for i in range(n):
                directed[(tuple(ring[i]), tuple(ring[(i + 1) % n]))] += 1
        pts = [v for ring in surface for v in ring]
        dev = _plane_deviation(pts)
        if dev > tolerance:
            issues.append(
                Issue("NON_PLANAR", path=f"surface {si}", message=f"max plane deviation {dev:.3g} m")
            )

    seen: set = set()
    for (a, b) in directed:
        key = frozenset((a, b))
        if key in seen:
            continue
        seen.add(key)
        fwd, back = directed.get((a, b), 0), directed.get((b, a), 0)
        if fwd + back != 2:
            issues.append(
                Issue("UNMATCHED_EDGE", path=f"{a}-{b}", message=f"edge used by {fwd + back} surfaces")
            )
        elif fwd != 1:
            issues.append(
                Issue("ORIENTATION", path=f"{a}-{b}", message="edge traversed twice in the same direction")
            )

    volume = solid_volume(SolidMesh((s.outer,)))
    if not volume > 0:
        issues.append(Issue("NONPOSITIVE_VOLUME", message=f"signed volume {volume:.6g}"))
    return issues
