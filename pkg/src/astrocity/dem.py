"""ESRI ASCII elevation grids and their conversion to triangulated terrain."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import Aabb, Polygon2, TriSurface, clip_bbox, points_in_polygon

_HEADER_KEYS = ("ncols", "nrows", "xllcorner", "yllcorner", "cellsize", "nodata_value")


class ParseError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class DimensionMismatch(ValueError):
    pass


class OutsideExtent(ValueError):
    pass


class EmptyResult(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class DemGrid:
    """Regular grid; ``values[0]`` is the northernmost row."""

    ncols: int
    nrows: int
    cellsize: float
    xll: float
    yll: float
    nodata: float
    values: np.ndarray

    def __post_init__(self):
        if not self.cellsize > 0:
            raise ValueError("cellsize must be positive")
        if self.values.shape != (self.nrows, self.ncols):
            raise DimensionMismatch(
                f"values have shape {self.values.shape}, header says {(self.nrows, self.ncols)}"
            )

    def __eq__(self, other):
        if not isinstance(other, DemGrid):
            return NotImplemented
        return (
            (self.ncols, self.nrows, self.cellsize, self.xll, self.yll, self.nodata)
            == (other.ncols, other.nrows, other.cellsize, other.xll, other.yll, other.nodata)
            and np.array_equal(self.values, other.values)
        )

    @property
    def mask(self) -> np.ndarray:
        """True where the cell holds the nodata sentinel."""
        return self.values == self.nodata

    @property
    def extent(self) -> Aabb:
        return Aabb(
            self.xll,
            self.yll,
            self.xll + self.ncols * self.cellsize,
            self.yll + self.nrows * self.cellsize,
        )

    def cell_center(self, row: int, col: int) -> tuple[float, float]:
        return (
            self.xll + (col + 0.5) * self.cellsize,
            self.yll + (self.nrows - row - 0.5) * self.cellsize,
        )

    def cell_index(self, x: float, y: float) -> tuple[int, int]:
        e = self.extent
        if not (e.minx <= x <= e.maxx and e.miny <= y <= e.maxy):
            raise OutsideExtent(f"({x}, {y}) is outside the grid extent")
        col = min(int((x - self.xll) // self.cellsize), self.ncols - 1)
        row_from_south = min(int((y - self.yll) // self.cellsize), self.nrows - 1)
        return self.nrows - 1 - row_from_south, col


def read_asc(text: str) -> DemGrid:
    lines = text.splitlines()
    header: dict[str, str] = {}
    lineno = 0
    while lineno < len(lines):
        parts = lines[lineno].split()
        if not parts:
            lineno += 1
            continue
        key = parts[0].lower()
        if key not in _HEADER_KEYS and key not in ("xllcenter", "yllcenter"):
            break
        if len(parts) != 2:
            raise ParseError(f"malformed header entry {lines[lineno]!r}", lineno + 1)
        header[key] = parts[1]
        lineno += 1

    if "xllcenter" in header or "yllcenter" in header:
        raise ParseError("cell-center origins are not supported; use xllcorner/yllcorner")
    missing = [k for k in _HEADER_KEYS if k not in header]
    if missing:
        raise ParseError(f"missing header keys: {', '.join(missing)}", lineno + 1)
    try:
        ncols, nrows = int(header["ncols"]), int(header["nrows"])
        xll, yll = float(header["xllcorner"]), float(header["yllcorner"])
        cellsize, nodata = float(header["cellsize"]), float(header["nodata_value"])
    except ValueError as exc:
        raise ParseError(f"bad header value: {exc}") from exc
    if ncols < 1 or nrows < 1:
        raise ParseError("ncols and nrows must be positive")

    rows = []
    for i in range(lineno, len(lines)):
        parts = lines[i].split()
        if not parts:
            continue
        if len(parts) != ncols:
            raise DimensionMismatch(f"line {i + 1}: expected {ncols} values, found {len(parts)}")
        try:
            rows.append([float(v) for v in parts])
        except ValueError as exc:
            raise ParseError(f"non-numeric value: {exc}", i + 1) from exc
    if len(rows) != nrows:
        raise DimensionMismatch(f"expected {nrows} rows, found {len(rows)}")
    return DemGrid(ncols, nrows, cellsize, xll, yll, nodata, np.asarray(rows, dtype=float))


def write_asc(g: DemGrid, fmt: str = "%.6g") -> str:
    out = [
        f"ncols {g.ncols}",
        f"nrows {g.nrows}",
        f"xllcorner {g.xll!r}",
        f"yllcorner {g.yll!r}",
        f"cellsize {g.cellsize!r}",
        f"NODATA_value {g.nodata:g}",
    ]
    for row in g.values:
        out.append(" ".join(fmt % v for v in row))
    return "\n".join(out) + "\n"


def aggregate(g: DemGrid, factor: int) -> DemGrid:
    """Block means over ``factor`` x ``factor`` cells, ignoring nodata.

    Partial blocks along the east and south edges are dropped.
    """
    if factor < 1:
        raise ValueError("factor must be >= 1")
    if factor == 1:
        return g
    nr, nc = g.nrows // factor, g.ncols // factor
    if nr == 0 or nc == 0:
        raise ValueError(f"grid {g.nrows}x{g.ncols} is smaller than one {factor}x{factor} block")
    block = g.values[: nr * factor, : nc * factor].reshape(nr, factor, nc, factor)
    valid = block != g.nodata
    counts = valid.sum(axis=(1, 3))
    sums = np.where(valid, block, 0.0).sum(axis=(1, 3))
    with np.errstate(invalid="ignore", divide="ignore"):
        means = np.where(counts > 0, sums / np.maximum(counts, 1), g.nodata)
    dropped_rows = g.nrows - nr * factor
    return DemGrid(
        nc,
        nr,
        g.cellsize * factor,
        g.xll,
        g.yll + dropped_rows * g.cellsize,
        g.nodata,
        means,
    )


def clip(g: DemGrid, bbox: Aabb) -> DemGrid:
    """Smallest cell-aligned subgrid covering ``bbox`` (trimmed to the grid)."""
    if not g.extent.intersects(bbox):
        raise OutsideExtent("bounding box does not intersect the grid")
    cs = g.cellsize
    c0 = max(0, int(math.floor((bbox.minx - g.xll) / cs)))
    c1 = min(g.ncols, int(math.ceil((bbox.maxx - g.xll) / cs)))
    s0 = max(0, int(math.floor((bbox.miny - g.yll) / cs)))  # rows counted from the south
    s1 = min(g.nrows, int(math.ceil((bbox.maxy - g.yll) / cs)))
    c1 = max(c1, c0 + 1)
    s1 = max(s1, s0 + 1)
    r0, r1 = g.nrows - s1, g.nrows - s0
    return DemGrid(
        c1 - c0,
        s1 - s0,
        cs,
        g.xll + c0 * cs,
        g.yll + s0 * cs,
        g.nodata,
        g.values[r0:r1, c0:c1].copy(),
    )


def sample(g: DemGrid, x: float, y: float) -> float | None:
    """Value of the cell containing ``(x, y)``; ``None`` for nodata cells."""
    row, col = g.cell_index(x, y)
    v = g.values[row, col]
    return None if v == g.nodata else float(v)


def tin_from_grid(g: DemGrid, footprint: Polygon2) -> TriSurface:
    """Triangulate cell centres and keep triangles whose centroid lies in ``footprint``.

    Each square of four neighbouring centres is split along its lower-left to
    upper-right diagonal. Triangles touching a nodata cell are discarded.
    """
    if g.nrows < 2 or g.ncols < 2:
        raise EmptyResult("grid needs at least 2x2 cells to triangulate")
    if not g.extent.intersects(clip_bbox(footprint)):
        raise EmptyResult("footprint lies outside the grid")

    cs = g.cellsize
    # flip so that index 0 is the southern row
    z = g.values[::-1]
    nodata = z == g.nodata
    xs = g.xll + (np.arange(g.ncols) + 0.5) * cs
    ys = g.yll + (np.arange(g.nrows) + 0.5) * cs

    # square (i, j) has corners (i, j) lower-left .. (i+1, j+1) upper-right; i = row from south
    ii, jj = np.meshgrid(np.arange(g.nrows - 1), np.arange(g.ncols - 1), indexing="ij")
    ii, jj = ii.ravel(), jj.ravel()
    # lower-right triangle: LL, LR, UR ; upper-left triangle: LL, UR, UL (both counterclockwise)
    tri_corners = (
        ((0, 0), (0, 1), (1, 1)),
        ((0, 0), (1, 1), (1, 0)),
    )
    triangles = []
    for corners in tri_corners:
        ci = np.stack([ii + di for di, _ in corners], axis=1)
        cj = np.stack([jj + dj for _, dj in corners], axis=1)
        cx = xs[cj].mean(axis=1)
        cy = ys[ci].mean(axis=1)
        keep = points_in_polygon(footprint, cx, cy) & ~nodata[ci, cj].any(axis=1)
        for a, b in zip(ci[keep], cj[keep]):
            triangles.append(
                (a[0] * g.ncols + b[0], tuple((xs[b[k]], ys[a[k]], z[a[k], b[k]]) for k in range(3)))
            )
    if not triangles:
        raise EmptyResult("no triangle centroid falls inside the footprint")
    # deterministic order: by lower-left cell, lower-right triangle first
    triangles.sort(key=lambda t: t[0])
    return TriSurface(
        tuple(tuple((float(x), float(y), float(zz)) for x, y, zz in tri) for _, tri in triangles)
    )
