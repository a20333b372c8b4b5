"""Synthetic target-surface heightfield and the discrete docking-site lattice.

The heightfield stands in for the camera-built 3D map of the target
spacecraft: a scalar depth function z = m(x, y) sampled on a regular grid and
queried through bilinear interpolation. Docking sites are the lattice points
of a configurable spacing lying on that surface.
"""

from dataclasses import dataclass

import numpy as np


class MapDomainError(ValueError):
    """Query outside the heightfield extent."""


@dataclass(frozen=True)
class HeightMap:
    origin: tuple          # (x0, y0), metres
    resolution: float      # metres per cell
    heights: np.ndarray    # shape (nx, ny), z at node (i, j)

    def __post_init__(self):
        if self.resolution <= 0.0:
            raise ValueError("resolution must be positive")
        h = np.asarray(self.heights, dtype=float)
        if h.ndim != 2 or h.size == 0:
            raise ValueError("heights must be a non-empty 2-D grid")
        if not np.all(np.isfinite(h)):
            raise ValueError("heights must be finite")
        object.__setattr__(self, "heights", h)
        object.__setattr__(self, "origin", (float(self.origin[0]), float(self.origin[1])))

    @property
    def x_max(self):
        return self.origin[0] + (self.heights.shape[0] - 1) * self.resolution

    @property
    def y_max(self):
        return self.origin[1] + (self.heights.shape[1] - 1) * self.resolution

    def contains(self, x, y):
        return (self.origin[0] - 1e-12 <= x <= self.x_max + 1e-12
                and self.origin[1] - 1e-12 <= y <= self.y_max + 1e-12)


@dataclass(frozen=True)
class DockingGrid:
    sites: np.ndarray      # (n_sites, 3), each on the map surface
    spacing: float

    def __post_init__(self):
        s = np.asarray(self.sites, dtype=float).reshape(-1, 3)
        if len(s) == 0:
            raise ValueError("docking grid must contain at least one site")
        object.__setattr__(self, "sites", s)


def build_planar_map(extent, resolution, z0=0.0):
    """Planar heightfield covering ``extent = ((x_min, x_max), (y_min, y_max))``."""
    (x_min, x_max), (y_min, y_max) = extent
    if resolution <= 0.0:
        raise ValueError("resolution must be positive")
    if x_max <= x_min or y_max <= y_min:
        raise ValueError("extent ranges must be increasing")
    nx = int(np.floor((x_max - x_min) / resolution + 1e-9)) + 1
    ny = int(np.floor((y_max - y_min) / resolution + 1e-9)) + 1
    heights = np.full((nx, ny), float(z0))
    return HeightMap(origin=(x_min, y_min), resolution=resolution, heights=heights)


def height_at(hmap, x, y):
    """Bilinear surface depth at (x, y); exact at grid nodes.

    Raises MapDomainError outside the extent: the map never extrapolates.
    """
    x0, y0 = hmap.origin
    if not hmap.contains(x, y):
        raise MapDomainError(
            f"query ({x:.6g}, {y:.6g}) outside map extent "
            f"[{x0:.6g}, {hmap.x_max:.6g}] x [{y0:.6g}, {hmap.y_max:.6g}]")
    res = hmap.resolution
    nx, ny = hmap.heights.shape
    fx = (x - x0) / res
    fy = (y - y0) / res
    i = min(int(np.floor(fx + 1e-12)), nx - 2) if nx > 1 else 0
    j = min(int(np.floor(fy + 1e-12)), ny - 2) if ny > 1 else 0
    i = max(i, 0)
    j = max(j, 0)
    tx = fx - i if nx > 1 else 0.0
    ty = fy - j if ny > 1 else 0.0
    h = hmap.heights
    i1 = min(i + 1, nx - 1)
    j1 = min(j + 1, ny - 1)
    return ((1 - tx) * (1 - ty) * h[i, j] + tx * (1 - ty) * h[i1, j]
            + (1 - tx) * ty * h[i, j1] + tx * ty * h[i1, j1])


def height_at_many(hmap, xy):
    """Vectorized height_at over an (n, 2) array of query points."""
    return np.array([height_at(hmap, x, y) for x, y in np.asarray(xy, dtype=float).reshape(-1, 2)])


def make_docking_grid(hmap, spacing):
    """Docking sites at every ``spacing``-lattice point of the map extent."""
    if spacing <= 0.0:
        raise ValueError("spacing must be positive")
    x0, y0 = hmap.origin
    if spacing > (hmap.x_max - x0) or spacing > (hmap.y_max - y0):
        raise ValueError("spacing exceeds map extent")
    nx = int(np.floor((hmap.x_max - x0) / spacing + 1e-9)) + 1
    ny = int(np.floor((hmap.y_max - y0) / spacing + 1e-9)) + 1
    sites = []
    for j in range(nx):
        for k in range(ny):
            x = x0 + j * spacing
            y = y0 + k * spacing
            sites.append((x, y, height_at(hmap, x, y)))
    return DockingGrid(sites=np.array(sites), spacing=spacing)


def snap_to_site(grid, p):
    """Closest site to p; ties broken by lexicographic (x, then y) order."""
    p = np.asarray(p, dtype=float).reshape(3)
    d2 = np.sum((grid.sites - p) ** 2, axis=1)
    best = np.min(d2)
    candidates = np.flatnonzero(d2 <= best + 1e-15)
    if len(candidates) > 1:
        order = np.lexsort((grid.sites[candidates, 1], grid.sites[candidates, 0]))
        return grid.sites[candidates[order[0]]].copy()
    return grid.sites[candidates[0]].copy()


def body_clearance_ok(hmap, body_position, delta):
    """True iff the body keeps a strict clearance delta above the surface."""
    p = np.asarray(body_position, dtype=float).reshape(3)
    return p[2] - height_at(hmap, p[0], p[1]) > delta


def save_heightmap(hmap, path):
    nx, ny = hmap.heights.shape
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"heightmap v1 origin {hmap.origin[0]!r} {hmap.origin[1]!r} "
                 f"resolution {hmap.resolution!r} dims {nx} {ny}\n")
        for i in range(nx):
            fh.write(" ".join(repr(v) for v in hmap.heights[i]) + "\n")


def load_heightmap(path):
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().split()
        if header[:2] != ["heightmap", "v1"]:
            raise ValueError(f"not a heightmap file: {path}")
        x0, y0 = float(header[3]), float(header[4])
        res = float(header[6])
        nx, ny = int(header[8]), int(header[9])
        rows = [[float(v) for v in fh.readline().split()] for _ in range(nx)]
    heights = np.array(rows)
    if heights.shape != (nx, ny):
        raise ValueError(f"heightmap data shape {heights.shape} does not match header ({nx}, {ny})")
    return HeightMap(origin=(x0, y0), resolution=res, heights=heights)
