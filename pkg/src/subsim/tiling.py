"""Terrain mesh tiles and dynamic load/unload management.

The heightmap extent is partitioned into square core regions. Each
tile's mesh covers its core plus an overlap margin on every side (depth
samples beyond the map edge are edge-clamped), so neighbouring tiles
share identical geometry in the overlap band and sensor readings stay
continuous across the seam. A TileManager loads tiles around vehicles
with a dual-radius hysteresis so boundary oscillation cannot thrash.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .bathymetry import Heightmap, HeightmapError, NodataError, depth_at_xy
from .geodesy import ProjectedCoord
from .meshtools import TriMesh, save_obj

DEFAULT_TILE_SIZE_M = 1000.0
DEFAULT_OVERLAP_M = 50.0
DEFAULT_LOAD_RADIUS_M = 1500.0
DEFAULT_UNLOAD_RADIUS_M = 2000.0


@dataclass(frozen=True)
class Bounds:
    """Axis-aligned rectangle in world meters."""

    x0: float
    y0: float
    x1: float
    y1: float

    def distance_to(self, x: float, y: float) -> float:
        dx = max(self.x0 - x, 0.0, x - self.x1)
        dy = max(self.y0 - y, 0.0, y - self.y1)
        return math.hypot(dx, dy)


@dataclass(frozen=True)
class TileSpec:
    """Tile placement without mesh data."""

    index: tuple[int, int]  # (row, col)
    core_bounds: Bounds
    overlap_margin: float


@dataclass(frozen=True, eq=False)
class Tile:
    """Placement plus the colorized mesh covering core + overlap."""

    index: tuple[int, int]
    core_bounds: Bounds
    overlap_margin: float
    mesh: TriMesh
    source_region: tuple[int, int, int, int]  # node range (row0, col0, row1, col1)


def grid_tile_specs(h: Heightmap, tile_size: float, overlap: float) -> list[TileSpec]:
    """Partition the heightmap extent into tile cores, row-major order."""
    if tile_size <= 2.0 * overlap:
        raise HeightmapError("tile_size must exceed twice the overlap")
    x_min, y_min, x_max, y_max = h.extent
    width, height = x_max - x_min, y_max - y_min
    if width <= 0.0 or height <= 0.0:
        raise HeightmapError("degenerate heightmap extent")
    # The 1e-6 slack absorbs sub-micrometre slivers from Mercator stretch.
    nx = max(1, math.ceil(width / tile_size - 1e-6))
    ny = max(1, math.ceil(height / tile_size - 1e-6))
    specs = []
    for r in range(ny):
        for c in range(nx):
            core = Bounds(
                x_min + c * tile_size,
                y_min + r * tile_size,
                min(x_min + (c + 1) * tile_size, x_max),
                min(y_min + (r + 1) * tile_size, y_max),
            )
            specs.append(TileSpec((r, c), core, overlap))
    return specs


def _tile_axis_samples(nodes: np.ndarray, lo: float, hi: float) -> np.ndarray:
    inner = nodes[(nodes > lo) & (nodes < hi)]
    return np.concatenate(([lo], inner, [hi]))


def _depth_color(depth: np.ndarray, d_min: float, d_max: float) -> np.ndarray:
    """Linear blue (shallow) to red (deep) colormap."""
    span = d_max - d_min
    t = (depth - d_min) / span if span > 0.0 else np.zeros_like(depth)
    return np.stack([t, np.zeros_like(t), 1.0 - t], axis=-1)


def generate_tiles(h: Heightmap, tile_size: float, overlap: float) -> list[Tile]:
    """Build colorized meshes for every tile.

    Mesh vertices lie on the global node lattice (plus the exact tile
    boundary coordinates), sampled with edge clamping so tiles at the map
    border still span core + overlap. Vertex colors map the tile set's
    global depth range; raises NodataError if the map contains nodata.
    """
    if np.isnan(h.depth).any():
        raise NodataError("cannot generate tiles over nodata cells")
    specs = grid_tile_specs(h, tile_size, overlap)
    d_min = float(np.nanmin(h.depth))
    d_max = float(np.nanmax(h.depth))
    tiles = []
    for spec in specs:
        b = spec.core_bounds
        ex = (b.x0 - overlap, b.x1 + overlap)
        ey = (b.y0 - overlap, b.y1 + overlap)
        sx = _tile_axis_samples(h.xs, *ex)
        sy = _tile_axis_samples(h.ys, *ey)
        gx, gy = np.meshgrid(sx, sy)
        depths = depth_at_xy(h, gx.ravel(), gy.ravel(), clamp=True)
        verts = np.stack([gx.ravel(), gy.ravel(), -depths], axis=-1)
        colors = _depth_color(depths, d_min, d_max)
        tris = _lattice_triangles(len(sy), len(sx))
        col0 = int(np.searchsorted(h.xs, ex[0]))
        row0 = int(np.searchsorted(h.ys, ey[0]))
        col1 = int(np.searchsorted(h.xs, ex[1], side="right") - 1)
        row1 = int(np.searchsorted(h.ys, ey[1], side="right") - 1)
        tiles.append(
            Tile(
                index=spec.index,
                core_bounds=b,
                overlap_margin=overlap,
                mesh=TriMesh(verts, tris, colors),
                source_region=(row0, col0, row1, col1),
            )
        )
    return tiles


def _lattice_triangles(n_rows: int, n_cols: int) -> np.ndarray:
    r, c = np.meshgrid(np.arange(n_rows - 1), np.arange(n_cols - 1), indexing="ij")
    v00 = (r * n_cols + c).ravel()
    v10 = v00 + 1
    v01 = v00 + n_cols
    v11 = v01 + 1
    return np.concatenate(
        [np.stack([v00, v10, v11], axis=-1), np.stack([v00, v11, v01], axis=-1)]
    )


def write_tiles(tiles: Sequence[Tile], out_dir) -> Path:
    """Write one OBJ per tile plus a manifest CSV (index, bounds, path)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = out_dir / "tiles.csv"
    with open(manifest, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["row", "col", "x0", "y0", "x1", "y1", "path"])
        for tile in tiles:
            name = f"tile_{tile.index[0]:03d}_{tile.index[1]:03d}.obj"
            save_obj(tile.mesh, out_dir / name)
            b = tile.core_bounds
            writer.writerow(
                [tile.index[0], tile.index[1]]
                + [repr(float(v)) for v in (b.x0, b.y0, b.x1, b.y1)]
                + [name]
            )
    return manifest


@dataclass(frozen=True)
class TileEvent:
    """A tile load or unload emitted by TileManager.update_tiles."""

    action: str  # "load" | "unload"
    index: tuple[int, int]


class TileManager:
    """Tracks which tiles are loaded around a set of vehicles.

    Hysteresis: a tile loads when its core comes within load_radius of a
    vehicle and unloads only once beyond unload_radius of every vehicle,
    so positions oscillating across a tile boundary produce no event
    churn. Single-writer: call update_tiles from one thread.
    """

    def __init__(
        self,
        tiles: Sequence[TileSpec] | Sequence[Tile],
        load_radius: float = DEFAULT_LOAD_RADIUS_M,
        unload_radius: float = DEFAULT_UNLOAD_RADIUS_M,
    ):
        if load_radius <= 0.0:
            raise ValueError("load_radius must be positive")
        if unload_radius <= load_radius:
            raise ValueError("unload_radius must exceed load_radius (hysteresis)")
        self.load_radius = load_radius
        self.unload_radius = unload_radius
        self._bounds = {t.index: t.core_bounds for t in tiles}
        self.loaded: set[tuple[int, int]] = set()

    def update_tiles(self, vehicles: Sequence[ProjectedCoord]) -> list[TileEvent]:
        """Apply the hysteresis rule; returns the minimal event list."""
        positions = [(v.x, v.y) for v in vehicles]
        needed = set()
        keep = set()
        for index, bounds in self._bounds.items():
            for x, y in positions:
                dist = bounds.distance_to(x, y)
                if dist <= self.load_radius:
                    needed.add(index)
                    break
                if index in self.loaded and dist <= self.unload_radius:
                    keep.add(index)
                    break
        new_loaded = needed | (keep & self.loaded)
        events = [TileEvent("load", i) for i in sorted(needed - self.loaded)]
        events += [TileEvent("unload", i) for i in sorted(self.loaded - new_loaded)]
        self.loaded = new_loaded
        return events
