import numpy as np
import pytest

from subsim.bathymetry import Heightmap
from subsim.geodesy import GeodeticCoord

# Meters of Mercator easting per degree of longitude (exact); near the
# equator a degree of latitude spans almost exactly the same northing.
METERS_PER_DEG = 111319.49079327358


def make_heightmap(depth_grid, cell_m=10.0, lat0=0.0, lon0=0.0) -> Heightmap:
    """Heightmap whose node spacing is ~cell_m meters near (lat0, lon0).

    The latitude cell is shrunk by 1e-9 relative so the northing extent
    never overshoots rows*cell_m through Mercator stretching.
    """
    cell_lon = cell_m / METERS_PER_DEG
    cell_lat = cell_lon * (1.0 - 1e-9)
    return Heightmap(GeodeticCoord(lat0, lon0), (cell_lat, cell_lon), np.asarray(depth_grid))


def flat_heightmap(depth=50.0, n=11, cell_m=10.0) -> Heightmap:
    return make_heightmap(np.full((n, n), float(depth)), cell_m=cell_m)


def smooth_random_grid(rng, shape, base=40.0, relief=8.0, passes=4):
    """Random but spatially correlated depth grid (seafloor-like relief)."""
    g = rng.uniform(-1.0, 1.0, shape)
    for _ in range(passes):
        g = (g + np.roll(g, 1, 0) + np.roll(g, -1, 0) + np.roll(g, 1, 1) + np.roll(g, -1, 1)) / 5.0
    return base + relief * g / np.max(np.abs(g))


@pytest.fixture
def flat50():
    """Flat 100 m x 100 m map, 50 m deep, 10 m cells around (0, 0)."""
    return flat_heightmap(50.0, n=11, cell_m=10.0)
