import math

import numpy as np
import pytest

from subsim import lidar
from subsim.bathymetry import RAYCAST_TOL_M, depth_at_xy
from subsim.geometry import Pose

from conftest import flat_heightmap


def down_pose(h, depth):
    """Sensor at map center looking straight down (pitch -90 deg)."""
    mid = len(h.xs) // 2
    return Pose.from_rpy(float(h.xs[mid]), float(h.ys[mid]), depth, pitch=-math.pi / 2.0)


SMALL = lidar.LidarConfig(rays_h=12, rays_v=12, supersample=2)


# --- pan/tilt mount ----------------------------------------------------------


def test_command_within_limits_passes_through():
    state, clamped = lidar.command_mount(lidar.PanTiltState(), 0.0, 0.0)
    assert state == lidar.PanTiltState(0.0, 0.0)
    assert not clamped


def test_pan_clamps_at_175():
    state, clamped = lidar.command_mount(lidar.PanTiltState(), 200.0, 0.0)
    assert state.pan_deg == 175.0
    assert clamped


def test_tilt_clamps_at_30():
    state, clamped = lidar.command_mount(lidar.PanTiltState(), -10.0, -45.0)
    assert state == lidar.PanTiltState(-10.0, -30.0)
    assert clamped


def test_mount_never_exits_limit_box():
    rng = np.random.default_rng(71)
    state = lidar.PanTiltState()
    for _ in range(1000):
        state, _ = lidar.command_mount(state, rng.uniform(-720, 720), rng.uniform(-720, 720))
        assert abs(state.pan_deg) <= lidar.PAN_LIMIT_DEG
        assert abs(state.tilt_deg) <= lidar.TILT_LIMIT_DEG


def test_pan_sweep_covers_full_circle():
    # 30 deg sector on a +/-175 deg pan: union spans 380 deg >= 360.
    fov = 30.0
    lo = -lidar.PAN_LIMIT_DEG - fov / 2.0
    hi = lidar.PAN_LIMIT_DEG + fov / 2.0
    assert hi - lo >= 360.0
    # Likewise 30 deg vertical sector on +/-30 deg tilt covers 90 deg.
    assert 2.0 * lidar.TILT_LIMIT_DEG + fov >= 90.0


# --- scanning ------------------------------------------------------------------


def test_empty_scene_gives_empty_cloud():
    h = flat_heightmap(500.0, n=11, cell_m=10.0)  # bottom far beyond range
    cloud = lidar.scan(Pose.level(float(h.xs[5]), float(h.ys[5]), 0.0),
                       lidar.PanTiltState(), h, SMALL)
    assert len(cloud.points) == 0


def test_wall_beyond_max_range_gives_empty_cloud():
    h = flat_heightmap(50.0, n=11, cell_m=10.0)
    cloud = lidar.scan(down_pose(h, 25.0), lidar.PanTiltState(), h,
                       lidar.LidarConfig(rays_h=8, rays_v=8, supersample=1, max_range=20.0))
    assert len(cloud.points) == 0  # floor 25 m away, range 20 m


def test_perpendicular_wall_at_10m():
    h = flat_heightmap(50.0, n=41, cell_m=5.0)
    cfg = lidar.LidarConfig(rays_h=10, rays_v=10, supersample=3, max_range=20.0)
    cloud = lidar.scan(down_pose(h, 40.0), lidar.PanTiltState(), h, cfg)
    n_rays = (cfg.rays_h * cfg.supersample) * (cfg.rays_v * cfg.supersample)
    assert len(cloud.points) == n_rays  # every ray lands on the floor
    # Sector geometry: ranges between 10 and 10/cos(15 deg * sqrt(2)).
    assert cloud.ranges.min() >= 10.0 - 1e-3
    assert cloud.ranges.max() <= 10.0 / math.cos(math.radians(15.0 * math.sqrt(2.0)))
    # Every point lies on the wall plane (the 50 m seabed).
    assert np.allclose(cloud.points[:, 2], 50.0, atol=10.0 * RAYCAST_TOL_M)


def test_points_lie_on_surface_zero_noise():
    rng = np.random.default_rng(72)
    from conftest import make_heightmap

    h = make_heightmap(rng.uniform(20.0, 35.0, (21, 21)), cell_m=10.0)
    pose = down_pose(h, 5.0)
    cloud = lidar.scan(pose, lidar.PanTiltState(), h, lidar.LidarConfig(
        rays_h=12, rays_v=12, supersample=2, max_range=40.0))
    assert len(cloud.points) > 0
    surface = depth_at_xy(h, cloud.points[:, 0], cloud.points[:, 1])
    assert np.nanmax(np.abs(surface - cloud.points[:, 2])) <= 10.0 * RAYCAST_TOL_M


def test_point_count_and_range_bounds():
    h = flat_heightmap(30.0, n=21, cell_m=10.0)
    cfg = lidar.LidarConfig(rays_h=9, rays_v=7, supersample=2, max_range=35.0)
    cloud = lidar.scan(down_pose(h, 0.0), lidar.PanTiltState(), h, cfg)
    assert len(cloud.points) <= (9 * 2) * (7 * 2)
    assert np.all(cloud.ranges <= 35.0)


def test_mount_steers_the_sector():
    h = flat_heightmap(30.0, n=41, cell_m=10.0)
    pose = Pose.level(float(h.xs[20]), float(h.ys[20]), 10.0)
    # Level sensor looking north: flat floor 20 m below is out of the
    # 30-deg sector. Tilting down 30 deg brings it in at ~40 m... use a
    # short range so only the tilted mount sees returns.
    cfg = lidar.LidarConfig(rays_h=8, rays_v=8, supersample=1, max_range=60.0)
    level_cloud = lidar.scan(pose, lidar.PanTiltState(), h, cfg)
    tilted, _ = lidar.command_mount(lidar.PanTiltState(), 0.0, -30.0)
    tilted_cloud = lidar.scan(pose, tilted, h, cfg)
    assert len(tilted_cloud.points) > len(level_cloud.points)


def test_range_noise_deterministic_under_seed():
    h = flat_heightmap(30.0, n=21, cell_m=10.0)
    cfg = lidar.LidarConfig(rays_h=6, rays_v=6, supersample=1, max_range=40.0,
                            range_noise_sigma=0.05)
    pose = down_pose(h, 5.0)
    a = lidar.scan(pose, lidar.PanTiltState(), h, cfg, np.random.default_rng(5))
    b = lidar.scan(pose, lidar.PanTiltState(), h, cfg, np.random.default_rng(5))
    c = lidar.scan(pose, lidar.PanTiltState(), h, cfg, np.random.default_rng(6))
    assert np.array_equal(a.points, b.points)
    assert not np.array_equal(a.points, c.points)


def test_ply_export(tmp_path):
    h = flat_heightmap(30.0, n=21, cell_m=10.0)
    cloud = lidar.scan(down_pose(h, 5.0), lidar.PanTiltState(), h,
                       lidar.LidarConfig(rays_h=4, rays_v=4, supersample=1, max_range=40.0))
    out = tmp_path / "scan.ply"
    lidar.write_ply(cloud, out)
    text = out.read_text().splitlines()
    assert text[0] == "ply"
    assert f"element vertex {len(cloud.points)}" in text
    header_end = text.index("end_header")
    assert len(text) - header_end - 1 == len(cloud.points)


def test_config_validation():
    with pytest.raises(ValueError):
        lidar.LidarConfig(rays_h=1)
    with pytest.raises(ValueError):
        lidar.LidarConfig(supersample=0)
    with pytest.raises(ValueError):
        lidar.PanTiltState(200.0, 0.0)
