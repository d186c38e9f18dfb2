import itertools
import math

import numpy as np
import pytest

from subsim import dvl
from subsim.geometry import Pose, ned

from conftest import make_heightmap, flat_heightmap


def level_pose(h, depth=0.0):
    """Sensor centered over the map at the given depth, facing north."""
    return Pose.level(float(h.xs[len(h.xs) // 2]), float(h.ys[len(h.ys) // 2]), depth)


@pytest.fixture
def flat100():
    """Flat 50 m deep map large enough for full beam footprints."""
    return flat_heightmap(50.0, n=21, cell_m=10.0)


def test_janus_beams_are_unit_and_tilted():
    beams = dvl.janus_beams()
    assert np.allclose(np.linalg.norm(beams, axis=1), 1.0)
    assert np.all(beams[:, 2] < 0.0)
    assert np.allclose(np.degrees(np.arccos(-beams[:, 2])), 30.0)


def test_beam_ranges_level_over_flat_bottom(flat100):
    cfg = dvl.DvlConfig()
    ranges = dvl.beam_ranges(level_pose(flat100), flat100, cfg)
    # 50 m altitude and 30 deg beams: slant range 50/cos(30 deg).
    assert np.allclose(ranges, 50.0 / math.cos(math.radians(30.0)), atol=1e-3)


def test_beam_ranges_below_min_range():
    h = flat_heightmap(10.0, n=21, cell_m=10.0)
    cfg = dvl.DvlConfig(min_range=20.0)
    ranges = dvl.beam_ranges(level_pose(h), h, cfg)
    assert np.all(np.isnan(ranges))


def test_beam_ranges_over_cliff_edge():
    # West half 30 m deep, east half far beyond max_range.
    grid = np.full((21, 21), 30.0)
    grid[:, 11:] = 500.0
    h = make_heightmap(grid, cell_m=10.0)
    cfg = dvl.DvlConfig(max_range=60.0)
    ranges = dvl.beam_ranges(level_pose(h), h, cfg)
    hits = np.isfinite(ranges)
    assert 0 < hits.sum() < 4  # east-side beams miss, west-side beams hit


def test_solve_velocity_zeros():
    v = dvl.solve_velocity(dvl.janus_beams(), np.zeros(4))
    assert np.allclose(v, 0.0, atol=1e-12)


def test_solve_velocity_recovers_forward_generated():
    beams = dvl.janus_beams()
    rng = np.random.default_rng(61)
    for _ in range(50):
        truth = rng.uniform(-2.0, 2.0, 3)
        scalars = beams @ truth
        assert np.allclose(dvl.solve_velocity(beams, scalars), truth, atol=1e-9)


def test_three_beam_solve_matches_exact_oracle():
    beams = dvl.janus_beams()
    truth = np.array([1.0, 0.5, -0.2])
    scalars = beams @ truth
    valid = np.array([True, True, True, False])
    got = dvl.solve_velocity(beams, np.where(valid, scalars, np.nan), valid=valid)
    oracle = np.linalg.solve(beams[:3], scalars[:3])  # exact 3x3 solve
    assert np.allclose(got, oracle, atol=1e-9)
    assert np.allclose(got, truth, atol=1e-9)


def test_solve_velocity_subset_invariance():
    beams = dvl.janus_beams()
    truth = np.array([-0.4, 1.2, 0.3])
    scalars = beams @ truth
    for subset in itertools.combinations(range(4), 3):
        valid = np.zeros(4, dtype=bool)
        valid[list(subset)] = True
        got = dvl.solve_velocity(beams, np.where(valid, scalars, np.nan), valid=valid)
        assert np.allclose(got, truth, atol=1e-9)


def test_degenerate_geometry_raises():
    beams = dvl.janus_beams()
    with pytest.raises(dvl.DegenerateBeamGeometryError):
        dvl.solve_velocity(beams, np.array([0.1, 0.2, np.nan, np.nan]))
    parallel = np.tile([0.0, 0.0, -1.0], (4, 1))
    with pytest.raises(dvl.DegenerateBeamGeometryError):
        dvl.solve_velocity(parallel, np.zeros(4))


def test_bottom_track_stationary(flat100):
    cfg = dvl.DvlConfig()
    sol = dvl.bottom_track(level_pose(flat100), ned(0, 0, 0), flat100, cfg)
    assert sol.mode is dvl.TrackingMode.BOTTOM_TRACK
    assert np.allclose(sol.velocity, 0.0, atol=1e-12)
    assert sol.altitude == pytest.approx(50.0, abs=1e-3)


def test_bottom_track_recovers_world_velocity(flat100):
    cfg = dvl.DvlConfig()
    pose = level_pose(flat100)
    sol = dvl.bottom_track(pose, ned(1.0, 0.0, 0.0), flat100, cfg)
    # Level pose: sensor x is north, so the sensor-frame solution is (1,0,0).
    assert np.allclose(sol.velocity, [1.0, 0.0, 0.0], atol=1e-9)


def test_bottom_track_random_attitudes(flat100):
    cfg = dvl.DvlConfig()
    rng = np.random.default_rng(62)
    for _ in range(25):
        pose = Pose.from_rpy(
            float(flat100.xs[10]),
            float(flat100.ys[10]),
            rng.uniform(0.0, 20.0),
            roll=rng.uniform(-0.15, 0.15),
            pitch=rng.uniform(-0.15, 0.15),
            yaw=rng.uniform(-math.pi, math.pi),
        )
        vel = rng.uniform(-1.5, 1.5, 3)
        sol = dvl.bottom_track(pose, vel, flat100, cfg)
        assert sol.mode is dvl.TrackingMode.BOTTOM_TRACK
        assert np.allclose(sol.velocity, pose.to_body(vel), atol=1e-9)


def test_two_beam_hit_is_not_bottom_track():
    pose = Pose.level(0.0, 0.0, 0.0)
    cfg = dvl.DvlConfig()
    ranges = np.array([40.0, 40.0, np.nan, np.nan])
    sol = dvl.solution_from_ranges(pose, ned(1, 0, 0), ranges, cfg)
    assert sol.mode is not dvl.TrackingMode.BOTTOM_TRACK


def test_mode_priority_all_16_patterns():
    pose = Pose.level(0.0, 0.0, 0.0)
    vel = ned(0.5, -0.2, 0.1)
    for pattern in itertools.product([True, False], repeat=4):
        ranges = np.where(pattern, 45.0, np.nan)
        n_hits = sum(pattern)
        for enabled in (True, False):
            cfg = dvl.DvlConfig(water_track_enabled=enabled)
            sol = dvl.solution_from_ranges(pose, vel, ranges, cfg)
            if n_hits >= 3:
                assert sol.mode is dvl.TrackingMode.BOTTOM_TRACK
            else:
                assert sol.mode is dvl.TrackingMode.NONE
                fallback = dvl.measure(
                    pose, vel, None, lambda depth: np.zeros(3), cfg,
                    np.random.default_rng(0),
                )
                expected = dvl.TrackingMode.WATER_TRACK if enabled else dvl.TrackingMode.NONE
                assert fallback.mode is expected


def test_water_track_drifting_with_current_reads_zero():
    cfg = dvl.DvlConfig()
    current = ned(0.3, -0.1, 0.0)
    sol = dvl.water_track(Pose.level(0, 0, 10.0), current, lambda depth: current, cfg)
    assert sol.mode is dvl.TrackingMode.WATER_TRACK
    assert np.allclose(sol.velocity, 0.0, atol=1e-12)


def test_water_track_stationary_in_current():
    cfg = dvl.DvlConfig()
    sol = dvl.water_track(
        Pose.level(0, 0, 10.0), ned(0, 0, 0), lambda depth: ned(0.3, 0.0, 0.0), cfg
    )
    # Level pose: sensor x axis is north, so -0.3 on x.
    assert np.allclose(sol.velocity, [-0.3, 0.0, 0.0], atol=1e-12)


def test_water_track_samples_sensor_depth():
    cfg = dvl.DvlConfig()
    seen = []

    def current(depth):
        seen.append(depth)
        return ned(0, 0, 0)

    dvl.water_track(Pose.level(0, 0, 23.5), ned(0, 0, 0), current, cfg)
    assert seen == [23.5]


def test_measure_none_when_water_track_disabled():
    cfg = dvl.DvlConfig(water_track_enabled=False)
    sol = dvl.measure(
        Pose.level(0, 0, 0), ned(1, 0, 0), None, lambda d: np.zeros(3), cfg,
        np.random.default_rng(0),
    )
    assert sol.mode is dvl.TrackingMode.NONE
    assert sol.velocity is None


def test_zero_noise_is_identity(flat100):
    cfg = dvl.DvlConfig()
    pose = level_pose(flat100)
    clean = dvl.bottom_track(pose, ned(0.7, 0.2, 0.0), flat100, cfg)
    noisy = dvl.add_beam_noise(clean, 0.0, np.random.default_rng(3), cfg)
    assert noisy.noisy
    assert np.allclose(noisy.velocity, clean.velocity, atol=0.0)
    assert np.array_equal(noisy.beam_velocities, clean.beam_velocities)


def test_noise_deterministic_under_seed(flat100):
    cfg = dvl.DvlConfig()
    pose = level_pose(flat100)
    clean = dvl.bottom_track(pose, ned(0.7, 0.2, 0.0), flat100, cfg)
    a = dvl.add_beam_noise(clean, 0.01, np.random.default_rng(42), cfg)
    b = dvl.add_beam_noise(clean, 0.01, np.random.default_rng(42), cfg)
    assert np.array_equal(a.velocity, b.velocity)


def test_noise_covariance_matches_linear_propagation():
    # Velocity noise should follow (B^T B)^-1 sigma^2 through the solve.
    cfg = dvl.DvlConfig()
    pose = Pose.level(0.0, 0.0, 0.0)
    clean = dvl.solution_from_ranges(pose, ned(0, 0, 0), np.full(4, 40.0), cfg)
    sigma = 0.01
    rng = np.random.default_rng(63)
    trials = 10_000
    vs = np.empty((trials, 3))
    for k in range(trials):
        vs[k] = dvl.add_beam_noise(clean, sigma, rng, cfg).velocity
    b = np.asarray(cfg.beams)
    cov_expected = np.linalg.inv(b.T @ b) * sigma**2
    assert np.allclose(np.abs(vs.mean(axis=0)), 0.0, atol=5e-4)
    assert np.allclose(vs.std(axis=0), np.sqrt(np.diag(cov_expected)), rtol=0.1)


# --- ADCP profiling -----------------------------------------------------------


def test_profile_uniform_current_combined():
    cfg = dvl.DvlConfig(bins=4, bin_size=10.0, noise_sigma=0.0)
    current = ned(0.25, -0.1, 0.0)
    profile = dvl.current_profile(
        Pose.level(0, 0, 5.0), ned(0, 0, 0), lambda d: current, cfg, np.random.default_rng(0)
    )
    # Stationary level sensor in uniform current: every bin reads the
    # negated current expressed in the sensor frame (x north, y west).
    expected = np.array([-0.25, -0.1, 0.0])
    for k in range(cfg.bins):
        assert np.allclose(profile.combined[k], expected, atol=1e-9)


def test_profile_two_strata_matches_interpolation_oracle():
    from subsim import currents as cur

    db = cur.StratifiedCurrentDB(
        [cur.Stratum(0.0, (0.4, 0.0, 0.0)), cur.Stratum(60.0, (0.0, 0.2, 0.0))]
    )
    cfg = dvl.DvlConfig(bins=5, bin_size=12.0, min_range=0.0)
    pose = Pose.level(0, 0, 8.0)
    profile = dvl.current_profile(
        pose, ned(0, 0, 0), db.interpolate, cfg, np.random.default_rng(0)
    )
    world_beams = (pose.rotation @ np.asarray(cfg.beams).T).T
    for k, r_k in enumerate(profile.bin_ranges):
        assert r_k == pytest.approx((k + 0.5) * 12.0)
        # Oracle: solve the noise-free system built straight from the
        # stratified interpolation at each beam's bin depth.
        scalars = np.empty(4)
        for b in range(4):
            depth = 8.0 + r_k * world_beams[b, 2]
            rel = pose.to_body(-db.interpolate(depth))
            scalars[b] = np.asarray(cfg.beams)[b] @ rel
        expected = np.linalg.lstsq(np.asarray(cfg.beams), scalars, rcond=None)[0]
        assert np.allclose(profile.combined[k], expected, atol=1e-9)


def test_profile_per_beam_parallel_to_beams():
    cfg = dvl.DvlConfig(bins=3, bin_size=8.0, profile_mode=dvl.PROFILE_PER_BEAM,
                        noise_sigma=0.02)
    profile = dvl.current_profile(
        Pose.level(0, 0, 5.0), ned(0.4, 0.0, 0.0), lambda d: ned(0.1, 0.0, 0.0),
        cfg, np.random.default_rng(7),
    )
    beams = np.asarray(cfg.beams)
    for k in range(cfg.bins):
        for b in range(4):
            v = profile.per_beam[k, b]
            cross = np.cross(v, beams[b])
            assert np.allclose(cross, 0.0, atol=1e-12)  # parallel to the beam


def test_profile_per_beam_zero_when_no_relative_motion():
    cfg = dvl.DvlConfig(bins=3, bin_size=8.0, profile_mode=dvl.PROFILE_PER_BEAM)
    current = ned(0.2, 0.1, 0.0)
    profile = dvl.current_profile(
        Pose.level(0, 0, 5.0), current, lambda d: current, cfg, np.random.default_rng(0)
    )
    assert np.allclose(profile.per_beam, 0.0, atol=1e-12)


def test_profile_bin_depths_increase_for_down_beams():
    cfg = dvl.DvlConfig(bins=6, bin_size=5.0)
    pose = Pose.level(0, 0, 2.0)
    world_beams = (pose.rotation @ np.asarray(cfg.beams).T).T
    centers = cfg.min_range + (np.arange(cfg.bins) + 0.5) * cfg.bin_size
    for b in range(4):
        depths = 2.0 + centers * world_beams[b, 2]
        assert np.all(np.diff(depths) > 0.0)


def test_profile_metadata_echoes_config():
    cfg = dvl.DvlConfig(bins=4, bin_size=10.0)
    profile = dvl.current_profile(
        Pose.level(0, 0, 5.0), ned(0, 0, 0), lambda d: np.zeros(3), cfg,
        np.random.default_rng(0),
    )
    assert profile.bins == 4
    assert profile.bin_size == 10.0
    assert np.array_equal(profile.beams, np.asarray(cfg.beams))
    assert len(profile.bin_ranges) == 4


def test_config_validation():
    with pytest.raises(ValueError):
        dvl.DvlConfig(min_range=10.0, max_range=5.0)
    with pytest.raises(ValueError):
        dvl.DvlConfig(bins=30, bin_size=10.0, max_range=100.0)
    up = dvl.janus_beams()
    up[0, 2] = abs(up[0, 2])
    up[0] /= np.linalg.norm(up[0])
    with pytest.raises(ValueError):
        dvl.DvlConfig(beams=up)


def test_log_row_format(flat100):
    cfg = dvl.DvlConfig()
    sol = dvl.bottom_track(level_pose(flat100), ned(0, 0, 0), flat100, cfg)
    row = dvl.log_row(12.5, sol)
    assert len(row) == len(dvl.LOG_HEADER)
    assert row[0] == "12.5"
    assert row[1] == "bottom_track"


def test_measure_full_chain_bottom_with_noise(flat100):
    cfg = dvl.DvlConfig(noise_sigma=0.01, bins=2, bin_size=10.0)
    sol = dvl.measure(
        level_pose(flat100), ned(0.5, 0.0, 0.0), flat100, lambda d: np.zeros(3),
        cfg, np.random.default_rng(12),
    )
    assert sol.mode is dvl.TrackingMode.BOTTOM_TRACK
    assert sol.noisy
    assert np.all(np.isfinite(sol.velocity))
    assert abs(sol.velocity[0] - 0.5) < 0.05  # noise-scale deviation only
