"""Four-beam Doppler velocity log with bottom/water tracking and ADCP
current profiling.

Beam geometry lives in the sensor FLU frame (z up, beams pointing
down-ish with negative z). Beam scalar velocities are the projections of
the sensor-frame relative velocity onto the beam unit vectors; the
velocity solution inverts that projection by least squares over the
valid beams. Gaussian noise enters in the beam-scalar domain only and
the solution is then recomputed.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .bathymetry import Heightmap, raycast
from .geometry import Pose

# current_at(depth_m) -> NED velocity; the caller binds time.
CurrentFn = Callable[[float], np.ndarray]

JANUS_TILT_RAD = math.radians(30.0)
JANUS_AZIMUTHS_RAD = tuple(math.radians(a) for a in (45.0, 135.0, 225.0, 315.0))

PROFILE_COMBINED = "combined"
PROFILE_PER_BEAM = "per_beam"


class TrackingMode(enum.Enum):
    BOTTOM_TRACK = "bottom_track"
    WATER_TRACK = "water_track"
    NONE = "none"


class DegenerateBeamGeometryError(ValueError):
    """Fewer than three usable beams, or directions without full rank."""


def janus_beams(tilt_rad: float = JANUS_TILT_RAD) -> np.ndarray:
    """Default 4-beam Janus set: ``tilt`` from the sensor -z axis at
    azimuths 45/135/225/315 degrees."""
    beams = []
    for az in JANUS_AZIMUTHS_RAD:
        beams.append(
            [
                math.sin(tilt_rad) * math.cos(az),
                math.sin(tilt_rad) * math.sin(az),
                -math.cos(tilt_rad),
            ]
        )
    return np.array(beams)


@dataclass(frozen=True, eq=False)
class DvlConfig:
    beams: np.ndarray = field(default_factory=janus_beams)
    min_range: float = 0.5
    max_range: float = 100.0
    noise_sigma: float = 0.0  # m/s per beam scalar
    water_track_enabled: bool = True
    bins: int = 0  # 0 disables current profiling
    bin_size: float = 5.0
    profile_mode: str = PROFILE_COMBINED

    def __post_init__(self) -> None:
        beams = np.asarray(self.beams, dtype=float)
        object.__setattr__(self, "beams", beams)
        if beams.shape != (4, 3):
            raise ValueError("exactly 4 beam unit vectors required")
        norms = np.linalg.norm(beams, axis=1)
        if not np.allclose(norms, 1.0, atol=1e-9):
            raise ValueError("beam vectors must be unit length")
        if np.any(beams[:, 2] >= 0.0):
            raise ValueError("beams must point below the sensor (negative z)")
        if not 0.0 <= self.min_range < self.max_range:
            raise ValueError("need 0 <= min_range < max_range")
        if self.bins < 0 or self.bin_size <= 0.0:
            raise ValueError("bins must be >= 0 and bin_size positive")
        if self.bins * self.bin_size > self.max_range + 1e-9:
            raise ValueError("bins * bin_size must not exceed max_range")
        if self.profile_mode not in (PROFILE_COMBINED, PROFILE_PER_BEAM):
            raise ValueError(f"unknown profile_mode {self.profile_mode!r}")
        if self.noise_sigma < 0.0:
            raise ValueError("noise_sigma must be >= 0")


@dataclass(frozen=True, eq=False)
class DvlSolution:
    """Velocity solution in the sensor frame plus per-beam detail.

    beam_ranges/beam_velocities hold NaN for beams without a return.
    """

    velocity: np.ndarray | None  # (3,) sensor frame, None when mode is NONE
    altitude: float | None
    mode: TrackingMode
    beam_ranges: np.ndarray  # (4,)
    beam_velocities: np.ndarray  # (4,) scalar m/s
    noisy: bool = False


@dataclass(frozen=True, eq=False)
class AdcpProfile:
    """Binned current profile with config metadata echoed alongside."""

    mode: str
    bin_ranges: np.ndarray  # (bins,) center range along each beam, m
    combined: np.ndarray | None  # (bins, 3) sensor-frame velocity, Combined mode
    per_beam: np.ndarray | None  # (bins, 4, 3) sensor-frame velocity, PerBeam mode
    beams: np.ndarray  # (4, 3) beam unit vectors
    bin_size: float
    bins: int


def beam_ranges(pose: Pose, scene: Heightmap, cfg: DvlConfig) -> np.ndarray:
    """Raycast each beam into the terrain; NaN where there is no return
    inside [min_range, max_range]."""
    out = np.full(4, np.nan)
    for k in range(4):
        world_dir = pose.to_world(cfg.beams[k])
        hit = raycast(scene, pose.position, world_dir, cfg.max_range)
        if hit is not None and hit.range >= cfg.min_range:
            out[k] = hit.range
    return out


def solve_velocity(beams: np.ndarray, scalars: np.ndarray, valid=None) -> np.ndarray:
    """Least-squares sensor velocity v from beam projections b_i . v = s_i.

    Needs >= 3 valid beams spanning full rank, else raises
    DegenerateBeamGeometryError.
    """
    beams = np.asarray(beams, dtype=float)
    scalars = np.asarray(scalars, dtype=float)
    if valid is None:
        valid = np.isfinite(scalars)
    b = beams[valid]
    s = scalars[valid]
    if len(s) < 3 or np.linalg.matrix_rank(b, tol=1e-9) < 3:
        raise DegenerateBeamGeometryError(
            f"{len(s)} valid beams with rank {np.linalg.matrix_rank(b) if len(s) else 0}"
        )
    v, *_ = np.linalg.lstsq(b, s, rcond=None)
    return v


def _altitude(pose: Pose, cfg: DvlConfig, ranges: np.ndarray) -> float | None:
    hits = np.isfinite(ranges)
    if not hits.any():
        return None
    world_beams = (pose.rotation @ cfg.beams.T).T
    down = world_beams[hits, 2]
    return float(np.mean(ranges[hits] * down))


def solution_from_ranges(
    pose: Pose, vel_world: np.ndarray, ranges: np.ndarray, cfg: DvlConfig
) -> DvlSolution:
    """Noise-free bottom-track solution from per-beam ranges.

    Terrain is static, so each hitting beam's scalar is the projection of
    the sensor-frame world velocity onto the beam. Mode NONE when fewer
    than three beams have returns.
    """
    ranges = np.asarray(ranges, dtype=float)
    hits = np.isfinite(ranges)
    v_sensor = pose.to_body(np.asarray(vel_world, dtype=float))
    scalars = np.where(hits, cfg.beams @ v_sensor, np.nan)
    if hits.sum() >= 3:
        velocity = solve_velocity(cfg.beams, scalars, valid=hits)
        return DvlSolution(
            velocity=velocity,
            altitude=_altitude(pose, cfg, ranges),
            mode=TrackingMode.BOTTOM_TRACK,
            beam_ranges=ranges,
            beam_velocities=scalars,
        )
    return DvlSolution(
        velocity=None,
        altitude=None,
        mode=TrackingMode.NONE,
        beam_ranges=ranges,
        beam_velocities=np.full(4, np.nan),
    )


def bottom_track(pose: Pose, vel_world: np.ndarray, scene: Heightmap, cfg: DvlConfig) -> DvlSolution:
    """Noise-free bottom-track attempt against the terrain."""
    return solution_from_ranges(pose, vel_world, beam_ranges(pose, scene, cfg), cfg)


def water_track(pose: Pose, vel_world: np.ndarray, current_at: CurrentFn, cfg: DvlConfig) -> DvlSolution:
    """Velocity relative to the ambient current at the sensor's depth."""
    current = np.asarray(current_at(pose.position.depth), dtype=float)
    rel_sensor = pose.to_body(np.asarray(vel_world, dtype=float) - current)
    scalars = cfg.beams @ rel_sensor
    velocity = solve_velocity(cfg.beams, scalars)
    return DvlSolution(
        velocity=velocity,
        altitude=None,
        mode=TrackingMode.WATER_TRACK,
        beam_ranges=np.full(4, np.nan),
        beam_velocities=scalars,
    )


def add_beam_noise(solution: DvlSolution, noise_sigma: float, rng: np.random.Generator, cfg: DvlConfig) -> DvlSolution:
    """Perturb each beam scalar with N(0, sigma^2) and re-solve.

    Four draws are consumed in beam order regardless of which beams are
    valid, keeping noise streams aligned across modes. Mode NONE passes
    through untouched.
    """
    noise = rng.normal(0.0, noise_sigma, 4)
    if solution.mode is TrackingMode.NONE:
        return replace(solution, noisy=True)
    valid = np.isfinite(solution.beam_velocities)
    noisy_scalars = np.where(valid, solution.beam_velocities + noise, np.nan)
    velocity = solve_velocity(cfg.beams, noisy_scalars, valid=valid)
    return replace(solution, velocity=velocity, beam_velocities=noisy_scalars, noisy=True)


def measure(
    pose: Pose,
    vel_world: np.ndarray,
    scene: Heightmap | None,
    current_at: CurrentFn | None,
    cfg: DvlConfig,
    rng: np.random.Generator,
) -> DvlSolution:
    """Full measurement chain: bottom track, water track fallback when
    enabled, then beam noise."""
    solution = None
    if scene is not None:
        solution = bottom_track(pose, vel_world, scene, cfg)
    if (solution is None or solution.mode is TrackingMode.NONE) and cfg.water_track_enabled and current_at is not None:
        ranges = solution.beam_ranges if solution is not None else np.full(4, np.nan)
        solution = replace(water_track(pose, vel_world, current_at, cfg), beam_ranges=ranges)
    if solution is None:
        solution = DvlSolution(
            velocity=None,
            altitude=None,
            mode=TrackingMode.NONE,
            beam_ranges=np.full(4, np.nan),
            beam_velocities=np.full(4, np.nan),
        )
    return add_beam_noise(solution, cfg.noise_sigma, rng, cfg)


def current_profile(
    pose: Pose,
    vel_world: np.ndarray,
    current_at: CurrentFn,
    cfg: DvlConfig,
    rng: np.random.Generator,
) -> AdcpProfile:
    """ADCP profile out to bins*bin_size along each beam.

    Bin k's center range is min_range + (k + 1/2)*bin_size; the sampling
    depth per beam is the sensor depth plus the center range times the
    beam's world-frame downward component. Combined mode noises the four
    scalars and solves per bin exactly like the track solutions; PerBeam
    mode returns (scalar + noise) * beam unit vector per beam.
    """
    if cfg.bins < 1:
        raise ValueError("profiling requires bins >= 1")
    world_beams = (pose.rotation @ cfg.beams.T).T
    down = world_beams[:, 2]
    vel_world = np.asarray(vel_world, dtype=float)
    centers = cfg.min_range + (np.arange(cfg.bins) + 0.5) * cfg.bin_size

    combined = None
    per_beam = None
    if cfg.profile_mode == PROFILE_COMBINED:
        combined = np.zeros((cfg.bins, 3))
    else:
        per_beam = np.zeros((cfg.bins, 4, 3))

    for k, r_k in enumerate(centers):
        scalars = np.zeros(4)
        for b in range(4):
            bin_depth = pose.position.depth + r_k * down[b]
            rel_sensor = pose.to_body(vel_world - np.asarray(current_at(bin_depth), dtype=float))
            scalars[b] = cfg.beams[b] @ rel_sensor
        noise = rng.normal(0.0, cfg.noise_sigma, 4)
        if combined is not None:
            combined[k] = solve_velocity(cfg.beams, scalars + noise)
        else:
            per_beam[k] = (scalars + noise)[:, None] * cfg.beams
    return AdcpProfile(
        mode=cfg.profile_mode,
        bin_ranges=centers,
        combined=combined,
        per_beam=per_beam,
        beams=cfg.beams,
        bin_size=cfg.bin_size,
        bins=cfg.bins,
    )


# --- CSV formats -----------------------------------------------------------

LOG_HEADER = [
    "time", "mode", "vx", "vy", "vz", "altitude",
    "r1", "r2", "r3", "r4", "bv1", "bv2", "bv3", "bv4",
]


def _fmt(value: float | None) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return "nan"
    return f"{value:.9g}"


def log_row(time: float, sol: DvlSolution) -> list[str]:
    """One per-tick log record matching LOG_HEADER."""
    v = sol.velocity if sol.velocity is not None else [math.nan] * 3
    return (
        [_fmt(time), sol.mode.value]
        + [_fmt(float(a)) for a in v]
        + [_fmt(sol.altitude)]
        + [_fmt(float(r)) for r in sol.beam_ranges]
        + [_fmt(float(s)) for s in sol.beam_velocities]
    )


ADCP_HEADER = ["time", "bin", "beam", "center_range", "vx", "vy", "vz"]


def adcp_metadata_row(cfg: DvlConfig) -> str:
    beams = ";".join(
        ",".join(f"{c:.9g}" for c in beam) for beam in np.asarray(cfg.beams)
    )
    return (
        f"# adcp mode={cfg.profile_mode} bins={cfg.bins} "
        f"bin_size={cfg.bin_size:.9g} beams={beams}"
    )


def adcp_rows(time: float, profile: AdcpProfile) -> list[list[str]]:
    """Flatten a profile into CSV records; beam is 'all' in Combined mode."""
    rows = []
    for k, r_k in enumerate(profile.bin_ranges):
        if profile.combined is not None:
            v = profile.combined[k]
            rows.append([_fmt(time), str(k), "all", _fmt(float(r_k))] + [_fmt(float(a)) for a in v])
        else:
            for b in range(4):
                v = profile.per_beam[k, b]
                rows.append([_fmt(time), str(k), str(b), _fmt(float(r_k))] + [_fmt(float(a)) for a in v])
    return rows
