"""Geometric mmWave channel synthesis for a UPA transmitter and mobile single-antenna UEs.

Array/angle convention (see README for a diagram): the planar array hangs in
the y-z plane with its vertical axis along +z and its horizontal axis along
+y, broadside facing +x. For a departure direction d = (dx, dy, dz):

    elevation = arccos(dz / |d|)   (measured from the vertical array axis)
    azimuth   = atan2(dy, dx)      (in the horizontal plane)

so the vertical phase progression goes with cos(elevation) and the horizontal
one with sin(elevation) * sin(azimuth).
"""

from __future__ import annotations

import dataclasses
import math
from typing import Sequence

import numpy as np

from .config import SPEED_OF_LIGHT, ScenarioConfig

_SCENARIO_STREAM = 0x5C


@dataclasses.dataclass(frozen=True)
class UpaGeometry:
    """Antenna grid dimensions and carrier wavelength."""

    m_v: int
    m_h: int
    wavelength: float

    def __post_init__(self) -> None:
        if self.m_v < 1 or self.m_h < 1:
            raise ValueError("UPA needs at least one antenna per axis")
        if self.wavelength <= 0:
            raise ValueError("wavelength must be positive")

    @property
    def m_tx(self) -> int:
        return self.m_v * self.m_h

    @classmethod
    def from_carrier(cls, m_v: int, m_h: int, frequency_hz: float) -> "UpaGeometry":
        return cls(m_v=m_v, m_h=m_h, wavelength=SPEED_OF_LIGHT / frequency_hz)


@dataclasses.dataclass(frozen=True)
class PathComponent:
    """One propagation path: departure angles, total length, reflection gain."""

    azimuth: float
    elevation: float
    distance: float
    reflection_gain: float = 1.0

    def __post_init__(self) -> None:
        if self.distance <= 0:
            raise ValueError("path distance must be positive")
        if self.reflection_gain <= 0:
            raise ValueError("reflection gain must be positive (linear units)")


@dataclasses.dataclass(frozen=True)
class ChannelRealization:
    """Complex channel vector of one UE in one frame."""

    vector: np.ndarray
    frame: int = 0
    ue: int = 0

    def __post_init__(self) -> None:
        vec = np.asarray(self.vector, dtype=np.complex128)
        if vec.ndim != 1:
            raise ValueError("channel vector must be one-dimensional")
        if not np.all(np.isfinite(vec)):
            raise ValueError("channel vector contains non-finite entries")
        object.__setattr__(self, "vector", vec)


@dataclasses.dataclass(frozen=True)
class MobilityTrace:
    """UE trajectories and the fixed reflector layout of one scenario."""

    ue_positions: np.ndarray  # (frames, K, 3) meters
    frame_interval: float  # seconds
    scatterer_positions: np.ndarray  # (S, 3) meters

    def __post_init__(self) -> None:
        if self.frame_interval <= 0:
            raise ValueError("frame interval must be positive")
        if not np.all(np.isfinite(self.ue_positions)):
            raise ValueError("UE positions contain non-finite entries")


def steering_vertical(elevation: float, m_v: int) -> np.ndarray:
    """Vertical factor: entry n = exp(-j*pi*n*cos(elevation)), half-wavelength spacing."""
    if m_v < 1:
        raise ValueError("m_v must be >= 1")
    n = np.arange(m_v)
    return np.exp(-1j * np.pi * n * math.cos(elevation))


def steering_horizontal(azimuth: float, elevation: float, m_h: int) -> np.ndarray:
    """Horizontal factor: entry n = exp(-j*pi*n*sin(elevation)*sin(azimuth))."""
    if m_h < 1:
        raise ValueError("m_h must be >= 1")
    n = np.arange(m_h)
    return np.exp(-1j * np.pi * n * math.sin(elevation) * math.sin(azimuth))


def steering(azimuth: float, elevation: float, geometry: UpaGeometry) -> np.ndarray:
    """Full UPA steering vector: vertical factor Kronecker horizontal factor."""
    return np.kron(
        steering_vertical(elevation, geometry.m_v),
        steering_horizontal(azimuth, elevation, geometry.m_h),
    )


def path_gain(path: PathComponent, geometry: UpaGeometry, *, include_array_factor: bool = True) -> complex:
    """Complex path gain: sqrt(M_tx) * wavelength * g / (4*pi*d) * exp(-j*2*pi*d/wavelength).

    ``include_array_factor=False`` drops the sqrt(M_tx) factor for
    normalization sensitivity studies (the channel-vector prefactor already
    carries another sqrt(M_tx)).
    """
    if path.distance <= 0:
        raise ValueError("path distance must be positive")
    lam = geometry.wavelength
    magnitude = lam * path.reflection_gain / (4.0 * math.pi * path.distance)
    if include_array_factor:
        magnitude *= math.sqrt(geometry.m_tx)
    phase = -2.0 * math.pi * path.distance / lam
    return magnitude * complex(math.cos(phase), math.sin(phase))


def channel_vector(
    paths: Sequence[PathComponent],
    geometry: UpaGeometry,
    *,
    frame: int = 0,
    ue: int = 0,
    inner_mtx_scaling: bool = True,
) -> ChannelRealization:
    """Sum the per-path rank-one contributions: h = sqrt(M_tx/L_p) * sum_l alpha_l * a_l.

    Paths are summed in list order so results are bit-reproducible.
    """
    if len(paths) == 0:
        raise ValueError("need at least one path component")
    total = np.zeros(geometry.m_tx, dtype=np.complex128)
    for path in paths:
        alpha = path_gain(path, geometry, include_array_factor=inner_mtx_scaling)
        total = total + alpha * steering(path.azimuth, path.elevation, geometry)
    total *= math.sqrt(geometry.m_tx / len(paths))
    return ChannelRealization(vector=total, frame=frame, ue=ue)


@dataclasses.dataclass(frozen=True)
class Scenario:
    """Per-frame, per-UE channels plus the mobility trace that produced them."""

    channels: np.ndarray  # (frames, K, M_tx) complex
    trace: MobilityTrace
    geometry: UpaGeometry

    def realization(self, frame: int, ue: int) -> ChannelRealization:
        return ChannelRealization(vector=self.channels[frame, ue], frame=frame, ue=ue)


def _direction_angles(origin: np.ndarray, target: np.ndarray) -> tuple[float, float, float]:
    """(azimuth, elevation, distance) of the departure direction origin -> target."""
    d = target - origin
    dist = float(np.linalg.norm(d))
    if dist <= 0:
        raise ValueError("degenerate direction: target coincides with origin")
    elevation = math.acos(float(np.clip(d[2] / dist, -1.0, 1.0)))
    azimuth = math.atan2(float(d[1]), float(d[0]))
    return azimuth, elevation, dist


def _ue_paths(
    bs: np.ndarray,
    ue_pos: np.ndarray,
    scatterers: np.ndarray,
    reflect_gain: float,
) -> list[PathComponent]:
    """One line-of-sight component plus one single-bounce component per reflector."""
    az, el, dist = _direction_angles(bs, ue_pos)
    paths = [PathComponent(azimuth=az, elevation=el, distance=dist, reflection_gain=1.0)]
    for scat in scatterers:
        az_s, el_s, d_bs_scat = _direction_angles(bs, scat)
        d_scat_ue = float(np.linalg.norm(ue_pos - scat))
        paths.append(
            PathComponent(
                azimuth=az_s,
                elevation=el_s,
                distance=d_bs_scat + d_scat_ue,
                reflection_gain=reflect_gain,
            )
        )
    return paths


def _random_walk(
    rng: np.random.Generator,
    start: np.ndarray,
    frames: int,
    step: float,
    heading_sigma: float,
    half_width: float,
) -> np.ndarray:
    """2-D random walk bounded to the square [-half_width, half_width]^2."""
    positions = np.empty((frames, 3))
    positions[0] = start
    heading = rng.uniform(0.0, 2.0 * math.pi)
    for t in range(1, frames):
        heading += rng.normal(0.0, heading_sigma)
        nxt = positions[t - 1].copy()
        nxt[0] += step * math.cos(heading)
        nxt[1] += step * math.sin(heading)
        if not -half_width <= nxt[0] <= half_width:
            bound = half_width if nxt[0] > half_width else -half_width
            nxt[0] = 2 * bound - nxt[0]
            heading = math.pi - heading
        if not -half_width <= nxt[1] <= half_width:
            bound = half_width if nxt[1] > half_width else -half_width
            nxt[1] = 2 * bound - nxt[1]
            heading = -heading
        positions[t] = nxt
    return positions


def synthesize_scenario(config: ScenarioConfig, seed: int) -> Scenario:
    """Generate a deterministic scenario: reflector layout, UE walks, per-frame channels.

    Each frame's channel per UE combines the line-of-sight path with one
    single-bounce path per reflector; reflectors are fixed for the whole
    scenario. Pure function of (config, seed).
    """
    geometry = UpaGeometry.from_carrier(config.m_v, config.m_h, config.carrier_frequency_hz)
    rng = np.random.default_rng(np.random.SeedSequence([_SCENARIO_STREAM, int(seed)]))
    bs = np.array([0.0, 0.0, config.bs_height_m])
    half = config.area_half_width_m

    n_scatterers = config.l_p - 1
    scatterers = np.empty((n_scatterers, 3))
    scatterers[:, 0] = rng.uniform(-half, half, n_scatterers)
    scatterers[:, 1] = rng.uniform(-half, half, n_scatterers)
    scatterers[:, 2] = rng.uniform(0.0, config.bs_height_m, n_scatterers)

    starts = np.empty((config.k_ues, 3))
    if config.ue_positions is not None:
        if len(config.ue_positions) != config.k_ues:
            raise ValueError("ue_positions must list one x,y,z triple per UE")
        starts[:] = np.asarray(config.ue_positions, dtype=float)
    else:
        for k in range(config.k_ues):
            while True:
                xy = rng.uniform(-half, half, 2)
                if np.hypot(xy[0], xy[1]) >= config.ue_min_distance_m:
                    break
            starts[k] = (xy[0], xy[1], config.ue_height_m)
    for k in range(config.k_ues):
        if np.linalg.norm(starts[k] - bs) < 1e-9:
            raise ValueError(f"UE {k} coincides with the BS position")

    step = config.ue_speed_mps * config.frame_interval_s
    ue_positions = np.empty((config.frames, config.k_ues, 3))
    for k in range(config.k_ues):
        ue_positions[:, k, :] = _random_walk(
            rng, starts[k], config.frames, step, config.heading_sigma_rad, half
        )

    scatter_gain = config.reflection_gain_linear * config.sir_amplitude_scale
    channels = np.empty((config.frames, config.k_ues, geometry.m_tx), dtype=np.complex128)
    for t in range(config.frames):
        for k in range(config.k_ues):
            paths = _ue_paths(bs, ue_positions[t, k], scatterers, scatter_gain)
            channels[t, k] = channel_vector(
                paths, geometry, frame=t, ue=k, inner_mtx_scaling=config.inner_mtx_scaling
            ).vector

    trace = MobilityTrace(
        ue_positions=ue_positions,
        frame_interval=config.frame_interval_s,
        scatterer_positions=scatterers,
    )
    return Scenario(channels=channels, trace=trace, geometry=geometry)
