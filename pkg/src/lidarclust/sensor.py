"""Sensor geometry, range frames and the ground filter.

Point identity used across the package: a reading at (laser ``l``, step ``s``)
has the dense id ``s * L + l``. Ordering ids therefore orders readings by
(step, laser), which is also the order in which the sensor delivers them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np


@dataclass(frozen=True)
class SensorConfig:
    """Geometry of a rotating multi-laser sensor.

    Args:
        laser_count: number of lasers mounted on the column (rows of a frame).
        step_count: azimuth steps per rotation (columns of a frame).
        elevation_angles: one elevation per laser in radians, strictly increasing.
        azimuth_step: azimuth increment between two steps in radians.
        rotation_rate: rotations per second, metadata only.
        ground_z: height threshold in meters; readings below it are dropped by
            the ground filter. ``None`` disables the filter.
    """

    laser_count: int
    step_count: int
    elevation_angles: tuple
    azimuth_step: float
    rotation_rate: float = 10.0
    ground_z: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "elevation_angles",
                           tuple(float(a) for a in self.elevation_angles))
        if int(self.laser_count) != self.laser_count or self.laser_count < 1:
            raise ValueError(f"laser_count must be a positive integer, got {self.laser_count!r}")
        if int(self.step_count) != self.step_count or self.step_count < 2:
            raise ValueError(f"step_count must be an integer >= 2, got {self.step_count!r}")
        if len(self.elevation_angles) != self.laser_count:
            raise ValueError(
                f"expected {self.laser_count} elevation angles, got {len(self.elevation_angles)}")
        if not all(math.isfinite(a) for a in self.elevation_angles):
            raise ValueError("elevation angles must be finite")
        if any(abs(a) > math.pi / 2 for a in self.elevation_angles):
            raise ValueError("elevation angles must lie within [-pi/2, pi/2]")
        if any(b <= a for a, b in zip(self.elevation_angles, self.elevation_angles[1:])):
            raise ValueError("elevation angles must be strictly increasing")
        if not (math.isfinite(self.azimuth_step) and self.azimuth_step > 0):
            raise ValueError("azimuth_step must be positive")
        if self.azimuth_step * self.step_count > 2 * math.pi * (1 + 1e-9):
            # overlapping steps would put neighbors outside the circular window
            raise ValueError("steps cover more than one full turn")
        if self.ground_z is not None and not math.isfinite(self.ground_z):
            raise ValueError("ground_z must be finite or None")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.laser_count, self.step_count)

    @property
    def delta_alpha(self) -> float:
        return self.azimuth_step

    @cached_property
    def delta_theta(self) -> float:
        """Smallest gap between consecutive elevations (``inf`` for one laser)."""
        if self.laser_count == 1:
            return math.inf
        el = self.elevation_angles
        return min(b - a for a, b in zip(el, el[1:]))

    @cached_property
    def elevation_cosines(self) -> np.ndarray:
        return np.cos(np.asarray(self.elevation_angles, dtype=np.float64))

    @cached_property
    def directions(self) -> np.ndarray:
        """Unit ray direction of every cell as an (L, S, 3) array.

        All Cartesian coordinates in the package are ``d * directions[l, s]``,
        so every clusterer sees bit-identical coordinates.
        """
        el = np.asarray(self.elevation_angles, dtype=np.float64)
        az = np.arange(self.step_count, dtype=np.float64) * self.azimuth_step
        ce, se = np.cos(el), np.sin(el)
        out = np.empty((self.laser_count, self.step_count, 3))
        out[:, :, 0] = ce[:, None] * np.cos(az)[None, :]
        out[:, :, 1] = ce[:, None] * np.sin(az)[None, :]
        out[:, :, 2] = se[:, None]
        out.setflags(write=False)
        return out

    @cached_property
    def directions_by_id(self) -> np.ndarray:
        """Directions indexed by point id (step-major), shape (S * L, 3)."""
        out = np.ascontiguousarray(self.directions.transpose(1, 0, 2)).reshape(-1, 3)
        out.setflags(write=False)
        return out

    def point_id(self, laser: int, step: int) -> int:
        return step * self.laser_count + laser

    def cell(self, point_id: int) -> tuple[int, int]:
        """Inverse of :meth:`point_id`, returns ``(laser, step)``."""
        step, laser = divmod(int(point_id), self.laser_count)
        return laser, step

    def with_ground(self, ground_z: float | None) -> "SensorConfig":
        return SensorConfig(self.laser_count, self.step_count, self.elevation_angles,
                            self.azimuth_step, self.rotation_rate, ground_z)


def hdl64_like(ground_z: float | None = None) -> SensorConfig:
    """64 evenly spaced lasers over [-24.8, +2] degrees and 1125 steps (72000 cells)."""
    elevations = np.linspace(math.radians(-24.8), math.radians(2.0), 64)
    return SensorConfig(64, 1125, tuple(elevations), 2 * math.pi / 1125, 10.0, ground_z)


def uniform_sensor(laser_count: int, step_count: int, elevation_min: float,
                   elevation_max: float, ground_z: float | None = None,
                   rotation_rate: float = 10.0) -> SensorConfig:
    """Sensor with evenly spaced elevations (radians) and a full 2*pi sweep."""
    if laser_count == 1:
        elevations = [0.5 * (elevation_min + elevation_max)]
    else:
        elevations = np.linspace(elevation_min, elevation_max, laser_count)
    return SensorConfig(laser_count, step_count, tuple(elevations),
                        2 * math.pi / step_count, rotation_rate, ground_z)


@dataclass(frozen=True)
class PointAttrs:
    """One reading: measured distance, cell index and Cartesian position."""

    d: float
    l: int
    s: int
    x: float
    y: float
    z: float


def to_cartesian(config: SensorConfig, d: float, l: int, s: int) -> tuple[float, float, float]:
    if not (0 <= l < config.laser_count):
        raise IndexError(f"laser index {l} out of range [0, {config.laser_count})")
    if not (0 <= s < config.step_count):
        raise IndexError(f"step index {s} out of range [0, {config.step_count})")
    if not d > 0:
        raise ValueError(f"distance must be positive, got {d!r}")
    ux, uy, uz = config.directions[l, s]
    return (float(d * ux), float(d * uy), float(d * uz))


def point_attrs(config: SensorConfig, d: float, l: int, s: int) -> PointAttrs:
    x, y, z = to_cartesian(config, d, l, s)
    return PointAttrs(float(d), int(l), int(s), x, y, z)


def euclidean_distance(a: PointAttrs, b: PointAttrs) -> float:
    dx = a.x - b.x
    dy = a.y - b.y
    dz = a.z - b.z
    return math.sqrt(dx * dx + dy * dy + dz * dz)


class RotationFrame:
    """The L x S range matrix of one rotation; 0 marks a cell without return.

    The range array is copied and made read-only on construction.
    """

    def __init__(self, config: SensorConfig, ranges):
        arr = np.array(ranges, dtype=np.float64, copy=True)
        if arr.shape != config.shape:
            raise ValueError(f"frame shape {arr.shape} does not match sensor {config.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("frame contains non-finite ranges")
        if np.any(arr < 0):
            raise ValueError("frame contains negative ranges")
        arr.setflags(write=False)
        self.config = config
        self.ranges = arr

    @classmethod
    def empty(cls, config: SensorConfig) -> "RotationFrame":
        return cls(config, np.zeros(config.shape))

    @property
    def n_points(self) -> int:
        return int(np.count_nonzero(self.ranges))

    def column(self, s: int) -> np.ndarray:
        return self.ranges[:, s]

    def xyz(self) -> np.ndarray:
        """Cartesian coordinates of every cell, shape (L, S, 3); zero cells map to the origin."""
        return self.ranges[:, :, None] * self.config.directions

    def __eq__(self, other):
        if not isinstance(other, RotationFrame):
            return NotImplemented
        return self.config == other.config and np.array_equal(self.ranges, other.ranges)

    def __repr__(self):
        L, S = self.config.shape
        return f"RotationFrame(L={L}, S={S}, points={self.n_points})"


def below_ground(config: SensorConfig, ranges: np.ndarray, steps=None) -> np.ndarray:
    """Boolean mask of non-zero readings whose height is under ``config.ground_z``.

    ``ranges`` is either the whole (L, S) matrix or the columns listed in ``steps``.
    """
    ranges = np.asarray(ranges, dtype=np.float64)
    if config.ground_z is None:
        return np.zeros(ranges.shape, dtype=bool)
    uz = config.directions[:, :, 2] if steps is None else config.directions[:, steps, 2]
    z = ranges * uz
    return (ranges > 0) & (z < config.ground_z)


def remove_ground(frame: RotationFrame) -> RotationFrame:
    """Zero every reading below ``ground_z``; identity when the threshold is unset."""
    if frame.config.ground_z is None:
        return frame
    drop = below_ground(frame.config, frame.ranges)
    if not drop.any():
        return frame
    ranges = frame.ranges.copy()
    ranges[drop] = 0.0
    return RotationFrame(frame.config, ranges)
