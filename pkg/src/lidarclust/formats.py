"""On-disk formats: sensor config, range frames, cluster labels, run reports.

Sensor config: ``key=value`` lines (``#`` comments allowed) with keys
``lasers``, ``steps``, ``rotation_rate``, ``azimuth_step_rad``,
``elevations_rad`` (comma separated) and optional ``ground_z_m``.

Frames are either CSV (L rows of S values, 0 = no return) or binary:
``b"LSC1"``, L and S as little-endian uint32, then L*S little-endian float32
in laser-major order.

Label files are CSV ``laser,step,label`` with one row per reading in stream
order; label is the cluster index or -1 for noise.
"""
from __future__ import annotations

import csv
import io
import struct
from pathlib import Path

import numpy as np

from .result import NOISE, ClusterResult
from .sensor import RotationFrame, SensorConfig

MAGIC = b"LSC1"
SENSOR_KEYS = ("lasers", "steps", "rotation_rate", "azimuth_step_rad", "elevations_rad")
OPTIONAL_SENSOR_KEYS = ("ground_z_m",)


class FormatError(ValueError):
    pass


def parse_key_values(lines, allowed, where="config"):
    """Collect ``key=value`` pairs; rejects duplicates and keys outside ``allowed``."""
    values = {}
    for n, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise FormatError(f"{where} line {n}: expected key=value, got {raw.strip()!r}")
        key, value = (t.strip() for t in line.split("=", 1))
        if key not in allowed:
            raise FormatError(f"{where} line {n}: unknown key {key!r}")
        if key in values:
            raise FormatError(f"{where} line {n}: duplicate key {key!r}")
        values[key] = value
    return values


def sensor_from_values(values: dict, where="config") -> SensorConfig:
    missing = [k for k in SENSOR_KEYS if k not in values]
    if missing:
        raise FormatError(f"{where}: missing keys {', '.join(missing)}")
    try:
        elevations = tuple(float(v) for v in values["elevations_rad"].split(",") if v.strip())
        ground = values.get("ground_z_m")
        return SensorConfig(
            laser_count=int(values["lasers"]),
            step_count=int(values["steps"]),
            elevation_angles=elevations,
            azimuth_step=float(values["azimuth_step_rad"]),
            rotation_rate=float(values["rotation_rate"]),
            ground_z=None if ground is None else float(ground),
        )
    except ValueError as exc:
        raise FormatError(f"{where}: {exc}") from exc


def parse_sensor_config(text: str) -> SensorConfig:
    values = parse_key_values(text.splitlines(), SENSOR_KEYS + OPTIONAL_SENSOR_KEYS)
    return sensor_from_values(values)


def format_sensor_config(config: SensorConfig) -> str:
    lines = [
        f"lasers={config.laser_count}",
        f"steps={config.step_count}",
        f"rotation_rate={config.rotation_rate!r}",
        f"azimuth_step_rad={config.azimuth_step!r}",
        "elevations_rad=" + ",".join(repr(a) for a in config.elevation_angles),
    ]
    if config.ground_z is not None:
        lines.append(f"ground_z_m={config.ground_z!r}")
    return "\n".join(lines) + "\n"


def read_sensor_config(path) -> SensorConfig:
    return parse_sensor_config(Path(path).read_text())


def write_sensor_config(path, config: SensorConfig) -> None:
    Path(path).write_text(format_sensor_config(config))


# ---------------------------------------------------------------------- frames

def frame_to_bytes(ranges: np.ndarray) -> bytes:
    ranges = np.asarray(ranges)
    L, S = ranges.shape
    body = np.ascontiguousarray(ranges, dtype="<f4").tobytes()
    return MAGIC + struct.pack("<II", L, S) + body


def frame_from_bytes(data: bytes) -> np.ndarray:
    if data[:4] != MAGIC:
        raise FormatError("not a binary frame (bad magic)")
    if len(data) < 12:
        raise FormatError("truncated binary frame header")
    L, S = struct.unpack("<II", data[4:12])
    expected = 12 + 4 * L * S
    if len(data) != expected:
        raise FormatError(f"binary frame holds {len(data)} bytes, expected {expected}")
    return np.frombuffer(data, dtype="<f4", offset=12).astype(np.float64).reshape(L, S)


def frame_to_csv(ranges: np.ndarray) -> str:
    rows = (",".join(repr(float(v)) if v != 0 else "0" for v in row)
            for row in np.asarray(ranges, dtype=np.float64))
    return "\n".join(rows) + "\n"


def frame_from_csv(text: str) -> np.ndarray:
    rows = []
    for n, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            rows.append([float(v) for v in line.split(",")])
        except ValueError as exc:
            raise FormatError(f"frame line {n}: {exc}") from exc
    if not rows:
        raise FormatError("empty frame file")
    if len({len(r) for r in rows}) != 1:
        raise FormatError("frame rows differ in length")
    return np.array(rows, dtype=np.float64)


def read_frame(path, config: SensorConfig | None = None):
    """Load a frame file (binary or CSV, detected by magic).

    Returns the raw (L, S) array, or a :class:`RotationFrame` when ``config``
    is given.
    """
    data = Path(path).read_bytes()
    ranges = frame_from_bytes(data) if data[:4] == MAGIC else frame_from_csv(data.decode())
    if config is None:
        return ranges
    if ranges.shape != config.shape:
        raise FormatError(f"frame is {ranges.shape[0]}x{ranges.shape[1]}, sensor expects "
                          f"{config.laser_count}x{config.step_count}")
    return RotationFrame(config, ranges)


def write_frame(path, frame, binary: bool | None = None) -> None:
    """Write a frame; binary when ``binary`` is set or the suffix is ``.lsc``."""
    ranges = frame.ranges if isinstance(frame, RotationFrame) else np.asarray(frame)
    if binary is None:
        binary = Path(path).suffix.lower() == ".lsc"
    if binary:
        Path(path).write_bytes(frame_to_bytes(ranges))
    else:
        Path(path).write_text(frame_to_csv(ranges))


# ---------------------------------------------------------------------- labels

def format_labels(result: ClusterResult, n_lasers: int) -> str:
    ids = result.point_ids()
    size = int(ids[-1]) + 1 if ids.size else 0
    labels = result.labels(size)
    buf = io.StringIO()
    buf.write("laser,step,label\n")
    for pid in ids:
        step, laser = divmod(int(pid), n_lasers)
        buf.write(f"{laser},{step},{labels[pid]}\n")
    return buf.getvalue()


def write_labels(path, result: ClusterResult, n_lasers: int) -> None:
    Path(path).write_text(format_labels(result, n_lasers))


def parse_labels(text: str, n_lasers: int) -> ClusterResult:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header != ["laser", "step", "label"]:
        raise FormatError(f"bad label header {header!r}")
    by_label = {}
    noise = []
    for row in reader:
        if not row:
            continue
        laser, step, label = (int(v) for v in row)
        pid = step * n_lasers + laser
        if label == NOISE:
            noise.append(pid)
        elif label >= 0:
            by_label.setdefault(label, []).append(pid)
        else:
            raise FormatError(f"invalid label {label}")
    if sorted(by_label) != list(range(len(by_label))):
        raise FormatError("cluster labels are not contiguous from 0")
    clusters = [np.sort(np.array(by_label[k], dtype=np.int64)) for k in range(len(by_label))]
    return ClusterResult(clusters, np.sort(np.array(noise, dtype=np.int64)))


def read_labels(path, n_lasers: int) -> ClusterResult:
    return parse_labels(Path(path).read_text(), n_lasers)


# ---------------------------------------------------------------------- report

def format_report(fields: dict) -> str:
    """Single ``key=value`` line; floats are printed with 6 significant digits."""
    parts = []
    for key, value in fields.items():
        if isinstance(value, float):
            value = f"{value:.6g}"
        parts.append(f"{key}={value}")
    return " ".join(parts)


def parse_report(line: str) -> dict:
    out = {}
    for token in line.split():
        key, value = token.split("=", 1)
        for cast in (int, float):
            try:
                value = cast(value)
                break
            except ValueError:
                pass
        out[key] = value
    return out
