"""Synthetic rotations: ray casting against simple primitives.

The sensor sits at the origin. Each cell (laser, step) casts one ray and keeps
the nearest positive hit over all primitives, or 0 when nothing is hit.

Scene files are line oriented::

    # sensor header (same keys as a sensor config file); without one the
    # 64-laser default with a ground cut at -1.5 m is used
    lasers=16
    ...
    seed=7                      # optional, feeds scenario placement
    scenario=dense_near         # optional, adds a randomized family of objects
    box cx cy cz sx sy sz       # axis-aligned box: center and edge lengths
    cyl cx cy r h [z0]          # vertical cylinder from z0 (default: ground level or -h/2)
    ground z                    # horizontal ground plane
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .formats import OPTIONAL_SENSOR_KEYS, SENSOR_KEYS, FormatError, parse_key_values, \
    sensor_from_values, format_sensor_config
from .rng import XorShift64Star
from .sensor import RotationFrame, SensorConfig, hdl64_like, remove_ground

SEED_ENV = "LISCO_SEED"
SENSOR_HEIGHT = 1.8
GROUND_CUT = -1.5


@dataclass(frozen=True)
class Box:
    center: tuple
    size: tuple

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(v) for v in self.center))
        object.__setattr__(self, "size", tuple(float(v) for v in self.size))
        if len(self.center) != 3 or len(self.size) != 3:
            raise ValueError("box needs a 3D center and size")
        if min(self.size) <= 0:
            raise ValueError(f"degenerate box with size {self.size}")

    @property
    def lo(self):
        return tuple(c - s / 2 for c, s in zip(self.center, self.size))

    @property
    def hi(self):
        return tuple(c + s / 2 for c, s in zip(self.center, self.size))


@dataclass(frozen=True)
class Cylinder:
    cx: float
    cy: float
    radius: float
    height: float
    base_z: float

    def __post_init__(self):
        if self.radius <= 0 or self.height <= 0:
            raise ValueError(f"degenerate cylinder r={self.radius} h={self.height}")


@dataclass(frozen=True)
class Ground:
    z: float


@dataclass
class SceneSpec:
    sensor: SensorConfig = field(default_factory=lambda: hdl64_like(GROUND_CUT))
    objects: list = field(default_factory=list)
    seed: int = 0
    scenario: str | None = None

    def all_objects(self) -> list:
        """Explicit objects followed by the scenario's randomized ones."""
        objs = list(self.objects)
        if self.scenario:
            objs += scenario_objects(self.scenario, self.seed)
        return objs


# --------------------------------------------------------------- intersections

def ray_box(dirs: np.ndarray, box: Box) -> np.ndarray:
    """Distance along each unit ray to ``box`` (slab method); inf on a miss."""
    lo = np.asarray(box.lo)
    hi = np.asarray(box.hi)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / dirs
        t1 = lo * inv
        t2 = hi * inv
    near = np.minimum(t1, t2)
    far = np.maximum(t1, t2)
    # a ray parallel to a slab hits it everywhere or nowhere
    parallel = dirs == 0
    inside = (lo < 0) & (0 < hi)
    near = np.where(parallel, np.where(inside, -np.inf, np.inf), near)
    far = np.where(parallel, np.where(inside, np.inf, -np.inf), far)
    t_near = near.max(axis=1)
    t_far = far.min(axis=1)
    hit = (t_far >= t_near) & (t_far > 0)
    t = np.where(t_near > 0, t_near, t_far)
    return np.where(hit, t, np.inf)


def ray_cylinder(dirs: np.ndarray, cyl: Cylinder) -> np.ndarray:
    dx, dy, dz = dirs[:, 0], dirs[:, 1], dirs[:, 2]
    z0, z1 = cyl.base_z, cyl.base_z + cyl.height
    best = np.full(len(dirs), np.inf)
    a = dx * dx + dy * dy
    b = -2.0 * (cyl.cx * dx + cyl.cy * dy)
    c = cyl.cx ** 2 + cyl.cy ** 2 - cyl.radius ** 2
    disc = b * b - 4 * a * c
    ok = (a > 0) & (disc >= 0)
    root = np.sqrt(np.where(ok, disc, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        for sign in (-1.0, 1.0):
            t = (-b + sign * root) / (2 * a)
            z = t * dz
            valid = ok & (t > 0) & (z >= z0) & (z <= z1)
            best = np.where(valid & (t < best), t, best)
        for zc in (z0, z1):
            t = zc / dz
            px = t * dx - cyl.cx
            py = t * dy - cyl.cy
            valid = (dz != 0) & (t > 0) & (px * px + py * py <= cyl.radius ** 2)
            best = np.where(valid & (t < best), t, best)
    return best


def ray_ground(dirs: np.ndarray, ground: Ground) -> np.ndarray:
    dz = dirs[:, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        t = ground.z / dz
    return np.where((dz != 0) & (t > 0), t, np.inf)


def intersect(dirs: np.ndarray, obj) -> np.ndarray:
    if isinstance(obj, Box):
        return ray_box(dirs, obj)
    if isinstance(obj, Cylinder):
        return ray_cylinder(dirs, obj)
    if isinstance(obj, Ground):
        return ray_ground(dirs, obj)
    raise TypeError(f"unknown primitive {obj!r}")


def cast(sensor: SensorConfig, objects) -> np.ndarray:
    """Range matrix for ``objects`` seen by ``sensor``."""
    dirs = sensor.directions.reshape(-1, 3)
    best = np.full(len(dirs), np.inf)
    for obj in objects:
        best = np.minimum(best, intersect(dirs, obj))
    best[~np.isfinite(best)] = 0.0
    return best.reshape(sensor.shape)


def generate(spec: SceneSpec) -> RotationFrame:
    return RotationFrame(spec.sensor, cast(spec.sensor, spec.all_objects()))


# ------------------------------------------------------------ scenario families

SCENARIOS = ("sparse_near", "sparse_far", "dense_near", "dense_far", "room")


def _street_objects(rng: XorShift64Star, count: int, r_min: float, r_max: float) -> list:
    ground = -SENSOR_HEIGHT
    objs = []
    for _ in range(count):
        u = rng.random()
        az = rng.uniform(0, 2 * math.pi)
        kind = rng.random()
        r = r_min + u * (r_max - r_min)
        cx, cy = r * math.cos(az), r * math.sin(az)
        if kind < 0.6:
            length, width, height = rng.uniform(3.8, 4.8), rng.uniform(1.6, 1.9), \
                rng.uniform(1.3, 1.7)
            if rng.random() < 0.5:
                length, width = width, length
            objs.append(Box((cx, cy, ground + height / 2), (length, width, height)))
        else:
            objs.append(Cylinder(cx, cy, rng.uniform(0.2, 0.45), rng.uniform(1.6, 3.0), ground))
    return objs


def _room_objects(rng: XorShift64Star) -> list:
    ground = -SENSOR_HEIGHT
    objs = [Box((1.0, 0.0, ground + 1.5), (12.0, 9.0, 3.0))]
    for _ in range(12):
        while True:
            cx, cy = rng.uniform(-4.0, 6.0), rng.uniform(-3.5, 3.5)
            if math.hypot(cx, cy) > 1.5:
                break
        sx, sy, sz = rng.uniform(0.4, 1.4), rng.uniform(0.4, 1.4), rng.uniform(0.5, 2.0)
        objs.append(Box((cx, cy, ground + sz / 2), (sx, sy, sz)))
    return objs


def scenario_objects(name: str, seed: int) -> list:
    """Randomized objects of a scenario family; near and far variants share placements."""
    rng = XorShift64Star(seed)
    if name == "room":
        objs = _room_objects(rng)
    elif name in ("sparse_near", "sparse_far", "dense_near", "dense_far"):
        count = 8 if name.startswith("sparse") else 24
        r_min, r_max = (4.0, 12.0) if name.endswith("near") else (14.0, 32.0)
        objs = _street_objects(rng, count, r_min, r_max)
    else:
        raise ValueError(f"unknown scenario {name!r}; choose from {', '.join(SCENARIOS)}")
    return objs + [Ground(-SENSOR_HEIGHT)]


def scenario_spec(name: str, seed: int = 0, sensor: SensorConfig | None = None) -> SceneSpec:
    return SceneSpec(sensor or hdl64_like(GROUND_CUT), [], seed, name)


def wall_segments(half_width: float = 2.2, per_wall: int = 16, height: float = 3.0) -> list:
    """Square enclosure around the sensor split into ``4 * per_wall`` thin boxes."""
    ground = -SENSOR_HEIGHT
    t = 0.1
    seg = 2 * half_width / per_wall
    zc = ground + height / 2
    out = []
    for i in range(per_wall):
        c = -half_width + seg * (i + 0.5)
        out.append(Box((half_width, c, zc), (t, seg, height)))
        out.append(Box((c, half_width, zc), (seg, t, height)))
        out.append(Box((-half_width, c, zc), (t, seg, height)))
        out.append(Box((c, -half_width, zc), (seg, t, height)))
    return out


def wall_scene(target_points: int, seed: int = 0, sensor: SensorConfig | None = None):
    """Enclosure segments added in seeded order until ``target_points`` readings survive
    ground removal. Returns ``(frame, spec)``; frames of one seed form a nested family.
    """
    sensor = sensor or hdl64_like(GROUND_CUT)
    segments = wall_segments()
    rng = XorShift64Star(seed)
    order = list(range(len(segments)))
    for i in range(len(order) - 1, 0, -1):
        j = rng.integers(0, i + 1)
        order[i], order[j] = order[j], order[i]
    dirs = sensor.directions.reshape(-1, 3)
    ground = Ground(-SENSOR_HEIGHT)
    best = ray_ground(dirs, ground)
    chosen = []
    frame = None
    for k in order:
        chosen.append(segments[k])
        best = np.minimum(best, ray_box(dirs, segments[k]))
        ranges = np.where(np.isfinite(best), best, 0.0).reshape(sensor.shape)
        frame = remove_ground(RotationFrame(sensor, ranges))
        if frame.n_points >= target_points:
            break
    return frame, SceneSpec(sensor, chosen + [ground], seed, None)


# ----------------------------------------------------------------- worst case

def worst_case_snake(n: int, eps: float) -> RotationFrame:
    """One connected component of ``n`` readings whose streaming order forces
    balanced merges.

    ``G = 2**k`` parallel strands run along the steps on every other laser, so
    strands are more than ``eps`` apart. Bridge readings on the odd lasers, in
    the last ``k`` steps, join neighbouring strand groups level by level:
    pairs of strands first, then pairs of pairs, and so on. Strands are at
    least ``2 * (k + 2)`` long so the two sides of every merge are close in
    size. Adjacent readings are ``0.9 * eps`` apart.
    """
    n = int(n)
    if n < 2:
        raise ValueError("need at least two points")
    if n > 1 << 24:
        raise ValueError(f"{n} points do not fit in one frame")
    k = max(0, int(math.log2(n)))
    while k > 0 and (1 << k) * 2 * (k + 2) + (1 << k) - 1 > n:
        k -= 1
    strands = 1 << k
    bridges = strands - 1
    length, extra = divmod(n - bridges, strands)
    n_lasers = 2 * strands - 1
    n_steps = max(2, length + (1 if extra else 0))

    d_theta = 0.01 if n_lasers == 1 else min(0.01, 0.8 / (n_lasers - 1))
    radius = 0.45 * eps / math.sin(d_theta / 2)
    elevations = [(i - (n_lasers - 1) / 2) * d_theta for i in range(n_lasers)]
    sensor = SensorConfig(n_lasers, n_steps, tuple(elevations), d_theta, 10.0, None)

    ranges = np.zeros(sensor.shape)
    ranges[0:n_lasers:2, :length] = radius
    if extra:
        ranges[0:2 * extra:2, length] = radius
    for j in range(bridges):
        level = 1 + ((j + 1) & -(j + 1)).bit_length() - 1
        ranges[2 * j + 1, length - k - 1 + level] = radius
    return RotationFrame(sensor, ranges)


# ------------------------------------------------------------------ scene files

SCENE_HEADER_KEYS = SENSOR_KEYS + OPTIONAL_SENSOR_KEYS + ("seed", "scenario")


def parse_scene(text: str, seed_override: int | None = None) -> SceneSpec:
    """Parse a scene file. ``seed_override`` (or ``$LISCO_SEED``) replaces the seed."""
    header, objects = [], []
    ground_level = None
    prim_lines = []
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" in line:
            header.append(line)
        else:
            prim_lines.append((n, line))
    values = parse_key_values(header, SCENE_HEADER_KEYS, "scene")
    sensor_values = {k: v for k, v in values.items() if k in SENSOR_KEYS + OPTIONAL_SENSOR_KEYS}
    if any(k in sensor_values for k in SENSOR_KEYS):
        sensor = sensor_from_values(sensor_values, "scene")
    else:
        ground = sensor_values.get("ground_z_m")
        sensor = hdl64_like(GROUND_CUT if ground is None else float(ground))
    for n, line in prim_lines:
        tok = line.split()
        if tok[0] == "ground" and len(tok) == 2:
            ground_level = float(tok[1])
    try:
        for n, line in prim_lines:
            tok = line.split()
            kind, nums = tok[0], [float(v) for v in tok[1:]]
            if kind == "box" and len(nums) == 6:
                objects.append(Box(nums[:3], nums[3:]))
            elif kind == "cyl" and len(nums) in (4, 5):
                cx, cy, r, h = nums[:4]
                if len(nums) == 5:
                    z0 = nums[4]
                else:
                    z0 = ground_level if ground_level is not None else -h / 2
                objects.append(Cylinder(cx, cy, r, h, z0))
            elif kind == "ground" and len(nums) == 1:
                objects.append(Ground(nums[0]))
            else:
                raise FormatError(f"scene line {n}: cannot parse {line!r}")
    except ValueError as exc:
        if isinstance(exc, FormatError):
            raise
        raise FormatError(f"scene: {exc}") from exc
    seed = int(values.get("seed", 0))
    if seed_override is None and os.environ.get(SEED_ENV):
        seed_override = int(os.environ[SEED_ENV])
    if seed_override is not None:
        seed = seed_override
    scenario = values.get("scenario")
    if scenario is not None and scenario not in SCENARIOS:
        raise FormatError(f"scene: unknown scenario {scenario!r}")
    return SceneSpec(sensor, objects, seed, scenario)


def read_scene(path, seed_override: int | None = None) -> SceneSpec:
    return parse_scene(Path(path).read_text(), seed_override)


def format_scene(spec: SceneSpec) -> str:
    lines = [format_sensor_config(spec.sensor).rstrip("\n"), f"seed={spec.seed}"]
    if spec.scenario:
        lines.append(f"scenario={spec.scenario}")
    for obj in spec.objects:
        if isinstance(obj, Box):
            lines.append("box " + " ".join(repr(v) for v in obj.center + obj.size))
        elif isinstance(obj, Cylinder):
            lines.append("cyl " + " ".join(repr(v) for v in
                                           (obj.cx, obj.cy, obj.radius, obj.height, obj.base_z)))
        elif isinstance(obj, Ground):
            lines.append(f"ground {obj.z!r}")
    return "\n".join(lines) + "\n"
