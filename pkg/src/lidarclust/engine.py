"""Single-pass clustering of a rotation, one step (column) at a time.

Each new reading is compared only against readings that have already
arrived: the lasers inside its window on its own and earlier steps, plus the
first steps of the rotation when its window runs past the last step. A pair of
neighbors is therefore examined when the later of the two arrives, and no
comparison is ever deferred.
"""
from __future__ import annotations

import numpy as np
from numba import njit

from .mask import half_widths
from .result import ClusterResult
from .sensor import RotationFrame, SensorConfig
from .store import (COMPARISONS, DISTANCE_TESTS, FIRST, HEAD, NEXT, POINTS, SIZE, Snapshot,
                    SubclusterStore, create_head, merge_heads, set_head)

# relative slack on the cheap |d - d'| <= eps rejection so that rounding in
# the Cartesian coordinates can never reject a pair the exact test accepts
PREFILTER_SLACK = 1e-9


@njit(cache=True)
def clear_buffers(ranges, d, xyz, table, stats):
    ranges[:] = 0.0
    d[:] = 0.0
    xyz[:] = 0.0
    table[:SIZE] = -1
    table[SIZE] = 0
    stats[:] = 0


@njit(cache=True)
def split_clusters(table, d, min_pts):
    """Final clusters ordered by head id, each sorted, plus sorted noise.

    A reading without a head has no neighbor and counts as a one-point
    subcluster headed by itself.
    """
    n = d.shape[0]
    n_keys = 0
    n_members = 0
    n_noise = 0
    for p in range(n):
        if d[p] > 0:
            h = table[HEAD, p]
            size = 1 if h < 0 else table[SIZE, h]
            if size >= min_pts:
                n_members += 1
                if h < 0 or h == p:
                    n_keys += 1
            else:
                n_noise += 1
    flat = np.empty(n_members, np.int64)
    offsets = np.empty(n_keys + 1, np.int64)
    noise = np.empty(n_noise, np.int64)
    k = 0
    c = 0
    z = 0
    for p in range(n):
        if d[p] <= 0:
            continue
        h = table[HEAD, p]
        size = 1 if h < 0 else table[SIZE, h]
        if size < min_pts:
            noise[z] = p
            z += 1
        elif h < 0:
            offsets[c] = k
            c += 1
            flat[k] = p
            k += 1
        elif h == p:
            offsets[c] = k
            c += 1
            start = k
            q = table[FIRST, h]
            while q != -1:
                flat[k] = q
                k += 1
                q = table[NEXT, q]
            flat[start:k].sort()
    offsets[n_keys] = k
    return flat, offsets, noise


class StreamOrderError(RuntimeError):
    """A step arrived out of order, or the stream was used after it ended."""


@njit(cache=True)
def _scan(p, l_lo, l_hi, s_lo, s_hi, n_lasers, d, xyz, eps_pre, eps2, table, stats, merge_log):
    dp = d[p]
    px = xyz[p, 0]
    py = xyz[p, 1]
    pz = xyz[p, 2]
    for s2 in range(s_lo, s_hi + 1):
        col = s2 * n_lasers
        for l2 in range(l_lo, l_hi + 1):
            q = col + l2
            if q == p:
                continue
            dq = d[q]
            if dq <= 0.0:
                continue
            stats[COMPARISONS] += 1
            if abs(dp - dq) > eps_pre:
                continue
            h1 = table[HEAD, p]
            h2 = table[HEAD, q]
            if h1 == h2 and h1 >= 0:
                continue
            stats[DISTANCE_TESTS] += 1
            dx = px - xyz[q, 0]
            dy = py - xyz[q, 1]
            dz = pz - xyz[q, 2]
            if dx * dx + dy * dy + dz * dz <= eps2:
                if h1 < 0 and h2 < 0:
                    h = create_head(table, stats, p, q)
                    set_head(table, p, h)
                    set_head(table, q, h)
                elif h1 < 0:
                    set_head(table, p, h2)
                elif h2 < 0:
                    set_head(table, q, h1)
                else:
                    merge_heads(table, stats, merge_log, h1, h2)


@njit(cache=True)
def process_steps(s_begin, s_end, d, xyz, cos_el, n_lasers, n_steps, delta_theta, delta_alpha,
                  eps, horizontal, table, stats, merge_log):
    eps2 = eps * eps
    eps_pre = eps * (1.0 + PREFILTER_SLACK)
    for s in range(s_begin, s_end):
        for l in range(n_lasers):
            p = s * n_lasers + l
            dp = d[p]
            if dp <= 0.0:
                continue
            stats[POINTS] += 1
            lh, sh, _ = half_widths(dp, eps, cos_el[l], delta_theta, delta_alpha,
                                    n_lasers, n_steps, horizontal)
            l_lo = l - lh if l - lh > 0 else 0
            l_hi = l + lh if l + lh < n_lasers - 1 else n_lasers - 1
            s_lo = s - sh if s - sh > 0 else 0
            # window running past the last step continues at step 0
            wrap_end = s + sh - n_steps
            if wrap_end >= s_lo:
                wrap_end = s_lo - 1
            if wrap_end >= 0:
                _scan(p, l_lo, l_hi, 0, wrap_end, n_lasers, d, xyz, eps_pre, eps2,
                      table, stats, merge_log)
            _scan(p, l_lo, l_hi, s_lo, s, n_lasers, d, xyz, eps_pre, eps2,
                  table, stats, merge_log)


@njit(cache=True)
def load_columns(s0, block, ranges, d, xyz, directions, ground_z, use_ground):
    """Validate a block of columns, drop ground readings and store ranges and
    coordinates. Returns False (and writes nothing) if any reading is invalid."""
    n_lasers, k = block.shape
    for j in range(k):
        for l in range(n_lasers):
            v = block[l, j]
            if not (v >= 0.0 and v < np.inf):
                return False
    for j in range(k):
        s = s0 + j
        for l in range(n_lasers):
            v = block[l, j]
            p = s * n_lasers + l
            if use_ground and v > 0.0 and v * directions[p, 2] < ground_z:
                v = 0.0
            ranges[l, s] = v
            d[p] = v
            xyz[p, 0] = v * directions[p, 0]
            xyz[p, 1] = v * directions[p, 1]
            xyz[p, 2] = v * directions[p, 2]
    return True


class LiscoEngine:
    """Streaming Euclidean clusterer for one rotation.

    Feed the columns of the range matrix in step order with :meth:`on_step`
    (or several at once with :meth:`feed`), then call :meth:`finalize`.
    Readings below ``config.ground_z`` are dropped as each column arrives.

    Args:
        config: sensor geometry.
        eps: neighbor distance in meters; pairs at distance <= eps are linked.
        min_pts: smallest subcluster reported as a cluster.
        horizontal_mask: derive the step window from the horizontal range
            (sound for inclined lasers). ``False`` uses the plain distance,
            which can miss neighbors and exists for comparison only.
    """

    def __init__(self, config: SensorConfig, eps: float, min_pts: int = 10,
                 horizontal_mask: bool = True):
        if not eps > 0:
            raise ValueError(f"eps must be positive, got {eps!r}")
        if int(min_pts) != min_pts or min_pts < 1:
            raise ValueError(f"min_pts must be a positive integer, got {min_pts!r}")
        self.config = config
        self.eps = float(eps)
        self.min_pts = int(min_pts)
        self.horizontal_mask = bool(horizontal_mask)
        L, S = config.shape
        self.ranges = np.zeros((L, S))
        self.steps_received = 0
        self.store = SubclusterStore(L * S)
        self._d = np.zeros(L * S)
        self._xyz = np.zeros((L * S, 3))
        store = self.store
        self._kernel_args = (config.elevation_cosines, L, S, config.delta_theta,
                             config.delta_alpha, self.eps, self.horizontal_mask,
                             store.table, store.stats, store.merge_log)

    def reset(self) -> None:
        """Start the next rotation, reusing the buffers of this one."""
        clear_buffers(self.ranges, self._d, self._xyz, self.store.table, self.store.stats)
        self.store.clear_contracts()
        self.steps_received = 0

    @property
    def finished(self) -> bool:
        return self.steps_received == self.config.step_count

    def on_step(self, s: int, column) -> None:
        if s != self.steps_received:
            raise StreamOrderError(f"expected step {self.steps_received}, got {s}")
        column = np.asarray(column, dtype=np.float64)
        if column.shape != (self.config.laser_count,):
            raise ValueError(f"column must hold {self.config.laser_count} readings, "
                             f"got shape {column.shape}")
        self._ingest(s, column.reshape(-1, 1))

    def feed(self, columns) -> None:
        """Consume the next ``k`` steps given as an (L, k) block."""
        block = np.asarray(columns, dtype=np.float64)
        if block.ndim != 2 or block.shape[0] != self.config.laser_count:
            raise ValueError(f"expected an ({self.config.laser_count}, k) block, got {block.shape}")
        self._ingest(self.steps_received, block)

    def _ingest(self, s0, block):
        L, S = self.config.shape
        k = block.shape[1]
        if self.steps_received + k > S:
            raise StreamOrderError("more steps than the rotation holds")
        ground = self.config.ground_z
        if not load_columns(s0, block, self.ranges, self._d, self._xyz,
                            self.config.directions_by_id,
                            0.0 if ground is None else ground, ground is not None):
            raise ValueError("ranges must be finite and non-negative")
        process_steps(s0, s0 + k, self._d, self._xyz, *self._kernel_args)
        self.steps_received += k

    @property
    def frame(self) -> RotationFrame:
        """Ranges received so far (after ground removal); later steps are zero."""
        return RotationFrame(self.config, self.ranges)

    @property
    def stats(self) -> dict:
        return self.store.stats_dict()

    def snapshot(self) -> Snapshot:
        return Snapshot(self.store.snapshot(), self.stats["points"], self.steps_received)

    def finalize(self) -> ClusterResult:
        if not self.finished:
            raise StreamOrderError(
                f"rotation incomplete: {self.steps_received}/{self.config.step_count} steps")
        flat, offsets, noise = split_clusters(self.store.table, self._d, self.min_pts)
        clusters = [flat[offsets[i]:offsets[i + 1]] for i in range(offsets.size - 1)]
        stats = self.stats
        stats["clusters"] = len(clusters)
        stats["noise"] = int(noise.size)
        return ClusterResult(clusters, noise, stats)


def cluster_frame(frame: RotationFrame, eps: float, min_pts: int = 10,
                  horizontal_mask: bool = True) -> ClusterResult:
    """Run the streaming engine over a complete frame."""
    engine = LiscoEngine(frame.config, eps, min_pts, horizontal_mask)
    engine.feed(frame.ranges)
    return engine.finalize()
