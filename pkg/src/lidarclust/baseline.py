"""Batch reference clusterers over unorganised points.

``pcl_style_cluster`` is the classic Euclidean cluster extraction: build a
kd-tree, then grow each cluster breadth-first through radius queries.
``brute_force_cluster`` takes connected components of the explicit
``eps``-graph and serves as ground truth for the other two clusterers.

All distance predicates compare ``dx*dx + dy*dy + dz*dz <= eps*eps`` on the
same float64 coordinates, so the three clusterers agree bit-for-bit on
boundary pairs.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .result import ClusterResult, group_labels
from .sensor import PointAttrs, RotationFrame, remove_ground

BRUTE_FORCE_LIMIT = 100_000
BRUTE_FORCE_WARN = 20_000


class BruteForceRefused(ValueError):
    pass


@dataclass
class PointSet:
    """Non-zero readings of a frame as flat arrays, ordered by point id."""

    ids: np.ndarray
    xyz: np.ndarray
    d: np.ndarray | None = None
    laser: np.ndarray | None = None
    step: np.ndarray | None = None

    def __len__(self):
        return int(self.ids.size)

    @classmethod
    def from_frame(cls, frame: RotationFrame) -> "PointSet":
        """Extract readings after ground removal (when the sensor sets ``ground_z``)."""
        frame = remove_ground(frame)
        L = frame.config.laser_count
        flat = frame.ranges.T.reshape(-1)
        ids = np.flatnonzero(flat > 0)
        d = flat[ids]
        xyz = d[:, None] * frame.config.directions_by_id[ids]
        return cls(ids, xyz, d, ids % L, ids // L)

    @classmethod
    def from_xyz(cls, xyz, ids=None) -> "PointSet":
        xyz = np.ascontiguousarray(xyz, dtype=np.float64).reshape(-1, 3)
        ids = np.arange(len(xyz), dtype=np.int64) if ids is None else np.asarray(ids, np.int64)
        if ids.shape != (len(xyz),):
            raise ValueError("ids and points differ in length")
        if np.unique(ids).size != ids.size:
            raise ValueError("duplicate point ids")
        return cls(ids, xyz)

    def attrs(self, i: int) -> PointAttrs:
        x, y, z = (float(v) for v in self.xyz[i])
        d = float(self.d[i]) if self.d is not None else float(np.sqrt(x * x + y * y + z * z))
        laser = int(self.laser[i]) if self.laser is not None else -1
        step = int(self.step[i]) if self.step is not None else -1
        return PointAttrs(d, laser, step, x, y, z)


# --------------------------------------------------------------------- kd-tree

@njit(cache=True)
def _select(perm, xyz, dim, lo, hi, k):
    # reorder perm[lo:hi] so that perm[k] holds the k-th smallest coordinate
    hi -= 1
    while hi > lo:
        a = xyz[perm[lo], dim]
        b = xyz[perm[(lo + hi) // 2], dim]
        c = xyz[perm[hi], dim]
        if a > b:
            a, b = b, a
        if b > c:
            b = c
        pivot = a if a > b else b
        i = lo
        j = hi
        while i <= j:
            while xyz[perm[i], dim] < pivot:
                i += 1
            while xyz[perm[j], dim] > pivot:
                j -= 1
            if i <= j:
                t = perm[i]
                perm[i] = perm[j]
                perm[j] = t
                i += 1
                j -= 1
        if k <= j:
            hi = j
        elif k >= i:
            lo = i
        else:
            break


@njit(cache=True)
def _build(xyz, leaf_size):
    n = xyz.shape[0]
    perm = np.arange(n)
    cap = 2 * n + 1
    start = np.empty(cap, np.int64)
    end = np.empty(cap, np.int64)
    left = np.full(cap, -1, np.int64)
    right = np.full(cap, -1, np.int64)
    lo = np.empty((cap, 3))
    hi = np.empty((cap, 3))
    stack = np.empty(cap, np.int64)
    start[0] = 0
    end[0] = n
    count = 1
    stack[0] = 0
    sp = 1
    while sp > 0:
        sp -= 1
        node = stack[sp]
        a = start[node]
        b = end[node]
        for k in range(3):
            lo[node, k] = np.inf
            hi[node, k] = -np.inf
        for i in range(a, b):
            for k in range(3):
                v = xyz[perm[i], k]
                if v < lo[node, k]:
                    lo[node, k] = v
                if v > hi[node, k]:
                    hi[node, k] = v
        if b - a <= leaf_size:
            continue
        dim = 0
        for k in range(1, 3):
            if hi[node, k] - lo[node, k] > hi[node, dim] - lo[node, dim]:
                dim = k
        mid = (a + b) // 2
        _select(perm, xyz, dim, a, b, mid)
        left[node] = count
        right[node] = count + 1
        start[count] = a
        end[count] = mid
        start[count + 1] = mid
        end[count + 1] = b
        stack[sp] = count
        stack[sp + 1] = count + 1
        sp += 2
        count += 2
    return perm, start[:count], end[:count], left[:count], right[:count], lo[:count], hi[:count]


@njit(cache=True)
def _query(xyz, perm, start, end, left, right, lo, hi, qx, qy, qz, eps2, out, stack, counter):
    found = 0
    stack[0] = 0
    sp = 1
    while sp > 0:
        sp -= 1
        node = stack[sp]
        # squared distance from the query to the node box, summed x, y, z like
        # the point test so that pruning never drops a boundary point
        box = 0.0
        t = 0.0
        if qx < lo[node, 0]:
            t = lo[node, 0] - qx
        elif qx > hi[node, 0]:
            t = qx - hi[node, 0]
        else:
            t = 0.0
        box += t * t
        if qy < lo[node, 1]:
            t = lo[node, 1] - qy
        elif qy > hi[node, 1]:
            t = qy - hi[node, 1]
        else:
            t = 0.0
        box += t * t
        if qz < lo[node, 2]:
            t = lo[node, 2] - qz
        elif qz > hi[node, 2]:
            t = qz - hi[node, 2]
        else:
            t = 0.0
        box += t * t
        if box > eps2:
            continue
        if left[node] == -1:
            for i in range(start[node], end[node]):
                j = perm[i]
                dx = qx - xyz[j, 0]
                dy = qy - xyz[j, 1]
                dz = qz - xyz[j, 2]
                counter[0] += 1
                if dx * dx + dy * dy + dz * dz <= eps2:
                    out[found] = j
                    found += 1
        else:
            stack[sp] = left[node]
            stack[sp + 1] = right[node]
            sp += 2
    return found


@njit(cache=True)
def _extract(xyz, perm, start, end, left, right, lo, hi, eps2):
    n = xyz.shape[0]
    comp = np.full(n, -1, np.int64)
    queue = np.empty(n, np.int64)
    out = np.empty(n, np.int64)
    stack = np.empty(start.shape[0] + 2, np.int64)
    counter = np.zeros(1, np.int64)
    n_comp = 0
    for p in range(n):
        if comp[p] >= 0:
            continue
        comp[p] = n_comp
        queue[0] = p
        size = 1
        i = 0
        while i < size:
            q = queue[i]
            i += 1
            found = _query(xyz, perm, start, end, left, right, lo, hi,
                           xyz[q, 0], xyz[q, 1], xyz[q, 2], eps2, out, stack, counter)
            for k in range(found):
                r = out[k]
                # mark on insertion so each point is queued once
                if comp[r] < 0:
                    comp[r] = n_comp
                    queue[size] = r
                    size += 1
        n_comp += 1
    return comp, counter[0]


class KDTree:
    """Static kd-tree over a point set (median splits on the widest axis)."""

    def __init__(self, points: PointSet, leaf_size: int = 16):
        if leaf_size < 1:
            raise ValueError("leaf_size must be positive")
        self.points = points
        self.leaf_size = int(leaf_size)
        self.xyz = np.ascontiguousarray(points.xyz, dtype=np.float64).reshape(-1, 3)
        self.arrays = _build(self.xyz, self.leaf_size)

    def __len__(self):
        return int(self.xyz.shape[0])

    def query_radius(self, q, eps: float) -> np.ndarray:
        """Row indices (into the point set) within ``eps`` of ``q``, ascending."""
        n = len(self)
        if n == 0:
            return np.empty(0, dtype=np.int64)
        qx, qy, qz = (float(v) for v in q)
        out = np.empty(n, np.int64)
        stack = np.empty(self.arrays[1].shape[0] + 2, np.int64)
        counter = np.zeros(1, np.int64)
        found = _query(self.xyz, *self.arrays, qx, qy, qz, float(eps) * float(eps), out, stack,
                       counter)
        return np.sort(out[:found])


def build_index(points: PointSet, leaf_size: int = 16) -> KDTree:
    return KDTree(points, leaf_size)


def get_neighbors(index: KDTree, q, eps: float) -> np.ndarray:
    """Ids of all points within ``eps`` of ``q`` (a PointAttrs or an xyz triple), ascending."""
    if isinstance(q, PointAttrs):
        q = (q.x, q.y, q.z)
    rows = index.query_radius(q, eps)
    return np.sort(index.points.ids[rows])


def pcl_style_cluster(points: PointSet, eps: float, min_pts: int = 10,
                      index: KDTree | None = None) -> ClusterResult:
    """Breadth-first Euclidean cluster extraction through kd-tree radius queries."""
    _check_params(eps, min_pts)
    n = len(points)
    if n == 0:
        return ClusterResult(stats={"points": 0, "comparisons": 0, "clusters": 0, "noise": 0})
    if index is None:
        index = KDTree(points)
    comp, tests = _extract(index.xyz, *index.arrays, float(eps) * float(eps))
    clusters, noise = group_labels(points.ids, comp, min_pts)
    stats = {"points": n, "comparisons": int(tests), "clusters": len(clusters),
             "noise": int(noise.size)}
    return ClusterResult(clusters, noise, stats)


def brute_force_cluster(points: PointSet, eps: float, min_pts: int = 10,
                        chunk_pairs: int = 4_000_000) -> ClusterResult:
    """Connected components of the all-pairs ``eps``-graph. O(n^2)."""
    _check_params(eps, min_pts)
    n = len(points)
    if n > BRUTE_FORCE_LIMIT:
        raise BruteForceRefused(
            f"brute force is limited to {BRUTE_FORCE_LIMIT} points, got {n}")
    if n > BRUTE_FORCE_WARN:
        warnings.warn(f"brute force over {n} points is slow", RuntimeWarning, stacklevel=2)
    if n == 0:
        return ClusterResult(stats={"points": 0, "comparisons": 0, "clusters": 0, "noise": 0})
    x, y, z = (np.ascontiguousarray(points.xyz[:, k]) for k in range(3))
    eps2 = float(eps) * float(eps)
    rows, cols = [], []
    step = max(1, chunk_pairs // n)
    for i0 in range(0, n, step):
        i1 = min(n, i0 + step)
        dx = x[i0:i1, None] - x[None, i0:]
        dy = y[i0:i1, None] - y[None, i0:]
        dz = z[i0:i1, None] - z[None, i0:]
        r, c = np.nonzero(dx * dx + dy * dy + dz * dz <= eps2)
        keep = c + i0 > r + i0
        rows.append(r[keep] + i0)
        cols.append(c[keep] + i0)
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    graph = coo_matrix((np.ones(rows.size, dtype=np.int8), (rows, cols)), shape=(n, n))
    _, comp = connected_components(graph, directed=False)
    clusters, noise = group_labels(points.ids, comp, min_pts)
    stats = {"points": n, "comparisons": n * (n - 1) // 2, "clusters": len(clusters),
             "noise": int(noise.size)}
    return ClusterResult(clusters, noise, stats)


def _check_params(eps, min_pts):
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps!r}")
    if int(min_pts) != min_pts or min_pts < 1:
        raise ValueError(f"min_pts must be a positive integer, got {min_pts!r}")
