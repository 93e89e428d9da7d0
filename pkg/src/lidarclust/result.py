"""Clustering output shared by every clusterer in the package."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

NOISE = -1


@dataclass
class ClusterResult:
    """Final partition of the non-zero readings.

    ``clusters`` holds one sorted int64 array of point ids per cluster, in the
    producer's order (head id for the streaming engine, smallest member for
    the batch clusterers). ``noise`` is sorted as well.
    """

    clusters: list = field(default_factory=list)
    noise: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    stats: dict = field(default_factory=dict)

    @property
    def n_clusters(self) -> int:
        return len(self.clusters)

    @property
    def n_noise(self) -> int:
        return int(len(self.noise))

    @property
    def n_points(self) -> int:
        return sum(len(c) for c in self.clusters) + self.n_noise

    def point_ids(self) -> np.ndarray:
        parts = list(self.clusters) + [self.noise]
        if not parts:
            return np.empty(0, dtype=np.int64)
        return np.sort(np.concatenate(parts))

    def labels(self, size: int) -> np.ndarray:
        """Label per point id in ``range(size)``: cluster index, ``-1`` noise, ``-2`` absent."""
        out = np.full(size, -2, dtype=np.int64)
        out[self.noise] = NOISE
        for k, members in enumerate(self.clusters):
            out[members] = k
        return out

    def canonical(self):
        return canonical(self)

    def same_partition(self, other: "ClusterResult") -> bool:
        return canonical(self) == canonical(other)


def canonical(result: ClusterResult):
    """Order-free form: clusters sorted internally and by first member, plus sorted noise."""
    clusters = sorted(tuple(int(i) for i in np.sort(c)) for c in result.clusters)
    noise = tuple(int(i) for i in np.sort(result.noise))
    return tuple(clusters), noise


def group_labels(ids: np.ndarray, comp: np.ndarray, min_pts: int):
    """Split ``ids`` by component label into clusters (size >= min_pts) and noise.

    Components are returned ordered by their smallest id.
    """
    ids = np.asarray(ids, dtype=np.int64)
    comp = np.asarray(comp, dtype=np.int64)
    if ids.size == 0:
        return [], np.empty(0, dtype=np.int64)
    sort = np.lexsort((ids, comp))
    ids_s, comp_s = ids[sort], comp[sort]
    starts = np.flatnonzero(np.r_[True, comp_s[1:] != comp_s[:-1]])
    bounds = np.r_[starts, ids_s.size]
    groups = [ids_s[a:b] for a, b in zip(bounds[:-1], bounds[1:])]
    groups.sort(key=lambda g: g[0])
    clusters = [g for g in groups if g.size >= min_pts]
    small = [g for g in groups if g.size < min_pts]
    noise = np.sort(np.concatenate(small)) if small else np.empty(0, dtype=np.int64)
    return clusters, noise


def first_difference(a: ClusterResult, b: ClusterResult):
    """Describe the first cluster (or the noise set) where two results disagree, else None."""
    ca, na = canonical(a)
    cb, nb = canonical(b)
    for i in range(max(len(ca), len(cb))):
        x = ca[i] if i < len(ca) else None
        y = cb[i] if i < len(cb) else None
        if x != y:
            return i, x, y
    if na != nb:
        return "noise", na, nb
    return None
