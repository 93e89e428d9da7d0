"""Subcluster bookkeeping for the streaming clusterer.

Every point keeps a direct reference to the head of its subcluster, so looking
up a head is a single array read. Merging rewrites the head of every member of
the smaller subcluster and splices its member list onto the larger one.

State lives in one (5, n) int64 table so the compiled kernel can take it as a
single argument:

* ``HEAD``  head id of each point, ``-1`` while unassigned
* ``NEXT``  next member in the same subcluster list, ``-1`` at the tail
* ``FIRST`` / ``LAST``  ends of the member list, indexed by head id
* ``SIZE``  member count, indexed by head id; a head is live iff its size > 0
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

HEAD, NEXT, FIRST, LAST, SIZE = 0, 1, 2, 3, 4

# counters shared with the engine kernel
POINTS, COMPARISONS, DISTANCE_TESTS, CREATED, MERGES, REWRITES = range(6)
STAT_NAMES = ("points", "comparisons", "distance_tests", "subclusters_created", "merges",
              "head_rewrites")


class StoreContractError(RuntimeError):
    """Raised when a store operation is called outside its contract."""


@njit(cache=True)
def create_head(table, stats, p, q):
    h = p if p < q else q
    table[FIRST, h] = -1
    table[LAST, h] = -1
    table[SIZE, h] = 0
    stats[CREATED] += 1
    return h


@njit(cache=True)
def set_head(table, p, h):
    table[HEAD, p] = h
    table[NEXT, p] = -1
    tail = table[LAST, h]
    if tail == -1:
        table[FIRST, h] = p
    else:
        table[NEXT, tail] = p
    table[LAST, h] = p
    table[SIZE, h] += 1


@njit(cache=True)
def merge_heads(table, stats, merge_log, h1, h2):
    # ties keep h1
    if table[SIZE, h2] > table[SIZE, h1]:
        base, small = h2, h1
    else:
        base, small = h1, h2
    q = table[FIRST, small]
    while q != -1:
        table[HEAD, q] = base
        q = table[NEXT, q]
    stats[REWRITES] += table[SIZE, small]
    table[NEXT, table[LAST, base]] = table[FIRST, small]
    table[LAST, base] = table[LAST, small]
    k = stats[MERGES]
    if k < merge_log.shape[0]:
        merge_log[k, 0] = table[SIZE, base]
        merge_log[k, 1] = table[SIZE, small]
    stats[MERGES] = k + 1
    table[SIZE, base] += table[SIZE, small]
    table[SIZE, small] = 0
    table[FIRST, small] = -1
    table[LAST, small] = -1
    return base


@njit(cache=True)
def gather_members(table, heads):
    """Concatenated member lists of ``heads`` plus offsets, in list order."""
    total = 0
    for h in heads:
        total += table[SIZE, h]
    out = np.empty(total, np.int64)
    offsets = np.empty(heads.shape[0] + 1, np.int64)
    k = 0
    for i in range(heads.shape[0]):
        offsets[i] = k
        q = table[FIRST, heads[i]]
        while q != -1:
            out[k] = q
            k += 1
            q = table[NEXT, q]
    offsets[heads.shape[0]] = k
    return out, offsets


def new_table(n: int) -> np.ndarray:
    table = np.full((5, n), -1, dtype=np.int64)
    table[SIZE] = 0
    return table


@dataclass
class Snapshot:
    """Provisional subclusters at some moment of the stream (no size filter)."""

    subclusters: dict = field(default_factory=dict)
    points_processed: int = 0
    steps_received: int = 0

    def __len__(self):
        return len(self.subclusters)

    @property
    def assigned(self) -> np.ndarray:
        if not self.subclusters:
            return np.empty(0, dtype=np.int64)
        return np.sort(np.concatenate(list(self.subclusters.values())))


class SubclusterStore:
    """Heads and member lists of all live subclusters.

    Points are addressed by their dense id (see :mod:`lidarclust.sensor`).
    """

    def __init__(self, n_points: int):
        self.n = int(n_points)
        self.table = new_table(self.n)
        self.stats = np.zeros(len(STAT_NAMES), dtype=np.int64)
        self.merge_log = np.zeros((max(self.n, 1), 2), dtype=np.int64)
        self._registered = set()

    def clear(self) -> None:
        """Forget every subcluster, keeping the allocated arrays."""
        self.table[:SIZE] = -1
        self.table[SIZE] = 0
        self.stats[:] = 0
        self.clear_contracts()

    def clear_contracts(self) -> None:
        self._registered.clear()

    @property
    def head_of(self) -> np.ndarray:
        return self.table[HEAD]

    @property
    def sizes(self) -> np.ndarray:
        return self.table[SIZE]

    def _check_point(self, p):
        if not (0 <= p < self.n):
            raise IndexError(f"point id {p} out of range [0, {self.n})")

    def is_live(self, h) -> bool:
        return 0 <= h < self.n and self.table[SIZE, h] > 0

    def get_head(self, p):
        self._check_point(p)
        h = self.table[HEAD, p]
        return None if h < 0 else int(h)

    def create_head(self, p, q) -> int:
        """Register a new subcluster for two headless points; returns the smaller id.

        Neither point is attached; callers follow up with :meth:`set_head`.
        """
        self._check_point(p)
        self._check_point(q)
        if p == q:
            raise StoreContractError("create_head needs two distinct points")
        if self.table[HEAD, p] >= 0 or self.table[HEAD, q] >= 0:
            raise StoreContractError(f"create_head called with an assigned point ({p}, {q})")
        h = int(create_head(self.table, self.stats, p, q))
        self._registered.add(h)
        return h

    def set_head(self, p, h):
        self._check_point(p)
        self._check_point(h)
        if self.table[HEAD, p] >= 0:
            raise StoreContractError(f"point {p} already belongs to head {self.table[HEAD, p]}")
        if self.table[SIZE, h] == 0 and h not in self._registered:
            raise StoreContractError(f"{h} is not a live head")
        set_head(self.table, p, h)
        self._registered.discard(h)

    def merge(self, h1, h2) -> int:
        """Fold the smaller subcluster into the larger; ties keep ``h1``."""
        if h1 == h2:
            raise StoreContractError("cannot merge a subcluster with itself")
        if not (self.is_live(h1) and self.is_live(h2)):
            raise StoreContractError(f"merge needs two live heads, got ({h1}, {h2})")
        return int(merge_heads(self.table, self.stats, self.merge_log, h1, h2))

    def live_heads(self) -> np.ndarray:
        return np.flatnonzero(self.table[SIZE] > 0)

    def members(self, h) -> np.ndarray:
        if not self.is_live(h):
            raise StoreContractError(f"{h} is not a live head")
        out, _ = gather_members(self.table, np.array([h], dtype=np.int64))
        return out

    def snapshot(self) -> dict:
        heads = self.live_heads()
        flat, offsets = gather_members(self.table, heads)
        return {int(h): flat[offsets[i]:offsets[i + 1]].copy() for i, h in enumerate(heads)}

    def stats_dict(self) -> dict:
        return {name: int(v) for name, v in zip(STAT_NAMES, self.stats)}

    @property
    def merges(self) -> np.ndarray:
        """(base size, absorbed size) of every merge so far, in order."""
        k = min(int(self.stats[MERGES]), self.merge_log.shape[0])
        return self.merge_log[:k].copy()
