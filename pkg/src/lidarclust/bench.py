"""Wall-clock comparison of the streaming engine against the batch baseline.

Streaming time runs from the first column handed to the engine until
``finalize`` returns, with columns delivered one step at a time. Batch time
covers point extraction, kd-tree build and cluster extraction.
"""
from __future__ import annotations

import gc
import math
import time
from dataclasses import dataclass

import numpy as np
from scipy import stats as st

from .baseline import KDTree, PointSet, brute_force_cluster, pcl_style_cluster
from .engine import LiscoEngine
from .result import ClusterResult
from .sensor import RotationFrame, uniform_sensor

ALGORITHMS = ("lisco", "baseline", "brute")
CSV_FIELDS = ("algo", "n_points", "epsilon", "min_pts", "repeat", "millis", "comparisons",
              "merges")


def run_lisco(frame: RotationFrame, eps: float, min_pts: int):
    """Stream ``frame`` column by column; returns ``(result, seconds)``."""
    ranges = frame.ranges
    t0 = time.perf_counter()
    engine = LiscoEngine(frame.config, eps, min_pts)
    for s in range(frame.config.step_count):
        engine.on_step(s, ranges[:, s])
    result = engine.finalize()
    return result, time.perf_counter() - t0


def run_baseline(frame: RotationFrame, eps: float, min_pts: int):
    t0 = time.perf_counter()
    points = PointSet.from_frame(frame)
    index = KDTree(points) if len(points) else None
    result = pcl_style_cluster(points, eps, min_pts, index)
    return result, time.perf_counter() - t0


def run_brute(frame: RotationFrame, eps: float, min_pts: int):
    t0 = time.perf_counter()
    result = brute_force_cluster(PointSet.from_frame(frame), eps, min_pts)
    return result, time.perf_counter() - t0


RUNNERS = {"lisco": run_lisco, "baseline": run_baseline, "brute": run_brute}


def run(algo: str, frame: RotationFrame, eps: float, min_pts: int) -> tuple[ClusterResult, float]:
    try:
        runner = RUNNERS[algo]
    except KeyError:
        raise ValueError(f"unknown algorithm {algo!r}") from None
    return runner(frame, eps, min_pts)


_warm = False


def warm_up() -> None:
    """Compile the numba kernels on a tiny frame so they stay out of timings."""
    global _warm
    if _warm:
        return
    config = uniform_sensor(4, 8, -0.1, 0.1)
    ranges = np.full(config.shape, 5.0)
    frame = RotationFrame(config, ranges)
    for algo in ("lisco", "baseline"):
        run(algo, frame, 0.4, 2)
    _warm = True


@dataclass
class Interval:
    mean: float
    low: float
    high: float
    n: int


def confidence_interval(samples, level: float = 0.99) -> Interval:
    """Student-t interval for the mean of ``samples``."""
    x = np.asarray(samples, dtype=np.float64)
    n = x.size
    mean = float(x.mean())
    if n < 2:
        return Interval(mean, mean, mean, n)
    half = float(st.t.ppf(0.5 + level / 2, n - 1) * x.std(ddof=1) / math.sqrt(n))
    return Interval(mean, mean - half, mean + half, n)


@dataclass
class Comparison:
    n_points: int
    lisco: Interval
    baseline: Interval

    @property
    def speedup(self) -> float:
        return self.baseline.mean / self.lisco.mean


def compare_timing(frame: RotationFrame, eps: float = 0.4, min_pts: int = 10,
                   repeats: int = 20, level: float = 0.99) -> Comparison:
    """Alternate lisco and baseline runs ``repeats`` times each."""
    return interleaved_timing([frame], eps, min_pts, repeats, level)[0]


def interleaved_timing(frames, eps: float = 0.4, min_pts: int = 10, repeats: int = 20,
                       level: float = 0.99) -> list:
    """One :class:`Comparison` per frame.

    Every repeat runs each frame with both algorithms in turn, so slow phases
    of a busy machine hit all frames alike. The collector runs between timed
    calls, never inside them.
    """
    warm_up()
    times = [{"lisco": [], "baseline": []} for _ in frames]
    sizes = [0] * len(frames)
    enabled = gc.isenabled()
    gc.disable()
    try:
        for _ in range(repeats):
            for i, frame in enumerate(frames):
                for algo in ("lisco", "baseline"):
                    gc.collect()
                    result, secs = run(algo, frame, eps, min_pts)
                    times[i][algo].append(secs)
                    sizes[i] = result.n_points
    finally:
        if enabled:
            gc.enable()
    return [Comparison(n, confidence_interval(t["lisco"], level),
                       confidence_interval(t["baseline"], level))
            for n, t in zip(sizes, times)]


def bench_rows(frames, epsilons, min_pts: int = 10, repeats: int = 1,
               algos=("lisco", "baseline")):
    """CSV rows (dicts with :data:`CSV_FIELDS`) for every frame, eps, algo and repeat."""
    warm_up()
    rows = []
    for frame in frames:
        for eps in epsilons:
            for rep in range(repeats):
                for algo in algos:
                    result, secs = run(algo, frame, eps, min_pts)
                    rows.append({
                        "algo": algo,
                        "n_points": result.n_points,
                        "epsilon": eps,
                        "min_pts": min_pts,
                        "repeat": rep,
                        "millis": round(secs * 1e3, 3),
                        "comparisons": result.stats.get("comparisons", 0),
                        "merges": result.stats.get("merges", 0),
                    })
    return rows


def fit_nlogn(ns, times):
    """Fit ``t = c * n * log2(n)``; returns ``c`` and the worst relative residual.

    ``c`` minimises the largest ``|t - c * n * log2(n)| / t`` over the samples,
    so the residual is the smallest worst-case error any such curve achieves.
    """
    ns = np.asarray(ns, dtype=np.float64)
    t = np.asarray(times, dtype=np.float64)
    u = ns * np.log2(ns) / t
    c = 2.0 / (u.min() + u.max())
    residual = float(np.max(np.abs(1.0 - c * u)))
    return float(c), residual
