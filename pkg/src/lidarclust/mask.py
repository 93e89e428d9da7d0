"""Neighbor windows on the range image.

For a reading at distance ``d`` every point within ``eps`` of it subtends an
angle of at most ``asin(eps / d)`` at the sensor. That bounds the elevation
gap, hence the number of lasers to look at. The azimuth gap is bounded by
``asin(eps / r)`` where ``r = d * cos(elevation)`` is the horizontal range;
bounding it with ``d`` instead of ``r`` misses neighbors of points seen by
inclined lasers, so that variant is only kept for comparison
(``horizontal=False``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .sensor import SensorConfig

# Ratios within this distance above an integer are snapped down before the
# ceiling. Sound: a neighbor k steps away needs the exact ratio to be >= k.
SNAP = 1e-9


@dataclass(frozen=True)
class NeighborMask:
    laser_halfwidth: int
    step_halfwidth: int
    clamped: bool


@njit(cache=True)
def _snap_ceil(x):
    k = math.ceil(x - SNAP)
    return k if k > 0 else 0


@njit(cache=True)
def half_widths(d, eps, cos_elevation, delta_theta, delta_alpha, n_lasers, n_steps, horizontal):
    """Return ``(laser_halfwidth, step_halfwidth, clamped)`` for one reading."""
    full_steps = (n_steps + 1) // 2
    ratio = eps / d
    if ratio >= 1.0:
        return n_lasers, full_steps, True
    angle = math.asin(ratio)
    lasers = _snap_ceil(angle / delta_theta)
    if lasers > n_lasers:
        lasers = n_lasers
    clamped = False
    if horizontal:
        r = d * cos_elevation
        if eps >= r:
            return lasers, full_steps, True
        steps = _snap_ceil(math.asin(eps / r) / delta_alpha)
    else:
        steps = _snap_ceil(angle / delta_alpha)
    if steps > full_steps:
        steps = full_steps
    return lasers, steps, clamped


@njit(cache=True)
def _half_widths_many(d, lasers, eps, cos_el, delta_theta, delta_alpha, n_lasers, n_steps,
                      horizontal):
    n = d.shape[0]
    lh = np.empty(n, np.int64)
    sh = np.empty(n, np.int64)
    for i in range(n):
        a, b, _ = half_widths(d[i], eps, cos_el[lasers[i]], delta_theta, delta_alpha,
                              n_lasers, n_steps, horizontal)
        lh[i] = a
        sh[i] = b
    return lh, sh


def neighbor_mask(config: SensorConfig, distance: float, eps: float, laser=None) -> NeighborMask:
    """Window of lasers and previous/next steps that holds every ``eps``-neighbor.

    Without ``laser`` the step half-width is derived from ``distance`` alone,
    which is exact only for a horizontal laser. Passing the laser index uses
    the reading's horizontal range and is what the streaming engine does.
    """
    if not distance > 0:
        raise ValueError(f"distance must be positive, got {distance!r}")
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps!r}")
    if laser is None:
        cos_el, horizontal = 1.0, False
    else:
        cos_el, horizontal = float(config.elevation_cosines[laser]), True
    lh, sh, clamped = half_widths(float(distance), float(eps), cos_el, config.delta_theta,
                                  config.delta_alpha, config.laser_count, config.step_count,
                                  horizontal)
    return NeighborMask(int(lh), int(sh), bool(clamped))


def mask_halfwidths(config: SensorConfig, distances, lasers, eps: float, horizontal: bool = True):
    """Vectorised :func:`neighbor_mask`; returns (laser_halfwidths, step_halfwidths)."""
    d = np.ascontiguousarray(distances, dtype=np.float64)
    lasers = np.ascontiguousarray(lasers, dtype=np.int64)
    if np.any(d <= 0):
        raise ValueError("distances must be positive")
    return _half_widths_many(d, lasers, float(eps), config.elevation_cosines, config.delta_theta,
                             config.delta_alpha, config.laser_count, config.step_count,
                             horizontal)
