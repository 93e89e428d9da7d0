import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lidarclust.mask import mask_halfwidths, neighbor_mask
from lidarclust.sensor import SensorConfig, uniform_sensor


def grid(L=3, S=12, d_theta=math.pi / 6, d_alpha=None):
    el = tuple(i * d_theta for i in range(L))
    d_alpha = d_alpha if d_alpha is not None else 2 * math.pi / S
    return SensorConfig(L, S, el, d_alpha)


def test_exact_arcsine():
    # asin(1/2) = pi/6 exactly, so one laser and one step either side
    m = neighbor_mask(grid(), 2.0, 1.0)
    assert (m.laser_halfwidth, m.step_halfwidth, m.clamped) == (1, 1, False)


def test_clamps_when_eps_exceeds_distance():
    m = neighbor_mask(grid(), 1.5, 2.0)
    assert (m.laser_halfwidth, m.step_halfwidth, m.clamped) == (3, 6, True)


def test_high_precision_reference():
    # asin(0.05) / 0.007 = 7.1458...; asin(0.05) / (2*pi/4000) = 31.844...
    cfg = SensorConfig(16, 4000, tuple(0.007 * i for i in range(16)), 2 * math.pi / 4000)
    m = neighbor_mask(cfg, 10.0, 0.5)
    assert (m.laser_halfwidth, m.step_halfwidth) == (8, 32)


def test_reference_against_mpmath():
    mp = pytest.importorskip("mpmath")
    mp.mp.dps = 40
    cfg = SensorConfig(16, 4000, tuple(0.007 * i for i in range(16)), 2 * math.pi / 4000)
    ratio = mp.asin(mp.mpf("0.05"))
    m = neighbor_mask(cfg, 10.0, 0.5)
    assert m.laser_halfwidth == int(mp.ceil(ratio / mp.mpf(cfg.delta_theta)))
    assert m.step_halfwidth == int(mp.ceil(ratio / mp.mpf(cfg.delta_alpha)))


def test_laser_width_is_clamped_to_laser_count():
    m = neighbor_mask(grid(L=2, d_theta=0.001), 1.0, 0.9)
    assert m.laser_halfwidth == 2


def test_step_width_never_exceeds_half_turn():
    cfg = grid(L=1, S=9)
    m = neighbor_mask(cfg, 1.0, 0.99)
    assert m.step_halfwidth <= math.ceil(9 / 2)


def test_horizontal_range_widens_inclined_lasers():
    cfg = uniform_sensor(8, 1000, -0.8, 0.0)
    flat = neighbor_mask(cfg, 5.0, 0.3, laser=7)
    tilted = neighbor_mask(cfg, 5.0, 0.3, laser=0)
    plain = neighbor_mask(cfg, 5.0, 0.3)
    assert flat.step_halfwidth == plain.step_halfwidth
    assert tilted.step_halfwidth > plain.step_halfwidth


def test_rejects_nonpositive_inputs():
    with pytest.raises(ValueError):
        neighbor_mask(grid(), 0.0, 1.0)
    with pytest.raises(ValueError):
        neighbor_mask(grid(), 1.0, 0.0)


def test_vectorised_matches_scalar():
    cfg = uniform_sensor(16, 900, -0.4, 0.1)
    rng = np.random.default_rng(0)
    d = rng.uniform(0.1, 50, 200)
    lasers = rng.integers(0, 16, 200)
    lh, sh = mask_halfwidths(cfg, d, lasers, 0.4)
    for i in range(200):
        m = neighbor_mask(cfg, d[i], 0.4, laser=int(lasers[i]))
        assert (lh[i], sh[i]) == (m.laser_halfwidth, m.step_halfwidth)


@settings(max_examples=200)
@given(st.floats(0.05, 100), st.floats(0.01, 2), st.floats(0.01, 2))
def test_monotone_in_eps(d, e1, e2):
    cfg = uniform_sensor(32, 2000, -0.4, 0.2)
    lo, hi = sorted((e1, e2))
    a = neighbor_mask(cfg, d, lo, laser=3)
    b = neighbor_mask(cfg, d, hi, laser=3)
    assert a.laser_halfwidth <= b.laser_halfwidth
    assert a.step_halfwidth <= b.step_halfwidth


@settings(max_examples=200)
@given(st.floats(0.05, 100), st.floats(0.05, 100), st.floats(0.01, 2))
def test_antitone_in_distance(d1, d2, eps):
    cfg = uniform_sensor(32, 2000, -0.4, 0.2)
    near, far = sorted((d1, d2))
    a = neighbor_mask(cfg, near, eps, laser=5)
    b = neighbor_mask(cfg, far, eps, laser=5)
    assert a.laser_halfwidth >= b.laser_halfwidth
    assert a.step_halfwidth >= b.step_halfwidth


@settings(max_examples=300)
@given(st.integers(0, 31), st.integers(-40, 40), st.integers(0, 1999), st.integers(-60, 60),
       st.floats(0.3, 60), st.floats(0.05, 1.5), st.floats(0, 1))
def test_ray_pairs_within_eps_are_inside_both_masks(l, dl, s, ds, d, eps, u):
    cfg = uniform_sensor(32, 2000, -0.4, 0.2)
    l2, s2 = l + dl, (s + ds) % 2000
    if not 0 <= l2 < 32:
        return
    p = d * cfg.directions[l, s]
    v = cfg.directions[l2, s2]
    b = float(v @ p)
    disc = b * b - (float(p @ p) - eps * eps)
    if disc < 0:
        return
    lo, hi = b - math.sqrt(disc), b + math.sqrt(disc)
    if hi <= 0:
        return
    t = max(lo, 1e-6) + u * (hi - max(lo, 1e-6))
    q = t * v
    if not ((p - q) ** 2).sum() <= eps * eps:
        return
    step_gap = min(abs(s - s2), 2000 - abs(s - s2))
    for dist, laser in ((d, l), (t, l2)):
        m = neighbor_mask(cfg, dist, eps, laser=laser)
        assert abs(dl) <= m.laser_halfwidth
        assert step_gap <= m.step_halfwidth
