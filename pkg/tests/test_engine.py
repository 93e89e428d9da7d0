import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lidarclust.baseline import PointSet, brute_force_cluster
from lidarclust.engine import LiscoEngine, StreamOrderError, cluster_frame
from lidarclust.sensor import RotationFrame, SensorConfig, uniform_sensor
from scenes_util import random_frame, three_way


def near_grid(L=8, S=8, step=0.01):
    """Small sensor with tight angles so adjacent cells at 10 m are ~0.1 m apart."""
    return SensorConfig(L, S, tuple(step * i for i in range(L)), step)


def test_zero_column_changes_nothing():
    engine = LiscoEngine(near_grid(), 0.3, 1)
    engine.on_step(0, np.zeros(8))
    assert engine.stats["comparisons"] == 0
    assert len(engine.snapshot()) == 0


def test_two_adjacent_lasers_form_a_subcluster():
    engine = LiscoEngine(near_grid(), 0.3, 1)
    col = np.zeros(8)
    col[2:4] = 10.0
    engine.on_step(0, col)
    assert engine.snapshot().subclusters == {2: pytest.approx(np.array([2, 3]))}


def test_step_replay_equals_whole_frame():
    rng = np.random.default_rng(5)
    frame = random_frame(rng, 800)
    engine = LiscoEngine(frame.config, 0.4, 2)
    for s in range(frame.config.step_count):
        engine.on_step(s, frame.column(s))
    a = engine.finalize()
    b = cluster_frame(frame, 0.4, 2)
    assert a.canonical() == b.canonical()
    assert a.stats == b.stats


def test_isolated_point_stays_headless():
    ranges = np.zeros((8, 8))
    ranges[4, 4] = 10.0
    engine = LiscoEngine(near_grid(), 0.05, 1)
    engine.feed(ranges)
    assert engine.store.get_head(4 * 8 + 4) is None
    result = engine.finalize()
    assert result.n_clusters == 1 and result.n_noise == 0
    assert cluster_frame(RotationFrame(near_grid(), ranges), 0.05, 2).n_noise == 1


def subclusters_scene():
    """C1 (5 points) and C2 (4 points) separated by one empty laser until step 4,
    where a bridge reading on that laser touches both."""
    ranges = np.zeros((8, 8))
    ranges[0:2, 1:3] = 10.0
    ranges[2, 3] = 10.0           # C1: 5 readings on lasers 0-2
    ranges[4:6, 2:4] = 10.0       # C2: 4 readings on lasers 4-5
    ranges[3, 4] = 10.0           # x, diagonal to both (2, 3) and (4, 3)
    return RotationFrame(near_grid(), ranges)


def test_subclusters_at_half_rotation_then_bridge_merges_them():
    frame = subclusters_scene()
    engine = LiscoEngine(frame.config, 0.15, 1)
    engine.feed(frame.ranges[:, :4])
    sizes = sorted(len(m) for m in engine.snapshot().subclusters.values())
    assert sizes == [4, 5]
    engine.feed(frame.ranges[:, 4:])
    result = engine.finalize()
    assert result.n_clusters == 1 and len(result.clusters[0]) == 10
    assert engine.stats["merges"] == 1
    truth = brute_force_cluster(PointSet.from_frame(frame), 0.15, 1)
    assert result.same_partition(truth)


def test_wrap_pair_is_found():
    cfg = uniform_sensor(1, 100, 0.0, 0.0)
    ranges = np.zeros((1, 100))
    ranges[0, 0] = ranges[0, 99] = 1.0   # about 0.063 m apart across the seam
    result = cluster_frame(RotationFrame(cfg, ranges), 0.1, 2)
    assert result.n_clusters == 1
    truth = brute_force_cluster(PointSet.from_frame(RotationFrame(cfg, ranges)), 0.1, 2)
    assert result.same_partition(truth)


def test_empty_frame():
    result = cluster_frame(RotationFrame.empty(near_grid()), 0.4, 10)
    assert result.n_clusters == 0 and result.n_noise == 0


def blobs(gap):
    cfg = SensorConfig(4, 40, (0.0, 0.01, 0.02, 0.03), 0.01)
    ranges = np.zeros(cfg.shape)
    ranges[:, 0:6] = 10.0
    ranges[:, 6 + gap:12 + gap] = 10.0
    return RotationFrame(cfg, ranges)


@pytest.mark.parametrize("eps, clusters", [(0.15, 2), (0.5, 1)])
def test_two_blobs(eps, clusters):
    frame = blobs(3)
    result = cluster_frame(frame, eps, 5)
    assert result.n_clusters == clusters
    assert result.same_partition(brute_force_cluster(PointSet.from_frame(frame), eps, 5))


def test_min_pts_boundary():
    ranges = np.zeros((8, 8))
    ranges[0, 0:5] = 10.0
    frame = RotationFrame(near_grid(), ranges)
    assert cluster_frame(frame, 0.15, 5).n_clusters == 1
    none = cluster_frame(frame, 0.15, 6)
    assert none.n_clusters == 0 and none.n_noise == 5


def test_snapshot_before_any_step_is_empty():
    snap = LiscoEngine(near_grid(), 0.4).snapshot()
    assert len(snap) == 0 and snap.steps_received == 0


def test_snapshot_is_an_independent_copy():
    frame = subclusters_scene()
    engine = LiscoEngine(frame.config, 0.15, 1)
    engine.feed(frame.ranges[:, :4])
    snap = engine.snapshot()
    before = {h: m.copy() for h, m in snap.subclusters.items()}
    engine.feed(frame.ranges[:, 4:])
    assert all(np.array_equal(before[h], m) for h, m in snap.subclusters.items())


def test_final_snapshot_covers_clusters_and_assigned_noise():
    rng = np.random.default_rng(11)
    frame = random_frame(rng, 600)
    engine = LiscoEngine(frame.config, 0.4, 10)
    engine.feed(frame.ranges)
    result = engine.finalize()
    snap = engine.snapshot()
    in_clusters = set(np.concatenate(result.clusters).tolist()) if result.clusters else set()
    assigned = set(snap.assigned.tolist())
    assert in_clusters <= assigned
    assert assigned - in_clusters <= set(result.noise.tolist())


def test_stream_order_is_enforced():
    engine = LiscoEngine(near_grid(), 0.4)
    with pytest.raises(StreamOrderError):
        engine.on_step(1, np.zeros(8))
    with pytest.raises(ValueError):
        engine.on_step(0, np.zeros(7))
    with pytest.raises(ValueError):
        engine.on_step(0, np.full(8, np.nan))
    with pytest.raises(StreamOrderError):
        engine.finalize()
    engine.feed(np.zeros((8, 8)))
    with pytest.raises(StreamOrderError):
        engine.on_step(8, np.zeros(8))


@pytest.mark.parametrize("kwargs", [dict(eps=0), dict(eps=-1), dict(min_pts=0),
                                    dict(min_pts=2.5)])
def test_parameter_validation(kwargs):
    params = dict(eps=0.4, min_pts=10)
    params.update(kwargs)
    with pytest.raises(ValueError):
        LiscoEngine(near_grid(), **params)


def test_ground_is_dropped_as_columns_arrive():
    cfg = SensorConfig(2, 4, (-0.5, 0.0), 0.01, ground_z=-1.5)
    ranges = np.full(cfg.shape, 10.0)   # laser 0 hits at z = -4.8
    engine = LiscoEngine(cfg, 0.3, 1)
    engine.feed(ranges)
    result = engine.finalize()
    assert result.n_points == 4
    assert np.count_nonzero(engine.ranges[0]) == 0


def test_inclined_laser_needs_horizontal_range():
    # one laser at -1.2 rad: two readings 10 steps apart are 0.23 m apart,
    # but a window sized from the slant distance only reaches 5 steps
    cfg = SensorConfig(1, 1000, (-1.2,), 2 * math.pi / 1000)
    ranges = np.zeros((1, 1000))
    ranges[0, 0] = ranges[0, 10] = 10.0
    frame = RotationFrame(cfg, ranges)
    assert cluster_frame(frame, 0.3, 2).n_clusters == 1
    assert cluster_frame(frame, 0.3, 2, horizontal_mask=False).n_clusters == 0
    assert brute_force_cluster(PointSet.from_frame(frame), 0.3, 2).n_clusters == 1


def test_min_pts_one_makes_every_point_a_cluster():
    rng = np.random.default_rng(2)
    frame = random_frame(rng, 300)
    result = cluster_frame(frame, 0.2, 1)
    assert result.n_noise == 0
    assert result.n_points == frame.n_points
    firsts = [min(c) for c in result.clusters]
    assert len(set(firsts)) == len(firsts)


def test_comparisons_monotone_in_eps():
    rng = np.random.default_rng(9)
    frame = random_frame(rng, 2000)
    counts = [cluster_frame(frame, e, 10).stats["comparisons"] for e in (0.1, 0.2, 0.4, 0.7, 1.0)]
    assert counts == sorted(counts)


def test_result_is_a_partition():
    rng = np.random.default_rng(4)
    frame = random_frame(rng, 1500)
    result = cluster_frame(frame, 0.4, 3)
    ids = result.point_ids()
    assert ids.size == np.unique(ids).size == frame.n_points
    assert all(len(c) >= 3 for c in result.clusters)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 1500), st.sampled_from([0.1, 0.4, 1.0]),
       st.sampled_from([1, 2, 10]))
def test_matches_oracle_on_random_frames(seed, n, eps, min_pts):
    frame = random_frame(np.random.default_rng(seed), n)
    lisco, _, truth = three_way(frame, eps, min_pts)
    assert lisco.same_partition(truth)


def test_reset_reuses_engine_for_next_rotation():
    rng = np.random.default_rng(11)
    first, second = random_frame(rng, 400), None
    second = RotationFrame(first.config, random_frame(rng, 900, first.config).ranges)
    engine = LiscoEngine(first.config, 0.4, 2)
    engine.feed(first.ranges)
    engine.finalize()
    engine.reset()
    assert engine.steps_received == 0 and engine.stats["points"] == 0
    engine.feed(second.ranges)
    again = engine.finalize()
    fresh = LiscoEngine(second.config, 0.4, 2)
    fresh.feed(second.ranges)
    expected = fresh.finalize()
    assert again.canonical() == expected.canonical()
    assert engine.stats == fresh.stats
