import numpy as np
import pytest
from sklearn.base import clone

from lidarclust.baseline import PointSet, brute_force_cluster
from lidarclust.estimators import (NO_RETURN, BruteForceClustering, EuclideanClusterExtraction,
                                   GroundRemoval, LiscoClustering)
from lidarclust.sensor import RotationFrame, uniform_sensor
from scenes_util import random_frame


@pytest.fixture
def frame():
    return random_frame(np.random.default_rng(6), 900)


def test_params_and_clone():
    est = LiscoClustering(eps=0.7, min_pts=3)
    assert est.get_params()["eps"] == 0.7
    twin = clone(est).set_params(min_pts=4)
    assert twin.min_pts == 4 and est.min_pts == 3


def test_lisco_labels_cover_the_grid(frame):
    est = LiscoClustering(sensor=frame.config, eps=0.4, min_pts=2).fit(frame.ranges)
    assert est.labels_.shape == frame.config.shape
    assert np.all((est.labels_ == NO_RETURN) == (frame.ranges == 0))
    truth = brute_force_cluster(PointSet.from_frame(frame), 0.4, 2)
    assert est.result_.same_partition(truth)
    assert est.n_clusters_ == truth.n_clusters


def test_partial_fit_matches_fit(frame):
    full = LiscoClustering(sensor=frame.config, eps=0.4, min_pts=2).fit(frame.ranges)
    stream = LiscoClustering(sensor=frame.config, eps=0.4, min_pts=2)
    S = frame.config.step_count
    bounds = [0, S // 3, S // 2, S]
    for a, b in zip(bounds, bounds[1:]):
        stream.partial_fit(frame.ranges[:, a:b])
        if b < S:
            assert not hasattr(stream, "labels_")
            stream.subclusters()
    assert np.array_equal(stream.labels_, full.labels_)


def test_fit_predict(frame):
    labels = LiscoClustering(sensor=frame.config, eps=0.4).fit_predict(frame.ranges)
    assert labels.shape == frame.config.shape


def test_lisco_input_checks(frame):
    est = LiscoClustering(sensor=frame.config)
    with pytest.raises(ValueError):
        est.fit(frame.ranges[:, :-1])
    with pytest.raises(ValueError):
        est.fit(-frame.ranges)
    with pytest.raises(ValueError):
        LiscoClustering(sensor=frame.config, eps=-1).fit(frame.ranges)
    with pytest.raises(TypeError):
        LiscoClustering(sensor="hdl64").fit(frame.ranges)


def test_ground_z_parameter():
    cfg = uniform_sensor(2, 16, -0.6, 0.0)
    ranges = np.full(cfg.shape, 5.0)      # lower laser sits at z = -2.8
    est = LiscoClustering(sensor=cfg, eps=2.0, min_pts=1, ground_z=-1.5).fit(ranges)
    assert np.all(est.labels_[0] == NO_RETURN)
    assert np.all(est.labels_[1] >= 0)


@pytest.mark.parametrize("cls", [EuclideanClusterExtraction, BruteForceClustering])
def test_point_estimators_agree(cls, frame):
    pts = PointSet.from_frame(frame)
    est = cls(eps=0.4, min_pts=2).fit(pts.xyz)
    truth = brute_force_cluster(PointSet.from_xyz(pts.xyz), 0.4, 2)
    assert np.array_equal(est.labels_, truth.labels(len(pts)))
    assert set(np.unique(est.labels_)) <= set(range(-1, est.n_clusters_))


def test_point_estimators_handle_empty_and_bad_input():
    assert EuclideanClusterExtraction().fit(np.empty((0, 3))).labels_.size == 0
    with pytest.raises(ValueError):
        EuclideanClusterExtraction().fit(np.zeros((4, 2)))
    with pytest.raises(ValueError):
        BruteForceClustering().fit([[0, 0, np.inf]])


def test_ground_removal_transformer():
    cfg = uniform_sensor(2, 16, -0.6, 0.0)
    ranges = np.full(cfg.shape, 5.0)
    out = GroundRemoval(sensor=cfg, ground_z=-1.5).fit_transform(ranges)
    assert np.all(out[0] == 0) and np.all(out[1] == 5.0)
    same = GroundRemoval(sensor=cfg, ground_z=None).fit_transform(ranges)
    assert np.array_equal(same, ranges)
    frame = RotationFrame(cfg, out)
    assert frame.n_points == 16
