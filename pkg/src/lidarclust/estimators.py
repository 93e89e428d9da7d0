"""scikit-learn style wrappers around the clusterers.

``LiscoClustering`` takes a range image (lasers x steps) and labels every
cell; the batch estimators take an (n, 3) array of points and label rows.
Labels follow the usual convention: ``-1`` is noise. Range-image cells with
no return (or removed as ground) get ``-2``.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .baseline import KDTree, PointSet, brute_force_cluster, pcl_style_cluster
from .engine import LiscoEngine
from .sensor import RotationFrame, SensorConfig, below_ground, hdl64_like
from .validation import check_eps, check_min_pts, check_points, check_range_image

NO_RETURN = -2


def _sensor(sensor, ground_z):
    sensor = sensor if sensor is not None else hdl64_like()
    if not isinstance(sensor, SensorConfig):
        raise TypeError(f"sensor must be a SensorConfig, got {type(sensor).__name__}")
    return sensor.with_ground(ground_z) if ground_z is not None else sensor


class LiscoClustering(ClusterMixin, BaseEstimator):
    """Streaming Euclidean clustering of one rotation.

    ``fit`` consumes a full (L, S) range image. ``partial_fit`` consumes the
    next block of columns; labels become available once the last step
    arrives. ``subclusters()`` may be called at any point in between.
    """

    def __init__(self, sensor=None, eps=0.4, min_pts=10, ground_z=None, horizontal_mask=True):
        self.sensor = sensor
        self.eps = eps
        self.min_pts = min_pts
        self.ground_z = ground_z
        self.horizontal_mask = horizontal_mask

    def _start(self):
        config = _sensor(self.sensor, self.ground_z)
        self.engine_ = LiscoEngine(config, check_eps(self.eps), check_min_pts(self.min_pts),
                                   self.horizontal_mask)
        for attr in ("labels_", "result_"):
            self.__dict__.pop(attr, None)

    def fit(self, X, y=None):
        self._start()
        X = check_range_image(X, self.engine_.config)
        self.engine_.feed(X)
        self._finish()
        return self

    def partial_fit(self, X, y=None):
        if not hasattr(self, "engine_") or self.engine_.finished:
            self._start()
        X = check_range_image(X, self.engine_.config, columns=True)
        self.engine_.feed(X)
        if self.engine_.finished:
            self._finish()
        return self

    def _finish(self):
        engine = self.engine_
        self.result_ = engine.finalize()
        L, S = engine.config.shape
        flat = self.result_.labels(L * S)
        self.labels_ = flat.reshape(S, L).T.copy()
        self.n_clusters_ = self.result_.n_clusters
        self.stats_ = self.result_.stats

    def subclusters(self) -> dict:
        """Current subclusters as ``{head id: member ids}``."""
        check_is_fitted(self, "engine_")
        return self.engine_.snapshot().subclusters

    def fit_predict(self, X, y=None):
        return self.fit(X).labels_


class _PointClusterer(ClusterMixin, BaseEstimator):
    def _run(self, points, eps, min_pts):
        raise NotImplementedError

    def fit(self, X, y=None):
        X = check_points(X)
        eps, min_pts = check_eps(self.eps), check_min_pts(self.min_pts)
        self.result_ = self._run(PointSet.from_xyz(X), eps, min_pts)
        self.labels_ = self.result_.labels(len(X))
        self.n_clusters_ = self.result_.n_clusters
        self.stats_ = self.result_.stats
        return self


class EuclideanClusterExtraction(_PointClusterer):
    """Breadth-first Euclidean cluster extraction over a kd-tree."""

    def __init__(self, eps=0.4, min_pts=10, leaf_size=16):
        self.eps = eps
        self.min_pts = min_pts
        self.leaf_size = leaf_size

    def _run(self, points, eps, min_pts):
        index = KDTree(points, self.leaf_size) if len(points) else None
        return pcl_style_cluster(points, eps, min_pts, index)


class BruteForceClustering(_PointClusterer):
    """Connected components of the all-pairs distance graph (small inputs only)."""

    def __init__(self, eps=0.4, min_pts=10):
        self.eps = eps
        self.min_pts = min_pts

    def _run(self, points, eps, min_pts):
        return brute_force_cluster(points, eps, min_pts)


class GroundRemoval(TransformerMixin, BaseEstimator):
    """Zero the range-image cells whose reading lies below ``ground_z``."""

    def __init__(self, sensor=None, ground_z=-1.5):
        self.sensor = sensor
        self.ground_z = ground_z

    def fit(self, X, y=None):
        self.sensor_ = _sensor(self.sensor, None)
        check_range_image(X, self.sensor_)
        return self

    def transform(self, X):
        check_is_fitted(self, "sensor_")
        X = check_range_image(X, self.sensor_)
        if self.ground_z is None:
            return X.copy()
        return np.where(below_ground(self.sensor_.with_ground(self.ground_z), X), 0.0, X)


def frame_labels(frame: RotationFrame, **params) -> np.ndarray:
    """Convenience: (L, S) labels of a frame under :class:`LiscoClustering`."""
    return LiscoClustering(sensor=frame.config, **params).fit(frame.ranges).labels_
