"""Input checks shared by the estimators and the CLI."""
from __future__ import annotations

import numpy as np
from sklearn.utils.validation import check_array

from .sensor import SensorConfig


def check_eps(eps) -> float:
    eps = float(eps)
    if not np.isfinite(eps) or eps <= 0:
        raise ValueError(f"eps must be a positive finite number, got {eps!r}")
    return eps


def check_min_pts(min_pts) -> int:
    if isinstance(min_pts, bool) or int(min_pts) != min_pts or min_pts < 1:
        raise ValueError(f"min_pts must be a positive integer, got {min_pts!r}")
    return int(min_pts)


def check_range_image(X, sensor: SensorConfig | None = None, columns: bool = False) -> np.ndarray:
    """Validate an (L, S) range image, or an (L, k) block of columns when ``columns``."""
    X = check_array(X, dtype=np.float64, ensure_all_finite=True,
                    ensure_min_samples=1, ensure_min_features=1)
    if np.any(X < 0):
        raise ValueError("ranges must be non-negative")
    if sensor is not None:
        if X.shape[0] != sensor.laser_count:
            raise ValueError(f"expected {sensor.laser_count} lasers (rows), got {X.shape[0]}")
        if not columns and X.shape[1] != sensor.step_count:
            raise ValueError(f"expected {sensor.step_count} steps (columns), got {X.shape[1]}")
    return X


def check_points(X) -> np.ndarray:
    """Validate an (n, 3) array of Cartesian points; an empty array is allowed."""
    X = np.asarray(X, dtype=np.float64)
    if X.size == 0:
        return X.reshape(0, 3)
    X = check_array(X, dtype=np.float64, ensure_all_finite=True)
    if X.shape[1] != 3:
        raise ValueError(f"points must have 3 columns, got {X.shape[1]}")
    return np.ascontiguousarray(X)
