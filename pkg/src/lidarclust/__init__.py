"""Single-pass Euclidean clustering of rotating-LiDAR range images."""
from .baseline import (BruteForceRefused, KDTree, PointSet, brute_force_cluster, build_index,
                       get_neighbors, pcl_style_cluster)
from .engine import LiscoEngine, StreamOrderError, cluster_frame
from .estimators import (BruteForceClustering, EuclideanClusterExtraction, GroundRemoval,
                         LiscoClustering)
from .mask import NeighborMask, neighbor_mask
from .result import NOISE, ClusterResult, canonical
from .scene import (Box, Cylinder, Ground, SceneSpec, generate, scenario_spec, wall_scene,
                    worst_case_snake)
from .sensor import (PointAttrs, RotationFrame, SensorConfig, hdl64_like, remove_ground,
                     to_cartesian, uniform_sensor)
from .store import SubclusterStore

__version__ = "0.1.0"
