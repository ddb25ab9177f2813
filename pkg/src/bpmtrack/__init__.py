"""Offline multi-object tracking with box-plane matching."""

__version__ = "0.1.0"

from .assignment import km_assign
from .boxplane import construct_planes, construct_planes_oracle, evaluate as plane_objective, in_plane_match
from .core import BoundingBox, Detection, MatchSet, PlaneAssignment, TrackerConfig, Tracklet, iou
from .metrics import MetricsReport, evaluate
from .similarity import SimilarityMatrix, build_similarity_matrix
from .tracker import BoxPlaneTracker, TrackingResult, run

__all__ = [
    "BoundingBox",
    "BoxPlaneTracker",
    "Detection",
    "MatchSet",
    "MetricsReport",
    "PlaneAssignment",
    "SimilarityMatrix",
    "TrackerConfig",
    "Tracklet",
    "TrackingResult",
    "build_similarity_matrix",
    "construct_planes",
    "construct_planes_oracle",
    "evaluate",
    "in_plane_match",
    "iou",
    "km_assign",
    "plane_objective",
    "run",
]
