"""Pose-constrained pixel-to-vertex assignment for dense human correspondence."""

from .assign import UvMap, assign_constrained, assign_constrained_blocked, assign_unconstrained
from .evaluation import GeodesicOracle, average_precision, geodesic_distances, gps
from .geometry import Facing, LabelMap, build_proximal_regions, point_segment_distance, quadrilateral_facing
from .model import CanonicalMesh, EmbeddingSet, EngineConfig, InstanceInput, Skeleton2D, validate_mesh
from .scale import ScaleUnavailable, capsule_radius, estimate_height, estimate_scale

__version__ = "0.1.0"

__all__ = [
    "CanonicalMesh", "EmbeddingSet", "EngineConfig", "Facing", "GeodesicOracle", "InstanceInput",
    "LabelMap", "ScaleUnavailable", "Skeleton2D", "UvMap", "assign_constrained",
    "assign_constrained_blocked", "assign_unconstrained", "average_precision", "build_proximal_regions",
    "capsule_radius", "estimate_height", "estimate_scale", "geodesic_distances", "gps",
    "point_segment_distance", "quadrilateral_facing", "validate_mesh",
]
