"""Pose-induced proximal regions and their rasterization into a LabelMap.

Pixel (row, col) is treated as the point (x=col, y=row); keypoints live in
the same frame as the mask raster.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import skeletons as sk
from .model import Skeleton2D

MAX_PARTITIONS = 16


class Facing(enum.Enum):
    FRONTAL = "frontal"
    DORSAL = "dorsal"
    INDETERMINATE = "indeterminate"


@dataclass(frozen=True)
class Capsule:
    endpoint_a: tuple[float, float]
    endpoint_b: tuple[float, float]
    radius: float

    def __post_init__(self):
        if self.radius < 0:
            raise ValueError("capsule radius must be >= 0")

    def contains(self, points: np.ndarray) -> np.ndarray:
        return segment_sq_distances(points, self.endpoint_a, self.endpoint_b) <= self.radius**2


@dataclass(frozen=True, eq=False)
class LabelMap:
    allowed: np.ndarray  # (H, W) uint16, bit p set iff partition p allowed
    n_partitions: int

    def __post_init__(self):
        if not 1 <= self.n_partitions <= MAX_PARTITIONS:
            raise ValueError(f"n_partitions must lie in [1, {MAX_PARTITIONS}], got {self.n_partitions}")
        a = np.array(self.allowed, dtype=np.uint16, copy=True)
        a.setflags(write=False)
        object.__setattr__(self, "allowed", a)

    @property
    def height(self) -> int:
        return self.allowed.shape[0]

    @property
    def width(self) -> int:
        return self.allowed.shape[1]

    @property
    def all_bits(self) -> int:
        return (1 << self.n_partitions) - 1

    def labels_at(self, row: int, col: int) -> frozenset[int]:
        word = int(self.allowed[row, col])
        return frozenset(p for p in range(self.n_partitions) if word >> p & 1)

    @classmethod
    def everything(cls, mask: np.ndarray, n_partitions: int) -> "LabelMap":
        allowed = np.where(mask, (1 << n_partitions) - 1, 0).astype(np.uint16)
        return cls(allowed, n_partitions)


def point_segment_distance(p, a, b) -> float:
    """Euclidean distance from point p to the closed segment ab."""
    return float(np.sqrt(segment_sq_distances(np.asarray([p], float), a, b)[0]))


def segment_sq_distances(points: np.ndarray, a, b) -> np.ndarray:
    """Squared distances of (N, 2) points to the closed segment ab."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    d = b - a
    ap = points - a
    dd = float(d @ d)
    if dd == 0.0:
        return np.einsum("ij,ij->i", ap, ap)
    t = np.clip(ap @ d / dd, 0.0, 1.0)
    r = ap - t[:, None] * d
    return np.einsum("ij,ij->i", r, r)


def signed_area(polygon: np.ndarray) -> float:
    """Shoelace area; in y-down image coordinates a clockwise-looking outline is positive."""
    x, y = polygon[:, 0], polygon[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def quadrilateral_facing(left_shoulder, right_shoulder, right_hip, left_hip, min_area: float = 1.0) -> Facing:
    """Frontal when LS->RS->RH->LH has negative shoelace area (y down)."""
    corners = (left_shoulder, right_shoulder, right_hip, left_hip)
    if any(c is None for c in corners):
        return Facing.INDETERMINATE
    area = signed_area(np.asarray(corners, dtype=np.float64))
    if not abs(area) >= min_area:
        return Facing.INDETERMINATE
    return Facing.FRONTAL if area < 0 else Facing.DORSAL


def skeleton_facing(skeleton: Skeleton2D) -> Facing:
    corners = [skeleton.xy[i] if skeleton.present[i] else None for i in sk.QUAD_CORNERS]
    return quadrilateral_facing(*corners)


def points_in_polygon(points: np.ndarray, polygon: np.ndarray) -> np.ndarray:
    """Even-odd interior test; points on the outline count as inside."""
    x, y = points[:, 0], points[:, 1]
    inside = np.zeros(len(points), dtype=bool)
    n = len(polygon)
    for i in range(n):
        x1, y1 = polygon[i]
        x2, y2 = polygon[(i + 1) % n]
        crosses = (y1 > y) != (y2 > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            xc = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
        inside ^= crosses & (x < xc)
    on_edge = np.zeros(len(points), dtype=bool)
    for i in range(n):
        on_edge |= segment_sq_distances(points, polygon[i], polygon[(i + 1) % n]) <= 1e-18
    return inside | on_edge


class _Rasterizer:
    def __init__(self, points: np.ndarray):
        self.points = points
        self.covered = np.zeros(len(points), dtype=bool)

    def capsule(self, a, b, radius: float) -> np.ndarray:
        a = np.asarray(a, dtype=np.float64)
        b = np.asarray(b, dtype=np.float64)
        lo = np.minimum(a, b) - radius
        hi = np.maximum(a, b) + radius
        pts = self.points
        cand = np.flatnonzero(
            (pts[:, 0] >= lo[0]) & (pts[:, 0] <= hi[0]) & (pts[:, 1] >= lo[1]) & (pts[:, 1] <= hi[1])
        )
        hit = np.zeros(len(pts), dtype=bool)
        if len(cand):
            hit[cand] = segment_sq_distances(pts[cand], a, b) <= radius * radius
        return hit


def _extremity_region(skeleton: Skeleton2D, part: str, radius: float, factor: float,
                      ras: _Rasterizer) -> np.ndarray | None:
    """Region mask for a hand/foot, or None when the part is missing."""
    anchor = sk.EXTREMITY_ANCHORS[part]
    if skeleton.kind == "wholebody133":
        hit = np.zeros(len(ras.points), dtype=bool)
        n_segments = 0
        loose = []
        for chain in sk.EXTREMITY_CHAINS[part]:
            pts = [i for i in chain if skeleton.present[i]]
            loose.extend(pts)
            for i, j in zip(pts, pts[1:]):
                hit |= ras.capsule(skeleton.xy[i], skeleton.xy[j], radius)
                n_segments += 1
        if n_segments:
            return hit
        if not loose:
            return None
        # no span available: fall back to a disc on the anchor or the first loose keypoint
        center = anchor if skeleton.present[anchor] else loose[0]
        return ras.capsule(skeleton.xy[center], skeleton.xy[center], factor * radius)
    if not skeleton.present[anchor]:
        return None
    return ras.capsule(skeleton.xy[anchor], skeleton.xy[anchor], factor * radius)


def build_proximal_regions(
    skeleton: Skeleton2D,
    radius: float,
    mask: np.ndarray,
    factor: float = 2.0,
    partition_names=sk.PARTITION_NAMES,
) -> LabelMap:
    """Rasterize the pose-induced label sets L(x) over the mask.

    A non-positive radius collapses every region, so the result is the
    all-bits map (no constraint at all).
    """
    mask = np.asarray(mask, dtype=bool)
    names = tuple(partition_names)
    n_parts = len(names)
    if n_parts > MAX_PARTITIONS:
        raise ValueError(f"at most {MAX_PARTITIONS} partitions fit a label word, got {n_parts}")
    all_bits = (1 << n_parts) - 1
    if not radius > 0:
        return LabelMap.everything(mask, n_parts)

    def bit(name: str) -> int:
        return 1 << names.index(name) if name in names else 0

    rows, cols = np.nonzero(mask)
    points = np.column_stack([cols, rows]).astype(np.float64)
    ras = _Rasterizer(points)
    bits = np.zeros(len(points), dtype=np.uint16)
    everywhere = bit("head")

    for bone in sk.LIMB_BONES:
        b = bit(bone.partition)
        if not skeleton.has(bone.a, bone.b):
            everywhere |= b
            continue
        hit = ras.capsule(skeleton.xy[bone.a], skeleton.xy[bone.b], radius)
        bits[hit] |= b
        ras.covered |= hit

    front, back = bit("torso_front"), bit("torso_back")
    if skeleton.has(*sk.QUAD_CORNERS):
        ls, rs, rh, lh = (skeleton.xy[i] for i in sk.QUAD_CORNERS)
        inside = points_in_polygon(points, np.array([ls, rs, rh, lh]))
        region = inside | ras.capsule(ls, lh, radius) | ras.capsule(rs, rh, radius)
        bits[region & ~inside] |= front | back
        facing = quadrilateral_facing(ls, rs, rh, lh)
        interior_bits = {Facing.FRONTAL: front, Facing.DORSAL: back}.get(facing, front | back)
        bits[inside] |= interior_bits
        ras.covered |= region
    else:
        everywhere |= front | back

    for part in ("left_hand", "right_hand", "left_foot", "right_foot"):
        b = bit(part)
        hit = _extremity_region(skeleton, part, radius, factor, ras)
        if hit is None:
            everywhere |= b
            continue
        bits[hit] |= b
        ras.covered |= hit

    bits[~ras.covered] = all_bits
    bits |= everywhere
    allowed = np.zeros(mask.shape, dtype=np.uint16)
    allowed[rows, cols] = bits
    return LabelMap(allowed, n_parts)
