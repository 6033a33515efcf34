"""Annotation consistency audit for dense ground-truth points.

Points are judged per body part, never per point: a part that trips any
detector loses all of its points.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import skeletons as sk
from .geometry import points_in_polygon, segment_sq_distances
from .model import CanonicalMesh, InstanceInput, Skeleton2D
from .scale import ScaleUnavailable, estimate_scale

LATERAL_PAIRS = (
    ("left_arm", "right_arm"),
    ("left_forearm", "right_forearm"),
    ("left_hand", "right_hand"),
    ("left_thigh", "right_thigh"),
    ("left_shin", "right_shin"),
    ("left_foot", "right_foot"),
)
_LIMB = {b.partition: b for b in sk.LIMB_BONES}
_FACE = tuple(range(5))


@dataclass(frozen=True)
class AuditThresholds:
    bone_distance: float = 0.2  # mean point-to-bone distance, model units
    mask_in_bbox: float = 0.8
    points_in_mask: float = 0.5  # per body part
    lr_margin: float = 0.05  # model units; own-side excess over opposite side
    lr_fraction: float = 0.1  # share of a part's points that sit on the opposite side
    min_gps: float | None = None  # inference-error cutoff, off unless set


@dataclass
class ConsistencyReport:
    name: str
    auditable: bool = True
    mask_in_bbox_ratio: float = float("nan")
    points_in_mask_ratio: float = float("nan")
    part_points: dict[str, int] = field(default_factory=dict)
    part_distance: dict[str, float] = field(default_factory=dict)
    part_lr_fraction: dict[str, float] = field(default_factory=dict)
    flags: dict[str, list[str]] = field(default_factory=dict)
    instance_flags: list[str] = field(default_factory=list)
    not_auditable: list[str] = field(default_factory=list)
    gps: float | None = None

    @property
    def n_points(self) -> int:
        return sum(self.part_points.values())

    def flagged_parts(self) -> list[str]:
        return sorted(p for p, f in self.flags.items() if f)

    def to_dict(self) -> dict:
        def num(v):
            return None if v != v else v
        return {
            "name": self.name,
            "auditable": self.auditable,
            "mask_in_bbox_ratio": num(self.mask_in_bbox_ratio),
            "points_in_mask_ratio": num(self.points_in_mask_ratio),
            "part_points": dict(sorted(self.part_points.items())),
            "part_distance": {k: num(v) for k, v in sorted(self.part_distance.items())},
            "part_lr_fraction": dict(sorted(self.part_lr_fraction.items())),
            "flags": {k: sorted(v) for k, v in sorted(self.flags.items()) if v},
            "instance_flags": sorted(self.instance_flags),
            "not_auditable": sorted(self.not_auditable),
            "gps": self.gps,
        }


def _min_dist(points: np.ndarray, segments) -> np.ndarray:
    d = np.full(len(points), np.inf)
    for a, b in segments:
        d = np.minimum(d, segment_sq_distances(points, a, b))
    return np.sqrt(d)


def part_reference_distance(skeleton: Skeleton2D, part: str, points: np.ndarray) -> np.ndarray | None:
    """Pixel distance of each point to the skeleton element of a body part, or None."""
    xy, present = skeleton.xy, skeleton.present
    if part in _LIMB:
        b = _LIMB[part]
        return _min_dist(points, [(xy[b.a], xy[b.b])]) if skeleton.has(b.a, b.b) else None
    if part in sk.EXTREMITY_ANCHORS:
        segs = []
        if skeleton.kind == "wholebody133":
            for chain in sk.EXTREMITY_CHAINS[part]:
                pts = [i for i in chain if present[i]]
                segs.extend((xy[i], xy[j]) for i, j in zip(pts, pts[1:]))
        anchor = sk.EXTREMITY_ANCHORS[part]
        if not segs and present[anchor]:
            segs = [(xy[anchor], xy[anchor])]
        return _min_dist(points, segs) if segs else None
    if part in ("torso_front", "torso_back"):
        if not skeleton.has(*sk.QUAD_CORNERS):
            return None
        quad = xy[list(sk.QUAD_CORNERS)]
        d = _min_dist(points, [(quad[i], quad[(i + 1) % 4]) for i in range(4)])
        d[points_in_polygon(points, quad)] = 0.0
        return d
    if part == "head":
        face = [i for i in _FACE if present[i]]
        return _min_dist(points, [(xy[i], xy[i]) for i in face]) if face else None
    return None


def audit_instance(instance: InstanceInput, mesh: CanonicalMesh,
                   thresholds: AuditThresholds = AuditThresholds(),
                   gps: float | None = None) -> ConsistencyReport:
    report = ConsistencyReport(name=instance.name, gps=gps)
    if not instance.has_gt:
        report.auditable = False
        report.not_auditable.append("gt_points")
        return report

    mask = instance.mask
    h, w = mask.shape
    rows, cols = np.nonzero(mask)
    if len(rows):
        report.mask_in_bbox_ratio = float(instance.bbox_contains(np.column_stack([cols, rows])).mean())
    else:
        report.mask_in_bbox_ratio = 0.0

    xy = instance.gt_xy
    r, c = instance.gt_pixels()
    on_raster = (r >= 0) & (r < h) & (c >= 0) & (c < w)
    in_mask = np.zeros(len(xy), dtype=bool)
    in_mask[on_raster] = mask[r[on_raster], c[on_raster]]
    report.points_in_mask_ratio = float(in_mask.mean())

    skel = instance.skeleton
    try:
        ppu = estimate_scale(skel).pixels_per_unit
    except ScaleUnavailable:
        ppu = None
        report.not_auditable.append("bone_distance")

    names = mesh.partition_names
    part_of_point = np.array([names[p] for p in mesh.partition_of[instance.gt_vertex]])
    parts = sorted(set(part_of_point.tolist()))
    flags: dict[str, set[str]] = {p: set() for p in parts}
    own_dist: dict[str, np.ndarray] = {}

    for part in parts:
        sel = part_of_point == part
        report.part_points[part] = int(sel.sum())
        if in_mask[sel].mean() < thresholds.points_in_mask:
            flags[part].add("points_outside_mask")
        d = part_reference_distance(skel, part, xy[sel])
        if d is None:
            continue
        own_dist[part] = d
        if ppu is not None:
            report.part_distance[part] = float(d.mean() / ppu)
            if report.part_distance[part] > thresholds.bone_distance:
                flags[part].add("bone_distance")

    margin = thresholds.lr_margin * (ppu or 0.0)
    for left, right in LATERAL_PAIRS:
        confused = False
        for part, other in ((left, right), (right, left)):
            if part not in own_dist:
                continue
            d_other = part_reference_distance(skel, other, xy[part_of_point == part])
            if d_other is None:
                continue
            # per-point vote: a few relabeled points must not drown in a correct majority
            frac = float((own_dist[part] - d_other > margin).mean())
            report.part_lr_fraction[part] = frac
            if frac >= thresholds.lr_fraction:
                confused = True
        if confused:
            for p in (left, right):
                if p in flags:
                    flags[p].add("lr_confusion")

    inst_flags = []
    if report.mask_in_bbox_ratio < thresholds.mask_in_bbox:
        inst_flags.append("bbox_mismatch")
    ann = instance.annotations
    if "iscrowd" in ann:
        if bool(ann["iscrowd"]):
            inst_flags.append("crowd")
    else:
        report.not_auditable.append("crowd")
    if "num_people_in_bbox" in ann:
        if int(ann["num_people_in_bbox"]) > 1 and report.mask_in_bbox_ratio < thresholds.mask_in_bbox:
            inst_flags.append("multi_person")
    else:
        report.not_auditable.append("multi_person")
    if thresholds.min_gps is not None:
        if gps is None:
            report.not_auditable.append("inference_error")
        elif gps < thresholds.min_gps:
            inst_flags.append("inference_error")
    report.instance_flags = inst_flags
    for part in parts:
        flags[part].update(inst_flags)
    report.flags = {p: sorted(f) for p, f in flags.items()}
    return report


@dataclass
class RemovalList:
    removed: dict[str, list[str]]  # instance name -> body parts losing all their points
    total_points: int
    removed_points: int
    total_instances: int
    affected_instances: int

    @property
    def point_fraction(self) -> float:
        return self.removed_points / self.total_points if self.total_points else 0.0

    @property
    def instance_fraction(self) -> float:
        return self.affected_instances / self.total_instances if self.total_instances else 0.0

    def __bool__(self) -> bool:
        return bool(self.removed)

    def to_dict(self) -> dict:
        return {
            "removed": {k: list(v) for k, v in sorted(self.removed.items())},
            "summary": {
                "total_points": self.total_points,
                "removed_points": self.removed_points,
                "point_fraction": self.point_fraction,
                "total_instances": self.total_instances,
                "affected_instances": self.affected_instances,
                "instance_fraction": self.instance_fraction,
            },
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RemovalList":
        s = d.get("summary", {})
        return cls(
            {k: list(v) for k, v in d["removed"].items()},
            int(s.get("total_points", 0)),
            int(s.get("removed_points", 0)),
            int(s.get("total_instances", 0)),
            int(s.get("affected_instances", 0)),
        )


def build_removal_list(reports) -> RemovalList:
    removed = {}
    total_points = removed_points = 0
    for rep in reports:
        total_points += rep.n_points
        parts = [p for p in rep.flagged_parts() if rep.part_points.get(p, 0) > 0]
        if parts:
            removed[rep.name] = parts
            removed_points += sum(rep.part_points[p] for p in parts)
    return RemovalList(removed, total_points, removed_points, len(reports), len(removed))


def kept_points(instance: InstanceInput, mesh: CanonicalMesh, parts) -> np.ndarray:
    """Boolean selector of gt points whose body part is not in `parts`."""
    drop = np.array([p in set(parts) for p in mesh.partition_names])
    return ~drop[mesh.partition_of[instance.gt_vertex]]


def apply_removal(instance: InstanceInput, mesh: CanonicalMesh, removal: RemovalList) -> InstanceInput:
    parts = removal.removed.get(instance.name)
    if not parts or not instance.has_gt:
        return instance
    keep = kept_points(instance, mesh, parts)
    return replace(instance, gt_xy=instance.gt_xy[keep], gt_vertex=instance.gt_vertex[keep])
