"""Skeleton -> scale -> regions -> assignment, as used by the CLI and the harnesses."""

from __future__ import annotations

import math

import numpy as np

from .assign import UvMap, assign_constrained_blocked, assign_unconstrained
from .evaluation import GeodesicOracle, average_precision, instance_gps
from .geometry import LabelMap, build_proximal_regions, skeleton_facing
from .model import CanonicalMesh, EmbeddingSet, EngineConfig, InstanceInput
from .quality import LATERAL_PAIRS, kept_points, part_reference_distance
from .scale import ScaleUnavailable, capsule_radius, estimate_scale

MODES = ("baseline", "constrained")


def pose_labels(instance: InstanceInput, mesh: CanonicalMesh, config: EngineConfig) -> tuple[LabelMap, dict]:
    """LabelMap for an instance plus the numbers that produced it.

    Without a usable scale the map allows everything, so the constrained
    result falls back to the unconstrained one.
    """
    info: dict = {"delta": config.delta}
    try:
        scale = estimate_scale(instance.skeleton)
    except ScaleUnavailable:
        info.update(scale=None, radius=None, facing=None, scale_unavailable=True)
        return LabelMap.everything(instance.mask, mesh.n_partitions), info
    radius = capsule_radius(scale, config)
    labels = build_proximal_regions(
        instance.skeleton, radius, instance.mask, config.hand_foot_radius_factor, mesh.partition_names
    )
    info.update(
        scale=scale.to_dict(),
        radius=radius if math.isfinite(radius) else "inf",
        facing=skeleton_facing(instance.skeleton).value,
        scale_unavailable=False,
    )
    return labels, info


def cross_laterality_pixels(uvmap: UvMap, instance: InstanceInput, mesh: CanonicalMesh) -> int:
    """Pixels mapped to a lateral part whose opposite-side skeleton element is nearer."""
    names = mesh.partition_names
    fg = uvmap.foreground
    rows, cols = np.nonzero(fg)
    pts = np.column_stack([cols, rows]).astype(np.float64)
    part = mesh.partition_of[uvmap.vertex_of[rows, cols]]
    count = 0
    for left, right in LATERAL_PAIRS:
        for own, other in ((left, right), (right, left)):
            if own not in names:
                continue
            sel = part == names.index(own)
            if not sel.any():
                continue
            d_own = part_reference_distance(instance.skeleton, own, pts[sel])
            d_other = part_reference_distance(instance.skeleton, other, pts[sel])
            if d_own is None or d_other is None:
                continue
            count += int((d_other < d_own).sum())
    return count


def run_instance(instance: InstanceInput, mesh: CanonicalMesh, emb: EmbeddingSet, config: EngineConfig,
                 mode: str = "constrained", labels: LabelMap | None = None,
                 all_bits: bool = False) -> tuple[UvMap, dict]:
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    summary: dict = {"mode": mode, "foreground_pixels": int(instance.mask.sum())}
    if mode == "baseline":
        uvmap = assign_unconstrained(instance, mesh, emb)
    else:
        if all_bits:
            labels = LabelMap.everything(instance.mask, mesh.n_partitions)
            summary["labels"] = "all-bits"
        elif labels is not None:
            summary["labels"] = "supplied"
        else:
            labels, info = pose_labels(instance, mesh, config)
            summary.update(info)
            summary["labels"] = "pose"
        uvmap = assign_constrained_blocked(instance, mesh, emb, labels)
    hist = np.bincount(mesh.partition_of[uvmap.vertex_of[uvmap.foreground]], minlength=mesh.n_partitions)
    summary["partition_histogram"] = {n: int(c) for n, c in zip(mesh.partition_names, hist)}
    summary["cross_laterality_pixels"] = cross_laterality_pixels(uvmap, instance, mesh)
    return uvmap, summary



def evaluate_instances(instances, mesh: CanonicalMesh, emb: EmbeddingSet, config: EngineConfig,
                       mode: str = "constrained", removal=None, oracle=None, all_bits: bool = False) -> dict:
    """Run the pipeline on every instance and score it with GPS and AP.

    With a removal list, flagged body parts lose their points first and
    instances left without points are skipped.
    """
    oracle = oracle or GeodesicOracle(mesh)
    per_instance = []
    pairs = []
    for inst in instances:
        keep = None
        if removal is not None and inst.name in removal.removed:
            keep = kept_points(inst, mesh, removal.removed[inst.name])
        if not inst.has_gt or (keep is not None and not keep.any()):
            per_instance.append({"name": inst.name, "gps": None, "points": 0, "ignored": True})
            continue
        uvmap, _ = run_instance(inst, mesh, emb, config, mode, all_bits=all_bits)
        res = instance_gps(inst, uvmap, oracle, config.kappa, keep)
        per_instance.append({"name": inst.name, "gps": res.score, "points": len(res.per_point),
                             "score": inst.score, "ignored": False})
        pairs.append((res, inst.score))
    out = {"mode": mode, "delta": config.delta, "kappa": config.kappa, "instances": per_instance}
    if pairs:
        out.update(average_precision(pairs).to_dict())
    else:
        out["ap"] = None
    return out
