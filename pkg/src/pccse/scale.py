"""Apparent person scale from the 2D skeleton."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import EngineConfig, Skeleton2D


class ScaleUnavailable(ValueError):
    """No principal bone with both endpoints present and a known length."""

    def __init__(self, msg: str = "scale unavailable"):
        super().__init__(msg)


@dataclass(frozen=True)
class BoneEstimate:
    bone: str
    pixel_length: float
    canonical_length: float
    ratio: float


@dataclass(frozen=True)
class ScaleEstimate:
    pixels_per_unit: float
    contributing_bone: str
    per_bone_estimates: tuple[BoneEstimate, ...]

    def to_dict(self) -> dict:
        return {
            "pixels_per_unit": self.pixels_per_unit,
            "contributing_bone": self.contributing_bone,
            "per_bone": [
                {"bone": e.bone, "pixel_length": e.pixel_length,
                 "canonical_length": e.canonical_length, "ratio": e.ratio}
                for e in self.per_bone_estimates
            ],
        }


def estimate_scale(skeleton: Skeleton2D) -> ScaleEstimate:
    """Pixels per model unit as the maximum length ratio over present bones.

    A bone foreshortened by an angle a to the image plane shrinks by cos(a),
    so the largest ratio comes from the bone closest to the image plane.
    Ties go to the earlier bone in declaration order.
    """
    estimates = []
    for bone in skeleton.principal_bones:
        if not bone.canonical_length or not skeleton.bone_present(bone):
            continue
        a, b = skeleton.xy[bone.a], skeleton.xy[bone.b]
        px = math.hypot(float(b[0] - a[0]), float(b[1] - a[1]))
        estimates.append(BoneEstimate(bone.name, px, bone.canonical_length, px / bone.canonical_length))
    if not estimates:
        raise ScaleUnavailable()
    best = estimates[int(np.argmax([e.ratio for e in estimates]))]
    if not best.ratio > 0:
        raise ScaleUnavailable("scale unavailable: all present bones have zero pixel length")
    return ScaleEstimate(best.ratio, best.bone, tuple(estimates))


def capsule_radius(scale: ScaleEstimate, config: EngineConfig) -> float:
    return config.delta * scale.pixels_per_unit


def estimate_height(skeleton: Skeleton2D, config: EngineConfig) -> float:
    return estimate_scale(skeleton).pixels_per_unit * config.canonical_height


def track_height(skeletons, config: EngineConfig) -> list[tuple[int, float, float]]:
    """(frame, pixels_per_unit, height_px) per frame; NaN where scale is unavailable."""
    rows = []
    for i, s in enumerate(skeletons):
        try:
            ppu = estimate_scale(s).pixels_per_unit
        except ScaleUnavailable:
            rows.append((i, math.nan, math.nan))
            continue
        rows.append((i, ppu, ppu * config.canonical_height))
    return rows
