"""Shipped synthetic fixture suites built on the mannequin."""

from __future__ import annotations

from functools import lru_cache
from pathlib import Path

import numpy as np

from . import io
from .mannequin import Mannequin, Pose, build_mannequin, make_instance, mannequin_embeddings, pose_mannequin
from .model import EmbeddingSet, InstanceInput, Skeleton2D

EMBEDDING_DIM = 16
EMBEDDING_SEED = 0

_STAND = Pose({"left_arm": (15, 0), "right_arm": (15, 0), "left_thigh": (6, 0), "right_thigh": (6, 0)})
_REACH = Pose({"left_arm": (40, 0), "right_arm": (20, 30), "left_forearm": (0, 60),
               "left_thigh": (10, 0), "right_thigh": (3, 20), "right_shin": (0, -30)})
_WIDE = Pose({"left_arm": (80, 0), "right_arm": (80, 0), "left_thigh": (4, 0), "right_thigh": (4, 0)}, yaw=20)
_STEP = Pose({"left_arm": (25, -20), "right_arm": (10, 25), "right_forearm": (0, 45),
              "left_thigh": (2, 25), "left_shin": (0, -40), "right_thigh": (12, 0)}, yaw=-15)


def _back(p: Pose) -> Pose:
    return Pose(p.limbs, p.yaw + 180)


# (name, pose, skeleton kind, mirrored parts)
SWAPPED_LIMB_CASES = (
    ("stand_rthigh", _STAND, "coco17", ("right_thigh",)),
    ("stand_back_lshin", _back(_STAND), "coco17", ("left_shin",)),
    ("reach_lforearm", _REACH, "coco17", ("left_forearm",)),
    ("wide_rshin", _WIDE, "coco17", ("right_shin",)),
    ("step_lthigh", _STEP, "wholebody133", ("left_thigh",)),
    ("stand_rarm_wb", _STAND, "wholebody133", ("right_arm",)),
    ("reach_back_rleg", _back(_REACH), "coco17", ("right_thigh", "right_shin")),
    ("step_back_rforearm", _back(_STEP), "coco17", ("right_forearm",)),
    ("wide_lthigh_wb", _WIDE, "wholebody133", ("left_thigh",)),
    ("stand_clean", _STAND, "coco17", ()),
)

CLEAN_CASES = tuple((f"clean_{n}", p, k, ()) for n, p, k, _ in SWAPPED_LIMB_CASES[:-1])


@lru_cache(maxsize=1)
def mannequin() -> Mannequin:
    return build_mannequin()


@lru_cache(maxsize=4)
def embeddings(dim: int = EMBEDDING_DIM, seed: int = EMBEDDING_SEED) -> EmbeddingSet:
    return mannequin_embeddings(mannequin(), dim=dim, seed=seed)


def build_cases(cases, seed: int = 7) -> list[InstanceInput]:
    mann, emb = mannequin(), embeddings()
    out = []
    for i, (name, pose, kind, corrupt) in enumerate(cases):
        rng = np.random.default_rng([seed, i])
        out.append(make_instance(mann, emb, pose, rng, corrupt=corrupt, kind=kind, name=name))
    return out


def swapped_limb_suite(seed: int = 7) -> list[InstanceInput]:
    return build_cases(SWAPPED_LIMB_CASES, seed)


def clean_suite(seed: int = 11) -> list[InstanceInput]:
    return build_cases(CLEAN_CASES, seed)


def random_dance_pose(rng: np.random.Generator) -> Pose:
    limbs = {}
    for side in ("left", "right"):
        limbs[f"{side}_arm"] = (rng.uniform(0, 100), rng.uniform(-40, 70))
        limbs[f"{side}_forearm"] = (rng.uniform(-20, 20), rng.uniform(0, 100))
        limbs[f"{side}_thigh"] = (rng.uniform(0, 30), rng.uniform(-20, 60))
        limbs[f"{side}_shin"] = (rng.uniform(-10, 10), rng.uniform(-70, 0))
    return Pose(limbs, yaw=rng.uniform(-45, 45))


def dancing_skeletons(n_frames: int = 120, seed: int = 3, scale: float = 250.0, jitter: float = 2.0,
                      kind: str = "coco17", center=(320.0, 450.0)) -> list[Skeleton2D]:
    """A fixed-camera sequence: random dance poses, constant scale, +-jitter px uniform keypoint noise."""
    mann = mannequin()
    rng = np.random.default_rng(seed)
    n = 17 if kind == "coco17" else 133
    out = []
    for _ in range(n_frames):
        _, _, kps, _ = pose_mannequin(mann, random_dance_pose(rng))
        xy = np.column_stack([center[0] + scale * kps[:n, 0], center[1] - scale * kps[:n, 1]])
        xy += rng.uniform(-jitter, jitter, size=xy.shape)
        trip = np.column_stack([xy, np.full(n, 0.9)])
        out.append(Skeleton2D.from_keypoints(kind, trip, 0.3, mann.mesh.bone_lengths))
    return out


def write_corpus(out_dir, seed: int = 7) -> dict:
    """Write mesh, embeddings, instance sets and a pose sequence; returns the written paths."""
    out = Path(out_dir)
    (out / "instances").mkdir(parents=True, exist_ok=True)
    mann, emb = mannequin(), embeddings()
    io.save_mesh(out / "mesh.json", mann.mesh)
    io.save_embeddings(out / "embeddings.pct", emb)
    paths = {"mesh": out / "mesh.json", "embeddings": out / "embeddings.pct"}
    for set_name, insts in (("swapped", swapped_limb_suite(seed)), ("clean", clean_suite(seed + 4))):
        files = []
        for inst in insts:
            p = out / "instances" / f"{inst.name}.json"
            io.save_instance(p, inst)
            files.append(p)
        io.save_instance_set(out / f"{set_name}_set.json", files)
        paths[set_name] = out / f"{set_name}_set.json"
    frames = dancing_skeletons()
    io.write_json(out / "dance_frames.json", {
        "kind": "coco17",
        "frames": [s.triplets().tolist() for s in frames],
    })
    paths["frames"] = out / "dance_frames.json"
    return paths
