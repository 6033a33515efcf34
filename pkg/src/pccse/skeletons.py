"""Keypoint layouts and the bones that tie them to mesh partitions.

Both layouts share the 17 COCO body keypoints at indices 0..16; the
whole-body layout appends 6 foot, 68 face and 2 x 21 hand keypoints.
"""

from __future__ import annotations

from dataclasses import dataclass

COCO17_NAMES = (
    "nose",
    "left_eye",
    "right_eye",
    "left_ear",
    "right_ear",
    "left_shoulder",
    "right_shoulder",
    "left_elbow",
    "right_elbow",
    "left_wrist",
    "right_wrist",
    "left_hip",
    "right_hip",
    "left_knee",
    "right_knee",
    "left_ankle",
    "right_ankle",
)

FOOT_NAMES = (
    "left_big_toe",
    "left_small_toe",
    "left_heel",
    "right_big_toe",
    "right_small_toe",
    "right_heel",
)

_FINGERS = ("thumb", "index", "middle", "ring", "pinky")


def _hand_names(side: str) -> tuple[str, ...]:
    names = [f"{side}_hand_root"]
    for finger in _FINGERS:
        names.extend(f"{side}_{finger}{k}" for k in range(1, 5))
    return tuple(names)


WHOLEBODY133_NAMES = (
    COCO17_NAMES
    + FOOT_NAMES
    + tuple(f"face_{k}" for k in range(68))
    + _hand_names("left")
    + _hand_names("right")
)

KEYPOINT_COUNTS = {"coco17": 17, "wholebody133": 133}
KEYPOINT_NAMES = {"coco17": COCO17_NAMES, "wholebody133": WHOLEBODY133_NAMES}

KP = {name: i for i, name in enumerate(WHOLEBODY133_NAMES)}

LEFT_HAND_ROOT = 91
RIGHT_HAND_ROOT = 112

# Default partition order; bit p of a label word is partition p.
PARTITION_NAMES = (
    "left_arm",
    "right_arm",
    "left_forearm",
    "right_forearm",
    "left_hand",
    "right_hand",
    "left_thigh",
    "right_thigh",
    "left_shin",
    "right_shin",
    "left_foot",
    "right_foot",
    "torso_front",
    "torso_back",
    "head",
)


@dataclass(frozen=True)
class BoneSpec:
    name: str
    a: int
    b: int
    partition: str | None  # None for the quadrilateral top/bottom sides


# Limbs first, then the four quadrilateral sides; this is also the
# tie-break order of the scale estimator.
PRINCIPAL_BONES = (
    BoneSpec("left_arm", KP["left_shoulder"], KP["left_elbow"], "left_arm"),
    BoneSpec("right_arm", KP["right_shoulder"], KP["right_elbow"], "right_arm"),
    BoneSpec("left_forearm", KP["left_elbow"], KP["left_wrist"], "left_forearm"),
    BoneSpec("right_forearm", KP["right_elbow"], KP["right_wrist"], "right_forearm"),
    BoneSpec("left_thigh", KP["left_hip"], KP["left_knee"], "left_thigh"),
    BoneSpec("right_thigh", KP["right_hip"], KP["right_knee"], "right_thigh"),
    BoneSpec("left_shin", KP["left_knee"], KP["left_ankle"], "left_shin"),
    BoneSpec("right_shin", KP["right_knee"], KP["right_ankle"], "right_shin"),
    BoneSpec("shoulders", KP["left_shoulder"], KP["right_shoulder"], None),
    BoneSpec("right_side", KP["right_shoulder"], KP["right_hip"], "torso"),
    BoneSpec("hips", KP["right_hip"], KP["left_hip"], None),
    BoneSpec("left_side", KP["left_hip"], KP["left_shoulder"], "torso"),
)

LIMB_BONES = PRINCIPAL_BONES[:8]

# Corner order of the shoulder-hip quadrilateral: LS -> RS -> RH -> LH.
QUAD_CORNERS = (
    KP["left_shoulder"],
    KP["right_shoulder"],
    KP["right_hip"],
    KP["left_hip"],
)

# Hand and foot anchors for the basic skeleton.
EXTREMITY_ANCHORS = {
    "left_hand": KP["left_wrist"],
    "right_hand": KP["right_wrist"],
    "left_foot": KP["left_ankle"],
    "right_foot": KP["right_ankle"],
}


def _hand_chains(root: int, wrist: int) -> tuple[tuple[int, ...], ...]:
    # wrist -> hand root -> finger joints 1..4
    return tuple(
        (wrist, root) + tuple(root + 1 + 4 * f + k for k in range(4)) for f in range(5)
    )


# Whole-body keypoint chains spanning each extremity, anchored at the body keypoint.
EXTREMITY_CHAINS = {
    "left_hand": _hand_chains(LEFT_HAND_ROOT, KP["left_wrist"]),
    "right_hand": _hand_chains(RIGHT_HAND_ROOT, KP["right_wrist"]),
    "left_foot": tuple((KP["left_ankle"], KP[n]) for n in FOOT_NAMES[:3]),
    "right_foot": tuple((KP["right_ankle"], KP[n]) for n in FOOT_NAMES[3:]),
}


def mirror_name(name: str) -> str:
    if name.startswith("left_"):
        return "right_" + name[5:]
    if name.startswith("right_"):
        return "left_" + name[6:]
    return name


def mirror_keypoint_permutation(kind: str) -> list[int]:
    """Index permutation swapping left/right keypoints of a layout.

    Face landmarks map to themselves; the face contour is not mirrored
    because nothing downstream depends on face keypoint identity.
    """
    names = KEYPOINT_NAMES[kind]
    index = {n: i for i, n in enumerate(names)}
    return [index.get(mirror_name(n), i) for i, n in enumerate(names)]
