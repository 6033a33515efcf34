"""Procedural mannequin mesh and a tiny orthographic renderer for fixtures.

The mannequin stands 1.7 model units tall and is built from tubes: each
limb segment is a 6-vertex ring tube, the torso an elliptic 12-vertex tube
split front/back by the plane z = 0, the head a 12-vertex ring stack.
Axes: x toward the person's left, y up, z toward the face. Right-side
parts are exact x-mirrors of the left ones, so ``mirror_of`` is exact.

Rendering is orthographic along -z (camera in front of the person):
image column = cx + s * x, image row = cy - s * y. A pixel belongs to the
part silhouette nearest to the camera; its ground-truth vertex is the
closest camera-facing vertex of that part.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.spatial import ConvexHull

from . import skeletons as sk
from .geometry import points_in_polygon, segment_sq_distances
from .model import CanonicalMesh, EmbeddingSet, InstanceInput, Skeleton2D

# canonical joints, left side; right side mirrors x
_LEFT_JOINTS = {
    "shoulder": (0.18, 1.42, 0.0),
    "elbow": (0.18, 1.14, 0.0),
    "wrist": (0.18, 0.89, 0.0),
    "hand_tip": (0.18, 0.77, 0.0),
    "hip": (0.09, 0.92, 0.0),
    "knee": (0.09, 0.50, 0.0),
    "ankle": (0.09, 0.08, 0.0),
    "toe": (0.09, 0.03, 0.15),
}

# part -> (pivot joint, end joint, parent part, tube radius, ring positions along the axis)
_LIMBS = {
    "arm": ("shoulder", "elbow", None, 0.045, (0.1, 0.37, 0.63, 0.9)),
    "forearm": ("elbow", "wrist", "arm", 0.04, (0.1, 0.37, 0.63, 0.9)),
    "hand": ("wrist", "hand_tip", "forearm", 0.035, (0.15, 0.5, 0.85)),
    "thigh": ("hip", "knee", None, 0.065, (0.08, 0.3, 0.52, 0.74, 0.94)),
    "shin": ("knee", "ankle", "thigh", 0.05, (0.08, 0.3, 0.52, 0.74, 0.94)),
    "foot": ("ankle", "toe", "shin", 0.035, (0.15, 0.5, 0.85)),
}
_TIPPED = ("hand", "foot")

TORSO_Y = (0.92, 1.45)
TORSO_HALF_WIDTH = (0.14, 0.17)
TORSO_HALF_DEPTH = 0.09
HEAD_CENTER = (0.0, 1.60, 0.0)
HEAD_RADIUS = 0.1

LIMB_RING = 6
BODY_RING = 12

# keypoint -> part whose motion it follows
_KP_PART = {
    "shoulder": None, "hip": None,
    "elbow": "arm", "wrist": "forearm", "knee": "thigh", "ankle": "shin",
}


def _ring_angles(n: int) -> np.ndarray:
    return (np.arange(n) + 0.5) * 2 * np.pi / n


def _rot_x(deg: float) -> np.ndarray:
    a = np.radians(deg)
    c, s = np.cos(a), np.sin(a)
    return np.array([[1, 0, 0], [0, c, -s], [0, s, c]])


def _rot_y(deg: float) -> np.ndarray:
    a = np.radians(deg)
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, 0, s], [0, 1, 0], [-s, 0, c]])


def _rot_z(deg: float) -> np.ndarray:
    a = np.radians(deg)
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]])


@dataclass(frozen=True, eq=False)
class Mannequin:
    mesh: CanonicalMesh
    normals: np.ndarray  # (V, 3) outward unit normals, canonical pose
    mirror_of: np.ndarray  # (V,) index of the x-mirrored vertex
    joints: dict  # name -> canonical 3D position
    keypoints: np.ndarray  # (133, 3) canonical whole-body keypoints
    keypoint_part: tuple  # per keypoint, the part it moves with (None = root)
    part_radius: dict  # limb part -> tube radius
    part_axis: dict  # limb part -> (pivot joint, end joint)
    part_parent: dict  # limb part -> parent limb part or None


class _Builder:
    def __init__(self):
        self.v: list = []
        self.n: list = []
        self.uv: list = []
        self.part: list = []
        self.faces: list = []

    def add(self, pos, normal, uv, part) -> int:
        self.v.append(np.asarray(pos, float))
        self.n.append(np.asarray(normal, float) / np.linalg.norm(normal))
        self.uv.append(uv)
        self.part.append(part)
        return len(self.v) - 1

    def stitch(self, ring_a, ring_b):
        n = len(ring_a)
        for k in range(n):
            a0, a1 = ring_a[k], ring_a[(k + 1) % n]
            b0, b1 = ring_b[k], ring_b[(k + 1) % n]
            self.faces.append((a0, a1, b1))
            self.faces.append((a0, b1, b0))

    def fan(self, ring, apex):
        n = len(ring)
        for k in range(n):
            self.faces.append((ring[k], ring[(k + 1) % n], apex))


def _tile_uv(pid: int, a: float, t: float) -> tuple[float, float]:
    """Atlas coordinate: partition pid owns a 0.25 x 0.25 tile of a 4 x 4 grid."""
    u0, v0 = (pid % 4) * 0.25, (pid // 4) * 0.25
    return (u0 + 0.02 + 0.21 * a, v0 + 0.02 + 0.21 * t)


def build_mannequin() -> Mannequin:
    names = sk.PARTITION_NAMES
    pid = {n: i for i, n in enumerate(names)}
    b = _Builder()
    joints = {}
    for side, sx in (("left", 1.0), ("right", -1.0)):
        for j, p in _LEFT_JOINTS.items():
            joints[f"{side}_{j}"] = np.array([sx * p[0], p[1], p[2]])

    # torso
    th = _ring_angles(BODY_RING)
    torso_rings = []
    ys = np.linspace(*TORSO_Y, 7)
    for r, y in enumerate(ys):
        t = (y - TORSO_Y[0]) / (TORSO_Y[1] - TORSO_Y[0])
        a = TORSO_HALF_WIDTH[0] + (TORSO_HALF_WIDTH[1] - TORSO_HALF_WIDTH[0]) * t
        ring = []
        for k, ang in enumerate(th):
            x, z = a * np.cos(ang), TORSO_HALF_DEPTH * np.sin(ang)
            part = "torso_front" if z > 0 else "torso_back"
            nrm = (x / a**2, 0.0, z / TORSO_HALF_DEPTH**2)
            ring.append(b.add((x, y, z), nrm, _tile_uv(pid[part], (k % 6 + 0.5) / 6, t), part))
        torso_rings.append(ring)
    for ra, rb in zip(torso_rings, torso_rings[1:]):
        b.stitch(ra, rb)
    bottom = b.add((0.0, TORSO_Y[0] - 0.02, 0.0), (0, -1, 0), _tile_uv(pid["torso_front"], 0.5, 0.0),
                   "torso_front")
    b.fan(torso_rings[0][::-1], bottom)

    # head: neck ring, latitude rings, top pole
    c = np.array(HEAD_CENTER)
    head_rings = []
    levels = [(1.47, 0.05)] + [
        (c[1] + HEAD_RADIUS * np.cos(np.radians(phi)), HEAD_RADIUS * np.sin(np.radians(phi)))
        for phi in (140, 110, 80, 50, 25)
    ]
    for r, (y, rad) in enumerate(levels):
        ring = []
        for k, ang in enumerate(th):
            x, z = rad * np.cos(ang), rad * np.sin(ang)
            nrm = (x, 0.0, z) if r == 0 else (x, y - c[1], z)
            ring.append(b.add((x, y, z), nrm, _tile_uv(pid["head"], (k + 0.5) / BODY_RING, r / 6), "head"))
        head_rings.append(ring)
    b.stitch(torso_rings[-1], head_rings[0])
    for ra, rb in zip(head_rings, head_rings[1:]):
        b.stitch(ra, rb)
    top = b.add((0.0, c[1] + HEAD_RADIUS, 0.0), (0, 1, 0), _tile_uv(pid["head"], 0.5, 1.0), "head")
    b.fan(head_rings[-1], top)

    # left limbs, then right limbs as exact mirrors
    n_before = len(b.v)
    f_before = len(b.faces)
    ang = _ring_angles(LIMB_RING)
    torso_idx = np.array([i for ring in torso_rings for i in ring])
    limb_rings = {}
    for limb, (pj, ej, parent, rad, ts) in _LIMBS.items():
        part = f"left_{limb}"
        a, e = joints[f"left_{pj}"], joints[f"left_{ej}"]
        d = (e - a) / np.linalg.norm(e - a)
        u = np.cross(d, (0.0, 0.0, 1.0))
        u /= np.linalg.norm(u)
        w = np.cross(d, u)
        rings = []
        for t in ts:
            center = a + t * (e - a)
            ring = []
            for k, th_k in enumerate(ang):
                off = rad * (np.cos(th_k) * u + np.sin(th_k) * w)
                ring.append(b.add(center + off, off, _tile_uv(pid[part], (k + 0.5) / LIMB_RING, t), part))
            rings.append(ring)
        for ra, rb in zip(rings, rings[1:]):
            b.stitch(ra, rb)
        if limb in _TIPPED:
            tip = b.add(e, d, _tile_uv(pid[part], 0.5, 1.0), part)
            b.fan(rings[-1], tip)
        limb_rings[limb] = rings
    tv = np.array([b.v[i] for i in torso_idx])
    for limb, (pj, ej, parent, rad, ts) in _LIMBS.items():
        rings = limb_rings[limb]
        if parent is None:
            centroid = np.mean([b.v[i] for i in rings[0]], axis=0)
            anchor = int(torso_idx[np.argmin(np.linalg.norm(tv - centroid, axis=1))])
            b.fan(rings[0], anchor)
        else:
            b.stitch(limb_rings[parent][-1], rings[0])
    n_left = len(b.v) - n_before
    for i in range(n_before, n_before + n_left):
        p = b.v[i]
        right_part = "right_" + b.part[i][5:]
        u_, t_ = b.uv[i]
        lp, rp = pid[b.part[i]], pid[right_part]
        uv = (u_ + ((rp % 4) - (lp % 4)) * 0.25, t_ + ((rp // 4) - (lp // 4)) * 0.25)
        b.add((-p[0], p[1], p[2]), (-b.n[i][0], b.n[i][1], b.n[i][2]), uv, right_part)
    body = np.array(b.v[:n_before])

    def mirror_index(i: int) -> int:
        if i >= n_before:
            return i + n_left
        q = b.v[i] * np.array([-1.0, 1.0, 1.0])
        return int(np.argmin(np.linalg.norm(body - q, axis=1)))

    for f in b.faces[f_before:]:
        g = [mirror_index(i) for i in f]
        b.faces.append((g[0], g[2], g[1]))

    verts = np.array(b.v)
    mirror_of = _mirror_map(verts)
    # trig round-off leaves the torso rings symmetric only to ~1e-16; pairwise
    # averaging makes the mirror exact (a - b == -(b - a) in floating point)
    flip = np.array([-1.0, 1.0, 1.0])
    verts = 0.5 * (verts + verts[mirror_of] * flip)
    normals = np.array(b.n)
    normals = 0.5 * (normals + normals[mirror_of] * flip)
    normals /= np.linalg.norm(normals, axis=1, keepdims=True)
    part_of = np.array([pid[p] for p in b.part])
    lengths = _bone_lengths(joints)
    height = float(verts[:, 1].max() - verts[:, 1].min())
    mesh = CanonicalMesh(verts, np.array(b.faces), np.array(b.uv), part_of, names, lengths, height)

    keypoints, kp_part = _canonical_keypoints(joints)
    radius = {}
    axis = {}
    parent_of = {}
    for side in ("left", "right"):
        for limb, (pj, ej, parent, rad, _) in _LIMBS.items():
            radius[f"{side}_{limb}"] = rad
            axis[f"{side}_{limb}"] = (f"{side}_{pj}", f"{side}_{ej}")
            parent_of[f"{side}_{limb}"] = f"{side}_{parent}" if parent else None
    return Mannequin(mesh, normals, mirror_of, joints, keypoints, kp_part, radius, axis, parent_of)


def _mirror_map(verts: np.ndarray) -> np.ndarray:
    target = verts * np.array([-1.0, 1.0, 1.0])
    d = np.linalg.norm(verts[None, :, :] - target[:, None, :], axis=2)
    m = d.argmin(axis=1)
    if d[np.arange(len(verts)), m].max() > 1e-9:
        raise AssertionError("mannequin is not mirror symmetric")
    return m


def _bone_lengths(joints: dict) -> dict:
    out = {}
    for bone in sk.PRINCIPAL_BONES:
        a = sk.WHOLEBODY133_NAMES[bone.a]
        c = sk.WHOLEBODY133_NAMES[bone.b]
        out[bone.name] = float(np.linalg.norm(joints[a] - joints[c]))
    return out


def _canonical_keypoints(joints: dict):
    """Canonical 3D position and driving part for all 133 whole-body keypoints."""
    kp = np.zeros((133, 3))
    part = [None] * 133
    c = np.array(HEAD_CENTER)
    face = {
        "nose": (0.0, 1.59, 0.1),
        "left_eye": (0.035, 1.625, 0.088),
        "right_eye": (-0.035, 1.625, 0.088),
        "left_ear": (0.1, 1.6, 0.0),
        "right_ear": (-0.1, 1.6, 0.0),
    }
    for name, p in face.items():
        kp[sk.KP[name]] = p
    for side in ("left", "right"):
        for j, drv in _KP_PART.items():
            kp[sk.KP[f"{side}_{j}"]] = joints[f"{side}_{j}"]
            part[sk.KP[f"{side}_{j}"]] = f"{side}_{drv}" if drv else None
    # 68 face landmarks on the front of the head
    for k in range(68):
        a = np.radians(-60 + 120 * (k % 17) / 16)
        el = np.radians(-30 + 15 * (k // 17))
        kp[23 + k] = c + HEAD_RADIUS * np.array([np.sin(a) * np.cos(el), np.sin(el), np.cos(a) * np.cos(el)])
    for side, sx in (("left", 1.0), ("right", -1.0)):
        ank = joints[f"{side}_ankle"]
        toe = joints[f"{side}_toe"]
        feet = {
            "big_toe": toe + np.array([-sx * 0.02, 0.0, 0.0]),
            "small_toe": toe + np.array([sx * 0.02, 0.0, -0.03]),
            "heel": ank + np.array([0.0, -0.04, -0.04]),
        }
        for n, p in feet.items():
            kp[sk.KP[f"{side}_{n}"]] = p
            part[sk.KP[f"{side}_{n}"]] = f"{side}_foot"
        root = sk.LEFT_HAND_ROOT if side == "left" else sk.RIGHT_HAND_ROOT
        wrist = joints[f"{side}_wrist"]
        tip = joints[f"{side}_hand_tip"]
        kp[root] = wrist
        part[root] = f"{side}_hand"
        down = (tip - wrist) / np.linalg.norm(tip - wrist)
        for f in range(5):
            lateral = np.array([sx * (-0.03 + 0.015 * f), 0.0, 0.0])
            for k, dist in enumerate((0.04, 0.07, 0.095, 0.115)):
                scale = 0.6 if f == 0 else 1.0
                kp[root + 1 + 4 * f + k] = wrist + scale * dist * down + lateral
                part[root + 1 + 4 * f + k] = f"{side}_hand"
    return kp, tuple(part)


def mannequin_embeddings(mann: Mannequin, dim: int = 16, seed: int = 0, length_scale: float = 0.15,
                         laterality: float = 0.35) -> EmbeddingSet:
    """Smooth unit embeddings: random Fourier features of (|x|, y, z) plus a laterality channel.

    Mirrored vertices differ only through the laterality channel, which is
    what makes left/right confusions plausible for a nearest-embedding
    matcher.
    """
    if dim < 4 or dim % 2:
        raise ValueError("dim must be even and >= 4")
    rng = np.random.default_rng(seed)
    v = mann.mesh.vertices
    q = np.column_stack([np.abs(v[:, 0]), v[:, 1], v[:, 2]])
    n_freq = (dim - 2) // 2
    W = rng.normal(0.0, 1.0 / length_scale, size=(3, n_freq))
    phase = rng.uniform(0, 2 * np.pi, size=n_freq)
    z = q @ W + phase
    feats = np.column_stack([np.cos(z), np.sin(z)]) / np.sqrt(n_freq)
    side = laterality * np.tanh(v[:, 0] / 0.03)
    depth = 0.25 * np.tanh(v[:, 2] / 0.03)
    e = np.column_stack([feats, side, depth])
    return EmbeddingSet(e / np.linalg.norm(e, axis=1, keepdims=True))


@dataclass(frozen=True)
class Pose:
    """Limb rotations in degrees: part -> (abduction, forward flexion); yaw 180 shows the back."""

    limbs: dict = field(default_factory=dict)
    yaw: float = 0.0


def _part_transforms(mann: Mannequin, pose: Pose) -> dict:
    """part -> (R, t) mapping canonical points of the part to the posed world frame."""
    out = {None: (np.eye(3), np.zeros(3))}
    order = ["arm", "forearm", "hand", "thigh", "shin", "foot"]
    for side, sign in (("left", 1.0), ("right", -1.0)):
        for limb in order:
            part = f"{side}_{limb}"
            abd, flex = pose.limbs.get(part, (0.0, 0.0))
            local = _rot_z(sign * abd) @ _rot_x(-flex)
            R0, t0 = out[mann.part_parent[part]]
            pivot = mann.joints[mann.part_axis[part][0]]
            R = R0 @ local
            # pivot stays where the parent puts it
            t = R0 @ pivot + t0 - R @ pivot
            out[part] = (R, t)
    Ry = _rot_y(pose.yaw)
    return {k: (Ry @ R, Ry @ t) for k, (R, t) in out.items()}


def pose_mannequin(mann: Mannequin, pose: Pose):
    """Posed vertices, normals and 133 keypoints."""
    tf = _part_transforms(mann, pose)
    names = mann.mesh.partition_names
    verts = np.empty_like(mann.mesh.vertices)
    normals = np.empty_like(mann.normals)
    for p, name in enumerate(names):
        R, t = tf.get(name, tf[None])
        sel = mann.mesh.partition_of == p
        verts[sel] = mann.mesh.vertices[sel] @ R.T + t
        normals[sel] = mann.normals[sel] @ R.T
    kps = np.empty_like(mann.keypoints)
    for i, part in enumerate(mann.keypoint_part):
        R, t = tf[part]
        kps[i] = R @ mann.keypoints[i] + t
    joints = {}
    for part, (a, e) in mann.part_axis.items():
        R, t = tf[part]
        joints[a] = R @ mann.joints[a] + t
        joints[e] = R @ mann.joints[e] + t
    return verts, normals, kps, joints


@dataclass(frozen=True, eq=False)
class Render:
    mask: np.ndarray  # (H, W) bool
    gt_vertex: np.ndarray  # (H, W) int64, -1 on background
    keypoints: np.ndarray  # (133, 3) pixel x, y, visibility in {0, 1}
    scale: float  # pixels per model unit


def render(mann: Mannequin, pose: Pose, size=(128, 128), scale: float = 65.0, center=None) -> Render:
    h, w = size
    cx, cy = center if center is not None else (w / 2.0, h / 2.0 + 0.85 * scale)
    verts, normals, kps, joints = pose_mannequin(mann, pose)

    def proj(p):
        p = np.atleast_2d(p)
        return np.column_stack([cx + scale * p[:, 0], cy - scale * p[:, 1]])

    rows, cols = np.mgrid[0:h, 0:w]
    pix = np.column_stack([cols.ravel(), rows.ravel()]).astype(float)
    n_pix = len(pix)
    best_depth = np.full(n_pix, -np.inf)
    gt = np.full(n_pix, -1, dtype=np.int64)
    names = mann.mesh.partition_names
    visible = normals[:, 2] > 0.05
    vproj = proj(verts)

    shapes = []
    for part, (a, e) in mann.part_axis.items():
        pa, pe = proj(joints[a])[0], proj(joints[e])[0]
        inside = segment_sq_distances(pix, pa, pe) <= (mann.part_radius[part] * scale) ** 2
        shapes.append(([names.index(part)], inside))
    for group in (["torso_front", "torso_back"], ["head"]):
        ids = [names.index(g) for g in group]
        sel = np.isin(mann.mesh.partition_of, ids)
        pts = vproj[sel]
        hull = pts[ConvexHull(pts).vertices]
        shapes.append((ids, points_in_polygon(pix, hull)))

    for ids, inside in shapes:
        cand = np.flatnonzero(np.isin(mann.mesh.partition_of, ids) & visible)
        idx = np.flatnonzero(inside)
        if not len(idx) or not len(cand):
            continue
        d = ((pix[idx, None, :] - vproj[None, cand, :]) ** 2).sum(axis=2)
        nearest = cand[d.argmin(axis=1)]
        depth = verts[nearest, 2]
        win = depth > best_depth[idx]
        best_depth[idx[win]] = depth[win]
        gt[idx[win]] = nearest[win]

    gt = gt.reshape(h, w)
    kp = np.column_stack([proj(kps), np.ones(len(kps))])
    return Render(gt >= 0, gt, kp, scale)


def _bbox(mask: np.ndarray) -> tuple[float, float, float, float]:
    rows, cols = np.nonzero(mask)
    return (float(cols.min()), float(rows.min()), float(cols.max() - cols.min()), float(rows.max() - rows.min()))


def make_instance(
    mann: Mannequin,
    emb: EmbeddingSet,
    pose: Pose,
    rng: np.random.Generator,
    *,
    size=(128, 128),
    scale: float = 65.0,
    corrupt: tuple = (),
    noise: float = 0.04,
    kp_jitter: float = 0.5,
    kind: str = "coco17",
    n_points: int = 120,
    name: str = "",
    presence_threshold: float = 0.3,
) -> InstanceInput:
    """Render a pose into an instance with noisy pixel embeddings and sparse gt points.

    Pixels whose ground-truth part is listed in `corrupt` get the embedding
    of the mirrored vertex, which is the left/right confusion the pose
    constraints are meant to undo.
    """
    r = render(mann, pose, size, scale)
    mask = r.mask
    names = mann.mesh.partition_names
    E = emb.vertex_embeddings
    dim = E.shape[1]
    pix = np.zeros(size + (dim,))
    rows, cols = np.nonzero(mask)
    v = r.gt_vertex[rows, cols]
    src = v.copy()
    if corrupt:
        bad = np.isin(mann.mesh.partition_of[v], [names.index(p) for p in corrupt])
        src[bad] = mann.mirror_of[v[bad]]
    pix[rows, cols] = E[src] + noise * rng.standard_normal((len(rows), dim))
    bg = ~mask
    pix[bg] = 0.05 * rng.standard_normal((int(bg.sum()), dim))
    pix /= np.linalg.norm(pix, axis=2, keepdims=True)

    n = sk.KEYPOINT_COUNTS[kind]
    kp = r.keypoints[:n].copy()
    kp[:, :2] += kp_jitter * rng.standard_normal((n, 2))
    kp[:, 2] = 0.95
    if abs(((pose.yaw + 180) % 360) - 180) > 90:
        # seen from the back: face landmarks are not visible
        face = [0, 1, 2] + (list(range(23, 91)) if kind == "wholebody133" else [])
        kp[face, 2] = 0.1
    skeleton = Skeleton2D.from_keypoints(kind, kp, presence_threshold, mann.mesh.bone_lengths)

    k = min(n_points, len(rows))
    pick = np.sort(rng.choice(len(rows), size=k, replace=False))
    gt_xy = np.column_stack([cols[pick], rows[pick]]).astype(float)
    return InstanceInput(
        bbox=_bbox(mask),
        mask=mask,
        pixel_embeddings=pix.astype(np.float32),
        skeleton=skeleton,
        gt_xy=gt_xy,
        gt_vertex=v[pick],
        score=float(np.round(rng.uniform(0.5, 1.0), 6)),
        name=name,
    )


def mirror_instance(instance: InstanceInput, mann: Mannequin) -> InstanceInput:
    """Left/right mirror image: flipped raster, swapped keypoints and mirrored gt vertices."""
    h, w = instance.shape
    perm = sk.mirror_keypoint_permutation(instance.skeleton.kind)
    trip = instance.skeleton.triplets()[perm]
    trip[:, 0] = (w - 1) - trip[:, 0]
    s = instance.skeleton
    skel = Skeleton2D(s.kind, trip[:, :2], trip[:, 2], s.present[perm], s.principal_bones)
    x, y, bw, bh = instance.bbox
    gt_xy = gt_v = None
    if instance.gt_xy is not None:
        gt_xy = instance.gt_xy.copy()
        gt_xy[:, 0] = (w - 1) - gt_xy[:, 0]
        gt_v = mann.mirror_of[instance.gt_vertex]
    return replace(
        instance,
        bbox=((w - 1) - (x + bw), y, bw, bh),
        mask=instance.mask[:, ::-1],
        pixel_embeddings=instance.pixel_embeddings[:, ::-1],
        skeleton=skel,
        gt_xy=gt_xy,
        gt_vertex=gt_v,
        name=instance.name + "_mirror" if instance.name else "",
    )


def swap_part_labels(instance: InstanceInput, mann: Mannequin, parts) -> InstanceInput:
    """Annotator-style left/right confusion: gt points of `parts` relabeled with mirrored vertices."""
    names = mann.mesh.partition_names
    ids = [names.index(p) for p in parts]
    gv = instance.gt_vertex.copy()
    sel = np.isin(mann.mesh.partition_of[gv], ids)
    gv[sel] = mann.mirror_of[gv[sel]]
    return replace(instance, gt_vertex=gv)
