"""Core domain types: mesh, embeddings, skeleton, instance, config."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from . import skeletons as sk

UNIT_NORM_TOL = 1e-4


def _frozen(a, dtype) -> np.ndarray:
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class CanonicalMesh:
    vertices: np.ndarray  # (V, 3) model units
    faces: np.ndarray  # (F, 3)
    uv: np.ndarray  # (V, 2) in [0, 1]
    partition_of: np.ndarray  # (V,) label id
    partition_names: tuple[str, ...]
    bone_lengths: Mapping[str, float] = field(default_factory=dict)
    canonical_height: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "vertices", _frozen(self.vertices, np.float64).reshape(-1, 3))
        object.__setattr__(self, "faces", _frozen(self.faces, np.int64).reshape(-1, 3))
        object.__setattr__(self, "uv", _frozen(self.uv, np.float64).reshape(-1, 2))
        object.__setattr__(self, "partition_of", _frozen(self.partition_of, np.int64).ravel())
        object.__setattr__(self, "partition_names", tuple(self.partition_names))
        object.__setattr__(self, "bone_lengths", dict(self.bone_lengths))

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_partitions(self) -> int:
        return len(self.partition_names)

    def partition_id(self, name: str) -> int:
        return self.partition_names.index(name)

    def partition_vertices(self, p: int) -> np.ndarray:
        return np.flatnonzero(self.partition_of == p)

    def edges(self) -> np.ndarray:
        """Unique undirected edges (i < j) of the face graph."""
        f = self.faces
        e = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])
        e = np.sort(e, axis=1)
        e = e[e[:, 0] != e[:, 1]]
        return np.unique(e, axis=0)


@dataclass(frozen=True, eq=False)
class EmbeddingSet:
    vertex_embeddings: np.ndarray  # (V, D), unit rows

    def __post_init__(self):
        e = _frozen(self.vertex_embeddings, np.float64)
        if e.ndim != 2:
            raise ValueError(f"vertex embeddings must be 2-D, got shape {e.shape}")
        object.__setattr__(self, "vertex_embeddings", e)

    @property
    def dim(self) -> int:
        return self.vertex_embeddings.shape[1]


@dataclass(frozen=True)
class Bone:
    name: str
    a: int
    b: int
    partition: str | None
    canonical_length: float | None


@dataclass(frozen=True, eq=False)
class Skeleton2D:
    kind: str
    xy: np.ndarray  # (K, 2) pixels
    confidence: np.ndarray  # (K,)
    present: np.ndarray  # (K,) bool
    principal_bones: tuple[Bone, ...] = ()

    def __post_init__(self):
        if self.kind not in sk.KEYPOINT_COUNTS:
            raise ValueError(f"unknown skeleton kind {self.kind!r}")
        n = sk.KEYPOINT_COUNTS[self.kind]
        xy = _frozen(self.xy, np.float64).reshape(-1, 2)
        if len(xy) != n:
            raise ValueError(f"{self.kind} skeleton needs {n} keypoints, got {len(xy)}")
        object.__setattr__(self, "xy", xy)
        object.__setattr__(self, "confidence", _frozen(self.confidence, np.float64))
        object.__setattr__(self, "present", _frozen(self.present, bool))
        object.__setattr__(self, "principal_bones", tuple(self.principal_bones))

    @classmethod
    def from_keypoints(
        cls,
        kind: str,
        keypoints: Sequence[Sequence[float]],
        presence_threshold: float = 0.3,
        bone_lengths: Mapping[str, float] | None = None,
    ) -> "Skeleton2D":
        """Build from (x, y, confidence) triplets."""
        kp = np.asarray(keypoints, dtype=np.float64).reshape(-1, 3)
        conf = kp[:, 2]
        present = (conf >= presence_threshold) & np.isfinite(kp[:, :2]).all(axis=1)
        return cls(kind, kp[:, :2], conf, present, principal_bones(bone_lengths or {}))

    @property
    def n_keypoints(self) -> int:
        return len(self.xy)

    def has(self, *idx: int) -> bool:
        return all(bool(self.present[i]) for i in idx)

    def bone_present(self, bone: Bone) -> bool:
        return self.has(bone.a, bone.b)

    def triplets(self) -> np.ndarray:
        return np.column_stack([self.xy, self.confidence])

    def to_coco17(self) -> "Skeleton2D":
        if self.kind == "coco17":
            return self
        return Skeleton2D("coco17", self.xy[:17], self.confidence[:17], self.present[:17],
                          self.principal_bones)


def principal_bones(bone_lengths: Mapping[str, float]) -> tuple[Bone, ...]:
    return tuple(
        Bone(b.name, b.a, b.b, b.partition, bone_lengths.get(b.name))
        for b in sk.PRINCIPAL_BONES
    )


@dataclass(frozen=True, eq=False)
class InstanceInput:
    bbox: tuple[float, float, float, float]
    mask: np.ndarray  # (H, W) bool
    pixel_embeddings: np.ndarray  # (H, W, D) float32, unit rows inside the mask
    skeleton: Skeleton2D
    gt_xy: np.ndarray | None = None  # (K, 2) pixels
    gt_vertex: np.ndarray | None = None  # (K,)
    annotations: Mapping = field(default_factory=dict)
    score: float = 1.0
    name: str = ""

    def __post_init__(self):
        mask = _frozen(self.mask, bool)
        emb = _frozen(self.pixel_embeddings, np.float32)
        if emb.ndim != 3 or emb.shape[:2] != mask.shape:
            raise ValueError(
                f"shape mismatch: mask {mask.shape} vs embeddings {emb.shape}"
            )
        object.__setattr__(self, "mask", mask)
        object.__setattr__(self, "pixel_embeddings", emb)
        object.__setattr__(self, "bbox", tuple(float(v) for v in self.bbox))
        if (self.gt_xy is None) != (self.gt_vertex is None):
            raise ValueError("gt_xy and gt_vertex must be given together")
        if self.gt_xy is not None:
            gxy = _frozen(self.gt_xy, np.float64).reshape(-1, 2)
            gv = _frozen(self.gt_vertex, np.int64).ravel()
            if len(gxy) != len(gv):
                raise ValueError("gt_xy and gt_vertex lengths differ")
            object.__setattr__(self, "gt_xy", gxy)
            object.__setattr__(self, "gt_vertex", gv)
        object.__setattr__(self, "annotations", dict(self.annotations))

    @property
    def shape(self) -> tuple[int, int]:
        return self.mask.shape

    @property
    def has_gt(self) -> bool:
        return self.gt_xy is not None and len(self.gt_xy) > 0

    def gt_pixels(self) -> tuple[np.ndarray, np.ndarray]:
        """Integer (row, col) of each gt point; pixel centers sit on integer coordinates."""
        col = np.floor(self.gt_xy[:, 0] + 0.5).astype(np.int64)
        row = np.floor(self.gt_xy[:, 1] + 0.5).astype(np.int64)
        return row, col

    def bbox_contains(self, xy: np.ndarray) -> np.ndarray:
        x, y, w, h = self.bbox
        return (xy[:, 0] >= x) & (xy[:, 0] <= x + w) & (xy[:, 1] >= y) & (xy[:, 1] <= y + h)


@dataclass(frozen=True)
class EngineConfig:
    delta: float = 0.08
    presence_threshold: float = 0.3
    kappa: float = 0.255
    canonical_height: float = 1.7
    hand_foot_radius_factor: float = 2.0

    def __post_init__(self):
        # delta == 0 is the degenerate "no constraint" limit and stays allowed.
        if not self.delta >= 0:
            raise ValueError(f"delta must be >= 0, got {self.delta}")
        if not self.kappa > 0:
            raise ValueError(f"kappa must be > 0, got {self.kappa}")
        if not self.hand_foot_radius_factor >= 1:
            raise ValueError(
                f"hand_foot_radius_factor must be >= 1, got {self.hand_foot_radius_factor}"
            )
        if not 0 <= self.presence_threshold <= 1:
            raise ValueError(f"presence_threshold must lie in [0, 1], got {self.presence_threshold}")
        if not self.canonical_height > 0:
            raise ValueError(f"canonical_height must be > 0, got {self.canonical_height}")


@dataclass
class ValidationReport:
    issues: list[tuple[str, str]] = field(default_factory=list)

    def add(self, code: str, message: str) -> None:
        self.issues.append((code, message))

    @property
    def ok(self) -> bool:
        return not self.issues

    def codes(self) -> list[str]:
        return [c for c, _ in self.issues]

    def __len__(self) -> int:
        return len(self.issues)


def validate_mesh(mesh: CanonicalMesh, embeddings: EmbeddingSet | None = None) -> ValidationReport:
    """Collect every violated mesh/embedding invariant. Never raises."""
    report = ValidationReport()
    n = mesh.n_vertices
    f = mesh.faces
    if f.size:
        bad = np.flatnonzero(((f < 0) | (f >= n)).any(axis=1))
        if len(bad):
            report.add(
                "face index out of range",
                f"{len(bad)} face(s) reference vertices outside [0, {n}), first face {int(bad[0])}: "
                f"{f[bad[0]].tolist()}",
            )
    if len(mesh.partition_of) != n:
        report.add(
            "partition label count",
            f"{len(mesh.partition_of)} partition labels for {n} vertices",
        )
    else:
        k = mesh.n_partitions
        out = np.flatnonzero((mesh.partition_of < 0) | (mesh.partition_of >= k))
        if len(out):
            report.add("partition label out of range", f"vertices {out[:10].tolist()} carry labels outside [0, {k})")
        counts = np.bincount(mesh.partition_of[(mesh.partition_of >= 0) & (mesh.partition_of < k)], minlength=k)
        for p in np.flatnonzero(counts == 0):
            report.add("empty partition", f"partition {mesh.partition_names[p]!r} has no vertices")
    if len(mesh.uv) != n:
        report.add("uv count", f"{len(mesh.uv)} uv rows for {n} vertices")
    elif n and ((mesh.uv < 0) | (mesh.uv > 1)).any():
        report.add("uv out of range", "uv coordinates outside [0, 1]")
    if len(set(mesh.partition_names)) != mesh.n_partitions:
        report.add("duplicate partition name", f"{mesh.partition_names}")

    if n and f.size and not any(c == "face index out of range" for c in report.codes()):
        e = mesh.edges()
        g = coo_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(n, n))
        ncomp, comp = connected_components(g, directed=False)
        if ncomp > 1:
            sizes = np.bincount(comp)
            report.add(
                "disconnected graph",
                f"edge graph has {ncomp} components (sizes {sorted(sizes.tolist(), reverse=True)[:5]})",
            )
    elif n > 1 and not f.size:
        report.add("disconnected graph", "mesh has no faces")

    if embeddings is not None:
        e = embeddings.vertex_embeddings
        if len(e) != n:
            report.add("embedding row count", f"{len(e)} embedding rows for {n} vertices")
        norms = np.linalg.norm(e, axis=1)
        bad = np.flatnonzero(~(np.abs(norms - 1.0) <= UNIT_NORM_TOL))
        if len(bad):
            report.add(
                "non-unit embedding row",
                f"rows {bad[:10].tolist()} have norms {np.round(norms[bad[:10]], 6).tolist()}",
            )
    return report


def normalize_pixel_embeddings(emb: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """L2-normalize per-pixel rows to float32.

    Rows already unit-norm to float32 precision are left untouched, which
    makes normalization idempotent and keeps save/load round trips exact.
    Zero rows are allowed only outside the mask.
    """
    e64 = np.asarray(emb, dtype=np.float64)
    norms = np.linalg.norm(e64, axis=-1)
    zero = norms == 0
    if (zero & mask).any():
        r, c = np.argwhere(zero & mask)[0]
        raise ValueError(f"zero pixel embedding inside the mask at row {r}, col {c}")
    redo = ~zero & (np.abs(norms - 1.0) > 1e-6)
    out = np.array(emb, dtype=np.float32, copy=True)
    out[redo] = (e64[redo] / norms[redo][:, None]).astype(np.float32)
    return out
