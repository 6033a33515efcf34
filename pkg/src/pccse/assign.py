"""Pixel-to-vertex assignment kernels.

All three kernels share one similarity routine so that the flat and the
blocked constrained forms see bit-identical scores. Ties resolve to the
smallest vertex index everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import LabelMap
from .model import CanonicalMesh, EmbeddingSet, InstanceInput

SENTINEL = -1
CHUNK = 4096


class LabelMapError(ValueError):
    """A foreground pixel has no admissible vertex."""


@dataclass(frozen=True, eq=False)
class UvMap:
    vertex_of: np.ndarray  # (H, W) int64, SENTINEL on background
    uv_of: np.ndarray  # (H, W, 2) float64, NaN on background
    score_of: np.ndarray  # (H, W) float32, NaN on background

    @property
    def height(self) -> int:
        return self.vertex_of.shape[0]

    @property
    def width(self) -> int:
        return self.vertex_of.shape[1]

    @property
    def foreground(self) -> np.ndarray:
        return self.vertex_of != SENTINEL

    @classmethod
    def from_vertices(cls, vertex_of: np.ndarray, score_of: np.ndarray, mesh: CanonicalMesh) -> "UvMap":
        vertex_of = np.asarray(vertex_of, dtype=np.int64)
        fg = vertex_of != SENTINEL
        uv = np.full(vertex_of.shape + (2,), np.nan)
        uv[fg] = mesh.uv[vertex_of[fg]]
        score = np.where(fg, np.asarray(score_of, dtype=np.float32), np.float32(np.nan)).astype(np.float32)
        for a in (vertex_of, uv, score):
            a.setflags(write=False)
        return cls(vertex_of, uv, score)

    def same_as(self, other: "UvMap") -> bool:
        return (
            np.array_equal(self.vertex_of, other.vertex_of)
            and np.array_equal(self.score_of, other.score_of, equal_nan=True)
        )


@dataclass(frozen=True, eq=False)
class PartitionTables:
    """Per-pixel, per-partition tables over the foreground pixels (row-major order)."""

    rows: np.ndarray
    cols: np.ndarray
    best_score: np.ndarray  # S, (N, P) float64; -inf for empty partitions
    best_vertex: np.ndarray  # V, (N, P) int64; SENTINEL for empty partitions
    admissible: np.ndarray  # B, (N, P) bool

    @property
    def masked_score(self) -> np.ndarray:
        """S' with -inf where the partition is not admissible."""
        return np.where(self.admissible, self.best_score, -np.inf)

    def select(self) -> tuple[np.ndarray, np.ndarray]:
        """V(x, argmax_p S'(x, p)), partition ties going to the smaller vertex."""
        sp = self.masked_score
        top = sp.max(axis=1)
        if len(top) and np.isneginf(top).any():
            k = int(np.flatnonzero(np.isneginf(top))[0])
            raise LabelMapError(
                f"pixel (row {self.rows[k]}, col {self.cols[k]}) has no admissible vertex"
            )
        cand = np.where(sp == top[:, None], self.best_vertex, np.iinfo(np.int64).max)
        return cand.min(axis=1), top


def _foreground(instance: InstanceInput) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    rows, cols = np.nonzero(instance.mask)
    phi = instance.pixel_embeddings[rows, cols].astype(np.float64)
    return rows, cols, phi


def similarities(phi: np.ndarray, emb: EmbeddingSet) -> np.ndarray:
    """Inner products <E_i, phi(x)> in double precision, shape (N, V)."""
    return phi @ emb.vertex_embeddings.T


def _check_dims(instance: InstanceInput, mesh: CanonicalMesh, emb: EmbeddingSet) -> None:
    if emb.vertex_embeddings.shape[0] != mesh.n_vertices:
        raise ValueError(
            f"{emb.vertex_embeddings.shape[0]} vertex embeddings for {mesh.n_vertices} vertices"
        )
    if instance.pixel_embeddings.shape[2] != emb.dim:
        raise ValueError(
            f"pixel embedding dim {instance.pixel_embeddings.shape[2]} != vertex embedding dim {emb.dim}"
        )


def _check_labels(instance: InstanceInput, labels: LabelMap) -> None:
    if labels.allowed.shape != instance.shape:
        raise ValueError(f"label map {labels.allowed.shape} does not match mask {instance.shape}")


def _label_words(labels: LabelMap, rows, cols, mesh: CanonicalMesh) -> np.ndarray:
    words = labels.allowed[rows, cols].astype(np.int64)
    empty = np.flatnonzero(words == 0)
    if len(empty):
        k = empty[0]
        raise LabelMapError(f"empty label set at foreground pixel (row {rows[k]}, col {cols[k]})")
    return words


def _assemble(shape, rows, cols, vertex, score, mesh) -> UvMap:
    vertex_of = np.full(shape, SENTINEL, dtype=np.int64)
    score_of = np.full(shape, np.nan, dtype=np.float32)
    vertex_of[rows, cols] = vertex
    score_of[rows, cols] = score.astype(np.float32)
    return UvMap.from_vertices(vertex_of, score_of, mesh)


def assign_unconstrained(instance: InstanceInput, mesh: CanonicalMesh, emb: EmbeddingSet) -> UvMap:
    """Globally best vertex per foreground pixel."""
    _check_dims(instance, mesh, emb)
    rows, cols, phi = _foreground(instance)
    vertex = np.empty(len(rows), dtype=np.int64)
    score = np.empty(len(rows), dtype=np.float64)
    for s in range(0, len(rows), CHUNK):
        sim = similarities(phi[s:s + CHUNK], emb)
        idx = sim.argmax(axis=1)
        vertex[s:s + CHUNK] = idx
        score[s:s + CHUNK] = sim[np.arange(len(idx)), idx]
    return _assemble(instance.shape, rows, cols, vertex, score, mesh)


def assign_constrained(instance: InstanceInput, mesh: CanonicalMesh, emb: EmbeddingSet,
                       labels: LabelMap) -> UvMap:
    """Best vertex per pixel among the union of its allowed partitions."""
    _check_dims(instance, mesh, emb)
    _check_labels(instance, labels)
    rows, cols, phi = _foreground(instance)
    words = _label_words(labels, rows, cols, mesh)
    vertex = np.empty(len(rows), dtype=np.int64)
    score = np.empty(len(rows), dtype=np.float64)
    part = mesh.partition_of
    for s in range(0, len(rows), CHUNK):
        sim = similarities(phi[s:s + CHUNK], emb)
        ok = ((words[s:s + CHUNK, None] >> part[None, :]) & 1).astype(bool)
        sim = np.where(ok, sim, -np.inf)
        idx = sim.argmax(axis=1)
        best = sim[np.arange(len(idx)), idx]
        if np.isneginf(best).any():
            k = s + int(np.flatnonzero(np.isneginf(best))[0])
            raise LabelMapError(f"pixel (row {rows[k]}, col {cols[k]}) has no admissible vertex")
        vertex[s:s + CHUNK] = idx
        score[s:s + CHUNK] = best
    return _assemble(instance.shape, rows, cols, vertex, score, mesh)


def partition_tables(instance: InstanceInput, mesh: CanonicalMesh, emb: EmbeddingSet,
                     labels: LabelMap) -> PartitionTables:
    _check_dims(instance, mesh, emb)
    _check_labels(instance, labels)
    rows, cols, phi = _foreground(instance)
    words = _label_words(labels, rows, cols, mesh)
    n_parts = mesh.n_partitions
    members = [mesh.partition_vertices(p) for p in range(n_parts)]
    S = np.full((len(rows), n_parts), -np.inf)
    V = np.full((len(rows), n_parts), SENTINEL, dtype=np.int64)
    for s in range(0, len(rows), CHUNK):
        sim = similarities(phi[s:s + CHUNK], emb)
        n = len(sim)
        for p, cols_p in enumerate(members):
            if not len(cols_p):
                continue
            sub = sim[:, cols_p]
            j = sub.argmax(axis=1)  # members are ascending, so first max = smallest index
            V[s:s + n, p] = cols_p[j]
            S[s:s + n, p] = sub[np.arange(n), j]
    B = ((words[:, None] >> np.arange(n_parts)[None, :]) & 1).astype(bool)
    return PartitionTables(rows, cols, S, V, B)


def assign_constrained_blocked(instance: InstanceInput, mesh: CanonicalMesh, emb: EmbeddingSet,
                               labels: LabelMap) -> UvMap:
    """Two-stage form: best vertex per partition, then best admissible partition."""
    tables = partition_tables(instance, mesh, emb, labels)
    vertex, score = tables.select()
    return _assemble(instance.shape, tables.rows, tables.cols, vertex, score, mesh)
