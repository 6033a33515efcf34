"""Geodesic distances, Geodesic Point Similarity and Average Precision."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components, dijkstra

from .assign import SENTINEL, UvMap
from .model import CanonicalMesh, InstanceInput

GPS_THRESHOLDS = tuple(np.round(np.linspace(0.5, 0.95, 10), 2).tolist())
RECALL_THRESHOLDS = np.linspace(0.0, 1.0, 101)


class DisconnectedMesh(ValueError):
    pass


class GeodesicOracle:
    """Shortest paths over the mesh edge graph with Euclidean edge weights.

    This approximates true surface geodesics from above; it is exact along
    mesh edges. Per-source distance rows are computed on demand and cached.
    """

    def __init__(self, mesh: CanonicalMesh):
        self.mesh = mesh
        n = mesh.n_vertices
        e = mesh.edges()
        w = np.linalg.norm(mesh.vertices[e[:, 0]] - mesh.vertices[e[:, 1]], axis=1)
        self.graph = coo_matrix((w, (e[:, 0], e[:, 1])), shape=(n, n)).tocsr()
        ncomp, comp = connected_components(self.graph, directed=False)
        if ncomp > 1:
            main = np.bincount(comp).argmax()
            stray = np.flatnonzero(comp != main)
            raise DisconnectedMesh(
                f"mesh edge graph has {ncomp} components; vertices unreachable from the main "
                f"component include {stray[:10].tolist()}"
            )
        self._rows: dict[int, np.ndarray] = {}

    def prepare(self, sources) -> "GeodesicOracle":
        todo = sorted({int(s) for s in sources} - self._rows.keys())
        if todo:
            d = dijkstra(self.graph, directed=False, indices=todo)
            for s, row in zip(todo, np.atleast_2d(d)):
                row.setflags(write=False)
                self._rows[s] = row
        return self

    def row(self, source: int) -> np.ndarray:
        if source not in self._rows:
            self.prepare([source])
        return self._rows[source]

    def distance(self, i: int, j: int) -> float:
        return float(self.row(int(i))[int(j)])

    def distances(self, sources: np.ndarray, targets: np.ndarray) -> np.ndarray:
        sources = np.asarray(sources, dtype=np.int64)
        targets = np.asarray(targets, dtype=np.int64)
        self.prepare(np.unique(sources))
        return np.array([self._rows[int(s)][int(t)] for s, t in zip(sources, targets)], dtype=np.float64)


def geodesic_distances(mesh: CanonicalMesh, sources) -> GeodesicOracle:
    return GeodesicOracle(mesh).prepare(sources)


@dataclass(frozen=True)
class GpsResult:
    per_point: np.ndarray  # similarity in [0, 1] per evaluated point
    score: float


def gps(gt_xy: np.ndarray, gt_vertex: np.ndarray, uvmap: UvMap, oracle: GeodesicOracle,
        kappa: float) -> GpsResult:
    """Mean of exp(-g^2 / (2 kappa^2)) over annotated points.

    Points falling on background (or off the raster) have no prediction and
    score 0.
    """
    gt_xy = np.asarray(gt_xy, dtype=np.float64).reshape(-1, 2)
    gt_vertex = np.asarray(gt_vertex, dtype=np.int64).ravel()
    if not len(gt_vertex):
        raise ValueError("no evaluable points")
    col = np.floor(gt_xy[:, 0] + 0.5).astype(np.int64)
    row = np.floor(gt_xy[:, 1] + 0.5).astype(np.int64)
    inside = (row >= 0) & (row < uvmap.height) & (col >= 0) & (col < uvmap.width)
    pred = np.full(len(gt_vertex), SENTINEL, dtype=np.int64)
    pred[inside] = uvmap.vertex_of[row[inside], col[inside]]
    sim = np.zeros(len(gt_vertex))
    ok = pred != SENTINEL
    if ok.any():
        g = oracle.distances(gt_vertex[ok], pred[ok])
        sim[ok] = np.exp(-(g**2) / (2.0 * kappa**2))
    return GpsResult(sim, float(sim.mean()))


def instance_gps(instance: InstanceInput, uvmap: UvMap, oracle: GeodesicOracle, kappa: float,
                 keep: np.ndarray | None = None) -> GpsResult:
    xy, v = instance.gt_xy, instance.gt_vertex
    if keep is not None:
        xy, v = xy[keep], v[keep]
    return gps(xy, v, uvmap, oracle, kappa)


@dataclass(frozen=True)
class ApResult:
    thresholds: tuple[float, ...]
    per_threshold: tuple[float, ...]  # averaged precision in [0, 1] per threshold
    ap: float  # mean over thresholds, x100
    recall: tuple[float, ...] = field(default=())

    def to_dict(self) -> dict:
        return {
            "ap": self.ap,
            "per_threshold": {f"{t:.2f}": p for t, p in zip(self.thresholds, self.per_threshold)},
            "recall": {f"{t:.2f}": r for t, r in zip(self.thresholds, self.recall)},
        }


def _interpolated_precision(tp: np.ndarray, n_gt: int) -> float:
    """COCO-style 101-point interpolated precision for one threshold."""
    if not len(tp) or n_gt == 0:
        return 0.0
    tp_sum = np.cumsum(tp).astype(np.float64)
    fp_sum = np.cumsum(~tp).astype(np.float64)
    rc = tp_sum / n_gt
    pr = tp_sum / (tp_sum + fp_sum)
    pr = np.maximum.accumulate(pr[::-1])[::-1]
    idx = np.searchsorted(rc, RECALL_THRESHOLDS, side="left")
    q = np.where(idx < len(pr), pr[np.minimum(idx, len(pr) - 1)], 0.0)
    return float(q.mean())


def average_precision(instances, thresholds=GPS_THRESHOLDS) -> ApResult:
    """AP over GPS thresholds from (GpsResult or score, detection score) pairs.

    Each ground-truth instance has exactly one detection; a detection is a
    true positive at threshold t iff its GPS >= t, otherwise it is a false
    positive and its ground truth stays unmatched.
    """
    items = list(instances)
    if not items:
        raise ValueError("average_precision needs at least one instance")
    g = np.array([float(r.score if isinstance(r, GpsResult) else r) for r, _ in items])
    det = np.array([float(s) for _, s in items])
    order = np.argsort(-det, kind="mergesort")
    g = g[order]
    per_t, recall = [], []
    for t in thresholds:
        tp = g >= t
        per_t.append(_interpolated_precision(tp, len(g)))
        recall.append(float(tp.sum() / len(g)))
    return ApResult(tuple(thresholds), tuple(per_t), 100.0 * float(np.mean(per_t)), tuple(recall))
