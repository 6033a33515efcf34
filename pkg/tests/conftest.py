import numpy as np
import pytest

from pccse import fixtures as fx
from pccse.geometry import LabelMap
from pccse.model import CanonicalMesh, EmbeddingSet, InstanceInput, Skeleton2D
from pccse.skeletons import PARTITION_NAMES


def random_mesh(rng, n_vertices, n_parts=len(PARTITION_NAMES)):
    """Chain-connected mesh; every partition gets at least one vertex."""
    part = np.concatenate([np.arange(n_parts), rng.integers(0, n_parts, n_vertices - n_parts)])
    rng.shuffle(part)
    faces = np.column_stack([np.zeros(n_vertices - 2, int), np.arange(1, n_vertices - 1), np.arange(2, n_vertices)])
    return CanonicalMesh(
        vertices=rng.standard_normal((n_vertices, 3)),
        faces=faces,
        uv=rng.uniform(0, 1, (n_vertices, 2)),
        partition_of=part,
        partition_names=PARTITION_NAMES[:n_parts],
    )


def unit_rows(a):
    return a / np.linalg.norm(a, axis=-1, keepdims=True)


def empty_skeleton(kind="coco17"):
    n = 17 if kind == "coco17" else 133
    return Skeleton2D.from_keypoints(kind, np.zeros((n, 3)))


def random_case(rng, quantized=False):
    """Random (instance, mesh, embeddings, labels) within the oracle-test size limits.

    Quantized cases use small-integer embeddings with duplicated rows, so every
    inner product is exact and ties really happen.
    """
    n_v = int(rng.integers(16, 501))
    d = int(rng.integers(2, 33))
    h, w = int(rng.integers(1, 33)), int(rng.integers(1, 33))
    mesh = random_mesh(rng, n_v)
    if quantized:
        d = min(d, 4)
        base = rng.integers(-2, 3, (max(2, n_v // 4), d)).astype(float)
        E = base[rng.integers(0, len(base), n_v)]
        phi = rng.integers(-2, 3, (h, w, d)).astype(np.float32)
    else:
        E = unit_rows(rng.standard_normal((n_v, d)))
        phi = unit_rows(rng.standard_normal((h, w, d))).astype(np.float32)
    mask = rng.uniform(size=(h, w)) < rng.uniform(0.3, 1.0)
    words = rng.integers(1, 1 << mesh.n_partitions, (h, w))
    labels = LabelMap(np.where(mask, words, 0).astype(np.uint16), mesh.n_partitions)
    inst = InstanceInput((0, 0, w, h), mask, phi, empty_skeleton())
    return inst, mesh, EmbeddingSet(E), labels


def brute_force(inst, mesh, emb, labels=None):
    """Per-pixel loop over the allowed vertices; first strict maximum wins."""
    h, w = inst.shape
    out = np.full((h, w), -1, dtype=np.int64)
    E = emb.vertex_embeddings
    for r in range(h):
        for c in range(w):
            if not inst.mask[r, c]:
                continue
            phi = inst.pixel_embeddings[r, c].astype(np.float64)
            word = None if labels is None else int(labels.allowed[r, c])
            best, best_i = -np.inf, -1
            for i in range(mesh.n_vertices):
                if word is not None and not (word >> int(mesh.partition_of[i])) & 1:
                    continue
                s = float(np.dot(E[i], phi))
                if s > best:
                    best, best_i = s, i
            out[r, c] = best_i
    return out


def floyd_warshall(mesh):
    n = mesh.n_vertices
    d = np.full((n, n), np.inf)
    np.fill_diagonal(d, 0.0)
    e = mesh.edges()
    w = np.linalg.norm(mesh.vertices[e[:, 0]] - mesh.vertices[e[:, 1]], axis=1)
    d[e[:, 0], e[:, 1]] = w
    d[e[:, 1], e[:, 0]] = w
    for k in range(n):
        d = np.minimum(d, d[:, k:k + 1] + d[k:k + 1, :])
    return d


@pytest.fixture(scope="session")
def mann():
    return fx.mannequin()


@pytest.fixture(scope="session")
def mesh(mann):
    return mann.mesh


@pytest.fixture(scope="session")
def emb():
    return fx.embeddings()


@pytest.fixture(scope="session")
def swapped_suite():
    return fx.swapped_limb_suite()


@pytest.fixture(scope="session")
def clean_suite():
    return fx.clean_suite()


@pytest.fixture(scope="session")
def corpus(tmp_path_factory):
    out = tmp_path_factory.mktemp("corpus")
    return fx.write_corpus(out)
