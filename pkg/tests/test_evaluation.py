import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import floyd_warshall
from pccse.assign import UvMap
from pccse.evaluation import (
    GPS_THRESHOLDS,
    DisconnectedMesh,
    GeodesicOracle,
    average_precision,
    geodesic_distances,
    gps,
)
from pccse.model import CanonicalMesh


def path_mesh(n=4):
    # a strip of unit-spaced vertex pairs; the bottom row is a unit-edge path
    top = [[i, 1, 0] for i in range(n)]
    bottom = [[i, 0, 0] for i in range(n)]
    faces = []
    for i in range(n - 1):
        faces += [[i, i + 1, n + i], [i + 1, n + i + 1, n + i]]
    return CanonicalMesh(top + bottom, faces, np.zeros((2 * n, 2)), [0] * (2 * n), ("a",))


def test_identity_and_chain():
    m = path_mesh()
    o = geodesic_distances(m, range(m.n_vertices))
    assert all(o.distance(i, i) == 0 for i in range(m.n_vertices))
    assert o.distance(0, 3) == 3.0


def test_disconnected_mesh_named():
    m = CanonicalMesh(np.zeros((6, 3)), [[0, 1, 2], [3, 4, 5]], np.zeros((6, 2)), [0] * 6, ("a",))
    with pytest.raises(DisconnectedMesh, match=r"2 components.*\[3, 4, 5\]"):
        GeodesicOracle(m)


def test_mannequin_pairs_vs_floyd_warshall(mesh):
    fw = floyd_warshall(mesh)
    rng = np.random.default_rng(0)
    pairs = rng.integers(0, mesh.n_vertices, (20, 2))
    d = GeodesicOracle(mesh).distances(pairs[:, 0], pairs[:, 1])
    np.testing.assert_allclose(d, fw[pairs[:, 0], pairs[:, 1]], atol=1e-9, rtol=0)
    assert np.allclose(fw, fw.T)


def _uv(vertex, mesh):
    vertex = np.asarray(vertex)
    return UvMap.from_vertices(vertex, np.ones(vertex.shape), mesh)


def test_perfect_predictions():
    m = path_mesh()
    uv = _uv([[0, 1, 2, 3]], m)
    r = gps([[0, 0], [1, 0], [2, 0], [3, 0]], [0, 1, 2, 3], uv, GeodesicOracle(m), 0.255)
    assert r.score == 1.0


def test_half_similarity_closed_form():
    m = path_mesh()
    kappa = 1 / math.sqrt(2 * math.log(2))  # g = 1 = kappa * sqrt(2 ln 2)
    r = gps([[0, 0]], [1], _uv([[0]], m), GeodesicOracle(m), kappa)
    assert abs(r.per_point[0] - 0.5) <= 1e-12


def test_background_and_offraster_score_zero():
    m = path_mesh()
    uv = _uv([[0, -1]], m)
    r = gps([[1, 0], [7, 0], [0, 0]], [0, 0, 0], uv, GeodesicOracle(m), 0.255)
    assert r.per_point.tolist() == [0.0, 0.0, 1.0]


def test_no_points():
    m = path_mesh()
    with pytest.raises(ValueError, match="no evaluable points"):
        gps(np.zeros((0, 2)), [], _uv([[0]], m), GeodesicOracle(m), 0.255)


def test_ap_extremes():
    assert average_precision([(1.0, 0.9), (1.0, 0.5)]).ap == 100.0
    assert average_precision([(0.0, 0.9), (0.0, 0.5)]).ap == 0.0


def _hand_ap(gps_values, det_scores):
    """Enumerate the precision ladder threshold by threshold (COCO 101-point interpolation)."""
    order = sorted(range(len(gps_values)), key=lambda i: -det_scores[i])
    total = 0.0
    for t in [0.5 + 0.05 * k for k in range(10)]:
        t = round(t, 2)
        tp = [gps_values[i] >= t for i in order]
        prec, rec = [], []
        hits = 0
        for k, hit in enumerate(tp, 1):
            hits += hit
            prec.append(hits / k)
            rec.append(hits / len(tp))
        # precision envelope, then sample at recall 0, 0.01, ..., 1
        for k in range(len(prec) - 2, -1, -1):
            prec[k] = max(prec[k], prec[k + 1])
        s = 0.0
        for j in range(101):
            r = j / 100
            idx = next((k for k, v in enumerate(rec) if v >= r), None)
            s += 0.0 if idx is None else prec[idx]
        total += s / 101
    return 100 * total / 10


def test_three_instance_ladder():
    g = [0.93, 0.72, 0.51]
    res = average_precision(list(zip(g, [0.9, 0.8, 0.7])))
    # true-positive cells per threshold: 0.93 passes 9, 0.72 passes 5, 0.51 passes 1
    assert [sum(x >= t for x in g) for t in GPS_THRESHOLDS] == [3, 2, 2, 2, 2, 1, 1, 1, 1, 0]
    expect = (1 + 4 * 67 / 101 + 4 * 34 / 101 + 0) / 10 * 100
    assert res.ap == pytest.approx(expect, abs=1e-12)
    assert res.ap == pytest.approx(_hand_ap(g, [0.9, 0.8, 0.7]), abs=1e-12)


@given(st.lists(st.tuples(st.floats(0, 1), st.floats(0, 1)), min_size=1, max_size=12))
def test_ap_matches_hand_ladder(items):
    res = average_precision(items)
    assert res.ap == pytest.approx(_hand_ap([g for g, _ in items], [s for _, s in items]), abs=1e-9)
    assert 0 <= res.ap <= 100
    assert all(a >= b - 1e-12 for a, b in zip(res.per_threshold, res.per_threshold[1:]))


def test_ap_needs_instances():
    with pytest.raises(ValueError):
        average_precision([])
