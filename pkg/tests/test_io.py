import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from pccse import io
from pccse.geometry import LabelMap
from pccse.model import EngineConfig
from pccse.pipeline import run_instance

shapes = hnp.array_shapes(min_dims=0, max_dims=4, max_side=5)


@given(st.one_of(
    hnp.arrays(np.float32, shapes, elements=st.floats(-1e6, 1e6, width=32)),
    hnp.arrays(np.uint32, shapes),
    hnp.arrays(np.uint16, shapes),
    hnp.arrays(np.uint8, shapes),
))
def test_tensor_roundtrip(a):
    buf = io.encode_tensor(a)
    b = io.decode_tensor(buf)
    assert b.dtype == a.dtype and b.shape == a.shape
    assert np.array_equal(a, b)
    assert io.encode_tensor(b) == buf


def test_tensor_header_layout():
    buf = io.encode_tensor(np.arange(6, dtype=np.float32).reshape(2, 3))
    assert buf[:4] == b"PCT1" and buf[4] == 1 and buf[5] == 2
    assert buf[6:14] == (2).to_bytes(4, "little") + (3).to_bytes(4, "little")
    assert len(buf) == 14 + 6 * 4


@pytest.mark.parametrize("buf,field", [(b"NOPE\x01\x00", "magic"), (b"PCT1\x09\x00", "dtype"),
                                       (b"PCT1\x01\x01\x02\x00\x00\x00" + b"\x00" * 4, "payload"),
                                       (b"PCT1\x01\x02\x02", "dims")])
def test_tensor_errors(buf, field):
    with pytest.raises(io.FormatError) as e:
        io.decode_tensor(buf, "t.pct")
    assert e.value.to_dict()["field"] == field


def test_unsupported_dtype():
    with pytest.raises(ValueError):
        io.encode_tensor(np.zeros(3, np.float64))


@given(hnp.arrays(bool, hnp.array_shapes(min_dims=2, max_dims=2, max_side=12)))
def test_rle_roundtrip(mask):
    rle = io.rle_encode(mask)
    assert np.array_equal(io.rle_decode(rle), mask)
    assert sum(rle["counts"]) == mask.size


def test_rle_is_column_major():
    m = np.array([[0, 1], [0, 1]], bool)
    assert io.rle_encode(m)["counts"] == [2, 2]
    with pytest.raises(io.FormatError):
        io.rle_decode({"size": [2, 2], "counts": [1, 1]})


def test_mask_png_roundtrip(tmp_path):
    m = np.random.default_rng(0).uniform(size=(7, 9)) < 0.5
    io.write_mask_png(tmp_path / "m.png", m)
    assert np.array_equal(io.read_mask_png(tmp_path / "m.png"), m)
    from PIL import Image
    Image.new("RGB", (3, 3)).save(tmp_path / "rgb.png")
    with pytest.raises(io.FormatError, match="grayscale"):
        io.read_mask_png(tmp_path / "rgb.png")


def test_mesh_and_embedding_roundtrip(tmp_path, mesh, emb):
    io.save_mesh(tmp_path / "m.json", mesh)
    m2 = io.load_mesh(tmp_path / "m.json")
    io.save_mesh(tmp_path / "m2.json", m2)
    assert (tmp_path / "m.json").read_bytes() == (tmp_path / "m2.json").read_bytes()
    assert np.array_equal(m2.vertices, mesh.vertices) and m2.bone_lengths == mesh.bone_lengths
    io.save_embeddings(tmp_path / "e.pct", emb)
    e2 = io.load_embeddings(tmp_path / "e.pct")
    np.testing.assert_allclose(e2.vertex_embeddings, emb.vertex_embeddings, atol=1e-7)


@pytest.mark.parametrize("rle", [False, True])
def test_instance_roundtrip(tmp_path, mesh, swapped_suite, rle):
    inst = replace_annotations(swapped_suite[4])
    io.save_instance(tmp_path / "a.json", inst, rle=rle)
    back = io.load_instance(tmp_path / "a.json", mesh)
    assert np.array_equal(back.mask, inst.mask)
    assert np.array_equal(back.pixel_embeddings, inst.pixel_embeddings)
    assert np.array_equal(back.gt_vertex, inst.gt_vertex)
    assert back.skeleton.kind == "wholebody133" and back.annotations == inst.annotations
    io.save_instance(tmp_path / "b.json", back, rle=rle)
    for suffix in (".json", ".emb.pct") + (() if rle else (".mask.png",)):
        assert (tmp_path / f"a{suffix}").read_bytes() == (tmp_path / f"b{suffix}").read_bytes().replace(b'"b.', b'"a.')


def replace_annotations(inst):
    from dataclasses import replace
    return replace(inst, annotations={"iscrowd": 0})


def _write_raw_instance(tmp_path, emb_shape, mask_shape, conf=0.9, kind="coco17"):
    io.write_tensor(tmp_path / "e.pct", np.ones(emb_shape, np.float32))
    io.write_mask_png(tmp_path / "m.png", np.ones(mask_shape, bool))
    n = 17 if kind == "coco17" else 133
    kps = [[1.0, 1.0, 0.9]] * n
    kps[0] = [1.0, 1.0, conf]
    d = {"bbox": [0, 0, 8, 8], "skeleton": {"kind": kind, "keypoints": kps}, "mask": "m.png", "embeddings": "e.pct"}
    (tmp_path / "i.json").write_text(json.dumps(d))
    return tmp_path / "i.json"


def test_shape_mismatch_names_both(tmp_path):
    p = _write_raw_instance(tmp_path, (8, 8, 16), (8, 9))
    with pytest.raises(io.FormatError, match=r"\[8, 8, 16\].*\[8, 9\]"):
        io.load_instance(p)


def test_low_confidence_not_present(tmp_path):
    p = _write_raw_instance(tmp_path, (8, 8, 4), (8, 8), conf=0.1)
    inst = io.load_instance(p, config=EngineConfig(presence_threshold=0.3))
    assert not inst.skeleton.present[0] and inst.skeleton.present[1:].all()
    assert inst.shape == (8, 8)


def test_bad_kind_and_missing_field(tmp_path):
    p = _write_raw_instance(tmp_path, (8, 8, 4), (8, 8))
    d = json.loads(p.read_text())
    d["skeleton"]["kind"] = "openpose"
    p.write_text(json.dumps(d))
    with pytest.raises(io.FormatError, match="unknown skeleton kind"):
        io.load_instance(p)
    del d["mask"]
    p.write_text(json.dumps(d))
    with pytest.raises(io.FormatError) as e:
        io.load_instance(p)
    assert e.value.to_dict()["field"] == "mask"


def test_uvmap_and_labelmap_roundtrip(tmp_path, mesh, emb, swapped_suite):
    inst = swapped_suite[0]
    uv, summary = run_instance(inst, mesh, emb, EngineConfig())
    side = io.save_uvmap(tmp_path / "uv", uv, summary)
    assert io.load_uvmap(side, mesh).same_as(uv)
    assert io.load_uvmap(tmp_path / "uv", mesh).same_as(uv)
    lm = LabelMap.everything(inst.mask, mesh.n_partitions)
    io.save_labelmap(tmp_path / "l.pct", lm, {"x": 1})
    back = io.load_labelmap(tmp_path / "l.pct")
    assert np.array_equal(back.allowed, lm.allowed) and back.n_partitions == 15


def test_config_precedence(tmp_path, monkeypatch):
    env = tmp_path / "env.json"
    env.write_text(json.dumps({"delta": 0.1, "kappa": 0.3}))
    f = tmp_path / "f.json"
    f.write_text(json.dumps({"delta": 0.2}))
    monkeypatch.setenv(io.CONFIG_ENV, str(env))
    c = io.resolve_config(f, {"presence_threshold": 0.5, "kappa": None}, {"canonical_height": 1.8, "delta": 9})
    assert (c.delta, c.kappa, c.presence_threshold, c.canonical_height) == (0.2, 0.3, 0.5, 1.8)
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"deltaa": 1}))
    with pytest.raises(io.FormatError, match="unknown config field"):
        io.read_config_file(bad)
    io.save_config(tmp_path / "c.json", c)
    monkeypatch.delenv(io.CONFIG_ENV)
    assert io.resolve_config(tmp_path / "c.json") == c
