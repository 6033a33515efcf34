import csv
import json

import numpy as np
import pytest

from pccse import io
from pccse.cli import main


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def c(corpus):
    root = corpus["mesh"].parent
    return {
        "root": root,
        "mesh": corpus["mesh"],
        "emb": corpus["embeddings"],
        "swapped": corpus["swapped"],
        "clean": corpus["clean"],
        "frames": corpus["frames"],
        "forearm": root / "instances" / "reach_lforearm.json",
        "wb": root / "instances" / "step_lthigh.json",
    }


def _assign(c, out, capsys, *extra, instance=None):
    return run(["assign", "--instance", instance or c["forearm"], "--mesh", c["mesh"], "--embeddings", c["emb"],
                "--out", out, *extra], capsys)


def test_missing_mesh_names_the_flag(c, tmp_path, capsys):
    code, _, err = run(["assign", "--instance", c["forearm"], "--embeddings", c["emb"], "--out", tmp_path], capsys)
    assert code == 1
    assert "--mesh" in json.loads(err)["detail"]


def test_baseline_equals_all_bits(c, tmp_path, capsys):
    assert _assign(c, tmp_path / "b", capsys, "--mode", "baseline")[0] == 0
    assert _assign(c, tmp_path / "a", capsys, "--all-bits")[0] == 0
    for f in ("vertex.pct", "score.pct"):
        assert (tmp_path / "b" / f).read_bytes() == (tmp_path / "a" / f).read_bytes()


def test_constrained_reduces_cross_laterality(c, tmp_path, capsys):
    _assign(c, tmp_path / "b", capsys, "--mode", "baseline")
    _assign(c, tmp_path / "c", capsys)
    sb = io.read_json(tmp_path / "b" / "uvmap.json")["summary"]
    sc = io.read_json(tmp_path / "c" / "uvmap.json")["summary"]
    assert sc["cross_laterality_pixels"] < sb["cross_laterality_pixels"]
    assert sc["radius"] == pytest.approx(0.08 * sc["scale"]["pixels_per_unit"])
    assert sum(sc["partition_histogram"].values()) == sc["foreground_pixels"]


def test_regions_then_assign_matches_fused(c, tmp_path, capsys):
    assert run(["regions", "--instance", c["forearm"], "--mesh", c["mesh"], "--out", tmp_path / "l.pct"],
               capsys)[0] == 0
    _assign(c, tmp_path / "fused", capsys)
    _assign(c, tmp_path / "fed", capsys, "--labels", tmp_path / "l.pct")
    mesh = io.load_mesh(c["mesh"])
    assert io.load_uvmap(tmp_path / "fused", mesh).same_as(io.load_uvmap(tmp_path / "fed", mesh))


def test_skeleton_downgrade_and_upgrade(c, tmp_path, capsys):
    assert _assign(c, tmp_path / "d", capsys, "--skeleton", "coco17", instance=c["wb"])[0] == 0
    code, _, err = _assign(c, tmp_path / "u", capsys, "--skeleton", "wholebody133")
    assert code == 1 and json.loads(err)["field"] == "skeleton.kind"


def test_format_error_is_json(c, tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code, _, err = _assign(c, tmp_path / "x", capsys, instance=bad)
    assert code == 1
    e = json.loads(err)
    assert e["field"] == "json" and e["file"].endswith("bad.json")


def test_evaluate_and_ignore_flagged(c, tmp_path, capsys):
    assert run(["check", "--instances", c["swapped"], "--mesh", c["mesh"], "--out-report", tmp_path / "r.json",
                "--out-removal", tmp_path / "rm.json"], capsys)[0] == 0
    rep = io.read_json(tmp_path / "r.json")
    assert len(rep["reports"]) == 10
    code, out, _ = run(["evaluate", "--instances", c["swapped"], "--mesh", c["mesh"], "--embeddings", c["emb"]],
                       capsys)
    assert code == 0
    res = json.loads(out)
    assert res["ap"] == pytest.approx(100.0) and len(res["instances"]) == 10
    code, out, _ = run(["evaluate", "--instances", c["swapped"], "--mesh", c["mesh"], "--embeddings", c["emb"],
                        "--ignore-flagged", tmp_path / "rm.json", "--mode", "baseline"], capsys)
    assert code == 0 and "ap" in json.loads(out)


def test_check_flags_swapped_labels(c, mann, tmp_path, capsys):
    from pccse.mannequin import swap_part_labels
    inst = io.load_instance(c["forearm"], mann.mesh)
    io.save_instance(tmp_path / "sw.json", swap_part_labels(inst, mann, ["left_forearm", "right_forearm"]))
    io.save_instance_set(tmp_path / "set.json", [tmp_path / "sw.json"])
    run(["check", "--instances", tmp_path / "set.json", "--mesh", c["mesh"], "--out-report", tmp_path / "r.json",
         "--out-removal", tmp_path / "rm.json"], capsys)
    removed = io.read_json(tmp_path / "rm.json")["removed"]
    assert set(removed["reach_lforearm"]) >= {"left_forearm", "right_forearm"}


def _csv(text):
    return list(csv.reader(text.splitlines()))


def test_ablate_degenerate_rows_equal_baseline(c, capsys):
    code, out, _ = run(["ablate-delta", "--instances", c["swapped"], "--mesh", c["mesh"], "--embeddings", c["emb"],
                        "--deltas", "0.0,diag"], capsys)
    rows = _csv(out)
    assert code == 0 and rows[0] == ["delta", "ap"]
    assert rows[1][0] == "baseline"
    assert rows[2][1] == rows[1][1] == rows[3][1]


def test_ablate_sweep_peaks_at_default(c, capsys):
    _, out, _ = run(["ablate-delta", "--instances", c["swapped"], "--mesh", c["mesh"], "--embeddings", c["emb"],
                     "--deltas", "0.02,0.08,0.5"], capsys)
    ap = {r[0]: float(r[1]) for r in _csv(out)[1:]}
    assert ap["0.08"] > ap["0.02"] and ap["0.08"] > ap["0.5"]


def test_ablate_empty_list(c, capsys):
    code, _, err = run(["ablate-delta", "--instances", c["swapped"], "--mesh", c["mesh"], "--embeddings", c["emb"],
                        "--deltas", ""], capsys)
    assert code == 1 and "deltas" in json.loads(err)["detail"]


def test_height_track(c, tmp_path, capsys):
    assert run(["height-track", "--frames", c["frames"], "--mesh", c["mesh"], "--out", tmp_path / "h.csv"],
               capsys)[0] == 0
    rows = _csv((tmp_path / "h.csv").read_text())
    assert rows[0] == ["frame", "pixels_per_unit", "height_px"] and len(rows) == 121
    h = np.array([float(r[2]) for r in rows[1:]])
    assert h.std() / h.mean() < 0.1


def test_render_and_unwritable(c, tmp_path, capsys):
    _assign(c, tmp_path / "uv", capsys)
    assert run(["render", "--uvmap", tmp_path / "uv", "--mesh", c["mesh"], "--out", tmp_path / "uv.png"],
               capsys)[0] == 0
    assert (tmp_path / "uv.png").read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
    code, _, err = run(["render", "--uvmap", tmp_path / "uv", "--mesh", c["mesh"],
                        "--out", tmp_path / "missing" / "uv.png"], capsys)
    assert code == 1 and json.loads(err)["error"] == "io"


def test_config_file_and_env(c, tmp_path, capsys, monkeypatch):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"delta": 0.0}))
    monkeypatch.setenv(io.CONFIG_ENV, str(cfg))
    _assign(c, tmp_path / "env", capsys)
    assert io.read_json(tmp_path / "env" / "uvmap.json")["summary"]["delta"] == 0.0
    _assign(c, tmp_path / "flag", capsys, "--delta", "0.3")
    assert io.read_json(tmp_path / "flag" / "uvmap.json")["summary"]["delta"] == 0.3
    cfg.write_text(json.dumps({"dleta": 0.0}))
    code, _, err = _assign(c, tmp_path / "bad", capsys)
    assert code == 1 and json.loads(err)["field"] == "dleta"
