"""Command line interface: ``pccse <subcommand> ...``.

Every failure exits with status 1 and a one-line JSON error on stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

from . import io
from .evaluation import GeodesicOracle
from .model import EngineConfig, InstanceInput, Skeleton2D
from .pipeline import MODES, evaluate_instances, pose_labels, run_instance
from .quality import AuditThresholds, RemovalList, audit_instance, build_removal_list
from .render import render_uvmap
from .scale import ScaleUnavailable, track_height
from .skeletons import KEYPOINT_COUNTS


class CliError(Exception):
    def __init__(self, payload: dict):
        super().__init__(payload.get("detail", ""))
        self.payload = payload


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError({"error": "usage", "detail": message, "prog": self.prog})


def _float_or_inf(s: str) -> float:
    s = s.strip().lower()
    return math.inf if s in ("inf", "diag") else float(s)


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file (overrides $PCCSE_CONFIG)")
    p.add_argument("--delta", type=_float_or_inf, help="bone width factor (default 0.08)")
    p.add_argument("--presence-threshold", type=float)
    p.add_argument("--kappa", type=float)
    p.add_argument("--canonical-height", type=float)
    p.add_argument("--hand-foot-factor", dest="hand_foot_radius_factor", type=float)


def _config(args, mesh=None) -> EngineConfig:
    overrides = {k: getattr(args, k, None) for k in io.config_fields()}
    base = {}
    if mesh is not None and mesh.canonical_height is not None:
        base["canonical_height"] = mesh.canonical_height
    return io.resolve_config(args.config, overrides, base)


def _with_kind(instance: InstanceInput, kind: str | None, path) -> InstanceInput:
    if kind is None or kind == instance.skeleton.kind:
        return instance
    if kind == "coco17":
        return replace(instance, skeleton=instance.skeleton.to_coco17())
    raise io.FormatError(path, "skeleton.kind",
                         f"instance has a {instance.skeleton.kind} skeleton, cannot use it as {kind}")


def _load_instances(set_path, mesh, config, kind):
    return [_with_kind(io.load_instance(p, mesh, config), kind, p) for p in io.load_instance_set(set_path)]


def _write_json_out(obj, out) -> None:
    text = json.dumps(obj, indent=1, sort_keys=True) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_assign(args) -> int:
    mesh = io.load_mesh(args.mesh)
    config = _config(args, mesh)
    emb = io.load_embeddings(args.embeddings)
    inst = _with_kind(io.load_instance(args.instance, mesh, config), args.skeleton, args.instance)
    labels = io.load_labelmap(args.labels, mesh.n_partitions) if args.labels else None
    uvmap, summary = run_instance(inst, mesh, emb, config, args.mode, labels=labels, all_bits=args.all_bits)
    summary["instance"] = inst.name
    io.save_uvmap(args.out, uvmap, summary)
    return 0


def cmd_regions(args) -> int:
    mesh = io.load_mesh(args.mesh)
    config = _config(args, mesh)
    inst = _with_kind(io.load_instance(args.instance, mesh, config), args.skeleton, args.instance)
    labels, info = pose_labels(inst, mesh, config)
    info["partition_names"] = list(mesh.partition_names)
    io.save_labelmap(args.out, labels, info)
    return 0


def cmd_evaluate(args) -> int:
    mesh = io.load_mesh(args.mesh)
    config = _config(args, mesh)
    emb = io.load_embeddings(args.embeddings)
    insts = _load_instances(args.instances, mesh, config, args.skeleton)
    removal = RemovalList.from_dict(io.read_json(args.ignore_flagged)) if args.ignore_flagged else None
    result = evaluate_instances(insts, mesh, emb, config, args.mode, removal, all_bits=args.all_bits)
    result["ignore_flagged"] = bool(removal)
    _write_json_out(result, args.out)
    return 0


def cmd_check(args) -> int:
    mesh = io.load_mesh(args.mesh)
    config = _config(args, mesh)
    thresholds = AuditThresholds(
        bone_distance=args.bone_distance,
        mask_in_bbox=args.mask_in_bbox,
        points_in_mask=args.points_in_mask,
        lr_margin=args.lr_margin,
        lr_fraction=args.lr_fraction,
        min_gps=args.min_gps,
    )
    gps = io.read_json(args.gps) if args.gps else {}
    reports = []
    for p in io.load_instance_set(args.instances):
        inst = io.load_instance(p, mesh, config)
        reports.append(audit_instance(inst, mesh, thresholds, gps.get(inst.name)))
    removal = build_removal_list(reports)
    io.write_json(args.out_report, {"reports": [r.to_dict() for r in reports]})
    io.write_json(args.out_removal, removal.to_dict())
    return 0


def cmd_render(args) -> int:
    mesh = io.load_mesh(args.mesh)
    uvmap = io.load_uvmap(args.uvmap, mesh)
    try:
        render_uvmap(uvmap, mesh, args.out)
    except OSError as e:
        raise CliError({"error": "io", "detail": str(e), "file": str(args.out)}) from None
    return 0


def cmd_ablate_delta(args) -> int:
    deltas = [_float_or_inf(s) for s in args.deltas.split(",") if s.strip()] if args.deltas else []
    if not deltas:
        raise CliError({"error": "usage", "detail": "--deltas needs at least one value"})
    mesh = io.load_mesh(args.mesh)
    config = _config(args, mesh)
    emb = io.load_embeddings(args.embeddings)
    insts = _load_instances(args.instances, mesh, config, args.skeleton)
    oracle = GeodesicOracle(mesh)
    rows = [("delta", "ap")]
    base = evaluate_instances(insts, mesh, emb, config, "baseline", oracle=oracle)
    rows.append(("baseline", repr(base["ap"])))
    for d in deltas:
        cfg = replace(config, delta=d)
        res = evaluate_instances(insts, mesh, emb, cfg, "constrained", oracle=oracle)
        rows.append((repr(d), repr(res["ap"])))
    _write_csv(rows, args.out)
    return 0


def cmd_height_track(args) -> int:
    d = io.read_json(args.frames)
    kind = d.get("kind")
    if kind not in KEYPOINT_COUNTS:
        raise io.FormatError(args.frames, "kind", f"unknown skeleton kind {kind!r}")
    bone_lengths = {}
    mesh = None
    if args.mesh:
        mesh = io.load_mesh(args.mesh)
        bone_lengths = mesh.bone_lengths
    config = _config(args, mesh)
    frames = []
    for i, kp in enumerate(d.get("frames", [])):
        if len(kp) != KEYPOINT_COUNTS[kind]:
            raise io.FormatError(args.frames, f"frames[{i}]", f"expected {KEYPOINT_COUNTS[kind]} keypoints")
        frames.append(Skeleton2D.from_keypoints(kind, kp, config.presence_threshold, bone_lengths))
    rows = [("frame", "pixels_per_unit", "height_px")]
    rows += [(str(i), repr(p), repr(h)) for i, p, h in track_height(frames, config)]
    _write_csv(rows, args.out)
    return 0


def cmd_make_fixtures(args) -> int:
    from .fixtures import write_corpus

    paths = write_corpus(args.out, seed=args.seed)
    _write_json_out({k: str(v) for k, v in paths.items()}, None)
    return 0


def _write_csv(rows, out) -> None:
    if out:
        with open(out, "w", newline="") as f:
            csv.writer(f, lineterminator="\n").writerows(rows)
    else:
        csv.writer(sys.stdout, lineterminator="\n").writerows(rows)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pccse", description="Pose-constrained dense correspondence tools")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("assign", help="pixel-to-vertex assignment for one instance")
    p.add_argument("--instance", required=True)
    p.add_argument("--mesh", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--skeleton", choices=sorted(KEYPOINT_COUNTS))
    p.add_argument("--mode", choices=MODES, default="constrained")
    p.add_argument("--labels", help="LabelMap from `regions` to use instead of the pose")
    p.add_argument("--all-bits", action="store_true", help="allow every partition at every pixel")
    p.add_argument("--out", required=True, help="output directory")
    _add_config_flags(p)
    p.set_defaults(func=cmd_assign)

    p = sub.add_parser("regions", help="rasterize pose-induced label sets")
    p.add_argument("--instance", required=True)
    p.add_argument("--mesh", required=True)
    p.add_argument("--skeleton", choices=sorted(KEYPOINT_COUNTS))
    p.add_argument("--out", required=True, help="LabelMap tensor path (.pct); sidecar .json is written next to it")
    _add_config_flags(p)
    p.set_defaults(func=cmd_regions)

    p = sub.add_parser("evaluate", help="GPS and AP over an instance set")
    p.add_argument("--instances", required=True)
    p.add_argument("--mesh", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--skeleton", choices=sorted(KEYPOINT_COUNTS))
    p.add_argument("--mode", choices=MODES, default="constrained")
    p.add_argument("--all-bits", action="store_true")
    p.add_argument("--ignore-flagged", help="removal list JSON written by `check`")
    p.add_argument("--out")
    _add_config_flags(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("check", help="audit annotation consistency")
    p.add_argument("--instances", required=True)
    p.add_argument("--mesh", required=True)
    p.add_argument("--out-report", required=True)
    p.add_argument("--out-removal", required=True)
    p.add_argument("--gps", help="JSON {instance name: GPS} used as the inference-error metric")
    d = AuditThresholds()
    p.add_argument("--bone-distance", type=float, default=d.bone_distance)
    p.add_argument("--mask-in-bbox", type=float, default=d.mask_in_bbox)
    p.add_argument("--points-in-mask", type=float, default=d.points_in_mask)
    p.add_argument("--lr-margin", type=float, default=d.lr_margin)
    p.add_argument("--lr-fraction", type=float, default=d.lr_fraction)
    p.add_argument("--min-gps", type=float, default=d.min_gps)
    _add_config_flags(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("render", help="color-code a UV map")
    p.add_argument("--uvmap", required=True, help="uvmap.json or the directory holding it")
    p.add_argument("--mesh", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("ablate-delta", help="AP as a function of the bone width factor")
    p.add_argument("--instances", required=True)
    p.add_argument("--mesh", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--skeleton", choices=sorted(KEYPOINT_COUNTS))
    p.add_argument("--deltas", required=True, help="comma-separated; 'inf' or 'diag' covers the image")
    p.add_argument("--out")
    _add_config_flags(p)
    p.set_defaults(func=cmd_ablate_delta)

    p = sub.add_parser("height-track", help="per-frame apparent height from poses")
    p.add_argument("--frames", required=True, help='JSON {"kind": ..., "frames": [[[x, y, c], ...], ...]}')
    p.add_argument("--mesh", help="mesh JSON providing canonical bone lengths")
    p.add_argument("--out")
    _add_config_flags(p)
    p.set_defaults(func=cmd_height_track)

    p = sub.add_parser("make-fixtures", help="write the synthetic mannequin corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=7)
    p.set_defaults(func=cmd_make_fixtures)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except CliError as e:
        payload = e.payload
    except io.FormatError as e:
        payload = e.to_dict()
    except ScaleUnavailable as e:
        payload = {"error": "scale", "detail": str(e)}
    except (ValueError, KeyError) as e:
        payload = {"error": "invalid", "detail": str(e)}
    sys.stderr.write(json.dumps(payload, sort_keys=True) + "\n")
    return 1


if __name__ == "__main__":
    sys.exit(main())
