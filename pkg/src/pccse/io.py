"""On-disk formats: tensor container, mesh/instance JSON, UvMap and LabelMap rasters.

Tensor container layout (all little-endian)::

    b"PCT1" | u8 dtype | u8 ndim | u32 dims[ndim] | row-major payload

dtype codes: 1 = f32, 2 = u32, 3 = u16, 4 = u8.
"""

from __future__ import annotations

import json
import os
import struct
from dataclasses import asdict, fields
from pathlib import Path

import numpy as np
from PIL import Image

from .assign import SENTINEL, UvMap
from .geometry import LabelMap
from .model import (
    CanonicalMesh,
    EmbeddingSet,
    EngineConfig,
    InstanceInput,
    Skeleton2D,
    normalize_pixel_embeddings,
)
from .skeletons import KEYPOINT_COUNTS

MAGIC = b"PCT1"
DTYPES = {1: np.dtype("<f4"), 2: np.dtype("<u4"), 3: np.dtype("<u2"), 4: np.dtype("u1")}
DTYPE_CODES = {v.str.lstrip("<|"): k for k, v in DTYPES.items()}
U32_SENTINEL = 0xFFFFFFFF


class FormatError(ValueError):
    def __init__(self, file, field: str, detail: str):
        self.file = str(file)
        self.field = field
        self.detail = detail
        super().__init__(f"{self.file}: {field}: {detail}")

    def to_dict(self) -> dict:
        return {"error": "format", "file": self.file, "field": self.field, "detail": self.detail}


def _dumps(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True) + "\n"


def write_json(path, obj) -> None:
    Path(path).write_text(_dumps(obj))


def read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise FormatError(path, "file", "does not exist") from None
    except json.JSONDecodeError as e:
        raise FormatError(path, "json", str(e)) from None


# -- tensor container ---------------------------------------------------------

def encode_tensor(a: np.ndarray) -> bytes:
    a = np.asarray(a)
    key = a.dtype.newbyteorder("<").str.lstrip("<|")
    if key not in DTYPE_CODES:
        raise ValueError(f"unsupported tensor dtype {a.dtype}")
    code = DTYPE_CODES[key]
    if a.ndim > 255:
        raise ValueError("too many dimensions")
    head = MAGIC + struct.pack("<BB", code, a.ndim) + struct.pack(f"<{a.ndim}I", *a.shape)
    return head + np.ascontiguousarray(a, dtype=DTYPES[code]).tobytes()


def decode_tensor(buf: bytes, source="<bytes>") -> np.ndarray:
    if len(buf) < 6 or buf[:4] != MAGIC:
        raise FormatError(source, "magic", f"expected {MAGIC!r}, got {buf[:4]!r}")
    code, ndim = struct.unpack_from("<BB", buf, 4)
    if code not in DTYPES:
        raise FormatError(source, "dtype", f"unknown dtype code {code}")
    end = 6 + 4 * ndim
    if len(buf) < end:
        raise FormatError(source, "dims", "header truncated")
    dims = struct.unpack_from(f"<{ndim}I", buf, 6)
    dt = DTYPES[code]
    want = int(np.prod(dims, dtype=np.int64)) * dt.itemsize
    if len(buf) - end != want:
        raise FormatError(source, "payload", f"{len(buf) - end} bytes for dims {list(dims)}, expected {want}")
    return np.frombuffer(buf, dtype=dt, offset=end).reshape(dims).copy()


def write_tensor(path, a: np.ndarray) -> None:
    Path(path).write_bytes(encode_tensor(a))


def read_tensor(path) -> np.ndarray:
    try:
        buf = Path(path).read_bytes()
    except FileNotFoundError:
        raise FormatError(path, "file", "does not exist") from None
    return decode_tensor(buf, path)


# -- masks ----------------------------------------------------------------------

def rle_encode(mask: np.ndarray) -> dict:
    """Uncompressed COCO-style RLE: column-major runs, starting with a zero run."""
    flat = np.asarray(mask, dtype=bool).ravel(order="F")
    change = np.flatnonzero(np.diff(flat.astype(np.int8))) + 1
    bounds = np.concatenate([[0], change, [len(flat)]])
    counts = np.diff(bounds).tolist()
    if len(flat) and flat[0]:
        counts = [0] + counts
    return {"size": [int(mask.shape[0]), int(mask.shape[1])], "counts": [int(c) for c in counts]}


def rle_decode(rle: dict, source="<rle>") -> np.ndarray:
    try:
        h, w = (int(v) for v in rle["size"])
        counts = [int(c) for c in rle["counts"]]
    except (KeyError, TypeError, ValueError) as e:
        raise FormatError(source, "mask", f"malformed RLE ({e})") from None
    if sum(counts) != h * w or any(c < 0 for c in counts):
        raise FormatError(source, "mask", f"RLE counts sum {sum(counts)} != {h}x{w}")
    vals = np.arange(len(counts)) % 2 == 1
    flat = np.repeat(vals, counts)
    return flat.reshape((h, w), order="F")


def read_mask_png(path) -> np.ndarray:
    try:
        with Image.open(path) as im:
            if im.mode not in ("L", "1"):
                raise FormatError(path, "mask", f"expected 8-bit grayscale PNG, got mode {im.mode}")
            return np.asarray(im.convert("L")) != 0
    except FileNotFoundError:
        raise FormatError(path, "mask", "file does not exist") from None


def write_mask_png(path, mask: np.ndarray) -> None:
    Image.fromarray(np.where(mask, 255, 0).astype(np.uint8), mode="L").save(path, format="PNG")


# -- mesh -----------------------------------------------------------------------

def mesh_to_dict(mesh: CanonicalMesh) -> dict:
    d = {
        "vertices": mesh.vertices.tolist(),
        "faces": mesh.faces.tolist(),
        "uv": mesh.uv.tolist(),
        "partition_of": mesh.partition_of.tolist(),
        "partition_names": list(mesh.partition_names),
        "bones": dict(mesh.bone_lengths),
    }
    if mesh.canonical_height is not None:
        d["canonical_height"] = mesh.canonical_height
    return d


def save_mesh(path, mesh: CanonicalMesh) -> None:
    write_json(path, mesh_to_dict(mesh))


def load_mesh(path) -> CanonicalMesh:
    d = read_json(path)
    for key in ("vertices", "faces", "uv", "partition_of", "partition_names"):
        if key not in d:
            raise FormatError(path, key, "missing")
    try:
        return CanonicalMesh(
            np.asarray(d["vertices"], dtype=np.float64),
            np.asarray(d["faces"], dtype=np.int64),
            np.asarray(d["uv"], dtype=np.float64),
            np.asarray(d["partition_of"], dtype=np.int64),
            tuple(d["partition_names"]),
            {str(k): float(v) for k, v in d.get("bones", {}).items()},
            float(d["canonical_height"]) if "canonical_height" in d else None,
        )
    except (ValueError, TypeError) as e:
        raise FormatError(path, "mesh", str(e)) from None


def save_embeddings(path, emb: EmbeddingSet) -> None:
    write_tensor(path, emb.vertex_embeddings.astype(np.float32))


def load_embeddings(path) -> EmbeddingSet:
    a = read_tensor(path)
    if a.ndim != 2 or a.dtype != np.float32:
        raise FormatError(path, "dims", f"expected a 2-D f32 tensor, got {a.dtype} {a.shape}")
    return EmbeddingSet(a.astype(np.float64))


# -- instances ------------------------------------------------------------------

def load_instance(path, mesh: CanonicalMesh | None = None, config: EngineConfig = EngineConfig()) -> InstanceInput:
    """Read an instance JSON and the mask/embedding files it references."""
    path = Path(path)
    d = read_json(path)
    base = path.parent
    for key in ("bbox", "skeleton", "mask", "embeddings"):
        if key not in d:
            raise FormatError(path, key, "missing")

    bbox = d["bbox"]
    if not (isinstance(bbox, list) and len(bbox) == 4):
        raise FormatError(path, "bbox", f"expected [x, y, w, h], got {bbox!r}")

    skd = d["skeleton"]
    kind = skd.get("kind") if isinstance(skd, dict) else None
    if kind not in KEYPOINT_COUNTS:
        raise FormatError(path, "skeleton.kind", f"unknown skeleton kind {kind!r}")
    kps = skd.get("keypoints", [])
    if len(kps) != KEYPOINT_COUNTS[kind] or any(len(k) != 3 for k in kps):
        raise FormatError(path, "skeleton.keypoints",
                          f"{kind} needs {KEYPOINT_COUNTS[kind]} (x, y, confidence) triplets, got {len(kps)}")
    bone_lengths = mesh.bone_lengths if mesh is not None else {}
    skeleton = Skeleton2D.from_keypoints(kind, kps, config.presence_threshold, bone_lengths)

    m = d["mask"]
    mask = read_mask_png(base / m) if isinstance(m, str) else rle_decode(m, path)
    emb_path = base / d["embeddings"]
    emb = read_tensor(emb_path)
    if emb.dtype != np.float32 or emb.ndim != 3:
        raise FormatError(emb_path, "dims", f"expected an H x W x D f32 tensor, got {emb.dtype} {emb.shape}")
    if emb.shape[:2] != mask.shape:
        raise FormatError(emb_path, "dims",
                          f"shape mismatch: embeddings {list(emb.shape)} vs mask {list(mask.shape)}")
    try:
        emb = normalize_pixel_embeddings(emb, mask)
    except ValueError as e:
        raise FormatError(emb_path, "embeddings", str(e)) from None

    gt_xy = gt_v = None
    if "gt_points" in d:
        g = np.asarray(d["gt_points"], dtype=np.float64).reshape(-1, 3)
        gt_xy, gt_v = g[:, :2], g[:, 2].astype(np.int64)
        if mesh is not None and len(gt_v) and (gt_v.max() >= mesh.n_vertices or gt_v.min() < 0):
            raise FormatError(path, "gt_points", f"vertex index outside [0, {mesh.n_vertices})")
    inst = InstanceInput(
        bbox=tuple(bbox),
        mask=mask,
        pixel_embeddings=emb,
        skeleton=skeleton,
        gt_xy=gt_xy,
        gt_vertex=gt_v,
        annotations=d.get("annotations", {}),
        score=float(d.get("score", 1.0)),
        name=str(d.get("name", path.stem)),
    )
    if inst.gt_xy is not None and not inst.bbox_contains(inst.gt_xy).all():
        raise FormatError(path, "gt_points", "points outside the bounding box")
    return inst


def save_instance(path, instance: InstanceInput, rle: bool = False) -> None:
    """Write instance JSON plus `<stem>.mask.png` and `<stem>.emb.pct` next to it."""
    path = Path(path)
    stem = path.stem
    emb_name = f"{stem}.emb.pct"
    write_tensor(path.parent / emb_name, instance.pixel_embeddings.astype(np.float32))
    if rle:
        mask_ref = rle_encode(instance.mask)
    else:
        mask_ref = f"{stem}.mask.png"
        write_mask_png(path.parent / mask_ref, instance.mask)
    d = {
        "name": instance.name or stem,
        "bbox": list(instance.bbox),
        "skeleton": {"kind": instance.skeleton.kind, "keypoints": instance.skeleton.triplets().tolist()},
        "mask": mask_ref,
        "embeddings": emb_name,
        "score": instance.score,
    }
    if instance.gt_xy is not None:
        d["gt_points"] = [[float(x), float(y), int(v)] for (x, y), v in zip(instance.gt_xy, instance.gt_vertex)]
    if instance.annotations:
        d["annotations"] = dict(instance.annotations)
    write_json(path, d)


def load_instance_set(path) -> list[Path]:
    """Instance paths listed by an instance-set JSON ({"instances": [...]}), resolved relative to it."""
    path = Path(path)
    d = read_json(path)
    if not isinstance(d.get("instances"), list) or not d["instances"]:
        raise FormatError(path, "instances", "expected a non-empty list of instance paths")
    return [path.parent / p for p in d["instances"]]


def save_instance_set(path, instance_paths) -> None:
    path = Path(path)
    write_json(path, {"instances": [os.path.relpath(p, path.parent) for p in instance_paths]})


# -- outputs ----------------------------------------------------------------------

def save_uvmap(out_dir, uvmap: UvMap, summary: dict | None = None) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    v = np.where(uvmap.vertex_of == SENTINEL, U32_SENTINEL, uvmap.vertex_of).astype(np.uint32)
    write_tensor(out_dir / "vertex.pct", v)
    write_tensor(out_dir / "score.pct", uvmap.score_of.astype(np.float32))
    side = {
        "format": "pccse-uvmap",
        "width": uvmap.width,
        "height": uvmap.height,
        "sentinel": U32_SENTINEL,
        "vertex_file": "vertex.pct",
        "score_file": "score.pct",
        "summary": summary or {},
    }
    sidecar = out_dir / "uvmap.json"
    write_json(sidecar, side)
    return sidecar


def load_uvmap(sidecar, mesh: CanonicalMesh) -> UvMap:
    sidecar = Path(sidecar)
    if sidecar.is_dir():
        sidecar = sidecar / "uvmap.json"
    d = read_json(sidecar)
    v = read_tensor(sidecar.parent / d["vertex_file"])
    s = read_tensor(sidecar.parent / d["score_file"])
    if v.shape != (d["height"], d["width"]) or s.shape != v.shape:
        raise FormatError(sidecar, "dims", f"rasters {v.shape}/{s.shape} vs {d['height']}x{d['width']}")
    vertex = np.where(v == U32_SENTINEL, SENTINEL, v.astype(np.int64))
    fg = vertex != SENTINEL
    if fg.any() and vertex[fg].max() >= mesh.n_vertices:
        raise FormatError(sidecar, "vertex_file", "vertex index outside the mesh")
    return UvMap.from_vertices(vertex, s, mesh)


def save_labelmap(path, labels: LabelMap, meta: dict | None = None) -> None:
    path = Path(path)
    write_tensor(path, labels.allowed.astype(np.uint16))
    side = {"format": "pccse-labelmap", "n_partitions": labels.n_partitions}
    side.update(meta or {})
    write_json(path.with_suffix(".json"), side)


def load_labelmap(path, n_partitions: int | None = None) -> LabelMap:
    path = Path(path)
    a = read_tensor(path)
    if a.dtype != np.uint16 or a.ndim != 2:
        raise FormatError(path, "dims", f"expected a 2-D u16 tensor, got {a.dtype} {a.shape}")
    side = path.with_suffix(".json")
    if n_partitions is None:
        if not side.exists():
            raise FormatError(path, "n_partitions", "no sidecar and no partition count given")
        n_partitions = int(read_json(side)["n_partitions"])
    return LabelMap(a, n_partitions)


# -- config ---------------------------------------------------------------------

CONFIG_ENV = "PCCSE_CONFIG"


def config_fields() -> list[str]:
    return [f.name for f in fields(EngineConfig)]


def read_config_file(path) -> dict:
    d = read_json(path)
    unknown = set(d) - set(config_fields())
    if unknown:
        raise FormatError(path, sorted(unknown)[0], "unknown config field")
    return d


def resolve_config(config_path=None, overrides: dict | None = None, base: dict | None = None) -> EngineConfig:
    """Defaults < `base` < $PCCSE_CONFIG < `config_path` < overrides (None values skipped)."""
    values = asdict(EngineConfig())
    values.update(base or {})
    env = os.environ.get(CONFIG_ENV)
    if env:
        values.update(read_config_file(env))
    if config_path:
        values.update(read_config_file(config_path))
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return EngineConfig(**values)


def save_config(path, config: EngineConfig) -> None:
    write_json(path, asdict(config))
