"""UV map visualization.

Colormap: red = round(255 * u), green = round(255 * v), blue = 128 on the
foreground; background is black. Blue never reaches 0 on the foreground,
so foreground and background stay distinguishable even at u = v = 0.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image

from .assign import UvMap
from .model import CanonicalMesh

FOREGROUND_BLUE = 128


def uv_colors(uvmap: UvMap, mesh: CanonicalMesh) -> np.ndarray:
    """(H, W, 3) uint8 image of the UV coordinates of each pixel's vertex."""
    img = np.zeros((uvmap.height, uvmap.width, 3), dtype=np.uint8)
    fg = uvmap.foreground
    uv = np.clip(mesh.uv[uvmap.vertex_of[fg]], 0.0, 1.0)
    img[fg, 0] = np.round(255 * uv[:, 0]).astype(np.uint8)
    img[fg, 1] = np.round(255 * uv[:, 1]).astype(np.uint8)
    img[fg, 2] = FOREGROUND_BLUE
    return img


def render_uvmap(uvmap: UvMap, mesh: CanonicalMesh, out_path) -> Path:
    """Write the color-coded UV map as PNG (or binary PPM for a .ppm path)."""
    out_path = Path(out_path)
    img = uv_colors(uvmap, mesh)
    if out_path.suffix.lower() == ".ppm":
        h, w, _ = img.shape
        out_path.write_bytes(f"P6\n{w} {h}\n255\n".encode() + img.tobytes())
    else:
        Image.fromarray(img, mode="RGB").save(out_path, format="PNG", optimize=False)
    return out_path
