"""Step-by-step frame export for construction sequences (SVG or PNG)."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .mesh import Mesh2D
from .raster import render_binary
from .sequence import ConstructionSequence

FILL = "#7fa7d9"
STROKE = "#c0392b"
PNG_SCALE = 4


def mesh_svg(mesh: Mesh2D, res) -> str:
    """One filled ``<polygon>`` per face, then one ``<polyline>`` per edge.

    Uses the mesh's pixel coordinates directly (y down, as in the raster).
    """
    w, h = res
    v = mesh.vertices.tolist()
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">',
        f'<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>',
        f'<g fill="{FILL}" fill-rule="nonzero" stroke="none">',
    ]
    for loop in mesh.faces:
        pts = " ".join(f"{v[i][0]!r},{v[i][1]!r}" for i in loop)
        out.append(f'<polygon points="{pts}"/>')
    out.append("</g>")
    out.append(f'<g fill="none" stroke="{STROKE}" stroke-width="0.25">')
    for a, b in mesh.edges:
        out.append(f'<polyline points="{v[a][0]!r},{v[a][1]!r} {v[b][0]!r},{v[b][1]!r}"/>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def mesh_png(mesh: Mesh2D, res, scale: int = PNG_SCALE):
    """RGB image: the binary silhouette upscaled by ``scale`` with edges on top."""
    from PIL import Image, ImageDraw

    mask = render_binary(mesh, res).data > 0.5
    big = np.kron(mask, np.ones((scale, scale), dtype=bool))
    rgb = np.full(big.shape + (3,), 255, dtype=np.uint8)
    rgb[big] = (0x7F, 0xA7, 0xD9)
    img = Image.fromarray(rgb, mode="RGB")
    draw = ImageDraw.Draw(img)
    v = mesh.vertices * scale
    for a, b in mesh.edges:
        draw.line([tuple(v[a]), tuple(v[b])], fill=(0xC0, 0x39, 0x2B), width=1)
    return img


def export_frames(seq: ConstructionSequence, out_dir, fmt: str = "svg", res=(64, 64)) -> list[Path]:
    """Write ``frame_%03d.<fmt>`` for the initial shape and after every step.

    The caller is expected to have checked the replay already.
    """
    if fmt not in ("svg", "png"):
        raise ValueError(f"format must be svg or png, got {fmt!r}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for k, mesh in enumerate(seq.meshes()):
        path = out / f"frame_{k:03d}.{fmt}"
        if fmt == "svg":
            path.write_text(mesh_svg(mesh, res))
        else:
            mesh_png(mesh, res).save(path, format="PNG")
        paths.append(path)
    return paths
