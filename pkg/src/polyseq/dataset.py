"""Random construction simulator for synthetic target silhouettes."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .mesh import (
    DEFAULT_EXTRUDE_LENGTH,
    GeomAction,
    MeshError,
    apply_geom,
    apply_topo,
    default_rect,
    enumerate_valid_actions,
    euler_counts,
)
from .metrics import self_intersections
from .raster import SilhouetteImage, render_binary, save_image
from .sequence import ConstructionSequence, Step

MAX_TRIES = 50


@dataclass(frozen=True)
class GenConfig:
    steps: int = 6
    jitter: float = 4.0
    seed: int = 1
    count: int = 50
    res: tuple[int, int] = (64, 64)
    extrude_length: float = DEFAULT_EXTRUDE_LENGTH
    # vertices must stay this many pixels inside the canvas
    margin: float = 2.0

    def __post_init__(self):
        if self.steps < 0 or self.count < 1:
            raise ValueError("steps must be >= 0 and count >= 1")
        if not self.jitter >= 0:
            raise ValueError("jitter must be non-negative")
        object.__setattr__(self, "res", (int(self.res[0]), int(self.res[1])))


def _clean(mesh, cfg: GenConfig) -> bool:
    w, h = cfg.res
    v = mesh.vertices
    if v[:, 0].min() < cfg.margin or v[:, 1].min() < cfg.margin:
        return False
    if v[:, 0].max() > w - cfg.margin or v[:, 1].max() > h - cfg.margin:
        return False
    if any(mesh.face_area(f) <= 0.0 for f in range(len(mesh.faces))):
        return False
    return self_intersections(mesh) == 0


def random_sequence(cfg: GenConfig, index: int) -> tuple[ConstructionSequence, SilhouetteImage]:
    """Random edit sequence from the default rectangle and its binary render.

    Each step applies a uniformly chosen canonical topological edit and then
    independent uniform translations in ``[-jitter, jitter]^2`` to every
    vertex.  Steps that leave a self-intersection, a folded face or a vertex
    near the canvas edge are redrawn; after 50 failed draws the sequence
    ends early.
    """
    rng = np.random.default_rng([cfg.seed, index])
    initial = default_rect(cfg.res)
    mesh = initial
    steps: list[Step] = []
    for _ in range(cfg.steps):
        for _ in range(MAX_TRIES):
            acts = enumerate_valid_actions(mesh, cfg.extrude_length)
            topo = acts[int(rng.integers(len(acts)))]
            try:
                mt = apply_topo(mesh, topo)
            except MeshError:
                continue
            geom = GeomAction(rng.uniform(-cfg.jitter, cfg.jitter, size=(mt.n_vertices, 2)))
            cand = apply_geom(mt, geom)
            if _clean(cand, cfg):
                steps.append(Step(topo, geom))
                mesh = cand
                break
        else:
            break
    seq = ConstructionSequence(initial, steps, mesh, {"generator": asdict(cfg), "index": index}, cfg.seed)
    return seq, render_binary(mesh, cfg.res)


def gen_dataset(cfg: GenConfig, out_dir) -> dict:
    """Write ``count`` targets, their ground-truth sequences and a manifest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    shapes = []
    for i in range(cfg.count):
        seq, target = random_sequence(cfg, i)
        png = f"shape_{i:03d}.png"
        truth = f"shape_{i:03d}.truth.json"
        save_image(target, out / png)
        seq.save(out / truth)
        v, e, f = euler_counts(seq.final)
        shapes.append(
            {"index": i, "target": png, "truth": truth, "steps": len(seq), "counts": [v, e, f]}
        )
    manifest = {"config": asdict(cfg), "shapes": shapes}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    return manifest
