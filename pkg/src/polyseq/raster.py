"""Soft silhouette rasterization with analytic vertex gradients.

Each pixel holds ``logistic(d / sigma)`` where ``d`` is the signed distance
from the pixel centre to the mesh outline (positive inside).  The outline is
the set of face-loop segments not cancelled by an opposite segment, so
edges shared by two faces never show up in the image.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import expit

from . import _kernels
from .mesh import Mesh2D

DEFAULT_RES = (64, 64)
DEFAULT_SIGMA = 1.0


@dataclass(frozen=True, eq=False)
class SilhouetteImage:
    """Grayscale raster with values in [0, 1], stored ``(height, width)``."""

    data: np.ndarray

    def __post_init__(self):
        a = np.array(self.data, dtype=np.float64)
        if a.ndim != 2 or a.size == 0:
            raise ValueError(f"expected a non-empty 2-D array, got shape {a.shape}")
        if not np.all(np.isfinite(a)) or a.min() < 0.0 or a.max() > 1.0:
            raise ValueError("pixel values must lie in [0, 1]")
        a.flags.writeable = False
        object.__setattr__(self, "data", a)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def res(self) -> tuple[int, int]:
        return self.width, self.height

    def binarized(self, threshold: float = 0.5) -> "SilhouetteImage":
        return SilhouetteImage((self.data >= threshold).astype(np.float64))

    def __eq__(self, other) -> bool:
        return isinstance(other, SilhouetteImage) and np.array_equal(self.data, other.data)


def _check(res, sigma=None):
    w, h = int(res[0]), int(res[1])
    if w <= 0 or h <= 0:
        raise ValueError(f"resolution must be positive, got {res}")
    if sigma is not None and not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    return w, h


def signed_distance_field(mesh: Mesh2D, res=DEFAULT_RES):
    """Raw kernel output ``(d, inside, closest, tpar)`` for ``mesh``."""
    w, h = _check(res)
    return _kernels.signed_distance(mesh.vertices, mesh.boundary_segments, w, h)


def render_soft(mesh: Mesh2D, res=DEFAULT_RES, sigma: float = DEFAULT_SIGMA) -> SilhouetteImage:
    _check(res, sigma)
    d = signed_distance_field(mesh, res)[0]
    return SilhouetteImage(expit(d / sigma))


def render_binary(mesh: Mesh2D, res=DEFAULT_RES) -> SilhouetteImage:
    """Soft render thresholded at 0.5.

    Uses the winding test directly, which agrees with the threshold and
    settles pixels whose centre lies on the outline.
    """
    inside = signed_distance_field(mesh, res)[1]
    return SilhouetteImage(inside.astype(np.float64))


def loss_mse(img: SilhouetteImage, target: SilhouetteImage) -> float:
    if img.data.shape != target.data.shape:
        raise ValueError(f"resolution mismatch {img.res} vs {target.res}")
    diff = img.data - target.data
    return float(np.mean(diff * diff))


def loss_gradient(mesh: Mesh2D, target: SilhouetteImage, sigma: float = DEFAULT_SIGMA):
    """MSE between the soft render and ``target`` plus its vertex gradient.

    Returns
    -------
    loss : float
    grad : ndarray, shape (n_vertices, 2)
        d(loss)/d(x_j, y_j).  Every pixel contributes; the logistic tail
        beyond a few sigma is small but not below the precision callers
        check against.
    """
    _check(target.res, sigma)
    return vertex_loss_gradient(mesh.vertices, mesh.boundary_segments, target.data, sigma)


def vertex_loss_gradient(verts: np.ndarray, segs: np.ndarray, target: np.ndarray, sigma: float):
    """:func:`loss_gradient` on raw arrays, for optimizer inner loops."""
    h, w = target.shape
    d, _, closest, tpar = _kernels.signed_distance(verts, segs, w, h)
    v = expit(d / sigma)
    resid = v - target
    loss = float(np.mean(resid * resid))
    weight = (2.0 / resid.size) * resid * v * (1.0 - v) / sigma
    grad = _kernels.distance_gradient_accumulate(verts, segs, d, closest, tpar, weight, len(verts))
    return loss, grad


# -- image files ------------------------------------------------------------------


def _read_pgm(path: Path) -> np.ndarray:
    raw = path.read_bytes()
    tokens = []
    pos = 0
    while len(tokens) < 4:
        while raw[pos:pos + 1].isspace():
            pos += 1
        if raw[pos:pos + 1] == b"#":
            while raw[pos:pos + 1] not in (b"\n", b""):
                pos += 1
            continue
        start = pos
        while not raw[pos:pos + 1].isspace():
            pos += 1
        tokens.append(raw[start:pos])
    if tokens[0] != b"P5":
        raise ValueError(f"{path}: not a binary PGM")
    w, h, maxval = (int(t) for t in tokens[1:])
    if maxval > 255:
        raise ValueError(f"{path}: only 8-bit PGM is supported")
    pos += 1
    return np.frombuffer(raw, dtype=np.uint8, count=w * h, offset=pos).reshape(h, w)


def load_image(path) -> SilhouetteImage:
    """Load an 8-bit grayscale PNG or P5 PGM, scaled to [0, 1] by /255."""
    path = Path(path)
    if path.suffix.lower() == ".pgm":
        arr = _read_pgm(path)
    else:
        from PIL import Image

        with Image.open(path) as im:
            arr = np.asarray(im.convert("L"))
    return SilhouetteImage(arr.astype(np.float64) / 255.0)


def load_target(path) -> SilhouetteImage:
    """Load a target silhouette; pixels >= 128 are foreground."""
    img = load_image(path)
    return SilhouetteImage((np.rint(img.data * 255.0) >= 128).astype(np.float64))


def save_image(img: SilhouetteImage, path) -> None:
    path = Path(path)
    arr = np.rint(img.data * 255.0).astype(np.uint8)
    if path.suffix.lower() == ".pgm":
        h, w = arr.shape
        path.write_bytes(b"P5\n%d %d\n255\n" % (w, h) + arr.tobytes())
        return
    from PIL import Image

    Image.fromarray(arr, mode="L").save(path, format="PNG")
