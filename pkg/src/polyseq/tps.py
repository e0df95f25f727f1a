"""Thin-plate-spline image warping and mesh re-embedding.

Used as a cheap stand-in for per-vertex optimisation: fit a TPS so that the
warped render of the current shape matches the target image, then carry the
mesh vertices along with the warp through barycentric coordinates on a
control grid.

Coordinates are normalised to the unit square: pixel column ``c`` of a
``W``-wide image has centre ``x = (c + 0.5) / W`` (likewise for rows).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .mesh import GeomAction, Mesh2D
from .raster import DEFAULT_SIGMA, SilhouetteImage, render_soft

IDENTITY_AFFINE = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])


@dataclass(frozen=True, eq=False)
class TpsParams:
    """Affine part ``A`` (2x3) plus control-point displacements ``D`` (MxMx2).

    ``D[i, j]`` belongs to the node in grid row ``i`` (y) and column ``j`` (x).
    """

    affine: np.ndarray
    displacement: np.ndarray

    def __post_init__(self):
        a = np.array(self.affine, dtype=np.float64).reshape(2, 3)
        d = np.array(self.displacement, dtype=np.float64)
        if d.ndim != 3 or d.shape[0] != d.shape[1] or d.shape[2] != 2 or d.shape[0] < 2:
            raise ValueError(f"displacement must be MxMx2 with M >= 2, got {d.shape}")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(d))):
            raise ValueError("TPS parameters must be finite")
        a.flags.writeable = False
        d.flags.writeable = False
        object.__setattr__(self, "affine", a)
        object.__setattr__(self, "displacement", d)

    @property
    def m(self) -> int:
        return self.displacement.shape[0]

    @classmethod
    def identity(cls, m: int = 8) -> "TpsParams":
        return cls(IDENTITY_AFFINE, np.zeros((m, m, 2)))

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.affine.ravel(), self.displacement.ravel()])

    @classmethod
    def from_vector(cls, vec: np.ndarray, m: int) -> "TpsParams":
        return cls(vec[:6].reshape(2, 3), vec[6:].reshape(m, m, 2))

    def to_json(self) -> str:
        return json.dumps({"affine": self.affine.tolist(), "displacement": self.displacement.tolist()})

    @classmethod
    def from_json(cls, s: str) -> "TpsParams":
        d = json.loads(s)
        return cls(np.array(d["affine"]), np.array(d["displacement"]))


@dataclass(frozen=True, eq=False)
class WarpGrid:
    """M x M node positions; each cell splits along its (low, low)-(high, high) diagonal."""

    nodes: np.ndarray

    def __post_init__(self):
        n = np.array(self.nodes, dtype=np.float64)
        if n.ndim != 3 or n.shape[0] != n.shape[1] or n.shape[2] != 2 or n.shape[0] < 2:
            raise ValueError(f"grid nodes must be MxMx2 with M >= 2, got {n.shape}")
        if not np.all(np.isfinite(n)):
            raise ValueError("grid nodes must be finite")
        n.flags.writeable = False
        object.__setattr__(self, "nodes", n)

    @property
    def m(self) -> int:
        return self.nodes.shape[0]

    @classmethod
    def regular(cls, m: int = 8) -> "WarpGrid":
        return cls(control_points(m).reshape(m, m, 2))

    def triangles(self) -> np.ndarray:
        """Node index triples, cell by cell, lower triangle first."""
        return _grid_triangles(self.m)

    def flat(self) -> np.ndarray:
        return self.nodes.reshape(-1, 2)


@lru_cache(maxsize=None)
def _grid_triangles(m: int) -> np.ndarray:
    tris = []
    for i in range(m - 1):
        for j in range(m - 1):
            c00 = i * m + j
            c10 = c00 + 1
            c01 = c00 + m
            c11 = c01 + 1
            tris.append((c00, c10, c11))
            tris.append((c00, c11, c01))
    out = np.array(tris, dtype=np.int64)
    out.flags.writeable = False
    return out


@lru_cache(maxsize=None)
def control_points(m: int) -> np.ndarray:
    """Regular ``m x m`` nodes on the unit square, row-major (row = y)."""
    t = np.linspace(0.0, 1.0, m)
    ys, xs = np.meshgrid(t, t, indexing="ij")
    pts = np.stack([xs.ravel(), ys.ravel()], axis=1)
    pts.flags.writeable = False
    return pts


def tps_kernel(r: np.ndarray) -> np.ndarray:
    """r^2 log r with the r -> 0 limit taken as 0."""
    r = np.asarray(r, dtype=np.float64)
    out = np.zeros_like(r)
    nz = r > 0
    out[nz] = r[nz] ** 2 * np.log(r[nz])
    return out


@lru_cache(maxsize=None)
def _solver(m: int) -> np.ndarray:
    """Map from node displacements to (kernel weights, affine coefficients).

    Solves the usual bordered TPS system; the displacement field gets its own
    affine component, so the fitted transform reproduces ``A c_i + D_i`` at
    every node ``c_i``.
    """
    c = control_points(m)
    n = len(c)
    k = tps_kernel(np.linalg.norm(c[:, None, :] - c[None, :, :], axis=-1))
    p = np.hstack([np.ones((n, 1)), c])
    lmat = np.zeros((n + 3, n + 3))
    lmat[:n, :n] = k
    lmat[:n, n:] = p
    lmat[n:, :n] = p.T
    rhs = np.vstack([np.eye(n), np.zeros((3, n))])
    try:
        sol = np.linalg.solve(lmat, rhs)
    except np.linalg.LinAlgError as exc:
        raise ValueError(f"singular TPS system for M={m}") from exc
    sol.flags.writeable = False
    return sol


def displacement_basis(points: np.ndarray, m: int) -> np.ndarray:
    """Matrix ``B`` with ``displacement(points) = B @ D.reshape(-1, 2)``."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    c = control_points(m)
    u = tps_kernel(np.linalg.norm(pts[:, None, :] - c[None, :, :], axis=-1))
    row = np.hstack([u, np.ones((len(pts), 1)), pts])
    return row @ _solver(m)


@lru_cache(maxsize=16)
def _pixel_basis(m: int, width: int, height: int):
    q = pixel_centers(width, height)
    b = displacement_basis(q, m)
    qh = np.hstack([q, np.ones((len(q), 1))])
    b.flags.writeable = False
    qh.flags.writeable = False
    return qh, b


def pixel_centers(width: int, height: int) -> np.ndarray:
    xs = (np.arange(width) + 0.5) / width
    ys = (np.arange(height) + 0.5) / height
    yy, xx = np.meshgrid(ys, xs, indexing="ij")
    return np.stack([xx.ravel(), yy.ravel()], axis=1)


def tps_transform(theta: TpsParams, p) -> np.ndarray:
    """Evaluate ``T(p) = A [p; 1] + sum_i w_i phi(|p - c_i|)`` (plus the field's own affine part).

    Accepts a single point or an ``(n, 2)`` array.
    """
    pts = np.asarray(p, dtype=np.float64)
    single = pts.ndim == 1
    pts = pts.reshape(-1, 2)
    out = pts @ theta.affine[:, :2].T + theta.affine[:, 2]
    out = out + displacement_basis(pts, theta.m) @ theta.displacement.reshape(-1, 2)
    return out[0] if single else out


def _bilinear(img: np.ndarray, sx: np.ndarray, sy: np.ndarray):
    """Zero-padded bilinear samples at pixel-index coordinates, with derivatives."""
    h, w = img.shape
    x0 = np.floor(sx)
    y0 = np.floor(sy)
    fx = sx - x0
    fy = sy - y0
    x0 = x0.astype(np.int64)
    y0 = y0.astype(np.int64)

    def tap(yy, xx):
        ok = (xx >= 0) & (xx < w) & (yy >= 0) & (yy < h)
        return np.where(ok, img[np.clip(yy, 0, h - 1), np.clip(xx, 0, w - 1)], 0.0)

    v00 = tap(y0, x0)
    v10 = tap(y0, x0 + 1)
    v01 = tap(y0 + 1, x0)
    v11 = tap(y0 + 1, x0 + 1)
    val = (1 - fx) * (1 - fy) * v00 + fx * (1 - fy) * v10 + (1 - fx) * fy * v01 + fx * fy * v11
    dx = (1 - fy) * (v10 - v00) + fy * (v11 - v01)
    dy = (1 - fx) * (v01 - v00) + fx * (v11 - v10)
    return val, dx, dy


def _warp_flat(vec: np.ndarray, m: int, src: np.ndarray, with_grad: bool = False):
    h, w = src.shape
    qh, b = _pixel_basis(m, w, h)
    a = vec[:6].reshape(2, 3)
    d = vec[6:].reshape(-1, 2)
    t = qh @ a.T + b @ d
    out = _bilinear(src, t[:, 0] * w - 0.5, t[:, 1] * h - 0.5)
    return out if with_grad else out[0]


def warp_image(theta: TpsParams, source: SilhouetteImage) -> SilhouetteImage:
    """Output pixel ``q`` reads ``source`` at ``T(q)`` by bilinear sampling.

    Samples falling outside the source read 0.
    """
    vals = _warp_flat(theta.to_vector(), theta.m, source.data)
    return SilhouetteImage(np.clip(vals.reshape(source.data.shape), 0.0, 1.0))


def warp_loss(theta: TpsParams, source: SilhouetteImage, target: SilhouetteImage) -> float:
    """L2 norm of the warped source minus the target."""
    vals = _warp_flat(theta.to_vector(), theta.m, source.data)
    return float(np.linalg.norm(vals - target.data.ravel()))


def _loss_and_grad(vec, m, src, tgt):
    h, w = src.shape
    qh, b = _pixel_basis(m, w, h)
    val, dx, dy = _warp_flat(vec, m, src, with_grad=True)
    r = val - tgt
    loss = float(np.linalg.norm(r))
    if loss == 0.0:
        return loss, np.zeros_like(vec)
    g = np.stack([r * dx * w, r * dy * h], axis=1) / loss
    ga = g.T @ qh
    gd = b.T @ g
    return loss, np.concatenate([ga.ravel(), gd.ravel()])


@dataclass(frozen=True)
class TpsConfig:
    m: int = 8
    iterations: int = 100
    sigma: float = DEFAULT_SIGMA
    # initial / largest parameter step, in pixels of motion
    step_px: float = 1.0
    max_step_px: float = 8.0
    max_halvings: int = 20

    def __post_init__(self):
        if self.m < 2:
            raise ValueError("M must be >= 2")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")


def fit_tps(
    source: SilhouetteImage,
    target: SilhouetteImage,
    m: int = 8,
    iterations: int = 100,
    cfg: TpsConfig | None = None,
    return_trace: bool = False,
):
    """Fit TPS parameters so that ``warp_image(theta, source)`` matches ``target``.

    Gradient descent from the identity on the L2 warp loss.  Steps move along
    the gradient scaled to a fixed largest parameter change (in pixels);
    that length halves on a rejected step and doubles after an accepted one.
    Returns the best parameters seen (and the accepted-loss trace if asked).
    """
    if source.data.shape != target.data.shape:
        raise ValueError(f"resolution mismatch {source.res} vs {target.res}")
    cfg = cfg or TpsConfig(m=m, iterations=iterations)
    m = cfg.m
    h, w = source.data.shape
    src = source.data
    tgt = target.data.ravel()
    px = 1.0 / max(w, h)
    vec = TpsParams.identity(m).to_vector()
    loss, grad = _loss_and_grad(vec, m, src, tgt)
    trace = [loss]
    step = cfg.step_px * px
    for _ in range(cfg.iterations):
        gmax = float(np.max(np.abs(grad)))
        if gmax == 0.0:
            break
        accepted = False
        for _ in range(cfg.max_halvings + 1):
            trial = vec - (step / gmax) * grad
            loss_t, grad_t = _loss_and_grad(trial, m, src, tgt)
            if loss_t < loss:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        vec, loss, grad = trial, loss_t, grad_t
        trace.append(loss)
        step = min(2.0 * step, cfg.max_step_px * px)
    theta = TpsParams.from_vector(vec, m)
    return (theta, trace) if return_trace else theta


def barycentric_embed(points: np.ndarray, grid: WarpGrid) -> tuple[np.ndarray, np.ndarray]:
    """Containing triangle index and barycentric weights of each point.

    Points outside every triangle fall back to the triangle whose smallest
    weight is largest, with negative weights clipped and renormalised; this
    clamps them onto the grid hull.
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    tris = grid.triangles()
    nodes = grid.flat()
    a, b, c = nodes[tris[:, 0]], nodes[tris[:, 1]], nodes[tris[:, 2]]
    v0 = b - a
    v1 = c - a
    den = v0[:, 0] * v1[:, 1] - v1[:, 0] * v0[:, 1]
    safe = np.where(den != 0, den, 1.0)
    rel = pts[:, None, :] - a[None, :, :]
    beta = (rel[..., 0] * v1[None, :, 1] - v1[None, :, 0] * rel[..., 1]) / safe
    gamma = (v0[None, :, 0] * rel[..., 1] - rel[..., 0] * v0[None, :, 1]) / safe
    alpha = 1.0 - beta - gamma
    w = np.stack([alpha, beta, gamma], axis=-1)
    w[:, den == 0, :] = -np.inf
    wmin = w.min(axis=-1)
    tol = -1e-12
    inside = wmin >= tol
    idx = np.where(inside.any(axis=1), np.argmax(inside, axis=1), np.argmax(wmin, axis=1))
    bary = w[np.arange(len(pts)), idx]
    outside = ~inside.any(axis=1)
    if outside.any():
        clipped = np.clip(bary[outside], 0.0, None)
        bary[outside] = clipped / clipped.sum(axis=1, keepdims=True)
    return idx, bary


def warp_mesh(mesh: Mesh2D, grid: WarpGrid, warped_grid: WarpGrid, res=None) -> Mesh2D:
    """Move each vertex from its triangle in ``grid`` to the matching one in ``warped_grid``.

    Grids live in normalised coordinates.  With ``res=(w, h)`` the mesh is
    taken to be in pixel units and converted on the way in and out.
    """
    if grid.m != warped_grid.m:
        raise ValueError("grids must share M")
    scale = np.array([1.0, 1.0]) if res is None else np.array(res, dtype=np.float64)
    pts = mesh.vertices / scale
    idx, bary = barycentric_embed(pts, grid)
    tris = grid.triangles()[idx]
    nodes = warped_grid.flat()
    new = (
        bary[:, 0:1] * nodes[tris[:, 0]] + bary[:, 1:2] * nodes[tris[:, 1]] + bary[:, 2:3] * nodes[tris[:, 2]]
    )
    return Mesh2D(new * scale, mesh.faces, mesh.vertex_ids, mesh.next_vertex_id)


def warped_grid(theta: TpsParams) -> WarpGrid:
    m = theta.m
    return WarpGrid(tps_transform(theta, control_points(m)).reshape(m, m, 2))


def fast_estimate(mesh: Mesh2D, target: SilhouetteImage, cfg: TpsConfig = TpsConfig()) -> GeomAction:
    """Per-vertex deltas implied by a TPS fit of the rendered mesh to ``target``.

    Output pixel ``q`` shows source content from ``T(q)``, so content moves
    by the inverse of ``T``.  The mesh follows the content: each vertex is
    located in the forward-warped grid and mapped back to the regular one.
    """
    res = target.res
    src = render_soft(mesh, res, cfg.sigma)
    theta = fit_tps(src, target, cfg=cfg)
    moved = warp_mesh(mesh, warped_grid(theta), WarpGrid.regular(cfg.m), res=res)
    return GeomAction(moved.vertices - mesh.vertices)
