"""Shape-matching, complexity and self-intersection measures."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from .mesh import Mesh2D, euler_counts
from .raster import SilhouetteImage

ORIENT_EPS = 1e-9


@dataclass(frozen=True)
class MetricsReport:
    iou: float
    complexity: int
    self_intersections: int

    def to_json(self) -> str:
        return json.dumps(asdict(self))


def iou(a: SilhouetteImage, b: SilhouetteImage) -> float:
    """Intersection over union of two binary images (1.0 when both are empty)."""
    if a.data.shape != b.data.shape:
        raise ValueError(f"resolution mismatch {a.res} vs {b.res}")
    ma = a.data >= 0.5
    mb = b.data >= 0.5
    union = np.count_nonzero(ma | mb)
    if union == 0:
        return 1.0
    return np.count_nonzero(ma & mb) / union


def complexity(mesh: Mesh2D) -> int:
    return sum(euler_counts(mesh))


def _normalized(mesh: Mesh2D) -> np.ndarray:
    v = mesh.vertices
    lo = v.min(axis=0)
    scale = float(np.max(v.max(axis=0) - lo))
    if scale == 0.0:
        scale = 1.0
    return (v - lo) / scale


def crossing_pairs(mesh: Mesh2D) -> np.ndarray:
    """Index pairs ``(i, j)``, ``i < j``, of edges that cross or overlap.

    Two edges count when they cross at a point interior to both, or when
    they are collinear and share a segment of positive length.  Edges with
    a common vertex are never counted, and neither is a touch at an
    endpoint.  Orientation tests use a 1e-9 tolerance after scaling the
    mesh to the unit box.
    """
    edges = np.array(mesh.edges, dtype=np.int64).reshape(-1, 2)
    m = len(edges)
    if m < 2:
        return np.empty((0, 2), dtype=np.int64)
    iu, ju = np.triu_indices(m, k=1)
    ei, ej = edges[iu], edges[ju]
    disjoint = (
        (ei[:, 0] != ej[:, 0]) & (ei[:, 0] != ej[:, 1]) & (ei[:, 1] != ej[:, 0]) & (ei[:, 1] != ej[:, 1])
    )
    iu, ju, ei, ej = iu[disjoint], ju[disjoint], ei[disjoint], ej[disjoint]
    v = _normalized(mesh)
    p1, p2, q1, q2 = v[ei[:, 0]], v[ei[:, 1]], v[ej[:, 0]], v[ej[:, 1]]

    def orient(a, b, c):
        val = (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0])
        return np.where(np.abs(val) <= ORIENT_EPS, 0, np.sign(val)).astype(np.int8)

    o1, o2 = orient(p1, p2, q1), orient(p1, p2, q2)
    o3, o4 = orient(q1, q2, p1), orient(q1, q2, p2)
    proper = (o1 * o2 < 0) & (o3 * o4 < 0)

    collinear = (o1 == 0) & (o2 == 0) & (o3 == 0) & (o4 == 0)
    d = p2 - p1
    dn = np.einsum("ij,ij->i", d, d)
    dn = np.where(dn > 0, dn, 1.0)
    # project the second edge onto the first and measure the shared interval
    s1 = np.einsum("ij,ij->i", q1 - p1, d) / dn
    s2 = np.einsum("ij,ij->i", q2 - p1, d) / dn
    lo = np.maximum(0.0, np.minimum(s1, s2))
    hi = np.minimum(1.0, np.maximum(s1, s2))
    overlap = collinear & ((hi - lo) * np.sqrt(dn) > ORIENT_EPS)

    hit = proper | overlap
    return np.stack([iu[hit], ju[hit]], axis=1)


def self_intersections(mesh: Mesh2D) -> int:
    return len(crossing_pairs(mesh))


def measure(mesh: Mesh2D, rendered: SilhouetteImage, target: SilhouetteImage) -> MetricsReport:
    return MetricsReport(iou(rendered, target), complexity(mesh), self_intersections(mesh))
