"""Planar polygon meshes and the topological edits used to build them.

A :class:`Mesh2D` is an immutable indexed mesh: a vertex array, a tuple of
counter-clockwise face loops, and an edge list that is always re-derived
from the loops.  Every edit returns a new mesh.

Four topological edits are supported:

    - ``EdgeSplit``      insert a vertex on an edge (+1 V, +1 E)
    - ``EdgeExtrude``    grow a quad out of a boundary edge (+2 V, +3 E, +1 F)
    - ``FaceSubdivide``  centroid fan of a k-gon (+1 V, +k E, +(k-1) F)
    - ``FaceDelete``     remove a face and anything it orphans

Geometric edits are dense per-vertex translations (:class:`GeomAction`).
"""

from __future__ import annotations

import enum
import hashlib
import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

DEFAULT_EXTRUDE_LENGTH = 8.0


class MeshError(ValueError):
    """Raised for invalid mesh construction or an inapplicable edit."""


class TopoKind(str, enum.Enum):
    EDGE_SPLIT = "EdgeSplit"
    EDGE_EXTRUDE = "EdgeExtrude"
    FACE_SUBDIVIDE = "FaceSubdivide"
    FACE_DELETE = "FaceDelete"
    # placeholder step used by fixed-topology baselines; never enumerated
    NOOP = "NoOp"


_KIND_ORDER = {
    TopoKind.EDGE_SPLIT: 0,
    TopoKind.EDGE_EXTRUDE: 1,
    TopoKind.FACE_SUBDIVIDE: 2,
    TopoKind.FACE_DELETE: 3,
    TopoKind.NOOP: 4,
}


@dataclass(frozen=True)
class TopoAction:
    """One topological edit.

    ``target`` is an edge index for the edge kinds and a face index for the
    face kinds, always relative to the mesh the action is applied to.
    ``params`` holds ``(t,)`` for a split and ``(dx, dy)`` for an extrusion.
    """

    kind: TopoKind
    target: int = -1
    params: tuple[float, ...] = ()

    def sort_key(self) -> tuple:
        return (_KIND_ORDER[self.kind], self.target, self.params)

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "target": int(self.target), "params": [float(p) for p in self.params]}

    @classmethod
    def from_dict(cls, d: dict) -> "TopoAction":
        return cls(TopoKind(d["kind"]), int(d.get("target", -1)), tuple(float(p) for p in d.get("params", ())))


NOOP = TopoAction(TopoKind.NOOP)


@dataclass(frozen=True, eq=False)
class GeomAction:
    """Per-vertex translation field, one ``(dx, dy)`` row per vertex."""

    deltas: np.ndarray

    def __post_init__(self):
        d = np.array(self.deltas, dtype=np.float64).reshape(-1, 2)
        d.flags.writeable = False
        object.__setattr__(self, "deltas", d)

    @classmethod
    def zeros(cls, n: int) -> "GeomAction":
        return cls(np.zeros((n, 2)))

    def __len__(self) -> int:
        return len(self.deltas)

    def __eq__(self, other) -> bool:
        return isinstance(other, GeomAction) and np.array_equal(self.deltas, other.deltas)

    def max_norm(self) -> float:
        if len(self.deltas) == 0:
            return 0.0
        return float(np.max(np.hypot(self.deltas[:, 0], self.deltas[:, 1])))

    def to_dict(self) -> dict:
        return {"deltas": self.deltas.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "GeomAction":
        return cls(np.array(d["deltas"], dtype=np.float64).reshape(-1, 2))


def _derive_edges(faces: Sequence[Sequence[int]]) -> tuple[tuple[int, int], ...]:
    seen: dict[tuple[int, int], None] = {}
    for loop in faces:
        k = len(loop)
        for i in range(k):
            a, b = loop[i], loop[(i + 1) % k]
            key = (a, b) if a < b else (b, a)
            if key not in seen:
                seen[key] = None
    return tuple(seen)


def signed_area(points: np.ndarray) -> float:
    """Shoelace area; positive for counter-clockwise loops."""
    x, y = points[:, 0], points[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


@dataclass(frozen=True, eq=False)
class Mesh2D:
    """Immutable planar polygon mesh.

    Parameters
    ----------
    vertices : array_like, shape (n, 2)
        Positions in image-space units (x to the right, y down the rows).
    faces : sequence of int sequences
        Vertex loops, counter-clockwise in the shoelace sense.
    vertex_ids : sequence of int, optional
        Stable identities; defaults to ``range(n)``.
    next_vertex_id : int, optional
        Counter handed to the next created vertex.
    """

    vertices: np.ndarray
    faces: tuple[tuple[int, ...], ...]
    vertex_ids: tuple[int, ...] = field(default=())
    next_vertex_id: int = -1

    def __post_init__(self):
        v = np.array(self.vertices, dtype=np.float64).reshape(-1, 2)
        v.flags.writeable = False
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "faces", tuple(tuple(int(i) for i in f) for f in self.faces))
        ids = tuple(self.vertex_ids) if self.vertex_ids else tuple(range(len(v)))
        object.__setattr__(self, "vertex_ids", ids)
        if self.next_vertex_id < 0:
            object.__setattr__(self, "next_vertex_id", (max(ids) + 1) if ids else 0)
        self.validate()

    # -- structure ----------------------------------------------------------

    @cached_property
    def edges(self) -> tuple[tuple[int, int], ...]:
        return _derive_edges(self.faces)

    @cached_property
    def edge_index(self) -> dict[tuple[int, int], int]:
        return {e: i for i, e in enumerate(self.edges)}

    @cached_property
    def edge_faces(self) -> tuple[tuple[int, ...], ...]:
        """Faces incident to each edge, in face order."""
        inc: list[list[int]] = [[] for _ in self.edges]
        idx = self.edge_index
        for fi, loop in enumerate(self.faces):
            k = len(loop)
            for i in range(k):
                a, b = loop[i], loop[(i + 1) % k]
                inc[idx[(a, b) if a < b else (b, a)]].append(fi)
        return tuple(tuple(f) for f in inc)

    @cached_property
    def boundary_edges(self) -> tuple[int, ...]:
        return tuple(i for i, fs in enumerate(self.edge_faces) if len(fs) == 1)

    @cached_property
    def boundary_segments(self) -> np.ndarray:
        """Directed face-loop segments whose reverse does not also occur.

        Paired interior segments cancel in any winding sum, so this set
        carries the full winding number and traces the silhouette outline.
        """
        count: dict[tuple[int, int], int] = {}
        order: list[tuple[int, int]] = []
        for loop in self.faces:
            k = len(loop)
            for i in range(k):
                s = (loop[i], loop[(i + 1) % k])
                if s not in count:
                    order.append(s)
                    count[s] = 0
                count[s] += 1
        out = []
        for a, b in order:
            n = count[(a, b)] - count.get((b, a), 0)
            out.extend([(a, b)] * max(n, 0))
        segs = np.array(out, dtype=np.int64).reshape(-1, 2)
        segs.flags.writeable = False
        return segs

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    def face_points(self, f: int) -> np.ndarray:
        return self.vertices[list(self.faces[f])]

    def face_area(self, f: int) -> float:
        return signed_area(self.face_points(f))

    def validate(self, require_ccw: bool = False) -> None:
        """Check the structural invariants; raise :class:`MeshError` if broken.

        Orientation is only enforced with ``require_ccw`` since vertex motion
        is allowed to fold faces.
        """
        n = len(self.vertices)
        if not self.faces:
            raise MeshError("mesh has no faces")
        if not np.all(np.isfinite(self.vertices)):
            raise MeshError("non-finite vertex position")
        if len(self.vertex_ids) != n:
            raise MeshError("vertex_ids length mismatch")
        used = np.zeros(n, dtype=bool)
        directed: set[tuple[int, int]] = set()
        for loop in self.faces:
            if len(loop) < 3:
                raise MeshError(f"face {loop} has fewer than 3 vertices")
            if len(set(loop)) != len(loop):
                raise MeshError(f"face {loop} repeats a vertex")
            for i in loop:
                if not 0 <= i < n:
                    raise MeshError(f"face {loop} references missing vertex {i}")
                used[i] = True
            k = len(loop)
            for i in range(k):
                s = (loop[i], loop[(i + 1) % k])
                if s in directed:
                    raise MeshError(f"directed edge {s} used twice")
                directed.add(s)
        if not used.all():
            raise MeshError("isolated vertex")
        if any(len(fs) > 2 for fs in self.edge_faces):
            raise MeshError("edge bounds more than two faces")
        if require_ccw:
            for f in range(len(self.faces)):
                if self.face_area(f) <= 0.0:
                    raise MeshError(f"face {f} is not counter-clockwise")

    # -- identity -----------------------------------------------------------

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(self.vertices.tobytes())
        h.update(repr(self.faces).encode())
        return h.hexdigest()

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Mesh2D)
            and self.faces == other.faces
            and np.array_equal(self.vertices, other.vertices)
        )

    def __hash__(self) -> int:
        return hash(self.digest())

    def __repr__(self) -> str:
        v, e, f = euler_counts(self)
        return f"Mesh2D(|V|={v}, |E|={e}, |F|={f})"

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        return {"vertices": self.vertices.tolist(), "faces": [list(f) for f in self.faces]}

    @classmethod
    def from_dict(cls, d: dict) -> "Mesh2D":
        return cls(np.array(d["vertices"], dtype=np.float64).reshape(-1, 2), d["faces"])

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, s: str) -> "Mesh2D":
        return cls.from_dict(json.loads(s))


# -- constructors -------------------------------------------------------------


def new_rect(center: Sequence[float], width: float, height: float) -> Mesh2D:
    """Axis-aligned rectangle: 4 vertices, 4 edges, 1 counter-clockwise face."""
    if not (width > 0 and height > 0):
        raise MeshError(f"rectangle needs positive size, got {width}x{height}")
    cx, cy = float(center[0]), float(center[1])
    hw, hh = 0.5 * width, 0.5 * height
    verts = [(cx - hw, cy - hh), (cx + hw, cy - hh), (cx + hw, cy + hh), (cx - hw, cy + hh)]
    return Mesh2D(np.array(verts), [(0, 1, 2, 3)])


def new_subdivided_rect(center: Sequence[float], width: float, height: float, splits: int = 2) -> Mesh2D:
    """Rectangle cut into a ``(splits+1) x (splits+1)`` grid of quads.

    The default gives the 16-vertex, 24-edge, 9-face starting shape.
    """
    if not (width > 0 and height > 0):
        raise MeshError(f"rectangle needs positive size, got {width}x{height}")
    if splits < 0:
        raise MeshError("splits must be non-negative")
    n = splits + 2
    xs = np.linspace(center[0] - 0.5 * width, center[0] + 0.5 * width, n)
    ys = np.linspace(center[1] - 0.5 * height, center[1] + 0.5 * height, n)
    verts = [(x, y) for y in ys for x in xs]
    faces = []
    for r in range(n - 1):
        for c in range(n - 1):
            i = r * n + c
            faces.append((i, i + 1, i + n + 1, i + n))
    return Mesh2D(np.array(verts), faces)


def default_rect(res: tuple[int, int]) -> Mesh2D:
    """Starting rectangle for a ``(w, h)`` canvas: centred, 3/8 x 1/4 of it."""
    w, h = res
    return new_rect((w / 2, h / 2), 0.375 * w, 0.25 * h)


def default_subdivided_rect(res: tuple[int, int]) -> Mesh2D:
    w, h = res
    return new_subdivided_rect((w / 2, h / 2), 0.375 * w, 0.25 * h)


def euler_counts(mesh: Mesh2D) -> tuple[int, int, int]:
    return len(mesh.vertices), len(mesh.edges), len(mesh.faces)


# -- topological edits ----------------------------------------------------------


def _directed_owner(mesh: Mesh2D, a: int, b: int) -> tuple[int, int]:
    """Face index and loop position of the directed segment a->b."""
    for fi, loop in enumerate(mesh.faces):
        k = len(loop)
        for i in range(k):
            if loop[i] == a and loop[(i + 1) % k] == b:
                return fi, i
    raise MeshError(f"no face traverses {a}->{b}")


def boundary_edge_direction(mesh: Mesh2D, e: int) -> tuple[int, int]:
    """Endpoints of boundary edge ``e`` in the order its face walks them."""
    a, b = mesh.edges[e]
    (f,) = mesh.edge_faces[e]
    loop = mesh.faces[f]
    k = len(loop)
    i = loop.index(a)
    return (a, b) if loop[(i + 1) % k] == b else (b, a)


def outward_offset(mesh: Mesh2D, e: int, length: float = DEFAULT_EXTRUDE_LENGTH) -> tuple[float, float]:
    """Outward normal of boundary edge ``e`` scaled to ``length``."""
    a, b = boundary_edge_direction(mesh, e)
    dx, dy = mesh.vertices[b] - mesh.vertices[a]
    norm = float(np.hypot(dx, dy))
    if norm == 0.0:
        return (0.0, 0.0)
    # interior lies left of a->b for a positive-area loop
    return (float(dy) / norm * length, float(-dx) / norm * length)


def _rebuild(mesh: Mesh2D, vertices: np.ndarray, faces: list, ids: list, next_id: int) -> Mesh2D:
    return Mesh2D(vertices, faces, tuple(ids), next_id)


def _split(mesh: Mesh2D, e: int, t: float) -> Mesh2D:
    if not 0.0 < t < 1.0:
        raise MeshError(f"split parameter must lie in (0, 1), got {t}")
    i, j = mesh.edges[e]
    pi, pj = mesh.vertices[i], mesh.vertices[j]
    w = len(mesh.vertices)
    verts = np.vstack([mesh.vertices, pi + t * (pj - pi)])
    faces = []
    for loop in mesh.faces:
        k = len(loop)
        out = []
        for n in range(k):
            a, b = loop[n], loop[(n + 1) % k]
            out.append(a)
            if (a, b) in ((i, j), (j, i)):
                out.append(w)
        faces.append(tuple(out))
    return _rebuild(mesh, verts, faces, list(mesh.vertex_ids) + [mesh.next_vertex_id], mesh.next_vertex_id + 1)


def _extrude(mesh: Mesh2D, e: int, offset: Sequence[float]) -> Mesh2D:
    if len(mesh.edge_faces[e]) != 1:
        raise MeshError(f"edge {e} is interior; only boundary edges extrude")
    off = np.asarray(offset, dtype=np.float64)
    if off.shape != (2,) or not np.all(np.isfinite(off)):
        raise MeshError(f"bad extrusion offset {offset!r}")
    a, b = boundary_edge_direction(mesh, e)
    n = len(mesh.vertices)
    verts = np.vstack([mesh.vertices, mesh.vertices[a] + off, mesh.vertices[b] + off])
    # new quad walks b->a so the shared edge is traversed both ways
    faces = list(mesh.faces) + [(a, n, n + 1, b)]
    nid = mesh.next_vertex_id
    return _rebuild(mesh, verts, faces, list(mesh.vertex_ids) + [nid, nid + 1], nid + 2)


def _subdivide(mesh: Mesh2D, f: int) -> Mesh2D:
    loop = mesh.faces[f]
    c = len(mesh.vertices)
    verts = np.vstack([mesh.vertices, mesh.face_points(f).mean(axis=0)])
    k = len(loop)
    fan = [(loop[i], loop[(i + 1) % k], c) for i in range(k)]
    faces = list(mesh.faces[:f]) + fan + list(mesh.faces[f + 1:])
    return _rebuild(mesh, verts, faces, list(mesh.vertex_ids) + [mesh.next_vertex_id], mesh.next_vertex_id + 1)


def _delete(mesh: Mesh2D, f: int) -> Mesh2D:
    if len(mesh.faces) == 1:
        raise MeshError("cannot delete the last face")
    faces = [loop for i, loop in enumerate(mesh.faces) if i != f]
    keep = sorted({v for loop in faces for v in loop})
    remap = {old: new for new, old in enumerate(keep)}
    faces = [tuple(remap[v] for v in loop) for loop in faces]
    ids = [mesh.vertex_ids[v] for v in keep]
    return _rebuild(mesh, mesh.vertices[keep], faces, ids, mesh.next_vertex_id)


def apply_topo(mesh: Mesh2D, action: TopoAction) -> Mesh2D:
    """Apply one topological edit and return the new mesh.

    Raises
    ------
    MeshError
        Target out of range, extrusion of an interior edge, deleting the last
        face, or a split parameter outside (0, 1).
    """
    kind = action.kind
    if kind is TopoKind.NOOP:
        return mesh
    if kind in (TopoKind.EDGE_SPLIT, TopoKind.EDGE_EXTRUDE):
        if not 0 <= action.target < len(mesh.edges):
            raise MeshError(f"edge index {action.target} out of range")
    elif not 0 <= action.target < len(mesh.faces):
        raise MeshError(f"face index {action.target} out of range")

    if kind is TopoKind.EDGE_SPLIT:
        t = action.params[0] if action.params else 0.5
        return _split(mesh, action.target, float(t))
    if kind is TopoKind.EDGE_EXTRUDE:
        if len(action.params) != 2:
            raise MeshError("extrusion needs a 2-vector offset")
        return _extrude(mesh, action.target, action.params)
    if kind is TopoKind.FACE_SUBDIVIDE:
        return _subdivide(mesh, action.target)
    return _delete(mesh, action.target)


def enumerate_valid_actions(mesh: Mesh2D, extrude_length: float = DEFAULT_EXTRUDE_LENGTH) -> list[TopoAction]:
    """All canonical edits of ``mesh``, ordered by kind then element index."""
    acts = [TopoAction(TopoKind.EDGE_SPLIT, e, (0.5,)) for e in range(len(mesh.edges))]
    acts += [
        TopoAction(TopoKind.EDGE_EXTRUDE, e, outward_offset(mesh, e, extrude_length))
        for e in mesh.boundary_edges
    ]
    acts += [TopoAction(TopoKind.FACE_SUBDIVIDE, f) for f in range(len(mesh.faces))]
    if len(mesh.faces) > 1:
        acts += [TopoAction(TopoKind.FACE_DELETE, f) for f in range(len(mesh.faces))]
    return acts


def apply_geom(mesh: Mesh2D, action: GeomAction) -> Mesh2D:
    """Translate every vertex by its delta; topology is untouched."""
    d = action.deltas
    if d.shape != mesh.vertices.shape:
        raise MeshError(f"{len(d)} deltas for {len(mesh.vertices)} vertices")
    if not np.all(np.isfinite(d)):
        raise MeshError("non-finite vertex delta")
    return Mesh2D(mesh.vertices + d, mesh.faces, mesh.vertex_ids, mesh.next_vertex_id)


def replay(initial: Mesh2D, steps: Iterable[tuple[TopoAction, GeomAction]]) -> Mesh2D:
    mesh = initial
    for topo, geom in steps:
        mesh = apply_geom(apply_topo(mesh, topo), geom)
    return mesh
