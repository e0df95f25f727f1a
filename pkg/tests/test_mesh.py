import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from polyseq.mesh import (
    GeomAction,
    Mesh2D,
    MeshError,
    NOOP,
    TopoAction,
    TopoKind,
    apply_geom,
    apply_topo,
    enumerate_valid_actions,
    euler_counts,
    new_rect,
    new_subdivided_rect,
    signed_area,
)


def kinds(actions):
    out = {}
    for a in actions:
        out[a.kind] = out.get(a.kind, 0) + 1
    return out


def grid_edge_oracle(n_cells=3):
    """Count boundary / interior edges of an n x n quad grid by listing them."""
    n = n_cells + 1
    edges = []
    for r in range(n):
        for c in range(n - 1):
            edges.append(("h", r, c))
    for r in range(n - 1):
        for c in range(n):
            edges.append(("v", r, c))
    boundary = [e for e in edges if (e[0] == "h" and e[1] in (0, n - 1)) or (e[0] == "v" and e[2] in (0, n - 1))]
    return len(edges), len(boundary)


def test_new_rect_counts_and_area():
    m = new_rect((32, 32), 20, 10)
    assert euler_counts(m) == (4, 4, 1)
    assert sum(euler_counts(m)) == 9
    assert m.face_area(0) == pytest.approx(200.0)
    m.validate(require_ccw=True)


@pytest.mark.parametrize("w,h", [(0, 1), (1, 0), (-2, 3)])
def test_new_rect_rejects_bad_size(w, h):
    with pytest.raises(MeshError):
        new_rect((0, 0), w, h)


def test_subdivided_rect():
    m = new_subdivided_rect((32, 32), 24, 16)
    assert euler_counts(m) == (16, 24, 9)
    assert sum(euler_counts(m)) == 49
    total, boundary = grid_edge_oracle(3)
    assert total == 24
    assert len(m.boundary_edges) == boundary == 12
    assert sum(len(f) == 2 for f in m.edge_faces) == 12
    m.validate(require_ccw=True)


def test_split_midpoint():
    m = Mesh2D(np.array([(0.0, 0.0), (2.0, 0.0), (2.0, 1.0), (0.0, 1.0)]), [(0, 1, 2, 3)])
    e = m.edges.index((0, 1))
    out = apply_topo(m, TopoAction(TopoKind.EDGE_SPLIT, e, (0.5,)))
    assert euler_counts(out) == (5, 5, 1)
    np.testing.assert_array_equal(out.vertices[4], [1.0, 0.0])
    assert out.faces[0] == (0, 4, 1, 2, 3)


def test_subdivide_fan_oracle():
    m = new_rect((0.5, 0.5), 1, 1)
    out = apply_topo(m, TopoAction(TopoKind.FACE_SUBDIVIDE, 0))
    assert euler_counts(out) == (5, 8, 4)
    # enumerate the fan by hand: 4 rim edges + 4 spokes, one triangle per rim edge
    c = 4
    rim = {(0, 1), (1, 2), (2, 3), (0, 3)}
    spokes = {(i, c) for i in range(4)}
    assert set(out.edges) == rim | spokes
    assert sorted(out.faces) == sorted([(0, 1, 4), (1, 2, 4), (2, 3, 4), (3, 0, 4)])
    np.testing.assert_allclose(out.vertices[c], [0.5, 0.5])
    out.validate(require_ccw=True)


def test_delete_corner_of_grid():
    m = new_subdivided_rect((32, 32), 24, 16)
    out = apply_topo(m, TopoAction(TopoKind.FACE_DELETE, 0))
    # corner face: its outer corner vertex and two outer edges are orphaned
    assert euler_counts(out) == (15, 22, 8)
    assert len(out.boundary_edges) == 12
    out.validate(require_ccw=True)


def test_delete_center_of_grid_makes_hole():
    m = new_subdivided_rect((32, 32), 24, 16)
    out = apply_topo(m, TopoAction(TopoKind.FACE_DELETE, 4))
    assert euler_counts(out) == (16, 24, 8)
    assert len(out.boundary_edges) == 16


def test_extrude_counts_and_orientation():
    m = new_rect((32, 32), 20, 10)
    acts = [a for a in enumerate_valid_actions(m) if a.kind is TopoKind.EDGE_EXTRUDE]
    for a in acts:
        out = apply_topo(m, a)
        assert euler_counts(out) == (6, 7, 2)
        out.validate(require_ccw=True)
        i, j = m.edges[a.target]
        edge_len = np.linalg.norm(m.vertices[i] - m.vertices[j])
        assert out.face_area(1) == pytest.approx(8.0 * edge_len, rel=1e-12)


def test_extrude_interior_edge_rejected():
    m = new_subdivided_rect((32, 32), 24, 16)
    interior = next(i for i, f in enumerate(m.edge_faces) if len(f) == 2)
    with pytest.raises(MeshError):
        apply_topo(m, TopoAction(TopoKind.EDGE_EXTRUDE, interior, (1.0, 0.0)))


def test_error_cases():
    m = new_rect((0, 0), 2, 2)
    with pytest.raises(MeshError):
        apply_topo(m, TopoAction(TopoKind.FACE_DELETE, 0))
    with pytest.raises(MeshError):
        apply_topo(m, TopoAction(TopoKind.EDGE_SPLIT, 0, (1.0,)))
    with pytest.raises(MeshError):
        apply_topo(m, TopoAction(TopoKind.EDGE_SPLIT, 0, (0.0,)))
    with pytest.raises(MeshError):
        apply_topo(m, TopoAction(TopoKind.EDGE_SPLIT, 4, (0.5,)))
    with pytest.raises(MeshError):
        apply_topo(m, TopoAction(TopoKind.FACE_SUBDIVIDE, 1))
    with pytest.raises(MeshError):
        apply_topo(m, TopoAction(TopoKind.EDGE_EXTRUDE, 0, (np.inf, 0.0)))


def test_enumerate_counts():
    rect = new_rect((32, 32), 20, 10)
    acts = enumerate_valid_actions(rect)
    assert len(acts) == 9
    assert kinds(acts) == {TopoKind.EDGE_SPLIT: 4, TopoKind.EDGE_EXTRUDE: 4, TopoKind.FACE_SUBDIVIDE: 1}
    grid = new_subdivided_rect((32, 32), 24, 16)
    acts = enumerate_valid_actions(grid)
    assert len(acts) == 54
    assert kinds(acts) == {
        TopoKind.EDGE_SPLIT: 24,
        TopoKind.EDGE_EXTRUDE: 12,
        TopoKind.FACE_SUBDIVIDE: 9,
        TopoKind.FACE_DELETE: 9,
    }
    assert acts == enumerate_valid_actions(grid)
    assert acts == sorted(acts, key=lambda a: a.sort_key())


def test_canonical_extrusion_points_outward():
    m = new_rect((10, 10), 4, 2)
    for a in enumerate_valid_actions(m, extrude_length=3.0):
        if a.kind is TopoKind.EDGE_EXTRUDE:
            i, j = m.edges[a.target]
            mid = 0.5 * (m.vertices[i] + m.vertices[j])
            assert np.hypot(*a.params) == pytest.approx(3.0)
            assert np.dot(mid - np.array([10.0, 10.0]), a.params) > 0


def test_apply_geom():
    m = new_rect((32, 32), 20, 10)
    assert apply_geom(m, GeomAction.zeros(4)) == m
    moved = apply_geom(m, GeomAction(np.tile([1.0, 0.0], (4, 1))))
    np.testing.assert_allclose(moved.vertices.mean(axis=0), m.vertices.mean(axis=0) + [1.0, 0.0])
    d = np.random.default_rng(0).uniform(-3, 3, (4, 2))
    back = apply_geom(apply_geom(m, GeomAction(d)), GeomAction(-d))
    np.testing.assert_allclose(back.vertices, m.vertices, atol=1e-12)
    assert back.faces == m.faces
    with pytest.raises(MeshError):
        apply_geom(m, GeomAction.zeros(3))
    with pytest.raises(MeshError):
        apply_geom(m, GeomAction(np.full((4, 2), np.nan)))


def test_noop_is_identity():
    m = new_rect((0, 0), 1, 1)
    assert apply_topo(m, NOOP) is m


def test_json_round_trip_exact():
    rng = np.random.default_rng(3)
    m = new_subdivided_rect((32, 32), 24, 16)
    m = apply_geom(m, GeomAction(rng.normal(size=(16, 2)) / 3.0))
    back = Mesh2D.from_json(m.to_json())
    assert back == m
    assert set(json.loads(m.to_json())) == {"vertices", "faces"}


def test_invalid_meshes_rejected():
    v = np.array([(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)])
    with pytest.raises(MeshError):
        Mesh2D(v, [])
    with pytest.raises(MeshError):
        Mesh2D(v, [(0, 1, 2)])  # isolated vertex 3
    with pytest.raises(MeshError):
        Mesh2D(v, [(0, 1, 1, 2, 3)])
    with pytest.raises(MeshError):
        Mesh2D(v, [(0, 1, 5)])
    with pytest.raises(MeshError):
        Mesh2D(v, [(0, 1)])


EXPECTED_DELTA = {
    TopoKind.EDGE_SPLIT: lambda m, a: (1, 1, 0),
    TopoKind.EDGE_EXTRUDE: lambda m, a: (2, 3, 1),
    TopoKind.FACE_SUBDIVIDE: lambda m, a: (1, len(m.faces[a.target]), len(m.faces[a.target]) - 1),
}


def _check_delete(before, after, f):
    v0, e0, f0 = euler_counts(before)
    v1, e1, f1 = euler_counts(after)
    assert f1 == f0 - 1
    assert v1 <= v0 and e1 <= e0
    # orphan oracle: elements only the deleted face used must be gone
    loop = before.faces[f]
    others = [lp for i, lp in enumerate(before.faces) if i != f]
    used = {v for lp in others for v in lp}
    assert v0 - v1 == len(set(loop) - used)


@settings(max_examples=1000, deadline=None)
@given(st.lists(st.integers(min_value=0, max_value=10_000), min_size=1, max_size=8), st.booleans())
def test_random_action_sequences_keep_invariants(choices, jitter):
    rng = np.random.default_rng(sum(choices))
    mesh = new_rect((32, 32), 24, 16)
    for c in choices:
        acts = enumerate_valid_actions(mesh)
        a = acts[c % len(acts)]
        digest = mesh.digest()
        out = apply_topo(mesh, a)
        assert mesh.digest() == digest
        if a.kind is TopoKind.FACE_DELETE:
            _check_delete(mesh, out, a.target)
        else:
            d = EXPECTED_DELTA[a.kind](mesh, a)
            assert tuple(np.subtract(euler_counts(out), euler_counts(mesh))) == d
        out.validate(require_ccw=not jitter)
        if jitter:
            g = GeomAction(rng.uniform(-1, 1, (out.n_vertices, 2)))
            digest = out.digest()
            out2 = apply_geom(out, g)
            assert out.digest() == digest
            out2.validate()
            out = out2
        mesh = out


def test_signed_area_orientation():
    sq = np.array([(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)])
    assert signed_area(sq) == 1.0
    assert signed_area(sq[::-1]) == -1.0
