import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import count_crossings, pixel_iou, random_mesh
from polyseq.mesh import (
    GeomAction,
    Mesh2D,
    TopoAction,
    TopoKind,
    apply_geom,
    apply_topo,
    new_rect,
    new_subdivided_rect,
)
from polyseq.metrics import MetricsReport, complexity, iou, measure, self_intersections
from polyseq.raster import SilhouetteImage, render_binary
from polyseq.reward import RewardBreakdown, RewardWeights, combine, compute_reward


def square_image(x0, y0, size=10, res=32):
    a = np.zeros((res, res))
    a[y0:y0 + size, x0:x0 + size] = 1.0
    return SilhouetteImage(a)


def test_iou_examples():
    a = square_image(5, 5)
    assert iou(a, a) == 1.0
    assert iou(a, square_image(20, 20)) == 0.0
    shifted = square_image(10, 5)
    assert iou(a, shifted) == pytest.approx(1 / 3, abs=0)
    assert iou(a, shifted) == pixel_iou(a.data.tolist(), shifted.data.tolist())
    empty = SilhouetteImage(np.zeros((4, 4)))
    assert iou(empty, empty) == 1.0
    with pytest.raises(ValueError):
        iou(a, SilhouetteImage(np.zeros((4, 4))))


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_iou_matches_pixel_oracle(seed):
    rng = np.random.default_rng(seed)
    a = SilhouetteImage((rng.random((12, 9)) < rng.random()).astype(float))
    b = SilhouetteImage((rng.random((12, 9)) < rng.random()).astype(float))
    v = iou(a, b)
    assert v == pixel_iou(a.data.tolist(), b.data.tolist())
    assert v == iou(b, a)
    assert 0.0 <= v <= 1.0


def test_complexity_examples():
    rect = new_rect((0, 0), 2, 2)
    assert complexity(rect) == 9
    assert complexity(new_subdivided_rect((0, 0), 3, 3)) == 49
    assert complexity(apply_topo(rect, TopoAction(TopoKind.EDGE_SPLIT, 0, (0.5,)))) == 11


def test_convex_polygon_has_no_crossings():
    t = np.linspace(0, 2 * np.pi, 9)[:-1]
    poly = Mesh2D(np.stack([np.cos(t), np.sin(t)], axis=1) * 10 + 20, [tuple(range(8))])
    assert self_intersections(poly) == 0


def test_bow_tie():
    bow = Mesh2D(np.array([(0.0, 0.0), (1.0, 1.0), (1.0, 0.0), (0.0, 1.0)]), [(0, 1, 2, 3)])
    assert self_intersections(bow) == 1 == count_crossings(bow)


def test_two_overlapping_rects_cross_twice():
    a = new_rect((0.0, 0.0), 2, 2)
    v = np.vstack([a.vertices, a.vertices + 1.0])
    m = Mesh2D(v, [(0, 1, 2, 3), (4, 5, 6, 7)])
    assert self_intersections(m) == 2 == count_crossings(m)


def test_collinear_overlap_counts_and_endpoint_touch_does_not():
    overlap = Mesh2D(
        np.array([(0, 0), (4, 0), (4, 2), (0, 2), (2, 0), (6, 0), (6, -2), (2, -2)], dtype=float),
        [(0, 1, 2, 3), (4, 7, 6, 5)],
    )
    assert self_intersections(overlap) == 1 == count_crossings(overlap)
    touch = Mesh2D(
        np.array([(0, 0), (4, 0), (4, 2), (0, 2), (4, 1), (6, 1), (6, 3)], dtype=float),
        [(0, 1, 2, 3), (4, 5, 6)],
    )
    assert self_intersections(touch) == count_crossings(touch) == 0


def test_self_intersections_match_oracle_many():
    rng = np.random.default_rng(2024)
    hits = 0
    for k in range(300):
        m = random_mesh(rng, steps=int(rng.integers(1, 6)), jitter=float(rng.choice([0.0, 3.0, 8.0])))
        n = self_intersections(m)
        assert n == count_crossings(m), k
        hits += n > 0
    assert hits > 20  # the sample actually exercises crossings


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0, 2 * math.pi), st.floats(-50, 50), st.floats(-50, 50))
def test_self_intersections_rigid_invariance(seed, angle, tx, ty):
    rng = np.random.default_rng(seed)
    m = random_mesh(rng, steps=3, jitter=6.0)
    c, s = math.cos(angle), math.sin(angle)
    rot = np.array([[c, -s], [s, c]])
    moved = Mesh2D(m.vertices @ rot.T + [tx, ty], m.faces)
    assert self_intersections(moved) == self_intersections(m)


def test_metrics_report_json():
    m = new_rect((16, 16), 10, 10)
    img = render_binary(m, (32, 32))
    rep = measure(m, img, img)
    assert rep == MetricsReport(1.0, 9, 0)
    assert json.loads(rep.to_json()) == {"iou": 1.0, "complexity": 9, "self_intersections": 0}


# -- reward -----------------------------------------------------------------------


def test_reward_examples():
    rect = new_rect((16, 16), 12, 8)
    target = render_binary(rect, (32, 32))
    r = compute_reward(rect, target, RewardWeights())
    assert (r.r_sm, r.r_sc, r.r_si, r.r_all) == (1.0, 9.0, 0.0, 91.0)
    assert compute_reward(rect, target, RewardWeights(0, 0, 0)).r_all == 0.0
    bow = Mesh2D(np.array([(0.0, 0.0), (1.0, 1.0), (1.0, 0.0), (0.0, 1.0)]) + 100.0, [(0, 1, 2, 3)])
    assert compute_reward(bow, target, RewardWeights()).r_all == -14.0


def test_weight_profiles_and_validation():
    assert RewardWeights.synthetic() == RewardWeights(100, 1, 5)
    assert RewardWeights.complex_shapes() == RewardWeights(100, 0.3, 5)
    for bad in ((-1, 1, 1), (1, math.inf, 1), (1, 1, math.nan)):
        with pytest.raises(ValueError):
            RewardWeights(*bad)


def test_reward_resolution_must_match():
    target = SilhouetteImage(np.zeros((32, 32)))
    with pytest.raises(ValueError):
        compute_reward(new_rect((5, 5), 2, 2), target, res=(64, 64))


@settings(max_examples=200, deadline=None)
@given(
    st.floats(0, 1), st.floats(0, 100), st.floats(0, 10),
    st.floats(0, 1), st.floats(0, 100), st.floats(0, 10),
)
def test_combine_formula_and_monotonicity(sm, sc, si, dsm, dsc, dsi):
    w = RewardWeights(100.0, 1.0, 5.0)
    base = combine(sm, sc, si, w)
    assert base.r_all == 100.0 * sm - 1.0 * sc - 5.0 * si
    assert combine(sm + dsm, sc, si, w).r_all >= base.r_all
    assert combine(sm, sc + dsc, si, w).r_all <= base.r_all
    assert combine(sm, sc, si + dsi, w).r_all <= base.r_all


def test_compute_reward_is_pure():
    m = apply_geom(new_subdivided_rect((32, 32), 24, 16), GeomAction(np.full((16, 2), 0.3)))
    target = render_binary(new_rect((30, 30), 20, 20))
    a = compute_reward(m, target)
    b = compute_reward(m, target)
    assert a == b
    assert RewardBreakdown.from_dict(a.to_dict()) == a
