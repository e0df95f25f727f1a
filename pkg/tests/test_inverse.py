import numpy as np
import pytest

from oracles import random_mesh
from polyseq.inverse import OptimConfig, estimate, estimate_fast, objective
from polyseq.mesh import GeomAction, Mesh2D, apply_geom, euler_counts, new_rect, new_subdivided_rect
from polyseq.metrics import iou
from polyseq.raster import SilhouetteImage, loss_gradient, loss_mse, render_binary, render_soft


def scaled(mesh, factor):
    c = mesh.vertices.mean(axis=0)
    return Mesh2D(c + factor * (mesh.vertices - c), mesh.faces)


def test_own_render_is_a_fixed_point():
    m = random_mesh(np.random.default_rng(1), steps=2, jitter=2.0)
    g, trace = estimate(m, render_soft(m))
    assert g.max_norm() < 0.05
    assert all(b <= a for a, b in zip(trace.losses, trace.losses[1:]))


def test_translated_rect_recovered():
    m = new_rect((28, 32), 20, 12)
    target = render_binary(apply_geom(m, GeomAction(np.tile([6.0, 0.0], (4, 1)))))
    g, _ = estimate(m, target)
    mean = g.deltas.mean(axis=0)
    assert mean[0] == pytest.approx(6.0, abs=0.5)
    assert mean[1] == pytest.approx(0.0, abs=0.5)


def test_scaled_rect_reaches_iou():
    m = new_rect((32, 32), 20, 14)
    target = render_binary(scaled(m, 1.5))
    g, _ = estimate(m, target)
    out = apply_geom(m, g)
    assert iou(render_binary(out), target) >= 0.95
    # every corner moved away from the centre
    outward = (m.vertices - m.vertices.mean(axis=0)) * g.deltas
    assert np.all(outward.sum(axis=1) > 0)


def test_trace_non_increasing_and_topology_fixed():
    rng = np.random.default_rng(7)
    for _ in range(3):
        m = random_mesh(rng, steps=3, jitter=2.0)
        target = render_binary(random_mesh(rng, steps=2, jitter=3.0))
        g, trace = estimate(m, target, OptimConfig(iterations=40))
        assert all(b <= a for a, b in zip(trace.losses, trace.losses[1:]))
        assert trace.final_loss <= trace.losses[0]
        assert trace.iterations == len(trace.losses) - 1 <= 40
        assert euler_counts(apply_geom(m, g)) == euler_counts(m)
        assert trace.final_loss == pytest.approx(objective(apply_geom(m, g), target), abs=1e-12)


def test_deterministic_bitwise():
    m = new_subdivided_rect((30, 30), 20, 16)
    target = render_binary(new_rect((34, 33), 26, 18))
    a, _ = estimate(m, target, OptimConfig(iterations=50))
    b, _ = estimate(m, target, OptimConfig(iterations=50))
    assert np.array_equal(a.deltas, b.deltas)


def test_first_step_follows_loss_gradient():
    m = new_rect((30, 32), 16, 16)
    target = render_binary(new_rect((34, 32), 16, 16))
    g, trace = estimate(m, target, OptimConfig(iterations=1, eta=1.0))
    _, grad = loss_gradient(m, target)
    np.testing.assert_allclose(g.deltas, -1.0 * grad, rtol=1e-9, atol=1e-15)
    assert trace.losses[1] < trace.losses[0]


def test_objective_is_loss_mse():
    m = new_rect((20, 20), 10, 10)
    target = SilhouetteImage(np.zeros((64, 64)))
    assert objective(m, target) == loss_mse(render_soft(m), target)


def test_fast_variant_budget():
    m = new_rect((28, 32), 20, 12)
    target = render_binary(apply_geom(m, GeomAction(np.tile([3.0, 0.0], (4, 1)))))
    g = estimate_fast(m, target)
    assert g.deltas.mean(axis=0)[0] == pytest.approx(3.0, abs=1.0)
    fast = OptimConfig().fast()
    assert fast.iterations == 30


def test_config_validation():
    with pytest.raises(ValueError):
        OptimConfig(iterations=0)
    with pytest.raises(ValueError):
        OptimConfig(eta=0.0)
    with pytest.raises(ValueError):
        OptimConfig(sigma=-1.0)
