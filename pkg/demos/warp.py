"""Fit a thin-plate-spline warp between two silhouettes and move a mesh with it.

This is the cheap geometry estimate the planner can use during rollouts
(``rollout_estimator = "tps_fast"``).
"""

import numpy as np

from polyseq import GeomAction, apply_geom, iou, new_rect, render_binary, render_soft
from polyseq.tps import TpsParams, fast_estimate, fit_tps, warp_image, warp_loss

mesh = new_rect((28, 32), 20, 14)
moved = apply_geom(mesh, GeomAction(np.tile([5.0, -3.0], (4, 1))))
src, tgt = render_soft(mesh), render_soft(moved)

theta = fit_tps(src, tgt)
before = warp_loss(TpsParams.identity(theta.m), src, tgt)
after = warp_loss(theta, src, tgt)
print(f"warp loss {before:.4f} -> {after:.4f}")
print("affine part:\n", np.round(theta.affine, 4))
print(f"warped image IoU with target: {iou(warp_image(theta, src).binarized(), render_binary(moved)):.3f}")

geom = fast_estimate(mesh, render_binary(moved))
print("\nper-vertex moves from re-embedding the mesh in the warped grid:")
print(np.round(geom.deltas, 2))
print(f"mesh IoU after the move: {iou(render_binary(apply_geom(mesh, geom)), render_binary(moved)):.3f}")
