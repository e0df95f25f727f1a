"""Fixed-topology shape fitting by gradient descent on the silhouette loss."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .mesh import GeomAction, Mesh2D
from .raster import DEFAULT_SIGMA, SilhouetteImage, loss_mse, render_soft, vertex_loss_gradient


@dataclass(frozen=True)
class OptimConfig:
    """Settings for :func:`estimate`.

    ``eta`` is the largest step tried per iteration (pixel units per unit
    gradient).  A rejected step is halved until the loss drops; after an
    accepted step the next attempt doubles it again, capped at ``eta``.
    ``ftol`` stops once the relative loss decrease of an accepted step falls
    below it (0 disables).
    """

    iterations: int = 200
    eta: float = 1000.0
    min_eta: float = 1e-3
    max_halvings: int = 20
    sigma: float = DEFAULT_SIGMA
    ftol: float = 0.0

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if not self.eta > 0:
            raise ValueError("eta must be positive")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")

    def fast(self) -> "OptimConfig":
        return replace(self, iterations=FAST_ITERATIONS, ftol=FAST_FTOL)


FAST_ITERATIONS = 30
FAST_FTOL = 1e-3


@dataclass
class OptimTrace:
    losses: list[float] = field(default_factory=list)

    @property
    def final_loss(self) -> float:
        return self.losses[-1]

    @property
    def iterations(self) -> int:
        return len(self.losses) - 1


def objective(mesh: Mesh2D, target: SilhouetteImage, cfg: OptimConfig = OptimConfig()) -> float:
    return loss_mse(render_soft(mesh, target.res, cfg.sigma), target)


def estimate(mesh: Mesh2D, target: SilhouetteImage, cfg: OptimConfig = OptimConfig()):
    """Vertex translations that minimise the silhouette loss.

    Plain steps ``x <- x - eta * dLoss/dx`` with step halving whenever a step
    would not lower the loss.  Stops after ``cfg.iterations`` accepted steps,
    when no halving helps, or on the ``ftol`` criterion.

    Returns
    -------
    geom : GeomAction
        Final minus initial vertex positions.
    trace : OptimTrace
        Loss at the start and after each accepted step.
    """
    segs = mesh.boundary_segments
    tgt = target.data
    x = mesh.vertices.copy()
    loss, grad = vertex_loss_gradient(x, segs, tgt, cfg.sigma)
    trace = OptimTrace([loss])
    eta = cfg.eta
    for _ in range(cfg.iterations):
        if not np.any(grad):
            break
        accepted = False
        for _ in range(cfg.max_halvings + 1):
            x_try = x - eta * grad
            loss_try, grad_try = vertex_loss_gradient(x_try, segs, tgt, cfg.sigma)
            if loss_try < loss:
                accepted = True
                break
            eta *= 0.5
            if eta < cfg.min_eta:
                break
        if not accepted:
            break
        rel = (loss - loss_try) / loss if loss > 0 else 0.0
        x, loss, grad = x_try, loss_try, grad_try
        trace.losses.append(loss)
        if cfg.ftol > 0 and rel < cfg.ftol:
            break
        eta = min(cfg.eta, 2.0 * eta)
    return GeomAction(x - mesh.vertices), trace


def estimate_fast(mesh: Mesh2D, target: SilhouetteImage, cfg: OptimConfig = OptimConfig()) -> GeomAction:
    """Short-budget :func:`estimate` used inside the tree search."""
    return estimate(mesh, target, cfg.fast())[0]
