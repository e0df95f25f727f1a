"""Search for editable 2D polygon meshes that reproduce a target silhouette.

A shape is built as a sequence of (topological edit, vertex translation)
pairs.  Tree search picks the edits; silhouette fitting by gradient descent
picks the translations.
"""

from .inverse import OptimConfig, estimate, estimate_fast
from .mcts import PlannerConfig, plan_one_step, solve
from .mesh import (
    GeomAction,
    Mesh2D,
    MeshError,
    TopoAction,
    TopoKind,
    apply_geom,
    apply_topo,
    default_rect,
    default_subdivided_rect,
    enumerate_valid_actions,
    euler_counts,
    new_rect,
    new_subdivided_rect,
)
from .metrics import MetricsReport, complexity, iou, self_intersections
from .raster import SilhouetteImage, load_target, render_binary, render_soft
from .reward import RewardBreakdown, RewardWeights, compute_reward
from .sequence import ConstructionSequence, ReplayError, Step

__version__ = "0.1.0"

__all__ = [
    "ConstructionSequence",
    "GeomAction",
    "Mesh2D",
    "MeshError",
    "MetricsReport",
    "OptimConfig",
    "PlannerConfig",
    "ReplayError",
    "RewardBreakdown",
    "RewardWeights",
    "SilhouetteImage",
    "Step",
    "TopoAction",
    "TopoKind",
    "apply_geom",
    "apply_topo",
    "complexity",
    "compute_reward",
    "default_rect",
    "default_subdivided_rect",
    "enumerate_valid_actions",
    "estimate",
    "estimate_fast",
    "euler_counts",
    "iou",
    "load_target",
    "new_rect",
    "new_subdivided_rect",
    "plan_one_step",
    "render_binary",
    "render_soft",
    "self_intersections",
    "solve",
]
