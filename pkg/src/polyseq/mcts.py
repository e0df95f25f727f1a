"""Monte Carlo tree search over topological edits.

Each outer step grows a fresh tree rooted at the current shape.  Tree edges
are topological edits; the geometric part of every edge comes from a cheap
shape fit against the target.  The root child with the best mean return is
committed, with its geometry recomputed by the full fitter.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .inverse import OptimConfig, estimate, estimate_fast
from .mesh import (
    DEFAULT_EXTRUDE_LENGTH,
    GeomAction,
    Mesh2D,
    TopoAction,
    apply_geom,
    apply_topo,
    enumerate_valid_actions,
)
from .raster import SilhouetteImage
from .reward import RewardBreakdown, RewardWeights, compute_reward
from .sequence import ConstructionSequence, Step
from .tps import TpsConfig, fast_estimate

ESTIMATORS = ("dr_fast", "tps_fast")


@dataclass(frozen=True)
class PlannerConfig:
    outer_steps: int = 12
    mcts_iterations: int = 100
    exploration: float = math.sqrt(2.0)
    n_sim: int = 4
    rollout_estimator: str = "dr_fast"
    stop_iou: float = 0.95
    weights: RewardWeights = RewardWeights()
    seed: int = 0
    extrude_length: float = DEFAULT_EXTRUDE_LENGTH
    # outer loop gives up after this many committed steps without a new best r_all
    patience: int = 2
    # fit the root's children with the full estimator instead of the fast one
    full_root: bool = True
    optim: OptimConfig = OptimConfig()
    tps: TpsConfig = TpsConfig()

    def __post_init__(self):
        if self.outer_steps < 1 or self.mcts_iterations < 1 or self.n_sim < 0:
            raise ValueError("outer_steps and mcts_iterations must be positive, n_sim non-negative")
        if not self.exploration >= 0:
            raise ValueError("exploration constant must be >= 0")
        if not 0 < self.stop_iou <= 1:
            raise ValueError("stop_iou must lie in (0, 1]")
        if self.rollout_estimator not in ESTIMATORS:
            raise ValueError(f"rollout_estimator must be one of {ESTIMATORS}")
        if self.patience < 0:
            raise ValueError("patience must be >= 0")

    def echo(self) -> dict:
        return asdict(self)


@dataclass(eq=False)
class SearchNode:
    mesh: Mesh2D
    reward_here: RewardBreakdown
    untried: list[TopoAction]
    action: TopoAction | None = None
    geom: GeomAction | None = None
    terminal: bool = False
    children: list["SearchNode"] = field(default_factory=list)
    visits: int = 0
    value_sum: float = 0.0

    @property
    def q_value(self) -> float:
        return self.value_sum / self.visits if self.visits else 0.0

    def child_triples(self) -> list[tuple[TopoAction, GeomAction, "SearchNode"]]:
        return [(c.action, c.geom, c) for c in self.children]


def make_node(mesh, target, cfg: PlannerConfig, action=None, geom=None) -> SearchNode:
    reward = compute_reward(mesh, target, cfg.weights)
    terminal = reward.r_sm >= cfg.stop_iou
    untried = [] if terminal else enumerate_valid_actions(mesh, cfg.extrude_length)
    return SearchNode(mesh, reward, untried, action, geom, terminal)


def fast_geometry(mesh: Mesh2D, target: SilhouetteImage, cfg: PlannerConfig) -> GeomAction:
    """Cheap geometric fit used for expansions and rollouts; never raises."""
    try:
        if cfg.rollout_estimator == "tps_fast":
            g = fast_estimate(mesh, target, cfg.tps)
        else:
            g = estimate_fast(mesh, target, cfg.optim)
        if not np.all(np.isfinite(g.deltas)):
            raise FloatingPointError("non-finite deltas")
        return g
    except (ValueError, FloatingPointError, np.linalg.LinAlgError):
        return GeomAction.zeros(mesh.n_vertices)


def full_geometry(mesh: Mesh2D, target: SilhouetteImage, cfg: PlannerConfig) -> GeomAction:
    return estimate(mesh, target, cfg.optim)[0]


def step_shape(mesh, action, target, cfg: PlannerConfig, geometry: Callable = fast_geometry):
    mt = apply_topo(mesh, action)
    g = geometry(mt, target, cfg)
    return apply_geom(mt, g), g


def uct_select(node: SearchNode, c: float) -> int:
    """Index of the child maximising ``Q + c * sqrt(ln N_parent / N_child)``.

    Ties go to the lowest index.
    """
    if node.untried:
        raise ValueError("uct_select needs a fully expanded node")
    if not node.children:
        raise ValueError("uct_select needs at least one child")
    log_n = math.log(max(node.visits, 1))
    best, best_i = -math.inf, 0
    for i, child in enumerate(node.children):
        score = child.q_value + c * math.sqrt(log_n / child.visits)
        if score > best:
            best, best_i = score, i
    return best_i


def expand(
    node: SearchNode, target, cfg: PlannerConfig, rng: np.random.Generator, geometry: Callable = fast_geometry
) -> SearchNode:
    """Pop a random untried edit, fit its geometry and attach the new child."""
    if not node.untried:
        raise ValueError("nothing left to expand")
    action = node.untried.pop(int(rng.integers(len(node.untried))))
    mesh, g = step_shape(node.mesh, action, target, cfg, geometry)
    child = make_node(mesh, target, cfg, action, g)
    node.children.append(child)
    return child


def simulate(node: SearchNode, target, cfg: PlannerConfig, rng: np.random.Generator) -> float:
    """Random rollout of ``n_sim`` edits from ``node``; sum of the rewards reached.

    Once a state matches the target (IoU >= stop_iou) or has no edits left,
    it is held for the remaining rollout steps and keeps earning its own
    reward, so every rollout sums the same number of terms.
    """
    total = 0.0
    mesh, reward = node.mesh, node.reward_here
    for step in range(cfg.n_sim):
        acts = [] if reward.r_sm >= cfg.stop_iou else enumerate_valid_actions(mesh, cfg.extrude_length)
        if not acts:
            total += reward.r_all * (cfg.n_sim - step)
            break
        action = acts[int(rng.integers(len(acts)))]
        mesh, _ = step_shape(mesh, action, target, cfg)
        reward = compute_reward(mesh, target, cfg.weights)
        total += reward.r_all
    return total


def backpropagate(path: list[SearchNode], value: float) -> None:
    for node in path:
        node.visits += 1
        node.value_sum += value


def rollout_rng(seed: int, tree_index: int, iteration: int) -> np.random.Generator:
    return np.random.default_rng([seed, tree_index, iteration])


def search_iteration(root: SearchNode, target, cfg: PlannerConfig, tree_index: int, iteration: int) -> None:
    rng = rollout_rng(cfg.seed, tree_index, iteration)
    node = root
    path = [root]
    while not node.untried and node.children and not node.terminal:
        node = node.children[uct_select(node, cfg.exploration)]
        path.append(node)
    if node.untried and not node.terminal:
        geometry = full_geometry if node is root and cfg.full_root else fast_geometry
        node = expand(node, target, cfg, rng, geometry)
        path.append(node)
    value = node.reward_here.r_all + simulate(node, target, cfg, rng)
    backpropagate(path, value)


def build_tree(mesh: Mesh2D, target, cfg: PlannerConfig, tree_index: int = 0) -> SearchNode:
    root = make_node(mesh, target, cfg)
    # the root is searched even if it already matches
    root.terminal = False
    if not root.untried:
        root.untried = enumerate_valid_actions(mesh, cfg.extrude_length)
    for it in range(cfg.mcts_iterations):
        if not root.untried and not root.children:
            break
        search_iteration(root, target, cfg, tree_index, it)
    return root


def best_child(root: SearchNode) -> SearchNode | None:
    """Root child with the highest Q; ties go to the earliest edit in canonical order."""
    best = None
    for child in sorted(root.children, key=lambda c: c.action.sort_key()):
        if best is None or child.q_value > best.q_value:
            best = child
    return best


def plan_one_step(mesh: Mesh2D, target, cfg: PlannerConfig, tree_index: int = 0):
    """Search one tree and commit its best root edit.

    Returns ``(topo, geom, root)``; ``geom`` comes from the full fitter
    applied after ``topo``.  Returns ``None`` when the shape has no edits.
    """
    root = build_tree(mesh, target, cfg, tree_index)
    child = best_child(root)
    if child is None:
        return None
    if cfg.full_root:
        # the child was already fitted by the full estimator
        return child.action, child.geom, root
    geom = full_geometry(apply_topo(mesh, child.action), target, cfg)
    return child.action, geom, root


def solve(initial: Mesh2D, target: SilhouetteImage, cfg: PlannerConfig = PlannerConfig()) -> ConstructionSequence:
    """Build a construction sequence from ``initial`` towards ``target``.

    Commits up to ``outer_steps`` planned edits.  Stops when the shape
    matches (IoU >= stop_iou), when no edit applies, or after ``patience``
    commits without a new best ``r_all``; the returned sequence ends at the
    best-scoring shape reached.
    """
    mesh = initial
    best_reward = compute_reward(initial, target, cfg.weights)
    steps: list[Step] = []
    best_len = 0
    since_best = 0
    if best_reward.r_sm < cfg.stop_iou:
        for k in range(cfg.outer_steps):
            plan = plan_one_step(mesh, target, cfg, k)
            if plan is None:
                break
            topo, geom, _ = plan
            mesh = apply_geom(apply_topo(mesh, topo), geom)
            reward = compute_reward(mesh, target, cfg.weights)
            steps.append(Step(topo, geom, reward))
            if reward.r_all > best_reward.r_all:
                best_reward, best_len, since_best = reward, len(steps), 0
            else:
                since_best += 1
            if reward.r_sm >= cfg.stop_iou:
                break
            if cfg.patience and since_best >= cfg.patience:
                break
    steps = steps[:best_len]
    return ConstructionSequence(initial, steps, None, cfg.echo(), cfg.seed)
