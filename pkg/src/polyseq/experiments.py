"""Evaluation harness: baselines, suite runs and metric tables."""

from __future__ import annotations

import csv
import io
import time
from dataclasses import asdict, dataclass

import numpy as np

from .dataset import GenConfig, random_sequence
from .inverse import OptimConfig, estimate
from .mcts import PlannerConfig, solve
from .mesh import NOOP, apply_geom, default_rect, default_subdivided_rect
from .raster import SilhouetteImage
from .reward import RewardWeights, compute_reward
from .sequence import ConstructionSequence, Step

VARIANTS = ("simple", "complex")
METRIC_COLUMNS = ("r_sm", "r_sc", "r_si", "r_all")


@dataclass(frozen=True)
class ShapeResult:
    name: str
    r_sm: float
    r_sc: float
    r_si: float
    r_all: float
    seconds: float = 0.0


def initial_shape(variant: str, res):
    if variant == "simple":
        return default_rect(res)
    if variant == "complex":
        return default_subdivided_rect(res)
    raise ValueError(f"variant must be one of {VARIANTS}, got {variant!r}")


def baseline_dr(
    target: SilhouetteImage,
    variant: str = "simple",
    optim: OptimConfig = OptimConfig(),
    weights: RewardWeights = RewardWeights(),
) -> ConstructionSequence:
    """Fit a fixed-topology starting shape by gradient descent only.

    The result is a one-step sequence whose topological edit is the no-op.
    """
    mesh = initial_shape(variant, target.res)
    geom, _ = estimate(mesh, target, optim)
    final = apply_geom(mesh, geom)
    reward = compute_reward(final, target, weights)
    echo = {"method": "baseline-dr", "variant": variant, "optim": asdict(optim), "weights": asdict(weights)}
    return ConstructionSequence(mesh, [Step(NOOP, geom, reward)], final, echo, None)


def score(name: str, seq: ConstructionSequence, target, weights, seconds: float = 0.0) -> ShapeResult:
    r = compute_reward(seq.final, target, weights)
    return ShapeResult(name, r.r_sm, r.r_sc, r.r_si, r.r_all, seconds)


def suite_targets(gen: GenConfig = GenConfig()) -> list[tuple[str, SilhouetteImage]]:
    return [(f"shape_{i:03d}", random_sequence(gen, i)[1]) for i in range(gen.count)]


def run_one(name: str, target, method: str, planner: PlannerConfig = PlannerConfig()):
    """Run one method on one target; returns the scored row and the sequence."""
    t0 = time.perf_counter()
    if method == "search":
        seq = solve(default_rect(target.res), target, planner)
    else:
        seq = baseline_dr(target, method, planner.optim, planner.weights)
    return score(name, seq, target, planner.weights, time.perf_counter() - t0), seq


def run_method(targets, method: str, planner: PlannerConfig = PlannerConfig()) -> list[ShapeResult]:
    """Run ``method`` ("search", "simple" or "complex") over named targets."""
    return [run_one(name, target, method, planner)[0] for name, target in targets]


def mean_metrics(rows) -> dict[str, float]:
    if not rows:
        raise ValueError("no results to average")
    return {c: float(np.mean([getattr(r, c) for r in rows])) for c in METRIC_COLUMNS}


# -- tables -----------------------------------------------------------------------


def to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("shape",) + METRIC_COLUMNS)
    for r in rows:
        w.writerow([r.name] + [repr(float(getattr(r, c))) for c in METRIC_COLUMNS])
    means = mean_metrics(rows)
    w.writerow(["mean"] + [repr(means[c]) for c in METRIC_COLUMNS])
    return buf.getvalue()


def from_csv(text: str) -> list[ShapeResult]:
    """Per-shape rows of a table written by :func:`to_csv` (mean row dropped)."""
    rows = []
    for rec in csv.DictReader(io.StringIO(text)):
        if rec["shape"] == "mean":
            continue
        rows.append(ShapeResult(rec["shape"], *(float(rec[c]) for c in METRIC_COLUMNS)))
    return rows


def format_table(rows) -> str:
    means = mean_metrics(rows)
    body = [[r.name] + [f"{getattr(r, c):.3f}" for c in METRIC_COLUMNS] for r in rows]
    body.append(["mean"] + [f"{means[c]:.3f}" for c in METRIC_COLUMNS])
    head = ["shape", *METRIC_COLUMNS]
    widths = [max(len(x[i]) for x in [head] + body) for i in range(len(head))]

    def line(cells):
        return "  ".join(c.ljust(widths[0]) if i == 0 else c.rjust(widths[i]) for i, c in enumerate(cells))

    out = [line(head), "  ".join("-" * w for w in widths)]
    out += [line(b) for b in body[:-1]]
    out += ["  ".join("-" * w for w in widths), line(body[-1])]
    return "\n".join(out)

