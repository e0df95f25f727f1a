"""Search against the two fixed-topology baselines on a handful of shapes.

The simple baseline fits a plain rectangle.  The complex one fits a 4x4
subdivided rectangle, which has many more elements to bend into shape.
"""

from dataclasses import replace

from polyseq import PlannerConfig
from polyseq.dataset import GenConfig
from polyseq.experiments import format_table, run_method, suite_targets

targets = suite_targets(GenConfig(seed=1, count=4))
planner = replace(PlannerConfig(seed=1), mcts_iterations=40, n_sim=2)

for method in ("simple", "complex", "search"):
    print(f"== {method}")
    print(format_table(run_method(targets, method, planner)))
    print()
