"""Solve one synthetic target and narrate the construction sequence.

The target comes from the seeded generator, so the run is reproducible.  The
search budget is cut down from the defaults to keep this quick.
"""

from dataclasses import replace

from polyseq import PlannerConfig, default_rect, iou, render_binary, solve
from polyseq.dataset import GenConfig, random_sequence
from polyseq.mesh import euler_counts

truth, target = random_sequence(GenConfig(seed=1), 11)
print(f"target: {int(target.data.sum())} foreground pixels")
print(f"generator used {len(truth)} edits, final counts (V, E, F) = {euler_counts(truth.final)}")

cfg = replace(PlannerConfig(seed=1), mcts_iterations=40, n_sim=2)
seq = solve(default_rect(target.res), target, cfg)

print(f"\nsearch committed {len(seq)} steps:")
for k, (step, mesh) in enumerate(zip(seq.steps, seq.meshes()[1:]), 1):
    t = step.topo
    where = "" if t.target is None else f" on element {t.target}"
    shift = abs(step.geom.deltas).max()
    r = step.reward
    print(
        f"  {k}. {t.kind.value}{where}; largest vertex move {shift:.2f} px; "
        f"IoU {r.r_sm:.3f}, |V|+|E|+|F| = {r.r_sc:.0f}, crossings {r.r_si:.0f}"
    )

print(f"\nfinal IoU {iou(render_binary(seq.final), target):.3f}")
assert seq.check_replay() == seq.final
print("sequence replays exactly from its initial rectangle")
