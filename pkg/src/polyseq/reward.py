"""Scalar reward combining shape match, complexity and self-intersections."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from .mesh import Mesh2D
from .metrics import complexity, iou, self_intersections
from .raster import SilhouetteImage, render_binary


@dataclass(frozen=True)
class RewardWeights:
    w_sm: float = 100.0
    w_sc: float = 1.0
    w_si: float = 5.0

    def __post_init__(self):
        for name in ("w_sm", "w_sc", "w_si"):
            val = getattr(self, name)
            if not (math.isfinite(val) and val >= 0):
                raise ValueError(f"{name} must be finite and non-negative, got {val}")

    @classmethod
    def synthetic(cls) -> "RewardWeights":
        return cls(100.0, 1.0, 5.0)

    @classmethod
    def complex_shapes(cls) -> "RewardWeights":
        return cls(100.0, 0.3, 5.0)


@dataclass(frozen=True)
class RewardBreakdown:
    r_sm: float
    r_sc: float
    r_si: float
    r_all: float

    def __post_init__(self):
        for name in ("r_sm", "r_sc", "r_si", "r_all"):
            object.__setattr__(self, name, float(getattr(self, name)))

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RewardBreakdown":
        return cls(d["r_sm"], d["r_sc"], d["r_si"], d["r_all"])


def combine(r_sm: float, r_sc: float, r_si: float, weights: RewardWeights) -> RewardBreakdown:
    r_all = weights.w_sm * r_sm - weights.w_sc * r_sc - weights.w_si * r_si
    return RewardBreakdown(r_sm, r_sc, r_si, r_all)


def compute_reward(
    mesh: Mesh2D,
    target: SilhouetteImage,
    weights: RewardWeights = RewardWeights(),
    res=None,
) -> RewardBreakdown:
    """Reward of ``mesh`` against the binary ``target``.

    ``res`` defaults to the target's resolution and must match it.
    """
    res = target.res if res is None else tuple(res)
    if res != target.res:
        raise ValueError(f"render resolution {res} does not match target {target.res}")
    r_sm = iou(render_binary(mesh, res), target)
    return combine(r_sm, complexity(mesh), self_intersections(mesh), weights)
