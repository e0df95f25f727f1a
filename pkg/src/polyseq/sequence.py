"""Construction sequences: ordered (topological, geometric) edit pairs."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .mesh import GeomAction, Mesh2D, TopoAction, apply_geom, apply_topo
from .reward import RewardBreakdown


class ReplayError(RuntimeError):
    pass


@dataclass(frozen=True)
class Step:
    topo: TopoAction
    geom: GeomAction
    reward: RewardBreakdown | None = None

    def to_dict(self) -> dict:
        d = {"topo": self.topo.to_dict(), "geom": self.geom.to_dict()}
        if self.reward is not None:
            d["reward"] = self.reward.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Step":
        reward = RewardBreakdown.from_dict(d["reward"]) if d.get("reward") else None
        return cls(TopoAction.from_dict(d["topo"]), GeomAction.from_dict(d["geom"]), reward)


@dataclass
class ConstructionSequence:
    initial: Mesh2D
    steps: list[Step] = field(default_factory=list)
    final: Mesh2D | None = None
    config_echo: dict[str, Any] = field(default_factory=dict)
    seed: int | None = None

    def __post_init__(self):
        if self.final is None:
            self.final = self.replay()

    def __len__(self) -> int:
        return len(self.steps)

    def meshes(self) -> list[Mesh2D]:
        """Shapes S_0 ... S_n along the sequence."""
        out = [self.initial]
        for s in self.steps:
            out.append(apply_geom(apply_topo(out[-1], s.topo), s.geom))
        return out

    def replay(self) -> Mesh2D:
        return self.meshes()[-1]

    def check_replay(self) -> Mesh2D:
        """Replay and require the recorded final mesh exactly."""
        try:
            final = self.replay()
        except ValueError as exc:
            raise ReplayError(f"sequence does not replay: {exc}") from exc
        if final != self.final:
            raise ReplayError("replayed mesh differs from the recorded final mesh")
        return final

    def total_reward(self) -> float:
        return sum(s.reward.r_all for s in self.steps if s.reward is not None)

    def to_dict(self) -> dict:
        return {
            "initial": self.initial.to_dict(),
            "steps": [s.to_dict() for s in self.steps],
            "final": self.final.to_dict(),
            "config_echo": self.config_echo,
            "seed": self.seed,
        }

    def to_json(self) -> str:
        # repr-based float formatting round-trips every double exactly
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)

    @classmethod
    def from_dict(cls, d: dict) -> "ConstructionSequence":
        return cls(
            Mesh2D.from_dict(d["initial"]),
            [Step.from_dict(s) for s in d["steps"]],
            Mesh2D.from_dict(d["final"]),
            d.get("config_echo", {}),
            d.get("seed"),
        )

    @classmethod
    def from_json(cls, s: str) -> "ConstructionSequence":
        return cls.from_dict(json.loads(s))

    def save(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_json() + "\n")

    @classmethod
    def load(cls, path) -> "ConstructionSequence":
        return cls.from_json(Path(path).read_text())
