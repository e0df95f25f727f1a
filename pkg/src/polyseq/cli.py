"""Command-line entry point.

    polyseq solve TARGET [--out SEQ.json]
    polyseq baseline-dr TARGET --variant simple|complex [--out SEQ.json]
    polyseq eval DATASET_DIR RESULTS_DIR [--out TABLE.csv]
    polyseq render SEQ.json OUT_DIR [--format svg|png]
    polyseq gen OUT_DIR

Every command also takes ``--config FILE``, ``--seed N``, ``--res WxH`` and
``--weights sm,sc,si``.  Exit codes: 0 ok, 2 I/O, 3 config, 4 empty input
set, 5 replay mismatch.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, fields, replace
from pathlib import Path

from . import experiments
from .dataset import GenConfig, gen_dataset
from .frames import export_frames
from .inverse import OptimConfig
from .mcts import PlannerConfig, solve
from .mesh import default_rect
from .raster import load_target
from .reward import RewardWeights
from .sequence import ConstructionSequence, ReplayError
from .tps import TpsConfig

EXIT_OK = 0
EXIT_IO = 2
EXIT_CONFIG = 3
EXIT_EMPTY = 4
EXIT_REPLAY = 5


class ConfigError(ValueError):
    pass


class EmptyInput(RuntimeError):
    pass


def parse_res(text) -> tuple[int, int]:
    if isinstance(text, (tuple, list)):
        w, h = text
    else:
        parts = str(text).lower().split("x")
        if len(parts) != 2:
            raise ConfigError(f"resolution must look like WxH, got {text!r}")
        w, h = parts
    try:
        w, h = int(w), int(h)
    except ValueError as exc:
        raise ConfigError(f"bad resolution {text!r}") from exc
    if w <= 0 or h <= 0:
        raise ConfigError(f"resolution must be positive, got {text!r}")
    return w, h


def parse_weights(text: str) -> dict[str, float]:
    parts = text.split(",")
    if len(parts) != 3:
        raise ConfigError(f"--weights needs three comma-separated numbers, got {text!r}")
    try:
        vals = [float(p) for p in parts]
    except ValueError as exc:
        raise ConfigError(f"bad weights {text!r}") from exc
    return dict(zip(("w_sm", "w_sc", "w_si"), vals))


@dataclass(frozen=True)
class RunConfig:
    """Every tunable of a run, flattened into one namespace.

    ``seed`` drives both the planner and the dataset generator.  Keys for the
    TPS fitter carry a ``tps_`` prefix; ``iterations`` belongs to the full
    inverse estimator.
    """

    res: tuple[int, int] = (64, 64)
    sigma: float = 1.0
    seed: int = 1
    # planner
    outer_steps: int = 12
    mcts_iterations: int = 100
    exploration: float = PlannerConfig.exploration
    n_sim: int = 4
    rollout_estimator: str = "dr_fast"
    stop_iou: float = 0.95
    extrude_length: float = 8.0
    patience: int = 2
    # inverse estimator
    iterations: int = 200
    eta: float = 1000.0
    min_eta: float = 1e-3
    max_halvings: int = 20
    ftol: float = 0.0
    # warp surrogate
    tps_m: int = 8
    tps_iterations: int = 100
    # dataset
    steps: int = 6
    jitter: float = 4.0
    count: int = 50
    margin: float = 2.0
    # reward
    w_sm: float = 100.0
    w_sc: float = 1.0
    w_si: float = 5.0
    out: str = ""

    def __post_init__(self):
        object.__setattr__(self, "res", parse_res(self.res))
        try:
            self.planner()
            self.gen()
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_mapping(cls, values: dict) -> "RunConfig":
        known = {f.name: f for f in fields(cls)}
        unknown = sorted(set(values) - set(known))
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        conv = {}
        for key, raw in values.items():
            conv[key] = _convert(key, known[key].type, raw)
        return cls(**conv)

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        return cls.from_mapping(read_config_file(path))

    def updated(self, **kw) -> "RunConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        try:
            return replace(self, **kw)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def weights(self) -> RewardWeights:
        return RewardWeights(self.w_sm, self.w_sc, self.w_si)

    def optim(self) -> OptimConfig:
        return OptimConfig(self.iterations, self.eta, self.min_eta, self.max_halvings, self.sigma, self.ftol)

    def planner(self) -> PlannerConfig:
        return PlannerConfig(
            outer_steps=self.outer_steps,
            mcts_iterations=self.mcts_iterations,
            exploration=self.exploration,
            n_sim=self.n_sim,
            rollout_estimator=self.rollout_estimator,
            stop_iou=self.stop_iou,
            weights=self.weights(),
            seed=self.seed,
            extrude_length=self.extrude_length,
            patience=self.patience,
            optim=self.optim(),
            tps=TpsConfig(m=self.tps_m, iterations=self.tps_iterations, sigma=self.sigma),
        )

    def gen(self) -> GenConfig:
        return GenConfig(self.steps, self.jitter, self.seed, self.count, self.res, self.extrude_length, self.margin)


def _convert(key, typ, raw):
    if key == "res":
        return parse_res(raw)
    typ = typ if isinstance(typ, str) else typ.__name__
    try:
        if typ == "int":
            if isinstance(raw, float) or (isinstance(raw, str) and not raw.lstrip("+-").isdigit()):
                raise ValueError
            return int(raw)
        if typ == "float":
            return float(raw)
        return str(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{key}: cannot read {raw!r} as {typ}") from exc


def read_config_file(path) -> dict[str, str]:
    """``key = value`` lines; ``#`` starts a comment, quotes around values are dropped."""
    values = {}
    for n, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{n}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        if len(val) >= 2 and val[0] == val[-1] and val[0] in "\"'":
            val = val[1:-1]
        if key in values:
            raise ConfigError(f"{path}:{n}: duplicate key {key!r}")
        values[key] = val
    return values


# -- commands ---------------------------------------------------------------------


def _summary(reward, steps: int) -> str:
    d = {"r_sm": reward.r_sm, "r_sc": reward.r_sc, "r_si": reward.r_si, "r_all": reward.r_all, "steps": steps}
    return json.dumps(d)


def _check_res(cfg: RunConfig, target, explicit: bool):
    if explicit and target.res != cfg.res:
        raise ConfigError(f"--res {cfg.res} does not match target resolution {target.res}")


def _default_out(target_path, suffix=".json") -> Path:
    return Path(Path(target_path).stem + suffix)


def cmd_solve(target_path, cfg: RunConfig, out_path=None, res_explicit=False) -> int:
    target = load_target(target_path)
    _check_res(cfg, target, res_explicit)
    seq = solve(default_rect(target.res), target, cfg.planner())
    seq.save(out_path or _default_out(target_path))
    row = experiments.score(Path(target_path).stem, seq, target, cfg.weights())
    print(_summary(row, len(seq)))
    return EXIT_OK


def cmd_baseline_dr(target_path, variant: str, cfg: RunConfig, out_path=None, res_explicit=False) -> int:
    target = load_target(target_path)
    _check_res(cfg, target, res_explicit)
    seq = experiments.baseline_dr(target, variant, cfg.optim(), cfg.weights())
    seq.save(out_path or _default_out(target_path, f".dr_{variant}.json"))
    row = experiments.score(Path(target_path).stem, seq, target, cfg.weights())
    print(_summary(row, len(seq)))
    return EXIT_OK


def _find_target(dataset_dir: Path, stem: str):
    for ext in (".png", ".pgm"):
        p = dataset_dir / f"{stem}{ext}"
        if p.exists():
            return p
    return None


def collect_results(dataset_dir, results_dir, weights: RewardWeights):
    """Score every ``<name>*.json`` sequence in ``results_dir`` against ``<name>.png``."""
    dataset_dir, results_dir = Path(dataset_dir), Path(results_dir)
    if not results_dir.is_dir():
        raise FileNotFoundError(f"no such results directory: {results_dir}")
    rows = []
    for path in sorted(results_dir.glob("*.json")):
        if path.name == "manifest.json" or path.name.endswith(".truth.json"):
            continue
        stem = path.name.split(".", 1)[0]
        tpath = _find_target(dataset_dir, stem)
        if tpath is None:
            continue
        seq = ConstructionSequence.load(path)
        seq.check_replay()
        rows.append(experiments.score(path.name[: -len(".json")], seq, load_target(tpath), weights))
    if not rows:
        raise EmptyInput(f"no scorable results in {results_dir}")
    return rows


def cmd_eval(dataset_dir, results_dir, cfg: RunConfig, out_path=None) -> int:
    rows = collect_results(dataset_dir, results_dir, cfg.weights())
    csv_path = Path(out_path) if out_path else Path(results_dir) / "eval.csv"
    csv_path.write_text(experiments.to_csv(rows))
    print(experiments.format_table(rows))
    return EXIT_OK


def cmd_render(sequence_path, out_dir, fmt: str, cfg: RunConfig) -> int:
    seq = ConstructionSequence.load(sequence_path)
    seq.check_replay()
    paths = export_frames(seq, out_dir, fmt, cfg.res)
    print(json.dumps({"frames": len(paths), "out": str(out_dir)}))
    return EXIT_OK


def cmd_gen(cfg: RunConfig, out_dir) -> int:
    manifest = gen_dataset(cfg.gen(), out_dir)
    print(json.dumps({"shapes": len(manifest["shapes"]), "out": str(out_dir)}))
    return EXIT_OK


# -- argument handling ------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="key = value run configuration file")
    common.add_argument("--seed", type=int)
    common.add_argument("--res", metavar="WxH")
    common.add_argument("--out", metavar="PATH")
    common.add_argument("--weights", metavar="SM,SC,SI")

    p = argparse.ArgumentParser(prog="polyseq", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    s = sub.add_parser("solve", parents=[common], help="search a construction sequence for a target")
    s.add_argument("target")
    b = sub.add_parser("baseline-dr", parents=[common], help="fixed-topology gradient-descent baseline")
    b.add_argument("target")
    b.add_argument("--variant", choices=experiments.VARIANTS, default="simple")
    e = sub.add_parser("eval", parents=[common], help="tabulate metrics of a results directory")
    e.add_argument("dataset_dir")
    e.add_argument("results_dir")
    r = sub.add_parser("render", parents=[common], help="export one frame per construction step")
    r.add_argument("sequence")
    r.add_argument("out_dir")
    r.add_argument("--format", choices=("svg", "png"), default="svg")
    g = sub.add_parser("gen", parents=[common], help="generate a synthetic target suite")
    g.add_argument("out_dir")
    return p


def load_run_config(args) -> RunConfig:
    cfg = RunConfig.from_file(args.config) if args.config else RunConfig()
    over = {"seed": args.seed, "out": args.out}
    if args.res:
        over["res"] = parse_res(args.res)
    if args.weights:
        over.update(parse_weights(args.weights))
    return cfg.updated(**over)


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_run_config(args)
        out = cfg.out or None
        if args.command == "solve":
            return cmd_solve(args.target, cfg, out, bool(args.res))
        if args.command == "baseline-dr":
            return cmd_baseline_dr(args.target, args.variant, cfg, out, bool(args.res))
        if args.command == "eval":
            return cmd_eval(args.dataset_dir, args.results_dir, cfg, out)
        if args.command == "render":
            return cmd_render(args.sequence, args.out_dir, args.format, cfg)
        return cmd_gen(cfg, args.out_dir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except EmptyInput as exc:
        print(f"empty input: {exc}", file=sys.stderr)
        return EXIT_EMPTY
    except ReplayError as exc:
        print(f"replay mismatch: {exc}", file=sys.stderr)
        return EXIT_REPLAY
    except (OSError, ValueError) as exc:
        # unreadable or malformed input files
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


def main() -> None:
    sys.exit(run())

