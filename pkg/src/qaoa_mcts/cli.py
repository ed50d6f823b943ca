"""Command-line experiment runner.

Subcommands: ``generate``, ``run``, ``landscape``, ``noise-study``, ``hybrid``,
``aggregate``. Experiments are described by a JSON config file; flags override
file values. Every per-run seed is derived from the master seed together with
the instance, repeat and depth indices, so a rerun reproduces all artifacts.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import io
import json
import os
import sys
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path
from typing import Any, Optional, Sequence

from .analysis import DEFAULT_LEAF_CAP, LeafEnumeration, approximation_ratio, fmt, summarize
from .hybrid import LocalMinimizerConfig, basin_rollout_game, mcts_then_descend
from .mcts import GameResult, MctsConfig, SearchSpace, play_game
from .problems import (MaxCutGraph, SatInstance, build_diagonal, cubic10_graphs, format_dimacs,
                       format_edgelist, generate_regular_graph, generate_sat_unique, load_instance)
from .qaoa import evaluate_cost
from .ssr import RestrictionEdges, SofteningSchedule, derive_seed, restrict, run_iterative

OUTDIR_ENV = "QAOA_MCTS_OUTDIR"
PROTOCOLS = ("vanilla", "sp", "ssr", "ssr_sp", "hybrid_init", "hybrid_basin")


class ExperimentError(Exception):
    exit_code = 1


class ConfigFileError(ExperimentError):
    exit_code = 2


def default_outdir() -> str:
    return os.environ.get(OUTDIR_ENV, "results")


@dataclass
class ExperimentConfig:
    name: str = "experiment"
    # {"type": "3sat"|"maxcut", "files": [...]} or {"type": ..., "generate": {...}}
    # or {"type": "maxcut", "cubic10": true}
    problem: dict = field(default_factory=lambda: {"type": "3sat", "generate": {"n": 7, "alpha": 3.0, "count": 1}})
    protocol: str = "ssr"
    mcts: dict = field(default_factory=dict)
    p_min: int = 1
    p_max: int = 4
    repeats: int = 1
    softening: Optional[list] = None
    edges: dict = field(default_factory=dict)
    minimizer: dict = field(default_factory=dict)
    hybrid_repeats: int = 10
    # noise-study: noise levels and the depths P whose P -> P+1 step is studied
    noise: list = field(default_factory=lambda: [0.0])
    noise_steps: list = field(default_factory=lambda: [1])
    # landscape: "unrestricted" or the path of a depth_<P>.json result to restrict around
    landscape_from: Optional[str] = None
    landscape_delta: float = 0.0
    leaf_cap: int = DEFAULT_LEAF_CAP
    outdir: Optional[str] = None
    seed: int = 0
    jobs: int = 1

    def __post_init__(self):
        if self.protocol not in PROTOCOLS:
            raise ConfigFileError(f"protocol must be one of {PROTOCOLS}, got {self.protocol!r}")
        if not 1 <= self.p_min <= self.p_max:
            raise ConfigFileError("need 1 <= p_min <= p_max")
        if self.repeats < 1 or self.jobs < 1:
            raise ConfigFileError("repeats and jobs must be at least 1")
        if self.problem.get("type") not in ("3sat", "maxcut"):
            raise ConfigFileError("problem.type must be '3sat' or 'maxcut'")
        for path in self.problem.get("files", []):
            if not Path(path).is_file():
                raise ConfigFileError(f"instance file not found: {path}")
        if self.landscape_from is not None and not Path(self.landscape_from).is_file():
            raise ConfigFileError(f"landscape source not found: {self.landscape_from}")
        try:
            self.mcts_config()
            self.minimizer_config()
            self.restriction_edges()
        except (TypeError, ValueError) as exc:
            raise ConfigFileError(str(exc)) from None

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigFileError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def mcts_config(self, **overrides) -> MctsConfig:
        fields = {k: v for k, v in self.mcts.items() if k not in ("seed", "variant")}
        fields.update(overrides)
        return MctsConfig(**fields)

    def minimizer_config(self) -> LocalMinimizerConfig:
        return LocalMinimizerConfig(**self.minimizer)

    def restriction_edges(self) -> RestrictionEdges:
        return RestrictionEdges(**self.edges)

    def softening_schedule(self) -> SofteningSchedule:
        return SofteningSchedule() if self.softening is None else SofteningSchedule(tuple(self.softening))

    @property
    def root(self) -> Path:
        return Path(self.outdir or default_outdir()) / self.name


def load_config(path: Optional[str]) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigFileError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigFileError(f"{path}:{exc.lineno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ConfigFileError(f"{path}: top level must be an object")
    return data


def apply_overrides(data: dict, args: argparse.Namespace) -> dict:
    data = json.loads(json.dumps(data))
    mcts = data.setdefault("mcts", {})
    simple = {"seed": "seed", "jobs": "jobs", "outdir": "outdir", "protocol": "protocol", "p_max": "p_max"}
    for attr, key in simple.items():
        value = getattr(args, attr, None)
        if value is not None:
            data[key] = value
    for attr, key in (("branching", "b"), ("cycles_initial", "cycles_initial"),
                      ("cycles_per_turn", "cycles_per_turn")):
        value = getattr(args, attr, None)
        if value is not None:
            mcts[key] = value
    noise = getattr(args, "noise", None)
    if noise is not None:
        if len(noise) == 1 and getattr(args, "command", "") != "noise-study":
            mcts["noise_sigma"] = noise[0]
        else:
            data["noise"] = noise
    if data.get("p_max") is not None and data.get("p_min", 1) > data["p_max"]:
        data["p_min"] = data["p_max"]
    return data


# --- instances -------------------------------------------------------------

def resolve_instances(config: ExperimentConfig) -> list[tuple[str, Any]]:
    """(label, instance) pairs, in a fixed order."""
    spec = config.problem
    if spec.get("files"):
        return [(Path(p).stem, load_instance(p)) for p in spec["files"]]
    if spec.get("cubic10"):
        return [(f"graph_{k:02d}", g) for k, g in enumerate(cubic10_graphs())]
    gen = spec.get("generate")
    if gen is None:
        raise ConfigFileError("problem needs 'files', 'generate' or 'cubic10'")
    return generate_instances(spec["type"], gen, config.seed)


def generate_instances(kind: str, params: dict, seed: int) -> list[tuple[str, Any]]:
    count = int(params.get("count", 1))
    out = []
    for k in range(count):
        s = derive_seed(seed, k)
        if kind == "3sat":
            inst = generate_sat_unique(int(params.get("n", 7)), float(params.get("alpha", 3.0)), seed=s)
            out.append((f"sat_{k:02d}", inst))
        else:
            inst = generate_regular_graph(int(params.get("n", 10)), int(params.get("degree", 3)), seed=s)
            out.append((f"graph_{k:02d}", inst))
    return out


def write_instance(path: Path, instance, comments: Sequence[str]) -> Path:
    if isinstance(instance, SatInstance):
        path = path.with_suffix(".cnf")
        path.write_text(format_dimacs(instance, comments))
    else:
        path = path.with_suffix(".txt")
        path.write_text(format_edgelist(instance, comments))
    return path


# --- protocols -------------------------------------------------------------

@dataclass
class RunTask:
    config: dict
    label: str
    instance_index: int
    repeat: int
    instance: Any


def _run_dir(config: ExperimentConfig, task: RunTask, protocol: str) -> Path:
    d = config.root / task.label / protocol
    if config.repeats > 1:
        d = d / f"repeat_{task.repeat:02d}"
    return d


def _write_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".tmp")
    tmp.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    tmp.replace(path)


def _digest(config: ExperimentConfig) -> str:
    """Fingerprint of everything that shapes a run's search, for safe restarts."""
    keys = ("problem", "mcts", "softening", "edges", "minimizer", "hybrid_repeats")
    blob = json.dumps({k: getattr(config, k) for k in keys}, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _load_finished(directory: Path, seed: int, digest: str) -> list[GameResult]:
    """Consecutive finished depths 1..k from an identically configured run, for restart."""
    done = []
    depth = 1
    while (directory / f"depth_{depth}.json").is_file():
        d = json.loads((directory / f"depth_{depth}.json").read_text())
        if d.get("run_seed") != seed or d.get("config_digest") != digest:
            break
        done.append(GameResult.from_dict(d))
        depth += 1
    return done


def execute(task: RunTask) -> list[dict]:
    """One (instance, repeat) run of the configured protocol; returns one row per depth."""
    config = ExperimentConfig.from_dict(task.config)
    protocol = config.protocol
    diagonal = build_diagonal(task.instance)
    run_seed = derive_seed(config.seed, task.instance_index, task.repeat)
    directory = _run_dir(config, task, protocol)
    variant = "single_player" if protocol in ("sp", "ssr_sp") else "vanilla"
    mcts = config.mcts_config(variant=variant, seed=run_seed)
    oracle = partial(evaluate_cost, diagonal)
    digest = _digest(config)

    def save(result: GameResult) -> None:
        payload = result.to_dict()
        payload.update(run_seed=run_seed, instance=task.label, protocol=protocol, repeat=task.repeat,
                       config_digest=digest)
        _write_json(directory / f"depth_{result.depth}.json", payload)

    results: list[GameResult] = []
    if protocol in ("ssr", "ssr_sp"):
        resume = _load_finished(directory, run_seed, digest)[: config.p_max]
        results = run_iterative(diagonal, config.p_max, mcts, config.softening_schedule(),
                                config.restriction_edges(), resume=resume, on_depth=save)
        results = [r for r in results if r.depth >= config.p_min]
    else:
        for depth in range(config.p_min, config.p_max + 1):
            game_config = dataclasses.replace(mcts, seed=derive_seed(run_seed, depth))
            space = SearchSpace.unrestricted(depth, mcts.b)
            if protocol in ("vanilla", "sp"):
                result = play_game(space, oracle, game_config)
            elif protocol == "hybrid_init":
                outcome = mcts_then_descend(diagonal, depth, game_config, config.minimizer_config(),
                                            config.hybrid_repeats)
                best = min(outcome.games, key=lambda g: g.energy)
                result = dataclasses.replace(
                    best, schedule=outcome.schedule, energy=outcome.energy,
                    n_fev=sum(g.n_fev for g in outcome.games), n_fev_local=outcome.n_fev_local,
                    seed=game_config.seed)
            else:
                result = basin_rollout_game(diagonal, space, game_config, config.minimizer_config())
            save(result)
            results.append(result)
    return [_row(config, task, run_seed, r, diagonal) for r in results]


def _row(config: ExperimentConfig, task: RunTask, run_seed: int, result: GameResult, diagonal) -> dict:
    row = {
        "experiment": config.name,
        "instance": task.label,
        "protocol": config.protocol,
        "repeat": task.repeat,
        "depth": result.depth,
        "seed": result.seed,
        "run_seed": run_seed,
        "energy": fmt(result.energy),
        "best_rollout_energy": fmt(result.best_rollout_energy),
        "n_fev": result.n_fev,
        "n_fev_local": result.n_fev_local,
        "ratio": "",
        "gammas": " ".join(fmt(x) for x in result.schedule.gammas),
        "betas": " ".join(fmt(x) for x in result.schedule.betas),
    }
    if isinstance(task.instance, MaxCutGraph):
        row["ratio"] = fmt(approximation_ratio(diagonal, result.energy, task.instance.num_edges))
    return row


def _map(fn, tasks: list, jobs: int) -> list:
    if jobs <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, tasks))


def _write_rows(path: Path, rows: list[dict]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)


def _summaries_by(rows: list[dict], keys: Sequence[str], value: str = "energy") -> dict:
    groups: dict[tuple, list[float]] = {}
    for r in rows:
        groups.setdefault(tuple(r[k] for k in keys), []).append(float(r[value]))
    return {k: summarize(v) for k, v in sorted(groups.items())}


def _write_grouped_summary(path: Path, rows: list[dict], keys: Sequence[str], seed: int) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([*keys, "mean", "std", "best", "count", "seed"])
        for k, s in _summaries_by(rows, keys).items():
            cells = [fmt(v) if isinstance(v, float) else v for v in k]
            writer.writerow([*cells, fmt(s.mean), fmt(s.std), fmt(s.best), s.count, seed])


def run_experiment(config: ExperimentConfig) -> list[dict]:
    instances = resolve_instances(config)
    tasks = [RunTask(config.to_dict(), label, i, r, inst)
             for i, (label, inst) in enumerate(instances) for r in range(config.repeats)]
    per_task = _map(execute, tasks, config.jobs)
    rows = [row for chunk in per_task for row in chunk]
    root = config.root
    _write_rows(root / f"results_{config.protocol}.csv", rows)
    _write_grouped_summary(root / f"summary_{config.protocol}.csv", rows, ("depth",), config.seed)
    _write_json(root / f"config_{config.protocol}.json", config.to_dict())
    return rows


# --- noise study -----------------------------------------------------------

@dataclass
class NoiseTask:
    config: dict
    label: str
    instance_index: int
    instance: Any


def execute_noise(task: NoiseTask) -> list[dict]:
    """Noiseless SSR up to each studied depth P, then repeated noisy P -> P+1 steps."""
    config = ExperimentConfig.from_dict(task.config)
    diagonal = build_diagonal(task.instance)
    oracle = partial(evaluate_cost, diagonal)
    base_seed = derive_seed(config.seed, task.instance_index)
    mcts = config.mcts_config(variant="vanilla", seed=base_seed)
    softening = config.softening_schedule()
    edges = config.restriction_edges()
    steps = sorted(int(p) for p in config.noise_steps)
    ladder = run_iterative(diagonal, max(steps), mcts, softening, edges)
    rows = []
    for p in steps:
        space = restrict(ladder[p - 1].schedule, softening.delta(p + 1), edges, mcts.b)
        for k, ns in enumerate(config.noise):
            for r in range(config.repeats):
                seed = derive_seed(config.seed, task.instance_index, r, p + 1, k)
                game = play_game(space, oracle, dataclasses.replace(mcts, noise_sigma=float(ns), seed=seed))
                rows.append({
                    "experiment": config.name,
                    "instance": task.label,
                    "step": f"{p}->{p + 1}",
                    "noise": fmt(ns),
                    "repeat": r,
                    "seed": seed,
                    "energy": fmt(game.energy),
                    "previous_energy": fmt(ladder[p - 1].energy),
                    "n_fev": game.n_fev,
                })
    return rows


def run_noise_study(config: ExperimentConfig) -> list[dict]:
    tasks = [NoiseTask(config.to_dict(), label, i, inst)
             for i, (label, inst) in enumerate(resolve_instances(config))]
    rows = [row for chunk in _map(execute_noise, tasks, config.jobs) for row in chunk]
    root = config.root
    _write_rows(root / "noise.csv", rows)
    _write_grouped_summary(root / "noise_summary.csv", rows, ("instance", "step", "noise"), config.seed)
    return rows


# --- landscape -------------------------------------------------------------

def run_landscape(config: ExperimentConfig) -> list[Path]:
    b = config.mcts_config().b
    written = []
    for label, instance in resolve_instances(config):
        diagonal = build_diagonal(instance)
        if config.landscape_from:
            previous = GameResult.from_dict(json.loads(Path(config.landscape_from).read_text()))
            space = restrict(previous.schedule, config.landscape_delta, config.restriction_edges(), b)
            tag = f"ssr_P{space.depth}"
        else:
            space = SearchSpace.unrestricted(config.p_max, b)
            tag = f"unrestricted_P{space.depth}"
        enum = LeafEnumeration(diagonal, space, cap=config.leaf_cap)
        path = config.root / label / f"landscape_{tag}.csv"
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            enum.write_csv(fh, {"seed": config.seed})
        written.append(path)
        print(f"{path}: {len(enum)} leaves, optimum {fmt(enum.optimum_energy)} at {list(enum.optimum_choices)}")
    return written


# --- aggregate -------------------------------------------------------------

def collect_results(root: Path) -> list[dict]:
    rows = []
    for path in sorted(root.rglob("depth_*.json")):
        d = json.loads(path.read_text())
        rows.append({
            "path": str(path.relative_to(root)),
            "instance": d.get("instance", ""),
            "protocol": d.get("protocol", ""),
            "repeat": d.get("repeat", 0),
            "depth": d["depth"],
            "seed": d.get("seed"),
            "energy": fmt(d["energy"]),
            "n_fev": d["n_fev"],
        })
    return rows


def run_aggregate(root: Path, out: Optional[Path] = None) -> str:
    rows = collect_results(root)
    if not rows:
        raise ExperimentError(f"no depth_*.json results under {root}")
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["protocol", "depth", "mean", "std", "best", "count"])
    for (protocol, depth), s in _summaries_by(rows, ("protocol", "depth")).items():
        writer.writerow([protocol, depth, fmt(s.mean), fmt(s.std), fmt(s.best), s.count])
    text = buffer.getvalue()
    if out is not None:
        out.write_text(text)
    return text


# --- entry point -----------------------------------------------------------

def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON experiment config")
    parser.add_argument("--seed", type=int, help="master seed")
    parser.add_argument("--jobs", type=int, help="worker processes")
    parser.add_argument("--outdir", help=f"output root (default ${OUTDIR_ENV} or ./results)")
    parser.add_argument("--protocol", choices=PROTOCOLS)
    parser.add_argument("--p-max", type=int, dest="p_max")
    parser.add_argument("--branching", type=int, help="grid points per angle")
    parser.add_argument("--noise", type=float, nargs="+", help="noise strength(s)")
    parser.add_argument("--cycles-initial", type=int, dest="cycles_initial")
    parser.add_argument("--cycles-per-turn", type=int, dest="cycles_per_turn")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qaoa-mcts", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write benchmark instances and a manifest")
    _common(gen)
    gen.add_argument("--problem", choices=("3sat", "maxcut", "cubic10"), default="3sat")
    gen.add_argument("--n", type=int, default=None)
    gen.add_argument("--alpha", type=float, default=3.0)
    gen.add_argument("--degree", type=int, default=3)
    gen.add_argument("--count", type=int, default=1)

    for name, text in (("run", "run a protocol over instances and repeats"),
                       ("landscape", "enumerate every leaf of a search space"),
                       ("noise-study", "SSR steps under Gaussian cost noise"),
                       ("hybrid", "MCTS combined with local descent")):
        _common(sub.add_parser(name, help=text))

    agg = sub.add_parser("aggregate", help="summarize stored per-depth results")
    _common(agg)
    agg.add_argument("root", nargs="?", help="results directory to scan")
    agg.add_argument("--out", help="write the summary CSV here")
    return parser


def cmd_generate(args) -> None:
    seed = 0 if args.seed is None else args.seed
    outdir = Path(args.outdir or default_outdir())
    outdir.mkdir(parents=True, exist_ok=True)
    if args.problem == "cubic10":
        instances = [(f"graph_{k:02d}", g) for k, g in enumerate(cubic10_graphs())]
        params = {"problem": "cubic10"}
    else:
        kind = args.problem
        n = args.n or (7 if kind == "3sat" else 10)
        params = {"problem": kind, "n": n, "count": args.count}
        params.update({"alpha": args.alpha} if kind == "3sat" else {"degree": args.degree})
        instances = generate_instances(kind, params, seed)
    manifest = {"seed": seed, "parameters": params, "files": []}
    for k, (label, inst) in enumerate(instances):
        inst_seed = derive_seed(seed, k) if args.problem != "cubic10" else None
        path = write_instance(outdir / label, inst, [f"seed {inst_seed}", f"index {k}"])
        manifest["files"].append({"path": path.name, "seed": inst_seed})
        print(path)
    _write_json(outdir / "manifest.json", manifest)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "generate":
            cmd_generate(args)
            return 0
        if args.command == "aggregate":
            root = Path(args.root or args.outdir or default_outdir())
            sys.stdout.write(run_aggregate(root, Path(args.out) if args.out else None))
            return 0
        data = apply_overrides(load_config(args.config), args)
        if args.command == "hybrid" and data.get("protocol") not in ("hybrid_init", "hybrid_basin"):
            data["protocol"] = "hybrid_init"
        config = ExperimentConfig.from_dict(data)
        if args.command == "landscape":
            run_landscape(config)
        elif args.command == "noise-study":
            rows = run_noise_study(config)
            print(f"{len(rows)} noisy games written to {config.root / 'noise.csv'}")
        else:
            rows = run_experiment(config)
            for (depth,), s in _summaries_by(rows, ("depth",)).items():
                print(f"P={depth} mean={fmt(s.mean)} std={fmt(s.std)} best={fmt(s.best)} n={s.count}")
        return 0
    except ExperimentError as exc:
        _report(exc, exc.exit_code)
        return exc.exit_code
    except Exception as exc:  # structured report, partial results stay on disk
        _report(exc, 1, traceback.format_exc())
        return 1


def _report(exc: Exception, code: int, trace: Optional[str] = None) -> None:
    payload = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    if trace and os.environ.get("QAOA_MCTS_DEBUG"):
        payload["traceback"] = trace
    print(json.dumps(payload), file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
