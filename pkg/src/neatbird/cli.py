"""Command line entry point: ``neatbird {run,sweep,replay,plot}``.

Exit status: 0 on success, 2 on a configuration or input error, 1 otherwise.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict, fields
from pathlib import Path
from typing import Sequence

from .env import Action, ConfigError, WorldConfig, load_world_config, run_episode
from .evolution import EvolutionConfig, SeedPolicy, Selection, run_evolution
from .genome import GenomeError, MutationParams, genome_policy
from .harness import (
    DEFAULT_POPULATIONS,
    SweepSpec,
    emit_line_chart,
    load_champion,
    run_sweep,
    write_run_outputs,
)


class InputError(Exception):
    """Bad user input; reported with exit status 2."""


def _int_list(text: str) -> tuple[int, ...]:
    try:
        values = tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--world-config", type=Path, help="key = value physics file")
    p.add_argument(
        "--out",
        type=Path,
        default=Path(os.environ.get("NEATBIRD_OUT", "out")),
        help="output directory (default: $NEATBIRD_OUT or ./out)",
    )
    p.add_argument("--dry-run", action="store_true", help="validate and print the resolved parameters")


def _add_evolution(p: argparse.ArgumentParser) -> None:
    p.add_argument("--generations", type=int, default=50)
    p.add_argument("--elitism", type=int, default=2)
    p.add_argument("--selection", choices=[s.value for s in Selection], default=Selection.FITNESS_PROPORTIONATE.value)
    p.add_argument("--tournament-k", type=int, default=3)
    p.add_argument("--seed-policy", choices=[s.value for s in SeedPolicy], default=SeedPolicy.FIXED_PER_GENERATION.value)
    p.add_argument("--episodes", type=int, default=1, help="episodes per genome per generation")
    defaults = MutationParams()
    for f in fields(MutationParams):
        p.add_argument("--" + f.name.replace("_", "-"), type=float, default=getattr(defaults, f.name))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="neatbird", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="one evolution run")
    _add_common(run)
    _add_evolution(run)
    run.add_argument("--population", type=int, default=100)
    run.add_argument("--master-seed", type=int, default=0)
    run.add_argument("--dump-champion", action=argparse.BooleanOptionalAction, default=True)

    sweep = sub.add_parser("sweep", help="population-size sweep")
    _add_common(sweep)
    _add_evolution(sweep)
    sweep.add_argument("--populations", type=_int_list, default=DEFAULT_POPULATIONS)
    sweep.add_argument("--seeds", type=int, default=5, help="number of master seeds, counted from --base-seed")
    sweep.add_argument("--base-seed", type=int, default=0)
    sweep.add_argument("--seed-list", type=_int_list, help="explicit master seeds (overrides --seeds)")
    sweep.add_argument("--sweep-id", default="sweep")
    sweep.add_argument("--jobs", type=int, default=1)

    replay = sub.add_parser("replay", help="play a champion file through the reference world")
    replay.add_argument("--champion", type=Path, required=True)
    replay.add_argument("--seed", type=int, help="episode seed (default: the one recorded in the file)")
    replay.add_argument("--world-config", type=Path)
    replay.add_argument("--trace", action="store_true", help="print one line per frame")

    plot = sub.add_parser("plot", help="CSV to SVG line chart")
    plot.add_argument("--csv", type=Path, required=True)
    plot.add_argument("--columns", required=True, help="comma-separated column names")
    plot.add_argument("--x", dest="x_column")
    plot.add_argument("--title")
    plot.add_argument("--out", type=Path, required=True, help="SVG path")
    return parser


def _world(path: Path | None) -> WorldConfig:
    if path is None:
        return WorldConfig()
    try:
        return load_world_config(path)
    except OSError as exc:
        raise InputError(f"cannot read world config {path}: {exc.strerror}") from None


def _evo_overrides(args: argparse.Namespace) -> dict:
    return dict(
        elitism_count=args.elitism,
        selection=Selection(args.selection),
        tournament_k=args.tournament_k,
        episode_seed_policy=SeedPolicy(args.seed_policy),
        episodes_per_genome=args.episodes,
        mutation_params=MutationParams(**{f.name: getattr(args, f.name) for f in fields(MutationParams)}),
    )


def _resolved(evo: dict, world: WorldConfig, **extra) -> str:
    def plain(v):
        if isinstance(v, dict):
            return {k: plain(x) for k, x in v.items()}
        if isinstance(v, (tuple, list)):
            return [plain(x) for x in v]
        return getattr(v, "value", v)

    evo = {k: (asdict(v) if isinstance(v, MutationParams) else v) for k, v in evo.items()}
    return json.dumps(plain({**extra, "evolution": evo, "world": asdict(world)}), indent=2, sort_keys=True)


def cmd_run(args: argparse.Namespace) -> int:
    world = _world(args.world_config)
    try:
        overrides = _evo_overrides(args)
        evo = EvolutionConfig(
            population_size=args.population, generations=args.generations, master_seed=args.master_seed, **overrides
        )
    except ValueError as exc:
        raise InputError(str(exc)) from None
    if args.dry_run:
        print(_resolved(asdict(evo), world, command="run", out=str(args.out)))
        return 0
    result = run_evolution(evo, world)
    for path in write_run_outputs(result, args.out, dump_champion=args.dump_champion):
        print(path)
    best = max(s.max_score for s in result.stats)
    print(f"best score {best:g}, champion score {result.champion_score:g} on episode seed {result.champion_seed}")
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    world = _world(args.world_config)
    seeds = args.seed_list or tuple(range(args.base_seed, args.base_seed + args.seeds))
    try:
        overrides = _evo_overrides(args)
        spec = SweepSpec(
            population_sizes=tuple(args.populations),
            generations=args.generations,
            seeds=tuple(seeds),
            world_config=world,
            evo_overrides=overrides,
        )
        for p in spec.population_sizes:
            spec.evo_config(p, spec.seeds[0])
    except ValueError as exc:
        raise InputError(str(exc)) from None
    out = args.out / args.sweep_id
    if args.dry_run:
        print(
            _resolved(
                overrides,
                world,
                command="sweep",
                out=str(out),
                populations=spec.population_sizes,
                seeds=spec.seeds,
                generations=spec.generations,
            )
        )
        return 0
    report = run_sweep(spec, out, jobs=max(1, args.jobs))
    print("population,median_average_score,median_max_score,first_spike_generation")
    for p in report.populations:
        print(f"{p.population},{p.median_average_score:.2f},{p.median_max_score:g},{p.first_spike_generation}")
    print(out / "summary.csv")
    return 0


def cmd_replay(args: argparse.Namespace) -> int:
    try:
        champ = load_champion(args.champion)
    except OSError as exc:
        raise InputError(f"cannot read champion file {args.champion}: {exc.strerror}") from None
    except (GenomeError, ConfigError) as exc:
        raise InputError(f"malformed champion file {args.champion}: {exc}") from None
    if args.world_config is not None:
        world = _world(args.world_config)
    else:
        world = champ.world_config or WorldConfig()
    seed = args.seed if args.seed is not None else champ.episode_seed
    if seed is None:
        raise InputError(f"champion file {args.champion} records no episode_seed; pass --seed")
    try:
        policy = genome_policy(champ.genome, scale=world.screen_height)
    except GenomeError as exc:
        raise InputError(f"malformed champion file {args.champion}: {exc}") from None

    trace = None
    if args.trace:
        print("tick,action,y,velocity_y,score")

        def trace(world_state, action):
            b = world_state.bird
            print(f"{world_state.tick},{int(action == Action.FLAP)},{b.y:.6f},{b.velocity_y:.6f},{world_state.score}")

    result = run_episode(world, seed, policy, trace=trace)
    print(f"score={result.score} frames={result.frames} end={result.end.value} seed={seed}")
    if champ.score is not None and seed == champ.episode_seed:
        print(f"recorded_score={champ.score:g} match={'yes' if champ.score == result.score else 'no'}")
    return 0


def cmd_plot(args: argparse.Namespace) -> int:
    columns = [c.strip() for c in args.columns.split(",") if c.strip()]
    try:
        path = emit_line_chart(args.csv, columns, args.out, x_column=args.x_column, title=args.title)
    except OSError as exc:
        raise InputError(f"cannot read {args.csv}: {exc.strerror}") from None
    except ValueError as exc:
        raise InputError(str(exc)) from None
    print(path)
    return 0


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "replay": cmd_replay, "plot": cmd_plot}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (InputError, ConfigError) as exc:
        print(f"neatbird {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"neatbird {args.command}: internal error: {exc!r}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
