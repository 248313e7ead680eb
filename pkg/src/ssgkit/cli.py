"""Command-line harness.

Subcommands: gen-games, gen-data, train, solve, score, table1, table2,
timing.  Every subcommand takes --seed and --out and, rerun with identical
flags, rewrites identical bytes (the exception is measured wall-clock time,
which lands in timing CSVs and .meta.json sidecars only).
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import datagen, harness
from .behavior import Rational, exact_leader_value, model_label, model_to_json, parse_model_spec
from .evolution import EvolutionConfig, evolve, exact_evaluator
from .game import ValidationError
from .senn import TrainConfig, build, senn_evaluator, train


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split(","))


def _add_evolution_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file with evolution parameters")
    p.add_argument("--pop", type=int, help="population size")
    p.add_argument("--gens", type=int, help="number of generations")
    p.add_argument("--mut", type=float, help="mutation rate")
    p.add_argument("--cx", type=float, help="crossover rate")
    p.add_argument("--pressure", type=float, help="tournament selection pressure")
    p.add_argument("--elite", type=int, help="elite size")
    p.add_argument("--max-support", type=int, dest="max_support_evo",
                   help="support cap applied at crossover")


def _evolution_config(args, default: EvolutionConfig) -> EvolutionConfig:
    cfg = default
    if args.config:
        raw = datagen._read_json(args.config)
        if not isinstance(raw, dict):
            raise datagen.ParseError(f"{args.config}: expected a JSON object")
        known = set(EvolutionConfig.__dataclass_fields__)
        bad = set(raw) - known
        if bad:
            raise ValidationError(f"unknown evolution config keys: {sorted(bad)}")
        cfg = replace(cfg, **raw)
    overrides = {
        "population_size": args.pop, "generations": args.gens,
        "mutation_rate": args.mut, "crossover_rate": args.cx,
        "selection_pressure": args.pressure, "elite_size": args.elite,
        "max_support": args.max_support_evo,
    }
    cfg = replace(cfg, **{k: v for k, v in overrides.items() if v is not None})
    return replace(cfg, seed=args.seed)


def _train_config(args) -> TrainConfig:
    cfg = TrainConfig(seed=args.seed)
    overrides = {"max_epochs": getattr(args, "epochs", None),
                 "batch_size": getattr(args, "batch", None),
                 "lr": getattr(args, "lr", None),
                 "patience": getattr(args, "patience", None)}
    return replace(cfg, **{k: v for k, v in overrides.items() if v is not None})


def _write_history(path, history) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["generation", "best", "mean", "evaluations", "wall_ms"])
        for row in history:
            writer.writerow([row.generation, repr(row.best), repr(row.mean),
                             row.evaluations, f"{row.wall_ms:.3f}"])


def _cmd_gen_games(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {"seed": args.seed, "games": []}
    index = 0
    for m in args.steps:
        for n in args.targets:
            for gi in range(args.per_pair):
                game = datagen.gen_benchmark_game(n, m, datagen.rng_for(args.seed, index))
                name = f"game_n{n}_m{m}_{gi}.json"
                datagen.save_game(game, out / name)
                manifest["games"].append({"file": name, "targets": n, "steps": m,
                                          "index": gi, "stream": index})
                index += 1
    datagen._write_json(out / "manifest.json", manifest)
    print(f"wrote {index} games and manifest.json to {out}")
    return 0


def _cmd_gen_data(args) -> int:
    game = datagen.load_game(args.game)
    model = parse_model_spec(args.model)
    rng = datagen.rng_for(args.seed, 0)
    sizes: dict[int, int] = {}
    examples = []
    for strategy, example in datagen.iter_training_examples(
            game, model, args.count, rng, args.max_support):
        sizes[strategy.support_size] = sizes.get(strategy.support_size, 0) + 1
        examples.append(example)
    datagen.save_dataset(examples, game.num_targets, game.num_steps, args.out)
    datagen.save_examples_meta(str(args.out) + ".meta.json", count=args.count,
                               support_sizes=sizes, model_json=model_to_json(model),
                               seed=args.seed, max_support=args.max_support)
    print(f"wrote {args.count} examples to {args.out}")
    return 0


def _cmd_train(args) -> int:
    examples, n, m = datagen.load_dataset(args.data)
    val_count = max(1, round(args.val_frac * len(examples)))
    if val_count >= len(examples):
        raise ValidationError("dataset too small for the requested validation fraction")
    train_set, val_set = examples[:-val_count], examples[-val_count:]
    net = build(n, m, datagen.rng_for(args.seed, 1))
    net, report = train(net, train_set, val_set, _train_config(args))
    datagen.save_network(net, args.out)
    print(f"trained {report.epochs_run} epochs, validation MAE {report.final_mae:.6f}, "
          f"network saved to {args.out}")
    return 0


def _cmd_solve(args) -> int:
    game = datagen.load_game(args.game)
    if args.solver == "easg":
        evaluator = exact_evaluator(Rational())
    elif args.solver == "easg_br":
        if not args.model:
            raise ValidationError("--model is required for solver easg_br")
        evaluator = exact_evaluator(parse_model_spec(args.model))
    elif args.solver == "nesg":
        if not args.net:
            raise ValidationError("--net is required for solver nesg")
        evaluator = senn_evaluator(datagen.load_network(args.net), game)
    else:
        raise ValidationError(f"unknown solver {args.solver!r}")
    config = _evolution_config(args, harness.DESK_EVOLUTION)
    result = evolve(game, evaluator, config, np.random.default_rng(config.seed))
    datagen.save_strategy(result.best_strategy, args.out)
    if args.history:
        _write_history(args.history, result.history)
    print(f"best fitness {result.best_value!r}, strategy saved to {args.out}")
    return 0


def _cmd_score(args) -> int:
    game = datagen.load_game(args.game)
    strategy = datagen.load_strategy(args.strategy)
    model = parse_model_spec(args.model)
    value = exact_leader_value(game, strategy, model)
    print(repr(value))
    return 0


def _models(args) -> list:
    return [parse_model_spec(s) for s in args.models.split("|")]


def _write_report(report, out_prefix: str) -> None:
    report.write_csv(out_prefix + ".csv")
    report.write_json(out_prefix + ".meta.json")
    print(harness.render_table(report))
    print(f"\nwrote {out_prefix}.csv and {out_prefix}.meta.json")


def _cmd_table1(args) -> int:
    grid = harness.PAPER_GRID if args.paper_scale else harness.DESK_GRID
    report = harness.run_senn_error(
        targets=args.targets or grid["targets"],
        steps=args.steps or grid["steps"],
        games_per_pair=args.games or grid["games_per_pair"],
        models=_models(args), seed=args.seed,
        train_size=args.train_size, test_size=args.test_size,
        train_config=_train_config(args))
    _write_report(report, args.out)
    return 0


def _cmd_table2(args) -> int:
    grid = harness.PAPER_GRID if args.paper_scale else harness.DESK_GRID
    evolution = harness.PAPER_EVOLUTION if args.paper_scale else harness.DESK_EVOLUTION
    report = harness.run_payoff_comparison(
        targets=args.targets or grid["targets"],
        steps=args.steps or (1,),
        games_per_pair=args.games or grid["games_per_pair"],
        models=_models(args), solvers=tuple(args.solvers.split(",")),
        seed=args.seed, evolution=_evolution_config(args, evolution),
        train_size=args.train_size, train_config=_train_config(args),
        repeats=args.repeats)
    _write_report(report, args.out)
    return 0


def _cmd_timing(args) -> int:
    report = harness.run_timing(
        targets=args.targets, steps=args.steps, seed=args.seed,
        model=parse_model_spec(args.model),
        evolution=EvolutionConfig(population_size=args.pop or 30,
                                  generations=args.gens or 20, seed=args.seed),
        train_size=args.train_size, train_config=_train_config(args))
    _write_report(report, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ssgkit",
        description="Security-game toolkit: generate games, train the payoff "
                    "surrogate, evolve defender strategies, reproduce reports.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-games", help="generate benchmark games into a directory")
    p.add_argument("--steps", type=_ints, default=(1, 2, 4))
    p.add_argument("--targets", type=_ints, default=(4, 8, 16, 32, 64, 128))
    p.add_argument("--per-pair", type=int, default=5, dest="per_pair")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gen_games)

    p = sub.add_parser("gen-data", help="sample strategies and label them exactly")
    p.add_argument("--game", required=True)
    p.add_argument("--model", required=True,
                   help="rational | at:D | qr:L | pt:G,T,A,B")
    p.add_argument("--count", type=int, default=5000)
    p.add_argument("--max-support", type=int, default=5, dest="max_support")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gen_data)

    p = sub.add_parser("train", help="train the payoff network on a dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--val-frac", type=float, default=0.1, dest="val_frac")
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--patience", type=int)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("solve", help="evolve a defender strategy")
    p.add_argument("--game", required=True)
    p.add_argument("--solver", required=True, choices=("easg", "easg_br", "nesg"))
    p.add_argument("--model", help="attacker model for easg_br")
    p.add_argument("--net", help="trained network file for nesg")
    p.add_argument("--history", help="write per-generation fitness CSV here")
    _add_evolution_flags(p)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("score", help="exact leader value of a strategy file")
    p.add_argument("--game", required=True)
    p.add_argument("--strategy", required=True)
    p.add_argument("--model", required=True)
    p.set_defaults(func=_cmd_score)

    for name, help_text, fn in (
            ("table1", "surrogate test-error grid", _cmd_table1),
            ("table2", "solver payoff comparison grid", _cmd_table2)):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--targets", type=_ints)
        p.add_argument("--steps", type=_ints)
        p.add_argument("--games", type=int)
        p.add_argument("--models", default="at:0.5|qr:0.8|pt:0.64,2.25,0.88,0.88",
                       help="pipe-separated model specs")
        p.add_argument("--train-size", type=int, default=5000, dest="train_size")
        p.add_argument("--epochs", type=int)
        p.add_argument("--batch", type=int)
        p.add_argument("--lr", type=float)
        p.add_argument("--patience", type=int)
        p.add_argument("--paper-scale", action="store_true", dest="paper_scale")
        p.add_argument("--seed", type=int, required=True)
        p.add_argument("--out", required=True)
        if name == "table1":
            p.add_argument("--test-size", type=int, default=1000, dest="test_size")
        else:
            p.add_argument("--solvers", default="easg,easg_br,nesg")
            p.add_argument("--repeats", type=int, default=1)
            _add_evolution_flags(p)
        p.set_defaults(func=fn)

    p = sub.add_parser("timing", help="wall-clock scalability of the solvers")
    p.add_argument("--targets", type=_ints, default=(4, 16, 64, 128))
    p.add_argument("--steps", type=_ints, default=(1,))
    p.add_argument("--model", default="qr:0.8")
    p.add_argument("--pop", type=int)
    p.add_argument("--gens", type=int)
    p.add_argument("--train-size", type=int, default=2000, dest="train_size")
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--batch", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--patience", type=int)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_timing)

    return parser


def cli_dispatch(argv: list[str]) -> int:
    """Parse argv (without the program name) and run; returns the exit status."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ValidationError, datagen.ParseError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except RuntimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(cli_dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
