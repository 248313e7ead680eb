"""Experiment drivers: surrogate accuracy, solver payoff comparison, timing.

Every driver derives all of its randomness from one root seed through keyed
child streams, so a report is reproducible from its seed alone and, within a
comparison cell, every solver sees the same games and the same evolution
random stream (they differ only in the fitness evaluator).
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .behavior import (
    BehaviorModel,
    Quantal,
    Rational,
    exact_leader_value,
    model_label,
    model_to_json,
)
from .datagen import gen_benchmark_game, gen_training_set, rng_for, sample_mixed_strategy
from .evolution import EvolutionConfig, Evaluator, evolve, exact_evaluator
from .game import Game, ValidationError
from .senn import SennNetwork, TrainConfig, build, evaluate_mae, senn_evaluator, train

# Child-stream tags for seed splitting; keys are (tag, n, m, game, model, ...).
_S_GAME, _S_TRAIN_DATA, _S_TEST_DATA, _S_NET, _S_FIT, _S_EVO, _S_STRATS = range(7)

DESK_GRID = {"targets": (4, 8, 16), "steps": (1, 2), "games_per_pair": 3}
PAPER_GRID = {"targets": (4, 8, 16, 32, 64, 128), "steps": (1, 2, 4), "games_per_pair": 5}

DESK_EVOLUTION = EvolutionConfig(population_size=50, generations=200)
PAPER_EVOLUTION = EvolutionConfig(population_size=100, generations=1000)


@dataclass(frozen=True)
class ReportRow:
    solver_id: str
    targets: int
    steps: int
    model: str
    mean_leader_value: float | None = None
    per_game_values: tuple[float, ...] = ()
    senn_mae: float | None = None
    eval_ms_per_call: float | None = None
    train_ms: float | None = None
    wall_clock_ms: float = 0.0


@dataclass(frozen=True)
class ExperimentReport:
    kind: str
    seed: int
    config: dict
    rows: tuple[ReportRow, ...] = field(repr=False)

    def write_csv(self, path) -> None:
        """Deterministic value columns; wall-clock lives in the JSON sidecar.

        Timing reports are the exception: their value IS measured time, so
        their CSV carries the time columns and is not byte-reproducible.
        """
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            if self.kind == "timing":
                writer.writerow(["solver", "targets", "steps", "model",
                                 "total_ms", "eval_ms_per_call", "train_ms"])
                for r in self.rows:
                    writer.writerow([r.solver_id, r.targets, r.steps, r.model,
                                     _fmt(r.wall_clock_ms), _fmt(r.eval_ms_per_call),
                                     _fmt(r.train_ms)])
            else:
                writer.writerow(["solver", "targets", "steps", "model",
                                 "mean_leader_value", "senn_mae", "per_game_values"])
                for r in self.rows:
                    writer.writerow([r.solver_id, r.targets, r.steps, r.model,
                                     _fmt(r.mean_leader_value), _fmt(r.senn_mae),
                                     ";".join(repr(v) for v in r.per_game_values)])

    def write_json(self, path) -> None:
        """Full report including config snapshot, seeds and wall-clock times."""
        with open(path, "w", encoding="utf-8") as fh:
            json.dump({"kind": self.kind, "seed": self.seed, "config": self.config,
                       "rows": [asdict(r) for r in self.rows]}, fh, indent=1)
            fh.write("\n")

    def find(self, **attrs) -> list[ReportRow]:
        rows = self.rows
        for name, value in attrs.items():
            rows = [r for r in rows if getattr(r, name) == value]
        return list(rows)


def _fmt(v) -> str:
    return "" if v is None else repr(float(v))


def _mean(values) -> float:
    return float(np.mean(np.asarray(values, dtype=float)))


def _fit_surrogate(game: Game, model: BehaviorModel, train_size: int, max_support: int,
                   train_config: TrainConfig, seed: int, key: tuple[int, ...]
                   ) -> tuple[SennNetwork, float, float]:
    """Generate data, train a network; returns (net, val MAE, train wall ms)."""
    t0 = time.perf_counter()
    data = gen_training_set(game, model, train_size,
                            rng_for(seed, _S_TRAIN_DATA, *key), max_support)
    val_count = max(1, round(0.1 * len(data)))
    train_set, val_set = data[:-val_count], data[-val_count:]
    if not train_set:
        raise ValidationError("training size leaves no examples after the validation split")
    net = build(game.num_targets, game.num_steps, rng_for(seed, _S_NET, *key))
    fit_seed = int(rng_for(seed, _S_FIT, *key).integers(2 ** 31))
    net, report = train(net, train_set, val_set, replace(train_config, seed=fit_seed))
    return net, report.final_mae, (time.perf_counter() - t0) * 1000.0


def run_senn_error(targets=(4, 8, 16), steps=(1, 2), games_per_pair=3, *,
                   models: list[BehaviorModel], seed: int = 0, train_size: int = 5000,
                   test_size: int = 1000, max_support: int = 5,
                   train_config: TrainConfig = TrainConfig()) -> ExperimentReport:
    """Surrogate test error per (targets, steps, model), averaged over games."""
    if train_size < 2 or test_size < 1:
        raise ValidationError("train_size must be >= 2 and test_size >= 1")
    rows = []
    for m in steps:
        for n in targets:
            games = [gen_benchmark_game(n, m, rng_for(seed, _S_GAME, n, m, gi))
                     for gi in range(games_per_pair)]
            for mi, model in enumerate(models):
                t0 = time.perf_counter()
                maes = []
                for gi, game in enumerate(games):
                    try:
                        net, _, _ = _fit_surrogate(game, model, train_size, max_support,
                                                   train_config, seed, (n, m, gi, mi))
                        test_set = gen_training_set(game, model, test_size,
                                                    rng_for(seed, _S_TEST_DATA, n, m, gi, mi),
                                                    max_support)
                        maes.append(evaluate_mae(net, test_set))
                    except Exception as exc:
                        raise RuntimeError(
                            f"surrogate cell (targets={n}, steps={m}, "
                            f"model={model_label(model)}, game={gi}) failed: {exc}") from exc
                rows.append(ReportRow(
                    solver_id="senn", targets=n, steps=m, model=model_label(model),
                    senn_mae=_mean(maes), per_game_values=tuple(maes),
                    wall_clock_ms=(time.perf_counter() - t0) * 1000.0))
    config = {"targets": list(targets), "steps": list(steps), "games_per_pair": games_per_pair,
              "train_size": train_size, "test_size": test_size, "max_support": max_support,
              "models": [model_to_json(mo) for mo in models], "train": asdict(train_config)}
    return ExperimentReport("senn_error", seed, config, tuple(rows))


def run_payoff_comparison(targets=(4, 8, 16), steps=(1,), games_per_pair=3, *,
                          models: list[BehaviorModel],
                          solvers=("easg", "easg_br", "nesg"), seed: int = 0,
                          evolution: EvolutionConfig = DESK_EVOLUTION,
                          train_size: int = 5000, max_support: int = 5,
                          train_config: TrainConfig = TrainConfig(),
                          repeats: int = 1) -> ExperimentReport:
    """Judge every solver's strategy under the true attacker model.

    All solvers in a cell share the same games and the same evolution seed
    schedule; the strategy each returns is scored with the exact leader value
    under the cell's model, whether or not the solver knew that model.
    """
    unknown = set(solvers) - {"easg", "easg_br", "nesg"}
    if unknown:
        raise ValidationError(f"unknown solvers: {sorted(unknown)}")
    rows = []
    for m in steps:
        for n in targets:
            games = [gen_benchmark_game(n, m, rng_for(seed, _S_GAME, n, m, gi))
                     for gi in range(games_per_pair)]
            # One rational-evaluator run per (game, repeat); its strategy does
            # not depend on the attacker model and is reused across cells.
            easg_strats = {}
            if "easg" in solvers:
                for gi, game in enumerate(games):
                    for r in range(repeats):
                        rng = rng_for(seed, _S_EVO, n, m, gi, r)
                        easg_strats[gi, r] = evolve(game, exact_evaluator(Rational()),
                                                    evolution, rng).best_strategy
            for mi, model in enumerate(models):
                per_solver = {s: [] for s in solvers}
                t0 = time.perf_counter()
                for gi, game in enumerate(games):
                    try:
                        nets = {}
                        if "nesg" in solvers:
                            nets[gi], _, _ = _fit_surrogate(
                                game, model, train_size, max_support, train_config,
                                seed, (n, m, gi, mi))
                        for r in range(repeats):
                            for solver in solvers:
                                if solver == "easg":
                                    strat = easg_strats[gi, r]
                                else:
                                    rng = rng_for(seed, _S_EVO, n, m, gi, r)
                                    if solver == "easg_br":
                                        evaluator = exact_evaluator(model)
                                    else:
                                        evaluator = senn_evaluator(nets[gi], game)
                                    strat = evolve(game, evaluator, evolution, rng).best_strategy
                                per_solver[solver].append(
                                    exact_leader_value(game, strat, model))
                    except Exception as exc:
                        raise RuntimeError(
                            f"comparison cell (targets={n}, steps={m}, "
                            f"model={model_label(model)}, game={gi}) failed: {exc}") from exc
                wall = (time.perf_counter() - t0) * 1000.0
                for solver in solvers:
                    rows.append(ReportRow(
                        solver_id=solver, targets=n, steps=m, model=model_label(model),
                        mean_leader_value=_mean(per_solver[solver]),
                        per_game_values=tuple(per_solver[solver]),
                        wall_clock_ms=wall))
    config = {"targets": list(targets), "steps": list(steps), "games_per_pair": games_per_pair,
              "solvers": list(solvers), "models": [model_to_json(mo) for mo in models],
              "evolution": asdict(evolution), "train_size": train_size,
              "max_support": max_support, "train": asdict(train_config), "repeats": repeats}
    return ExperimentReport("payoff_comparison", seed, config, tuple(rows))


def measure_evaluator(evaluator: Evaluator, game: Game, strategies, rounds: int = 3) -> float:
    """Mean milliseconds per evaluation, best of ``rounds`` timed sweeps.

    One untimed warm-up sweep runs first.
    """
    for strategy in strategies:
        evaluator(game, strategy)
    best = float("inf")
    for _ in range(rounds):
        t0 = time.perf_counter()
        for strategy in strategies:
            evaluator(game, strategy)
        best = min(best, time.perf_counter() - t0)
    return best * 1000.0 / len(strategies)


def run_timing(targets=(4, 16, 64, 128), steps=(1,), *, seed: int = 0,
               model: BehaviorModel = Quantal(),
               evolution: EvolutionConfig = EvolutionConfig(population_size=30, generations=20),
               train_size: int = 2000, max_support: int = 5,
               train_config: TrainConfig = TrainConfig(max_epochs=30),
               eval_strategies: int = 100, solver_rounds: int = 3) -> ExperimentReport:
    """Wall-clock scalability of the solvers plus per-evaluation costs.

    The surrogate-guided solver is reported twice, with and without the
    network training time.
    """
    rows = []
    for m in steps:
        for n in targets:
            game = gen_benchmark_game(n, m, rng_for(seed, _S_GAME, n, m, 0))
            strat_rng = rng_for(seed, _S_STRATS, n, m)
            strategies = [sample_mixed_strategy(game, max_support, strat_rng)
                          for _ in range(eval_strategies)]
            net, _, train_ms = _fit_surrogate(game, model, train_size, max_support,
                                              train_config, seed, (n, m, 0, 0))
            evaluators = {
                "easg": exact_evaluator(Rational()),
                "easg_br": exact_evaluator(model),
                "nesg": senn_evaluator(net, game),
            }
            eval_ms = {name: measure_evaluator(ev, game, strategies)
                       for name, ev in evaluators.items()}
            for solver, evaluator in evaluators.items():
                # identical seeded work per round; keep the least-disturbed run
                total = float("inf")
                for _ in range(solver_rounds):
                    rng = rng_for(seed, _S_EVO, n, m, 0, 0)
                    t0 = time.perf_counter()
                    evolve(game, evaluator, evolution, rng)
                    total = min(total, (time.perf_counter() - t0) * 1000.0)
                label = model_label(model) if solver != "easg" else "rational"
                rows.append(ReportRow(solver_id=solver, targets=n, steps=m, model=label,
                                      eval_ms_per_call=eval_ms[solver], wall_clock_ms=total))
                if solver == "nesg":
                    rows.append(ReportRow(
                        solver_id="nesg_with_training", targets=n, steps=m, model=label,
                        eval_ms_per_call=eval_ms[solver], train_ms=train_ms,
                        wall_clock_ms=total + train_ms))
    config = {"targets": list(targets), "steps": list(steps),
              "model": model_to_json(model), "evolution": asdict(evolution),
              "train_size": train_size, "train": asdict(train_config),
              "eval_strategies": eval_strategies}
    return ExperimentReport("timing", seed, config, tuple(rows))


# ---------------------------------------------------------------------------
# Plain-text table rendering
# ---------------------------------------------------------------------------

def render_table(report: ExperimentReport) -> str:
    """Aligned text table: targets as rows, model/solver groups as columns."""
    if report.kind == "senn_error":
        return _render_grouped(report, value="senn_mae", sub="steps")
    if report.kind == "payoff_comparison":
        blocks = []
        for m in sorted({r.steps for r in report.rows}):
            sub = ExperimentReport(report.kind, report.seed, report.config,
                                   tuple(r for r in report.rows if r.steps == m))
            blocks.append(f"[{m} step{'s' if m != 1 else ''}]\n"
                          + _render_grouped(sub, value="mean_leader_value", sub="solver_id"))
        return "\n\n".join(blocks)
    lines = [f"{'solver':<20}{'targets':>8}{'steps':>6}{'total_ms':>12}{'eval_ms':>10}"]
    for r in report.rows:
        eval_ms = "" if r.eval_ms_per_call is None else f"{r.eval_ms_per_call:.4f}"
        lines.append(f"{r.solver_id:<20}{r.targets:>8}{r.steps:>6}"
                     f"{r.wall_clock_ms:>12.1f}{eval_ms:>10}")
    return "\n".join(lines)


def _render_grouped(report: ExperimentReport, value: str, sub: str) -> str:
    models = list(dict.fromkeys(r.model for r in report.rows))
    subs = list(dict.fromkeys(getattr(r, sub) for r in report.rows))
    targets = sorted({r.targets for r in report.rows})
    width = max(9, max(len(str(s)) for s in subs) + 2)
    head1 = f"{'':<8}" + "".join(f"{m:^{width * len(subs)}}" for m in models)
    sub_label = {"steps": lambda v: f"{v} step", "solver_id": str}[sub]
    head2 = f"{'targets':<8}" + "".join(f"{sub_label(s):>{width}}" for m in models for s in subs)
    lines = [head1, head2]
    for n in targets:
        cells = []
        for m in models:
            for s in subs:
                rows = [r for r in report.rows
                        if r.targets == n and r.model == m and getattr(r, sub) == s]
                v = getattr(rows[0], value) if rows else None
                cells.append(f"{v:>{width}.4f}" if v is not None else f"{'-':>{width}}")
        lines.append(f"{n:<8}" + "".join(cells))
    return "\n".join(lines)
