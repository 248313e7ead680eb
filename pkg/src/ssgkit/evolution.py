"""Evolutionary search over defender mixed strategies.

The loop is generic over the fitness evaluator: plugging in the rational
oracle, an exact bounded-rationality oracle, or the neural surrogate yields
the plain, oracle-guided and surrogate-guided solvers respectively; nothing
else changes.

Each generation: a random fraction of the population is paired for crossover
(children replace their parents in the working pool), every individual is
mutated with a fixed probability, new strategies are evaluated, and the next
population is the elite of the current one plus binary-tournament picks from
the pool.  Elites bypass the operators entirely, so the per-generation best
never decreases under a deterministic evaluator.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .game import Game, MixedStrategy, PureStrategy, ValidationError, pure_singleton

Evaluator = Callable[[Game, MixedStrategy], float]


class EvaluationError(RuntimeError):
    """An evaluator raised; carries generation/individual context."""


@dataclass(frozen=True)
class EvolutionConfig:
    population_size: int = 100
    generations: int = 1000
    mutation_rate: float = 0.5
    crossover_rate: float = 0.8
    selection_pressure: float = 0.9
    elite_size: int = 2
    max_support: int = 20
    seed: int = 0

    def __post_init__(self):
        for name in ("mutation_rate", "crossover_rate", "selection_pressure"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValidationError(f"{name} must be in [0, 1], got {v}")
        if self.population_size < 2:
            raise ValidationError("population_size must be >= 2")
        if not 0 <= self.elite_size < self.population_size:
            raise ValidationError("elite_size must be < population_size")
        if self.max_support < 1:
            raise ValidationError("max_support must be >= 1")
        if self.generations < 0:
            raise ValidationError("generations must be >= 0")


@dataclass
class Individual:
    strategy: MixedStrategy
    fitness: float | None = None


@dataclass(frozen=True)
class GenerationStats:
    generation: int
    best: float
    mean: float
    evaluations: int
    wall_ms: float


@dataclass(frozen=True)
class EvolutionResult:
    best_strategy: MixedStrategy
    best_value: float
    history: list[GenerationStats] = field(repr=False)


def init_population(game: Game, config: EvolutionConfig, rng: np.random.Generator) -> list[Individual]:
    """Population of single-pure-strategy individuals with uniform random allocations."""
    shape = (game.num_units, game.num_steps)
    return [
        Individual(pure_singleton(rng.integers(0, game.num_targets, size=shape)))
        for _ in range(config.population_size)
    ]


def crossover(a: Individual, b: Individual, max_support: int = 20) -> Individual:
    """Union of the parents' supports with halved probabilities.

    Duplicates merge; if the merged support exceeds ``max_support`` the
    lowest-probability entries are dropped and the rest renormalized.
    """
    support = [(p, 0.5 * prob) for p, prob in zip(a.strategy.pures, a.strategy.probs)]
    support += [(p, 0.5 * prob) for p, prob in zip(b.strategy.pures, b.strategy.probs)]
    child = MixedStrategy(support)
    if child.support_size > max_support:
        keep = np.sort(np.argsort(-child.probs, kind="stable")[:max_support])
        probs = child.probs[keep]
        probs = probs / probs.sum()
        child = MixedStrategy([(child.pures[i], p) for i, p in zip(keep, probs)])
    return Individual(child)


def mutate(ind: Individual, game: Game, rng: np.random.Generator) -> Individual:
    """Reallocate a random non-empty subset of units within one support entry.

    Every chosen unit gets a fresh uniformly random target in every step; the
    support probabilities stay as they are.
    """
    which = int(rng.integers(0, ind.strategy.support_size))
    alloc = ind.strategy.pures[which].alloc.copy()
    k, m = alloc.shape
    while True:
        chosen = rng.random(k) < 0.5
        if chosen.any():
            break
    alloc[chosen, :] = rng.integers(0, game.num_targets, size=(int(chosen.sum()), m))
    support = list(zip(ind.strategy.pures, ind.strategy.probs))
    support[which] = (PureStrategy(alloc), float(ind.strategy.probs[which]))
    return Individual(MixedStrategy(support))


def tournament_select(population: list[Individual], pressure: float,
                      rng: np.random.Generator) -> Individual:
    """Binary tournament: the fitter of two distinct picks wins with prob ``pressure``."""
    if len(population) < 2:
        raise ValidationError("tournament needs a population of at least 2")
    i, j = rng.choice(len(population), size=2, replace=False)
    a, b = population[int(i)], population[int(j)]
    fitter, weaker = (a, b) if a.fitness >= b.fitness else (b, a)
    return fitter if rng.random() < pressure else weaker


def _evaluate(pool: list[Individual], game: Game, evaluator: Evaluator, generation: int) -> int:
    calls = 0
    for idx, ind in enumerate(pool):
        if ind.fitness is None:
            try:
                ind.fitness = float(evaluator(game, ind.strategy))
            except Exception as exc:
                raise EvaluationError(
                    f"evaluator failed at generation {generation}, individual {idx}: {exc}"
                ) from exc
            calls += 1
    return calls


def evolve(game: Game, evaluator: Evaluator, config: EvolutionConfig,
           rng: np.random.Generator | None = None) -> EvolutionResult:
    """Run the generational loop and return the best-ever strategy, re-scored.

    ``history`` holds one row per generation (row 0 is the initial
    population) with best/mean fitness, evaluator calls and wall time.
    """
    if rng is None:
        rng = np.random.default_rng(config.seed)
    t0 = time.perf_counter()
    population = init_population(game, config, rng)
    calls = _evaluate(population, game, evaluator, 0)
    history = [_stats(0, population, calls, t0)]
    best = max(population, key=lambda ind: ind.fitness)

    for gen in range(1, config.generations + 1):
        t0 = time.perf_counter()
        pool = list(population)

        # Crossover: pair an even-sized random fraction; children replace parents.
        count = int(round(config.crossover_rate * len(pool))) & ~1
        if count >= 2:
            picked = rng.permutation(len(pool))[:count]
            children = [
                crossover(pool[picked[i]], pool[picked[i + 1]], config.max_support)
                for i in range(0, count, 2)
            ]
            chosen = set(picked.tolist())
            pool = [ind for i, ind in enumerate(pool) if i not in chosen] + children

        for idx in range(len(pool)):
            if rng.random() < config.mutation_rate:
                pool[idx] = mutate(pool[idx], game, rng)

        calls = _evaluate(pool, game, evaluator, gen)

        elite = sorted(population, key=lambda ind: ind.fitness, reverse=True)[:config.elite_size]
        population = elite + [
            tournament_select(pool, config.selection_pressure, rng)
            for _ in range(config.population_size - len(elite))
        ]
        history.append(_stats(gen, population, calls, t0))
        gen_best = max(population, key=lambda ind: ind.fitness)
        if gen_best.fitness > best.fitness:
            best = gen_best

    final_value = float(evaluator(game, best.strategy))
    return EvolutionResult(best.strategy, final_value, history)


def _stats(gen: int, population: list[Individual], calls: int, t0: float) -> GenerationStats:
    fits = [ind.fitness for ind in population]
    return GenerationStats(
        generation=gen,
        best=max(fits),
        mean=float(np.mean(fits)),
        evaluations=calls,
        wall_ms=(time.perf_counter() - t0) * 1000.0,
    )


def exact_evaluator(model) -> Evaluator:
    """Evaluator that scores a strategy by its exact leader value under ``model``."""
    from .behavior import exact_leader_value

    def evaluate(game: Game, strategy: MixedStrategy) -> float:
        return exact_leader_value(game, strategy, model)

    return evaluate
