import numpy as np
import pytest

from ssgkit import (
    EvaluationError,
    EvolutionConfig,
    Individual,
    MixedStrategy,
    PureStrategy,
    Rational,
    ValidationError,
    crossover,
    evolve,
    exact_evaluator,
    init_population,
    mutate,
    tournament_select,
)

from conftest import make_game, random_game


def sigma(*targets):
    """One-step pure strategy with one unit per listed target."""
    return PureStrategy([[t] for t in targets])


def coin_game():
    """Symmetric 2-target, 1-step, 1-unit game with +-1 payoffs everywhere."""
    return make_game(lr=[1.0, 1.0], lp=[-1.0, -1.0], fr=[1.0, 1.0], fp=[-1.0, -1.0])


class TestInitPopulation:
    def test_size_and_singleton_supports(self, rng):
        game = random_game(rng, n=6, m=2, k=3)
        pop = init_population(game, EvolutionConfig(population_size=100), rng)
        assert len(pop) == 100
        assert all(ind.strategy.support_size == 1 for ind in pop)
        assert all(ind.strategy.probs[0] == 1.0 for ind in pop)
        assert all(ind.fitness is None for ind in pop)

    def test_fixed_seed_reproduces_population(self):
        game = coin_game()
        cfg = EvolutionConfig(population_size=20)
        pop_a = init_population(game, cfg, np.random.default_rng(7))
        pop_b = init_population(game, cfg, np.random.default_rng(7))
        for a, b in zip(pop_a, pop_b):
            assert a.strategy == b.strategy

    def test_single_target_game(self, rng):
        game = make_game(lr=[1.0], lp=[-1.0], fr=[1.0], fp=[-1.0], units=2)
        pop = init_population(game, EvolutionConfig(population_size=10), rng)
        assert all(np.all(ind.strategy.pures[0].alloc == 0) for ind in pop)


class TestCrossover:
    def test_halves_two_singletons(self):
        child = crossover(Individual(MixedStrategy([(sigma(0), 1.0)])),
                          Individual(MixedStrategy([(sigma(1), 1.0)])))
        assert child.strategy.support_size == 2
        assert child.strategy.probs.tolist() == [0.5, 0.5]
        assert child.fitness is None

    def test_identical_parents_merge_back(self):
        parent = Individual(MixedStrategy([(sigma(2), 1.0)]))
        child = crossover(parent, parent)
        assert child.strategy.support_size == 1
        assert child.strategy.probs[0] == pytest.approx(1.0)

    def test_overlapping_supports(self):
        a = Individual(MixedStrategy([(sigma(0), 0.5), (sigma(1), 0.5)]))
        b = Individual(MixedStrategy([(sigma(0), 1.0)]))
        child = crossover(a, b)
        pairs = {pure.alloc[0, 0]: prob for pure, prob in child.strategy.support}
        assert pairs[0] == pytest.approx(0.75)
        assert pairs[1] == pytest.approx(0.25)

    def test_support_cap_drops_lowest_and_renormalizes(self):
        a = Individual(MixedStrategy([(sigma(0), 0.6), (sigma(1), 0.3), (sigma(2), 0.1)]))
        b = Individual(MixedStrategy([(sigma(3), 0.5), (sigma(4), 0.3), (sigma(5), 0.2)]))
        child = crossover(a, b, max_support=3)
        assert child.strategy.support_size == 3
        kept = {pure.alloc[0, 0] for pure, _ in child.strategy.support}
        assert kept == {0, 1, 3}  # halved probs 0.30, 0.15, 0.25 survive
        assert child.strategy.probs.sum() == pytest.approx(1.0, abs=1e-12)
        assert child.strategy.probs.max() == pytest.approx(0.3 / 0.7)


class TestMutate:
    def test_single_unit_always_moves_somewhere(self, rng):
        # k=1 forces the subset to be that unit; with many targets the new
        # allocation almost surely differs
        game = make_game(lr=[1.0] * 50, lp=[-1.0] * 50, fr=[1.0] * 50, fp=[-1.0] * 50)
        ind = Individual(MixedStrategy([(sigma(0), 1.0)]))
        changed = sum(
            mutate(ind, game, rng).strategy.pures[0].alloc[0, 0] != 0
            for _ in range(200))
        assert changed >= 190

    def test_probabilities_unchanged(self, rng):
        game = make_game(lr=[1.0] * 40, lp=[-1.0] * 40, fr=[1.0] * 40, fp=[-1.0] * 40,
                         units=2)
        strategy = MixedStrategy([
            (PureStrategy([[0], [1]]), 0.7), (PureStrategy([[2], [3]]), 0.3)])
        for _ in range(50):
            mutant = mutate(Individual(strategy), game, rng)
            assert sorted(mutant.strategy.probs.tolist()) == [0.3, 0.7]

    def test_unit_inclusion_frequency_under_empty_redraw(self, rng):
        # conditioned on a non-empty subset, each of k=4 units is included
        # with probability 0.5 / (1 - 0.5**4) ~ 0.5333
        game = make_game(lr=[1.0] * 500, lp=[-1.0] * 500, fr=[1.0] * 500,
                         fp=[-1.0] * 500, units=4)
        base = PureStrategy([[7], [7], [7], [7]])
        ind = Individual(MixedStrategy([(base, 1.0)]))
        included = np.zeros(4)
        trials = 10 ** 4
        for _ in range(trials):
            mutant = mutate(ind, game, rng)
            included += (mutant.strategy.pures[0].alloc[:, 0] != 7)
        # a moved unit keeps its old target with prob 1/500; fold that in
        expected = (0.5 / (1 - 0.5 ** 4)) * (1 - 1 / 500)
        assert np.all(np.abs(included / trials - expected) < 0.02)


class TestTournament:
    def _pop(self):
        a = Individual(MixedStrategy([(sigma(0), 1.0)]), fitness=1.0)
        b = Individual(MixedStrategy([(sigma(1), 1.0)]), fitness=0.0)
        return [a, b]

    def test_full_pressure_returns_the_fitter(self, rng):
        pop = self._pop()
        assert all(tournament_select(pop, 1.0, rng).fitness == 1.0 for _ in range(100))

    def test_half_pressure_is_a_coin_flip(self, rng):
        pop = self._pop()
        wins = sum(tournament_select(pop, 0.5, rng).fitness == 1.0 for _ in range(4000))
        assert abs(wins / 4000 - 0.5) < 0.05

    def test_win_rate_matches_pressure(self, rng):
        pop = self._pop()
        trials = 10 ** 5
        wins = sum(tournament_select(pop, 0.9, rng).fitness == 1.0 for _ in range(trials))
        assert abs(wins / trials - 0.9) < 0.01

    def test_tiny_population_rejected(self, rng):
        with pytest.raises(ValidationError):
            tournament_select(self._pop()[:1], 0.9, rng)


class TestEvolve:
    CFG = EvolutionConfig(population_size=30, generations=60, seed=5)

    def test_reaches_the_symmetric_optimum(self):
        result = evolve(coin_game(), exact_evaluator(Rational()), self.CFG)
        assert result.best_value >= -0.05

    def test_best_fitness_never_decreases(self):
        result = evolve(coin_game(), exact_evaluator(Rational()), self.CFG)
        bests = [row.best for row in result.history]
        assert all(b >= a for a, b in zip(bests, bests[1:]))
        assert len(bests) == self.CFG.generations + 1

    def test_fixed_seed_bit_identical(self):
        r1 = evolve(coin_game(), exact_evaluator(Rational()), self.CFG)
        r2 = evolve(coin_game(), exact_evaluator(Rational()), self.CFG)
        assert r1.best_strategy == r2.best_strategy
        assert r1.best_value == r2.best_value
        for h1, h2 in zip(r1.history, r2.history):
            assert (h1.best, h1.mean, h1.evaluations) == (h2.best, h2.mean, h2.evaluations)

    def test_operators_keep_strategies_canonical(self, rng):
        game = random_game(rng, n=5, m=2, k=2)
        cfg = EvolutionConfig(population_size=20, generations=40, max_support=6, seed=11)
        seen = []
        def spying(g, strategy):
            seen.append(strategy)
            return exact_evaluator(Rational())(g, strategy)
        result = evolve(game, spying, cfg)
        assert result.history[-1].generation == 40
        for strategy in seen:
            assert strategy.support_size <= 6
            assert strategy.probs.sum() == pytest.approx(1.0, abs=1e-9)
            assert len({p.key() for p in strategy.pures}) == strategy.support_size

    def test_full_coverage_game_saturates(self, rng):
        # with as many units as targets the best schedule covers everything;
        # brute force over all 4^4 pure allocations gives the pure optimum
        from itertools import product

        from ssgkit import exact_leader_value, pure_singleton

        game = random_game(rng, n=4, m=1, k=4)
        best_pure = max(
            exact_leader_value(game, pure_singleton([[t] for t in combo]), Rational())
            for combo in product(range(4), repeat=4))
        result = evolve(game, exact_evaluator(Rational()),
                        EvolutionConfig(population_size=40, generations=80, seed=2))
        assert result.best_value >= best_pure - 0.02

    def test_evaluator_failure_carries_context(self):
        calls = []
        def broken(game, strategy):
            calls.append(1)
            if len(calls) > 40:
                raise ArithmeticError("boom")
            return 0.0
        with pytest.raises(EvaluationError, match="generation"):
            evolve(coin_game(), broken, EvolutionConfig(population_size=30, generations=5, seed=1))

    def test_population_size_is_constant(self):
        game = coin_game()
        cfg = EvolutionConfig(population_size=24, generations=10, seed=3)
        result = evolve(game, exact_evaluator(Rational()), cfg)
        means = [row.mean for row in result.history]
        assert len(means) == 11  # smoke: stats exist for init + every generation


class TestConfigValidation:
    def test_rates_in_unit_interval(self):
        with pytest.raises(ValidationError):
            EvolutionConfig(mutation_rate=1.5)
        with pytest.raises(ValidationError):
            EvolutionConfig(crossover_rate=-0.1)

    def test_elite_smaller_than_population(self):
        with pytest.raises(ValidationError):
            EvolutionConfig(population_size=10, elite_size=10)

    def test_defaults_match_recommended_parameterization(self):
        cfg = EvolutionConfig()
        assert (cfg.population_size, cfg.generations) == (100, 1000)
        assert (cfg.mutation_rate, cfg.crossover_rate) == (0.5, 0.8)
        assert (cfg.selection_pressure, cfg.elite_size) == (0.9, 2)
