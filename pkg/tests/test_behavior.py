import numpy as np
import pytest

from ssgkit import (
    Anchoring,
    CoverageProfile,
    MixedStrategy,
    Prospect,
    PureStrategy,
    Quantal,
    Rational,
    ValidationError,
    at_perceived_coverage,
    at_response,
    coverage_profile,
    exact_leader_value,
    follower_payoff,
    leader_payoff,
    model_from_json,
    model_label,
    model_to_json,
    parse_model_spec,
    pt_response,
    pt_value,
    pt_weight,
    qr_distribution,
    rational_response,
)

from conftest import make_game, random_game
from naive_oracle import naive_leader_value
from test_game import dpi7


def uniform_random_mixed(game, rng, max_support=4):
    count = int(rng.integers(1, max_support + 1))
    allocs = rng.integers(0, game.num_targets,
                          size=(count, game.num_units, game.num_steps))
    probs = rng.uniform(0.1, 1.0, count)
    probs /= probs.sum()
    return MixedStrategy([(PureStrategy(a), p) for a, p in zip(allocs, probs)])


class TestRationalResponse:
    def test_dominant_reward_wins(self):
        game = make_game(lr=[1, 1], lp=[-1, -1], fr=[0.9, 0.4], fp=[-1, -1])
        cov = CoverageProfile(np.zeros((1, 2)))
        assert rational_response(game, cov).chosen_target == 0

    def test_symmetric_game_breaks_to_lowest_index(self):
        game = make_game(lr=[1, 1, 1], lp=[-1, -1, -1], fr=[1, 1, 1], fp=[-1, -1, -1])
        cov = CoverageProfile(np.full((1, 3), 0.25))
        assert rational_response(game, cov).chosen_target == 0

    def test_tie_on_follower_payoff_favors_leader(self):
        # identical attacker payoffs, distinct defender stakes at equal coverage
        game = make_game(lr=[0.2, 0.9], lp=[-0.5, -0.5], fr=[0.6, 0.6], fp=[-0.3, -0.3])
        cov = CoverageProfile(np.full((1, 2), 0.5))
        assert rational_response(game, cov).chosen_target == 1

    def test_matches_enumeration_on_random_games(self, rng):
        for _ in range(25):
            game = random_game(rng, n=16, m=2)
            cov = coverage_profile(game, uniform_random_mixed(game, rng))
            follower = [follower_payoff(game, cov, x) for x in range(16)]
            choice = rational_response(game, cov).chosen_target
            assert follower[choice] == pytest.approx(max(follower), abs=1e-12)


class TestAnchoring:
    def test_flattening_formula(self):
        cov = CoverageProfile(np.array([[1.0, 0.0]]))
        assert at_perceived_coverage(cov, 0.5).matrix[0] == pytest.approx([0.75, 0.25])

    def test_small_delta_is_nearly_identity(self):
        cov = CoverageProfile(np.array([[0.8, 0.2, 0.0, 0.0]]))
        perceived = at_perceived_coverage(cov, 1e-12).matrix
        assert perceived == pytest.approx(cov.matrix, abs=1e-11)

    def test_derived_four_target_values(self):
        cov = CoverageProfile(np.array([[0.8, 0.2, 0.0, 0.0]]))
        assert at_perceived_coverage(cov, 0.5).matrix[0] == pytest.approx(
            [0.525, 0.225, 0.125, 0.125], abs=1e-12)

    def test_delta_out_of_range(self):
        cov = CoverageProfile(np.array([[0.5]]))
        for delta in (0.0, 1.0, -0.1, 1.5):
            with pytest.raises(ValidationError):
                at_perceived_coverage(cov, delta)

    def test_flattening_preserves_order_and_range(self, rng):
        for _ in range(20):
            n = int(rng.integers(2, 10))
            delta = float(rng.uniform(0.05, 0.95))
            row = rng.uniform(0, 1, (1, n))
            perceived = at_perceived_coverage(CoverageProfile(row), delta).matrix[0]
            assert np.all(np.argsort(row[0]) == np.argsort(perceived, kind="stable"))
            assert perceived.min() >= delta / n - 1e-12
            assert perceived.max() <= 1 - delta + delta / n + 1e-12

    def test_heavy_flattening_flips_the_choice(self):
        game = make_game(lr=[1, 1], lp=[-1, -1], fr=[0.95, 0.5], fp=[-0.05, -0.9])
        cov = CoverageProfile(np.array([[0.9, 0.0]]))
        assert rational_response(game, cov).chosen_target == 1
        assert at_response(game, cov, 0.9).chosen_target == 0

    def test_uniform_coverage_is_a_fixed_point(self, rng):
        game = random_game(rng, n=4, m=1)
        cov = CoverageProfile(np.full((1, 4), 0.25))
        perceived = at_perceived_coverage(cov, 0.5)
        assert perceived.matrix == pytest.approx(cov.matrix, abs=1e-15)
        assert at_response(game, cov, 0.5).chosen_target \
            == rational_response(game, cov).chosen_target

    def test_success_prob_flattening_variant_runs(self):
        game = make_game(lr=[1, 1], lp=[-1, -1], fr=[0.95, 0.5], fp=[-0.05, -0.9])
        cov = CoverageProfile(np.array([[0.9, 0.0]]))
        choice = at_response(game, cov, 0.5, flatten="success_prob").chosen_target
        assert choice in (0, 1)


class TestQuantal:
    def test_zero_lambda_is_uniform(self, rng):
        game = random_game(rng, n=4, m=1)
        cov = coverage_profile(game, uniform_random_mixed(game, rng))
        q = qr_distribution(game, cov, 0.0).distribution
        assert q == pytest.approx([0.25] * 4, abs=1e-12)

    @pytest.mark.filterwarnings("ignore:payoff signs")
    def test_two_target_logit_value(self):
        # zero coverage makes u equal the rewards (0.5, -0.5);
        # frozen: 1/(1+exp(-0.8)) = 0.6899744811276124 (50-digit evaluation)
        game = make_game(lr=[1, 1], lp=[-1, -1], fr=[0.5, -0.5], fp=[-1, -1])
        cov = CoverageProfile(np.zeros((1, 2)))
        q = qr_distribution(game, cov, 0.8).distribution
        assert q[0] == pytest.approx(0.6899744811276124, abs=1e-12)

    def test_huge_lambda_concentrates_on_argmax(self, rng):
        game = random_game(rng, n=5, m=1)
        cov = coverage_profile(game, uniform_random_mixed(game, rng))
        follower = [follower_payoff(game, cov, x) for x in range(5)]
        q = qr_distribution(game, cov, 1e4).distribution
        assert q[int(np.argmax(follower))] >= 1 - 1e-6

    def test_sums_to_one_even_for_extreme_lambda(self, rng):
        for lam in (0.0, 1.0, 1e3, 1e6):
            game = random_game(rng, n=8, m=2)
            cov = coverage_profile(game, uniform_random_mixed(game, rng))
            q = qr_distribution(game, cov, lam).distribution
            assert np.all(q >= 0)
            assert q.sum() == pytest.approx(1.0, abs=1e-9)

    def test_negative_lambda_rejected(self, rng):
        game = random_game(rng, n=2, m=1)
        with pytest.raises(ValidationError):
            qr_distribution(game, CoverageProfile(np.zeros((1, 2))), -1.0)


class TestProspectPieces:
    def test_value_at_zero_and_minus_one(self):
        assert pt_value(0.0, 0.88, 0.88, 2.25) == 0.0
        assert pt_value(-1.0, 0.88, 0.88, 2.25) == -2.25

    def test_value_at_half(self):
        # frozen: 0.5**0.88 = 0.5433674312630291 (50-digit evaluation)
        assert pt_value(0.5, 0.88, 0.88, 2.25) == pytest.approx(0.5433674312630291, abs=1e-12)

    def test_weight_endpoints(self):
        assert pt_weight(0.0, 0.64) == 0.0
        assert pt_weight(1.0, 0.64) == 1.0

    def test_weight_at_half(self):
        # frozen: 0.4345216602142558 (50-digit evaluation)
        assert pt_weight(0.5, 0.64) == pytest.approx(0.4345216602142558, abs=1e-12)

    def test_weight_identity_at_gamma_one(self, rng):
        for p in rng.uniform(0, 1, 20):
            assert pt_weight(float(p), 1.0) == pytest.approx(p, abs=1e-12)

    def test_weight_strictly_increasing(self, rng):
        for gamma in (0.3, 0.64, 1.0):
            grid = np.linspace(0, 1, 101)
            vals = [pt_weight(float(p), gamma) for p in grid]
            assert all(b > a for a, b in zip(vals, vals[1:]))

    def test_value_strictly_increasing(self):
        grid = np.linspace(-2, 2, 81)
        vals = [pt_value(float(c), 0.88, 0.88, 2.25) for c in grid]
        assert all(b > a for a, b in zip(vals, vals[1:]))

    def test_weight_rejects_out_of_range(self):
        with pytest.raises(ValidationError):
            pt_weight(1.2, 0.64)


class TestProspectResponse:
    def test_zero_coverage_picks_best_reward(self):
        game = make_game(lr=[1] * 3, lp=[-1] * 3, fr=[0.2, 0.9, 0.5], fp=[-0.5, -0.5, -0.5])
        cov = CoverageProfile(np.zeros((1, 3)))
        assert pt_response(game, cov, Prospect()).chosen_target == 1

    def test_full_coverage_picks_mildest_penalty(self):
        game = make_game(lr=[1] * 3, lp=[-1] * 3, fr=[0.5] * 3, fp=[-0.7, -0.2, -0.9])
        cov = CoverageProfile(np.ones((1, 3)))
        assert pt_response(game, cov, Prospect()).chosen_target == 1

    def test_matches_brute_force_prospects(self, rng):
        params = Prospect()
        for _ in range(20):
            game = random_game(rng, n=4, m=1)
            cov = coverage_profile(game, uniform_random_mixed(game, rng))
            prospects = []
            for x in range(4):
                p = 1.0
                for s in range(cov.num_steps):
                    p *= 1.0 - cov.matrix[s, x]
                prospects.append(
                    pt_weight(p, params.gamma)
                    * pt_value(float(game.follower_reward[x]), params.alpha, params.beta, params.theta)
                    + pt_weight(1 - p, params.gamma)
                    * pt_value(float(game.follower_penalty[x]), params.alpha, params.beta, params.theta))
            choice = pt_response(game, cov, params).chosen_target
            assert prospects[choice] == pytest.approx(max(prospects), abs=1e-12)


class TestExactLeaderValue:
    def test_seven_host_rational_attack_lands_on_pc(self):
        game, strategy = dpi7()
        cov = coverage_profile(game, strategy)
        # if the attacker fixed on host 5 the defender's loss would be -0.21
        assert leader_payoff(game, cov, 4) == pytest.approx(-0.21, abs=1e-12)
        choice = rational_response(game, cov).chosen_target
        assert exact_leader_value(game, strategy, Rational()) \
            == pytest.approx(leader_payoff(game, cov, choice), abs=1e-15)

    def test_qr_zero_lambda_averages_leader_payoffs(self, rng):
        game = random_game(rng, n=6, m=1)
        strategy = uniform_random_mixed(game, rng)
        cov = coverage_profile(game, strategy)
        mean = np.mean([leader_payoff(game, cov, x) for x in range(6)])
        assert exact_leader_value(game, strategy, Quantal(0.0)) == pytest.approx(mean, abs=1e-12)

    def test_deterministic_models_agree_with_their_response(self, rng):
        for _ in range(20):
            game = random_game(rng, n=8, m=1)
            strategy = uniform_random_mixed(game, rng)
            cov = coverage_profile(game, strategy)
            cases = [
                (Rational(), rational_response(game, cov).chosen_target),
                (Anchoring(0.5), at_response(game, cov, 0.5).chosen_target),
                (Prospect(), pt_response(game, cov, Prospect()).chosen_target),
            ]
            for model, choice in cases:
                assert exact_leader_value(game, strategy, model) \
                    == pytest.approx(leader_payoff(game, cov, choice), abs=1e-15)

    def test_matches_independent_reimplementation(self, rng):
        models = [Rational(), Anchoring(0.5), Quantal(0.8), Prospect()]
        for _ in range(50):
            game = random_game(rng, n=8, m=1)
            strategy = uniform_random_mixed(game, rng)
            for model in models:
                assert exact_leader_value(game, strategy, model) \
                    == pytest.approx(naive_leader_value(game, strategy, model), abs=1e-12)


class TestModelSerialization:
    @pytest.mark.parametrize("model", [
        Rational(), Anchoring(0.5), Anchoring(0.3, flatten="success_prob"),
        Quantal(0.8), Quantal(0.0), Prospect(), Prospect(0.5, 3.0, 0.7, 0.6),
    ])
    def test_json_round_trip(self, model):
        assert model_from_json(model_to_json(model)) == model

    @pytest.mark.parametrize("spec,model", [
        ("rational", Rational()),
        ("at:0.5", Anchoring(0.5)),
        ("qr:0.8", Quantal(0.8)),
        ("pt:0.64,2.25,0.88,0.88", Prospect()),
        ("at", Anchoring()),
        ("qr", Quantal()),
        ("pt", Prospect()),
    ])
    def test_parse_model_spec(self, spec, model):
        assert parse_model_spec(spec) == model

    def test_label_round_trips_through_parse(self):
        for model in (Rational(), Anchoring(0.25), Quantal(1.5), Prospect(0.5, 2.0, 0.9, 0.8)):
            assert parse_model_spec(model_label(model)) == model

    @pytest.mark.parametrize("bad", ["", "qqr:1", "at:2.0", "pt:1,2", "qr:x"])
    def test_bad_specs_rejected(self, bad):
        with pytest.raises(ValidationError):
            parse_model_spec(bad)

    def test_default_parameters(self):
        assert Anchoring().delta == 0.5
        assert Quantal().lam == 0.8
        assert Prospect() == Prospect(0.64, 2.25, 0.88, 0.88)

    def test_parameter_ranges_enforced(self):
        with pytest.raises(ValidationError):
            Anchoring(0.0)
        with pytest.raises(ValidationError):
            Quantal(-0.1)
        with pytest.raises(ValidationError):
            Prospect(gamma=0.0)
        with pytest.raises(ValidationError):
            Prospect(theta=0.5)
