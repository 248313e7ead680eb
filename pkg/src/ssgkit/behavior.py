"""Attacker response models and exact defender-value evaluation.

Four attacker models are supported:

* ``Rational``   -- picks the target with the highest expected payoff.
* ``Anchoring``  -- flattens the observed coverage toward uniform by a factor
  delta before responding rationally to the distorted profile.
* ``Quantal``    -- chooses stochastically, each target with probability
  proportional to exp(lambda * expected payoff).
* ``Prospect``   -- maximizes pi(P)V(reward) + pi(1-P)V(penalty) with the
  classic S-shaped value function V and inverse-S probability weight pi.

Every evaluation enumerates all targets and scores each one with the exact
payoff formulas; this brute-force sweep is the oracle that both the
evolutionary solver and the surrogate's training labels rely on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .game import (
    ABS_TOL,
    CoverageProfile,
    Game,
    MixedStrategy,
    ValidationError,
    attack_success_prob,
    coverage_profile,
)


@dataclass(frozen=True)
class Rational:
    """Perfectly rational attacker."""


@dataclass(frozen=True)
class Anchoring:
    """Probability flattening with weight ``delta`` in (0, 1).

    ``flatten`` selects what gets distorted: the per-step coverage the
    attacker observes (default) or the aggregate success probability P_x.
    """

    delta: float = 0.5
    flatten: str = "coverage"

    def __post_init__(self):
        if not 0.0 < self.delta < 1.0:
            raise ValidationError(f"delta must be in (0, 1), got {self.delta}")
        if self.flatten not in ("coverage", "success_prob"):
            raise ValidationError("flatten must be 'coverage' or 'success_prob'")


@dataclass(frozen=True)
class Quantal:
    """Logit choice with rationality ``lam`` >= 0 (0 gives uniform choice)."""

    lam: float = 0.8

    def __post_init__(self):
        if self.lam < 0.0:
            raise ValidationError(f"lambda must be >= 0, got {self.lam}")


@dataclass(frozen=True)
class Prospect:
    """Distorted probabilities and asymmetric outcome values.

    gamma bends the probability weight, theta scales losses, alpha and beta
    curve gains and losses.
    """

    gamma: float = 0.64
    theta: float = 2.25
    alpha: float = 0.88
    beta: float = 0.88

    def __post_init__(self):
        if not 0.0 < self.gamma <= 1.0:
            raise ValidationError(f"gamma must be in (0, 1], got {self.gamma}")
        if self.theta < 1.0:
            raise ValidationError(f"theta must be >= 1, got {self.theta}")
        if not 0.0 < self.alpha <= 1.0:
            raise ValidationError(f"alpha must be in (0, 1], got {self.alpha}")
        if not 0.0 < self.beta <= 1.0:
            raise ValidationError(f"beta must be in (0, 1], got {self.beta}")


BehaviorModel = Rational | Anchoring | Quantal | Prospect


@dataclass(frozen=True)
class FollowerResponse:
    """Either a single chosen target or, for stochastic models, a distribution."""

    chosen_target: int | None = None
    distribution: np.ndarray | None = None

    def __post_init__(self):
        if (self.chosen_target is None) == (self.distribution is None):
            raise ValidationError("response needs exactly one of chosen_target, distribution")
        if self.distribution is not None:
            q = np.asarray(self.distribution, dtype=float)
            if q.min() < 0.0 or abs(q.sum() - 1.0) > ABS_TOL:
                raise ValidationError("distribution entries must be >= 0 and sum to 1")
            object.__setattr__(self, "distribution", q)


def _best_target(scores: list[float], leader_values: list[float]) -> int:
    """Argmax with ties (within ABS_TOL) broken by leader value, then lowest index."""
    best = max(scores)
    choice, choice_lv = None, -math.inf
    for x, s in enumerate(scores):
        if s >= best - ABS_TOL and leader_values[x] > choice_lv + ABS_TOL:
            choice, choice_lv = x, leader_values[x]
    return choice


def _payoff_sweep(game: Game, coverage: CoverageProfile) -> tuple[list[float], list[float]]:
    """Expected follower and leader payoffs for every target, one at a time."""
    follower, leader = [], []
    for x in range(game.num_targets):
        p = attack_success_prob(coverage, x)
        follower.append(p * game.follower_reward[x] + (1.0 - p) * game.follower_penalty[x])
        leader.append(p * game.leader_penalty[x] + (1.0 - p) * game.leader_reward[x])
    return follower, leader


def rational_response(game: Game, coverage: CoverageProfile) -> FollowerResponse:
    """Target with the highest expected follower payoff; ties favor the leader."""
    follower, leader = _payoff_sweep(game, coverage)
    return FollowerResponse(chosen_target=_best_target(follower, leader))


def at_perceived_coverage(coverage: CoverageProfile, delta: float) -> CoverageProfile:
    """Flatten each step's coverage toward uniform: c' = c(1-delta) + delta/n."""
    if not 0.0 < delta < 1.0:
        raise ValidationError(f"delta must be in (0, 1), got {delta}")
    n = coverage.num_targets
    return CoverageProfile(coverage.matrix * (1.0 - delta) + delta / n)


def at_response(game: Game, coverage: CoverageProfile, delta: float,
                flatten: str = "coverage") -> FollowerResponse:
    """Rational response against the flattened profile.

    The attacker maximizes payoff under the distorted probabilities; the
    defender's realized payoff is still governed by the true coverage.
    """
    if flatten == "coverage":
        return rational_response(game, at_perceived_coverage(coverage, delta))
    # Alternative anchoring point for sensitivity runs: flatten the aggregate
    # success probability over the target set instead of per-step coverage.
    follower, leader = [], []
    n = game.num_targets
    for x in range(n):
        p = attack_success_prob(coverage, x) * (1.0 - delta) + delta / n
        follower.append(p * game.follower_reward[x] + (1.0 - p) * game.follower_penalty[x])
        leader.append(p * game.leader_penalty[x] + (1.0 - p) * game.leader_reward[x])
    return FollowerResponse(chosen_target=_best_target(follower, leader))


def qr_distribution(game: Game, coverage: CoverageProfile, lam: float) -> FollowerResponse:
    """Logit choice probabilities q(x) ~ exp(lam * follower payoff at x)."""
    if lam < 0.0:
        raise ValidationError(f"lambda must be >= 0, got {lam}")
    follower, _ = _payoff_sweep(game, coverage)
    z = np.asarray(follower) * lam
    z -= z.max()  # overflow-safe for any lam
    q = np.exp(z)
    q /= q.sum()
    return FollowerResponse(distribution=q)


def pt_value(outcome: float, alpha: float, beta: float, theta: float) -> float:
    """Perceived value of an outcome: gains curve as C^alpha, losses as -theta(-C)^beta."""
    if outcome >= 0.0:
        return outcome ** alpha
    return -theta * (-outcome) ** beta


def pt_weight(p: float, gamma: float) -> float:
    """Perceived probability p^gamma / (p^gamma + (1-p)^gamma)^(1/gamma)."""
    if not 0.0 <= p <= 1.0:
        raise ValidationError(f"probability must be in [0, 1], got {p}")
    a = p ** gamma
    b = (1.0 - p) ** gamma
    return a / (a + b) ** (1.0 / gamma)


def pt_response(game: Game, coverage: CoverageProfile, params: Prospect) -> FollowerResponse:
    """Target maximizing pi(P_x)V(reward) + pi(1-P_x)V(penalty); ties favor the leader."""
    prospects, leader = [], []
    for x in range(game.num_targets):
        p = attack_success_prob(coverage, x)
        prospects.append(
            pt_weight(p, params.gamma)
            * pt_value(float(game.follower_reward[x]), params.alpha, params.beta, params.theta)
            + pt_weight(1.0 - p, params.gamma)
            * pt_value(float(game.follower_penalty[x]), params.alpha, params.beta, params.theta)
        )
        leader.append(p * game.leader_penalty[x] + (1.0 - p) * game.leader_reward[x])
    return FollowerResponse(chosen_target=_best_target(prospects, leader))


def respond(game: Game, coverage: CoverageProfile, model: BehaviorModel) -> FollowerResponse:
    """Dispatch to the model's response rule."""
    if isinstance(model, Rational):
        return rational_response(game, coverage)
    if isinstance(model, Anchoring):
        return at_response(game, coverage, model.delta, model.flatten)
    if isinstance(model, Quantal):
        return qr_distribution(game, coverage, model.lam)
    if isinstance(model, Prospect):
        return pt_response(game, coverage, model)
    raise TypeError(f"unknown behavior model {model!r}")


def exact_leader_value(game: Game, strategy: MixedStrategy, model: BehaviorModel) -> float:
    """Defender's expected payoff when the attacker follows ``model``.

    Deterministic models yield the payoff at the chosen target, computed with
    the true coverage.  The quantal model yields the expectation over its
    choice distribution, reusing the single payoff sweep for both the choice
    weights and the valuation.
    """
    cov = coverage_profile(game, strategy)
    if isinstance(model, Quantal):
        follower, leader = _payoff_sweep(game, cov)
        z = np.asarray(follower) * model.lam
        z -= z.max()
        q = np.exp(z)
        return float(np.dot(q, leader) / q.sum())
    response = respond(game, cov, model)
    x = response.chosen_target
    p = attack_success_prob(cov, x)
    return float(p * game.leader_penalty[x] + (1.0 - p) * game.leader_reward[x])


def model_to_json(model: BehaviorModel) -> dict:
    """JSON-friendly tagged representation, e.g. {"model": "qr", "lambda": 0.8}."""
    if isinstance(model, Rational):
        return {"model": "rational"}
    if isinstance(model, Anchoring):
        out = {"model": "at", "delta": model.delta}
        if model.flatten != "coverage":
            out["flatten"] = model.flatten
        return out
    if isinstance(model, Quantal):
        return {"model": "qr", "lambda": model.lam}
    if isinstance(model, Prospect):
        return {"model": "pt", "gamma": model.gamma, "theta": model.theta,
                "alpha": model.alpha, "beta": model.beta}
    raise TypeError(f"unknown behavior model {model!r}")


def model_from_json(obj: dict) -> BehaviorModel:
    tag = obj.get("model")
    if tag == "rational":
        return Rational()
    if tag == "at":
        return Anchoring(delta=obj["delta"], flatten=obj.get("flatten", "coverage"))
    if tag == "qr":
        return Quantal(lam=obj["lambda"])
    if tag == "pt":
        return Prospect(gamma=obj["gamma"], theta=obj["theta"],
                        alpha=obj["alpha"], beta=obj["beta"])
    raise ValidationError(f"unknown behavior model tag {tag!r}")


def parse_model_spec(spec: str) -> BehaviorModel:
    """Parse CLI-style specs: 'rational', 'at:0.5', 'qr:0.8', 'pt:0.64,2.25,0.88,0.88'."""
    name, _, rest = spec.partition(":")
    name = name.strip().lower()
    try:
        if name == "rational":
            return Rational()
        if name == "at":
            return Anchoring(delta=float(rest)) if rest else Anchoring()
        if name == "qr":
            return Quantal(lam=float(rest)) if rest else Quantal()
        if name == "pt":
            if not rest:
                return Prospect()
            g, t, a, b = (float(v) for v in rest.split(","))
            return Prospect(gamma=g, theta=t, alpha=a, beta=b)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"bad parameters in model spec {spec!r}: {exc}") from exc
    raise ValidationError(f"unknown model spec {spec!r}; expected rational|at:D|qr:L|pt:G,T,A,B")


def model_label(model: BehaviorModel) -> str:
    """Short CLI-style label, inverse of parse_model_spec for default formatting."""
    if isinstance(model, Rational):
        return "rational"
    if isinstance(model, Anchoring):
        return f"at:{model.delta:g}"
    if isinstance(model, Quantal):
        return f"qr:{model.lam:g}"
    if isinstance(model, Prospect):
        return f"pt:{model.gamma:g},{model.theta:g},{model.alpha:g},{model.beta:g}"
    raise TypeError(f"unknown behavior model {model!r}")
