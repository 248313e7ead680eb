"""Game representation, strategies, coverage and exact payoff arithmetic.

A game has n targets, m time steps and k defender units.  A pure defender
strategy assigns every unit to a target in every step; a mixed strategy is a
probability distribution over pure strategies.  The attacker picks a single
target.  Coverage c_s(t) is the probability that at least one unit sits on
target t in step s, and the chance an attack on x slips through is
P_x = prod_s (1 - c_s(x)).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

ABS_TOL = 1e-9


class ValidationError(ValueError):
    """A domain invariant was violated; the message names the invariant."""


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Game:
    """Targets, steps, units and the four per-target payoffs.

    Payoff arrays are indexed by target: ``leader_reward[t]`` is paid to the
    defender when an attack on t is intercepted, ``leader_penalty[t]`` when it
    succeeds; ``follower_reward`` / ``follower_penalty`` are the attacker's
    payoffs for success / interception.
    """

    num_targets: int
    num_steps: int
    num_units: int
    leader_reward: np.ndarray
    leader_penalty: np.ndarray
    follower_reward: np.ndarray
    follower_penalty: np.ndarray
    nonstandard_payoffs: bool = field(init=False, default=False)

    def __post_init__(self):
        if self.num_targets < 1:
            raise ValidationError("num_targets must be >= 1")
        if self.num_steps < 1:
            raise ValidationError("num_steps must be >= 1")
        if self.num_units < 1:
            raise ValidationError("num_units must be >= 1")
        for name in ("leader_reward", "leader_penalty", "follower_reward", "follower_penalty"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (self.num_targets,):
                raise ValidationError(f"{name} must have one entry per target")
            object.__setattr__(self, name, _readonly(arr))
        standard = bool(
            np.all(self.leader_reward > 0)
            and np.all(self.leader_penalty < 0)
            and np.all(self.follower_reward > 0)
            and np.all(self.follower_penalty < 0)
        )
        if not standard:
            warnings.warn(
                "payoff signs differ from the benchmark convention "
                "(rewards > 0 > penalties); accepting as a handcrafted game",
                stacklevel=2,
            )
            object.__setattr__(self, "nonstandard_payoffs", True)

    def check_target(self, target: int) -> None:
        if not 0 <= target < self.num_targets:
            raise IndexError(f"target {target} out of range [0, {self.num_targets})")


@dataclass(frozen=True)
class PureStrategy:
    """One unit-to-target allocation: ``alloc[u, s]`` is unit u's target in step s."""

    alloc: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.alloc, dtype=np.int64)
        if arr.ndim != 2:
            raise ValidationError("allocation must be a units x steps matrix")
        if arr.size and arr.min() < 0:
            raise ValidationError("allocation entries must be non-negative target indices")
        object.__setattr__(self, "alloc", _readonly(arr))

    @property
    def num_units(self) -> int:
        return self.alloc.shape[0]

    @property
    def num_steps(self) -> int:
        return self.alloc.shape[1]

    def key(self) -> bytes:
        return self.alloc.tobytes()

    def __eq__(self, other):
        return isinstance(other, PureStrategy) and np.array_equal(self.alloc, other.alloc)

    def __hash__(self):
        return hash((self.alloc.shape, self.key()))


class MixedStrategy:
    """Probability distribution over pure strategies.

    Entries with identical allocation matrices are merged at construction by
    summing their probabilities, so the support is canonical.  Probabilities
    must be in (0, 1] and sum to 1 within ``ABS_TOL``.
    """

    __slots__ = ("pures", "probs")

    def __init__(self, support):
        merged: dict[bytes, int] = {}
        pures: list[PureStrategy] = []
        probs: list[float] = []
        for pure, prob in support:
            if not isinstance(pure, PureStrategy):
                pure = PureStrategy(np.asarray(pure))
            prob = float(prob)
            if not 0.0 < prob <= 1.0 + ABS_TOL:
                raise ValidationError(f"support probability {prob} outside (0, 1]")
            idx = merged.get(pure.key())
            if idx is None:
                merged[pure.key()] = len(pures)
                pures.append(pure)
                probs.append(prob)
            else:
                probs[idx] += prob
        if not pures:
            raise ValidationError("mixed strategy support must be non-empty")
        shapes = {p.alloc.shape for p in pures}
        if len(shapes) > 1:
            raise ValidationError("all pure strategies must share the same units x steps shape")
        total = sum(probs)
        if abs(total - 1.0) > ABS_TOL:
            raise ValidationError(f"support probabilities sum to {total!r}, expected 1")
        self.pures = tuple(pures)
        self.probs = _readonly(np.asarray(probs, dtype=float))

    @property
    def support(self) -> list[tuple[PureStrategy, float]]:
        return list(zip(self.pures, self.probs.tolist()))

    @property
    def support_size(self) -> int:
        return len(self.pures)

    def __eq__(self, other):
        if not isinstance(other, MixedStrategy):
            return NotImplemented
        return (
            len(self.pures) == len(other.pures)
            and np.array_equal(self.probs, other.probs)
            and all(a == b for a, b in zip(self.pures, other.pures))
        )

    def __repr__(self):
        return f"MixedStrategy(support_size={self.support_size})"


def pure_singleton(alloc) -> MixedStrategy:
    """Mixed strategy that plays one allocation with probability 1."""
    return MixedStrategy([(PureStrategy(np.asarray(alloc)), 1.0)])


@dataclass(frozen=True)
class CoverageProfile:
    """Per-step, per-target protection probabilities, shape (steps, targets)."""

    matrix: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.matrix, dtype=float)
        if arr.ndim != 2:
            raise ValidationError("coverage must be a steps x targets matrix")
        if arr.size and (arr.min() < -ABS_TOL or arr.max() > 1.0 + ABS_TOL):
            raise ValidationError("coverage entries must lie in [0, 1]")
        object.__setattr__(self, "matrix", _readonly(arr))

    @property
    def num_steps(self) -> int:
        return self.matrix.shape[0]

    @property
    def num_targets(self) -> int:
        return self.matrix.shape[1]


def coverage_profile(game: Game, strategy: MixedStrategy) -> CoverageProfile:
    """Coverage c_s(t): total probability of support entries placing a unit on t in step s."""
    m, n = game.num_steps, game.num_targets
    cov = np.zeros((m, n))
    for pure, prob in zip(strategy.pures, strategy.probs):
        if pure.alloc.shape != (game.num_units, m):
            raise ValidationError(
                f"allocation shape {pure.alloc.shape} does not match "
                f"game's (units, steps) = {(game.num_units, m)}"
            )
        if pure.alloc.max() >= n:
            raise ValidationError(f"allocation targets exceed game's {n} targets")
        hit = np.zeros((m, n), dtype=bool)
        for s in range(m):
            hit[s, pure.alloc[:, s]] = True
        cov += prob * hit
    if np.any(cov.sum(axis=1) > game.num_units + ABS_TOL):
        raise ValidationError("per-step coverage mass exceeds the number of units")
    return CoverageProfile(np.clip(cov, 0.0, 1.0))


def attack_success_prob(coverage: CoverageProfile, target: int) -> float:
    """P_x: probability an attack on ``target`` is never intercepted."""
    if not 0 <= target < coverage.num_targets:
        raise IndexError(f"target {target} out of range [0, {coverage.num_targets})")
    p = 1.0
    for s in range(coverage.num_steps):
        p *= 1.0 - coverage.matrix[s, target]
    return float(p)


def leader_payoff(game: Game, coverage: CoverageProfile, target: int) -> float:
    """Expected defender payoff if ``target`` is attacked."""
    game.check_target(target)
    p = attack_success_prob(coverage, target)
    return float(p * game.leader_penalty[target] + (1.0 - p) * game.leader_reward[target])


def follower_payoff(game: Game, coverage: CoverageProfile, target: int) -> float:
    """Expected attacker payoff for attacking ``target``."""
    game.check_target(target)
    p = attack_success_prob(coverage, target)
    return float(p * game.follower_reward[target] + (1.0 - p) * game.follower_penalty[target])
