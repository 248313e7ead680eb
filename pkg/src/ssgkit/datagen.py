"""Benchmark game generation, strategy sampling, training data and file IO.

All randomness flows through numpy's PCG64 generator.  A root seed is split
into independent child streams with ``SeedSequence(root, spawn_key=(i,))``,
so every artifact is reproducible bit for bit from the root seed plus its
index, on any platform.

File formats (indices are 1-based in files, 0-based in code):

* game JSON      {"targets": n, "steps": m, "units": k,
                  "payoffs": [{"lr","lp","fr","fp"} x n]}
* strategy JSON  {"support": [{"prob": p, "alloc": [[t_u1..t_um] x k units]}]}
* dataset CSV    header c_<step>_<target> ... label, one row per example
* network JSON   {"n", "m", "layers", "weights", "biases"}
"""

from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass

import numpy as np

from .behavior import BehaviorModel, exact_leader_value
from .game import Game, MixedStrategy, PureStrategy, ValidationError
from .senn import SennNetwork, TrainingExample, encode_strategy, layer_sizes


class ParseError(ValueError):
    """A file could not be decoded; the message carries line/field context."""


def rng_for(root_seed: int, *key: int) -> np.random.Generator:
    """Child generator for artifact ``key`` under ``root_seed``."""
    return np.random.default_rng(np.random.SeedSequence(root_seed, spawn_key=tuple(key)))


@dataclass(frozen=True)
class BenchmarkSpec:
    steps_list: tuple[int, ...] = (1, 2, 4)
    targets_list: tuple[int, ...] = (4, 8, 16, 32, 64, 128)
    games_per_pair: int = 5
    seed: int = 0

    def __post_init__(self):
        if any(v < 1 for v in self.steps_list) or any(v < 1 for v in self.targets_list):
            raise ValidationError("steps and targets must all be >= 1")
        if self.games_per_pair < 1:
            raise ValidationError("games_per_pair must be >= 1")


@dataclass(frozen=True)
class DatasetSpec:
    num_examples: int = 5000
    max_support: int = 5
    model: BehaviorModel | None = None
    seed: int = 0

    def __post_init__(self):
        if self.num_examples < 1:
            raise ValidationError("num_examples must be >= 1")
        if self.max_support < 1:
            raise ValidationError("max_support must be >= 1")


def _uniform_open(rng: np.random.Generator, low: float, high: float, size: int) -> np.ndarray:
    """Uniform draw with exact endpoint values resampled (open interval)."""
    out = rng.uniform(low, high, size)
    while np.any((out == low) | (out == high)):
        redo = (out == low) | (out == high)
        out[redo] = rng.uniform(low, high, int(redo.sum()))
    return out


def gen_benchmark_game(n: int, m: int, rng: np.random.Generator) -> Game:
    """Random game: rewards in (0,1), penalties in (-1,0), k in [n/4m, 3n/4m].

    The unit-count interval is clamped below at 1 so the defender always has
    something to schedule.
    """
    lr = _uniform_open(rng, 0.0, 1.0, n)
    lp = _uniform_open(rng, -1.0, 0.0, n)
    fr = _uniform_open(rng, 0.0, 1.0, n)
    fp = _uniform_open(rng, -1.0, 0.0, n)
    k_lo = max(1, n // (4 * m))
    k_hi = max(k_lo, -(-3 * n // (4 * m)))  # ceil without floats
    k = int(rng.integers(k_lo, k_hi + 1))
    return Game(n, m, k, lr, lp, fr, fp)


def sample_mixed_strategy(game: Game, max_support: int, rng: np.random.Generator) -> MixedStrategy:
    """Random mixed strategy with 1..max_support pure entries.

    Allocations are uniform per unit and step; probabilities are uniform
    draws normalized to sum 1.  Duplicate allocations merge afterwards, so
    the effective support can come out smaller.
    """
    if max_support < 1:
        raise ValidationError("max_support must be >= 1")
    l = int(rng.integers(1, max_support + 1))
    allocs = [rng.integers(0, game.num_targets, size=(game.num_units, game.num_steps))
              for _ in range(l)]
    probs = _uniform_open(rng, 0.0, 1.0, l)
    probs /= probs.sum()
    return MixedStrategy([(PureStrategy(a), p) for a, p in zip(allocs, probs)])


def iter_training_examples(game: Game, model: BehaviorModel, count: int,
                           rng: np.random.Generator, max_support: int = 5):
    """Yield (strategy, example) pairs; the strategy is handy for dataset stats."""
    for _ in range(count):
        strategy = sample_mixed_strategy(game, max_support, rng)
        yield strategy, TrainingExample(
            input=encode_strategy(game, strategy),
            label=exact_leader_value(game, strategy, model),
        )


def gen_training_set(game: Game, model: BehaviorModel, count: int,
                     rng: np.random.Generator, max_support: int = 5) -> list[TrainingExample]:
    """Sampled strategies labeled with their exact leader value under ``model``."""
    return [ex for _, ex in iter_training_examples(game, model, count, rng, max_support)]


# ---------------------------------------------------------------------------
# File IO
# ---------------------------------------------------------------------------

def _read_json(path) -> object:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    except OSError as exc:
        raise ParseError(f"{path}: {exc}") from exc


def _write_json(path, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=1)
        fh.write("\n")


def _field(obj: dict, name: str, path) -> object:
    if name not in obj:
        raise ParseError(f"{path}: missing field {name!r}")
    return obj[name]


def save_game(game: Game, path) -> None:
    payoffs = [
        {"lr": float(game.leader_reward[t]), "lp": float(game.leader_penalty[t]),
         "fr": float(game.follower_reward[t]), "fp": float(game.follower_penalty[t])}
        for t in range(game.num_targets)
    ]
    _write_json(path, {"targets": game.num_targets, "steps": game.num_steps,
                       "units": game.num_units, "payoffs": payoffs})


def _int_field(obj: dict, name: str, path) -> int:
    value = _field(obj, name, path)
    if not isinstance(value, int) or isinstance(value, bool):
        raise ParseError(f"{path}: field {name!r} must be an integer, got {value!r}")
    return value


def load_game(path) -> Game:
    obj = _read_json(path)
    if not isinstance(obj, dict):
        raise ParseError(f"{path}: expected a JSON object")
    n = _int_field(obj, "targets", path)
    payoffs = _field(obj, "payoffs", path)
    if not isinstance(payoffs, list) or len(payoffs) != n:
        raise ParseError(f"{path}: 'payoffs' must list exactly {n} per-target entries")
    try:
        cols = {key: np.array([float(_field(p, key, path)) for p in payoffs])
                for key in ("lr", "lp", "fr", "fp")}
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{path}: non-numeric payoff entry: {exc}") from exc
    return Game(n, _int_field(obj, "steps", path), _int_field(obj, "units", path),
                cols["lr"], cols["lp"], cols["fr"], cols["fp"])


def save_strategy(strategy: MixedStrategy, path) -> None:
    support = [
        {"prob": float(prob), "alloc": (pure.alloc + 1).tolist()}
        for pure, prob in zip(strategy.pures, strategy.probs)
    ]
    _write_json(path, {"support": support})


def load_strategy(path) -> MixedStrategy:
    obj = _read_json(path)
    if not isinstance(obj, dict):
        raise ParseError(f"{path}: expected a JSON object")
    entries = _field(obj, "support", path)
    if not isinstance(entries, list) or not entries:
        raise ParseError(f"{path}: 'support' must be a non-empty list")
    support = []
    for i, entry in enumerate(entries):
        try:
            alloc = np.asarray(_field(entry, "alloc", path), dtype=np.int64)
        except (TypeError, ValueError) as exc:
            raise ParseError(f"{path}: support[{i}] allocation is not a rectangular"
                             f" integer matrix: {exc}") from exc
        if alloc.size and alloc.min() < 1:
            raise ValidationError(f"{path}: support[{i}] targets must be 1-based (got {alloc.min()})")
        support.append((PureStrategy(alloc - 1), _field(entry, "prob", path)))
    return MixedStrategy(support)


def dataset_header(n: int, m: int) -> list[str]:
    return [f"c_{s + 1}_{t + 1}" for s in range(m) for t in range(n)] + ["label"]


def save_dataset(dataset: list[TrainingExample], n: int, m: int, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(dataset_header(n, m))
        for ex in dataset:
            writer.writerow([repr(float(v)) for v in ex.input] + [repr(ex.label)])


def load_dataset(path) -> tuple[list[TrainingExample], int, int]:
    """Returns (examples, n, m) with the game size recovered from the header."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty dataset file") from None
        pattern = re.compile(r"c_(\d+)_(\d+)$")
        pairs = []
        for name in header[:-1]:
            match = pattern.match(name)
            if not match:
                raise ParseError(f"{path}: unexpected column {name!r} in header")
            pairs.append((int(match.group(1)), int(match.group(2))))
        if not pairs or header[-1] != "label":
            raise ParseError(f"{path}: header must end with coverage columns then 'label'")
        m = max(s for s, _ in pairs)
        n = max(t for _, t in pairs)
        expect = [(s + 1, t + 1) for s in range(m) for t in range(n)]
        if pairs != expect:
            raise ParseError(f"{path}: coverage columns must be step-major c_1_1..c_{m}_{n}")
        examples = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise ParseError(f"{path}: line {lineno}: expected {len(header)} fields, got {len(row)}")
            try:
                values = [float(v) for v in row]
            except ValueError as exc:
                raise ParseError(f"{path}: line {lineno}: non-numeric field: {exc}") from exc
            examples.append(TrainingExample(np.asarray(values[:-1]), values[-1]))
    if not examples:
        raise ParseError(f"{path}: dataset has a header but no rows")
    return examples, n, m


def save_network(net: SennNetwork, path) -> None:
    _write_json(path, {
        "n": net.n, "m": net.m, "layers": list(net.layer_sizes),
        "weights": [w.tolist() for w in net.weights],
        "biases": [b.tolist() for b in net.biases],
    })


def load_network(path) -> SennNetwork:
    obj = _read_json(path)
    if not isinstance(obj, dict):
        raise ParseError(f"{path}: expected a JSON object")
    n, m = _field(obj, "n", path), _field(obj, "m", path)
    sizes = layer_sizes(n, m)
    if list(_field(obj, "layers", path)) != sizes:
        raise ValidationError(f"{path}: layer sizes must be {sizes} for n={n}, m={m}")
    weights = [np.asarray(w, dtype=float) for w in _field(obj, "weights", path)]
    biases = [np.asarray(b, dtype=float) for b in _field(obj, "biases", path)]
    for i, (fan_in, fan_out) in enumerate(zip(sizes, sizes[1:])):
        if weights[i].shape != (fan_out, fan_in) or biases[i].shape != (fan_out,):
            raise ValidationError(f"{path}: layer {i} weight/bias shapes do not match {sizes}")
    h = sizes[2]
    mask = np.zeros((sizes[1], sizes[0]))
    for step in range(m):
        mask[step * h:(step + 1) * h, step * n:(step + 1) * n] = 1.0
    if np.any(weights[0] * (1.0 - mask) != 0.0):
        raise ValidationError(f"{path}: first-layer weights outside the step blocks must be zero")
    return SennNetwork(n, m, sizes, weights, biases, mask)


def save_examples_meta(path, *, count: int, support_sizes: dict[int, int], model_json: dict,
                       seed: int, max_support: int) -> None:
    """Sidecar metadata for a generated dataset.

    ``support_sizes`` is a histogram of effective support sizes; merging of
    duplicate sampled allocations shows up as mass below the drawn size.
    """
    _write_json(path, {
        "count": count,
        "max_support": max_support,
        "duplicates": "merged",
        "support_sizes": {str(k): support_sizes[k] for k in sorted(support_sizes)},
        "model": model_json,
        "seed": seed,
    })
