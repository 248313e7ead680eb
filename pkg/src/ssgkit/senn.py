"""Neural estimator of the defender's payoff from encoded coverage.

A four-layer perceptron maps the flattened coverage matrix (steps x targets,
step-major) to a single tanh output.  The first layer is block-structured:
the hidden units are grouped per time step and each group sees only that
step's coverage entries.  The block pattern is realized as a dense weight
matrix with a frozen zero mask, which keeps the gradients ordinary matrix
products.

Layer widths for a game with n targets and m steps:
    m*n  ->  m*ceil(n/4)  ->  ceil(n/4)  ->  1

Training is plain minibatch backpropagation with Adam on mean squared error;
the snapshot with the best validation loss is returned.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .game import Game, MixedStrategy, ValidationError, coverage_profile


@dataclass
class SennNetwork:
    """Weights/biases per layer plus the frozen first-layer connectivity mask.

    ``weights[i]`` has shape (fan_out, fan_in); activations are tanh in every
    layer including the output.
    """

    n: int
    m: int
    layer_sizes: list[int]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    block_mask: np.ndarray

    def copy(self) -> "SennNetwork":
        return SennNetwork(
            self.n, self.m, list(self.layer_sizes),
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
            self.block_mask,
        )


@dataclass(frozen=True)
class TrainingExample:
    """Encoded coverage vector and the exact leader payoff it earned."""

    input: np.ndarray
    label: float

    def __post_init__(self):
        x = np.asarray(self.input, dtype=float)
        if x.ndim != 1:
            raise ValidationError("training input must be a flat vector")
        if x.size and (x.min() < -1e-9 or x.max() > 1.0 + 1e-9):
            raise ValidationError("training input entries must lie in [0, 1]")
        object.__setattr__(self, "input", x)
        object.__setattr__(self, "label", float(self.label))


@dataclass
class AdamState:
    """First/second moment accumulators and step counter."""

    m_w: list[np.ndarray]
    v_w: list[np.ndarray]
    m_b: list[np.ndarray]
    v_b: list[np.ndarray]
    step: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    @classmethod
    def for_network(cls, net: SennNetwork, lr: float = 1e-3, beta1: float = 0.9,
                    beta2: float = 0.999, epsilon: float = 1e-8) -> "AdamState":
        return cls(
            m_w=[np.zeros_like(w) for w in net.weights],
            v_w=[np.zeros_like(w) for w in net.weights],
            m_b=[np.zeros_like(b) for b in net.biases],
            v_b=[np.zeros_like(b) for b in net.biases],
            lr=lr, beta1=beta1, beta2=beta2, epsilon=epsilon,
        )


@dataclass(frozen=True)
class TrainConfig:
    # the narrow low-n networks plateau prematurely below lr 3e-3 / patience 30
    lr: float = 3e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    batch_size: int = 32
    max_epochs: int = 500
    patience: int = 30
    min_improvement: float = 1e-5
    seed: int = 0


@dataclass
class TrainReport:
    final_mae: float
    epochs_run: int
    loss_curve: list[float] = field(repr=False)      # train MSE per epoch
    val_curve: list[float] = field(repr=False)       # validation MSE per epoch


def layer_sizes(n: int, m: int) -> list[int]:
    h = math.ceil(n / 4)
    return [m * n, m * h, h, 1]


def build(n: int, m: int, rng: np.random.Generator) -> SennNetwork:
    """Fresh network with fan-scaled uniform weights, zero biases, mask installed."""
    if n < 1 or m < 1:
        raise ValidationError("network needs n >= 1 targets and m >= 1 steps")
    sizes = layer_sizes(n, m)
    h = sizes[2]
    mask = np.zeros((sizes[1], sizes[0]))
    for step in range(m):
        mask[step * h:(step + 1) * h, step * n:(step + 1) * n] = 1.0
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes, sizes[1:]):
        bound = math.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    weights[0] *= mask
    return SennNetwork(n, m, sizes, weights, biases, mask)


def encode_strategy(game: Game, strategy: MixedStrategy) -> np.ndarray:
    """Flattened coverage matrix, step-major: entry s*n + t holds c_s(t)."""
    return coverage_profile(game, strategy).matrix.ravel()


def _forward_all(net: SennNetwork, x: np.ndarray) -> list[np.ndarray]:
    """Activations per layer for a batch, input included; x has shape (batch, m*n)."""
    acts = [x]
    for w, b in zip(net.weights, net.biases):
        acts.append(np.tanh(acts[-1] @ w.T + b))
    return acts


def forward(net: SennNetwork, input: np.ndarray) -> float:
    """Estimated leader payoff for one encoded strategy, in (-1, 1)."""
    x = np.asarray(input, dtype=float)
    if x.shape != (net.layer_sizes[0],):
        raise ValidationError(
            f"input length {x.shape} does not match {net.layer_sizes[0]} network inputs"
        )
    for w, b in zip(net.weights, net.biases):
        x = np.tanh(w @ x + b)
    return float(x[0])


def forward_batch(net: SennNetwork, inputs: np.ndarray) -> np.ndarray:
    """Network outputs for a (batch, m*n) array of encoded strategies."""
    return _forward_all(net, np.asarray(inputs, dtype=float))[-1][:, 0]


def loss_and_gradient(net: SennNetwork, batch: list[TrainingExample]):
    """Mean squared error on the batch and its exact gradients.

    Returns (loss, grads) where grads is a list of (dW, db) per layer; masked
    first-layer entries get zero gradient.
    """
    if not batch:
        raise ValidationError("gradient needs a non-empty batch")
    x = np.stack([ex.input for ex in batch])
    y = np.asarray([ex.label for ex in batch])
    return _loss_and_gradient_arrays(net, x, y)


def _loss_and_gradient_arrays(net: SennNetwork, x: np.ndarray, y: np.ndarray):
    acts = _forward_all(net, x)
    out = acts[-1][:, 0]
    resid = out - y
    loss = float(np.mean(resid ** 2))
    grads = [None] * len(net.weights)
    # d loss / d activation of the output layer
    delta = (2.0 / len(y)) * resid[:, None]
    for layer in range(len(net.weights) - 1, -1, -1):
        a = acts[layer + 1]
        dz = delta * (1.0 - a * a)  # through tanh
        dw = dz.T @ acts[layer]
        db = dz.sum(axis=0)
        if layer == 0:
            dw *= net.block_mask
        grads[layer] = (dw, db)
        if layer > 0:
            delta = dz @ net.weights[layer]
    return loss, grads


def adam_step(net: SennNetwork, state: AdamState, grads) -> None:
    """One bias-corrected Adam update in place; masked weights stay zero."""
    state.step += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** state.step
    c2 = 1.0 - b2 ** state.step
    for i, (dw, db) in enumerate(grads):
        if dw.shape != net.weights[i].shape or db.shape != net.biases[i].shape:
            raise ValidationError(f"gradient shapes do not match layer {i}")
        state.m_w[i] = b1 * state.m_w[i] + (1 - b1) * dw
        state.v_w[i] = b2 * state.v_w[i] + (1 - b2) * dw ** 2
        state.m_b[i] = b1 * state.m_b[i] + (1 - b1) * db
        state.v_b[i] = b2 * state.v_b[i] + (1 - b2) * db ** 2
        net.weights[i] -= state.lr * (state.m_w[i] / c1) / (np.sqrt(state.v_w[i] / c2) + state.epsilon)
        net.biases[i] -= state.lr * (state.m_b[i] / c1) / (np.sqrt(state.v_b[i] / c2) + state.epsilon)
    net.weights[0] *= net.block_mask


def evaluate_mae(net: SennNetwork, dataset: list[TrainingExample]) -> float:
    """Mean absolute difference between network output and label."""
    if not dataset:
        raise ValidationError("MAE needs a non-empty dataset")
    x = np.stack([ex.input for ex in dataset])
    y = np.asarray([ex.label for ex in dataset])
    return float(np.mean(np.abs(forward_batch(net, x) - y)))


def train(net: SennNetwork, train_set: list[TrainingExample],
          val_set: list[TrainingExample], hyper: TrainConfig = TrainConfig()
          ) -> tuple[SennNetwork, TrainReport]:
    """Shuffled minibatch epochs with early stopping on validation MSE.

    Stops when validation MSE has not improved by ``min_improvement`` for
    ``patience`` consecutive epochs or at ``max_epochs``; the returned network
    is the snapshot with the best validation loss.
    """
    if not train_set or not val_set:
        raise ValidationError("training needs non-empty train and validation sets")
    rng = np.random.default_rng(hyper.seed)
    x_tr = np.stack([ex.input for ex in train_set])
    y_tr = np.asarray([ex.label for ex in train_set])
    x_va = np.stack([ex.input for ex in val_set])
    y_va = np.asarray([ex.label for ex in val_set])

    state = AdamState.for_network(net, hyper.lr, hyper.beta1, hyper.beta2, hyper.epsilon)
    best = net.copy()
    best_val = float(np.mean((forward_batch(net, x_va) - y_va) ** 2))
    stale = 0
    loss_curve, val_curve = [], []

    for epoch in range(1, hyper.max_epochs + 1):
        order = rng.permutation(len(x_tr))
        epoch_loss, batches = 0.0, 0
        for start in range(0, len(order), hyper.batch_size):
            idx = order[start:start + hyper.batch_size]
            loss, grads = _loss_and_gradient_arrays(net, x_tr[idx], y_tr[idx])
            adam_step(net, state, grads)
            epoch_loss += loss
            batches += 1
        loss_curve.append(epoch_loss / batches)
        val_mse = float(np.mean((forward_batch(net, x_va) - y_va) ** 2))
        val_curve.append(val_mse)
        if val_mse < best_val - hyper.min_improvement:
            best_val = val_mse
            best = net.copy()
            stale = 0
        else:
            stale += 1
            if stale >= hyper.patience:
                break

    net.weights, net.biases = best.weights, best.biases
    report = TrainReport(
        final_mae=float(np.mean(np.abs(forward_batch(net, x_va) - y_va))),
        epochs_run=len(loss_curve),
        loss_curve=loss_curve,
        val_curve=val_curve,
    )
    return net, report


def senn_evaluator(net: SennNetwork, game: Game):
    """Fitness function estimating the leader value from the network.

    Raises at construction if the network was built for a different game size.
    """
    if net.n != game.num_targets or net.m != game.num_steps:
        raise ValidationError(
            f"network built for (n={net.n}, m={net.m}) cannot evaluate a "
            f"(n={game.num_targets}, m={game.num_steps}) game"
        )

    def evaluate(g: Game, strategy: MixedStrategy) -> float:
        return forward(net, encode_strategy(g, strategy))

    return evaluate
