"""Classical readouts: a from-scratch feed-forward network and linear baselines.

The network is a stack of affine maps with GELU hidden activations and either
a softmax (classification) or identity (regression) output, trained full-batch
with Adam plus decoupled weight decay.  The linear baselines are closed-form
ridge regression and gradient-descent multinomial logistic regression with an
L2 penalty chosen on a held-out split.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erf

from .errors import DivergenceError, InvalidArgumentError

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPSILON = 1e-8
PROB_FLOOR = 1e-12

DEFAULT_LEARNING_RATE = 0.004
DEFAULT_WEIGHT_DECAY = 0.01
DEFAULT_MAX_EPOCHS = 2000
DEFAULT_PATIENCE = 200

LOGISTIC_GRAD_TOL = 1e-6
LOGISTIC_MAX_ITERS = 10_000
# log-spaced candidate penalties for the "optimal" L2 rate
DEFAULT_LAMBDA_GRID = tuple(10.0 ** e for e in np.linspace(-4, 1, 6))


class Activation(enum.Enum):
    GELU = "gelu"
    SOFTMAX = "softmax"
    IDENTITY = "identity"


class LossKind(enum.Enum):
    CROSS_ENTROPY = "cross_entropy"
    MSE = "mse"
    HUBER = "huber"


# ---------------------------------------------------------------------------
# activations and losses
# ---------------------------------------------------------------------------

def gelu(x):
    """Exact GELU, x * Phi(x) with the standard normal CDF."""
    x = np.asarray(x, dtype=float)
    return x * 0.5 * (1.0 + erf(x / math.sqrt(2.0)))


def gelu_derivative(x):
    x = np.asarray(x, dtype=float)
    cdf = 0.5 * (1.0 + erf(x / math.sqrt(2.0)))
    pdf = np.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
    return cdf + x * pdf


def softmax(logits):
    """Row-wise stable softmax."""
    logits = np.asarray(logits, dtype=float)
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def loss_cross_entropy(probs, onehot):
    probs = np.clip(np.asarray(probs, float), PROB_FLOOR, None)
    onehot = np.asarray(onehot, float)
    if probs.shape != onehot.shape:
        raise InvalidArgumentError("probs and labels must share a shape")
    per_sample = -(onehot * np.log(probs)).sum(axis=-1)
    return float(per_sample.mean())


def loss_mse(pred, target):
    pred, target = np.asarray(pred, float), np.asarray(target, float)
    if pred.shape != target.shape:
        raise InvalidArgumentError("prediction and target must share a shape")
    return float(np.mean(np.abs(pred - target) ** 2))


def loss_huber(pred, target, delta=1.0):
    pred, target = np.asarray(pred, float), np.asarray(target, float)
    if pred.shape != target.shape:
        raise InvalidArgumentError("prediction and target must share a shape")
    err = pred - target
    a = np.abs(err)
    quad = 0.5 * err ** 2
    lin = delta * (a - 0.5 * delta)
    return float(np.mean(np.where(a <= delta, quad, lin)))


# ---------------------------------------------------------------------------
# feed-forward network
# ---------------------------------------------------------------------------

@dataclass
class Mlp:
    """Affine-plus-activation stack; weights[l] has shape (n_l, n_{l-1})."""

    layer_sizes: list[int]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    hidden_activation: Activation = Activation.GELU
    output_activation: Activation = Activation.SOFTMAX

    def __post_init__(self):
        if len(self.layer_sizes) < 2:
            raise InvalidArgumentError("need at least input and output layer sizes")
        expected = list(zip(self.layer_sizes[1:], self.layer_sizes[:-1]))
        got = [w.shape for w in self.weights]
        if got != expected:
            raise InvalidArgumentError(f"weight shapes {got} do not match {expected}")
        if [b.shape for b in self.biases] != [(n,) for n in self.layer_sizes[1:]]:
            raise InvalidArgumentError("bias shapes do not match layer sizes")

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    def copy(self) -> "Mlp":
        return Mlp(list(self.layer_sizes), [w.copy() for w in self.weights],
                   [b.copy() for b in self.biases], self.hidden_activation,
                   self.output_activation)


def init_mlp(layer_sizes, output_activation=Activation.SOFTMAX, seed=0) -> Mlp:
    """Uniform(-a, a) weights with a = sqrt(6 / (fan_in + fan_out)); zero biases."""
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        a = math.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-a, a, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return Mlp(list(layer_sizes), weights, biases,
               output_activation=output_activation)


def mlp_forward(mlp: Mlp, x: np.ndarray, keep_caches: bool = False):
    """Batched forward pass; x has shape (batch, n_0)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[1] != mlp.layer_sizes[0]:
        raise InvalidArgumentError(
            f"input width {x.shape[1]} != expected {mlp.layer_sizes[0]}")
    activations = [x]
    pre_acts = []
    h = x
    for l, (w, b) in enumerate(zip(mlp.weights, mlp.biases)):
        z = h @ w.T + b
        pre_acts.append(z)
        if l < mlp.n_layers - 1:
            h = gelu(z)
        elif mlp.output_activation is Activation.SOFTMAX:
            h = softmax(z)
        else:
            h = z
        activations.append(h)
    if keep_caches:
        return h, (activations, pre_acts)
    return h


def _output_delta(output, targets, loss_kind, output_activation, huber_delta):
    n = output.shape[0]
    if loss_kind is LossKind.CROSS_ENTROPY:
        if output_activation is not Activation.SOFTMAX:
            raise InvalidArgumentError("cross-entropy expects a softmax output")
        return (output - targets) / n
    if output_activation is not Activation.IDENTITY:
        raise InvalidArgumentError("MSE/Huber expect an identity output")
    m = output.size
    err = output - targets
    if loss_kind is LossKind.MSE:
        return 2.0 * err / m
    clipped = np.clip(err, -huber_delta, huber_delta)
    return clipped / m


def mlp_gradient(mlp: Mlp, x, targets, loss_kind: LossKind, huber_delta: float = 1.0):
    """Exact gradients of the mean loss; returns (loss, dWs, dbs)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    output, (activations, pre_acts) = mlp_forward(mlp, x, keep_caches=True)
    if loss_kind is LossKind.CROSS_ENTROPY:
        loss = loss_cross_entropy(output, targets)
    elif loss_kind is LossKind.MSE:
        loss = loss_mse(output, targets)
    else:
        loss = loss_huber(output, targets, huber_delta)

    delta = _output_delta(output, targets, loss_kind,
                          mlp.output_activation, huber_delta)
    d_weights = [None] * mlp.n_layers
    d_biases = [None] * mlp.n_layers
    for l in range(mlp.n_layers - 1, -1, -1):
        d_weights[l] = delta.T @ activations[l]
        d_biases[l] = delta.sum(axis=0)
        if l > 0:
            delta = (delta @ mlp.weights[l]) * gelu_derivative(pre_acts[l - 1])
    return loss, d_weights, d_biases


# ---------------------------------------------------------------------------
# Adam with decoupled weight decay
# ---------------------------------------------------------------------------

@dataclass
class AdamState:
    """First/second moments per parameter array plus the shared step count."""

    first_moment: list[np.ndarray]
    second_moment: list[np.ndarray]
    step_count: int = 0
    learning_rate: float = DEFAULT_LEARNING_RATE
    weight_decay: float = DEFAULT_WEIGHT_DECAY
    beta1: float = ADAM_BETA1
    beta2: float = ADAM_BETA2
    epsilon: float = ADAM_EPSILON


def init_adam(params, learning_rate=DEFAULT_LEARNING_RATE,
              weight_decay=DEFAULT_WEIGHT_DECAY) -> AdamState:
    return AdamState(first_moment=[np.zeros_like(p) for p in params],
                     second_moment=[np.zeros_like(p) for p in params],
                     learning_rate=learning_rate, weight_decay=weight_decay)


def adam_step(params, grads, state: AdamState, decay_mask=None):
    """In-place Adam update with decoupled weight decay.

    decay_mask[i] = False exempts parameter array i (biases) from decay.
    """
    if len(params) != len(grads) or len(params) != len(state.first_moment):
        raise InvalidArgumentError("parameter, gradient, and moment counts differ")
    state.step_count += 1
    t = state.step_count
    bc1 = 1.0 - state.beta1 ** t
    bc2 = 1.0 - state.beta2 ** t
    for i, (p, g) in enumerate(zip(params, grads)):
        m = state.first_moment[i]
        v = state.second_moment[i]
        m *= state.beta1
        m += (1 - state.beta1) * g
        v *= state.beta2
        v += (1 - state.beta2) * g * g
        update = (m / bc1) / (np.sqrt(v / bc2) + state.epsilon)
        if state.weight_decay and (decay_mask is None or decay_mask[i]):
            update = update + state.weight_decay * p
        p -= state.learning_rate * update
    return params, state


# ---------------------------------------------------------------------------
# training
# ---------------------------------------------------------------------------

@dataclass
class TrainHistory:
    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    best_epoch: int = 0


def train_mlp(mlp: Mlp, train_x, train_y, val_x, val_y, loss_kind: LossKind,
              learning_rate=DEFAULT_LEARNING_RATE, weight_decay=DEFAULT_WEIGHT_DECAY,
              max_epochs=DEFAULT_MAX_EPOCHS, patience=DEFAULT_PATIENCE,
              huber_delta=1.0) -> tuple[Mlp, TrainHistory]:
    """Full-batch Adam training with early stopping on validation loss.

    Returns the parameters from the best validation epoch.
    """
    train_x = np.atleast_2d(np.asarray(train_x, float))
    train_y = np.atleast_2d(np.asarray(train_y, float))
    val_x = np.atleast_2d(np.asarray(val_x, float))
    val_y = np.atleast_2d(np.asarray(val_y, float))
    if train_x.shape[0] == 0 or val_x.shape[0] == 0:
        raise InvalidArgumentError("training and validation sets must be non-empty")

    mlp = mlp.copy()
    params = mlp.weights + mlp.biases
    decay_mask = [True] * len(mlp.weights) + [False] * len(mlp.biases)
    state = init_adam(params, learning_rate, weight_decay)
    history = TrainHistory()
    best = mlp.copy()
    best_val = math.inf
    since_best = 0
    for epoch in range(max_epochs):
        loss, d_w, d_b = mlp_gradient(mlp, train_x, train_y, loss_kind, huber_delta)
        if not math.isfinite(loss):
            raise DivergenceError(f"training loss became non-finite at epoch {epoch}")
        adam_step(params, d_w + d_b, state, decay_mask)

        val_out = mlp_forward(mlp, val_x)
        if loss_kind is LossKind.CROSS_ENTROPY:
            val_loss = loss_cross_entropy(val_out, val_y)
        elif loss_kind is LossKind.MSE:
            val_loss = loss_mse(val_out, val_y)
        else:
            val_loss = loss_huber(val_out, val_y, huber_delta)
        history.train_loss.append(loss)
        history.val_loss.append(val_loss)
        if val_loss < best_val:
            best_val = val_loss
            best = mlp.copy()
            history.best_epoch = epoch
            since_best = 0
        else:
            since_best += 1
            if since_best > patience:
                break
    return best, history


# ---------------------------------------------------------------------------
# linear baselines
# ---------------------------------------------------------------------------

class LinearKind(enum.Enum):
    RIDGE = "ridge"
    MULTINOMIAL_LOGISTIC = "multinomial_logistic"


@dataclass
class LinearModel:
    weights: np.ndarray        # (outputs, features)
    bias: np.ndarray           # (outputs,)
    regularization: float
    kind: LinearKind
    converged: bool = True
    condition_warning: bool = False

    def decision_values(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, float))
        return x @ self.weights.T + self.bias

    def predict(self, x) -> np.ndarray:
        values = self.decision_values(x)
        if self.kind is LinearKind.MULTINOMIAL_LOGISTIC:
            return np.argmax(values, axis=1)
        return values


def fit_ridge(x, y, regularization=0.0) -> LinearModel:
    """Closed-form ridge on bias-augmented features; the bias is unpenalized."""
    x = np.atleast_2d(np.asarray(x, float))
    y = np.asarray(y, float)
    if y.ndim == 1:
        y = y[:, None]
    if x.shape[0] != y.shape[0]:
        raise InvalidArgumentError("feature and target row counts differ")
    if regularization < 0:
        raise InvalidArgumentError("regularization must be >= 0")
    n, d = x.shape
    xa = np.hstack([x, np.ones((n, 1))])
    gram = xa.T @ xa
    penalty = np.full(d + 1, float(regularization))
    penalty[-1] = 0.0
    gram = gram + np.diag(penalty)
    rhs = xa.T @ y
    condition_warning = False
    try:
        sol = np.linalg.solve(gram, rhs)
        if regularization == 0.0 and np.linalg.cond(gram) > 1e12:
            condition_warning = True
    except np.linalg.LinAlgError:
        # singular with lambda = 0: fall back to the smallest-norm solution
        sol = np.linalg.lstsq(xa, y, rcond=None)[0]
        condition_warning = True
    return LinearModel(weights=sol[:-1].T.copy(), bias=sol[-1].copy(),
                       regularization=float(regularization), kind=LinearKind.RIDGE,
                       condition_warning=condition_warning)


def _logistic_loss_grad(w, b, x, onehot, lam):
    logits = x @ w.T + b
    probs = softmax(logits)
    n = x.shape[0]
    loss = loss_cross_entropy(probs, onehot) + 0.5 * lam * float(np.sum(w * w))
    delta = (probs - onehot) / n
    grad_w = delta.T @ x + lam * w
    grad_b = delta.sum(axis=0)
    return loss, grad_w, grad_b


def _fit_logistic_fixed(x, labels, n_classes, lam):
    onehot = np.eye(n_classes)[labels]
    w = np.zeros((n_classes, x.shape[1]))
    b = np.zeros(n_classes)
    converged = False
    for _ in range(LOGISTIC_MAX_ITERS):
        loss, gw, gb = _logistic_loss_grad(w, b, x, onehot, lam)
        gnorm = math.sqrt(float(np.sum(gw ** 2) + np.sum(gb ** 2)))
        if gnorm < LOGISTIC_GRAD_TOL:
            converged = True
            break
        # backtracking line search on the full-batch objective
        step = 1.0
        while step > 1e-12:
            w_new = w - step * gw
            b_new = b - step * gb
            new_loss, _, _ = _logistic_loss_grad(w_new, b_new, x, onehot, lam)
            if new_loss <= loss - 1e-4 * step * gnorm ** 2:
                break
            step *= 0.5
        w, b = w - step * gw, b - step * gb
    return LinearModel(weights=w, bias=b, regularization=float(lam),
                       kind=LinearKind.MULTINOMIAL_LOGISTIC, converged=converged)


def fit_multinomial_logistic(x, labels, lambda_grid=DEFAULT_LAMBDA_GRID,
                             seed=0, n_classes=None) -> LinearModel:
    """L2-penalized multinomial logistic regression.

    The penalty is chosen from lambda_grid by accuracy on a held-out 20% split
    of the training data, then the model is refit on the full set.
    """
    x = np.atleast_2d(np.asarray(x, float))
    labels = np.asarray(labels, int)
    if n_classes is None:
        n_classes = int(labels.max()) + 1
    if len(np.unique(labels)) < 2:
        raise InvalidArgumentError("need at least two classes present")
    lambda_grid = list(lambda_grid)
    if len(lambda_grid) == 1:
        return _fit_logistic_fixed(x, labels, n_classes, lambda_grid[0])

    rng = np.random.default_rng(seed)
    order = rng.permutation(x.shape[0])
    n_val = max(1, x.shape[0] // 5)
    val_idx, fit_idx = order[:n_val], order[n_val:]
    if len(np.unique(labels[fit_idx])) < 2:
        fit_idx = order  # degenerate tiny split; select on training accuracy
        val_idx = order
    best_lam, best_acc = lambda_grid[0], -1.0
    for lam in lambda_grid:
        model = _fit_logistic_fixed(x[fit_idx], labels[fit_idx], n_classes, lam)
        acc = float(np.mean(model.predict(x[val_idx]) == labels[val_idx]))
        if acc > best_acc:
            best_acc, best_lam = acc, lam
    return _fit_logistic_fixed(x, labels, n_classes, best_lam)
