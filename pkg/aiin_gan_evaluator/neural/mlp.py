"""
Fully-connected network engine: model container, forward and reverse-mode
passes, binary cross-entropy and a finite-difference gradient check.
"""
import logging
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from aiin_gan_evaluator.errors import ParameterError
from aiin_gan_evaluator.neural.rng import Rng

logger = logging.getLogger(__name__)

ACTIVATIONS = ("none", "relu", "leaky_relu", "tanh", "sigmoid")
LEAKY_SLOPE = 0.2
BCE_CLAMP = 1e-7
DEFAULT_INIT_STD = 0.02


def activate(name: str, z: np.ndarray) -> np.ndarray:
    if name == "none":
        return z
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "leaky_relu":
        return np.where(z > 0.0, z, LEAKY_SLOPE * z)
    if name == "tanh":
        return np.tanh(z)
    if name == "sigmoid":
        # split by sign so exp never overflows
        out = np.empty_like(z)
        positive = z >= 0.0
        out[positive] = 1.0 / (1.0 + np.exp(-z[positive]))
        exp_z = np.exp(z[~positive])
        out[~positive] = exp_z / (1.0 + exp_z)
        return out
    raise ParameterError(f"Error! Unknown activation '{name}'.")


def activation_slope(name: str, z: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Derivative of the activation, from the pre-activation z and output a."""
    if name == "none":
        return np.ones_like(z)
    if name == "relu":
        return (z > 0.0).astype(np.float64)
    if name == "leaky_relu":
        return np.where(z > 0.0, 1.0, LEAKY_SLOPE)
    if name == "tanh":
        return 1.0 - a * a
    if name == "sigmoid":
        return a * (1.0 - a)
    raise ParameterError(f"Error! Unknown activation '{name}'.")


@dataclass
class Layer:
    weight: np.ndarray  # (out, in)
    bias: np.ndarray    # (out,)
    activation: str

    @property
    def in_dim(self) -> int:
        return self.weight.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weight.shape[0]


class MlpModel:
    """
    Ordered stack of affine layers with element-wise activations.

    ``version`` increases with every parameter update so forward caches taken
    before an update can be recognised as stale.
    """

    def __init__(self, layers: Sequence[Layer]):
        if not layers:
            raise ParameterError("Error! A model needs at least one layer.")
        for index, layer in enumerate(layers):
            if layer.activation not in ACTIVATIONS:
                raise ParameterError(f"Error! Layer {index} has unknown activation '{layer.activation}'.")
            if layer.bias.shape != (layer.out_dim,):
                raise ParameterError(f"Error! Layer {index} bias does not match its {layer.out_dim} outputs.")
            if index and layers[index - 1].out_dim != layer.in_dim:
                raise ParameterError(
                    f"Error! Layer {index} expects {layer.in_dim} inputs but layer {index - 1} "
                    f"produces {layers[index - 1].out_dim}."
                )
            if not (np.all(np.isfinite(layer.weight)) and np.all(np.isfinite(layer.bias))):
                raise ParameterError(f"Error! Layer {index} has non-finite parameters.")
        self.layers = list(layers)
        self.version = 0

    @classmethod
    def build(
        cls,
        sizes: Sequence[int],
        activations: Sequence[str],
        rng: Rng,
        init_std: float = DEFAULT_INIT_STD
    ) -> "MlpModel":
        """
        Initialise weights from N(0, init_std^2) and biases at zero.

        Args:
            sizes (list): Layer widths including input and output, e.g. [100, 256, 256]
            activations (list): One activation per affine layer
            rng (Rng): Source of the initial weights
            init_std (float): Weight standard deviation
        """
        if len(activations) != len(sizes) - 1:
            raise ParameterError(
                f"Error! {len(sizes) - 1} layers need {len(sizes) - 1} activations, got {len(activations)}."
            )
        layers = []
        for fan_in, fan_out, activation in zip(sizes[:-1], sizes[1:], activations):
            weight = rng.normal((fan_out, fan_in), std=init_std)
            layers.append(Layer(weight, np.zeros(fan_out), activation))
        return cls(layers)

    @property
    def in_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def out_dim(self) -> int:
        return self.layers[-1].out_dim

    def parameters(self) -> list[np.ndarray]:
        """Live parameter arrays in the order W0, b0, W1, b1, ..."""
        params = []
        for layer in self.layers:
            params.extend((layer.weight, layer.bias))
        return params

    def parameter_count(self) -> int:
        return sum(p.size for p in self.parameters())

    def copy(self) -> "MlpModel":
        return MlpModel([Layer(l.weight.copy(), l.bias.copy(), l.activation) for l in self.layers])

    def touch(self) -> None:
        """Mark the parameters as changed."""
        self.version += 1

    def predict(self, batch) -> np.ndarray:
        output, _ = forward(self, batch)
        return output


@dataclass
class ForwardCache:
    model_id: int
    model_version: int
    inputs: list[np.ndarray]
    preactivations: list[np.ndarray]
    outputs: list[np.ndarray]


@dataclass
class Gradients:
    """Parameter gradients aligned with MlpModel.parameters(), plus the input gradient."""

    params: list[np.ndarray]
    input_grad: np.ndarray


def forward(model: MlpModel, batch) -> tuple[np.ndarray, ForwardCache]:
    """
    Run a batch through the model.

    Args:
        model (MlpModel): Network
        batch (array-like): (n, in_dim) inputs

    Returns:
        tuple: (output (n, out_dim), cache for backward)
    """
    values = np.asarray(batch, dtype=np.float64)
    if values.ndim != 2 or values.shape[1] != model.in_dim:
        raise ParameterError(
            f"Error! Batch of shape {values.shape} does not match model input dimension {model.in_dim}."
        )

    cache = ForwardCache(id(model), model.version, [], [], [])
    for layer in model.layers:
        z = values @ layer.weight.T + layer.bias
        a = activate(layer.activation, z)
        cache.inputs.append(values)
        cache.preactivations.append(z)
        cache.outputs.append(a)
        values = a
    return values, cache


def backward(model: MlpModel, cache: ForwardCache, output_grad) -> Gradients:
    """
    Reverse-mode gradients of every weight and bias.

    Raises:
        ParameterError: Cache from another model or taken before a parameter update
    """
    if cache.model_id != id(model) or cache.model_version != model.version:
        raise ParameterError("Error! Stale or mismatched forward cache passed to backward.")

    delta_out = np.asarray(output_grad, dtype=np.float64)
    if delta_out.shape != cache.outputs[-1].shape:
        raise ParameterError(
            f"Error! Output gradient shape {delta_out.shape} does not match output {cache.outputs[-1].shape}."
        )

    grads: list[np.ndarray] = [None] * (2 * len(model.layers))
    for index in range(len(model.layers) - 1, -1, -1):
        layer = model.layers[index]
        delta = delta_out * activation_slope(
            layer.activation, cache.preactivations[index], cache.outputs[index]
        )
        grads[2 * index] = delta.T @ cache.inputs[index]
        grads[2 * index + 1] = delta.sum(axis=0)
        delta_out = delta @ layer.weight

    return Gradients(grads, delta_out)


def bce_loss(p, y) -> tuple[float, np.ndarray]:
    """
    Mean binary cross-entropy and its gradient with respect to p.

    Probabilities are clamped to [1e-7, 1 - 1e-7].

    Raises:
        ParameterError: A label outside {0, 1}
    """
    probs = np.clip(np.asarray(p, dtype=np.float64), BCE_CLAMP, 1.0 - BCE_CLAMP)
    labels = np.broadcast_to(np.asarray(y, dtype=np.float64), probs.shape)
    if np.any((labels != 0.0) & (labels != 1.0)):
        raise ParameterError("Error! BCE labels must be 0 or 1.")

    count = probs.size
    loss = -np.mean(labels * np.log(probs) + (1.0 - labels) * np.log(1.0 - probs))
    grad = (probs - labels) / (probs * (1.0 - probs)) / count
    return float(loss), grad


LossFn = Callable[[np.ndarray, np.ndarray], tuple[float, np.ndarray]]


def grad_check(
    model: MlpModel,
    batch,
    labels,
    epsilon: float = 1e-5,
    loss_fn: Optional[LossFn] = None
) -> float:
    """
    Worst relative error between analytic and central-difference gradients.

    Relative error is |a - n| / max(|a| + |n|, 1e-6). Parameters are restored
    after every probe.
    """
    loss_fn = loss_fn or bce_loss
    if model.parameter_count() > 10_000:
        logger.warning("Gradient check on %d parameters will be slow", model.parameter_count())

    output, cache = forward(model, batch)
    _, dloss = loss_fn(output, labels)
    analytic = backward(model, cache, dloss).params

    worst = 0.0
    for param, grad in zip(model.parameters(), analytic):
        flat = param.reshape(-1)
        flat_grad = grad.reshape(-1)
        for i in range(flat.size):
            original = flat[i]
            flat[i] = original + epsilon
            loss_plus, _ = loss_fn(forward(model, batch)[0], labels)
            flat[i] = original - epsilon
            loss_minus, _ = loss_fn(forward(model, batch)[0], labels)
            flat[i] = original

            numeric = (loss_plus - loss_minus) / (2.0 * epsilon)
            error = abs(flat_grad[i] - numeric) / max(abs(flat_grad[i]) + abs(numeric), 1e-6)
            worst = max(worst, error)

    return worst
