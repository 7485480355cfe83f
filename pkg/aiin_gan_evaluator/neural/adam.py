"""
ADAM optimizer with bias-corrected moment estimates.
"""
from dataclasses import dataclass
from typing import Union

import numpy as np

from aiin_gan_evaluator.errors import DivergenceError, ParameterError
from aiin_gan_evaluator.neural.mlp import Gradients, MlpModel

# GAN convention; the classifier uses beta1 = 0.9 and lr = 0.001
GAN_LR = 0.0002
GAN_BETA1 = 0.5


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0
    lr: float = GAN_LR
    beta1: float = GAN_BETA1
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(
        cls,
        params: Union[MlpModel, list[np.ndarray]],
        lr: float = GAN_LR,
        beta1: float = GAN_BETA1,
        beta2: float = 0.999,
        eps: float = 1e-8
    ) -> "AdamState":
        arrays = params.parameters() if isinstance(params, MlpModel) else list(params)
        return cls(
            m=[np.zeros_like(p, dtype=np.float64) for p in arrays],
            v=[np.zeros_like(p, dtype=np.float64) for p in arrays],
            lr=lr,
            beta1=beta1,
            beta2=beta2,
            eps=eps
        )


def adam_step(
    state: AdamState,
    params: Union[MlpModel, list[np.ndarray]],
    grads: Union[Gradients, list[np.ndarray]]
) -> Union[MlpModel, list[np.ndarray]]:
    """
    Apply one ADAM update in place.

    The step counter is incremented before bias correction, so the first step
    uses m / (1 - beta1) and v / (1 - beta2).

    Args:
        state (AdamState): Moment buffers, updated in place
        params (MlpModel or list): Model (its version is bumped) or raw arrays
        grads (Gradients or list): Gradients aligned with the parameters

    Returns:
        The updated params object

    Raises:
        ParameterError: Shape mismatch between params, grads and buffers
        DivergenceError: A non-finite gradient
    """
    arrays = params.parameters() if isinstance(params, MlpModel) else list(params)
    grad_arrays = grads.params if isinstance(grads, Gradients) else list(grads)

    if len(arrays) != len(grad_arrays) or len(arrays) != len(state.m):
        raise ParameterError(
            f"Error! ADAM got {len(arrays)} parameters, {len(grad_arrays)} gradients and {len(state.m)} buffers."
        )
    for param, grad, m in zip(arrays, grad_arrays, state.m):
        if np.shape(param) != np.shape(grad) or np.shape(param) != m.shape:
            raise ParameterError(f"Error! ADAM shape mismatch: {np.shape(param)} vs {np.shape(grad)}.")
        if not np.all(np.isfinite(grad)):
            raise DivergenceError("Error! Non-finite gradient passed to ADAM.")

    state.t += 1
    correction1 = 1.0 - state.beta1 ** state.t
    correction2 = 1.0 - state.beta2 ** state.t

    for param, grad, m, v in zip(arrays, grad_arrays, state.m, state.v):
        m *= state.beta1
        m += (1.0 - state.beta1) * grad
        v *= state.beta2
        v += (1.0 - state.beta2) * np.square(grad)
        param -= state.lr * (m / correction1) / (np.sqrt(v / correction2) + state.eps)

    if isinstance(params, MlpModel):
        params.touch()
    return params
