from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict

import numpy as np

from rltc.model.params import GradientStore, ModelParams

logger = logging.getLogger(__name__)


@dataclass
class OptimizerState:
    """Adam moments and step counter for one ModelParams."""

    learning_rate: float = 3e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def for_params(cls, params: ModelParams, learning_rate: float = 3e-4, **kwargs) -> "OptimizerState":
        return cls(
            learning_rate=learning_rate,
            m={name: np.zeros_like(t) for name, t in params.items()},
            v={name: np.zeros_like(t) for name, t in params.items()},
            **kwargs,
        )


def adam_step(params: ModelParams, grads: GradientStore, state: OptimizerState) -> None:
    """
    One bias-corrected Adam update, applied in place to ``params`` and ``state``.

    A parameter whose gradient and moments are all zero is left bitwise unchanged.
    """
    if not state.m:
        state.m = {name: np.zeros_like(t) for name, t in params.items()}
        state.v = {name: np.zeros_like(t) for name, t in params.items()}

    state.step += 1
    b1, b2 = state.beta1, state.beta2
    correction1 = 1.0 - b1**state.step
    correction2 = 1.0 - b2**state.step
    for name, param in params.items():
        g = grads[name]
        if g.shape != param.shape:
            raise ValueError(f"gradient for {name} has shape {g.shape}, expected {param.shape}")
        m = state.m[name]
        v = state.v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        m_hat = m / correction1
        v_hat = v / correction2
        param -= state.learning_rate * m_hat / (np.sqrt(v_hat) + state.eps)
