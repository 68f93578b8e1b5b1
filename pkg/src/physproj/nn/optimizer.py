"""Adam with bias correction, operating on flat parameter lists."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from physproj.errors import TrainingDivergedError, ValidationError


@dataclass
class AdamState:
    """First/second moment estimates plus the step counter."""

    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)
    t: int = 0

    @classmethod
    def initialize(cls, params: list[np.ndarray]) -> "AdamState":
        return cls(m=[np.zeros_like(p) for p in params], v=[np.zeros_like(p) for p in params], t=0)


def adam_step(
    params: list[np.ndarray],
    grads: list[np.ndarray],
    state: AdamState,
    learning_rate: float,
    betas: tuple[float, float] = (0.9, 0.999),
    epsilon: float = 1e-8,
) -> tuple[list[np.ndarray], AdamState]:
    """One Adam update; returns new parameters and the advanced state.

    theta <- theta - lr * m_hat / (sqrt(v_hat) + eps) with the standard
    1/(1-beta^t) bias corrections. Inputs are not mutated.
    """
    if len(params) != len(grads) or len(params) != len(state.m):
        raise ValidationError("params, grads and Adam state lengths disagree")
    for g in grads:
        if not np.all(np.isfinite(g)):
            raise TrainingDivergedError("non-finite gradient passed to adam_step")
    b1, b2 = betas
    t = state.t + 1
    new_m = []
    new_v = []
    new_params = []
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * g**2
        m_hat = m / (1.0 - b1**t)
        v_hat = v / (1.0 - b2**t)
        new_m.append(m)
        new_v.append(v)
        new_params.append(p - learning_rate * m_hat / (np.sqrt(v_hat) + epsilon))
    return new_params, AdamState(m=new_m, v=new_v, t=t)
