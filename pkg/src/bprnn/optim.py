"""ADAM optimizer with bias correction.

Moments are kept per named parameter tensor. Updates are applied in
place, so every view of a parameter (layer struct, named_params dict,
checkpoint manifest) observes the same values. No gradient clipping or
rescaling happens anywhere on the update path.
"""

import numpy as np

from .errors import ParameterError


class AdamState:
    """First/second moment accumulators mirroring the parameter shapes."""

    def __init__(self, params, beta1=0.9, beta2=0.999, eps=1e-8):
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.eps = float(eps)
        self.step = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}


def adam_update(params, grads, state, lr):
    """One ADAM step: params[k] -= lr * m_hat / (sqrt(v_hat) + eps).

    ``params`` and ``grads`` are name -> tensor dicts with identical
    shapes. Parameters are modified in place; the step counter advances.
    """
    if lr <= 0:
        raise ParameterError(f"learning rate must be positive, got {lr}")
    if set(params) != set(state.m):
        raise ParameterError("optimizer state does not match parameter set")
    state.step += 1
    b1, b2 = state.beta1, state.beta2
    bc1 = 1.0 - b1**state.step
    bc2 = 1.0 - b2**state.step
    # overflow here is possible when training is already diverging; it is
    # reported by the next forward pass, not by the update
    with np.errstate(over="ignore", invalid="ignore"):
        for name, p in params.items():
            g = grads[name]
            if g.shape != p.shape:
                raise ParameterError(
                    f"gradient shape {g.shape} does not match parameter "
                    f"{name} shape {p.shape}"
                )
            m = state.m[name]
            v = state.v[name]
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * np.square(g)
            p -= lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
