"""Layer-sequential unit-variance initialization, adapted to RNN stacks.

Each layer is considered at a single timestep with its recurrent input
replaced by synthetic N(0, 1) samples and its vertical input taken from
the already-initialized layers below (the first layer sees
embedding-distributed N(0, 1) samples). The layer's hidden-to-hidden and
input-to-hidden matrices start at equal magnitude and are rescaled in
synchrony by sqrt(target / measured variance) until the measured output
variance is within tolerance of the target; converging a layer triggers a
fresh propagation so the next layer probes up-to-date activations.

By default the variance criterion applies to the layer output as emitted,
i.e. including the skip term where one exists. The skip input already has
near-unit variance, so those layers converge with small but nonzero
weight scale; scaling the skip connection by slightly less than one keeps
the fixed point away from zero weights.
"""

from dataclasses import dataclass

import numpy as np

from . import activations
from .errors import (
    DegenerateLayerError,
    InitializationError,
    ParameterError,
)


@dataclass(frozen=True)
class LsuvConfig:
    target_variance: float = 1.0
    tolerance: float = 0.02
    max_iterations: int = 50
    probe_batch: int = 256
    measure_pre_skip: bool = False
    orthonormal: bool = False

    def __post_init__(self):
        if not 0.0 < self.tolerance < self.target_variance:
            raise ParameterError(
                f"need 0 < tolerance < target_variance, got "
                f"{self.tolerance} and {self.target_variance}"
            )
        if self.max_iterations < 1:
            raise ParameterError(
                f"max_iterations must be >= 1, got {self.max_iterations}"
            )
        if self.probe_batch < 2:
            raise ParameterError(f"probe_batch must be >= 2, got {self.probe_batch}")

    def to_json(self):
        return {
            "target_variance": self.target_variance,
            "tolerance": self.tolerance,
            "max_iterations": self.max_iterations,
            "probe_batch": self.probe_batch,
            "measure_pre_skip": self.measure_pre_skip,
            "orthonormal": self.orthonormal,
        }

    @classmethod
    def from_json(cls, doc):
        from .config import check_keys

        check_keys(
            doc,
            {
                "target_variance",
                "tolerance",
                "max_iterations",
                "probe_batch",
                "measure_pre_skip",
                "orthonormal",
            },
            "lsuv",
        )
        return cls(**doc)


@dataclass
class LayerReport:
    """Per-layer convergence record (CSV row of the lsuv-check output)."""

    layer_index: int
    iterations: int
    final_variance: float
    w_scale: float
    u_scale: float


def gamma_rebalance(W, U, gamma):
    """Trade variance shares between the recurrent and vertical paths.

    Returns (W * sqrt(2 gamma), U * sqrt(2 (1 - gamma))). gamma = 0.5 is
    the exact identity; the layer's output variance is preserved for any
    gamma in [0, 1] when both paths carry equal variance.
    """
    if not 0.0 <= gamma <= 1.0:
        raise ParameterError(f"gamma must be in [0, 1], got {gamma}")
    if gamma == 0.5:
        return W.copy(), U.copy()
    return W * np.sqrt(2.0 * gamma), U * np.sqrt(2.0 * (1.0 - gamma))


def _rescale_factor(f_part, scaled_skip, var, target):
    """Synchrony-preserving scale for one adjustment step.

    Plain layers use the standard sqrt(target / variance) update. At a
    skip-receiving layer that update contracts the error by roughly the
    skip's variance share per step (about 0.98), which cannot land inside
    tolerance within a reasonable iteration budget, so instead solve
    var(s * f_part + skip) = target for s directly; the solve is exact
    for positively homogeneous activations and leaves only the
    nonlinearity error otherwise. Returns None when no non-negative
    scale can reach the target (the skip input alone is too large).
    """
    if scaled_skip is None:
        return float(np.sqrt(target / var))
    a = float(np.var(f_part, ddof=1))
    if a < 1e-30:
        return None
    flat_f = f_part.ravel()
    flat_s = scaled_skip.ravel()
    cov = float(
        ((flat_f - flat_f.mean()) * (flat_s - flat_s.mean())).sum() / (flat_f.size - 1)
    )
    disc = cov * cov + a * (target - float(np.var(scaled_skip, ddof=1)))
    if disc < 0:
        return None
    s = float((-cov + np.sqrt(disc)) / a)
    return s if s > 0 else None


def _probe_stack(stack, upto, rng, probe_batch):
    """Propagate fresh synthetic inputs through layers 1..upto-1.

    Returns the list [x1, h_1, ..., h_{upto-1}] of activations, where x1
    is an embedding-distributed N(0, 1) draw. Each layer consumes its own
    fresh N(0, 1) recurrent sample, mirroring a single RNN timestep.
    """
    cfg = stack.cfg
    values = [rng.normal(cfg.embedding_dim, probe_batch)]
    for i in range(1, upto):
        layer = stack.layers[i - 1]
        hprev = rng.normal(cfg.width, probe_batch)
        pre = layer.W @ hprev + layer.U @ values[i - 1] + layer.b
        h = activations.apply(cfg.activation, pre)
        if i in stack.cfg.skip_layers:
            h = h + cfg.skip_scale * values[i - cfg.skip_period]
        values.append(h)
    return values


def lsuv_init_stack(stack, cfg, rng):
    """Rescale every layer of ``stack`` in place to unit output variance.

    Layers are processed bottom-up; after each layer converges, fresh
    activations are propagated so deeper layers probe the adjusted
    network. Returns one :class:`LayerReport` per layer.

    Raises :class:`InitializationError` when a layer cannot reach the
    target within ``max_iterations`` scalings, and
    :class:`DegenerateLayerError` when a layer's measured variance is
    zero.
    """
    scfg = stack.cfg
    spec = scfg.activation
    reports = []
    for i in range(1, scfg.depth + 1):
        layer = stack.layers[i - 1]

        def draw_probe():
            values = _probe_stack(stack, i, rng, cfg.probe_batch)
            hprev = rng.normal(scfg.width, cfg.probe_batch)
            scaled_skip = None
            if i in scfg.skip_layers and not cfg.measure_pre_skip:
                scaled_skip = scfg.skip_scale * values[i - scfg.skip_period]
            return values[i - 1], hprev, scaled_skip

        xin, hprev, scaled_skip = draw_probe()
        total_scale = 1.0
        iterations = 0
        var = None
        for _ in range(cfg.max_iterations + 1):
            pre = layer.W @ hprev + layer.U @ xin + layer.b
            f_part = activations.apply(spec, pre)
            h = f_part if scaled_skip is None else f_part + scaled_skip
            var = float(np.var(h, ddof=1))
            if var < 1e-30:
                raise DegenerateLayerError(
                    f"layer {i} produced zero output variance during init"
                )
            if abs(var - cfg.target_variance) <= cfg.tolerance:
                break
            if iterations == cfg.max_iterations:
                raise InitializationError(
                    f"layer {i} did not reach variance "
                    f"{cfg.target_variance} +/- {cfg.tolerance} after "
                    f"{cfg.max_iterations} iterations (last variance {var})"
                )
            iterations += 1
            s = _rescale_factor(f_part, scaled_skip, var, cfg.target_variance)
            if s is None:
                # the skip input of this probe draw alone exceeds the
                # target, so no non-negative weight scale can land in the
                # band: propagate a fresh probe and try again
                xin, hprev, scaled_skip = draw_probe()
                continue
            layer.W *= s
            layer.U *= s
            total_scale *= s
        reports.append(
            LayerReport(
                layer_index=i,
                iterations=iterations,
                final_variance=var,
                w_scale=total_scale,
                u_scale=total_scale,
            )
        )
    return reports


def calibrate_single_layer(W, x, spec, target=1.0, tolerance=0.02, max_iterations=50):
    """Scale a single weight matrix so Var[f(W x)] lands on ``target``.

    Used by the activation-dynamics experiment. Returns the scaled copy
    of W.
    """
    W = W.copy()
    for _ in range(max_iterations):
        v = float(np.var(activations.apply(spec, W @ x), ddof=1))
        if v < 1e-30:
            raise DegenerateLayerError(
                "zero output variance while calibrating dynamics weights"
            )
        if abs(v - target) <= tolerance:
            return W
        W *= np.sqrt(target / v)
    raise InitializationError(
        f"single-layer calibration did not converge in {max_iterations} iterations"
    )
