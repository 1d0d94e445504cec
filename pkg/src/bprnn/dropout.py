"""The three dropout variants used when training deep RNN stacks.

* between-layer unit dropout: fresh mask per layer per timestep, with
  inverted scaling 1/(1-p) folded in at train time so evaluation needs no
  rescaling. Applied to each layer's vertical input, never to the frozen
  embedding.
* recurrent dropout: one binary mask per layer, held fixed for every
  timestep of a sequence, applied to the hidden state entering the
  hidden-to-hidden matrix.
* stochastic block depth: whole groups of ``skip_period`` layers are
  replaced by identity connections for a timestep. No scaling
  compensation is applied at train or test time, which keeps block
  outputs at unit variance.

Evaluation mode uses :meth:`DropoutMasks.all_alive`, which is
deterministic and consumes no randomness.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError


@dataclass(frozen=True)
class DropoutConfig:
    """Probabilities for the three variants plus dead-block semantics.

    A dead block normally both passes its vertical input through
    unchanged and freezes its hidden states; the two effects can be
    toggled independently for experimentation.
    """

    p_between: float = 0.0
    p_recurrent: float = 0.0
    p_block: float = 0.0
    block_identity_vertical: bool = True
    block_freeze_state: bool = True

    def __post_init__(self):
        for name in ("p_between", "p_recurrent", "p_block"):
            p = getattr(self, name)
            if not 0.0 <= p < 1.0:
                raise ParameterError(f"{name} must be in [0, 1), got {p}")

    def to_json(self):
        return {
            "p_between": self.p_between,
            "p_recurrent": self.p_recurrent,
            "p_block": self.p_block,
            "block_identity_vertical": self.block_identity_vertical,
            "block_freeze_state": self.block_freeze_state,
        }

    @classmethod
    def from_json(cls, doc):
        from .config import check_keys

        check_keys(
            doc,
            {
                "p_between",
                "p_recurrent",
                "p_block",
                "block_identity_vertical",
                "block_freeze_state",
            },
            "dropout",
        )
        kwargs = {k: doc[k] for k in doc}
        return cls(**kwargs)


@dataclass
class DropoutMasks:
    """Sampled masks for one sequence (or all-alive for evaluation).

    recurrent: (L, H, B) in {0, 1}, constant across timesteps.
    between:   (L-1, T, H, B) in {0, 1/(1-p)}; slot j feeds layer j+2.
    block_alive: (n_blocks, T) booleans shared across the batch.
    A None field means that variant is disabled (all alive, no scaling).
    """

    recurrent: np.ndarray | None = None
    between: np.ndarray | None = None
    block_alive: np.ndarray | None = None
    identity_vertical: bool = True
    freeze_state: bool = True

    @classmethod
    def all_alive(cls):
        """Deterministic evaluation-mode masks."""
        return cls()

    def recurrent_for(self, i):
        """Mask for 0-based layer ``i``, or None when disabled."""
        return None if self.recurrent is None else self.recurrent[i]

    def between_for(self, i, t):
        """Mask applied to the vertical input of 0-based layer ``i >= 1``."""
        if self.between is None or i < 1:
            return None
        return self.between[i - 1, t]

    def alive(self, b, t):
        if self.block_alive is None:
            return True
        return bool(self.block_alive[b, t])


def sample_masks(cfg, stack, T, batch_size, rng):
    """Sample one sequence's masks for a batch of ``batch_size`` sequences.

    Draw order is fixed (recurrent, between, block) so a given generator
    state always yields the same masks. Variants with probability zero
    consume no randomness.
    """
    if T < 1:
        raise ParameterError(f"sequence length must be >= 1, got {T}")
    L, H = stack.depth, stack.width
    recurrent = None
    if cfg.p_recurrent > 0.0:
        u = rng.uniform(size=(L, H, batch_size))
        recurrent = (u >= cfg.p_recurrent).astype(np.float64)
    between = None
    if cfg.p_between > 0.0 and L > 1:
        u = rng.uniform(size=(L - 1, T, H, batch_size))
        between = (u >= cfg.p_between).astype(np.float64) / (1.0 - cfg.p_between)
    block_alive = None
    n_blocks = stack.depth // stack.skip_period
    if cfg.p_block > 0.0 and n_blocks > 0:
        u = rng.uniform(size=(n_blocks, T))
        block_alive = u >= cfg.p_block
    return DropoutMasks(
        recurrent=recurrent,
        between=between,
        block_alive=block_alive,
        identity_vertical=cfg.block_identity_vertical,
        freeze_state=cfg.block_freeze_state,
    )
