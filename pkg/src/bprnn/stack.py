"""Deeply stacked vanilla RNN with periodic additive skip connections.

Layer update, for 1-based layer i at timestep t:

    h_i(t) = f(W_i (r_i * h_i(t-1)) + U_i x_i(t) + b_i)  [+ a * h_{i-4}(t)]

where x_1(t) is a frozen random embedding column, x_i(t) = h_{i-1}(t) for
deeper layers (after between-layer dropout), r_i is the per-sequence
recurrent dropout mask, and the bracketed skip term is added at every
``skip_period``-th layer with scale ``skip_scale``. The layer feeding the
first skip (h_0) is the embedding input itself, so skip-bearing stacks
require embedding_dim == width.

Layers group into droppable blocks of ``skip_period`` consecutive layers.
A block that is dead at timestep t passes its vertical input through
unchanged and keeps its hidden states frozen (both effects independently
toggleable on the dropout config). Trailing layers beyond the last full
block are never dropped and never receive skips.

The backward pass is exact reverse-mode differentiation of the unrolled
graph. Gradients flow along the recurrent path, the vertical path, and
skip connections; there is deliberately no clipping or rescaling
anywhere.
"""

from dataclasses import dataclass, field

import numpy as np

from . import activations
from .activations import ActivationSpec
from .dropout import DropoutMasks
from .errors import ConfigError, DivergenceError, ParameterError, ShapeError

LOG2 = float(np.log(2.0))


@dataclass(frozen=True)
class StackConfig:
    """Architecture description for one RNN stack."""

    depth: int
    width: int
    activation: ActivationSpec
    skip_period: int = 4
    skip_scale: float = 0.99
    embedding_dim: int | None = None
    vocab_size: int | None = None

    def __post_init__(self):
        if self.depth < 1 or self.width < 1:
            raise ConfigError(
                f"depth and width must be positive, got {self.depth}x{self.width}"
            )
        if self.skip_period < 1:
            raise ConfigError(f"skip_period must be >= 1, got {self.skip_period}")
        if not 0.0 < self.skip_scale <= 1.0:
            raise ConfigError(f"skip_scale must be in (0, 1], got {self.skip_scale}")
        if self.embedding_dim is None:
            object.__setattr__(self, "embedding_dim", self.width)
        if self.embedding_dim < 1:
            raise ConfigError(f"embedding_dim must be positive, got {self.embedding_dim}")
        if self.vocab_size is not None and self.vocab_size < 1:
            raise ConfigError(f"vocab_size must be positive, got {self.vocab_size}")
        if self.depth >= self.skip_period and self.embedding_dim != self.width:
            raise ConfigError(
                "stacks with skip connections need embedding_dim == width "
                f"(got {self.embedding_dim} != {self.width}): the first skip "
                "and dead-block pass-through read the embedding directly"
            )

    @property
    def skip_layers(self):
        """1-based indices of layers that receive a skip connection."""
        return tuple(
            range(self.skip_period, self.depth + 1, self.skip_period)
        )

    @property
    def n_blocks(self):
        """Number of full droppable blocks of skip_period layers."""
        return self.depth // self.skip_period

    def input_dim(self, i):
        """Vertical input width of 1-based layer i."""
        return self.embedding_dim if i == 1 else self.width

    def to_json(self):
        return {
            "depth": self.depth,
            "width": self.width,
            "skip_period": self.skip_period,
            "skip_scale": self.skip_scale,
            "embedding_dim": self.embedding_dim,
            "vocab_size": self.vocab_size,
        }


@dataclass
class LayerParams:
    """One layer's weights: hidden-to-hidden, input-to-hidden, bias."""

    W: np.ndarray  # (H, H)
    U: np.ndarray  # (H, in_dim)
    b: np.ndarray  # (H, 1)


@dataclass
class HeadParams:
    """Affine softmax readout plus the frozen input embedding."""

    V: np.ndarray  # (K, H)
    c: np.ndarray  # (K, 1)
    embedding: np.ndarray  # (E, K), never trained


@dataclass
class _LayerCache:
    index: int  # 1-based
    pre: np.ndarray
    hprev_masked: np.ndarray
    xin: np.ndarray


@dataclass
class _BlockCache:
    start: int  # 1-based first layer
    end: int  # 1-based last layer
    alive: bool
    computed: bool
    has_skip: bool
    layers: list = field(default_factory=list)


@dataclass
class _StepCache:
    probs: np.ndarray | None
    top: np.ndarray
    blocks: list


@dataclass
class SequenceCache:
    """Everything the backward pass needs from one forward sequence."""

    steps: list
    targets: np.ndarray
    masks: DropoutMasks
    batch: int


def _orthonormal(rng, rows, cols):
    """Random matrix with orthonormal columns (rows when cols > rows)."""
    big = rng.normal(max(rows, cols), min(rows, cols))
    q, r = np.linalg.qr(big)
    q = q * np.sign(np.diag(r))  # fix signs so the draw is deterministic
    return q[:rows, :cols] if q.shape[0] >= rows else q.T[:rows, :cols]


def init_stack(cfg, rng, orthonormal=False, with_head=True):
    """Build a stack with Gaussian pre-initialization.

    W_i and U_i are drawn from N(0, 1/fan_in) so both matrices start at
    equal magnitude; biases start at zero. The embedding is frozen
    N(0, 1). With ``orthonormal`` the weight matrices are instead random
    orthonormal frames (a pre-init option for the variance-targeting
    pass). Draw order is fixed: embedding, then W/U per layer bottom-up,
    then the readout.
    """
    if with_head and cfg.vocab_size is None:
        raise ConfigError("vocab_size is required to build the embedding and head")
    H = cfg.width
    embedding = None
    if with_head:
        embedding = rng.normal(cfg.embedding_dim, cfg.vocab_size)
    layers = []
    for i in range(1, cfg.depth + 1):
        in_dim = cfg.input_dim(i)
        if orthonormal:
            W = _orthonormal(rng, H, H)
            U = _orthonormal(rng, H, in_dim)
        else:
            W = rng.normal(H, H, std=1.0 / np.sqrt(H))
            U = rng.normal(H, in_dim, std=1.0 / np.sqrt(in_dim))
        layers.append(LayerParams(W=W, U=U, b=np.zeros((H, 1))))
    head = None
    if with_head:
        V = rng.normal(cfg.vocab_size, H, std=1.0 / np.sqrt(H))
        head = HeadParams(V=V, c=np.zeros((cfg.vocab_size, 1)), embedding=embedding)
    return Stack(cfg, layers, head)


class Stack:
    """An RNN stack instance: config plus owned parameters.

    Single-writer: forward/backward/update mutate exclusively-owned
    state. Run independent instances for concurrent work.
    """

    def __init__(self, cfg, layers, head):
        self.cfg = cfg
        self.layers = layers
        self.head = head
        p = cfg.skip_period
        self._blocks = [
            (b * p + 1, (b + 1) * p) for b in range(cfg.n_blocks)
        ]
        first_trailing = cfg.n_blocks * p + 1
        self._trailing = (
            (first_trailing, cfg.depth) if first_trailing <= cfg.depth else None
        )

    # ---------------------------------------------------------------- setup

    @property
    def activation(self):
        return self.cfg.activation

    def zero_state(self, batch):
        return np.zeros((self.cfg.depth, self.cfg.width, batch))

    def named_params(self):
        """Trainable tensors by stable name. The embedding is excluded."""
        out = {}
        for i, layer in enumerate(self.layers):
            out[f"layers/{i}/W"] = layer.W
            out[f"layers/{i}/U"] = layer.U
            out[f"layers/{i}/b"] = layer.b
        out["head/V"] = self.head.V
        out["head/c"] = self.head.c
        return out

    def all_tensors(self):
        """All persistent tensors, including the frozen embedding."""
        out = self.named_params()
        out["head/embedding"] = self.head.embedding
        return out

    # -------------------------------------------------------------- forward

    def _layer_forward(self, i, hprev, xin, masks, t, skip_val):
        """Compute one layer; returns (cache, h)."""
        layer = self.layers[i - 1]
        r = masks.recurrent_for(i - 1)
        hp = hprev if r is None else hprev * r
        m = masks.between_for(i - 1, t)
        x = xin if m is None else xin * m
        with np.errstate(over="ignore", invalid="ignore"):
            pre = layer.W @ hp + layer.U @ x + layer.b
        if not np.isfinite(pre).all():
            raise DivergenceError(
                f"non-finite activation at layer {i}, timestep {t + 1}",
                layer=i,
                timestep=t + 1,
            )
        h = activations.apply(self.activation, pre)
        if skip_val is not None:
            h = h + self.cfg.skip_scale * skip_val
        return _LayerCache(index=i, pre=pre, hprev_masked=hp, xin=x), h

    def forward_step(self, state, tokens, masks, t, _collect=None):
        """Advance one timestep; returns (new_state, logits).

        ``state`` is (depth, width, batch) and is not modified. ``tokens``
        is a (batch,) array of symbol ids; ``t`` is the 0-based timestep
        used to index per-timestep masks.
        """
        tokens = np.asarray(tokens)
        if tokens.min() < 0 or tokens.max() >= self.head.embedding.shape[1]:
            raise ParameterError(
                f"token id out of range [0, {self.head.embedding.shape[1]})"
            )
        x0 = self.head.embedding[:, tokens]
        new_state = state.copy()
        vert = x0
        blocks = []
        for b, (s, e) in enumerate(self._blocks):
            alive = masks.alive(b, t)
            computed = alive or not (masks.identity_vertical and masks.freeze_state)
            bc = _BlockCache(start=s, end=e, alive=alive, computed=computed, has_skip=True)
            if computed:
                cur = vert
                for i in range(s, e + 1):
                    skip_val = vert if i == e else None
                    lc, h = self._layer_forward(i, state[i - 1], cur, masks, t, skip_val)
                    bc.layers.append(lc)
                    if alive or not masks.freeze_state:
                        new_state[i - 1] = h
                    cur = h
                if alive or not masks.identity_vertical:
                    vert = cur
            blocks.append(bc)
        if self._trailing is not None:
            s, e = self._trailing
            bc = _BlockCache(start=s, end=e, alive=True, computed=True, has_skip=False)
            cur = vert
            for i in range(s, e + 1):
                lc, h = self._layer_forward(i, state[i - 1], cur, masks, t, None)
                bc.layers.append(lc)
                new_state[i - 1] = h
                cur = h
            vert = cur
            blocks.append(bc)
        with np.errstate(over="ignore", invalid="ignore"):
            logits = self.head.V @ vert + self.head.c
        if _collect is not None:
            _collect.append(_StepCache(probs=None, top=vert, blocks=blocks))
        return new_state, logits

    def forward_sequence(self, state, tokens, targets, masks):
        """Run T timesteps and the mean cross-entropy loss in nats.

        ``tokens`` and ``targets`` are (T, batch) arrays; returns
        (final_state, loss, cache) where the cache retains everything the
        backward pass needs.
        """
        tokens = np.asarray(tokens)
        targets = np.asarray(targets)
        if tokens.ndim != 2 or tokens.shape != targets.shape:
            raise ShapeError(
                f"tokens and targets must both be (T, batch), got "
                f"{tokens.shape} and {targets.shape}"
            )
        T, B = tokens.shape
        if state is None:
            state = self.zero_state(B)
        steps = []
        total = 0.0
        cols = np.arange(B)
        for t in range(T):
            state, logits = self.forward_step(state, tokens[t], masks, t, _collect=steps)
            with np.errstate(over="ignore", invalid="ignore"):
                z = logits - logits.max(axis=0, keepdims=True)
                lse = np.log(np.exp(z).sum(axis=0))
                total += float((lse - z[targets[t], cols]).sum())
                steps[-1].probs = np.exp(z - lse)
        loss = total / (T * B)
        if not np.isfinite(loss):
            raise DivergenceError(f"non-finite loss over {T} timesteps")
        cache = SequenceCache(steps=steps, targets=targets, masks=masks, batch=B)
        return state, loss, cache

    # ------------------------------------------------------------- backward

    def backward(self, cache, final_step_only=False, record_flow=False):
        """Exact loss gradients for every trainable tensor.

        With ``final_step_only`` the loss is the mean cross-entropy of the
        last timestep alone (used by the gradient-flow probe). With
        ``record_flow`` also returns an (L, T) matrix of Frobenius norms
        of the gradient on each layer's output at each timestep.
        """
        cfg = self.cfg
        masks = cache.masks
        steps = cache.steps
        T = len(steps)
        B = cache.batch
        grads = {k: np.zeros_like(v) for k, v in self.named_params().items()}
        dstate = [np.zeros((cfg.width, B)) for _ in range(cfg.depth)]
        flow = np.zeros((cfg.depth, T)) if record_flow else None
        spec = self.activation
        rows = np.arange(B)
        for t in range(T - 1, -1, -1):
            step = steps[t]
            if final_step_only and t != T - 1:
                dvert = np.zeros_like(step.top)
            else:
                w = 1.0 / B if final_step_only else 1.0 / (T * B)
                dlogits = step.probs.copy()
                dlogits[cache.targets[t], rows] -= 1.0
                dlogits *= w
                grads["head/V"] += dlogits @ step.top.T
                grads["head/c"] += dlogits.sum(axis=1, keepdims=True)
                dvert = self.head.V.T @ dlogits
            for bc in reversed(step.blocks):
                if not bc.computed:
                    # identity in both directions: vertical gradient and
                    # state gradients pass straight through to t-1
                    if record_flow:
                        for i in range(bc.start, bc.end + 1):
                            flow[i - 1, t] = float(np.linalg.norm(dstate[i - 1]))
                    continue
                dead = not bc.alive
                use_state_grad = bc.alive or not masks.freeze_state
                emit_identity = dead and masks.identity_vertical
                dcur = np.zeros_like(dvert) if emit_identity else dvert
                dskip = None
                for lc in reversed(bc.layers):
                    i = lc.index
                    dh = dcur + dstate[i - 1] if use_state_grad else dcur
                    if record_flow:
                        flow[i - 1, t] = float(np.linalg.norm(dh))
                    if bc.has_skip and i == bc.end:
                        dskip = cfg.skip_scale * dh
                    layer = self.layers[i - 1]
                    dpre = activations.derivative(spec, lc.pre) * dh
                    grads[f"layers/{i - 1}/W"] += dpre @ lc.hprev_masked.T
                    grads[f"layers/{i - 1}/U"] += dpre @ lc.xin.T
                    grads[f"layers/{i - 1}/b"] += dpre.sum(axis=1, keepdims=True)
                    ds = layer.W.T @ dpre
                    r = masks.recurrent_for(i - 1)
                    if r is not None:
                        ds = ds * r
                    keep_old = dead and masks.freeze_state
                    dstate[i - 1] = dstate[i - 1] + ds if keep_old else ds
                    dx = layer.U.T @ dpre
                    m = masks.between_for(i - 1, t)
                    if m is not None:
                        dx = dx * m
                    dcur = dx
                dvert_below = dcur
                if dskip is not None:
                    dvert_below = dvert_below + dskip
                if emit_identity:
                    dvert_below = dvert_below + dvert
                dvert = dvert_below
            # dvert is now the gradient on the frozen embedding columns;
            # the embedding is not trained, so it is discarded.
        if record_flow:
            return grads, flow
        return grads
