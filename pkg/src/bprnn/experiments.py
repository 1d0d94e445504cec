"""The three reproducible studies.

* activation dynamics: iterate x <- f(W x) from a unit-variance start and
  watch the mean and variance evolve, averaged over independent runs;
* gradient-flow probe: attach the loss to the final timestep only and
  record the gradient norm on every (layer, timestep) as it flows back
  through the unrolled stack;
* character-level language-model training with random-crop epochs,
  validation-driven learning-rate halving, and DNC detection.
"""

import contextlib
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import activations
from .activations import ActivationSpec
from .config import FullConfig
from .dropout import DropoutConfig, DropoutMasks, sample_masks
from .errors import DivergenceError, ParameterError, VocabularyError
from .lsuv import LsuvConfig, calibrate_single_layer, gamma_rebalance, lsuv_init_stack
from .optim import AdamState, adam_update
from .persist import load_model, save_model
from .rng import Rng
from .stack import LOG2, StackConfig, init_stack


@contextlib.contextmanager
def _quiet_nan_reductions():
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message="Mean of empty slice")
        yield


# ------------------------------------------------------------------ dynamics


@dataclass(frozen=True)
class DynamicsConfig:
    """Repeated-application study of one activation function."""

    width: int
    iterations: int
    activation: ActivationSpec
    runs: int = 50
    seed: int = 42

    def __post_init__(self):
        if self.width < 2 or self.width % 2 != 0:
            raise ParameterError(f"width must be even and >= 2, got {self.width}")
        if self.iterations < 1:
            raise ParameterError(f"iterations must be >= 1, got {self.iterations}")
        if self.runs < 1:
            raise ParameterError(f"runs must be >= 1, got {self.runs}")


@dataclass
class DynamicsResult:
    means: np.ndarray  # (runs, iterations), NaN once a run has diverged
    variances: np.ndarray
    truncated_at: list  # per run: 1-based iteration of divergence, or None

    @property
    def mean_avg(self):
        with np.errstate(all="ignore"), _quiet_nan_reductions():
            return np.nanmean(self.means, axis=0)

    @property
    def var_avg(self):
        with np.errstate(all="ignore"), _quiet_nan_reductions():
            return np.nanmean(self.variances, axis=0)

    def rows(self):
        m, v = self.mean_avg, self.var_avg
        return [(i + 1, float(m[i]), float(v[i])) for i in range(m.shape[0])]


DYNAMICS_HEADER = ("iteration", "mean_avg", "var_avg")


def iterate_dynamics(x1, W, spec, iterations):
    """Iterate x <- f(W x); returns (means, variances, truncated_at).

    Iteration 1 records the raw start vector. A non-finite product stops
    the run; later iterations are NaN and the 1-based index of the first
    bad iteration is reported.
    """
    means = np.full(iterations, np.nan)
    variances = np.full(iterations, np.nan)
    x = x1
    truncated_at = None
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(iterations):
            means[i] = np.mean(x)
            variances[i] = np.var(x, ddof=1)
            if i + 1 == iterations:
                break
            z = W @ x
            if not np.isfinite(z).all():
                truncated_at = i + 2
                break
            x = activations.apply(spec, z)
    return means, variances, truncated_at


def run_dynamics(cfg, threads=1):
    """Run the dynamics study, averaging over ``cfg.runs`` seeds.

    Each run draws its own start vector and weight matrix from a child
    generator of the run index, so two configs with the same seed see
    identical draws regardless of activation; the weight scale is then
    calibrated so the first application has approximately unit output
    variance. Results are identical for any thread count.
    """
    children = Rng(cfg.seed).split(cfg.runs)

    def one(run_rng):
        x1 = run_rng.normal(cfg.width, 1)
        W = run_rng.normal(cfg.width, cfg.width, std=1.0 / np.sqrt(cfg.width))
        W = calibrate_single_layer(W, x1, cfg.activation)
        return iterate_dynamics(x1, W, cfg.activation, cfg.iterations)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(one, children))
    else:
        outcomes = [one(c) for c in children]
    means = np.stack([o[0] for o in outcomes])
    variances = np.stack([o[1] for o in outcomes])
    return DynamicsResult(
        means=means,
        variances=variances,
        truncated_at=[o[2] for o in outcomes],
    )


# ------------------------------------------------------------------ batching


def choose_crop(rng, n_tokens, batch_size, seq_len):
    """Pick this epoch's crop start so the text divides evenly.

    Returns (start, n_batches): the cropped region holds exactly
    batch_size x seq_len x n_batches symbols plus one lookahead target.
    The start is uniform over all valid offsets; one integer is drawn
    even when only offset 0 is valid, keeping the draw stream aligned.
    """
    per_batch = batch_size * seq_len
    k = (n_tokens - 1) // per_batch
    if k < 1:
        raise ParameterError(
            f"corpus of {n_tokens} symbols is too small for "
            f"batch {batch_size} x sequence {seq_len}"
        )
    usable = per_batch * k + 1
    start = int(rng.integers(0, n_tokens - usable + 1))
    return start, k


def make_batches(tokens, batch_size, seq_len):
    """Arrange a cropped stream into (K, T, B) input/target arrays.

    The stream is cut into ``batch_size`` contiguous rows; consecutive
    batches continue each row, so hidden state can be carried across
    batches within an epoch.
    """
    tokens = np.asarray(tokens)
    per_row = (len(tokens) - 1) // batch_size
    k = per_row // seq_len
    if k < 1:
        raise ParameterError("stream too short for one batch")
    chunk = k * seq_len
    ins = tokens[: batch_size * chunk].reshape(batch_size, k, seq_len)
    tgt = tokens[1 : batch_size * chunk + 1].reshape(batch_size, k, seq_len)
    return ins.transpose(1, 2, 0), tgt.transpose(1, 2, 0)


# -------------------------------------------------------------------- probe

GRADFLOW_HEADER = ("layer", "timestep", "grad_l2")


def probe_gradient_flow(model, stream, seq_len, batch_size, n_batches=10):
    """Average per-(layer, timestep) gradient norms over the first batches.

    For each batch the loss is the final timestep's mean cross-entropy,
    backpropagated through the whole unrolled graph with dropout
    disabled. Hidden state threads across batches from zero.
    """
    need = n_batches * seq_len * batch_size + 1
    if len(stream) < need:
        raise ParameterError(
            f"stream of {len(stream)} symbols is too short for "
            f"{n_batches} batches of {batch_size} x {seq_len}"
        )
    ins, tgt = make_batches(np.asarray(stream)[:need], batch_size, seq_len)
    masks = DropoutMasks.all_alive()
    state = model.zero_state(batch_size)
    acc = np.zeros((model.cfg.depth, seq_len))
    for k in range(n_batches):
        state, _, cache = model.forward_sequence(state, ins[k], tgt[k], masks)
        _, flow = model.backward(cache, final_step_only=True, record_flow=True)
        acc += flow
    return acc / n_batches


def gradflow_rows(matrix):
    L, T = matrix.shape
    return [(i + 1, t + 1, float(matrix[i, t])) for i in range(L) for t in range(T)]


def peak_lag(matrix, layer):
    """Timesteps between the loss origin and the peak gradient at a layer."""
    T = matrix.shape[1]
    return T - 1 - int(np.argmax(matrix[layer - 1]))


# ----------------------------------------------------------------- training


@dataclass(frozen=True)
class TrainConfig:
    stack: StackConfig
    dropout: DropoutConfig = field(default_factory=DropoutConfig)
    lr: float = 0.0002
    batch_size: int = 128
    seq_len: int = 50
    val_every_epochs: int = 4
    lr_decay_factor: float = 0.5
    max_epochs: int = 10
    seed: int = 42

    def __post_init__(self):
        if self.lr <= 0:
            raise ParameterError(f"lr must be positive, got {self.lr}")
        if not 0.0 < self.lr_decay_factor < 1.0:
            raise ParameterError(
                f"lr_decay_factor must be in (0, 1), got {self.lr_decay_factor}"
            )
        for name in ("batch_size", "seq_len", "val_every_epochs"):
            if getattr(self, name) < 1:
                raise ParameterError(f"{name} must be >= 1")
        if self.max_epochs < 0:
            raise ParameterError(f"max_epochs must be >= 0, got {self.max_epochs}")


TRAIN_HEADER = ("epoch", "step", "train_bpc", "val_bpc", "lr")


@dataclass
class TrainResult:
    rows: list  # one (epoch, step, train_bpc, val_bpc, lr) tuple per epoch
    status: str  # "ok" or "dnc"
    model: object
    best_val_bpc: float | None
    best_checkpoint: str | None
    final_checkpoint: str | None


def _did_improve(val_bpc, best):
    # "did not improve" means failing to beat the best by at least 1e-4
    return val_bpc < best - 1e-4


def train(
    cfg,
    corpus,
    lsuv_cfg=None,
    gamma=0.5,
    out_dir=None,
    full_config=None,
    resume=None,
    log_fn=None,
):
    """Train a character LM with BPTT + ADAM and the LR-halving schedule.

    Per epoch a random crop of the training split is arranged into
    non-overlapping sequences; hidden state carries across consecutive
    batches and resets at epoch boundaries. Every ``val_every_epochs``
    epochs the validation split is scored in evaluation mode: a new best
    writes ``best.bprn`` (when ``out_dir`` is set) and anything else
    halves the learning rate. Divergence aborts with a final DNC record
    instead of raising.
    """
    lsuv_cfg = lsuv_cfg or LsuvConfig()
    if out_dir is not None:
        out_dir = Path(out_dir)
    if cfg.stack.vocab_size != corpus.vocab_size:
        raise ParameterError(
            f"stack vocab_size {cfg.stack.vocab_size} does not match corpus "
            f"vocabulary of {corpus.vocab_size}"
        )
    if full_config is None:
        full_config = FullConfig(
            activation=cfg.stack.activation,
            stack_doc=cfg.stack.to_json(),
            dropout=cfg.dropout,
            train_doc={
                "lr": cfg.lr,
                "batch_size": cfg.batch_size,
                "seq_len": cfg.seq_len,
                "val_every_epochs": cfg.val_every_epochs,
                "lr_decay_factor": cfg.lr_decay_factor,
                "max_epochs": cfg.max_epochs,
            },
            lsuv=lsuv_cfg,
            dynamics_doc={},
            split=(0.9, 0.05, 0.05),
            gamma=gamma,
            seed=cfg.seed,
        )
    rng_init, rng_lsuv, rng_crop, rng_masks = Rng(cfg.seed).split(4)
    start_epoch = 1
    step = 0
    lr = cfg.lr
    best = float("inf")
    decay_k = 0
    if resume is not None:
        loaded = load_model(resume)
        model = loaded.model
        adam = loaded.adam or AdamState(model.named_params())
        ts = loaded.train_state or {}
        start_epoch = int(ts.get("epoch", 0)) + 1
        step = int(ts.get("step", 0))
        lr = float(ts.get("lr", cfg.lr))
        saved_best = ts.get("best_val_bpc")
        best = float(saved_best) if saved_best is not None else float("inf")
        decay_k = int(ts.get("decay_k", 0))
    else:
        model = init_stack(cfg.stack, rng_init, orthonormal=lsuv_cfg.orthonormal)
        lsuv_init_stack(model, lsuv_cfg, rng_lsuv)
        if gamma != 0.5:
            for layer in model.layers:
                layer.W, layer.U = gamma_rebalance(layer.W, layer.U, gamma)
        adam = AdamState(model.named_params())
    params = model.named_params()
    rows = []
    status = "ok"
    best_path = None
    final_path = None
    train_tokens = corpus.train
    can_validate = len(corpus.val) >= 2

    def train_state(epoch):
        return {
            "epoch": epoch,
            "step": step,
            "lr": lr,
            "best_val_bpc": None if np.isinf(best) else best,
            "decay_k": decay_k,
        }

    epoch = start_epoch - 1
    try:
        for epoch in range(start_epoch, cfg.max_epochs + 1):
            crop, k_batches = choose_crop(
                rng_crop, len(train_tokens), cfg.batch_size, cfg.seq_len
            )
            usable = cfg.batch_size * cfg.seq_len * k_batches + 1
            ins, tgt = make_batches(
                train_tokens[crop : crop + usable], cfg.batch_size, cfg.seq_len
            )
            state = model.zero_state(cfg.batch_size)
            loss_sum = 0.0
            lr_used = lr
            for k in range(k_batches):
                masks = sample_masks(
                    cfg.dropout, cfg.stack, cfg.seq_len, cfg.batch_size, rng_masks
                )
                state, loss, cache = model.forward_sequence(state, ins[k], tgt[k], masks)
                grads = model.backward(cache)
                adam_update(params, grads, adam, lr)
                loss_sum += loss
                step += 1
            train_bpc = loss_sum / k_batches / LOG2
            val_bpc = None
            if can_validate and epoch % cfg.val_every_epochs == 0:
                val_bpc = evaluate(model, corpus.val)
                if _did_improve(val_bpc, best):
                    best = val_bpc
                    if out_dir is not None:
                        best_path = str(out_dir / "best.bprn")
                        save_model(
                            best_path,
                            model,
                            full_config,
                            corpus.vocab,
                            adam=adam,
                            train_state=train_state(epoch),
                        )
                else:
                    # recompute from the base rate so the schedule is exact
                    decay_k += 1
                    lr = cfg.lr * cfg.lr_decay_factor**decay_k
            row = (epoch, step, float(train_bpc), val_bpc, lr_used)
            rows.append(row)
            if log_fn is not None:
                log_fn(row)
        if out_dir is not None and cfg.max_epochs >= start_epoch:
            final_path = str(out_dir / "final.bprn")
            save_model(
                final_path,
                model,
                full_config,
                corpus.vocab,
                adam=adam,
                train_state=train_state(epoch),
            )
    except DivergenceError:
        status = "dnc"
        rows.append((epoch, step, "DNC", None, lr))
        if log_fn is not None:
            log_fn(rows[-1])
    return TrainResult(
        rows=rows,
        status=status,
        model=model,
        best_val_bpc=None if np.isinf(best) else best,
        best_checkpoint=best_path,
        final_checkpoint=final_path,
    )


def evaluate(model, token_stream):
    """Bits-per-character of next-symbol prediction over one stream.

    Evaluation mode: dropout off, hidden state threaded sequentially
    across the entire stream from zero.
    """
    stream = np.asarray(token_stream)
    if stream.size < 2:
        raise ParameterError("evaluation stream needs at least 2 symbols")
    K = model.head.embedding.shape[1]
    if stream.min() < 0 or stream.max() >= K:
        raise VocabularyError(
            f"symbol id {int(stream.max())} outside vocabulary of {K}"
        )
    masks = DropoutMasks.all_alive()
    state = model.zero_state(1)
    total = 0.0
    for t in range(stream.size - 1):
        state, logits = model.forward_step(state, stream[t : t + 1], masks, 0)
        z = logits - logits.max()
        lse = float(np.log(np.exp(z).sum()))
        total += lse - float(z[stream[t + 1], 0])
    return total / (stream.size - 1) / LOG2
