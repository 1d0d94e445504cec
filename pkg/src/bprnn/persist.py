"""Model-level checkpoint save/load on top of the binary container."""

from dataclasses import dataclass

import numpy as np

from .checkpoint import load_checkpoint, save_checkpoint
from .config import FullConfig
from .errors import FormatError
from .optim import AdamState
from .stack import HeadParams, LayerParams, Stack


def save_model(path, model, full_config, vocab, adam=None, train_state=None):
    """Persist a model (and optionally optimizer/training progress)."""
    tensors = dict(model.all_tensors())
    extra = {}
    if train_state is not None:
        extra["train_state"] = train_state
    if adam is not None:
        for name, m in adam.m.items():
            tensors[f"adam/m/{name}"] = m
        for name, v in adam.v.items():
            tensors[f"adam/v/{name}"] = v
        extra["adam"] = {
            "step": adam.step,
            "beta1": adam.beta1,
            "beta2": adam.beta2,
            "eps": adam.eps,
        }
    config_doc = full_config.to_json(stack_cfg=model.cfg)
    save_checkpoint(path, config_doc, vocab, tensors, extra)


@dataclass
class LoadedModel:
    model: Stack
    config: FullConfig
    vocab: list
    adam: AdamState | None
    train_state: dict | None


def load_model(path):
    """Rebuild a model from a checkpoint, bit-exact."""
    data = load_checkpoint(path)
    full = FullConfig.from_json(data.config)
    cfg = full.stack_config()
    if cfg.vocab_size is None:
        raise FormatError("checkpoint config has no vocab_size")

    def take(name, rows, cols):
        if name not in data.tensors:
            raise FormatError(f"checkpoint is missing tensor {name!r}")
        arr = data.tensors[name]
        if arr.shape != (rows, cols):
            raise FormatError(
                f"tensor {name} has shape {arr.shape}, config implies ({rows}, {cols})"
            )
        return arr.copy()

    H = cfg.width
    layers = [
        LayerParams(
            W=take(f"layers/{i}/W", H, H),
            U=take(f"layers/{i}/U", H, cfg.input_dim(i + 1)),
            b=take(f"layers/{i}/b", H, 1),
        )
        for i in range(cfg.depth)
    ]
    head = HeadParams(
        V=take("head/V", cfg.vocab_size, H),
        c=take("head/c", cfg.vocab_size, 1),
        embedding=take("head/embedding", cfg.embedding_dim, cfg.vocab_size),
    )
    model = Stack(cfg, layers, head)
    adam = None
    if "adam" in data.extra:
        meta = data.extra["adam"]
        adam = AdamState(
            model.named_params(),
            beta1=meta["beta1"],
            beta2=meta["beta2"],
            eps=meta["eps"],
        )
        adam.step = int(meta["step"])
        for name in model.named_params():
            p = model.named_params()[name]
            adam.m[name] = take(f"adam/m/{name}", *p.shape)
            adam.v[name] = take(f"adam/v/{name}", *p.shape)
    vocab = [int(v) for v in data.vocab]
    return LoadedModel(
        model=model,
        config=full,
        vocab=vocab,
        adam=adam,
        train_state=data.extra.get("train_state"),
    )
