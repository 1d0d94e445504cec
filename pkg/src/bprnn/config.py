"""Strict JSON configuration for the CLI and checkpoints.

One document mirrors the typed configs, section by section:

    {
      "activation": {"base": "elu", "bipolar": true, ...},
      "stack":      {"depth": 8, "width": 64, ...},
      "dropout":    {"p_between": 0.05, ...},
      "train":      {"lr": 0.0002, "batch_size": 128, ...},
      "lsuv":       {"target_variance": 1.0, ...},
      "dynamics":   {"width": 128, "iterations": 48, "runs": 50},
      "split":      {"train": 0.9, "val": 0.05, "test": 0.05},
      "gamma":      0.5,
      "seed":       42
    }

Unknown keys anywhere are errors, so typos fail loudly instead of
silently falling back to defaults.
"""

import json
from dataclasses import dataclass
from pathlib import Path

from .activations import ActivationSpec
from .dropout import DropoutConfig
from .errors import ConfigError
from .lsuv import LsuvConfig
from .stack import StackConfig

_TOP_KEYS = {
    "activation",
    "stack",
    "dropout",
    "train",
    "lsuv",
    "dynamics",
    "split",
    "gamma",
    "seed",
}
_STACK_KEYS = {"depth", "width", "skip_period", "skip_scale", "embedding_dim", "vocab_size"}
_TRAIN_KEYS = {
    "lr",
    "batch_size",
    "seq_len",
    "val_every_epochs",
    "lr_decay_factor",
    "max_epochs",
}
_DYNAMICS_KEYS = {"width", "iterations", "runs"}
_SPLIT_KEYS = {"train", "val", "test"}

TRAIN_DEFAULTS = {
    "lr": 0.0002,
    "batch_size": 128,
    "seq_len": 50,
    "val_every_epochs": 4,
    "lr_decay_factor": 0.5,
    "max_epochs": 10,
}
DYNAMICS_DEFAULTS = {"width": 128, "iterations": 48, "runs": 50}


def check_keys(doc, allowed, section):
    """Reject any key not in ``allowed`` for the named config section."""
    if not isinstance(doc, dict):
        raise ConfigError(f"config section {section!r} must be a JSON object")
    unknown = set(doc) - set(allowed)
    if unknown:
        raise ConfigError(
            f"unknown config key{'s' if len(unknown) > 1 else ''} in "
            f"{section}: {', '.join(sorted(unknown))}"
        )


_TRAIN_TYPES = {
    "lr": float,
    "batch_size": int,
    "seq_len": int,
    "val_every_epochs": int,
    "lr_decay_factor": float,
    "max_epochs": int,
}
_STACK_TYPES = {
    "depth": int,
    "width": int,
    "skip_period": int,
    "skip_scale": float,
    "embedding_dim": int,
    "vocab_size": int,
}


def _coerce(doc, types, section):
    out = dict(doc)
    for key, value in doc.items():
        caster = types.get(key)
        if caster is None or value is None:
            continue
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{section}.{key} must be a number, got {value!r}")
        out[key] = caster(value)
    return out


@dataclass
class FullConfig:
    """Parsed configuration document with defaults applied."""

    activation: ActivationSpec | None
    stack_doc: dict | None
    dropout: DropoutConfig
    train_doc: dict
    lsuv: LsuvConfig
    dynamics_doc: dict
    split: tuple
    gamma: float
    seed: int | None

    @classmethod
    def from_json(cls, doc):
        check_keys(doc, _TOP_KEYS, "top level")
        activation = None
        if "activation" in doc:
            activation = ActivationSpec.from_json(doc["activation"])
        stack_doc = None
        if "stack" in doc:
            check_keys(doc["stack"], _STACK_KEYS, "stack")
            stack_doc = _coerce(doc["stack"], _STACK_TYPES, "stack")
        dropout = DropoutConfig.from_json(doc.get("dropout", {}))
        train_doc = dict(TRAIN_DEFAULTS)
        if "train" in doc:
            check_keys(doc["train"], _TRAIN_KEYS, "train")
            train_doc.update(_coerce(doc["train"], _TRAIN_TYPES, "train"))
        lsuv = LsuvConfig.from_json(doc.get("lsuv", {}))
        dynamics_doc = dict(DYNAMICS_DEFAULTS)
        if "dynamics" in doc:
            check_keys(doc["dynamics"], _DYNAMICS_KEYS, "dynamics")
            dynamics_doc.update(
                _coerce(doc["dynamics"], {k: int for k in _DYNAMICS_KEYS}, "dynamics")
            )
        split = (0.9, 0.05, 0.05)
        if "split" in doc:
            check_keys(doc["split"], _SPLIT_KEYS, "split")
            missing = _SPLIT_KEYS - set(doc["split"])
            if missing:
                raise ConfigError(f"split section is missing {sorted(missing)}")
            split = tuple(float(doc["split"][k]) for k in ("train", "val", "test"))
        gamma = float(doc.get("gamma", 0.5))
        seed = doc.get("seed")
        if seed is not None:
            seed = int(seed)
        return cls(
            activation=activation,
            stack_doc=stack_doc,
            dropout=dropout,
            train_doc=train_doc,
            lsuv=lsuv,
            dynamics_doc=dynamics_doc,
            split=split,
            gamma=gamma,
            seed=seed,
        )

    def require_activation(self):
        if self.activation is None:
            raise ConfigError("this command needs an 'activation' config section")
        return self.activation

    def stack_config(self, vocab_size=None):
        """Build the typed stack config, filling vocab_size if given."""
        if self.stack_doc is None:
            raise ConfigError("this command needs a 'stack' config section")
        doc = dict(self.stack_doc)
        for key in ("depth", "width"):
            if key not in doc:
                raise ConfigError(f"stack config needs {key!r}")
        if vocab_size is not None:
            if doc.get("vocab_size") not in (None, vocab_size):
                raise ConfigError(
                    f"config vocab_size {doc['vocab_size']} does not match "
                    f"the corpus vocabulary of {vocab_size} symbols"
                )
            doc["vocab_size"] = vocab_size
        return StackConfig(activation=self.require_activation(), **doc)

    def to_json(self, stack_cfg=None):
        """Serialize back to a canonical document.

        ``stack_cfg`` substitutes the resolved stack section (with
        vocab_size and embedding_dim filled in) when provided.
        """
        doc = {
            "dropout": self.dropout.to_json(),
            "train": dict(self.train_doc),
            "lsuv": self.lsuv.to_json(),
            "dynamics": dict(self.dynamics_doc),
            "split": {"train": self.split[0], "val": self.split[1], "test": self.split[2]},
            "gamma": self.gamma,
        }
        if self.activation is not None:
            doc["activation"] = self.activation.to_json()
        if stack_cfg is not None:
            doc["stack"] = stack_cfg.to_json()
        elif self.stack_doc is not None:
            doc["stack"] = dict(self.stack_doc)
        if self.seed is not None:
            doc["seed"] = self.seed
        return doc


def load_config(path):
    """Read and validate a JSON config file."""
    try:
        doc = json.loads(Path(path).read_text("utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return FullConfig.from_json(doc)
