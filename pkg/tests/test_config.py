import json

import pytest

from bprnn.config import FullConfig, load_config
from bprnn.errors import ConfigError


def write(tmp_path, doc):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(doc))
    return path


class TestStrictness:
    def test_unknown_top_level_key(self, tmp_path):
        with pytest.raises(ConfigError, match="bogus"):
            load_config(write(tmp_path, {"bogus": 1}))

    def test_unknown_section_key_names_the_typo(self, tmp_path):
        doc = {"train": {"learning_rate": 0.1}}
        with pytest.raises(ConfigError, match="learning_rate"):
            load_config(write(tmp_path, doc))

    def test_unknown_activation_key(self, tmp_path):
        doc = {"activation": {"base": "relu", "bipolr": True}}
        with pytest.raises(ConfigError, match="bipolr"):
            load_config(write(tmp_path, doc))

    def test_invalid_json_reported(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError):
            load_config(path)

    def test_non_numeric_value_reported(self, tmp_path):
        doc = {"train": {"lr": "fast"}}
        with pytest.raises(ConfigError, match="train.lr"):
            load_config(write(tmp_path, doc))

    def test_boolean_is_not_a_number(self, tmp_path):
        doc = {"stack": {"depth": True, "width": 4}}
        with pytest.raises(ConfigError, match="stack.depth"):
            load_config(write(tmp_path, doc))


class TestDefaults:
    def test_train_defaults(self, tmp_path):
        cfg = load_config(write(tmp_path, {}))
        assert cfg.train_doc["lr"] == 0.0002
        assert cfg.train_doc["batch_size"] == 128
        assert cfg.train_doc["seq_len"] == 50
        assert cfg.train_doc["val_every_epochs"] == 4
        assert cfg.train_doc["lr_decay_factor"] == 0.5
        assert cfg.dynamics_doc == {"width": 128, "iterations": 48, "runs": 50}
        assert cfg.split == (0.9, 0.05, 0.05)
        assert cfg.gamma == 0.5
        assert cfg.seed is None

    def test_activation_section_round_trips(self, tmp_path):
        doc = {
            "activation": {"base": "selu", "bipolar": True, "lambda": 1.05},
            "stack": {"depth": 4, "width": 8},
            "seed": 7,
        }
        cfg = load_config(write(tmp_path, doc))
        assert cfg.activation.base == "selu"
        assert cfg.activation.lam == 1.05
        out = cfg.to_json()
        assert out["activation"]["base"] == "selu"
        assert out["seed"] == 7


class TestStackBuild:
    def test_vocab_filled_from_corpus(self, tmp_path):
        doc = {"activation": {"base": "relu"}, "stack": {"depth": 2, "width": 4}}
        cfg = load_config(write(tmp_path, doc))
        built = cfg.stack_config(vocab_size=31)
        assert built.vocab_size == 31
        assert built.embedding_dim == 4

    def test_vocab_conflict_detected(self, tmp_path):
        doc = {
            "activation": {"base": "relu"},
            "stack": {"depth": 2, "width": 4, "vocab_size": 10},
        }
        cfg = load_config(write(tmp_path, doc))
        with pytest.raises(ConfigError, match="vocab_size"):
            cfg.stack_config(vocab_size=31)

    def test_stack_requires_depth_and_width(self, tmp_path):
        doc = {"activation": {"base": "relu"}, "stack": {"depth": 2}}
        cfg = load_config(write(tmp_path, doc))
        with pytest.raises(ConfigError, match="width"):
            cfg.stack_config()

    def test_missing_sections_reported(self, tmp_path):
        cfg = load_config(write(tmp_path, {}))
        with pytest.raises(ConfigError):
            cfg.stack_config()
        with pytest.raises(ConfigError):
            cfg.require_activation()


class TestRoundTrip:
    def test_full_document_round_trip(self, tmp_path):
        doc = {
            "activation": {"base": "elu", "bipolar": True, "alpha": 1.0,
                           "slope": 0.01, "lambda": 1.0507009873554805},
            "stack": {"depth": 8, "width": 64, "skip_period": 4,
                      "skip_scale": 0.99, "embedding_dim": 64, "vocab_size": 27},
            "dropout": {"p_between": 0.05, "p_recurrent": 0.025, "p_block": 0.025,
                        "block_identity_vertical": True, "block_freeze_state": True},
            "train": {"lr": 0.0002, "batch_size": 128, "seq_len": 50,
                      "val_every_epochs": 4, "lr_decay_factor": 0.5, "max_epochs": 5},
            "lsuv": {"target_variance": 1.0, "tolerance": 0.02,
                     "max_iterations": 50, "probe_batch": 256,
                     "measure_pre_skip": False, "orthonormal": False},
            "dynamics": {"width": 128, "iterations": 48, "runs": 50},
            "split": {"train": 0.9, "val": 0.05, "test": 0.05},
            "gamma": 0.5,
            "seed": 42,
        }
        cfg = FullConfig.from_json(doc)
        assert cfg.to_json() == doc
