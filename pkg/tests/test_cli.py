import json

import pytest

from bprnn.cli import main
from bprnn.corpus import ingest
from bprnn.experiments import evaluate
from bprnn.persist import load_model


def write_config(tmp_path, doc, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return path


TINY_TRAIN = {
    "activation": {"base": "elu", "bipolar": True},
    "stack": {"depth": 2, "width": 8},
    "train": {"lr": 0.002, "batch_size": 4, "seq_len": 20, "max_epochs": 1},
}


class TestTheoremCheck:
    def test_bipolar_relu_mean_halving(self, capsys):
        code = main(
            ["theorem-check", "--activation", "brelu", "--mu", "1", "--n", "1000000"]
        )
        out = capsys.readouterr().out
        assert code == 0
        fields = dict(kv.split("=") for kv in out.split())
        assert fields["activation"] == "brelu"
        assert float(fields["mean_out"]) == pytest.approx(0.5, abs=0.004)

    def test_unknown_activation_is_usage_error(self, capsys):
        code = main(["theorem-check", "--activation", "nope", "--mu", "0", "--n", "10"])
        err = capsys.readouterr().err
        assert code == 1
        assert err.startswith("error: usage:")
        assert "\n" not in err.strip()


class TestDynamicsCommand:
    def test_single_row_csv(self, tmp_path, capsys):
        cfg = write_config(
            tmp_path,
            {
                "activation": {"base": "relu", "bipolar": True},
                "dynamics": {"width": 8, "iterations": 1, "runs": 1},
            },
        )
        out = tmp_path / "out"
        assert main(["dynamics", "--config", str(cfg), "--out", str(out)]) == 0
        lines = (out / "dynamics.csv").read_text().splitlines()
        assert lines[0] == "iteration,mean_avg,var_avg"
        assert len(lines) == 2
        assert capsys.readouterr().out == ""

    def test_rerun_is_byte_identical(self, tmp_path):
        cfg = write_config(
            tmp_path,
            {
                "activation": {"base": "elu", "bipolar": True},
                "dynamics": {"width": 16, "iterations": 12, "runs": 5},
            },
        )
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        main(["dynamics", "--config", str(cfg), "--out", str(out_a), "--seed", "9"])
        main(["dynamics", "--config", str(cfg), "--out", str(out_b), "--seed", "9"])
        assert (out_a / "dynamics.csv").read_bytes() == (out_b / "dynamics.csv").read_bytes()


class TestTrainEvalProbe:
    def test_train_eval_probe_pipeline(self, tmp_path, corpus_file, capsys):
        data = corpus_file(n_bytes=6000)
        cfg = write_config(tmp_path, TINY_TRAIN)
        out = tmp_path / "run"
        code = main(
            ["train", "--config", str(cfg), "--data", str(data), "--out", str(out),
             "--seed", "3"]
        )
        captured = capsys.readouterr()
        assert code == 0
        assert captured.out.startswith("status=ok")
        train_csv = (out / "train.csv").read_text().splitlines()
        assert train_csv[0] == "epoch,step,train_bpc,val_bpc,lr"
        assert len(train_csv) == 2
        assert (out / "final.bprn").exists()

        code = main(["eval", "--ckpt", str(out / "final.bprn"), "--data", str(data)])
        captured = capsys.readouterr()
        assert code == 0
        assert captured.out.startswith("bpc=")
        cli_bpc = float(captured.out.strip().split("=")[1])

        loaded = load_model(out / "final.bprn")
        ids = ingest(data).symbols
        assert evaluate(loaded.model, ids) == cli_bpc

        code = main(
            ["probe", "--ckpt", str(out / "final.bprn"), "--data", str(data),
             "--out", str(out), "--batches", "2"]
        )
        assert code == 0
        lines = (out / "gradflow.csv").read_text().splitlines()
        assert lines[0] == "layer,timestep,grad_l2"
        assert len(lines) == 1 + 2 * 20  # depth x seq_len data rows

    def test_train_rerun_produces_identical_outputs(self, tmp_path, corpus_file):
        data = corpus_file(n_bytes=6000)
        cfg = write_config(tmp_path, TINY_TRAIN)
        outs = []
        for name in ("r1", "r2"):
            out = tmp_path / name
            assert main(
                ["train", "--config", str(cfg), "--data", str(data),
                 "--out", str(out), "--seed", "11"]
            ) == 0
            outs.append(out)
        assert (outs[0] / "train.csv").read_bytes() == (outs[1] / "train.csv").read_bytes()
        assert (outs[0] / "final.bprn").read_bytes() == (outs[1] / "final.bprn").read_bytes()

    def test_divergent_training_exits_dnc(self, tmp_path, corpus_file, capsys):
        data = corpus_file(n_bytes=6000)
        doc = dict(TINY_TRAIN)
        doc["train"] = dict(doc["train"], lr=1e12, max_epochs=5)
        cfg = write_config(tmp_path, doc)
        out = tmp_path / "run"
        code = main(["train", "--config", str(cfg), "--data", str(data), "--out", str(out)])
        captured = capsys.readouterr()
        assert code == 2
        assert captured.err.splitlines()[-1].startswith("error: divergence:")
        rows = (out / "train.csv").read_text().splitlines()
        assert rows[-1].split(",")[2] == "DNC"


class TestLsuvCheck:
    def test_report_goes_to_stdout(self, tmp_path, capsys):
        cfg = write_config(
            tmp_path,
            {
                "activation": {"base": "relu", "bipolar": True},
                "stack": {"depth": 4, "width": 16},
                "lsuv": {"probe_batch": 64},
            },
        )
        assert main(["lsuv-check", "--config", str(cfg)]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "layer_index,iterations,final_variance,w_scale,u_scale"
        assert len(lines) == 5
        for line in lines[1:]:
            var = float(line.split(",")[2])
            assert 0.98 <= var <= 1.02


class TestErrorMapping:
    def test_missing_data_file_is_io_error(self, tmp_path, capsys):
        cfg = write_config(tmp_path, TINY_TRAIN)
        code = main(
            ["train", "--config", str(cfg), "--data", str(tmp_path / "none.txt"),
             "--out", str(tmp_path / "o")]
        )
        assert code == 3
        assert capsys.readouterr().err.startswith("error: io:")

    def test_unknown_config_key_is_usage_error(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {"stak": {"depth": 1}})
        code = main(["lsuv-check", "--config", str(cfg)])
        assert code == 1
        assert "stak" in capsys.readouterr().err

    def test_bad_checkpoint_is_format_error(self, tmp_path, capsys, corpus_file):
        bad = tmp_path / "bad.bprn"
        bad.write_bytes(b"JUNKJUNKJUNKJUNKJUNK")
        code = main(["eval", "--ckpt", str(bad), "--data", str(corpus_file(100))])
        assert code == 3
        assert capsys.readouterr().err.startswith("error: format:")

    def test_missing_subcommand_is_usage_error(self, capsys):
        assert main([]) == 1
        assert capsys.readouterr().err.startswith("error: usage:")

    def test_results_never_on_stderr_and_diagnostics_never_on_stdout(
        self, tmp_path, capsys
    ):
        cfg = write_config(
            tmp_path,
            {
                "activation": {"base": "relu"},
                "dynamics": {"width": 4, "iterations": 2, "runs": 2},
            },
        )
        assert main(["dynamics", "--config", str(cfg), "--out", str(tmp_path / "d")]) == 0
        captured = capsys.readouterr()
        assert captured.out == ""
        assert captured.err == ""
