"""Command-line surface.

Subcommands: dynamics, train, eval, probe, lsuv-check, theorem-check.
Results go to stdout, progress to stderr, and every failure prints one
machine-parsable line ``error: <kind>: <message>`` to stderr. Exit codes:
0 success, 1 usage error, 2 divergence (DNC), 3 I/O or format error.
"""

import argparse
import sys
from pathlib import Path

from . import corpus as corpus_mod
from .activations import mean_shift_probe, spec_from_name
from .config import load_config
from .csvio import render_csv, write_csv
from .errors import (
    BprnnError,
    ConfigError,
    DivergenceError,
    FormatError,
    IngestionError,
    ParameterError,
    VocabularyError,
)
from .experiments import (
    DYNAMICS_HEADER,
    GRADFLOW_HEADER,
    TRAIN_HEADER,
    DynamicsConfig,
    TrainConfig,
    evaluate,
    gradflow_rows,
    probe_gradient_flow,
    run_dynamics,
    train,
)
from .lsuv import lsuv_init_stack
from .persist import load_model
from .rng import Rng
from .stack import init_stack


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="RNG seed (default 42)")
    common.add_argument("--threads", type=int, default=1, help="internal parallelism cap")
    parser = _Parser(prog="bprnn", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dynamics", parents=[common], help="activation dynamics study")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("train", parents=[common], help="train a character LM")
    p.add_argument("--config", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--resume", default=None)

    p = sub.add_parser("eval", parents=[common], help="bits per character of a stream")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--data", required=True)

    p = sub.add_parser("probe", parents=[common], help="gradient-flow probe")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--batches", type=int, default=10)

    p = sub.add_parser("lsuv-check", parents=[common], help="report per-layer init variances")
    p.add_argument("--config", required=True)

    p = sub.add_parser("theorem-check", parents=[common], help="measure an output mean shift")
    p.add_argument("--activation", required=True)
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    return parser


def _seed(args, cfg=None):
    if args.seed is not None:
        return args.seed
    if cfg is not None and cfg.seed is not None:
        return cfg.seed
    return 42


def _outdir(path):
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _cmd_dynamics(args):
    cfg = load_config(args.config)
    dyn = DynamicsConfig(
        width=cfg.dynamics_doc["width"],
        iterations=cfg.dynamics_doc["iterations"],
        runs=cfg.dynamics_doc["runs"],
        activation=cfg.require_activation(),
        seed=_seed(args, cfg),
    )
    result = run_dynamics(dyn, threads=max(1, args.threads))
    out = _outdir(args.out)
    write_csv(out / "dynamics.csv", DYNAMICS_HEADER, result.rows())
    return 0


def _cmd_train(args):
    cfg = load_config(args.config)
    data = corpus_mod.ingest(args.data, split=cfg.split)
    stack_cfg = cfg.stack_config(vocab_size=data.vocab_size)
    tc = TrainConfig(
        stack=stack_cfg,
        dropout=cfg.dropout,
        seed=_seed(args, cfg),
        **cfg.train_doc,
    )
    out = _outdir(args.out)

    def log_fn(row):
        print(
            f"epoch {row[0]} step {row[1]} train_bpc {row[2]} "
            f"val_bpc {row[3]} lr {row[4]}",
            file=sys.stderr,
        )

    result = train(
        tc,
        data,
        lsuv_cfg=cfg.lsuv,
        gamma=cfg.gamma,
        out_dir=out,
        full_config=cfg,
        resume=args.resume,
        log_fn=log_fn,
    )
    write_csv(out / "train.csv", TRAIN_HEADER, result.rows)
    if result.status == "dnc":
        raise DivergenceError("training did not converge (DNC)")
    print(
        f"status=ok epochs={len(result.rows)} "
        f"final_train_bpc={result.rows[-1][2] if result.rows else ''} "
        f"best_val_bpc={result.best_val_bpc}"
    )
    return 0


def _cmd_eval(args):
    loaded = load_model(args.ckpt)
    ids = corpus_mod.encode(Path(args.data).read_bytes(), loaded.vocab)
    bpc = evaluate(loaded.model, ids)
    print(f"bpc={bpc!r}")
    return 0


def _cmd_probe(args):
    loaded = load_model(args.ckpt)
    ids = corpus_mod.encode(Path(args.data).read_bytes(), loaded.vocab)
    doc = loaded.config.train_doc
    matrix = probe_gradient_flow(
        loaded.model,
        ids,
        seq_len=int(doc["seq_len"]),
        batch_size=int(doc["batch_size"]),
        n_batches=args.batches,
    )
    out = _outdir(args.out)
    write_csv(out / "gradflow.csv", GRADFLOW_HEADER, gradflow_rows(matrix))
    return 0


def _cmd_lsuv_check(args):
    cfg = load_config(args.config)
    stack_cfg = cfg.stack_config()
    rng_init, rng_lsuv = Rng(_seed(args, cfg)).split(2)
    model = init_stack(
        stack_cfg,
        rng_init,
        orthonormal=cfg.lsuv.orthonormal,
        with_head=stack_cfg.vocab_size is not None,
    )
    reports = lsuv_init_stack(model, cfg.lsuv, rng_lsuv)
    header = ("layer_index", "iterations", "final_variance", "w_scale", "u_scale")
    rows = [
        (r.layer_index, r.iterations, r.final_variance, r.w_scale, r.u_scale)
        for r in reports
    ]
    sys.stdout.write(render_csv(header, rows))
    return 0


def _cmd_theorem_check(args):
    spec = spec_from_name(args.activation)
    measured = mean_shift_probe(spec, args.mu, args.n, Rng(_seed(args)))
    print(
        f"activation={spec.name} mu={args.mu!r} n={args.n} "
        f"mean_out={measured!r} half_mu={0.5 * args.mu!r}"
    )
    return 0


_COMMANDS = {
    "dynamics": _cmd_dynamics,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "probe": _cmd_probe,
    "lsuv-check": _cmd_lsuv_check,
    "theorem-check": _cmd_theorem_check,
}


def _fail(kind, message, code):
    line = " ".join(str(message).split())
    print(f"error: {kind}: {line}", file=sys.stderr)
    return code


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        return _fail("usage", exc, 1)
    except DivergenceError as exc:
        return _fail("divergence", exc, 2)
    except (ConfigError, ParameterError) as exc:
        return _fail("usage", exc, 1)
    except (IngestionError, VocabularyError) as exc:
        return _fail("io", exc, 3)
    except FormatError as exc:
        return _fail("format", exc, 3)
    except OSError as exc:
        return _fail("io", exc, 3)
    except BprnnError as exc:
        return _fail("usage", exc, 1)


if __name__ == "__main__":
    sys.exit(main())
