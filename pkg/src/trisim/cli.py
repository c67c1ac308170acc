"""Command-line entry point.

Subcommands: synth, make-weak, train, eval, verify, sweep. Every command is
deterministic under --seed, and every primary output file is paired with a
run manifest (<output>.manifest.json) recording the resolved flags, input
digests, and timing.

Exit codes: 0 success, 2 usage, 3 I/O, 4 invalid configuration or domain
error, 5 failed verification.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .core import ClassPrior, CorrectionKind, LossSpec, TrisimError
from .dataio import (
    read_labeled_csv,
    read_weak_dataset,
    read_model,
    write_labeled_csv,
    write_model,
    write_sweep_csv,
    write_sweep_json,
    write_train_log_csv,
    write_triplets_jsonl,
    write_unlabeled_jsonl,
)
from .evaluation import accuracy, correction_sweep, fraction_sweep, prior_sweep
from .sampler import (
    GaussianSourceSpec,
    PoolSource,
    make_weak_dataset,
    synth_gaussian_labeled,
)
from .trainer import TrainConfig, train
from .verify import (
    VerifyReport,
    check_acceptance_rate,
    check_error_trend,
    check_gradients,
    check_matched_calibration,
    check_risk_identity,
    check_theta_system,
    default_gaussian_spec,
    run_bias_suite,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_CONFIG = 4
EXIT_VERIFY = 5


def _digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _write_manifest(subcommand, args, inputs, outputs, started) -> dict:
    manifest = {
        "subcommand": subcommand,
        "flags": {k: v for k, v in sorted(vars(args).items()) if k != "func"},
        "seed": getattr(args, "seed", None),
        "version": __version__,
        "inputs": {str(p): _digest(p) for p in inputs},
        "outputs": [str(p) for p in outputs],
        "duration_s": round(time.monotonic() - started, 3),
    }
    if outputs:
        Path(str(outputs[0]) + ".manifest.json").write_text(
            json.dumps(manifest, indent=2) + "\n"
        )
    print(json.dumps(manifest, indent=2))
    return manifest


def _float_list(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _int_list(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def _gaussian_spec(args) -> GaussianSourceSpec:
    dim = args.dim
    if getattr(args, "mu_plus", None) is not None:
        mu_plus = np.array(_float_list(args.mu_plus))
        mu_minus = np.array(_float_list(args.mu_minus))
    else:
        mu_plus = np.zeros(dim)
        mu_plus[0] = args.sep / 2.0
        mu_minus = -mu_plus
    return GaussianSourceSpec(
        dim=dim,
        mu_plus=mu_plus,
        mu_minus=mu_minus,
        sigma=args.sigma,
        prior=ClassPrior(args.pi),
    )


def cmd_synth(args) -> int:
    started = time.monotonic()
    pool = synth_gaussian_labeled(_gaussian_spec(args), args.n, args.seed)
    write_labeled_csv(args.out, pool)
    _write_manifest("synth", args, [], [args.out], started)
    return EXIT_OK


def cmd_make_weak(args) -> int:
    started = time.monotonic()
    pool = read_labeled_csv(args.input)
    prior = ClassPrior(args.pi) if args.pi is not None else None
    source = PoolSource(pool, prior=prior)
    data = make_weak_dataset(source, args.n_us, args.n_u, args.sampler, args.seed)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    triplets_path = out_dir / "triplets.jsonl"
    unlabeled_path = out_dir / "unlabeled.jsonl"
    write_triplets_jsonl(triplets_path, data.triplets)
    write_unlabeled_jsonl(unlabeled_path, data.unlabeled)
    _write_manifest(
        "make-weak", args, [args.input], [triplets_path, unlabeled_path], started
    )
    return EXIT_OK


def cmd_train(args) -> int:
    started = time.monotonic()
    prior = ClassPrior(args.pi)
    config = TrainConfig(
        prior=prior,
        loss=LossSpec(),
        correction=CorrectionKind(args.correction),
        estimator=args.estimator,
        epochs=args.epochs,
        batch_size=args.batch,
        lr=args.lr,
        weight_decay=args.weight_decay,
        model_kind=args.model,
        hidden=args.hidden,
        seed=args.seed,
    )
    data = read_weak_dataset(args.us, args.u, prior, sampler_kind=args.sampler)
    eval_set = read_labeled_csv(args.test) if args.test else None
    model, log = train(config, data, eval_set)
    echo = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    write_model(args.out, model, config_echo=echo)
    log_path = args.log or (args.out + ".log.csv")
    write_train_log_csv(log_path, log)
    inputs = [args.us, args.u] + ([args.test] if args.test else [])
    if eval_set is not None and log.records:
        print(f"final test accuracy: {log.records[-1].test_accuracy}")
    _write_manifest("train", args, inputs, [args.out, log_path], started)
    return EXIT_OK


def cmd_eval(args) -> int:
    started = time.monotonic()
    model = read_model(args.model)
    test = read_labeled_csv(args.test)
    payload = json.dumps({"accuracy": accuracy(model, test)})
    print(payload)
    outputs = []
    if args.out:
        Path(args.out).write_text(payload + "\n")
        outputs.append(args.out)
        _write_manifest("eval", args, [args.model, args.test], outputs, started)
    return EXIT_OK


SUITES = ("thetas", "identity", "acceptance", "bias", "matched", "gradients", "trend", "all")


def _run_suite(name: str, seed: int) -> VerifyReport:
    if name == "thetas":
        return check_theta_system()
    if name == "identity":
        return check_risk_identity(seed=seed)
    if name == "acceptance":
        return check_acceptance_rate(seed=seed)
    if name == "bias":
        return run_bias_suite(seed=seed)
    if name == "matched":
        return check_matched_calibration(seed=seed)
    if name == "gradients":
        return check_gradients(seed=seed)
    if name == "trend":
        return check_error_trend()
    reports = [_run_suite(s, seed) for s in SUITES[:-1]]
    return VerifyReport.merge(reports)


def cmd_verify(args) -> int:
    started = time.monotonic()
    report = _run_suite(args.suite, args.seed)
    text = report.to_json()
    print(text)
    if args.out:
        Path(args.out).write_text(text + "\n")
        _write_manifest("verify", args, [], [args.out], started)
    return EXIT_OK if report.assertable_passed else EXIT_VERIFY


def cmd_sweep(args) -> int:
    started = time.monotonic()
    spec = _gaussian_spec(args)
    config = TrainConfig(
        prior=spec.prior,
        correction=CorrectionKind(args.correction),
        estimator=args.estimator,
        epochs=args.epochs,
        batch_size=args.batch,
        lr=args.lr,
        weight_decay=args.weight_decay,
        model_kind=args.model,
        hidden=args.hidden,
        seed=args.seed,
    )
    seeds = _int_list(args.seeds)
    if args.kind == "prior":
        result = prior_sweep(
            spec.prior,
            _float_list(args.given),
            seeds,
            spec,
            config,
            args.n_us,
            args.n_u,
            args.n_test,
            args.sampler,
        )
    elif args.kind == "fraction":
        result = fraction_sweep(
            _float_list(args.fractions),
            seeds,
            spec,
            config,
            args.n_us,
            args.n_u,
            args.n_test,
            args.sampler,
        )
    else:
        result = correction_sweep(
            args.corrections.split(","),
            seeds,
            spec,
            config,
            args.n_us,
            args.n_u,
            args.n_test,
            args.sampler,
        )
    write_sweep_csv(args.out, result)
    outputs = [args.out]
    if args.json_out:
        write_sweep_json(args.json_out, result)
        outputs.append(args.json_out)
    _write_manifest("sweep", args, [], outputs, started)
    return EXIT_OK


def _add_source_flags(p, require_pi=True):
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--sep", type=float, default=4.0, help="mean separation in sigmas")
    p.add_argument("--mu-plus", help="comma-separated positive-class mean")
    p.add_argument("--mu-minus", help="comma-separated negative-class mean")
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--pi", type=float, required=require_pi, help="positive-class prior")


def _add_train_flags(p):
    p.add_argument("--model", choices=("linear", "mlp"), default="linear")
    p.add_argument("--hidden", type=int, default=64)
    p.add_argument("--correction", choices=[c.value for c in CorrectionKind], default="abs")
    p.add_argument(
        "--estimator",
        choices=("matched", "plain"),
        default="matched",
        help="similarity-term weighting: measure-matched or plain sample mean",
    )
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--weight-decay", type=float, default=1e-5)
    p.add_argument("--epochs", type=int, default=600)
    p.add_argument("--batch", type=int, default=2000)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trisim",
        description="Learn binary classifiers from uncertain-similarity "
        "triplets and unlabeled data.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("synth", help="generate a labeled Gaussian-mixture CSV")
    _add_source_flags(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--config", help="key=value config file; flags win")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("make-weak", help="build triplets + unlabeled pool from a labeled CSV")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--pi", type=float, help="declared prior (default: label counts)")
    p.add_argument("--n-us", type=int, required=True)
    p.add_argument("--n-u", type=int, required=True)
    p.add_argument("--sampler", choices=("rejection", "paper_case"), default="rejection")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--config")
    p.set_defaults(func=cmd_make_weak)

    p = sub.add_parser("train", help="train on weak data")
    p.add_argument("--us", required=True, help="triplets JSONL")
    p.add_argument("--u", required=True, help="unlabeled JSONL")
    p.add_argument("--pi", type=float, required=True)
    p.add_argument(
        "--sampler",
        choices=("rejection", "paper_case"),
        default="rejection",
        help="sampler that produced the triplets (sets the matched weights)",
    )
    _add_train_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--test", help="labeled CSV for held-out accuracy")
    p.add_argument("--out", required=True, help="model file path")
    p.add_argument("--log", help="train log CSV path (default: <out>.log.csv)")
    p.add_argument("--config")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a model file on a labeled CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--out")
    p.add_argument("--config")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("verify", help="run verification oracles")
    p.add_argument("--suite", choices=SUITES, default="all")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.add_argument("--config")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sweep", help="run an ablation sweep on synthetic data")
    p.add_argument("--kind", choices=("prior", "fraction", "correction"), required=True)
    _add_source_flags(p)
    _add_train_flags(p)
    p.add_argument("--given", default="", help="comma list of given priors (kind=prior)")
    p.add_argument("--fractions", default="0.1,0.25,0.5,1.0")
    p.add_argument("--corrections", default="none,max_zero,abs")
    p.add_argument("--seeds", default="0,1,2,3,4")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-us", type=int, default=2000)
    p.add_argument("--n-u", type=int, default=2000)
    p.add_argument("--n-test", type=int, default=2000)
    p.add_argument("--sampler", choices=("rejection", "paper_case"), default="paper_case")
    p.add_argument("--out", required=True)
    p.add_argument("--json-out")
    p.add_argument("--config")
    p.set_defaults(func=cmd_sweep)

    return parser


def _inject_config(argv: list[str]) -> list[str]:
    """Expand --config key=value files into flags placed before the
    explicit flags, so command-line values take precedence."""
    if "--config" not in argv:
        return argv
    idx = argv.index("--config")
    try:
        path = argv[idx + 1]
    except IndexError:
        return argv
    extra: list[str] = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition("=")
        extra.extend([f"--{key.strip().replace('_', '-')}", value.strip()])
    # argv[0] is the subcommand; config-derived flags go right after it
    return argv[:1] + extra + argv[1:]


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(_inject_config(argv))
        return args.func(args)
    except TrisimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
