"""Command-line entry point.

Subcommands: train, synth, extract, match, sweep, verify. Every subcommand
accepts --config pointing at a flat key=value file; values there act as
defaults and explicit flags win. Unknown config keys are rejected before any
work starts, as are missing/invalid paths. Exit codes: 0 success, 1 for
validation problems (bad flags, bad config, missing inputs), 2 for failures
during the run. The effective configuration of every run is echoed to
<out>/manifest.json.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Sequence

from . import __version__
from .dynamics import SweepConfig, emit, sweep
from .fileio import atomic_write_json
from .interactions import decompose, save_decomposition
from .masking import compute_baseline, masked_output_table, save_table
from .model import (
    Dataset,
    ModelSpec,
    init_model,
    load_checkpoint,
    load_dataset_csv,
    save_dataset_csv,
    train,
)
from .saliency import ThresholdPolicy, aggregate_orders, extract_salient, match_generalization, save_report
from .sparsify import SparsifyConfig, sparsify
from .synthetic import gen_dataset, random_planted_spec, save_truth
from .verify import run_all

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2


class ValidationError(ValueError):
    """Bad arguments, config, or input paths; reported with exit code 1."""


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; the CLI contract wants 1.
    def error(self, message: str):
        self.print_usage(sys.stderr)
        raise SystemExit(EXIT_VALIDATION)


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_arch(text: str) -> tuple[int, ...]:
    try:
        dims = tuple(int(part) for part in text.split(","))
    except ValueError as exc:
        raise ValueError(f"architecture must be comma-separated integers: {text!r}") from exc
    if len(dims) < 2:
        raise ValueError("architecture needs at least input_dim and num_classes")
    return dims


@dataclass(frozen=True)
class Option:
    flag: str
    parse: Callable[[str], Any]
    default: Any = None
    required: bool = False
    help: str = ""
    is_flag: bool = False  # boolean toggle

    @property
    def dest(self) -> str:
        return self.flag.lstrip("-").replace("-", "_")


_COMMON = [Option("--config", str, help="key=value file supplying defaults for this subcommand")]

OPTIONS: dict[str, list[Option]] = {
    "train": [
        Option("--data", str, required=True, help="training dataset CSV"),
        Option("--arch", _parse_arch, required=True, help="layer sizes: input,hidden...,classes"),
        Option("--epochs", int, required=True, help="training epochs"),
        Option("--lr", float, default=0.05, help="SGD learning rate"),
        Option("--seed", int, default=0, help="init/shuffle seed"),
        Option("--ckpt-every", int, default=10, help="checkpoint period in epochs"),
        Option("--activation", str, default="relu", help="relu or tanh"),
        Option("--out", str, required=True, help="checkpoint output directory"),
    ],
    "synth": [
        Option("--n", int, required=True, help="number of input variables"),
        Option("--planted", int, required=True, help="number of planted AND terms"),
        Option("--or-terms", int, default=0, help="number of planted OR terms"),
        Option("--seed", int, default=0, help="generator seed"),
        Option("--bias", float, default=0.0, help="constant score offset"),
        Option("--noise-std", float, default=0.0, help="label log-odds noise"),
        Option("--num-train", int, default=256, help="training samples"),
        Option("--num-test", int, default=256, help="test samples"),
        Option("--out", str, required=True, help="output directory"),
    ],
    "extract": [
        Option("--ckpt", str, required=True, help="model checkpoint to analyze"),
        Option("--data", str, required=True, help="dataset CSV (baseline + samples)"),
        Option("--samples", int, default=8, help="number of samples (first K rows)"),
        Option("--sparsify-iters", int, default=5000, help="sparsifier iteration cap"),
        Option("--dump-tables", _parse_bool, default=False, is_flag=True,
               help="also write the raw masked-output tables"),
        Option("--out", str, required=True, help="output directory"),
    ],
    "match": [
        Option("--ckpt", str, required=True, help="analyzed model checkpoint"),
        Option("--base-ckpt", str, required=True, help="baseline model checkpoint"),
        Option("--data", str, required=True, help="dataset CSV (baseline + samples)"),
        Option("--samples", int, default=8, help="number of samples (first K rows)"),
        Option("--alpha", float, default=0.05, help="relative saliency threshold"),
        Option("--sparsify-iters", int, default=5000, help="sparsifier iteration cap"),
        Option("--out", str, required=True, help="output directory"),
    ],
    "sweep": [
        Option("--ckpt-dir", str, required=True, help="directory of ckpt_*.json files"),
        Option("--base-ckpt", str, required=True, help="baseline model checkpoint"),
        Option("--train", str, required=True, help="training dataset CSV"),
        Option("--test", str, required=True, help="test dataset CSV"),
        Option("--samples", int, default=20, help="analysis samples from the test split"),
        Option("--alpha", float, default=0.05, help="relative saliency threshold"),
        Option("--seed", int, default=0, help="analysis sample selection seed"),
        Option("--sparsify-iters", int, default=5000, help="sparsifier iteration cap"),
        Option("--jobs", int, default=0, help="worker processes (0 = all cores)"),
        Option("--out", str, required=True, help="output directory"),
    ],
    "verify": [
        Option("--n", int, default=8, help="table size for randomized checks"),
        Option("--trials", int, default=100, help="randomized trial count"),
        Option("--seed", int, default=0, help="randomized check seed"),
    ],
}


def build_parser() -> _Parser:
    parser = _Parser(prog="andolens", description=__doc__)
    parser.add_argument("--version", action="version", version=f"andolens {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)
    for name, options in OPTIONS.items():
        sub = subs.add_parser(name, help=None)
        for opt in _COMMON + options:
            if opt.is_flag:
                sub.add_argument(opt.flag, dest=opt.dest, action="store_const", const=True,
                                 default=None, help=opt.help)
            else:
                sub.add_argument(opt.flag, dest=opt.dest, type=str, default=None, help=opt.help)
    return parser


def _load_config_file(path: str) -> dict[str, str]:
    file = Path(path)
    if not file.is_file():
        raise ValidationError(f"config file not found: {path}")
    values: dict[str, str] = {}
    for lineno, raw in enumerate(file.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValidationError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, _, value = line.partition("=")
        values[key.strip().replace("-", "_")] = value.strip()
    return values


def resolve_options(command: str, args: argparse.Namespace) -> dict[str, Any]:
    """Merge flag > config > default; reject unknown config keys."""
    options = OPTIONS[command]
    by_dest = {opt.dest: opt for opt in options}
    config_raw: dict[str, str] = {}
    if args.config is not None:
        config_raw = _load_config_file(args.config)
        unknown = sorted(set(config_raw) - set(by_dest))
        if unknown:
            raise ValidationError(
                f"unknown config key(s) for {command}: {', '.join(unknown)}"
            )
    resolved: dict[str, Any] = {}
    for opt in options:
        raw_flag = getattr(args, opt.dest)
        if raw_flag is not None:
            value = raw_flag if opt.is_flag else _convert(opt, str(raw_flag))
        elif opt.dest in config_raw:
            value = _convert(opt, config_raw[opt.dest])
        elif opt.required:
            raise ValidationError(f"missing required flag {opt.flag} for {command}")
        else:
            value = opt.default
        resolved[opt.dest] = value
    return resolved


def _convert(opt: Option, text: str) -> Any:
    try:
        return opt.parse(text)
    except ValueError as exc:
        raise ValidationError(f"bad value for {opt.flag}: {exc}") from exc


def _require_file(path: str, what: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise ValidationError(f"{what} not found: {path}")
    return p


def _require_dir(path: str, what: str) -> Path:
    p = Path(path)
    if not p.is_dir():
        raise ValidationError(f"{what} not found: {path}")
    return p


def _write_manifest(out_dir: Path, command: str, opts: dict[str, Any]) -> None:
    manifest = {
        "command": command,
        "version": __version__,
        "options": {k: (str(v) if isinstance(v, Path) else v) for k, v in opts.items()},
    }
    atomic_write_json(out_dir / "manifest.json", manifest)


def _manifest_opts(opts: dict[str, Any]) -> dict[str, Any]:
    return {k: (list(v) if isinstance(v, tuple) else v) for k, v in opts.items()}


def cmd_train(opts: dict[str, Any]) -> int:
    data_path = _require_file(opts["data"], "dataset")
    dims = opts["arch"]
    out = Path(opts["out"])
    spec = ModelSpec(
        input_dim=dims[0],
        hidden_dims=tuple(dims[1:-1]),
        num_classes=dims[-1],
        seed=opts["seed"],
        activation=opts["activation"],
    )
    data = load_dataset_csv(data_path, role="train")
    if data.X.shape[1] != spec.input_dim:
        raise ValidationError(
            f"dataset has {data.X.shape[1]} features, architecture expects {spec.input_dim}"
        )
    if int(data.labels.max()) >= spec.num_classes:
        raise ValidationError("dataset labels exceed the architecture's class count")
    out.mkdir(parents=True, exist_ok=True)
    _write_manifest(out, "train", _manifest_opts(opts))
    model = init_model(spec)
    paths = train(
        model,
        data,
        epochs=opts["epochs"],
        lr=opts["lr"],
        checkpoint_every=opts["ckpt_every"],
        out_dir=out,
    )
    print(f"wrote {len(paths)} checkpoints to {out}; final train loss "
          f"{model.loss_history[-1][1]:.6f}")
    return EXIT_OK


def cmd_synth(opts: dict[str, Any]) -> int:
    out = Path(opts["out"])
    spec = random_planted_spec(
        n=opts["n"],
        num_and=opts["planted"],
        num_or=opts["or_terms"],
        bias=opts["bias"],
        noise_std=opts["noise_std"],
        num_train=opts["num_train"],
        num_test=opts["num_test"],
        seed=opts["seed"],
    )
    train_set, test_set, truth = gen_dataset(spec)
    out.mkdir(parents=True, exist_ok=True)
    _write_manifest(out, "synth", _manifest_opts(opts))
    save_dataset_csv(train_set, out / "train.csv")
    save_dataset_csv(test_set, out / "test.csv")
    save_truth(truth, out / "truth.json")
    print(f"wrote train.csv ({len(train_set)}), test.csv ({len(test_set)}), truth.json to {out}")
    return EXIT_OK


def _first_k_samples(data: Dataset, k: int):
    if k < 1:
        raise ValidationError("--samples must be >= 1")
    if k > len(data):
        raise ValidationError(f"--samples {k} exceeds dataset size {len(data)}")
    return [(data.X[i], int(data.labels[i]), f"sample_{i:04d}") for i in range(k)]


def cmd_extract(opts: dict[str, Any]) -> int:
    ckpt = _require_file(opts["ckpt"], "checkpoint")
    data_path = _require_file(opts["data"], "dataset")
    out = Path(opts["out"])
    model = load_checkpoint(ckpt)
    data = load_dataset_csv(data_path, role="train")
    config = SparsifyConfig(max_iters=opts["sparsify_iters"])
    baseline = compute_baseline(data)
    out.mkdir(parents=True, exist_ok=True)
    _write_manifest(out, "extract", _manifest_opts(opts))
    for x, label, sample_id in _first_k_samples(data, opts["samples"]):
        table = masked_output_table(model, x, label, baseline, sample_id)
        result = sparsify(table, config)
        save_decomposition(decompose(table, result.shift), out / f"decomp_{sample_id}.json")
        if opts["dump_tables"]:
            save_table(table, out / f"table_{sample_id}.json")
    print(f"wrote {opts['samples']} decompositions to {out}")
    return EXIT_OK


def cmd_match(opts: dict[str, Any]) -> int:
    ckpt = _require_file(opts["ckpt"], "checkpoint")
    base_ckpt = _require_file(opts["base_ckpt"], "baseline checkpoint")
    data_path = _require_file(opts["data"], "dataset")
    out = Path(opts["out"])
    model = load_checkpoint(ckpt)
    base_model = load_checkpoint(base_ckpt)
    data = load_dataset_csv(data_path, role="train")
    policy = ThresholdPolicy(mode="relative", alpha=opts["alpha"])
    config = SparsifyConfig(max_iters=opts["sparsify_iters"])
    baseline = compute_baseline(data)
    out.mkdir(parents=True, exist_ok=True)
    _write_manifest(out, "match", _manifest_opts(opts))
    reports = []
    for x, label, sample_id in _first_k_samples(data, opts["samples"]):
        table = masked_output_table(model, x, label, baseline, sample_id)
        decomp = decompose(table, sparsify(table, config).shift)
        base_table = masked_output_table(base_model, x, label, baseline, sample_id)
        base_decomp = decompose(base_table, sparsify(base_table, config).shift)
        salient, tau_v = extract_salient(decomp, policy)
        tau_base = policy.tau_for(base_decomp)
        report = match_generalization(salient, base_decomp, tau_base, sample_id, tau_v)
        save_report(report, out / f"report_{sample_id}.json")
        reports.append(report)
    agg = aggregate_orders(reports)
    atomic_write_json(
        out / "summary.json",
        {
            "num_samples": len(reports),
            "H_bar": agg.h_bar,
            "N_bar": agg.n_bar,
            "per_order": {
                str(k): {"count": c, "mean_g": g} for k, (c, g) in agg.per_order.items()
            },
        },
    )
    h_txt = "n/a" if agg.h_bar is None else f"{agg.h_bar:.3f}"
    print(f"matched {len(reports)} samples: H_bar {h_txt}, N_bar {agg.n_bar:.2f}")
    return EXIT_OK


def cmd_sweep(opts: dict[str, Any]) -> int:
    ckpt_dir = _require_dir(opts["ckpt_dir"], "checkpoint directory")
    base_ckpt = _require_file(opts["base_ckpt"], "baseline checkpoint")
    train_path = _require_file(opts["train"], "training dataset")
    test_path = _require_file(opts["test"], "test dataset")
    out = Path(opts["out"])
    checkpoints = sorted(ckpt_dir.glob("ckpt_*.json"))
    if not checkpoints:
        raise ValidationError(f"no ckpt_*.json files in {ckpt_dir}")
    data_train = load_dataset_csv(train_path, role="train")
    data_test = load_dataset_csv(test_path, role="test")
    config = SweepConfig(
        baseline_ckpt=base_ckpt,
        num_samples=opts["samples"],
        policy=ThresholdPolicy(mode="relative", alpha=opts["alpha"]),
        sparsify=SparsifyConfig(max_iters=opts["sparsify_iters"]),
        seed=opts["seed"],
    )
    jobs = opts["jobs"] if opts["jobs"] >= 1 else (os.cpu_count() or 1)
    out.mkdir(parents=True, exist_ok=True)
    _write_manifest(out, "sweep", _manifest_opts(opts))
    records = sweep(checkpoints, config, data_train, data_test, jobs=jobs)
    paths = emit(records, out)
    print(f"swept {len(records)} checkpoints; wrote {', '.join(p.name for p in paths)} to {out}")
    return EXIT_OK


def cmd_verify(opts: dict[str, Any]) -> int:
    results = run_all(n=opts["n"], trials=opts["trials"], seed=opts["seed"])
    failed = 0
    for res in results:
        status = "PASS" if res.passed else "FAIL"
        print(f"{status} {res.name}: {res.detail}")
        failed += 0 if res.passed else 1
    total = len(results)
    print(f"{total - failed}/{total} checks passed")
    if failed:
        raise RuntimeError(f"{failed} verification check(s) failed")
    return EXIT_OK


COMMANDS = {
    "train": cmd_train,
    "synth": cmd_synth,
    "extract": cmd_extract,
    "match": cmd_match,
    "sweep": cmd_sweep,
    "verify": cmd_verify,
}


def run(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.WARNING, format="%(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        opts = resolve_options(args.command, args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        return COMMANDS[args.command](opts)
    except ValueError as exc:
        # precondition violations (bad parameters, malformed inputs) are
        # validation failures; ValidationError and CheckpointFormatError land
        # here too.
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as exc:  # genuine runtime failures
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def main() -> None:
    raise SystemExit(run())


if __name__ == "__main__":
    main()
