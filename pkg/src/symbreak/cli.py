"""Command-line interface.

Subcommands: ``generate``, ``train``, ``eval``, ``sweep``, ``report``,
``demo-sqrt``.  Options may also come from a flat key=value config file
passed with ``--config``; explicit flags override file values.

Exit codes: 0 success, 2 usage error, 3 data error, 4 training divergence.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import dataset as ds
from .errors import (
    AllocationError,
    ContractViolation,
    DivergenceError,
    ExperimentError,
)
from .forward_model import Field
from .harness import (
    MODELS,
    SWEEP_AXES,
    VARIANTS,
    ExperimentConfig,
    SweepSpec,
    demo_sqrt,
    load_reports,
    render_report_table,
    run_experiment,
    run_sweep,
)
from .learners import REGULARIZERS, TrainConfig, knn_fit, load_model
from .metrics import evaluate

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_DIVERGED = 4


class UsageError(Exception):
    pass


# one row per option: dest, flag, converter, default, help
_OPTION_TABLE = {
    "field": ("--field", Field.parse, Field.REAL, "scalar field: real or complex"),
    "n": ("--n", int, 5, "signal dimension n"),
    "m": ("--m", int, None, "measurement dimension m (default 4*n)"),
    "samples": ("--samples", int, 20000, "number of (x, y) samples"),
    "seed": ("--seed", int, 0, "seed driving all randomness of the run"),
    "model": ("--model", str, "nn", f"learning model: {', '.join(MODELS)}"),
    "variant": ("--variant", str, "A", "A = break symmetry on train/val data, B = leave raw"),
    "epochs": ("--epochs", int, 100, "maximum training epochs"),
    "lr": ("--lr", float, 0.001, "Adam learning rate"),
    "batch_size": ("--batch-size", int, 128, "mini-batch size"),
    "patience": ("--patience", int, 10, "early-stopping patience in epochs"),
    "reg": ("--reg", str, "none", f"regularization scheme: {', '.join(REGULARIZERS)}"),
    "reg_lambda": ("--reg-lambda", float, 1e-4, "regularization strength"),
    "out": ("--out", Path, None, "output file (generate) or directory (other subcommands)"),
    "config": ("--config", Path, None, "key=value config file; flags override it"),
    "data": ("--data", Path, None, "existing GPRD dataset file"),
    "checkpoint": ("--checkpoint", Path, None, "GPRM model checkpoint"),
    "repeats": ("--repeats", int, 1, "run this many seeds (seed, seed+1, ...) and average"),
    "canonicalize": ("--canonicalize", None, False, "store canonicalized inputs"),
    "csv": ("--csv", Path, None, "also write a CSV export of the samples"),
    "axis": ("--axis", str, None, f"sweep axis: {', '.join(SWEEP_AXES)}"),
    "values": ("--values", str, None, "comma-separated axis values"),
}

_SUBCOMMAND_OPTS = {
    "generate": ["field", "n", "m", "samples", "seed", "canonicalize", "csv", "out", "config"],
    "train": ["field", "n", "m", "samples", "seed", "model", "variant", "epochs", "lr",
              "batch_size", "patience", "reg", "reg_lambda", "data", "repeats", "out", "config"],
    "eval": ["data", "checkpoint", "model", "variant", "seed", "out", "config"],
    "sweep": ["field", "n", "m", "samples", "seed", "model", "variant", "epochs", "lr",
              "batch_size", "patience", "reg", "reg_lambda", "axis", "values", "out", "config"],
    "report": ["out", "config"],
    "demo-sqrt": ["samples", "seed", "epochs", "lr", "batch_size", "patience", "out", "config"],
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="symbreak",
        description="Symmetry breaking for end-to-end learned Gaussian phase retrieval.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "generate": "generate a dataset and write it as a GPRD file",
        "train": "run an experiment end to end (generate or load data, fit, evaluate)",
        "eval": "evaluate an existing checkpoint (or refit K-NN) on a dataset file",
        "sweep": "run one experiment per value of a hyperparameter axis",
        "report": "render report files as a markdown comparison table",
        "demo-sqrt": "the 1-D learn-to-take-square-root demonstration, run both ways",
    }
    for name, opt_keys in _SUBCOMMAND_OPTS.items():
        p = sub.add_parser(name, help=helps[name])
        for key in opt_keys:
            flag, conv, _default, help_text = _OPTION_TABLE[key]
            if conv is None:
                p.add_argument(flag, dest=key, action="store_true", default=argparse.SUPPRESS, help=help_text)
            else:
                p.add_argument(flag, dest=key, type=conv, default=argparse.SUPPRESS, help=help_text)
        if name == "report":
            p.add_argument("paths", nargs="+", type=Path, help="report files to render")
    return parser


def _load_config_file(path: Path, allowed: list[str]) -> dict:
    if not path.exists():
        raise UsageError(f"config file not found: {path}")
    values = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        dest = key.replace("-", "_")
        if dest not in allowed:
            raise UsageError(f"{path}:{lineno}: unknown option {key!r} for this subcommand")
        flag, conv, _default, _help = _OPTION_TABLE[dest]
        try:
            values[dest] = (value.lower() in ("1", "true", "yes")) if conv is None else conv(value)
        except Exception as exc:
            raise UsageError(f"{path}:{lineno}: bad value for {key!r}: {exc}") from None
    return values


def _merge_options(args: argparse.Namespace) -> dict:
    command = args.command
    allowed = _SUBCOMMAND_OPTS[command]
    merged = {key: _OPTION_TABLE[key][2] for key in allowed}
    explicit = {k: v for k, v in vars(args).items() if k not in ("command", "paths")}
    provided = set(explicit)
    config_path = explicit.get("config")
    if config_path is not None:
        from_file = _load_config_file(config_path, allowed)
        merged.update(from_file)
        provided |= set(from_file)
    merged.update(explicit)
    merged["command"] = command
    merged["_provided"] = provided
    if hasattr(args, "paths"):
        merged["paths"] = args.paths
    return merged


def _require(opts: dict, key: str, why: str):
    if opts.get(key) is None:
        raise UsageError(f"--{key.replace('_', '-')} is required {why}")
    return opts[key]


def _train_config(opts: dict) -> TrainConfig:
    return TrainConfig(
        max_epochs=opts["epochs"],
        learning_rate=opts["lr"],
        patience=opts["patience"],
        batch_size=opts["batch_size"],
        reg=opts["reg"],
        reg_lambda=opts["reg_lambda"],
        seed=opts["seed"],
    )


def _experiment_config(opts: dict) -> ExperimentConfig:
    return ExperimentConfig(
        field=opts["field"],
        n=opts["n"],
        m=opts["m"],
        samples=opts["samples"],
        model=opts["model"],
        variant=opts["variant"],
        train=_train_config(opts),
        seed=opts["seed"],
        out_dir=opts["out"],
    )


def _print_report_line(report) -> None:
    print(
        f"{report.field.value} n={report.n} m={report.m} {report.model}-{report.variant} "
        f"samples={report.samples} seed={report.seed}: "
        f"mean rectified test error {report.mean_error:.6g} (wall {report.wall_seconds:.1f}s)"
    )


def _cmd_generate(opts: dict) -> int:
    out = _require(opts, "out", "to say where to write the dataset")
    data = ds.generate(opts["field"], opts["n"], opts["m"] or 4 * opts["n"], opts["samples"], opts["seed"])
    if opts["canonicalize"]:
        data = ds.apply_symmetry_breaking(data)
    ds.save(data, out)
    if opts["csv"] is not None:
        ds.export_csv(data, opts["csv"])
    print(f"wrote {data.count} {data.field.value} samples (n={data.sensing.n}, m={data.sensing.m}) to {out}")
    return EXIT_OK


def _cmd_train(opts: dict) -> int:
    cfg = _experiment_config(opts)
    data = ds.load(opts["data"]) if opts["data"] is not None else None
    errors = []
    for r in range(opts["repeats"]):
        run_cfg = replace(cfg, seed=cfg.seed + r, train=replace(cfg.train, seed=cfg.seed + r))
        report = run_experiment(run_cfg, data)
        _print_report_line(report)
        errors.append(report.mean_error)
    if opts["repeats"] > 1:
        print(f"mean over {opts['repeats']} seeds: {sum(errors) / len(errors):.6g}")
    return EXIT_OK


def _cmd_eval(opts: dict) -> int:
    data = ds.load(_require(opts, "data", "to name the dataset to evaluate on"))
    # the dataset's own seed reproduces the split of the run that made it
    seed = opts["seed"] if "seed" in opts["_provided"] else data.seed
    split = ds.split(data, seed)
    variant = opts["variant"]
    if opts["model"] == "knn":
        if data.canonicalized:
            raise ContractViolation("evaluation needs a raw dataset (test data must stay raw)")
        fit_data = data
        if variant == "A":
            fit_idx = np.concatenate([split.train_idx, split.val_idx])
            fit_data = ds.canonicalize_subset(data, fit_idx)
        model = knn_fit(fit_data, split)
        name = "knn"
    else:
        model = load_model(_require(opts, "checkpoint", "to name the model to evaluate"))
        name = opts["model"]
    report = evaluate(model, data, split, model_name=name, variant=variant)
    _print_report_line(report)
    if opts["out"] is not None:
        out = Path(opts["out"])
        out.mkdir(parents=True, exist_ok=True)
        stem = f"{report.field.value}_n{report.n}_m{report.m}_s{report.samples}_{name}_{variant}_seed{seed}"
        (out / f"{stem}.report").write_text(report.to_kv_text())
    return EXIT_OK


def _parse_axis_values(axis: str, text: str) -> list:
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if axis in ("batch_size", "dimension", "samples"):
        return [int(p) for p in parts]
    if axis == "learning_rate":
        return [float(p) for p in parts]
    return parts


def _cmd_sweep(opts: dict) -> int:
    axis = _require(opts, "axis", "to say which hyperparameter to sweep")
    values = _parse_axis_values(axis, _require(opts, "values", "to list the axis values"))
    spec = SweepSpec(base=_experiment_config(opts), axis=axis, values=values)
    reports, rows = run_sweep(spec)
    for value, status, payload, _wall in rows:
        if status == "ok":
            print(f"{axis}={value}: mean rectified test error {payload:.6g}")
        else:
            print(f"{axis}={value}: FAILED ({payload})", file=sys.stderr)
    return EXIT_OK if any(status == "ok" for _, status, _, _ in rows) else EXIT_DATA


def _cmd_report(opts: dict) -> int:
    def on_error(path, exc):
        if exc is None:
            print(f"warning: duplicate config in {path}; later file wins", file=sys.stderr)
        else:
            print(f"warning: skipping unreadable report {path}: {exc}", file=sys.stderr)

    reports = load_reports(opts["paths"], on_error=on_error)
    if not reports:
        print("error: no readable report files", file=sys.stderr)
        return EXIT_DATA
    table = render_report_table(reports)
    if opts["out"] is not None:
        Path(opts["out"]).write_text(table)
    else:
        print(table, end="")
    return EXIT_OK


def _cmd_demo_sqrt(opts: dict) -> int:
    train_cfg = TrainConfig(
        max_epochs=opts["epochs"],
        learning_rate=opts["lr"],
        patience=opts["patience"],
        batch_size=opts["batch_size"],
    )
    with_breaking = demo_sqrt(
        opts["samples"], True, seed=opts["seed"], out_dir=opts["out"], train_config=train_cfg
    )
    without = demo_sqrt(
        opts["samples"], False, seed=opts["seed"], out_dir=opts["out"], train_config=train_cfg
    )
    _print_report_line(with_breaking)
    _print_report_line(without)
    ratio = without.mean_error / max(with_breaking.mean_error, 1e-300)
    print(f"breaking improves the error {ratio:.1f}x")
    return EXIT_OK


_HANDLERS = {
    "generate": _cmd_generate,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "sweep": _cmd_sweep,
    "report": _cmd_report,
    "demo-sqrt": _cmd_demo_sqrt,
}


def _exit_code_for(exc: BaseException) -> int:
    seen = exc
    while seen is not None:
        if isinstance(seen, DivergenceError):
            return EXIT_DIVERGED
        seen = seen.__cause__
    return EXIT_DATA


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        opts = _merge_options(args)
        return _HANDLERS[args.command](opts)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ContractViolation, OSError, AllocationError) as exc:
        # FileFormatError subclasses OSError, so this also catches bad files
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ExperimentError, DivergenceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _exit_code_for(exc)


if __name__ == "__main__":
    sys.exit(main())
