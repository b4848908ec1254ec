"""Experiment orchestration: single runs, sweeps, the square-root demo,
and markdown report rendering.

A run is fully determined by its :class:`ExperimentConfig`: one seed drives
dataset generation, splitting, weight initialization, and batch shuffling
through separate fixed streams, so rerunning a config reproduces its report
bit-for-bit.  Variant "A" canonicalizes the training and validation targets
before fitting; variant "B" leaves them untouched.  Test data is never
canonicalized under either variant, mirroring deployment where the raw
measurement is all one has.
"""

from __future__ import annotations

import contextlib
import time
from dataclasses import dataclass, field as dc_field, replace
from pathlib import Path

import numpy as np

from . import dataset as ds
from .errors import ContractViolation, ExperimentError, ensure
from .forward_model import Field, SensingMatrix, forward_batch
from .learners import (
    TrainConfig,
    knn_fit,
    layer_dims_for,
    mlp_forward_batch,
    mlp_init,
    save_model,
    train,
)
from .metrics import EvalReport, evaluate, parse_kv_text
from .numerics import STREAM_SAMPLES, RngStream, unit_ball_batch
from .plots import sqrt_scatter_plot, sweep_plot, training_curve_plot

MODELS = ("nn", "wnn", "dnn", "knn")
VARIANTS = ("A", "B")
SWEEP_AXES = ("batch_size", "learning_rate", "regularization", "dimension", "samples")
DEFAULT_KNN_K = 5
REPORT_SUFFIX = ".report"


@dataclass
class ExperimentConfig:
    """Everything needed to reproduce one run."""

    field: Field
    n: int
    samples: int
    model: str = "nn"
    variant: str = "A"
    m: int | None = None
    train: TrainConfig = dc_field(default_factory=TrainConfig)
    seed: int = 0
    out_dir: Path | None = None

    def resolved_m(self) -> int:
        return 4 * self.n if self.m is None else self.m

    def validate(self) -> None:
        ensure(self.n >= 1, "n must be at least 1")
        ensure(self.resolved_m() >= self.n, "m must be at least n")
        ensure(self.samples >= 10, "need at least 10 samples")
        ensure(self.model in MODELS, f"unknown model {self.model!r}")
        ensure(self.variant in VARIANTS, f"unknown variant {self.variant!r}")
        self.train.validate()

    def run_name(self) -> str:
        return (
            f"{self.field.value}_n{self.n}_m{self.resolved_m()}_s{self.samples}"
            f"_{self.model}_{self.variant}_seed{self.seed}"
        )


@contextlib.contextmanager
def _stage(name: str):
    try:
        yield
    except ExperimentError:
        raise
    except Exception as exc:
        raise ExperimentError(name, exc) from exc


def _fit(cfg: ExperimentConfig, train_data: ds.Dataset, split: ds.Split):
    """Fit the configured model on (possibly canonicalized) training data."""
    if cfg.model == "knn":
        return knn_fit(train_data, split, k=DEFAULT_KNN_K), []
    dims = layer_dims_for(cfg.model, cfg.resolved_m(), cfg.n, cfg.field)
    model = mlp_init(dims, cfg.seed, field=cfg.field)
    train_cfg = replace(cfg.train, seed=cfg.seed)
    model, history = train(model, train_data, split, train_cfg)
    return model, history


def _persist(cfg: ExperimentConfig, report: EvalReport, model) -> None:
    if cfg.out_dir is None:
        return
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = cfg.run_name()
    (out / f"{stem}{REPORT_SUFFIX}").write_text(report.to_kv_text())
    if report.history:
        lines = ["epoch,train_loss,val_loss"]
        lines += [f"{i + 1},{t!r},{v!r}" for i, (t, v) in enumerate(report.history)]
        (out / f"{stem}_history.csv").write_text("\n".join(lines) + "\n")
        training_curve_plot(report.history, out / f"{stem}_history.svg")
    if model is not None and cfg.model != "knn":
        save_model(model, out / f"{stem}.gprm")


def run_experiment(cfg: ExperimentConfig, data: ds.Dataset | None = None) -> EvalReport:
    """Generate, split, preprocess, fit, and evaluate one configuration.

    ``data`` may carry a pre-generated raw dataset matching the config (as
    produced by the ``generate`` CLI subcommand); otherwise the dataset is
    generated here.  All randomness flows from ``cfg.seed``.
    """
    cfg.validate()
    started = time.perf_counter()
    m = cfg.resolved_m()
    with _stage("generate"):
        if data is None:
            data = ds.generate(cfg.field, cfg.n, m, cfg.samples, cfg.seed)
        else:
            ensure(data.field is cfg.field, "dataset field does not match config")
            ensure(data.sensing.n == cfg.n and data.sensing.m == m, "dataset dims do not match config")
            ensure(data.count == cfg.samples, "dataset size does not match config")
            ensure(not data.canonicalized, "experiments need a raw dataset; variant A canonicalizes internally")
    with _stage("split"):
        split = ds.split(data, cfg.seed)
    with _stage("preprocess"):
        if cfg.variant == "A":
            fit_idx = np.concatenate([split.train_idx, split.val_idx])
            train_data = ds.canonicalize_subset(data, fit_idx)
        else:
            train_data = data
        # test data must stay raw under both variants
        assert np.array_equal(
            train_data.xs[split.test_idx], data.xs[split.test_idx]
        ), "test partition was modified by preprocessing"
    with _stage("fit"):
        model, history = _fit(cfg, train_data, split)
    with _stage("evaluate"):
        report = evaluate(
            model,
            data,
            split,
            model_name=cfg.model,
            variant=cfg.variant,
            history=history,
            wall_seconds=time.perf_counter() - started,
        )
    with _stage("persist"):
        _persist(cfg, report, model)
    return report


@dataclass
class SweepSpec:
    """A base config plus one axis to vary."""

    base: ExperimentConfig
    axis: str
    values: list

    def validate(self) -> None:
        ensure(self.axis in SWEEP_AXES, f"unknown sweep axis {self.axis!r}")
        ensure(len(self.values) >= 1, "sweep needs at least one value")


def _config_for_value(base: ExperimentConfig, axis: str, value) -> ExperimentConfig:
    if axis == "batch_size":
        return replace(base, train=replace(base.train, batch_size=int(value)))
    if axis == "learning_rate":
        return replace(base, train=replace(base.train, learning_rate=float(value)))
    if axis == "regularization":
        return replace(base, train=replace(base.train, reg=str(value)))
    if axis == "dimension":
        # m tracks 4n along a dimension sweep
        return replace(base, n=int(value), m=None)
    if axis == "samples":
        return replace(base, samples=int(value))
    raise ContractViolation(f"unknown sweep axis {axis!r}")


def run_sweep(spec: SweepSpec) -> tuple[list, list]:
    """Run one experiment per axis value, sharing the base data seed.

    Per-point failures are recorded in the summary and do not stop the
    remaining points.  Returns (reports, rows) where rows are
    (value, status, mean_error_or_message, wall_seconds).  When the base
    config names an output directory, a summary CSV and a line plot of
    error against the axis are written there.
    """
    spec.validate()
    reports, rows = [], []
    for value in spec.values:
        try:
            cfg = _config_for_value(spec.base, spec.axis, value)
            report = run_experiment(cfg)
            reports.append(report)
            rows.append((value, "ok", report.mean_error, report.wall_seconds))
        except Exception as exc:  # keep sweeping; the row records the failure
            reports.append(None)
            rows.append((value, "error", str(exc), 0.0))
    if spec.base.out_dir is not None:
        out = Path(spec.base.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        stem = f"sweep_{spec.axis}_{spec.base.run_name()}"
        lines = [f"{spec.axis},status,mean_error,wall_seconds"]
        for value, status, payload, wall in rows:
            cell = repr(payload) if status == "ok" else '"' + str(payload).replace('"', "'") + '"'
            lines.append(f"{value},{status},{cell},{wall!r}")
        (out / f"{stem}.csv").write_text("\n".join(lines) + "\n")
        good = [(v, e) for (v, s, e, _) in rows if s == "ok"]
        if good:
            sweep_plot([v for v, _ in good], [e for _, e in good], spec.axis, out / f"{stem}.svg")
    return reports, rows


def _sqrt_dataset(sample_count: int, seed: int) -> ds.Dataset:
    """The 1-D pedagogical problem: A = [1], so y = x^2 on the unit interval."""
    sensing = SensingMatrix(field=Field.REAL, m=1, n=1, A=np.array([[1.0]]), seed=seed)
    xs = unit_ball_batch(RngStream(seed, STREAM_SAMPLES), sample_count, 1)
    ys = forward_batch(sensing, xs)
    return ds.Dataset(sensing=sensing, xs=xs, ys=ys, canonicalized=False, seed=seed)


def demo_sqrt(
    sample_count: int,
    with_breaking: bool,
    seed: int = 0,
    out_dir: Path | None = None,
    train_config: TrainConfig | None = None,
) -> EvalReport:
    """Learn the square root end to end, with or without sign breaking.

    With breaking, training targets become |x| (the 1-D canonical form), a
    smooth function of y; without, the targets keep their sampled signs and
    the regression target oscillates between the two square-root branches.
    Writes a scatter plot of predictions against y when an output directory
    is given.
    """
    ensure(sample_count >= 100, "demo needs at least 100 samples")
    started = time.perf_counter()
    data = _sqrt_dataset(sample_count, seed)
    split = ds.split(data, seed)
    variant = "A" if with_breaking else "B"
    if with_breaking:
        fit_idx = np.concatenate([split.train_idx, split.val_idx])
        train_data = ds.canonicalize_subset(data, fit_idx)
        assert (train_data.xs[fit_idx] >= 0.0).all(), "breaking must leave nonnegative targets"
    else:
        train_data = data
    model = mlp_init(layer_dims_for("nn", 1, 1, Field.REAL), seed, field=Field.REAL)
    cfg = train_config or TrainConfig()
    model, history = train(model, train_data, split, replace(cfg, seed=seed))
    report = evaluate(
        model,
        data,
        split,
        model_name="nn",
        variant=variant,
        history=history,
        wall_seconds=time.perf_counter() - started,
    )
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        tag = "with_breaking" if with_breaking else "no_breaking"
        (out / f"sqrt_demo_{tag}{REPORT_SUFFIX}").write_text(report.to_kv_text())
        preds = mlp_forward_batch(model, data.ys[split.test_idx])[:, 0]
        sqrt_scatter_plot(data.ys[split.test_idx][:, 0], preds, out / f"sqrt_demo_{tag}.svg")
    return report


_COLUMN_ORDER = [
    ("nn", "A"), ("nn", "B"),
    ("wnn", "A"), ("wnn", "B"),
    ("dnn", "A"), ("dnn", "B"),
    ("knn", "A"), ("knn", "B"),
]


def load_reports(paths, on_error=None) -> list:
    """Parse report files, skipping unreadable ones via the callback.

    Later files win on duplicate configs; ``on_error(path, exc)`` is called
    for each file that cannot be parsed, ``on_error(path, None)`` for a
    duplicate that displaces an earlier file.
    """
    by_key = {}
    order = []
    for path in paths:
        try:
            report = parse_kv_text(Path(path).read_text())
        except Exception as exc:
            if on_error is not None:
                on_error(path, exc)
            continue
        key = report.config_key
        if key in by_key and on_error is not None:
            on_error(path, None)
        if key not in by_key:
            order.append(key)
        by_key[key] = report
    return [by_key[k] for k in order]


def render_report_table(reports) -> str:
    """Markdown table: rows (field, n, samples), columns (model, variant).

    The best (lowest) error in each row is bolded.
    """
    ensure(len(reports) >= 1, "no readable reports to render")
    cols = [c for c in _COLUMN_ORDER if any((r.model, r.variant) == c for r in reports)]
    rows = {}
    for r in reports:
        rows.setdefault((r.field.value, r.n, r.samples), {})[(r.model, r.variant)] = r
    lines = [
        "| field | n | samples | " + " | ".join(f"{m.upper()}-{v}" for m, v in cols) + " |",
        "|---|---|---|" + "---|" * len(cols),
    ]
    for key in sorted(rows):
        field, n, samples = key
        cells = []
        errors = {c: rows[key][c].mean_error for c in cols if c in rows[key]}
        best = min(errors.values()) if errors else None
        for c in cols:
            if c not in rows[key]:
                cells.append("")
            else:
                err = rows[key][c].mean_error
                text = f"{err:.4g}"
                cells.append(f"**{text}**" if err == best else text)
        lines.append(f"| {field} | {n} | {samples} | " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"
