import numpy as np
import pytest

from symbreak.dataset import generate
from symbreak.errors import ExperimentError
from symbreak.forward_model import Field
from symbreak.harness import (
    ExperimentConfig,
    SweepSpec,
    _sqrt_dataset,
    demo_sqrt,
    load_reports,
    render_report_table,
    run_experiment,
    run_sweep,
)
from symbreak.learners import TrainConfig
from symbreak.metrics import EvalReport
from symbreak.numerics import RngStream, unit_ball_batch

SEED0 = 1357


def _tiny_cfg(**overrides):
    base = dict(
        field=Field.REAL,
        n=3,
        samples=400,
        model="nn",
        variant="A",
        seed=SEED0,
        train=TrainConfig(max_epochs=2, seed=SEED0),
    )
    base.update(overrides)
    return ExperimentConfig(**base)


def test_run_experiment_smoke_and_artifacts(tmp_path):
    cfg = _tiny_cfg(out_dir=tmp_path)
    report = run_experiment(cfg)
    assert report.field is Field.REAL
    assert (report.n, report.m, report.model, report.variant) == (3, 12, "nn", "A")
    assert report.samples == 400 and report.seed == SEED0
    assert len(report.history) == 2
    stem = cfg.run_name()
    assert (tmp_path / f"{stem}.report").exists()
    assert (tmp_path / f"{stem}_history.csv").exists()
    assert (tmp_path / f"{stem}_history.svg").exists()
    assert (tmp_path / f"{stem}.gprm").exists()


def test_run_experiment_reproducible():
    a = run_experiment(_tiny_cfg())
    b = run_experiment(_tiny_cfg())
    assert a.mean_error == b.mean_error
    assert (a.per_sample == b.per_sample).all()


def test_run_experiment_accepts_pregenerated_data():
    cfg = _tiny_cfg()
    data = generate(cfg.field, cfg.n, cfg.resolved_m(), cfg.samples, cfg.seed)
    with_data = run_experiment(cfg, data)
    without = run_experiment(_tiny_cfg())
    assert with_data.mean_error == without.mean_error


def test_variants_share_identical_raw_data():
    # the two variants differ only in preprocessing; the generated raw
    # datasets are bit-identical for a shared seed
    cfg_a, cfg_b = _tiny_cfg(variant="A"), _tiny_cfg(variant="B")
    d1 = generate(cfg_a.field, cfg_a.n, cfg_a.resolved_m(), cfg_a.samples, cfg_a.seed)
    d2 = generate(cfg_b.field, cfg_b.n, cfg_b.resolved_m(), cfg_b.samples, cfg_b.seed)
    assert (d1.xs == d2.xs).all() and (d1.ys == d2.ys).all()
    # and both runs evaluate on that raw test data
    ra, rb = run_experiment(cfg_a, d1), run_experiment(cfg_b, d2)
    assert ra.samples == rb.samples


def test_run_experiment_knn():
    report = run_experiment(_tiny_cfg(model="knn"))
    assert report.model == "knn" and report.history == []


def test_run_experiment_rejects_mismatched_data():
    cfg = _tiny_cfg()
    wrong = generate(cfg.field, cfg.n, cfg.resolved_m(), cfg.samples + 1, cfg.seed)
    with pytest.raises(ExperimentError) as err:
        run_experiment(cfg, wrong)
    assert err.value.stage == "generate"


def test_run_experiment_complex_smoke():
    report = run_experiment(_tiny_cfg(field=Field.COMPLEX, variant="B"))
    assert report.field is Field.COMPLEX
    assert report.mean_error >= 0.0


# --- sweeps ------------------------------------------------------------------------

def test_sweep_runs_points_and_records_failures(tmp_path):
    base = _tiny_cfg(out_dir=tmp_path, variant="B")
    spec = SweepSpec(base=base, axis="batch_size", values=[64, -5, 128])
    reports, rows = run_sweep(spec)
    statuses = [status for _, status, _, _ in rows]
    assert statuses == ["ok", "error", "ok"]
    assert reports[1] is None and reports[0] is not None
    csvs = list(tmp_path.glob("sweep_batch_size_*.csv"))
    svgs = list(tmp_path.glob("sweep_batch_size_*.svg"))
    assert len(csvs) == 1 and len(svgs) == 1
    body = csvs[0].read_text()
    assert body.splitlines()[0] == "batch_size,status,mean_error,wall_seconds"
    assert ",error," in body


def test_sweep_dimension_axis_retargets_m():
    base = _tiny_cfg(variant="B")
    spec = SweepSpec(base=base, axis="dimension", values=[2, 4])
    reports, rows = run_sweep(spec)
    assert [r.m for r in reports] == [8, 16]


def test_sweep_regularization_axis():
    base = _tiny_cfg(variant="B")
    spec = SweepSpec(base=base, axis="regularization", values=["l1", "l2"])
    reports, _ = run_sweep(spec)
    assert all(r is not None for r in reports)


# --- square-root demo -----------------------------------------------------------------

def test_sqrt_dataset_is_pure_square():
    data = _sqrt_dataset(200, seed=3)
    assert data.sensing.A.tolist() == [[1.0]]
    assert np.allclose(data.ys[:, 0], data.xs[:, 0] ** 2, rtol=0, atol=0)


def test_lookup_table_oracle_meets_demo_threshold():
    # dense lookup table for sqrt: the regression target after breaking is
    # smooth enough that even linear interpolation beats the 1e-3 bar
    grid_x = np.linspace(0.0, 1.0, 2001)
    grid_y = grid_x**2
    xs = unit_ball_batch(RngStream(SEED0, 1), 10_000, 1)[:, 0]
    ys = xs**2
    preds = np.interp(ys, grid_y, grid_x)
    rectified = np.minimum((preds - xs) ** 2, (preds + xs) ** 2)
    assert rectified.mean() <= 1e-3


def test_demo_sqrt_tiny_run(tmp_path):
    cfg = TrainConfig(max_epochs=2, seed=1)
    report = demo_sqrt(500, True, seed=1, out_dir=tmp_path, train_config=cfg)
    assert report.n == 1 and report.m == 1 and report.variant == "A"
    assert (tmp_path / "sqrt_demo_with_breaking.report").exists()
    assert (tmp_path / "sqrt_demo_with_breaking.svg").exists()
    report_b = demo_sqrt(500, False, seed=1, out_dir=tmp_path, train_config=cfg)
    assert report_b.variant == "B"
    assert (tmp_path / "sqrt_demo_no_breaking.svg").exists()


# --- report table -----------------------------------------------------------------------

def _mk_report(model, variant, err, **overrides):
    fields = dict(
        field=Field.REAL, n=5, m=20, model=model, variant=variant, samples=100,
        seed=1, mean_error=err, per_sample=np.array([err]), wall_seconds=0.1,
    )
    fields.update(overrides)
    return EvalReport(**fields)


def test_render_table_single_row_three_cells():
    reports = [
        _mk_report("nn", "A", 0.001),
        _mk_report("nn", "B", 0.03),
        _mk_report("knn", "A", 0.002),
    ]
    table = render_report_table(reports)
    lines = table.splitlines()
    assert lines[0] == "| field | n | samples | NN-A | NN-B | KNN-A |"
    assert len(lines) == 3
    assert "**0.001**" in lines[2]  # best in row is bolded
    assert "0.03" in lines[2]


def test_render_table_groups_rows():
    reports = [
        _mk_report("nn", "A", 0.001),
        _mk_report("nn", "A", 0.002, n=10, m=40),
    ]
    table = render_report_table(reports)
    assert len(table.splitlines()) == 4


def test_load_reports_duplicates_and_errors(tmp_path):
    good1 = tmp_path / "a.report"
    good1.write_text(_mk_report("nn", "A", 0.5).to_kv_text())
    dup = tmp_path / "b.report"
    dup.write_text(_mk_report("nn", "A", 0.25).to_kv_text())
    bad = tmp_path / "c.report"
    bad.write_text("this is not a report\n")
    events = []
    reports = load_reports([good1, dup, bad], on_error=lambda p, e: events.append((p, e)))
    assert len(reports) == 1
    assert reports[0].mean_error == 0.25  # later file wins
    kinds = [(p.name, e is None) for p, e in events]
    assert ("b.report", True) in kinds  # duplicate warning
    assert any(name == "c.report" and not is_dup for name, is_dup in kinds)
