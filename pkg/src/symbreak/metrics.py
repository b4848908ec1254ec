"""Symmetry-rectified normalized mean squared error.

A prediction that lands anywhere on the true signal's symmetry orbit
scores zero: the real metric minimizes over the sign, the complex metric
over the global phase.  The complex minimum over the continuous phase has
a closed form, obtained by expanding ||x_hat e^(i*theta) - x||^2 and
maximizing the cross term:

    min_theta ||x_hat e^(i*theta) - x||^2
        = ||x_hat||^2 + ||x||^2 - 2 |<x_hat, x>|

with <u, v> = sum_k u_k conj(v_k).  A dense theta-grid search exists in
the test suite as the independent oracle for this formula.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field as dc_field

import numpy as np

from .dataset import Dataset, Split
from .errors import ContractViolation, ensure
from .forward_model import Field
from .learners import decode_predictions, predict_batch

KV_FIELDS = ("field", "n", "m", "model", "variant", "samples", "seed", "mean_error", "wall_seconds")


def epsilon_real(x_hat: np.ndarray, x: np.ndarray) -> float:
    """min over s in {+1, -1} of ||x_hat * s - x||^2 / n."""
    if x_hat.shape != x.shape:
        raise ContractViolation(f"length mismatch: {x_hat.shape} vs {x.shape}")
    d_plus = x_hat - x
    d_minus = x_hat + x
    return min(float(d_plus @ d_plus), float(d_minus @ d_minus)) / x.size


def epsilon_complex(x_hat: np.ndarray, x: np.ndarray) -> float:
    """min over theta in [0, 2*pi) of ||x_hat e^(i*theta) - x||^2 / n, in closed form."""
    if x_hat.shape != x.shape:
        raise ContractViolation(f"length mismatch: {x_hat.shape} vs {x.shape}")
    cross = np.vdot(x, x_hat)  # sum x_hat_k * conj(x_k)
    value = float(np.vdot(x_hat, x_hat).real + np.vdot(x, x).real - 2.0 * abs(cross))
    # the exact minimum is >= 0; rounding can leave a tiny negative residue
    return max(value, 0.0) / x.size


def rectified_error(field: Field, x_hat: np.ndarray, x: np.ndarray) -> float:
    """Field-appropriate rectified error."""
    if field is Field.COMPLEX:
        return epsilon_complex(x_hat, x)
    return epsilon_real(x_hat, x)


@dataclass
class EvalReport:
    """One run's evaluation record.

    ``mean_error`` is the arithmetic mean of ``per_sample``; the optional
    ``history`` carries the per-epoch (train, validation) loss curve of the
    run that produced the model.
    """

    field: Field
    n: int
    m: int
    model: str
    variant: str
    samples: int
    seed: int
    mean_error: float
    per_sample: np.ndarray
    wall_seconds: float
    history: list = dc_field(default_factory=list)

    def to_kv_text(self) -> str:
        values = {
            "field": self.field.value,
            "n": self.n,
            "m": self.m,
            "model": self.model,
            "variant": self.variant,
            "samples": self.samples,
            "seed": self.seed,
            "mean_error": repr(self.mean_error),
            "wall_seconds": repr(self.wall_seconds),
        }
        return "".join(f"{k}={values[k]}\n" for k in KV_FIELDS)

    def to_csv_row(self) -> str:
        return ",".join(
            [
                self.field.value,
                str(self.n),
                str(self.m),
                self.model,
                self.variant,
                str(self.samples),
                str(self.seed),
                repr(self.mean_error),
                repr(self.wall_seconds),
            ]
        )

    @property
    def config_key(self) -> tuple:
        return (self.field.value, self.n, self.m, self.model, self.variant, self.samples, self.seed)


CSV_HEADER = ",".join(KV_FIELDS)


def parse_kv_text(text: str) -> EvalReport:
    """Rebuild a report (without per-sample detail) from its key/value block."""
    pairs = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ContractViolation(f"malformed report line: {line!r}")
        key, value = line.split("=", 1)
        pairs[key.strip()] = value.strip()
    missing = [k for k in KV_FIELDS if k not in pairs]
    if missing:
        raise ContractViolation(f"report is missing keys: {', '.join(missing)}")
    return EvalReport(
        field=Field.parse(pairs["field"]),
        n=int(pairs["n"]),
        m=int(pairs["m"]),
        model=pairs["model"],
        variant=pairs["variant"],
        samples=int(pairs["samples"]),
        seed=int(pairs["seed"]),
        mean_error=float(pairs["mean_error"]),
        per_sample=np.empty(0),
        wall_seconds=float(pairs["wall_seconds"]),
    )


def evaluate(
    model,
    dataset: Dataset,
    split: Split,
    *,
    model_name: str,
    variant: str,
    history: list | None = None,
    wall_seconds: float | None = None,
) -> EvalReport:
    """Score a fitted model on the raw test partition.

    Predictions are made from the stored (never canonicalized) test
    measurements and scored with the field's rectified error; the report's
    mean is the arithmetic mean of the per-sample errors.
    """
    ensure(split.test_idx.size >= 1, "test partition is empty")
    started = time.perf_counter()
    field = dataset.field
    y_test = dataset.ys[split.test_idx]
    x_test = dataset.xs[split.test_idx]
    preds = decode_predictions(field, predict_batch(model, y_test))
    if preds.shape != x_test.shape:
        raise ContractViolation(f"prediction shape {preds.shape} does not match targets {x_test.shape}")
    errors = np.array(
        [rectified_error(field, preds[i], x_test[i]) for i in range(x_test.shape[0])]
    )
    elapsed = time.perf_counter() - started
    return EvalReport(
        field=field,
        n=dataset.sensing.n,
        m=dataset.sensing.m,
        model=model_name,
        variant=variant,
        samples=dataset.count,
        seed=dataset.seed,
        mean_error=float(errors.mean()),
        per_sample=errors,
        wall_seconds=elapsed if wall_seconds is None else wall_seconds,
        history=list(history) if history else [],
    )
