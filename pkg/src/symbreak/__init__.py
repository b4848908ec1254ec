"""Symmetry breaking for end-to-end learned Gaussian phase retrieval.

The forward model y = |Ax|^2 maps sign-flipped (real) or phase-shifted
(complex) inputs to the same measurement, which wrecks naive end-to-end
regression.  This package provides the forward models, canonicalizing
preprocessors that break those symmetries, dataset tooling, small dense
networks and a K-NN baseline, rectified error metrics, and an experiment
harness that measures how much the preprocessing helps.
"""

from .dataset import Dataset, Split, apply_symmetry_breaking, canonicalize_subset, export_csv, generate, load, save, split
from .errors import (
    AllocationError,
    BadMagicError,
    ContractViolation,
    DivergenceError,
    ExperimentError,
    FileFormatError,
    NonFiniteDataError,
    TruncatedPayloadError,
    VersionMismatchError,
)
from .forward_model import Field, SensingMatrix, forward, forward_batch, make_sensing
from .harness import (
    ExperimentConfig,
    SweepSpec,
    demo_sqrt,
    load_reports,
    render_report_table,
    run_experiment,
    run_sweep,
)
from .learners import (
    ARCHITECTURES,
    AdamState,
    KnnModel,
    MlpModel,
    TrainConfig,
    adam_init,
    adam_step,
    count_parameters,
    knn_fit,
    knn_predict,
    layer_dims_for,
    load_model,
    mlp_forward,
    mlp_init,
    mlp_loss_and_grad,
    save_model,
    train,
)
from .metrics import EvalReport, epsilon_complex, epsilon_real, evaluate
from .numerics import (
    RngStream,
    complex_to_real_pair,
    gaussian,
    matvec,
    permutation,
    phase_shift,
    real_pair_to_complex,
    sample_unit_ball,
    unit_ball_batch,
)
from .symmetry import CanonResult, canonicalize, canonicalize_complex, canonicalize_real, is_representative

__version__ = "0.1.0"
