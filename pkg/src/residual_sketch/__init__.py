"""Streaming sketches for low-rank and sparse residual norms.

Matrix side: a bilinear sketch ``S A T`` kept under turnstile updates, whose
rank-k tail estimates ``||A - A_k||_F``. Vector side: CountSketch candidate
selection plus frequency subtraction, estimating ``||x - x_k||_p^p`` for
``p > 2`` and returning the k-sparse recovery ``xhat_J``.
"""
from .errors import (
    IncompatibleStates,
    InvalidInput,
    InvalidSpec,
    NumericalFailure,
    ParseError,
    SketchError,
    UnsupportedP,
)
from .linalg import frobenius_norm, rank_k_residual, singular_values
from .transforms import (
    ComposedSketch,
    SeededSketch,
    SketchSpec,
    application_cost,
    apply_left,
    apply_right,
    build_sketch,
    compose,
    make_sketch,
    sketch_from_record,
    sketch_size,
)
from .bilinear import BilinearSketchState, batch_estimate, init, make_state
from .lp_backend import ExactLpBackend, LpEstimator
from .vector import (
    ResidualPipeline,
    TopKCandidates,
    VectorCountSketch,
    bucket_count,
    row_count,
)
from .datasets import Triplets, load_matrixmarket, load_uci_bow

__version__ = "0.1.0"
