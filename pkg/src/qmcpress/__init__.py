"""qmcpress: compress labeled datasets onto weighted digital nets.

A dataset of N labeled points in [0,1)^s is summarized by the b^m points of
a digital net together with two weight vectors, so that the squared-error
loss of any predictor (and anything differentiated through it) is evaluated
in O(b^m) instead of O(N), with empirically verifiable error decay.
"""

from ._kernels import backend_name
from .counting import bounded_compositions_count, combination_terms, indicator_K, indicator_K_d
from .data import DataSet, ingest_csv, ingest_mnist, synth_regression
from .digits import DigitVector, digits_of
from .netgen import (
    DigitalNet,
    GeneratingMatrices,
    build_matrices,
    default_nu,
    generate_net,
    interlace,
    load_direction_numbers,
    minimal_t,
    schedule_m,
    sobol_net,
    verified_net,
)
from .oracle import brute_force_weights, mu_alpha, phi_K, walsh_eval
from .predict_loss import (
    LossReport,
    Predictor,
    compressed_loss,
    exact_loss,
    least_squares_minimizers,
    loss_report,
    predict,
)
from .weights import (
    WeightSet,
    assemble_weights,
    assemble_weights_skipping,
    assemble_weights_streaming,
    compute_S,
    compute_T,
    extend_weights,
    load_weights,
    save_weights,
)

__version__ = "0.1.0"

__all__ = [
    "DataSet",
    "DigitVector",
    "DigitalNet",
    "GeneratingMatrices",
    "LossReport",
    "Predictor",
    "WeightSet",
    "assemble_weights",
    "assemble_weights_skipping",
    "assemble_weights_streaming",
    "backend_name",
    "bounded_compositions_count",
    "brute_force_weights",
    "build_matrices",
    "combination_terms",
    "compressed_loss",
    "compute_S",
    "compute_T",
    "default_nu",
    "digits_of",
    "exact_loss",
    "extend_weights",
    "generate_net",
    "indicator_K",
    "indicator_K_d",
    "ingest_csv",
    "ingest_mnist",
    "interlace",
    "least_squares_minimizers",
    "load_direction_numbers",
    "load_weights",
    "loss_report",
    "minimal_t",
    "mu_alpha",
    "phi_K",
    "predict",
    "save_weights",
    "schedule_m",
    "sobol_net",
    "synth_regression",
    "verified_net",
    "walsh_eval",
]
