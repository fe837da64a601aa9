"""Distill orthogonal wavelet filter banks from a trained regressor.

The package learns lowpass/highpass filter pairs by jointly minimizing
reconstruction error, soft wavelet-validity penalties, and the l1 norm of
the teacher model's attributions in the coefficient domain, then
evaluates the result through groundtruth recovery, compression, and a
peak-counting classifier.
"""

from .backend import BACKEND_NAME
from .constraints import (
    PenaltyBreakdown,
    penalty_grad,
    sparsity_term,
    wavelet_loss,
    wavelet_penalties,
)
from .distill import (
    DistillConfig,
    RunRecord,
    distill,
    distill_grad,
    distill_loss,
    select_best,
    sweep,
)
from .evalkit import (
    WaveletCurve,
    activation_map,
    cascade,
    compression_rate,
    linear_head_fit,
    max_coeff_features,
    wavelet_distance,
)
from .filters import (
    FilterPair,
    derive_highpass,
    load_filter,
    make_pair,
    perturb,
    save_filter,
    standard_bank,
)
from .nnet import (
    TeacherModel,
    TrainConfig,
    forward,
    grad_of_grad,
    init_teacher,
    input_grad,
    train,
)
from .attribution import (
    AttributionMap,
    reparam_forward,
    saliency,
    saliency_grad_filters,
)
from .peakcount import (
    ClassModel,
    PeakFilter,
    PeakHistogram,
    classify,
    extract_subfilters,
    find_peaks,
    fit_classes,
    histogram,
    steepness,
)
from .synth import SynthSpec, generate, recovery_experiment
from .transform import (
    TransformConfig,
    WaveletCoeffs,
    dwt1d,
    dwt2d,
    dwt_grad,
    idwt1d,
    idwt2d,
)

__version__ = "0.1.0"
