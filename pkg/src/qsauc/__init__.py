"""qsauc: AUC maximization from positive, negative, and unlabeled data.

Training is quadruply stochastic: each step samples a positive batch, a
negative batch, an unlabeled batch, and a fresh block of random Fourier
frequencies, then takes one decayed gradient step. Models store one small
coefficient vector per iteration and regenerate the frequencies from seeds,
so memory never depends on the feature space and prediction reproduces the
trainer's arithmetic exactly.
"""

from .backend import active_backend, use_backend
from .data import (
    LabeledDataset,
    SemiSupervisedDataset,
    normalize_unit_interval,
    parse_libsvm,
    serialize_libsvm,
    split_semi,
    synth_gaussian,
)
from .evaluation import ConvergenceReport, CvGrid, auc, convergence_study, cross_validate
from .loss import SquarePairLoss, ZeroOneLoss, square_loss, zero_one_loss
from .model import CoefficientHistory, load, predict, predict_batch, save
from .oracle import (
    KernelModel,
    RiskReport,
    empirical_risks,
    exact_functional_gradient,
    kernel_model_scores,
    solve_fixed_feature,
    solve_kernel_closed_form,
)
from .rff import FrequencyBlock, feature_map, kernel_exact, sample_frequencies
from .trainer import (
    Hyperparams,
    ScheduleReport,
    TrainTrace,
    Triplet,
    coefficient_schedule_check,
    gradient_coefficient,
    sample_triplet,
    step_size,
    train,
)

__version__ = "0.1.0"
