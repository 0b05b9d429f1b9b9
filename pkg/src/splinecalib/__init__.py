"""Spline-based probability calibration with Platt, isotonic and clipping baselines."""

from .calibrators import (
    ClippingCalibrator,
    IsotonicCalibrator,
    MulticlassCalibrator,
    PlattCalibrator,
    SplineCalibrator,
    SplineConfig,
    best_clipping,
    clip_probabilities,
    fit_isotonic,
    fit_multiclass,
    fit_platt,
    fit_spline_binary,
    predict_multiclass,
    predict_spline,
)
from .cv_pipeline import CalibratedModel, CvConfig, builtin_trainer, cross_validated_calibrate
from .data import (
    LabeledScores,
    MulticlassLabels,
    ProbabilityMatrix,
    load_labeled_scores,
    load_probability_matrix,
    write_probability_matrix,
    write_scores,
)
from .errors import CalibrationError
from .metrics import accuracy, brier_score, log_loss, reliability_bins
from .ridge_glm import fit_ridge_logistic, select_lambda_cv
from .serialization import load_calibrator, save_calibrator
from .spline_basis import KnotSet, natural_basis, select_knots
from .transforms import CompactLogitParams, choose_epsilon, compact_logit

__version__ = "0.1.0"
