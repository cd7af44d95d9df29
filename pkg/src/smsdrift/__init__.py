"""Semiparametric drift estimation for sequences of sparse images."""
from .drift_models import DriftFamily, DriftParams, evaluate_drift, round_drift, drift_gradient
from .frames import FrameStack, LocalizationTable, bin_localizations, superimpose
from .spectral import SpectralStack, dft2, phase_shift, reconstruct_image, binned_spectra
from .contrast import ContrastConfig, tilde_contrast, full_contrast, population_contrast
from .estimator import OptimizerConfig, EstimationResult, estimate, reconstruct, track_fiducial
from .simulate import (NoiseModel, SimulationSpec, simulate_stack, sample_times, variance_stabilize,
                       make_test_image, simulate_localizations, random_spectrum)
from .blur import gauss_smooth, sobel_gradient, motion_blur_m2, motion_blur_known_direction
from .bootstrap import BootstrapBands, residuals, bootstrap_bands, bootstrap_average_image
from .asymptotics import (CovariancePair, linear_drift_covariances, clt_covariance,
                          is_directionally_constant)

__version__ = "0.1.0"
