"""Antenna-array extrapolation for super-resolution DoA estimation.

Learns a coupled dictionary pair mapping the receive signal of a small MIMO
radar ULA to that of a larger one, predicts the large-array signal from
small-array measurements and evaluates the gain with MUSIC under seeded
Monte-Carlo simulation.
"""

from .radar_model import (
    ArrayConfig,
    ReceivedSignal,
    TargetScene,
    draw_rcs,
    steering_vector,
    synth_coupled,
    synth_received,
    virtual_steering,
)
from .sparse_coding import Dictionary, SparseCodeMatrix, lasso, odl_train, reconstruction_error
from .coupled_dict import (
    DictionaryPair,
    GridDictionaryBank,
    NormalizationStats,
    complex_to_real_samples,
    preprocess,
    real_to_complex_samples,
    select_lambda,
    train_coupled,
    train_grid_bank,
)
from .prediction import PredictionConfig, PredictionResult, predict_high, refine_once, select_grid
from .music import DoaEstimate, MusicSpectrum, estimate_doa, music_spectrum, noise_subspace, sample_covariance
from .evaluation import (
    ResultsTable,
    ScenarioConfig,
    TrialResult,
    load_config,
    make_test_scene,
    persist_results,
    rmse,
    run_monte_carlo,
    run_trial,
)

__version__ = "0.1.0"
