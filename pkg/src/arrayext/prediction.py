"""Predict the large-array receive signal from a small-array measurement by
iterative coupled sparse coding, plus dictionary-grid selection.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .coupled_dict import (
    DictionaryPair,
    GridDictionaryBank,
    complex_to_real_samples,
    denormalize,
    preprocess,
    real_to_complex_samples,
)
from .music import estimate_doa
from .radar_model import ReceivedSignal
from .sparse_coding import SparseCodeMatrix, lasso


@dataclass
class PredictionConfig:
    """Knobs of the iterative prediction loop."""

    lam: float = 0.01
    max_refine_iters: int = 10
    convergence_tol: float = 1e-4
    lasso_tol: float = 1e-8
    lasso_max_iter: int = 500

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError("lam must be positive")
        if self.max_refine_iters < 1:
            raise ValueError("max_refine_iters must be >= 1")


@dataclass
class PredictionResult:
    """Predicted high-array signal plus a loop log."""

    signal: ReceivedSignal
    n_iterations: int
    objectives: list[float] = field(default_factory=list)
    grid: tuple[float, float] | None = None


def refine_once(
    y_low_norm: np.ndarray,
    y_high_pred: np.ndarray,
    pair: DictionaryPair,
    lam: float,
    tol: float = 1e-8,
    max_iter: int = 500,
) -> tuple[np.ndarray, SparseCodeMatrix]:
    """One joint coding step on the stacked [measured low; current prediction].

    Returns the refreshed prediction d_high @ W and the joint code.
    """
    stacked_dict = pair.stacked()
    target = np.vstack([y_low_norm, y_high_pred])
    code = lasso(stacked_dict, target, lam, tol=tol, max_iter=max_iter)
    return pair.d_high.atoms @ code.codes, code


def predict_high(
    y_low_test: ReceivedSignal,
    pair: DictionaryPair,
    cfg: PredictionConfig | None = None,
) -> PredictionResult:
    """Map a low-array measurement to the high-array signal shape.

    Pre-processes the low signal column-wise, codes it against d_low, then
    alternates joint re-coding of [normalized low; current prediction]
    against the stacked pair with re-prediction through d_high, until the
    relative Frobenius change drops below convergence_tol or
    max_refine_iters is reached. The result is de-normalized with the exact
    statistics computed from the test low signal.
    """
    cfg = cfg or PredictionConfig()
    if y_low_test.config.n_virtual != pair.low_config.n_virtual:
        raise ValueError(
            f"signal has {y_low_test.config.n_virtual} virtual elements, "
            f"pair expects {pair.low_config.n_virtual}"
        )
    low_real = complex_to_real_samples(y_low_test)
    low_norm, _, stats = preprocess(low_real)

    code = lasso(pair.d_low, low_norm, cfg.lam, tol=cfg.lasso_tol, max_iter=cfg.lasso_max_iter)
    y_high = pair.d_high.atoms @ code.codes

    objectives: list[float] = []
    n_iter = 0
    for n_iter in range(1, cfg.max_refine_iters + 1):
        y_new, code = refine_once(
            low_norm, y_high, pair, cfg.lam, tol=cfg.lasso_tol, max_iter=cfg.lasso_max_iter
        )
        stacked = np.vstack([low_norm, y_high])
        resid = stacked - pair.stacked().atoms @ code.codes
        objectives.append(float(np.sum(resid * resid) + cfg.lam * np.sum(np.abs(code.codes))))
        change = np.linalg.norm(y_new - y_high) / max(np.linalg.norm(y_high), 1e-300)
        y_high = y_new
        if change < cfg.convergence_tol:
            break

    restored = denormalize(y_high, stats)
    data = real_to_complex_samples(restored)
    if not np.all(np.isfinite(data)):
        raise FloatingPointError("prediction produced non-finite values")
    signal = ReceivedSignal(data=data, config=pair.high_config, snr_db=y_low_test.snr_db)
    return PredictionResult(
        signal=signal, n_iterations=n_iter, objectives=objectives, grid=pair.grid
    )


def select_grid(
    y_low_test: ReceivedSignal,
    bank: GridDictionaryBank,
    k: int,
    angle_grid: np.ndarray | None = None,
) -> DictionaryPair:
    """Pick the pair whose grid center is nearest the low-array DoA estimate.

    Uses the median of the k MUSIC estimates on the low signal; ties break
    toward the lower grid. When MUSIC cannot produce k peaks, falls back to
    the grid containing the strongest single peak (nearest center if no grid
    contains it).
    """
    if len(bank.pairs) == 1:
        return bank.pairs[0]
    est = estimate_doa(y_low_test, k, angle_grid)
    pairs = sorted(bank.pairs, key=lambda p: p.grid)
    if est.degraded:
        strongest = float(est.spectrum.angles_deg[np.argmax(est.spectrum.values)])
        containing = [p for p in pairs if p.grid[0] <= strongest <= p.grid[1]]
        if containing:
            return containing[0]
        return min(pairs, key=lambda p: abs(p.grid_center - strongest))
    median = float(np.median(est.angles_deg))
    return min(pairs, key=lambda p: abs(p.grid_center - median))
