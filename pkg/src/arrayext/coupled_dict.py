"""Coupled dictionary pairs: one sparse code shared between the receive
signals of a small and a large array, with the column-wise pre-processing
protocol and per-angle-grid dictionary banks.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .radar_model import (
    ArrayConfig,
    ReceivedSignal,
    TargetScene,
    draw_rcs,
    synth_coupled,
)
from .sparse_coding import Dictionary, OdlLog, lasso, odl_train

ATOM_NORM_TOL = 1e-8


class DegenerateColumnError(ValueError):
    """A training/test column has zero norm after mean removal."""


def complex_to_real_samples(signal: ReceivedSignal | np.ndarray) -> np.ndarray:
    """Stack real parts above imaginary parts per column: (2r, c) from (r, c)."""
    data = signal.data if isinstance(signal, ReceivedSignal) else np.atleast_2d(np.asarray(signal))
    return np.vstack([data.real, data.imag])


def real_to_complex_samples(samples: np.ndarray) -> np.ndarray:
    """Inverse of complex_to_real_samples."""
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    if samples.shape[0] % 2:
        raise ValueError("row count must be even")
    half = samples.shape[0] // 2
    return samples[:half] + 1j * samples[half:]


@dataclass
class NormalizationStats:
    """Per-column mean and scale, both derived from the low signal only."""

    col_means: np.ndarray
    col_scales: np.ndarray

    def __post_init__(self):
        self.col_means = np.asarray(self.col_means, dtype=float)
        self.col_scales = np.asarray(self.col_scales, dtype=float)
        if np.any(self.col_scales <= 0):
            raise ValueError("col_scales must be strictly positive")


def preprocess(
    y_low: np.ndarray, y_high: np.ndarray | None = None
) -> tuple[np.ndarray, np.ndarray | None, NormalizationStats]:
    """Column-wise mean removal and normalization, statistics from y_low.

    Each low column gets its scalar mean subtracted and is scaled to unit
    Euclidean norm; high columns (when given) get the same per-column mean
    and scale applied, bringing the pair to a common scale.
    """
    y_low = np.atleast_2d(np.asarray(y_low, dtype=float))
    means = y_low.mean(axis=0)
    centered = y_low - means
    scales = np.linalg.norm(centered, axis=0)
    if np.any(scales < 1e-12):
        bad = int(np.flatnonzero(scales < 1e-12)[0])
        raise DegenerateColumnError(f"column {bad} has zero norm after mean removal")
    low_norm = centered / scales
    high_norm = None
    if y_high is not None:
        y_high = np.atleast_2d(np.asarray(y_high, dtype=float))
        if y_high.shape[1] != y_low.shape[1]:
            raise ValueError("y_low and y_high must have equal column counts")
        high_norm = (y_high - means) / scales
    return low_norm, high_norm, NormalizationStats(col_means=means, col_scales=scales)


def denormalize(samples: np.ndarray, stats: NormalizationStats) -> np.ndarray:
    """Invert preprocess on a matrix with the same column count."""
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    if samples.shape[1] != stats.col_scales.size:
        raise ValueError("column count does not match the normalization statistics")
    return samples * stats.col_scales + stats.col_means


@dataclass
class DictionaryPair:
    """Coupled dictionaries for one angle grid.

    d_low has 2*low.n_virtual rows, d_high 2*high.n_virtual rows; their
    vertical concatenation has unit-norm atoms (the blocks individually do
    not). grid is the (lo, hi) training interval in degrees.
    """

    d_low: Dictionary
    d_high: Dictionary
    grid: tuple[float, float]
    lambda_train: float
    low_config: ArrayConfig
    high_config: ArrayConfig
    train_error: float | None = None
    train_seed: int | None = None

    def __post_init__(self):
        if self.d_low.n_atoms != self.d_high.n_atoms:
            raise ValueError("d_low and d_high must have the same atom count")
        lo, hi = self.grid
        if not (0.0 <= lo < hi <= 90.0):
            raise ValueError("grid must be a nonempty interval inside [0, 90]")

    @property
    def n_atoms(self) -> int:
        return self.d_low.n_atoms

    @property
    def grid_center(self) -> float:
        return 0.5 * (self.grid[0] + self.grid[1])

    def stacked(self) -> Dictionary:
        return Dictionary(atoms=np.vstack([self.d_low.atoms, self.d_high.atoms]))


@dataclass
class GridDictionaryBank:
    """Ordered collection of pairs with distinct (possibly overlapping) grids."""

    pairs: list[DictionaryPair]

    def __post_init__(self):
        if not self.pairs:
            raise ValueError("bank must contain at least one pair")
        grids = [p.grid for p in self.pairs]
        if len(set(grids)) != len(grids):
            raise ValueError("bank grids must be distinct")


def train_coupled(
    y_low: ReceivedSignal,
    y_high: ReceivedSignal,
    grid: tuple[float, float],
    l: int,
    lam: float,
    n_iters: int,
    rng_seed: int,
    batch_size: int = 256,
    log: OdlLog | None = None,
) -> DictionaryPair:
    """Learn a coupled pair by dictionary learning on the stacked signal.

    Both signals are converted to real features, pre-processed with low-derived
    statistics, stacked row-wise and passed to odl_train; the learned atoms
    are split back into the low and high row blocks.
    """
    if y_low.n_snapshots != y_high.n_snapshots:
        raise ValueError("y_low and y_high must have equal column counts")
    n_high = y_high.config.n_virtual
    if l < n_high:
        raise ValueError(f"l must be >= {n_high} (the high virtual array size)")
    low_real = complex_to_real_samples(y_low)
    high_real = complex_to_real_samples(y_high)
    low_norm, high_norm, _ = preprocess(low_real, high_real)
    stacked = np.vstack([low_norm, high_norm])
    d = odl_train(stacked, l, lam, n_iters, batch_size=batch_size, rng_seed=rng_seed, log=log)
    n_low = low_norm.shape[0]
    pair = DictionaryPair(
        d_low=Dictionary(atoms=d.atoms[:n_low]),
        d_high=Dictionary(atoms=d.atoms[n_low:]),
        grid=(float(grid[0]), float(grid[1])),
        lambda_train=lam,
        low_config=y_low.config,
        high_config=y_high.config,
        train_seed=rng_seed,
    )
    pair.train_error = _sampled_reconstruction_error(d, stacked, lam, rng_seed)
    return pair


def _sampled_reconstruction_error(
    d: Dictionary, stacked: np.ndarray, lam: float, rng_seed: int, max_cols: int = 2000
) -> float:
    """Relative stacked reconstruction error on a seeded column subsample."""
    n = stacked.shape[1]
    if n > max_cols:
        cols = np.random.default_rng(rng_seed).choice(n, size=max_cols, replace=False)
        stacked = stacked[:, cols]
    w = lasso(d, stacked, lam).codes
    resid = stacked - d.atoms @ w
    return float(np.linalg.norm(resid) / max(np.linalg.norm(stacked), 1e-300))


def select_lambda(
    y_low: ReceivedSignal,
    y_high: ReceivedSignal,
    grid: tuple[float, float],
    l: int,
    lambda_grid,
    n_iters: int,
    rng_seed: int,
    batch_size: int = 256,
    val_fraction: float = 0.1,
) -> tuple[float, dict[float, float]]:
    """Pick the penalty minimizing held-out stacked reconstruction error.

    Columns are split 90/10 (seeded); each candidate trains on the large
    split and is scored by squared Frobenius residual on the held-out
    columns. Ties break toward the larger (sparser) penalty.
    """
    lambda_grid = list(lambda_grid)
    if not lambda_grid:
        raise ValueError("lambda_grid must be nonempty")
    n = y_low.n_snapshots
    rng = np.random.default_rng(rng_seed)
    perm = rng.permutation(n)
    n_val = max(1, int(round(val_fraction * n)))
    val, tr = perm[:n_val], perm[n_val:]
    if tr.size == 0:
        tr = val

    def subset(sig: ReceivedSignal, cols) -> ReceivedSignal:
        return ReceivedSignal(data=sig.data[:, cols], config=sig.config, snr_db=sig.snr_db)

    low_tr, high_tr = subset(y_low, tr), subset(y_high, tr)
    low_val = complex_to_real_samples(subset(y_low, val))
    high_val = complex_to_real_samples(subset(y_high, val))
    low_val_n, high_val_n, _ = preprocess(low_val, high_val)
    target = np.vstack([low_val_n, high_val_n])

    errors: dict[float, float] = {}
    for lam in lambda_grid:
        pair = train_coupled(low_tr, high_tr, grid, l, lam, n_iters, rng_seed, batch_size)
        d = pair.stacked()
        w = lasso(d, target, lam).codes
        resid = target - d.atoms @ w
        errors[lam] = float(np.sum(resid * resid))
    best = min(sorted(errors, reverse=True), key=lambda lam: errors[lam])
    return best, errors


def synth_training_pair(
    grid: tuple[float, float],
    low_config: ArrayConfig,
    high_config: ArrayConfig,
    k_targets: int,
    n_samples: int,
    pulses_per_scene: int,
    snr_db: float | None,
    rng_seed: int,
) -> tuple[ReceivedSignal, ReceivedSignal]:
    """Generate coupled training signals from scenes with in-grid random angles.

    n_samples columns total, composed of ceil(n_samples / pulses_per_scene)
    scenes with k_targets i.i.d. uniform angles inside the grid and fresh
    per-pulse reflectivity.
    """
    lo, hi = grid
    rng = np.random.default_rng(rng_seed)
    lows, highs = [], []
    remaining = n_samples
    while remaining > 0:
        p = min(pulses_per_scene, remaining)
        angles = rng.uniform(lo, hi, size=k_targets)
        rcs = draw_rcs(k_targets, p, int(rng.integers(2**63)))
        scene = TargetScene(angles_deg=angles, rcs=rcs)
        y_low, y_high = synth_coupled(
            scene, low_config, high_config, snr_db, int(rng.integers(2**63))
        )
        lows.append(y_low.data)
        highs.append(y_high.data)
        remaining -= p
    low = ReceivedSignal(data=np.hstack(lows), config=low_config, snr_db=snr_db)
    high = ReceivedSignal(data=np.hstack(highs), config=high_config, snr_db=snr_db)
    return low, high


def train_grid_bank(
    grids,
    low_config: ArrayConfig,
    high_config: ArrayConfig,
    *,
    k_targets: int,
    n_samples: int,
    pulses_per_scene: int,
    train_snr_db: float | None,
    l_atoms: int,
    lam: float,
    n_iters: int,
    batch_size: int = 256,
    base_seed: int = 0,
    logs: dict | None = None,
) -> GridDictionaryBank:
    """Train one DictionaryPair per angle grid.

    Per-grid seeds derive from base_seed and the grid index, so grids are
    independent and the bank is reproducible. When `logs` is given it is
    filled with the per-grid OdlLog under the grid tuple.
    """
    grids = [(float(lo), float(hi)) for lo, hi in grids]
    if not grids:
        raise ValueError("grids must be nonempty")
    pairs = []
    for i, grid in enumerate(grids):
        seed = int(np.random.SeedSequence([base_seed, i]).generate_state(1)[0])
        y_low, y_high = synth_training_pair(
            grid, low_config, high_config, k_targets, n_samples,
            pulses_per_scene, train_snr_db, seed,
        )
        log = OdlLog()
        pair = train_coupled(
            y_low, y_high, grid, l_atoms, lam, n_iters, seed, batch_size, log=log
        )
        if logs is not None:
            logs[grid] = log
        pairs.append(pair)
    return GridDictionaryBank(pairs=pairs)
