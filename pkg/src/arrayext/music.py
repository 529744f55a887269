"""MUSIC super-resolution direction-of-arrival estimation on virtual arrays."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .radar_model import ArrayConfig, ReceivedSignal, steering_matrix

SPECTRUM_CAP = 1e15
DEFAULT_GRID_STEP = 0.05


def default_angle_grid(step: float = DEFAULT_GRID_STEP) -> np.ndarray:
    """Evaluation angles covering [0, 90] degrees inclusive."""
    n = int(round(90.0 / step))
    return np.linspace(0.0, 90.0, n + 1)


@dataclass
class MusicSpectrum:
    """Pseudo-spectrum values over an increasing angle grid."""

    angles_deg: np.ndarray
    values: np.ndarray
    config: ArrayConfig

    def __post_init__(self):
        self.angles_deg = np.asarray(self.angles_deg, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if np.any(np.diff(self.angles_deg) <= 0):
            raise ValueError("angle grid must be strictly increasing")


@dataclass
class DoaEstimate:
    """k estimated angles, ascending; degraded=True when peak picking had to
    pad from non-peak grid values."""

    angles_deg: np.ndarray
    degraded: bool
    spectrum: MusicSpectrum


def sample_covariance(y: ReceivedSignal | np.ndarray) -> np.ndarray:
    """Snapshot-averaged covariance (1/P) Y Y^H."""
    data = y.data if isinstance(y, ReceivedSignal) else np.atleast_2d(np.asarray(y))
    return (data @ data.conj().T) / data.shape[1]


def noise_subspace(r: np.ndarray, k: int) -> np.ndarray:
    """Orthonormal basis of the n-k minor eigenvectors of a Hermitian matrix.

    Eigenvalues are sorted descending and split after index k; the returned
    columns span the noise subspace.
    """
    r = np.asarray(r)
    n = r.shape[0]
    if not 1 <= k < n:
        raise ValueError(f"k must satisfy 1 <= k < {n}, got {k}")
    _, vecs = np.linalg.eigh(r)  # ascending eigenvalues
    return vecs[:, : n - k]


def music_spectrum(
    u_n: np.ndarray, config: ArrayConfig, angle_grid: np.ndarray
) -> MusicSpectrum:
    """Pseudo-spectrum 1 / ||U_n^H v(theta)||^2 over the grid.

    Values are clipped at SPECTRUM_CAP near exact nulls of the noise
    projection.
    """
    u_n = np.atleast_2d(np.asarray(u_n))
    if u_n.shape[0] != config.n_virtual:
        raise ValueError("noise subspace rows must equal the virtual array size")
    v = steering_matrix(angle_grid, config)
    denom = np.sum(np.abs(u_n.conj().T @ v) ** 2, axis=0)
    values = np.where(denom <= 1.0 / SPECTRUM_CAP, SPECTRUM_CAP, 1.0 / np.maximum(denom, 1e-300))
    return MusicSpectrum(angles_deg=np.asarray(angle_grid, float), values=values, config=config)


def _signal_space_spectrum(
    u_s: np.ndarray, config: ArrayConfig, angle_grid: np.ndarray
) -> MusicSpectrum:
    # ||U_n^H v||^2 == ||v||^2 - ||U_s^H v||^2 for a complete orthonormal
    # eigenbasis; the signal-side projection is much cheaper for small k.
    v = steering_matrix(angle_grid, config)
    denom = config.n_virtual - np.sum(np.abs(u_s.conj().T @ v) ** 2, axis=0)
    values = np.where(denom <= 1.0 / SPECTRUM_CAP, SPECTRUM_CAP, 1.0 / np.maximum(denom, 1e-300))
    return MusicSpectrum(angles_deg=np.asarray(angle_grid, float), values=values, config=config)


def find_peaks(values: np.ndarray) -> np.ndarray:
    """Indices of local maxima: strictly greater than both neighbours,
    one-sided at the boundaries."""
    values = np.asarray(values)
    if values.size == 1:
        return np.array([0])
    left = np.empty(values.size, dtype=bool)
    right = np.empty(values.size, dtype=bool)
    left[0] = True
    left[1:] = values[1:] > values[:-1]
    right[-1] = True
    right[:-1] = values[:-1] > values[1:]
    return np.flatnonzero(left & right)


def estimate_doa(
    y: ReceivedSignal,
    k: int,
    angle_grid: np.ndarray | None = None,
) -> DoaEstimate:
    """Locate the k largest local maxima of the MUSIC pseudo-spectrum.

    Falls back to the largest remaining grid values (flagging the result as
    degraded) when fewer than k local maxima exist.
    """
    if angle_grid is None:
        angle_grid = default_angle_grid()
    n = y.config.n_virtual
    if not 1 <= k < n:
        raise ValueError(f"k must satisfy 1 <= k < {n}, got {k}")
    r = sample_covariance(y)
    _, vecs = np.linalg.eigh(r)
    u_s = vecs[:, n - k:]
    spectrum = _signal_space_spectrum(u_s, y.config, angle_grid)

    peaks = find_peaks(spectrum.values)
    order = peaks[np.argsort(spectrum.values[peaks])[::-1]]
    chosen = list(order[:k])
    degraded = len(chosen) < k
    if degraded:
        rest = np.setdiff1d(np.arange(angle_grid.size), np.array(chosen, dtype=int))
        fill = rest[np.argsort(spectrum.values[rest])[::-1]]
        chosen.extend(fill[: k - len(chosen)])
    angles = np.sort(angle_grid[np.array(chosen, dtype=int)])
    return DoaEstimate(angles_deg=angles, degraded=degraded, spectrum=spectrum)
