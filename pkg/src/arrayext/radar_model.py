"""MIMO radar snapshot synthesis for co-located TX/RX uniform linear arrays.

Produces post-matched-filter virtual-array snapshot matrices for arbitrary
ULA pairs, target scenes and SNR levels, with seeded randomness throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class ArrayConfig:
    """Geometry of one TX/RX ULA pair.

    spacing is the inter-element distance in wavelengths (dimensionless),
    identical for TX and RX.
    """

    n_tx: int
    n_rx: int
    spacing: float = 0.5

    def __post_init__(self):
        if self.n_tx < 1 or self.n_rx < 1:
            raise ValueError("n_tx and n_rx must be >= 1")
        if self.spacing <= 0:
            raise ValueError("spacing must be positive")

    @property
    def n_virtual(self) -> int:
        return self.n_tx * self.n_rx


@dataclass(frozen=True)
class TargetScene:
    """K target angles plus per-pulse complex reflectivity draws.

    angles_deg: (K,) angles in [0, 90] degrees.
    rcs: (K, P) complex reflectivity, one column per pulse.
    An empty scene (K = 0) is permitted; it synthesizes pure noise.
    """

    angles_deg: np.ndarray
    rcs: np.ndarray

    def __post_init__(self):
        angles = np.atleast_1d(np.asarray(self.angles_deg, dtype=float))
        rcs = np.atleast_2d(np.asarray(self.rcs, dtype=complex))
        if angles.size == 0:
            rcs = rcs.reshape(0, rcs.shape[1] if rcs.ndim == 2 else 1)
        object.__setattr__(self, "angles_deg", angles)
        object.__setattr__(self, "rcs", rcs)
        if np.any((self.angles_deg < 0) | (self.angles_deg > 90)):
            raise ValueError("target angles must lie in [0, 90] degrees")
        if self.rcs.shape[0] != self.angles_deg.size:
            raise ValueError("rcs must have one row per target angle")

    @property
    def n_targets(self) -> int:
        return self.angles_deg.size

    @property
    def n_pulses(self) -> int:
        return self.rcs.shape[1]


@dataclass(frozen=True)
class ReceivedSignal:
    """Virtualized post-matched-filter snapshots.

    data: (n_tx*n_rx, P) complex matrix, one column per pulse.
    snr_db: per-element SNR in dB, or None for a noiseless signal.
    """

    data: np.ndarray
    config: ArrayConfig
    snr_db: float | None = None

    def __post_init__(self):
        data = np.atleast_2d(np.asarray(self.data, dtype=complex))
        object.__setattr__(self, "data", data)
        if self.data.shape[0] != self.config.n_virtual:
            raise ValueError(
                f"signal has {self.data.shape[0]} rows, config implies "
                f"{self.config.n_virtual}"
            )
        if self.data.shape[1] < 1:
            raise ValueError("signal needs at least one snapshot")

    @property
    def n_snapshots(self) -> int:
        return self.data.shape[1]


def steering_vector(angle_deg: float, n_elements: int, spacing: float) -> np.ndarray:
    """Phase profile of an n-element ULA toward angle_deg.

    Element i carries phase 2*pi*spacing*i*sin(angle); the first element is
    always exactly 1.
    """
    if n_elements < 1:
        raise ValueError("n_elements must be >= 1")
    phase = 2.0 * np.pi * spacing * np.sin(np.deg2rad(angle_deg))
    return np.exp(1j * phase * np.arange(n_elements))


def virtual_steering(angle_deg: float, config: ArrayConfig) -> np.ndarray:
    """Virtual-array steering vector: Kronecker product of TX and RX vectors.

    Virtual element (m, n) sits at row m*n_rx + n (TX-major ordering).
    """
    a_t = steering_vector(angle_deg, config.n_tx, config.spacing)
    a_r = steering_vector(angle_deg, config.n_rx, config.spacing)
    return np.kron(a_t, a_r)


def steering_matrix(angles_deg: np.ndarray, config: ArrayConfig) -> np.ndarray:
    """Stack virtual steering vectors column-wise: (n_virtual, K)."""
    angles_deg = np.atleast_1d(np.asarray(angles_deg, dtype=float))
    if angles_deg.size == 0:
        return np.zeros((config.n_virtual, 0), dtype=complex)
    return np.stack([virtual_steering(a, config) for a in angles_deg], axis=1)


def draw_rcs(k: int, p: int, rng_seed: int) -> np.ndarray:
    """Draw a (k, p) matrix of i.i.d. unit-variance circular complex Gaussians.

    Reflectivity is constant within a pulse and independent across pulses
    (Swerling-II behaviour); deterministic given the seed.
    """
    if k < 1 or p < 1:
        raise ValueError("k and p must be >= 1")
    rng = np.random.default_rng(rng_seed)
    return (rng.standard_normal((k, p)) + 1j * rng.standard_normal((k, p))) / np.sqrt(2.0)


def _noise(shape, snr_db: float | None, rng: np.random.Generator) -> np.ndarray:
    if snr_db is None:
        return np.zeros(shape, dtype=complex)
    sigma2 = 10.0 ** (-snr_db / 10.0)
    scale = np.sqrt(sigma2 / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def synth_received(
    scene: TargetScene,
    config: ArrayConfig,
    snr_db: float | None,
    rng_seed: int,
) -> ReceivedSignal:
    """Synthesize snapshots: steering matrix times reflectivity plus noise.

    Noise entries are i.i.d. circular complex Gaussian with per-entry
    variance 10^(-snr_db/10); snr_db=None means exactly zero noise.
    """
    a = steering_matrix(scene.angles_deg, config)
    clean = a @ scene.rcs if scene.n_targets else np.zeros(
        (config.n_virtual, scene.n_pulses), dtype=complex
    )
    rng = np.random.default_rng(rng_seed)
    data = clean + _noise(clean.shape, snr_db, rng)
    return ReceivedSignal(data=data, config=config, snr_db=snr_db)


def virtual_subset_indices(low: ArrayConfig, high: ArrayConfig) -> np.ndarray:
    """Row indices of the low virtual array inside the high virtual array.

    Both setups share the first low.n_tx TX and low.n_rx RX elements, so
    virtual element (m, n) of the low array is row m*high.n_rx + n of the
    high array.
    """
    if low.n_tx > high.n_tx or low.n_rx > high.n_rx:
        raise ValueError("low setup must be a subset of the high setup")
    if low.spacing != high.spacing:
        raise ValueError("low and high setups must share the element spacing")
    m, n = np.meshgrid(np.arange(low.n_tx), np.arange(low.n_rx), indexing="ij")
    return (m * high.n_rx + n).ravel()


def synth_coupled(
    scene: TargetScene,
    low: ArrayConfig,
    high: ArrayConfig,
    snr_db: float | None,
    rng_seed: int,
) -> tuple[ReceivedSignal, ReceivedSignal]:
    """Synthesize one physical measurement seen by both setups.

    The high-array signal is generated once; the low-array signal is the
    sub-matrix of shared virtual elements, so those elements carry identical
    noise in both outputs.
    """
    y_high = synth_received(scene, high, snr_db, rng_seed)
    idx = virtual_subset_indices(low, high)
    y_low = ReceivedSignal(data=y_high.data[idx], config=low, snr_db=snr_db)
    return y_low, y_high
