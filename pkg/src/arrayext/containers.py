"""Binary containers and text exports for signals, dictionaries and banks.

Signals: little-endian header + complex-interleaved float64 values.
Dictionaries: little-endian header + column-major float64 values.
Banks: a directory of per-pair dictionary files plus a JSON manifest, the
source of truth for grid selection at prediction time.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .coupled_dict import DictionaryPair, GridDictionaryBank
from .radar_model import ArrayConfig, ReceivedSignal
from .sparse_coding import Dictionary

SIGNAL_MAGIC = b"AXSG"
DICT_MAGIC = b"AXDC"
_SIGNAL_HEADER = struct.Struct("<4sIQQIIdd")
_DICT_HEADER = struct.Struct("<4sIQQdQ")


class ContainerError(ValueError):
    """Malformed or mismatched container file."""


def save_signal(path, signal: ReceivedSignal) -> None:
    """Write a signal container: header, then row-major (re, im) float64 pairs."""
    snr = float("nan") if signal.snr_db is None else float(signal.snr_db)
    rows, cols = signal.data.shape
    header = _SIGNAL_HEADER.pack(
        SIGNAL_MAGIC, 1, rows, cols,
        signal.config.n_tx, signal.config.n_rx, signal.config.spacing, snr,
    )
    interleaved = np.empty((rows, cols, 2), dtype="<f8")
    interleaved[:, :, 0] = signal.data.real
    interleaved[:, :, 1] = signal.data.imag
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(interleaved.tobytes())


def load_signal(path) -> ReceivedSignal:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _SIGNAL_HEADER.size:
        raise ContainerError(f"{path}: truncated signal header")
    magic, version, rows, cols, n_tx, n_rx, spacing, snr = _SIGNAL_HEADER.unpack_from(raw)
    if magic != SIGNAL_MAGIC or version != 1:
        raise ContainerError(f"{path}: not a version-1 signal container")
    body = np.frombuffer(raw, dtype="<f8", offset=_SIGNAL_HEADER.size)
    if body.size != rows * cols * 2:
        raise ContainerError(f"{path}: payload size does not match header")
    values = body.reshape(rows, cols, 2)
    data = values[:, :, 0] + 1j * values[:, :, 1]
    config = ArrayConfig(n_tx=n_tx, n_rx=n_rx, spacing=spacing)
    return ReceivedSignal(data=data, config=config, snr_db=None if np.isnan(snr) else snr)


def save_dictionary(path, dictionary: Dictionary, lam: float = 0.0, n_iters: int = 0) -> None:
    """Write a dictionary container: header {rows, atoms, lambda, iterations},
    then column-major float64 values."""
    rows, atoms = dictionary.atoms.shape
    header = _DICT_HEADER.pack(DICT_MAGIC, 1, rows, atoms, float(lam), n_iters)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.asarray(dictionary.atoms, dtype="<f8", order="F").tobytes(order="F"))


def load_dictionary(path) -> tuple[Dictionary, float, int]:
    """Read a dictionary container; returns (dictionary, lambda, iterations)."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _DICT_HEADER.size:
        raise ContainerError(f"{path}: truncated dictionary header")
    magic, version, rows, atoms, lam, n_iters = _DICT_HEADER.unpack_from(raw)
    if magic != DICT_MAGIC or version != 1:
        raise ContainerError(f"{path}: not a version-1 dictionary container")
    body = np.frombuffer(raw, dtype="<f8", offset=_DICT_HEADER.size)
    if body.size != rows * atoms:
        raise ContainerError(f"{path}: payload size does not match header")
    return Dictionary(atoms=body.reshape((rows, atoms), order="F").copy()), lam, n_iters


def export_dictionary_csv(path, dictionary: Dictionary) -> None:
    """Plain CSV dump for inspection: one row per feature."""
    np.savetxt(path, dictionary.atoms, delimiter=",", fmt="%.17g")


def _config_dict(config: ArrayConfig) -> dict:
    return {"n_tx": config.n_tx, "n_rx": config.n_rx, "spacing": config.spacing}


def _config_from_dict(d: dict) -> ArrayConfig:
    return ArrayConfig(n_tx=d["n_tx"], n_rx=d["n_rx"], spacing=d["spacing"])


def save_pair(dirpath, pair: DictionaryPair, stem: str = "pair") -> dict:
    """Write one pair's dictionaries into dirpath; returns its manifest entry."""
    dirpath = Path(dirpath)
    dirpath.mkdir(parents=True, exist_ok=True)
    low_file = f"{stem}_low.dict"
    high_file = f"{stem}_high.dict"
    save_dictionary(dirpath / low_file, pair.d_low, pair.lambda_train)
    save_dictionary(dirpath / high_file, pair.d_high, pair.lambda_train)
    return {
        "grid": list(pair.grid),
        "low_config": _config_dict(pair.low_config),
        "high_config": _config_dict(pair.high_config),
        "n_atoms": pair.n_atoms,
        "lambda": pair.lambda_train,
        "train_error": pair.train_error,
        "train_seed": pair.train_seed,
        "d_low": low_file,
        "d_high": high_file,
    }


def _pair_from_entry(dirpath: Path, entry: dict) -> DictionaryPair:
    d_low, _, _ = load_dictionary(dirpath / entry["d_low"])
    d_high, _, _ = load_dictionary(dirpath / entry["d_high"])
    return DictionaryPair(
        d_low=d_low,
        d_high=d_high,
        grid=tuple(entry["grid"]),
        lambda_train=entry["lambda"],
        low_config=_config_from_dict(entry["low_config"]),
        high_config=_config_from_dict(entry["high_config"]),
        train_error=entry.get("train_error"),
        train_seed=entry.get("train_seed"),
    )


def save_bank(dirpath, bank: GridDictionaryBank) -> None:
    """Persist a bank as per-pair dictionary files plus manifest.json."""
    dirpath = Path(dirpath)
    dirpath.mkdir(parents=True, exist_ok=True)
    entries = [save_pair(dirpath, pair, stem=f"grid{i}") for i, pair in enumerate(bank.pairs)]
    manifest = {"version": 1, "pairs": entries}
    (dirpath / "manifest.json").write_text(json.dumps(manifest, indent=2))


def load_bank(dirpath) -> GridDictionaryBank:
    dirpath = Path(dirpath)
    manifest_path = dirpath / "manifest.json"
    if not manifest_path.exists():
        raise ContainerError(f"{manifest_path}: bank manifest not found")
    manifest = json.loads(manifest_path.read_text())
    if manifest.get("version") != 1:
        raise ContainerError(f"{manifest_path}: unsupported manifest version")
    pairs = [_pair_from_entry(dirpath, e) for e in manifest["pairs"]]
    return GridDictionaryBank(pairs=pairs)


def export_spectrum_csv(path, spectrum) -> None:
    """Two-column CSV (angle_deg, pseudo_spectrum) for plotting."""
    with open(path, "w") as fh:
        fh.write("angle_deg,p_mu\n")
        for angle, value in zip(spectrum.angles_deg, spectrum.values):
            fh.write(f"{angle:.17g},{value:.17g}\n")
