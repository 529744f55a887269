"""Tests for coupled pair training and the normalization protocol."""

import numpy as np
import pytest

from arrayext.coupled_dict import (
    DegenerateColumnError,
    DictionaryPair,
    GridDictionaryBank,
    complex_to_real_samples,
    denormalize,
    preprocess,
    real_to_complex_samples,
    select_lambda,
    synth_training_pair,
    train_coupled,
    train_grid_bank,
)
from arrayext.radar_model import ArrayConfig, virtual_subset_indices
from arrayext.sparse_coding import Dictionary, lasso

LOW = ArrayConfig(2, 2)
HIGH = ArrayConfig(3, 3)


def tiny_pair(seed=0, snr_db=None, n_samples=300, k=1):
    return synth_training_pair(
        (10.0, 35.0), LOW, HIGH, k, n_samples, 10, snr_db, seed
    )


def test_complex_real_roundtrip():
    rng = np.random.default_rng(0)
    data = rng.standard_normal((5, 7)) + 1j * rng.standard_normal((5, 7))
    stacked = complex_to_real_samples(data)
    assert stacked.shape == (10, 7)
    assert np.array_equal(stacked[:5], data.real)
    assert np.array_equal(stacked[5:], data.imag)
    assert np.array_equal(real_to_complex_samples(stacked), data)


def test_real_to_complex_rejects_odd_rows():
    with pytest.raises(ValueError):
        real_to_complex_samples(np.ones((5, 2)))


def test_preprocess_zero_mean_unit_norm():
    rng = np.random.default_rng(1)
    y = rng.standard_normal((8, 20)) * 3.0 + 1.0
    low_norm, _, stats = preprocess(y)
    assert np.allclose(low_norm.mean(axis=0), 0.0, atol=1e-12)
    assert np.allclose(np.linalg.norm(low_norm, axis=0), 1.0, atol=1e-12)
    assert np.allclose(denormalize(low_norm, stats), y, atol=1e-12)


def test_preprocess_high_uses_low_statistics():
    rng = np.random.default_rng(2)
    y_low = rng.standard_normal((8, 10))
    y_high = rng.standard_normal((18, 10))
    low_norm, high_norm, stats = preprocess(y_low, y_high)
    expected = (y_high - stats.col_means) / stats.col_scales
    assert np.allclose(high_norm, expected, atol=1e-12)
    # High columns are deliberately not unit-norm in general.
    assert not np.allclose(np.linalg.norm(high_norm, axis=0), 1.0)


def test_preprocess_roundtrip_relative_error():
    rng = np.random.default_rng(3)
    y = rng.standard_normal((12, 30)) * 100.0
    low_norm, _, stats = preprocess(y)
    restored = denormalize(low_norm, stats)
    rel = np.linalg.norm(restored - y) / np.linalg.norm(y)
    assert rel <= 1e-12


def test_preprocess_degenerate_column():
    y = np.ones((6, 3))  # constant columns: zero norm after mean removal
    with pytest.raises(DegenerateColumnError):
        preprocess(y)


def test_denormalize_column_count_check():
    _, _, stats = preprocess(np.random.default_rng(4).standard_normal((6, 5)))
    with pytest.raises(ValueError):
        denormalize(np.zeros((6, 7)), stats)


def test_synth_training_pair_coupled_and_sized():
    y_low, y_high = tiny_pair(seed=5, snr_db=0.0, n_samples=55)
    assert y_low.n_snapshots == 55 and y_high.n_snapshots == 55
    idx = virtual_subset_indices(LOW, HIGH)
    assert np.array_equal(y_low.data, y_high.data[idx])


def test_train_coupled_atom_geometry():
    y_low, y_high = tiny_pair(seed=6, snr_db=10.0)
    pair = train_coupled(y_low, y_high, (10.0, 35.0), l=16, lam=0.05,
                         n_iters=5, rng_seed=6, batch_size=64)
    assert pair.d_low.n_features == 2 * LOW.n_virtual
    assert pair.d_high.n_features == 2 * HIGH.n_virtual
    assert pair.n_atoms == 16
    # The stacked atoms are unit-norm; the blocks individually are not.
    assert np.allclose(pair.stacked().column_norms(), 1.0, atol=1e-10)
    assert not np.allclose(pair.d_low.column_norms(), 1.0)


def test_train_coupled_self_consistency_oracle():
    # Noiseless one-target scenes: re-encoding held-in training columns
    # through the learned pair reconstructs them closely.
    y_low, y_high = tiny_pair(seed=7, snr_db=None, n_samples=400)
    pair = train_coupled(y_low, y_high, (10.0, 35.0), l=24, lam=0.01,
                         n_iters=30, rng_seed=7, batch_size=128)
    low_norm, high_norm, _ = preprocess(
        complex_to_real_samples(y_low), complex_to_real_samples(y_high)
    )
    stacked = np.vstack([low_norm, high_norm])
    d = pair.stacked()
    w = lasso(d, stacked, 0.01).codes
    rel = np.linalg.norm(stacked - d.atoms @ w) / np.linalg.norm(stacked)
    assert rel <= 0.1
    assert pair.train_error is not None and pair.train_error <= 0.1


def test_train_coupled_atom_count_precondition():
    y_low, y_high = tiny_pair(seed=8, snr_db=0.0, n_samples=60)
    with pytest.raises(ValueError):
        train_coupled(y_low, y_high, (10.0, 35.0), l=HIGH.n_virtual - 1,
                      lam=0.05, n_iters=1, rng_seed=8)


def test_train_coupled_column_count_mismatch():
    y_low, _ = tiny_pair(seed=9, snr_db=0.0, n_samples=40)
    _, y_high = tiny_pair(seed=9, snr_db=0.0, n_samples=50)
    with pytest.raises(ValueError):
        train_coupled(y_low, y_high, (10.0, 35.0), l=16, lam=0.05,
                      n_iters=1, rng_seed=9)


def test_dictionary_pair_validation():
    d = Dictionary(atoms=np.eye(4))
    with pytest.raises(ValueError):
        DictionaryPair(d_low=d, d_high=Dictionary(atoms=np.eye(5)),
                       grid=(10.0, 35.0), lambda_train=0.1,
                       low_config=LOW, high_config=HIGH)
    with pytest.raises(ValueError):
        DictionaryPair(d_low=d, d_high=d, grid=(40.0, 20.0), lambda_train=0.1,
                       low_config=LOW, high_config=HIGH)


def test_select_lambda_returns_grid_member():
    y_low, y_high = tiny_pair(seed=10, snr_db=10.0, n_samples=220)
    grid = [0.005, 0.02]
    best, errors = select_lambda(y_low, y_high, (10.0, 35.0), l=12,
                                 lambda_grid=grid, n_iters=3, rng_seed=10,
                                 batch_size=64)
    assert best in grid
    assert set(errors) == set(grid)
    assert errors[best] == min(errors.values())


def test_select_lambda_empty_grid():
    y_low, y_high = tiny_pair(seed=11, snr_db=0.0, n_samples=30)
    with pytest.raises(ValueError):
        select_lambda(y_low, y_high, (10.0, 35.0), 12, [], 1, 11)


def test_train_grid_bank_reproducible_and_distinct():
    kwargs = dict(
        k_targets=1, n_samples=120, pulses_per_scene=10, train_snr_db=10.0,
        l_atoms=12, lam=0.05, n_iters=3, batch_size=64, base_seed=42,
    )
    grids = [(10.0, 35.0), (20.0, 45.0)]
    b1 = train_grid_bank(grids, LOW, HIGH, **kwargs)
    b2 = train_grid_bank(grids, LOW, HIGH, **kwargs)
    assert [p.grid for p in b1.pairs] == grids
    for p1, p2 in zip(b1.pairs, b2.pairs):
        assert np.array_equal(p1.d_low.atoms, p2.d_low.atoms)
        assert np.array_equal(p1.d_high.atoms, p2.d_high.atoms)
    assert not np.array_equal(b1.pairs[0].d_low.atoms, b1.pairs[1].d_low.atoms)


def test_bank_rejects_duplicate_grids():
    y_low, y_high = tiny_pair(seed=12, snr_db=0.0, n_samples=60)
    pair = train_coupled(y_low, y_high, (10.0, 35.0), l=12, lam=0.05,
                         n_iters=1, rng_seed=12, batch_size=32)
    with pytest.raises(ValueError):
        GridDictionaryBank(pairs=[pair, pair])
    with pytest.raises(ValueError):
        GridDictionaryBank(pairs=[])
