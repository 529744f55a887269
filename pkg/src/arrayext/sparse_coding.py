"""Real-valued sparse coding: coordinate-descent LASSO and online
dictionary learning with sufficient-statistic accumulation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit, prange


@dataclass
class Dictionary:
    """A real dictionary, one atom per column: (n_features, n_atoms)."""

    atoms: np.ndarray

    def __post_init__(self):
        self.atoms = np.atleast_2d(np.asarray(self.atoms, dtype=float))

    @property
    def n_features(self) -> int:
        return self.atoms.shape[0]

    @property
    def n_atoms(self) -> int:
        return self.atoms.shape[1]

    def column_norms(self) -> np.ndarray:
        return np.linalg.norm(self.atoms, axis=0)


@dataclass
class SparseCodeMatrix:
    """Column-sparse coefficient matrix: (n_atoms, n_samples).

    converged=False marks the best iterate of a solve that hit max_iter.
    objective_history, when recorded, holds the penalized objective after
    each coordinate-descent sweep.
    """

    codes: np.ndarray
    converged: bool = True
    objective_history: np.ndarray | None = None


def _lasso_objective(d: np.ndarray, y: np.ndarray, w: np.ndarray, lam: float) -> float:
    r = y - d @ w
    return float(np.sum(r * r) + lam * np.sum(np.abs(w)))


@njit(cache=True)
def _cd_column(gram, r, w, diag, thr, tol, max_iter):
    """Coordinate descent for a single column. r holds the residual
    correlation d_j^T(y - D w), updated in place. Returns (sweeps, converged).

    Plain full cyclic sweeps: checking an unchanged coordinate costs O(1),
    only actual coefficient changes pay for the O(L) residual update."""
    n_atoms = gram.shape[0]
    sweeps = 0
    converged = False
    while sweeps < max_iter:
        max_delta = 0.0
        for j in range(n_atoms):
            dj = diag[j]
            if dj <= 0.0:
                continue
            rho = r[j] + dj * w[j]
            mag = abs(rho) - thr
            if mag > 0.0:
                w_new = mag / dj if rho > 0.0 else -mag / dj
            else:
                w_new = 0.0
            delta = w_new - w[j]
            if delta != 0.0:
                if abs(delta) > max_delta:
                    max_delta = abs(delta)
                for i in range(n_atoms):
                    r[i] -= gram[j, i] * delta
                w[j] = w_new
        sweeps += 1
        if max_delta < tol:
            converged = True
            break
    return sweeps, converged


@njit(cache=True, parallel=True)
def _cd_solve(gram, corr_t, diag, thr, tol, max_iter):
    """Solve all columns independently (transposed layout for contiguity)."""
    n_cols, n_atoms = corr_t.shape
    wt = np.zeros((n_cols, n_atoms))
    converged = np.zeros(n_cols, np.uint8)
    for c in prange(n_cols):
        r = corr_t[c].copy()
        _, ok = _cd_column(gram, r, wt[c], diag, thr, tol, max_iter)
        converged[c] = 1 if ok else 0
    return wt, converged


@njit(cache=True)
def _cd_sweep(gram, resid_corr, diag, w, thr, rows):
    """One cyclic pass over `rows`; exact soft-threshold updates with the
    residual correlation D^T(Y - D W) maintained in place. Returns the
    largest coefficient change."""
    n_atoms = gram.shape[0]
    n_cols = w.shape[1]
    max_delta = 0.0
    for idx in range(rows.size):
        j = rows[idx]
        dj = diag[j]
        if dj <= 0.0:
            continue
        for c in range(n_cols):
            rho = resid_corr[j, c] + dj * w[j, c]
            mag = abs(rho) - thr
            if mag > 0.0:
                w_new = mag / dj if rho > 0.0 else -mag / dj
            else:
                w_new = 0.0
            delta = w_new - w[j, c]
            if delta != 0.0:
                if abs(delta) > max_delta:
                    max_delta = abs(delta)
                for i in range(n_atoms):
                    resid_corr[i, c] -= gram[i, j] * delta
                w[j, c] = w_new
    return max_delta


def lasso(
    dictionary: Dictionary,
    targets: np.ndarray,
    lam: float,
    tol: float = 1e-8,
    max_iter: int = 500,
    record_objective: bool = False,
) -> SparseCodeMatrix:
    """Solve min_W ||Y - D W||_F^2 + lam * ||W||_1 column-wise.

    Cyclic coordinate descent with cached D^T D / D^T Y; each coordinate
    update is an exact soft-threshold step, applied to all columns of Y at
    once. After the first pass, sweeps run over the active set only, with a
    full pass to admit violators before declaring convergence.

    Stops when the largest coefficient change in a full sweep drops below
    tol, or after max_iter sweeps (result flagged unconverged).
    """
    if lam <= 0:
        raise ValueError("lam must be positive")
    d = dictionary.atoms
    y = np.atleast_2d(np.asarray(targets, dtype=float))
    if y.shape[0] != d.shape[0]:
        raise ValueError(
            f"targets have {y.shape[0]} features, dictionary has {d.shape[0]}"
        )
    n_atoms = d.shape[1]
    gram = np.ascontiguousarray(d.T @ d)
    diag = np.ascontiguousarray(np.diag(gram))
    thr = lam / 2.0

    if not record_objective:
        corr_t = np.ascontiguousarray((d.T @ y).T)
        wt, col_converged = _cd_solve(gram, corr_t, diag, thr, tol, max_iter)
        return SparseCodeMatrix(
            codes=np.ascontiguousarray(wt.T), converged=bool(col_converged.all())
        )

    # Slow path with per-sweep objective recording: shared cyclic sweeps
    # over all columns at once (same per-coordinate updates).
    resid_corr = np.ascontiguousarray(d.T @ y)
    w = np.zeros((n_atoms, y.shape[1]))
    history: list[float] = []
    converged = False
    all_coords = np.arange(n_atoms)
    n_sweeps = 0
    while n_sweeps < max_iter:
        delta = _cd_sweep(gram, resid_corr, diag, w, thr, all_coords)
        n_sweeps += 1
        history.append(_lasso_objective(d, y, w, lam))
        if delta < tol:
            converged = True
            break
    return SparseCodeMatrix(
        codes=w, converged=converged, objective_history=np.array(history)
    )


def reconstruction_error(
    dictionary: Dictionary, codes: SparseCodeMatrix, samples: np.ndarray
) -> float:
    """Squared Frobenius norm of samples - D @ W."""
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    w = codes.codes
    if samples.shape[0] != dictionary.n_features or w.shape[0] != dictionary.n_atoms:
        raise ValueError("shape mismatch between dictionary, codes and samples")
    if samples.shape[1] != w.shape[1]:
        raise ValueError("codes and samples disagree on the number of columns")
    resid = samples - dictionary.atoms @ w
    return float(np.sum(resid * resid))


@dataclass
class OdlLog:
    """Per-iteration diagnostics of one online-dictionary-learning run.

    surrogate: running average of the quadratic-plus-penalty surrogate,
    evaluated after each dictionary update.
    update_monotone: (before, after) surrogate values of each constrained
    block-coordinate dictionary update, excluding atom replacements.
    """

    surrogate: list[float] = field(default_factory=list)
    update_monotone: list[tuple[float, float]] = field(default_factory=list)


def _init_atoms(samples: np.ndarray, l: int, rng: np.random.Generator) -> np.ndarray:
    n_features, n_samples = samples.shape
    if n_samples >= l:
        cols = rng.choice(n_samples, size=l, replace=False)
        atoms = samples[:, cols].copy()
    else:
        atoms = np.empty((n_features, l))
        atoms[:, :n_samples] = samples
        atoms[:, n_samples:] = rng.standard_normal((n_features, l - n_samples))
    norms = np.linalg.norm(atoms, axis=0)
    dead = norms < 1e-12
    if np.any(dead):
        atoms[:, dead] = rng.standard_normal((n_features, int(dead.sum())))
        norms = np.linalg.norm(atoms, axis=0)
    return atoms / norms


def odl_train(
    samples: np.ndarray,
    l: int,
    lam: float,
    n_iters: int,
    batch_size: int = 256,
    rng_seed: int = 0,
    update_sweeps: int = 30,
    update_tol: float = 1e-6,
    log: OdlLog | None = None,
) -> Dictionary:
    """Learn an l-atom dictionary by online mini-batch alternating minimization.

    Per iteration: draw a seeded mini-batch, sparse-code it with `lasso`,
    accumulate sufficient statistics A += W W^T and B += Y W^T, then update
    atoms by block coordinate descent on the accumulated surrogate with each
    atom renormalized to the unit sphere (the exact per-atom minimizer under
    the unit-norm constraint). The block passes repeat until the largest
    atom entry change drops below update_tol, at most update_sweeps times.
    Unused atoms are replaced by the worst reconstructed batch column.

    n_iters=0 returns the (normalized sample columns) initialization
    unchanged. Deterministic given rng_seed.
    """
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    if l < 1:
        raise ValueError("l must be >= 1")
    if not np.any(samples):
        raise ValueError("degenerate input: all-zero samples")
    n_features, n_samples = samples.shape
    rng = np.random.default_rng(rng_seed)
    atoms = _init_atoms(samples, l, rng)
    if n_iters == 0:
        return Dictionary(atoms=atoms)

    a_stat = np.zeros((l, l))
    b_stat = np.zeros((n_features, l))
    energy = 0.0  # accumulated 0.5*||y||^2 of coded columns
    penalty = 0.0  # accumulated lam*||w||_1
    n_coded = 0

    def surrogate(d: np.ndarray) -> float:
        return 0.5 * float(np.sum((d @ a_stat) * d)) - float(np.sum(d * b_stat))

    for _ in range(n_iters):
        cols = rng.choice(n_samples, size=batch_size, replace=batch_size > n_samples)
        batch = samples[:, cols]
        w = lasso(Dictionary(atoms=atoms), batch, lam).codes
        a_stat += w @ w.T
        b_stat += batch @ w.T
        energy += 0.5 * float(np.sum(batch * batch))
        penalty += lam * float(np.sum(np.abs(w)))
        n_coded += batch.shape[1]

        diag = np.diag(a_stat)
        used = diag > 1e-10 * max(float(diag.max()), 1e-300)
        used_idx = np.flatnonzero(used)
        before = surrogate(atoms)
        for _sweep in range(max(update_sweeps, 1)):
            max_delta = 0.0
            for j in used_idx:
                v = b_stat[:, j] - atoms @ a_stat[:, j] + diag[j] * atoms[:, j]
                norm = np.linalg.norm(v)
                if norm > 1e-12:
                    new = v / norm
                    max_delta = max(max_delta, float(np.abs(new - atoms[:, j]).max()))
                    atoms[:, j] = new
            if max_delta < update_tol:
                break
        after = surrogate(atoms)
        if log is not None:
            log.update_monotone.append((before, after))

        unused = np.flatnonzero(~used)
        if unused.size:
            resid = batch - atoms @ w
            worst = np.argsort(np.sum(resid * resid, axis=0))[::-1]
            for rank, j in enumerate(unused):
                col = batch[:, worst[rank % worst.size]]
                norm = np.linalg.norm(col)
                if norm > 1e-12:
                    atoms[:, j] = col / norm
                else:
                    fresh = rng.standard_normal(n_features)
                    atoms[:, j] = fresh / np.linalg.norm(fresh)

        if log is not None:
            log.surrogate.append((surrogate(atoms) + energy + penalty) / n_coded)

    return Dictionary(atoms=atoms)
