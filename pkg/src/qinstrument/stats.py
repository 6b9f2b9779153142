"""Small statistical helpers: bootstrap errors and seeded streams."""

from __future__ import annotations

import numpy as np

__all__ = ["bootstrap", "trajectory_rng", "weighted_mean"]


def trajectory_rng(master_seed: int, index: int) -> np.random.Generator:
    """Independent stream for trajectory ``index`` of a seeded ensemble.

    The stream depends only on ``(master_seed, index)`` so results do not
    depend on chunking or on the number of workers.
    """
    return np.random.default_rng(np.random.SeedSequence(int(master_seed), spawn_key=(int(index),)))


def bootstrap(stat, samples, n_boot: int = 200, seed: int = 12345, weights=None):
    """Bootstrap standard deviation of ``stat`` over resampled rows.

    Parameters
    ----------
    stat : callable
        ``stat(samples)`` or ``stat(samples, weights)`` returning an array.
    samples : ndarray
        Leading axis indexes independent draws.
    weights : ndarray, optional
        Resampled jointly with ``samples``.

    Returns
    -------
    value, std : ndarray
    """
    rng = np.random.default_rng(seed)
    n = len(samples)
    args = (samples,) if weights is None else (samples, weights)
    value = np.asarray(stat(*args))
    reps = []
    for _ in range(n_boot):
        idx = rng.integers(0, n, n)
        if weights is None:
            reps.append(stat(samples[idx]))
        else:
            reps.append(stat(samples[idx], weights[idx]))
    return value, np.std(np.asarray(reps), axis=0, ddof=1)


def weighted_mean(values, weights):
    w = np.asarray(weights, dtype=float)
    v = np.asarray(values)
    return np.tensordot(w, v, axes=(0, 0)) / w.sum()
