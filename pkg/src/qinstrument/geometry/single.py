"""Measurement of a single observable.

Incremental Kraus operators commute, so ``L_T = e^{-X² r + X a}`` with
``r = κT`` and ``a = √κ W_T``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from ..exceptions import ExtractionError, InvalidArgumentError
from ..linalg_ops import channel_exp, lindbladian
from ..trajectories import TrajectoryEnsemble, pile_up_ensemble

__all__ = [
    "CartanSingle",
    "SingleKOD",
    "analytic_kod_single",
    "coherence_deviation",
    "extract_single",
    "single_ensemble",
]


@dataclass
class CartanSingle:
    r: float
    a: float


@dataclass(frozen=True)
class SingleKOD:
    """``δ(r - κT)`` times a Gaussian in ``a`` with mean 0, variance ``κT``."""

    r: float
    mean: float
    variance: float

    def pdf(self, a):
        if self.variance == 0:
            return np.where(np.asarray(a) == self.mean, np.inf, 0.0)
        return norm.pdf(a, self.mean, np.sqrt(self.variance))

    def cdf(self, a):
        if self.variance == 0:
            return np.where(np.asarray(a) >= self.mean, 1.0, 0.0)
        return norm.cdf(a, self.mean, np.sqrt(self.variance))


def analytic_kod_single(kappa: float, T: float) -> SingleKOD:
    """KOD of a single observable; ``T = 0`` gives the point mass at the identity."""
    if T < 0 or kappa < 0:
        raise InvalidArgumentError("κ and T must be non-negative")
    return SingleKOD(float(kappa * T), 0.0, float(kappa * T))


def _fit(lam, logs):
    design = np.stack([-(lam**2), lam], axis=-1)
    if np.linalg.matrix_rank(design) < 2:
        raise ExtractionError("need two distinct nonzero eigenvalues to separate r and a")
    sol, *_ = np.linalg.lstsq(design, logs.T, rcond=None)
    return sol


def extract_single(L, X, log_norm: float = 0.0) -> CartanSingle:
    """``(r, a)`` with ``exp(log_norm) L = e^{-X² r + X a}``."""
    lam, v = np.linalg.eigh(np.asarray(X))
    d = np.real(np.einsum("ij,jk,ki->i", v.conj().T, np.asarray(L), v))
    if np.any(d <= 0):
        raise ExtractionError("Kraus operator is not positive in the eigenbasis of X")
    r, a = _fit(lam, np.log(d) + log_norm)
    return CartanSingle(float(r), float(a))


def single_ensemble(spectrum, kappa: float, T: float, dt: float, N: int, seed: int, **kw):
    """Pile up ``N`` trajectories and return ``(r, a, ensemble)`` arrays."""
    X = np.diag(np.asarray(spectrum, dtype=float)).astype(complex)
    ens: TrajectoryEnsemble = pile_up_ensemble([X], kappa, T, dt, N, seed, **kw)
    lam = np.real(np.diag(X))
    d = np.real(np.diagonal(ens.kraus, axis1=-2, axis2=-1))
    logs = np.log(d) + ens.log_norm[:, None]
    r, a = _fit(lam, logs)
    return r, a, ens


def coherence_deviation(spectrum, kappa: float, T: float) -> float:
    """Max ``|Z_T(|j⟩⟨k|)_{jk} - e^{-(λ_j-λ_k)²κT/2}|`` over all pairs."""
    lam = np.asarray(spectrum, dtype=float)
    X = np.diag(lam).astype(complex)
    Z = channel_exp(lindbladian([X], kappa), T)
    d = len(lam)
    worst = 0.0
    for j in range(d):
        for k in range(d):
            E = np.zeros((d, d), complex)
            E[j, k] = 1
            out = Z(E)
            target = np.exp(-((lam[j] - lam[k]) ** 2) * kappa * T / 2)
            rest = out.copy()
            rest[j, k] = 0
            worst = max(worst, abs(out[j, k] - target), float(np.max(np.abs(rest))))
    return worst
