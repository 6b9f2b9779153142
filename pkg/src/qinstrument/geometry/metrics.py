"""Collapse toward coherent-state POVMs and completeness of ensembles."""

from __future__ import annotations

import numpy as np
from scipy.optimize import minimize

from ..exceptions import InvalidArgumentError, WrongMeasureError
from ..linalg_ops import dag
from ..stats import bootstrap
from ..trajectories import TrajectoryEnsemble, TrajectoryRecord, _is_wiener
from .ism import angles_to_unit, spin_coherent_state
from .spqm import coherent_state

__all__ = ["collapse_metrics", "completeness_functional", "fibonacci_sphere"]


def fibonacci_sphere(n: int):
    """``(θ, φ)`` of ``n`` near-uniform points on the sphere."""
    k = np.arange(n) + 0.5
    theta = np.arccos(1 - 2 * k / n)
    phi = np.mod(np.pi * (1 + 5**0.5) * k, 2 * np.pi)
    return theta, phi


def _spin_fit(v, j, n_grid=2000):
    th, ph = fibonacci_sphere(n_grid)
    amps = spin_coherent_state(th, ph, j)
    f = np.abs(amps.conj() @ v) ** 2
    i = int(np.argmax(f))

    def loss(x):
        return -np.abs(spin_coherent_state(x[0], x[1], j).conj() @ v) ** 2

    res = minimize(loss, [th[i], ph[i]], method="Nelder-Mead", options={"xatol": 1e-9, "fatol": 1e-12})
    best = max(-res.fun, f[i])
    x = res.x if -res.fun >= f[i] else (th[i], ph[i])
    return float(best), angles_to_unit(*x), spin_coherent_state(x[0], x[1], j)


def _fock_fit(v):
    d = len(v)
    a = np.diag(np.sqrt(np.arange(1, d)), k=1)
    alpha0 = complex(np.vdot(v, a @ v))

    def loss(x):
        return -np.abs(np.vdot(coherent_state(x[0] + 1j * x[1], d), v)) ** 2

    res = minimize(loss, [alpha0.real, alpha0.imag], method="Nelder-Mead", options={"xatol": 1e-9, "fatol": 1e-12})
    alpha = complex(res.x[0] + 1j * res.x[1])
    return float(-res.fun), alpha, coherent_state(alpha, d)


def collapse_metrics(E, rep, gap_tol: float = 1e-10) -> dict:
    """Purity and coherent-state fidelity of a POVM element.

    Parameters
    ----------
    E : ndarray
        Positive semidefinite operator, e.g. ``L†L``.
    rep : Representation
        ``'spin'`` or ``'fock'``; selects the coherent-state family.

    Returns
    -------
    dict
        ``purity`` of ``E/tr E``, ``top_fidelity`` of its top eigenvector
        with the best coherent state, ``argmax_label`` (``n̂`` or ``α``)
        and ``ambiguous`` when the top eigenvalue is degenerate.  The
        diagnostic ``coherent_weight`` is ``⟨c|E|c⟩/tr E`` for that state.
    """
    E = np.asarray(E, dtype=complex)
    E = (E + dag(E)) / 2
    w, v = np.linalg.eigh(E)
    if w[0] < -1e-10 * max(abs(w[-1]), 1e-300):
        raise InvalidArgumentError("E is not positive semidefinite")
    trE = float(np.sum(w))
    En = E / trE
    purity = float(np.real(np.trace(En @ En)))
    ambiguous = bool(len(w) > 1 and (w[-1] - w[-2]) < gap_tol * trE)
    top = v[:, -1]
    if rep.kind == "spin":
        fid, label, c = _spin_fit(top, float(rep.params["j"]))
    elif rep.kind == "fock":
        fid, label, c = _fock_fit(top)
    else:
        raise InvalidArgumentError(f"no coherent states for representation {rep.kind!r}")
    fid = min(fid, 1.0)
    weight = float(np.real(np.vdot(c, En @ c)))
    return {
        "purity": purity,
        "top_fidelity": fid,
        "argmax_label": label,
        "ambiguous": ambiguous,
        "coherent_weight": weight,
    }


def completeness_functional(ensemble, n_boot: int = 200, seed: int = 12345) -> dict:
    """``‖mean(e^{2 log_norm} kraus†kraus) - 1‖_F`` with a bootstrap scale.

    ``sigma`` is the bootstrap root-mean-square Frobenius distance of the
    resampled mean from the sample mean, which is the expected size of the
    deviation when the ensemble is complete.

    Raises
    ------
    WrongMeasureError
        For Born-sampled ensembles.
    """
    if isinstance(ensemble, TrajectoryEnsemble):
        sampling = ensemble.sampling
        E = ensemble.povm_elements()
    else:
        recs = list(ensemble)
        if not recs:
            raise InvalidArgumentError("empty ensemble")
        if not all(isinstance(r, TrajectoryRecord) for r in recs):
            raise InvalidArgumentError("expected TrajectoryRecord items")
        sampling = recs[0].sampling
        if any(not _is_wiener(r.sampling) for r in recs):
            sampling = "born"
        E = np.stack([np.exp(2 * r.log_norm) * dag(r.kraus) @ r.kraus for r in recs])
    if not _is_wiener(sampling):
        raise WrongMeasureError("completeness holds only for Wiener-sampled ensembles")
    d = E.shape[-1]
    M = E.mean(axis=0)
    dev = float(np.linalg.norm(M - np.eye(d)))
    _, spread = bootstrap(lambda s: s.mean(axis=0), E, n_boot=n_boot, seed=seed)
    sigma = float(np.sqrt(np.sum(np.abs(spread) ** 2)))
    return {"deviation": dev, "sigma": sigma, "mean": M, "n": len(E)}
