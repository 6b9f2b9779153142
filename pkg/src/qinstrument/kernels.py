"""Incremental measurement kernels.

A differential weak measurement of observables ``X_1 .. X_n`` at rate
``kappa`` over ``dt`` registers Gaussian outcome increments ``dW`` and
applies the positive incremental Kraus operator

    L_dt = exp(delta),   delta = -X⃗² κ dt + X⃗ · √κ dW⃗,

with ``X⃗² = Σ X_μ²``.  The same unconditional channel is unravelled by
stochastic unitaries ``exp(-i X⃗·√κ dW⃗)`` and by the jump operators
``K_0 = exp(-(κdt/2) X⃗²)``, ``K_μ = √(κdt) X_μ``.  The meter-model
routines check these forms against an explicit system-meter coupling.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg as sla

from .exceptions import InvalidArgumentError, ResolutionError
from .linalg_ops import (
    Superoperator,
    channel_exp,
    dag,
    expm_batch,
    identity_superop,
    is_hermitian,
    lindbladian,
)

__all__ = [
    "KrausIncrement",
    "MeterReport",
    "UnravelingKind",
    "WienerIncrement",
    "forward_generator",
    "incremental_channel",
    "jump_kraus",
    "kraus_increment",
    "quadratic_term",
    "sample_wiener",
    "stochastic_unitary_increment",
    "verify_meter_model",
]


class UnravelingKind(enum.Enum):
    WIENER_GAUSSIAN = "wiener_gaussian"
    STOCHASTIC_UNITARY = "stochastic_unitary"
    JUMP = "jump"


@dataclass(frozen=True)
class WienerIncrement:
    """Outcome increments ``dW`` (units of √time) for one time step."""

    values: np.ndarray
    dt: float

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True)
class KrausIncrement:
    """One incremental Kraus operator.

    ``generator`` is the forward generator ``delta`` for the Wiener and
    stochastic-unitary kinds and ``None`` for jump operators, whose
    ``index`` is 0 for the no-jump operator and ``μ + 1`` for a jump of
    observable ``μ``.
    """

    matrix: np.ndarray
    generator: np.ndarray | None
    kind: UnravelingKind
    index: int | None = None


def _validate_obs(obs) -> list:
    obs = [np.asarray(X) for X in obs]
    if not obs:
        raise InvalidArgumentError("at least one observable is required")
    d = obs[0].shape[0]
    for X in obs:
        if X.shape != (d, d):
            raise InvalidArgumentError("observables have mixed dimensions")
        if not is_hermitian(X, 1e-10):
            raise InvalidArgumentError("observables must be Hermitian")
    return obs


def quadratic_term(obs) -> np.ndarray:
    """``X⃗² = Σ_μ X_μ²``."""
    return sum(np.asarray(X) @ np.asarray(X) for X in obs)


def sample_wiener(n: int, dt: float, rng: np.random.Generator, size=None) -> WienerIncrement:
    """Draw ``n`` independent Gaussian increments of variance ``dt``.

    With ``size`` given, ``values`` has shape ``(*size, n)``.
    """
    if dt <= 0:
        raise InvalidArgumentError("dt must be positive")
    if n < 1:
        raise InvalidArgumentError("n must be at least 1")
    shape = (n,) if size is None else tuple(np.atleast_1d(size)) + (n,)
    return WienerIncrement(rng.standard_normal(shape) * np.sqrt(dt), dt)


def forward_generator(obs, dW, kappa: float, dt: float, X2=None) -> np.ndarray:
    """``delta = -X⃗² κ dt + Σ_μ X_μ √κ dW^μ``; ``dW`` may carry batch axes."""
    obs = np.asarray(obs)
    dW = np.asarray(dW, dtype=float)
    if dW.shape[-1] != obs.shape[0]:
        raise InvalidArgumentError("number of increments differs from number of observables")
    if X2 is None:
        X2 = np.einsum("mij,mjk->ik", obs, obs)
    lin = np.tensordot(dW, obs, axes=([-1], [0]))
    return -kappa * dt * X2 + np.sqrt(kappa) * lin


def kraus_increment(obs, dW: WienerIncrement, kappa: float) -> KrausIncrement:
    """Positive incremental Kraus operator ``exp(-X⃗²κdt + X⃗·√κdW⃗)``."""
    obs = _validate_obs(obs)
    if len(dW.values) != len(obs):
        raise InvalidArgumentError("number of increments differs from number of observables")
    delta = forward_generator(obs, dW.values, kappa, dW.dt)
    return KrausIncrement(expm_batch(delta, hermitian=True), delta, UnravelingKind.WIENER_GAUSSIAN)


def stochastic_unitary_increment(obs, dW: WienerIncrement, kappa: float) -> KrausIncrement:
    """Stochastic unitary ``exp(-i X⃗·√κ dW⃗)``."""
    obs = _validate_obs(obs)
    if len(dW.values) != len(obs):
        raise InvalidArgumentError("number of increments differs from number of observables")
    gen = -1j * np.sqrt(kappa) * np.tensordot(dW.values, np.asarray(obs), axes=([-1], [0]))
    return KrausIncrement(expm_batch(gen, hermitian=False), gen, UnravelingKind.STOCHASTIC_UNITARY)


def jump_kraus(obs, kappa: float, dt: float) -> list:
    """No-jump operator ``exp(-(κdt/2)X⃗²)`` followed by ``√(κdt) X_μ``."""
    obs = _validate_obs(obs)
    X2 = quadratic_term(obs)
    K0 = expm_batch(-0.5 * kappa * dt * X2, hermitian=True)
    out = [KrausIncrement(K0, None, UnravelingKind.JUMP, 0)]
    for mu, X in enumerate(obs):
        out.append(KrausIncrement(np.sqrt(kappa * dt) * X, None, UnravelingKind.JUMP, mu + 1))
    return out


def _gaussian_average(obs, kappa, dt, kind, order):
    """``E[K ⊙ K†]`` over Wiener increments by tensor Gauss-Hermite quadrature."""
    n = len(obs)
    x, w = np.polynomial.hermite_e.hermegauss(order)
    w = w / w.sum()
    nodes = np.array(list(itertools.product(x, repeat=n))) * np.sqrt(dt)
    weights = np.prod(np.array(list(itertools.product(w, repeat=n))), axis=1)
    if kind is UnravelingKind.WIENER_GAUSSIAN:
        K = expm_batch(forward_generator(obs, nodes, kappa, dt), hermitian=True)
    else:
        gen = -1j * np.sqrt(kappa) * np.tensordot(nodes, np.asarray(obs), axes=([-1], [0]))
        K = expm_batch(gen, hermitian=False)
    # rho -> K rho K†  has matrix kron(K, conj(K)) in row-major vec
    M = np.einsum("s,sij,skl->ikjl", weights, K, K.conj())
    d = K.shape[-1]
    return Superoperator(M.reshape(d * d, d * d), d)


def incremental_channel(
    obs,
    kappa: float,
    dt: float,
    kind: UnravelingKind = UnravelingKind.WIENER_GAUSSIAN,
    method: str = "analytic",
    order: int = 10,
) -> Superoperator:
    """Unconditional incremental channel of one unraveling.

    Parameters
    ----------
    obs : sequence of ndarray
        Hermitian observables.
    kappa, dt : float
    kind : UnravelingKind
    method : {'analytic', 'quadrature'}
        For the Wiener and stochastic-unitary kinds, ``'analytic'``
        returns ``exp(dt · lindbladian)``, which is what both Gaussian
        averages reduce to at first order.  ``'quadrature'`` evaluates
        the Gaussian average of ``K ⊙ K†`` itself by Gauss-Hermite
        quadrature, so that different unravelings can be compared beyond
        first order.  Ignored for jumps.
    order : int
        Gauss-Hermite nodes per outcome dimension.
    """
    obs = _validate_obs(obs)
    d = obs[0].shape[0]
    if dt == 0:
        return identity_superop(d)
    if kind is UnravelingKind.JUMP:
        M = sum(np.kron(K.matrix, K.matrix.conj()) for K in jump_kraus(obs, kappa, dt))
        return Superoperator(M, d)
    if method == "analytic":
        return channel_exp(lindbladian(obs, kappa), dt)
    if method == "quadrature":
        return _gaussian_average(obs, kappa, dt, kind, order)
    raise InvalidArgumentError(f"unknown method {method!r}")


# ---------------------------------------------------------------------------
# Meter model
# ---------------------------------------------------------------------------


@dataclass
class MeterReport:
    """Outcome of a meter-model comparison.

    ``max_deviation`` is the largest entry-wise deviation between the
    Kraus operators computed from the system-meter unitary and the
    analytic forms.  ``details`` holds per-operator deviations.
    """

    register: str
    kappa_dt: float
    max_deviation: float
    details: dict = field(default_factory=dict)


def _eig_hermitian(X):
    w, v = np.linalg.eigh((X + dag(X)) / 2)
    return w, v


def _position_grid(n_grid, half_width):
    q = np.linspace(-half_width, half_width, n_grid, endpoint=False)
    dq = q[1] - q[0]
    p = 2 * np.pi * np.fft.fftfreq(n_grid, d=dq)
    return q, dq, p


def _check_grid(n_grid, half_width, sigma):
    if n_grid < 2048 or half_width < 8 * sigma:
        raise ResolutionError(
            f"meter grid too coarse (n={n_grid}, half-width={half_width / sigma:.1f}σ); "
            "use at least 2048 points spanning ±8σ"
        )


def verify_meter_model(
    X,
    register: str,
    kappa: float,
    dt: float,
    grid: dict | None = None,
    sigma: float = 1.0,
) -> MeterReport:
    """Compare meter-model Kraus operators with their analytic forms.

    The system couples to a Gaussian meter in its ground state through
    ``H dt = 2√(κdt) X ⊗ σP``.  After the interaction the meter is read
    out in one of three bases.

    Parameters
    ----------
    X : ndarray
        Hermitian system observable.
    register : {'position', 'momentum', 'number'}
    kappa, dt : float
    grid : dict, optional
        ``{'n': points, 'half_width': extent}`` for the position grid, or
        ``{'levels': n}`` for the number basis.  Defaults: 4096 points
        over ±12σ, and 40 oscillator levels.
    sigma : float
        Meter ground-state position width.

    Returns
    -------
    MeterReport
        ``max_deviation`` is taken over all grid outcomes and matrix
        entries.  Position amplitudes are densities in ``q``, momentum
        amplitudes densities in ``p``.

    Notes
    -----
    Position outcome ``q`` maps to ``dW = (q/σ)√dt`` and the Kraus
    operator is ``√(dμ/dq) exp(X√κ dW - X²κdt)``.  Momentum outcome ``p``
    maps to ``dW = 2σp√dt`` and the Kraus operator is
    ``√(dμ/dp) exp(-iX√κ dW)``.  In the number basis ``<0|U|0>`` and
    ``<1|U|0>`` are compared with ``K_0`` and ``K_1`` of the jump
    unraveling; the ``<2|U|0>`` amplitude, which is of order ``κdt``, is
    reported in ``details['two_quanta_norm']``.
    """
    X = np.asarray(X, dtype=complex)
    if not is_hermitian(X, 1e-10):
        raise InvalidArgumentError("X must be Hermitian")
    register = register.lower()
    grid = dict(grid or {})
    d = X.shape[0]
    c = 2 * np.sqrt(kappa * dt)
    lam, V = _eig_hermitian(X)

    if register in ("position", "momentum"):
        n_grid = int(grid.get("n", 4096))
        half_width = float(grid.get("half_width", 12 * sigma))
        _check_grid(n_grid, half_width, sigma)
        q, dq, p = _position_grid(n_grid, half_width)
        psi0 = (2 * np.pi * sigma**2) ** -0.25 * np.exp(-(q**2) / (4 * sigma**2))
        phi0 = np.fft.fft(psi0)
        # momentum P generates translations: exp(-i s P) psi(q) = psi(q - s)
        shifts = c * sigma * lam
        phase = np.exp(-1j * np.outer(shifts, p))
        branches_q = np.fft.ifft(phi0[None, :] * phase, axis=1)
        if register == "position":
            amps = branches_q
            dW = q / sigma * np.sqrt(dt)
            dens = (2 * np.pi * sigma**2) ** -0.5 * np.exp(-(q**2) / (2 * sigma**2))
            gen = lam[:, None] * np.sqrt(kappa) * dW[None, :] - lam[:, None] ** 2 * kappa * dt
            analytic = np.sqrt(dens)[None, :] * np.exp(gen)
        else:
            # continuum momentum amplitude (2π)^{-1/2} ∫ e^{-ipq} psi(q) dq
            amps = np.fft.fft(branches_q, axis=1) * dq / np.sqrt(2 * np.pi)
            amps = amps * np.exp(-1j * p * q[0])[None, :]
            dW = 2 * sigma * p * np.sqrt(dt)
            dens_p = (2 * sigma**2 / np.pi) ** 0.5 * np.exp(-2 * sigma**2 * p**2)
            analytic = np.sqrt(dens_p)[None, :] * np.exp(
                -1j * lam[:, None] * np.sqrt(kappa) * dW[None, :]
            )
        # Kraus matrices per outcome: V diag(amp) V†
        diff = amps - analytic
        per_entry = np.einsum("ik,kg,jk->gij", V, diff, V.conj())
        dev = float(np.max(np.abs(per_entry)))
        edge = float(np.max(np.abs(branches_q[:, [0, -1]])))
        if edge > 1e-8:
            raise ResolutionError(f"meter wavefunction reaches the grid edge ({edge:.1e}); widen the grid")
        return MeterReport(register, kappa * dt, dev, {"grid_points": n_grid, "edge_amplitude": edge})

    if register == "number":
        levels = int(grid.get("levels", 40))
        if levels < 30:
            raise ResolutionError("number-basis meter needs at least 30 levels")
        A = np.diag(np.sqrt(np.arange(1, levels)), k=1)
        sigmaP = -1j * (A - A.T) / 2  # σP for q = σ(A + A†)
        H = c * np.kron(X, sigmaP)
        U = expm_batch(-1j * H, hermitian=False)
        # system block <k|U|0> of the meter: rows (i, k), column (j, 0)
        U4 = U.reshape(d, levels, d, levels)
        blocks = [U4[:, k, :, 0] for k in range(3)]
        K = jump_kraus([X], kappa, dt)
        dev0 = float(np.max(np.abs(blocks[0] - K[0].matrix)))
        dev1 = float(np.max(np.abs(blocks[1] - K[1].matrix)))
        two = float(np.linalg.norm(blocks[2], 2))
        tail = float(np.max(np.abs(U4[:, -2:, :, 0])))
        if tail > 1e-12:
            raise ResolutionError("meter oscillator truncation is populated; increase levels")
        return MeterReport(
            register,
            kappa * dt,
            max(dev0, dev1),
            {"K0_deviation": dev0, "K1_deviation": dev1, "two_quanta_norm": two, "levels": levels},
        )

    raise InvalidArgumentError(f"unknown register {register!r}")
