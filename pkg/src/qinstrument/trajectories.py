"""Instrument trajectories, linear SDEs and stochastic master equations.

The accumulated Kraus operator after ``K = T/dt`` steps is the
time-ordered product

    L_T = L_dt(dW_{K-1}) ... L_dt(dW_1) L_dt(dW_0).

Norms of ``L_T`` shrink like ``exp(-c κT)``, so trajectories store a unit
Frobenius-norm direction ``kraus`` and a scalar ledger ``log_norm`` with
``L_T = exp(log_norm) * kraus``.

Outcomes are sampled either under the ostensible Wiener measure, for
which ``E[L†L] = 1``, or under the Born rule for an initial state
``rho0``, for which each increment acquires the mean
``2√κ <X_μ>_{rho_t} dt``.
"""

from __future__ import annotations

import enum
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .exceptions import (
    DegenerateTrajectoryError,
    InvalidArgumentError,
    PositivityViolationError,
    WrongMeasureError,
)
from .kernels import forward_generator, quadratic_term
from .linalg_ops import dag, expm_batch, is_hermitian
from .stats import bootstrap, trajectory_rng

__all__ = [
    "BornRule",
    "IntegratorKind",
    "GeneratorStepper",
    "StateTrajectory",
    "TrajectoryEnsemble",
    "TrajectoryRecord",
    "TransitionEstimate",
    "WIENER",
    "born_increment_mean_check",
    "evolve_linear_state",
    "evolve_sme",
    "integrator_consistency",
    "n_steps",
    "pile_up",
    "pile_up_ensemble",
    "transition_estimators_agree",
]

WIENER = "wiener"
SINGULAR_TOL = 1e-12
WORKERS_ENV = "QINSTRUMENT_WORKERS"


class IntegratorKind(enum.Enum):
    """Step rules for ``L <- step(delta) L``.

    ``EXACT`` applies ``exp(delta)``.  ``EULER_ITO`` applies the truncated
    series ``1 + delta + delta²/2``.  ``MMCSD`` solves the modified
    Maurer-Cartan relation ``M - M²/2 = delta`` for the increment
    ``M = dL L^{-1}``, i.e. ``M = 1 - (1 - 2 delta)^{1/2}``.  The
    mid-point (Stratonovich) form is the same object written differently
    and has no separate scheme.
    """

    EXACT = "exact"
    EULER_ITO = "euler_ito"
    MMCSD = "mmcsd"


@dataclass(frozen=True)
class BornRule:
    """Born-rule sampling tag carrying the initial state."""

    rho0: np.ndarray


def _sampling_label(sampling) -> str:
    return "wiener" if _is_wiener(sampling) else "born"


def _is_wiener(sampling) -> bool:
    return isinstance(sampling, str) and sampling.lower() == WIENER


def n_steps(T: float, dt: float) -> int:
    """Number of steps ``K`` with ``T = K dt``."""
    if dt <= 0:
        raise InvalidArgumentError("dt must be positive")
    if T < 0:
        raise InvalidArgumentError("T must be nonnegative")
    K = int(round(T / dt))
    if abs(K * dt - T) > 1e-9 * max(T, dt):
        raise InvalidArgumentError(f"T={T} is not an integer multiple of dt={dt}")
    return K


@dataclass
class TrajectoryRecord:
    """One piled-up instrument trajectory.

    Attributes
    ----------
    times : ndarray, shape (K + 1,)
    increments : ndarray, shape (K, n) or None
        Registered outcomes ``dW``.
    kraus : ndarray
        Unit Frobenius-norm direction of ``L_T``.
    log_norm : float
    sampling : str or BornRule
    integrator : IntegratorKind
    min_singular_ratio : float
        Smallest observed ``s_min / s_max`` of ``kraus`` at checkpoints.
    observables, kappa
        Measurement setup, kept so the path can be replayed.
    """

    times: np.ndarray
    increments: np.ndarray | None
    kraus: np.ndarray
    log_norm: float
    sampling: object = WIENER
    integrator: IntegratorKind = IntegratorKind.EXACT
    min_singular_ratio: float = 1.0
    observables: np.ndarray | None = None
    kappa: float | None = None

    @property
    def L(self) -> np.ndarray:
        """The unnormalized Kraus operator ``exp(log_norm) * kraus``."""
        return np.exp(self.log_norm) * self.kraus

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0]) if len(self.times) > 1 else 0.0


@dataclass
class TrajectoryEnsemble:
    """Batched trajectories; row ``i`` comes from stream ``(seed, i)``."""

    kraus: np.ndarray
    log_norm: np.ndarray
    sampling: object
    integrator: IntegratorKind
    kappa: float
    T: float
    dt: float
    seed: int
    ids: np.ndarray
    increments: np.ndarray | None = None
    discarded: int = 0
    extras: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.log_norm)

    def povm_elements(self) -> np.ndarray:
        """``L†L = exp(2 log_norm) kraus† kraus`` per trajectory."""
        E = dag(self.kraus) @ self.kraus
        return np.exp(2 * self.log_norm)[:, None, None] * E

    def record(self, i: int) -> TrajectoryRecord:
        K = n_steps(self.T, self.dt)
        inc = None if self.increments is None else self.increments[i]
        return TrajectoryRecord(
            np.arange(K + 1) * self.dt, inc, self.kraus[i], float(self.log_norm[i]),
            self.sampling, self.integrator, kappa=self.kappa,
        )


class GeneratorStepper:
    """Incremental Kraus operators from the forward generator.

    Parameters
    ----------
    obs : sequence of ndarray
        Hermitian observables.
    kappa, dt : float
    integrator : IntegratorKind
    quadratic : ndarray, optional
        Override for ``X⃗²``; defaults to ``Σ X_μ²`` computed in the given
        representation.
    """

    def __init__(self, obs, kappa, dt, integrator=IntegratorKind.EXACT, quadratic=None):
        self.obs = np.asarray([np.asarray(X, dtype=complex) for X in obs])
        self.kappa = float(kappa)
        self.dt = float(dt)
        self.integrator = IntegratorKind(integrator)
        self.X2 = quadratic_term(self.obs) if quadratic is None else np.asarray(quadratic)
        self.dim = self.obs.shape[-1]

    def __call__(self, dW):
        delta = forward_generator(self.obs, dW, self.kappa, self.dt, self.X2)
        return apply_integrator(delta, self.integrator)


def apply_integrator(delta, integrator: IntegratorKind):
    """Incremental factor ``L_{t+dt} L_t^{-1}`` for Hermitian ``delta``."""
    if integrator is IntegratorKind.EXACT:
        return expm_batch(delta, hermitian=True)
    eye = np.eye(delta.shape[-1])
    if integrator is IntegratorKind.EULER_ITO:
        return eye + delta + 0.5 * delta @ delta
    w, v = np.linalg.eigh(delta)
    if np.any(w >= 0.5):
        raise InvalidArgumentError("MMCSD step undefined: reduce dt")
    m = 1.0 - np.sqrt(1.0 - 2.0 * w)
    return eye + (v * m[..., None, :]) @ dag(v)


def _expectations(L, rho0, obs):
    """``<X_μ>`` in the normalized states ``L rho0 L† / tr``; shape (B, n)."""
    rho = L @ rho0 @ dag(L)
    tr = np.real(np.trace(rho, axis1=-2, axis2=-1))
    ex = np.real(np.einsum("mij,bji->bm", obs, rho))
    return ex / tr[:, None]


def _run_batch(stepper, noise, dt, sampling, check_every=100, store=False, sing_tol=SINGULAR_TOL):
    """Pile up a batch of trajectories driven by standardized noise.

    ``noise`` has shape ``(B, K, n)`` and holds zero-mean increments of
    variance ``dt``.  Returns kraus, log_norm, outcomes (or None),
    degenerate mask and the minimal singular ratio per trajectory.
    """
    B, K, n = noise.shape
    d = stepper.dim
    L = np.broadcast_to(np.eye(d, dtype=complex), (B, d, d)).copy()
    log_norm = np.zeros(B)
    outcomes = np.empty_like(noise) if store else None
    bad = np.zeros(B, dtype=bool)
    min_ratio = np.ones(B)
    born = not _is_wiener(sampling)
    if born:
        rho0 = np.asarray(sampling.rho0, dtype=complex)
        obs = getattr(stepper, "obs", None)
        if obs is None:
            raise InvalidArgumentError("Born-rule sampling needs a stepper exposing its observables")
        kap = stepper.kappa
    for k in range(K):
        dW = noise[:, k, :]
        if born:
            dW = dW + 2 * np.sqrt(kap) * _expectations(L, rho0, obs) * dt
        if store:
            outcomes[:, k, :] = dW
        L = stepper(dW) @ L
        nrm = np.linalg.norm(L, axis=(-2, -1))
        L /= nrm[:, None, None]
        log_norm += np.log(nrm)
        if (k + 1) % check_every == 0 or k == K - 1:
            s = np.linalg.svd(L, compute_uv=False)
            ratio = s[:, -1] / s[:, 0]
            min_ratio = np.minimum(min_ratio, np.nan_to_num(ratio))
            newly = ~np.isfinite(ratio) | (ratio < sing_tol)
            if np.any(newly):
                bad |= newly
                L[newly] = np.eye(d)
    return L, log_norm, outcomes, bad, min_ratio


def pile_up(
    obs,
    kappa: float,
    T: float,
    dt: float,
    rng: np.random.Generator | None = None,
    sampling=WIENER,
    integrator=IntegratorKind.EXACT,
    noise=None,
    stepper=None,
    singular_tol: float = SINGULAR_TOL,
) -> TrajectoryRecord:
    """Pile up one trajectory of incremental Kraus operators.

    Parameters
    ----------
    obs : sequence of ndarray
        Hermitian observables measured simultaneously.
    kappa, T, dt : float
        Rate, duration and step; ``T`` must be a multiple of ``dt``.
    rng : numpy.random.Generator, optional
        Noise source; ignored when ``noise`` is given.
    sampling : 'wiener' or BornRule
    integrator : IntegratorKind
    noise : ndarray, shape (K, n), optional
        Zero-mean increments of variance ``dt`` to replay.  Under Wiener
        sampling these are the outcomes themselves; under the Born rule
        the state-dependent mean is added.
    stepper : callable, optional
        Custom map from outcome batches ``(B, n)`` to incremental factors.
    singular_tol : float
        Paths whose ``s_min / s_max`` falls below this are degenerate.
        Truncated oscillators need a much smaller value than spins.

    Returns
    -------
    TrajectoryRecord

    Raises
    ------
    DegenerateTrajectoryError
        If ``kraus`` becomes numerically singular.
    """
    K = n_steps(T, dt)
    if kappa * dt > 0.05:
        warnings.warn(f"κdt = {kappa * dt:.3g} exceeds 0.05; incremental expansion is coarse")
    stepper = stepper or GeneratorStepper(obs, kappa, dt, integrator)
    nobs = len(obs)
    if noise is None:
        if rng is None:
            raise InvalidArgumentError("either rng or noise is required")
        noise = rng.standard_normal((K, nobs)) * np.sqrt(dt)
    noise = np.asarray(noise, dtype=float).reshape(K, nobs)
    L, ln, out, bad, ratio = _run_batch(stepper, noise[None], dt, sampling, store=True, sing_tol=singular_tol)
    if bad[0]:
        raise DegenerateTrajectoryError("Kraus operator became singular along the path")
    return TrajectoryRecord(
        np.arange(K + 1) * dt, out[0], L[0], float(ln[0]), sampling,
        IntegratorKind(integrator), float(ratio[0]),
        np.asarray(obs, dtype=complex), float(kappa),
    )


def _ensemble_chunk(args):
    stepper, seed, ids, K, nobs, dt, sampling, store, noise_fn, sing_tol = args
    noise = np.empty((len(ids), K, nobs))
    for row, i in enumerate(ids):
        noise[row] = noise_fn(trajectory_rng(seed, i), K, nobs, dt)
    return _run_batch(stepper, noise, dt, sampling, store=store, sing_tol=sing_tol)


def _gaussian_noise(rng, K, nobs, dt):
    return rng.standard_normal((K, nobs)) * np.sqrt(dt)


def default_workers() -> int:
    """Worker count from the ``QINSTRUMENT_WORKERS`` environment variable."""
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def pile_up_ensemble(
    obs,
    kappa: float,
    T: float,
    dt: float,
    N: int,
    seed: int,
    sampling=WIENER,
    integrator=IntegratorKind.EXACT,
    store_increments: bool = False,
    workers: int | None = None,
    chunk: int = 1000,
    stepper=None,
    singular_tol: float = SINGULAR_TOL,
) -> TrajectoryEnsemble:
    """Pile up ``N`` trajectories with per-trajectory seeded streams.

    Trajectory ``i`` draws its noise from ``trajectory_rng(seed, i)``, so
    the ensemble is identical for any ``chunk`` size and worker count.
    Degenerate trajectories are dropped and counted in ``discarded``.
    """
    if N < 1:
        raise InvalidArgumentError("N must be at least 1")
    K = n_steps(T, dt)
    stepper = stepper or GeneratorStepper(obs, kappa, dt, integrator)
    nobs = len(obs)
    workers = workers or default_workers()
    tasks = [
        (stepper, seed, np.arange(s, min(s + chunk, N)), K, nobs, dt, sampling, store_increments, _gaussian_noise, singular_tol)
        for s in range(0, N, chunk)
    ]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_ensemble_chunk, tasks))
    else:
        results = [_ensemble_chunk(t) for t in tasks]
    L = np.concatenate([r[0] for r in results])
    ln = np.concatenate([r[1] for r in results])
    bad = np.concatenate([r[3] for r in results])
    inc = np.concatenate([r[2] for r in results]) if store_increments else None
    ids = np.arange(N)
    keep = ~bad
    return TrajectoryEnsemble(
        L[keep], ln[keep], sampling, IntegratorKind(integrator), kappa, T, dt, seed,
        ids[keep], None if inc is None else inc[keep], int(bad.sum()),
    )


def integrator_consistency(obs, kappa: float, T: float, dts: Sequence[float], rng, fine_dt=None):
    """Exact versus Euler-Itô final Kraus operators on a common noise path.

    A Brownian path is sampled at the finest step and summed into coarser
    increments, so every ``dt`` in ``dts`` replays the same path.

    Returns
    -------
    dts : ndarray
    errors : ndarray
        ``‖L_exact - L_euler‖ / ‖L_exact‖`` per step size.
    slope : float
        Least-squares log-log slope of ``errors`` against ``dts``.
    """
    dts = np.sort(np.asarray(dts, dtype=float))[::-1]
    fine_dt = fine_dt or dts[-1]
    Kf = n_steps(T, fine_dt)
    fine = rng.standard_normal((Kf, len(obs))) * np.sqrt(fine_dt)
    errs = []
    for dt in dts:
        m = int(round(dt / fine_dt))
        noise = fine.reshape(-1, m, len(obs)).sum(axis=1)
        a = pile_up(obs, kappa, T, dt, noise=noise, integrator=IntegratorKind.EXACT).L
        b = pile_up(obs, kappa, T, dt, noise=noise, integrator=IntegratorKind.EULER_ITO).L
        errs.append(np.linalg.norm(a - b) / np.linalg.norm(a))
    errs = np.asarray(errs)
    slope = np.polyfit(np.log(dts), np.log(errs), 1)[0]
    return dts, errs, float(slope)


@dataclass
class StateTrajectory:
    """States along a trajectory.

    ``states[k]`` is the state at ``times[k]``.  ``innovations`` holds
    ``dI = dW - 2√κ<X>dt`` for stochastic-master-equation runs.
    """

    times: np.ndarray
    states: np.ndarray
    normalized: bool
    innovations: np.ndarray | None = None
    outcomes: np.ndarray | None = None


def evolve_linear_state(rho0, record: TrajectoryRecord) -> StateTrajectory:
    """Unnormalized state ``rho~_{t+dt} = L_dt rho~_t L_dt†`` along a record.

    The incremental factors are rebuilt from the stored outcomes with the
    record's integrator, so ``states[-1]`` equals
    ``exp(2 log_norm) kraus rho0 kraus†``.
    """
    raise_if_not_state(rho0)
    if record.increments is None or record.observables is None:
        raise InvalidArgumentError("record lacks stored outcomes or observables")
    step = GeneratorStepper(record.observables, record.kappa, record.dt, record.integrator)
    rho = np.asarray(rho0, dtype=complex)
    states = [rho]
    for dW in record.increments:
        Ldt = step(dW[None])[0]
        rho = Ldt @ rho @ dag(Ldt)
        states.append(rho)
    return StateTrajectory(record.times, np.asarray(states), False, outcomes=record.increments)


def raise_if_not_state(rho, tol: float = 1e-9):
    rho = np.asarray(rho)
    if not is_hermitian(rho, tol):
        raise InvalidArgumentError("density matrix must be Hermitian")
    if abs(np.trace(rho) - 1) > tol:
        raise InvalidArgumentError("density matrix must have unit trace")
    if np.min(np.linalg.eigvalsh((rho + dag(rho)) / 2)) < -tol:
        raise InvalidArgumentError("density matrix must be positive")


def evolve_sme(
    rho0,
    obs,
    kappa: float,
    T: float,
    dt: float,
    rng: np.random.Generator,
    method: str = "kraus",
    positivity_tol: float = 1e-8,
) -> StateTrajectory:
    """Integrate the stochastic master equation under Born-rule outcomes.

    Each step draws ``dW = dZ + 2√κ<X>dt`` and records the innovation
    ``dI = dZ``.  The update is

        dρ = √κ dI⃗·(X⃗ρ + ρX⃗ - 2<X⃗>ρ) + κdt(Σ X_μ ρ X_μ - ½{X⃗², ρ}).

    Parameters
    ----------
    method : {'kraus', 'euler'}
        ``'kraus'`` advances by the normalized incremental Kraus map
        ``L_dt ρ L_dt† / tr``, which agrees with the equation above to the
        retained order and preserves positivity and purity exactly.
        ``'euler'`` applies the increment above literally and checks
        positivity.

    Raises
    ------
    PositivityViolationError
        Euler update produced an eigenvalue below ``-positivity_tol``.
    """
    raise_if_not_state(rho0)
    K = n_steps(T, dt)
    obs = np.asarray([np.asarray(X, dtype=complex) for X in obs])
    X2 = quadratic_term(obs)
    step = GeneratorStepper(obs, kappa, dt)
    rho = np.asarray(rho0, dtype=complex)
    states = [rho]
    dI = rng.standard_normal((K, len(obs))) * np.sqrt(dt)
    dWs = np.empty_like(dI)
    sk = np.sqrt(kappa)
    for k in range(K):
        ex = np.real(np.einsum("mij,ji->m", obs, rho))
        dW = dI[k] + 2 * sk * ex * dt
        dWs[k] = dW
        if method == "kraus":
            Ldt = step(dW[None])[0]
            new = Ldt @ rho @ dag(Ldt)
        elif method == "euler":
            Xr = np.einsum("m,mij->ij", dI[k], obs)
            new = rho + sk * (Xr @ rho + rho @ Xr - 2 * np.dot(dI[k], ex) * rho)
            new = new + kappa * dt * (
                np.einsum("mij,jk,mkl->il", obs, rho, obs) - 0.5 * (X2 @ rho + rho @ X2)
            )
            lo = np.min(np.linalg.eigvalsh((new + dag(new)) / 2))
            if lo < -positivity_tol:
                raise PositivityViolationError(
                    f"eigenvalue {lo:.2e} at step {k}; reduce dt below {dt / 4:g}"
                )
        else:
            raise InvalidArgumentError(f"unknown method {method!r}")
        new = (new + dag(new)) / 2
        rho = new / np.real(np.trace(new))
        states.append(rho)
    return StateTrajectory(np.arange(K + 1) * dt, np.asarray(states), True, dI, dWs)


def born_increment_mean_check(rho, obs, kappa: float, dt: float, N: int, rng, nsigma: float = 5.0) -> dict:
    """Sample Born-rule increments and compare their moments with theory.

    Increments are drawn by rejection-free exact sampling of the outcome
    density ``tr(L_dt ρ L_dt†) dμ`` for a single step, using importance
    weights on Wiener samples, so the check does not assume the
    shifted-Gaussian form it tests.

    Returns
    -------
    dict
        ``mean``, ``expected_mean``, ``mean_sigma``, ``second_moment``,
        ``expected_second_moment`` and ``passed``.
    """
    if N < 10_000:
        raise InvalidArgumentError("N must be at least 1e4")
    obs = np.asarray([np.asarray(X, dtype=complex) for X in obs])
    n = len(obs)
    dZ = rng.standard_normal((N, n)) * np.sqrt(dt)
    L = GeneratorStepper(obs, kappa, dt)(dZ)
    w = np.real(np.einsum("bij,jk,bik->b", L, np.asarray(rho, dtype=complex), L.conj()))
    w = w / w.mean()
    mean = (w[:, None] * dZ).mean(axis=0)
    second = np.einsum("b,bm,bn->mn", w, dZ, dZ) / N
    ex = np.real(np.einsum("mij,ji->m", obs, rho))
    expected = 2 * np.sqrt(kappa) * ex * dt
    sig = np.sqrt(np.var(w[:, None] * dZ, axis=0) / N)
    sig2 = np.sqrt(np.var(np.einsum("b,bm,bn->bmn", w, dZ, dZ), axis=0) / N)
    ok_mean = np.all(np.abs(mean - expected) <= nsigma * sig)
    ok_sec = np.all(np.abs(second - dt * np.eye(n)) <= nsigma * sig2)
    return {
        "mean": mean,
        "expected_mean": expected,
        "mean_sigma": sig,
        "second_moment": second,
        "expected_second_moment": dt * np.eye(n),
        "passed": bool(ok_mean and ok_sec),
    }


@dataclass
class TransitionEstimate:
    wiener_weighted: float
    born: float
    wiener_error: float
    born_error: float
    effective_sample_size: float

    @property
    def combined_error(self) -> float:
        return float(np.hypot(self.wiener_error, self.born_error))

    def agree(self, nsigma: float = 5.0) -> bool:
        return abs(self.wiener_weighted - self.born) <= nsigma * max(self.combined_error, 1e-15)


def _final_states(kraus, rho0):
    rho = kraus @ rho0 @ dag(kraus)
    tr = np.real(np.trace(rho, axis1=-2, axis2=-1))
    return rho / tr[:, None, None], tr


def transition_estimators_agree(
    rho0,
    f: Callable,
    obs,
    kappa: float,
    T: float,
    dt: float,
    N: int,
    seed: int,
    n_boot: int = 200,
) -> TransitionEstimate:
    """Estimate ``E[f(rho_F)]`` under the Born rule in two ways.

    (a) Wiener-sampled trajectories weighted by
    ``exp(2 log_norm) tr(kraus ρ0 kraus†) = tr(L†L ρ0)``; (b) Born-sampled
    trajectories with unit weights.  The Wiener and Born ensembles use
    disjoint seed streams.

    Parameters
    ----------
    f : callable
        Maps a stack of normalized states ``(B, d, d)`` to values ``(B,)``.
    """
    raise_if_not_state(rho0)
    rho0 = np.asarray(rho0, dtype=complex)
    if T == 0:
        v = float(np.real(f(rho0[None]))[0])
        return TransitionEstimate(v, v, 0.0, 0.0, float(N))
    wien = pile_up_ensemble(obs, kappa, T, dt, N, seed)
    born = pile_up_ensemble(obs, kappa, T, dt, N, seed + 1, sampling=BornRule(rho0))
    rw, trw = _final_states(wien.kraus, rho0)
    logw = 2 * wien.log_norm + np.log(trw)
    w = np.exp(logw - logw.max())
    fw = np.real(f(rw))
    ess = w.sum() ** 2 / (w**2).sum()
    if ess < 100:
        warnings.warn(f"weighted estimator has effective sample size {ess:.1f}")

    def ratio(v, ww):
        return np.sum(ww * v) / np.sum(ww)

    est_w, err_w = bootstrap(ratio, fw, n_boot=n_boot, weights=w)
    rb, _ = _final_states(born.kraus, rho0)
    fb = np.real(f(rb))
    est_b, err_b = bootstrap(np.mean, fb, n_boot=n_boot)
    return TransitionEstimate(float(est_w), float(est_b), float(err_w), float(err_b), float(ess))


def completeness_check_measure(ensemble: TrajectoryEnsemble):
    if not _is_wiener(ensemble.sampling):
        raise WrongMeasureError("completeness holds only for Wiener-sampled ensembles")
