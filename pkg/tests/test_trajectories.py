import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_hermitian, random_state
from qinstrument.exceptions import InvalidArgumentError, WrongMeasureError
from qinstrument.kernels import WienerIncrement, kraus_increment
from qinstrument.linalg_ops import build_spin_operators, channel_exp, lindbladian
from qinstrument.stats import trajectory_rng
from qinstrument.trajectories import (
    BornRule,
    IntegratorKind,
    born_increment_mean_check,
    completeness_check_measure,
    evolve_linear_state,
    evolve_sme,
    integrator_consistency,
    n_steps,
    pile_up,
    pile_up_ensemble,
    transition_estimators_agree,
)

HALF = build_spin_operators("1/2")
OBS = [HALF["Jx"], HALF["Jy"], HALF["Jz"]]


def test_n_steps():
    assert n_steps(1.0, 1e-3) == 1000
    with pytest.raises(InvalidArgumentError):
        n_steps(1.0, 0.3)


def test_single_observable_closed_form(rng):
    X = np.diag([1.0, -0.5, 2.0])
    kappa, T, dt = 0.8, 0.5, 1e-3
    rec = pile_up([X], kappa, T, dt, rng=rng)
    a = np.sqrt(kappa) * rec.increments.sum()
    expected = np.diag(np.exp(-np.diag(X) ** 2 * kappa * T + np.diag(X) * a))
    np.testing.assert_allclose(rec.L, expected, rtol=1e-12, atol=1e-14)


def test_one_step_equals_kraus_increment():
    dW = np.array([0.01, -0.02, 0.03])
    rec = pile_up(OBS, 1.0, 1e-3, 1e-3, noise=dW[None])
    K = kraus_increment(OBS, WienerIncrement(dW, 1e-3), 1.0).matrix
    np.testing.assert_allclose(rec.L, K, atol=1e-14)


def test_group_property(rng):
    noise = rng.standard_normal((300, 3)) * np.sqrt(1e-3)
    full = pile_up(OBS, 1.0, 0.3, 1e-3, noise=noise).L
    a = pile_up(OBS, 1.0, 0.1, 1e-3, noise=noise[:100]).L
    b = pile_up(OBS, 1.0, 0.2, 1e-3, noise=noise[100:]).L
    np.testing.assert_allclose(full, b @ a, atol=1e-13)


def test_zero_noise_zero_kappa_identity():
    for integ in IntegratorKind:
        rec = pile_up(OBS, 0.0, 0.01, 1e-3, noise=np.zeros((10, 3)), integrator=integ)
        np.testing.assert_array_equal(rec.L, np.eye(2))


def test_euler_single_step_oracle():
    X2 = 0.75 * 1e-3
    e = pile_up(OBS, 1.0, 1e-3, 1e-3, noise=np.zeros((1, 3)), integrator=IntegratorKind.EULER_ITO).L
    x = pile_up(OBS, 1.0, 1e-3, 1e-3, noise=np.zeros((1, 3))).L
    np.testing.assert_allclose(e, (1 - X2 + X2**2 / 2) * np.eye(2), atol=1e-16)
    np.testing.assert_allclose(x, np.exp(-X2) * np.eye(2), atol=1e-16)
    assert np.max(np.abs(e - x)) < X2**3


def test_warns_on_coarse_step():
    with pytest.warns(UserWarning):
        pile_up([np.diag([1.0, -1.0])], 1.0, 0.1, 0.1, noise=np.zeros((1, 1)))


def test_integrator_consistency_commuting_slope_one(rng):
    # one path gives a noisy slope; the mean error curve is first order
    dts = [4e-3, 2e-3, 1e-3, 5e-4]
    errs = np.mean([integrator_consistency([np.diag([1.0, -1.0])], 1.0, 0.5, dts, rng)[1] for _ in range(30)], axis=0)
    slope = np.polyfit(np.log(np.sort(dts)[::-1]), np.log(errs), 1)[0]
    assert slope == pytest.approx(1.0, abs=0.2)


def test_integrator_consistency_noncommuting(rng):
    _, _, slope = integrator_consistency(OBS, 1.0, 0.5, [4e-3, 2e-3, 1e-3, 5e-4], rng)
    assert slope >= 0.5


def test_mmcsd_close_to_exact(rng):
    noise = rng.standard_normal((200, 3)) * np.sqrt(1e-3)
    a = pile_up(OBS, 1.0, 0.2, 1e-3, noise=noise).L
    b = pile_up(OBS, 1.0, 0.2, 1e-3, noise=noise, integrator=IntegratorKind.MMCSD).L
    assert np.linalg.norm(a - b) / np.linalg.norm(a) < 1e-3


def test_ensemble_deterministic_across_chunks_and_workers():
    a = pile_up_ensemble(OBS, 1.0, 0.05, 1e-3, 37, seed=9, chunk=5)
    b = pile_up_ensemble(OBS, 1.0, 0.05, 1e-3, 37, seed=9, chunk=37, workers=2)
    np.testing.assert_array_equal(a.kraus, b.kraus)
    np.testing.assert_array_equal(a.log_norm, b.log_norm)


def test_trajectory_streams_distinct():
    x = trajectory_rng(1, 0).standard_normal(4)
    y = trajectory_rng(1, 1).standard_normal(4)
    z = trajectory_rng(1, 0).standard_normal(4)
    assert not np.allclose(x, y)
    np.testing.assert_array_equal(x, z)


def test_ensemble_record_replays():
    ens = pile_up_ensemble(OBS, 1.0, 0.02, 1e-3, 3, seed=4, store_increments=True)
    rec = ens.record(2)
    again = pile_up(OBS, 1.0, 0.02, 1e-3, noise=rec.increments)
    np.testing.assert_allclose(again.L, np.exp(ens.log_norm[2]) * ens.kraus[2], atol=1e-13)


def test_completeness_shrinks_with_N():
    devs = []
    for N in (300, 3000):
        E = pile_up_ensemble(OBS, 1.0, 0.5, 1e-2, N, seed=31).povm_elements()
        devs.append(np.linalg.norm(E.mean(axis=0) - np.eye(2)))
    assert devs[1] < devs[0]
    assert devs[1] < 0.1


def test_completeness_requires_wiener():
    ens = pile_up_ensemble(OBS, 1.0, 0.01, 1e-3, 4, seed=1, sampling=BornRule(np.eye(2) / 2))
    with pytest.raises(WrongMeasureError):
        completeness_check_measure(ens)


@given(st.integers(0, 2**31))
def test_linear_state_final_matches_kraus(seed):
    rng = np.random.default_rng(seed)
    rho0 = random_state(rng, 2)
    rec = pile_up(OBS, 1.0, 0.05, 1e-3, rng=rng)
    st_ = evolve_linear_state(rho0, rec)
    np.testing.assert_allclose(st_.states[-1], rec.L @ rho0 @ rec.L.conj().T, atol=1e-10)
    assert np.real(np.trace(st_.states[-1])) == pytest.approx(np.real(np.trace(rec.L.conj().T @ rec.L @ rho0)), rel=1e-10)


def test_linear_state_zero_noise():
    X = np.diag([1.0, 2.0])
    rec = pile_up([X], 1.0, 0.1, 1e-2, noise=np.zeros((10, 1)))
    rho = evolve_linear_state(np.eye(2) / 2, rec).states[-1]
    E = np.diag(np.exp(-np.diag(X) ** 2 * 0.1))
    np.testing.assert_allclose(rho, E @ (np.eye(2) / 2) @ E, atol=1e-14)


def test_linear_ensemble_mean_matches_channel():
    rho0 = np.array([[0.7, 0.2 - 0.1j], [0.2 + 0.1j, 0.3]])
    ens = pile_up_ensemble(OBS, 1.0, 0.5, 1e-2, 4000, seed=5)
    L = ens.kraus * np.exp(ens.log_norm)[:, None, None]
    rt = L @ rho0 @ np.conj(np.swapaxes(L, 1, 2))
    mean = rt.mean(axis=0)
    sig = rt.std(axis=0) / np.sqrt(len(rt))
    ref = channel_exp(lindbladian(OBS, 1.0), 0.5)(rho0)
    assert np.all(np.abs(mean - ref) <= 5 * sig + 1e-3)


def test_sme_trace_purity_and_fixed_point(rng):
    psi = np.array([1.0, 1.0]) / np.sqrt(2)
    tr = evolve_sme(np.outer(psi, psi), OBS, 1.0, 0.2, 1e-3, rng)
    traces = np.real(np.trace(tr.states, axis1=1, axis2=2))
    np.testing.assert_allclose(traces, 1, atol=1e-9)
    pur = np.real(np.einsum("kij,kji->k", tr.states, tr.states))
    np.testing.assert_allclose(pur, 1, atol=1e-8)
    Z = HALF["Jz"]
    up = np.diag([1.0, 0.0]).astype(complex)
    fixed = evolve_sme(up, [Z], 1.0, 0.1, 1e-3, rng)
    np.testing.assert_allclose(fixed.states, np.broadcast_to(up, fixed.states.shape), atol=1e-12)


def test_sme_euler_close_to_kraus():
    rho0 = np.eye(2) / 2
    a = evolve_sme(rho0, OBS, 1.0, 0.1, 1e-4, np.random.default_rng(3)).states[-1]
    b = evolve_sme(rho0, OBS, 1.0, 0.1, 1e-4, np.random.default_rng(3), method="euler").states[-1]
    assert np.max(np.abs(a - b)) < 5e-3


def test_sme_ensemble_mean_matches_channel():
    rho0 = np.array([[0.9, 0.3], [0.3, 0.1]], dtype=complex)
    finals = np.array([evolve_sme(rho0, OBS, 1.0, 0.3, 1e-2, np.random.default_rng(s)).states[-1] for s in range(600)])
    ref = channel_exp(lindbladian(OBS, 1.0), 0.3)(rho0)
    sig = finals.std(axis=0) / np.sqrt(len(finals))
    assert np.all(np.abs(finals.mean(axis=0) - ref) <= 5 * sig + 5e-3)


def test_born_increment_mean():
    rho = np.diag([1.0, 0.0])
    r = born_increment_mean_check(rho, [HALF["Jz"]], 1.0, 1e-2, 200_000, np.random.default_rng(8))
    assert r["passed"]
    # 2√κ <Jz> dt with <Jz> = 1/2
    assert r["expected_mean"][0] == pytest.approx(1e-2)
    with pytest.raises(InvalidArgumentError):
        born_increment_mean_check(rho, [HALF["Jz"]], 1.0, 1e-2, 100, np.random.default_rng(8))


def test_transition_estimators_trivial_cases():
    rho0 = np.diag([0.6, 0.4]).astype(complex)

    def tr(rho):
        return np.real(np.trace(rho, axis1=-2, axis2=-1))

    est = transition_estimators_agree(rho0, tr, OBS, 1.0, 0.1, 1e-2, 200, seed=3)
    assert est.wiener_weighted == pytest.approx(1.0)
    assert est.born == pytest.approx(1.0)
    z = transition_estimators_agree(rho0, lambda r: np.real(r[:, 0, 0]), OBS, 1.0, 0.0, 1e-2, 10, seed=3)
    assert z.wiener_weighted == z.born == pytest.approx(0.6)


def test_transition_warns_on_small_ess():
    rho0 = np.diag([1.0, 0.0]).astype(complex)
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        transition_estimators_agree(rho0, lambda r: np.real(r[:, 0, 0]), OBS, 1.0, 0.05, 1e-2, 50, seed=3)
    assert any("effective sample size" in str(x.message) for x in w)


def test_rejects_bad_state():
    with pytest.raises(InvalidArgumentError):
        evolve_sme(np.diag([1.0, 1.0]), OBS, 1.0, 0.01, 1e-3, np.random.default_rng(0))


@given(st.integers(2, 3), st.integers(0, 2**31))
def test_born_sampling_keeps_norms_finite(d, seed):
    rng = np.random.default_rng(seed)
    obs = [random_hermitian(rng, d)]
    ens = pile_up_ensemble(obs, 1.0, 0.05, 1e-3, 8, seed, sampling=BornRule(random_state(rng, d)))
    assert np.all(np.isfinite(ens.log_norm))
    np.testing.assert_allclose(np.linalg.norm(ens.kraus, axis=(1, 2)), 1, atol=1e-12)
