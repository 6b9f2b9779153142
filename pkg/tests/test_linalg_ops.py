import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_hermitian, random_state
from qinstrument.exceptions import InvalidArgumentError, SingularMatrixError
from qinstrument.linalg_ops import (
    adjoint_superop,
    build_fock_operators,
    build_single_observable,
    build_spin_operators,
    channel_exp,
    commutator,
    expm_batch,
    lindbladian,
    matrix_exp,
    odot,
    polar_decompose,
)

# frozen oracle: spin-1/2 in the |m = +1/2>, |m = -1/2> basis
HALF = {
    "Jx": np.array([[0, 0.5], [0.5, 0]]),
    "Jy": np.array([[0, -0.5j], [0.5j, 0]]),
    "Jz": np.array([[0.5, 0], [0, -0.5]]),
}


def test_spin_half_matrices():
    rep = build_spin_operators("1/2")
    for k, v in HALF.items():
        np.testing.assert_allclose(rep[k], v, atol=1e-15)


@pytest.mark.parametrize("j", ["1/2", 1, "3/2", 2, "5/2"])
def test_spin_algebra_and_casimir(j):
    rep = build_spin_operators(j)
    Jx, Jy, Jz = rep["Jx"], rep["Jy"], rep["Jz"]
    np.testing.assert_allclose(commutator(Jx, Jy), 1j * Jz, atol=1e-13)
    np.testing.assert_allclose(commutator(Jy, Jz), 1j * Jx, atol=1e-13)
    jj = float(rep.params["j"])
    np.testing.assert_allclose(Jx @ Jx + Jy @ Jy + Jz @ Jz, jj * (jj + 1) * np.eye(rep.dim), atol=1e-12)


@pytest.mark.parametrize("j", [-1, 0.3, "x"])
def test_spin_rejects_non_half_integer(j):
    with pytest.raises(InvalidArgumentError):
        build_spin_operators(j)


def test_fock_commutator_only_wrong_in_corner():
    rep = build_fock_operators(12)
    C = commutator(rep["Q"], rep["P"]) - 1j * np.eye(12)
    assert np.max(np.abs(C[:-1, :-1])) < 1e-13
    assert abs(C[-1, -1]) == pytest.approx(12, rel=1e-12)
    np.testing.assert_allclose(np.diag(rep["Ho"]).real, np.arange(12) + 0.5)


def test_single_observable():
    rep = build_single_observable([2.0, -1.0, 0.5])
    np.testing.assert_allclose(np.diag(rep["X"]).real, [2.0, -1.0, 0.5])
    with pytest.raises(InvalidArgumentError):
        build_single_observable([])


@given(st.integers(2, 5), st.integers(0, 2**31), st.floats(0.1, 3.0))
def test_matrix_exp_matches_scipy(d, seed, scale):
    rng = np.random.default_rng(seed)
    H = random_hermitian(rng, d, scale)
    np.testing.assert_allclose(matrix_exp(H), sla.expm(H), rtol=1e-10, atol=1e-12)
    np.testing.assert_allclose(matrix_exp(1j * H), sla.expm(1j * H), rtol=1e-10, atol=1e-12)
    G = rng.standard_normal((d, d))
    np.testing.assert_allclose(matrix_exp(G), sla.expm(G), rtol=1e-10, atol=1e-12)


def test_expm_batch_hermitian_flags(rng):
    H = np.stack([random_hermitian(rng, 3) for _ in range(4)])
    ref = np.stack([sla.expm(h) for h in H])
    np.testing.assert_allclose(expm_batch(H, hermitian=True), ref, atol=1e-12)
    np.testing.assert_allclose(expm_batch(-1j * H, hermitian=False), np.stack([sla.expm(-1j * h) for h in H]), atol=1e-12)


@given(st.integers(2, 4), st.integers(0, 2**31))
def test_polar_decompose_reconstructs(d, seed):
    rng = np.random.default_rng(seed)
    L = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    W, S = polar_decompose(L)
    np.testing.assert_allclose(W @ S, L, atol=1e-10)
    np.testing.assert_allclose(W.conj().T @ W, np.eye(d), atol=1e-10)
    assert np.min(np.linalg.eigvalsh(S)) > 0


def test_polar_decompose_singular():
    with pytest.raises(SingularMatrixError):
        polar_decompose(np.array([[1.0, 0], [0, 0]]))


def test_odot_and_adjoint(rng):
    A, B, rho = random_hermitian(rng, 3), random_hermitian(rng, 3), random_state(rng, 3)
    np.testing.assert_allclose(odot(A, B)(rho), A @ rho @ B, atol=1e-13)
    np.testing.assert_allclose(adjoint_superop(A)(B), commutator(A, B), atol=1e-13)


def test_lindbladian_coherence_decay():
    # dephasing in the eigenbasis of X: off-diagonal decays as exp(-κT(Δλ)²/2)
    X = np.diag([1.0, -1.0, 0.0])
    Z = channel_exp(lindbladian([X], 0.7), 1.3)
    out = Z(np.ones((3, 3)))
    lam = np.diag(X)
    expected = np.exp(-0.7 * 1.3 * (lam[:, None] - lam[None, :]) ** 2 / 2)
    np.testing.assert_allclose(out, expected, atol=1e-12)


@given(st.integers(2, 4), st.integers(1, 3), st.integers(0, 2**31))
def test_channel_trace_preserving_and_positive(d, n, seed):
    rng = np.random.default_rng(seed)
    obs = [random_hermitian(rng, d) for _ in range(n)]
    Z = channel_exp(lindbladian(obs, 0.5), 0.8)
    assert Z.is_trace_preserving(1e-10)
    rho = random_state(rng, d)
    assert np.min(np.linalg.eigvalsh(Z(rho))) > -1e-12


def test_lindbladian_rejects_non_hermitian():
    with pytest.raises(InvalidArgumentError):
        lindbladian([np.array([[0, 1], [0, 0]])], 1.0)
