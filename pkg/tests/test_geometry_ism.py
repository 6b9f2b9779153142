import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from qinstrument.exceptions import InvalidArgumentError
from qinstrument.geometry import (
    haar_density_ism,
    ism_full_sde,
    ism_radial_exact_density,
    ism_radial_fpke,
    ism_radial_sde,
    rebuild_ispin,
    spherical_displacement,
    spin_coherent_state,
    extract_ispin,
)
from qinstrument.geometry.ism import CartanISM, angles_to_unit, unit_to_angles
from qinstrument.linalg_ops import build_spin_operators

# exact radial density moments at κT = 5, frozen from direct quadrature
S5_MEAN, S5_VAR = 5.99443, 4.06760


def test_exact_density_moments_oracle():
    p = lambda a: ism_radial_exact_density(a, 5.0)  # noqa: E731
    m0 = integrate.quad(p, 0, 40)[0]
    m1 = integrate.quad(lambda a: a * p(a), 0, 40)[0]
    m2 = integrate.quad(lambda a: a * a * p(a), 0, 40)[0]
    assert m0 == pytest.approx(1.0, abs=1e-10)
    assert m1 == pytest.approx(S5_MEAN, abs=1e-4)
    assert m2 - m1**2 == pytest.approx(S5_VAR, abs=1e-4)


def test_fpke_matches_exact_density():
    P = ism_radial_fpke(1.0, 2.0)
    exact = ism_radial_exact_density(P.grid, 2.0)
    assert np.max(np.abs(P.values - exact)) < 1e-4
    assert P.info["tail_mass"] < 1e-12
    assert P.normalization == pytest.approx(1.0, abs=1e-10)


def test_fpke_drift_free_control_variance():
    # without drift the radius is reflected 1-D Brownian motion: <a²> = s
    P = ism_radial_fpke(1.0, 2.0, drift=False)
    second = np.sum(P.grid**2 * P.values) * P.h
    assert second == pytest.approx(2.0, rel=0.02)


def test_radial_sde_vs_exact_small_sample():
    from scipy import stats

    a = ism_radial_sde(1.0, 1.0, 1e-3, N=4000, seed=5)
    P = ism_radial_fpke(1.0, 1.0)
    assert stats.kstest(a, P.cdf).pvalue > 1e-3


def test_radial_sde_deterministic_in_seed():
    a = ism_radial_sde(1.0, 0.2, 1e-2, N=10, seed=3, chunk=3)
    b = ism_radial_sde(1.0, 0.2, 1e-2, N=10, seed=3, chunk=10)
    np.testing.assert_array_equal(a, b)
    assert np.all(a >= 0)


def test_haar_density():
    assert haar_density_ism(0.0) == 0.0
    assert haar_density_ism(2.0) == pytest.approx(np.sinh(2.0) ** 2)


@given(st.floats(0.0, np.pi), st.floats(-np.pi, np.pi))
def test_angles_roundtrip(theta, phi):
    n = angles_to_unit(theta, phi)
    assert np.linalg.norm(n) == pytest.approx(1.0)
    np.testing.assert_allclose(angles_to_unit(*unit_to_angles(n)), n, atol=1e-9)


@pytest.mark.parametrize("j", ["1/2", 1, "3/2"])
def test_spin_coherent_state_expectation(j):
    rep = build_spin_operators(j)
    th, ph = 0.7, 1.9
    v = spin_coherent_state(th, ph, j)
    n = angles_to_unit(th, ph)
    jj = float(rep.params["j"])
    ex = [np.vdot(v, rep[k] @ v).real for k in ("Jx", "Jy", "Jz")]
    np.testing.assert_allclose(ex, jj * n, atol=1e-12)


def test_spherical_displacement_moves_north_pole():
    n = angles_to_unit(1.1, -0.4)
    D = spherical_displacement(n, build_spin_operators(1))
    np.testing.assert_allclose(np.abs(np.vdot(spin_coherent_state(1.1, -0.4, 1), D[:, 0])), 1.0, atol=1e-12)


unit = st.tuples(st.floats(0.05, np.pi - 0.05), st.floats(-np.pi, np.pi))


@given(unit, st.floats(-1.9 * np.pi, 1.9 * np.pi), st.floats(-1, 1), st.floats(0.05, 3.0), unit)
def test_ispin_extract_rebuild(m, psi, ell, a, n):
    c = CartanISM(angles_to_unit(*m), psi, ell, a, angles_to_unit(*n))
    L = rebuild_ispin(c)
    e = extract_ispin(L)
    np.testing.assert_allclose(rebuild_ispin(e), L, atol=1e-9 * np.linalg.norm(L))
    assert e.a == pytest.approx(a, abs=1e-9)
    assert e.ell == pytest.approx(ell, abs=1e-9)


def test_extract_ispin_flags_gauge_at_a_zero():
    c = CartanISM(np.array([0, 0, 1.0]), 0.3, 0.1, 0.0, np.array([1.0, 0, 0]))
    assert extract_ispin(rebuild_ispin(c)).gauge_ambiguous


def test_extract_ispin_shape():
    with pytest.raises(InvalidArgumentError):
        extract_ispin(np.eye(3))


def test_full_sde_consistent_with_matrix_path():
    rng = np.random.default_rng(2)
    noise = rng.standard_normal((500, 3)) * np.sqrt(1e-3)
    rec, p = ism_full_sde("1/2", 1.0, 0.5, 1e-3, noise=noise, t_start=0.05)
    assert p["max_rotation_error"] < 1e-10
    assert np.linalg.norm(p["x"] - rec.L) / np.linalg.norm(rec.L) < 0.05
    assert p["a"][-1] == pytest.approx(extract_ispin(rec.L).a, abs=0.05)
