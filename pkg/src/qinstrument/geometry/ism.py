"""Isotropic spin measurement (ISM) of ``J_x, J_y, J_z``.

Cartan coordinates of the instrumental spin group are

    x = (D_m e^{-iJ_z ψ}) e^{-J²ℓ + J_z a} D_n^{-1},
    D_n = e^{-iJ_z φ} e^{-iJ_y θ}.

For spin 1/2 the unitaries live in SU(2), so ``ψ`` has period ``4π``;
it is reported in ``(-2π, 2π]``.  Azimuths of ``m̂`` and ``n̂`` lie in
``(-π, π]``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ..exceptions import ExtractionError, InvalidArgumentError
from ..linalg_ops import build_spin_operators, dag, matrix_exp
from ..stats import trajectory_rng
from ..trajectories import TrajectoryRecord, n_steps, pile_up

__all__ = [
    "CartanISM",
    "RadialDensity",
    "angles_to_unit",
    "extract_ispin",
    "haar_density_ism",
    "ism_full_sde",
    "ism_radial_exact_density",
    "ism_radial_fpke",
    "ism_radial_sde",
    "rebuild_ispin",
    "rotation_inverse_matrix",
    "spherical_displacement",
    "spin_coherent_state",
    "unit_to_angles",
]


@dataclass
class CartanISM:
    m_hat: np.ndarray
    psi: float
    ell: float
    a: float
    n_hat: np.ndarray
    gauge_ambiguous: bool = False


def haar_density_ism(a):
    """Haar weight ``sinh² a`` relative to ``d²μ(m̂) dψ/4π dℓ da d²μ(n̂)``."""
    return np.sinh(np.asarray(a, dtype=float)) ** 2


def angles_to_unit(theta, phi) -> np.ndarray:
    return np.array([np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)])


def unit_to_angles(n) -> tuple[float, float]:
    n = np.asarray(n, dtype=float)
    n = n / np.linalg.norm(n)
    rho = np.hypot(n[0], n[1])
    theta = float(np.arctan2(rho, n[2]))
    phi = float(np.arctan2(n[1], n[0])) if rho > 1e-14 else 0.0
    return theta, phi


def _rep(rep_or_j):
    if rep_or_j is None:
        return build_spin_operators("1/2")
    if hasattr(rep_or_j, "operators"):
        return rep_or_j
    return build_spin_operators(rep_or_j)


def spherical_displacement(n_hat, rep=None) -> np.ndarray:
    """``D_n = e^{-iJ_z φ} e^{-iJ_y θ}`` for the unit vector ``n_hat``."""
    rep = _rep(rep)
    theta, phi = unit_to_angles(n_hat)
    return matrix_exp(-1j * phi * rep["Jz"]) @ matrix_exp(-1j * theta * rep["Jy"])


def spin_coherent_state(theta, phi, j) -> np.ndarray:
    """Amplitudes of ``D_n|j, j⟩`` in the basis ``m = j, ..., -j``.

    ``theta`` and ``phi`` may be arrays; the result then has shape
    ``theta.shape + (2j+1,)``.
    """
    from scipy.special import gammaln

    twoj = int(2 * Fraction(j))
    theta = np.asarray(theta, dtype=float)[..., None]
    phi = np.asarray(phi, dtype=float)[..., None]
    k = np.arange(twoj + 1)  # k = j - m
    logc = 0.5 * (gammaln(twoj + 1) - gammaln(k + 1) - gammaln(twoj - k + 1))
    m = twoj / 2 - k
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    with np.errstate(divide="ignore", invalid="ignore"):
        amp = np.exp(logc) * np.where(twoj - k > 0, c ** (twoj - k), 1.0) * np.where(k > 0, s**k, 1.0)
    return amp * np.exp(-1j * m * phi)


def rotation_inverse_matrix(V, rep) -> np.ndarray:
    """``(R^{-1})^μ_ν`` defined by ``V^{-1} J_ν V = J_μ (R^{-1})^μ_ν``."""
    J = np.array([rep["Jx"], rep["Jy"], rep["Jz"]])
    j = float(rep.params["j"])
    norm = j * (j + 1) * (2 * j + 1) / 3
    conj = dag(V) @ J @ V
    return np.real(np.einsum("mab,nba->mn", J, conj)) / norm


# ---------------------------------------------------------------------------
# extraction


def _zy_angles(col):
    """``(θ, φ)`` with ``e^{-iJzφ}e^{-iJyθ}|↑⟩ ∝ col`` (spin 1/2)."""
    theta = 2 * np.arctan2(abs(col[1]), abs(col[0]))
    if abs(np.sin(theta / 2) * np.cos(theta / 2)) < 1e-14:
        phi = 0.0
    else:
        phi = float(np.angle(col[1] / col[0]))
    return float(theta), phi


def extract_ispin(L, tol: float = 1e-8, degenerate_tol: float = 1e-8) -> CartanISM:
    """Cartan coordinates of a spin-1/2 ISM Kraus operator.

    ``det L = e^{-3ℓ/2}`` fixes ``ℓ``; the SVD of ``L/|det L|^{1/2}`` with
    unit-determinant factors gives ``e^{±a/2}`` and the two SU(2)
    unitaries, which are split into ZY Euler angles.

    Raises
    ------
    ExtractionError
        Singular input or rebuild residual above ``tol``.
    """
    L = np.asarray(L, dtype=complex)
    if L.shape != (2, 2):
        raise InvalidArgumentError("extract_ispin expects a 2×2 matrix")
    det = np.linalg.det(L)
    if not abs(det) > 0:
        raise ExtractionError("singular Kraus operator")
    ell = float(-2.0 / 3.0 * np.log(abs(det)))
    S = L / np.sqrt(abs(det))
    A, sv, Bh = np.linalg.svd(S)
    B = dag(Bh)
    a = float(np.log(sv[0] / sv[1]))
    ph = np.sqrt(np.linalg.det(A))
    A, B = A / ph, B / ph
    # B = D_n e^{-iJz χ}; move the stabilizer phase into A
    th_n, ph_n = _zy_angles(B[:, 0])
    Dn = spherical_displacement(angles_to_unit(th_n, ph_n))
    g = dag(Dn) @ B
    chi = -2 * np.angle(g[0, 0])
    stab = np.diag(np.exp(np.array([0.5j, -0.5j]) * chi))  # e^{+iJz χ}
    A = A @ stab
    th_m, ph_m = _zy_angles(A[:, 0])
    Dm = spherical_displacement(angles_to_unit(th_m, ph_m))
    M = dag(Dm) @ A
    psi = float(-2 * np.angle(M[0, 0]))
    if psi <= -2 * np.pi:
        psi += 4 * np.pi
    c = CartanISM(angles_to_unit(th_m, ph_m), psi, ell, a, angles_to_unit(th_n, ph_n), a < degenerate_tol)
    resid = np.linalg.norm(rebuild_ispin(c) - L) / np.linalg.norm(L)
    if not resid <= tol:
        raise ExtractionError(f"rebuild residual {resid:.2e} exceeds {tol:g}")
    return c


def rebuild_ispin(c: CartanISM, rep=None) -> np.ndarray:
    """``(D_m e^{-iJ_z ψ}) e^{-J²ℓ + J_z a} D_n^{-1}`` in spin ``rep``."""
    rep = _rep(rep)
    Jz = rep["Jz"]
    j = float(rep.params["j"])
    mid = np.exp(np.real(np.diag(Jz)) * (c.a - 1j * c.psi) - j * (j + 1) * c.ell)
    Dm = spherical_displacement(c.m_hat, rep)
    Dn = spherical_displacement(c.n_hat, rep)
    return (Dm * mid[None, :]) @ dag(Dn)


# ---------------------------------------------------------------------------
# radial ruler a


def ism_radial_exact_density(a, s):
    """Radial density at ``s = κt`` started from the identity.

    ``P_s(a) = 2/√(2π s³) · a sinh a · e^{-s/2} e^{-a²/2s}``; it solves the
    radial FPKE and reduces to a chi-3 law as ``s → 0``.  Its mean is
    ``s + 1`` and its variance ``s - 1`` up to terms ``O(e^{-2s})``.
    """
    a = np.asarray(a, dtype=float)
    logp = np.log(2 / np.sqrt(2 * np.pi * s**3)) + np.log(np.abs(a) + 1e-300) - s / 2 - a**2 / (2 * s)
    # a sinh a = a (e^a - e^{-a})/2, combined with the Gaussian for stability
    sinh_part = 0.5 * (1 - np.exp(-2 * np.abs(a)))
    return np.where(a > 0, np.exp(logp + np.abs(a)) * sinh_part, 0.0)


def ism_radial_sde(
    kappa: float,
    T: float,
    dt: float,
    rng=None,
    a0=None,
    N: int = 1,
    noise=None,
    seed: int | None = None,
    chunk: int = 2000,
) -> np.ndarray:
    """Endpoints ``a_T`` of ``da = κ coth a dt + √κ dY`` for ``N`` paths.

    Each step applies the exact drift flow ``cosh a ← cosh a · e^{κdt}``,
    then the noise, then reflects at 0.  Without ``a0`` the paths start at
    the identity and the first step is ``a = √κ|ΔW⃗|`` for a 3-vector
    increment.

    Parameters
    ----------
    noise : ndarray, shape (N, K) or (N, K, 3), optional
        Increments ``dY`` (for the identity start, three components are
        needed in the first step; later steps use the last axis' ``z``).
    seed : int, optional
        Use per-trajectory streams ``(seed, i)`` instead of ``rng``.
    """
    K = n_steps(T, dt)
    sk = np.sqrt(kappa)
    decay = np.exp(kappa * dt)
    out = np.empty(N)
    for s in range(0, N, chunk):
        ids = np.arange(s, min(s + chunk, N))
        B = len(ids)
        if noise is not None:
            nz = np.asarray(noise[s : s + B], dtype=float)
            nz = nz if nz.ndim == 3 else nz[..., None]
        elif seed is not None:
            nz = np.stack([trajectory_rng(seed, i).standard_normal((K, 3)) for i in ids]) * np.sqrt(dt)
        else:
            if rng is None:
                raise InvalidArgumentError("rng, seed or noise is required")
            nz = rng.standard_normal((B, K, 3)) * np.sqrt(dt)
        if a0 is None:
            if nz.shape[-1] != 3:
                raise InvalidArgumentError("identity start needs 3-component noise")
            a = sk * np.linalg.norm(nz[:, 0, :], axis=-1)
            k0 = 1
        else:
            a = np.full(B, float(a0))
            k0 = 0
        for k in range(k0, K):
            a = np.arccosh(np.cosh(a) * decay)
            a = np.abs(a + sk * nz[:, k, -1])
        out[s : s + B] = a
    return out


@dataclass
class RadialDensity:
    grid: np.ndarray
    values: np.ndarray
    normalization: float
    info: dict = field(default_factory=dict)

    @property
    def h(self) -> float:
        return float(self.grid[1] - self.grid[0])

    def moments(self) -> tuple[float, float]:
        w = self.values * self.h
        m = float(np.sum(w * self.grid))
        v = float(np.sum(w * (self.grid - m) ** 2))
        return m, v

    def cdf(self, a):
        """Piecewise-linear CDF through the cell edges."""
        edges = np.concatenate([[self.grid[0] - self.h / 2], self.grid + self.h / 2])
        F = np.concatenate([[0.0], np.cumsum(self.values * self.h)])
        return np.interp(a, edges, F / F[-1])


def _bernoulli(x):
    """``x/(e^x - 1)`` with the removable singularity at 0."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-8
    xs = np.where(small, 1.0, x)
    return np.where(small, 1 - x / 2, xs / np.expm1(xs))


def ism_radial_fpke(
    kappa: float,
    T: float,
    grid=None,
    ds: float = 1e-3,
    s0: float = 0.01,
    drift: bool = True,
    initial=None,
    h: float = 0.005,
    a_min: float = 1e-3,
) -> RadialDensity:
    """Solve ``∂_s P = -∂_a(coth a P) + ½ ∂²_a P`` in ``s = κt``.

    Finite volumes with Scharfetter-Gummel fluxes and zero flux at both
    ends, stepped by Crank-Nicolson after four implicit-Euler start-up
    steps.  Column sums of the discrete generator vanish, so the mass is
    conserved to rounding.

    Parameters
    ----------
    grid : ndarray, optional
        Uniform cell centers; default spans ``[a_min, κT + 8√κT + 4]``.
    s0 : float
        Start time; the default initial condition is the chi-3 law at
        ``s0``, the small-``a`` form of the identity start.
    drift : bool
        Set False for the pure-diffusion control.
    initial : callable, optional
        Initial density ``P(a)`` replacing the chi-3 law.
    """
    sT = kappa * T
    if sT <= s0:
        raise InvalidArgumentError("κT must exceed the start time s0")
    if grid is None:
        a_max = sT + 8 * np.sqrt(sT) + 4
        grid = np.arange(a_min, a_max + h / 2, h)
    grid = np.asarray(grid, dtype=float)
    h = float(grid[1] - grid[0])
    if not np.allclose(np.diff(grid), h, rtol=1e-9, atol=0):
        raise InvalidArgumentError("grid must be uniform")
    if grid[0] <= 0:
        raise InvalidArgumentError("grid must stay away from a = 0")
    if grid[-1] < sT + 8 * np.sqrt(sT):
        warnings.warn("grid upper end is below κT + 8√κT; tail mass may be lost")
    n = len(grid)
    D = 0.5
    faces = grid[:-1] + h / 2
    v = 1 / np.tanh(faces) if drift else np.zeros_like(faces)
    Pe = v * h / D
    cl = D / h * _bernoulli(-Pe)  # flux coefficient of P_i
    cr = D / h * _bernoulli(Pe)  # flux coefficient of P_{i+1}
    # dP_i/ds = (J_{i-1/2} - J_{i+1/2}) / h, J_{i+1/2} = cl P_i - cr P_{i+1}
    main = np.zeros(n)
    main[:-1] -= cl / h
    main[1:] -= cr / h
    A = sp.diags([main, cr / h, cl / h], [0, 1, -1], format="csc")
    if np.max(np.abs(main)) * ds > 1e3:
        warnings.warn("stiff discrete generator; consider a smaller ds or coarser grid")
    if initial is None:
        P = np.sqrt(2 / np.pi) * grid**2 * np.exp(-(grid**2) / (2 * s0)) / s0**1.5
    else:
        P = np.asarray(initial(grid), dtype=float)
    P = P / (P.sum() * h)
    eye = sp.identity(n, format="csc")
    n_steps_pde = int(np.ceil((sT - s0) / ds))
    step = (sT - s0) / n_steps_pde
    be = spla.splu((eye - step / 2 * A).tocsc())
    cn = spla.splu((eye - step / 2 * A).tocsc())
    rhs_cn = (eye + step / 2 * A).tocsr()
    drift_mass = 0.0
    for k in range(n_steps_pde):
        m_before = P.sum() * h
        if k < 4:
            # two implicit-Euler half steps damp the start-up transient
            P = be.solve(be.solve(P))
        else:
            P = cn.solve(rhs_cn @ P)
        drift_mass = max(drift_mass, abs(P.sum() * h - m_before))
    norm = float(P.sum() * h)
    tail = float(P[-max(1, int(1.0 / h)) :].sum() * h)
    return RadialDensity(
        grid, P, norm, {"max_step_mass_change": drift_mass, "tail_mass": tail, "ds": step, "s0": s0}
    )


# ---------------------------------------------------------------------------
# full coordinate SDE


def _ism_noise_parts(a, V, dW, rep, sk):
    """Noise terms of one step: ``(da, U generator, V^{-1} generator)``."""
    Rinv = rotation_inverse_matrix(V, rep)
    dY = Rinv @ dW
    G = sk * (-1j * rep["Jx"] * dY[1] + 1j * rep["Jy"] * dY[0])
    return sk * dY[2], G / np.sinh(a), G / np.tanh(a)


def _ism_predict(a, V, parts):
    return abs(a + parts[0]), V @ matrix_exp(-parts[2])


def ism_full_sde(
    j,
    kappa: float,
    T: float,
    dt: float,
    rng=None,
    noise=None,
    replay: bool = True,
    milstein: bool = True,
    t_start: float | None = None,
):
    """Integrate ``ℓ``, ``a``, ``U`` and ``V`` along one ISM path.

    ``x = V e^{J_z a - J²ℓ} U``.  The first step is exact:
    ``V = D_n̂``, ``U = D_n̂^{-1}``, ``a = √κ|ΔW⃗|``.  Later steps use the
    MMCSD updates ``U ← e^{G csch a} U`` and ``V^{-1} ← e^{G coth a} V^{-1}``
    with ``G = √κ(-iJ_x dY^y + iJ_y dY^x)`` and in-situ rotated increments
    ``dY = R^{-1} dW``; ``a`` takes the exact drift flow, then its noise,
    then reflects at 0.

    With ``milstein`` the noise terms get the symmetric second-order
    correction from their dependence on ``(a, V)``, evaluated without
    derivatives from one predictor along ``ΔW`` minus its Itô mean from
    three predictors along ``√dt e_ν``.  Lévy areas are not sampled, so
    the scheme and the matrix pile-up miss the same terms and their
    difference is first order in ``dt``.

    Near the identity the coefficients vary on the scale of ``√dt``, so
    any step-based scheme makes ``O(√dt)`` errors there.  ``t_start``
    replaces the analytic first step by the exact spin-1/2 product of the
    increments up to ``t_start``, read off by :func:`extract_ispin`.

    Parameters
    ----------
    noise : ndarray, shape (K, 3), optional
    replay : bool
        Also pile up the matrix trajectory with identical noise.

    Returns
    -------
    record : TrajectoryRecord or None
    path : dict
        ``times``, ``a``, ``ell``, final ``U`` and ``V``, ``x`` (the
        rebuilt final Kraus operator) and ``max_rotation_error``.
    """
    rep = _rep(j)
    K = n_steps(T, dt)
    if noise is None:
        if rng is None:
            raise InvalidArgumentError("either rng or noise is required")
        noise = rng.standard_normal((K, 3)) * np.sqrt(dt)
    noise = np.asarray(noise, dtype=float).reshape(K, 3)
    Jx, Jy, Jz = rep["Jx"], rep["Jy"], rep["Jz"]
    jj = float(rep.params["j"])
    sk = np.sqrt(kappa)
    growth = np.exp(kappa * dt)
    unit = np.eye(3) * np.sqrt(dt)
    a_path = np.zeros(K + 1)
    ell = kappa * dt * np.arange(K + 1)
    n0 = 1 if t_start is None else max(1, int(round(t_start / dt)))
    if n0 == 1:
        dW0 = noise[0]
        a = sk * np.linalg.norm(dW0)
        V = spherical_displacement(dW0 / np.linalg.norm(dW0), rep)
        U = dag(V)
        a_path[1] = a
    else:
        half = build_spin_operators("1/2")
        head = pile_up([half["Jx"], half["Jy"], half["Jz"]], kappa, n0 * dt, dt, noise=noise[:n0])
        c = extract_ispin(head.L)
        V = spherical_displacement(c.m_hat, rep) @ np.diag(np.exp(-1j * c.psi * np.real(np.diag(Jz))))
        U = dag(spherical_displacement(c.n_hat, rep))
        a = c.a
        a_path[n0] = a
    rot_err = 0.0
    for k in range(n0, K):
        Rinv = rotation_inverse_matrix(V, rep)
        rot_err = max(rot_err, float(np.max(np.abs(Rinv @ Rinv.T - np.eye(3)))))
        p = list(_ism_noise_parts(a, V, noise[k], rep, sk))
        if milstein:
            q = _ism_noise_parts(*_ism_predict(a, V, p), noise[k], rep, sk)
            corr = [0.5 * (qi - pi) for qi, pi in zip(q, p)]
            for e in unit:
                b0 = _ism_noise_parts(a, V, e, rep, sk)
                b1 = _ism_noise_parts(*_ism_predict(a, V, b0), e, rep, sk)
                corr = [c - 0.5 * (x1 - x0) for c, x1, x0 in zip(corr, b1, b0)]
            p = [pi + ci for pi, ci in zip(p, corr)]
        U = matrix_exp(p[1]) @ U
        V = V @ matrix_exp(-p[2])
        a = abs(np.arccosh(np.cosh(a) * growth) + np.real(p[0]))
        a_path[k + 1] = a
    mid = np.exp(np.real(np.diag(Jz)) * a - jj * (jj + 1) * ell[-1])
    x = (V * mid[None, :]) @ U
    record = None
    if replay:
        record = pile_up([Jx, Jy, Jz], kappa, T, dt, noise=noise)
    path = {
        "times": np.arange(K + 1) * dt,
        "a": a_path,
        "ell": ell,
        "U": U,
        "V": V,
        "x": x,
        "max_rotation_error": rot_err,
    }
    return record, path
