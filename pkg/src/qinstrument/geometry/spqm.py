"""Simultaneous position and momentum measurement (SPQM).

Cartan coordinates of the instrumental Weyl-Heisenberg group,

    x = D_β e^{iφ} e^{-H_o r - ℓ} D_α^{-1},

are read off either from a faithful 3×3 representation (exact and cheap)
or from truncated Fock-space Kraus operators.

In the 3×3 representation ``a → E12``, ``a† → E23``, ``N → E22`` and
``1 → E13``, so ``H_o = N + 1/2 → E22 + E13/2``.  Group elements are
upper triangular with unit corners and are stored as the four complex
entries ``(g12, g13, g22, g23)``; ``g22`` stays real.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from ..exceptions import ExtractionError, InvalidArgumentError, RepresentationTooSmallError
from ..linalg_ops import build_fock_operators, dag, matrix_exp
from ..stats import bootstrap, trajectory_rng
from ..trajectories import BornRule, _is_wiener, n_steps

__all__ = [
    "CartanIWH",
    "FockRotationStepper",
    "IWHEnsemble",
    "ReducedSPQM",
    "coherent_state",
    "displacement",
    "extract_iwh",
    "haar_density_iwh",
    "iwh_coords_from_universal",
    "iwh_pile_up",
    "iwh_step",
    "iwh_universal_from_coords",
    "partition_function_check",
    "rebuild_iwh",
    "reduced_spqm",
    "reduced_spqm_pde_residual",
    "sigma_T",
    "sigma_estimate",
    "spqm_coordinate_sde",
]


@dataclass
class CartanIWH:
    """Cartan coordinates ``(β, φ, r, ℓ, α)``; fields may be arrays."""

    beta: complex
    phi: float
    r: float
    ell: float
    alpha: complex

    def __getitem__(self, idx):
        return CartanIWH(*(np.asarray(v)[idx] for v in self.astuple()))

    def astuple(self):
        return (self.beta, self.phi, self.r, self.ell, self.alpha)


def haar_density_iwh(r):
    """Haar weight ``sinh² r`` relative to ``d²β/π dφ dr dℓ d²α/π``."""
    return np.sinh(np.asarray(r, dtype=float)) ** 2


def sigma_T(kT):
    """``Σ_T = κT - tanh κT`` (series near zero to keep relative accuracy)."""
    x = np.asarray(kT, dtype=float)
    small = np.abs(x) < 1e-3
    xs = np.where(small, x, 0.0)
    series = xs**3 / 3 - 2 * xs**5 / 15 + 17 * xs**7 / 315
    out = np.where(small, series, x - np.tanh(x))
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# faithful 3x3 representation


def iwh_step(dWq, dWp, kappa: float, dt: float):
    """Entries of ``exp(δ)`` for one SPQM increment in the 3×3 representation.

    Returns ``(a12, a13, a22, a23)``; exact up to rounding.
    """
    dw = (np.asarray(dWq) + 1j * np.asarray(dWp)) / np.sqrt(2)
    sk = np.sqrt(kappa)
    b = sk * np.conj(dw)
    e = sk * dw
    dd = -2.0 * kappa * dt
    c = -kappa * dt
    phi1 = np.expm1(dd) / dd
    psi = (phi1 - 1.0) / dd
    return b * phi1, c + b * e * psi, np.exp(dd), e * phi1


def _compose(g, a):
    """Left-multiply stored elements ``g`` by the increment ``a``."""
    g12, g13, g22, g23 = g
    a12, a13, a22, a23 = a
    return (g12 + a12 * g22, g13 + a12 * g23 + a13, a22 * g22, a22 * g23 + a23)


def iwh_universal_from_coords(c: CartanIWH) -> np.ndarray:
    """3×3 matrix ``D_β e^{iφ} e^{-H_o r - ℓ} D_α^{-1}``."""
    def D(z):
        return np.array([[1, -np.conj(z), -abs(z) ** 2 / 2], [0, 1, z], [0, 0, 1]], dtype=complex)

    s = -c.ell - c.r / 2 + 1j * c.phi
    C = np.array([[1, 0, s], [0, np.exp(-c.r), 0], [0, 0, 1]], dtype=complex)
    return D(c.beta) @ C @ D(-c.alpha)


def iwh_coords_from_universal(g12, g13, g22, g23) -> CartanIWH:
    """Invert :func:`iwh_universal_from_coords`; vectorized over entries.

    Requires ``g22 < 1`` (``r > 0``).
    """
    g22 = np.real(g22)
    r = -np.log(g22)
    er = g22
    den = -np.expm1(-2 * r)
    if np.any(den <= 0):
        raise ExtractionError("r = 0: past and future phase points are not separated")
    alpha = (np.conj(g12) + er * g23) / den
    beta = g23 + alpha * er
    s = g13 + 0.5 * np.abs(alpha) ** 2 + 0.5 * np.abs(beta) ** 2 - alpha * np.conj(beta) * er
    ell = -np.real(s) - r / 2
    phi = np.angle(np.exp(1j * np.imag(s)))
    return CartanIWH(beta, phi, r, ell, alpha)


@dataclass
class IWHEnsemble:
    """Endpoints of an SPQM ensemble in Cartan coordinates.

    ``log_weight`` holds ``-2ℓ``; for Born-sampled ensembles the
    state-dependent prefactor has already been absorbed by the sampling.
    """

    coords: CartanIWH
    sampling: object
    kappa: float
    T: float
    dt: float
    seed: int
    gamma: complex = 0.0

    def __len__(self):
        return len(np.atleast_1d(self.coords.r))

    @property
    def log_weight(self):
        return -2 * np.asarray(self.coords.ell)

    def state_log_weight(self):
        """``log tr(L†L |γ⟩⟨γ|)`` per trajectory."""
        c = self.coords
        return -2 * c.ell - c.r - np.abs(c.alpha - self.gamma) ** 2 * (-np.expm1(-2 * c.r))


def _iwh_chunk(kappa, K, dt, noise, born, gamma):
    B = noise.shape[0]
    g = (np.zeros(B, complex), np.zeros(B, complex), np.ones(B), np.zeros(B, complex))
    for k in range(K):
        dq = noise[:, k, 0]
        dp = noise[:, k, 1]
        if born:
            mean_a = g[3] + gamma * g[2]
            # <Q> = √2 Re<a>, <P> = √2 Im<a>
            dq = dq + 2 * np.sqrt(2 * kappa) * mean_a.real * dt
            dp = dp + 2 * np.sqrt(2 * kappa) * mean_a.imag * dt
        g = _compose(g, iwh_step(dq, dp, kappa, dt))
    return g


def iwh_pile_up(
    kappa: float,
    T: float,
    dt: float,
    N: int,
    seed: int,
    sampling="wiener",
    gamma: complex = 0.0,
    chunk: int = 2000,
    noise=None,
) -> IWHEnsemble:
    """Pile up ``N`` SPQM trajectories in the faithful 3×3 representation.

    Parameters
    ----------
    sampling : 'wiener', 'born' or BornRule
        ``'born'`` samples outcomes under the Born rule for the coherent
        state ``|gamma⟩``.
    noise : ndarray, shape (N, K, 2), optional
        Zero-mean increments to replay instead of seeded draws.
    """
    if N < 1:
        raise InvalidArgumentError("N must be at least 1")
    K = n_steps(T, dt)
    born = sampling == "born" or isinstance(sampling, BornRule)
    if isinstance(sampling, BornRule):
        raise InvalidArgumentError("3×3 Born sampling takes a coherent amplitude, use sampling='born'")
    parts = []
    for s in range(0, N, chunk):
        ids = range(s, min(s + chunk, N))
        if noise is None:
            nz = np.stack([trajectory_rng(seed, i).standard_normal((K, 2)) for i in ids]) * np.sqrt(dt)
        else:
            nz = np.asarray(noise[s : s + len(ids)], dtype=float).reshape(len(ids), K, 2)
        parts.append(_iwh_chunk(kappa, K, dt, nz, born, gamma))
    g = [np.concatenate([p[m] for p in parts]) for m in range(4)]
    return IWHEnsemble(iwh_coords_from_universal(*g), "born" if born else "wiener", kappa, T, dt, seed, gamma)


# ---------------------------------------------------------------------------
# coordinate SDE


def spqm_coordinate_sde(kappa: float, T: float, dt: float, rng=None, noise=None) -> dict:
    """Integrate the Itô Cartan-coordinate SDEs of SPQM.

    The first step is the exact group element ``exp(δ_0)`` read in Cartan
    coordinates, which places ``r = 2κdt`` and avoids the ``r = 0``
    singularity.  Later steps are Euler-Maruyama in
    ``B = β sinh r``, ``C = β cosh r - α``, ``ℓ`` and ``φ``.

    Parameters
    ----------
    noise : ndarray, shape (K, 2), optional
        Increments ``(dW^q, dW^p)``; drawn from ``rng`` otherwise.

    Returns
    -------
    dict
        ``times`` and arrays ``beta, phi, r, ell, alpha`` of length K + 1.
        Index 0 is the identity, where ``β``, ``α`` and ``φ`` are set to 0.
    """
    K = n_steps(T, dt)
    if kappa * dt > 1e-3 + 1e-15:
        raise InvalidArgumentError("spqm_coordinate_sde needs κdt ≤ 1e-3")
    if noise is None:
        if rng is None:
            raise InvalidArgumentError("either rng or noise is required")
        noise = rng.standard_normal((K, 2)) * np.sqrt(dt)
    noise = np.asarray(noise, dtype=float).reshape(K, 2)
    dw = (noise[:, 0] + 1j * noise[:, 1]) / np.sqrt(2)
    sk = np.sqrt(kappa)
    beta = np.zeros(K + 1, complex)
    alpha = np.zeros(K + 1, complex)
    ell = np.zeros(K + 1)
    phi = np.zeros(K + 1)
    r = 2 * kappa * dt * np.arange(K + 1)

    g = _compose((0j, 0j, 1.0, 0j), iwh_step(noise[0, 0], noise[0, 1], kappa, dt))
    c = iwh_coords_from_universal(*g)
    beta[1], alpha[1], ell[1], phi[1] = c.beta, c.alpha, c.ell, c.phi
    B = beta[1] * np.sinh(r[1])
    C = beta[1] * np.cosh(r[1]) - alpha[1]
    for k in range(1, K):
        rk = r[k]
        b, a = beta[k], alpha[k]
        coth, csch = 1 / np.tanh(rk), 1 / np.sinh(rk)
        inc = sk * dw[k]
        ell[k + 1] = ell[k] - (coth - 2 * abs(b) ** 2) * kappa * dt - 2 * np.real(b * np.conj(inc))
        Z = b * coth - a * csch
        phi[k + 1] = phi[k] + 2 * np.imag(a * np.conj(b)) * csch * kappa * dt + np.imag(Z * np.conj(inc))
        B += np.cosh(rk) * inc
        C += np.sinh(rk) * inc
        beta[k + 1] = B / np.sinh(r[k + 1])
        alpha[k + 1] = beta[k + 1] * np.cosh(r[k + 1]) - C
    return {"times": np.arange(K + 1) * dt, "beta": beta, "phi": phi, "r": r, "ell": ell, "alpha": alpha}


# ---------------------------------------------------------------------------
# reduced distribution


@dataclass
class ReducedSPQM:
    """Analytic reduced distribution: ``r = 2κT`` and Gaussian width ``Σ_T``."""

    r: float
    sigma: float

    def density(self, z):
        """``e^{-|z|²/Σ}/Σ`` for ``z = β - α`` (relative to ``d²z/π``)."""
        return np.exp(-np.abs(z) ** 2 / self.sigma) / self.sigma

    def C(self, beta, alpha):
        """``C_T`` on its support ``r = 2κT`` without the delta factor."""
        return 2 / np.sinh(self.r) * self.density(np.asarray(beta) - np.asarray(alpha))


def reduced_spqm(kappa: float, T: float) -> ReducedSPQM:
    if T <= 0:
        raise InvalidArgumentError("T must be positive")
    return ReducedSPQM(2 * kappa * T, sigma_T(kappa * T))


def sigma_estimate(
    kappa: float,
    T: float,
    dt: float,
    N: int,
    seed: int,
    method: str = "born",
    n_boot: int = 200,
    ensemble: IWHEnsemble | None = None,
) -> dict:
    """Gaussian-fit width of the ``β - α`` marginal under ``e^{-2ℓ}`` weighting.

    The weighted measure ``e^{-2ℓ}`` is flat in ``β + α``, so the weights
    alone have infinite variance.  At fixed ``β - α`` the integral over
    ``β + α`` of ``e^{-2ℓ} f(α, r)`` does not depend on the localizer
    ``f``; choosing the vacuum localizer turns the weighted measure into
    the Born-rule measure for the vacuum.

    method : {'born', 'wiener-state', 'wiener-raw'}
        ``'born'`` samples the localized measure directly (unit weights).
        ``'wiener-state'`` weights Wiener paths by ``e^{-2ℓ} f``.
        ``'wiener-raw'`` uses ``e^{-2ℓ}`` alone and is reported for contrast.

    Returns
    -------
    dict with ``sigma_hat``, ``sigma_err`` (bootstrap), ``sigma_T``,
    ``rel_error``, ``ess`` and ``r_error`` (max ``|r_T - 2κT|``).
    """
    if ensemble is None:
        sampling = "born" if method == "born" else "wiener"
        ensemble = iwh_pile_up(kappa, T, dt, N, seed, sampling=sampling)
    c = ensemble.coords
    z2 = np.abs(c.beta - c.alpha) ** 2
    if method == "born":
        lw = np.zeros_like(z2)
    elif method == "wiener-state":
        lw = ensemble.state_log_weight()
    elif method == "wiener-raw":
        lw = ensemble.log_weight
    else:
        raise InvalidArgumentError(f"unknown method {method!r}")
    w = np.exp(lw - lw.max())
    ess = float(w.sum() ** 2 / (w**2).sum())

    def fit(v, ww):
        # MLE of the isotropic complex Gaussian width
        return np.sum(ww * v) / np.sum(ww)

    est, err = bootstrap(fit, z2, n_boot=n_boot, weights=w)
    S = sigma_T(kappa * T)
    return {
        "sigma_hat": float(est),
        "sigma_err": float(err),
        "sigma_T": S,
        "rel_error": float(est / S - 1),
        "ess": ess,
        "r_error": float(np.max(np.abs(c.r - 2 * kappa * T))),
        "method": method,
    }


def _C_on_support(t, r, a1, a2, b1, b2, kappa):
    """Smooth extension of ``C_t``: ``2/sinh r · e^{-|β-α|²/Σ_t}/Σ_t``."""
    S = sigma_T(kappa * t)
    z2 = ((b1 - a1) ** 2 + (b2 - a2) ** 2) / 2
    return 2 / np.sinh(r) * np.exp(-z2 / S) / S


def reduced_spqm_pde_residual(
    kappa: float,
    T: float,
    h: float,
    r_values=None,
    z_extent: float = 3.0,
    n_z: int = 9,
    test_function=None,
) -> float:
    """RMS residual of the reduced PDE for ``C_t`` with central differences.

    Residual is ``∂_t C/κ - (-2∂_r - 2coth r + ∇*∇) C`` with
    ``∇*∇ = (∇_1² + ∇_2²)/2`` and ``∇_j = (∂_{α_j} + cosh r ∂_{β_j})/sinh r``.
    It is sampled at ``r = 2κt`` for times whose ruler values are
    ``r_values`` (default around ``2κT``) and on an ``n_z × n_z`` grid of
    ``β - α`` spanning ``±z_extent √Σ``; ``β + α = 0``.  All stencils use
    step ``h`` (``h/κ`` for time), so the residual is ``O(h²)``.

    test_function : callable, optional
        ``F(t, r, a1, a2, b1, b2)`` to test instead of the analytic ``C_t``.
    """
    if r_values is None:
        r_values = 2 * kappa * T * np.array([0.75, 1.0, 1.25])
    r_values = np.atleast_1d(np.asarray(r_values, dtype=float))
    if np.any(r_values < 10 * h):
        raise InvalidArgumentError("r grid too close to 0 (coth singularity)")
    F = test_function or (lambda t, r, a1, a2, b1, b2: _C_on_support(t, r, a1, a2, b1, b2, kappa))
    res = []
    for r in r_values:
        t = r / (2 * kappa)
        sc = np.sqrt(sigma_T(kappa * t))
        g = np.linspace(-z_extent, z_extent, n_z) * sc
        z1, z2 = np.meshgrid(g, g, indexing="ij")
        # β - α = z, β + α = 0 in real components
        b1, b2, a1, a2 = z1 / 2, z2 / 2, -z1 / 2, -z2 / 2
        f0 = F(t, r, a1, a2, b1, b2)
        ht = h / kappa
        dt_term = (F(t + ht, r, a1, a2, b1, b2) - F(t - ht, r, a1, a2, b1, b2)) / (2 * ht) / kappa
        dr_term = (F(t, r + h, a1, a2, b1, b2) - F(t, r - h, a1, a2, b1, b2)) / (2 * h)
        ch, sh = np.cosh(r), np.sinh(r)
        lap = 0.0
        for j in range(2):
            # second directional difference along (e_αj + cosh r e_βj)
            def shift(s, j=j):
                da = [0.0, 0.0]
                da[j] = s
                return F(t, r, a1 + da[0], a2 + da[1], b1 + ch * da[0], b2 + ch * da[1])

            lap = lap + (shift(h) - 2 * f0 + shift(-h)) / h**2
        nabla2 = 0.5 * lap / sh**2
        R = dt_term - (-2 * dr_term - 2 / np.tanh(r) * f0 + nabla2)
        res.append(R.ravel())
    return float(np.sqrt(np.mean(np.concatenate(res) ** 2)))


def partition_function_check(kT: float, n_cut: int, tol: float = 1e-12) -> dict:
    """Compare ``Σ_{n<n_cut} e^{-4κT(n+1/2)}`` with ``1/(2 sinh 2κT)``.

    ``truncated`` flags ``e^{-4κT n_cut} ≥ tol``.
    """
    if kT <= 0:
        raise InvalidArgumentError("κT must be positive")
    n = np.arange(n_cut)
    lhs = float(np.sum(np.exp(-4 * kT * (n + 0.5))))
    rhs = float(1 / (2 * np.sinh(2 * kT)))
    return {
        "lhs": lhs,
        "rhs": rhs,
        "rel_error": abs(lhs - rhs) / rhs,
        "truncated": bool(np.exp(-4 * kT * n_cut) >= tol),
    }


# ---------------------------------------------------------------------------
# Fock representation


def coherent_state(alpha: complex, n_cut: int) -> np.ndarray:
    """Truncated coherent state with ``⟨0|α⟩ > 0``."""
    n = np.arange(n_cut)
    if alpha == 0:
        v = np.zeros(n_cut, complex)
        v[0] = 1
        return v
    logmag = -abs(alpha) ** 2 / 2 + n * np.log(abs(alpha)) - 0.5 * gammaln(n + 1)
    return np.exp(logmag + 1j * n * np.angle(alpha))


def _pad_for(*zs) -> int:
    m = max(abs(z) for z in zs)
    return int(40 + 4 * m**2 + 12 * m)


def displacement(alpha: complex, n_cut: int, pad: int | None = None) -> np.ndarray:
    """``D_α = exp(α a† - α* a)`` built in a padded space and cropped."""
    pad = _pad_for(alpha) if pad is None else pad
    rep = build_fock_operators(n_cut + pad)
    a = rep["a"]
    D = matrix_exp(alpha * dag(a) - np.conj(alpha) * a)
    return D[:n_cut, :n_cut]


def rebuild_iwh(c: CartanIWH, n_cut: int, pad: int | None = None) -> np.ndarray:
    """Fock matrix of ``D_β e^{iφ} e^{-H_o r - ℓ} D_α^{-1}``, cropped to ``n_cut``."""
    pad = _pad_for(c.beta, c.alpha) if pad is None else pad
    M = n_cut + pad
    a = build_fock_operators(M)["a"]
    Db = matrix_exp(c.beta * dag(a) - np.conj(c.beta) * a)
    Da = matrix_exp(c.alpha * dag(a) - np.conj(c.alpha) * a)
    mid = np.exp(-c.r * (np.arange(M) + 0.5) - c.ell + 1j * c.phi)
    L = (Db * mid[None, :]) @ dag(Da)
    return L[:n_cut, :n_cut]


def extract_iwh(L, tol: float = 1e-6, corner_tol: float = 1e-6, n_fit: int = 3) -> CartanIWH:
    """Cartan coordinates of a truncated Fock-space SPQM Kraus operator.

    ``E = L†L`` is fit to ``e^{-2ℓ} D_α e^{-2r H_o} D_α†``: its top
    eigenvector is ``|α⟩`` and its leading eigenvalues form the ladder
    ``e^{-2ℓ - r} e^{-2rn}``.  Then ``L|α⟩ = e^{-ℓ - r/2} e^{iφ}|β⟩``.

    Raises
    ------
    RepresentationTooSmallError
        Weight of ``L†L`` in the top two levels exceeds ``corner_tol``.
    ExtractionError
        Rebuild residual exceeds ``tol``.
    """
    L = np.asarray(L, dtype=complex)
    d = L.shape[0]
    E = dag(L) @ L
    E = (E + dag(E)) / 2
    trE = np.real(np.trace(E))
    corner = np.real(E[-1, -1] + E[-2, -2]) / trE
    if corner > corner_tol:
        raise RepresentationTooSmallError(f"top-two-level weight {corner:.2e} exceeds {corner_tol:g}")
    w, v = np.linalg.eigh(E)
    w, v = w[::-1], v[:, ::-1]
    top = v[:, 0]
    top = top * np.exp(-1j * np.angle(top[0]))
    a_op = build_fock_operators(d)["a"]
    alpha = complex(np.vdot(top, a_op @ top))
    k = max(2, min(n_fit, int(np.sum(w > w[0] * 1e-10))))
    logs = np.log(w[:k])
    r = float(-np.polyfit(np.arange(k), logs, 1)[0] / 2)
    ell = float(-(np.log(w[0]) + r) / 2)
    vec = L @ top
    beta = complex(np.vdot(vec, a_op @ vec) / np.vdot(vec, vec))
    phi = float(np.angle(np.vdot(coherent_state(beta, d), vec)))
    c = CartanIWH(beta, phi, r, ell, alpha)
    resid = np.linalg.norm(rebuild_iwh(c, d) - L) / np.linalg.norm(L)
    if not resid <= tol:
        raise ExtractionError(f"rebuild residual {resid:.2e} exceeds {tol:g}; coords {c}")
    return c


class FockRotationStepper:
    """Incremental SPQM Kraus operators in a truncated Fock space.

    Writing ``dW^q + i dW^p = |dW| e^{iθ}``,

        δ = U_θ (-κdt X² + √κ|dW| Q) U_θ†,   U_θ = diag(e^{iθn}),

    where ``X² = Q² + P²`` in the truncated space is diagonal.  The real
    matrix exponential in the bracket depends on ``ρ = √κ|dW|`` only and
    is Chebyshev-interpolated on ``[0, ρ_max]``; larger ``ρ`` fall back to
    direct exponentiation.
    """

    def __init__(self, n_cut: int, kappa: float, dt: float, n_nodes: int = 32, rho_max: float | None = None):
        rep = build_fock_operators(n_cut)
        self.obs = np.array([rep["Q"], rep["P"]])
        self.kappa = float(kappa)
        self.dt = float(dt)
        self.dim = n_cut
        self.X2 = np.real(np.diag(self.obs[0] @ self.obs[0] + self.obs[1] @ self.obs[1]))
        self._Q = np.real(rep["Q"])
        self.rho_max = 12 * np.sqrt(kappa * dt) if rho_max is None else float(rho_max)
        x = np.cos(np.pi * (np.arange(n_nodes) + 0.5) / n_nodes)
        vals = np.array([self._exact(rho) for rho in self.rho_max * (x + 1) / 2])
        self._coef = np.polynomial.chebyshev.chebfit(x, vals.reshape(n_nodes, -1), n_nodes - 1)
        self._levels = np.arange(n_cut)

    def _exact(self, rho):
        A = np.diag(-self.kappa * self.dt * self.X2) + rho * self._Q
        w, v = np.linalg.eigh(A)
        return (v * np.exp(w)) @ v.T

    def __call__(self, dW):
        dW = np.atleast_2d(dW)
        rho = np.sqrt(self.kappa) * np.hypot(dW[:, 0], dW[:, 1])
        theta = np.arctan2(dW[:, 1], dW[:, 0])
        x = np.clip(2 * rho / self.rho_max - 1, -1, 1)
        M = np.polynomial.chebyshev.chebvander(x, len(self._coef) - 1) @ self._coef
        M = M.reshape(-1, self.dim, self.dim)
        far = rho > self.rho_max
        for i in np.flatnonzero(far):
            M[i] = self._exact(rho[i])
        u = np.exp(1j * np.outer(theta, self._levels))
        return M * u[:, :, None] * u.conj()[:, None, :]
