"""Dense complex operator algebra.

Observables are plain ``numpy`` arrays of shape ``(d, d)``.  Superoperators
are stored as dense ``(d**2, d**2)`` matrices acting on row-major
vectorized operators, so that ``vec(A @ B @ C) = kron(A, C.T) @ vec(B)``.

The product ``A ⊙ B`` denotes the superoperator ``rho -> A rho B``; with
this convention an instrument element is written ``L ⊙ L†``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np
import scipy.linalg as sla

from .exceptions import InvalidArgumentError, SingularMatrixError

__all__ = [
    "Representation",
    "Superoperator",
    "adjoint_superop",
    "build_fock_operators",
    "build_single_observable",
    "build_spin_operators",
    "channel_exp",
    "commutator",
    "dag",
    "expm_batch",
    "identity_superop",
    "is_hermitian",
    "lindbladian",
    "matrix_exp",
    "odot",
    "polar_decompose",
]

HERMITIAN_TOL = 1e-12


def dag(A):
    """Conjugate transpose over the last two axes."""
    return np.conj(np.swapaxes(A, -1, -2))


def commutator(A, B):
    return A @ B - B @ A


def is_hermitian(A, tol: float = HERMITIAN_TOL) -> bool:
    A = np.asarray(A)
    return bool(np.max(np.abs(A - dag(A)), initial=0.0) <= tol)


def _check_finite(A, name="matrix"):
    if not np.all(np.isfinite(A)):
        raise InvalidArgumentError(f"{name} has non-finite entries")


# ---------------------------------------------------------------------------
# Representations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Representation:
    """A named set of matrices representing abstract observables.

    Attributes
    ----------
    kind : {'single', 'fock', 'spin'}
    params : dict
        ``spectrum`` for single observables, ``n_cut`` for Fock
        truncations, ``j`` for spin representations.
    operators : mapping of str to ndarray
    metadata : dict
        Diagnostic information such as the truncation-corner deviation
        of ``[Q, P] - i``.
    """

    kind: str
    params: Mapping
    operators: Mapping[str, np.ndarray]
    metadata: Mapping = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return next(iter(self.operators.values())).shape[0]

    def __getitem__(self, name):
        return self.operators[name]

    def observables(self) -> list:
        """Measured observables of the representation's canonical case."""
        if self.kind == "single":
            return [self.operators["X"]]
        if self.kind == "fock":
            return [self.operators["Q"], self.operators["P"]]
        return [self.operators["Jx"], self.operators["Jy"], self.operators["Jz"]]


def _as_half_integer(j) -> Fraction:
    try:
        twoj = Fraction(j) * 2
    except (TypeError, ValueError) as exc:
        raise InvalidArgumentError(f"j={j!r} is not a number") from exc
    if twoj.denominator != 1 or twoj < 0:
        raise InvalidArgumentError(f"j={j!r} is not a nonnegative half-integer")
    return twoj / 2


def build_spin_operators(j) -> Representation:
    """Spin-``j`` matrices in the ``|j, m>`` basis, ``m = j, j-1, ..., -j``.

    Parameters
    ----------
    j : float or Fraction
        Nonnegative half-integer.

    Returns
    -------
    Representation
        Operators ``Jx``, ``Jy``, ``Jz``, ``Jp``, ``Jm`` and ``J2``.

    Examples
    --------
    >>> rep = build_spin_operators(0.5)
    >>> rep["Jz"].real
    array([[ 0.5,  0. ],
           [ 0. , -0.5]])
    """
    jf = _as_half_integer(j)
    jv = float(jf)
    d = int(2 * jf) + 1
    m = jv - np.arange(d)
    Jz = np.diag(m).astype(complex)
    # <m+1|J+|m> = sqrt(j(j+1) - m(m+1))
    sup = np.sqrt(jv * (jv + 1) - m[1:] * (m[1:] + 1))
    Jp = np.diag(sup, k=1).astype(complex)
    Jm = Jp.conj().T
    Jx = (Jp + Jm) / 2
    Jy = (Jp - Jm) / 2j
    J2 = Jx @ Jx + Jy @ Jy + Jz @ Jz
    ops = {"Jx": Jx, "Jy": Jy, "Jz": Jz, "Jp": Jp, "Jm": Jm, "J2": J2}
    casimir_dev = float(np.max(np.abs(J2 - jv * (jv + 1) * np.eye(d))))
    return Representation("spin", {"j": jf}, ops, {"casimir_deviation": casimir_dev})


def build_fock_operators(n_cut: int) -> Representation:
    """Truncated oscillator with ``Q = (a + a†)/√2``, ``P = -i(a - a†)/√2``.

    ``H_o = diag(n + 1/2)`` is built exactly rather than from ``Q`` and
    ``P``; ``Q² + P²`` differs from ``2 H_o`` only in the last diagonal
    entry.  The magnitude of that corner deviation of ``[Q, P] - i`` is
    stored in ``metadata['corner_deviation']``.
    """
    if int(n_cut) != n_cut or n_cut < 2:
        raise InvalidArgumentError("n_cut must be an integer >= 2")
    n_cut = int(n_cut)
    n = np.arange(n_cut)
    a = np.diag(np.sqrt(n[1:]), k=1).astype(complex)
    ad = a.conj().T
    Q = (a + ad) / np.sqrt(2)
    P = -1j * (a - ad) / np.sqrt(2)
    Ho = np.diag(n + 0.5).astype(complex)
    N = np.diag(n).astype(complex)
    dev = commutator(Q, P) - 1j * np.eye(n_cut)
    off = dev.copy()
    off[-1, -1] = 0
    meta = {
        "corner_deviation": float(abs(dev[-1, -1])),
        "off_corner_deviation": float(np.max(np.abs(off))),
    }
    ops = {"a": a, "ad": ad, "Q": Q, "P": P, "Ho": Ho, "N": N, "QQPP": Q @ Q + P @ P}
    return Representation("fock", {"n_cut": n_cut}, ops, meta)


def build_single_observable(spectrum: Sequence[float]) -> Representation:
    """Diagonal observable ``X`` with the given eigenvalues."""
    lam = np.asarray(spectrum, dtype=float)
    if lam.ndim != 1 or lam.size < 1:
        raise InvalidArgumentError("spectrum must be a nonempty 1-D sequence")
    X = np.diag(lam).astype(complex)
    return Representation("single", {"spectrum": tuple(lam)}, {"X": X, "X2": X @ X})


# ---------------------------------------------------------------------------
# Matrix functions
# ---------------------------------------------------------------------------


def matrix_exp(A):
    """Matrix exponential of a single square matrix.

    Hermitian and anti-Hermitian inputs use an eigendecomposition; general
    inputs use scaling and squaring with a Padé approximant.
    """
    A = np.asarray(A)
    _check_finite(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InvalidArgumentError("matrix_exp expects a square matrix")
    if not np.any(A):
        return np.eye(A.shape[0], dtype=A.dtype if np.iscomplexobj(A) else float)
    scale = max(np.max(np.abs(A)), 1.0)
    if is_hermitian(A, 1e-14 * scale):
        w, v = np.linalg.eigh((A + dag(A)) / 2)
        return (v * np.exp(w)) @ dag(v)
    if is_hermitian(1j * A, 1e-14 * scale):
        w, v = np.linalg.eigh((1j * A + dag(1j * A)) / 2)
        return (v * np.exp(-1j * w)) @ dag(v)
    return sla.expm(A)


def expm_batch(A, hermitian: bool | None = None):
    """Exponentiate a stack ``(..., d, d)`` of matrices.

    Parameters
    ----------
    A : ndarray
    hermitian : bool, optional
        ``True`` for Hermitian stacks, ``False`` for anti-Hermitian ones,
        ``None`` for general matrices.
    """
    A = np.asarray(A)
    if hermitian is True:
        w, v = np.linalg.eigh(A)
        return (v * np.exp(w)[..., None, :]) @ dag(v)
    if hermitian is False:
        w, v = np.linalg.eigh(1j * A)
        return (v * np.exp(-1j * w)[..., None, :]) @ dag(v)
    return sla.expm(A)


def polar_decompose(L):
    """Left polar decomposition ``L = W @ sqrtE`` with ``sqrtE = (L†L)^{1/2}``.

    Raises
    ------
    SingularMatrixError
        If the smallest singular value is below ``1e-13`` times the largest.
    """
    L = np.asarray(L)
    _check_finite(L)
    U, s, Vh = np.linalg.svd(L)
    if s[-1] <= 1e-13 * s[0]:
        raise SingularMatrixError("polar_decompose: matrix is singular")
    W = U @ Vh
    sqrtE = (dag(Vh) * s) @ Vh
    return W, (sqrtE + dag(sqrtE)) / 2


# ---------------------------------------------------------------------------
# Superoperators
# ---------------------------------------------------------------------------


class Superoperator:
    """Linear map on ``d × d`` operators stored as a ``(d², d²)`` matrix."""

    __slots__ = ("matrix", "dim")

    def __init__(self, matrix, dim: int | None = None):
        matrix = np.asarray(matrix, dtype=complex)
        if dim is None:
            dim = int(round(np.sqrt(matrix.shape[0])))
        if matrix.shape != (dim * dim, dim * dim):
            raise InvalidArgumentError("superoperator matrix has the wrong shape")
        matrix.setflags(write=False)
        self.matrix = matrix
        self.dim = dim

    def __call__(self, rho):
        rho = np.asarray(rho)
        return (self.matrix @ rho.reshape(-1)).reshape(self.dim, self.dim)

    def __matmul__(self, other: "Superoperator") -> "Superoperator":
        return Superoperator(self.matrix @ other.matrix, self.dim)

    def __add__(self, other: "Superoperator") -> "Superoperator":
        return Superoperator(self.matrix + other.matrix, self.dim)

    def __sub__(self, other: "Superoperator") -> "Superoperator":
        return Superoperator(self.matrix - other.matrix, self.dim)

    def __mul__(self, c) -> "Superoperator":
        return Superoperator(c * self.matrix, self.dim)

    __rmul__ = __mul__

    def __repr__(self):
        return f"Superoperator(dim={self.dim})"

    def trace_functional(self):
        """The row functional ``(1) S``, reshaped as an operator.

        ``tr(S(rho)) = tr(F rho)`` where ``F`` is the returned matrix; ``S``
        is trace preserving when ``F`` is the identity.
        """
        d = self.dim
        row = np.eye(d).reshape(-1) @ self.matrix
        return row.reshape(d, d).T

    def is_trace_preserving(self, tol: float = 1e-10) -> bool:
        F = self.trace_functional()
        return bool(np.max(np.abs(F - np.eye(self.dim))) <= tol)

    def norm(self) -> float:
        """Frobenius norm of the superoperator matrix."""
        return float(np.linalg.norm(self.matrix))


def identity_superop(dim: int) -> Superoperator:
    return Superoperator(np.eye(dim * dim), dim)


def odot(A, B) -> Superoperator:
    """The superoperator ``rho -> A rho B``."""
    A = np.asarray(A)
    B = np.asarray(B)
    return Superoperator(np.kron(A, B.T), A.shape[0])


def adjoint_superop(X) -> Superoperator:
    """``ad_X = X ⊙ 1 - 1 ⊙ X``, i.e. ``B -> [X, B]``."""
    X = np.asarray(X)
    one = np.eye(X.shape[0])
    return odot(X, one) - odot(one, X)


def lindbladian(observables: Sequence, kappa: float) -> Superoperator:
    """``κ (Σ X⊙X - ½(X⃗²⊙1 + 1⊙X⃗²))`` for Hermitian observables.

    Examples
    --------
    >>> import numpy as np
    >>> lind = lindbladian([np.diag([0.0, 1.0])], 2.0)
    >>> lind(np.ones((2, 2))).real
    array([[ 0., -1.],
           [-1.,  0.]])
    """
    obs = [np.asarray(X) for X in observables]
    if not obs:
        raise InvalidArgumentError("at least one observable is required")
    d = obs[0].shape[0]
    if any(X.shape != (d, d) for X in obs):
        raise InvalidArgumentError("observables have mixed dimensions")
    for X in obs:
        if not is_hermitian(X, 1e-10):
            raise InvalidArgumentError("observables must be Hermitian")
    one = np.eye(d)
    X2 = sum(X @ X for X in obs)
    M = sum(np.kron(X, X.T) for X in obs)
    M = M - 0.5 * (np.kron(X2, one) + np.kron(one, X2.T))
    return Superoperator(kappa * M, d)


def channel_exp(lind: Superoperator, T: float) -> Superoperator:
    """The semigroup element ``exp(T · lind)``."""
    if T < 0:
        raise InvalidArgumentError("T must be nonnegative")
    if T == 0:
        return identity_superop(lind.dim)
    return Superoperator(sla.expm(T * lind.matrix), lind.dim)
