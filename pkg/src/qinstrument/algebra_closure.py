"""Lie closure of measured observables and of their instrumental algebra.

Two iterations are run.  The observable algebra ``f`` is the closure of
the real span of the measured observables under commutators,

    Γ(j+1) = Γ(j) ⊕ [Γ(j), Γ(j)],

and the instrumental algebra is the same closure started from
``f ⊕ span{X⃗²}``.  Dimensions are real-linear: ``X`` and ``iX`` count
separately.

The matrix backend brackets matrices in a fixed representation.  The
symbolic backend brackets elements of the universal enveloping algebra,
stored as polynomials in Poincaré-Birkhoff-Witt normal order.  When the
symbolic closure does not terminate below the cap, the instrument is
reported as chaotic up to that cap.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from .exceptions import DegreeOverflowError, InvalidArgumentError, NumericalRankError
from .linalg_ops import build_fock_operators, build_spin_operators, dag

__all__ = [
    "ClosureReport",
    "LieSpan",
    "PBWAlgebra",
    "SymbolicElement",
    "Verdict",
    "cartan_split",
    "close_instrumental_algebra",
    "close_observable_algebra",
    "parse_generator_spec",
    "pbw_normal_order",
    "run_closure_spec",
]

PRUNE = 1e-12
RANK_TOL = 1e-9
DEFAULT_CAP = 60
DEFAULT_MAX_DEGREE = 24


# ---------------------------------------------------------------------------
# Universal enveloping algebra in PBW normal order
# ---------------------------------------------------------------------------


class PBWAlgebra:
    """Enveloping algebra of a Lie algebra with a declared bracket table.

    Generators are indexed ``0 .. n-1`` in PBW order; a monomial is a
    nondecreasing tuple of indices and the empty tuple is the unit.

    Parameters
    ----------
    name : str
    generators : sequence of str
        Generator symbols in PBW order.  All generators are Hermitian.
    brackets : dict
        ``{(h, g): {monomial: coeff}}`` for ``h > g`` giving ``[h, g]``.
    max_degree : int
    """

    def __init__(self, name, generators, brackets, max_degree=DEFAULT_MAX_DEGREE):
        self.name = name
        self.generators = tuple(generators)
        self.brackets = {k: dict(v) for k, v in brackets.items()}
        self.max_degree = max_degree
        self._insert = lru_cache(maxsize=None)(self._insert_uncached)

    @classmethod
    def su2(cls, max_degree=DEFAULT_MAX_DEGREE):
        # [Jx,Jy] = iJz and cyclic; entries list [h, g] for h > g
        x, y, z = 0, 1, 2
        br = {
            (y, x): {(z,): -1j},
            (z, x): {(y,): 1j},
            (z, y): {(x,): -1j},
        }
        return cls("su2", ("Jx", "Jy", "Jz"), br, max_degree)

    @classmethod
    def weyl(cls, max_degree=DEFAULT_MAX_DEGREE):
        # [q, p] = i, so [p, q] = -i times the central unit
        return cls("weyl", ("q", "p"), {(1, 0): {(): -1j}}, max_degree)

    @classmethod
    def abelian(cls, names=("x",), max_degree=DEFAULT_MAX_DEGREE):
        return cls("abelian", tuple(names), {}, max_degree)

    def __repr__(self):
        return f"PBWAlgebra({self.name}, {self.generators})"

    # --- multiplication --------------------------------------------------

    def _insert_uncached(self, m: tuple, g: int):
        """Normal form of ``m · g`` as a tuple of (monomial, coeff)."""
        if not m or m[-1] <= g:
            if len(m) + 1 > self.max_degree:
                raise DegreeOverflowError(f"degree exceeds {self.max_degree}")
            return ((m + (g,), 1.0 + 0j),)
        head, h = m[:-1], m[-1]
        out: dict = {}
        # m' h g = (m' g) h + m' [h, g]
        for mono, c in self._insert(head, g):
            for mono2, c2 in self._insert(mono, h):
                out[mono2] = out.get(mono2, 0) + c * c2
        for word, c in self.brackets.get((h, g), {}).items():
            for mono, c2 in self._mul_monomial_word(head, word):
                out[mono] = out.get(mono, 0) + c * c2
        return tuple((k, v) for k, v in out.items() if abs(v) > PRUNE)

    def _mul_monomial_word(self, m: tuple, word: tuple):
        poly = {m: 1.0 + 0j}
        for g in word:
            new: dict = {}
            for mono, c in poly.items():
                for mono2, c2 in self._insert(mono, g):
                    new[mono2] = new.get(mono2, 0) + c * c2
            poly = new
        return tuple(poly.items())

    def multiply(self, a: dict, b: dict) -> dict:
        out: dict = {}
        for ma, ca in a.items():
            for mb, cb in b.items():
                for mono, c in self._mul_monomial_word(ma, mb):
                    out[mono] = out.get(mono, 0) + ca * cb * c
        return {k: v for k, v in out.items() if abs(v) > PRUNE}

    def normal_order_word(self, word: Sequence[int]) -> dict:
        """Normal form of an arbitrary product of generators."""
        return dict(self._mul_monomial_word((), tuple(word)))

    # --- constructors ----------------------------------------------------

    def gen(self, name_or_index) -> "SymbolicElement":
        i = self.generators.index(name_or_index) if isinstance(name_or_index, str) else int(name_or_index)
        return SymbolicElement({(i,): 1.0 + 0j}, self)

    def unit(self) -> "SymbolicElement":
        return SymbolicElement({(): 1.0 + 0j}, self)

    def element(self, terms) -> "SymbolicElement":
        return SymbolicElement(dict(terms), self)


class SymbolicElement:
    """Polynomial in PBW normal order with complex coefficients."""

    __slots__ = ("terms", "algebra")

    def __init__(self, terms: dict, algebra: PBWAlgebra):
        self.terms = {tuple(k): complex(v) for k, v in terms.items() if abs(v) > PRUNE}
        self.algebra = algebra

    def _wrap(self, terms):
        return SymbolicElement(terms, self.algebra)

    def __add__(self, other):
        out = dict(self.terms)
        for k, v in other.terms.items():
            out[k] = out.get(k, 0) + v
        return self._wrap(out)

    def __neg__(self):
        return self._wrap({k: -v for k, v in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, SymbolicElement):
            return self._wrap(self.algebra.multiply(self.terms, other.terms))
        return self._wrap({k: v * other for k, v in self.terms.items()})

    def __rmul__(self, c):
        return self._wrap({k: v * c for k, v in self.terms.items()})

    def __repr__(self):
        if not self.terms:
            return "0"
        names = self.algebra.generators
        parts = []
        for mono, c in sorted(self.terms.items(), key=lambda kv: (len(kv[0]), kv[0])):
            word = "·".join(names[i] for i in mono) or "1"
            parts.append(f"({c:.6g}){word}")
        return " + ".join(parts)

    def bracket(self, other) -> "SymbolicElement":
        return self * other - other * self

    def dagger(self) -> "SymbolicElement":
        """Conjugate: reverse each word, conjugate its coefficient, reorder."""
        out: dict = {}
        for mono, c in self.terms.items():
            for m2, c2 in self.algebra.normal_order_word(mono[::-1]).items():
                out[m2] = out.get(m2, 0) + np.conj(c) * c2
        return self._wrap(out)

    @property
    def degree(self) -> int:
        return max((len(m) for m in self.terms), default=0)

    def is_zero(self, tol: float = PRUNE) -> bool:
        return all(abs(v) <= tol for v in self.terms.values())


def pbw_normal_order(e: SymbolicElement) -> SymbolicElement:
    """Re-normalize every word of ``e``; idempotent on normal forms."""
    out: dict = {}
    for mono, c in e.terms.items():
        for m2, c2 in e.algebra.normal_order_word(mono).items():
            out[m2] = out.get(m2, 0) + c * c2
    return SymbolicElement(out, e.algebra)


# ---------------------------------------------------------------------------
# Real-linear spans
# ---------------------------------------------------------------------------


class Verdict(enum.Enum):
    PRINCIPAL = "Principal"
    CHAOTIC_UP_TO_CAP = "ChaoticUpToCap"


@dataclass
class ClosureReport:
    """Dimension tower of a closure run.

    ``dims[k]`` is the real dimension after ``k`` bracket iterations.
    """

    dims: list
    closed: bool
    cap: int
    verdict: Verdict
    backend: str = ""

    def as_dict(self) -> dict:
        return {
            "dims": list(self.dims),
            "closed": self.closed,
            "cap": self.cap,
            "verdict": self.verdict.value,
            "backend": self.backend,
        }


class _Coords:
    """Maps elements to real coordinate vectors.

    Symbolic coordinates interleave real and imaginary parts per monomial
    in order of first appearance, so new monomials only append entries.
    """

    def __init__(self, backend):
        self.backend = backend
        self.index: dict = {}

    def vector(self, e):
        if self.backend == "matrix":
            flat = np.asarray(e).reshape(-1)
            return np.concatenate([flat.real, flat.imag])
        for m in e.terms:
            if m not in self.index:
                self.index[m] = len(self.index)
        v = np.zeros(2 * len(self.index))
        for m, c in e.terms.items():
            v[2 * self.index[m]] = c.real
            v[2 * self.index[m] + 1] = c.imag
        return v

    def matrix(self, elems):
        vs = [self.vector(e) for e in elems]
        n = max(len(v) for v in vs)
        return np.array([np.pad(v, (0, n - len(v))) for v in vs])


@dataclass
class LieSpan:
    """Real-linearly independent basis of a Lie algebra."""

    basis: list
    backend: str
    algebra: object = None
    labels: list = field(default_factory=list)

    @property
    def dim(self) -> int:
        return len(self.basis)

    def bracket(self, a, b):
        if self.backend == "matrix":
            return a @ b - b @ a
        return a.bracket(b)


def _is_zero(e, backend):
    if backend == "matrix":
        return np.max(np.abs(e), initial=0) <= PRUNE
    return e.is_zero()


def _extend_basis(basis, candidates, backend, coords, cap=None):
    """Append candidates that raise the real rank; keep at most ``cap + 1``."""
    basis = list(basis)
    Q = np.zeros((0, 0))
    if basis:
        M = coords.matrix(basis)
        _, s, Vt = np.linalg.svd(M, full_matrices=False)
        if s[-1] <= RANK_TOL * s[0]:
            raise NumericalRankError("basis lost independence")
        Q = Vt
    for c in candidates:
        if _is_zero(c, backend):
            continue
        v = coords.vector(c)
        if Q.shape[1] < v.size:
            Q = np.pad(Q, ((0, 0), (0, v.size - Q.shape[1])))
        scale = np.linalg.norm(v)
        r = v.copy()
        for _ in range(2):
            if Q.shape[0]:
                r = r - Q.T @ (Q @ r)
        if np.linalg.norm(r) > RANK_TOL * scale:
            basis.append(c * (1.0 / scale))
            Q = np.vstack([Q, (r / np.linalg.norm(r))[None, :]]) if Q.shape[0] else (r / np.linalg.norm(r))[None, :]
            if cap is not None and len(basis) > cap:
                break
    return basis


def _close(start, backend, cap, algebra=None):
    coords = _Coords(backend)
    basis = _extend_basis([], start, backend, coords)
    dims = [len(basis)]
    span = LieSpan(basis, backend, algebra)
    closed = False
    try:
        while True:
            if len(basis) > cap:
                break
            cands = []
            for i in range(len(basis)):
                for k in range(i + 1, len(basis)):
                    cands.append(span.bracket(basis[i], basis[k]))
            new = _extend_basis(basis, cands, backend, coords, cap)
            dims.append(len(new))
            if len(new) == len(basis):
                closed = True
                break
            basis = new
            span = LieSpan(basis, backend, algebra)
    except DegreeOverflowError:
        closed = False
    verdict = Verdict.PRINCIPAL if closed else Verdict.CHAOTIC_UP_TO_CAP
    return LieSpan(basis, backend, algebra), ClosureReport(dims, closed, cap, verdict, backend)


def _backend_of(generators):
    g0 = generators[0]
    if isinstance(g0, SymbolicElement):
        return "symbolic", g0.algebra
    return "matrix", None


def close_observable_algebra(generators, backend: str | None = None, cap: int = DEFAULT_CAP):
    """Close the real span of Hermitian generators under commutators.

    Parameters
    ----------
    generators : sequence of ndarray or SymbolicElement
    backend : {'matrix', 'symbolic'}, optional
        Inferred from the generator type when omitted.
    cap : int
        Stop once the dimension exceeds ``cap``.

    Returns
    -------
    LieSpan, ClosureReport
    """
    if not generators:
        raise InvalidArgumentError("no generators")
    inferred, algebra = _backend_of(generators)
    backend = backend or inferred
    if backend != inferred:
        raise InvalidArgumentError("backend does not match generator type")
    if backend == "matrix":
        for g in generators:
            if np.max(np.abs(g - dag(g))) > 1e-10:
                raise InvalidArgumentError("matrix generators must be Hermitian")
    else:
        for g in generators:
            if not (g - g.dagger()).is_zero(1e-10):
                raise InvalidArgumentError("symbolic generators must be Hermitian")
    return _close(list(generators), backend, cap, algebra)


def close_instrumental_algebra(f: LieSpan, quadratic, backend: str | None = None, cap: int = DEFAULT_CAP):
    """Close ``f ⊕ span{quadratic}`` under commutators."""
    backend = backend or f.backend
    if backend != f.backend:
        raise InvalidArgumentError("backend differs from that of f")
    return _close(list(f.basis) + [quadratic], backend, cap, f.algebra)


# ---------------------------------------------------------------------------
# Cartan split
# ---------------------------------------------------------------------------


def _hermitian_parts(e, backend):
    if backend == "matrix":
        return (e + dag(e)) / 2, (e - dag(e)) / 2
    ed = e.dagger()
    return (e + ed) * 0.5, (e - ed) * 0.5


def _in_span(e, span_basis, backend, coords, tol=1e-8):
    if _is_zero(e, backend):
        return True
    M = coords.matrix(list(span_basis) + [e]) if span_basis else None
    if M is None:
        return False
    A, b = M[:-1].T, M[-1]
    x, *_ = np.linalg.lstsq(A, b, rcond=None)
    return np.linalg.norm(A @ x - b) <= tol * max(np.linalg.norm(b), 1.0)


def cartan_split(g: LieSpan, check: bool = True):
    """Split a closed algebra into anti-Hermitian ``g_o`` and Hermitian ``g_l``.

    Verifies ``[g_o, g_o] ⊆ g_o``, ``[g_o, g_l] ⊆ g_l`` and
    ``[g_l, g_l] ⊆ g_o``.

    Raises
    ------
    InvalidArgumentError
        If the Hermitian and anti-Hermitian parts do not span ``g``.
    """
    backend = g.backend
    coords = _Coords(backend)
    herm, anti = [], []
    for e in g.basis:
        h, a = _hermitian_parts(e, backend)
        herm.append(h)
        anti.append(a)
    gl = _extend_basis([], herm, backend, coords)
    go = _extend_basis([], anti, backend, coords)
    if len(gl) + len(go) != g.dim:
        raise InvalidArgumentError("basis cannot be split into Hermitian and anti-Hermitian parts")
    span = LieSpan([], backend)
    if check:
        pairs = [
            (go, go, go, "[g_o,g_o]"),
            (go, gl, gl, "[g_o,g_l]"),
            (gl, gl, go, "[g_l,g_l]"),
        ]
        for A, B, target, name in pairs:
            for a in A:
                for b in B:
                    if not _in_span(span.bracket(a, b), target, backend, coords):
                        raise InvalidArgumentError(f"{name} leaves its target subspace")
    return LieSpan(go, backend, g.algebra), LieSpan(gl, backend, g.algebra)


# ---------------------------------------------------------------------------
# Generator specifications
# ---------------------------------------------------------------------------

_SYMBOLS = {
    "x": ("abelian", "x"),
    "q": ("weyl", "q"),
    "p": ("weyl", "p"),
    "jx": ("su2", "Jx"),
    "jy": ("su2", "Jy"),
    "jz": ("su2", "Jz"),
}


@dataclass
class ClosureSpec:
    generators: list
    quad: bool
    backend: str  # 'abelian' | 'weyl' | 'su2' | 'spin' | 'fock'
    j: object = None
    n_cut: int | None = None
    cap: int = DEFAULT_CAP
    text: str = ""


def parse_generator_spec(text: str) -> ClosureSpec:
    """Parse specs such as ``"jz,jx + quad @ spin=1"``.

    Grammar: ``names [+ quad] @ backend[, cap=N]`` where ``names`` is a
    comma list from ``x, q, p, jx, jy, jz`` and ``backend`` is one of
    ``abelian``, ``weyl``, ``universal su2`` (or ``su2``), ``spin=j`` or
    ``fock=n_cut``.
    """
    if "@" not in text:
        raise InvalidArgumentError("missing '@ backend'")
    lhs, rhs = text.split("@", 1)
    parts = [p.strip() for p in lhs.split("+")]
    names = [n.strip().lower() for n in parts[0].split(",") if n.strip()]
    extra = [p.lower() for p in parts[1:]]
    if any(e not in ("quad", "quadratic") for e in extra):
        raise InvalidArgumentError(f"unknown term in {lhs!r}")
    if not names or any(n not in _SYMBOLS for n in names):
        raise InvalidArgumentError(f"unknown generator in {parts[0]!r}")
    opts = [o.strip().lower() for o in rhs.split(",")]
    be = opts[0]
    cap = DEFAULT_CAP
    for o in opts[1:]:
        m = re.fullmatch(r"cap\s*=\s*(\d+)", o)
        if not m:
            raise InvalidArgumentError(f"unknown option {o!r}")
        cap = int(m.group(1))
    spec = ClosureSpec(names, bool(extra), "", cap=cap, text=text.strip())
    if m := re.fullmatch(r"spin\s*=\s*([0-9./]+)", be):
        from fractions import Fraction

        spec.backend, spec.j = "spin", Fraction(m.group(1))
    elif m := re.fullmatch(r"fock\s*=\s*(\d+)", be):
        spec.backend, spec.n_cut = "fock", int(m.group(1))
    elif re.fullmatch(r"(universal\s+)?su2", be):
        spec.backend = "su2"
    elif re.fullmatch(r"(universal\s+)?weyl", be):
        spec.backend = "weyl"
    elif re.fullmatch(r"(universal\s+)?abelian", be):
        spec.backend = "abelian"
    else:
        raise InvalidArgumentError(f"unknown backend {be!r}")
    families = {_SYMBOLS[n][0] for n in names}
    want = {"spin": "su2", "fock": "weyl"}.get(spec.backend, spec.backend)
    if families != {want}:
        raise InvalidArgumentError("generators do not belong to the backend")
    return spec


def _spec_generators(spec: ClosureSpec):
    names = [_SYMBOLS[n][1] for n in spec.generators]
    if spec.backend in ("su2", "weyl"):
        alg = PBWAlgebra.su2() if spec.backend == "su2" else PBWAlgebra.weyl()
        gens = [alg.gen(n) for n in names]
    elif spec.backend == "abelian":
        alg = PBWAlgebra.abelian(tuple(sorted(set(names))))
        gens = [alg.gen(n) for n in names]
    elif spec.backend == "spin":
        rep = build_spin_operators(spec.j)
        gens = [rep[n] for n in names]
    else:
        rep = build_fock_operators(spec.n_cut)
        gens = [rep[n.upper()] for n in names]
    quad = gens[0] * gens[0] if not isinstance(gens[0], np.ndarray) else gens[0] @ gens[0]
    for g in gens[1:]:
        quad = quad + (g * g if not isinstance(g, np.ndarray) else g @ g)
    return gens, quad


def run_closure_spec(text: str) -> dict:
    """Run both closure stages for a textual spec.

    Returns a dict with ``dims`` (the observable dimension followed by the
    instrumental tower with consecutive repeats removed), ``closed``,
    ``verdict`` and the per-stage reports.
    """
    spec = parse_generator_spec(text)
    gens, quad = _spec_generators(spec)
    f, rep_f = close_observable_algebra(gens, cap=spec.cap)
    stages = {"observable": rep_f.as_dict()}
    dims = [f.dim]
    closed, verdict = rep_f.closed, rep_f.verdict
    if spec.quad and rep_f.closed:
        g, rep_g = close_instrumental_algebra(f, quad, cap=spec.cap)
        stages["instrumental"] = rep_g.as_dict()
        for d in rep_g.dims:
            if d != dims[-1]:
                dims.append(d)
        closed, verdict = rep_g.closed, rep_g.verdict
    backend = "matrix" if spec.backend in ("spin", "fock") else "symbolic"
    return {
        "generators": spec.text.split("@")[0].strip(),
        "backend": spec.backend if backend == "symbolic" else f"{spec.backend}={spec.j or spec.n_cut}",
        "dims": dims,
        "closed": closed,
        "verdict": verdict.value,
        "cap": spec.cap,
        "stages": stages,
    }
