import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qinstrument.algebra_closure import (
    PBWAlgebra,
    Verdict,
    cartan_split,
    close_instrumental_algebra,
    close_observable_algebra,
    parse_generator_spec,
    pbw_normal_order,
    run_closure_spec,
)
from qinstrument.exceptions import DegreeOverflowError, InvalidArgumentError
from qinstrument.linalg_ops import build_fock_operators, build_spin_operators

# frozen integer oracles
CASES = {
    "x @ abelian": [1],
    "x + quad @ abelian": [1, 2],
    "jz,jx @ su2": [3],
    "jz,jx @ spin=1/2": [3],
    "jx,jy,jz @ su2": [6],
    "jx,jy,jz + quad @ su2": [6, 7],
    "q,p @ weyl": [3],
    "q,p + quad @ weyl": [3, 4, 6, 7],
    "jz,jx + quad @ spin=1/2": [3, 4],
    "jz,jx + quad @ spin=1": [3, 4, 6, 9],
}


@pytest.mark.parametrize("spec,dims", list(CASES.items()))
def test_closure_dimension_towers(spec, dims):
    r = run_closure_spec(spec)
    assert r["dims"] == dims
    assert r["verdict"] == Verdict.PRINCIPAL.value


def test_universal_su2_is_chaotic_up_to_cap():
    r = run_closure_spec("jz,jx + quad @ universal su2, cap=60")
    d = r["dims"]
    assert all(b > a for a, b in zip(d, d[1:]))
    assert len(d) >= 5 and d[-1] > 60
    assert r["verdict"] == Verdict.CHAOTIC_UP_TO_CAP.value


def test_defining_relations():
    su2 = PBWAlgebra.su2()
    Jx, Jy, Jz = (su2.gen(n) for n in ("Jx", "Jy", "Jz"))
    assert ((Jy * Jx) - (Jx * Jy - 1j * Jz)).is_zero()
    w = PBWAlgebra.weyl()
    q, p = w.gen("q"), w.gen("p")
    assert ((p * q) - (q * p - 1j * w.unit())).is_zero()


def test_weyl_matches_matrix_backend_on_low_monomials():
    w = PBWAlgebra.weyl()
    rep = build_fock_operators(20)
    mats = {"q": rep["Q"], "p": rep["P"]}
    Ho = (w.gen("q") * w.gen("q") + w.gen("p") * w.gen("p")) * 0.5
    e = Ho.bracket(w.gen("q"))
    M = np.zeros((20, 20), complex)
    for mono, c in e.terms.items():
        T = np.eye(20, dtype=complex)
        for i in mono:
            T = T @ mats[w.generators[i]]
        M += c * T
    ref = rep["Ho"] @ rep["Q"] - rep["Q"] @ rep["Ho"]
    # compare away from the truncation corner
    np.testing.assert_allclose(M[:15, :15], ref[:15, :15], atol=1e-12)
    assert np.allclose(M[:15, :15], -1j * rep["P"][:15, :15])


@given(st.lists(st.integers(0, 2), min_size=0, max_size=6))
def test_normal_order_idempotent_and_dagger_involution(word):
    su2 = PBWAlgebra.su2()
    e = su2.element(su2.normal_order_word(word))
    assert (pbw_normal_order(e) - e).is_zero(1e-10)
    assert (e.dagger().dagger() - e).is_zero(1e-10)


@given(st.lists(st.integers(0, 1), min_size=1, max_size=5), st.lists(st.integers(0, 1), min_size=1, max_size=5))
def test_weyl_associativity(a, b):
    w = PBWAlgebra.weyl()
    x = w.element(w.normal_order_word(a))
    y = w.element(w.normal_order_word(b))
    z = w.gen("p") * w.gen("q")
    assert (((x * y) * z) - (x * (y * z))).is_zero(1e-9)


def test_degree_overflow():
    w = PBWAlgebra.weyl(max_degree=3)
    q = w.gen("q")
    with pytest.raises(DegreeOverflowError):
        q * q * q * q


def test_observable_closure_backend_agreement_spin_half():
    rep = build_spin_operators("1/2")
    f_m, _ = close_observable_algebra([rep["Jz"], rep["Jx"]])
    su2 = PBWAlgebra.su2()
    f_s, _ = close_observable_algebra([su2.gen("Jz"), su2.gen("Jx")])
    assert f_m.dim == f_s.dim == 3


@pytest.mark.parametrize(
    "spec,go,gl",
    [("jx,jy,jz + quad @ su2", 3, 4), ("q,p + quad @ weyl", 3, 4), ("x + quad @ abelian", 0, 2), ("jz,jx + quad @ spin=1", 3, 6)],
)
def test_cartan_split_dimensions(spec, go, gl):
    s = parse_generator_spec(spec)
    from qinstrument.algebra_closure import _spec_generators

    gens, quad = _spec_generators(s)
    f, _ = close_observable_algebra(gens)
    g, _ = close_instrumental_algebra(f, quad)
    a, b = cartan_split(g)
    assert (a.dim, b.dim) == (go, gl)


def test_non_hermitian_generator_rejected():
    with pytest.raises(InvalidArgumentError):
        close_observable_algebra([np.array([[0, 1], [0, 0]], dtype=complex)])


@pytest.mark.parametrize("bad", ["jz,jx", "zz @ su2", "jz + cube @ su2", "jz @ mars", "jz @ su2, cap=x"])
def test_parse_errors(bad):
    with pytest.raises(InvalidArgumentError):
        parse_generator_spec(bad)
