import numpy as np
import pytest

from qinstrument.exceptions import InvalidArgumentError
from qinstrument.geometry import collapse_metrics, completeness_functional, kod_histogram, merge_histograms, spin_coherent_state
from qinstrument.geometry.metrics import fibonacci_sphere
from qinstrument.linalg_ops import build_fock_operators, build_spin_operators
from qinstrument.trajectories import pile_up_ensemble


def test_histogram_haar_measure():
    edges = np.linspace(0, 2, 5)
    h = kod_histogram({"a": np.array([0.1, 0.6, 1.9])}, {"a": edges}, haar={"a": lambda a: np.sinh(a) ** 2})
    exact = (np.sinh(2 * edges[1:]) - 2 * edges[1:] - np.sinh(2 * edges[:-1]) + 2 * edges[:-1]) / 4
    np.testing.assert_allclose(h.haar, exact, rtol=1e-10)
    assert h.counts.tolist() == [1, 1, 0, 1]
    assert h.density().shape == (4,)


def test_histogram_weights_and_merge():
    rng = np.random.default_rng(0)
    x = rng.normal(size=100)
    w = rng.uniform(size=100)
    edges = np.linspace(-3, 3, 7)
    full = kod_histogram({"x": x}, {"x": edges}, weights=w)
    parts = merge_histograms([kod_histogram({"x": x[:40]}, {"x": edges}, weights=w[:40]),
                              kod_histogram({"x": x[40:]}, {"x": edges}, weights=w[40:])])
    np.testing.assert_allclose(parts.mass, full.mass)
    assert parts.total_weight == pytest.approx(w.sum())


def test_histogram_errors():
    with pytest.raises(InvalidArgumentError):
        kod_histogram({"x": np.array([])}, {"x": 3})
    with pytest.raises(InvalidArgumentError):
        kod_histogram({"x": np.ones(2)}, {"x": 3}, weights=np.array([1.0, -1.0]))
    a = kod_histogram({"x": np.ones(2)}, {"x": np.linspace(0, 2, 3)})
    b = kod_histogram({"x": np.ones(2)}, {"x": np.linspace(0, 2, 5)})
    with pytest.raises(InvalidArgumentError):
        merge_histograms([a, b])


def test_fibonacci_sphere_uniform():
    th, ph = fibonacci_sphere(1000)
    assert np.mean(np.cos(th)) == pytest.approx(0.0, abs=1e-3)


def test_collapse_metrics_coherent_projector():
    v = spin_coherent_state(0.9, 2.0, 1)
    m = collapse_metrics(np.outer(v, v.conj()), build_spin_operators(1))
    assert m["purity"] == pytest.approx(1.0)
    assert m["top_fidelity"] == pytest.approx(1.0, abs=1e-9)
    assert m["coherent_weight"] == pytest.approx(1.0, abs=1e-9)


def test_collapse_metrics_identity_is_ambiguous():
    m = collapse_metrics(np.eye(3), build_spin_operators(1))
    assert m["purity"] == pytest.approx(1 / 3)
    assert m["ambiguous"]


def test_collapse_metrics_non_coherent_state():
    # |j=1, m=0> is the farthest state from the coherent family: fidelity 1/2
    e = np.diag([0.0, 1.0, 0.0])
    m = collapse_metrics(e, build_spin_operators(1))
    assert m["top_fidelity"] == pytest.approx(0.5, abs=1e-6)


def test_collapse_metrics_fock():
    from qinstrument.geometry.spqm import coherent_state

    v = coherent_state(0.5 + 0.2j, 30)
    m = collapse_metrics(np.outer(v, v.conj()), build_fock_operators(30))
    assert m["top_fidelity"] == pytest.approx(1.0, abs=1e-8)
    assert m["argmax_label"] == pytest.approx(0.5 + 0.2j, abs=1e-4)


def test_collapse_rejects_non_psd():
    with pytest.raises(InvalidArgumentError):
        collapse_metrics(np.diag([1.0, -1.0]), build_spin_operators("1/2"))


def test_completeness_functional_lists_and_empty():
    rep = build_spin_operators("1/2")
    ens = pile_up_ensemble(rep.observables(), 1.0, 0.2, 1e-2, 400, 1)
    c = completeness_functional(ens, n_boot=50)
    recs = [ens.record(i) for i in range(len(ens))]
    c2 = completeness_functional(recs, n_boot=50)
    assert c["deviation"] == pytest.approx(c2["deviation"])
    assert c["deviation"] < 5 * c["sigma"]
    with pytest.raises(InvalidArgumentError):
        completeness_functional([])
