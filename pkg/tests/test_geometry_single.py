import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from qinstrument.geometry import analytic_kod_single, coherence_deviation, extract_single, single_ensemble
from qinstrument.trajectories import pile_up


def test_analytic_kod():
    k = analytic_kod_single(2.0, 0.5)
    assert (k.r, k.mean, k.variance) == (1.0, 0.0, 1.0)
    assert k.cdf(0.0) == pytest.approx(0.5)
    z = analytic_kod_single(1.0, 0.0)
    assert z.cdf(-1e-9) == 0.0 and z.cdf(0.0) == 1.0


@given(st.lists(st.floats(-2, 2), min_size=2, max_size=4, unique=True), st.floats(0.1, 2.0))
def test_coherence_factor(spectrum, kT):
    assert coherence_deviation(spectrum, 1.0, kT) < 1e-10


def test_extract_single_exact(rng):
    X = np.diag([1.0, -1.0, 0.5])
    rec = pile_up([X], 1.0, 0.4, 1e-2, rng=rng)
    c = extract_single(rec.kraus, X, rec.log_norm)
    assert c.r == pytest.approx(0.4, abs=1e-12)
    assert c.a == pytest.approx(rec.increments.sum(), abs=1e-12)


def test_single_ensemble_gaussian():
    r, a, ens = single_ensemble([1.0, -1.0], 1.0, 1.0, 1e-2, 5000, seed=1)
    assert np.max(np.abs(r - 1.0)) < 1e-12
    assert stats.kstest(a, stats.norm(0, 1).cdf).pvalue > 0.001
