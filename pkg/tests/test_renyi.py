import math

import mpmath as mp
import numpy as np
import pytest

from dfrkit.dist import Dist, cbd_pmf
from dfrkit.params import ParameterError
from dfrkit.renyi import RenyiResult, cbd_vs_gaussian, renyi_divergence, renyi_sweep, rounded_gaussian_pmf, sweep_csv

# R_9(psi_8 || xi_8), evaluated once at 50 digits with mpmath (see _mp_divergence)
LOCKED_R9_K8 = 1.001994074673865697478845


def _mp_divergence(k, a, dps=50):
    with mp.workdps(dps):
        sigma = mp.sqrt(mp.mpf(k) / 2)
        total = mp.mpf(0)
        for x in range(-k, k + 1):
            p = mp.binomial(2 * k, x + k) / mp.mpf(4) ** k
            q = mp.ncdf((x + mp.mpf(1) / 2) / sigma) - mp.ncdf((x - mp.mpf(1) / 2) / sigma)
            total += p**a / q ** (a - 1)
        return total ** (1 / mp.mpf(a - 1))


def test_rounded_gaussian_values():
    d = rounded_gaussian_pmf(2)
    assert d.pmf(0) == pytest.approx(0.382925, abs=5e-7)
    assert d.pmf(0) == pytest.approx(float(mp.ncdf(0.5) - mp.ncdf(-0.5)), rel=1e-14)
    for k in (1, 2, 8, 16):
        g = rounded_gaussian_pmf(k)
        assert g.lo == -k and g.hi == k
        assert g.is_symmetric(rtol=1e-12)
        assert g.total() + g.err == pytest.approx(1.0, abs=1e-9)


def test_rounded_gaussian_rejects_bad_k():
    with pytest.raises(ParameterError):
        rounded_gaussian_pmf(0)


def test_identity_is_one():
    for k in (2, 9):
        d = cbd_pmf(k)
        assert renyi_divergence(d, d, 9) == pytest.approx(1.0, abs=1e-14)


def test_at_least_one_on_perturbed_pairs(rng):
    base = cbd_pmf(4).masses
    for _ in range(20):
        q = base * rng.uniform(0.8, 1.2, base.size)
        q /= q.sum()
        assert renyi_divergence(cbd_pmf(4), Dist(-4, q, 0.0), 3.0) > 1.0


def test_domain_errors():
    p = cbd_pmf(2)
    q = Dist(-1, np.array([0.25, 0.5, 0.25]), 0.0)
    with pytest.raises(ParameterError):
        renyi_divergence(p, q, 9)
    with pytest.raises(ParameterError):
        renyi_divergence(p, p, 1.0)


def test_regression_lock():
    assert float(_mp_divergence(8, 9)) == pytest.approx(LOCKED_R9_K8, rel=1e-15)
    assert cbd_vs_gaussian(8).divergence == pytest.approx(LOCKED_R9_K8, rel=1e-12)


@pytest.mark.parametrize("k", [2, 5, 16])
def test_matches_high_precision(k):
    assert cbd_vs_gaussian(k, 9).divergence == pytest.approx(float(_mp_divergence(k, 9)), rel=1e-12)


def test_sweep_strictly_decreasing():
    res = renyi_sweep(2, 16, 9)
    vals = [r.divergence for r in res]
    assert [r.k for r in res] == list(range(2, 17))
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert all(v > 1 for v in vals)


def test_sweep_csv():
    text = sweep_csv([RenyiResult(2, 9.0, 1.5)])
    assert text.splitlines() == ["k,a,divergence", "2,9.0,1.5"]
    with pytest.raises(ParameterError):
        renyi_sweep(5, 4)
    assert math.isfinite(cbd_vs_gaussian(3, 2.0).divergence)
