import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import integrate, optimize, stats

from bivex.marginal import (
    GammaMixParams,
    GpdParams,
    MarginalParams,
    SupportError,
    gamma_mix_cdf,
    gamma_mix_logpdf,
    gpd_cdf,
    gpd_logpdf,
    mgpd_cdf,
    mgpd_logpdf,
    mgpd_quantile,
    mgpd_sample,
)


def exp1_bulk():
    return GammaMixParams(w=(1.0,), eta=(1.0,), mu=(1.0,))


def two_comp_margin():
    # H(u) ~ 0.9 with a mildly heavy tail
    bulk = GammaMixParams(w=(0.6, 0.4), eta=(2.0, 5.0), mu=(1.0, 4.0))
    u = float(optimize.brentq(lambda x: gamma_mix_cdf(x, bulk) - 0.9, 1e-6, 100.0))
    return MarginalParams(bulk=bulk, tail=GpdParams(xi=0.2, sigma=1.0, u=u))


def test_gamma_mix_exponential_case():
    p = exp1_bulk()
    for x in [0.2, 1.0, 3.7]:
        assert gamma_mix_logpdf(x, p) == pytest.approx(-x, abs=1e-12)
        assert gamma_mix_cdf(x, p) == pytest.approx(-math.expm1(-x), abs=1e-12)
    assert gamma_mix_cdf(math.log(2.0), p) == pytest.approx(0.5, abs=1e-12)


def test_gamma_mix_two_component_closed_form():
    # exponential mixture: 0.5 Exp(1) + 0.5 Exp(mean 2)
    p = GammaMixParams(w=(0.5, 0.5), eta=(1.0, 1.0), mu=(1.0, 2.0))
    expected = 0.5 * -math.expm1(-2.0) + 0.5 * -math.expm1(-1.0)
    assert gamma_mix_cdf(2.0, p) == pytest.approx(expected, abs=1e-12)
    # cross-check against quadrature of the density
    quad, _ = integrate.quad(lambda x: math.exp(gamma_mix_logpdf(x, p)), 1e-12, 2.0)
    assert gamma_mix_cdf(2.0, p) == pytest.approx(quad, abs=1e-9)


def test_gamma_mix_domain_and_validation():
    p = exp1_bulk()
    with pytest.raises(ValueError):
        gamma_mix_logpdf(0.0, p)
    with pytest.raises(ValueError):
        GammaMixParams(w=(0.5, 0.4), eta=(1.0, 1.0), mu=(1.0, 2.0))
    with pytest.raises(ValueError):
        GammaMixParams(w=(1.0,), eta=(-1.0,), mu=(1.0,))


def test_gpd_cdf_examples():
    assert gpd_cdf(0.0, GpdParams(xi=0.3, sigma=2.0, u=0.0)) == 0.0
    assert gpd_cdf(1.0, GpdParams(xi=1.0, sigma=1.0, u=0.0)) == pytest.approx(0.5, abs=1e-12)
    assert gpd_cdf(math.log(2.0), GpdParams(xi=0.0, sigma=1.0, u=0.0)) == pytest.approx(0.5, abs=1e-12)


def test_gpd_support_handling():
    p = GpdParams(xi=-0.5, sigma=1.0, u=0.0)
    assert p.upper_endpoint == pytest.approx(2.0)
    with pytest.raises(SupportError):
        gpd_cdf(-0.5, p)
    # above a finite endpoint, the df clamps and the density vanishes
    assert gpd_cdf(5.0, p) == 1.0
    assert gpd_logpdf(5.0, p) == -math.inf
    with pytest.raises(ValueError):
        GpdParams(xi=0.1, sigma=0.0, u=1.0)


def test_gpd_branch_switch_smoothness():
    xs = np.linspace(0.0, 30.0, 200)
    a = gpd_cdf(xs, GpdParams(xi=1e-12, sigma=1.3, u=0.0))
    b = gpd_cdf(xs, GpdParams(xi=0.0, sigma=1.3, u=0.0))
    assert np.max(np.abs(a - b)) < 1e-8


def test_mgpd_cdf_continuous_at_threshold():
    m = two_comp_margin()
    u = m.tail.u
    left = mgpd_cdf(u, m)
    right = mgpd_cdf(u + 1e-14, m)
    assert left == pytest.approx(m.bulk_mass, abs=1e-12)
    assert abs(left - right) < 1e-12


def test_mgpd_density_integrates_to_one():
    m = two_comp_margin()
    top = mgpd_quantile(0.999999, m)
    val, _ = integrate.quad(lambda x: math.exp(mgpd_logpdf(x, m)), 1e-12, top,
                            limit=300, epsabs=1e-10)
    assert val == pytest.approx(1.0, abs=2e-6)


def test_mgpd_pure_bulk_when_threshold_beyond_mass():
    bulk = exp1_bulk()
    m = MarginalParams(bulk=bulk, tail=GpdParams(xi=0.1, sigma=1.0, u=60.0))
    for x in [0.3, 1.0, 4.0]:
        assert mgpd_logpdf(x, m) == pytest.approx(gamma_mix_logpdf(x, bulk), abs=1e-12)


def test_mgpd_quantile_closed_form_example():
    # bulk chosen so H(10) = 0.9 exactly: Exp with mean 10/log(10)
    bulk = GammaMixParams(w=(1.0,), eta=(1.0,), mu=(10.0 / math.log(10.0),))
    m = MarginalParams(bulk=bulk, tail=GpdParams(xi=0.5, sigma=2.0, u=10.0))
    assert m.bulk_mass == pytest.approx(0.9, abs=1e-12)
    q = mgpd_quantile(0.99, m)
    assert q == pytest.approx(10.0 + 4.0 * (math.sqrt(10.0) - 1.0), abs=1e-6)
    # independent root-finding oracle on the df
    oracle = optimize.brentq(lambda x: mgpd_cdf(x, m) - 0.99, 10.0, 100.0, xtol=1e-12)
    assert q == pytest.approx(oracle, abs=1e-6)
    assert mgpd_cdf(18.64911, m) == pytest.approx(0.99, abs=1e-5)


def test_mgpd_quantile_boundary_and_bulk():
    m = two_comp_margin()
    hu = m.bulk_mass
    assert mgpd_quantile(hu, m) == pytest.approx(m.tail.u, abs=1e-9)
    bulk = exp1_bulk()
    m2 = MarginalParams(bulk=bulk, tail=GpdParams(xi=0.1, sigma=1.0, u=50.0))
    assert mgpd_quantile(0.5, m2) == pytest.approx(math.log(2.0), abs=1e-8)


def test_mgpd_quantile_cdf_roundtrip():
    m = two_comp_margin()
    for p in [0.9, 0.95, 0.99, 0.995, 0.999]:
        q = mgpd_quantile(p, m)
        assert mgpd_cdf(q, m) == pytest.approx(p, abs=1e-9)
    # bulk-side round trips through the numeric fallback
    for p in [0.1, 0.42, 0.8]:
        q = mgpd_quantile(p, m)
        assert mgpd_cdf(q, m) == pytest.approx(p, abs=1e-9)


def test_mgpd_quantile_domain():
    m = two_comp_margin()
    with pytest.raises(ValueError):
        mgpd_quantile(0.0, m)
    with pytest.raises(ValueError):
        mgpd_quantile(1.0, m)


def test_branch_switch_at_tiny_xi():
    bulk = exp1_bulk()
    xs = np.linspace(0.05, 12.0, 400)
    a = mgpd_cdf(xs, MarginalParams(bulk=bulk, tail=GpdParams(xi=1e-12, sigma=1.0, u=1.5)))
    b = mgpd_cdf(xs, MarginalParams(bulk=bulk, tail=GpdParams(xi=0.0, sigma=1.0, u=1.5)))
    assert np.max(np.abs(a - b)) < 1e-8


def test_mgpd_sample_ks_and_determinism():
    m = two_comp_margin()
    draws = mgpd_sample(m, 10 ** 5, np.random.default_rng(11))
    stat = stats.kstest(draws, lambda x: mgpd_cdf(np.asarray(x), m)).statistic
    assert stat < 0.01
    again = mgpd_sample(m, 10 ** 5, np.random.default_rng(11))
    assert_allclose(draws, again, rtol=0.0, atol=0.0)


def test_mgpd_sample_tail_fraction():
    m = two_comp_margin()
    n = 10 ** 5
    draws = mgpd_sample(m, n, np.random.default_rng(3))
    frac = np.mean(draws > m.tail.u)
    p = 1.0 - m.bulk_mass
    se = math.sqrt(p * (1.0 - p) / n)
    assert abs(frac - p) < 3.0 * se
