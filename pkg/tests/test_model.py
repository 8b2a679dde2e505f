import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import optimize, stats

from bivex.copula import (
    CopulaMixture,
    CopulaParams,
    Family,
    copula_logdensity,
    copula_sample,
)
from bivex.marginal import (
    GammaMixParams,
    GpdParams,
    MarginalParams,
    gamma_mix_cdf,
    mgpd_cdf,
    mgpd_logpdf,
    mgpd_quantile,
)
from bivex.model import (
    Dataset,
    ModelParams,
    chi_u,
    chibar_u,
    joint_exceedance,
    log_likelihood,
    model_sample,
)


def make_margin(seed_mu=1.0):
    bulk = GammaMixParams(w=(0.6, 0.4), eta=(2.0, 5.0), mu=(seed_mu, 4.0 * seed_mu))
    u = float(optimize.brentq(lambda x: gamma_mix_cdf(x, bulk) - 0.9, 1e-6, 1e3))
    return MarginalParams(bulk=bulk, tail=GpdParams(xi=0.2, sigma=1.0, u=u))


def make_model(family=Family.GAUSSIAN, **kw):
    comp = CopulaParams(family, **kw)
    mix = CopulaMixture(weights=(1.0,), components=(comp,))
    return ModelParams(m1=make_margin(1.0), m2=make_margin(1.4), dep=mix)


def small_data(theta, n=40, seed=0):
    return model_sample(theta, n, np.random.default_rng(seed))


def test_dataset_validation():
    with pytest.raises(ValueError):
        Dataset(x1=np.array([1.0, -2.0]), x2=np.array([1.0, 2.0]))
    with pytest.raises(ValueError):
        Dataset(x1=np.array([]), x2=np.array([]))
    with pytest.raises(ValueError):
        Dataset(x1=np.array([1.0, np.inf]), x2=np.array([1.0, 2.0]))


def test_independence_copula_splits_likelihood():
    theta = make_model(rho=0.0)
    data = small_data(theta)
    marginal_only = float(np.sum(mgpd_logpdf(data.x1, theta.m1))
                          + np.sum(mgpd_logpdf(data.x2, theta.m2)))
    assert log_likelihood(theta, data) == pytest.approx(marginal_only, abs=1e-10)


def test_duplicated_data_doubles_loglik():
    theta = make_model(rho=0.6)
    data = small_data(theta)
    doubled = Dataset(x1=np.concatenate([data.x1, data.x1]),
                      x2=np.concatenate([data.x2, data.x2]))
    assert log_likelihood(theta, doubled) == pytest.approx(
        2.0 * log_likelihood(theta, data), rel=1e-12)


def test_single_observation_compositional():
    theta = make_model(rho=0.4)
    x1, x2 = 2.3, 1.7
    data = Dataset(x1=np.array([x1]), x2=np.array([x2]))
    u1 = float(np.clip(mgpd_cdf(x1, theta.m1), 1e-12, 1 - 1e-12))
    u2 = float(np.clip(mgpd_cdf(x2, theta.m2), 1e-12, 1 - 1e-12))
    by_hand = (copula_logdensity(theta.dep.components[0], u1, u2)
               + mgpd_logpdf(x1, theta.m1) + mgpd_logpdf(x2, theta.m2))
    assert log_likelihood(theta, data) == pytest.approx(by_hand, abs=1e-12)


def test_loglik_row_permutation_invariant():
    theta = make_model(rho=0.5)
    data = small_data(theta, n=100)
    perm = np.random.default_rng(1).permutation(len(data))
    shuffled = Dataset(x1=data.x1[perm], x2=data.x2[perm])
    assert log_likelihood(theta, shuffled) == pytest.approx(
        log_likelihood(theta, data), abs=1e-10)


def test_out_of_support_gives_minus_inf():
    bulk = GammaMixParams(w=(1.0,), eta=(2.0,), mu=(1.0,))
    tail = GpdParams(xi=-0.5, sigma=1.0, u=2.0)  # endpoint at 4
    margin = MarginalParams(bulk=bulk, tail=tail)
    theta = ModelParams(m1=margin, m2=margin,
                        dep=CopulaMixture(weights=(1.0,), components=(
                            CopulaParams(Family.GAUSSIAN, rho=0.3),)))
    data = Dataset(x1=np.array([1.0, 10.0]), x2=np.array([1.0, 1.5]))
    assert log_likelihood(theta, data) == -math.inf


def test_joint_exceedance_independence():
    theta = make_model(rho=0.0)
    x1 = mgpd_quantile(0.97, theta.m1)
    x2 = mgpd_quantile(0.94, theta.m2)
    assert joint_exceedance(theta, x1, x2) == pytest.approx(0.03 * 0.06, abs=1e-9)


def test_joint_exceedance_below_support():
    theta = make_model(rho=0.5)
    assert joint_exceedance(theta, -1.0, -5.0) == 1.0


def test_joint_exceedance_monte_carlo():
    theta = make_model(rho=0.5)
    q1 = mgpd_quantile(0.99, theta.m1)
    q2 = mgpd_quantile(0.99, theta.m2)
    val = joint_exceedance(theta, q1, q2)
    n = 10 ** 7
    u1, u2 = copula_sample(theta.dep, n, np.random.default_rng(77))
    hat = float(np.mean((u1 > 0.99) & (u2 > 0.99)))
    se = math.sqrt(hat * (1.0 - hat) / n)
    assert abs(val - hat) < 3.0 * se


def test_chi_independence_and_comonotone():
    theta = make_model(rho=0.0)
    assert chi_u(theta, 0.9) == pytest.approx(0.1, abs=1e-9)
    theta = make_model(rho=1.0 - 1e-9)
    assert chi_u(theta, 0.9) == pytest.approx(1.0, abs=1e-3)


def test_chibar_independence_and_comonotone():
    theta = make_model(rho=0.0)
    for u in [0.5, 0.9, 0.99]:
        assert chibar_u(theta, u) == pytest.approx(0.0, abs=1e-9)
    theta = make_model(rho=1.0 - 1e-9)
    assert chibar_u(theta, 0.95) == pytest.approx(1.0, abs=1e-3)


def test_chi_chibar_monte_carlo_t_copula():
    theta = make_model(Family.T, rho=0.5, df=2.0)
    n = 10 ** 7
    u1, u2 = copula_sample(theta.dep, n, np.random.default_rng(123))
    for u in [0.9, 0.99]:
        joint = float(np.mean((u1 > u) & (u2 > u)))
        se = math.sqrt(joint * (1.0 - joint) / n)
        chi_hat = joint / (1.0 - u)
        assert abs(chi_u(theta, u) - chi_hat) < 3.0 * se / (1.0 - u)
        cb_hat = 2.0 * math.log(1 - u) / math.log(joint) - 1.0
        # delta-method SE for the log-ratio transform
        cb_se = abs(2.0 * math.log(1 - u) / math.log(joint) ** 2) * se / joint
        assert abs(chibar_u(theta, u) - cb_hat) < 3.0 * cb_se


def test_domain_checks():
    theta = make_model(rho=0.2)
    with pytest.raises(ValueError):
        chi_u(theta, 0.0)
    with pytest.raises(ValueError):
        chi_u(theta, 1.0 - 1e-12)
    with pytest.raises(ValueError):
        chibar_u(theta, 1.5)


def test_model_sample_margins_ks():
    theta = make_model(rho=0.6)
    data = model_sample(theta, 10 ** 5, np.random.default_rng(4))
    stat1 = stats.kstest(data.x1, lambda x: mgpd_cdf(np.asarray(x), theta.m1)).statistic
    stat2 = stats.kstest(data.x2, lambda x: mgpd_cdf(np.asarray(x), theta.m2)).statistic
    assert stat1 < 0.01 and stat2 < 0.01


def test_model_sample_exceedance_frequency():
    theta = make_model(rho=0.7)
    n = 10 ** 5
    data = model_sample(theta, n, np.random.default_rng(21))
    q1 = mgpd_quantile(0.99, theta.m1)
    q2 = mgpd_quantile(0.99, theta.m2)
    freq = float(np.mean((data.x1 > q1) & (data.x2 > q2)))
    p = joint_exceedance(theta, q1, q2)
    se = math.sqrt(p * (1.0 - p) / n)
    assert abs(freq - p) < 3.0 * se


def test_model_sample_deterministic():
    theta = make_model(rho=0.3)
    a = model_sample(theta, 300, np.random.default_rng(8))
    b = model_sample(theta, 300, np.random.default_rng(8))
    assert_allclose(a.x1, b.x1, rtol=0.0, atol=0.0)
    assert_allclose(a.x2, b.x2, rtol=0.0, atol=0.0)


def test_empirical_chi_chibar_match_model():
    theta = make_model(Family.T, rho=0.6, df=4.0)
    n = 10 ** 5
    data = model_sample(theta, n, np.random.default_rng(17))
    r1 = stats.rankdata(data.x1) / (n + 1.0)
    r2 = stats.rankdata(data.x2) / (n + 1.0)
    for u in [0.9, 0.95, 0.99]:
        joint = float(np.mean((r1 > u) & (r2 > u)))
        se = math.sqrt(max(joint, 1e-12) * (1.0 - joint) / n)
        assert abs(chi_u(theta, u) * (1 - u) - joint) < 3.5 * se
