import math

import numpy as np
import pytest

from bivex.copula import CopulaMixture, CopulaParams, Family
from bivex.marginal import GammaMixParams, GpdParams, MarginalParams
from bivex.model import ModelParams
from bivex.prior import (
    PriorConfig,
    gpd_logprior,
    log_prior,
    t_df_logprior,
    threshold_logprior,
    ztpoisson_logpmf,
)


def flat_cfg(n1=2, n2=2):
    return PriorConfig(
        eta_shape=((0.1,) * n1, (0.1,) * n2),
        eta_mean=((2.0,) * n1, (2.0,) * n2),
        mu_shape=((2.1,) * n1, (2.1,) * n2),
        mu_mean=(tuple(2.0 * (j + 1) for j in range(n1)),
                 tuple(2.0 * (j + 1) for j in range(n2))),
        threshold_mean=(5.0, 5.0),
        threshold_sd=(1.0, 1.0),
    )


def margin(mu=(1.0, 4.0)):
    bulk = GammaMixParams(w=(0.6, 0.4), eta=(2.0, 5.0), mu=mu)
    return MarginalParams(bulk=bulk, tail=GpdParams(xi=0.2, sigma=1.0, u=5.0))


def gaussian_model(rho=(0.3,), w=None):
    comps = tuple(CopulaParams(Family.GAUSSIAN, rho=r) for r in rho)
    w = w if w is not None else (1.0 / len(rho),) * len(rho)
    return ModelParams(m1=margin(), m2=margin(), dep=CopulaMixture(weights=w, components=comps))


def test_gpd_logprior_values():
    assert gpd_logprior(0.0, 1.0) == pytest.approx(0.0, abs=1e-14)
    assert gpd_logprior(0.0, 2.0) == pytest.approx(math.log(0.5), abs=1e-14)
    assert gpd_logprior(1.5, 1.0) == pytest.approx(math.log(0.2), abs=1e-12)
    assert gpd_logprior(-0.5, 1.0) == -math.inf
    assert gpd_logprior(0.1, 0.0) == -math.inf


def test_t_df_logprior_positive_and_decreasing():
    vals = {v: t_df_logprior(v) for v in [0.5, 1.0, 5.0, 50.0]}
    assert all(np.isfinite(v) for v in vals.values())
    assert t_df_logprior(1000.0) < t_df_logprior(10.0)
    assert t_df_logprior(-1.0) == -math.inf
    # closed form at v=1 through the trigamma identities:
    # pi(1) = (1/4)^(1/2) (pi^2/2 - pi^2/6 - 2)^(1/2)
    expected = math.log(0.5) + 0.5 * math.log(math.pi ** 2 / 3.0 - 2.0)
    assert t_df_logprior(1.0) == pytest.approx(expected, abs=1e-8)


def test_threshold_logprior():
    assert threshold_logprior(0.0, 0.0, 2.0) == pytest.approx(
        -math.log(2.0) - 0.5 * math.log(2 * math.pi), abs=1e-14)
    assert threshold_logprior(1.0, 0.0, 1.0) == pytest.approx(
        -0.5 - 0.5 * math.log(2 * math.pi), abs=1e-14)
    assert threshold_logprior(2.5, 1.0, 0.7) == pytest.approx(
        threshold_logprior(-0.5, 1.0, 0.7), abs=1e-12)


def test_ztpoisson_normalisation_and_mean():
    logp = np.array([ztpoisson_logpmf(v, 25.0) for v in range(1, 501)])
    p = np.exp(logp)
    assert p.sum() == pytest.approx(1.0, abs=1e-12)
    assert (np.arange(1, 501) * p).sum() == pytest.approx(25.0, abs=1e-9)
    # monotone decreasing beyond the rate
    assert np.all(np.diff(p[30:120]) < 0.0)
    assert ztpoisson_logpmf(0, 25.0) == -math.inf


def test_log_prior_compositional():
    cfg = flat_cfg()
    theta = gaussian_model()
    total = log_prior(theta, cfg)
    assert np.isfinite(total)
    # swapping only the copula weights changes only the Dirichlet block
    theta2 = gaussian_model(rho=(0.1, 0.5), w=(0.25, 0.75))
    theta3 = gaussian_model(rho=(0.1, 0.5), w=(0.6, 0.4))
    assert log_prior(theta2, cfg) == pytest.approx(log_prior(theta3, cfg), abs=1e-12)


def test_log_prior_separability():
    cfg = flat_cfg()
    base = gaussian_model(rho=(0.3,))
    moved_rho = gaussian_model(rho=(0.5,))
    # a rho move keeps every marginal block fixed; the uniform prior is
    # flat, so the total is unchanged
    assert log_prior(base, cfg) == pytest.approx(log_prior(moved_rho, cfg), abs=1e-12)
    moved_threshold = ModelParams(
        m1=MarginalParams(bulk=base.m1.bulk, tail=GpdParams(xi=0.2, sigma=1.0, u=6.0)),
        m2=base.m2, dep=base.dep)
    delta = log_prior(moved_threshold, cfg) - log_prior(base, cfg)
    expected = threshold_logprior(6.0, 5.0, 1.0) - threshold_logprior(5.0, 5.0, 1.0)
    assert delta == pytest.approx(expected, abs=1e-12)


def test_mu_ordering_violation():
    theta = ModelParams(m1=margin(mu=(4.0, 1.0)), m2=margin(), dep=gaussian_model().dep)
    assert log_prior(theta, flat_cfg()) == -math.inf


def test_rho_ordering_violation():
    theta = gaussian_model(rho=(0.5, 0.1))
    assert log_prior(theta, flat_cfg()) == -math.inf


def test_simplex_violation_maps_to_minus_inf():
    from bivex.prior import _dirichlet1_logpdf
    assert _dirichlet1_logpdf((0.5, 0.6)) == -math.inf
    assert _dirichlet1_logpdf((-0.1, 1.1)) == -math.inf


def test_sigma_and_xi_support():
    assert gpd_logprior(0.2, -1.0) == -math.inf
    assert gpd_logprior(-0.7, 1.0) == -math.inf


def test_delta_window_maps_to_minus_inf():
    cfg = flat_cfg()
    # config with a wider exclusion window than the structural one
    wide = PriorConfig(
        eta_shape=cfg.eta_shape, eta_mean=cfg.eta_mean,
        mu_shape=cfg.mu_shape, mu_mean=cfg.mu_mean,
        threshold_mean=cfg.threshold_mean, threshold_sd=cfg.threshold_sd,
        skew_eps=0.05)
    comp = CopulaParams(Family.SKEW_NORMAL, rho=0.2, delta1=0.97, delta2=0.0)
    theta = ModelParams(m1=margin(), m2=margin(),
                        dep=CopulaMixture(weights=(1.0,), components=(comp,)))
    assert log_prior(theta, wide) == -math.inf
    ok = CopulaParams(Family.SKEW_NORMAL, rho=0.2, delta1=0.5, delta2=0.0)
    theta_ok = ModelParams(m1=margin(), m2=margin(),
                           dep=CopulaMixture(weights=(1.0,), components=(ok,)))
    assert np.isfinite(log_prior(theta_ok, wide))


def test_skew_t_prior_includes_poisson_term():
    cfg = flat_cfg()
    def skew_t_model(df):
        comp = CopulaParams(Family.SKEW_T, rho=0.2, df=df, delta1=0.1, delta2=0.1)
        return ModelParams(m1=margin(), m2=margin(),
                           dep=CopulaMixture(weights=(1.0,), components=(comp,)))
    delta = log_prior(skew_t_model(20.0), cfg) - log_prior(skew_t_model(30.0), cfg)
    expected = ztpoisson_logpmf(20, 25.0) - ztpoisson_logpmf(30, 25.0)
    assert delta == pytest.approx(expected, abs=1e-12)


def test_from_data_defaults():
    rng = np.random.default_rng(0)
    x1 = rng.gamma(2.0, 2.0, 500)
    x2 = rng.gamma(3.0, 1.0, 500)
    cfg = PriorConfig.from_data(x1, x2, 2, 2)
    assert len(cfg.eta_mean[0]) == 2
    assert cfg.threshold_mean[0] == pytest.approx(np.quantile(x1, 0.9))
    assert cfg.threshold_sd[0] == pytest.approx(
        (np.quantile(x1, 0.9) - np.quantile(x1, 0.5)) / 4.0)
    assert cfg.mu_mean[0][0] < cfg.mu_mean[0][1]
    # overrides pass through
    cfg2 = PriorConfig.from_data(x1, x2, 2, 2, df_poisson_mean=30.0)
    assert cfg2.df_poisson_mean == 30.0


def test_no_prior_for_closed_form_families():
    comp = CopulaParams(Family.GUMBEL, theta=2.0)
    theta = ModelParams(m1=margin(), m2=margin(),
                        dep=CopulaMixture(weights=(1.0,), components=(comp,)))
    with pytest.raises(ValueError):
        log_prior(theta, flat_cfg())
