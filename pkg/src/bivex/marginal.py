"""Semiparametric marginal model: gamma-mixture bulk spliced with a GPD tail.

The distribution function is continuous at the threshold; the density may
jump there. High quantiles above the threshold have a closed form; bulk
quantiles fall back to bracketed inversion.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special as sp

from .special import invert_cdf

__all__ = [
    "SupportError",
    "GpdParams",
    "GammaMixParams",
    "MarginalParams",
    "gamma_mix_logpdf",
    "gamma_mix_cdf",
    "gpd_logpdf",
    "gpd_cdf",
    "mgpd_logpdf",
    "mgpd_cdf",
    "mgpd_quantile",
    "mgpd_sample",
]

# below this the (1 + xi z)^(-1/xi) form loses all precision; use the
# exponential branch instead
XI_EPS = 1e-8


class SupportError(ValueError):
    """Evaluation point outside the support of the distribution."""


@dataclass(frozen=True)
class GpdParams:
    """Generalised Pareto tail block: shape xi, scale sigma, threshold u."""

    xi: float
    sigma: float
    u: float

    def __post_init__(self):
        if not (np.isfinite(self.xi) and np.isfinite(self.sigma) and np.isfinite(self.u)):
            raise ValueError("GPD parameters must be finite")
        if self.sigma <= 0.0:
            raise ValueError("sigma must be > 0")

    @property
    def upper_endpoint(self) -> float:
        """Finite right endpoint for xi < 0, +inf otherwise."""
        if self.xi < -XI_EPS:
            return self.u - self.sigma / self.xi
        return math.inf


@dataclass(frozen=True)
class GammaMixParams:
    """Finite gamma mixture in the shape/mean parametrisation.

    Component means are expected to be strictly increasing; the ordering is
    a prior constraint (enforced by ``prior.log_prior``), not a structural
    one, so that proposal states remain representable.
    """

    w: tuple
    eta: tuple
    mu: tuple

    def __post_init__(self):
        w = tuple(float(v) for v in self.w)
        eta = tuple(float(v) for v in self.eta)
        mu = tuple(float(v) for v in self.mu)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "mu", mu)
        if not (len(w) == len(eta) == len(mu)) or len(w) == 0:
            raise ValueError("w, eta, mu must have equal positive length")
        if any(x < 0.0 for x in w) or abs(sum(w) - 1.0) > 1e-9:
            raise ValueError("w must be a probability vector")
        if any(x <= 0.0 for x in eta) or any(x <= 0.0 for x in mu):
            raise ValueError("eta and mu must be > 0")

    @property
    def n(self) -> int:
        return len(self.w)

    def is_ordered(self) -> bool:
        return all(a < b for a, b in zip(self.mu, self.mu[1:]))


@dataclass(frozen=True)
class MarginalParams:
    """One margin: gamma-mixture bulk plus GPD tail."""

    bulk: GammaMixParams
    tail: GpdParams

    @property
    def bulk_mass(self) -> float:
        """H(u): df of the bulk mixture at the threshold (0 if u <= 0)."""
        if self.tail.u <= 0.0:
            return 0.0
        return float(gamma_mix_cdf(self.tail.u, self.bulk))


def _check_positive_x(x):
    x = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(x)) or np.any(x <= 0.0):
        raise ValueError("x must be finite and > 0")
    return x


def _weighted_logsumexp(comp, w):
    # log sum_j w_j exp(comp_j) along the last axis, without the generic
    # scipy wrapper overhead
    mx = np.max(comp, axis=-1, keepdims=True)
    out = np.squeeze(mx, axis=-1) + np.log(
        np.sum(np.exp(comp - mx) * w, axis=-1))
    return out


def _gamma_mix_logpdf_raw(x, p: GammaMixParams, logx=None):
    w = np.asarray(p.w)
    eta = np.asarray(p.eta)
    mu = np.asarray(p.mu)
    if logx is None:
        logx = np.log(x)
    xs = x[..., None]
    comp = (eta * np.log(eta / mu) - sp.gammaln(eta)
            + (eta - 1.0) * logx[..., None] - (eta / mu) * xs)
    if len(p.w) == 1:
        return np.squeeze(comp, axis=-1) + math.log(w[0]) if w[0] != 1.0 \
            else np.squeeze(comp, axis=-1)
    return _weighted_logsumexp(comp, w)


def gamma_mix_logpdf(x, p: GammaMixParams):
    """Log density of the gamma mixture at x > 0."""
    x = _check_positive_x(x)
    out = np.asarray(_gamma_mix_logpdf_raw(x, p))
    return float(out) if out.ndim == 0 else out


def _gamma_mix_cdf_raw(x, p: GammaMixParams):
    w = np.asarray(p.w)
    eta = np.asarray(p.eta)
    mu = np.asarray(p.mu)
    comp = sp.gammainc(eta, (eta / mu) * x[..., None])
    return comp @ w


def gamma_mix_cdf(x, p: GammaMixParams):
    """Df of the gamma mixture at x > 0."""
    x = _check_positive_x(x)
    out = np.asarray(_gamma_mix_cdf_raw(x, p))
    return float(out) if out.ndim == 0 else out


def gpd_cdf(x, p: GpdParams):
    """GPD df for x >= u; clamps to 1 above a finite upper endpoint."""
    x = np.asarray(x, dtype=float)
    if np.any(x < p.u - 1e-12):
        raise SupportError("x below the GPD threshold")
    z = np.maximum((x - p.u) / p.sigma, 0.0)
    if abs(p.xi) < XI_EPS:
        out = -np.expm1(-z)
    else:
        arg = 1.0 + p.xi * z
        if p.xi < 0.0:
            out = np.where(arg <= 0.0, 1.0, -np.expm1(-np.log(np.maximum(arg, 1e-300)) / p.xi))
        else:
            out = -np.expm1(-np.log(arg) / p.xi)
    return float(out) if out.ndim == 0 else out


def gpd_logpdf(x, p: GpdParams):
    """GPD log density for x >= u; -inf above a finite upper endpoint."""
    x = np.asarray(x, dtype=float)
    if np.any(x < p.u - 1e-12):
        raise SupportError("x below the GPD threshold")
    z = np.maximum((x - p.u) / p.sigma, 0.0)
    if abs(p.xi) < XI_EPS:
        out = -z - math.log(p.sigma)
    else:
        arg = 1.0 + p.xi * z
        out = np.where(arg <= 0.0, -np.inf,
                       -(1.0 + 1.0 / p.xi) * np.log(np.maximum(arg, 1e-300))
                       - math.log(p.sigma))
    return float(out) if out.ndim == 0 else out


def mgpd_cdf(x, m: MarginalParams):
    """Piecewise df: bulk mixture below u, H(u) + (1-H(u)) P_gpd above."""
    x = _check_positive_x(x)
    u = m.tail.u
    hu = m.bulk_mass
    below = np.minimum(x, max(u, 1e-300))
    out = gamma_mix_cdf(np.maximum(below, 1e-300), m.bulk)
    if np.any(x > u):
        above = gpd_cdf(np.maximum(x, u), m.tail)
        out = np.where(x > u, hu + (1.0 - hu) * above, out)
    out = np.asarray(out)
    return float(out) if out.ndim == 0 else out


def mgpd_logpdf(x, m: MarginalParams):
    """Piecewise log density: h(x) below u, (1-H(u)) p_gpd(x) above."""
    x = _check_positive_x(x)
    u = m.tail.u
    hu = m.bulk_mass
    bulk = gamma_mix_logpdf(x, m.bulk)
    if np.any(x > u):
        tail = gpd_logpdf(np.maximum(x, u), m.tail)
        with np.errstate(divide="ignore"):
            log_tail_mass = math.log(1.0 - hu) if hu < 1.0 else -math.inf
        out = np.where(np.asarray(x) > u, log_tail_mass + tail, bulk)
    else:
        out = bulk
    out = np.asarray(out)
    return float(out) if out.ndim == 0 else out


def _tail_quantile(p, m: MarginalParams):
    # closed form above the threshold
    hu = m.bulk_mass
    xi, sigma, u = m.tail.xi, m.tail.sigma, m.tail.u
    r = (p - hu) / (1.0 - hu)
    if abs(xi) < XI_EPS:
        return u - sigma * np.log1p(-r)
    return u + sigma / xi * ((1.0 - r) ** (-xi) - 1.0)


def _bulk_quantile(p, m: MarginalParams):
    # vectorised bisection of the bulk mixture df on (0, u]
    p = np.atleast_1d(np.asarray(p, dtype=float))
    lo = np.full(p.shape, 1e-12)
    hi = np.full(p.shape, max(m.tail.u, 1e-9))
    for _ in range(90):
        mid = 0.5 * (lo + hi)
        below = gamma_mix_cdf(mid, m.bulk) < p
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


def mgpd_quantile(p, m: MarginalParams):
    """Quantile function; closed form above H(u), numeric inversion below."""
    p_arr = np.atleast_1d(np.asarray(p, dtype=float))
    if np.any(p_arr <= 0.0) or np.any(p_arr >= 1.0):
        raise ValueError("p must lie in the open interval (0, 1)")
    hu = m.bulk_mass
    if np.isscalar(p):
        if p >= hu:
            return float(_tail_quantile(float(p), m))
        return invert_cdf(lambda x: gamma_mix_cdf(max(x, 1e-300), m.bulk),
                          float(p), (1e-12, m.tail.u))
    out = np.empty_like(p_arr)
    tail_mask = p_arr >= hu
    if np.any(tail_mask):
        out[tail_mask] = _tail_quantile(p_arr[tail_mask], m)
    if np.any(~tail_mask):
        out[~tail_mask] = _bulk_quantile(p_arr[~tail_mask], m)
    return out


def mgpd_sample(m: MarginalParams, n: int, rng: np.random.Generator):
    """Inverse-df sample of size n; deterministic given the generator state."""
    u = rng.uniform(size=n)
    u = np.clip(u, 1e-15, 1.0 - 1e-15)
    return mgpd_quantile(u, m)


def bulk_component_matrices(bulk: GammaMixParams, x: np.ndarray,
                            logx: np.ndarray | None = None):
    """Per-component df and log-density matrices of shape (len(x), n).

    These depend on (eta, mu) only, so samplers can cache them across
    weight, GPD and threshold moves, and refresh a single column after a
    one-component move.
    """
    eta = np.asarray(bulk.eta)
    mu = np.asarray(bulk.mu)
    if logx is None:
        logx = np.log(x)
    xs = x[:, None]
    comp_cdf = sp.gammainc(eta, (eta / mu) * xs)
    comp_logpdf = (eta * np.log(eta / mu) - sp.gammaln(eta)
                   + (eta - 1.0) * logx[:, None] - (eta / mu) * xs)
    return comp_cdf, comp_logpdf


def bulk_refresh_component(mats, bulk: GammaMixParams, x: np.ndarray, j: int,
                           logx: np.ndarray | None = None):
    """Copy of the cached matrices with column j recomputed."""
    comp_cdf, comp_logpdf = mats
    eta = bulk.eta[j]
    mu = bulk.mu[j]
    if logx is None:
        logx = np.log(x)
    comp_cdf = comp_cdf.copy()
    comp_logpdf = comp_logpdf.copy()
    comp_cdf[:, j] = sp.gammainc(eta, (eta / mu) * x)
    comp_logpdf[:, j] = (eta * math.log(eta / mu) - float(sp.gammaln(eta))
                         + (eta - 1.0) * logx - (eta / mu) * x)
    return comp_cdf, comp_logpdf


def bulk_reduce(mats, w):
    """Mixture df and log-density vectors from the component matrices."""
    comp_cdf, comp_logpdf = mats
    w = np.asarray(w)
    hx = comp_cdf @ w
    if w.size == 1:
        logh = comp_logpdf[:, 0] + (math.log(w[0]) if w[0] != 1.0 else 0.0)
    else:
        logh = _weighted_logsumexp(comp_logpdf, w)
    return hx, logh


def splice_tail(hx, logh, bulk: GammaMixParams, tail: GpdParams, x: np.ndarray):
    """Combine cached bulk vectors with the tail block into (df, sum logpdf)."""
    u = tail.u
    hu = float(_gamma_mix_cdf_raw(np.asarray(u, dtype=float), bulk)) if u > 0.0 else 0.0
    above = x > u
    if np.any(above):
        xa = x[above]
        z = (xa - u) / tail.sigma
        if abs(tail.xi) < XI_EPS:
            tail_cdf = -np.expm1(-z)
            tail_logf = -z - math.log(tail.sigma)
        else:
            arg = 1.0 + tail.xi * z
            bad = arg <= 0.0
            safe = np.maximum(arg, 1e-300)
            tail_cdf = np.where(bad, 1.0, -np.expm1(-np.log(safe) / tail.xi))
            tail_logf = np.where(bad, -np.inf,
                                 -(1.0 + 1.0 / tail.xi) * np.log(safe)
                                 - math.log(tail.sigma))
        log_mass = math.log(1.0 - hu) if hu < 1.0 else -math.inf
        cdf = hx.copy()
        logf = logh.copy()
        cdf[above] = hu + (1.0 - hu) * tail_cdf
        logf[above] = log_mass + tail_logf
    else:
        cdf, logf = hx, logh
    total = float(np.sum(logf))
    return np.clip(cdf, 1e-12, 1.0 - 1e-12), total


def mgpd_terms(m: MarginalParams, x: np.ndarray, logx: np.ndarray | None = None):
    """Single-pass (df values, summed log density) for pre-validated data.

    Out-of-support points (finite endpoint under xi < 0) yield a -inf
    density sum; the df stays clamped.
    """
    mats = bulk_component_matrices(m.bulk, x, logx)
    hx, logh = bulk_reduce(mats, m.bulk.w)
    return splice_tail(hx, logh, m.bulk, m.tail, x)
