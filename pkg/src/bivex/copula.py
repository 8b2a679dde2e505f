"""Bivariate copula families and finite mixtures of them.

Supported families: Gaussian, Student-t, skew-normal, skew-t (elliptical,
fittable), plus Gumbel and FGM (closed-form, evaluation/simulation only).
Densities are evaluated in log space from quantile-transformed scores; the
transform is shared by all components of a mixture, which the restrictions
on mixtures (common df, common skewness) make possible.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy import special as sp

from .special import (
    bvn_cdf,
    bvt_cdf,
    skew_normal_cdf,
    skew_normal_logpdf,
    skew_t_cdf,
    skew_t_logpdf,
    student_t_logpdf,
)

__all__ = [
    "Family",
    "CopulaParams",
    "SkewDerived",
    "CopulaMixture",
    "skew_derived",
    "copula_logdensity",
    "copula_cdf",
    "mixture_logdensity",
    "mixture_cdf",
    "copula_sample",
]

# open-interval margin for the skewness parameters
SKEW_EPS = 0.01

# clamp window applied before quantile transforms; estimated dfs can push
# observations onto the boundary numerically
_UEPS = 1e-12


class Family(str, enum.Enum):
    GAUSSIAN = "gaussian"
    T = "t"
    SKEW_NORMAL = "skew_normal"
    SKEW_T = "skew_t"
    GUMBEL = "gumbel"
    FGM = "fgm"


_ELLIPTICAL = (Family.GAUSSIAN, Family.T, Family.SKEW_NORMAL, Family.SKEW_T)


@dataclass(frozen=True)
class CopulaParams:
    """One copula component; fields are family dependent.

    rho: correlation, elliptical families. df: degrees of freedom (t and
    skew-t; integer for skew-t). delta1/delta2: skewness in
    (-1 + eps, 1 - eps). theta: Gumbel (>= 1) or FGM (in [-1, 1]).
    """

    family: Family
    rho: float | None = None
    df: float | None = None
    delta1: float | None = None
    delta2: float | None = None
    theta: float | None = None

    def __post_init__(self):
        fam = Family(self.family)
        object.__setattr__(self, "family", fam)
        if fam in _ELLIPTICAL:
            if self.rho is None or not -1.0 < self.rho < 1.0:
                raise ValueError("rho must lie in (-1, 1)")
        if fam in (Family.T, Family.SKEW_T):
            if self.df is None or self.df <= 0.0:
                raise ValueError("df must be > 0")
            if fam is Family.SKEW_T and abs(self.df - round(self.df)) > 1e-9:
                raise ValueError("skew-t requires integer df")
        if fam in (Family.SKEW_NORMAL, Family.SKEW_T):
            for d in (self.delta1, self.delta2):
                if d is None or not -1.0 + SKEW_EPS <= d <= 1.0 - SKEW_EPS:
                    raise ValueError(
                        f"skew parameters must lie in [-1+{SKEW_EPS}, 1-{SKEW_EPS}]")
        if fam is Family.GUMBEL:
            if self.theta is None or self.theta < 1.0:
                raise ValueError("Gumbel theta must be >= 1")
        if fam is Family.FGM:
            if self.theta is None or not -1.0 <= self.theta <= 1.0:
                raise ValueError("FGM theta must lie in [-1, 1]")


@dataclass(frozen=True)
class SkewDerived:
    """Parameters of the hidden-truncation representation derived from
    (rho, delta1, delta2): marginal shapes lambda_i, latent correlation psi
    and bivariate shape vector (alpha1, alpha2)."""

    lambda1: float
    lambda2: float
    psi: float
    alpha1: float
    alpha2: float


def skew_derived(rho: float, delta1: float, delta2: float) -> SkewDerived:
    """Derived skew parametrisation; the discriminant reduces to
    (1-rho^2)(1-delta1^2)(1-delta2^2) and is therefore always positive."""
    s1 = math.sqrt(1.0 - delta1 * delta1)
    s2 = math.sqrt(1.0 - delta2 * delta2)
    psi = rho * s1 * s2 + delta1 * delta2
    disc = 1.0 - psi * psi - delta1 * delta1 - delta2 * delta2 \
        + 2.0 * psi * delta1 * delta2
    if not abs(psi) < 1.0 or disc <= 0.0:
        raise ValueError("invalid skew parameter combination")
    root = math.sqrt((1.0 - psi * psi) * disc)
    return SkewDerived(
        lambda1=delta1 / s1,
        lambda2=delta2 / s2,
        psi=psi,
        alpha1=(delta1 - delta2 * psi) / root,
        alpha2=(delta2 - delta1 * psi) / root,
    )


@dataclass(frozen=True)
class CopulaMixture:
    """Finite mixture of same-family copulae.

    Identifiability restrictions: t components share df; skew-normal
    components share both skewness parameters; skew-t allows one component
    only. Dependence-parameter ordering across components is a prior
    constraint checked by ``prior.log_prior`` (soft, like the bulk means).
    """

    weights: tuple
    components: tuple

    def __post_init__(self):
        w = tuple(float(v) for v in self.weights)
        comps = tuple(self.components)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "components", comps)
        if len(w) != len(comps) or len(w) == 0:
            raise ValueError("weights and components must have equal positive length")
        if any(x < 0.0 for x in w) or abs(sum(w) - 1.0) > 1e-9:
            raise ValueError("weights must form a probability vector")
        fam = comps[0].family
        if any(c.family is not fam for c in comps):
            raise ValueError("all mixture components must share one family")
        if fam is Family.T and len({c.df for c in comps}) > 1:
            raise ValueError("t mixture components must share df")
        if fam is Family.SKEW_NORMAL and len(
                {(c.delta1, c.delta2) for c in comps}) > 1:
            raise ValueError("skew-normal components must share skewness")
        if fam is Family.SKEW_T and len(comps) > 1:
            raise ValueError("skew-t mixture is restricted to one component")

    @property
    def family(self) -> Family:
        return self.components[0].family

    @property
    def n(self) -> int:
        return len(self.weights)

    def dependence_vector(self):
        """Per-component ordering parameter (rho, or theta for the
        closed-form families)."""
        if self.family in _ELLIPTICAL:
            return tuple(c.rho for c in self.components)
        return tuple(c.theta for c in self.components)

    def is_ordered(self) -> bool:
        d = self.dependence_vector()
        return all(a < b for a, b in zip(d, d[1:]))


def _clamp_u(u):
    u = np.asarray(u, dtype=float)
    if np.any(u <= 0.0) or np.any(u >= 1.0):
        raise ValueError("copula arguments must lie in the open interval (0, 1)")
    return np.clip(u, _UEPS, 1.0 - _UEPS)


def _skew_quantile(p, cdf, logpdf, x0, iters=60, tol=1e-11):
    # Safeguarded vectorised Newton with bracket expansion.
    p = np.asarray(p, dtype=float)
    lo = np.minimum(-np.abs(x0) * 3.0 - 10.0, -10.0)
    hi = np.maximum(np.abs(x0) * 3.0 + 10.0, 10.0)
    for _ in range(90):
        bad = cdf(lo) > p
        if not np.any(bad):
            break
        lo = np.where(bad, 2.0 * lo, lo)
    for _ in range(90):
        bad = cdf(hi) < p
        if not np.any(bad):
            break
        hi = np.where(bad, 2.0 * hi, hi)
    x = np.clip(x0, lo, hi)
    for _ in range(iters):
        f = cdf(x)
        err = f - p
        if np.all(np.abs(err) <= tol):
            break
        lo = np.where(err < 0.0, x, lo)
        hi = np.where(err > 0.0, x, hi)
        with np.errstate(over="ignore", invalid="ignore"):
            step = err * np.exp(-logpdf(x))
        cand = x - step
        inside = np.isfinite(cand) & (cand > lo) & (cand < hi)
        x = np.where(inside, cand, 0.5 * (lo + hi))
    return x


def skew_normal_quantile(p, lam):
    """Vectorised inverse of the skew-normal df."""
    p = np.asarray(p, dtype=float)
    x0 = sp.ndtri(p)
    return _skew_quantile(p, lambda x: skew_normal_cdf(x, lam),
                          lambda x: skew_normal_logpdf(x, lam), x0)


def skew_t_quantile(p, lam, v):
    """Vectorised inverse of the skew-t df (integer df recommended)."""
    p = np.asarray(p, dtype=float)
    x0 = sp.stdtrit(v, p)
    return _skew_quantile(p, lambda x: skew_t_cdf(x, lam, v),
                          lambda x: skew_t_logpdf(x, lam, v), x0)


def transform_scores(mix_or_comp, u1, u2):
    """Quantile-transform copula arguments onto the latent elliptical scale.

    Returns None for the closed-form families, which are evaluated on the
    uniform scale directly. The transform depends only on family-level
    parameters (df, skewness), never on rho, so it can be cached across
    rho/weight updates.
    """
    comp = mix_or_comp.components[0] if isinstance(mix_or_comp, CopulaMixture) \
        else mix_or_comp
    u1 = _clamp_u(u1)
    u2 = _clamp_u(u2)
    fam = comp.family
    if fam is Family.GAUSSIAN:
        return sp.ndtri(u1), sp.ndtri(u2)
    if fam is Family.T:
        return sp.stdtrit(comp.df, u1), sp.stdtrit(comp.df, u2)
    if fam is Family.SKEW_NORMAL:
        d = skew_derived(comp.rho, comp.delta1, comp.delta2)
        return skew_normal_quantile(u1, d.lambda1), skew_normal_quantile(u2, d.lambda2)
    if fam is Family.SKEW_T:
        d = skew_derived(comp.rho, comp.delta1, comp.delta2)
        return (skew_t_quantile(u1, d.lambda1, comp.df),
                skew_t_quantile(u2, d.lambda2, comp.df))
    return None


def transform_scores_margin(mix_or_comp, u, margin: int):
    """Quantile transform for one margin only (margin is 1 or 2).

    Skew families carry margin-specific shape parameters, so the side must
    be named; elliptical symmetric families ignore it.
    """
    comp = mix_or_comp.components[0] if isinstance(mix_or_comp, CopulaMixture) \
        else mix_or_comp
    u = _clamp_u(u)
    fam = comp.family
    if fam is Family.GAUSSIAN:
        return sp.ndtri(u)
    if fam is Family.T:
        return sp.stdtrit(comp.df, u)
    if fam in (Family.SKEW_NORMAL, Family.SKEW_T):
        d = skew_derived(comp.rho, comp.delta1, comp.delta2)
        lam = d.lambda1 if margin == 1 else d.lambda2
        if fam is Family.SKEW_NORMAL:
            return skew_normal_quantile(u, lam)
        return skew_t_quantile(u, lam, comp.df)
    return None


def _gaussian_logdensity_z(rho, z1, z2):
    orho = 1.0 - rho * rho
    return (-0.5 * math.log(orho)
            + (2.0 * rho * z1 * z2 - rho * rho * (z1 * z1 + z2 * z2)) / (2.0 * orho))


def _t_logdensity_z(rho, v, z1, z2):
    orho = 1.0 - rho * rho
    const = (sp.gammaln(v / 2.0) + sp.gammaln((v + 2.0) / 2.0)
             - 2.0 * sp.gammaln((v + 1.0) / 2.0) - 0.5 * math.log(orho))
    num = 0.5 * (v + 1.0) * (np.log1p(z1 * z1 / v) + np.log1p(z2 * z2 / v))
    den = 0.5 * (v + 2.0) * np.log1p(
        (z1 * z1 + z2 * z2 - 2.0 * rho * z1 * z2) / (v * orho))
    return const + num - den


def _bvn_logpdf(z1, z2, psi):
    opsi = 1.0 - psi * psi
    q = (z1 * z1 - 2.0 * psi * z1 * z2 + z2 * z2) / opsi
    return -math.log(2.0 * math.pi) - 0.5 * math.log(opsi) - 0.5 * q


def _bvt_logpdf(z1, z2, psi, v):
    opsi = 1.0 - psi * psi
    q = (z1 * z1 - 2.0 * psi * z1 * z2 + z2 * z2) / opsi
    return (sp.gammaln((v + 2.0) / 2.0) - sp.gammaln(v / 2.0)
            - math.log(v * math.pi) - 0.5 * math.log(opsi)
            - 0.5 * (v + 2.0) * np.log1p(q / v))


def _skew_normal_logdensity_z(d: SkewDerived, z1, z2):
    joint = (math.log(2.0) + _bvn_logpdf(z1, z2, d.psi)
             + sp.log_ndtr(d.alpha1 * z1 + d.alpha2 * z2))
    return joint - skew_normal_logpdf(z1, d.lambda1) - skew_normal_logpdf(z2, d.lambda2)


def _skew_t_logdensity_z(d: SkewDerived, v, z1, z2):
    opsi = 1.0 - d.psi * d.psi
    q = (z1 * z1 - 2.0 * d.psi * z1 * z2 + z2 * z2) / opsi
    w = (d.alpha1 * z1 + d.alpha2 * z2) * np.sqrt((v + 2.0) / (v + q))
    joint = (math.log(2.0) + _bvt_logpdf(z1, z2, d.psi, v)
             + np.log(sp.stdtr(v + 2.0, w)))
    return joint - skew_t_logpdf(z1, d.lambda1, v) - skew_t_logpdf(z2, d.lambda2, v)


def _gumbel_logdensity(theta, u1, u2):
    if theta == 1.0:
        return np.zeros_like(u1)
    lx = -np.log(u1)
    ly = -np.log(u2)
    t_sum = lx ** theta + ly ** theta
    a = t_sum ** (1.0 / theta)
    return (-a + np.log(a + theta - 1.0) + (1.0 / theta - 2.0) * np.log(t_sum)
            + (theta - 1.0) * (np.log(lx) + np.log(ly)) + lx + ly)


def _fgm_logdensity(theta, u1, u2):
    return np.log1p(theta * (1.0 - 2.0 * u1) * (1.0 - 2.0 * u2))


def _component_logdensity_z(comp: CopulaParams, z1, z2, u1=None, u2=None):
    fam = comp.family
    if fam is Family.GAUSSIAN:
        return _gaussian_logdensity_z(comp.rho, z1, z2)
    if fam is Family.T:
        return _t_logdensity_z(comp.rho, comp.df, z1, z2)
    if fam is Family.SKEW_NORMAL:
        return _skew_normal_logdensity_z(
            skew_derived(comp.rho, comp.delta1, comp.delta2), z1, z2)
    if fam is Family.SKEW_T:
        return _skew_t_logdensity_z(
            skew_derived(comp.rho, comp.delta1, comp.delta2), comp.df, z1, z2)
    if fam is Family.GUMBEL:
        return _gumbel_logdensity(comp.theta, u1, u2)
    return _fgm_logdensity(comp.theta, u1, u2)


def copula_logdensity(comp: CopulaParams, v1, v2):
    """Log copula density at (v1, v2) in (0, 1)^2."""
    u1 = _clamp_u(v1)
    u2 = _clamp_u(v2)
    if comp.family in _ELLIPTICAL:
        z1, z2 = transform_scores(comp, u1, u2)
        out = _component_logdensity_z(comp, z1, z2)
    else:
        out = _component_logdensity_z(comp, None, None, u1, u2)
    out = np.asarray(out)
    return float(out) if out.ndim == 0 else out


def _skew_normal_cdf2(a, b, d: SkewDerived, delta1, delta2):
    # 2 P(X1<=a, X2<=b, X0<=0) via conditioning on X1; the trivariate normal
    # has corr(X1,X2)=psi, corr(Xi,X0)=-delta_i.
    spsi = math.sqrt(1.0 - d.psi * d.psi)
    sd1 = math.sqrt(1.0 - delta1 * delta1)
    rc = (d.psi * delta1 - delta2) / (spsi * sd1)
    rc = min(max(rc, -1.0 + 1e-12), 1.0 - 1e-12)

    def integrand(x):
        return (math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
                * bvn_cdf((b - d.psi * x) / spsi, delta1 * x / sd1, rc))

    hi = min(a, 9.0)
    val, _ = integrate.quad(integrand, hi - 20.0, hi, epsabs=1e-11, limit=200)
    return 2.0 * val


def _skew_t_cdf2(a, b, d: SkewDerived, delta1, delta2, v):
    spsi = math.sqrt(1.0 - d.psi * d.psi)
    sd1 = math.sqrt(1.0 - delta1 * delta1)
    rc = (d.psi * delta1 - delta2) / (spsi * sd1)
    rc = min(max(rc, -1.0 + 1e-12), 1.0 - 1e-12)
    lc = sp.gammaln((v + 1.0) / 2.0) - sp.gammaln(v / 2.0) - 0.5 * math.log(v * math.pi)

    def integrand(w):
        x = float(sp.stdtrit(v, w))
        c = math.sqrt((v + x * x) / (v + 1.0))
        return float(bvt_cdf((b - d.psi * x) / (spsi * c), delta1 * x / (sd1 * c),
                             rc, v + 1.0))

    upper = float(sp.stdtr(v, a))
    if upper <= 0.0:
        return 0.0
    val, _ = integrate.quad(integrand, 0.0, upper, epsabs=1e-10, limit=200)
    return 2.0 * val


def _gumbel_cdf(theta, u1, u2):
    if theta == 1.0:
        return u1 * u2
    return np.exp(-((-np.log(u1)) ** theta + (-np.log(u2)) ** theta) ** (1.0 / theta))


def _fgm_cdf(theta, u1, u2):
    return u1 * u2 * (1.0 + theta * (1.0 - u1) * (1.0 - u2))


def copula_cdf(comp: CopulaParams, v1, v2):
    """Copula df C(v1, v2) on [0, 1]^2."""
    scalar = np.isscalar(v1) and np.isscalar(v2)
    u1, u2 = np.broadcast_arrays(np.asarray(v1, float), np.asarray(v2, float))
    if np.any(u1 < 0.0) or np.any(u1 > 1.0) or np.any(u2 < 0.0) or np.any(u2 > 1.0):
        raise ValueError("copula arguments must lie in [0, 1]")
    out = np.empty(u1.shape)
    zero = (u1 <= 0.0) | (u2 <= 0.0)
    one1 = u1 >= 1.0
    one2 = u2 >= 1.0
    interior = ~(zero | one1 | one2)
    out[zero] = 0.0
    out[one1 & ~zero] = u2[one1 & ~zero]
    out[one2 & ~zero & ~one1] = u1[one2 & ~zero & ~one1]
    if np.any(interior):
        a = np.clip(u1[interior], _UEPS, 1.0 - _UEPS)
        b = np.clip(u2[interior], _UEPS, 1.0 - _UEPS)
        fam = comp.family
        if fam is Family.GAUSSIAN:
            vals = bvn_cdf(sp.ndtri(a), sp.ndtri(b), comp.rho)
        elif fam is Family.T:
            vals = bvt_cdf(sp.stdtrit(comp.df, a), sp.stdtrit(comp.df, b),
                           comp.rho, comp.df)
        elif fam is Family.GUMBEL:
            vals = _gumbel_cdf(comp.theta, a, b)
        elif fam is Family.FGM:
            vals = _fgm_cdf(comp.theta, a, b)
        elif fam is Family.SKEW_NORMAL:
            d = skew_derived(comp.rho, comp.delta1, comp.delta2)
            z1 = skew_normal_quantile(a, d.lambda1)
            z2 = skew_normal_quantile(b, d.lambda2)
            vals = np.array([
                _skew_normal_cdf2(float(x), float(y), d, comp.delta1, comp.delta2)
                for x, y in zip(np.atleast_1d(z1), np.atleast_1d(z2))])
        else:
            d = skew_derived(comp.rho, comp.delta1, comp.delta2)
            z1 = skew_t_quantile(a, d.lambda1, comp.df)
            z2 = skew_t_quantile(b, d.lambda2, comp.df)
            vals = np.array([
                _skew_t_cdf2(float(x), float(y), d, comp.delta1, comp.delta2, comp.df)
                for x, y in zip(np.atleast_1d(z1), np.atleast_1d(z2))])
        out[interior] = np.clip(vals, 0.0, 1.0)
    return float(out) if scalar else out


def mixture_logdensity_z(mix: CopulaMixture, z1, z2, u1=None, u2=None):
    """Mixture log density from pre-transformed scores (log-sum-exp)."""
    logs = [_component_logdensity_z(c, z1, z2, u1, u2) for c in mix.components]
    if mix.n == 1:
        return np.asarray(logs[0], dtype=float)
    shape = np.shape(z1 if z1 is not None else u1)
    stacked = np.stack([np.broadcast_to(l, shape) for l in logs], axis=-1)
    mx = np.max(stacked, axis=-1, keepdims=True)
    finite = np.isfinite(np.squeeze(mx, axis=-1))
    out = np.squeeze(mx, axis=-1) + np.log(
        np.sum(np.exp(stacked - np.where(np.isfinite(mx), mx, 0.0))
               * np.asarray(mix.weights), axis=-1))
    return np.where(finite, out, -np.inf)


def mixture_logdensity(mix: CopulaMixture, v1, v2):
    """Log of the weighted mixture copula density."""
    u1 = _clamp_u(v1)
    u2 = _clamp_u(v2)
    if mix.family in _ELLIPTICAL:
        z1, z2 = transform_scores(mix, u1, u2)
        out = mixture_logdensity_z(mix, z1, z2)
    else:
        out = mixture_logdensity_z(mix, None, None, u1, u2)
    out = np.asarray(out)
    return float(out) if out.ndim == 0 else out


def mixture_cdf(mix: CopulaMixture, v1, v2):
    """Weighted mixture copula df."""
    out = sum(w * np.asarray(copula_cdf(c, v1, v2))
              for w, c in zip(mix.weights, mix.components))
    out = np.asarray(out)
    return float(out) if out.ndim == 0 else out


def _sample_gumbel(theta, size, rng):
    if theta <= 1.0 + 1e-12:
        return rng.uniform(size=size), rng.uniform(size=size)
    alpha = 1.0 / theta
    # positive stable with Laplace transform exp(-t^alpha) (Kanter)
    ang = rng.uniform(0.0, math.pi, size=size)
    w = rng.exponential(size=size)
    s = (np.sin(alpha * ang) / np.sin(ang) ** (1.0 / alpha)
         * (np.sin((1.0 - alpha) * ang) / w) ** ((1.0 - alpha) / alpha))
    e1 = rng.exponential(size=size)
    e2 = rng.exponential(size=size)
    return np.exp(-(e1 / s) ** alpha), np.exp(-(e2 / s) ** alpha)


def _sample_fgm(theta, size, rng):
    u = rng.uniform(size=size)
    q = rng.uniform(size=size)
    a = theta * (1.0 - 2.0 * u)
    v = np.where(
        np.abs(a) < 1e-12, q,
        ((1.0 + a) - np.sqrt((1.0 + a) ** 2 - 4.0 * a * q)) / (2.0 * np.where(np.abs(a) < 1e-12, 1.0, a)))
    return u, v


def _sample_component(comp: CopulaParams, size, rng):
    fam = comp.family
    if fam is Family.GUMBEL:
        return _sample_gumbel(comp.theta, size, rng)
    if fam is Family.FGM:
        return _sample_fgm(comp.theta, size, rng)
    z0 = rng.standard_normal(size)
    z1 = rng.standard_normal(size)
    x1 = z0
    x2 = comp.rho * z0 + math.sqrt(1.0 - comp.rho ** 2) * z1
    if fam is Family.GAUSSIAN:
        return sp.ndtr(x1), sp.ndtr(x2)
    if fam is Family.T:
        g = np.sqrt(rng.chisquare(comp.df, size) / comp.df)
        return sp.stdtr(comp.df, x1 / g), sp.stdtr(comp.df, x2 / g)
    d = skew_derived(comp.rho, comp.delta1, comp.delta2)
    h = np.abs(rng.standard_normal(size))
    s1 = math.sqrt(1.0 - comp.delta1 ** 2)
    s2 = math.sqrt(1.0 - comp.delta2 ** 2)
    y1 = comp.delta1 * h + s1 * x1
    y2 = comp.delta2 * h + s2 * x2
    if fam is Family.SKEW_NORMAL:
        return skew_normal_cdf(y1, d.lambda1), skew_normal_cdf(y2, d.lambda2)
    g = np.sqrt(rng.chisquare(comp.df, size) / comp.df)
    return (skew_t_cdf(y1 / g, d.lambda1, comp.df),
            skew_t_cdf(y2 / g, d.lambda2, comp.df))


def copula_sample(mix: CopulaMixture, n: int, rng: np.random.Generator):
    """Sample n pairs from the mixture; deterministic given the generator."""
    labels = rng.choice(mix.n, size=n, p=np.asarray(mix.weights))
    u1 = np.empty(n)
    u2 = np.empty(n)
    for i, comp in enumerate(mix.components):
        mask = labels == i
        cnt = int(np.count_nonzero(mask))
        if cnt:
            a, b = _sample_component(comp, cnt, rng)
            u1[mask] = a
            u2[mask] = b
    return u1, u2
