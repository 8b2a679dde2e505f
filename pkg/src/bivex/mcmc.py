"""Adaptive block Metropolis-Hastings over the joint posterior.

Each iteration sweeps the copula blocks (per-component correlation, mixture
weights, skewness, degrees of freedom) and then the marginal blocks of each
margin (per-component means and shapes, bulk weights, GPD pair, threshold).
Acceptance is always computed against the full posterior. Proposal scales
adapt in batches during burn-in only, targeting 0.44 acceptance per block,
and are frozen afterwards.

Likelihood terms are cached: a correlation or weight move reuses the
quantile-transformed scores; a margin move recomputes only that margin's
df values, log density and score vector.
"""
from __future__ import annotations

import dataclasses
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np
from scipy import special as sp
from scipy import stats

from .copula import (
    CopulaMixture,
    CopulaParams,
    Family,
    mixture_logdensity_z,
    transform_scores_margin,
)
from .marginal import (
    GammaMixParams,
    GpdParams,
    MarginalParams,
    bulk_component_matrices,
    bulk_reduce,
    bulk_refresh_component,
    splice_tail,
)
from .model import Dataset, ModelParams, margin_terms
from .prior import (
    PriorConfig,
    _dependence_log_prior,
    _margin_log_prior,
    _partition_moments,
    log_prior,
)

__all__ = [
    "InitializationError",
    "Chain",
    "mh_accept",
    "propose_rho",
    "propose_weights",
    "propose_df",
    "initial_params",
    "run_chain",
    "chain_columns",
    "flatten_params",
    "unflatten_params",
]

TARGET_ACCEPT = 0.44
DIRICHLET_CONC = 50.0
WEIGHT_FLOOR = 1e-6


class InitializationError(RuntimeError):
    """The starting state has zero posterior density; carries the block."""

    def __init__(self, block: str):
        super().__init__(f"initial state has -inf posterior (block: {block})")
        self.block = block


# ---------------------------------------------------------------------------
# proposal kernels


def _truncnorm_draw(rng, mean, sd, lo, hi):
    a = sp.ndtr((lo - mean) / sd)
    b = sp.ndtr((hi - mean) / sd)
    if not b > a:
        return None
    u = rng.uniform(a, b)
    x = mean + sd * sp.ndtri(u)
    if not lo < x < hi:
        return None
    return float(x)


def _truncnorm_logpdf(x, mean, sd, lo, hi):
    a = sp.ndtr((lo - mean) / sd)
    b = sp.ndtr((hi - mean) / sd)
    if not b > a:
        return -math.inf
    z = (x - mean) / sd
    return -0.5 * z * z - 0.5 * math.log(2.0 * math.pi) - math.log(sd) - math.log(b - a)


def _dirichlet_logpdf(x, alpha):
    x = np.asarray(x)
    alpha = np.asarray(alpha)
    return float(sp.gammaln(alpha.sum()) - sp.gammaln(alpha).sum()
                 + ((alpha - 1.0) * np.log(x)).sum())


def _gamma_mean_var_logpdf(x, mean, var):
    shape = mean * mean / var
    rate = mean / var
    return (shape * math.log(rate) - float(sp.gammaln(shape))
            + (shape - 1.0) * math.log(x) - rate * x)


def mh_accept(log_post_prop, log_post_cur, log_q_forward, log_q_backward, rng):
    """Metropolis-Hastings coin flip; -inf proposals are always rejected."""
    if not np.isfinite(log_post_cur):
        raise ValueError("current log posterior must be finite")
    if not np.isfinite(log_post_prop):
        return False
    log_alpha = (log_post_prop - log_post_cur) + (log_q_backward - log_q_forward)
    if log_alpha >= 0.0:
        return True
    return math.log(rng.uniform()) < log_alpha


def propose_rho(rho, i, scale, rng):
    """Truncated-normal move for the i-th ordered correlation.

    The truncation interval is bounded by the already-updated lower
    neighbour and the not-yet-updated upper neighbour, so the global
    ordering is preserved by construction. Returns (candidate vector,
    forward log kernel, backward log kernel), or None on a degenerate
    interval (forced rejection).
    """
    lo = rho[i - 1] if i > 0 else -1.0
    hi = rho[i + 1] if i + 1 < len(rho) else 1.0
    sd = math.exp(scale)
    cand = _truncnorm_draw(rng, rho[i], sd, lo, hi)
    if cand is None:
        return None
    logq_f = _truncnorm_logpdf(cand, rho[i], sd, lo, hi)
    logq_b = _truncnorm_logpdf(rho[i], cand, sd, lo, hi)
    new = list(rho)
    new[i] = cand
    return tuple(new), logq_f, logq_b


def propose_weights(w, conc, rng):
    """Dirichlet move centred at the current simplex point.

    Components are floored before scaling so a collapsed weight can still
    move; a degenerate draw forces rejection.
    """
    cur = np.maximum(np.asarray(w, dtype=float), WEIGHT_FLOOR)
    cur = cur / cur.sum()
    alpha_f = conc * cur
    cand = rng.dirichlet(alpha_f)
    if np.any(cand < 1e-12):
        return None
    cand_floored = np.maximum(cand, WEIGHT_FLOOR)
    cand_floored = cand_floored / cand_floored.sum()
    alpha_b = conc * cand_floored
    logq_f = _dirichlet_logpdf(cand, alpha_f)
    logq_b = _dirichlet_logpdf(np.asarray(w), alpha_b)
    return tuple(float(v) for v in cand), logq_f, logq_b


def propose_df(v, mode, scale, rng):
    """Degrees-of-freedom move.

    mode="continuous": gamma kernel with mean at the current value and
    variance exp(2*scale). mode="integer": symmetric discrete uniform on
    {v-2, ..., v+2}; candidates below 1 force rejection.
    """
    if mode == "integer":
        cand = int(v) + int(rng.integers(-2, 3))
        if cand < 1:
            return None
        return float(cand), 0.0, 0.0
    var = math.exp(2.0 * scale)
    shape = v * v / var
    cand = float(rng.gamma(shape, var / v))
    if cand <= 0.0 or not np.isfinite(cand):
        return None
    logq_f = _gamma_mean_var_logpdf(cand, v, var)
    logq_b = _gamma_mean_var_logpdf(v, cand, var)
    return cand, logq_f, logq_b


# ---------------------------------------------------------------------------
# initialisation


def initial_params(data: Dataset, cfg, prior: PriorConfig,
                   rng: np.random.Generator) -> ModelParams:
    """Moment-based starting point inside the support of the prior."""
    n1, n2 = cfg.margin_components
    margins = []
    for x, n, i in ((data.x1, n1, 0), (data.x2, n2, 1)):
        means, variances, props = _partition_moments(x, n)
        eta = tuple(float(np.clip(m * m / v, 0.1, 1e4))
                    for m, v in zip(means, variances))
        w = np.maximum(np.asarray(props), 0.02)
        w = w / w.sum()
        bulk = GammaMixParams(w=tuple(w), eta=eta, mu=tuple(means))
        u0 = prior.threshold_mean[i]
        exc = x[x > u0] - u0
        sigma0 = float(exc.mean()) if exc.size >= 5 else float(max(np.std(x) / 2.0, 1e-3))
        margins.append(MarginalParams(
            bulk=bulk, tail=GpdParams(xi=0.1, sigma=max(sigma0, 1e-3), u=float(u0))))
    n = cfg.n_components
    rho_s = float(stats.spearmanr(data.x1, data.x2).statistic)
    if not np.isfinite(rho_s):
        rho_s = 0.0
    rho_hat = float(np.clip(2.0 * math.sin(math.pi * rho_s / 6.0), -0.9, 0.9))
    offsets = 0.08 * (np.arange(n) - (n - 1) / 2.0)
    rhos = np.clip(rho_hat + offsets, -0.95, 0.95)
    rhos = np.sort(rhos)
    for i in range(1, n):
        if rhos[i] <= rhos[i - 1]:
            rhos[i] = min(rhos[i - 1] + 1e-3, 0.999)
    fam = cfg.family
    kw = {}
    if fam is Family.T:
        kw["df"] = 10.0
    if fam is Family.SKEW_T:
        kw["df"] = float(int(round(prior.df_poisson_mean)))
        kw["delta1"] = 0.0
        kw["delta2"] = 0.0
    if fam is Family.SKEW_NORMAL:
        kw["delta1"] = 0.0
        kw["delta2"] = 0.0
    comps = tuple(CopulaParams(fam, rho=float(r), **kw) for r in rhos)
    dep = CopulaMixture(weights=(1.0 / n,) * n, components=comps)
    return ModelParams(m1=margins[0], m2=margins[1], dep=dep)


# ---------------------------------------------------------------------------
# cached posterior state


class _State:
    """Current parameters plus the cached likelihood decomposition.

    Cached pieces: per-margin bulk component matrices (df and log density
    per mixture component), their weight-reduced vectors, the marginal df
    values and log-density sums, the quantile-transformed scores, the
    copula log-density sum, and the three prior blocks. Each block move
    recomputes only what it invalidates.
    """

    def __init__(self, data: Dataset, theta: ModelParams, prior_cfg: PriorConfig,
                 fixed_uniform: bool):
        self.data = data
        self.prior_cfg = prior_cfg
        self.fixed_uniform = fixed_uniform
        self.theta = theta
        self.x = (data.x1, data.x2)
        if fixed_uniform:
            if np.any(data.x1 >= 1.0) or np.any(data.x2 >= 1.0):
                raise ValueError("fixed-uniform margins require data in (0, 1)")
            self.u = [np.clip(data.x1, 1e-12, 1.0 - 1e-12),
                      np.clip(data.x2, 1e-12, 1.0 - 1e-12)]
            self.lf = [0.0, 0.0]
            self.logx = (None, None)
            self.mats = [None, None]
            self.red = [None, None]
            self.pmarg = [0.0, 0.0]
        else:
            self.logx = (np.log(data.x1), np.log(data.x2))
            self.mats = []
            self.red = []
            self.u = []
            self.lf = []
            for k, m in enumerate((theta.m1, theta.m2)):
                mats = bulk_component_matrices(m.bulk, self.x[k], self.logx[k])
                red = bulk_reduce(mats, m.bulk.w)
                uk, lfk = splice_tail(red[0], red[1], m.bulk, m.tail, self.x[k])
                self.mats.append(mats)
                self.red.append(red)
                self.u.append(uk)
                self.lf.append(lfk)
            self.pmarg = [_margin_log_prior(theta.m1, prior_cfg, 0),
                          _margin_log_prior(theta.m2, prior_cfg, 1)]
        self.pdep = _dependence_log_prior(theta.dep, prior_cfg)
        self.z = [transform_scores_margin(theta.dep, self.u[0], 1),
                  transform_scores_margin(theta.dep, self.u[1], 2)]
        self.cop = self._cop_sum(theta.dep, self.z[0], self.z[1])

    @staticmethod
    def _cop_sum(dep, z1, z2):
        return float(np.sum(mixture_logdensity_z(dep, z1, z2)))

    @property
    def lprior(self):
        return self.pmarg[0] + self.pmarg[1] + self.pdep

    @property
    def loglik(self):
        return self.cop + self.lf[0] + self.lf[1]

    @property
    def logpost(self):
        return self.loglik + self.lprior

    # -- candidate evaluation ------------------------------------------------

    def try_copula(self, new_dep, refresh):
        """Posterior pieces for a copula-parameter move. ``refresh`` names
        the score vectors invalidated by the move ("z1"/"z2")."""
        pdep = _dependence_log_prior(new_dep, self.prior_cfg)
        if not np.isfinite(pdep):
            return None
        z1 = transform_scores_margin(new_dep, self.u[0], 1) if "z1" in refresh else self.z[0]
        z2 = transform_scores_margin(new_dep, self.u[1], 2) if "z2" in refresh else self.z[1]
        cop = self._cop_sum(new_dep, z1, z2)
        if not np.isfinite(cop):
            return None
        logpost = cop + self.lf[0] + self.lf[1] + self.pmarg[0] + self.pmarg[1] + pdep
        return (new_dep, pdep, cop, z1, z2), logpost

    def accept_copula(self, cand):
        new_dep, self.pdep, self.cop, z1, z2 = cand
        self.z = [z1, z2]
        self.theta = ModelParams(m1=self.theta.m1, m2=self.theta.m2, dep=new_dep)

    def try_margin(self, which, new_marg, change, j=None):
        """Posterior pieces for a margin move.

        which is 1 or 2; ``change`` describes the invalidated cache level:
        "comp" (bulk component j), "weights" (bulk weights only) or "tail"
        (GPD/threshold only).
        """
        k = which - 1
        pm = _margin_log_prior(new_marg, self.prior_cfg, k)
        if not np.isfinite(pm):
            return None
        x = self.x[k]
        if change == "comp":
            mats = bulk_refresh_component(self.mats[k], new_marg.bulk, x, j,
                                          self.logx[k])
            red = bulk_reduce(mats, new_marg.bulk.w)
        elif change == "weights":
            mats = self.mats[k]
            red = bulk_reduce(mats, new_marg.bulk.w)
        else:  # tail move: bulk vectors unchanged
            mats = self.mats[k]
            red = self.red[k]
        u, lf = splice_tail(red[0], red[1], new_marg.bulk, new_marg.tail, x)
        if not np.isfinite(lf):
            return None
        z = transform_scores_margin(self.theta.dep, u, which)
        z1 = z if which == 1 else self.z[0]
        z2 = z if which == 2 else self.z[1]
        cop = self._cop_sum(self.theta.dep, z1, z2)
        if not np.isfinite(cop):
            return None
        other = 1 - k
        logpost = (cop + lf + self.lf[other] + pm + self.pmarg[other] + self.pdep)
        return (which, new_marg, pm, cop, mats, red, u, lf, z), logpost

    def accept_margin(self, cand):
        which, new_marg, pm, cop, mats, red, u, lf, z = cand
        k = which - 1
        self.pmarg[k] = pm
        self.cop = cop
        self.mats[k] = mats
        self.red[k] = red
        self.u[k] = u
        self.lf[k] = lf
        self.z[k] = z
        if which == 1:
            self.theta = ModelParams(m1=new_marg, m2=self.theta.m2, dep=self.theta.dep)
        else:
            self.theta = ModelParams(m1=self.theta.m1, m2=new_marg, dep=self.theta.dep)


# ---------------------------------------------------------------------------
# block definitions


def _replace_comp(dep: CopulaMixture, **changes) -> CopulaMixture:
    comps = tuple(dataclasses.replace(c, **changes) for c in dep.components)
    return CopulaMixture(weights=dep.weights, components=comps)


def _build_blocks(cfg, n1, n2):
    """Ordered list of (name, kind, payload) block descriptors."""
    blocks = []
    fam = cfg.family
    for i in range(cfg.n_components):
        blocks.append((f"rho_{i + 1}", "rho", i))
    if cfg.n_components > 1:
        blocks.append(("cop_weights", "cop_weights", None))
    if fam in (Family.SKEW_NORMAL, Family.SKEW_T):
        blocks.append(("delta1", "delta", 1))
        blocks.append(("delta2", "delta", 2))
    if fam is Family.T:
        blocks.append(("df", "df_continuous", None))
    if fam is Family.SKEW_T:
        blocks.append(("df", "df_integer", None))
    if not cfg.fixed_uniform_margins:
        for m, nm in ((1, n1), (2, n2)):
            for j in range(nm):
                blocks.append((f"m{m}_mu_{j + 1}", "mu", (m, j)))
            for j in range(nm):
                blocks.append((f"m{m}_eta_{j + 1}", "eta", (m, j)))
            if nm > 1:
                blocks.append((f"m{m}_weights", "margin_weights", m))
            blocks.append((f"m{m}_gpd", "gpd", m))
            blocks.append((f"m{m}_thresh", "thresh", m))
    return blocks


_ADAPTABLE = {"rho", "delta", "df_continuous", "mu", "eta", "gpd", "thresh"}


def _initial_scales(blocks, theta, prior: PriorConfig):
    scales = {}
    for name, kind, payload in blocks:
        if kind not in _ADAPTABLE:
            continue
        if kind == "rho":
            scales[name] = math.log(0.1)
        elif kind == "delta":
            scales[name] = math.log(0.1)
        elif kind == "df_continuous":
            scales[name] = math.log(2.0)
        elif kind == "mu":
            m, j = payload
            marg = theta.m1 if m == 1 else theta.m2
            scales[name] = math.log(max(0.15 * marg.bulk.mu[j], 1e-4))
        elif kind == "eta":
            scales[name] = math.log(0.3)
        elif kind == "gpd":
            scales[name] = math.log(0.15)
        elif kind == "thresh":
            m = payload
            scales[name] = math.log(0.5 * prior.threshold_sd[m - 1])
    return scales


def _margin_of(theta, m):
    return theta.m1 if m == 1 else theta.m2


def _propose_block(state: _State, kind, payload, scale, conc, rng):
    """Build the candidate for one block.

    Returns (candidate, logq_f, logq_b, apply_kind) or None for a forced
    rejection; apply_kind separates copula moves (with their score refresh
    set) from margin moves.
    """
    theta = state.theta
    dep = theta.dep
    if kind == "rho":
        i = payload
        rhos = dep.dependence_vector()
        prop = propose_rho(rhos, i, scale, rng)
        if prop is None:
            return None
        new_rhos, lf, lb = prop
        comps = tuple(dataclasses.replace(c, rho=r)
                      for c, r in zip(dep.components, new_rhos))
        new_dep = CopulaMixture(weights=dep.weights, components=comps)
        # marginal shapes depend on the skewness only, so the transformed
        # scores stay valid under a correlation move for every family
        return ("copula", new_dep, set()), lf, lb
    if kind == "cop_weights":
        prop = propose_weights(dep.weights, conc, rng)
        if prop is None:
            return None
        w, lf, lb = prop
        new_dep = CopulaMixture(weights=w, components=dep.components)
        return ("copula", new_dep, set()), lf, lb
    if kind == "delta":
        which = payload
        comp = dep.components[0]
        cur = comp.delta1 if which == 1 else comp.delta2
        eps = state.prior_cfg.skew_eps
        sd = math.exp(scale)
        cand = _truncnorm_draw(rng, cur, sd, -1.0 + eps, 1.0 - eps)
        if cand is None:
            return None
        lf = _truncnorm_logpdf(cand, cur, sd, -1.0 + eps, 1.0 - eps)
        lb = _truncnorm_logpdf(cur, cand, sd, -1.0 + eps, 1.0 - eps)
        key = "delta1" if which == 1 else "delta2"
        new_dep = _replace_comp(dep, **{key: cand})
        return ("copula", new_dep, {f"z{which}"}), lf, lb
    if kind in ("df_continuous", "df_integer"):
        comp = dep.components[0]
        mode = "integer" if kind == "df_integer" else "continuous"
        prop = propose_df(comp.df, mode, scale, rng)
        if prop is None:
            return None
        v, lf, lb = prop
        new_dep = _replace_comp(dep, df=v)
        return ("copula", new_dep, {"z1", "z2"}), lf, lb

    m, j = (payload, None) if kind in ("margin_weights", "gpd", "thresh") else payload
    marg = _margin_of(theta, m)
    bulk, tail = marg.bulk, marg.tail
    if kind == "mu":
        mu = bulk.mu
        lo = mu[j - 1] if j > 0 else 1e-12
        hi = mu[j + 1] if j + 1 < len(mu) else math.inf
        sd = math.exp(scale)
        cand = _truncnorm_draw(rng, mu[j], sd, lo, hi)
        if cand is None:
            return None
        lf = _truncnorm_logpdf(cand, mu[j], sd, lo, hi)
        lb = _truncnorm_logpdf(mu[j], cand, sd, lo, hi)
        new_mu = list(mu)
        new_mu[j] = cand
        new_marg = MarginalParams(
            bulk=GammaMixParams(w=bulk.w, eta=bulk.eta, mu=tuple(new_mu)), tail=tail)
        return ("margin", m, new_marg, "comp", j), lf, lb
    if kind == "eta":
        cur = bulk.eta[j]
        cand = cur * math.exp(math.exp(scale) * rng.standard_normal())
        if cand <= 0.0 or not np.isfinite(cand):
            return None
        new_eta = list(bulk.eta)
        new_eta[j] = cand
        new_marg = MarginalParams(
            bulk=GammaMixParams(w=bulk.w, eta=tuple(new_eta), mu=bulk.mu), tail=tail)
        # log-scale walk: kernel correction log(cand) - log(cur)
        return ("margin", m, new_marg, "comp", j), -math.log(cand), -math.log(cur)
    if kind == "margin_weights":
        prop = propose_weights(bulk.w, conc, rng)
        if prop is None:
            return None
        w, lf, lb = prop
        new_marg = MarginalParams(
            bulk=GammaMixParams(w=w, eta=bulk.eta, mu=bulk.mu), tail=tail)
        return ("margin", m, new_marg, "weights", None), lf, lb
    if kind == "gpd":
        sd = math.exp(scale)
        xi = tail.xi + sd * rng.standard_normal()
        log_sigma = math.log(tail.sigma) + sd * rng.standard_normal()
        sigma = math.exp(log_sigma)
        if sigma <= 0.0 or not np.isfinite(sigma):
            return None
        new_marg = MarginalParams(
            bulk=bulk, tail=GpdParams(xi=xi, sigma=sigma, u=tail.u))
        return ("margin", m, new_marg, "tail", None), -log_sigma, -math.log(tail.sigma)
    if kind == "thresh":
        sd = math.exp(scale)
        cand = tail.u + sd * rng.standard_normal()
        new_marg = MarginalParams(
            bulk=bulk, tail=GpdParams(xi=tail.xi, sigma=tail.sigma, u=cand))
        return ("margin", m, new_marg, "tail", None), 0.0, 0.0
    raise ValueError(f"unknown block kind {kind}")


# ---------------------------------------------------------------------------
# chain container and serialisation


@dataclass
class Chain:
    """Retained posterior draws plus run metadata."""

    draws: list
    log_posterior: np.ndarray
    log_likelihood: np.ndarray
    acceptance: dict
    scales: dict
    adapt_trace: dict
    meta: dict

    def __len__(self):
        return len(self.draws)

    @property
    def family(self) -> Family:
        return Family(self.meta["family"])

    def df_draws(self):
        if self.family not in (Family.T, Family.SKEW_T):
            raise ValueError(f"family {self.family.value} has no df parameter")
        return np.array([t.dep.components[0].df for t in self.draws])

    def save(self, csv_path, meta_path=None):
        meta_path = meta_path or _meta_path_for(csv_path)
        cols = chain_columns(self.family, self.meta["n_components"],
                             *self.meta["margin_components"])
        with open(csv_path, "w", encoding="utf-8") as fh:
            fh.write(",".join(cols + ["log_posterior", "log_likelihood"]) + "\n")
            for theta, lpost, llik in zip(self.draws, self.log_posterior,
                                          self.log_likelihood):
                row = flatten_params(theta) + [lpost, llik]
                fh.write(",".join(f"{v:.17g}" for v in row) + "\n")
        payload = {
            "meta": self.meta,
            "acceptance": {k: list(v) for k, v in self.acceptance.items()},
            "scales": self.scales,
            "adapt_trace": self.adapt_trace,
        }
        with open(meta_path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, csv_path, meta_path=None):
        meta_path = meta_path or _meta_path_for(csv_path)
        with open(meta_path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
        meta = payload["meta"]
        fam = Family(meta["family"])
        n = meta["n_components"]
        n1, n2 = meta["margin_components"]
        cols = chain_columns(fam, n, n1, n2)
        with open(csv_path, "r", encoding="utf-8") as fh:
            header = fh.readline().strip().split(",")
            expected = cols + ["log_posterior", "log_likelihood"]
            if header != expected:
                raise ValueError(f"{csv_path}: unexpected chain header")
            draws, lposts, lliks = [], [], []
            for line in fh:
                vals = [float(v) for v in line.strip().split(",")]
                draws.append(unflatten_params(vals[:-2], fam, n, n1, n2))
                lposts.append(vals[-2])
                lliks.append(vals[-1])
        return cls(draws=draws, log_posterior=np.array(lposts),
                   log_likelihood=np.array(lliks),
                   acceptance={k: tuple(v) for k, v in payload["acceptance"].items()},
                   scales=payload["scales"], adapt_trace=payload["adapt_trace"],
                   meta=meta)


def _meta_path_for(csv_path):
    base, _ = os.path.splitext(str(csv_path))
    return base + ".meta.json"


def chain_columns(family: Family, n: int, n1: int, n2: int):
    cols = []
    for m, nm in ((1, n1), (2, n2)):
        cols += [f"m{m}_w{j + 1}" for j in range(nm)]
        cols += [f"m{m}_eta{j + 1}" for j in range(nm)]
        cols += [f"m{m}_mu{j + 1}" for j in range(nm)]
        cols += [f"m{m}_xi", f"m{m}_sigma", f"m{m}_u"]
    cols += [f"cop_w{i + 1}" for i in range(n)]
    cols += [f"cop_rho{i + 1}" for i in range(n)]
    if family in (Family.T, Family.SKEW_T):
        cols.append("cop_df")
    if family in (Family.SKEW_NORMAL, Family.SKEW_T):
        cols += ["cop_delta1", "cop_delta2"]
    return cols


def flatten_params(theta: ModelParams):
    row = []
    for m in (theta.m1, theta.m2):
        row += list(m.bulk.w) + list(m.bulk.eta) + list(m.bulk.mu)
        row += [m.tail.xi, m.tail.sigma, m.tail.u]
    dep = theta.dep
    row += list(dep.weights)
    row += [c.rho for c in dep.components]
    comp = dep.components[0]
    if dep.family in (Family.T, Family.SKEW_T):
        row.append(comp.df)
    if dep.family in (Family.SKEW_NORMAL, Family.SKEW_T):
        row += [comp.delta1, comp.delta2]
    return row


def unflatten_params(row, family: Family, n: int, n1: int, n2: int) -> ModelParams:
    it = iter(row)

    def take(k):
        return [next(it) for _ in range(k)]

    margins = []
    for nm in (n1, n2):
        w = take(nm)
        eta = take(nm)
        mu = take(nm)
        xi, sigma, u = take(3)
        margins.append(MarginalParams(
            bulk=GammaMixParams(w=tuple(w), eta=tuple(eta), mu=tuple(mu)),
            tail=GpdParams(xi=xi, sigma=sigma, u=u)))
    w = take(n)
    rhos = take(n)
    kw = {}
    if family in (Family.T, Family.SKEW_T):
        kw["df"] = take(1)[0]
    if family in (Family.SKEW_NORMAL, Family.SKEW_T):
        kw["delta1"], kw["delta2"] = take(2)
    comps = tuple(CopulaParams(family, rho=r, **kw) for r in rhos)
    return ModelParams(m1=margins[0], m2=margins[1],
                       dep=CopulaMixture(weights=tuple(w), components=comps))


# ---------------------------------------------------------------------------
# the driver


def _diagnose_init(state: _State) -> str:
    theta = state.theta
    if not state.fixed_uniform:
        if not np.isfinite(_margin_log_prior(theta.m1, state.prior_cfg, 0)):
            return "margin-1 prior"
        if not np.isfinite(_margin_log_prior(theta.m2, state.prior_cfg, 1)):
            return "margin-2 prior"
    if not np.isfinite(_dependence_log_prior(theta.dep, state.prior_cfg)):
        return "copula prior"
    if not np.isfinite(state.lf[0]):
        return "margin-1 likelihood"
    if not np.isfinite(state.lf[1]):
        return "margin-2 likelihood"
    return "copula likelihood"


def run_chain(data: Dataset, cfg, seed=None, start: ModelParams | None = None) -> Chain:
    """Run one chain per the configured schedule and return retained draws.

    Fully reproducible from the seed: identical (data, cfg, seed) produce
    bit-identical chains.
    """
    seed = cfg.seed if seed is None else seed
    rng = np.random.default_rng(seed)
    prior = cfg.resolve_prior(data)
    n1, n2 = cfg.margin_components
    theta0 = start if start is not None else initial_params(data, cfg, prior, rng)
    state = _State(data, theta0, prior, cfg.fixed_uniform_margins)
    if not np.isfinite(state.logpost):
        raise InitializationError(_diagnose_init(state))

    blocks = _build_blocks(cfg, n1, n2)
    scales = _initial_scales(blocks, theta0, prior)
    adapt_trace = {name: [s] for name, s in scales.items()}
    totals = {name: [0, 0] for name, _, _ in blocks}
    batch = {name: [0, 0] for name, _, _ in blocks}

    draws = []
    lposts = []
    lliks = []
    for it in range(1, cfg.iterations + 1):
        for name, kind, payload in blocks:
            scale = scales.get(name, 0.0)
            prop = _propose_block(state, kind, payload, scale, DIRICHLET_CONC, rng)
            totals[name][1] += 1
            batch[name][1] += 1
            accepted = False
            if prop is not None:
                (move, *args), logq_f, logq_b = prop
                if move == "copula":
                    new_dep, refresh = args
                    out = state.try_copula(new_dep, refresh)
                    if out is not None:
                        cand, cand_logpost = out
                        if mh_accept(cand_logpost, state.logpost, logq_f, logq_b, rng):
                            state.accept_copula(cand)
                            accepted = True
                else:
                    m, new_marg, change, j = args
                    out = state.try_margin(m, new_marg, change, j)
                    if out is not None:
                        cand, cand_logpost = out
                        if mh_accept(cand_logpost, state.logpost, logq_f, logq_b, rng):
                            state.accept_margin(cand)
                            accepted = True
            if accepted:
                totals[name][0] += 1
                batch[name][0] += 1
        if it <= cfg.burn_in and it % cfg.adapt_batch == 0:
            b = it // cfg.adapt_batch
            delta = min(0.05, 1.0 / math.sqrt(b))
            for name in scales:
                acc, att = batch[name]
                if att:
                    rate = acc / att
                    scales[name] += delta if rate > TARGET_ACCEPT else -delta
                    adapt_trace[name].append(scales[name])
                batch[name] = [0, 0]
        elif it == cfg.burn_in + 1:
            for name in batch:
                batch[name] = [0, 0]
        if it > cfg.burn_in and (it - cfg.burn_in) % cfg.thin == 0:
            draws.append(state.theta)
            lposts.append(state.logpost)
            lliks.append(state.loglik)

    meta = {
        "seed": int(seed),
        "family": cfg.family.value,
        "n_components": cfg.n_components,
        "margin_components": list(cfg.margin_components),
        "iterations": cfg.iterations,
        "burn_in": cfg.burn_in,
        "thin": cfg.thin,
        "adapt_batch": cfg.adapt_batch,
        "fixed_uniform_margins": bool(cfg.fixed_uniform_margins),
        "n_obs": len(data),
        "labels": list(data.labels),
    }
    return Chain(
        draws=draws,
        log_posterior=np.array(lposts),
        log_likelihood=np.array(lliks),
        acceptance={k: (v[0], v[1]) for k, v in totals.items()},
        scales=dict(scales),
        adapt_trace=adapt_trace,
        meta=meta)
