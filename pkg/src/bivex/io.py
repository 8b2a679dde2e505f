"""File formats and run configuration.

CSV in (two numeric columns, optional header), JSON configs, chain CSV plus
JSON metadata out. Every fit echoes its fully-resolved configuration next
to its outputs so a run can be replayed exactly.
"""
from __future__ import annotations

import dataclasses
import json
import math
import os
from dataclasses import dataclass

import numpy as np

from .copula import CopulaMixture, CopulaParams, Family
from .marginal import GammaMixParams, GpdParams, MarginalParams
from .model import Dataset, ModelParams
from .prior import PriorConfig

__all__ = [
    "DataFormatError",
    "ConfigError",
    "FitConfig",
    "load_dataset",
    "save_dataset",
    "model_params_from_dict",
    "model_params_to_dict",
    "fit_config_from_file",
    "write_resolved_config",
]

FITTABLE_FAMILIES = (Family.GAUSSIAN, Family.T, Family.SKEW_NORMAL, Family.SKEW_T)


class DataFormatError(ValueError):
    """Malformed input data file."""


class ConfigError(ValueError):
    """Malformed or inconsistent configuration."""


def load_dataset(path) -> Dataset:
    """Read a two-column CSV; a non-numeric first row is taken as a header.

    Rows with missing, non-finite or non-positive entries are rejected with
    their 1-based data row number.
    """
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines:
        raise DataFormatError(f"{path}: empty file")
    labels = ("x1", "x2")
    start = 0
    first = [c.strip() for c in lines[0].split(",")]
    if len(first) >= 2:
        try:
            float(first[0]), float(first[1])
        except ValueError:
            labels = (first[0], first[1])
            start = 1
    x1, x2 = [], []
    for rownum, ln in enumerate(lines[start:], start=1):
        cells = [c.strip() for c in ln.split(",")]
        if len(cells) < 2:
            raise DataFormatError(f"{path}: row {rownum}: expected 2 columns")
        try:
            a, b = float(cells[0]), float(cells[1])
        except ValueError as exc:
            raise DataFormatError(f"{path}: row {rownum}: {exc}") from exc
        if not (math.isfinite(a) and math.isfinite(b)):
            raise DataFormatError(f"{path}: row {rownum}: non-finite value")
        if a <= 0.0 or b <= 0.0:
            raise DataFormatError(f"{path}: row {rownum}: values must be > 0")
        x1.append(a)
        x2.append(b)
    if not x1:
        raise DataFormatError(f"{path}: no data rows")
    return Dataset(x1=np.array(x1), x2=np.array(x2), labels=labels)


def save_dataset(data: Dataset, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{data.labels[0]},{data.labels[1]}\n")
        for a, b in zip(data.x1, data.x2):
            fh.write(f"{a:.17g},{b:.17g}\n")


def model_params_from_dict(d) -> ModelParams:
    """Decode a full parameter set from its JSON form."""
    try:
        margins = []
        for md in d["margins"]:
            bulk = GammaMixParams(w=tuple(md["weights"]),
                                  eta=tuple(md["shapes"]),
                                  mu=tuple(md["means"]))
            tail = GpdParams(xi=float(md["xi"]), sigma=float(md["sigma"]),
                             u=float(md["threshold"]))
            margins.append(MarginalParams(bulk=bulk, tail=tail))
        cd = d["copula"]
        fam = Family(cd["family"])
        weights = tuple(cd.get("weights", (1.0,)))
        n = len(weights)

        def per_comp(key):
            v = cd.get(key)
            if v is None:
                return [None] * n
            if isinstance(v, (int, float)):
                return [float(v)] * n
            return [float(x) for x in v]

        rhos = per_comp("rho")
        thetas = per_comp("theta")
        comps = tuple(
            CopulaParams(fam, rho=rhos[i],
                         df=float(cd["df"]) if "df" in cd and cd["df"] is not None else None,
                         delta1=float(cd["delta1"]) if cd.get("delta1") is not None else None,
                         delta2=float(cd["delta2"]) if cd.get("delta2") is not None else None,
                         theta=thetas[i])
            for i in range(n))
        return ModelParams(m1=margins[0], m2=margins[1],
                           dep=CopulaMixture(weights=weights, components=comps))
    except (KeyError, IndexError, TypeError) as exc:
        raise ConfigError(f"invalid model specification: {exc}") from exc


def model_params_to_dict(theta: ModelParams) -> dict:
    margins = []
    for m in (theta.m1, theta.m2):
        margins.append({
            "weights": list(m.bulk.w), "shapes": list(m.bulk.eta),
            "means": list(m.bulk.mu), "xi": m.tail.xi,
            "sigma": m.tail.sigma, "threshold": m.tail.u,
        })
    dep = theta.dep
    cd = {"family": dep.family.value, "weights": list(dep.weights)}
    comp = dep.components[0]
    if dep.family in FITTABLE_FAMILIES:
        cd["rho"] = [c.rho for c in dep.components]
    else:
        cd["theta"] = [c.theta for c in dep.components]
    if comp.df is not None:
        cd["df"] = comp.df
    if comp.delta1 is not None:
        cd["delta1"] = comp.delta1
        cd["delta2"] = comp.delta2
    return {"margins": margins, "copula": cd}


@dataclass(frozen=True)
class FitConfig:
    """Everything a fit needs besides the data itself."""

    family: Family = Family.GAUSSIAN
    n_components: int = 1
    margin_components: tuple = (2, 2)
    iterations: int = 25000
    burn_in: int = 5000
    thin: int = 20
    adapt_batch: int = 50
    seed: int = 0
    prior: PriorConfig | None = None
    fixed_uniform_margins: bool = False
    holdout_fraction: float = 0.0
    holdout_indices: tuple | None = None
    data_path: str | None = None
    out_dir: str | None = None

    def __post_init__(self):
        fam = Family(self.family)
        object.__setattr__(self, "family", fam)
        object.__setattr__(self, "margin_components",
                           tuple(int(v) for v in self.margin_components))
        if fam not in FITTABLE_FAMILIES:
            raise ConfigError(
                f"family {fam.value} has no sampling blocks; "
                f"fittable families: {[f.value for f in FITTABLE_FAMILIES]}")
        if self.n_components < 1 or any(v < 1 for v in self.margin_components):
            raise ConfigError("mixture sizes must be >= 1")
        if len(self.margin_components) != 2:
            raise ConfigError("margin_components must have exactly two entries")
        if fam is Family.SKEW_T and self.n_components != 1:
            raise ConfigError("skew-t allows a single mixture component")
        if not (self.iterations > self.burn_in >= 0):
            raise ConfigError("iterations must exceed burn_in >= 0")
        if self.thin < 1 or self.adapt_batch < 1:
            raise ConfigError("thin and adapt_batch must be >= 1")
        if (self.iterations - self.burn_in) < self.thin:
            raise ConfigError("no draws would be retained")
        if not 0.0 <= self.holdout_fraction < 1.0:
            raise ConfigError("holdout_fraction must lie in [0, 1)")

    def resolve_prior(self, data: Dataset) -> PriorConfig:
        if self.prior is not None:
            return self.prior
        n1, n2 = self.margin_components
        return PriorConfig.from_data(data.x1, data.x2, n1, n2)


_FIT_KEYS = {f.name for f in dataclasses.fields(FitConfig)}


def fit_config_from_dict(d: dict) -> FitConfig:
    d = dict(d)
    unknown = set(d) - _FIT_KEYS - {"prior"}
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if "prior" in d and d["prior"] is not None and not isinstance(d["prior"], PriorConfig):
        p = dict(d["prior"])
        try:
            d["prior"] = PriorConfig(**p)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid prior block: {exc}") from exc
    if "holdout_indices" in d and d["holdout_indices"] is not None:
        d["holdout_indices"] = tuple(int(i) for i in d["holdout_indices"])
    try:
        return FitConfig(**d)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def fit_config_from_file(path) -> FitConfig:
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    with open(path, "r", encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    return fit_config_from_dict(raw)


def fit_config_to_dict(cfg: FitConfig) -> dict:
    out = dataclasses.asdict(cfg)
    out["family"] = cfg.family.value
    out["margin_components"] = list(cfg.margin_components)
    if cfg.holdout_indices is not None:
        out["holdout_indices"] = list(cfg.holdout_indices)
    if cfg.prior is not None:
        out["prior"] = dataclasses.asdict(cfg.prior)
    return out


def write_resolved_config(cfg: FitConfig, prior: PriorConfig, path) -> None:
    """Echo the configuration with every default filled in."""
    out = fit_config_to_dict(cfg)
    out["prior"] = dataclasses.asdict(prior)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(out, fh, indent=2, sort_keys=True)
        fh.write("\n")
