"""Penalized projection estimator: pick the model minimizing contrast + penalty."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .basis import ModelCollection
from .blocks import BlockedSample
from .penalty import (
    MULTINOMIAL,
    c_tilde_w,
    iid_law,
    multinomial_law,
    penalty_monte_carlo,
)
from .processes import TrueDensity

SCHEMA_VERSION = 1

CRITERION_COLUMNS = ("model", "dim", "contrast", "pen", "crit", "risk", "ideal_pen", "p_w", "bias", "variance")


@dataclass
class CriterionRow:
    model: object
    dim: int
    contrast: float
    pen: float
    risk: float | None = None
    ideal_pen: float | None = None
    p_w: float | None = None
    bias: float | None = None
    variance: float | None = None

    @property
    def crit(self) -> float:
        return self.contrast + self.pen

    def as_dict(self) -> dict:
        m = self.model
        return {
            "model": getattr(m, "m", m),
            "dim": self.dim,
            "contrast": self.contrast,
            "pen": self.pen,
            "crit": self.crit,
            "risk": self.risk,
            "ideal_pen": self.ideal_pen,
            "p_w": self.p_w,
            "bias": self.bias,
            "variance": self.variance,
        }


@dataclass
class SelectionReport:
    rows: list
    selected: int
    oracle: int | None = None
    oracle_ratio: float | None = None
    meta: dict = field(default_factory=dict)
    path: object = None

    @property
    def selected_row(self) -> CriterionRow:
        return self.rows[self.selected]

    @property
    def selected_model(self):
        return self.rows[self.selected].model

    @property
    def oracle_model(self):
        return None if self.oracle is None else self.rows[self.oracle].model

    def summary(self) -> dict:
        out = {
            "schema_version": SCHEMA_VERSION,
            "selected": self.rows[self.selected].as_dict()["model"],
            "selected_dim": self.rows[self.selected].dim,
            "oracle": None if self.oracle is None else self.rows[self.oracle].as_dict()["model"],
            "oracle_dim": None if self.oracle is None else self.rows[self.oracle].dim,
            "ratio": self.oracle_ratio,
        }
        out.update(self.meta)
        return out

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=CRITERION_COLUMNS)
            writer.writeheader()
            for row in self.rows:
                writer.writerow({k: ("" if v is None else v) for k, v in row.as_dict().items()})

    def write(self, outdir) -> None:
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        self.write_csv(outdir / "criterion.csv")
        (outdir / "summary.json").write_text(json.dumps(self.summary(), indent=2, default=_json_default) + "\n")


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if hasattr(obj, "to_dict"):
        return obj.to_dict()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _as_row(item) -> CriterionRow:
    if isinstance(item, CriterionRow):
        return item
    if len(item) == 4:
        model, contrast, pen, dim = item
    else:
        model, contrast, pen = item
        dim = model.dim
    return CriterionRow(model, int(dim), float(contrast), float(pen))


def argmin_tiebreak(values, dims) -> int:
    """Index of the smallest value; ties go to the smaller dimension, then the earlier row."""
    values = np.asarray(values, dtype=float)
    order = np.lexsort((np.arange(values.size), np.asarray(dims)))
    return int(order[np.argmin(values[order])])


def select_model(rows) -> SelectionReport:
    rows = [_as_row(r) for r in rows]
    if not rows:
        raise ValueError("no candidate models")
    crit = np.array([r.crit for r in rows])
    if np.any(np.isnan(crit)):
        raise ValueError("criterion contains NaN")
    dims = [r.dim for r in rows]
    report = SelectionReport(rows, argmin_tiebreak(crit, dims))
    _attach_oracle(report)
    return report


def _attach_oracle(report: SelectionReport) -> None:
    risks = [r.risk for r in report.rows]
    if any(r is None for r in risks):
        return
    report.oracle = argmin_tiebreak(risks, [r.dim for r in report.rows])
    best = risks[report.oracle]
    chosen = risks[report.selected]
    if best > 0:
        report.oracle_ratio = chosen / best
    else:
        report.oracle_ratio = 1.0 if chosen == 0 else math.inf


@dataclass
class PenaltyConfig:
    """How the penalty is built. ``C = multiplier * C_tilde_W``."""

    multiplier: float = 1.0
    law: str = MULTINOMIAL
    distribution: str = "poisson"
    law_params: dict = field(default_factory=dict)
    method: str = "closed"
    B: int = 2000
    seed: int | None = 0

    def __post_init__(self):
        if self.method not in ("closed", "monte-carlo"):
            raise ValueError(f"unknown penalty method {self.method!r}")
        if not self.multiplier >= 0:
            raise ValueError(f"penalty multiplier must be nonnegative, got {self.multiplier}")
        if self.law not in (MULTINOMIAL, "iid"):
            raise ValueError(f"unknown weight law {self.law!r}")

    def weight_law(self, p: int):
        if self.law == MULTINOMIAL:
            return multinomial_law(p)
        return iid_law(p, self.distribution, **self.law_params)

    def to_dict(self) -> dict:
        return {
            "multiplier": self.multiplier,
            "law": self.law,
            "distribution": self.distribution,
            "law_params": dict(self.law_params),
            "method": self.method,
            "B": self.B,
            "seed": self.seed,
        }


@dataclass
class CollectionTable:
    """Per-model statistics of one sample over a whole collection."""

    models: list
    dims: np.ndarray
    contrast: np.ndarray
    p_w: np.ndarray
    p: int
    risk: np.ndarray | None = None
    bias: np.ndarray | None = None
    variance: np.ndarray | None = None
    ideal_pen: np.ndarray | None = None


def collection_table(sample: BlockedSample, collection: ModelCollection, true_density: TrueDensity | None = None) -> CollectionTable:
    """Contrast, closed-form ``p_W`` and (optionally) exact risk for every model.

    For nested collections the block means of the largest model are computed
    once and every smaller model reads a prefix of the columns.
    """
    models = list(collection.models)
    p = sample.scheme.p
    dims = np.array([mod.dim for mod in models])
    n_mod = len(models)
    contrast = np.empty(n_mod)
    p_w = np.empty(n_mod)
    want_risk = true_density is not None
    if want_risk:
        bias, variance, ideal = np.empty(n_mod), np.empty(n_mod), np.empty(n_mod)

    def fill(idx, a, ss, c):
        contrast[idx] = -np.sum(a * a)
        p_w[idx] = np.sum(ss) / (p * (p - 1))
        if want_risk:
            bias[idx] = max(0.0, true_density.norm2 - np.sum(c * c))
            variance[idx] = np.sum((a - c) ** 2)
            ideal[idx] = 2.0 * np.sum(a * (a - c))

    if collection.nested:
        big = collection.largest
        means = sample.mean_matrix(big)
        a_all = means.mean(axis=0)
        ss_all = np.sum((means - a_all) ** 2, axis=0)
        c_all = true_density.coefficients(big) if want_risk else None
        for i, mod in enumerate(models):
            d = mod.dim
            fill(i, a_all[:d], ss_all[:d], None if c_all is None else c_all[:d])
    else:
        for i, mod in enumerate(models):
            means = sample.mean_matrix(mod)
            a = means.mean(axis=0)
            ss = np.sum((means - a) ** 2, axis=0)
            fill(i, a, ss, true_density.coefficients(mod) if want_risk else None)

    table = CollectionTable(models, dims, contrast, p_w, p)
    if want_risk:
        table.bias, table.variance, table.ideal_pen = bias, variance, ideal
        table.risk = bias + variance
    return table


def run_ppe(
    sample: BlockedSample,
    collection: ModelCollection,
    penalty_config: PenaltyConfig | None = None,
    true_density: TrueDensity | None = None,
    table: CollectionTable | None = None,
) -> SelectionReport:
    """Fit every model, penalize, select, and attach exact risks when the truth is known."""
    cfg = penalty_config or PenaltyConfig()
    table = table or collection_table(sample, collection, true_density)
    law = cfg.weight_law(table.p)
    ct = c_tilde_w(law)
    C = cfg.multiplier * ct
    if cfg.method == "closed":
        pen = C * (2.0 * table.p_w / ct)
        p_w = table.p_w
    else:
        seeds = np.random.SeedSequence(cfg.seed).spawn(len(table.models))
        recs = [penalty_monte_carlo(sample, mod, law, C, cfg.B, seed=s) for mod, s in zip(table.models, seeds)]
        pen = np.array([r.pen for r in recs])
        p_w = np.array([r.p_w for r in recs])
    rows = []
    for i, mod in enumerate(table.models):
        row = CriterionRow(mod, int(table.dims[i]), float(table.contrast[i]), float(pen[i]), p_w=float(p_w[i]))
        if table.risk is not None:
            row.risk = float(table.risk[i])
            row.bias = float(table.bias[i])
            row.variance = float(table.variance[i])
            row.ideal_pen = float(table.ideal_pen[i])
        rows.append(row)
    report = select_model(rows)
    report.meta.update(
        {
            "collection": collection.kind,
            "C": C,
            "c_tilde_w": ct,
            "penalty": cfg.to_dict(),
            "scheme": sample.scheme.to_dict(),
        }
    )
    return report
