"""Replicated simulate -> fit -> penalize -> select/slope experiments.

Replication ``i`` always draws its sample from the ``i``-th child of
``SeedSequence(seed)``, whatever the worker count, so outputs depend only on
the config. The same child seeds are reused for every ``(n, q)`` cell.
"""

from __future__ import annotations

import csv
import json
import os
import warnings
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .basis import enumerate_models, normalize_kind
from .blocks import BlockedSample
from .penalty import c_tilde_w
from .processes import ProcessSpec, simulate
from .selection import SCHEMA_VERSION, PenaltyConfig, collection_table, run_ppe
from .slope import DELTA_MEASURES, DIMENSION, PEN_W_UNIT, parse_grid, slope_select

REPLICATION_COLUMNS = (
    "n",
    "q",
    "rep",
    "selected",
    "selected_dim",
    "oracle",
    "oracle_dim",
    "ratio",
    "slope_k_tilde",
    "slope_jump_found",
    "slope_selected",
    "slope_dim",
    "slope_ratio",
)


class ConfigError(ValueError):
    """Invalid experiment configuration; the message starts with the offending key path."""

    def __init__(self, key: str, msg: str):
        super().__init__(f"{key}: {msg}")
        self.key = key


@dataclass
class SlopeConfig:
    grid: str = "0:4:0.05"
    measure: str = PEN_W_UNIT

    def __post_init__(self):
        parse_grid(self.grid)
        if self.measure not in DELTA_MEASURES:
            raise ValueError(f"unknown complexity measure {self.measure!r}")

    @property
    def K(self) -> np.ndarray:
        return parse_grid(self.grid)

    def to_dict(self) -> dict:
        return {"grid": self.grid, "measure": self.measure}


@dataclass
class ExperimentConfig:
    process: ProcessSpec = field(default_factory=ProcessSpec)
    collection: str = "wavelet-haar"
    n: list = field(default_factory=lambda: [8192])
    q: list = field(default_factory=lambda: [1, 4, 16])
    penalty: PenaltyConfig = field(default_factory=PenaltyConfig)
    slope: SlopeConfig = field(default_factory=SlopeConfig)
    max_level: int | None = None
    cap: int = 512
    reps: int = 1
    seed: int = 0
    output: str | None = None

    def __post_init__(self):
        try:
            self.collection = normalize_kind(self.collection)
        except ValueError as err:
            raise ConfigError("collection", str(err)) from None
        self.n = [int(v) for v in np.atleast_1d(self.n)]
        self.q = [int(v) for v in np.atleast_1d(self.q)]
        for i, n in enumerate(self.n):
            if n < 8:
                raise ConfigError(f"n[{i}]", f"must be >= 8, got {n}")
        for i, q in enumerate(self.q):
            if q < 1:
                raise ConfigError(f"q[{i}]", f"must be >= 1, got {q}")
            for n in self.n:
                if n // (2 * q) < 2:
                    raise ConfigError(f"q[{i}]", f"q={q} leaves fewer than 2 blocks at n={n}")
        if self.reps < 1:
            raise ConfigError("reps", f"must be >= 1, got {self.reps}")

    def to_dict(self) -> dict:
        return {
            "process": self.process.to_dict(),
            "collection": self.collection,
            "n": list(self.n),
            "q": list(self.q),
            "penalty": self.penalty.to_dict(),
            "slope": self.slope.to_dict(),
            "max_level": self.max_level,
            "cap": self.cap,
            "reps": self.reps,
            "seed": self.seed,
            "output": self.output,
        }

    @classmethod
    def from_dict(cls, d: dict) -> ExperimentConfig:
        d = dict(d)
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            key = sorted(unknown)[0]
            raise ConfigError(key, "unknown key")
        kwargs = {}
        if "process" in d:
            kwargs["process"] = _build("process", ProcessSpec.from_dict, d.pop("process"))
        if "penalty" in d:
            kwargs["penalty"] = _build("penalty", _strict(PenaltyConfig), d.pop("penalty"))
        if "slope" in d:
            kwargs["slope"] = _build("slope", _strict(SlopeConfig), d.pop("slope"))
        for key, value in d.items():
            kwargs[key] = value
        return cls(**kwargs)

    @classmethod
    def from_json(cls, path) -> ExperimentConfig:
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as err:
            raise ConfigError("<file>", f"invalid JSON: {err}") from None
        if not isinstance(data, dict):
            raise ConfigError("<root>", "config must be a JSON object")
        return cls.from_dict(data)


def _strict(cls):
    def factory(value):
        for key in value:
            if key not in cls.__dataclass_fields__:
                raise ConfigError(key, "unknown key")
        return cls(**value)

    return factory


def _build(key, factory, value):
    if not isinstance(value, dict):
        raise ConfigError(key, "expected an object")
    try:
        return factory(value)
    except ConfigError as err:
        raise ConfigError(f"{key}.{err.key}", str(err).split(": ", 1)[1]) from None
    except (TypeError, ValueError) as err:
        raise ConfigError(key, str(err)) from None


def replication_seeds(config: ExperimentConfig) -> list:
    return np.random.SeedSequence(config.seed).spawn(config.reps)


def replication_sample(config: ExperimentConfig, n: int, q: int, seed) -> BlockedSample:
    return BlockedSample.from_array(simulate(config.process, n, seed=seed), q)


def _delta(table, config: ExperimentConfig, n: int) -> np.ndarray:
    if config.slope.measure == DIMENSION:
        return table.dims / n
    ct = c_tilde_w(config.penalty.weight_law(table.p))
    return 2.0 * table.p_w / ct


def run_replication(config: ExperimentConfig, n: int, q: int, rep: int, seed) -> dict:
    """One simulated sample: PPE selection plus the slope algorithm, with oracle ratios."""
    sample = replication_sample(config, n, q, seed)
    collection = enumerate_models(config.collection, n, cap=config.cap, max_level=config.max_level)
    target = config.process.target
    table = collection_table(sample, collection, target)
    ppe = run_ppe(sample, collection, config.penalty, target, table=table)
    delta = _delta(table, config, n)
    rows = list(zip(table.models, table.contrast, delta))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        sl = slope_select(rows, config.slope.K, config.slope.measure, risks=table.risk)
    return {
        "n": n,
        "q": q,
        "rep": rep,
        "selected": ppe.selected_model.m,
        "selected_dim": ppe.selected_row.dim,
        "oracle": ppe.oracle_model.m,
        "oracle_dim": ppe.rows[ppe.oracle].dim,
        "ratio": ppe.oracle_ratio,
        "slope_k_tilde": sl.meta["k_tilde"],
        "slope_jump_found": int(sl.meta["jump_found"]),
        "slope_selected": sl.selected_model.m,
        "slope_dim": sl.selected_row.dim,
        "slope_ratio": sl.oracle_ratio,
        "path_dims": [int(v) for v in sl.path.dims],
    }


def _run_task(args):
    return run_replication(*args)


def worker_count() -> int:
    env = os.environ.get("MIXSEL_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError("MIXSEL_THREADS", f"not an integer: {env!r}") from None
    return os.cpu_count() or 1


def quantiles(values) -> dict:
    v = np.asarray(values, dtype=float)
    q25, q50, q75 = np.quantile(v, [0.25, 0.5, 0.75])
    return {"q25": float(q25), "median": float(q50), "q75": float(q75), "mean": float(v.mean())}


@dataclass
class AggregateReport:
    config: ExperimentConfig
    replications: list
    cells: list

    def summary(self) -> dict:
        return {"schema_version": SCHEMA_VERSION, "config": self.config.to_dict(), "cells": self.cells}


def _aggregate(config: ExperimentConfig, replications: list) -> list:
    cells = []
    K = config.slope.K
    for n in config.n:
        for q in config.q:
            reps = [r for r in replications if r["n"] == n and r["q"] == q]
            if not reps:
                continue
            dims_by_K = []
            for k_idx, k in enumerate(K):
                counts = Counter(r["path_dims"][k_idx] for r in reps)
                dims_by_K.append({"K": float(k), "counts": {str(d): c for d, c in sorted(counts.items())}})
            cells.append(
                {
                    "n": n,
                    "q": q,
                    "reps": len(reps),
                    "ratio": quantiles([r["ratio"] for r in reps]),
                    "slope_ratio": quantiles([r["slope_ratio"] for r in reps]),
                    "slope_k_tilde": quantiles([r["slope_k_tilde"] for r in reps]),
                    "jump_rate": float(np.mean([r["slope_jump_found"] for r in reps])),
                    "selected_dim": quantiles([r["selected_dim"] for r in reps]),
                    "dims_by_K": dims_by_K,
                }
            )
    return cells


def run_experiment(config: ExperimentConfig, workers: int | None = None) -> AggregateReport:
    """Run every ``(n, q, replication)`` cell and write CSV/JSON outputs if ``config.output`` is set.

    Rows reach ``replications.csv`` as they complete, so a failure leaves the
    finished replications on disk.
    """
    workers = worker_count() if workers is None else max(1, int(workers))
    seeds = replication_seeds(config)
    tasks = [(config, n, q, i, seeds[i]) for n in config.n for q in config.q for i in range(config.reps)]
    outdir = Path(config.output) if config.output else None
    writer = fh = None
    if outdir is not None:
        outdir.mkdir(parents=True, exist_ok=True)
        fh = open(outdir / "replications.csv", "w", newline="")
        writer = csv.DictWriter(fh, fieldnames=REPLICATION_COLUMNS, extrasaction="ignore")
        writer.writeheader()
    results = []
    try:
        if workers > 1 and len(tasks) > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                it = pool.map(_run_task, tasks, chunksize=max(1, len(tasks) // (4 * workers)))
                for res in it:
                    results.append(res)
                    if writer:
                        writer.writerow(res)
        else:
            for task in tasks:
                res = _run_task(task)
                results.append(res)
                if writer:
                    writer.writerow(res)
    finally:
        if fh:
            fh.close()
    report = AggregateReport(config, results, _aggregate(config, results))
    if outdir is not None:
        _write_dims(outdir / "dims_by_K.csv", report.cells)
        (outdir / "summary.json").write_text(json.dumps(report.summary(), indent=2) + "\n")
    return report


def _write_dims(path, cells) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "q", "K", "dim", "count"])
        for cell in cells:
            for entry in cell["dims_by_K"]:
                for dim, count in entry["counts"].items():
                    writer.writerow([cell["n"], cell["q"], entry["K"], dim, count])


def read_replications(path) -> list:
    """Parse ``replications.csv`` back into dicts of numbers."""
    ints = {"n", "q", "rep", "selected", "selected_dim", "oracle", "oracle_dim", "slope_jump_found", "slope_selected", "slope_dim"}
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out.append({k: (int(v) if k in ints else float(v)) for k, v in row.items()})
    return out

