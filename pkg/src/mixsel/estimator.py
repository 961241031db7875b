"""Projection estimators built from the block empirical process, and their exact L2 risk."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import Model
from .blocks import BlockedSample
from .processes import TrueDensity


@dataclass(frozen=True, eq=False)
class ProjectionFit:
    model: Model
    coefficients: np.ndarray

    @property
    def contrast(self) -> float:
        """``||s_hat||^2 - 2 P_A s_hat``, which equals ``-sum a_lambda^2``."""
        return -float(np.dot(self.coefficients, self.coefficients))

    def __call__(self, x):
        return evaluate_density(self, x)


@dataclass(frozen=True)
class RiskReport:
    model: Model
    bias: float
    variance: float
    total: float


def project(sample: BlockedSample, model: Model) -> ProjectionFit:
    a = sample.mean_matrix(model).mean(axis=0)
    return ProjectionFit(model, a)


def evaluate_density(fit: ProjectionFit, x):
    scalar = np.ndim(x) == 0
    vals = fit.model.design(np.atleast_1d(x)) @ fit.coefficients
    return float(vals[0]) if scalar else vals.reshape(np.shape(x))


def risk_from_coefficients(model: Model, a, c, norm2: float) -> RiskReport:
    a = np.asarray(a, dtype=float)
    c = np.asarray(c, dtype=float)
    bias = max(0.0, norm2 - float(np.dot(c, c)))
    # ||s||^2 - 2 <s, s_hat> + ||s_hat||^2, computed without the bias/variance split
    total = max(0.0, norm2 - 2.0 * float(np.dot(a, c)) + float(np.dot(a, a)))
    return RiskReport(model, bias, float(np.sum((a - c) ** 2)), total)


def risk_against(fit: ProjectionFit, true_density: TrueDensity) -> RiskReport:
    """Split ``||s - s_hat||^2`` into the bias ``||s - s_m||^2`` and ``p(m) = ||s_m - s_hat||^2``."""
    c = true_density.coefficients(fit.model)
    return risk_from_coefficients(fit.model, fit.coefficients, c, true_density.norm2)
