"""Block-resampling penalties.

For an exchangeable weight vector ``(W_0, ..., W_{p-1})`` the penalty

    pen_W(m, C) = C E_W[ 2 (P_A^W - Wbar P_A)(s_hat^W) ]

has the weight-free closed form ``2 C / C_tilde_W * p_W(m)`` with

    p_W(m) = 1 / (p (p - 1)) * sum_lambda sum_i (L_q psi_lambda(A_i) - P_A psi_lambda)^2

and ``C_tilde_W = 1 / Var(W_1 - Wbar)``. The Monte-Carlo path draws the
weights explicitly and exists to check that identity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .basis import Model
from .blocks import BlockedSample
from .processes import TrueDensity

MULTINOMIAL = "multinomial"
IID_WEIGHTS = "iid"

# name -> (sampler, variance), both taking the parameter dict
_IID_DISTRIBUTIONS = {
    "poisson": (lambda rng, size, lam=1.0: rng.poisson(lam, size), lambda lam=1.0: lam),
    "exponential": (lambda rng, size, scale=1.0: rng.exponential(scale, size), lambda scale=1.0: scale**2),
    "gamma": (
        lambda rng, size, shape=1.0, scale=1.0: rng.gamma(shape, scale, size),
        lambda shape=1.0, scale=1.0: shape * scale**2,
    ),
    "bernoulli": (
        lambda rng, size, prob=0.5: (rng.random(size) < prob).astype(float) / prob,
        lambda prob=0.5: (1.0 - prob) / prob,
    ),
    "constant": (lambda rng, size, value=1.0: np.full(size, float(value)), lambda value=1.0: 0.0),
}


@dataclass(frozen=True)
class WeightLaw:
    """Exchangeable resampling weights for ``p`` blocks.

    ``multinomial`` is the block bootstrap, ``M(p; 1/p, ..., 1/p)``. ``iid``
    draws independent nonnegative weights from ``distribution`` (poisson,
    exponential, gamma, bernoulli) with keyword ``params``.
    """

    kind: str
    p: int
    distribution: str | None = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.p < 2:
            raise ValueError(f"weight laws need p >= 2, got {self.p}")
        if self.kind == IID_WEIGHTS:
            if self.distribution not in _IID_DISTRIBUTIONS:
                raise ValueError(f"unknown weight distribution {self.distribution!r}")
        elif self.kind != MULTINOMIAL:
            raise ValueError(f"unknown weight law {self.kind!r}")

    @property
    def variance(self) -> float:
        """``Var(W_1)``."""
        if self.kind == MULTINOMIAL:
            return 1.0 - 1.0 / self.p
        return float(_IID_DISTRIBUTIONS[self.distribution][1](**self.params))

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.kind == MULTINOMIAL:
            return rng.multinomial(self.p, np.full(self.p, 1.0 / self.p), size=size).astype(float)
        sampler = _IID_DISTRIBUTIONS[self.distribution][0]
        return np.asarray(sampler(rng, (size, self.p), **self.params), dtype=float)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "p": self.p, "distribution": self.distribution, "params": dict(self.params)}


def multinomial_law(p: int) -> WeightLaw:
    return WeightLaw(MULTINOMIAL, int(p))


def iid_law(p: int, distribution: str = "poisson", **params) -> WeightLaw:
    return WeightLaw(IID_WEIGHTS, int(p), distribution, params)


def c_tilde_w(law: WeightLaw) -> float:
    """``1 / Var(W_1 - Wbar)``."""
    if law.kind == MULTINOMIAL:
        # Wbar is identically 1
        var = law.variance
    else:
        var = law.variance * (1.0 - 1.0 / law.p)
    if not var > 0.0 or not math.isfinite(var):
        raise ValueError(f"degenerate weight law {law.kind}/{law.distribution}: Var(W_1 - Wbar) = {var}")
    return 1.0 / var


@dataclass(frozen=True)
class PenaltyRecord:
    model: Model
    p_w: float
    pen: float
    C: float
    method: str
    B: int | None = None
    seed: int | None = None
    se: float | None = None


def p_w_from_means(means: np.ndarray) -> float:
    """Closed-form ``p_W(m)`` from the ``(p, dim)`` block-mean matrix."""
    p = means.shape[0]
    if p < 2:
        raise ValueError("closed-form penalty needs at least 2 blocks")
    dev = means - means.mean(axis=0)
    return float(np.sum(dev * dev) / (p * (p - 1)))


def penalty_closed_form(sample: BlockedSample, model: Model, C: float | None = None, law: WeightLaw | None = None) -> PenaltyRecord:
    """Exact ``pen_W(m, C)``; ``C`` defaults to ``C_tilde_W`` and ``law`` to the block bootstrap."""
    p = sample.scheme.p
    if p < 2:
        raise ValueError("closed-form penalty needs at least 2 blocks")
    law = multinomial_law(p) if law is None else law
    _check_law(law, p)
    ct = c_tilde_w(law)
    C = ct if C is None else float(C)
    pw = p_w_from_means(sample.mean_matrix(model))
    # C applied last so that pen(m, aC) = a * pen(m, C) holds bit for bit when C = 1
    return PenaltyRecord(model, pw, C * (2.0 * pw / ct), C, "closed")


def penalty_monte_carlo(
    sample: BlockedSample,
    model: Model,
    law: WeightLaw,
    C: float | None = None,
    B: int = 20000,
    seed=None,
    batch: int = 2000,
) -> PenaltyRecord:
    """Average ``2 C (P_A^W - Wbar P_A)(s_hat^W)`` over ``B`` weight draws."""
    if B < 1:
        raise ValueError(f"B must be positive, got {B}")
    p = sample.scheme.p
    _check_law(law, p)
    ct = c_tilde_w(law)
    C = ct if C is None else float(C)
    means = sample.mean_matrix(model)
    pa = means.mean(axis=0)
    rng = np.random.default_rng(seed)
    values = np.empty(B)
    for start in range(0, B, batch):
        w = law.sample(rng, min(batch, B - start))
        paw = w @ means / p
        nu = paw - w.mean(axis=1)[:, None] * pa
        values[start:start + w.shape[0]] = 2.0 * C * np.sum(nu * paw, axis=1)
    mean = float(values.mean())
    se = float(values.std(ddof=1) / math.sqrt(B)) if B > 1 else float("nan")
    return PenaltyRecord(model, mean * ct / (2.0 * C), mean, C, "monte-carlo", B, seed if isinstance(seed, int) else None, se)


def ideal_penalty(sample: BlockedSample, model: Model, true_density: TrueDensity) -> float:
    """``2 (P_A - P)(s_hat)``; needs the true density, so it is a diagnostic only."""
    a = sample.mean_matrix(model).mean(axis=0)
    return float(2.0 * np.dot(a, a - true_density.coefficients(model)))


def _check_law(law: WeightLaw, p: int) -> None:
    if law.p != p:
        raise ValueError(f"weight law is for p={law.p} blocks but the sample has p={p}")
