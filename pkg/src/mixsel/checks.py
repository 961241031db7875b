"""Fast self-checks behind ``mixsel check``: exact identities on seeded random fixtures."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import FOURIER, HAAR, HISTOGRAM, make_model
from .blocks import BlockedSample
from .estimator import project, risk_against
from .penalty import multinomial_law, penalty_closed_form, penalty_monte_carlo
from .processes import TrueDensity
from .slope import complexity_path


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}  {self.detail}".rstrip()


def _random_fixture(rng, kind=None, p_max=64):
    kind = kind or rng.choice([HISTOGRAM, FOURIER, HAAR])
    m = int(rng.integers(1, 6)) if kind == HAAR else int(rng.integers(1, 17))
    p = int(rng.integers(2, p_max + 1))
    q = int(rng.integers(1, 5))
    x = rng.beta(2.0, 1.5, size=(p, q))
    return BlockedSample.from_blocks(x), make_model(kind, m)


def check_penalty_exactness(fixtures: int = 50, B: int = 20000, seed: int = 0) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for i in range(fixtures):
        sample, model = _random_fixture(rng)
        law = multinomial_law(sample.scheme.p)
        closed = penalty_closed_form(sample, model, C=1.0, law=law)
        mc = penalty_monte_carlo(sample, model, law, C=1.0, B=B, seed=seed + i)
        if mc.se > 0:
            worst = max(worst, abs(mc.pen - closed.pen) / mc.se)
        elif mc.pen != closed.pen:
            worst = np.inf
    return CheckResult("penalty Monte-Carlo vs closed form", worst <= 4.0, f"max |z| = {worst:.2f}")


def check_hand_penalty() -> CheckResult:
    sample = BlockedSample.from_blocks([0.2, 0.8])
    rec = penalty_closed_form(sample, make_model(HISTOGRAM, 2), C=2.0)
    # sqrt(2) is not representable, so allow a few ulps
    ok = abs(rec.pen - 2.0) <= 4 * np.spacing(2.0) and abs(rec.p_w - 1.0) <= 4 * np.spacing(1.0)
    return CheckResult("two-block hand instance", ok, f"pen = {rec.pen!r}")


def check_sup_norm_constants() -> CheckResult:
    grid = (np.arange(10_000) + 0.5) / 10_000
    worst = 0.0
    for kind in (HISTOGRAM, FOURIER):
        for m in range(1, 65):
            model = make_model(kind, m)
            psi2 = (model.design(grid) ** 2).sum(axis=1)
            worst = max(worst, abs(psi2.max() - model.b2), abs(psi2.mean() - model.b2))
    return CheckResult("sup-norm constants", worst <= 1e-9, f"max error = {worst:.2e}")


def check_pythagoras(fixtures: int = 100, seed: int = 1) -> CheckResult:
    rng = np.random.default_rng(seed)
    targets = [TrueDensity.uniform(), TrueDensity.linear(), TrueDensity([0, 0.5, 1], [[0.5], [1.5]])]
    worst = 0.0
    for _ in range(fixtures):
        sample, model = _random_fixture(rng)
        target = targets[int(rng.integers(len(targets)))]
        fit = project(sample, model)
        rep = risk_against(fit, target)
        worst = max(worst, abs(rep.total - rep.bias - rep.variance))
        if rep.bias < 0 or rep.variance < 0:
            return CheckResult("Pythagoras risk identity", False, "negative component")
    return CheckResult("Pythagoras risk identity", worst <= 1e-12, f"max residual = {worst:.1e}")


def check_slope_monotone(fixtures: int = 200, seed: int = 2) -> CheckResult:
    rng = np.random.default_rng(seed)
    grid = np.linspace(0.0, 4.0, 81)
    for _ in range(fixtures):
        k = int(rng.integers(2, 30))
        delta = rng.exponential(size=k)
        contrast = -rng.exponential(size=k) - delta * rng.uniform(0, 3, size=k)
        rows = [(i, contrast[i], delta[i], i + 1) for i in range(k)]
        path = complexity_path(rows, grid)
        if np.any(np.diff(path.delta) > 0):
            return CheckResult("slope path monotone", False, "complexity increased along K")
    return CheckResult("slope path monotone", True, f"{fixtures} fixtures")


ALL_CHECKS = (
    check_hand_penalty,
    check_sup_norm_constants,
    check_pythagoras,
    check_slope_monotone,
    check_penalty_exactness,
)


def run_checks() -> list[CheckResult]:
    return [check() for check in ALL_CHECKS]
