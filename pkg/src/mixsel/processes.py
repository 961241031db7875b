"""Stationary mixing sequences with known marginals on [0, 1).

Dependence lives in a latent chain with uniform marginal; the observed
sequence is its image through the inverse CDF of the target density, a
monotone map that keeps the mixing regime and makes every projection
coefficient of the marginal computable in closed form.

Process kinds
-------------
iid           independent inverse-CDF draws
ar-bernoulli  ``U_t = (U_{t-1} + xi_t) / 2``, ``xi_t ~ Bernoulli(1/2)``;
              tau-mixing but not beta-mixing
gaussian-ar1  ``Z_t = a Z_{t-1} + eps_t`` mapped to uniform by the normal CDF;
              geometrically beta-mixing
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Polynomial
from scipy.signal import lfilter
from scipy.special import ndtr

from .basis import FOURIER, HAAR, HISTOGRAM, Model

IID = "iid"
AR_BERNOULLI = "ar-bernoulli"
GAUSSIAN_AR1 = "gaussian-ar1"
PROCESS_KINDS = (IID, AR_BERNOULLI, GAUSSIAN_AR1)

DEFAULT_BURN_IN = 1024
_BELOW_ONE = np.nextafter(1.0, 0.0)


class TrueDensity:
    """Piecewise-polynomial density on [0, 1).

    ``breaks`` are ``0 = b_0 < ... < b_r = 1`` and ``coefs[i]`` holds the
    power-series coefficients (in ``x``, not in a local variable) of the
    density on ``[b_i, b_{i+1})``.
    """

    def __init__(self, breaks, coefs, name: str = "piecewise-polynomial"):
        breaks = np.asarray(breaks, dtype=float)
        if breaks.ndim != 1 or breaks.size < 2 or breaks[0] != 0.0 or breaks[-1] != 1.0:
            raise ValueError("breaks must run from 0 to 1")
        if np.any(np.diff(breaks) <= 0):
            raise ValueError("breaks must be strictly increasing")
        if len(coefs) != breaks.size - 1:
            raise ValueError("need one coefficient list per piece")
        self.name = name
        self.breaks = breaks
        self.pieces = [Polynomial(np.asarray(c, dtype=float)) for c in coefs]
        self._antider = [poly.integ() for poly in self.pieces]
        masses = [F(b) - F(a) for F, a, b in zip(self._antider, breaks[:-1], breaks[1:])]
        self._cum = np.concatenate([[0.0], np.cumsum(masses)])
        if abs(self._cum[-1] - 1.0) > 1e-12:
            raise ValueError(f"density integrates to {self._cum[-1]!r}, not 1")
        grid = np.linspace(0.0, 1.0, 4097)
        if np.min(self.pdf(grid[:-1])) < 0.0 or any(
            poly(b) < -1e-14 for poly, b in zip(self.pieces, breaks[1:])
        ):
            raise ValueError("density takes negative values")
        self.norm2 = float(
            sum((poly**2).integ()(b) - (poly**2).integ()(a) for poly, a, b in zip(self.pieces, breaks[:-1], breaks[1:]))
        )

    @classmethod
    def uniform(cls) -> TrueDensity:
        return cls([0.0, 1.0], [[1.0]], name="uniform")

    @classmethod
    def linear(cls) -> TrueDensity:
        """``s(y) = 2y``."""
        return cls([0.0, 1.0], [[0.0, 2.0]], name="linear")

    @classmethod
    def from_dict(cls, d) -> TrueDensity:
        if isinstance(d, str):
            d = {"kind": d}
        kind = d.get("kind")
        if kind == "uniform":
            return cls.uniform()
        if kind == "linear":
            return cls.linear()
        if kind == "piecewise-polynomial":
            return cls(d["breaks"], d["coefs"])
        raise ValueError(f"unknown density kind: {kind!r}")

    def to_dict(self) -> dict:
        if self.name in ("uniform", "linear"):
            return {"kind": self.name}
        return {
            "kind": "piecewise-polynomial",
            "breaks": self.breaks.tolist(),
            "coefs": [poly.coef.tolist() for poly in self.pieces],
        }

    def _piece(self, x):
        return np.clip(np.searchsorted(self.breaks, x, side="right") - 1, 0, len(self.pieces) - 1)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        idx = self._piece(x)
        out = np.zeros_like(x)
        for i, poly in enumerate(self.pieces):
            mask = idx == i
            out[mask] = poly(x[mask])
        return out

    def cdf(self, x):
        x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
        idx = self._piece(x)
        out = np.zeros_like(x)
        for i, F in enumerate(self._antider):
            mask = idx == i
            out[mask] = self._cum[i] + F(x[mask]) - F(self.breaks[i])
        return out

    def ppf(self, u):
        """Inverse CDF by vectorised bisection inside the bracketing piece."""
        scalar = np.ndim(u) == 0
        u = np.asarray(u, dtype=float)
        if np.any((u < 0.0) | (u > 1.0)):
            raise ValueError("ppf argument must lie in [0, 1]")
        idx = np.clip(np.searchsorted(self._cum, u, side="right") - 1, 0, len(self.pieces) - 1)
        lo = self.breaks[idx].copy()
        hi = self.breaks[idx + 1].copy()
        base = self._cum[idx]
        flat = u.reshape(-1)
        lo_f, hi_f, base_f, idx_f = lo.reshape(-1), hi.reshape(-1), base.reshape(-1), idx.reshape(-1)
        for i, F in enumerate(self._antider):
            mask = idx_f == i
            if not mask.any():
                continue
            target = flat[mask] - base_f[mask] + F(self.breaks[i])
            a, b = lo_f[mask], hi_f[mask]
            for _ in range(64):
                mid = 0.5 * (a + b)
                below = F(mid) < target
                a = np.where(below, mid, a)
                b = np.where(below, b, mid)
            lo_f[mask] = a
            hi_f[mask] = b
        out = np.minimum(0.5 * (lo_f + hi_f), _BELOW_ONE).reshape(u.shape)
        return float(out) if scalar else out

    def _interval_masses(self, edges) -> np.ndarray:
        return np.diff(self.cdf(np.asarray(edges, dtype=float)))

    def coefficients(self, model: Model) -> np.ndarray:
        """``<s, psi_lambda>`` for every label of ``model``, in label order."""
        if model.kind == HISTOGRAM:
            d = model.m
            return math.sqrt(d) * self._interval_masses(np.arange(d + 1) / d)
        if model.kind == HAAR:
            out = [math.sqrt(2.0) * self._interval_masses([0.0, 0.5, 1.0])]
            for j in range(1, model.m + 1):
                half = self._interval_masses(np.arange(2 ** (j + 1) + 1) / 2 ** (j + 1))
                out.append(2.0 ** (j / 2) * (half[0::2] - half[1::2]))
            return np.concatenate(out)
        if model.kind == FOURIER:
            return self._fourier_coefficients(model.m)
        raise ValueError(f"unsupported model kind {model.kind!r}")

    def _fourier_coefficients(self, m: int) -> np.ndarray:
        # composite Gauss-Legendre; 16 nodes per panel and >= 2 panels per period
        nodes, weights = np.polynomial.legendre.leggauss(16)
        xs, ws = [], []
        for a, b in zip(self.breaks[:-1], self.breaks[1:]):
            panels = max(8, int(math.ceil(2 * m * (b - a))) + 8)
            edges = np.linspace(a, b, panels + 1)
            half = 0.5 * np.diff(edges)
            mid = 0.5 * (edges[:-1] + edges[1:])
            xs.append((mid[:, None] + half[:, None] * nodes).reshape(-1))
            ws.append((half[:, None] * weights).reshape(-1))
        x = np.concatenate(xs)
        w = np.concatenate(ws) * self.pdf(x)
        k = np.arange(1, m + 1)
        arg = 2.0 * np.pi * np.outer(k, x)
        out = np.empty(1 + 2 * m)
        out[0] = w.sum()
        out[1::2] = math.sqrt(2.0) * (np.cos(arg) @ w)
        out[2::2] = math.sqrt(2.0) * (np.sin(arg) @ w)
        return out

    def __repr__(self):
        return f"TrueDensity({self.name})"


@dataclass
class ProcessSpec:
    kind: str = AR_BERNOULLI
    target: TrueDensity = field(default_factory=TrueDensity.linear)
    a: float = 0.5
    burn_in: int = DEFAULT_BURN_IN
    seed: int | None = None

    def __post_init__(self):
        if not isinstance(self.target, TrueDensity):
            self.target = TrueDensity.from_dict(self.target)
        if self.kind not in PROCESS_KINDS:
            raise ValueError(f"unknown process kind {self.kind!r} (expected one of {PROCESS_KINDS})")
        if self.kind == GAUSSIAN_AR1 and not abs(self.a) < 1.0:
            raise ValueError(f"AR coefficient must satisfy |a| < 1, got {self.a}")
        if self.burn_in < 64:
            raise ValueError(f"burn-in must be at least 64, got {self.burn_in}")

    @property
    def regime(self) -> str:
        return {IID: "independent", AR_BERNOULLI: "tau-mixing, not beta-mixing", GAUSSIAN_AR1: "beta-mixing"}[self.kind]

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "target": self.target.to_dict(),
            "a": self.a,
            "burn_in": self.burn_in,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> ProcessSpec:
        d = dict(d)
        target = TrueDensity.from_dict(d.pop("target", "linear"))
        unknown = set(d) - {"kind", "a", "burn_in", "seed"}
        if unknown:
            raise ValueError(f"unknown process keys: {sorted(unknown)}")
        return cls(target=target, **d)


def bernoulli_ar_recursion(x0: float, xi) -> np.ndarray:
    """Iterate ``X_t = (X_{t-1} + xi_t) / 2`` from ``X_0 = x0``; returns ``X_1..X_T``."""
    xi = np.asarray(xi, dtype=float)
    out, _ = lfilter([0.5], [1.0, -0.5], xi, axis=-1, zi=0.5 * np.asarray(x0, dtype=float)[..., None])
    return np.minimum(out, _BELOW_ONE)


def latent_uniform(spec: ProcessSpec, size, rng: np.random.Generator) -> np.ndarray:
    """Stationary latent chains with uniform marginal.

    ``size`` is ``n`` or ``(R, n)``; rows of a 2-d request are independent chains.
    """
    shape = (size,) if np.ndim(size) == 0 else tuple(size)
    *lead, n = shape
    if spec.kind == IID:
        return rng.random(shape)
    total = n + spec.burn_in
    if spec.kind == AR_BERNOULLI:
        x0 = rng.random(lead)
        xi = rng.integers(0, 2, size=(*lead, total), dtype=np.int8)
        return bernoulli_ar_recursion(x0, xi)[..., spec.burn_in:]
    a = spec.a
    scale = math.sqrt(1.0 - a * a)
    z0 = rng.standard_normal(lead) / scale
    eps = rng.standard_normal((*lead, total))
    z, _ = lfilter([1.0], [1.0, -a], eps, axis=-1, zi=(a * z0)[..., None])
    return np.minimum(ndtr(z[..., spec.burn_in:] * scale), _BELOW_ONE)


def simulate(spec: ProcessSpec, n: int, seed=None) -> np.ndarray:
    """Draw ``n`` consecutive observations of the process.

    ``seed`` overrides ``spec.seed``; anything ``numpy.random.default_rng``
    accepts is allowed.
    """
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    rng = np.random.default_rng(spec.seed if seed is None else seed)
    u = latent_uniform(spec, int(n), rng)
    return spec.target.ppf(u)


@dataclass(frozen=True)
class DamEstimate:
    value: float
    se: float
    replications: int

    def __float__(self):
        return self.value


def estimate_dam(spec: ProcessSpec, model: Model, q: int, R: int, seed=None) -> DamEstimate:
    """Monte-Carlo estimate of ``D_{A,m} = q sum_lambda Var(L_q psi_lambda(A_0))``.

    Draws ``R`` independent stationary blocks of length ``q``. The standard
    error treats the estimate as a mean of per-block squared deviations.
    """
    if R < 100:
        raise ValueError(f"need at least 100 replications, got {R}")
    rng = np.random.default_rng(spec.seed if seed is None else seed)
    R, q = int(R), int(q)
    chunks = [min(2048, R - start) for start in range(0, R, 2048)]
    means = np.concatenate(
        [model.block_means(spec.target.ppf(latent_uniform(spec, (size, q), rng))) for size in chunks]
    )
    dev2 = ((means - means.mean(axis=0)) ** 2).sum(axis=1) * (q * R / (R - 1))
    return DamEstimate(float(dev2.mean()), float(dev2.std(ddof=1) / math.sqrt(R)), R)


def risk_proxy(n: int, bias: float, dam: float) -> float:
    """``R_{A,m} = n ||s - s_m||^2 + 2 D_{A,m}``."""
    return max(0.0, n * bias) + 2.0 * max(0.0, dam)
