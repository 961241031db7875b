"""Odd-block partition of a sample and the block empirical process.

With ``p`` blocks of length ``q`` the blocks are ``I_k = {2kq+1, ..., (2k+1)q}``
(1-based), so every other stretch of ``q`` observations is skipped and only
``pq`` points enter any statistic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .basis import Model, eval_basis


@dataclass(frozen=True)
class BlockScheme:
    n: int
    p: int
    q: int

    def __post_init__(self):
        if self.q < 1 or self.p < 2:
            raise ValueError(f"need q >= 1 and p >= 2, got p={self.p}, q={self.q}")
        if 2 * self.p * self.q > self.n:
            raise ValueError(f"2pq = {2 * self.p * self.q} exceeds n = {self.n}")

    @property
    def n_used(self) -> int:
        return 2 * self.p * self.q

    @property
    def n_discarded(self) -> int:
        return self.n - self.n_used

    def block(self, k: int) -> list[int]:
        """1-based indices of block ``I_k``."""
        if not 0 <= k < self.p:
            raise IndexError(k)
        start = 2 * k * self.q + 1
        return list(range(start, start + self.q))

    @property
    def index_sets(self) -> list[list[int]]:
        return [self.block(k) for k in range(self.p)]

    @property
    def asymptotic_p_range(self) -> tuple[float, float]:
        """The range ``[sqrt(n) ln(n)^2 / 2, sqrt(n) ln(n)^2]`` the theory asks p to lie in."""
        hi = math.sqrt(self.n) * math.log(self.n) ** 2
        return hi / 2, hi

    @property
    def asymptotic_p_range_satisfiable(self) -> bool:
        lo, hi = self.asymptotic_p_range
        return math.ceil(lo) <= min(math.floor(hi), self.n // 2)

    @property
    def p_in_asymptotic_range(self) -> bool:
        lo, hi = self.asymptotic_p_range
        return lo <= self.p <= hi

    def to_dict(self) -> dict:
        lo, hi = self.asymptotic_p_range
        return {
            "n": self.n,
            "p": self.p,
            "q": self.q,
            "n_discarded": self.n_discarded,
            "asymptotic_p_range": [lo, hi],
            "asymptotic_p_range_satisfiable": self.asymptotic_p_range_satisfiable,
            "p_in_asymptotic_range": self.p_in_asymptotic_range,
        }


def default_block_length(n: int) -> int:
    return max(1, math.floor(math.sqrt(n) / (2.0 * math.log(n) ** 2)))


def make_blocks(n: int, q: int | None = None) -> BlockScheme:
    """Partition ``n`` observations into ``p`` odd blocks of length ``q``.

    Without ``q`` the block length follows ``q = n / (2p)`` with ``p`` at the
    top of the asymptotic range, which is 1 at any practical ``n``. Tail
    points beyond ``2pq`` are dropped.
    """
    n = int(n)
    if n < 8:
        raise ValueError(f"need n >= 8 to form blocks, got {n}")
    if q is None:
        q = default_block_length(n)
    q = int(q)
    if q < 1:
        raise ValueError(f"block length must be positive, got {q}")
    p = n // (2 * q)
    if p < 2:
        raise ValueError(f"block length q={q} leaves fewer than 2 blocks for n={n}")
    return BlockScheme(n, p, q)


def validate_sample(x) -> np.ndarray:
    x = np.array(x, dtype=float).reshape(-1)
    if not np.all(np.isfinite(x)):
        raise ValueError("sample contains non-finite values")
    if x.size and (x.min() < 0.0 or x.max() >= 1.0):
        raise ValueError("sample values must lie in [0, 1)")
    x.setflags(write=False)
    return x


@dataclass(frozen=True, eq=False)
class BlockedSample:
    x: np.ndarray
    scheme: BlockScheme

    def __post_init__(self):
        x = validate_sample(self.x)
        if x.size != self.scheme.n:
            raise ValueError(f"sample has {x.size} points but the scheme expects {self.scheme.n}")
        object.__setattr__(self, "x", x)

    @classmethod
    def from_array(cls, x, q: int | None = None) -> BlockedSample:
        x = validate_sample(x)
        return cls(x, make_blocks(x.size, q))

    @classmethod
    def from_blocks(cls, blocks) -> BlockedSample:
        """Build a sample whose odd blocks hold the rows of a ``(p, q)`` array.

        The skipped gap positions are filled with a copy of the preceding
        block; no statistic reads them.
        """
        blocks = np.asarray(blocks, dtype=float)
        if blocks.ndim == 1:
            blocks = blocks[:, None]
        p, q = blocks.shape
        x = np.concatenate([blocks, blocks], axis=1).reshape(-1)
        return cls(x, BlockScheme(2 * p * q, p, q))

    @property
    def blocks(self) -> np.ndarray:
        """The ``(p, q)`` array of observations in ``I_0, ..., I_{p-1}``."""
        p, q = self.scheme.p, self.scheme.q
        return self.x[: 2 * p * q].reshape(p, 2 * q)[:, :q]

    def mean_matrix(self, model: Model) -> np.ndarray:
        """``(p, dim)`` matrix of block means for every label of ``model``."""
        return model.block_means(self.blocks)


def block_means(sample: BlockedSample, model: Model, lam) -> np.ndarray:
    """``L_q psi_lambda(A_i)`` for ``i = 0..p-1``."""
    return eval_basis(model, lam, sample.blocks).mean(axis=1)


def block_empirical(sample: BlockedSample, model: Model, lam) -> float:
    """``P_A psi_lambda``, the mean of the block means."""
    return float(block_means(sample, model, lam).mean())
