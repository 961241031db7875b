"""Model collections on [0, 1): regular histograms, Fourier spaces, Haar wavelets.

Every model carries an ordered tuple of basis labels. For the Fourier and
Haar collections the labels of a model are a prefix of the labels of every
larger model, so coefficients computed once for the largest model can be
sliced for all the others.

Label conventions
-----------------
histogram     ``k`` for ``sqrt(d) * 1[k/d, (k+1)/d)``
fourier       ``0`` for the constant, ``(1, k)`` for ``sqrt(2) cos(2 pi k x)``,
              ``(2, k)`` for ``sqrt(2) sin(2 pi k x)``
wavelet-haar  ``(0, k)`` for ``sqrt(2) phi(2x - k)`` and ``(j, k)``, ``j >= 1``,
              for ``2^(j/2) psi(2^j x - k)``
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

HISTOGRAM = "histogram"
FOURIER = "fourier"
HAAR = "wavelet-haar"
KINDS = (HISTOGRAM, FOURIER, HAAR)

_ALIASES = {"haar": HAAR, "wavelet": HAAR, "hist": HISTOGRAM, "histograms": HISTOGRAM}

DEFAULT_CAP = 512


def normalize_kind(kind: str) -> str:
    k = _ALIASES.get(kind.lower(), kind.lower())
    if k not in KINDS:
        raise ValueError(f"unknown collection kind: {kind!r} (expected one of {KINDS})")
    return k


def _histogram_labels(d: int) -> tuple:
    return tuple(range(d))


def _fourier_labels(m: int) -> tuple:
    labels: list = [0]
    for k in range(1, m + 1):
        labels.extend([(1, k), (2, k)])
    return tuple(labels)


def _haar_labels(level: int) -> tuple:
    labels = [(0, 0), (0, 1)]
    for j in range(1, level + 1):
        labels.extend((j, k) for k in range(2**j))
    return tuple(labels)


def _haar_mother(y: np.ndarray) -> np.ndarray:
    return np.where((y >= 0.0) & (y < 0.5), 1.0, np.where((y >= 0.5) & (y < 1.0), -1.0, 0.0))


def _haar_father(y: np.ndarray) -> np.ndarray:
    return np.where((y >= 0.0) & (y < 1.0), 1.0, 0.0)


def _histogram_bin(x: np.ndarray, d: int) -> np.ndarray:
    # x*d can round up to d for x just below 1
    return np.minimum(np.floor(x * d).astype(np.int64), d - 1)


@dataclass(frozen=True, eq=False)
class Model:
    """One finite-dimensional space of a collection.

    ``m`` is the complexity index: the bin count ``d`` for histograms, the
    largest harmonic for Fourier spaces and the finest level ``J_m`` for Haar.
    """

    kind: str
    m: int
    labels: tuple = field(repr=False)

    @property
    def dim(self) -> int:
        return len(self.labels)

    @property
    def b2(self) -> float:
        return sup_norm_bound(self)

    @cached_property
    def _index(self) -> dict:
        return {lab: i for i, lab in enumerate(self.labels)}

    def label_index(self, lam) -> int:
        key = tuple(lam) if isinstance(lam, (list, np.ndarray)) else lam
        try:
            return self._index[key]
        except (KeyError, TypeError):
            raise ValueError(f"label {lam!r} is not in model {self.kind}:{self.m}") from None

    def __eq__(self, other):
        if not isinstance(other, Model):
            return NotImplemented
        return self.kind == other.kind and self.m == other.m

    def __hash__(self):
        return hash((self.kind, self.m))

    def to_dict(self) -> dict:
        return {"m": self.m, "dim": self.dim, "b2": self.b2}

    def design(self, x) -> np.ndarray:
        """Matrix of ``psi_lambda(x_i)``, shape ``(len(x), dim)``, labels in order."""
        x = np.asarray(x, dtype=float).reshape(-1)
        if self.kind == HISTOGRAM:
            out = np.zeros((x.size, self.dim))
            out[np.arange(x.size), _histogram_bin(x, self.m)] = np.sqrt(self.m)
            return out
        if self.kind == FOURIER:
            k = np.arange(1, self.m + 1)
            arg = 2.0 * np.pi * np.outer(x, k)
            out = np.empty((x.size, self.dim))
            out[:, 0] = 1.0
            out[:, 1::2] = np.sqrt(2.0) * np.cos(arg)
            out[:, 2::2] = np.sqrt(2.0) * np.sin(arg)
            return out
        return np.column_stack([eval_basis(self, lab, x) for lab in self.labels])

    def block_means(self, blocks) -> np.ndarray:
        """Block averages ``(1/q) sum_l psi_lambda(x_l)`` for a ``(p, q)`` array.

        Returns a ``(p, dim)`` matrix. Histogram and Haar models are computed
        by bin counting, so the cost does not grow with ``p * q * dim``.
        """
        blocks = np.asarray(blocks, dtype=float)
        if blocks.ndim != 2:
            raise ValueError("blocks must be a 2-d (p, q) array")
        p, q = blocks.shape
        rows = np.repeat(np.arange(p), q)
        x = blocks.reshape(-1)
        if self.kind == HISTOGRAM:
            d = self.m
            counts = np.bincount(rows * d + _histogram_bin(x, d), minlength=p * d)
            return counts.reshape(p, d) * (np.sqrt(d) / q)
        if self.kind == HAAR:
            out = np.empty((p, self.dim))
            cells = _histogram_bin(x, 2)
            counts = np.bincount(rows * 2 + cells, minlength=2 * p)
            out[:, :2] = counts.reshape(p, 2) * (np.sqrt(2.0) / q)
            start = 2
            for j in range(1, self.m + 1):
                width = 2**j
                fine = _histogram_bin(x, 2 * width)
                sign = 1.0 - 2.0 * (fine & 1)
                sums = np.bincount(rows * width + (fine >> 1), weights=sign, minlength=p * width)
                out[:, start:start + width] = sums.reshape(p, width) * (2.0 ** (j / 2) / q)
                start += width
            return out
        return self.design(x).reshape(p, q, self.dim).mean(axis=1)


@dataclass(frozen=True)
class ModelCollection:
    kind: str
    models: tuple

    def __len__(self) -> int:
        return len(self.models)

    def __iter__(self):
        return iter(self.models)

    def __getitem__(self, i) -> Model:
        return self.models[i]

    @property
    def nested(self) -> bool:
        """Whether the *spans* are nested (regular histograms are not: S_2 is not in S_3)."""
        return self.kind != HISTOGRAM

    @property
    def largest(self) -> Model:
        return max(self.models, key=lambda mod: mod.dim)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "models": [mod.to_dict() for mod in self.models]}

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def make_model(kind: str, m: int) -> Model:
    kind = normalize_kind(kind)
    if m < 1:
        raise ValueError(f"model index must be >= 1, got {m}")
    if kind == HISTOGRAM:
        return Model(kind, m, _histogram_labels(m))
    if kind == FOURIER:
        return Model(kind, m, _fourier_labels(m))
    return Model(kind, m, _haar_labels(m))


def enumerate_models(kind: str, n: int, cap: int = DEFAULT_CAP, max_level: int | None = None) -> ModelCollection:
    """Build the collection used for a sample of size ``n``.

    Histograms use ``d = 1..min(n // 2, cap)``, Fourier spaces
    ``m = 1..min(n // 2, cap)`` and Haar spaces ``J_m = 1..floor(log2 n)``,
    optionally truncated at ``max_level``.
    """
    kind = normalize_kind(kind)
    n = int(n)
    if n < 4:
        raise ValueError(f"need n >= 4 to build a collection, got {n}")
    if kind == HAAR:
        top = n.bit_length() - 1
        if max_level is not None:
            top = min(top, int(max_level))
    else:
        top = min(n // 2, int(cap))
    if top < 1:
        raise ValueError("collection would be empty")
    return ModelCollection(kind, tuple(make_model(kind, m) for m in range(1, top + 1)))


def eval_basis(model: Model, lam, x):
    """Evaluate ``psi_lambda`` at ``x`` (scalar or array)."""
    model.label_index(lam)
    scalar = np.ndim(x) == 0
    x = np.asarray(x, dtype=float)
    if model.kind == HISTOGRAM:
        d = model.m
        val = np.where(_histogram_bin(x, d) == lam, np.sqrt(d), 0.0)
    elif model.kind == FOURIER:
        if lam == 0:
            val = np.ones_like(x)
        else:
            kind, k = lam
            trig = np.cos if kind == 1 else np.sin
            val = np.sqrt(2.0) * trig(2.0 * np.pi * k * x)
    else:
        j, k = lam
        if j == 0:
            val = np.sqrt(2.0) * _haar_father(2.0 * x - k)
        else:
            val = 2.0 ** (j / 2) * _haar_mother(2.0**j * x - k)
    return float(val) if scalar else val


def sup_norm_bound(model: Model) -> float:
    """``b_m^2 = sup_x sum_lambda psi_lambda(x)^2``."""
    if model.kind == HISTOGRAM:
        return float(model.m)
    if model.kind == FOURIER:
        return float(1 + 2 * model.m)
    return float(2 ** (model.m + 1))
