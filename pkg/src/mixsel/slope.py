"""Slope algorithm: sweep a penalty constant, find the complexity jump, select at twice the jump.

For each ``K`` on a grid the model ``m_hat(K)`` minimizes
``contrast_m + K * Delta_m``. The jump ``K_tilde`` is read off the path of
``Delta_{m_hat(K)}`` and the final model is ``m_hat(2 K_tilde)``.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass

import numpy as np

from .selection import CriterionRow, SelectionReport, argmin_tiebreak, select_model

PEN_W_UNIT = "pen_w_unit"
DIMENSION = "dimension"
DELTA_MEASURES = (PEN_W_UNIT, DIMENSION)


class NoJumpError(ValueError):
    """The complexity path never drops, so there is no jump to detect."""


def default_grid() -> np.ndarray:
    return parse_grid("0:4:0.05")


def parse_grid(spec: str) -> np.ndarray:
    """``"start:stop:step"`` with both ends included, e.g. ``"0:4:0.05"`` gives 81 points."""
    try:
        start, stop, step = (float(v) for v in spec.split(":"))
    except ValueError:
        raise ValueError(f"grid must look like start:stop:step, got {spec!r}") from None
    if step <= 0 or stop < start:
        raise ValueError(f"bad grid {spec!r}")
    count = int(round((stop - start) / step)) + 1
    return start + step * np.arange(count)


@dataclass
class SlopePath:
    K: np.ndarray
    selected: np.ndarray
    delta: np.ndarray
    dims: np.ndarray
    models: list
    measure: str = PEN_W_UNIT

    def rows(self):
        for k, sel, d in zip(self.K, self.selected, self.delta):
            m = self.models[sel]
            yield {"K": float(k), "model": getattr(m, "m", m), "delta": float(d)}

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=["K", "model", "delta"])
            writer.writeheader()
            writer.writerows(self.rows())


def _unpack(rows):
    models, contrast, delta, dims = [], [], [], []
    for item in rows:
        if isinstance(item, CriterionRow):
            model, c, d, dim = item.model, item.contrast, item.pen, item.dim
        elif len(item) == 4:
            model, c, d, dim = item
        else:
            model, c, d = item
            dim = model.dim
        models.append(model)
        contrast.append(float(c))
        delta.append(float(d))
        dims.append(int(dim))
    return models, np.array(contrast), np.array(delta), np.array(dims)


def _select_at(contrast, delta, dims, K) -> int:
    return argmin_tiebreak(contrast + K * delta, dims)


def complexity_path(rows, K_grid, measure: str = PEN_W_UNIT) -> SlopePath:
    """``Delta_{m_hat(K)}`` along ``K_grid``; rows are ``(model, contrast, Delta_m)``."""
    K = np.asarray(K_grid, dtype=float).reshape(-1)
    if K.size == 0:
        raise ValueError("empty K grid")
    if np.any(np.diff(K) <= 0) or K[0] < 0:
        raise ValueError("K grid must be ascending and nonnegative")
    if measure not in DELTA_MEASURES:
        raise ValueError(f"unknown complexity measure {measure!r}")
    models, contrast, delta, dims = _unpack(rows)
    if not models:
        raise ValueError("no candidate models")
    if np.any(delta < 0):
        raise ValueError("complexities must be nonnegative")
    sel = np.array([_select_at(contrast, delta, dims, k) for k in K])
    return SlopePath(K, sel, delta[sel], dims[sel], models, measure)


def detect_jump(path: SlopePath) -> float:
    """Right end of the grid step with the largest drop of ``Delta_{m_hat(K)}``.

    Ties go to the smallest ``K``. Raises :class:`NoJumpError` on a path
    that never drops.
    """
    if path.K.size == 0:
        raise ValueError("empty path")
    drops = path.delta[:-1] - path.delta[1:]
    if drops.size == 0 or not np.any(drops > 0):
        raise NoJumpError("complexity path is flat")
    return float(path.K[int(np.argmax(drops)) + 1])


def slope_select(rows, K_grid=None, measure: str = PEN_W_UNIT, risks=None) -> SelectionReport:
    """Run the path, detect the jump and select with ``pen = 2 K_tilde Delta_m``.

    Without a jump, ``K_tilde`` falls back to the grid midpoint and a warning
    is issued. ``risks`` (one per row) lets the report carry oracle data.
    """
    K_grid = default_grid() if K_grid is None else np.asarray(K_grid, dtype=float)
    rows = list(rows)
    path = complexity_path(rows, K_grid, measure)
    try:
        k_tilde = detect_jump(path)
        jump_found = True
    except NoJumpError:
        k_tilde = float(0.5 * (path.K[0] + path.K[-1]))
        jump_found = False
        warnings.warn(f"no complexity jump on the grid; using K_tilde = {k_tilde}", stacklevel=2)
    models, contrast, delta, dims = _unpack(rows)
    final_rows = []
    for i, mod in enumerate(models):
        row = CriterionRow(mod, int(dims[i]), float(contrast[i]), float(2.0 * k_tilde * delta[i]))
        if risks is not None:
            row.risk = float(risks[i])
        final_rows.append(row)
    report = select_model(final_rows)
    report.meta.update({"k_tilde": k_tilde, "jump_found": jump_found, "final_K": 2.0 * k_tilde, "measure": measure})
    report.path = path
    return report
