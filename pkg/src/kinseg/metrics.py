"""Binary segmentation metrics: overlap scores, border-region Surface Dice,
F-beta and the ``1 - metric`` loss.

Degenerate 0/0 ratios (nothing predicted and nothing to predict) score 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import DimensionError, DomainError


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


def _pair(pred, truth) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(pred, dtype=bool)
    t = np.asarray(truth, dtype=bool)
    if p.shape != t.shape:
        raise DimensionError(f"mask shapes differ: {p.shape} vs {t.shape}")
    return p, t


def confusion(pred, truth) -> ConfusionCounts:
    p, t = _pair(pred, truth)
    tp = int(np.count_nonzero(p & t))
    fp = int(np.count_nonzero(p & ~t))
    fn = int(np.count_nonzero(~p & t))
    return ConfusionCounts(tp, fp, fn, p.size - tp - fp - fn)


def _ratio(num, den) -> float:
    return 1.0 if den == 0 else num / den


def volumetric_dice(c: ConfusionCounts) -> float:
    return _ratio(2.0 * c.tp, 2.0 * c.tp + c.fp + c.fn)


def jaccard(c: ConfusionCounts) -> float:
    return _ratio(float(c.tp), float(c.tp) + c.fp + c.fn)


def precision(c: ConfusionCounts) -> float:
    return _ratio(float(c.tp), float(c.tp) + c.fp)


def sensitivity(c: ConfusionCounts) -> float:
    return _ratio(float(c.tp), float(c.tp) + c.fn)


def f_beta(c: ConfusionCounts, beta: float) -> float:
    """(b^2 + 1) PPV TPR / (b^2 PPV + TPR), evaluated in count form.

    After cancelling TP this is (b^2 + 1) TP / ((b^2 + 1) TP + FP + b^2 FN),
    which agrees with the precision/sensitivity form wherever that one is
    defined and reduces to the Dice expression term by term when beta = 1.
    """
    if not beta > 0.0:
        raise DomainError(f"beta must be positive, got {beta}")
    b2 = float(beta) * float(beta)
    num = (b2 + 1.0) * c.tp
    return _ratio(num, num + c.fp + b2 * c.fn)


def boundary(mask) -> np.ndarray:
    """Foreground pixels with at least one background 4-neighbour; the image
    frame counts as background."""
    m = np.pad(np.asarray(mask, dtype=bool), 1, constant_values=False)
    interior = m[1:-1, 1:-1] & m[:-2, 1:-1] & m[2:, 1:-1] & m[1:-1, :-2] & m[1:-1, 2:]
    return m[1:-1, 1:-1] & ~interior


def border_region(mask, tau: float) -> np.ndarray:
    """Pixels whose centre lies within Euclidean distance ``tau`` (pixels) of
    a boundary pixel.

    Distances come from an exact EDT; the comparison is done on integer
    squared offsets so no rounding enters the membership test.
    """
    if not tau >= 0.0:
        raise DomainError(f"tau must be non-negative, got {tau}")
    edge = boundary(mask)
    if not edge.any():
        return np.zeros_like(edge)
    _, (ri, ci) = ndimage.distance_transform_edt(~edge, return_distances=True, return_indices=True)
    rows, cols = np.indices(edge.shape)
    d2 = (rows - ri) ** 2 + (cols - ci) ** 2
    return d2 <= tau * tau


def surface_dice(pred, truth, tau: float = 1.0) -> float:
    p, t = _pair(pred, truth)
    bp = border_region(p, tau)
    bt = border_region(t, tau)
    inter = np.count_nonzero(bp & bt)
    return _ratio(2.0 * inter, float(np.count_nonzero(bp)) + np.count_nonzero(bt))


def loss(metric_value: float) -> float:
    if not 0.0 <= metric_value <= 1.0:
        raise DomainError(f"metric value must lie in [0, 1], got {metric_value}")
    return 1.0 - metric_value


METRIC_NAMES = ("dice", "jaccard", "surface-dice", "fbeta", "precision", "sensitivity")


@dataclass(frozen=True)
class MetricKind:
    """Metric selector. ``tau`` applies to surface-dice, ``beta`` to fbeta."""

    name: str = "dice"
    tau: float = 1.0
    beta: float = 1.0

    def __post_init__(self):
        name = self.name.lower().replace("_", "-")
        aliases = {"volumetric-dice": "dice", "surface": "surface-dice", "f-beta": "fbeta", "jac": "jaccard"}
        name = aliases.get(name, name)
        if name not in METRIC_NAMES:
            raise DomainError(f"unknown metric {self.name!r}")
        if not self.tau >= 0.0:
            raise DomainError("tau must be non-negative")
        if not self.beta > 0.0:
            raise DomainError("beta must be positive")
        object.__setattr__(self, "name", name)

    def __call__(self, pred, truth) -> float:
        if self.name == "surface-dice":
            return surface_dice(pred, truth, self.tau)
        c = confusion(pred, truth)
        if self.name == "dice":
            return volumetric_dice(c)
        if self.name == "jaccard":
            return jaccard(c)
        if self.name == "fbeta":
            return f_beta(c, self.beta)
        if self.name == "precision":
            return precision(c)
        return sensitivity(c)


def all_metrics(pred, truth, tau: float = 1.0, beta: float = 1.0) -> dict[str, float]:
    c = confusion(pred, truth)
    return {
        "dice": volumetric_dice(c),
        "jaccard": jaccard(c),
        "surface_dice": surface_dice(pred, truth, tau),
        "fbeta": f_beta(c, beta),
        "precision": precision(c),
        "sensitivity": sensitivity(c),
        "tp": c.tp,
        "fp": c.fp,
        "fn": c.fn,
        "tn": c.tn,
    }
