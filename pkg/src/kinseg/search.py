"""Seeded random search over (delta1, delta2, sigma2)."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .dsmc import RngStream
from .errors import DimensionError, DomainError
from .masks import PipelineConfig, segment
from .metrics import MetricKind, loss
from .particles import DiffusionKind, ModelParams

log = logging.getLogger(__name__)

DEFAULT_ITERATIONS = 300


@dataclass(frozen=True)
class SearchSpace:
    """Priors: delta1 ~ U(lo, hi), delta2 ~ U(lo, hi), sigma2 ~ logU(lo, hi).

    ``delta1_lo=None`` resolves to the horizontal pixel spacing of the image
    being segmented (see :meth:`for_width`).
    """

    delta1_lo: Optional[float] = None
    delta1_hi: float = 0.7
    delta2_lo: float = 0.05
    delta2_hi: float = 0.3
    sigma2_lo: float = math.exp(-5.0)
    sigma2_hi: float = 1.0

    def __post_init__(self):
        lo1 = 0.0 if self.delta1_lo is None else self.delta1_lo
        if not (0.0 <= lo1 < self.delta1_hi):
            raise DomainError("delta1 bounds must satisfy 0 <= lo < hi")
        if not (0.0 <= self.delta2_lo < self.delta2_hi):
            raise DomainError("delta2 bounds must satisfy 0 <= lo < hi")
        if not (0.0 < self.sigma2_lo < self.sigma2_hi):
            raise DomainError("sigma2 bounds must satisfy 0 < lo < hi")

    def for_width(self, width: int) -> "SearchSpace":
        if self.delta1_lo is not None:
            return self
        if width < 2:
            raise DimensionError("image width must be at least 2")
        return SearchSpace(2.0 / (width - 1), self.delta1_hi, self.delta2_lo, self.delta2_hi,
                           self.sigma2_lo, self.sigma2_hi)


def sample_params(space: SearchSpace, rng: RngStream) -> tuple[float, float, float]:
    if space.delta1_lo is None:
        raise DomainError("delta1 lower bound unresolved; call SearchSpace.for_width first")
    g = rng.generator
    d1 = g.uniform(space.delta1_lo, space.delta1_hi)
    d2 = g.uniform(space.delta2_lo, space.delta2_hi)
    s2 = math.exp(g.uniform(math.log(space.sigma2_lo), math.log(space.sigma2_hi)))
    return float(d1), float(d2), float(s2)


@dataclass
class Trial:
    index: int
    delta1: float
    delta2: float
    sigma2: float
    loss: float
    metric_value: float
    wall_time: float = 0.0
    error: Optional[str] = None


@dataclass
class OptResult:
    best: Trial
    trials: list[Trial] = field(default_factory=list)
    seed: int = 0

    def running_best(self) -> np.ndarray:
        return np.minimum.accumulate([t.loss for t in self.trials])


def evaluate_trial(
    image,
    truth,
    params: ModelParams,
    config: PipelineConfig,
    metric: MetricKind,
    rng: RngStream,
    index: int = 0,
) -> Trial:
    """Segment ``image`` with ``params`` and score it against ``truth``.

    Any failure inside the pipeline yields a worst-case trial (loss 1) that
    carries the error text, so a long search is never aborted.
    """
    start = time.perf_counter()
    truth = np.asarray(truth, dtype=bool)
    if np.shape(image) != truth.shape:
        raise DimensionError(f"image {np.shape(image)} and truth {truth.shape} differ in shape")
    try:
        seg = segment(image, params, rng, config)
        value = metric(seg.mask, truth)
        trial = Trial(index, params.delta1, params.delta2, params.sigma2, loss(value), value)
    except Exception as exc:  # noqa: BLE001 - a failed trial must not end the search
        log.warning("trial %d failed: %s", index, exc)
        trial = Trial(index, params.delta1, params.delta2, params.sigma2, 1.0, 0.0, error=repr(exc))
    trial.wall_time = time.perf_counter() - start
    return trial


def optimize(
    image,
    truth,
    metric: MetricKind = MetricKind(),
    iterations: int = DEFAULT_ITERATIONS,
    seed: int = 0,
    *,
    space: SearchSpace = SearchSpace(),
    diffusion: DiffusionKind | str = DiffusionKind.D1,
    epsilon: float = 0.01,
    horizon: float = 300.0,
    config: PipelineConfig = PipelineConfig(),
    progress=None,
) -> OptResult:
    """Random search minimising ``1 - metric``.

    Parameters are drawn from one stream seeded with ``seed``; trial ``k``
    simulates with an independent stream derived from ``(seed, k)``. The best
    trial is the lowest loss, ties going to the earlier trial.
    """
    if iterations < 1:
        raise DomainError("iterations must be at least 1")
    image = np.asarray(image, dtype=np.float64)
    space = space.for_width(image.shape[1])
    sampler = RngStream(seed)
    trials = []
    for k in range(iterations):
        d1, d2, s2 = sample_params(space, sampler)
        params = ModelParams(d1, d2, s2, diffusion, epsilon, horizon)
        trial = evaluate_trial(image, truth, params, config, metric, RngStream.derived(seed, k), k)
        trials.append(trial)
        if progress is not None:
            progress(trial)
    best = min(trials, key=lambda t: (t.loss, t.index))
    return OptResult(best, trials, seed)
