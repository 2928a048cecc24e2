"""From a terminal particle configuration to a cleaned binary mask.

Steps: single-linkage cluster extraction on final positions, a multi-level
mask holding each pixel's cluster-mean gray level, thresholding, then two
small-component passes (foreground specks first, background holes second).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional

import numba
import numpy as np
from scipy import ndimage

from .dsmc import RngStream, SimulationTrace, Snapshot, simulate
from .errors import DimensionError, DomainError
from .particles import ModelParams, ParticleSystem, system_from_image


@dataclass
class ClusterAssignment:
    labels: np.ndarray  # (N,) cluster id per particle, dense from 0
    means: np.ndarray  # (K,) mean feature per cluster
    sizes: np.ndarray  # (K,) particle count per cluster
    centers: np.ndarray  # (K, 2) mean final position per cluster

    @property
    def n_clusters(self) -> int:
        return len(self.sizes)


@numba.njit(cache=True)
def _find(parent, a):
    root = a
    while parent[root] != root:
        root = parent[root]
    while parent[a] != root:
        nxt = parent[a]
        parent[a] = root
        a = nxt
    return root


@numba.njit(cache=True)
def _link_cells(pts, order, starts, counts, cell_x, cell_y, ny, ukeys, reach, r):
    n_cells = starts.shape[0]
    parent = np.arange(n_cells)
    for a in range(n_cells):
        for ox in range(0, reach + 1):
            for oy in range(-reach, reach + 1):
                if ox == 0 and oy <= 0:
                    continue
                bx = cell_x[a] + ox
                by = cell_y[a] + oy
                if by < 0 or by >= ny:
                    continue
                key = bx * ny + by
                b = np.searchsorted(ukeys, key)
                if b >= n_cells or ukeys[b] != key:
                    continue
                ra = _find(parent, a)
                rb = _find(parent, b)
                if ra == rb:
                    continue
                linked = False
                for p in range(starts[a], starts[a] + counts[a]):
                    i = order[p]
                    for q in range(starts[b], starts[b] + counts[b]):
                        j = order[q]
                        if math.hypot(pts[i, 0] - pts[j, 0], pts[i, 1] - pts[j, 1]) <= r:
                            linked = True
                            break
                    if linked:
                        break
                if linked:
                    parent[ra] = rb
    for a in range(n_cells):
        parent[a] = _find(parent, a)
    return parent


def single_linkage_labels(points, r_merge: float) -> np.ndarray:
    """Connected components of the graph joining points at distance <= r_merge.

    Points are binned on a grid whose cell diagonal is just below
    ``r_merge``, so every cell is internally connected and only cells up to
    two apart need pairwise checks. Labels are dense from 0, numbered by the
    first point of each component.
    """
    if not r_merge > 0.0 or not math.isfinite(r_merge):
        raise DomainError(f"r_merge must be a positive finite number, got {r_merge}")
    pts = np.ascontiguousarray(points, dtype=np.float64).reshape(-1, 2)
    n = len(pts)
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    if not np.isfinite(pts).all():
        raise DomainError("particle positions must be finite")
    cell = r_merge / math.sqrt(2.0) * (1.0 - 1e-12)
    reach = int(math.ceil(r_merge / cell))
    lo = pts.min(axis=0)
    idx = np.floor((pts - lo) / cell).astype(np.int64)
    ny = int(idx[:, 1].max()) + 1
    keys = idx[:, 0] * ny + idx[:, 1]
    order = np.argsort(keys, kind="stable")
    ukeys, starts, counts = np.unique(keys[order], return_index=True, return_counts=True)
    root = _link_cells(pts, order, starts, counts, ukeys // ny, ukeys % ny, ny, ukeys, reach, r_merge)
    cell_of = np.empty(n, dtype=np.int64)
    cell_of[order] = np.repeat(np.arange(len(ukeys)), counts)
    raw = root[cell_of]
    _, first, dense = np.unique(raw, return_index=True, return_inverse=True)
    # renumber so component ids follow first appearance in particle order
    rank = np.empty(len(first), dtype=np.int64)
    rank[np.argsort(first, kind="stable")] = np.arange(len(first))
    return rank[dense.reshape(-1)]


def extract_clusters(final: ParticleSystem, r_merge: float) -> ClusterAssignment:
    labels = single_linkage_labels(final.positions, r_merge)
    k = int(labels.max()) + 1 if len(labels) else 0
    sizes = np.bincount(labels, minlength=k)
    means = np.bincount(labels, weights=final.features, minlength=k) / sizes
    cx = np.bincount(labels, weights=final.positions[:, 0], minlength=k) / sizes
    cy = np.bincount(labels, weights=final.positions[:, 1], minlength=k) / sizes
    return ClusterAssignment(labels, means, sizes, np.column_stack((cx, cy)))


def multilevel_mask(assignment: ClusterAssignment, system: ParticleSystem) -> np.ndarray:
    if len(assignment.labels) != len(system):
        raise DimensionError("cluster assignment does not cover every particle")
    out = np.zeros((system.height, system.width), dtype=np.float64)
    out[system.origins[:, 0], system.origins[:, 1]] = assignment.means[assignment.labels]
    return out


def binarize(mask, threshold: float = 0.5) -> np.ndarray:
    """Foreground where the multi-level value is >= threshold."""
    return np.asarray(mask, dtype=np.float64) >= threshold


class Components(NamedTuple):
    labels: np.ndarray  # 0 off-target, 1..K for components
    sizes: np.ndarray  # sizes[k - 1] is the pixel count of label k


def _structure(connectivity: int) -> np.ndarray:
    if connectivity not in (4, 8):
        raise DomainError(f"connectivity must be 4 or 8, got {connectivity}")
    return ndimage.generate_binary_structure(2, 1 if connectivity == 4 else 2)


def connected_components(mask, target: str = "foreground", connectivity: int = 8) -> Components:
    m = np.asarray(mask, dtype=bool)
    if target == "background":
        m = ~m
    elif target != "foreground":
        raise DomainError(f"target must be 'foreground' or 'background', got {target!r}")
    labels, n = ndimage.label(m, structure=_structure(connectivity))
    sizes = np.bincount(labels.ravel(), minlength=n + 1)[1:]
    return Components(labels, sizes)


def _drop_small(mask: np.ndarray, target: str, min_size: int, connectivity: int) -> np.ndarray:
    labels, sizes = connected_components(mask, target, connectivity)
    small = np.concatenate(([False], sizes < min_size))
    out = mask.copy()
    out[small[labels]] = target == "background"
    return out


def refine(mask, min_fg: int = 10, min_bg: int = 10, connectivity: int = 8) -> np.ndarray:
    """Remove foreground components smaller than ``min_fg``, then fill
    background components smaller than ``min_bg``."""
    m = np.asarray(mask, dtype=bool)
    m = _drop_small(m, "foreground", min_fg, connectivity)
    return _drop_small(m, "background", min_bg, connectivity)


@dataclass(frozen=True)
class PipelineConfig:
    """Post-processing options. ``r_merge=None`` means half of delta1."""

    r_merge: Optional[float] = None
    threshold: float = 0.5
    min_fg: int = 10
    min_bg: int = 10
    connectivity: int = 8

    def __post_init__(self):
        if self.r_merge is not None and not self.r_merge > 0.0:
            raise DomainError("r_merge must be positive")
        if not 0.0 < self.threshold < 1.0:
            raise DomainError("threshold must lie in (0, 1)")
        if self.min_fg < 1 or self.min_bg < 1:
            raise DomainError("min_fg and min_bg must be positive")
        _structure(self.connectivity)

    def merge_radius(self, params: ModelParams) -> float:
        r = self.r_merge if self.r_merge is not None else params.delta1 / 2.0
        if not r > 0.0:
            raise DomainError("merge radius is zero; set r_merge or use delta1 > 0")
        return r


@dataclass
class Segmentation:
    multilevel: np.ndarray
    binary: np.ndarray
    mask: np.ndarray  # binary mask after refinement
    clusters: ClusterAssignment
    final: ParticleSystem
    trace: SimulationTrace


def segment(
    image,
    params: ModelParams,
    rng: RngStream,
    config: PipelineConfig = PipelineConfig(),
    snapshot_every: int = 0,
    callback: Optional[Callable[[Snapshot], None]] = None,
) -> Segmentation:
    system = system_from_image(image)
    final, trace = simulate(system, params, rng, snapshot_every, store_positions=False, callback=callback)
    clusters = extract_clusters(final, config.merge_radius(params))
    multi = multilevel_mask(clusters, system)
    binary = binarize(multi, config.threshold)
    mask = refine(binary, config.min_fg, config.min_bg, config.connectivity)
    return Segmentation(multi, binary, mask, clusters, final, trace)
