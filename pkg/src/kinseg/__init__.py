"""Image segmentation by a feature-gated bounded-confidence particle model.

Each pixel becomes a particle at its grid position carrying its gray level.
Particles that are close in space and in gray level drift together, noise
keeps loose groups apart, and the clusters left at the final time are
turned into a binary mask.
"""

__version__ = "0.1.0"

from .dsmc import RngStream, SimulationTrace, Snapshot, dsmc_step, energy, simulate, sround
from .errors import (
    DimensionError,
    DomainError,
    KinsegError,
    MalformedHeaderError,
    NetpbmError,
    TruncatedDataError,
    UnsupportedMaxvalError,
)
from .masks import (
    ClusterAssignment,
    PipelineConfig,
    Segmentation,
    binarize,
    connected_components,
    extract_clusters,
    multilevel_mask,
    refine,
    segment,
)
from .metrics import MetricKind, all_metrics, confusion, f_beta, jaccard, loss, surface_dice, volumetric_dice
from .netpbm import read_image, read_mask, read_pgm, write_pgm
from .particles import DiffusionKind, ModelParams, Particle, ParticleSystem, system_from_image
from .search import OptResult, SearchSpace, Trial, optimize

__all__ = [
    "ClusterAssignment",
    "DiffusionKind",
    "DimensionError",
    "DomainError",
    "KinsegError",
    "MalformedHeaderError",
    "MetricKind",
    "ModelParams",
    "NetpbmError",
    "OptResult",
    "Particle",
    "ParticleSystem",
    "PipelineConfig",
    "RngStream",
    "SearchSpace",
    "Segmentation",
    "SimulationTrace",
    "Snapshot",
    "Trial",
    "TruncatedDataError",
    "UnsupportedMaxvalError",
    "all_metrics",
    "binarize",
    "confusion",
    "connected_components",
    "dsmc_step",
    "energy",
    "extract_clusters",
    "f_beta",
    "jaccard",
    "loss",
    "multilevel_mask",
    "optimize",
    "read_image",
    "read_mask",
    "read_pgm",
    "refine",
    "segment",
    "simulate",
    "sround",
    "surface_dice",
    "system_from_image",
    "volumetric_dice",
    "write_pgm",
]
