"""Pixels as particles: domain types, the bounded-confidence kernel and the
diffusion-function family."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, DomainError


class DiffusionKind(str, enum.Enum):
    """Feature-dependent diffusion weight D(c).

    ``CONSTANT`` (D = 1) runs the feature-free model through the same solver.
    """

    D1 = "d1"
    D2 = "d2"
    D3 = "d3"
    D4 = "d4"
    CONSTANT = "const"

    @classmethod
    def parse(cls, value: "DiffusionKind | str") -> "DiffusionKind":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        if key in ("constant", "none"):
            key = "const"
        try:
            return cls(key)
        except ValueError:
            choices = ", ".join(k.value for k in cls)
            raise DomainError(f"unknown diffusion kind {value!r} (choose from {choices})") from None


def diffusion_array(kind: DiffusionKind | str, c) -> np.ndarray:
    """Vectorised D(c); raises DomainError if any value is outside [0, 1]."""
    kind = DiffusionKind.parse(kind)
    c = np.asarray(c, dtype=np.float64)
    if c.size and (np.isnan(c).any() or c.min() < 0.0 or c.max() > 1.0):
        raise DomainError("diffusion functions are defined on c in [0, 1]")
    if kind is DiffusionKind.D1:
        return c * (1.0 - c)
    if kind is DiffusionKind.D2:
        return 4.0 * c**2 * (1.0 - c) ** 2
    if kind is DiffusionKind.D3:
        return np.where(c <= 0.5, c / 2.0, (c / 2.0) * (1.0 - c))
    if kind is DiffusionKind.D4:
        return 64.0 * c**4 * (1.0 - c) ** 4
    return np.ones_like(c)


def diffusion_value(kind: DiffusionKind | str, c: float) -> float:
    return float(diffusion_array(kind, c))


@dataclass(frozen=True)
class ModelParams:
    """Parameters of the feature-gated consensus dynamics.

    Attributes
    ----------
    delta1 : float
        Spatial confidence bound, in scaled [-1, 1] coordinates.
    delta2 : float
        Gray-level confidence bound.
    sigma2 : float
        Diffusion weight.
    diffusion : DiffusionKind
        Which D(c) multiplies ``sigma2``.
    epsilon : float
        Time step, strictly inside (0, 1).
    horizon : float
        Final time T. ``horizon == 0`` gives a zero-step run.
    """

    delta1: float
    delta2: float
    sigma2: float
    diffusion: DiffusionKind = DiffusionKind.D1
    epsilon: float = 0.01
    horizon: float = 300.0

    def __post_init__(self):
        object.__setattr__(self, "diffusion", DiffusionKind.parse(self.diffusion))
        for name in ("delta1", "delta2", "sigma2", "horizon"):
            value = float(getattr(self, name))
            if not math.isfinite(value) or value < 0.0:
                raise DomainError(f"{name} must be a finite non-negative number, got {value}")
            object.__setattr__(self, name, value)
        eps = float(self.epsilon)
        if not 0.0 < eps < 1.0:
            raise DomainError(f"epsilon must lie in (0, 1), got {eps}")
        object.__setattr__(self, "epsilon", eps)

    @property
    def n_steps(self) -> int:
        return int(round(self.horizon / self.epsilon))

    def replace(self, **changes) -> "ModelParams":
        values = {
            "delta1": self.delta1,
            "delta2": self.delta2,
            "sigma2": self.sigma2,
            "diffusion": self.diffusion,
            "epsilon": self.epsilon,
            "horizon": self.horizon,
        }
        values.update(changes)
        return ModelParams(**values)


@dataclass(frozen=True)
class Particle:
    position: tuple[float, float]
    feature: float
    origin: tuple[int, int] = (0, 0)


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ParticleSystem:
    """N particles stored column-wise.

    ``positions`` is (N, 2) with columns (x, y); ``origins`` is (N, 2) with
    columns (row, col) of the source pixel. Arrays are read-only; every
    operation returns a new system.
    """

    positions: np.ndarray
    features: np.ndarray
    origins: np.ndarray
    width: int
    height: int

    def __post_init__(self):
        pos = np.array(self.positions, dtype=np.float64, copy=True).reshape(-1, 2)
        feat = np.array(self.features, dtype=np.float64, copy=True).reshape(-1)
        orig = np.array(self.origins, dtype=np.int64, copy=True).reshape(-1, 2)
        if not (len(pos) == len(feat) == len(orig)):
            raise DimensionError("positions, features and origins must have the same length")
        if self.width < 1 or self.height < 1:
            raise DimensionError("width and height must be positive")
        if len(orig) and (
            orig[:, 0].min() < 0
            or orig[:, 0].max() >= self.height
            or orig[:, 1].min() < 0
            or orig[:, 1].max() >= self.width
        ):
            raise DimensionError("origin indices fall outside the source raster")
        object.__setattr__(self, "positions", _frozen(pos))
        object.__setattr__(self, "features", _frozen(feat))
        object.__setattr__(self, "origins", _frozen(orig))

    def __len__(self) -> int:
        return len(self.features)

    def __getitem__(self, k: int) -> Particle:
        x, y = self.positions[k]
        r, c = self.origins[k]
        return Particle((float(x), float(y)), float(self.features[k]), (int(r), int(c)))

    @property
    def particles(self) -> list[Particle]:
        return [self[k] for k in range(len(self))]

    @property
    def spacing(self) -> tuple[float, float]:
        """Initial lattice spacing (horizontal, vertical) in scaled units."""
        dx = 2.0 / (self.width - 1) if self.width > 1 else math.inf
        dy = 2.0 / (self.height - 1) if self.height > 1 else math.inf
        return dx, dy

    def with_positions(self, positions: np.ndarray) -> "ParticleSystem":
        return ParticleSystem(positions, self.features, self.origins, self.width, self.height)

    def mean_position(self) -> np.ndarray:
        return self.positions.mean(axis=0)

    def energy(self) -> float:
        return float(np.sum((self.positions - self.positions.mean(axis=0)) ** 2))


def system_from_image(image) -> ParticleSystem:
    """Map an (H, W) gray raster in [0, 1] onto particles in [-1, 1]^2.

    Particle order is row-major; pixel (row, col) sits at
    ``(-1 + 2 col/(W-1), -1 + 2 row/(H-1))``. Each axis is scaled on its own,
    so non-square rasters still fill the square domain.
    """
    img = np.asarray(image, dtype=np.float64)
    if img.ndim != 2:
        raise DimensionError(f"expected a 2-D gray image, got shape {img.shape}")
    height, width = img.shape
    if width < 2 or height < 2:
        raise DimensionError(f"image must be at least 2x2, got {width}x{height}")
    if np.isnan(img).any() or img.min() < 0.0 or img.max() > 1.0:
        raise DomainError("gray values must be normalised to [0, 1]")
    rows, cols = np.divmod(np.arange(width * height), width)
    positions = np.column_stack((-1.0 + 2.0 * cols / (width - 1), -1.0 + 2.0 * rows / (height - 1)))
    return ParticleSystem(positions, img.ravel(), np.column_stack((rows, cols)), width, height)


def interaction_kernel(xi, xj, ci: float, cj: float, params: ModelParams) -> int:
    """1 when the pair is within both confidence bounds (inclusive), else 0."""
    d = np.asarray(xj, dtype=np.float64) - np.asarray(xi, dtype=np.float64)
    close = math.hypot(d[0], d[1]) <= params.delta1
    similar = abs(float(ci) - float(cj)) <= params.delta2
    return int(close and similar)
