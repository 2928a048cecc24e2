"""Nanbu-Babovsky DSMC time stepping for the feature-gated consensus model.

Each step samples ``Sround(N/2)`` disjoint pairs with a Fisher-Yates shuffle
and applies the binary rule

    x'  = x  + eps * P * (x* - x) + sqrt(2 sigma2 D(c))  eta
    x*' = x* + eps * P * (x - x*) + sqrt(2 sigma2 D(c*)) eta*

with independent eta, eta* ~ N(0, eps I). The reference mode is
single-threaded and bit-reproducible for a given seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numba
import numpy as np

from .errors import DimensionError, DomainError
from .particles import ModelParams, Particle, ParticleSystem, diffusion_array, interaction_kernel


class RngStream:
    """Seeded random stream (PCG64) used for every stochastic decision.

    Two streams built from the same seed produce bit-identical pair
    selections, rounding decisions and Gaussian draws.
    """

    def __init__(self, seed: int):
        seed = int(seed)
        if not 0 <= seed < 2**64:
            raise DomainError("seed must be an unsigned 64-bit integer")
        self.seed = seed
        self.generator = np.random.Generator(np.random.PCG64(seed))

    @classmethod
    def derived(cls, seed: int, index: int) -> "RngStream":
        """Independent child stream keyed by ``(seed, index)``."""
        return cls(derive_seed(seed, index))

    def uniform(self, size=None):
        return self.generator.random(size)

    def normal(self, size=None):
        return self.generator.standard_normal(size)

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed})"


def derive_seed(seed: int, index: int) -> int:
    ss = np.random.SeedSequence([int(seed), int(index)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def draw_noise(rng: RngStream, epsilon: float, size: Optional[int] = None) -> np.ndarray:
    """Centered Gaussian 2-vectors with per-component variance ``epsilon``."""
    shape = (2,) if size is None else (size, 2)
    return rng.normal(shape) * math.sqrt(epsilon)


def sround(x: float, rng: RngStream) -> int:
    """Stochastic rounding: floor(x) + 1 with probability frac(x), else floor(x)."""
    if not x >= 0.0:
        raise DomainError(f"sround needs x >= 0, got {x}")
    lo = math.floor(x)
    return int(lo + (rng.uniform() < x - lo))


def binary_interaction(
    pi: Particle,
    pj: Particle,
    params: ModelParams,
    eta_i,
    eta_j,
) -> tuple[Particle, Particle]:
    xi = np.asarray(pi.position, dtype=np.float64)
    xj = np.asarray(pj.position, dtype=np.float64)
    p = interaction_kernel(xi, xj, pi.feature, pj.feature, params)
    u = params.epsilon * p * (xj - xi)
    diff = diffusion_array(params.diffusion, [pi.feature, pj.feature])
    bi = math.sqrt(2.0 * params.sigma2 * diff[0])
    bj = math.sqrt(2.0 * params.sigma2 * diff[1])
    new_i = xi + u + bi * np.asarray(eta_i, dtype=np.float64)
    new_j = xj - u + bj * np.asarray(eta_j, dtype=np.float64)
    return (
        Particle((float(new_i[0]), float(new_i[1])), pi.feature, pi.origin),
        Particle((float(new_j[0]), float(new_j[1])), pj.feature, pj.origin),
    )


@numba.njit(cache=True)
def _fisher_yates(perm, u):
    # u[k - 1] drives the swap at position k; u in [0, 1) keeps r <= k
    for k in range(perm.shape[0] - 1, 0, -1):
        r = int(u[k - 1] * (k + 1))
        tmp = perm[k]
        perm[k] = perm[r]
        perm[r] = tmp


@numba.njit(cache=True)
def _interact_pairs(pos, feat, coef, perm, n_pairs, delta1, delta2, eps, eta):
    noisy = eta.shape[0] > 0
    for p in range(n_pairs):
        i = perm[2 * p]
        j = perm[2 * p + 1]
        dx = pos[j, 0] - pos[i, 0]
        dy = pos[j, 1] - pos[i, 1]
        if math.hypot(dx, dy) <= delta1 and abs(feat[i] - feat[j]) <= delta2:
            ux = eps * dx
            uy = eps * dy
            pos[i, 0] += ux
            pos[i, 1] += uy
            pos[j, 0] -= ux
            pos[j, 1] -= uy
        if noisy:
            pos[i, 0] += coef[i] * eta[p, 0]
            pos[i, 1] += coef[i] * eta[p, 1]
            pos[j, 0] += coef[j] * eta[n_pairs + p, 0]
            pos[j, 1] += coef[j] * eta[n_pairs + p, 1]


@numba.njit(cache=True)
def _moments(pos):
    """Mean and energy sum |x - mean|^2 with compensated summation."""
    n = pos.shape[0]
    sx = 0.0
    sy = 0.0
    for k in range(n):
        sx += pos[k, 0]
        sy += pos[k, 1]
    mx = sx / n
    my = sy / n
    total = 0.0
    comp = 0.0
    for k in range(n):
        term = (pos[k, 0] - mx) ** 2 + (pos[k, 1] - my) ** 2
        t = total + term
        if abs(total) >= abs(term):
            comp += (total - t) + term
        else:
            comp += (term - t) + total
        total = t
    return mx, my, total + comp


def energy(positions: np.ndarray) -> float:
    return float(_moments(np.ascontiguousarray(positions, dtype=np.float64))[2])


def noise_coefficients(system: ParticleSystem, params: ModelParams) -> np.ndarray:
    """Per-particle noise amplitude sqrt(2 sigma2 D(c))."""
    return np.sqrt(2.0 * params.sigma2 * diffusion_array(params.diffusion, system.features))


def _advance(pos, feat, coef, noisy, params, rng):
    n = pos.shape[0]
    n_pairs = min(sround(n / 2.0, rng), n // 2)
    perm = np.arange(n, dtype=np.int64)
    _fisher_yates(perm, rng.uniform(n - 1))
    if noisy:
        eta = draw_noise(rng, params.epsilon, 2 * n_pairs)
    else:
        eta = np.empty((0, 2))
    _interact_pairs(pos, feat, coef, perm, n_pairs, params.delta1, params.delta2, params.epsilon, eta)


def _check_size(system: ParticleSystem):
    if len(system) < 2:
        raise DimensionError(f"DSMC needs at least 2 particles, got {len(system)}")


def dsmc_step(system: ParticleSystem, params: ModelParams, rng: RngStream) -> ParticleSystem:
    """One DSMC step; returns a new system and leaves the input untouched."""
    _check_size(system)
    pos = np.array(system.positions, dtype=np.float64)
    coef = noise_coefficients(system, params)
    _advance(pos, system.features, coef, bool(coef.any()), params, rng)
    return system.with_positions(pos)


@dataclass
class Snapshot:
    step: int
    time: float
    mean: tuple[float, float]
    energy: float
    positions: Optional[np.ndarray] = None


@dataclass
class SimulationTrace:
    snapshots: list[Snapshot] = field(default_factory=list)

    @property
    def times(self) -> np.ndarray:
        return np.array([s.time for s in self.snapshots])

    @property
    def energies(self) -> np.ndarray:
        return np.array([s.energy for s in self.snapshots])

    @property
    def means(self) -> np.ndarray:
        return np.array([s.mean for s in self.snapshots]).reshape(-1, 2)


def simulate(
    system: ParticleSystem,
    params: ModelParams,
    rng: RngStream,
    snapshot_every: int = 0,
    *,
    store_positions: bool = True,
    callback: Optional[Callable[[Snapshot], None]] = None,
) -> tuple[ParticleSystem, SimulationTrace]:
    """Run ``round(T / eps)`` DSMC steps.

    Parameters
    ----------
    snapshot_every : int
        Record a snapshot at step 0, every ``snapshot_every`` steps and at the
        final step. ``0`` records only the initial and final states.
    store_positions : bool
        Keep a copy of the positions in each snapshot. Turn off for long runs
        where only the mean/energy history matters.
    callback : callable, optional
        Called with each snapshot as soon as it is taken; the snapshot it
        receives always carries positions.

    Running ``k`` steps here is bit-identical to calling :func:`dsmc_step`
    ``k`` times with the same stream.
    """
    if snapshot_every < 0:
        raise DomainError("snapshot_every must be non-negative")
    n_steps = params.n_steps
    if n_steps > 0:
        _check_size(system)
    pos = np.array(system.positions, dtype=np.float64)
    coef = noise_coefficients(system, params)
    noisy = bool(coef.any())
    trace = SimulationTrace()

    def take(step):
        mx, my, e = _moments(pos)
        snap = Snapshot(step, step * params.epsilon, (mx, my), e)
        if store_positions or callback is not None:
            snap.positions = pos.copy()
        if callback is not None:
            callback(snap)
        if not store_positions:
            snap.positions = None
        trace.snapshots.append(snap)

    take(0)
    for step in range(1, n_steps + 1):
        _advance(pos, system.features, coef, noisy, params, rng)
        if step == n_steps or (snapshot_every and step % snapshot_every == 0):
            take(step)
    return system.with_positions(pos), trace
