import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kinseg.dsmc import (
    RngStream,
    binary_interaction,
    draw_noise,
    dsmc_step,
    energy,
    simulate,
    sround,
)
from kinseg.errors import DimensionError, DomainError
from kinseg.particles import ModelParams, Particle, ParticleSystem
from kinseg.synthetic import uniform_particles


def cloud(n, seed=0):
    pos, feat = uniform_particles(n, seed)
    origins = np.column_stack((np.zeros(n, dtype=int), np.arange(n)))
    return ParticleSystem(pos, feat, origins, n, 1)


def test_sround_mean():
    rng = RngStream(3)
    draws = np.array([sround(2.3, rng) for _ in range(100_000)])
    assert set(np.unique(draws)) == {2, 3}
    assert 2.29 <= draws.mean() <= 2.31
    assert sround(4.0, rng) == 4
    with pytest.raises(DomainError):
        sround(-0.5, rng)


def test_noise_variance():
    eta = draw_noise(RngStream(1), 0.04, 200_000)
    assert eta.shape == (200_000, 2)
    assert np.var(eta, axis=0) == pytest.approx([0.04, 0.04], rel=0.02)


def test_binary_interaction_drift_only():
    p = ModelParams(1.0, 1.0, 0.0, epsilon=0.1)
    a, b = binary_interaction(Particle((0.0, 0.0), 0.5, (0, 0)), Particle((1.0, 0.0), 0.5, (0, 1)), p, (0, 0), (0, 0))
    assert a.position == pytest.approx((0.1, 0.0))
    assert b.position == pytest.approx((0.9, 0.0))
    # outside the feature bound nothing moves
    p = p.replace(delta2=0.5)
    a, b = binary_interaction(Particle((0.0, 0.0), 0.0, (0, 0)), Particle((1.0, 0.0), 1.0, (0, 1)), p, (0, 0), (0, 0))
    assert a.position == (0.0, 0.0) and b.position == (1.0, 0.0)


def test_binary_interaction_noise_scale():
    p = ModelParams(0.0, 0.0, 0.5, diffusion="d1", epsilon=0.1)
    a, _ = binary_interaction(Particle((0.0, 0.0), 0.5, (0, 0)), Particle((1.0, 0.0), 0.5, (0, 1)), p, (1.0, -2.0), (0, 0))
    amp = np.sqrt(2 * 0.5 * 0.25)
    assert a.position == pytest.approx((amp, -2 * amp))


def test_step_matches_pairwise_rule():
    # two particles always pair up; compare with the scalar rule
    s = ParticleSystem([(0.0, 0.0), (0.5, 0.5)], [0.2, 0.3], [(0, 0), (0, 1)], 2, 1)
    p = ModelParams(1.0, 0.5, 0.0, epsilon=0.2)
    out = dsmc_step(s, p, RngStream(0))
    assert out.positions[0] == pytest.approx((0.1, 0.1))
    assert out.positions[1] == pytest.approx((0.4, 0.4))
    assert s.positions[0, 0] == 0.0


def test_step_requires_two_particles():
    with pytest.raises(DimensionError):
        dsmc_step(cloud(1), ModelParams(1, 1, 0), RngStream(0))


def test_simulate_equals_repeated_steps():
    s = cloud(101, seed=2)
    p = ModelParams(0.3, 0.4, 0.02, diffusion="d2", epsilon=0.1, horizon=2.0)
    final, trace = simulate(s, p, RngStream(9), snapshot_every=5)
    rng = RngStream(9)
    t = s
    for _ in range(p.n_steps):
        t = dsmc_step(t, p, rng)
    assert np.array_equal(final.positions, t.positions)
    assert [snap.step for snap in trace.snapshots] == [0, 5, 10, 15, 20]
    assert trace.times[-1] == pytest.approx(2.0)


def test_simulate_deterministic_and_seed_sensitive():
    s = cloud(200)
    p = ModelParams(0.3, 0.3, 0.05, epsilon=0.1, horizon=3.0)
    a, _ = simulate(s, p, RngStream(5))
    b, _ = simulate(s, p, RngStream(5))
    c, _ = simulate(s, p, RngStream(6))
    assert np.array_equal(a.positions, b.positions)
    assert not np.array_equal(a.positions, c.positions)


def test_zero_horizon_is_identity():
    s = cloud(10)
    final, trace = simulate(s, ModelParams(0.3, 0.3, 0.1, horizon=0.0), RngStream(0))
    assert np.array_equal(final.positions, s.positions)
    assert len(trace.snapshots) == 1


def test_callback_gets_positions_even_when_not_stored():
    seen = []
    _, trace = simulate(cloud(20), ModelParams(0.3, 0.3, 0.0, epsilon=0.5, horizon=2.0), RngStream(0),
                        1, store_positions=False, callback=lambda sn: seen.append(sn.positions is not None))
    assert seen == [True] * 5
    assert all(sn.positions is None for sn in trace.snapshots)


def test_pure_feature_particles_do_not_diffuse():
    # D1(0) = D1(1) = 0, so gray levels 0 and 1 see no noise
    s = ParticleSystem([(0.0, 0.0), (0.9, 0.9)], [0.0, 1.0], [(0, 0), (0, 1)], 2, 1)
    final, _ = simulate(s, ModelParams(0.1, 0.1, 1.0, epsilon=0.1, horizon=5.0), RngStream(0))
    assert np.array_equal(final.positions, s.positions)


def test_energy_compensated():
    pos = np.random.default_rng(0).normal(size=(1000, 2))
    assert energy(pos) == pytest.approx(((pos - pos.mean(0)) ** 2).sum(), rel=1e-13)


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 60), st.floats(0.0, 3.0), st.floats(0.0, 1.0), st.integers(0, 2**32))
def test_noiseless_step_conserves_mean_and_dissipates(n, d1, d2, seed):
    s = cloud(n, seed % 1000)
    p = ModelParams(d1, d2, 0.0, epsilon=0.3)
    out = dsmc_step(s, p, RngStream(seed))
    assert np.allclose(out.positions.mean(0), s.positions.mean(0), atol=1e-14)
    assert energy(out.positions) <= energy(s.positions) + 1e-12
