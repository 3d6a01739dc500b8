"""
CUTrend - Particle Filter Tests
"""

import numpy as np
import pytest
from scipy.special import logsumexp

from cutrend.errors import DomainError
from cutrend.inference.particle_filter import _TAIL_EPOCH, particle_filter, systematic_resample
from cutrend.inference.theta import ThetaLayout
from cutrend.model.epi import (
    EpiState,
    Observation,
    Stratum,
    integrate,
    integrate_batch,
    log_likelihood_along_path,
    log_obs_likelihood,
    stratum_prevalence,
)
from cutrend.model.trajectories import BMPropagator, curve_path
from cutrend.utils.rng import RandomStream


def bm_theta(values, cu0=0.3, sigma=0.5, **overrides):
    return ThetaLayout("bm").vector({**values, "cu0": cu0, "sigma": sigma, **overrides})


def dsigm_theta(values):
    return ThetaLayout("dsigm").vector({**values, "cu0": 0.2, "eta": 0.7, "k": 0.05, "t_in": 2000.0})


class TestSystematicResample:
    """Test systematic_resample."""

    def test_point_mass(self):
        indices = systematic_resample(np.array([0.0, 1.0, 0.0]), RandomStream(0).generator())
        assert np.all(indices == 1)

    def test_uniform_weights_keep_every_particle(self):
        indices = systematic_resample(np.full(8, 0.125), RandomStream(1).generator())
        assert np.array_equal(np.sort(indices), np.arange(8))

    def test_counts_within_one_of_expectation(self):
        weights = np.array([0.5, 0.3, 0.15, 0.05])
        indices = systematic_resample(np.repeat(weights / 25, 25), RandomStream(2).generator())
        counts = np.bincount(indices // 25, minlength=4)
        assert np.all(np.abs(counts - 100 * weights) <= 1)


class TestDeterministicFilter:
    """Deterministic priors are evaluated exactly, without particles."""

    def test_exact_likelihood(self, grid, mid_range_values, observations):
        theta = dsigm_theta(mid_range_values)
        path = integrate(theta.epi_params(), curve_path(theta.trajectory(), grid), grid)
        expected = log_likelihood_along_path(observations, path)
        result = particle_filter(theta, observations, grid, 1000, RandomStream(0))
        assert result.log_likelihood == expected
        assert np.array_equal(result.cu_path, curve_path(theta.trajectory(), grid))
        assert np.array_equal(result.state_path.infected, path.infected)

    def test_independent_of_particles_and_seed(self, grid, mid_range_values, observations):
        theta = dsigm_theta(mid_range_values)
        a = particle_filter(theta, observations, grid, 1, RandomStream(0))
        b = particle_filter(theta, observations, grid, 5000, RandomStream(99))
        assert a.log_likelihood == b.log_likelihood

    def test_no_observations(self, grid, mid_range_values):
        result = particle_filter(dsigm_theta(mid_range_values), [], grid, 10, 0, record_states=False)
        assert result.log_likelihood == 0.0
        assert result.state_path is None


class TestStochasticFilter:
    """Bootstrap filter over BM trajectories."""

    def test_reproducible(self, coarse_grid, mid_range_values, observations):
        theta = bm_theta(mid_range_values)
        a = particle_filter(theta, observations, coarse_grid, 100, RandomStream(5, (2, 7)))
        b = particle_filter(theta, observations, coarse_grid, 100, RandomStream(5, (2, 7)))
        c = particle_filter(theta, observations, coarse_grid, 100, RandomStream(6, (2, 7)))
        assert a.log_likelihood == b.log_likelihood
        assert np.array_equal(a.cu_path, b.cu_path)
        assert a.log_likelihood != c.log_likelihood

    def test_draws_come_from_epoch_substreams(self, coarse_grid, mid_range_values):
        theta = bm_theta(mid_range_values)
        stream = RandomStream(4)
        obs = [Observation(2005.0, Stratum.FSW, 100, 425)]
        result = particle_filter(theta, obs, coarse_grid, 1, stream, record_states=False)

        prop = BMPropagator(theta.trajectory(), coarse_grid)
        start = prop.initial(1)
        node = coarse_grid.node_index(2005.0)
        head = prop.advance(start, node, stream.spawn(0).generator())[0]
        tail_gen = stream.spawn(_TAIL_EPOCH).generator()
        tail_gen.uniform()
        tail = prop.advance(head[-1:], coarse_grid.n_steps - node, tail_gen)[0]
        assert np.array_equal(result.cu_path, prop.to_cu(np.concatenate([start, head, tail])))

    def test_sampled_path(self, coarse_grid, mid_range_values, observations):
        theta = bm_theta(mid_range_values)
        result = particle_filter(theta, observations, coarse_grid, 50, RandomStream(1))
        assert np.isfinite(result.log_likelihood)
        assert result.cu_path.shape == (coarse_grid.n_nodes,)
        assert result.cu_path[0] == pytest.approx(0.3)
        assert np.all((result.cu_path > 0.0) & (result.cu_path < 1.0))
        assert result.state_path.infected.shape == (coarse_grid.n_nodes, 3)

    def test_sampled_states_follow_sampled_path(self, coarse_grid, mid_range_values, observations):
        theta = bm_theta(mid_range_values)
        result = particle_filter(theta, observations, coarse_grid, 50, RandomStream(3))
        replayed = integrate(theta.epi_params(), result.cu_path, coarse_grid)
        assert np.allclose(replayed.infected, result.state_path.infected, atol=1e-12)

    def test_no_observations(self, coarse_grid, mid_range_values):
        result = particle_filter(bm_theta(mid_range_values), [], coarse_grid, 10, RandomStream(0))
        assert result.log_likelihood == 0.0
        assert result.cu_path.shape == (coarse_grid.n_nodes,)

    def test_single_particle(self, coarse_grid, mid_range_values, observations):
        result = particle_filter(bm_theta(mid_range_values), observations, coarse_grid, 1, RandomStream(0))
        assert np.isfinite(result.log_likelihood)

    def test_degenerate_weights(self, coarse_grid, mid_range_values):
        theta = bm_theta(mid_range_values, init_prev_F=0.0, init_prev_C=0.0)
        obs = [Observation(2005.0, Stratum.FSW, 10, 425)]
        result = particle_filter(theta, obs, coarse_grid, 20, RandomStream(0))
        assert result.degenerate
        assert result.log_likelihood == -np.inf

    def test_particle_count_validated(self, coarse_grid, mid_range_values):
        with pytest.raises(DomainError):
            particle_filter(bm_theta(mid_range_values), [], coarse_grid, 0, 0)

    @pytest.mark.slow
    def test_unbiased_against_monte_carlo(self, coarse_grid, mid_range_values):
        theta = bm_theta(mid_range_values, cu0=0.3, sigma=0.8)
        obs = [
            Observation(2005.0, Stratum.FSW, 9, 40),
            Observation(2009.0, Stratum.FSW, 7, 40),
        ]
        params = theta.epi_params()

        # brute-force average of the path likelihood over prior BM paths
        prop = BMPropagator(theta.trajectory(), coarse_grid)
        start = prop.initial(20000)
        latent = np.concatenate(
            [start[:, None], prop.advance(start, coarse_grid.n_steps, RandomStream(100).generator())], axis=1
        )
        cu = prop.to_cu(latent)
        infected0 = np.tile(EpiState.initial(params).infected, (20000, 1))
        states = integrate_batch(params, infected0, cu[:, :-1], coarse_grid.delta)
        log_lik = np.zeros(20000)
        for o in obs:
            j = coarse_grid.node_index(o.time)
            log_lik += log_obs_likelihood(o, stratum_prevalence(states[:, j - 1, :], o.stratum))
        reference = logsumexp(log_lik) - np.log(20000)

        estimates = [
            particle_filter(theta, obs, coarse_grid, 500, RandomStream(seed), record_states=False).log_likelihood
            for seed in range(50)
        ]
        assert logsumexp(estimates) - np.log(50) == pytest.approx(reference, abs=0.1)
