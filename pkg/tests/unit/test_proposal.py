"""
CUTrend - Adaptive Proposal Tests
"""

import numpy as np
import pytest

from cutrend.inference.proposal import (
    OPTIMAL_SCALE,
    RunningCovariance,
    adapt_proposal,
    scaled_covariance,
)
from cutrend.utils.rng import RandomStream


class TestAdaptProposal:
    """Test adapt_proposal."""

    def test_scaling(self):
        history = RandomStream(0).generator().normal(size=(500, 3))
        covariance = np.cov(history, rowvar=False)
        expected = 0.25 * (OPTIMAL_SCALE ** 2 / 3) * (covariance + 1e-8 * np.eye(3))
        assert np.allclose(adapt_proposal(history, base_scale=0.5), expected)

    def test_single_dimension(self):
        history = np.array([[0.0], [1.0], [2.0]])
        assert adapt_proposal(history).shape == (1, 1)
        assert adapt_proposal(history)[0, 0] == pytest.approx(OPTIMAL_SCALE ** 2 * (1.0 + 1e-8))

    def test_needs_two_draws(self):
        with pytest.raises(ValueError):
            adapt_proposal(np.zeros((1, 4)))

    def test_ridge_keeps_degenerate_history_positive_definite(self):
        history = np.zeros((10, 2))
        np.linalg.cholesky(scaled_covariance(np.cov(history, rowvar=False)))


class TestRunningCovariance:
    """Test RunningCovariance class."""

    def test_matches_batch_covariance(self):
        draws = RandomStream(1).generator().normal(size=(200, 4)) @ np.diag([1.0, 2.0, 0.5, 3.0])
        running = RunningCovariance(4)
        for z in draws:
            running.update(z)
        assert running.n == 200
        assert np.allclose(running.mean, draws.mean(axis=0))
        assert np.allclose(running.covariance, np.cov(draws, rowvar=False))

    def test_proposal_requires_history(self):
        running = RunningCovariance(2)
        assert running.covariance is None
        running.update(np.zeros(2))
        with pytest.raises(ValueError):
            running.proposal()

    def test_proposal_symmetric(self):
        running = RunningCovariance(3)
        for z in RandomStream(2).generator().normal(size=(50, 3)):
            running.update(z)
        proposal = running.proposal()
        assert np.array_equal(proposal, proposal.T)
        np.linalg.cholesky(proposal)
