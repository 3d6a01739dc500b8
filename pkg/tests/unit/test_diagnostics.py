"""
CUTrend - Chain Diagnostics Tests
"""

import numpy as np
import pytest

from cutrend.errors import DomainError
from cutrend.inference.diagnostics import (
    chain_diagnostics,
    delta_cu_summary,
    effective_sample_size,
    pointwise_bands,
)
from cutrend.inference.pmmh import Chain
from cutrend.model.grid import TimeGrid
from cutrend.utils.rng import RandomStream


def synthetic_chain(n=200, path_thin=1, with_states=True):
    grid = TimeGrid(1985.0, 2010.0, 12.0)
    rng = RandomStream(0).generator()
    n_paths = (n + path_thin - 1) // path_thin
    paths = rng.uniform(size=(n_paths, grid.n_nodes))
    theta = np.column_stack([rng.normal(size=n), np.full(n, 0.25)])
    return Chain(
        model="bm",
        names=("a", "b"),
        grid=grid,
        seed=0,
        burn_in=n // 4,
        theta=theta,
        log_likelihood=rng.normal(size=n),
        log_prior=np.zeros(n),
        accepted=rng.uniform(size=n) < 0.3,
        delta_cu=rng.uniform(-0.5, 0.5, size=n),
        path_iterations=np.arange(0, n, path_thin),
        cu_paths=paths,
        path_thin=path_thin,
        fsw_prevalence=paths * 0.3 if with_states else None,
        client_prevalence=paths * 0.05 if with_states else None,
    )


class TestEffectiveSampleSize:
    """Test effective_sample_size."""

    def test_iid_draws(self):
        draws = RandomStream(1).generator().normal(size=10000)
        assert effective_sample_size(draws) == pytest.approx(10000, rel=0.1)

    def test_autocorrelated_draws(self):
        rng = RandomStream(2).generator()
        phi, n = 0.9, 50000
        x = np.empty(n)
        x[0] = rng.normal()
        noise = rng.normal(size=n)
        for i in range(1, n):
            x[i] = phi * x[i - 1] + noise[i]
        expected = n * (1 - phi) / (1 + phi)
        assert effective_sample_size(x) == pytest.approx(expected, rel=0.25)

    def test_constant_chain(self):
        assert effective_sample_size(np.full(100, 0.4)) == 1.0

    def test_tiny_chain(self):
        assert effective_sample_size([0.3]) == 1.0


class TestDeltaCUSummary:
    """Test delta_cu_summary."""

    def test_summary(self):
        draws = np.arange(1001) / 1000
        summary = delta_cu_summary(draws, thresholds=(0.2, 0.5))
        assert summary.mean == pytest.approx(0.5)
        assert summary.median == pytest.approx(0.5)
        assert summary.lower == pytest.approx(0.025)
        assert summary.upper == pytest.approx(0.975)
        assert summary.prob_above[0.2] == pytest.approx(800 / 1001)
        assert summary.prob_above[0.5] == pytest.approx(500 / 1001)
        assert summary.covers(0.3)
        assert not summary.covers(0.99)
        assert summary.as_dict()["prob_above"] == {"0.2": summary.prob_above[0.2], "0.5": summary.prob_above[0.5]}

    def test_strict_exceedance(self):
        summary = delta_cu_summary([0.2, 0.2, 0.3], thresholds=(0.2,))
        assert summary.prob_above[0.2] == pytest.approx(1 / 3)

    def test_empty(self):
        with pytest.raises(DomainError):
            delta_cu_summary([])


class TestChainDiagnostics:
    """Test chain_diagnostics."""

    def test_parameter_table(self):
        chain = synthetic_chain()
        summary = chain_diagnostics(chain)
        table = summary.parameters
        assert list(table.index) == ["a", "b"]
        assert {"mean", "q2_5", "q25", "q50", "q75", "q97_5", "ess", "degenerate"} <= set(table.columns)
        assert bool(table.loc["b", "degenerate"])
        assert not bool(table.loc["a", "degenerate"])
        assert table.loc["b", "q50"] == 0.25
        assert summary.n_draws == 150
        assert summary.acceptance_rate == pytest.approx(chain.accepted.mean())

    def test_thinning(self):
        chain = synthetic_chain()
        summary = chain_diagnostics(chain, burn_in=0, thin=4)
        assert summary.n_draws == 50
        assert summary.delta_cu.n_draws == 50
        assert len(summary.cu_bands) == chain.grid.n_nodes

    def test_bands(self):
        chain = synthetic_chain(path_thin=5)
        summary = chain_diagnostics(chain)
        rows = chain.cu_paths[chain.path_iterations >= chain.burn_in]
        assert np.allclose(summary.cu_bands["mean"], rows.mean(axis=0))
        assert summary.fsw_bands is not None
        assert np.allclose(summary.fsw_bands["median"], np.median(rows * 0.3, axis=0))

    def test_without_states(self):
        summary = chain_diagnostics(synthetic_chain(with_states=False))
        assert summary.fsw_bands is None
        assert summary.client_bands is None

    def test_invalid_burn_in(self):
        chain = synthetic_chain()
        with pytest.raises(DomainError):
            chain_diagnostics(chain, burn_in=200)
        with pytest.raises(DomainError):
            chain_diagnostics(chain, thin=0)


def test_pointwise_bands():
    paths = np.tile(np.arange(5.0), (3, 1)) + np.array([[0.0], [1.0], [2.0]])
    bands = pointwise_bands(paths, np.arange(5.0))
    assert list(bands.columns) == ["time", "mean", "median", "lower", "upper"]
    assert np.allclose(bands["median"], np.arange(5.0) + 1.0)
    assert np.all(bands["lower"] <= bands["median"])
    assert np.all(bands["median"] <= bands["upper"])
