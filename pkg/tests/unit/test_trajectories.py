"""
CUTrend - Trajectory Prior Tests
Closed-form growth curves, stochastic forward samplers, prior densities and
the prior-implied ΔCU.
"""

import numpy as np
import pytest
from scipy.special import expit, logit
from scipy.stats import halfnorm

from cutrend.errors import DomainError
from cutrend.model.grid import TimeGrid
from cutrend.model.trajectories import (
    BM,
    DBR,
    BMPropagator,
    DSigm,
    Step,
    StochGrowth,
    build_model,
    curve_path,
    dbr_coefficients,
    dbr_curve,
    delta_cu,
    dsigm_curve,
    model_values,
    prior_delta_cu,
    sample_path,
    sample_trajectory,
    step_path,
    stoch_growth_sample_path,
    trajectory_log_prior,
)
from cutrend.utils.rng import RandomStream


def _logistic_cases(n=50, seed=2024):
    rng = np.random.default_rng(seed)
    cases = []
    for _ in range(n):
        eta = rng.uniform(0.2, 1.0)
        cu0 = eta * rng.uniform(0.01, 0.49)
        cases.append((float(cu0), float(eta), float(rng.uniform(1986.0, 2009.0))))
    return cases


class TestDBR:
    """Test the Bertalanffy-Richards curve."""

    def test_starts_at_cu0_and_stays_below_eta(self, grid):
        model = DBR(cu0=0.1, eta=0.8, m=3.0, t_in=2000.0)
        assert dbr_curve(model, 1985.0) == pytest.approx(0.1, abs=1e-9)
        path = curve_path(model, grid)
        assert np.all(path < 0.8)
        assert np.all(np.diff(path) > 0)

    def test_inflection_at_t_in(self):
        model = DBR(cu0=0.1, eta=0.8, m=3.0, t_in=2000.0)
        h = 0.01
        second = (dbr_curve(model, 2000.0 + h) - 2 * dbr_curve(model, 2000.0) + dbr_curve(model, 2000.0 - h)) / h ** 2
        assert abs(second) <= 1e-6

    def test_m_two_is_logistic(self):
        model = DBR(cu0=0.1, eta=0.8, m=2.0, t_in=2000.0)
        B, k = dbr_coefficients(model)
        t = np.linspace(1985.0, 2010.0, 51)
        months = (t - 1985.0) * 12.0
        logistic = 0.8 * expit(k * (months - 180.0))
        assert B < 0
        assert np.allclose(dbr_curve(model, t), logistic, atol=1e-12)
        assert dbr_curve(model, 2000.0) == pytest.approx(0.4, abs=1e-12)

    @pytest.mark.parametrize("cu0, eta, t_in", _logistic_cases())
    def test_m_two_is_logistic_for_random_parameters(self, cu0, eta, t_in):
        model = DBR(cu0=cu0, eta=eta, m=2.0, t_in=t_in)
        tau = (t_in - 1985.0) * 12.0
        # through cu0 at 1985 and eta / 2 at t_in
        k = -logit(cu0 / eta) / tau
        t = np.linspace(1985.0, 2010.0, 20)
        logistic = eta * expit(k * ((t - 1985.0) * 12.0 - tau))
        assert dbr_coefficients(model)[1] == pytest.approx(k, rel=1e-9)
        assert np.allclose(dbr_curve(model, t), logistic, rtol=1e-9, atol=1e-12)

    def test_support_violation(self, grid):
        model = DBR(cu0=0.7, eta=0.8, m=3.0, t_in=2000.0)
        assert not model.in_support
        with pytest.raises(DomainError):
            dbr_curve(model, 2000.0)
        with pytest.raises(DomainError):
            curve_path(model, grid)
        assert trajectory_log_prior(model) == -np.inf

    def test_inflection_must_follow_origin(self):
        with pytest.raises(DomainError):
            dbr_curve(DBR(cu0=0.1, eta=0.8, m=3.0, t_in=1985.0), 1990.0)


class TestDSigm:
    """Test the empirical sigmoid."""

    def test_shape(self, grid):
        model = DSigm(cu0=0.2, eta=0.7, k=0.05, t_in=2000.0)
        path = curve_path(model, grid)
        assert path[0] == pytest.approx(0.2, abs=1e-12)
        assert np.all(np.diff(path) > 0)
        assert path[-1] < 0.7
        b = (0.7 - 0.2) * (1.0 + np.exp(-0.05 * 180.0))
        assert dsigm_curve(model, 2000.0) == pytest.approx(0.7 - b / 2.0, abs=1e-12)

    def test_delta_cu_from_curve(self, grid):
        model = DSigm(cu0=0.05, eta=0.85, k=0.08, t_in=2005.5)
        expected = dsigm_curve(model, 2009.25) - dsigm_curve(model, 2003.0)
        assert delta_cu(curve_path(model, grid), grid) == pytest.approx(expected, abs=1e-12)

    def test_validation(self):
        with pytest.raises(DomainError):
            DSigm(cu0=0.2, eta=0.7, k=0.0, t_in=2000.0)
        with pytest.raises(DomainError):
            DSigm(cu0=0.2, eta=0.7, k=0.05, t_in=2015.0)
        with pytest.raises(DomainError):
            DSigm(cu0=1.2, eta=0.7, k=0.05, t_in=2000.0)

    def test_log_prior_term_by_term(self):
        model = DSigm(cu0=0.2, eta=0.7, k=0.05, t_in=2000.0)
        expected = 0.0 + 0.0 + halfnorm.logpdf(0.05, scale=1000.0) - np.log(24.0)
        assert trajectory_log_prior(model) == pytest.approx(expected, rel=1e-12)


class TestStep:
    """Test the step function."""

    def test_switch(self, grid):
        path = step_path(Step(cu0=0.1, cu1=0.6, t_in=2005.0), grid)
        j = grid.node_index(2005.0)
        assert np.all(path[:j] == 0.1)
        assert np.all(path[j:] == 0.6)
        assert delta_cu(path, grid) == pytest.approx(0.5)


class TestBM:
    """Test Brownian motion on logit(CU)."""

    def test_increment_moments(self):
        grid = TimeGrid(1985.0, 2010.0, 6.0)
        model = BM(cu0=0.5, sigma=0.1)
        prop = BMPropagator(model, grid)
        rng = RandomStream(1).generator()
        start = prop.initial(100000)
        latent = prop.advance(start, grid.n_steps, rng)
        increments = np.diff(np.concatenate([start[:, None], latent], axis=1), axis=1)
        step_var = 0.1 ** 2 * 6.0 / 12.0

        total = latent[:, -1] - start
        assert np.var(total) == pytest.approx(0.1 ** 2 * 300.0 / 12.0, rel=0.02)
        assert abs(increments.mean()) < 3 * np.sqrt(step_var / increments.size)
        lag1 = np.corrcoef(increments[:, :-1].ravel(), increments[:, 1:].ravel())[0, 1]
        assert abs(lag1) < 3 / np.sqrt(increments[:, 1:].size)

    def test_monthly_volatility_unit(self):
        grid = TimeGrid(1985.0, 2010.0, 6.0)
        prop = BMPropagator(BM(cu0=0.5, sigma=0.1, unit_months=1.0), grid)
        start = prop.initial(100000)
        latent = prop.advance(start, grid.n_steps, RandomStream(2).generator())
        assert np.var(latent[:, -1] - start) == pytest.approx(0.1 ** 2 * 300.0, rel=0.02)

    def test_sample_path(self, grid):
        path = sample_path(BM(cu0=0.3, sigma=0.5), grid, RandomStream(3))
        assert path.shape == (grid.n_nodes,)
        assert path[0] == pytest.approx(0.3)
        assert np.all((path > 0) & (path < 1))
        assert np.array_equal(path, sample_path(BM(cu0=0.3, sigma=0.5), grid, RandomStream(3)))

    def test_needs_random_stream(self, grid):
        with pytest.raises(DomainError):
            sample_path(BM(cu0=0.3, sigma=0.5), grid)

    def test_zero_volatility_is_flat(self, grid):
        path = sample_path(BM(cu0=0.3, sigma=0.0), grid, RandomStream(4))
        assert np.allclose(path, 0.3)


class TestStochGrowth:
    """Test stochastic growth around the deterministic curves."""

    @pytest.mark.parametrize("base", [
        DBR(cu0=0.1, eta=0.8, m=3.0, t_in=2000.0),
        DSigm(cu0=0.2, eta=0.7, k=0.05, t_in=2000.0),
    ])
    def test_zero_volatility_matches_curve(self, grid, base):
        path = stoch_growth_sample_path(StochGrowth(base, 0.0), grid, RandomStream(5))
        assert np.allclose(path, curve_path(base, grid), atol=1e-10)

    def test_stays_below_eta(self, grid):
        base = DBR(cu0=0.1, eta=0.8, m=3.0, t_in=2000.0)
        for seed in range(20):
            path = stoch_growth_sample_path(StochGrowth(base, 0.5), grid, RandomStream(seed))
            assert np.all(path < 0.8)
            assert np.all(path > 0.0)

    def test_base_must_grow(self):
        with pytest.raises(DomainError):
            StochGrowth(DSigm(cu0=0.7, eta=0.2, k=0.05, t_in=2000.0), 0.1)


class TestPriors:
    """Test prior draws, densities and the prior-implied ΔCU."""

    def test_bm_prior_delta_cu_quantiles(self, grid):
        draws = prior_delta_cu("bm", 100000, grid, RandomStream(0).generator())
        lower, median, upper = np.quantile(draws, [0.025, 0.5, 0.975])
        assert lower == pytest.approx(-0.6, abs=0.05)
        assert upper == pytest.approx(0.6, abs=0.05)
        assert abs(median) < 0.01

    @pytest.mark.parametrize("kind", ["dbr", "dsigm"])
    def test_growth_prior_delta_cu_is_bounded(self, grid, kind):
        draws = prior_delta_cu(kind, 20000, grid, RandomStream(1).generator())
        assert np.all(np.isfinite(draws))
        assert np.all(np.abs(draws) <= 1.0)

    @pytest.mark.parametrize("kind", ["bm", "dbr", "dsigm", "step"])
    def test_sample_trajectory_in_support(self, kind):
        model = sample_trajectory(kind, RandomStream(6).generator())
        assert model.kind == kind
        assert np.isfinite(trajectory_log_prior(model))

    def test_build_model(self):
        model = build_model("dsigm", {"cu0": 0.2, "eta": 0.7, "k": 0.05, "t_in": 2000.0})
        assert model == DSigm(cu0=0.2, eta=0.7, k=0.05, t_in=2000.0)
        assert model_values(model) == {"cu0": 0.2, "eta": 0.7, "k": 0.05, "t_in": 2000.0}
        assert model_values(BM(cu0=0.5, sigma=1.0)) == {"cu0": 0.5, "sigma": 1.0}
        with pytest.raises(DomainError):
            build_model("spline", {})

    def test_bm_log_prior(self):
        assert trajectory_log_prior(BM(cu0=0.5, sigma=1.0)) == pytest.approx(-np.log(2.0))
        assert trajectory_log_prior(BM(cu0=0.5, sigma=3.0)) == -np.inf

    def test_delta_cu_outside_grid(self, grid):
        with pytest.raises(DomainError):
            delta_cu(np.zeros(grid.n_nodes), grid, 2003.0, 2015.0)
        with pytest.raises(DomainError):
            delta_cu(np.zeros(10), grid)

    def test_logit_anchor(self, grid):
        prop = BMPropagator(BM(cu0=0.25, sigma=1.0), grid)
        assert prop.initial(3) == pytest.approx([logit(0.25)] * 3)
