import math

import numpy as np
import pytest

import _roughlv as rl


def test_black_scholes_round_trip():
    price = rl.bs_call(0.0, 0.2)
    assert price == pytest.approx(0.0796557, rel=1e-6)
    assert rl.implied_vol(price, 0.0, 1.0) == pytest.approx(0.2, abs=1e-12)
    with pytest.raises(ValueError):
        rl.implied_vol(2.0, 0.0, 1.0)


def test_covariance_and_factor():
    grid = rl.SimulationGrid(1.0, 8)
    cov = rl.joint_covariance(grid, 0.3)
    assert cov.shape == (16, 16)
    low = rl.cholesky(cov)
    np.testing.assert_allclose(low @ low.T, cov, atol=1e-12)
    assert cov[15, 15] == pytest.approx(1.0)


def test_simulation_and_estimators():
    params = rl.reference_params(0.1)
    batch = rl.simulate_batch(params, rl.SimulationGrid(0.1, 32), seed=3, paths=20000)
    assert len(batch) == 20000
    x = batch.x_T
    assert x.shape == (20000,)
    assert abs(np.exp(x).mean() - 1.0) < 0.01
    again = rl.simulate_batch(params, rl.SimulationGrid(0.1, 32), seed=3, paths=20000, threads=2)
    assert np.array_equal(x, again.x_T)
    skew_bs = rl.implied_skew(batch)
    skew_loc = rl.local_skew(batch)
    assert skew_bs.value < 0 and skew_loc.value < 0
    loc = rl.local_vol_ratio(batch, 0.0)
    kern = rl.local_vol_kernel(batch, 0.0)
    assert abs(loc.sigma_loc - kern.sigma_loc) < loc.ci + kern.ci


def test_rate_function():
    flat = rl.ModelParams(0.04, 0.0, -0.7, 0.1)
    sol = rl.minimize_rate(0.1, flat)
    assert sol.rate == pytest.approx(0.01 / 0.08, abs=1e-9)
    consts = rl.skew_constants(rl.reference_params(0.1))
    assert consts.k1_at_one == pytest.approx(1.6 * consts.k1_mean, abs=1e-8)
    smile = rl.limiting_smile([-0.1, 0.0, 0.1], rl.reference_params(0.1))
    assert smile[1].sigma_limit == pytest.approx(0.235)
    assert rl.extrapolate_local_vol(smile, 0.1, 0.05, 0.0) == pytest.approx(0.235)


def test_harmonic_mean_and_target():
    val = rl.harmonic_mean(lambda y: 0.2 + 0.1 * y, 0.1)
    assert val == pytest.approx(0.1 / (10 * math.log(0.21 / 0.2)), rel=1e-7)
    assert rl.skew_ratio_target(0.5) == 0.5
