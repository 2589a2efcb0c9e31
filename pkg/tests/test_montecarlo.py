import math

import pytest

import config
import montecarlo
import qkd
from models import McConfig


@pytest.fixture
def cfg():
    return McConfig(pulses=200_000, seed=1234, eta=1e-2, y0=1e-3, n=0.7, block_pulses=50_000)


def test_same_seed_same_estimate(cfg):
    assert montecarlo.simulate(cfg) == montecarlo.simulate(cfg)


def test_worker_count_does_not_change_estimate(cfg):
    single = montecarlo.simulate(cfg)
    threaded = montecarlo.simulate(cfg.model_copy(update={"workers": 3}))
    assert single.model_dump() == threaded.model_dump()


def test_different_seed_differs(cfg):
    other = montecarlo.simulate(cfg.model_copy(update={"seed": 4321}))
    assert other.model_dump() != montecarlo.simulate(cfg).model_dump()


def test_matches_analytic_gain_and_error_rate(cfg):
    est = montecarlo.simulate(cfg)
    q = qkd.gain(cfg.y0, cfg.eta, cfg.n)
    e = qkd.qber(cfg.y0, cfg.eta, cfg.n, cfg.e0, cfg.e_d)
    assert abs(est.q_hat - q) <= 4.0 * est.stderr_q
    assert abs(est.e_hat - e) <= 4.0 * est.stderr_e


def test_block_bookkeeping():
    est = montecarlo.simulate(McConfig(pulses=250_000, seed=1, eta=1e-3, y0=0.0, n=0.1, block_pulses=100_000))
    assert est.blocks == 3
    assert est.pulses == 250_000
    assert est.generator == "PCG64"
    assert est.background_clicks == 0


def test_no_clicks_gives_zero_estimates():
    est = montecarlo.simulate(McConfig(pulses=10_000, seed=5, eta=0.0, y0=0.0, n=0.7))
    assert est.q_hat == 0.0
    assert est.e_hat == 0.0
    assert est.clicks == 0


def test_perfect_detector_clicks_on_every_non_empty_pulse():
    est = montecarlo.simulate(McConfig(pulses=100_000, seed=9, eta=1.0, y0=0.0, n=0.7))
    assert est.q_hat == pytest.approx(qkd.gain(0.0, 1.0, 0.7), abs=5.0 * est.stderr_q)
    assert est.e_hat == pytest.approx(0.01, abs=5.0 * est.stderr_e)


def test_error_rate_stderr_is_floored_without_error_events():
    """No wrong bits drawn still leaves a binomial uncertainty on E."""
    est = montecarlo.simulate(McConfig(pulses=20_000, seed=3, eta=1e-2, y0=0.0, n=0.7, e_d=0.0))
    tally = est.signal_clicks + est.background_clicks
    assert tally > 0
    assert est.e_hat == 0.0
    shrunk = 0.5 / (tally + 1.0)
    assert est.stderr_e == pytest.approx(math.sqrt(shrunk * (1.0 - shrunk) / tally))


def test_sparse_click_point_agrees_with_analytic_error_rate():
    """η=1e-4, Y0=0 at the decoy intensity gives only ~100 clicks at the pinned seed."""
    cfg = McConfig(pulses=config.MC_PULSES, seed=config.MC_SEED, eta=1e-4, y0=0.0, n=config.NU)
    est = montecarlo.simulate(cfg)
    e = qkd.qber(cfg.y0, cfg.eta, cfg.n, cfg.e0, cfg.e_d)
    assert est.stderr_e > 0
    assert abs(est.e_hat - e) <= 3.0 * est.stderr_e


def test_gain_stderr_scales_with_inverse_sqrt_pulses():
    errors = [
        montecarlo.simulate(McConfig(pulses=pulses, seed=11, eta=1e-2, y0=1e-3, n=0.7)).stderr_q
        for pulses in (50_000, 500_000, 5_000_000)
    ]
    for coarse, fine in zip(errors, errors[1:]):
        assert coarse / fine == pytest.approx(math.sqrt(10.0), rel=0.2)
