import math

import numpy as np
import pytest

from moralrl.blame import BlameTracker, EstimatorConfig, EventEstimator, moment_targets


def simulate_geometric(p, n_updates, alpha, seed=0):
    """One state, one action, event with probability p per step."""
    rng = np.random.default_rng(seed)
    est = EventEstimator("E", EstimatorConfig(alpha=alpha))
    for _ in range(n_updates):
        occurred = bool(rng.random() < p)
        est.update(0, 0, occurred, 0, 0, terminal=False)
    return est


def test_fixed_point_geometric():
    # steps before the event: geometric on {0, 1, ...}, mean (1-p)/p, second moment (1-p)(2-p)/p^2
    p = 0.5
    est = simulate_geometric(p, 100_000, 0.05)
    m1, m2 = est.moments(0, 0)
    assert abs(est.p[(0, 0)] - p) < 0.01
    assert m1 == pytest.approx((1 - p) / p, rel=0.02)
    assert m2 == pytest.approx((1 - p) * (2 - p) / p**2, rel=0.05)


def test_deterministic_fixed_point():
    # with p known exactly the recursion is a contraction onto the closed form
    est = EventEstimator("E", EstimatorConfig(alpha=0.5))
    for _ in range(400):
        est.update(0, 0, True, 0, 0)
        est.update(0, 0, False, 0, 0)
    p = est.p[(0, 0)]
    assert p == pytest.approx(0.5)
    assert est.moments(0, 0)[0] == pytest.approx(1.0, abs=0.05)


def test_moment_identity_random_triples():
    rng = np.random.default_rng(0)
    for _ in range(10_000):
        m1n = rng.uniform(0, 50)
        sig = rng.uniform(0, 20)
        p = rng.uniform(0, 1)
        m2n = m1n**2 + sig**2
        _, t2 = moment_targets(p, m1n, m2n)
        # second moment of (1 + T') where T' has mean m1n and variance sig^2, scaled by (1-p)
        direct = (1 - p) * ((1 + m1n) ** 2 + sig**2)
        assert abs(t2 - direct) < 1e-10 * max(1.0, abs(direct))


def test_prior_for_unvisited_and_terminal():
    cfg = EstimatorConfig()
    est = EventEstimator("E", cfg)
    assert est.moments("s", 0) == (10.0, 110.0)
    assert est.sigma("s", 0) == pytest.approx(math.sqrt(10))
    est.update("s", 0, False, terminal=True)
    m1, m2 = est.moments("s", 0)
    assert m1 == pytest.approx(10 + 0.05 * (11 - 10))
    assert m2 == pytest.approx(110 + 0.05 * (1 + 110 + 20 - 110))


def test_p_is_running_average():
    est = EventEstimator("E")
    for occ in (True, False, False, True):
        est.update(0, 1, occ, 0, 1)
    assert est.p[(0, 1)] == pytest.approx(0.5)
    assert est.n[(0, 1)] == 4


def test_time_estimate_percentile():
    est = EventEstimator("E", EstimatorConfig(eta=1.0))
    assert est.time_estimate(0, 0) == pytest.approx(10 + math.sqrt(10))
    assert est.time_estimate(0, 0, eta=-10.0) == 0.0  # floored


def test_postpone_and_blame():
    est = EventEstimator("E")
    est.m1[(0, 0)], est.m2[(0, 0)] = 8.0, 80.0
    est.m1[(0, 1)], est.m2[(0, 1)] = 2.0, 8.0
    assert est.postpone_time(0, (0, 1)) == 8.0
    tr = BlameTracker("E")
    tr.update_t_plus(est, 0, (0, 1), step=0)
    assert tr.blame(est, 0, 0) == 0.0
    assert tr.blame(est, 0, 1) == pytest.approx(0.75)


def test_t_plus_recursion_and_memory():
    est = EventEstimator("E")
    est.m1[("good", 0)], est.m2[("good", 0)] = 20.0, 400.0
    est.m1[("bad", 0)], est.m2[("bad", 0)] = 1.0, 1.0
    tr = BlameTracker("E")
    tr.update_t_plus(est, "good", (0,), step=0)
    tr.update_t_plus(est, "bad", (0,), step=1)
    # the good state is remembered, decayed by one step
    assert tr.t_plus == 19.0
    assert tr.blame(est, "bad", 0) == pytest.approx(1 - 1 / 19)
    with pytest.raises(ValueError):
        tr.update_t_plus(est, "bad", (0,), step=5)
    tr.reset()
    with pytest.raises(ValueError):
        tr.blame(est, "bad", 0)


def test_blame_zero_when_denominator_vanishes():
    est = EventEstimator("E")
    est.m1[(0, 0)], est.m2[(0, 0)] = 0.0, 0.0
    tr = BlameTracker("E")
    tr.update_t_plus(est, 0, (0,), step=0)
    assert tr.blame(est, 0, 0) == 0.0


def test_config_validation():
    for bad in ({"alpha": 0}, {"alpha": 1.5}, {"prior_var": -1}, {"denominator_floor": 0}):
        with pytest.raises(ValueError):
            EstimatorConfig(**bad)
