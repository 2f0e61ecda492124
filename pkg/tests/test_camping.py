import numpy as np
import pytest

from moralrl.camping import (
    CAMP_SAFE, CAMP_UNSAFE, NONE, SAFE, UNSAFE, WAIT, CampConfig, CampingEnv, CampState, exo_abstraction, step,
)


class FixedRng:
    """Returns queued uniforms in order."""

    def __init__(self, *values):
        self.values = list(values)

    def random(self):
        return self.values.pop(0)


def test_unsafe_camping_burns_at_once():
    s, r, done, info = step(CampState(), CAMP_UNSAFE, FixedRng(0.0), CampConfig())
    assert done and s.burned and s.camp == UNSAFE
    assert r == 20 - 100
    assert info == {"camped": UNSAFE, "pyro": False, "fire": True}


def test_safe_camping_then_pyromaniac():
    cfg = CampConfig()
    s, r, done, info = step(CampState(), CAMP_SAFE, FixedRng(0.0, 0.5), cfg)
    assert (s.camp, r, done) == (SAFE, 10, False)
    s, r, done, info = step(s, WAIT, FixedRng(0.05), cfg)
    assert done and r == -100 and info["pyro"] and info["camped"] == NONE


def test_camping_happens_once():
    cfg = CampConfig(p_pyro=0.0)
    s, r, _, _ = step(CampState(), CAMP_SAFE, FixedRng(0.0, 0.5), cfg)
    s, r, done, info = step(s, CAMP_UNSAFE, FixedRng(0.5), cfg)
    assert s.camp == SAFE and r == 0 and not done and info["camped"] == NONE


def test_failed_attempt():
    cfg = CampConfig(p_A=0.7, p_pyro=0.0)
    s, r, done, info = step(CampState(), CAMP_UNSAFE, FixedRng(0.8, 0.5), cfg)
    assert s.camp == NONE and r == 0 and not done


def test_step_cap():
    cfg = CampConfig(p_pyro=0.0, max_steps=3)
    env = CampingEnv(cfg, 0)
    env.reset()
    dones = [env.step(WAIT)[2] for _ in range(3)]
    assert dones == [False, False, True]
    with pytest.raises(ValueError):
        env.step(WAIT)


def test_invalid_action_and_config():
    with pytest.raises(ValueError):
        step(CampState(), 7, FixedRng(0.0), CampConfig())
    with pytest.raises(ValueError):
        CampConfig(p_A=1.2)
    with pytest.raises(ValueError):
        CampConfig(max_steps=0)


def test_exo_abstraction():
    assert exo_abstraction(CampState(), {"camped": UNSAFE, "pyro": False}) == {"U_A": 2, "U_P": 0}
    assert exo_abstraction(CampState(), {"camped": NONE, "pyro": True}) == {"U_A": 0, "U_P": 1}


def test_success_rate_matches_p_A():
    env = CampingEnv(CampConfig(p_A=0.7, p_pyro=0.0, max_steps=1), np.random.default_rng(1))
    hits = 0
    for _ in range(20_000):
        env.reset()
        hits += env.step(CAMP_SAFE)[0].camp == SAFE
    assert abs(hits / 20_000 - 0.7) < 0.015


def test_safe_policy_expected_return():
    # camp safely at once, then wait for the pyromaniac: 10 - 100 (the cap is never reached in practice)
    env = CampingEnv(CampConfig(), np.random.default_rng(3))
    totals = []
    for _ in range(200):
        env.reset()
        total, done, a = 0.0, False, CAMP_SAFE
        while not done:
            _, r, done, _ = env.step(a)
            total += r
            a = WAIT
        totals.append(total)
    assert np.mean(totals) == pytest.approx(-90.0, abs=0.5)
