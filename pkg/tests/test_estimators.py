import numpy as np
from sklearn.base import clone

from fidmin import channels as ch
from fidmin.blackbox import NoisyGateBlackBox
from fidmin.estimators import GfmEstimator, QptEstimator


def test_params_and_clone():
    est = GfmEstimator(epsilon=0.02, restarts=2, random_state=3)
    assert est.get_params()["restarts"] == 2
    c = clone(est)
    assert c.get_params() == est.get_params() and c is not est
    q = QptEstimator().set_params(bootstrap_B=7)
    assert clone(q).bootstrap_B == 7


def test_gfm_fit_matches_meter(rng):
    box = NoisyGateBlackBox(ch.class_pa_channel(1, rng), rng)
    est = GfmEstimator(g_init=0.8, random_state=1).fit(box.view())
    assert est.uses_ == box.uses() and 0 <= est.f_min_ <= 1
    assert est.argmin_.shape == (2,)


def test_qpt_fit_is_deterministic():
    c = ch.class_pa_channel(1, np.random.default_rng(2))
    fits = [QptEstimator(g_thres=0.01, bootstrap_B=5, random_state=4).fit(NoisyGateBlackBox(c, 9)) for _ in range(2)]
    assert fits[0].f_min_ == fits[1].f_min_ and fits[0].uses_ == fits[1].uses_
    assert fits[0].sigma_ >= 0
