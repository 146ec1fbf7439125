# -*- coding: utf-8 -*-

from __future__ import division, print_function

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from hypothesis import given, settings
from hypothesis import strategies as st

from ..model import TieParam
from ..data import PreferencePair
from ..losses import g_weight
from ..policy import (PolicyTable, ParamGrad, log_prob, margin, check_beta,
                      pair_weights, pair_param_grad, pair_loss_and_grad,
                      finite_diff_check)

TP = TieParam(0.5)
BETA = 0.01


def _table(*logits):
    cands = ["r{0}".format(i) for i in range(len(logits))]
    return PolicyTable({"p": cands}, {"p": list(logits)})


def test_log_prob():
    assert_allclose(log_prob(_table(0.0, 0.0), "p", "r0"), math.log(0.5))
    assert_allclose(log_prob(_table(0, 0, 0, 0), "p", "r3"), math.log(0.25))
    assert_allclose(log_prob(_table(1.0, 0.0), "p", "r0"), -0.313262,
                    atol=1e-6)
    assert log_prob(_table(50.0, -50.0), "p", "r0") <= 0.0


def test_unknown_ids():
    table = _table(0.0, 0.0)
    with pytest.raises(KeyError):
        table.log_prob("p", "nope")
    with pytest.raises(KeyError):
        table.log_prob("q", "r0")
    with pytest.raises(ValueError):
        PolicyTable({"p": ["only"]})
    with pytest.raises(ValueError):
        PolicyTable({"p": ["a", "a"]})
    with pytest.raises(ValueError):
        PolicyTable({"p": ["a", "b"]}, {"p": [0.0, 0.0, 0.0]})
    with pytest.raises(KeyError):
        PolicyTable({"p": ["a", "b"]}, {"q": [0.0, 0.0]})


def test_check_beta():
    assert check_beta(0.01) == 0.01
    for bad in (0.0, -1.0, float("nan"), float("inf")):
        with pytest.raises(ValueError):
            check_beta(bad)


def test_margin_examples():
    pair = PreferencePair("p", "r0", "r1")
    ref = _table(0.0, 0.0)
    assert margin(ref, ref, pair, BETA) == 0.0
    assert_allclose(margin(_table(1.0, 0.0), ref, pair, BETA), 0.01,
                    rtol=1e-12)
    policy = _table(0.3, -1.2, 2.0)
    ref = _table(0.1, 0.4, -0.5)
    assert (margin(policy, ref, pair.swapped(), 0.1)
            == -margin(policy, ref, pair, 0.1))


def test_pair_param_grad_non_tie():
    policy = _table(0.0, 0.0)
    pair = PreferencePair("p", "r0", "r1")
    mu, lg, grad = pair_loss_and_grad(policy, policy, pair, BETA, TP)
    assert mu == 0.0
    # With two candidates d mu / d theta_1 = beta, so y2's term doubles the
    # single-response Jacobian entry of 0.5.
    sig = 1.0 / (1.0 + math.exp(-0.5))
    assert_allclose(grad["p"], [-BETA * sig, BETA * sig], rtol=1e-12)
    assert_allclose(grad["p"][0], -0.006225, atol=1e-6)


def test_pair_param_grad_tie_at_zero_margin():
    policy = _table(0.2, -0.4, 1.0)
    pair = PreferencePair("p", "r0", "r2", True)
    _, _, grad = pair_loss_and_grad(policy, policy, pair, BETA, TP)
    assert np.all(grad["p"] == 0.0)


def test_dpo_weight_ignores_ties():
    policy = _table(0.0, 0.0)
    for tie in (False, True):
        pair = PreferencePair("p", "r0", "r1", tie)
        _, lg, _ = pair_loss_and_grad(policy, policy, pair, BETA, TP,
                                      method="dpo")
        w1, w2 = pair_weights(lg.dloss_dmu, BETA)
        assert_allclose(w1, -0.005, rtol=1e-12)
        assert_allclose(w2, 0.005, rtol=1e-12)


def test_pair_param_grad_only_touches_prompt():
    prompts = {"p": ["a", "b", "c"], "q": ["a", "b"]}
    policy = PolicyTable(prompts, {"p": [0.5, -0.5, 0.0]})
    pair = PreferencePair("p", "a", "c")
    grad = pair_param_grad(policy, pair, -0.2, 0.2)
    assert [k for k, _ in grad.touched()] == ["p"]
    assert np.all(grad["q"] == 0.0)
    assert sorted(grad.keys()) == ["p", "q"]
    # Weights summing to zero leave other candidates untouched.
    assert grad["p"][1] == 0.0


def test_param_grad_accumulation():
    prompts = {"p": ["a", "b"]}
    g = ParamGrad(prompts)
    assert list(g.touched()) == []
    g.add("p", np.array([1.0, -2.0]))
    g.add("p", np.array([1.0, 0.0]))
    g.scale(0.5)
    assert_allclose(g["p"], [1.0, -1.0])
    with pytest.raises(KeyError):
        g["missing"]


@pytest.mark.parametrize("method,tie", [("dpo", False), ("todo", False),
                                        ("todo", True)])
def test_finite_diff_check_random(method, tie):
    rng = np.random.default_rng(3)
    for _ in range(20):
        k = int(rng.integers(2, 6))
        policy = _table(*rng.normal(size=k))
        ref = _table(*rng.normal(size=k))
        a, b = rng.choice(k, size=2, replace=False)
        pair = PreferencePair("p", "r{0}".format(a), "r{0}".format(b), tie)
        err = finite_diff_check(policy, ref, pair, 0.5, TP, method=method,
                                floor=1e-4)
        assert err <= 1e-5


def test_finite_diff_check_zero_alpha_matches_dpo():
    policy = _table(0.7, -0.3, 0.1)
    ref = _table(0.0, 0.0, 0.0)
    pair = PreferencePair("p", "r0", "r1")
    assert finite_diff_check(policy, ref, pair, 0.5, TieParam(0.0),
                             floor=1e-4) <= 1e-5
    _, todo, g_todo = pair_loss_and_grad(policy, ref, pair, 0.5,
                                         TieParam(0.0))
    _, dpo, g_dpo = pair_loss_and_grad(policy, ref, pair, 0.5, TP, "dpo")
    assert todo == dpo
    assert_allclose(g_todo["p"], g_dpo["p"], rtol=0, atol=1e-15)


def test_finite_diff_check_catches_sign_error():
    policy = _table(0.7, -0.3)
    ref = _table(0.0, 0.0)
    pair = PreferencePair("p", "r0", "r1")
    assert finite_diff_check(policy, ref, pair, 0.5, TP, sign=-1.0) > 1.0


def _step(policy, ref, pair, method, lr=1.0):
    _, _, grad = pair_loss_and_grad(policy, ref, pair, BETA, TP, method)
    new = policy.copy()
    new.apply(grad, lr)
    return new


@pytest.mark.parametrize("gap", [-1.5, -0.2, 0.3, 2.0])
def test_tie_step_direction(gap):
    ref = _table(0.0, 0.0)
    policy = _table(gap, 0.0)
    pair = PreferencePair("p", "r0", "r1", True)
    new = _step(policy, ref, pair, "todo")
    d1 = new.log_prob("p", "r0") - policy.log_prob("p", "r0")
    d2 = new.log_prob("p", "r1") - policy.log_prob("p", "r1")
    if gap > 0:
        assert d1 < 0 < d2
    else:
        assert d2 < 0 < d1


@pytest.mark.parametrize("gap", [-3.0, 0.0, 3.0])
@pytest.mark.parametrize("tie", [False, True])
def test_dpo_step_direction(gap, tie):
    ref = _table(0.0, 0.0, 0.0)
    policy = _table(gap, 0.0, 0.5)
    pair = PreferencePair("p", "r0", "r1", tie)
    new = _step(policy, ref, pair, "dpo")
    assert new.log_prob("p", "r0") > policy.log_prob("p", "r0")
    assert new.log_prob("p", "r1") < policy.log_prob("p", "r1")


def test_tie_weight_matches_g_weight():
    ref = _table(0.0, 0.0)
    policy = _table(40.0, 0.0)
    pair = PreferencePair("p", "r0", "r1", True)
    mu, lg, _ = pair_loss_and_grad(policy, ref, pair, BETA, TP)
    w1, w2 = pair_weights(lg.dloss_dmu, BETA)
    assert_allclose(w1, -BETA * g_weight(mu, TP), rtol=1e-12)
    assert w1 > 0 and w2 < 0


@given(st.lists(st.floats(min_value=-30, max_value=30), min_size=2,
                max_size=6),
       st.floats(min_value=-1e3, max_value=1e3))
@settings(max_examples=100)
def test_softmax_normalization_after_steps(logits, step):
    policy = _table(*logits)
    grad = ParamGrad(policy.prompts)
    grad.add("p", np.linspace(-1.0, 1.0, len(logits)))
    policy.apply(grad, step)
    assert abs(policy.probs("p").sum() - 1.0) <= 1e-12


def test_serialisation(tmp_path):
    policy = PolicyTable({"p0": ["a", "b", "c"], "p1": ["x", "y"]},
                         {"p0": [0.1, 1.0 / 3.0, -2.5], "p1": [1e-17, 7.0]})
    path = tmp_path / "policy.json"
    path.write_text(policy.dumps())
    loaded = PolicyTable.load(str(path))
    assert loaded == policy
    assert loaded.digest() == policy.digest()
    assert list(loaded.prompts) == ["p0", "p1"]
    copy = policy.copy()
    copy.logits["p0"][0] += 1.0
    assert copy != policy
