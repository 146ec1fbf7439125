# -*- coding: utf-8 -*-
"""
Numerical self-checks: closed forms against quadrature, normalisation of the
rank probabilities and analytic gradients against central differences.
"""

from __future__ import division, print_function

__all__ = ["OracleCheckFailure", "OracleReport", "run_oracle_suite",
           "TOLERANCES"]

import math
import logging
from collections import OrderedDict

import numpy as np

from .data import PreferencePair
from .losses import loss_for_method
from .model import (Strength, TieParam, quadrature_oracle, tobt_probs,
                    tobt_probs_from_rewards)
from .policy import PolicyTable, finite_diff_check

logger = logging.getLogger(__name__)

TOLERANCES = OrderedDict([
    ("closed_form", 1e-8),
    ("normalization", 1e-12),
    ("dloss_dmu", 1e-5),
    ("param_grad", 1e-5),
])

# Denominator floor of the parameter-gradient relative error; entries below
# it are compared on an absolute scale.
GRAD_FLOOR = 1e-4
FD_EPS = 1e-5

LOSS_KINDS = (("dpo", False), ("todo", False), ("todo", True))


class OracleCheckFailure(RuntimeError):
    """At least one numerical check exceeded its tolerance."""

    def __init__(self, report):
        self.report = report
        failed = [k for k, ok in report.passed.items() if not ok]
        super(OracleCheckFailure, self).__init__(
            "oracle checks failed: {0}".format(", ".join(failed)))


class OracleReport(object):
    """Maximum error and pass flag of every check in :data:`TOLERANCES`."""

    def __init__(self, n_cases, seed, errors):
        self.n_cases = n_cases
        self.seed = seed
        self.errors = OrderedDict((k, errors[k]) for k in TOLERANCES)
        self.passed = OrderedDict((k, bool(errors[k] <= TOLERANCES[k]))
                                  for k in TOLERANCES)

    @property
    def ok(self):
        return all(self.passed.values())

    def text(self):
        lines = ["oracle suite: {0} cases, seed {1}".format(self.n_cases,
                                                           self.seed)]
        for k, err in self.errors.items():
            lines.append("  {0:<14s} max error {1:.3e}  tol {2:.0e}  {3}"
                         .format(k, err, TOLERANCES[k],
                                 "ok" if self.passed[k] else "FAIL"))
        lines.append("result: {0}".format("PASS" if self.ok else "FAIL"))
        return "\n".join(lines) + "\n"

    def to_dict(self):
        return OrderedDict([("n_cases", self.n_cases), ("seed", self.seed),
                            ("errors", self.errors), ("passed", self.passed),
                            ("ok", self.ok)])


def _closed_form_error(rng, n_cases):
    worst = 0.0
    for _ in range(n_cases):
        d = rng.uniform(-10.0, 10.0)
        tp = TieParam(3.0 * (1.0 - rng.random()))
        closed = tobt_probs(Strength(math.exp(0.5 * d)),
                            Strength(math.exp(-0.5 * d)), tp)
        quad = quadrature_oracle(d, tp)
        worst = max(worst, max(abs(a - b) for a, b in zip(closed, quad)))
    return worst


def _normalization_error(rng, n_cases):
    n = 100 * n_cases
    log_l1 = rng.uniform(-20.0, 20.0, size=n)
    log_l2 = rng.uniform(-20.0, 20.0, size=n)
    alphas = rng.uniform(0.0, 3.0, size=n)
    worst = 0.0
    for r1, r2, a in zip(log_l1, log_l2, alphas):
        probs = tobt_probs_from_rewards(r1, r2, TieParam(a))
        worst = max(worst, abs(probs.total() - 1.0))
    return worst


def _dloss_error(sign):
    worst = 0.0
    h = 1e-5
    mus = np.linspace(-10.0, 10.0, 41)
    for alpha in (0.1, 0.5, 0.8, 1.0, 2.0, 3.0):
        tp = TieParam(alpha)
        for method, tie in LOSS_KINDS:
            lg = loss_for_method(method, mus, tie, tp)
            up = loss_for_method(method, mus + h, tie, tp).loss
            down = loss_for_method(method, mus - h, tie, tp).loss
            numeric = (up - down) / (2 * h)
            analytic = sign * lg.dloss_dmu
            denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)),
                               1e-6)
            worst = max(worst, float(np.max(np.abs(analytic - numeric)
                                            / denom)))
    return worst


def _param_grad_error(rng, n_cases, sign):
    worst = 0.0
    for i in range(2 * n_cases):
        k = int(rng.integers(2, 6))
        cands = ["r{0}".format(j) for j in range(k)]
        prompts = {"p": cands}
        policy = PolicyTable(prompts, {"p": rng.normal(0.0, 1.0, size=k)})
        reference = PolicyTable(prompts, {"p": rng.normal(0.0, 1.0, size=k)})
        a, b = rng.choice(k, size=2, replace=False)
        method, tie = LOSS_KINDS[i % len(LOSS_KINDS)]
        pair = PreferencePair("p", cands[a], cands[b], tie)
        beta = float(rng.uniform(0.05, 1.0))
        tp = TieParam(rng.uniform(0.1, 3.0))
        err = finite_diff_check(policy, reference, pair, beta, tp,
                                method=method, eps=FD_EPS, floor=GRAD_FLOOR,
                                sign=sign)
        worst = max(worst, err)
    return worst


def run_oracle_suite(n_cases=100, seed=0, inject_fault=False):
    """
    Run every numerical check.

    :param n_cases: (default: 100)
        Random closed-form cases; the normalisation check draws 100 times
        as many and the gradient check twice as many policies.

    :param seed: (default: 0)
        Seed of all random draws; the report is a function of it.

    :param inject_fault: (default: False)
        Flip the sign of every analytic gradient, so the gradient checks
        must fail.

    :returns:
        :class:`OracleReport`
    """
    n_cases = int(n_cases)
    if n_cases < 1:
        raise ValueError("n_cases must be >= 1")
    rng = np.random.default_rng(seed)
    sign = -1.0 if inject_fault else 1.0
    errors = {}
    errors["closed_form"] = _closed_form_error(rng, n_cases)
    logger.debug("closed-form check done: %.3e", errors["closed_form"])
    errors["normalization"] = _normalization_error(rng, n_cases)
    errors["dloss_dmu"] = _dloss_error(sign)
    errors["param_grad"] = _param_grad_error(rng, n_cases, sign)
    report = OracleReport(n_cases, seed, errors)
    logger.info("oracle suite %s", "passed" if report.ok else "failed")
    return report
