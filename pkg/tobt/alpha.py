# -*- coding: utf-8 -*-
"""
Screening of the TODO tie buffer ``alpha``.

At the start of training the policy equals the reference and every margin
is close to zero. For a grid of ``alpha`` values this module samples such
near-zero margins and reports the mean initial preference and tie losses.
A larger ``alpha`` raises the preference loss and lowers the tie loss, and
a value is *feasible* when both stay at or below their thresholds.
"""

from __future__ import division, print_function

__all__ = ["AlphaSimConfig", "AlphaSimResult", "default_alpha_grid",
           "simulate_alpha", "emit_alpha_csv", "dumps_alpha_csv",
           "read_alpha_csv"]

import io
import logging
from collections import namedtuple

import numpy as np
from scipy.special import expit

from .losses import todo_pref_loss, todo_tie_loss
from .model import TieParam
from .utils import atomic_write

logger = logging.getLogger(__name__)


def default_alpha_grid():
    """
    ``0.01 ... 0.1`` by 0.01, ``0.1 ... 1`` by 0.05 and ``1 ... 10`` by 0.5,
    merged into one strictly increasing grid.
    """
    parts = [np.arange(1, 11) * 0.01,
             0.1 + np.arange(0, 19) * 0.05,
             1.0 + np.arange(0, 19) * 0.5]
    return [float(a) for a in np.unique(np.round(np.concatenate(parts), 10))]


class AlphaSimConfig(object):
    """
    Parameters of :func:`simulate_alpha`, validated on every assignment.

    :param alpha_grid: (default: :func:`default_alpha_grid`)
        Strictly increasing positive ``alpha`` values.

    :param mu_samples: (default: 1000)
        Number of simulated initial margins.

    :param mu_sigma: (default: 0.1)
        Standard deviation of the simulated margins around zero. ``0``
        evaluates every loss at ``mu = 0`` exactly.

    :param pref_threshold: (default: 1.0)
        Largest acceptable mean initial preference loss.

    :param tie_threshold: (default: 1.5)
        Largest acceptable mean initial tie loss.

    :param seed: (default: 0)
        Seed of the margin draws.
    """

    _defaults = (("alpha_grid", None),
                 ("mu_samples", 1000),
                 ("mu_sigma", 0.1),
                 ("pref_threshold", 1.0),
                 ("tie_threshold", 1.5),
                 ("seed", 0))

    def __init__(self, **kwargs):
        self._params = dict(self._defaults)
        self._params["alpha_grid"] = default_alpha_grid()
        for k, v in kwargs.items():
            if k not in self._params:
                raise TypeError("AlphaSimConfig() got an unexpected keyword "
                                "argument '{0}'".format(k))
            self._params[k] = v
        self._params["alpha_grid"] = [float(a) for a in
                                      self._params["alpha_grid"]]
        self.check_params()

    def check_params(self):
        grid = np.asarray(self._params["alpha_grid"], dtype=float)
        if grid.ndim != 1 or len(grid) == 0:
            raise ValueError("alpha_grid must be a non-empty list")
        if not np.all(grid > 0) or not np.all(np.isfinite(grid)):
            raise ValueError("alpha_grid values must be positive and finite")
        if np.any(np.diff(grid) <= 0):
            raise ValueError("alpha_grid must be strictly increasing")
        n = self._params["mu_samples"]
        if int(n) != n or n < 1:
            raise ValueError("mu_samples must be a positive integer")
        if not self._params["mu_sigma"] >= 0:
            raise ValueError("mu_sigma must be non-negative")
        for k in ("pref_threshold", "tie_threshold"):
            if not self._params[k] > 0:
                raise ValueError("{0} must be positive".format(k))

    def __getitem__(self, k):
        return self._params[k]

    def __setitem__(self, k, v):
        if k not in self._params:
            raise KeyError("unknown alpha simulation parameter {0!r}"
                           .format(k))
        original = self._params[k]
        self._params[k] = [float(a) for a in v] if k == "alpha_grid" else v
        try:
            self.check_params()
        except ValueError:
            self._params[k] = original
            raise

    def to_dict(self):
        return dict((k, self._params[k]) for k, _ in self._defaults)


class AlphaSimResult(namedtuple("AlphaSimResult",
                                ["alpha", "mean_pref_loss", "mean_tie_loss",
                                 "feasible", "mean_pref_weight"])):
    """
    Screening outcome for one ``alpha``. ``mean_pref_weight`` is the mean
    preference-pair gradient weight ``sigmoid(alpha - mu)``; it is not part
    of the CSV and reads back as ``None``.
    """
    __slots__ = ()


def simulate_alpha(cfg):
    """
    Mean initial TODO losses for every ``alpha`` of ``cfg["alpha_grid"]``.

    The same margin sample is reused for every ``alpha``, so along the grid
    the mean preference loss is strictly increasing.

    :param cfg:
        :class:`AlphaSimConfig`.

    :returns:
        List of :class:`AlphaSimResult` in grid order.
    """
    cfg.check_params()
    rng = np.random.default_rng(cfg["seed"])
    n = int(cfg["mu_samples"])
    if cfg["mu_sigma"] == 0:
        mu = np.zeros(n)
    else:
        mu = rng.normal(0.0, cfg["mu_sigma"], size=n)
    results = []
    for alpha in cfg["alpha_grid"]:
        tp = TieParam(alpha)
        pref = float(np.mean(todo_pref_loss(mu, tp).loss))
        tie = float(np.mean(todo_tie_loss(mu, tp).loss))
        weight = float(np.mean(expit(alpha - mu)))
        feasible = (pref <= cfg["pref_threshold"]
                    and tie <= cfg["tie_threshold"])
        results.append(AlphaSimResult(alpha, pref, tie, feasible, weight))
    logger.info("alpha screen: %d of %d grid values feasible",
                sum(r.feasible for r in results), len(results))
    return results


CSV_HEADER = "alpha,mean_pref_loss,mean_tie_loss,feasible"


def dumps_alpha_csv(results):
    results = list(results)
    if not results:
        raise ValueError("no alpha results to write")
    out = io.StringIO()
    out.write(CSV_HEADER + "\n")
    for r in results:
        out.write("{0:.17g},{1:.17g},{2:.17g},{3:d}\n".format(
            r.alpha, r.mean_pref_loss, r.mean_tie_loss, int(r.feasible)))
    return out.getvalue()


def emit_alpha_csv(results, path):
    """
    Write ``alpha,mean_pref_loss,mean_tie_loss,feasible`` rows in grid order;
    ``feasible`` is written as 0 or 1.

    :raises ValueError:
        If ``results`` is empty.
    """
    return atomic_write(path, dumps_alpha_csv(results))


def read_alpha_csv(path):
    """Parse a file written by :func:`emit_alpha_csv`."""
    data = np.genfromtxt(path, delimiter=",", names=True, ndmin=1)
    return [AlphaSimResult(float(a), float(p), float(t), bool(int(f)), None)
            for a, p, t, f in zip(data["alpha"], data["mean_pref_loss"],
                                  data["mean_tie_loss"], data["feasible"])]
