# -*- coding: utf-8 -*-
"""
Deterministic DPO / TODO optimisation of a tabular policy.

The loop runs ``epochs * ceil(N / batch_size)`` steps. Each step averages
the per-pair parameter gradients of its batch in batch order, applies an
SGD or Adam update whose learning rate follows a cosine decay from
``learning_rate`` to zero, and appends a record to the :class:`MarginTrace`.
"""

from __future__ import division, print_function

__all__ = ["TrainConfig", "MarginTrace", "DivergenceError", "train",
           "margin_trace_summary", "cosine_lr", "SGD", "Adam"]

import io
import math
import logging

import numpy as np
from scipy.stats import linregress

from .losses import METHODS, loss_for_method
from .model import TieParam
from .policy import (ParamGrad, check_beta, margin, pair_param_grad,
                     pair_weights)

logger = logging.getLogger(__name__)

OPTIMIZERS = ("sgd", "adam")


class DivergenceError(RuntimeError):
    """A non-finite loss appeared at optimisation step ``step``."""

    def __init__(self, step, msg):
        self.step = step
        super(DivergenceError, self).__init__(
            "diverged at step {0}: {1}".format(step, msg))


class TrainConfig(object):
    """
    Training hyperparameters. Behaves like a ``dict`` with a fixed key set;
    every assignment is validated. For example:

    ::

        cfg = TrainConfig(method="dpo")
        cfg["learning_rate"] = 1e-2
        cfg["optimizer"] = "sgd"

    :param method: (default: "todo")
        ``"dpo"`` or ``"todo"``.

    :param alpha: (default: 0.5)
        The TODO tie buffer. Ignored by DPO training.

    :param beta: (default: 0.01)
        KL-strength coefficient of the implicit reward.

    :param learning_rate: (default: 0.05)
        Initial learning rate of the cosine schedule.

    :param epochs: (default: 3)
        Number of passes over the corpus.

    :param batch_size: (default: 64)
        Pairs per step; the last batch of an epoch may be smaller.

    :param optimizer: (default: "adam")
        ``"sgd"`` or ``"adam"`` (no weight decay).

    :param adam_b1, adam_b2, adam_eps: (default: 0.9, 0.999, 1e-8)
        Adam moment decay rates and denominator offset.

    :param seed: (default: 0)
        Seed of the per-epoch shuffle.

    :param shuffle: (default: True)
        Reshuffle the corpus at the start of every epoch.
    """

    defaults = (("method", "todo"),
                ("alpha", 0.5),
                ("beta", 0.01),
                ("learning_rate", 0.05),
                ("epochs", 3),
                ("batch_size", 64),
                ("optimizer", "adam"),
                ("adam_b1", 0.9),
                ("adam_b2", 0.999),
                ("adam_eps", 1e-8),
                ("seed", 0),
                ("shuffle", True))

    def __init__(self, **kwargs):
        self._params = dict(self.defaults)
        unknown = set(kwargs) - set(self._params)
        if unknown:
            raise TypeError("TrainConfig() got an unexpected keyword argument "
                            "'{0}'".format(sorted(unknown)[0]))
        self._params.update(kwargs)
        self.check_params()

    @property
    def all_params(self):
        return [k for k, _ in self.defaults]

    def check_params(self):
        p = self._params
        if p["method"] not in METHODS:
            raise ValueError("method={0!r} not in {1}".format(p["method"],
                                                              METHODS))
        if p["optimizer"] not in OPTIMIZERS:
            raise ValueError("optimizer={0!r} not in {1}".format(
                p["optimizer"], OPTIMIZERS))
        TieParam(p["alpha"])
        check_beta(p["beta"])
        if not p["learning_rate"] > 0:
            raise ValueError("learning_rate must be positive")
        for k in ("epochs", "batch_size"):
            if int(p[k]) != p[k] or p[k] < 1:
                raise ValueError("{0} must be a positive integer, got {1!r}"
                                 .format(k, p[k]))
        if not (0 <= p["adam_b1"] < 1 and 0 <= p["adam_b2"] < 1
                and p["adam_eps"] > 0):
            raise ValueError("invalid Adam parameters ({0}, {1}, {2})".format(
                p["adam_b1"], p["adam_b2"], p["adam_eps"]))

    def check_corpus(self, corpus):
        """TODO with ties needs a positive ``alpha``."""
        if (self["method"] == "todo" and self["alpha"] == 0
                and corpus.n_ties > 0):
            raise ValueError("method=todo with alpha=0 cannot train on {0} "
                             "tied pairs".format(corpus.n_ties))

    def __getitem__(self, k):
        return self._params[k]

    def __setitem__(self, k, v):
        if k not in self._params:
            raise KeyError("unknown training parameter {0!r}".format(k))
        original = self._params[k]
        self._params[k] = v
        try:
            self.check_params()
        except (ValueError, TypeError):
            self._params[k] = original
            raise

    def __repr__(self):
        return "TrainConfig({0})".format(", ".join(
            "{0}={1!r}".format(k, self._params[k]) for k in self.all_params))

    def copy(self, **overrides):
        d = self.to_dict()
        d.update(overrides)
        return TrainConfig(**d)

    def to_dict(self):
        return dict((k, self._params[k]) for k in self.all_params)

    @property
    def tie_param(self):
        return TieParam(self["alpha"])


class MarginTrace(object):
    """
    Per-step record of the mean implicit reward margin, the mean loss and the
    tie fraction of each batch, measured before the step's update.
    """

    header = "step,mean_margin,mean_loss,tie_fraction"

    def __init__(self, step=(), mean_margin=(), mean_loss=(),
                 tie_fraction=()):
        self.step = list(step)
        self.mean_margin = list(mean_margin)
        self.mean_loss = list(mean_loss)
        self.tie_fraction = list(tie_fraction)

    def __len__(self):
        return len(self.step)

    def __eq__(self, other):
        if not isinstance(other, MarginTrace):
            return NotImplemented
        return self.as_array().tolist() == other.as_array().tolist()

    def __ne__(self, other):
        eq = self.__eq__(other)
        return eq if eq is NotImplemented else not eq

    __hash__ = None

    def append(self, step, mean_margin, mean_loss, tie_fraction):
        if self.step and step <= self.step[-1]:
            raise ValueError("trace steps must be strictly increasing")
        self.step.append(int(step))
        self.mean_margin.append(float(mean_margin))
        self.mean_loss.append(float(mean_loss))
        self.tie_fraction.append(float(tie_fraction))

    def as_array(self):
        return np.column_stack([np.asarray(self.step, dtype=float),
                                self.mean_margin, self.mean_loss,
                                self.tie_fraction]).reshape(-1, 4)

    def dumps(self):
        out = io.StringIO()
        out.write(self.header + "\n")
        for row in zip(self.step, self.mean_margin, self.mean_loss,
                       self.tie_fraction):
            out.write("{0:d},{1:.17g},{2:.17g},{3:.17g}\n".format(*row))
        return out.getvalue()

    @classmethod
    def load(cls, path):
        data = np.genfromtxt(path, delimiter=",", names=True, ndmin=1)
        return cls(data["step"].astype(int), data["mean_margin"],
                   data["mean_loss"], data["tie_fraction"])


def margin_trace_summary(trace):
    """
    Least-squares line through ``(step, mean_margin)``.

    :returns:
        ``(slope, intercept)``

    :raises ValueError:
        For fewer than two records or a single distinct step.
    """
    if len(trace) < 2:
        raise ValueError("need at least two trace records, got {0}"
                         .format(len(trace)))
    if len(set(trace.step)) < 2:
        raise ValueError("degenerate trace: all steps identical")
    fit = linregress(np.asarray(trace.step, dtype=float),
                     np.asarray(trace.mean_margin, dtype=float))
    return float(fit.slope), float(fit.intercept)


def cosine_lr(base, step, total):
    """Cosine decay from ``base`` at step 0 towards zero at ``total``."""
    return base * 0.5 * (1.0 + math.cos(math.pi * step / total))


class SGD(object):

    def __init__(self, cfg):
        pass

    def update(self, policy, grad, lr):
        policy.apply(grad, lr)


class Adam(object):
    """Adam without weight decay; moments are kept for every logit."""

    def __init__(self, cfg):
        self.b1, self.b2 = cfg["adam_b1"], cfg["adam_b2"]
        self.eps = cfg["adam_eps"]
        self.t = 0
        self.m, self.v = {}, {}

    def update(self, policy, grad, lr):
        self.t += 1
        c1 = 1.0 - self.b1 ** self.t
        c2 = 1.0 - self.b2 ** self.t
        for pid in policy.prompts:
            g = grad[pid]
            m = self.m.get(pid)
            if m is None:
                m = self.m[pid] = np.zeros_like(g)
                self.v[pid] = np.zeros_like(g)
            v = self.v[pid]
            m *= self.b1
            m += (1.0 - self.b1) * g
            v *= self.b2
            v += (1.0 - self.b2) * g * g
            policy.logits[pid] -= lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def _check_coverage(corpus, table, name):
    for p in corpus:
        for rid in (p.y1_id, p.y2_id):
            if not table.covers(p.prompt_id, rid):
                raise KeyError("{0} policy does not cover ({1!r}, {2!r})"
                               .format(name, p.prompt_id, rid))


def train(corpus, policy_init, reference, cfg):
    """
    Optimise a copy of ``policy_init`` on ``corpus``.

    :param corpus:
        :class:`tobt.data.Corpus`.

    :param policy_init:
        :class:`tobt.policy.PolicyTable`; left untouched.

    :param reference:
        Frozen reference :class:`tobt.policy.PolicyTable`.

    :param cfg:
        :class:`TrainConfig`.

    :returns:
        ``(policy, trace)``; identical inputs give bit-identical outputs.

    :raises DivergenceError:
        If any batch produces a non-finite loss.
    """
    cfg.check_params()
    cfg.check_corpus(corpus)
    _check_coverage(corpus, policy_init, "trainable")
    _check_coverage(corpus, reference, "reference")
    if len(corpus) == 0:
        raise ValueError("cannot train on an empty corpus")

    method, beta, tp = cfg["method"], check_beta(cfg["beta"]), cfg.tie_param
    batch_size = int(cfg["batch_size"])
    n = len(corpus)
    per_epoch = int(math.ceil(n / batch_size))
    total = int(cfg["epochs"]) * per_epoch
    policy = policy_init.copy()
    opt = (Adam if cfg["optimizer"] == "adam" else SGD)(cfg)
    rng = np.random.default_rng(cfg["seed"])
    trace = MarginTrace()
    pairs = corpus.pairs

    logger.info("training %s on %d pairs (%d ties): %d steps of %d",
                method, n, corpus.n_ties, total, batch_size)
    step = 0
    for epoch in range(int(cfg["epochs"])):
        order = rng.permutation(n) if cfg["shuffle"] else np.arange(n)
        for start in range(0, n, batch_size):
            batch = [pairs[i] for i in order[start:start + batch_size]]
            mus = np.array([margin(policy, reference, p, beta)
                            for p in batch])
            ties = np.array([p.is_tie for p in batch], dtype=bool)
            lg = loss_for_method(method, mus, ties, tp)
            losses = np.atleast_1d(lg.loss)
            if not np.all(np.isfinite(losses)):
                raise DivergenceError(step, "non-finite loss in epoch {0}"
                                      .format(epoch))
            grad = ParamGrad(policy.prompts)
            for p, d in zip(batch, np.atleast_1d(lg.dloss_dmu)):
                w1, w2 = pair_weights(d, beta)
                grad.iadd(pair_param_grad(policy, p, w1, w2))
            grad.scale(1.0 / len(batch))
            trace.append(step, mus.mean(), losses.mean(), ties.mean())
            opt.update(policy, grad, cosine_lr(cfg["learning_rate"], step,
                                               total))
            step += 1
        logger.debug("epoch %d: mean margin %.6g, mean loss %.6g", epoch,
                     trace.mean_margin[-1], trace.mean_loss[-1])
    for pid in policy.prompts:
        if not np.all(np.isfinite(policy.logits[pid])):
            raise DivergenceError(step, "non-finite logits for prompt {0!r}"
                                  .format(pid))
    return policy, trace
