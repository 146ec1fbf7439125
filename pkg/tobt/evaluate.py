# -*- coding: utf-8 -*-
"""
Ternary preference-modelling accuracy and DPO-vs-TODO comparison tables.

A pair is scored by turning the two implicit rewards of the trained policy
into the three TOBT rank probabilities and taking their strict argmax.
"""

from __future__ import division, print_function

__all__ = ["EvalReport", "ternary_accuracy", "ComparisonRow",
           "ComparisonTable", "compare", "PREDICTED", "TRUE"]

import io
import json
import logging
from collections import OrderedDict, namedtuple

import numpy as np

from .data import resample_tie_ratio, split, feasible_size
from .model import TieParam, tobt_probs_from_rewards
from .policy import PolicyTable, check_beta, margin
from .trainer import train

logger = logging.getLogger(__name__)

PREDICTED = ("prefer", "disprefer", "tie", "ambiguous")
TRUE = ("prefer", "tie")


class EvalReport(object):
    """
    Outcome of :func:`ternary_accuracy`.

    :param confusion:
        ``confusion[predicted][true]`` counts, ``predicted`` in
        :data:`PREDICTED` and ``true`` in :data:`TRUE`. ``ambiguous`` holds
        pairs without a unique maximum.
    """

    def __init__(self, n_pairs, correct, confusion, mean_margin,
                 binary_accuracy):
        self.n_pairs = int(n_pairs)
        self.correct = int(correct)
        self.confusion = confusion
        self.mean_margin = float(mean_margin)
        self.binary_accuracy = float(binary_accuracy)

    @property
    def accuracy(self):
        if self.n_pairs == 0:
            return float("nan")
        return self.correct / self.n_pairs

    def __repr__(self):
        return "<EvalReport(n_pairs={0}, accuracy={1:.4f})>".format(
            self.n_pairs, self.accuracy)

    def to_dict(self):
        return OrderedDict([
            ("n_pairs", self.n_pairs),
            ("correct", self.correct),
            ("accuracy", self.accuracy),
            ("binary_accuracy", self.binary_accuracy),
            ("mean_margin", self.mean_margin),
            ("confusion", OrderedDict(
                (p, OrderedDict((t, self.confusion[p][t]) for t in TRUE))
                for p in PREDICTED)),
        ])

    def dumps(self):
        return json.dumps(self.to_dict(), indent=1) + "\n"


def _predict(probs):
    values = (probs.prefer, probs.disprefer, probs.tie)
    top = max(values)
    winners = [name for name, v in zip(PREDICTED, values) if v == top]
    return winners[0] if len(winners) == 1 else "ambiguous"


def ternary_accuracy(policy, reference, test, beta, tp, include_ties=False):
    """
    Score every test pair by the strict argmax of its TOBT rank
    probabilities.

    The implicit rewards ``beta * log(pi / ref)`` of the two responses enter
    only through their difference, the pair margin. A non-tie pair is
    correct when ``prefer`` is the unique maximum and a tied pair when
    ``tie`` is. For ``alpha < ln 2`` the tie rank is never the maximum.

    :param test:
        :class:`tobt.data.Corpus` of held-out pairs.

    :param tp:
        :class:`tobt.model.TieParam` used to form the rank probabilities.

    :param include_ties: (default: False)
        Also score tie-labelled pairs; by default they are skipped.

    :returns:
        :class:`EvalReport`
    """
    beta = check_beta(beta)
    tp = tp if isinstance(tp, TieParam) else TieParam(tp)
    pairs = [p for p in test if include_ties or not p.is_tie]
    confusion = OrderedDict((p, OrderedDict((t, 0) for t in TRUE))
                            for p in PREDICTED)
    correct = 0
    mus = np.array([margin(policy, reference, p, beta) for p in pairs])
    for pair, mu in zip(pairs, mus):
        predicted = _predict(tobt_probs_from_rewards(mu, 0.0, tp))
        truth = "tie" if pair.is_tie else "prefer"
        confusion[predicted][truth] += 1
        correct += predicted == truth
    non_tie = np.array([not p.is_tie for p in pairs], dtype=bool)
    if non_tie.any():
        binary = float(np.mean(mus[non_tie] > 0))
    else:
        binary = float("nan")
    report = EvalReport(len(pairs), correct, confusion,
                        mus.mean() if len(mus) else float("nan"), binary)
    logger.info("ternary accuracy %d / %d (alpha=%g)", correct, len(pairs),
                tp.alpha)
    return report


class ComparisonRow(namedtuple("ComparisonRow", ["tie_ratio", "method",
                                                 "seed", "accuracy",
                                                 "mean_margin"])):
    __slots__ = ()


class ComparisonTable(object):
    """Rows of a :func:`compare` run, one per (tie ratio, method, seed)."""

    header = "tie_ratio,method,seed,accuracy,mean_margin"

    def __init__(self, rows=()):
        self.rows = [ComparisonRow(*r) for r in rows]

    def __len__(self):
        return len(self.rows)

    def __eq__(self, other):
        if not isinstance(other, ComparisonTable):
            return NotImplemented
        return self.rows == other.rows

    def __ne__(self, other):
        eq = self.__eq__(other)
        return eq if eq is NotImplemented else not eq

    __hash__ = None

    def summary(self):
        """
        Mean and sample standard deviation of the accuracy and the mean
        test margin of every (tie ratio, method) cell, in table order.

        :returns:
            List of dicts with keys ``tie_ratio, method, n, accuracy_mean,
            accuracy_std, margin_mean, margin_std``.
        """
        cells = OrderedDict()
        for r in self.rows:
            cells.setdefault((r.tie_ratio, r.method), []).append(r)
        out = []
        for (ratio, method), rows in cells.items():
            acc = np.array([r.accuracy for r in rows])
            mar = np.array([r.mean_margin for r in rows])
            ddof = 1 if len(rows) > 1 else 0
            out.append(OrderedDict([
                ("tie_ratio", ratio), ("method", method), ("n", len(rows)),
                ("accuracy_mean", float(acc.mean())),
                ("accuracy_std", float(acc.std(ddof=ddof))),
                ("margin_mean", float(mar.mean())),
                ("margin_std", float(mar.std(ddof=ddof)))]))
        return out

    def dumps(self):
        out = io.StringIO()
        out.write(self.header + "\n")
        for r in self.rows:
            out.write("{0:.17g},{1},{2:d},{3:.17g},{4:.17g}\n".format(*r))
        return out.getvalue()

    @classmethod
    def loads(cls, text):
        lines = text.splitlines()
        if not lines or lines[0].strip() != cls.header:
            raise ValueError("not a comparison table: bad header")
        rows = []
        for line in lines[1:]:
            if not line.strip():
                continue
            ratio, method, seed, acc, mar = line.split(",")
            rows.append((float(ratio), method, int(seed), float(acc),
                         float(mar)))
        return cls(rows)


def compare(world, ratios, methods, seeds, cfg, n_train=None,
            test_fraction=0.2, eval_alpha=None, split_by="pair"):
    """
    Train and evaluate every (tie ratio, method, seed) combination on
    corpora drawn from ``world``.

    For each seed the labelled corpus of ``world`` is split once into a
    training pool and a non-tie test set; the pool is then resampled to
    each tie ratio at a common size so that only the tie fraction varies.
    Policies start uniform and are measured against a uniform reference.

    :param world:
        :class:`tobt.data.LatentWorld`.

    :param ratios:
        Target tie ratios.

    :param methods:
        Subset of ``("dpo", "todo")``.

    :param seeds:
        Integer seeds; each drives the split, the resample and training.

    :param cfg:
        Base :class:`tobt.trainer.TrainConfig`; ``method`` and ``seed`` are
        overridden per run.

    :param n_train: (default: None)
        Training corpus size; defaults to the largest size feasible for
        every ratio.

    :param eval_alpha: (default: None)
        ``alpha`` of the evaluation rank probabilities; defaults to
        ``cfg["alpha"]``.

    :param split_by: (default: "pair")
        Passed to :func:`tobt.data.split`.

    :returns:
        :class:`ComparisonTable`
    """
    ratios = [float(r) for r in ratios]
    methods = list(methods)
    seeds = [int(s) for s in seeds]
    if not ratios or not methods or not seeds:
        raise ValueError("compare needs at least one ratio, method and seed")
    tp_eval = TieParam(cfg["alpha"] if eval_alpha is None else eval_alpha)
    corpus = world.corpus()
    reference = PolicyTable.uniform(world.registry)
    rows = []
    for seed in seeds:
        pool, test = split(corpus, test_fraction, seed, by=split_by)
        size = n_train
        if size is None:
            size = min(feasible_size(pool.n_ties, len(pool) - pool.n_ties, r)
                       for r in ratios)
        for ratio in ratios:
            train_corpus = resample_tie_ratio(pool, ratio, seed, size)
            for method in methods:
                run_cfg = cfg.copy(method=method, seed=seed)
                policy, _ = train(train_corpus, reference, reference, run_cfg)
                report = ternary_accuracy(policy, reference, test,
                                          run_cfg["beta"], tp_eval)
                logger.info("ratio %.2f %s seed %d: accuracy %.4f", ratio,
                            method, seed, report.accuracy)
                rows.append(ComparisonRow(ratio, method, seed,
                                          report.accuracy,
                                          report.mean_margin))
    return ComparisonTable(rows)
