# -*- coding: utf-8 -*-
"""
Tabular softmax policies over a finite candidate set per prompt.

A :class:`PolicyTable` stores one logit per ``(prompt_id, response_id)`` and
defines ``pi(y | x)`` as the softmax over the candidates registered for
prompt ``x``. The same class holds both the trainable policy and the frozen
reference policy. The per-pair gradients of :mod:`tobt.losses` are pushed
through ``grad log pi(y | x)`` here.
"""

from __future__ import division, print_function

__all__ = ["PolicyTable", "ParamGrad", "log_prob", "margin", "check_beta",
           "pair_weights", "pair_param_grad", "pair_loss_and_grad",
           "finite_diff_check"]

import json
import hashlib
import logging
from collections import OrderedDict

import numpy as np
from scipy.special import logsumexp

from .losses import loss_for_method

logger = logging.getLogger(__name__)


def check_beta(beta):
    """Validate the KL-strength coefficient and return it as a float."""
    beta = float(beta)
    if not (np.isfinite(beta) and beta > 0):
        raise ValueError("beta must be a positive finite number, got {0!r}"
                         .format(beta))
    return beta


class PolicyTable(object):
    """
    Per-prompt logits over explicit candidate lists.

    :param prompts:
        Mapping (or iterable of pairs) from ``prompt_id`` to the ordered
        candidate ``response_id`` list of that prompt. Every prompt needs at
        least two distinct candidates.

    :param logits: (default: None)
        Optional mapping from ``prompt_id`` to an array of logits aligned with
        the candidate list. Missing prompts start at zero, i.e. uniform.

    ::

        >>> pt = PolicyTable({"p0": ["a", "b"]})
        >>> pt.log_prob("p0", "a")
        -0.6931471805599453
    """

    def __init__(self, prompts, logits=None):
        self.prompts = OrderedDict()
        self._index = {}
        items = prompts.items() if hasattr(prompts, "items") else prompts
        for pid, responses in items:
            responses = tuple(responses)
            if len(responses) < 2:
                raise ValueError("prompt {0!r} needs at least two candidates"
                                 .format(pid))
            if len(set(responses)) != len(responses):
                raise ValueError("prompt {0!r} has duplicate candidates"
                                 .format(pid))
            self.prompts[pid] = responses
            self._index[pid] = dict((r, i) for i, r in enumerate(responses))
        self.logits = OrderedDict()
        logits = logits or {}
        for pid, responses in self.prompts.items():
            if pid in logits:
                value = np.array(logits[pid], dtype=float)
                if value.shape != (len(responses),):
                    raise ValueError("logits of prompt {0!r} have shape {1}, "
                                     "expected ({2},)".format(
                                         pid, value.shape, len(responses)))
            else:
                value = np.zeros(len(responses))
            self.logits[pid] = value
        unknown = set(logits) - set(self.prompts)
        if unknown:
            raise KeyError("logits given for unregistered prompts: {0}"
                           .format(sorted(unknown)))

    def __repr__(self):
        return "<PolicyTable({0} prompts)>".format(len(self.prompts))

    def __eq__(self, other):
        if not isinstance(other, PolicyTable):
            return NotImplemented
        return (self.prompts == other.prompts
                and all(np.array_equal(self.logits[p], other.logits[p])
                        for p in self.prompts))

    def __ne__(self, other):
        eq = self.__eq__(other)
        return eq if eq is NotImplemented else not eq

    __hash__ = None

    @classmethod
    def uniform(cls, prompts):
        """All-zero logits: the default reference policy."""
        return cls(prompts)

    def copy(self):
        return PolicyTable(self.prompts,
                           dict((p, v.copy()) for p, v in self.logits.items()))

    def index(self, pid, rid):
        """Position of ``rid`` in the candidate list of ``pid``."""
        try:
            return self._index[pid][rid]
        except KeyError as e:
            e.args += ("({0!r}, {1!r}) is not registered in this policy "
                       "table".format(pid, rid),)
            raise

    def covers(self, pid, rid):
        return pid in self._index and rid in self._index[pid]

    def log_probs(self, pid):
        """Log-softmax over the candidates of ``pid``."""
        try:
            z = self.logits[pid]
        except KeyError as e:
            e.args += ("prompt {0!r} is not registered in this policy "
                       "table".format(pid),)
            raise
        return z - logsumexp(z)

    def probs(self, pid):
        return np.exp(self.log_probs(pid))

    def log_prob(self, pid, rid):
        return float(self.log_probs(pid)[self.index(pid, rid)])

    def apply(self, grad, scale):
        """In place ``logits -= scale * grad`` for every touched prompt."""
        for pid, g in grad.touched():
            self.logits[pid] -= scale * g

    def to_dict(self):
        return {
            "prompts": [{"prompt_id": p, "responses": list(r)}
                        for p, r in self.prompts.items()],
            "logits": [{"prompt_id": p, "response_id": r, "value": float(v)}
                       for p, rs in self.prompts.items()
                       for r, v in zip(rs, self.logits[p])],
        }

    @classmethod
    def from_dict(cls, d):
        prompts = OrderedDict((e["prompt_id"], e["responses"])
                              for e in d["prompts"])
        table = cls(prompts)
        for e in d.get("logits", []):
            pid, rid = e["prompt_id"], e["response_id"]
            table.logits[pid][table.index(pid, rid)] = float(e["value"])
        return table

    def dumps(self):
        return json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"

    @classmethod
    def load(cls, path):
        with open(path) as f:
            return cls.from_dict(json.load(f))

    def digest(self):
        """SHA-256 of the serialised table, for change detection."""
        return hashlib.sha256(self.dumps().encode("utf-8")).hexdigest()


class ParamGrad(object):
    """
    A gradient with respect to the logits of a :class:`PolicyTable`.

    Its key set is that of the table it was created for; prompts never
    touched read as zeros and are not stored.
    """

    def __init__(self, prompts):
        self.prompts = prompts
        self._grads = OrderedDict()

    def __getitem__(self, pid):
        if pid in self._grads:
            return self._grads[pid]
        try:
            return np.zeros(len(self.prompts[pid]))
        except KeyError as e:
            e.args += ("prompt {0!r} is not registered".format(pid),)
            raise

    def keys(self):
        return list(self.prompts)

    def touched(self):
        return self._grads.items()

    def add(self, pid, vec):
        if pid in self._grads:
            self._grads[pid] += vec
        else:
            self._grads[pid] = np.array(vec, dtype=float)

    def iadd(self, other, scale=1.0):
        for pid, g in other.touched():
            self.add(pid, scale * g)
        return self

    def scale(self, factor):
        for pid in self._grads:
            self._grads[pid] *= factor
        return self


def log_prob(pt, prompt_id, response_id):
    """``log pi(response_id | prompt_id)``; always ``<= 0``."""
    return pt.log_prob(prompt_id, response_id)


def _log_ratios(policy, reference, pair):
    lp = policy.log_probs(pair.prompt_id)
    lr = reference.log_probs(pair.prompt_id)
    i1 = policy.index(pair.prompt_id, pair.y1_id)
    i2 = policy.index(pair.prompt_id, pair.y2_id)
    j1 = reference.index(pair.prompt_id, pair.y1_id)
    j2 = reference.index(pair.prompt_id, pair.y2_id)
    return (lp[i1] - lr[j1]), (lp[i2] - lr[j2])


def margin(policy, reference, pair, beta):
    """
    Implicit reward margin of a pair,

    ::

        mu = beta * ((log pi(y1|x) - log ref(y1|x))
                     - (log pi(y2|x) - log ref(y2|x)))

    :param policy, reference:
        :class:`PolicyTable` instances covering the pair.

    :param pair:
        A :class:`tobt.data.PreferencePair`.

    :param beta:
        Positive KL-strength coefficient.
    """
    beta = check_beta(beta)
    a, b = _log_ratios(policy, reference, pair)
    return float(beta * (a - b))


def pair_param_grad(policy, pair, weight_y1, weight_y2):
    """
    ``weight_y1 * grad log pi(y1|x) + weight_y2 * grad log pi(y2|x)`` with
    respect to the logits of ``policy``. The derivative of a softmax log
    probability of ``y`` with respect to logit ``j`` of the same prompt is
    ``1[j = y] - pi(j|x)``, so every candidate of the prompt is touched.

    :returns:
        :class:`ParamGrad`
    """
    pid = pair.prompt_id
    p = policy.probs(pid)
    vec = -(weight_y1 + weight_y2) * p
    vec[policy.index(pid, pair.y1_id)] += weight_y1
    vec[policy.index(pid, pair.y2_id)] += weight_y2
    grad = ParamGrad(policy.prompts)
    grad.add(pid, vec)
    return grad


def pair_weights(dloss_dmu, beta):
    """
    Weights on ``grad log pi(y1)`` and ``grad log pi(y2)`` for a loss with
    derivative ``dloss_dmu``: since ``d mu / d theta = beta * (grad log
    pi(y1) - grad log pi(y2))`` they are ``(beta * dloss_dmu, -beta *
    dloss_dmu)``. For a TODO preference pair this is ``(-beta *
    sigmoid(alpha - mu), +beta * sigmoid(alpha - mu))``; for a tied pair
    ``(-beta * G(mu), +beta * G(mu))``.
    """
    w = beta * dloss_dmu
    return w, -w


def pair_loss_and_grad(policy, reference, pair, beta, tp, method="todo"):
    """
    Margin, loss and parameter gradient of a single pair.

    :returns:
        ``(mu, LossGrad, ParamGrad)``
    """
    mu = margin(policy, reference, pair, beta)
    lg = loss_for_method(method, mu, pair.is_tie, tp)
    w1, w2 = pair_weights(lg.dloss_dmu, beta)
    return mu, lg, pair_param_grad(policy, pair, w1, w2)


def finite_diff_check(policy, reference, pair, beta, tp, is_tie=None,
                      method="todo", eps=1e-5, floor=1e-6, sign=1.0):
    """
    Compare the analytic parameter gradient of one pair against central
    differences of the loss.

    Every logit of the pair's prompt is perturbed by ``+/- eps``.

    :param is_tie: (default: None)
        Tie indicator; defaults to ``pair.is_tie``.

    :param floor: (default: 1e-6)
        Lower bound on the denominator of the relative error, so that
        entries which are analytically zero compare on an absolute scale.

    :param sign: (default: 1.0)
        Multiplier on the analytic gradient; ``-1`` plants a sign error for
        harness self-tests.

    :returns:
        The maximum relative error over the touched logits.
    """
    if is_tie is not None and bool(is_tie) != pair.is_tie:
        pair = pair._replace(is_tie=bool(is_tie))
    _, _, grad = pair_loss_and_grad(policy, reference, pair, beta, tp, method)
    analytic = sign * grad[pair.prompt_id]
    work = policy.copy()
    z = work.logits[pair.prompt_id]
    numeric = np.empty_like(analytic)
    for j in range(len(z)):
        z0 = z[j]
        z[j] = z0 + eps
        up = loss_for_method(method, margin(work, reference, pair, beta),
                             pair.is_tie, tp).loss
        z[j] = z0 - eps
        down = loss_for_method(method, margin(work, reference, pair, beta),
                               pair.is_tie, tp).loss
        z[j] = z0
        numeric[j] = (up - down) / (2 * eps)
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    err = float(np.max(np.abs(analytic - numeric) / denom))
    logger.debug("finite_diff_check %s/%s/%s: %.3e", pair.prompt_id,
                 pair.y1_id, pair.y2_id, err)
    return err
