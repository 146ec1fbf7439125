# -*- coding: utf-8 -*-
"""
DPO and TODO objectives as functions of the implicit reward margin ``mu``.

Every function returns a :class:`LossGrad` holding the loss and its exact
derivative with respect to ``mu``; the chain rule to policy parameters lives
in :mod:`tobt.policy`. All functions accept scalars or numpy arrays of
margins and use softplus / sigmoid forms that stay finite for any finite
``mu``.
"""

from __future__ import division, print_function

__all__ = ["LossGrad", "dpo_loss", "todo_pref_loss", "todo_tie_loss",
           "todo_loss", "g_weight", "g_weight_prime", "loss_for_method",
           "METHODS"]

from collections import namedtuple

import numpy as np
from scipy.special import expit

from .model import TieParam

METHODS = ("dpo", "todo")


class LossGrad(namedtuple("LossGrad", ["loss", "dloss_dmu"])):
    """A loss value together with its derivative in ``mu``."""
    __slots__ = ()


def _tie_param(tp):
    return tp if isinstance(tp, TieParam) else TieParam(tp)


def _alpha(tp):
    return _tie_param(tp).alpha


def _pack(loss, grad):
    if np.ndim(loss) == 0:
        return LossGrad(float(loss), float(grad))
    return LossGrad(loss, grad)


def _softplus(x):
    return np.logaddexp(0, x)


def dpo_loss(mu):
    """
    ``-log(sigmoid(mu))``.

    :param mu:
        Implicit reward margin(s).
    """
    mu = np.asarray(mu, dtype=float)
    return _pack(_softplus(-mu), -expit(-mu))


def todo_pref_loss(mu, tp):
    """
    TODO loss of a pair with a clear preference, ``-log(sigmoid(mu -
    alpha))``. Identical to :func:`dpo_loss` at ``alpha = 0``.

    :param mu:
        Implicit reward margin(s).

    :param tp:
        :class:`tobt.model.TieParam` or ``alpha``.
    """
    alpha = _alpha(tp)
    mu = np.asarray(mu, dtype=float)
    z = alpha - mu
    return _pack(_softplus(z), -expit(z))


def todo_tie_loss(mu, tp):
    """
    TODO loss of a tied pair: the negative log TOBT tie probability,

    ::

        -log(exp(2 alpha) - 1) + softplus(mu + alpha) + softplus(alpha - mu)

    The loss is even in ``mu``; its derivative is ``-g_weight(mu)``.

    :raises ValueError:
        If ``alpha = 0``, where the tie probability is identically zero.
    """
    tp = _tie_param(tp)
    alpha = tp.alpha
    if alpha == 0:
        raise ValueError("the tie loss is undefined at alpha = 0")
    mu = np.asarray(mu, dtype=float)
    loss = -tp.log_tie_numerator + (_softplus(mu + alpha)
                                    + _softplus(alpha - mu))
    grad = expit(mu + alpha) - expit(alpha - mu)
    return _pack(loss, grad)


def todo_loss(mu, is_tie, tp):
    """
    The mixed TODO objective: :func:`todo_tie_loss` where ``is_tie`` holds
    and :func:`todo_pref_loss` elsewhere.

    :param mu:
        Margin(s).

    :param is_tie:
        Tie indicator(s), broadcastable against ``mu``.

    :raises ValueError:
        If any pair is tied and ``alpha = 0``.
    """
    is_tie = np.asarray(is_tie, dtype=bool)
    mu = np.asarray(mu, dtype=float)
    if is_tie.ndim == 0 and mu.ndim == 0:
        if is_tie:
            return todo_tie_loss(mu, tp)
        return todo_pref_loss(mu, tp)
    mu, is_tie = np.broadcast_arrays(mu, is_tie)
    loss = np.empty(mu.shape)
    grad = np.empty(mu.shape)
    pref = todo_pref_loss(mu[~is_tie], tp)
    loss[~is_tie], grad[~is_tie] = pref.loss, pref.dloss_dmu
    if is_tie.any():
        tie = todo_tie_loss(mu[is_tie], tp)
        loss[is_tie], grad[is_tie] = tie.loss, tie.dloss_dmu
    return LossGrad(loss, grad)


def loss_for_method(method, mu, is_tie, tp):
    """
    Dispatch on the training method. DPO ignores the tie indicator and the
    tie parameter and treats every pair as a preference of ``y1`` over
    ``y2``.
    """
    if method == "dpo":
        return dpo_loss(mu)
    if method == "todo":
        return todo_loss(mu, is_tie, tp)
    raise ValueError("unknown method {0!r}; expected one of {1}"
                     .format(method, METHODS))


def g_weight(mu, tp):
    """
    The tie-pair gradient weight

    ::

        G(mu) = (exp(alpha - mu) - exp(alpha + mu))
                / ((1 + exp(alpha - mu)) (1 + exp(alpha + mu)))

    computed as ``sigmoid(alpha - mu) - sigmoid(alpha + mu)``. ``G`` is odd,
    strictly decreasing and zero at ``mu = 0``.
    """
    alpha = _alpha(tp)
    mu = np.asarray(mu, dtype=float)
    g = expit(alpha - mu) - expit(alpha + mu)
    if g.ndim == 0:
        return float(g)
    return g


def _dsigmoid(x):
    s = expit(x)
    return s * expit(-x)


def g_weight_prime(mu, tp):
    """Derivative of :func:`g_weight`; negative everywhere."""
    alpha = _alpha(tp)
    mu = np.asarray(mu, dtype=float)
    gp = -(_dsigmoid(alpha - mu) + _dsigmoid(alpha + mu))
    if gp.ndim == 0:
        return float(gp)
    return gp
