#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
Closed-form Bradley-Terry and tie-rank oriented Bradley-Terry (TOBT)
probability models.

The TOBT model adds a buffer ``alpha`` around a zero log-strength difference
so that a comparison between two competitors has three outcomes: the first is
preferred, the second is preferred, or the two are tied. Writing
``phi = exp(alpha)``:

::

    prefer    = l1 / (l1 + phi * l2)
    disprefer = l2 / (l2 + phi * l1)
    tie       = l1 * l2 * (phi**2 - 1) / ((l1 + phi * l2) * (phi * l1 + l2))

Both models are defined as integrals of the logistic density
``sech(y / 2)**2 / 4``; :func:`quadrature_oracle` evaluates those integrals
numerically and is used to certify the closed forms.
"""

from __future__ import division, print_function

__all__ = ["Strength", "TieParam", "RankProbabilities", "QuadratureError",
           "bt_prob", "tobt_probs", "tobt_probs_from_rewards",
           "quadrature_oracle", "integrate_simpson"]

import math
import logging
from collections import namedtuple

import numpy as np
from scipy.special import expit

logger = logging.getLogger(__name__)

# Strengths outside this range make the log-strength difference overflow.
STRENGTH_MIN = 1e-300
STRENGTH_MAX = 1e300

# In the substituted variable t = y / 2, sech(t)**2 < 1e-50 beyond this.
TAIL_CUTOFF = 60.0

# Beyond this |d| the integrand underflows over the whole finite range.
SATURATION_D = 50.0

# exp(2 * alpha) overflows a float near alpha = 354.9; larger buffers are
# evaluated in log space.
DIRECT_ALPHA_MAX = 300.0


class QuadratureError(RuntimeError):
    """Raised when adaptive quadrature cannot reach its tolerance."""
    pass


class Strength(object):
    """
    The positive strength of a competitor in a paired comparison.

    :param value:
        A real number in ``[1e-300, 1e300]``.
    """

    __slots__ = ("value",)

    def __init__(self, value):
        value = float(value)
        if not (STRENGTH_MIN <= value <= STRENGTH_MAX):
            raise ValueError("Strength must lie in [{0}, {1}], got {2!r}"
                             .format(STRENGTH_MIN, STRENGTH_MAX, value))
        self.value = value

    def __float__(self):
        return self.value

    def __repr__(self):
        return "Strength({0!r})".format(self.value)


class TieParam(object):
    """
    The tie buffer ``alpha`` and its exponential ``phi``.

    ``alpha = 0`` is allowed and means that no tie mass exists, in which case
    every TOBT probability reduces to the plain Bradley-Terry one.

    :param alpha:
        A finite, non-negative real.
    """

    __slots__ = ("alpha", "phi")

    def __init__(self, alpha):
        alpha = float(alpha)
        if not (np.isfinite(alpha) and alpha >= 0):
            raise ValueError("alpha must be finite and non-negative, got {0!r}"
                             .format(alpha))
        self.alpha = alpha
        try:
            self.phi = math.exp(alpha)
        except OverflowError:
            self.phi = np.inf

    def __repr__(self):
        return "TieParam(alpha={0!r})".format(self.alpha)

    def __eq__(self, other):
        return isinstance(other, TieParam) and other.alpha == self.alpha

    def __ne__(self, other):
        return not self == other

    def __hash__(self):
        return hash(self.alpha)

    @property
    def log_tie_numerator(self):
        """``log(phi**2 - 1)``; ``-inf`` when ``alpha = 0``. Finite for any
        finite ``alpha``."""
        if self.alpha == 0:
            return -np.inf
        return 2 * self.alpha + math.log(-math.expm1(-2 * self.alpha))


class RankProbabilities(namedtuple("RankProbabilities",
                                   ["prefer", "disprefer", "tie"])):
    """
    The ternary distribution over the ranks of one pair: the first response
    preferred, the second preferred, or a tie. Fields may be scalars or
    equally shaped arrays.
    """

    __slots__ = ()

    def swapped(self):
        return RankProbabilities(self.disprefer, self.prefer, self.tie)

    def total(self):
        return self.prefer + self.disprefer + self.tie


def _as_tie_param(tp):
    if isinstance(tp, TieParam):
        return tp
    return TieParam(tp)


def _as_strength(s):
    if isinstance(s, Strength):
        return s.value
    return Strength(s).value


def _scaled(s1, s2):
    # Dividing by the larger strength keeps every product in range; the
    # scaling is symmetric in its arguments.
    l1, l2 = _as_strength(s1), _as_strength(s2)
    m = max(l1, l2)
    return l1 / m, l2 / m


def bt_prob(s1, s2):
    """
    Bradley-Terry probability that the first competitor beats the second.

    :param s1, s2:
        :class:`Strength` instances (or positive floats).

    :returns:
        ``l1 / (l1 + l2)``.
    """
    a, b = _scaled(s1, s2)
    return a / (a + b)


def tobt_probs(s1, s2, tp):
    """
    TOBT rank probabilities of a pair of competitors.

    :param s1, s2:
        :class:`Strength` instances (or positive floats).

    :param tp:
        A :class:`TieParam` (or a non-negative ``alpha``).

    :returns:
        :class:`RankProbabilities`. Swapping ``s1`` and ``s2`` swaps
        ``prefer`` and ``disprefer`` exactly and leaves ``tie`` unchanged.
    """
    tp = _as_tie_param(tp)
    if tp.alpha > DIRECT_ALPHA_MAX:
        return tobt_probs_from_rewards(math.log(_as_strength(s1)),
                                       math.log(_as_strength(s2)), tp)
    a, b = _scaled(s1, s2)
    phi = tp.phi
    d12 = a + phi * b
    d21 = b + phi * a
    prefer = a / d12
    disprefer = b / d21
    if tp.alpha == 0:
        tie = 0.0
    else:
        tie = a * b * math.expm1(2 * tp.alpha) / (d12 * d21)
    return RankProbabilities(prefer, disprefer, tie)


def tobt_probs_from_rewards(r1, r2, tp):
    """
    TOBT rank probabilities for strengths ``exp(r1)`` and ``exp(r2)``.

    The computation only ever sees ``r1 - r2`` and is carried out in log
    space, so it is translation invariant and stable for rewards of any
    finite magnitude. Works elementwise on arrays.

    :param r1, r2:
        Finite rewards (scalars or arrays).

    :param tp:
        A :class:`TieParam` (or a non-negative ``alpha``).
    """
    tp = _as_tie_param(tp)
    d = np.subtract(r1, r2)
    alpha = tp.alpha
    prefer = expit(d - alpha)
    disprefer = expit(-d - alpha)
    if alpha == 0:
        tie = np.zeros_like(prefer)
    else:
        log_tie = (tp.log_tie_numerator
                   - (np.logaddexp(0, d + alpha) + np.logaddexp(0, alpha - d)))
        tie = np.exp(log_tie)
    if np.ndim(d) == 0:
        return RankProbabilities(float(prefer), float(disprefer), float(tie))
    return RankProbabilities(prefer, disprefer, tie)


def integrate_simpson(func, a, b, tol=1e-10, max_depth=50):
    """
    Adaptive Simpson integration of a smooth scalar function.

    :param func:
        Callable ``y = func(x)``.

    :param a, b:
        Finite integration bounds.

    :param tol: (default: 1e-10)
        Absolute error tolerance.

    :param max_depth: (default: 50)
        Maximum bisection depth. Reaching it without meeting the tolerance
        raises :class:`QuadratureError`.

    :returns:
        ``(value, error_estimate)``
    """
    if a == b:
        return 0.0, 0.0
    if a > b:
        value, err = integrate_simpson(func, b, a, tol, max_depth)
        return -value, err

    def simpson(fa, fm, fb, h):
        return h / 3.0 * (fa + 4.0 * fm + fb)

    def adaptive(a, b, fa, fm, fb, whole, depth, tol):
        m = 0.5 * (a + b)
        h = 0.25 * (b - a)
        flm = func(a + h)
        frm = func(b - h)
        left = simpson(fa, flm, fm, h)
        right = simpson(fm, frm, fb, h)
        delta = (left + right - whole) / 15.0
        if abs(delta) <= tol:
            return left + right + delta, abs(delta)
        if depth >= max_depth:
            raise QuadratureError("tolerance {0:g} not reached on [{1!r}, "
                                  "{2!r}] at depth {3}".format(tol, a, b,
                                                               depth))
        lv, le = adaptive(a, m, fa, flm, fm, left, depth + 1, 0.5 * tol)
        rv, re = adaptive(m, b, fm, frm, fb, right, depth + 1, 0.5 * tol)
        return lv + rv, le + re

    fa, fb = func(a), func(b)
    fm = func(0.5 * (a + b))
    whole = simpson(fa, fm, fb, 0.5 * (b - a))
    return adaptive(a, b, fa, fm, fb, whole, 0, tol)


def _half_sech2(t):
    c = math.cosh(t)
    return 0.5 / (c * c)


def _tail(t):
    # (1/2) * integral of sech(u)**2 over [t, inf), for t >= TAIL_CUTOFF.
    return 0.5 * (1.0 - math.tanh(t))


def _mass(lo, hi, tol):
    """
    ``(1/2) * integral of sech(t)**2 over [lo, hi]`` with ``lo`` and ``hi``
    possibly infinite: the finite window ``[-TAIL_CUTOFF, TAIL_CUTOFF]`` is
    integrated numerically and only the parts beyond it use the closed
    antiderivative.
    """
    if hi <= lo:
        return 0.0
    total = 0.0
    if hi > TAIL_CUTOFF:
        edge = max(lo, TAIL_CUTOFF)
        total += _tail(edge) - (_tail(hi) if np.isfinite(hi) else 0.0)
    if lo < -TAIL_CUTOFF:
        edge = min(hi, -TAIL_CUTOFF)
        total += _tail(-edge) - (_tail(-lo) if np.isfinite(lo) else 0.0)
    a, b = max(lo, -TAIL_CUTOFF), min(hi, TAIL_CUTOFF)
    # Split at the peak so each piece is monotone with its maximum at an
    # endpoint the integrator samples.
    cuts = [a, 0.0, b] if a < 0.0 < b else [a, b]
    for x0, x1 in zip(cuts[:-1], cuts[1:]):
        if x1 > x0:
            total += integrate_simpson(_half_sech2, x0, x1, tol=tol)[0]
    return total


def quadrature_oracle(d, tp, tol=1e-10):
    """
    Evaluate the TOBT rank probabilities directly from their integral
    definitions.

    With ``t = y / 2`` the ranks are ``(1/2) * integral of sech(t)**2`` over
    ``[(-d + alpha) / 2, inf)`` (prefer), ``[(-d - alpha) / 2,
    (-d + alpha) / 2]`` (tie) and ``(-inf, (-d - alpha) / 2]`` (disprefer).

    :param d:
        Log-strength difference ``ln(l1) - ln(l2)``; must be finite. For
        ``|d| > 50`` the integrand underflows on the finite window and the
        result is the saturated value carried by the analytic tails.

    :param tp:
        A :class:`TieParam` (or a non-negative ``alpha``).

    :param tol: (default: 1e-10)
        Absolute tolerance of each adaptive integral.

    :raises QuadratureError:
        If an integral fails to converge.
    """
    tp = _as_tie_param(tp)
    d = float(d)
    if not np.isfinite(d):
        raise ValueError("log-strength difference must be finite, got {0!r}"
                         .format(d))
    if abs(d) > SATURATION_D:
        logger.debug("quadrature_oracle: |d| = %g beyond %g, saturating",
                     abs(d), SATURATION_D)
    upper = 0.5 * (-d + tp.alpha)
    lower = 0.5 * (-d - tp.alpha)
    prefer = _mass(upper, np.inf, tol)
    tie = _mass(lower, upper, tol)
    disprefer = _mass(-np.inf, lower, tol)
    return RankProbabilities(prefer, disprefer, tie)
