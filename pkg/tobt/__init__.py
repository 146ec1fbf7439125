#!/usr/bin/env python
# -*- coding: utf-8 -*-

from __future__ import division, print_function

__version__ = "0.1.0"

# Only import the modules if not run from the setup script.
try:
    __TOBT_SETUP__
except NameError:
    __TOBT_SETUP__ = False
if not __TOBT_SETUP__:
    __all__ = ["Strength", "TieParam", "RankProbabilities", "bt_prob",
               "tobt_probs", "tobt_probs_from_rewards", "quadrature_oracle",
               "dpo_loss", "todo_pref_loss", "todo_tie_loss", "todo_loss",
               "g_weight", "PolicyTable", "margin", "pair_param_grad",
               "finite_diff_check", "PreferencePair", "Corpus", "LatentWorld",
               "ingest", "emit", "resample_tie_ratio", "split",
               "generate_synthetic", "TrainConfig", "MarginTrace", "train",
               "margin_trace_summary", "EvalReport", "ternary_accuracy",
               "compare", "AlphaSimConfig", "simulate_alpha",
               "emit_alpha_csv"]
    from .model import (Strength, TieParam, RankProbabilities, bt_prob,
                        tobt_probs, tobt_probs_from_rewards,
                        quadrature_oracle)
    from .losses import (dpo_loss, todo_pref_loss, todo_tie_loss, todo_loss,
                         g_weight)
    from .policy import (PolicyTable, margin, pair_param_grad,
                         finite_diff_check)
    from .data import (PreferencePair, Corpus, LatentWorld, ingest, emit,
                       resample_tie_ratio, split, generate_synthetic)
    from .trainer import TrainConfig, MarginTrace, train, margin_trace_summary
    from .evaluate import EvalReport, ternary_accuracy, compare
    from .alpha import AlphaSimConfig, simulate_alpha, emit_alpha_csv
