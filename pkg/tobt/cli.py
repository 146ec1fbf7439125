# -*- coding: utf-8 -*-
"""
The ``tobt`` command line tool.

Every subcommand reads its inputs, delegates to one library operation and
writes its outputs plus a ``manifest.json`` into ``--out``. Settings
resolve as built-in defaults, then the ``--config`` JSON file, then
explicit flags. Exit codes: 0 success, 1 invalid input, 2 numerical check
failure, 3 training divergence.
"""

from __future__ import division, print_function

__all__ = ["main", "RunManifest", "build_parser"]

import os
import sys
import json
import logging
import argparse
import datetime
from collections import OrderedDict

from . import __version__
from .alpha import AlphaSimConfig, simulate_alpha, dumps_alpha_csv
from .checks import OracleCheckFailure, run_oracle_suite
from .data import (Corpus, LatentWorld, dumps_corpus, generate_synthetic,
                   ingest, resample_tie_ratio, split)
from .evaluate import compare, ternary_accuracy
from .model import QuadratureError, TieParam
from .policy import PolicyTable
from .trainer import (DivergenceError, TrainConfig, margin_trace_summary,
                      train)
from .utils import atomic_write, file_digest

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL, EXIT_DIVERGED = 0, 1, 2, 3


def _float_list(text):
    return [float(x) for x in text.split(",") if x.strip()]


def _str_list(text):
    return [x.strip() for x in text.split(",") if x.strip()]


_TRAIN_OPTIONS = [
    ("--method", "method", str, "todo", "dpo or todo"),
    ("--alpha", "alpha", float, 0.5, "TODO tie buffer"),
    ("--beta", "beta", float, 0.01, "KL-strength coefficient"),
    ("--lr", "learning_rate", float, 0.05, "initial learning rate"),
    ("--epochs", "epochs", int, 3, "passes over the corpus"),
    ("--batch-size", "batch_size", int, 64, "pairs per step"),
    ("--optimizer", "optimizer", str, "adam", "sgd or adam"),
    ("--no-shuffle", "shuffle", None, True, "keep the corpus order"),
]

# (flag, dest, type, default, help); a type of None marks a switch that
# stores the negation of its default.
OPTIONS = OrderedDict([
    ("oracle-check", [
        ("--cases", "n_cases", int, 100, "random closed-form cases"),
        ("--inject-fault", "inject_fault", None, False, argparse.SUPPRESS),
    ]),
    ("gen-data", [
        ("--prompts", "n_prompts", int, 200, "number of prompts"),
        ("--candidates", "candidates", int, 4, "responses per prompt"),
        ("--spread", "reward_spread", float, 1.0, "std of latent rewards"),
        ("--quant", "quantization_step", float, 0.5, "tie grid width"),
        ("--gen-alpha", "gen_alpha", float, 0.5,
         "alpha of the 'tobt' labelling"),
        ("--labeling", "labeling", str, "quantized", "quantized or tobt"),
    ]),
    ("ingest", [
        ("--input", "input", str, None, "JSONL pair records"),
        ("--quant", "quantization_step", float, None,
         "tie grid width (default: exact score equality)"),
        ("--ratio", "tie_ratio", float, None, "resample to this tie ratio"),
        ("--size", "size", int, None, "resampled corpus size"),
        ("--test-fraction", "test_fraction", float, None,
         "also write a train/test split"),
        ("--split-by", "split_by", str, "prompt", "prompt or pair"),
    ]),
    ("train", [
        ("--corpus", "corpus", str, None, "training corpus JSONL"),
        ("--init", "init", str, None, "initial policy JSON"),
        ("--reference", "reference", str, None, "reference policy JSON"),
    ] + _TRAIN_OPTIONS),
    ("eval", [
        ("--policy", "policy", str, None, "trained policy JSON"),
        ("--reference", "reference", str, None, "reference policy JSON"),
        ("--test", "test", str, None, "test corpus JSONL"),
        ("--beta", "beta", float, 0.01, "KL-strength coefficient"),
        ("--alpha", "alpha", float, 0.5, "alpha of the rank probabilities"),
        ("--include-ties", "include_ties", None, False,
         "also score tied pairs"),
    ]),
    ("compare", [
        ("--world", "world", str, None, "latent world JSON"),
        ("--ratios", "ratios", _float_list, [0.0, 0.1, 0.2, 0.3],
         "comma separated tie ratios"),
        ("--methods", "methods", _str_list, ["dpo", "todo"],
         "comma separated methods"),
        ("--seeds", "n_seeds", int, 5, "number of seeds from --seed on"),
        ("--n-train", "n_train", int, None, "training corpus size"),
        ("--test-fraction", "test_fraction", float, 0.2, "test pair share"),
        ("--eval-alpha", "eval_alpha", float, None,
         "alpha of evaluation (default: --alpha)"),
        ("--split-by", "split_by", str, "pair", "prompt or pair"),
    ] + _TRAIN_OPTIONS),
    ("alpha-sim", [
        ("--alphas", "alpha_grid", _float_list, None,
         "comma separated alpha grid"),
        ("--mu-samples", "mu_samples", int, 1000, "simulated margins"),
        ("--mu-sigma", "mu_sigma", float, 0.1, "std of simulated margins"),
        ("--pref-threshold", "pref_threshold", float, 1.0,
         "largest mean preference loss"),
        ("--tie-threshold", "tie_threshold", float, 1.5,
         "largest mean tie loss"),
    ]),
])

REQUIRED = {
    "ingest": ("input",),
    "train": ("corpus",),
    "eval": ("policy", "test"),
    "compare": ("world",),
}

# Commands whose outputs depend on random draws take no implicit seed;
# ingest only draws when it resamples or splits.
SEEDED = ("gen-data", "train", "compare", "alpha-sim")


def _needs_seed(command, settings):
    if command == "ingest":
        return (settings["tie_ratio"] is not None
                or settings["test_fraction"] is not None)
    return command in SEEDED


class _ArgumentError(Exception):
    pass


class _Parser(argparse.ArgumentParser):

    def error(self, message):
        raise _ArgumentError(message)


def build_parser():
    parser = _Parser(prog="tobt", description="Tie-aware preference "
                     "optimisation experiments.")
    parser.add_argument("--version", action="version",
                        version="%(prog)s " + __version__)
    sub = parser.add_subparsers(dest="command", metavar="command")
    for name, options in OPTIONS.items():
        p = sub.add_parser(name)
        p.add_argument("--seed", type=int, default=argparse.SUPPRESS,
                       help="seed of every random draw; required by commands that "
                       "draw (oracle-check defaults to 0)")
        p.add_argument("--out", default=argparse.SUPPRESS,
                       help="output directory (default: .)")
        p.add_argument("--config", default=None,
                       help="JSON file of settings; flags take precedence")
        p.add_argument("-v", "--verbose", action="store_true")
        p.add_argument("-q", "--quiet", action="store_true")
        for flag, dest, kind, default, help in options:
            if kind is None:
                action = "store_false" if default else "store_true"
                p.add_argument(flag, dest=dest, action=action, help=help,
                               default=argparse.SUPPRESS)
            else:
                p.add_argument(flag, dest=dest, type=kind, help=help,
                               default=argparse.SUPPRESS)
    return parser


def resolve(command, args):
    """Defaults, then the ``--config`` file, then explicit flags."""
    settings = OrderedDict([("seed", None), ("out", ".")])
    for _, dest, _, default, _ in OPTIONS[command]:
        settings[dest] = default
    flags = dict((k, v) for k, v in vars(args).items()
                 if k not in ("command", "config", "verbose", "quiet"))
    if args.config is not None:
        with open(args.config) as f:
            loaded = json.load(f)
        unknown = set(loaded) - set(settings)
        if unknown:
            raise ValueError("unknown settings in {0}: {1}".format(
                args.config, sorted(unknown)))
        settings.update(loaded)
    settings.update(flags)
    for key in REQUIRED.get(command, ()):
        if settings[key] is None:
            raise ValueError("{0} needs --{1}".format(
                command, key.replace("_", "-")))
    if settings["seed"] is None:
        if _needs_seed(command, settings):
            raise ValueError("{0} needs an explicit --seed".format(command))
        settings["seed"] = 0
    return settings


class RunManifest(object):
    """
    Reproducibility record of one command run: the resolved settings,
    digests of the input files, the outputs and the tool version.
    """

    def __init__(self, command, settings):
        self.command = command
        self.settings = settings
        self.inputs = OrderedDict()
        self.outputs = []

    def add_input(self, path):
        if path is not None:
            self.inputs[path] = file_digest(path)

    def write(self, name, text):
        path = os.path.join(self.settings["out"], name)
        atomic_write(path, text)
        self.outputs.append(path)
        logger.info("wrote %s", path)
        return path

    def to_dict(self):
        return {
            "command": self.command,
            "config": self.settings,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "seed": self.settings["seed"],
            "version": __version__,
            "created": datetime.datetime.now(datetime.timezone.utc).strftime(
                "%Y-%m-%dT%H:%M:%SZ"),
        }

    def dumps(self):
        return json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"

    def save(self):
        return atomic_write(os.path.join(self.settings["out"],
                                         "manifest.json"), self.dumps())


def _train_config(s, **overrides):
    d = dict((dest, s[dest]) for _, dest, _, _, _ in _TRAIN_OPTIONS)
    d["seed"] = s["seed"]
    d.update(overrides)
    return TrainConfig(**d)


def cmd_oracle_check(s, m):
    report = run_oracle_suite(s["n_cases"], s["seed"], s["inject_fault"])
    sys.stdout.write(report.text())
    m.write("oracle_report.json", json.dumps(report.to_dict(), indent=1)
            + "\n")
    if not report.ok:
        m.save()
        raise OracleCheckFailure(report)


def cmd_gen_data(s, m):
    world, corpus = generate_synthetic(
        s["n_prompts"], s["candidates"], s["reward_spread"],
        TieParam(s["gen_alpha"]), s["quantization_step"], s["seed"],
        s["labeling"])
    m.write("world.json", world.dumps())
    m.write("corpus.jsonl", dumps_corpus(corpus))


def cmd_ingest(s, m):
    m.add_input(s["input"])
    corpus = ingest(s["input"], s["quantization_step"])
    if s["tie_ratio"] is not None:
        corpus = resample_tie_ratio(corpus, s["tie_ratio"], s["seed"],
                                    s["size"])
    if s["test_fraction"] is None:
        m.write("corpus.jsonl", dumps_corpus(corpus))
        return
    train_corpus, test = split(corpus, s["test_fraction"], s["seed"],
                               by=s["split_by"])
    # Both sides keep every candidate, so a policy trained on one side
    # covers the other.
    for name, side in (("train.jsonl", train_corpus), ("test.jsonl", test)):
        m.write(name, dumps_corpus(Corpus(side.pairs, corpus.registry)))


def _load_policies(s, registry):
    if s.get("init") is not None:
        init = PolicyTable.load(s["init"])
    else:
        init = PolicyTable.uniform(registry)
    if s["reference"] is not None:
        reference = PolicyTable.load(s["reference"])
    else:
        reference = PolicyTable.uniform(init.prompts)
    return init, reference


def cmd_train(s, m):
    cfg = _train_config(s)
    for key in ("corpus", "init", "reference"):
        m.add_input(s[key])
    corpus = ingest(s["corpus"])
    init, reference = _load_policies(s, corpus.registry)
    policy, trace = train(corpus, init, reference, cfg)
    if len(trace) >= 2:
        slope, _ = margin_trace_summary(trace)
        logger.info("margin slope %.6g per step", slope)
    m.write("policy.json", policy.dumps())
    m.write("margins.csv", trace.dumps())


def cmd_eval(s, m):
    for key in ("policy", "reference", "test"):
        m.add_input(s[key])
    policy = PolicyTable.load(s["policy"])
    if s["reference"] is not None:
        reference = PolicyTable.load(s["reference"])
    else:
        reference = PolicyTable.uniform(policy.prompts)
    test = ingest(s["test"])
    report = ternary_accuracy(policy, reference, test, s["beta"],
                              TieParam(s["alpha"]), s["include_ties"])
    sys.stdout.write("accuracy {0:.4f} over {1} pairs\n".format(
        report.accuracy, report.n_pairs))
    m.write("report.json", report.dumps())


def cmd_compare(s, m):
    m.add_input(s["world"])
    world = LatentWorld.load(s["world"])
    seeds = [s["seed"] + i for i in range(s["n_seeds"])]
    table = compare(world, s["ratios"], s["methods"], seeds,
                    _train_config(s), n_train=s["n_train"],
                    test_fraction=s["test_fraction"],
                    eval_alpha=s["eval_alpha"], split_by=s["split_by"])
    for cell in table.summary():
        sys.stdout.write("{tie_ratio:.2f} {method:<5s} accuracy "
                         "{accuracy_mean:.4f} +/- {accuracy_std:.4f}\n"
                         .format(**cell))
    m.write("comparison.csv", table.dumps())


def cmd_alpha_sim(s, m):
    kwargs = dict((k, s[k]) for k in ("mu_samples", "mu_sigma",
                                      "pref_threshold", "tie_threshold",
                                      "seed"))
    if s["alpha_grid"] is not None:
        kwargs["alpha_grid"] = s["alpha_grid"]
    results = simulate_alpha(AlphaSimConfig(**kwargs))
    m.write("alpha.csv", dumps_alpha_csv(results))


COMMANDS = {
    "oracle-check": cmd_oracle_check,
    "gen-data": cmd_gen_data,
    "ingest": cmd_ingest,
    "train": cmd_train,
    "eval": cmd_eval,
    "compare": cmd_compare,
    "alpha-sim": cmd_alpha_sim,
}


def _setup_logging(args):
    level = logging.INFO
    if getattr(args, "verbose", False):
        level = logging.DEBUG
    elif getattr(args, "quiet", False):
        level = logging.WARNING
    logging.basicConfig(level=level, stream=sys.stderr, force=True,
                        format="%(levelname)s %(name)s: %(message)s")


def main(argv=None):
    """Run one ``tobt`` command and return its exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _ArgumentError as e:
        parser.print_usage(sys.stderr)
        sys.stderr.write("tobt: error: {0}\n".format(e))
        return EXIT_INVALID
    except SystemExit as e:
        return e.code
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_INVALID
    _setup_logging(args)
    try:
        settings = resolve(args.command, args)
        manifest = RunManifest(args.command, settings)
        COMMANDS[args.command](settings, manifest)
        manifest.save()
    except (OracleCheckFailure, QuadratureError) as e:
        logger.error("%s", e)
        return EXIT_NUMERICAL
    except DivergenceError as e:
        logger.error("%s", e)
        return EXIT_DIVERGED
    except (ValueError, KeyError, TypeError, IOError, OSError) as e:
        logger.error("%s", e)
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
