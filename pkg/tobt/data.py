# -*- coding: utf-8 -*-
"""
Preference-pair corpora: JSONL ingestion and emission, tie labelling,
tie-ratio resampling, train/test splits and synthetic corpora drawn from a
latent reward world.

Canonical pair records are one JSON object per line::

    {"prompt_id": "p0001", "y1_id": "r2", "y2_id": "r0",
     "score_1": 8.5, "score_2": 7.0, "is_tie": false}

A non-tie pair always stores the preferred response as ``y1``; a tied pair
stores its two responses in lexicographic order of their ids. Emitted
corpora precede the pairs with one candidate record per prompt::

    {"prompt_id": "p0001", "responses": ["r0", "r1", "r2", "r3"]}

so that responses no pair mentions survive a round trip.
"""

from __future__ import division, print_function

__all__ = ["PreferencePair", "Corpus", "LatentWorld", "CorpusFormatError",
           "ingest", "emit", "dumps_corpus", "quantize",
           "resample_tie_ratio", "feasible_size", "generate_synthetic",
           "split"]

import io
import json
import math
import logging
import itertools
from collections import OrderedDict, namedtuple

import numpy as np

from .model import TieParam, tobt_probs_from_rewards
from .utils import atomic_write

logger = logging.getLogger(__name__)

DEFAULT_QUANTIZATION_STEP = 0.5


class CorpusFormatError(ValueError):
    """A malformed pair record; ``lineno`` is 1-based."""

    def __init__(self, lineno, msg):
        self.lineno = lineno
        super(CorpusFormatError, self).__init__("line {0}: {1}"
                                                .format(lineno, msg))


class PreferencePair(namedtuple("PreferencePair",
                                ["prompt_id", "y1_id", "y2_id", "is_tie",
                                 "score_1", "score_2"])):
    """
    One labelled comparison of two responses to the same prompt.

    ``y1`` is the preferred response unless ``is_tie`` is set. Scores are
    optional raw quality scores.
    """

    __slots__ = ()

    def __new__(cls, prompt_id, y1_id, y2_id, is_tie=False, score_1=None,
                score_2=None):
        if y1_id == y2_id:
            raise ValueError("self-pair {0!r}/{1!r}".format(prompt_id, y1_id))
        return super(PreferencePair, cls).__new__(
            cls, prompt_id, y1_id, y2_id, bool(is_tie),
            None if score_1 is None else float(score_1),
            None if score_2 is None else float(score_2))

    @property
    def key(self):
        """Order-free identity of the pair."""
        return (self.prompt_id, frozenset((self.y1_id, self.y2_id)))

    def swapped(self):
        return self._replace(y1_id=self.y2_id, y2_id=self.y1_id,
                             score_1=self.score_2, score_2=self.score_1)

    def to_record(self):
        return OrderedDict([("prompt_id", self.prompt_id),
                            ("y1_id", self.y1_id),
                            ("y2_id", self.y2_id),
                            ("score_1", self.score_1),
                            ("score_2", self.score_2),
                            ("is_tie", self.is_tie)])


class Corpus(object):
    """
    An immutable ordered collection of :class:`PreferencePair`.

    :param pairs:
        Iterable of pairs.

    :param registry: (default: None)
        Mapping ``prompt_id -> candidate response ids``. When omitted it is
        built from the responses the pairs mention, in order of appearance.
    """

    def __init__(self, pairs, registry=None):
        self.pairs = tuple(pairs)
        if registry is None:
            registry = OrderedDict()
            for p in self.pairs:
                cands = registry.setdefault(p.prompt_id, [])
                for rid in (p.y1_id, p.y2_id):
                    if rid not in cands:
                        cands.append(rid)
        self.registry = OrderedDict((pid, tuple(r))
                                    for pid, r in registry.items())
        for p in self.pairs:
            cands = self.registry.get(p.prompt_id, ())
            if p.y1_id not in cands or p.y2_id not in cands:
                raise ValueError("pair {0!r} refers to unregistered "
                                 "responses".format(p))
        self.n_ties = sum(1 for p in self.pairs if p.is_tie)

    def __len__(self):
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    def __getitem__(self, i):
        return self.pairs[i]

    def __eq__(self, other):
        if not isinstance(other, Corpus):
            return NotImplemented
        return self.pairs == other.pairs and self.registry == other.registry

    def __ne__(self, other):
        eq = self.__eq__(other)
        return eq if eq is NotImplemented else not eq

    __hash__ = None

    def __repr__(self):
        return "<Corpus({0} pairs, tie_ratio={1:.3f})>".format(
            len(self), self.tie_ratio)

    @property
    def tie_ratio(self):
        if not self.pairs:
            return 0.0
        return self.n_ties / len(self.pairs)

    def ties(self):
        return [p for p in self.pairs if p.is_tie]

    def non_ties(self):
        return [p for p in self.pairs if not p.is_tie]

    def restrict(self, pairs, prompts=None):
        """A new corpus over ``pairs`` with the registry cut to ``prompts``
        (default: the prompts ``pairs`` mention)."""
        pairs = list(pairs)
        if prompts is None:
            prompts = set(p.prompt_id for p in pairs)
        registry = OrderedDict((pid, r) for pid, r in self.registry.items()
                               if pid in prompts)
        return Corpus(pairs, registry)


def quantize(score, step):
    """Index of the grid cell of width ``step`` holding ``score``."""
    if step is None:
        return score
    if math.isinf(step):
        return 0.0
    return math.floor(score / step)


def _orient(pair):
    if pair.is_tie:
        if pair.y1_id > pair.y2_id:
            return pair.swapped()
        return pair
    if (pair.score_1 is not None and pair.score_2 is not None
            and pair.score_1 < pair.score_2):
        return pair.swapped()
    return pair


def _parse_candidates(lineno, rec):
    responses = rec["responses"]
    if (not isinstance(responses, list)
            or not all(isinstance(r, str) for r in responses)):
        raise CorpusFormatError(lineno, "'responses' must be a list of ids")
    if len(responses) < 2 or len(set(responses)) != len(responses):
        raise CorpusFormatError(lineno, "'responses' needs at least two "
                                "distinct ids")
    return str(rec["prompt_id"]), tuple(responses)


def _parse_record(lineno, line, quantization_step):
    try:
        rec = json.loads(line)
    except ValueError as e:
        raise CorpusFormatError(lineno, "invalid JSON ({0})".format(e))
    if not isinstance(rec, dict):
        raise CorpusFormatError(lineno, "expected a JSON object")
    if "responses" in rec and "prompt_id" in rec:
        return _parse_candidates(lineno, rec)
    for k in ("prompt_id", "y1_id", "y2_id"):
        if k not in rec:
            raise CorpusFormatError(lineno, "missing field {0!r}".format(k))
    s1, s2 = rec.get("score_1"), rec.get("score_2")
    is_tie = rec.get("is_tie")
    have_scores = s1 is not None and s2 is not None
    if is_tie is None and not have_scores:
        raise CorpusFormatError(lineno, "needs both scores or 'is_tie'")
    try:
        s1 = None if s1 is None else float(s1)
        s2 = None if s2 is None else float(s2)
    except (TypeError, ValueError):
        raise CorpusFormatError(lineno, "scores must be numbers")
    if is_tie is None:
        is_tie = (quantize(s1, quantization_step)
                  == quantize(s2, quantization_step))
    elif not isinstance(is_tie, bool):
        raise CorpusFormatError(lineno, "'is_tie' must be a boolean")
    try:
        pair = PreferencePair(str(rec["prompt_id"]), str(rec["y1_id"]),
                              str(rec["y2_id"]), is_tie, s1, s2)
    except ValueError as e:
        raise CorpusFormatError(lineno, str(e))
    return _orient(pair)


def ingest(path, quantization_step=None):
    """
    Read a JSONL file of pair records into a :class:`Corpus`.

    Pairs carrying an explicit ``is_tie`` keep it; otherwise a pair is tied
    exactly when its two scores fall into the same cell of the
    ``quantization_step`` grid (exact equality when the step is ``None``).
    Non-tie pairs are oriented so that ``score_1 >= score_2``.

    Candidate records ``{"prompt_id": ..., "responses": [...]}`` fix the
    full candidate list of a prompt, including responses no pair mentions.
    Prompts without one get the responses their pairs mention, in order of
    appearance, after all declared prompts.

    :param path:
        Path of the JSONL file (UTF-8).

    :param quantization_step: (default: None)
        Width of the score grid used for tie labelling.

    :raises CorpusFormatError:
        For malformed records, records lacking both scores and ``is_tie``,
        self-pairs, duplicate unordered pairs, duplicate candidate records
        and pairs naming responses missing from their prompt's candidate
        record.
    """
    pairs, seen = [], {}
    declared, declared_at = OrderedDict(), {}
    with io.open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue
            rec = _parse_record(lineno, line, quantization_step)
            if not isinstance(rec, PreferencePair):
                pid, responses = rec
                if pid in declared:
                    raise CorpusFormatError(lineno, "candidates of {0!r} "
                                            "already given on line {1}"
                                            .format(pid, declared_at[pid]))
                declared[pid], declared_at[pid] = responses, lineno
                continue
            if rec.key in seen:
                raise CorpusFormatError(lineno, "duplicate of the pair on "
                                        "line {0}".format(seen[rec.key]))
            seen[rec.key] = lineno
            pairs.append(rec)
    registry = OrderedDict((pid, list(r)) for pid, r in declared.items())
    for p in pairs:
        cands = registry.setdefault(p.prompt_id, [])
        for rid in (p.y1_id, p.y2_id):
            if rid in cands:
                continue
            if p.prompt_id in declared:
                raise CorpusFormatError(seen[p.key], "response {0!r} is not "
                                        "a candidate of {1!r}".format(
                                            rid, p.prompt_id))
            cands.append(rid)
    corpus = Corpus(pairs, registry)
    logger.info("ingested %d pairs (%d ties) over %d prompts from %s",
                len(corpus), corpus.n_ties, len(corpus.registry), path)
    return corpus


def dumps_corpus(corpus):
    """
    The canonical JSONL text of ``corpus``: one candidate record per
    registered prompt, then the pairs.
    """
    lines = [json.dumps(OrderedDict([("prompt_id", pid),
                                     ("responses", list(r))]))
             for pid, r in corpus.registry.items()]
    lines.extend(json.dumps(p.to_record()) for p in corpus)
    return "".join(line + "\n" for line in lines)


def emit(corpus, path):
    """Write ``corpus`` to ``path`` as canonical JSONL."""
    return atomic_write(path, dumps_corpus(corpus))


def feasible_size(n_ties, n_other, ratio):
    n = n_ties + n_other
    while n > 0:
        k = int(math.floor(n * ratio))
        if k <= n_ties and n - k <= n_other:
            return n
        n -= 1
    return 0


def resample_tie_ratio(corpus, target_ratio, seed, size=None):
    """
    Stratified subsample with exactly ``floor(size * target_ratio)`` tied
    pairs among ``size`` output pairs.

    Each stratum is sampled uniformly without replacement and the output
    order is a seeded permutation of the selection.

    :param target_ratio:
        Tie fraction in ``[0, 1]``.

    :param seed:
        Integer seed.

    :param size: (default: None)
        Output size; defaults to the largest feasible size.

    :raises ValueError:
        If a stratum is too small for the requested size.
    """
    if not 0 <= target_ratio <= 1:
        raise ValueError("target_ratio must lie in [0, 1], got {0!r}"
                         .format(target_ratio))
    ties, others = corpus.ties(), corpus.non_ties()
    if size is None:
        size = feasible_size(len(ties), len(others), target_ratio)
    size = int(size)
    n_tie = int(math.floor(size * target_ratio))
    n_other = size - n_tie
    if size <= 0 or n_tie > len(ties) or n_other > len(others):
        raise ValueError("infeasible resample: need {0} tie + {1} non-tie "
                         "pairs, corpus has {2} + {3}".format(
                             n_tie, n_other, len(ties), len(others)))
    rng = np.random.default_rng(seed)
    pick_t = rng.choice(len(ties), size=n_tie, replace=False)
    pick_o = rng.choice(len(others), size=n_other, replace=False)
    chosen = [ties[i] for i in pick_t] + [others[i] for i in pick_o]
    order = rng.permutation(len(chosen))
    return Corpus([chosen[i] for i in order], corpus.registry)


def split(corpus, test_fraction, seed, exclude_ties_from_test=True,
          by="prompt"):
    """
    Split a corpus into ``(train, test)``.

    :param test_fraction:
        Fraction of prompts (``by="prompt"``) or pairs (``by="pair"``) sent
        to the test side; in ``(0, 1)``.

    :param exclude_ties_from_test: (default: True)
        Keep only non-tie pairs on the test side. With a prompt-level split
        the removed ties are dropped; with a pair-level split they go back
        to the training side.

    :param by: (default: "prompt")
        ``"prompt"`` keeps every prompt on one side only; ``"pair"`` splits
        individual pairs, so both sides share prompts but not pairs.
    """
    if not 0 < test_fraction < 1:
        raise ValueError("test_fraction must lie in (0, 1), got {0!r}"
                         .format(test_fraction))
    rng = np.random.default_rng(seed)
    if by == "prompt":
        present = set(p.prompt_id for p in corpus)
        prompts = [pid for pid in corpus.registry if pid in present]
        n_test = int(round(test_fraction * len(prompts)))
        if n_test < 1 or n_test >= len(prompts):
            raise ValueError("infeasible split: {0} prompts at fraction {1}"
                             .format(len(prompts), test_fraction))
        order = rng.permutation(len(prompts))
        test_prompts = set(prompts[i] for i in order[:n_test])
        train = [p for p in corpus if p.prompt_id not in test_prompts]
        test = [p for p in corpus if p.prompt_id in test_prompts]
        if exclude_ties_from_test:
            test = [p for p in test if not p.is_tie]
        train_prompts = set(prompts) - test_prompts
    elif by == "pair":
        n_test = int(round(test_fraction * len(corpus)))
        if n_test < 1 or n_test >= len(corpus):
            raise ValueError("infeasible split: {0} pairs at fraction {1}"
                             .format(len(corpus), test_fraction))
        order = rng.permutation(len(corpus))
        is_test = np.zeros(len(corpus), dtype=bool)
        is_test[order[:n_test]] = True
        if exclude_ties_from_test:
            is_test &= np.array([not p.is_tie for p in corpus], dtype=bool)
        train = [p for p, t in zip(corpus, is_test) if not t]
        test = [p for p, t in zip(corpus, is_test) if t]
        train_prompts = test_prompts = None
    else:
        raise ValueError("by must be 'prompt' or 'pair', got {0!r}"
                         .format(by))
    if not test:
        raise ValueError("infeasible split: empty test side")
    return (corpus.restrict(train, train_prompts),
            corpus.restrict(test, test_prompts))


class LatentWorld(object):
    """
    A synthetic world of latent rewards ``r*(x, y)`` from which preference
    pairs are labelled.

    :param rewards:
        Mapping ``(prompt_id, response_id) -> reward``, in registry order.

    :param gen_alpha:
        :class:`TieParam` used by ``labeling="tobt"``.

    :param quantization_step:
        Width of the reward grid used by ``labeling="quantized"``; may be
        ``inf`` (a single cell).

    :param seed: (default: 0)
        Seed the world was drawn with; also drives ``"tobt"`` labelling.

    :param labeling: (default: "quantized")
        ``"quantized"``: a pair is tied exactly when both rewards fall in the
        same grid cell, otherwise the higher reward is ``y1``.
        ``"tobt"``: each pair's rank is drawn from the TOBT distribution of
        its two rewards.
    """

    LABELINGS = ("quantized", "tobt")

    def __init__(self, rewards, gen_alpha, quantization_step, seed=0,
                 labeling="quantized"):
        self.rewards = OrderedDict(rewards)
        self.gen_alpha = (gen_alpha if isinstance(gen_alpha, TieParam)
                          else TieParam(gen_alpha))
        quantization_step = float(quantization_step)
        if not quantization_step > 0:
            raise ValueError("quantization_step must be positive, got {0!r}"
                             .format(quantization_step))
        if labeling not in self.LABELINGS:
            raise ValueError("labeling must be one of {0}, got {1!r}"
                             .format(self.LABELINGS, labeling))
        self.quantization_step = quantization_step
        self.seed = int(seed)
        self.labeling = labeling
        self.registry = OrderedDict()
        for pid, rid in self.rewards:
            self.registry.setdefault(pid, []).append(rid)

    def __repr__(self):
        return "<LatentWorld({0} prompts, step={1:g})>".format(
            len(self.registry), self.quantization_step)

    def _label(self, pid, a, b, rng):
        ra, rb = self.rewards[pid, a], self.rewards[pid, b]
        if self.labeling == "quantized":
            tie = (quantize(ra, self.quantization_step)
                   == quantize(rb, self.quantization_step))
            pair = PreferencePair(pid, a, b, tie, ra, rb)
        else:
            # Sampled labels may contradict the rewards, so no scores are
            # attached and the draw alone fixes the orientation.
            probs = tobt_probs_from_rewards(ra, rb, self.gen_alpha)
            u = rng.random()
            if u < probs.prefer:
                pair = PreferencePair(pid, a, b)
            elif u < probs.prefer + probs.disprefer:
                pair = PreferencePair(pid, b, a)
            else:
                pair = PreferencePair(pid, a, b, True)
        return _orient(pair)

    def corpus(self):
        """All unordered candidate pairs of every prompt, labelled."""
        rng = np.random.default_rng(self.seed)
        pairs = []
        for pid, cands in self.registry.items():
            for a, b in itertools.combinations(cands, 2):
                pairs.append(self._label(pid, a, b, rng))
        return Corpus(pairs, self.registry)

    def to_dict(self):
        return OrderedDict([
            ("rewards", [OrderedDict([("prompt_id", p), ("response_id", r),
                                      ("r", v)])
                         for (p, r), v in self.rewards.items()]),
            ("quantization_step", self.quantization_step),
            ("seed", self.seed),
            ("alpha", self.gen_alpha.alpha),
            ("labeling", self.labeling),
        ])

    def dumps(self):
        return json.dumps(self.to_dict(), indent=1) + "\n"

    @classmethod
    def from_dict(cls, d):
        rewards = OrderedDict(((e["prompt_id"], e["response_id"]),
                               float(e["r"])) for e in d["rewards"])
        return cls(rewards, d.get("alpha", 0.0), d["quantization_step"],
                   d.get("seed", 0), d.get("labeling", "quantized"))

    @classmethod
    def load(cls, path):
        with io.open(path, encoding="utf-8") as f:
            return cls.from_dict(json.load(f))


def generate_synthetic(n_prompts, candidates_per_prompt, reward_spread, tp,
                       quantization_step=DEFAULT_QUANTIZATION_STEP, seed=0,
                       labeling="quantized"):
    """
    Draw a :class:`LatentWorld` and label its corpus.

    Rewards are i.i.d. ``Normal(0, reward_spread**2)``; prompt ``i`` is
    named ``"p%04d"`` and its candidates ``"r0"``, ``"r1"``, ...

    :returns:
        ``(world, corpus)``
    """
    n_prompts, k = int(n_prompts), int(candidates_per_prompt)
    if n_prompts < 1:
        raise ValueError("n_prompts must be >= 1")
    if k < 2:
        raise ValueError("candidates_per_prompt must be >= 2")
    if not reward_spread >= 0:
        raise ValueError("reward_spread must be non-negative")
    rng = np.random.default_rng(seed)
    draws = rng.normal(0.0, reward_spread, size=(n_prompts, k))
    rewards = OrderedDict()
    for i in range(n_prompts):
        for j in range(k):
            rewards["p{0:04d}".format(i), "r{0}".format(j)] = float(draws[i, j])
    world = LatentWorld(rewards, tp, quantization_step, seed, labeling)
    corpus = world.corpus()
    logger.info("synthetic corpus: %d pairs, tie ratio %.4f", len(corpus),
                corpus.tie_ratio)
    return world, corpus
