# -*- coding: utf-8 -*-

from __future__ import division, print_function

import json

import pytest

from ..model import TieParam
from ..data import (PreferencePair, Corpus, LatentWorld, CorpusFormatError,
                    ingest, emit, dumps_corpus, quantize, resample_tie_ratio,
                    feasible_size, generate_synthetic, split)


def _write_jsonl(tmp_path, records, name="pairs.jsonl"):
    path = tmp_path / name
    path.write_text("".join(json.dumps(r) + "\n" for r in records))
    return str(path)


def _strata_corpus(n=1000, n_ties=300):
    return Corpus([PreferencePair("p{0:04d}".format(i), "a", "b", i < n_ties)
                   for i in range(n)])


def test_ingest_labels_and_orientation(tmp_path):
    path = _write_jsonl(tmp_path, [
        {"prompt_id": "x", "y1_id": "b", "y2_id": "a",
         "score_1": 8.5, "score_2": 8.5},
        {"prompt_id": "x", "y1_id": "a", "y2_id": "c",
         "score_1": 8.5, "score_2": 7.0},
        {"prompt_id": "x", "y1_id": "c", "y2_id": "b",
         "score_1": 7.0, "score_2": 8.5},
        {"prompt_id": "y", "y1_id": "u", "y2_id": "v", "is_tie": True},
    ])
    corpus = ingest(path)
    tie, clear, swapped, explicit = corpus.pairs
    assert tie.is_tie and (tie.y1_id, tie.y2_id) == ("a", "b")
    assert not clear.is_tie and clear.y1_id == "a"
    assert (swapped.y1_id, swapped.y2_id) == ("b", "c")
    assert (swapped.score_1, swapped.score_2) == (8.5, 7.0)
    assert explicit.is_tie and explicit.score_1 is None
    assert corpus.n_ties == 2
    assert corpus.tie_ratio == 0.5
    assert corpus.registry["x"] == ("a", "b", "c")
    for p in corpus.non_ties():
        assert p.score_1 >= p.score_2


def test_ingest_quantized_ties(tmp_path):
    path = _write_jsonl(tmp_path, [
        {"prompt_id": "x", "y1_id": "a", "y2_id": "b",
         "score_1": 8.6, "score_2": 8.9},
        {"prompt_id": "x", "y1_id": "a", "y2_id": "c",
         "score_1": 8.6, "score_2": 9.1},
    ])
    assert ingest(path).n_ties == 0
    corpus = ingest(path, quantization_step=0.5)
    assert [p.is_tie for p in corpus] == [True, False]


@pytest.mark.parametrize("line,lineno", [
    ("{not json", 2),
    (json.dumps({"prompt_id": "x", "y1_id": "a"}), 2),
    (json.dumps({"prompt_id": "x", "y1_id": "a", "y2_id": "c"}), 2),
    (json.dumps({"prompt_id": "x", "y1_id": "a", "y2_id": "a",
                 "is_tie": True}), 2),
    (json.dumps({"prompt_id": "x", "y1_id": "b", "y2_id": "a",
                 "is_tie": False}), 2),
    (json.dumps({"prompt_id": "x", "y1_id": "a", "y2_id": "c",
                 "is_tie": "yes"}), 2),
    (json.dumps([1, 2]), 2),
])
def test_ingest_errors(tmp_path, line, lineno):
    first = json.dumps({"prompt_id": "x", "y1_id": "a", "y2_id": "b",
                        "is_tie": False})
    path = tmp_path / "bad.jsonl"
    path.write_text(first + "\n" + line + "\n")
    with pytest.raises(CorpusFormatError) as excinfo:
        ingest(str(path))
    assert excinfo.value.lineno == lineno
    assert isinstance(excinfo.value, ValueError)


def test_round_trip(tmp_path):
    _, corpus = generate_synthetic(20, 4, 1.0, TieParam(0.5), seed=5)
    path = str(tmp_path / "corpus.jsonl")
    emit(corpus, path)
    again = ingest(path)
    assert again == corpus
    assert list(again.registry) == list(corpus.registry)
    assert dumps_corpus(again) == dumps_corpus(corpus)


def test_round_trip_keeps_unpaired_candidates(tmp_path):
    _, corpus = generate_synthetic(30, 5, 1.0, TieParam(0.5), seed=2)
    subset = resample_tie_ratio(corpus, 0.1, seed=0, size=20)
    path = str(tmp_path / "subset.jsonl")
    emit(subset, path)
    again = ingest(path)
    assert again == subset
    assert again.registry == corpus.registry
    assert all(len(r) == 5 for r in again.registry.values())


def test_candidate_records(tmp_path):
    path = _write_jsonl(tmp_path, [
        {"prompt_id": "x", "y1_id": "a", "y2_id": "b", "is_tie": False},
        {"prompt_id": "y", "responses": ["u", "v", "w"]},
        {"prompt_id": "y", "y1_id": "w", "y2_id": "u", "is_tie": False},
    ])
    corpus = ingest(path)
    assert list(corpus.registry) == ["y", "x"]
    assert corpus.registry["y"] == ("u", "v", "w")
    assert corpus.registry["x"] == ("a", "b")


@pytest.mark.parametrize("records,lineno", [
    ([{"prompt_id": "y", "responses": ["u", "v"]},
      {"prompt_id": "y", "responses": ["u", "w"]}], 2),
    ([{"prompt_id": "y", "responses": ["u", "u"]}], 1),
    ([{"prompt_id": "y", "responses": "uv"}], 1),
    ([{"prompt_id": "y", "y1_id": "u", "y2_id": "z", "is_tie": True},
      {"prompt_id": "y", "responses": ["u", "v"]}], 1),
])
def test_candidate_record_errors(tmp_path, records, lineno):
    path = _write_jsonl(tmp_path, records)
    with pytest.raises(CorpusFormatError) as excinfo:
        ingest(path)
    assert excinfo.value.lineno == lineno


def test_quantize():
    assert quantize(8.5, 0.5) == quantize(8.9, 0.5)
    assert quantize(8.4, 0.5) != quantize(8.5, 0.5)
    assert quantize(-3.0, float("inf")) == quantize(7.0, float("inf"))
    assert quantize(1.25, None) == 1.25


def test_self_pair_rejected():
    with pytest.raises(ValueError):
        PreferencePair("x", "a", "a")


def test_corpus_rejects_unregistered():
    with pytest.raises(ValueError):
        Corpus([PreferencePair("x", "a", "b")], {"x": ["a", "c"]})


def test_resample_tie_ratio():
    corpus = _strata_corpus()
    out = resample_tie_ratio(corpus, 0.2, seed=1, size=500)
    assert len(out) == 500
    assert out.n_ties == 100
    assert out.tie_ratio == 0.2
    assert resample_tie_ratio(corpus, 0.2, seed=1, size=500) == out
    assert resample_tie_ratio(corpus, 0.2, seed=2, size=500) != out
    assert resample_tie_ratio(corpus, 0.0, seed=1, size=500).n_ties == 0
    assert len(set(p.key for p in out)) == 500


def test_resample_default_size():
    corpus = _strata_corpus()
    assert feasible_size(300, 700, 0.3) == 1000
    assert feasible_size(300, 700, 0.5) == 601
    out = resample_tie_ratio(corpus, 0.5, seed=0)
    assert len(out) == 601
    assert out.n_ties == 300


def test_resample_infeasible():
    corpus = _strata_corpus()
    with pytest.raises(ValueError):
        resample_tie_ratio(corpus, 0.5, seed=0, size=1000)
    with pytest.raises(ValueError):
        resample_tie_ratio(corpus, 1.5, seed=0)


def test_split_by_prompt():
    _, corpus = generate_synthetic(50, 4, 1.0, TieParam(0.5), seed=2)
    assert corpus.n_ties > 0
    train, test = split(corpus, 0.2, seed=3)
    assert test.n_ties == 0
    assert not set(train.registry) & set(test.registry)
    assert not set(p.prompt_id for p in train) & set(p.prompt_id
                                                     for p in test)
    assert split(corpus, 0.2, seed=3) == (train, test)
    with_ties = split(corpus, 0.2, seed=3, exclude_ties_from_test=False)[1]
    assert len(with_ties) >= len(test)


def test_split_without_ties_ignores_exclusion():
    _, corpus = generate_synthetic(30, 3, 1.0, TieParam(0.5),
                                   quantization_step=1e-12, seed=4)
    assert corpus.n_ties == 0
    a = split(corpus, 0.2, seed=0, exclude_ties_from_test=True)
    b = split(corpus, 0.2, seed=0, exclude_ties_from_test=False)
    assert a[1] == b[1]


def test_split_by_pair():
    _, corpus = generate_synthetic(40, 4, 1.0, TieParam(0.5), seed=6)
    train, test = split(corpus, 0.25, seed=1, by="pair")
    assert test.n_ties == 0
    assert len(train) + len(test) == len(corpus)
    assert not set(p.key for p in train) & set(p.key for p in test)
    with pytest.raises(ValueError):
        split(corpus, 0.25, seed=1, by="response")
    with pytest.raises(ValueError):
        split(corpus, 1.0, seed=1)


def test_generate_synthetic_extremes():
    _, fine = generate_synthetic(30, 4, 1.0, TieParam(0.5),
                                 quantization_step=1e-12, seed=0)
    assert fine.tie_ratio == 0.0
    _, coarse = generate_synthetic(30, 4, 1.0, TieParam(0.5),
                                   quantization_step=float("inf"), seed=0)
    assert coarse.tie_ratio == 1.0
    assert len(coarse) == 30 * 6


def test_generate_synthetic_default_band():
    world, corpus = generate_synthetic(200, 4, 1.0, TieParam(0.5),
                                       quantization_step=0.5, seed=0)
    assert len(corpus) == 1200
    assert 0.08 <= corpus.tie_ratio <= 0.22
    assert len(world.rewards) == 800
    for p in corpus.non_ties():
        assert p.score_1 >= p.score_2
    again = generate_synthetic(200, 4, 1.0, TieParam(0.5),
                               quantization_step=0.5, seed=0)[1]
    assert again == corpus


def test_tobt_labeling():
    world, corpus = generate_synthetic(100, 4, 0.5, TieParam(1.0),
                                       seed=9, labeling="tobt")
    assert 0 < corpus.n_ties < len(corpus)
    assert all(p.score_1 is None for p in corpus)
    ties = corpus.ties()
    assert all(p.y1_id < p.y2_id for p in ties)
    assert LatentWorld.from_dict(json.loads(world.dumps())).corpus() == corpus


def test_world_round_trip(tmp_path):
    world, corpus = generate_synthetic(10, 3, 2.0, TieParam(0.5), seed=1)
    path = tmp_path / "world.json"
    path.write_text(world.dumps())
    loaded = LatentWorld.load(str(path))
    assert loaded.rewards == world.rewards
    assert loaded.registry == world.registry
    assert loaded.corpus() == corpus
    with pytest.raises(ValueError):
        LatentWorld(world.rewards, 0.5, 0.0)
    with pytest.raises(ValueError):
        LatentWorld(world.rewards, 0.5, 0.5, labeling="noisy")


def test_generate_synthetic_validation():
    with pytest.raises(ValueError):
        generate_synthetic(0, 4, 1.0, TieParam(0.5))
    with pytest.raises(ValueError):
        generate_synthetic(5, 1, 1.0, TieParam(0.5))
