# -*- coding: utf-8 -*-

from __future__ import division, print_function

import io
import json
import os

import pytest

from ..cli import main
from ..data import LatentWorld, ingest
from ..policy import PolicyTable
from ..trainer import MarginTrace


def _read(path):
    with io.open(str(path), encoding="utf-8") as f:
        return f.read()


def _gen(out, *extra):
    code = main(["gen-data", "--prompts", "20", "--candidates", "4",
                 "--quant", "0.5", "--seed", "7", "--out", str(out)]
                + list(extra))
    assert code == 0
    return out


def test_oracle_check(tmp_path, capsys):
    assert main(["oracle-check", "--cases", "10", "--out",
                 str(tmp_path)]) == 0
    first = capsys.readouterr().out
    assert "result: PASS" in first
    assert os.path.exists(str(tmp_path / "manifest.json"))
    assert main(["oracle-check", "--cases", "10", "--out",
                 str(tmp_path)]) == 0
    assert capsys.readouterr().out == first


def test_oracle_check_fault(tmp_path, capsys):
    assert main(["oracle-check", "--cases", "5", "--inject-fault",
                 "--out", str(tmp_path)]) == 2
    assert "result: FAIL" in capsys.readouterr().out


def test_gen_data_reproducible(tmp_path):
    a = _gen(tmp_path / "a")
    b = _gen(tmp_path / "b")
    for name in ("world.json", "corpus.jsonl"):
        assert _read(a / name) == _read(b / name)
    assert len(ingest(str(a / "corpus.jsonl"))) == 20 * 6
    manifest = json.loads(_read(a / "manifest.json"))
    assert manifest["command"] == "gen-data"
    assert manifest["seed"] == 7
    assert manifest["config"]["reward_spread"] == 1.0
    assert manifest["config"]["n_prompts"] == 20
    assert len(manifest["outputs"]) == 2
    lines_a = _read(a / "manifest.json").splitlines()
    lines_b = _read(b / "manifest.json").replace(str(b), str(a)).splitlines()
    differing = [x for x, y in zip(lines_a, lines_b) if x != y]
    assert len(lines_a) == len(lines_b)
    assert all('"created"' in line for line in differing)


def test_ingest_resample_and_split(tmp_path):
    data = _gen(tmp_path / "data")
    out = tmp_path / "ingested"
    assert main(["ingest", "--input", str(data / "corpus.jsonl"),
                 "--ratio", "0.1", "--size", "60", "--test-fraction", "0.25",
                 "--seed", "1", "--out", str(out)]) == 0
    train = ingest(str(out / "train.jsonl"))
    test = ingest(str(out / "test.jsonl"))
    assert test.n_ties == 0
    assert len(train) + len(test) <= 60
    manifest = json.loads(_read(out / "manifest.json"))
    assert str(data / "corpus.jsonl") in manifest["inputs"]


def test_train_and_eval(tmp_path, capsys):
    data = _gen(tmp_path / "data")
    runs = []
    for name in ("run1", "run2"):
        out = tmp_path / name
        assert main(["train", "--corpus", str(data / "corpus.jsonl"),
                     "--method", "todo", "--alpha", "0.5", "--beta", "0.01",
                     "--epochs", "2", "--seed", "7", "--out", str(out)]) == 0
        runs.append(out)
    for name in ("policy.json", "margins.csv"):
        assert _read(runs[0] / name) == _read(runs[1] / name)
    policy = PolicyTable.load(str(runs[0] / "policy.json"))
    assert len(policy.prompts) == 20
    trace = MarginTrace.load(str(runs[0] / "margins.csv"))
    assert len(trace) == 2 * 2

    out = tmp_path / "eval"
    assert main(["eval", "--policy", str(runs[0] / "policy.json"),
                 "--test", str(data / "corpus.jsonl"), "--out",
                 str(out)]) == 0
    assert "accuracy" in capsys.readouterr().out
    report = json.loads(_read(out / "report.json"))
    corpus = ingest(str(data / "corpus.jsonl"))
    assert report["n_pairs"] == len(corpus) - corpus.n_ties


def test_config_precedence(tmp_path):
    data = _gen(tmp_path / "data")
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"epochs": 1, "beta": 0.1,
                                  "optimizer": "sgd", "seed": 0}))
    out = tmp_path / "run"
    assert main(["train", "--corpus", str(data / "corpus.jsonl"),
                 "--config", str(config), "--beta", "0.2",
                 "--out", str(out)]) == 0
    resolved = json.loads(_read(out / "manifest.json"))["config"]
    assert resolved["epochs"] == 1
    assert resolved["beta"] == 0.2
    assert resolved["optimizer"] == "sgd"
    assert resolved["learning_rate"] == 0.05
    assert resolved["seed"] == 0


def test_invalid_input(tmp_path):
    assert main(["train", "--out", str(tmp_path)]) == 1
    assert main(["train", "--corpus", str(tmp_path / "missing.jsonl"),
                 "--out", str(tmp_path)]) == 1
    assert main(["gen-data", "--bogus"]) == 1
    assert main(["gen-data", "--prompts", "many"]) == 1
    assert main([]) == 1
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"momentum": 0.9}))
    data = _gen(tmp_path / "data")
    assert main(["train", "--corpus", str(data / "corpus.jsonl"),
                 "--config", str(config), "--out", str(tmp_path)]) == 1
    assert main(["train", "--corpus", str(data / "corpus.jsonl"),
                 "--method", "ipo", "--seed", "0", "--out",
                 str(tmp_path / "x")]) == 1
    assert not os.path.exists(str(tmp_path / "x"))


def test_divergence_exit_code(tmp_path):
    data = _gen(tmp_path / "data")
    corpus = ingest(str(data / "corpus.jsonl"))
    init = PolicyTable.uniform(corpus.registry)
    first = list(init.prompts)[0]
    init.logits[first][0] = float("nan")
    path = tmp_path / "init.json"
    path.write_text(init.dumps())
    out = tmp_path / "run"
    assert main(["train", "--corpus", str(data / "corpus.jsonl"),
                 "--init", str(path), "--seed", "0", "--out",
                 str(out)]) == 3
    assert not os.path.exists(str(out / "policy.json"))


def test_compare(tmp_path, capsys):
    data = tmp_path / "data"
    assert main(["gen-data", "--prompts", "20", "--candidates", "5",
                 "--seed", "3", "--out", str(data)]) == 0
    out = tmp_path / "cmp"
    assert main(["compare", "--world", str(data / "world.json"),
                 "--ratios", "0,0.1", "--methods", "dpo,todo", "--seeds", "2",
                 "--epochs", "1", "--seed", "3", "--out", str(out)]) == 0
    lines = _read(out / "comparison.csv").splitlines()
    assert lines[0] == "tie_ratio,method,seed,accuracy,mean_margin"
    assert len(lines) == 1 + 2 * 2 * 2
    assert set(line.split(",")[2] for line in lines[1:]) == {"3", "4"}
    assert "accuracy" in capsys.readouterr().out


def test_alpha_sim(tmp_path):
    assert main(["alpha-sim", "--alphas", "0.1,0.5,2", "--seed", "1",
                 "--out", str(tmp_path)]) == 0
    lines = _read(tmp_path / "alpha.csv").splitlines()
    assert lines[0] == "alpha,mean_pref_loss,mean_tie_loss,feasible"
    assert len(lines) == 4
    assert lines[2].endswith(",1")
    assert lines[3].endswith(",0")


def test_atomic_write(tmp_path):
    from ..utils import atomic_write, file_digest, text_digest
    path = str(tmp_path / "nested" / "out.txt")
    atomic_write(path, "first\n")
    atomic_write(path, "second\n")
    assert _read(path) == "second\n"
    assert not os.path.exists(path + ".tmp")
    assert file_digest(path) == text_digest("second\n")


@pytest.mark.parametrize("split_by", ["prompt", "pair"])
def test_ingest_train_eval_chain(tmp_path, split_by):
    data = tmp_path / "data"
    assert main(["gen-data", "--prompts", "50", "--seed", "2", "--out",
                 str(data)]) == 0
    parts = tmp_path / "parts"
    assert main(["ingest", "--input", str(data / "corpus.jsonl"),
                 "--ratio", "0.1", "--size", "200", "--test-fraction", "0.2",
                 "--split-by", split_by, "--seed", "2",
                 "--out", str(parts)]) == 0
    run = tmp_path / "run"
    assert main(["train", "--corpus", str(parts / "train.jsonl"),
                 "--epochs", "1", "--seed", "2", "--out", str(run)]) == 0
    world = LatentWorld.load(str(data / "world.json"))
    policy = PolicyTable.load(str(run / "policy.json"))
    assert policy.prompts == PolicyTable.uniform(world.registry).prompts
    out = tmp_path / "eval"
    assert main(["eval", "--policy", str(run / "policy.json"),
                 "--test", str(parts / "test.jsonl"), "--out",
                 str(out)]) == 0
    report = json.loads(_read(out / "report.json"))
    assert report["n_pairs"] == len(ingest(str(parts / "test.jsonl")))


def test_seed_required(tmp_path):
    data = _gen(tmp_path / "data")
    corpus = str(data / "corpus.jsonl")
    assert main(["gen-data", "--out", str(tmp_path / "a")]) == 1
    assert not os.path.exists(str(tmp_path / "a"))
    assert main(["train", "--corpus", corpus, "--out",
                 str(tmp_path / "b")]) == 1
    assert main(["alpha-sim", "--out", str(tmp_path / "c")]) == 1
    assert main(["ingest", "--input", corpus, "--ratio", "0.1",
                 "--out", str(tmp_path / "d")]) == 1
    assert main(["ingest", "--input", corpus, "--out",
                 str(tmp_path / "e")]) == 0
    manifest = json.loads(_read(tmp_path / "e" / "manifest.json"))
    assert manifest["seed"] == 0
