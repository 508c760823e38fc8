import argparse
import json
import subprocess
import sys

import pytest

from conftest import FakeNode
from defiscan.cli import EXIT_ENV, EXIT_OK, EXIT_USER, FINAL_MODEL_OPCODES, main, parse_feature_list, resolve_config
from defiscan.features import load_matrix, save_matrix

SUBCOMMANDS = ["fetch", "disassemble", "featurize", "explore", "evaluate", "stats", "report"]


def addr(i):
    return "0x" + f"{i:040x}"


@pytest.fixture
def features_csv(tmp_path, synthetic_corpus):
    path = tmp_path / "features.csv"
    save_matrix(synthetic_corpus, path)
    return path


@pytest.mark.parametrize("cmd", SUBCOMMANDS)
def test_help(cmd, capsys):
    with pytest.raises(SystemExit) as e:
        main([cmd, "--help"])
    assert e.value.code == 0
    assert "--seed" in capsys.readouterr().out


def test_entry_point_script():
    out = subprocess.run([sys.executable, "-m", "defiscan.cli", "disassemble", "0x6001"],
                         capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.strip() == "0000 PUSH1 0x01"


def test_disassemble(capsys, tmp_path):
    assert main(["disassemble", "0x6080604052611f"]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines == ["0000 PUSH1 0x80", "0002 PUSH1 0x40", "0004 MSTORE", "0005 PUSH2 0x1f (truncated)"]
    f = tmp_path / "code.hex"
    f.write_text("0x00\n")
    assert main(["disassemble", str(f), "--format", "json"]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["mnemonic"] == "STOP"
    assert main(["disassemble", "0x608"]) == EXIT_USER
    assert "odd" in capsys.readouterr().err


def write_lists(tmp_path):
    v = tmp_path / "v.csv"
    l = tmp_path / "l.csv"
    v.write_text("address\n" + addr(1) + "\n" + addr(2) + "\n")
    l.write_text("address\n" + addr(2) + "\n" + addr(3) + "\n")
    return v, l


def test_fetch_then_warm_cache(tmp_path, capsys):
    v, l = write_lists(tmp_path)
    codes = {addr(1): "0x600160020100", addr(2): "0x33", addr(3): "0x6000"}
    argv = ["fetch", str(v), str(l), "--cache-dir", str(tmp_path / "c"), "--out", str(tmp_path / "corpus.csv")]
    with FakeNode(codes) as node:
        assert main(argv + ["--endpoint", node.url]) == EXIT_OK
        assert len(node.requests) == 3
    out = capsys.readouterr().out
    assert "3 contracts (2 violations, 1 overlaps relabeled)" in out
    first = (tmp_path / "corpus.csv").read_text()
    # the node is gone: a warm cache must not touch the network
    assert main(argv + ["--endpoint", "http://127.0.0.1:9/"]) == EXIT_OK
    assert "network calls: 0" in capsys.readouterr().out
    assert (tmp_path / "corpus.csv").read_text() == first


def test_fetch_without_endpoint_is_env_error(tmp_path, capsys, monkeypatch):
    monkeypatch.delenv("DEFISCAN_ENDPOINT", raising=False)
    v, _ = write_lists(tmp_path)
    assert main(["fetch", str(v), "--cache-dir", str(tmp_path / "c")]) == EXIT_ENV


def test_featurize_is_byte_stable(tmp_path, capsys):
    v, l = write_lists(tmp_path)
    codes = {addr(1): "0x600160020100", addr(2): "0x33", addr(3): "0x6000"}
    with FakeNode(codes) as node:
        main(["fetch", str(v), str(l), "--endpoint", node.url, "--cache-dir", str(tmp_path / "c"),
              "--out", str(tmp_path / "corpus.csv")])
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["featurize", str(tmp_path / "corpus.csv"), "--out", str(a)]) == EXIT_OK
    assert main(["featurize", str(tmp_path / "corpus.csv"), "--out", str(b)]) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()
    m = load_matrix(a)
    assert m.schema.mnemonics == ("ADD", "CALLER", "PUSH1", "STOP")
    assert m.n_rows == 3


def test_evaluate_deterministic(features_csv, tmp_path, capsys):
    outs = []
    for d in ("r1", "r2"):
        assert main(["evaluate", str(features_csv), "--iterations", "1", "--seed", "7", "--trees", "10",
                     "--name", "x", "--format", "json", "--out", str(tmp_path / d)]) == EXIT_OK
        outs.append(capsys.readouterr().out)
    assert outs[0] == outs[1]
    assert (tmp_path / "r1" / "report-x.json").read_bytes() == (tmp_path / "r2" / "report-x.json").read_bytes()
    assert json.loads(outs[0])[0]["config"]["base_seed"] == 7


def test_evaluate_subset_and_report(features_csv, tmp_path, capsys):
    assert main(["evaluate", str(features_csv), "--family", "logistic", "--features", "OP000,op001",
                 "--iterations", "2", "--name", "LR", "--out", str(tmp_path)]) == EXIT_OK
    capsys.readouterr()
    assert main(["report", str(tmp_path)]) == EXIT_OK
    assert "best by weighted F1: LR" in capsys.readouterr().out
    assert main(["evaluate", str(features_csv), "--features", "FOO", "--iterations", "1"]) == EXIT_USER


def test_stats(features_csv, tmp_path, capsys):
    assert main(["stats", str(features_csv), "--opcodes", "OP000,OP001", "--format", "csv"]) == EXIT_OK
    rows = capsys.readouterr().out.splitlines()
    assert rows[0].startswith("opcode,mean_violation") and len(rows) == 3
    assert main(["stats", str(features_csv), "--opcodes", "FOO"]) == EXIT_USER
    assert "FOO" in capsys.readouterr().err
    # default opcode list is the ten-feature final model, absent here
    assert main(["stats", str(features_csv)]) == EXIT_USER
    assert len(FINAL_MODEL_OPCODES) == 10


def test_explore_json(features_csv, capsys):
    assert main(["explore", str(features_csv), "--strength", "0.05", "--format", "json"]) == EXIT_OK
    doc = json.loads(capsys.readouterr().out)
    assert doc["coefficients"][0][0] == "OP000"
    assert doc["nonzero"] == len(doc["coefficients"])


def test_missing_file_exit_code(capsys):
    assert main(["featurize", "/nonexistent/corpus.csv"]) == EXIT_ENV


def ns(**kw):
    base = dict(config=None, endpoint=None, cache_dir=None, seed=None, iterations=None,
                output_dir=None, format=None, jobs=None)
    base.update(kw)
    return argparse.Namespace(**base)


def test_config_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\nseed = 3\niterations = 5\nendpoint = http://file\n")
    assert resolve_config(ns(config=str(cfg)), {}).base_seed == 3
    env = {"DEFISCAN_SEED": "4", "DEFISCAN_ENDPOINT": "http://env"}
    r = resolve_config(ns(config=str(cfg)), env)
    assert (r.base_seed, r.iterations, r.endpoint) == (4, 5, "http://env")
    r = resolve_config(ns(config=str(cfg), seed=5), env)
    assert r.base_seed == 5
    assert resolve_config(ns(), {}).iterations == 100
    with pytest.raises(ValueError):
        resolve_config(ns(seed=-1), {})


def test_bad_config_file_is_user_error(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("seed 3\n")
    assert main(["disassemble", "0x00", "--config", str(cfg)]) == EXIT_USER


def test_parse_feature_list(tmp_path):
    assert parse_feature_list(None) is None and parse_feature_list("all") is None
    assert parse_feature_list("lt, Exp") == ("LT", "EXP")
    f = tmp_path / "f.txt"
    f.write_text("LT\nEXP\n\n")
    assert parse_feature_list("@" + str(f)) == ("LT", "EXP")
