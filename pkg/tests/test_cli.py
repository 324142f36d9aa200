import json
import os

import pytest

from memdialog import cli, corpus


def run(argv):
    return cli.main(argv)


class TestParser:
    def test_requires_subcommand(self):
        with pytest.raises(SystemExit):
            cli.build_parser().parse_args([])

    def test_train_defaults(self):
        args = cli.build_parser().parse_args(
            ["train", "--data", "d", "--out", "o"])
        cfg = cli._config_from_args(args)
        assert cfg.nlg == "candidates"
        assert cfg.encoding == "position"
        # per-head defaults resolve to the published settings
        resolved = cfg.resolved()
        assert resolved.lr == pytest.approx(0.0058)
        assert resolved.d == 44
        assert resolved.n_hops == 1

    def test_flags_override_config_file(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"d": 10, "lr": 0.5, "epochs": 2}))
        args = cli.build_parser().parse_args(
            ["train", "--data", "d", "--out", "o",
             "--config", str(path), "--dim", "7"])
        cfg = cli._config_from_args(args)
        assert cfg.d == 7          # flag wins
        assert cfg.lr == 0.5       # file value kept
        assert cfg.epochs == 2


class TestSimulateData:
    def test_writes_all_files(self, tmp_path, capsys):
        out = tmp_path / "corpus"
        assert run(["simulate-data", "--out", str(out),
                    "--dialogs", "8"]) == 0
        files = os.listdir(out)
        assert len([f for f in files if f.endswith(".txt")]) == 4
        splits, candidates = corpus.load_task(str(out), 1)
        assert len(splits["trn"]) == 8
        assert len(candidates.responses) > 100

    def test_deterministic_across_runs(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        run(["simulate-data", "--out", str(a), "--dialogs", "5"])
        run(["simulate-data", "--out", str(b), "--dialogs", "5"])
        for name in os.listdir(a):
            assert (a / name).read_text() == (b / name).read_text()


@pytest.fixture(scope="module")
def trained(sim_corpus_dir, tmp_path_factory):
    out = tmp_path_factory.mktemp("cli-train") / "model.ckpt"
    rc = cli.main(["train", "--data", sim_corpus_dir, "--out", str(out),
                   "--epochs", "8", "--eval-every", "2", "--dim", "20",
                   "--init-mean", "0", "--stop-at-perfect",
                   "--encoding", "bow"])
    assert rc == 0
    return str(out)


class TestTrainEval:
    def test_checkpoint_written(self, trained):
        assert os.path.exists(trained)

    def test_train_echoes_config(self, sim_corpus_dir, tmp_path, capsys):
        out = tmp_path / "m.ckpt"
        log = tmp_path / "metrics.jsonl"
        rc = run(["train", "--data", sim_corpus_dir, "--out", str(out),
                  "--epochs", "1", "--dim", "8", "--init-mean", "0",
                  "--metrics-log", str(log)])
        assert rc == 0
        printed = capsys.readouterr().out
        assert printed.startswith("config: ")
        assert json.loads(printed.splitlines()[0][len("config: "):])["d"] == 8
        records = [json.loads(l) for l in log.read_text().splitlines()]
        assert records and set(records[0]) == {"epoch", "train_loss",
                                               "val_accuracy"}

    def test_eval_prints_accuracy(self, trained, sim_corpus_dir, capsys):
        assert run(["eval", "--model", trained, "--data", sim_corpus_dir,
                    "--per-dialog"]) == 0
        out = capsys.readouterr().out
        assert out.startswith("task 1 tst: ")
        assert "(" in out and ")" in out

    def test_eval_missing_model(self, sim_corpus_dir, capsys):
        assert run(["eval", "--model", "/nonexistent.ckpt",
                    "--data", sim_corpus_dir]) == 1

    def test_eval_corrupt_model(self, tmp_path, sim_corpus_dir):
        bad = tmp_path / "bad.ckpt"
        bad.write_bytes(b"garbage" * 20)
        assert run(["eval", "--model", str(bad),
                    "--data", sim_corpus_dir]) == 1

    def test_perturb_runs(self, trained, capsys):
        assert run(["perturb", "--model", trained]) == 0
        out = capsys.readouterr().out
        assert "modified-utterance dialogs: 1500" in out
        assert "per-dialog accuracy" in out

    def test_bench_kernels(self, capsys):
        assert run(["bench", "--kernels", "--trials", "1"]) == 0
        out = capsys.readouterr().out
        assert "machine:" in out
        assert "embed_bow" in out

    def test_bench_latency(self, trained, sim_corpus_dir, capsys):
        assert run(["bench", "--model", trained, "--data", sim_corpus_dir,
                    "--candidates", "1300,2600", "--trials", "3"]) == 0
        out = capsys.readouterr().out
        assert "C=1300" in out and "C=2600" in out
        assert "median" in out and "bytes" in out

    def test_serve_requires_model(self, monkeypatch):
        monkeypatch.delenv("MODEL_PATH", raising=False)
        with pytest.raises(SystemExit):
            run(["serve"])


class TestTable:
    def test_small_grid(self, sim_corpus_dir, tmp_path, capsys):
        records_path = tmp_path / "cells.jsonl"
        rc = run(["table", "--data", sim_corpus_dir,
                  "--budget", "epochs=1,runs=1,d=8,init_mean=0",
                  "--records", str(records_path)])
        assert rc == 0
        out = capsys.readouterr().out
        assert "task 1" in out
        assert "skipped" in out  # tasks 2-6 have no files in the sim corpus
        records = [json.loads(l) for l in records_path.read_text().splitlines()]
        task1 = [r for r in records if r["row"] == "task 1"]
        assert len(task1) == 4
        assert all("response_accuracy" in r for r in task1)

    def test_unknown_budget_field(self, sim_corpus_dir):
        with pytest.raises(SystemExit):
            run(["table", "--data", sim_corpus_dir, "--budget", "bogus=1"])
