# -*- coding: utf-8 -*-
'''
Testing the command line programs
'''

import json
import os
import subprocess
import tempfile
import xml.etree.ElementTree as ET

import pandas as pd
from click.testing import CliRunner

from cgcn.cli import cgcn
from cgcn.globals import LOSS_COLUMNS
from cgcn.utils import read_summary_yml

FAST_SETTINGS = """\
# quick runs on a 60 node block model
synth_k = 3
synth_nodes = 20
synth_p_in = 0.3
synth_p_out = 0.02
synth_dim = 6
hidden = 16
latent_dim = 4
epochs_ae = 2
epochs_gae = 2
epochs_train = 2
kmeans_n_init = 2
"""


def _fast_config(tempdir):
    path = os.path.join(tempdir, "fast.cfg")
    with open(path, "w") as f:
        f.write(FAST_SETTINGS)
    return path


def _last_json(output):
    return json.loads(output.strip().splitlines()[-1])


def test_synth_entry_point():
    with tempfile.TemporaryDirectory() as tempdir:
        ret = subprocess.call(["cgcn", "synth", tempdir, "--k", "2",
                               "--nodes", "5", "--dim", "3"])
        assert ret == 0
        assert sorted(os.listdir(tempdir)) == ["edges.csv", "features.csv",
                                               "labels.txt", "overview.yml"]
        assert read_summary_yml(tempdir)["dataset"]["nodes"] == 10


def test_eval():
    runner = CliRunner()
    with tempfile.TemporaryDirectory() as tempdir:
        true = os.path.join(tempdir, "true.txt")
        pred = os.path.join(tempdir, "pred.txt")
        with open(true, "w") as f:
            f.write("0\n0\n1\n1\n")
        with open(pred, "w") as f:
            f.write("0\n1\n0\n1\n")
        result = runner.invoke(cgcn, ["eval", true, pred])
    assert result.exit_code == 0, result.output
    scores = _last_json(result.output)
    assert scores["acc"] == 0.5
    assert scores["ari"] == -0.5
    assert scores["n"] == 4
    assert scores["k"] == 2


def test_eval_length_mismatch_reports_json_error():
    runner = CliRunner()
    with tempfile.TemporaryDirectory() as tempdir:
        true = os.path.join(tempdir, "true.txt")
        pred = os.path.join(tempdir, "pred.txt")
        with open(true, "w") as f:
            f.write("0\n1\n")
        with open(pred, "w") as f:
            f.write("0\n")
        result = runner.invoke(cgcn, ["eval", true, pred])
    assert result.exit_code == 1
    err = _last_json(result.output)
    assert err["error"] == "ContractError"
    assert err["command"] == "eval"


def test_bad_override_exits_with_one():
    runner = CliRunner()
    with tempfile.TemporaryDirectory() as tempdir:
        result = runner.invoke(
            cgcn, ["baseline", "-o", tempdir, "--set", "no_such_key=1"])
    assert result.exit_code == 1
    assert _last_json(result.output)["error"] == "ConfigurationError"


def test_pretrain_then_train():
    runner = CliRunner()
    with tempfile.TemporaryDirectory() as tempdir:
        cfg = _fast_config(tempdir)
        ckpt_dir = os.path.join(tempdir, "pretrained")
        out_dir = os.path.join(tempdir, "trained")

        result = runner.invoke(cgcn, ["pretrain", "-c", cfg, "-o", ckpt_dir,
                                      "--seed", "2"])
        assert result.exit_code == 0, result.output
        for fname in ("checkpoint.bin", "checkpoint.json", "losses.csv",
                      "overview.yml"):
            assert os.path.isfile(os.path.join(ckpt_dir, fname))

        result = runner.invoke(cgcn, ["train", ckpt_dir, "-o", out_dir,
                                      "--set", "epochs_train=3"])
        assert result.exit_code == 0, result.output
        metrics = _last_json(result.output)
        assert set(metrics) == {"acc", "nmi", "ari", "f1"}

        with open(os.path.join(out_dir, "report.json")) as f:
            report = json.load(f)
        assert report["seed"] == 2
        assert report["config"]["epochs_train"] == 3
        assert report["metrics"] == metrics
        losses = pd.read_csv(os.path.join(out_dir, "losses.csv"))
        assert list(losses.columns) == LOSS_COLUMNS
        assert len(losses) == 2 + 2 + 3
        with open(os.path.join(out_dir, "labels.txt")) as f:
            assert len(f.read().split()) == 60
        props = read_summary_yml(out_dir)
        assert props["metrics"] == metrics
        assert props["wall_clock_seconds"] >= 0


def test_usage_errors_are_json_with_exit_two():
    runner = CliRunner()
    result = runner.invoke(cgcn, ["run", "-c", "/no/such/file.cfg"])
    assert result.exit_code == 2
    err = _last_json(result.output)
    assert err["error"] == "BadParameter"
    assert err["command"] == "run"

    result = runner.invoke(cgcn, ["eval", "--no-such-option"])
    assert result.exit_code == 2
    assert _last_json(result.output)["error"] == "NoSuchOption"


def test_unexpected_errors_are_json_with_exit_one():
    runner = CliRunner()
    with tempfile.TemporaryDirectory() as tempdir:
        result = runner.invoke(cgcn, ["train", tempdir, "-o",
                                      os.path.join(tempdir, "out")])
    assert result.exit_code == 1
    err = _last_json(result.output)
    assert err["error"] == "FileNotFoundError"
    assert err["command"] == "train"
    assert "overview.yml" in err["message"]


def test_train_rejects_a_different_graph():
    runner = CliRunner()
    with tempfile.TemporaryDirectory() as tempdir:
        cfg = _fast_config(tempdir)
        ckpt_dir = os.path.join(tempdir, "pretrained")
        result = runner.invoke(cgcn, ["pretrain", "-c", cfg, "-o", ckpt_dir])
        assert result.exit_code == 0, result.output
        with open(os.path.join(ckpt_dir, "checkpoint.json")) as f:
            meta = json.load(f)
        assert meta["dataset"]["synth_seed"] == 0
        assert meta["dataset"]["describe"]["nodes"] == 60
        assert len(meta["trace"]) == 2 + 2

        # a new seed regenerates the block model
        result = runner.invoke(cgcn, ["train", ckpt_dir, "-o",
                                      os.path.join(tempdir, "a"),
                                      "--seed", "5"])
        assert result.exit_code == 1
        assert _last_json(result.output)["error"] == "ConfigurationError"

        result = runner.invoke(cgcn, ["train", ckpt_dir, "-o",
                                      os.path.join(tempdir, "b"),
                                      "--seed", "5", "--set", "synth_seed=0"])
        assert result.exit_code == 0, result.output


def test_run_outputs_are_reproducible():
    runner = CliRunner()
    with tempfile.TemporaryDirectory() as tempdir:
        cfg = _fast_config(tempdir)
        contents = []
        for name in ("a", "b"):
            out_dir = os.path.join(tempdir, name)
            result = runner.invoke(cgcn, ["run", "-c", cfg, "-o", out_dir])
            assert result.exit_code == 0, result.output
            contents.append([
                open(os.path.join(out_dir, fname), "rb").read()
                for fname in ("report.json", "losses.csv", "labels.txt",
                              "checkpoint.bin")
            ])
    assert contents[0] == contents[1]


def test_sweep_writes_table_and_charts():
    runner = CliRunner()
    with tempfile.TemporaryDirectory() as tempdir:
        cfg = _fast_config(tempdir)
        out_dir = os.path.join(tempdir, "sweep")
        result = runner.invoke(cgcn, ["sweep", "-c", cfg, "-o", out_dir,
                                      "--alphas", "0,1", "--betas", "0,0.5,1"])
        assert result.exit_code == 0, result.output
        table = pd.read_csv(os.path.join(out_dir, "sweep.csv"))
        assert len(table) == 6
        assert list(table["alpha"]) == [0, 0, 0, 1, 1, 1]
        assert list(table["beta"]) == [0, 0.5, 1] * 2

        ns = "{http://www.w3.org/2000/svg}"
        lines = ET.parse(os.path.join(out_dir, "sweep_alpha.svg")).findall(
            f"{ns}polyline")
        assert len(lines) == 3
        assert all(len(line.get("points").split()) == 2 for line in lines)
        lines = ET.parse(os.path.join(out_dir, "sweep_beta.svg")).findall(
            f"{ns}polyline")
        assert len(lines) == 2


def test_ablate_and_repeat_tables():
    runner = CliRunner()
    with tempfile.TemporaryDirectory() as tempdir:
        cfg = _fast_config(tempdir)
        out_dir = os.path.join(tempdir, "grid")
        result = runner.invoke(cgcn, ["ablate", "-c", cfg, "-o", out_dir,
                                      "--seeds", "0,1"])
        assert result.exit_code == 0, result.output
        table = pd.read_csv(os.path.join(out_dir, "ablation.csv"))
        assert list(table["variant"]) == ["base", "+C", "+S", "+C+S"]
        assert (table["n_seeds"] == 2).all()
        assert (table["acc_delta"].iloc[0] == 0.0)

        result = runner.invoke(cgcn, ["repeat", "-c", cfg, "-o", out_dir,
                                      "--seeds", "3,4"])
        assert result.exit_code == 0, result.output
        table = pd.read_csv(os.path.join(out_dir, "repeat.csv"))
        assert list(table["seed"].astype(str)) == ["3", "4", "mean", "std"]


def test_baseline():
    runner = CliRunner()
    with tempfile.TemporaryDirectory() as tempdir:
        cfg = _fast_config(tempdir)
        result = runner.invoke(cgcn, ["baseline", "-c", cfg, "-o", tempdir])
        assert result.exit_code == 0, result.output
        assert _last_json(result.output)["nmi"] > 0.5
        assert os.path.isfile(os.path.join(tempdir, "labels.txt"))
