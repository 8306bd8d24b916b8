"""
End-to-end tests of the command line through ``main``.
"""
import os
import re
from pathlib import Path

import numpy as np
import pytest

from advdal.lib.model_io import save_model
from advdal.lib.network import MlpModel
from advdal.main import main

from conftest import make_boundary_model

VERIFY_CONFIG = """dataset.kind = blobs
dataset.blobs_n = 40
dataset.blobs_dim = 2
dataset.blobs_classes = 2
harvest.time_limit = 5
"""

CELLS = ["random-none", "random-fv_adv", "fvaal-none", "fvaal-fv_adv"]

# read at import time; the autouse fixture strips ADVDAL_* before each test
DATA_ROOT = os.environ.get("ADVDAL_DATA_ROOT")


def _verify_setup(temp_dir: Path):
    model_path = temp_dir / "boundary.advm"
    save_model(make_boundary_model(), model_path)
    config_path = temp_dir / "verify.conf"
    config_path.write_text(VERIFY_CONFIG)
    return model_path, config_path


def test_version_flag(capsys):
    assert main(["--version"]) == 0
    out = capsys.readouterr().out.strip()
    assert out.startswith("advdal ")
    assert "." in out


def test_help_flag(capsys):
    assert main(["--help"]) == 0
    assert "usage" in capsys.readouterr().out.lower()


def test_no_command_is_usage_error(capsys):
    assert main([]) == 2
    assert "usage" in capsys.readouterr().err.lower()


def test_unknown_option_is_usage_error():
    assert main(["run", "--config", "x.conf", "--bogus"]) == 2


def test_negative_workers_rejected():
    assert main(["run", "--config", "x.conf", "--workers", "-1"]) == 2


def test_missing_config_file(temp_dir, capsys):
    assert main(["run", "--config", str(temp_dir / "absent.conf"), "--out", str(temp_dir / "out")]) == 2
    assert "config file not found" in capsys.readouterr().err


def test_invalid_config_value_names_line(temp_dir, capsys):
    path = temp_dir / "bad.conf"
    path.write_text("dataset.kind = blobs\nexperiment.n_query = -3\nexperiment.n_init = 2\n")
    assert main(["run", "--config", str(path), "--out", str(temp_dir / "out")]) == 2
    assert "line 2: experiment.n_query" in capsys.readouterr().err


@pytest.mark.integration
def test_run_smoke_experiment(smoke_config, temp_dir, capsys):
    out = temp_dir / "out"
    assert main(["run", "--config", str(smoke_config), "--out", str(out)]) == 0

    assert (out / "curves.svg").read_text().count("<polyline") == len(CELLS)
    summary = (out / "summary.txt").read_text()
    assert summary == capsys.readouterr().out
    for cell in CELLS:
        assert cell in summary
        lines = (out / f"{cell}.csv").read_text().splitlines()
        assert lines[0].startswith("run,round,labeled,accuracy")
        # 2 runs x (round 0 + 2 rounds)
        assert len(lines) == 1 + 6
        for run in range(2):
            assert (out / "models" / f"{cell}-run{run}.advm").is_file()
    budgets = {line.split(",")[2] for line in (out / "random-none.csv").read_text().splitlines()[1:]}
    assert budgets == {"6", "10", "14"}


@pytest.mark.integration
def test_run_is_byte_reproducible(smoke_config, temp_dir):
    first, second = temp_dir / "first", temp_dir / "second"
    assert main(["run", "--config", str(smoke_config), "--out", str(first)]) == 0
    assert main(["run", "--config", str(smoke_config), "--out", str(second), "--workers", "3"]) == 0
    produced = sorted(p.relative_to(first) for p in first.rglob("*") if p.is_file())
    assert produced == sorted(p.relative_to(second) for p in second.rglob("*") if p.is_file())
    for relative in produced:
        assert (first / relative).read_bytes() == (second / relative).read_bytes(), relative


@pytest.mark.integration
def test_report_rebuilds_summary(smoke_config, temp_dir, capsys):
    out = temp_dir / "out"
    assert main(["run", "--config", str(smoke_config), "--out", str(out)]) == 0
    (out / "summary.txt").unlink()
    (out / "curves.svg").unlink()
    capsys.readouterr()

    assert main(["report", "--out", str(out)]) == 0
    summary = (out / "summary.txt").read_text()
    assert summary == capsys.readouterr().out
    assert all(cell in summary for cell in CELLS)
    assert (out / "curves.svg").is_file()
    # diversity needs the live adversarial sets
    assert all(line.endswith("-") for line in summary.splitlines()[2:])


def test_report_without_csvs(temp_dir):
    assert main(["report", "--out", str(temp_dir)]) == 2


def test_verify_one_finds_counterexamples(temp_dir, capsys):
    model_path, config_path = _verify_setup(temp_dir)
    code = main([
        "verify-one", "--model", str(model_path), "--config", str(config_path),
        "--index", "0", "--eps", "0.5", "--k", "2",
    ])
    assert code == 0
    out = capsys.readouterr().out
    assert out.startswith("input 0 (test): label=")
    assert "counterexample 1: predicted=" in out
    assert re.search(r"^interval bound at eps=0.5: f\[\d\] - f\[\d\] <= \S+$", out, re.MULTILINE)
    assert "trace:\n  eps=0.5 verdict=sat" in out
    found = int(re.search(r"found (\d+) counterexample\(s\)", out).group(1))
    assert 1 <= found <= 2


def test_verify_one_reports_interval_certificate(temp_dir, capsys):
    _, config_path = _verify_setup(temp_dir)
    model_path = temp_dir / "constant.advm"
    # class 0 wins by a fixed logit gap of 1 everywhere
    constant = MlpModel(W1=np.zeros((2, 2)), b1=np.zeros(2), W2=np.zeros((2, 2)), b2=np.array([1.0, 0.0]))
    save_model(constant, model_path)
    args = ["verify-one", "--model", str(model_path), "--config", str(config_path), "--index", "0", "--eps", "0.3"]
    assert main(args) == 0
    out = capsys.readouterr().out
    assert "interval bound at eps=0.3: f[1] - f[0] <= -1 (robust by interval bounds)" in out
    assert "found 0 counterexample(s)" in out


def test_verify_one_eps_from_config(temp_dir, capsys):
    model_path, config_path = _verify_setup(temp_dir)
    config_path.write_text(VERIFY_CONFIG + "experiment.fixed_query_eps = 0.5\n")
    assert main(["verify-one", "--model", str(model_path), "--config", str(config_path), "--index", "1"]) == 0
    assert "  eps=0.5 verdict=" in capsys.readouterr().out


def test_verify_one_rejects_zero_k(temp_dir):
    model_path, config_path = _verify_setup(temp_dir)
    args = ["verify-one", "--model", str(model_path), "--config", str(config_path), "--index", "0", "--k", "0"]
    assert main(args) == 2


def test_verify_one_index_out_of_range(temp_dir):
    model_path, config_path = _verify_setup(temp_dir)
    assert main(["verify-one", "--model", str(model_path), "--config", str(config_path), "--index", "999"]) == 2


def test_verify_one_unreadable_model(temp_dir, capsys):
    _, config_path = _verify_setup(temp_dir)
    bad = temp_dir / "bad.advm"
    bad.write_bytes(b"NOPE")
    assert main(["verify-one", "--model", str(bad), "--config", str(config_path), "--index", "0"]) == 2
    assert "Format error" in capsys.readouterr().err


def test_verify_one_dimension_mismatch(temp_dir, smoke_config):
    model_path, _ = _verify_setup(temp_dir)
    assert main(["verify-one", "--model", str(model_path), "--config", str(smoke_config), "--index", "0"]) == 2


def test_bench(capsys):
    assert main(["bench", "--hidden", "4", "--inputs", "2", "--queries", "5", "--seed", "1"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("network 2-4-3, 5 queries")
    counts = re.search(r"sat=(\d+) unsat=(\d+) timeout=(\d+)", out).groups()
    assert sum(int(c) for c in counts) == 5
    assert "nodes/s=" in out


def test_bench_rejects_single_class():
    assert main(["bench", "--classes", "1"]) == 2


@pytest.mark.slow
@pytest.mark.skipif(DATA_ROOT is None, reason="ADVDAL_DATA_ROOT not set")
def test_mnist_random_cell(temp_dir):
    path = temp_dir / "mnist.conf"
    path.write_text(
        f"dataset.kind = mnist\ndataset.root = {DATA_ROOT}\n"
        "dataset.train_size = 2000\ndataset.test_size = 500\n"
        "experiment.rounds = 2\nexperiment.n_query = 20\nexperiment.runs = 1\n"
    )
    assert main(["run", "--config", str(path), "--out", str(temp_dir / "out")]) == 0
    assert (temp_dir / "out" / "random-none.csv").is_file()


def _summary_rows(path: Path) -> dict:
    """Map cell name to the numbers on its summary row: aubc, aubc std, final acc, then diversity mean/std."""
    rows = {}
    for line in path.read_text().splitlines()[2:]:
        cell = line.split()[0]
        rows[cell] = [float(v) for v in re.findall(r"\d+\.\d+", line)]
    return rows


@pytest.mark.slow
@pytest.mark.skipif(DATA_ROOT is None, reason="ADVDAL_DATA_ROOT not set")
def test_mnist_fvaal_augmentation_trends(temp_dir):
    path = temp_dir / "trend.conf"
    path.write_text(
        f"dataset.kind = mnist\ndataset.root = {DATA_ROOT}\n"
        "dataset.train_size = 3000\ndataset.test_size = 1000\n"
        "experiment.strategies = fvaal\nexperiment.augmentations = none, fgsm_adv, fv_adv\n"
        "experiment.rounds = 4\nexperiment.n_query = 20\nexperiment.runs = 3\n"
        "harvest.node_limit = 200\n"
    )
    assert main(["run", "--config", str(path), "--out", str(temp_dir / "out")]) == 0
    rows = _summary_rows(temp_dir / "out" / "summary.txt")

    # labelled verified neighbours should not cost accuracy; allow run-to-run noise
    assert rows["fvaal-fv_adv"][0] >= rows["fvaal-none"][0] - 0.01
    # several verified points per query spread wider in embedding space than one FGSM step
    assert len(rows["fvaal-fv_adv"]) == 5 and len(rows["fvaal-fgsm_adv"]) == 5
    assert rows["fvaal-fv_adv"][3] > rows["fvaal-fgsm_adv"][3]
