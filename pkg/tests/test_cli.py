"""End-to-end command behavior through main(argv): files, exit codes, and
the machine-readable error lines. Subprocess isolation is only used where
the process boundary is the point (backend env flag, byte determinism)."""

import os
import subprocess
import sys

import numpy as np
import pytest

from qsauc.cli import main
from qsauc.data import read_libsvm, read_manifest
from qsauc.model import load as load_model


def _run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def _synth(capsys, tmp_path, **kw):
    d = tmp_path / "synth"
    args = [
        "synth", "--out", str(d), "--n-pos", "12", "--n-neg", "12",
        "--n-unlabeled", "30", "--n-test", "40", "--dim", "2",
        "--separation", "2.5", "--seed", "3",
    ]
    for k, v in kw.items():
        args += [f"--{k.replace('_', '-')}", str(v)]
    code, out, err = _run(capsys, *args)
    assert code == 0, err
    return d


def test_synth_writes_dataset(capsys, tmp_path):
    d = _synth(capsys, tmp_path)
    for name in ("labeled.libsvm", "unlabeled.libsvm", "truth_unlabeled.libsvm",
                 "test.libsvm", "config.resolved.txt"):
        assert (d / name).exists()
    lab = read_libsvm(d / "labeled.libsvm")
    assert len(lab.rows) == 24
    truth = read_libsvm(d / "truth_unlabeled.libsvm")
    assert set(y for y, _ in truth.rows) <= {1, -1}
    assert not [f for f in os.listdir(d) if f.startswith(".qsauc-tmp-")]


def test_split_then_train_with_manifest(capsys, tmp_path):
    d = _synth(capsys, tmp_path)
    sp = tmp_path / "split"
    code, out, _ = _run(
        capsys, "split", "--data", str(d / "labeled.libsvm"), "--out", str(sp),
        "--n-labeled", "10", "--seed", "1", "--test-fraction", "0.25",
    )
    assert code == 0
    man = read_manifest(sp / "manifest.txt")
    assert len(man["labeled_pos"]) + len(man["labeled_neg"]) == 10
    assert (sp / "norm_table.txt").exists()

    tr = tmp_path / "run"
    code, out, _ = _run(
        capsys, "train", "--data", str(sp / "data.libsvm"), "--manifest",
        str(sp / "manifest.txt"), "--out", str(tr), "--iterations", "40",
        "--feature-count", "8", "--theta", "6.0", "--lambda", "0.25",
    )
    assert code == 0
    assert "trained entries=40" in out
    mdl = load_model(str(tr / "model.txt"))
    assert len(mdl) == 40
    trace = (tr / "trace.txt").read_text().splitlines()
    assert trace[0] == "iteration eta batch_risk"
    assert len(trace) == 41
    assert float(trace[1].split()[1]) == 6.0


def test_train_predict_roundtrip(capsys, tmp_path):
    d = _synth(capsys, tmp_path)
    tr = tmp_path / "run"
    code, _, _ = _run(
        capsys, "train", "--labeled", str(d / "labeled.libsvm"),
        "--unlabeled", str(d / "unlabeled.libsvm"), "--out", str(tr),
        "--iterations", "150", "--feature-count", "16",
    )
    assert code == 0
    pr = tmp_path / "pred"
    code, out, _ = _run(
        capsys, "predict", "--model", str(tr / "model.txt"),
        "--data", str(d / "test.libsvm"), "--out", str(pr),
    )
    assert code == 0
    assert "auc " in out
    scores = [float(s) for s in (pr / "scores.txt").read_text().split()]
    assert len(scores) == 40
    # the separated task must land well above chance
    assert float(out.split("auc ")[1].split()[0]) > 0.7


def test_pool_source_is_exclusive(capsys, tmp_path):
    d = _synth(capsys, tmp_path)
    code, _, err = _run(
        capsys, "train", "--labeled", str(d / "labeled.libsvm"),
        "--data", str(d / "labeled.libsvm"), "--manifest", "x",
        "--out", str(tmp_path / "o"),
    )
    assert code == 2
    assert 'error code=E_CONFIG' in err


def test_config_file_and_flag_precedence(capsys, tmp_path):
    d = _synth(capsys, tmp_path)
    cfg = tmp_path / "train.cfg"
    cfg.write_text(
        "# comment line\ngamma = 0.9\nITERATIONS = 30\nlambda = 0.25\n"
        "feature_count = 8\n"
    )
    tr = tmp_path / "run"
    code, _, _ = _run(
        capsys, "train", "--config", str(cfg), "--labeled",
        str(d / "labeled.libsvm"), "--unlabeled", str(d / "unlabeled.libsvm"),
        "--out", str(tr), "--gamma", "0.2",
    )
    assert code == 0
    resolved = dict(
        line.split(" = ", 1)
        for line in (tr / "config.resolved.txt").read_text().splitlines()
        if " = " in line
    )
    assert resolved["gamma"] == "0.2"  # flag beats config
    assert resolved["iterations"] == "30"  # config beats default
    assert resolved["lam"] == "0.25"
    assert resolved["backend"] in ("numba", "numpy")


def test_unknown_config_key_rejected(capsys, tmp_path):
    d = _synth(capsys, tmp_path)
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("momentum = 0.9\n")
    code, _, err = _run(
        capsys, "train", "--config", str(cfg), "--labeled",
        str(d / "labeled.libsvm"), "--out", str(tmp_path / "o"),
    )
    assert code == 2
    assert "momentum" in err


def test_split_requires_n_labeled(capsys, tmp_path):
    d = _synth(capsys, tmp_path)
    code, _, err = _run(
        capsys, "split", "--data", str(d / "labeled.libsvm"),
        "--out", str(tmp_path / "s"),
    )
    assert code == 2
    assert "n_labeled" in err


def test_parse_error_reports_line(capsys, tmp_path):
    bad = tmp_path / "bad.libsvm"
    bad.write_text("+1 1:0.5\n1 2:a\n")
    code, _, err = _run(
        capsys, "train", "--labeled", str(bad), "--out", str(tmp_path / "o"),
    )
    assert code == 2
    assert "error code=E_PARSE" in err
    assert "line 2" in err


def test_missing_model_file_is_io_error(capsys, tmp_path):
    code, _, err = _run(
        capsys, "predict", "--model", str(tmp_path / "nope.txt"),
        "--data", str(tmp_path / "nope.libsvm"), "--out", str(tmp_path / "o"),
    )
    assert code == 1
    assert "error code=E_IO" in err


def test_schedule_error_exit_code(capsys, tmp_path):
    d = _synth(capsys, tmp_path)
    code, _, err = _run(
        capsys, "train", "--labeled", str(d / "labeled.libsvm"),
        "--unlabeled", str(d / "unlabeled.libsvm"), "--out", str(tmp_path / "o"),
        "--theta", "10.0", "--lambda", "0.25",
    )
    assert code == 2
    assert "error code=E_SCHEDULE" in err


def test_diag_model_and_schedule(capsys, tmp_path):
    d = _synth(capsys, tmp_path)
    tr = tmp_path / "run"
    _run(
        capsys, "train", "--labeled", str(d / "labeled.libsvm"),
        "--unlabeled", str(d / "unlabeled.libsvm"), "--out", str(tr),
        "--iterations", "20", "--feature-count", "8",
    )
    code, out, _ = _run(
        capsys, "diag", "--model", str(tr / "model.txt"),
        "--theta", "6.0", "--lambda", "0.25", "--t", "1000",
    )
    assert code == 0
    assert "model entries=20" in out
    assert "passed=yes" in out
    code, _, err = _run(capsys, "diag")
    assert code == 2


def test_cv_writes_tables(capsys, tmp_path):
    d = _synth(capsys, tmp_path, n_pos="15", n_neg="15")
    cv = tmp_path / "cv"
    code, out, _ = _run(
        capsys, "cv", "--labeled", str(d / "labeled.libsvm"), "--out", str(cv),
        "--lambdas", "0.25,0.5", "--sigmas", "0.5", "--gammas", "0.4",
        "--folds", "2", "--iterations", "40", "--feature-count", "8",
    )
    assert code == 0
    table = (cv / "cv_table.txt").read_text().splitlines()
    assert table[0].startswith("gamma lambda sigma theta mean_auc")
    assert len(table) == 3
    best = (cv / "best_config.txt").read_text()
    assert "lambda = " in best
    assert "theta = " in best


def test_bench_reports_both_backends(capsys, tmp_path):
    b = tmp_path / "bench"
    code, out, _ = _run(
        capsys, "bench", "--dim", "2", "--feature-count", "32",
        "--entries", "50", "--points", "12", "--repeats", "1", "--out", str(b),
    )
    assert code == 0
    assert "score_accum" in out
    assert "numba" in out and "numpy" in out
    assert "speedup" in out
    assert (b / "bench.txt").exists()


def test_train_outputs_are_byte_identical_across_processes(tmp_path):
    # run the same training twice in separate processes and compare bytes
    env = dict(os.environ)
    cmd = [
        sys.executable, "-m", "qsauc", "synth", "--out", str(tmp_path / "d"),
        "--n-pos", "8", "--n-neg", "8", "--n-unlabeled", "16", "--dim", "2",
    ]
    assert subprocess.run(cmd, env=env, capture_output=True).returncode == 0
    outs = []
    for name in ("a", "b"):
        cmd = [
            sys.executable, "-m", "qsauc", "train",
            "--labeled", str(tmp_path / "d" / "labeled.libsvm"),
            "--unlabeled", str(tmp_path / "d" / "unlabeled.libsvm"),
            "--out", str(tmp_path / name), "--iterations", "60",
            "--feature-count", "8",
        ]
        r = subprocess.run(cmd, env=env, capture_output=True)
        assert r.returncode == 0, r.stderr
        outs.append(
            (
                (tmp_path / name / "model.txt").read_bytes(),
                (tmp_path / name / "trace.txt").read_bytes(),
            )
        )
    assert outs[0] == outs[1]
