import pytest

from zeta.cli import main


def run(capsys, *argv):
    rc = main(list(argv))
    out = capsys.readouterr()
    return rc, out.out, out.err


def test_gradcheck(capsys):
    rc, out, err = run(capsys, "gradcheck", "--configs", "3", "--n", "8")
    assert rc == 0
    assert out.splitlines()[0].startswith("case,")
    assert "max relative error" in err


def test_equiv(capsys):
    rc, out, _ = run(capsys, "equiv", "--sizes", "1,5", "--seeds", "2")
    assert rc == 0 and len(out.splitlines()) == 5


def test_locality_byte_identical(capsys, tmp_path):
    args = ["locality", "--dims", "1,3", "--sizes", "64", "--neighbors", "8", "--trials", "2", "--seed", "4"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert a.read_text().startswith("# zeta locality sweep, seed=4")


def test_ablate_k(capsys):
    rc, out, _ = run(capsys, "ablate-k", "--n", "64", "--ks", "2,4", "--chunk", "8", "--trials", "1")
    assert rc == 0 and out.splitlines()[0] == "k,recall"


def test_metric_demo(capsys):
    rc, out, _ = run(capsys, "metric-demo")
    assert rc == 0
    assert "euclidean_nearest=B" in out and "max_dot=D" in out


def test_train_tiny(capsys):
    rc, out, _ = run(capsys, "train", "--steps", "3", "--n", "20", "--pairs", "4", "--batch", "2",
                     "--eval-instances", "2")
    assert rc == 0
    lines = out.splitlines()
    assert lines[0] == "step,loss" and len(lines) == 5 and lines[-1].startswith("accuracy=")


def test_bench_tiny(capsys):
    rc, out, err = run(capsys, "bench", "--sizes", "32,64", "--reps", "3", "--k", "4", "--d-v", "4")
    assert rc == 0 and len(out.splitlines()) == 5 and "[bench]" in err


def test_seed_env_fallback(monkeypatch, capsys):
    monkeypatch.setenv("ZETA_SEED", "9")
    rc, out, _ = run(capsys, "locality", "--dims", "2", "--sizes", "32", "--neighbors", "4", "--trials", "1")
    assert rc == 0 and "seed=9" in out


def test_usage_errors(capsys):
    assert run(capsys, "bench", "--reps", "2", "--sizes", "32")[0] == 2
    assert run(capsys, "locality", "--dims", "x")[0] == 2
    assert run(capsys, "nope")[0] == 2
    assert run(capsys)[0] == 2


def test_help_lists_defaults(capsys):
    rc, out, _ = run(capsys, "train", "--help")
    assert rc == 0
    assert "default: 500" in out and "default: 0.01" in out
