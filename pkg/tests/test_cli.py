import numpy as np
import pytest

from geflab import io
from geflab.cli import main
from geflab.estimators import ProfileRow, RadialProfile


def test_fit_synthetic_quartic(tmp_path, capsys):
    r = [0.1, 0.2, 0.3, 0.4, 0.5]
    prof = RadialProfile("cc", tuple(ProfileRow(x, x ** 4, 0.0, 1, 1) for x in r))
    p = io.write_profile(tmp_path / "p.csv", prof, 1)
    assert main(["fit", "--seed", "1", "--profile", str(p), "--out", str(tmp_path / "o")]) == 0
    assert "slope 4.000" in capsys.readouterr().out
    assert (tmp_path / "o" / "fit.png").exists()


def test_usage_errors_exit_2(tmp_path):
    assert main(["nope"]) == 2
    assert main(["fit"]) == 2  # no seed
    bad = tmp_path / "bad.cfg"
    bad.write_text("seed = 1\nsamples = lots\n")
    assert main(["sample", "--config", str(bad)]) == 2
    assert main(["fit", "--seed", "1", "--out", str(tmp_path / "o")]) == 2  # no profile


def test_threads_env_fallback(tmp_path, monkeypatch):
    monkeypatch.setenv("GEFLAB_THREADS", "x")
    assert main(["sample", "--seed", "1", "--out", str(tmp_path)]) == 2


def test_numeric_failure_exit_1(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("seed = 1\nsamples = 1\nR_max = 13\n")
    assert main(["sample", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 1


def test_kacrice_small_budget(tmp_path, capsys):
    cfg = tmp_path / "k.cfg"
    cfg.write_text("seed = 2\ndraws = 200000\nradii = 0.4, 0.6, 0.8\nr_values = 0.01, 0.05, 0.1, 0.2\n")
    assert main(["kacrice", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    assert "[PASS] sigma_c(0.01)/r^2" in capsys.readouterr().out
    _, rows = io.read_csv(tmp_path / "o" / "kacrice.csv", "kacrice")
    assert {r["kind"] for r in rows} >= {"sigma_c", "sigma_c+", "zc-_integrand"}
    assert (tmp_path / "o" / "sigma.png").exists()


def test_outputs_identical_across_thread_counts(tmp_path):
    cfg = tmp_path / "m.cfg"
    cfg.write_text("seed = 3\nsamples = 4\nR_max = 3\nradii = 0.3, 0.5\npairs = zz, cc\n")
    outs = []
    for k in (1, 2):
        d = tmp_path / f"o{k}"
        assert main(["moments", "--config", str(cfg), "--out", str(d), "--threads", str(k)]) == 0
        outs.append(d)
    for name in ("first_moments.csv", "profile_zz.csv", "profile_cc.csv"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()
    recs = io.read_manifest(outs[0] / "manifest.jsonl")
    assert recs[-1]["artifacts"]["profile_zz.csv"] == io.sha256_file(outs[0] / "profile_zz.csv")


def test_spectrogram_and_landmarks_commands(tmp_path):
    cfg = tmp_path / "s.cfg"
    cfg.write_text("seed = 4\nsamples = 2\nR_max = 3\narea = 64\nrealizations = 1\n")
    assert main(["landmarks", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    assert (tmp_path / "o" / "landmarks" / "landmarks-0001.csv").exists()
    assert main(["spectrogram", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    x, y, m = io.read_matrix(tmp_path / "o" / "spectrogram.csv")
    assert m.shape == (len(y), len(x)) and np.all(m >= 0)
    assert (tmp_path / "o" / "spectrogram.png").exists()
