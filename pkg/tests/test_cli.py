import csv

import pytest

from pygesd import experiments as ex
from pygesd.cli import main, read_config


def read_rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def test_parse_grid():
    assert ex.parse_grid("0:20:10") == (0.0, 10.0, 20.0)
    assert ex.parse_grid("5,7") == (5.0, 7.0)


def test_config_hash_ignores_output_and_workers():
    a = ex.ExperimentConfig(out="x.csv", workers=4)
    b = ex.ExperimentConfig(out="y.csv", workers=1)
    assert a.config_hash() == b.config_hash()
    assert a.config_hash() != ex.ExperimentConfig(seed=1).config_hash()


def test_config_validation():
    with pytest.raises(ValueError):
        ex.ExperimentConfig(experiment="nope")
    with pytest.raises(ValueError):
        ex.ExperimentConfig(snr_grid=(float("inf"),))


def test_read_config(tmp_path):
    p = tmp_path / "c.ini"
    p.write_text("dims = 8 8 8\nrank = 3\nsnr-grid = 0:10:10\nnoiseless = yes\n")
    assert read_config(p) == dict(dims=(8, 8, 8), rank=3, snr_grid=(0.0, 10.0), noiseless=True)
    p.write_text("[experiment]\nbogus = 1\n")
    with pytest.raises(ValueError):
        read_config(p)


def test_compare_csv_and_reproducible(tmp_path, capsys):
    cfg = tmp_path / "c.ini"
    cfg.write_text("dims = 8 8 8\nrank = 3\n")
    out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["compare", "--config", str(cfg), "--snr-grid", "20", "--trials", "2", "--workers", "1", "--noiseless"]
    assert main(args + ["--out", str(out1)]) == 0
    assert main(args + ["--out", str(out2), "--rank", "3"]) == 0
    r1, r2 = read_rows(out1), read_rows(out2)
    assert list(r1[0]) == ex.COMPARE_FIELDS
    assert len(r1) == 2 * 2 * 2 + 2 * 2  # trials x snr x methods + medians
    assert [r["cpderr"] for r in r1] == [r["cpderr"] for r in r2]
    assert {r["snr_db"] for r in r1} == {"20", "inf"}
    assert "cpderr" in capsys.readouterr().out


def test_adversarial_and_bound_sweep(tmp_path):
    out = tmp_path / "adv.csv"
    assert main(["adversarial", "--out", str(out)]) == 0
    rows = read_rows(out)
    assert [r["method"] for r in rows] == ["gesd", "gevd"]
    assert float(rows[0]["cpderr"]) < 1e-8
    out = tmp_path / "b.csv"
    assert main(["bound-sweep", "--snr-grid", "100", "--trials", "2", "--unitaries", "2",
                 "--workers", "1", "--out", str(out)]) == 0
    rows = read_rows(out)
    assert list(rows[0]) == ex.BOUND_FIELDS
    assert float(rows[-1]["angle_e12_deg"]) > 80


def test_decompose_roundtrip(tmp_path):
    from pygesd.io import save_tensor
    from pygesd.synth import gen_problem
    from pygesd.io import save_cpd

    prob = gen_problem((6, 6, 6), 3, seed=2)
    save_tensor(tmp_path / "t.txt", prob.noisy)
    save_cpd(tmp_path / "truth.cpd", prob.truth)
    out = tmp_path / "d.csv"
    assert main(["decompose", "--input", str(tmp_path / "t.txt"), "--truth", str(tmp_path / "truth.cpd"),
                 "--rank", "3", "--factors-out", str(tmp_path / "est"), "--out", str(out)]) == 0
    rows = read_rows(out)
    assert all(float(r["cpderr"]) < 1e-8 for r in rows)
    assert (tmp_path / "est.gesd.cpd").exists()


def test_bad_config_returns_error(tmp_path, capsys):
    assert main(["compare", "--factors", "cauchy"]) == 2
    assert "pygesd:" in capsys.readouterr().err
