import csv
import json
import subprocess
import sys
import time

import numpy as np
import pytest

from calogero3k.cli import main


def write_model(tmp_path, name="m.txt", **kw):
    cfg = {"k": 2, "omega": 1, "mu": 0, "lambda": 0}
    cfg.update(kw)
    body = "# test model\n" + "".join(f"{k.replace('_', '.')} = {v}\n" for k, v in cfg.items())
    p = tmp_path / name
    p.write_text(body)
    return str(p)


def test_spectrum_csv(tmp_path, capsys):
    model = write_model(tmp_path)
    out = tmp_path / "s.csv"
    assert main(["spectrum", "--model", model, "--emax", "38", "--out", str(out)]) == 0
    assert out.read_text() == "energy,degeneracy\n33,1\n35,1\n37,5\n"
    printed = capsys.readouterr().out
    assert "ground energy 33" in printed and "levels 3" in printed


def test_spectrum_irrational_levels(tmp_path):
    model = write_model(tmp_path, mu=-200)
    out = tmp_path / "s.json"
    assert main(["spectrum", "--model", model, "--above", "4", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    e0 = doc["levels"][0]["energy"]
    assert e0 == pytest.approx(2 * (1 + 40.25**0.5), rel=1e-11)
    assert doc["levels"][0]["representatives"][0]["n_alpha"] == 0


def test_spectrum_k3_fast(tmp_path):
    model = write_model(tmp_path, k=3, **{"lambda": 1})
    t = time.perf_counter()
    assert main(["spectrum", "--model", model, "--above", "4", "--out", str(tmp_path / "s.csv")]) == 0
    assert time.perf_counter() - t < 10
    rows = list(csv.reader((tmp_path / "s.csv").open()))
    assert rows[0] == ["energy", "degeneracy"] and len(rows) > 2


def test_validation_error_before_work(tmp_path, capsys):
    model = write_model(tmp_path, **{"lambda": -0.6})
    assert main(["verify", "--model", model]) == 2
    err = capsys.readouterr().err
    assert "coupling-out-of-range" in err


def test_mu_bound_error(tmp_path, capsys):
    model = write_model(tmp_path, mu=-240.25)
    assert main(["spectrum", "--model", model, "--emax", "40"]) == 2
    assert "mu-below-bound" in capsys.readouterr().err


def test_bad_output_extension(tmp_path):
    model = write_model(tmp_path)
    assert main(["spectrum", "--model", model, "--emax", "38", "--out", str(tmp_path / "x.txt")]) == 2


def test_missing_cutoff(tmp_path):
    assert main(["spectrum", "--model", write_model(tmp_path)]) == 2


def test_equivalence_command(tmp_path, capsys):
    model = write_model(tmp_path, **{"lambda": 1})
    out = tmp_path / "eq.json"
    assert main(["equivalence", "--model", model, "--above", "10", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["equal"] is True and doc["first_discrepancy"] is None


def test_equivalence_rejects_nonzero_mu(tmp_path, capsys):
    assert main(["equivalence", "--model", write_model(tmp_path, mu=1), "--above", "2"]) == 2
    assert "mu = 0" in capsys.readouterr().err


def test_verify_passes(tmp_path, capsys):
    model = write_model(tmp_path, mu=0.5, **{"lambda": 1})
    out = tmp_path / "v.json"
    code = main(["verify", "--model", model, "--state", "ground", "--state", "k=1,j=1,n12=2",
                 "--ortho-max", "1", "--out", str(out)])
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["passed"] and doc["schema"] == "calogero3k.verify/1"
    names = [c["check"] for c in doc["checks"]]
    for prefix in ("angular", "jacobi-type", "gegenbauer-type", "radial", "orthogonality", "residual"):
        assert any(n.startswith(prefix) for n in names), prefix
    assert "all checks passed" in capsys.readouterr().out


def test_verify_perturbed_energy_fails(tmp_path, capsys):
    model = write_model(tmp_path, mu=0.5, **{"lambda": 1})
    out = tmp_path / "v.json"
    code = main(["verify", "--model", model, "--skip-fd", "--ortho-max", "-1", "--points", "20",
                 "--energy-shift", "0.1", "--out", str(out)])
    assert code == 1
    check = json.loads(out.read_text())["checks"][0]
    assert not check["passed"]
    assert check["max_relative_residual"] == pytest.approx(0.1 / check["energy"], rel=0.05)
    assert "FAIL  residual" in capsys.readouterr().out


def test_sample_random_rows(tmp_path):
    model = write_model(tmp_path, **{"lambda": 1})
    out = tmp_path / "s.csv"
    assert main(["sample", "--model", model, "--points", "100", "--state", "j=1,n12=1", "--out", str(out)]) == 0
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 100
    assert list(rows[0])[:9] == [f"x{i}" for i in range(1, 10)]
    ratio = np.array([float(r["ratio"]) for r in rows])
    assert np.std(ratio) / abs(ratio.mean()) < 1e-9


def test_sample_cut_through_coincidence(tmp_path):
    model = write_model(tmp_path)
    base_out = tmp_path / "base.json"
    assert main(["sample", "--model", model, "--points", "1", "--out", str(base_out)]) == 0
    base = json.loads(base_out.read_text())["rows"][0]["x"]
    offsets = [base[1] - base[0], base[2] - base[0]]
    lo, hi = min(offsets) - 1.0, max(offsets) + 1.0
    out = tmp_path / "cut.json"
    assert main(["sample", "--model", model, "--points", "401", "--cut", "1", "--cut-range", str(lo), str(hi),
                 "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    rows = doc["rows"]
    assert len(rows) + doc["skipped"] == 401
    x1 = np.array([r["x"][0] for r in rows])
    psi = np.array([r["psi_general"] for r in rows])
    # psi vanishes where x1 meets x2 or x3
    for target in base[1:3]:
        near = np.argmin(np.abs(x1 - target))
        assert abs(psi[near]) < 0.05 * np.max(np.abs(psi))


def test_same_seed_byte_identical(tmp_path):
    model = write_model(tmp_path, mu=0.5, **{"lambda": 1})
    outs = []
    for name in ("a.csv", "b.csv"):
        p = tmp_path / name
        main(["sample", "--model", model, "--points", "20", "--seed", "7", "--out", str(p)])
        outs.append(p.read_bytes())
    assert outs[0] == outs[1]
    for name in ("a.json", "b.json"):
        main(["verify", "--model", model, "--skip-fd", "--ortho-max", "-1", "--points", "10", "--seed", "3",
              "--out", str(tmp_path / name)])
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_console_entry_point(tmp_path):
    model = write_model(tmp_path)
    res = subprocess.run([sys.executable, "-m", "calogero3k.cli", "spectrum", "--model", model, "--emax", "36"],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0
    assert "33,1\n35,1" in res.stdout
