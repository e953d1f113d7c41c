import json
import subprocess
import sys

import numpy as np
import pytest

from freeconv import closed_forms
from freeconv.cli import main
from freeconv.io import read_report
from freeconv.solver import DensityEstimate

ATOMS01 = {"type": "atoms", "points": [{"x": 0, "w": 0.5}, {"x": 1, "w": 0.5}]}


@pytest.fixture
def atoms01(tmp_path):
    path = tmp_path / "atoms01.json"
    path.write_text(json.dumps(ATOMS01))
    return str(path)


@pytest.fixture
def sc1(tmp_path):
    path = tmp_path / "sc.json"
    path.write_text(json.dumps({"type": "semicircle", "w2": 1}))
    return str(path)


def test_convolve_two_atom(atoms01, tmp_path):
    out = tmp_path / "out.csv"
    states = tmp_path / "states.csv"
    code = main(["convolve", "--n1", atoms01, "--n2", atoms01, "--epsilon", "1e-3",
                 "-o", str(out), "--states-out", str(states)])
    assert code == 0
    est = DensityEstimate.from_csv(out)
    lam = np.linspace(0.05, 1.95, 200)
    ref = closed_forms.two_atom_self_conv(0.5, 1.0).density(lam)
    assert np.max(np.abs(est.density(lam) - ref)) <= 5e-3
    header = states.read_text().splitlines()[0]
    assert header == "lambda,y,f_re,f_im,d1_re,d1_im,d2_re,d2_im,residual,iters"


def test_truncated_json(atoms01, tmp_path, capsys):
    broken = tmp_path / "broken.json"
    broken.write_text('{"type": "atoms", "points": [')
    code = main(["convolve", "--n1", str(broken), "--n2", atoms01, "-o", str(tmp_path / "o.csv")])
    assert code == 2
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert err["error"] == "validation"
    assert "broken.json" in err["message"] and "line 1" in err["message"]


@pytest.mark.parametrize("flag,value", [("--epsilon", "0"), ("--grid-points", "1")])
def test_bad_flags(atoms01, tmp_path, capsys, flag, value):
    with pytest.raises(SystemExit) as info:
        main(["convolve", "--n1", atoms01, "--n2", atoms01, flag, value, "-o", str(tmp_path / "o")])
    assert info.value.code == 2
    assert json.loads(capsys.readouterr().err.strip())["error"] == "validation"


def test_missing_required_flag(capsys):
    with pytest.raises(SystemExit) as info:
        main(["mc-spectrum", "--n1", "x.json"])
    assert info.value.code == 2


def test_non_convergence_exit_code(atoms01, tmp_path, capsys, monkeypatch):
    from freeconv import cli
    from freeconv.exceptions import ConvergenceError

    def fail(*args, **kwargs):
        raise ConvergenceError("stuck", lam=0.5, y=1e-3)

    monkeypatch.setattr(cli, "free_convolve", fail)
    code = main(["convolve", "--n1", atoms01, "--n2", atoms01, "-o", str(tmp_path / "o.csv")])
    assert code == 3
    err = json.loads(capsys.readouterr().err.strip())
    assert err["lambda"] == 0.5 and err["y"] == 1e-3


def test_semicircle_add_prints_two():
    proc = subprocess.run(
        [sys.executable, "-m", "freeconv", "oracle", "semicircle-add", "--w1sq", "1", "--w2sq", "1"],
        capture_output=True, text=True, check=True,
    )
    assert proc.stdout.strip() == "2"


def test_oracle_two_atom(tmp_path):
    out = tmp_path / "o.csv"
    assert main(["oracle", "two-atom", "--alpha", "0.75", "--a", "1", "-o", str(out)]) == 0
    est = DensityEstimate.from_csv(out)
    assert est.atoms == [(0.0, 0.5)]


def test_oracle_mp_reports_atom(tmp_path):
    out = tmp_path / "o.csv"
    assert main(["oracle", "mp", "--c", "0.5", "--grid-points", "50", "-o", str(out)]) == 0
    est = DensityEstimate.from_csv(out)
    assert len(est.atoms) == 1 and est.atoms[0][1] == pytest.approx(0.5, abs=1e-6)


def test_density_single_measure(sc1, tmp_path):
    out = tmp_path / "d.csv"
    assert main(["density", "--n1", sc1, "--grid-points", "100", "-o", str(out)]) == 0
    est = DensityEstimate.from_csv(out)
    assert est.density(0.0) == pytest.approx(np.sqrt(2) / (2 * np.pi), abs=1e-3)


def test_rtransform(sc1, atoms01, tmp_path):
    out = tmp_path / "r.csv"
    assert main(["rtransform", "--n1", sc1, "--n2", atoms01, "--s", "0.1j,0.05j", "-o", str(out)]) == 0
    _, header, rows = read_report(out)
    assert header == ["s_re", "s_im", "r_re", "r_im", "defect"]
    assert float(rows[0][3]) == pytest.approx(0.2, abs=1e-9)
    assert all(float(r[4]) <= 1e-6 for r in rows)


def test_mc_spectrum_reproducible(atoms01, tmp_path):
    paths = [tmp_path / f"h{k}.csv" for k in range(2)]
    for k, p in enumerate(paths):
        args = ["--threads", str(k + 1), "mc-spectrum", "--n1", atoms01, "--n2", atoms01,
                "--n", "32", "--trials", "3", "--bins", "10", "--seed", "5", "-o", str(p)]
        assert main(args) == 0
    assert paths[0].read_text() == paths[1].read_text()
    meta, header, rows = read_report(paths[0])
    assert meta == {"seed": "5", "n": "32", "trials": "3"}
    assert sum(float(r[2]) for r in rows) == pytest.approx(1.0)


def test_mc_variance(atoms01, sc1, tmp_path):
    out = tmp_path / "v.csv"
    assert main(["mc-variance", "--n1", atoms01, "--n2", sc1, "--ns", "8,16",
                 "--trials", "50", "-o", str(out)]) == 0
    meta, header, rows = read_report(out)
    assert header == ["n", "var_g", "var_delta2"] and len(rows) == 2
    assert meta["z"] == "3j"


def test_freeness_and_haar(tmp_path):
    out = tmp_path / "f.csv"
    assert main(["freeness", "--n", "16", "--trials", "10", "-o", str(out)]) == 0
    out = tmp_path / "h.csv"
    assert main(["haar-check", "--n", "16", "--trials", "10", "--z", "0.95", "-o", str(out)]) == 2
    assert main(["haar-check", "--n", "16", "--trials", "10", "--z", "3", "-o", str(out)]) == 0
    _, _, rows = read_report(out)
    assert float(rows[0][2]) == pytest.approx(-1 / 3)


def test_threads_from_environment(atoms01, tmp_path, monkeypatch):
    from freeconv import rmt_lab

    seen = {}
    real = rmt_lab.sample_spectra

    def spy(*args):
        seen["threads"] = args[-1]
        return real(*args)

    monkeypatch.setenv("FREECONV_THREADS", "2")
    monkeypatch.setattr(rmt_lab, "sample_spectra", spy)
    main(["mc-spectrum", "--n1", atoms01, "--n2", atoms01, "--n", "8", "--trials", "2",
          "-o", str(tmp_path / "h.csv")])
    assert seen["threads"] == 2
