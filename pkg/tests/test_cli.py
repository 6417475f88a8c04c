import csv
import json

import numpy as np
import pytest

from mixmorrey.cli import (EXIT_CHECK, EXIT_DIVERGED, EXIT_INPUT, EXIT_OK, EXIT_PARAMS,
                           ExperimentConfig, InputError, main)
from mixmorrey.grid import Field, make_grid
from mixmorrey.io import read_field, write_field


def _disc(path, g, R):
    d2 = sum(np.minimum(x, g.L - x) ** 2 for x in g.coords())
    write_field(path, Field(g, (d2 <= R * R * (1 + 1e-12)).astype(float)))


def test_config_round_trip_and_unknown_keys():
    c = ExperimentConfig(seed=9, space={"q": [3.0, 3.0]})
    back = ExperimentConfig.from_json(c.to_json())
    assert back.seed == 9 and back.space["q"] == [3.0, 3.0]
    part = ExperimentConfig.from_json('{"solver": {"nu": 0.5}}')
    assert part.solver["nu"] == 0.5 and part.solver["M"] == 64
    with pytest.raises(InputError):
        ExperimentConfig.from_json('{"bogus": 1}')


def test_norm_command(tmp_path, capsys):
    g = make_grid(2, 16, 1.0)
    write_field(tmp_path / "z.anf", Field(g, np.zeros(g.shape)))
    assert main(["norm", str(tmp_path / "z.anf"), "--kind", "morrey", "--q", "2,2", "--lam", "0.5,0.5"]) == EXIT_OK
    out = json.loads(capsys.readouterr().out)
    assert out["reports"][0]["value"] == 0
    assert main(["norm", str(tmp_path / "missing.anf")]) == EXIT_INPUT
    (tmp_path / "bad.anf").write_bytes(b"junk")
    assert main(["norm", str(tmp_path / "bad.anf")]) == EXIT_INPUT
    assert main(["norm", str(tmp_path / "z.anf"), "--q", "0.5,2"]) == EXIT_PARAMS
    assert main(["norm", str(tmp_path / "z.anf"), "--config", str(tmp_path / "nope.json")]) == EXIT_INPUT


def test_norm_exponent_fit(tmp_path, capsys):
    g = make_grid(2, 128, 2 * np.pi)
    radii = [8 * g.h, 16 * g.h]
    files = []
    for i, R in enumerate(radii):
        files.append(str(tmp_path / f"d{i}.anf"))
        _disc(files[-1], g, R)
    rc = main(["norm", *files, "--kind", "morrey", "--q", "2,3", "--lam", "0.4,0.5",
               "--radii", ",".join(map(str, radii))])
    assert rc == EXIT_OK
    fit = json.loads(capsys.readouterr().out)["exponent_fit"]
    assert abs(fit - (0.6 / 2 + 0.5 / 3)) < 0.05


def test_solve_zero_and_taylor_green(tmp_path, capsys):
    rc = main(["solve", "--data", "zero", "--out", str(tmp_path / "z"), "--M", "8", "--T", "0.5",
               "--q", "2,2", "--lam", "0.5,0.5", "--K", "0.05"])
    assert rc == EXIT_OK
    rep = json.loads((tmp_path / "z" / "report.json").read_text())
    assert rep["converged"] and rep["iterations"] == 1

    cfg = tmp_path / "tg.json"
    cfg.write_text(json.dumps({"grid": {"n": 16}, "solver": {"nu": 0.5, "T": 1.0, "M": 8,
                                                               "K_estimate": 0.05}}))
    out = tmp_path / "tg"
    assert main(["solve", "--config", str(cfg), "--data", "taylor-green", "--out", str(out)]) == EXIT_OK
    with open(out / "block_norms.csv") as fh:
        rows = list(csv.reader(fh))
    col = rows[0].index("l=0")
    t = np.array([float(r[0]) for r in rows[1:]])
    v = np.array([float(r[col]) for r in rows[1:]])
    np.testing.assert_allclose(v / v[0], np.exp(-2 * 0.5 * t), rtol=1e-4)
    assert (out / "trajectory.anf").exists() and (out / "trajectory.anf.json").exists()


def test_solve_admissibility_and_divergence(tmp_path):
    base = ["solve", "--data", "anisotropic", "--M", "8", "--T", "0.5", "--q", "2,2",
            "--lam", "0.5,0.5", "--K", "0.05", "--out", str(tmp_path / "s")]
    assert main(base + ["--eps", "1e4", "--require-admissible"]) == EXIT_PARAMS
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"grid": {"n": 16}, "solver": {"max_picard": 30}}))
    assert main(base + ["--eps", "1e4", "--config", str(cfg)]) == EXIT_DIVERGED
    rep = json.loads((tmp_path / "s" / "report.json").read_text())
    assert rep["diverged"]
    assert main(base + ["--nu", "-1"]) == EXIT_PARAMS


def test_solve_from_file(tmp_path):
    from mixmorrey.solver import taylor_green

    g = make_grid(2, 16, 2 * np.pi)
    write_field(tmp_path / "u.anf", taylor_green(g))
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"grid": {"n": 16}}))
    args = ["solve", "--config", str(cfg), "--data", "file", "--M", "4", "--T", "0.1", "--K", "0.05",
            "--out", str(tmp_path / "o")]
    assert main(args + ["--data-file", str(tmp_path / "u.anf")]) == EXIT_OK
    assert main(args) == EXIT_INPUT


def test_decompose(tmp_path, capsys):
    g = make_grid(2, 32, 2 * np.pi)
    x, y = g.coords()
    write_field(tmp_path / "f.anf", Field(g, np.cos(x) + np.cos(4 * y)))
    assert main(["decompose", str(tmp_path / "f.anf"), "--out", str(tmp_path / "b")]) == EXIT_OK
    scales = json.loads(capsys.readouterr().out)["scales"]
    total = read_field(tmp_path / "b" / "low.anf").data
    for l in scales:
        total = total + read_field(tmp_path / "b" / f"block_{l}.anf").data
    np.testing.assert_allclose(total.real, np.cos(x) + np.cos(4 * y), atol=1e-12)
    assert (tmp_path / "b" / "blocks.csv").exists()


def test_verify_exit_codes(tmp_path, capsys):
    out = tmp_path / "v"
    assert main(["verify", "--checks", "r-monotonicity", "--n", "32", "--out", str(out)]) == EXIT_OK
    lines = (out / "verify.jsonl").read_text().splitlines()
    assert len(lines) == 2 and all(json.loads(s)["verdict"] == "pass" for s in lines)
    # a short scale range leaves the control unable to fail
    rc = main(["verify", "--checks", "bernstein-fourier", "--n", "16", "--samples", "3",
               "--out", str(out)])
    assert rc == EXIT_CHECK
    assert "bernstein-fourier" in capsys.readouterr().err
    rc = main(["verify", "--checks", "bernstein-fourier", "--n", "16", "--samples", "3",
               "--controls-only", "--out", str(out)])
    assert rc == EXIT_CHECK
    assert main(["verify", "--checks", "nope", "--out", str(out)]) == EXIT_PARAMS
    assert main(["verify", "--checks", "holder-lebesgue,young-morrey", "--n", "16", "--jobs", "2",
                 "--out", str(out)]) == EXIT_OK


def test_plot_flag(tmp_path):
    pytest.importorskip("matplotlib")
    out = tmp_path / "p"
    assert main(["solve", "--data", "taylor-green", "--M", "4", "--T", "0.2", "--K", "0.05",
                 "--out", str(out), "--plot"]) == EXIT_OK
    assert (out / "block_norms.png").stat().st_size > 0
