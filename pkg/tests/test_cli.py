import csv
import json
import math

import numpy as np
import pytest

from twistwave.cli import main
from twistwave.config import load_config
from twistwave.errors import ConfigError
from twistwave.io import dumps, fmt_float, write_csv

FAST_BANDS = ["--set", "grids.h=0.1", "--set", "grids.n_p=5", "--set", "grids.p_max=1", "--no-env"]


def read_csv(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_fmt_and_json():
    assert fmt_float(0.1) == "0.10000000000000001"
    assert fmt_float(float("nan")) == "nan"
    assert dumps({"a": [1.0, float("inf")], "b": None}) == '{\n  "a": [1, null],\n  "b": null\n}\n'
    assert json.loads(dumps({"x": np.float64(0.5), "y": np.arange(2)})) == {"x": 0.5, "y": [0, 1]}


def test_write_csv(tmp_path):
    write_csv(tmp_path / "a.csv", ["x", "n", "ok"], [(0.25, np.int64(3), True)])
    assert read_csv(tmp_path / "a.csv") == [["x", "n", "ok"], ["0.25", "3", "1"]]


def test_config_defaults_and_overrides(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("beta: 2\ngrids:\n  h: 0.02\n  lam:\n    min: 1e-7\n")
    cfg = load_config(path, ["grids.J=3"], environ={"TWISTWAVE_GRIDS__H": "0.03"})
    assert cfg.beta == 2.0 and cfg.grids.h == 0.03 and cfg.grids.J == 3 and cfg.grids.lam.min == 1e-7
    cfg = load_config(path, ["grids.h=0.04"], environ={"TWISTWAVE_GRIDS__H": "0.03"})
    assert cfg.grids.h == 0.04
    cfg = load_config(path, environ={"TWISTWAVE_GRIDS__H": "0.03"}, use_env=False)
    assert cfg.grids.h == 0.02


def test_config_section_merge_and_replace():
    cfg = load_config(overrides=["profile.alpha=1.5"], use_env=False)
    assert cfg.profile["alpha"] == 1.5 and cfg.profile["L"] == 1.0
    cfg = load_config(overrides=["domain.kind=disk", "domain.radius=0.5"], use_env=False)
    assert cfg.domain == {"kind": "disk", "radius": 0.5}


@pytest.mark.parametrize("items", [["nonsense=1"], ["grids.n_p=4"], ["profile.alpha=-1"],
                                   ["grids.h=abc"], ["grids.lam.min=1"], ["workflow=foo"]])
def test_config_errors(items):
    with pytest.raises(ConfigError):
        load_config(overrides=items, use_env=False)


def test_exit_code_config_error(tmp_path, capsys):
    path = tmp_path / "bad.yaml"
    path.write_text("profile:\n  alpha: -1\n")
    assert main(["verify", "--config", str(path), "--out", str(tmp_path / "o"), "--no-env"]) == 2
    assert "alpha must be positive" in capsys.readouterr().err


def test_exit_code_numerical_error(tmp_path):
    out = tmp_path / "o"
    assert main(["groundstate", "--set", "grids.h=0.6", "--out", str(out), "--no-env"]) == 3
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["exit_status"] == 3 and "GridTooCoarse" in manifest["error"]


def test_bands_beta_zero_parabola(tmp_path):
    out = tmp_path / "o"
    assert main(["bands", "--set", "beta=0", "--out", str(out)] + FAST_BANDS) == 0
    rows = read_csv(out / "bands.csv")
    assert rows[0][-1] == "E_1-E_1(0)-p^2"
    assert max(abs(float(r[-1])) for r in rows[1:]) < 1e-9
    assert {"bands.csv", "mass_bounds.csv", "mass.json", "manifest.json", "timings.json"} <= \
        {p.name for p in out.iterdir()}


def test_bands_deterministic_across_workers(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["bands", "--out", str(a), "--workers", "1"] + FAST_BANDS) == 0
    assert main(["bands", "--out", str(b), "--workers", "2"] + FAST_BANDS) == 0
    for name in ("bands.csv", "mass_bounds.csv", "mass.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_predict_and_verify_with_overrides(tmp_path):
    base = ["--set", "effective.mu=1", "--set", "effective.twist_norm_sq=0.1", "--no-env",
            "--set", "grids.lam.max=1e-3", "--set", "grids.lam.min=1e-5"]
    out = tmp_path / "p"
    assert main(["predict", "--out", str(out)] + base) == 0
    pred = json.loads((out / "prediction.json").read_text())["prediction"]
    assert pred["regime"] == "power_law" and math.isclose(pred["coefficient"], 0.2, rel_tol=1e-12)
    out = tmp_path / "v"
    assert main(["verify", "--out", str(out)] + base) == 0
    v = json.loads((out / "verdict.json").read_text())
    assert v["pass"] is True
    # the same curve under a level tolerance far below the finite-lambda bias fails
    out = tmp_path / "w"
    assert main(["verify", "--out", str(out), "--set", "tolerances.level=1e-6"] + base) == 1
    assert json.loads((out / "verdict.json").read_text())["pass"] is False


def test_count1d_writes_curve(tmp_path):
    out = tmp_path / "c"
    args = ["count1d", "--out", str(out), "--no-env", "--set", "effective.mu=1",
            "--set", "effective.twist_norm_sq=0.1", "--set", "grids.lam.max=1e-2",
            "--set", "grids.lam.min=1e-3", "--set", "dump_potential=true"]
    assert main(args) == 0
    rows = read_csv(out / "counting.csv")
    assert rows[0] == ["lambda", "N", "X_used", "stable"] and len(rows) == 18
    assert (out / "potential.csv").exists()
