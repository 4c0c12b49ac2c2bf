import json
import subprocess
import sys

import numpy as np
import pytest

from mafod import io as mio
from mafod.cli import EXIT_NUMERIC, EXIT_OK, EXIT_USAGE, main
from mafod.curves import CurveSet, Polyline

SMALL_RINGS = {"kind": "concentric", "size": 64, "radii": [10.0, 22.0], "widths": [1.5, 2.5],
               "snr": 6.81, "seed": 7}


@pytest.fixture
def spec(tmp_path):
    p = tmp_path / "rings.json"
    p.write_text(json.dumps(SMALL_RINGS))
    return p


def test_help_lists_exit_codes():
    out = subprocess.run([sys.executable, "-m", "mafod", "--help"], capture_output=True,
                         text=True, check=True).stdout
    for word in ("generate", "filter", "extract", "evaluate", "pipeline", "exit codes"):
        assert word in out


def test_usage_errors(tmp_path, spec, capsys):
    assert main(["generate", "--spec", str(tmp_path / "missing.json"),
                 "--out", str(tmp_path)]) == EXIT_USAGE
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["generate", "--spec", str(bad), "--out", str(tmp_path)]) == EXIT_USAGE
    bad.write_text(json.dumps({"kind": "concentric", "colour": "red"}))
    assert main(["generate", "--spec", str(bad), "--out", str(tmp_path)]) == EXIT_USAGE
    main(["generate", "--spec", str(spec), "--out", str(tmp_path / "g")])
    rc = main(["filter", "--input", str(tmp_path / "g" / "noisy.sf2d"),
               "--out", str(tmp_path / "f.sf2d"), "--method", "wavelet"])
    assert rc == EXIT_USAGE and "bilateral" in capsys.readouterr().err
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == EXIT_USAGE


def test_threads_env(tmp_path, spec, monkeypatch):
    monkeypatch.setenv("CREASE_THREADS", "many")
    assert main(["generate", "--spec", str(spec), "--out", str(tmp_path)]) == EXIT_USAGE
    monkeypatch.setenv("CREASE_THREADS", "2")
    assert main(["generate", "--spec", str(spec), "--out", str(tmp_path)]) == EXIT_OK


def test_generate_is_deterministic(tmp_path, spec):
    for d in ("a", "b"):
        assert main(["generate", "--spec", str(spec), "--snr", "6.81", "--seed", "7",
                     "--out", str(tmp_path / d)]) == EXIT_OK
    for name in ("clean.sf2d", "noisy.sf2d", "noisy.png", "gt.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert len(CurveSet.from_json((tmp_path / "a" / "gt.json").read_text())) == 2


def test_filter_extract_evaluate_chain(tmp_path, spec, capsys):
    main(["generate", "--spec", str(spec), "--out", str(tmp_path)])
    rc = main(["filter", "--input", str(tmp_path / "noisy.sf2d"), "--out", str(tmp_path / "f.sf2d"),
               "--method", "mafod", "--lambda", "0.017", "--T", "2", "--M", "100",
               "--theta", "0.35", "--sigmas", "0.5:0.5:3.0",
               "--reference", str(tmp_path / "clean.sf2d"), "--snapshot-every", "5",
               "--scale-map-out", str(tmp_path / "s.sf2d")])
    assert rc == EXIT_OK
    info = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert info["l2_out"] < info["l2_in"] and info["n_substeps"] == 1
    assert (tmp_path / "snapshots" / "k000005.sf2d").exists()
    assert mio.read_image(tmp_path / "s.sf2d").shape == (64, 64)
    rc = main(["extract", "--input", str(tmp_path / "f.sf2d"), "--kind", "ridge",
               "--min-length", "3", "--out", str(tmp_path / "rec.json"),
               "--overlay", str(tmp_path / "ov.png"), "--gt", str(tmp_path / "gt.json")])
    assert rc == EXIT_OK and (tmp_path / "ov.png").exists()
    capsys.readouterr()
    rc = main(["evaluate", "--gt", str(tmp_path / "gt.json"), "--rec", str(tmp_path / "rec.json"),
               "--out", str(tmp_path / "m.json")])
    line = capsys.readouterr().out.strip()
    m = json.loads((tmp_path / "m.json").read_text())
    assert rc == EXIT_OK and line == m["summary"] and m["p"] > 0.9 and m["E"] < 0.6


@pytest.mark.parametrize("method", ["bilateral", "gaussian", "multiscale-gaussian", "ifod",
                                    "pm2", "none"])
def test_baseline_filters(tmp_path, method):
    u = np.random.default_rng(0).random((24, 24))
    mio.write_sf2d(tmp_path / "in.sf2d", u)
    rc = main(["filter", "--input", str(tmp_path / "in.sf2d"), "--out", str(tmp_path / "o.png"),
               "--method", method, "--steps", "5", "--sigma-spatial", "1.5", "--t-max", "4"])
    assert rc == EXIT_OK and mio.read_image(tmp_path / "o.png").shape == (24, 24)


def test_extract_constant_image_is_empty(tmp_path, capsys):
    mio.write_pgm(tmp_path / "c.pgm", np.full((16, 16), 0.5))
    rc = main(["extract", "--input", str(tmp_path / "c.pgm"), "--out", str(tmp_path / "c.csv")])
    assert rc == EXIT_OK
    assert len(CurveSet.from_csv((tmp_path / "c.csv").read_text())) == 0
    assert "0 curves" in capsys.readouterr().out


def test_evaluate_identical(tmp_path, capsys):
    cs = CurveSet([Polyline([[1.0, 1.0], [9.0, 3.0]])])
    (tmp_path / "a.json").write_text(cs.to_json())
    assert main(["evaluate", "--gt", str(tmp_path / "a.json"), "--rec", str(tmp_path / "a.json"),
                 "--neighborhood", "10"]) == EXIT_OK
    assert capsys.readouterr().out.strip() == "E=0.000, p=100%"


def test_numerical_failure_exit_code(tmp_path, capsys):
    mio.write_sf2d(tmp_path / "in.sf2d", np.random.default_rng(1).random((16, 16)))
    rc = main(["filter", "--input", str(tmp_path / "in.sf2d"), "--out", str(tmp_path / "o.sf2d"),
               "--T", "1e6", "--M", "20", "--tau-max", "5", "--lambda", "0.05"])
    assert rc == EXIT_NUMERIC and "non-finite" in capsys.readouterr().err


def test_pipeline_config_errors(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"synthetic": SMALL_RINGS, "bogus": 1}))
    assert main(["pipeline", "--config", str(cfg), "--out", str(tmp_path / "o")]) == EXIT_USAGE
    cfg.write_text(json.dumps({"filter": {"method": "gaussian"}}))
    assert main(["pipeline", "--config", str(cfg), "--out", str(tmp_path / "o")]) == EXIT_USAGE
