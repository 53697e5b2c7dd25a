import json
from pathlib import Path

import pytest

from hypoflow.cli import load_config, main


def _write_config(path: Path, body: str) -> str:
    path.write_text(body)
    return str(path)


def test_load_config_types(tmp_path):
    cfg = load_config(_write_config(tmp_path / "c.ini", """
[run]
experiment = certify
seed = 7
[model]
case = b
d = 1
[certify]
xi = 0.5, 1, 2
"""))
    assert cfg["run"]["experiment"] == "certify"
    assert cfg["run"]["seed"] == 7
    assert cfg["certify"]["xi"] == [0.5, 1, 2]


def test_missing_config_is_schema_error(capsys):
    assert main(["run", "/nonexistent/config.ini"]) == 2
    assert "configuration error" in capsys.readouterr().err


def test_unknown_experiment_is_schema_error(tmp_path, capsys):
    cfg = _write_config(tmp_path / "c.ini", "[run]\nexperiment = frobnicate\n")
    assert main(["run", cfg]) == 2


def test_bad_model_is_schema_error(tmp_path):
    cfg = _write_config(tmp_path / "c.ini",
                        "[run]\nexperiment = certify\n[model]\ncase = q\n")
    assert main(["run", cfg]) == 2


def test_certify_subcommand(tmp_path, capsys):
    out = tmp_path / "run"
    code = main(["certify", "--case", "a", "--d", "1", "--out", str(out),
                 "--no-figures"])
    assert code == 0
    manifest = json.loads((out / "manifest.json").read_text())
    cert = manifest["experiments"]["certify"]
    assert cert["Lambda"] == pytest.approx(1.0 / 12.0, rel=1e-12)
    assert (out / "certify_rates.csv").exists()
    assert "[PASS] certify" in capsys.readouterr().out


def test_run_emits_plotdata_and_figures(tmp_path):
    cfg = _write_config(tmp_path / "c.ini", """
[run]
experiment = mode-decay
seed = 3
[mode-decay]
xi = 0.5, 2
num_data = 2
horizon = 30
samples = 80
""")
    out = tmp_path / "out"
    assert main(["run", cfg, "--out", str(out)]) == 0
    names = {p.name for p in out.iterdir()}
    assert {"mode_decay_gamma_inf.csv", "mode_decay_bound.csv",
            "mode_decay_ratio.csv", "manifest.json", "mode_decay.png"} <= names
    header = (out / "mode_decay_gamma_inf.csv").read_text().splitlines()[0]
    assert header == "t,gamma_inf"


def test_no_figures_flag(tmp_path):
    cfg = _write_config(tmp_path / "c.ini", """
[run]
experiment = mode-decay
[mode-decay]
xi = 1
num_data = 1
horizon = 20
samples = 40
""")
    out = tmp_path / "out"
    assert main(["run", cfg, "--out", str(out), "--no-figures"]) == 0
    assert not any(p.suffix == ".png" for p in out.iterdir())


def test_deterministic_reports(tmp_path):
    cfg = _write_config(tmp_path / "c.ini", """
[run]
experiment = mode-decay
seed = 11
[mode-decay]
xi = 0.5, 1
num_data = 3
horizon = 25
samples = 60
""")
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["run", cfg, "--out", str(out1), "--no-figures"]) == 0
    assert main(["run", cfg, "--out", str(out2), "--no-figures"]) == 0
    for p1 in sorted(out1.iterdir()):
        p2 = out2 / p1.name
        assert p1.read_bytes() == p2.read_bytes(), p1.name


def test_seed_changes_random_data(tmp_path):
    cfg = _write_config(tmp_path / "c.ini", """
[run]
experiment = mode-decay
[mode-decay]
xi = 1
num_data = 1
horizon = 20
samples = 40
""")
    out1, out2 = tmp_path / "a", tmp_path / "b"
    main(["run", cfg, "--out", str(out1), "--seed", "1", "--no-figures"])
    main(["run", cfg, "--out", str(out2), "--seed", "2", "--no-figures"])
    a = (out1 / "mode_decay_gamma_inf.csv").read_bytes()
    b = (out2 / "mode_decay_gamma_inf.csv").read_bytes()
    assert a != b


def test_failing_check_exits_one(tmp_path, capsys):
    # an under-resolved frequency grid cannot certify the heat exponent
    cfg = _write_config(tmp_path / "c.ini", """
[run]
experiment = wholespace
[geometry]
xi_max = 16.0
xi_points = 16
[wholespace]
horizon = 60
""")
    out = tmp_path / "out"
    code = main(["run", cfg, "--out", str(out), "--no-figures"])
    assert code == 1
    captured = capsys.readouterr().out
    assert "[FAIL] wholespace" in captured
    assert "failed checks: wholespace" in captured
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["failures"] == ["wholespace"]


def test_empty_report_gives_header_only_files(tmp_path):
    import numpy as np

    from hypoflow.modes import DecayReport
    from hypoflow.report import emit_plotdata

    empty = DecayReport(times=np.array([]), norms={"gamma_inf": np.array([])})
    files = emit_plotdata(tmp_path, "empty", empty)
    for f in files:
        assert f.read_text().splitlines() == ["t,gamma_inf"]


def test_manifest_echoes_config_and_certificates(tmp_path):
    cfg = _write_config(tmp_path / "c.ini", """
[run]
experiment = certify
seed = 5
[model]
case = b
[certify]
xi = 0, 1
""")
    out = tmp_path / "out"
    assert main(["run", cfg, "--out", str(out), "--no-figures"]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["model"]["case"] == "b"
    assert manifest["seed"] == 5
    certs = manifest["experiments"]["certify"]["certificates"]
    assert {"C_M", "Lambda", "delta", "lambda", "mu"} <= set(certs[0])


def test_threads_do_not_change_results(tmp_path):
    cfg = _write_config(tmp_path / "c.ini", """
[run]
experiment = wholespace
[geometry]
xi_points = 128
xi_max = 8
[wholespace]
horizon = 40
""")
    out1, out2 = tmp_path / "a", tmp_path / "b"
    main(["run", cfg, "--out", str(out1), "--threads", "1", "--no-figures"])
    main(["run", cfg, "--out", str(out2), "--threads", "4", "--no-figures"])
    a = json.loads((out1 / "manifest.json").read_text())
    b = json.loads((out2 / "manifest.json").read_text())
    assert a["experiments"]["wholespace"]["fitted_exponent"] == \
        b["experiments"]["wholespace"]["fitted_exponent"]
