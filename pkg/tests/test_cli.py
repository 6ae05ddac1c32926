import csv
import json
from pathlib import Path

import numpy as np
import pytest

from iffl.cli import main
from iffl.config import parse_config
from iffl.io import TRAJECTORY_COLUMNS, fmt_float, json_line

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"


def run(tmp_path, experiment, text, *extra):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(text)
    out = tmp_path / "out"
    return main([experiment, "--config", str(cfg), "--out", str(out), *extra]), out


def read_csv(path):
    lines = [l for l in path.read_text().splitlines() if not l.startswith("#")]
    return list(csv.reader(lines))


def test_float_format_round_trips():
    for v in (0.1, 1 / 3, 2.0**-1074, 1e308, -7.25):
        assert float(fmt_float(v)) == v
        assert float(json.loads(json_line({"v": v}))["v"]) == v
    assert fmt_float(float("nan")) == "" and json.loads(json_line({"v": float("inf")}))["v"] is None


def test_linear_phase_nullclines(tmp_path):
    code, out = main(["phase", "--config", str(CONFIGS / "linear_phase.cfg"), "--out", str(tmp_path)]), tmp_path
    assert code == 0
    rows = read_csv(out / "nullclines.csv")
    assert rows[0] == ["component", "p", "y"]
    by = {}
    for comp, p, y in rows[1:]:
        by.setdefault(comp, []).append((float(p), float(y)))
    line = np.array(by["p_line"])
    assert np.allclose(line[:, 1], (1 + 1 - line[:, 0]) / 2)
    curve = np.array(by["y_curve"])
    assert np.allclose(curve[:, 1], curve[:, 0], atol=1e-12)
    (eq,) = [json.loads(l) for l in (out / "equilibria.jsonl").read_text().splitlines()]
    assert eq["p_bar"] == pytest.approx(2 / 3) and eq["stability"] == "StableNode/Focus"


def test_heatmap_grid(tmp_path):
    assert main(["heatmap", "--config", str(CONFIGS / "kappa_lambda_heatmap.cfg"), "--out", str(tmp_path)]) == 0
    text = (tmp_path / "grid.csv").read_text().splitlines()
    assert text[0].startswith("# axis1 kappa (6)") and text[1].startswith("# axis2 lambda (31)")
    rows = read_csv(tmp_path / "grid.csv")
    assert rows[0][:3] == ["kappa", "lambda", "mu"]
    assert len(rows) == 1 + 6 * 31
    assert len({len(r) for r in rows}) == 1
    # row-major, axis1 outer
    assert [float(r[0]) for r in rows[1:32]] == [5.0] * 31
    column = [(float(r[1]), float(r[2])) for r in rows[1:] if float(r[0]) == 20.0]
    signs = [np.sign(mu) for _, mu in column]
    assert [signs[0]] + [b for a, b in zip(signs, signs[1:]) if a != b] == [-1, 1, -1, 1]


def test_simulate_constant_input(tmp_path):
    text = "model.delta = 2\ninput.kind = constant\ninput.alpha = 5\nrun.t_end = 100\n"
    code, out = run(tmp_path, "simulate", text)
    assert code == 0
    rows = read_csv(out / "trajectory.csv")
    assert tuple(rows[0]) == TRAJECTORY_COLUMNS
    assert float(rows[-1][2]) == pytest.approx(0.5, abs=1e-6)
    assert float(rows[-1][3]) == pytest.approx(5.0)


def test_reduced_run_leaves_undefined_fields_blank(tmp_path):
    code, out = run(tmp_path, "simulate", "model.kappa = 2\nmodel.lambda = 1\ninitial.system = reduced\ninitial.p = 2\ninitial.y = 2\n")
    assert code == 0
    rows = read_csv(out / "trajectory.csv")
    assert all(r[1] == "" and r[3] == "" and r[7] == "" for r in rows[1:])
    assert float(rows[-1][4]) == pytest.approx(2 / 3, abs=1e-6)


def test_degradation_has_no_production_signal(tmp_path):
    code, out = run(tmp_path, "simulate", "model.variant = degradation\ninput.kind = constant\ninput.alpha = 1\nrun.t_end = 5\n")
    assert code == 0
    assert all(r[6] == "" for r in read_csv(out / "trajectory.csv")[1:])


def test_jsonl_format(tmp_path):
    code, out = run(tmp_path, "step", (CONFIGS / "step_locking.cfg").read_text(), "--format", "jsonl")
    assert code == 0
    recs = [json.loads(l) for l in (out / "trajectory.jsonl").read_text().splitlines()]
    assert set(recs[0]) == set(TRAJECTORY_COLUMNS)
    (summary,) = [json.loads(l) for l in (out / "step.jsonl").read_text().splitlines()]
    assert summary["q0"] == pytest.approx(2.0, abs=1e-6) and summary["y_final"] == pytest.approx(2.0, abs=1e-2)


def test_limits_report(tmp_path):
    code, out = run(tmp_path, "limits", (CONFIGS / "adaptation_linear.cfg").read_text())
    assert code == 0
    (lim,) = [json.loads(l) for l in (out / "limits.jsonl").read_text().splitlines()]
    assert lim["y_limit_predicted"] == 0.5
    assert lim["y_sup"] == pytest.approx(0.5, abs=1e-3)


def test_sweep_outputs(tmp_path):
    code, out = run(tmp_path, "sweep", (CONFIGS / "bands_sweep.cfg").read_text())
    assert code == 0
    bands = [json.loads(l) for l in (out / "bands.jsonl").read_text().splitlines()]
    for method in ("algebraic", "simulation"):
        labels = [b["label"] for b in bands if b["method"] == method]
        assert labels == ["Elimination", "Proliferation", "Elimination", "Proliferation"]
    assert len(read_csv(out / "grid.csv")) == 71


@pytest.mark.parametrize("name", ["linear_phase", "bands_equilibria", "step_locking", "kappa_lambda_heatmap"])
def test_manifest_rerun_is_bit_identical(tmp_path, name):
    cfg = CONFIGS / f"{name}.cfg"
    experiment = parse_config(cfg.read_text()).experiment
    first = tmp_path / "first"
    assert main([experiment, "--config", str(cfg), "--out", str(first)]) == 0
    manifest = first / "manifest.jsonl"
    records = [json.loads(l) for l in manifest.read_text().splitlines()]
    assert records[0]["version"] and records[0]["experiment"] == experiment
    before = {p.name: p.read_bytes() for p in first.iterdir()}
    assert main([experiment, "--config", str(manifest), "--out", str(first)]) == 0
    after = {p.name: p.read_bytes() for p in first.iterdir()}
    assert before == after
    # and into a fresh directory every data file matches
    second = tmp_path / "second"
    assert main([experiment, "--config", str(manifest), "--out", str(second)]) == 0
    for rec in records[1:]:
        assert (second / rec["file"]).read_bytes() == before[rec["file"]]


def test_manifest_echoes_defaults(tmp_path):
    code, out = run(tmp_path, "equilibria", "model.V = 1\n")
    text = json.loads((out / "manifest.jsonl").read_text().splitlines()[0])["config_text"]
    for key in ("model.delta = 1.0", "run.rel_tol = 1e-08", "phase.samples = 512", "model.variant = production"):
        assert key in text


class TestExitCodes:
    def test_validation_error(self, tmp_path, capsys):
        code, _ = run(tmp_path, "simulate", "model.delta = -1\n")
        assert code == 1
        assert "line 1" in capsys.readouterr().err

    def test_unknown_key(self, tmp_path):
        assert run(tmp_path, "simulate", "model.a = 1\nmodel.lamda = 2\n")[0] == 1

    def test_unsupported_variant(self, tmp_path):
        assert run(tmp_path, "equilibria", "model.variant = degradation\n")[0] == 1

    def test_numerical_failure(self, tmp_path, capsys):
        code, _ = run(tmp_path, "simulate", "input.kind = linear\ninput.alpha = 1\ninput.beta = -1\nrun.t_end = 2\nmodel.a = 1\n")
        assert code == 2
        assert "numerical failure" in capsys.readouterr().err

    def test_missing_config_file(self, tmp_path):
        assert main(["simulate", "--config", str(tmp_path / "nope.cfg")]) == 1

    def test_bad_arguments(self, tmp_path):
        with pytest.raises(SystemExit) as info:
            main(["nonsense", "--config", "x"])
        assert info.value.code == 1

    def test_unwritable_output(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("")
        cfg = tmp_path / "run.cfg"
        cfg.write_text("model.a = 1\n")
        assert main(["equilibria", "--config", str(cfg), "--out", str(blocker / "sub")]) == 1

    def test_seed_is_accepted(self, tmp_path):
        assert run(tmp_path, "equilibria", "model.a = 1\n", "--seed", "n/a")[0] == 0
