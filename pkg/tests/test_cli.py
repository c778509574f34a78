import json
import shutil
from pathlib import Path

import highspy
import pytest

from flexdesign.cli import EXIT_CONFIG, EXIT_OK, OUT_ENV, fixture_config_path, main

GOLDEN = Path(__file__).parent / "golden" / "fixture_id_only.json"


def small_config(tmp_path, **changes):
    """Copy of the shipped fixture with cheap study settings."""
    src = fixture_config_path().parent
    for f in src.glob("*.csv"):
        shutil.copy(f, tmp_path / f.name)
    doc = json.loads((src / "config.json").read_text())
    doc["studies"] = {"pareto_points": 3, "sweep_parameters": ["oversizing"], "sweep_points": 2,
                      "heatmap_oversizing": [0.0, 0.2], "heatmap_scales": [0.0, 1.0]}
    doc["clustering"] = {"k": 3, "n_init": 4}
    doc.update(changes)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(doc))
    return path


@pytest.fixture(scope="module")
def golden_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("golden")
    assert main(["--out", str(out), "solve", "--mode", "id_only", "--dump-lp"]) == EXIT_OK
    return out


def test_golden_design_result(golden_run):
    got = json.loads((golden_run / "result.json").read_text())
    want = json.loads(GOLDEN.read_text())
    assert got["lp_fingerprint"] == want["lp_fingerprint"]
    g, w = got["summary"], want["summary"]
    for key in ("tac_EUR_per_a", "q_pv_MW", "q_wind_MW", "q_batt_MWh", "opex_el_EUR_per_a", "opex_grid_EUR_per_a"):
        assert g[key] == pytest.approx(w[key], rel=1e-9, abs=1e-9)
    assert g["da_purchases_MWh"] == 0.0


def test_dumped_lp_cross_checked_by_external_solver(golden_run):
    h = highspy.Highs()
    h.silent()
    assert h.readModel(str(golden_run / "model.lp")) == highspy.HighsStatus.kOk
    h.run()
    assert h.getModelStatus() == highspy.HighsModelStatus.kOptimal
    want = json.loads(GOLDEN.read_text())["summary"]["tac_EUR_per_a"]
    assert h.getInfo().objective_function_value == pytest.approx(want, rel=1e-9)


def test_same_config_and_seed_give_identical_outputs(tmp_path):
    cfg = small_config(tmp_path)
    runs = []
    for name in ("a", "b"):
        assert main(["--config", str(cfg), "--out", str(tmp_path / name), "solve"]) == EXIT_OK
        runs.append(json.loads((tmp_path / name / "manifest.json").read_text()))
    assert runs[0] == runs[1]
    for art in runs[0]["artifacts"]:
        assert (tmp_path / "a" / art).read_bytes() == (tmp_path / "b" / art).read_bytes()


def test_missing_input_path_exits_2_naming_field(tmp_path, capsys):
    cfg = small_config(tmp_path)
    (tmp_path / "gwi.csv").unlink()
    assert main(["--config", str(cfg), "--out", str(tmp_path / "o"), "preprocess"]) == EXIT_CONFIG
    assert "inputs.gwi" in capsys.readouterr().err


def test_config_errors_exit_2(tmp_path, capsys):
    assert main(["--config", str(tmp_path / "nope.json"), "solve"]) == EXIT_CONFIG
    bad = small_config(tmp_path, colour="blue")
    assert main(["--config", str(bad), "solve"]) == EXIT_CONFIG
    bad = small_config(tmp_path, process={"p_nom": -1.0})
    assert main(["--config", str(bad), "solve"]) == EXIT_CONFIG
    assert "p_nom" in capsys.readouterr().err


def test_malformed_row_warns_and_continues(tmp_path, caplog):
    cfg = small_config(tmp_path)
    f = tmp_path / "da_price.csv"
    lines = f.read_text().splitlines()
    lines[10] = lines[10].split(",")[0] + ",??"
    f.write_text("\n".join(lines) + "\n")
    assert main(["--config", str(cfg), "--out", str(tmp_path / "o"), "preprocess"]) == EXIT_OK
    assert any("malformed row" in r.message for r in caplog.records if r.levelname == "WARNING")
    days = json.loads((tmp_path / "o" / "days.json").read_text())
    assert len(days["days"]) == 12
    assert days["rejected"]["2021-03-28"].startswith("nonstandard day length")


def test_env_var_sets_output_dir(tmp_path, monkeypatch):
    monkeypatch.setenv(OUT_ENV, str(tmp_path / "env-out"))
    assert main(["--config", str(small_config(tmp_path)), "cluster", "--wcss", "5"]) == EXIT_OK
    out = tmp_path / "env-out"
    assert (out / "tree.json").is_file() and (out / "wcss.csv").read_text().startswith("k,wcss\n1,")


def test_tree_reload_gives_same_lp(tmp_path):
    cfg = str(small_config(tmp_path))
    assert main(["--config", cfg, "--out", str(tmp_path / "a"), "solve"]) == EXIT_OK
    tree = tmp_path / "a" / "tree.json"
    assert main(["--config", cfg, "--out", str(tmp_path / "b"), "solve", "--tree", str(tree)]) == EXIT_OK
    fa = json.loads((tmp_path / "a" / "result.json").read_text())["lp_fingerprint"]
    fb = json.loads((tmp_path / "b" / "result.json").read_text())["lp_fingerprint"]
    assert fa == fb


def test_study_verbs_and_report(tmp_path):
    cfg, out = str(small_config(tmp_path)), tmp_path / "o"
    for verb in ("solve", "pareto", "sweep", "heatmap", "compare-markets", "report"):
        assert main(["--config", cfg, "--out", str(out), verb]) == EXIT_OK, verb
    manifest = json.loads((out / "manifest.json").read_text())
    for name in ("result.json", "pareto.csv", "sweep.csv", "heatmap.csv", "markets.csv", "decomposition.csv",
                 "report.md"):
        assert name in manifest["artifacts"]
    assert len((out / "pareto.csv").read_text().splitlines()) == 4
    header = (out / "heatmap.csv").read_text().splitlines()[0]
    assert header == "oversizing,capacity_scale,metric,value"
    assert "## Design" in (out / "report.md").read_text()
