import json
from pathlib import Path

import pytest

from faasbench.cli import EXIT_ANALYSIS, EXIT_CONFIG, EXIT_OK, main
from faasbench.records import HEADER_LINE


def run_cli(*argv) -> int:
    return main(list(argv))


def find_run_dir(out: Path) -> Path:
    dirs = [p for p in out.iterdir() if p.is_dir()]
    assert len(dirs) == 1
    return dirs[0]


def test_recipes_list_and_emit(tmp_path, capsys):
    assert run_cli("recipes") == EXIT_OK
    listed = capsys.readouterr().out.split()
    assert "exp1-single-cloud" in listed and "exp4-coldstart" in listed

    assert run_cli("recipes", "exp3-three-way-factory", "--out", str(tmp_path)) == EXIT_OK
    cfg = tmp_path / "exp3-three-way-factory.config.json"
    prof = tmp_path / "exp3-three-way-factory.profile.json"
    assert cfg.exists() and prof.exists()
    parsed = json.loads(cfg.read_text())
    assert {p["id"] for p in parsed["platforms"]} == {"couch", "panel", "cushion"}


def test_recipes_unknown(tmp_path):
    assert run_cli("recipes", "exp9-nope", "--out", str(tmp_path)) == EXIT_CONFIG


def test_validate_builtin_ok(capsys):
    assert run_cli("validate", "webshop") == EXIT_OK
    assert "17 functions" in capsys.readouterr().out


def test_validate_broken_app(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({
        "name": "bad",
        "functions": [
            {"name": "a", "trigger": "http-sync", "entryPoint": True,
             "body": [{"kind": "call", "target": "ghost"}]},
        ],
    }))
    assert run_cli("validate", str(bad)) == EXIT_CONFIG
    assert "UnknownTarget" in capsys.readouterr().out


def test_run_produces_artifacts_and_reports(tmp_path, capsys):
    out = tmp_path / "out"
    code = run_cli("run", "webshop", "--seed", "7", "--scale", "0.002", "--out", str(out))
    assert code == EXIT_OK
    run_dir = find_run_dir(out)
    assert (run_dir / "manifest.json").exists()
    assert (run_dir / "raw.log").exists()
    assert (run_dir / "reports" / "summary.json").exists()
    manifest = json.loads((run_dir / "manifest.json").read_text())
    assert manifest["seed"] == 7 and manifest["benchmark"] == "webshop"
    assert (run_dir / "raw.log").read_text().startswith(HEADER_LINE)


def test_run_determinism_across_invocations(tmp_path):
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert run_cli("run", "webshop", "--seed", "7", "--scale", "0.002", "--out", str(out_a)) == EXIT_OK
    assert run_cli("run", "webshop", "--seed", "7", "--scale", "0.002", "--out", str(out_b)) == EXIT_OK
    log_a = (find_run_dir(out_a) / "raw.log").read_bytes()
    log_b = (find_run_dir(out_b) / "raw.log").read_bytes()
    assert log_a == log_b


def test_run_with_recipe_files_emits_trigger_csv(tmp_path):
    assert run_cli("recipes", "exp3-three-way-factory", "--out", str(tmp_path)) == EXIT_OK
    out = tmp_path / "out"
    code = run_cli(
        "run", "smartfactory",
        "--config", str(tmp_path / "exp3-three-way-factory.config.json"),
        "--profile", str(tmp_path / "exp3-three-way-factory.profile.json"),
        "--seed", "3", "--scale", "0.05", "--out", str(out),
    )
    assert code == EXIT_OK
    run_dir = find_run_dir(out)
    trigger_csv = (run_dir / "reports" / "trigger_delays.csv").read_text()
    assert "couch->panel" in trigger_csv
    assert "panel->couch" in trigger_csv


def test_run_unknown_benchmark(tmp_path):
    assert run_cli("run", "shop", "--out", str(tmp_path)) == EXIT_CONFIG


def test_run_invalid_deployment_config(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "platforms": [{"id": "p1", "networkLatency": {"p1": "constant(1)", "loadgen": "constant(1)"}}],
        "assignment": {},  # nothing assigned
    }))
    out = tmp_path / "out"
    code = run_cli("run", "webshop", "--config", str(cfg), "--seed", "1",
                   "--scale", "0.002", "--out", str(out))
    assert code == EXIT_CONFIG


def test_analyze_matches_pipeline_reports(tmp_path):
    out = tmp_path / "out"
    assert run_cli("run", "webshop", "--seed", "7", "--scale", "0.002", "--out", str(out)) == EXIT_OK
    run_dir = find_run_dir(out)
    redo = tmp_path / "redo"
    assert run_cli("analyze", str(run_dir / "raw.log"), "--out", str(redo)) == EXIT_OK
    original = json.loads((run_dir / "reports" / "summary.json").read_text())
    offline = json.loads((redo / "summary.json").read_text())
    assert offline == original


def test_analyze_missing_file(tmp_path):
    assert run_cli("analyze", str(tmp_path / "nope.log")) == EXIT_CONFIG


def test_analyze_empty_file_with_header(tmp_path, capsys):
    log = tmp_path / "raw.log"
    log.write_text(HEADER_LINE + "\n")
    assert run_cli("analyze", str(log), "--out", str(tmp_path / "r")) == EXIT_OK
    assert "0 records" in capsys.readouterr().out


def test_analyze_truncated_file_partial_results(tmp_path):
    out = tmp_path / "out"
    assert run_cli("run", "webshop", "--seed", "7", "--scale", "0.002", "--out", str(out)) == EXIT_OK
    raw = (find_run_dir(out) / "raw.log").read_text().splitlines()
    truncated = tmp_path / "trunc.log"
    keep = len(raw) // 2
    truncated.write_text("\n".join(raw[:keep]) + "\n" + raw[keep][: len(raw[keep]) // 2] + "\n")
    redo = tmp_path / "redo"
    code = run_cli("analyze", str(truncated), "--out", str(redo))
    assert code == EXIT_ANALYSIS  # parse errors beyond the default threshold
    summary = json.loads((redo / "summary.json").read_text())
    assert summary["parseErrors"] >= 1
    assert summary["records"] > 0  # partial results still produced
    code = run_cli("analyze", str(truncated), "--out", str(redo), "--max-parse-errors", "10")
    assert code == EXIT_OK


def test_out_dir_env_override(tmp_path, monkeypatch):
    monkeypatch.setenv("FAASBENCH_OUT", str(tmp_path / "envout"))
    assert run_cli("run", "smartfactory", "--seed", "2", "--scale", "0.02") == EXIT_OK
    assert (tmp_path / "envout").exists()


def test_run_custom_application_file(tmp_path):
    # a user-supplied app + profile runs with the generated default config
    app = {
        "name": "ping",
        "externalServices": ["keystore"],
        "functions": [
            {"name": "gate", "trigger": "http-sync", "entryPoint": True,
             "body": [
                 {"kind": "compute", "duration": "constant(1)"},
                 {"kind": "call", "target": "store"},
             ]},
            {"name": "store", "trigger": "http-sync",
             "body": [{"kind": "dbSet", "key": "hit", "valueSize": 64}]},
        ],
    }
    profile = {
        "name": "ping-profile",
        "workflows": [{"name": "hit", "steps": [{"entry": "gate", "payloadBytes": 64}]}],
        "phases": [{"kind": "burst", "durationSeconds": 5, "totalFlows": 20, "mix": {"hit": 1.0}}],
    }
    app_path = tmp_path / "app.json"
    profile_path = tmp_path / "profile.json"
    app_path.write_text(json.dumps(app))
    profile_path.write_text(json.dumps(profile))
    out = tmp_path / "out"
    code = run_cli("run", str(app_path), "--profile", str(profile_path),
                   "--seed", "1", "--out", str(out))
    assert code == EXIT_OK
    summary = json.loads((find_run_dir(out) / "reports" / "summary.json").read_text())
    assert summary["trees"]["total"] == 20 and summary["trees"]["incomplete"] == 0


def test_run_with_charts(tmp_path):
    out = tmp_path / "out"
    code = run_cli("run", "smartfactory", "--seed", "2", "--scale", "0.02",
                   "--out", str(out), "--charts")
    assert code == EXIT_OK
    charts = find_run_dir(out) / "reports" / "charts"
    assert (charts / "trigger_delay.png").exists()
    assert (charts / "exec_duration.png").exists()


def test_rerun_into_same_out_dir_gets_fresh_directory(tmp_path):
    out = tmp_path / "out"
    assert run_cli("run", "smartfactory", "--seed", "2", "--scale", "0.02", "--out", str(out)) == EXIT_OK
    assert run_cli("run", "smartfactory", "--seed", "2", "--scale", "0.02", "--out", str(out)) == EXIT_OK
    dirs = sorted(p.name for p in out.iterdir() if p.is_dir())
    assert len(dirs) == 2
    assert dirs[1] == f"{dirs[0]}-2"  # same run id, suffixed directory
    assert (out / dirs[0] / "raw.log").read_bytes() == (out / dirs[1] / "raw.log").read_bytes()


def test_run_custom_application_requires_profile(tmp_path):
    app_path = tmp_path / "app.json"
    app_path.write_text(json.dumps({
        "name": "solo",
        "functions": [{"name": "f", "trigger": "http-sync", "entryPoint": True,
                       "body": [{"kind": "compute", "duration": "constant(1)"}]}],
    }))
    assert run_cli("run", str(app_path), "--out", str(tmp_path / "out")) == EXIT_CONFIG
