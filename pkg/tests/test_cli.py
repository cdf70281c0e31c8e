import json
import math

import pytest

from opfsets.cli import (EXIT_CERTIFICATION, EXIT_INFEASIBLE, EXIT_OK,
                         EXIT_RESOURCE, EXIT_USAGE, main)
from opfsets.grid import CellSet, all_cells
from opfsets.scaling import largest_feasible_epsilon
from opfsets.search import double_cap_cellset


def test_no_arguments_is_usage_error(capsys):
    assert main([]) == EXIT_USAGE
    capsys.readouterr()


def test_grid_summary_and_artifact(tmp_path, capsys):
    out = tmp_path / "cells.json"
    assert main(["grid", "--level", "2", "--out", str(out)]) == EXIT_OK
    text = capsys.readouterr().out
    assert "level 2: 64 cells" in text
    doc = json.loads(out.read_text())
    assert doc["level"] == 2 and len(doc["cells"]) == 64


def test_conflicts_build_cache_and_reload(tmp_path, capsys):
    cache = tmp_path / "graphs"
    args = ["conflicts", "--level", "2", "--cache-dir", str(cache)]
    assert main(args) == EXIT_OK
    first = capsys.readouterr().out
    assert "1328 edges" in first
    assert "cached graph" in first
    # second run loads the cache instead of rebuilding
    assert main(args) == EXIT_OK
    second = capsys.readouterr().out
    assert "1328 edges" in second
    assert "cached graph" not in second


def test_conflicts_cache_env_and_corruption(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("OPFSETS_CACHE_DIR", str(tmp_path))
    assert main(["conflicts", "--level", "1"]) == EXIT_OK
    capsys.readouterr()
    path = tmp_path / "level1_margin0.opfg"
    assert path.exists()
    raw = bytearray(path.read_bytes())
    raw[-1] ^= 0xFF
    path.write_bytes(bytes(raw))
    assert main(["conflicts", "--level", "1"]) == EXIT_OK
    captured = capsys.readouterr()
    assert "rebuilding cache" in captured.err


def test_conflicts_resource_cap(capsys):
    assert main(["conflicts", "--level", "8"]) == EXIT_RESOURCE
    assert "max-level" in capsys.readouterr().err


def test_search_baseline_artifact_deterministic(tmp_path, capsys):
    out = tmp_path / "search.json"
    argv = ["search", "--level", "2", "--method", "baseline", "--out", str(out)]
    assert main(argv) == EXIT_OK
    first = out.read_bytes()
    assert main(argv) == EXIT_OK
    assert out.read_bytes() == first
    doc = json.loads(first)
    assert doc["fraction"] == 0.25
    capsys.readouterr()


def test_search_exact_level1(capsys):
    assert main(["search", "--level", "1", "--method", "exact"]) == EXIT_OK
    text = capsys.readouterr().out
    assert "optimal: True" in text


def test_search_local_and_csv(tmp_path, capsys):
    csv_path = tmp_path / "board.csv"
    assert main(["search", "--level", "2", "--method", "local",
                 "--iters", "20", "--csv", str(csv_path)]) == EXIT_OK
    assert csv_path.read_text().startswith("level,method,seed")
    capsys.readouterr()


def test_filter_epsilon_validation(capsys):
    assert main(["filter", "--oracle", "double-cap", "--level", "2",
                 "--epsilon", "0.5"]) == EXIT_USAGE
    assert "outside the supported range" in capsys.readouterr().err
    # above the guarantee threshold but below the hard cap: warn and run
    assert main(["filter", "--oracle", "double-cap", "--level", "2",
                 "--epsilon", "0.05"]) == EXIT_OK
    captured = capsys.readouterr()
    assert "warning" in captured.err
    assert "selected" in captured.out


def test_filter_double_cap_artifact(tmp_path, capsys):
    out = tmp_path / "filter.json"
    assert main(["filter", "--oracle", "double-cap", "--level", "3",
                 "--epsilon", "0.01", "--out", str(out)]) == EXIT_OK
    doc = json.loads(out.read_text())
    assert len(doc["selected"]["cells"]) == 64
    capsys.readouterr()


def test_filter_sieve_oracle(capsys):
    assert main(["filter", "--oracle", "sieve", "--depth", "2", "--level", "2",
                 "--epsilon", "0.01"]) == EXIT_OK
    capsys.readouterr()


def test_scale_feasible_and_infeasible(tmp_path, capsys):
    sel_path = tmp_path / "dc3.json"
    sel = double_cap_cellset(3)
    sel.save(sel_path)
    thresh = largest_feasible_epsilon(sel.measure())
    out = tmp_path / "scale.json"
    assert main(["scale", "--selection", str(sel_path),
                 "--epsilon", f"{0.9 * thresh}", "--out", str(out)]) == EXIT_OK
    text = capsys.readouterr().out
    assert "0 violations" in text
    doc = json.loads(out.read_text())
    assert doc["certification"]["violations"] == []
    # an infeasible epsilon reports the bisection suggestion
    assert main(["scale", "--selection", str(sel_path),
                 "--epsilon", f"{2.0 * thresh}"]) == EXIT_INFEASIBLE
    assert "largest feasible epsilon" in capsys.readouterr().err


def test_scale_certification_failure(tmp_path, capsys):
    sel_path = tmp_path / "full.json"
    sel = CellSet.from_cells(2, all_cells(2))
    sel.save(sel_path)
    thresh = largest_feasible_epsilon(sel.measure())
    assert main(["scale", "--selection", str(sel_path),
                 "--epsilon", f"{0.9 * thresh}"]) == EXIT_CERTIFICATION
    capsys.readouterr()


def test_scale_missing_selection(tmp_path, capsys):
    assert main(["scale", "--selection", str(tmp_path / "nope.json"),
                 "--epsilon", "0.01"]) == EXIT_USAGE
    capsys.readouterr()


def test_convexify_double_cap(tmp_path, capsys):
    sel_path = tmp_path / "dc3.json"
    double_cap_cellset(3).save(sel_path)
    out = tmp_path / "conv.json"
    assert main(["convexify", "--selection", str(sel_path),
                 "--out", str(out)]) == EXIT_OK
    text = capsys.readouterr().out
    assert "2 polygons" in text
    assert "0 violations" in text
    doc = json.loads(out.read_text())
    assert len(doc["decomposition"]["polygons"]) == 2
    assert doc["decomposition"]["pairwise_min_distance"] > math.pi / 2


def test_report_sweep_and_csv(tmp_path, capsys):
    assert main(["report"]) == EXIT_USAGE
    capsys.readouterr()
    csv_path = tmp_path / "sweep.csv"
    assert main(["report", "--sweep", "2", "4", "--csv", str(csv_path)]) == EXIT_OK
    text = capsys.readouterr().out
    assert "2, 0.250000000" in text
    lines = csv_path.read_text().splitlines()
    assert lines[0] == "level,method,cells,fraction"
    assert len(lines) == 4


def test_report_consumes_search_artifacts(tmp_path, capsys):
    out = tmp_path / "search.json"
    assert main(["search", "--level", "2", "--method", "baseline",
                 "--out", str(out)]) == EXIT_OK
    capsys.readouterr()
    assert main(["report", "--inputs", str(out)]) == EXIT_OK
    assert "baseline" in capsys.readouterr().out


def test_config_defaults_and_flag_priority(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\nmargin = 0.05\n")
    assert main(["--config", str(cfg), "conflicts", "--level", "1"]) == EXIT_OK
    assert "margin 0.05" in capsys.readouterr().out
    # explicit flags beat config values
    assert main(["--config", str(cfg), "conflicts", "--level", "1",
                 "--margin", "0"]) == EXIT_OK
    assert "margin 0:" in capsys.readouterr().out


def test_config_rejects_unknown_keys(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("turbo=yes\n")
    assert main(["--config", str(cfg), "grid", "--level", "1"]) == EXIT_USAGE
    assert "unknown config key" in capsys.readouterr().err
    cfg.write_text("no equals sign here\n")
    assert main(["--config", str(cfg), "grid", "--level", "1"]) == EXIT_USAGE
    capsys.readouterr()
