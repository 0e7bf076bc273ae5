import csv
import json

import numpy as np
import pytest
from click.testing import CliRunner

from trisum.cli import EXPERIMENT_COLUMNS, main
from trisum.graph import Graph, format_edge_list, load_edge_list
from trisum.weighting import EdgeWeighting, format_weighting


@pytest.fixture
def runner():
    return CliRunner()


def write_k3(tmp_path):
    g = Graph.build(3, [(0, 1), (1, 2), (0, 2)])
    path = tmp_path / "k3.txt"
    path.write_text(format_edge_list(g))
    return g, path


class TestConstants:
    def test_report(self, runner):
        result = runner.invoke(main, ["constants", "--grid", "5"])
        assert result.exit_code == 0
        data = json.loads(result.output)
        assert 0.023 < data["dbar_closed_form"] < 0.024
        assert abs(data["dbar_closed_form"] - data["dbar_quadrature"]) < 1e-9
        assert len(data["r_table"]) == 5
        assert data["a1"] < data["a2"] < 1.9


class TestGen:
    def test_gnp_round_trip(self, runner, tmp_path):
        out = tmp_path / "g.txt"
        result = runner.invoke(
            main, ["gen", "--gen", "gnp:30,0.4", "--seed", "3", "--out", str(out)]
        )
        assert result.exit_code == 0
        g = load_edge_list(out)
        assert g.vertex_count == 30

    def test_gen_deterministic(self, runner, tmp_path):
        a, b = tmp_path / "a.txt", tmp_path / "b.txt"
        for out in (a, b):
            runner.invoke(
                main, ["gen", "--gen", "reg:20,4", "--seed", "5", "--out", str(out)]
            )
        assert a.read_text() == b.read_text()

    def test_bad_spec(self, runner, tmp_path):
        result = runner.invoke(
            main, ["gen", "--gen", "tree:5", "--out", str(tmp_path / "x.txt")]
        )
        assert result.exit_code != 0


class TestVerify:
    def test_valid_weighting_exits_zero(self, runner, tmp_path):
        g, gpath = write_k3(tmp_path)
        w = EdgeWeighting(weights=np.array([1, 3, 2]), max_weight=3)
        wpath = tmp_path / "w.txt"
        wpath.write_text(format_weighting(g, w))
        result = runner.invoke(
            main, ["verify", "--graph", str(gpath), "--weights", str(wpath)]
        )
        assert result.exit_code == 0
        report = json.loads(result.output)
        assert report["ok"] is True

    def test_conflicting_weighting_exits_one(self, runner, tmp_path):
        g, gpath = write_k3(tmp_path)
        w = EdgeWeighting(weights=np.array([1, 1, 1]), max_weight=3)
        wpath = tmp_path / "w.txt"
        wpath.write_text(format_weighting(g, w))
        result = runner.invoke(
            main, ["verify", "--graph", str(gpath), "--weights", str(wpath)]
        )
        assert result.exit_code == 1
        report = json.loads(result.output)
        assert report["conflict_edges"] == [0, 1, 2]


class TestOracleCommand:
    def test_min_k(self, runner, tmp_path):
        g = Graph.build(3, [(0, 1), (1, 2)])
        path = tmp_path / "p3.txt"
        path.write_text(format_edge_list(g))
        result = runner.invoke(
            main, ["oracle", "--graph", str(path), "--k-max", "3"]
        )
        assert result.exit_code == 0
        assert json.loads(result.output)["min_k"] == 1

    def test_sweep_csv(self, runner, tmp_path):
        out = tmp_path / "sweep.csv"
        result = runner.invoke(
            main, ["oracle", "--sweep", "--n-max", "4", "--k", "3",
                   "--out", str(out)]
        )
        assert result.exit_code == 0
        payload = json.loads(result.output)
        assert payload["checked"] == 42
        assert payload["counterexamples"] == []
        with open(out) as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 42
        assert set(rows[0]) == {"graph_id", "n", "m", "min_k"}


class TestWeightCommand:
    def test_failure_writes_outcome_and_error_json(self, runner, tmp_path):
        # a single edge fails the precheck; stderr carries machine-readable
        # JSON and the outcome file is still written
        g = Graph.build(2, [(0, 1)])
        gpath = tmp_path / "k2.txt"
        gpath.write_text(format_edge_list(g))
        result = runner.invoke(
            main,
            ["weight", "--graph", str(gpath), "--seed", "1",
             "--out", str(tmp_path / "run")],
        )
        assert result.exit_code != 0
        err = json.loads(result.stderr.strip().splitlines()[-1])
        assert "error" in err
        outcome = json.loads((tmp_path / "run.outcome.json").read_text())
        assert outcome["status"] == "failure"
        assert outcome["stage"] == "precheck"

    def test_success_writes_verified_weighting(self, runner, tmp_path):
        # crafted profile tolerant enough that some small instance succeeds
        # end to end is not guaranteed; instead assert the contract that a
        # written weighting always verifies
        result = runner.invoke(
            main,
            ["weight", "--gen", "reg:600,80", "--gen-seed", "2", "--seed", "0",
             "--set", "p_u=0.3", "--set", "eps_u=0.15", "--set", "p_fw=0.5",
             "--set", "eps_fw=0.3", "--set", "m_levels=4", "--set", "eps_fu=0.45",
             "--set", "frac_nu=1.0", "--set", "eps_loc=0.26",
             "--set", "eps_len=0.5", "--set", "min_delta_ratio=0",
             "--out", str(tmp_path / "run")],
        )
        outcome = json.loads((tmp_path / "run.outcome.json").read_text())
        weights_path = tmp_path / "run.weights.txt"
        if outcome["status"] == "success":
            from trisum.graph import gen_random_regular
            from trisum.weighting import conflicts, load_weighting

            assert result.exit_code == 0
            g = gen_random_regular(600, 80, seed=2)
            w = load_weighting(g, weights_path)
            assert conflicts(g, w).size == 0
        else:
            assert result.exit_code != 0
            assert not weights_path.exists()


class TestExperiment:
    def test_csv_contract(self, runner, tmp_path):
        out = tmp_path / "runs.csv"
        result = runner.invoke(
            main,
            ["experiment", "--gen", "reg:600,80", "--gen-seed", "2",
             "--seeds", "0,1,2",
             "--set", "p_u=0.3", "--set", "eps_u=0.15", "--set", "p_fw=0.5",
             "--set", "eps_fw=0.3", "--set", "m_levels=4", "--set", "eps_fu=0.45",
             "--set", "eps_loc=0.26", "--set", "eps_len=0.5",
             "--set", "min_delta_ratio=0",
             "--out", str(out)],
        )
        assert result.exit_code == 0, result.output
        with open(out) as fh:
            reader = csv.DictReader(fh)
            rows = list(reader)
            assert reader.fieldnames == EXPERIMENT_COLUMNS
        assert len(rows) == 3
        assert [r["seed"] for r in rows] == ["0", "1", "2"]
        for r in rows:
            assert r["status"] in ("success", "failure")
            assert float(r["wall_ms"]) >= 0

    def test_duplicate_seeds_rejected(self, runner, tmp_path):
        result = runner.invoke(
            main,
            ["experiment", "--gen", "gnp:30,0.5", "--seeds", "1,1",
             "--out", str(tmp_path / "x.csv")],
        )
        assert result.exit_code != 0
