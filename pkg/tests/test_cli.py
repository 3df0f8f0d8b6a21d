import csv
import io
import json
import math

import pytest

from carleman_cone.cli import RunConfig, UsageError, execute, main, parse_config


def run(argv):
    """Execute a CLI invocation, capturing stdout; returns (exit_code, text)."""
    cfg = parse_config(argv)
    buf = io.StringIO()
    code = execute(cfg, stream=buf)
    return code, buf.getvalue()


def run_json(argv):
    code, text = run(list(argv) + ["--json"])
    return code, json.loads(text)


class TestParseConfig:
    def test_solve_defaults(self):
        cfg = parse_config(["solve"])
        assert cfg.command == "solve"
        assert cfg.init == (0.80, 2.45, 0.65)
        assert cfg.tol == 1e-12

    def test_check_defaults_gamma(self):
        cfg = parse_config(["check", "--m", "2.46", "--alpha", "1.999", "--eps", "0.60"])
        assert cfg.gamma == 0.8092
        assert cfg.m == 2.46

    def test_frontier_m_out_of_range(self):
        with pytest.raises(UsageError, match=r"m.*\(2, 3\)"):
            parse_config(["frontier", "--m", "5"])

    def test_unknown_flag_rejected(self):
        with pytest.raises(UsageError):
            parse_config(["solve", "--bogus", "1"])

    def test_missing_subcommand(self):
        with pytest.raises(UsageError):
            parse_config([])

    def test_m_grid_parsing(self):
        cfg = parse_config(["scan", "--m-grid", "2.1:2.9:9"])
        assert len(cfg.m_grid) == 9
        assert cfg.m_grid[0] == pytest.approx(2.1)
        assert cfg.m_grid[-1] == pytest.approx(2.9)

    def test_bad_m_grid(self):
        with pytest.raises(UsageError):
            parse_config(["scan", "--m-grid", "2.1-2.9-9"])

    def test_repeatable_a(self):
        cfg = parse_config(["quadrature", "--a", "0.5", "--a", "2.0"])
        assert cfg.a_list == [0.5, 2.0]

    def test_config_file_and_precedence(self):
        text = "\n".join([
            "# comment line",
            "m = 2.5",
            "eps = 0.61   # trailing comment",
            "alpha = 1.9",
        ])
        cfg = parse_config(["check", "--eps", "0.55"], file_text=text)
        assert cfg.m == 2.5          # from file
        assert cfg.eps == 0.55       # flag wins
        assert cfg.alpha == 1.9

    def test_config_file_unknown_key(self):
        with pytest.raises(UsageError, match="unknown config key"):
            parse_config(["check"], file_text="nope = 3")

    def test_main_exit_code_3(self, capsys):
        assert main(["frontier", "--m", "5"]) == 3
        assert "m" in capsys.readouterr().err


class TestSolveCommand:
    def test_json_headline(self):
        code, doc = run_json(["solve"])
        assert code == 0
        assert doc["command"] == "solve"
        assert set(doc) == {"command", "params", "result", "verdicts", "version"}
        res = doc["result"]
        assert res["theta_deg"] == pytest.approx(98.99, abs=0.5)
        assert res["m"] == pytest.approx(2.46, abs=0.02)
        assert res["iterations"] >= 1
        assert max(abs(r) for r in res["residuals"]) <= 1e-12

    def test_nonconvergence_exit_2(self):
        code, doc = run_json(["solve", "--init", "0.99,2.9,0.7", "--max-iter", "1"])
        assert code == 2
        assert "error" in doc["result"]

    def test_json_roundtrip(self):
        code, doc = run_json(["solve"])
        params = doc["params"]
        argv = [
            "solve",
            "--m", repr(params["m"]), "--alpha", repr(params["alpha"]),
            "--gamma", repr(params["gamma"]), "--eps", repr(params["eps"]),
        ]
        code2, doc2 = run_json(argv)
        assert doc2["result"] == doc["result"]


class TestGamma1Command:
    def test_values(self):
        code, doc = run_json(["gamma1"])
        assert code == 0
        assert doc["result"]["m"] == pytest.approx(2.39, abs=0.02)
        assert doc["result"]["epsilon0"] == pytest.approx(0.64, abs=0.01)


class TestCheckCommand:
    def test_feasible_exit_0(self):
        code, doc = run_json(["check", "--m", "2.46", "--alpha", "1.999", "--eps", "0.60"])
        assert code == 0
        assert doc["result"]["overall"] == "feasible"
        assert set(doc["verdicts"]) >= {
            "lemma31_i", "lemma31_ii", "lemma31_iii", "lemma31_iv",
            "gamma_cond", "l1_direct", "l2_concavity", "l2_at_eps",
            "l2_at_1", "l4_at_eps", "l4_at_1", "l3_lower_bound",
        }

    def test_infeasible_names_l1_and_witness(self):
        code, doc = run_json(["check", "--m", "2.46", "--alpha", "1.999", "--eps", "0.67"])
        assert code == 1
        assert doc["result"]["failing_key"] == "l1_direct"
        assert doc["result"]["witness"] == pytest.approx(0.67)

    def test_human_output_names_failure(self):
        code, text = run(["check", "--eps", "0.67"])
        assert code == 1
        assert "l1_direct" in text

    def test_roundtrip_identical(self):
        code, doc = run_json(["check", "--eps", "0.63"])
        p = doc["params"]
        code2, doc2 = run_json([
            "check", "--m", repr(p["m"]), "--alpha", repr(p["alpha"]),
            "--gamma", repr(p["gamma"]), "--eps", repr(p["eps"]),
        ])
        assert doc2["result"] == doc["result"]
        assert doc2["verdicts"] == doc["verdicts"]


class TestFrontierCommand:
    def test_default_family_m(self):
        code, doc = run_json(["frontier", "--m", "2.46", "--alpha", "1.999", "--tol", "1e-3"])
        assert code == 0
        res = doc["result"]
        assert res["family"] == "beta_eq_m"
        assert res["epsilon_sup"] <= math.sqrt(1.46 / 3.46) + 1e-9
        assert res["bracket"][0] <= res["epsilon_sup"] <= res["bracket"][1]

    def test_family_alpha(self):
        code, doc = run_json(["frontier", "--family", "alpha", "--alpha", "1.999", "--tol", "1e-3"])
        assert code == 0
        assert doc["result"]["family"] == "beta_eq_alpha"
        assert doc["result"]["epsilon_sup"] <= math.sqrt(1.0 / 3.0) + 1e-6


class TestScanCommand:
    def test_csv_output(self, tmp_path):
        out = tmp_path / "frontier.csv"
        code, doc = run_json([
            "scan", "--m-grid", "2.1:2.9:9", "--alpha", "1.999",
            "--tol", "1e-2", "--csv", str(out),
        ])
        assert code == 0
        with open(out, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["m", "epsilon_sup", "theta_deg"]
        assert len(rows) == 10
        for row in rows[1:]:
            m = float(row[0])
            eps = float(row[1])
            assert eps <= math.sqrt((m - 1.0) / (m + 1.0)) + 1e-9
            assert float(row[2]) == pytest.approx(math.degrees(2 * math.acos(eps)), rel=1e-12)

    def test_requires_m_grid(self):
        with pytest.raises(UsageError, match="m_grid"):
            parse_config(["scan"])


class TestQuadratureCommand:
    def test_passes_exit_0(self):
        code, doc = run_json(["quadrature", "--grid", "21", "--a", "0.1", "--a", "1"])
        assert code == 0
        for rep in doc["result"]:
            assert rep["pass"] is True
            assert rep["K"] <= 240.0
            assert rep["lhs"] <= rep["rhs"]

    def test_grid_validation(self):
        with pytest.raises(UsageError, match="grid"):
            parse_config(["quadrature", "--grid", "20"])


class TestIdentitiesCommand:
    def test_all_pass(self):
        code, doc = run_json(["identities", "--seed", "42"])
        assert code == 0
        assert all(entry["pass"] for entry in doc["result"])

    def test_seed_deterministic(self):
        _, doc1 = run_json(["identities", "--seed", "7"])
        _, doc2 = run_json(["identities", "--seed", "7"])
        assert doc1["result"] == doc2["result"]
