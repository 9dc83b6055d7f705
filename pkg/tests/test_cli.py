import json

import numpy as np
import pytest

from newton_galerkin.cli import (efficiency_table, format_efficiency_table,
                                 main, parse_config, read_records_csv, run,
                                 write_records_csv)
from newton_galerkin.driver import IterationRecord
from newton_galerkin.errors import ConfigError

LINEAR_CONFIG = """
# singularly perturbed linear benchmark
problem = linear_reaction
epsilon = 1e-5
strategy = simple
tau = 0.1
theta = 0.5           # interplay parameter
initial_n = 8
stop_tolerance = 4e-4
max_dof = 3000
max_iterations = 300
records_csv = {csv}
summary_json = {summary}
solution_dump = {dump}
"""


def write_config(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return path


def linear_config(tmp_path):
    return write_config(tmp_path, LINEAR_CONFIG.format(
        csv=tmp_path / "records.csv",
        summary=tmp_path / "summary.json",
        dump=tmp_path / "solution.txt"))


def test_parse_config_defaults_and_values(tmp_path):
    cfg = parse_config(linear_config(tmp_path))
    assert cfg.problem == "linear_reaction"
    assert cfg.epsilon == 1e-5
    assert cfg.theta == 0.5
    assert cfg.theta_mark == 0.5          # default
    assert cfg.gamma == 0.5               # default
    assert cfg.initial_guess == "const(0)"


def test_missing_epsilon_is_named(tmp_path):
    path = write_config(tmp_path, "problem = linear_reaction\n")
    with pytest.raises(ConfigError, match="epsilon"):
        parse_config(path)


def test_unknown_key_is_named(tmp_path):
    path = write_config(tmp_path,
                        "problem = linear_reaction\nepsilon = 1\nepsilonn = 2\n")
    with pytest.raises(ConfigError, match="epsilonn"):
        parse_config(path)


def test_bad_number_is_named(tmp_path):
    path = write_config(tmp_path,
                        "problem = linear_reaction\nepsilon = small\n")
    with pytest.raises(ConfigError, match="epsilon"):
        parse_config(path)


def test_fisher_requires_boundary_values(tmp_path):
    path = write_config(tmp_path, "problem = fisher\nepsilon = 1e-3\n")
    with pytest.raises(ConfigError, match="alpha"):
        parse_config(path)


def test_run_writes_all_outputs(tmp_path):
    code = run(linear_config(tmp_path))
    assert code == 0
    records = read_records_csv(tmp_path / "records.csv")
    assert len(records) >= 2

    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["termination"] == "tolerance"
    assert summary["iterations"]["total"] == len(records)
    assert summary["final_dofs"] == records[-1].dofs

    dump = (tmp_path / "solution.txt").read_text().splitlines()
    assert dump[0].startswith("# generation=")
    n_nodes = sum(1 for ln in dump[1:] if "." in ln.split()[0])
    assert f"dofs={records[-1].dofs}" in dump[0]
    assert n_nodes >= records[-1].dofs


def test_estimates_nonincreasing_across_refinements(tmp_path):
    run(linear_config(tmp_path))
    records = read_records_csv(tmp_path / "records.csv")
    actions = [r.action for r in records]
    assert "NEWTON" in actions
    first_newton = actions.index("NEWTON")
    refine_estimates = [r.estimate_total for r in records[first_newton:]
                        if r.action == "REFINE"]
    assert all(b <= a for a, b in zip(refine_estimates, refine_estimates[1:]))


def test_runs_are_byte_identical(tmp_path):
    cfg = linear_config(tmp_path)
    run(cfg)
    first = (tmp_path / "records.csv").read_bytes()
    run(cfg)
    assert (tmp_path / "records.csv").read_bytes() == first


def test_csv_roundtrip_field_for_field(tmp_path):
    run(linear_config(tmp_path))
    records = read_records_csv(tmp_path / "records.csv")
    write_records_csv(tmp_path / "again.csv", records)
    again = read_records_csv(tmp_path / "again.csv")
    assert again == records


def test_iteration_budget_of_one(tmp_path):
    text = LINEAR_CONFIG.format(csv=tmp_path / "r.csv",
                                summary=tmp_path / "s.json",
                                dump="") + "\nmax_iterations = 1\n"
    # remove the earlier max_iterations line to avoid a duplicate key
    text = text.replace("max_iterations = 300\n", "")
    path = write_config(tmp_path, text)
    code = run(path)
    assert code == 2
    records = read_records_csv(tmp_path / "r.csv")
    assert len(records) == 1
    summary = json.loads((tmp_path / "s.json").read_text())
    assert summary["termination"] == "iteration budget"


def test_efficiency_table_values():
    records = [IterationRecord(n=0, dofs=10, action="REFINE", k=None,
                               delta_omega=0.0, eta_total=1.0,
                               estimate_total=2.0, true_error=2.0,
                               efficiency=1.0),
               IterationRecord(n=0, dofs=20, action="REFINE", k=None,
                               delta_omega=0.0, eta_total=1.0,
                               estimate_total=4.0, true_error=2.0,
                               efficiency=2.0)]
    rows = efficiency_table({"eps=1": records})
    assert rows == [("eps=1", 0, 10, 1.0), ("eps=1", 1, 20, 2.0)]
    table = format_efficiency_table(rows)
    assert "eps=1" in table and "efficiency" in table


def test_efficiency_table_refuses_missing_errors():
    records = [IterationRecord(n=0, dofs=10, action="NEWTON", k=1.0,
                               delta_omega=0.1, eta_total=1.0,
                               estimate_total=1.0)]
    with pytest.raises(ValueError, match="no exact solution"):
        efficiency_table({"fisher": records})


def test_main_run_and_efficiency_subcommands(tmp_path, capsys):
    cfg = linear_config(tmp_path)
    assert main(["run", str(cfg)]) == 0
    capsys.readouterr()
    assert main(["efficiency", str(tmp_path / "records.csv")]) == 0
    out = capsys.readouterr().out
    assert "efficiency" in out
    assert "records" in out


def test_main_reports_config_errors(tmp_path, capsys):
    path = write_config(tmp_path, "problem = linear_reaction\n")
    assert main(["run", str(path)]) == 1
    assert "epsilon" in capsys.readouterr().err


def test_main_efficiency_rejects_runs_without_exact(tmp_path, capsys):
    text = """
problem = fisher
epsilon = 2.5e-4
alpha = -0.4
beta = 0.5
strategy = improved
initial_n = 99
initial_guess = spike(3)
stop_tolerance = 1e-2
max_dof = 1500
max_iterations = 500
records_csv = {csv}
summary_json = {summary}
""".format(csv=tmp_path / "f.csv", summary=tmp_path / "f.json")
    path = write_config(tmp_path, text)
    assert main(["run", str(path)]) == 0
    capsys.readouterr()
    assert main(["efficiency", str(tmp_path / "f.csv")]) == 1
    assert "exact" in capsys.readouterr().err


def test_guess_string_parsing_errors(tmp_path):
    text = ("problem = linear_reaction\nepsilon = 1.0\n"
            "initial_guess = wobble(3)\n")
    with pytest.raises(ConfigError, match="initial_guess"):
        parse_config_and_build(write_config(tmp_path, text))


def parse_config_and_build(path):
    from newton_galerkin.cli import build_run
    return build_run(parse_config(path))


def test_comments_and_blank_lines_ignored(tmp_path):
    text = ("\n# full-line comment\nproblem = linear_reaction  # trailing\n"
            "epsilon = 0.5\n\n")
    cfg = parse_config(write_config(tmp_path, text))
    assert cfg.problem == "linear_reaction"
    assert cfg.epsilon == 0.5


def test_malformed_line_reports_line_number(tmp_path):
    with pytest.raises(ConfigError, match="line 2"):
        parse_config(write_config(tmp_path, "problem = linear_reaction\nwhat\n"))
