"""End-to-end command line flows against throwaway workspaces."""

import json

import pytest

from skylite.cli import _render, main, parse_fault_plan
from skylite.errors import SkyliteError
from skylite.formats.schema import BOOL, DATE, INT64, STRING, decimal


@pytest.fixture(scope="module")
def ws(tmp_path_factory):
    path = str(tmp_path_factory.mktemp("ws"))
    assert main(["datagen", "--sf", "0.002", "--workspace", path]) == 0
    return path


def run_json(argv, capsys):
    code = main(argv + ["--json"])
    out = capsys.readouterr().out
    assert code == 0
    return json.loads(out)


def test_run_tpch6_and_oracle_agree(ws, capsys):
    got = run_json(["run", "--workspace", ws, "--tpch", "6"], capsys)
    want = run_json(["oracle", "--workspace", ws, "--tpch", "6"], capsys)
    assert got["rows"] == want["rows"]
    (rep,) = got["runs"]
    assert rep["invocations"] > 0 and rep["cache_hits"] == []


def test_second_run_is_served_from_cache(ws, capsys):
    first = run_json(["run", "--workspace", ws, "--tpch", "12"], capsys)
    second = run_json(["run", "--workspace", ws, "--tpch", "12"], capsys)
    assert second["rows"] == first["rows"]
    (rep,) = second["runs"]
    assert rep["invocations"] == 0
    assert rep["cache_hits"] == [0, 1, 2]


def test_no_cache_flag_recomputes(ws, capsys):
    got = run_json(["run", "--workspace", ws, "--tpch", "12",
                    "--no-cache"], capsys)
    (rep,) = got["runs"]
    assert rep["invocations"] > 0 and rep["cache_hits"] == []


def test_sql_and_stdin_query_sources(ws, capsys, monkeypatch, tmp_path):
    sql = "select count(*) as n from orders"
    by_flag = run_json(["run", "--workspace", ws, "--sql", sql], capsys)
    qfile = tmp_path / "q.json"
    qfile.write_text(json.dumps({"query": sql}))
    by_file = run_json(["run", "--workspace", ws, "--query-json",
                        str(qfile)], capsys)
    assert by_flag["rows"] == by_file["rows"] == [{"n": "3000"}]


def test_fault_plan_flag_keeps_results_correct(ws, capsys):
    want = run_json(["oracle", "--workspace", ws, "--tpch", "6"], capsys)
    got = run_json(["run", "--workspace", ws, "--tpch", "6", "--no-cache",
                    "--fault-plan",
                    "straggler=0.3,slowdown=6,crash=0.08,seed=4"], capsys)
    assert got["rows"] == want["rows"]


def test_cache_list_and_clear(ws, capsys):
    assert main(["cache", "list", "--workspace", ws]) == 0
    listed = capsys.readouterr().out.splitlines()
    assert listed and all(k.startswith("reg/") for k in listed)
    assert main(["cache", "clear", "--workspace", ws]) == 0
    assert "cleared" in capsys.readouterr().out
    assert main(["cache", "list", "--workspace", ws]) == 0
    assert capsys.readouterr().out == ""


def test_unknown_table_exits_nonzero(ws, capsys):
    assert main(["run", "--workspace", ws, "--sql",
                 "select 1 as x from nope"]) == 1
    assert "UnknownTable" in capsys.readouterr().err


def test_missing_catalog_exits_nonzero(tmp_path, capsys):
    assert main(["run", "--workspace", str(tmp_path / "empty"),
                 "--tpch", "6"]) == 1
    assert "datagen" in capsys.readouterr().err


def test_parse_fault_plan():
    plan = parse_fault_plan("straggler=0.3,slowdown=8,crash=0.1,"
                            "scope=both,seed=7")
    assert plan.straggler_fraction == 0.3
    assert plan.straggler_slowdown == 8.0
    assert plan.crash_fraction == 0.1
    assert plan.scope == "both" and plan.rng_seed == 7
    with pytest.raises(SkyliteError):
        parse_fault_plan("bogus=1")
    with pytest.raises(SkyliteError):
        parse_fault_plan("crash=lots")
    with pytest.raises(SkyliteError):
        parse_fault_plan("crash=1.5")  # out of range


def test_render_formats():
    assert _render(None, INT64) == "NULL"
    assert _render(123456, decimal(15, 2)) == "1234.56"
    assert _render(-5, decimal(15, 2)) == "-0.05"
    assert _render(42, decimal(15, 0)) == "42"
    assert _render(8766, DATE) == "1994-01-01"
    assert _render(True, BOOL) == "true"
    assert _render("x", STRING) == "x"
