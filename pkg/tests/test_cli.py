import csv
import json
import os
import subprocess
import sys

import pytest

from robin_tfree import DomainError, PrecisionExhausted, StructureError
from robin_tfree import bounds
from robin_tfree.cli import main, parse_int


def run(tmp_path, *argv, name="out.json"):
    out = tmp_path / name
    code = main([*argv, "--output", str(out)])
    data = json.loads(out.read_text()) if out.exists() else None
    return code, data


def test_parse_int():
    assert parse_int("10^7") == parse_int("1e7") == parse_int("10_000_000") == 10**7
    assert parse_int("2.169e25") == 2169 * 10**22
    with pytest.raises(Exception):
        parse_int("1.5")


def test_certify_proved(tmp_path):
    code, data = run(tmp_path, "certify", "--t", "20")
    assert code == 0
    assert data["schema_version"] == 1 and data["passed"] is True
    res = data["metrics"]["result"]
    assert res["g_B"]["status"] == res["g_inf"]["status"] == "proved"
    assert float(res["margins"]["g_B"]["lo"]) > 0 and float(res["margins"]["g_inf"]["lo"]) > 0
    assert data["config"]["t"] == 20 and data["config"]["precision"] == 100


def test_certify_failed(tmp_path):
    code, data = run(tmp_path, "certify", "--t", "21")
    assert code == 1 and data["metrics"]["result"]["passed"] == "failed"


def test_certify_indeterminate(tmp_path, monkeypatch):
    real = bounds.certify_t

    def undecided(t, params):
        res = real(t, params)
        res.passed = bounds.Status.INDETERMINATE
        return res

    monkeypatch.setattr(bounds, "certify_t", undecided)
    code, data = run(tmp_path, "certify", "--t", "20")
    assert code == 2 and data["metrics"]["result"]["passed"] == "indeterminate"


@pytest.mark.parametrize("argv", [
    ["certify", "--t", "1"],
    ["certify"],
    ["certify", "--t", "20", "--precision", "20"],
    ["small-scan", "--limit", "abc"],
    ["no-such-command"],
    ["certify", "--t", "20", "--switch-prime", "100"],
    ["mertens-check", "--samples", "0"],
])
def test_usage_errors_exit_64(tmp_path, argv, capsys):
    with pytest.raises(SystemExit) as exc:
        code = main(argv + ["--output", str(tmp_path / "x.json")])
        raise SystemExit(code)
    assert exc.value.code == 64
    assert not (tmp_path / "x.json").exists()


def test_range_error_exit_66(tmp_path):
    assert run(tmp_path, "theta-check", "--x-min", "100", "--x-max", "1000")[0] == 66
    assert run(tmp_path, "small-scan", "--limit", "5000")[0] == 66


def test_resource_error_exit_69(tmp_path):
    assert run(tmp_path, "small-scan", "--limit", "10^9")[0] == 69


def test_io_error_exit_74(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["c1", "--output", str(blocker / "report.json")]) == 74


@pytest.mark.parametrize("exc,code", [(DomainError, 65), (StructureError, 70), (PrecisionExhausted, 75)])
def test_module_errors_map_to_codes(tmp_path, monkeypatch, exc, code):
    def boom(*a, **k):
        raise exc("injected")

    monkeypatch.setattr(bounds, "certify_t", boom)
    assert run(tmp_path, "certify", "--t", "20")[0] == code


def test_report_is_deterministic_apart_from_timing(tmp_path):
    out = tmp_path / "r.json"
    texts = []
    for _ in range(2):
        main(["certify", "--t", "20", "--output", str(out)])
        texts.append(out.read_text())
    a, b = (json.loads(t) for t in texts)
    assert set(a["timing"]) == {"generated_at", "elapsed_seconds"}
    strip = lambda text: [line for line in text.splitlines()
                          if '"generated_at"' not in line and '"elapsed_seconds"' not in line]
    assert strip(texts[0]) == strip(texts[1])


def test_c1_and_max_t(tmp_path):
    code, data = run(tmp_path, "c1")
    assert code == 0
    table = tmp_path / "t.csv"
    code, data = run(tmp_path, "max-t", "--csv", str(table))
    assert code == 0 and data["metrics"]["t_star"] == 20
    rows = list(csv.reader(table.open()))
    assert rows[0][:2] == ["t", "outcome"] and rows[-1][:2] == ["21", "failed"]


def test_coefficient_and_c1_flags(tmp_path):
    code, data = run(tmp_path, "certify", "--t", "20", "--g-inf-coeff", "1.338", "--c1-source", "recomputed")
    assert code == 0
    assert data["config"]["g_inf_coeff"] == "1.338" and data["config"]["c1_source"] == "recomputed"


def test_small_scan(tmp_path):
    code, data = run(tmp_path, "small-scan", "--limit", "10^4")
    assert code == 0 and data["metrics"]["count"] == 26 and data["metrics"]["max_counterexample"] == 5040


def test_ca_with_checkpoint(tmp_path):
    ck = tmp_path / "ck.json"
    code, data = run(tmp_path, "ca", "--target-exp", "2", "--checkpoint", str(ck))
    assert code == 0 and ck.exists()
    code, again = run(tmp_path, "ca", "--target-exp", "2.5", "--checkpoint", str(ck), "--resume", name="b.json")
    assert code == 0 and again["metrics"]["steps"] > data["metrics"]["steps"]


def test_g_table_csv(tmp_path):
    path = tmp_path / "g.csv"
    code, data = run(tmp_path, "g-table", "--t", "20", "--grid", "50", "--csv", str(path))
    assert code == 0
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["p", "t", "g_B.lo", "g_B.hi"] and len(rows) == 51
    assert (tmp_path / "g_g_inf.csv").exists()
    his = [float(r[3]) for r in rows[1:]]
    assert his == sorted(his, reverse=True)


def test_theta_mertens_and_chain(tmp_path):
    assert run(tmp_path, "theta-check", "--x-max", "10^6")[0] == 0
    code, data = run(tmp_path, "mertens-check", "--x-max", "10^6", "--samples", "20", "--upper-points", "none")
    assert code == 0 and data["metrics"]["lower"]["points"] == 20
    assert run(tmp_path, "bound-chain", "--t", "20", "--p-max", "5000")[0] == 0


def test_module_entry_point_and_env_precision(tmp_path):
    env = dict(os.environ, ROBIN_TFREE_PRECISION="128")
    proc = subprocess.run([sys.executable, "-m", "robin_tfree.cli", "certify", "--t", "20"],
                          capture_output=True, text=True, env=env)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["config"]["precision"] == 128
