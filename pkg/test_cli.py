"""
Test the Command Line

Covers:
1. Argument parsing helpers
2. Exit codes for usage errors, failures and passing runs
3. JSON reports and their determinism
4. pquotient and classgroup outputs
"""

import json

import pytest

from cli import commands
from cli.main import EXIT_FAILED, EXIT_OK, EXIT_USAGE, _power_int, build_parser, main, parse_n_range
from models.report_model import REPORT_SCHEMA_VERSION, RunConfig
from services import config, metrics

EA_PRESENTATION = "gens: 2\nx^3\ny^3\nx^-1 y^-1 x y\n"


@pytest.fixture(autouse=True)
def fresh_state():
    config._settings = None
    metrics._metrics_collector = None
    yield
    config._settings = None
    metrics._metrics_collector = None


def test_parse_helpers():
    """Test n ranges and power-notation integers"""
    print("\n" + "="*70)
    print("TEST 1: Argument Parsing")
    print("="*70)

    assert parse_n_range("3") == [3]
    assert parse_n_range("1-4") == [1, 2, 3, 4]
    assert parse_n_range("1,2,4") == [1, 2, 4]
    assert parse_n_range("1-2,5") == [1, 2, 5]
    assert _power_int("3^20") == 3**20
    assert _power_int("3**5") == 243
    assert _power_int("81") == 81

    args = build_parser().parse_args(["classgroup", "--sylow3", "3,9", "--out", "scan.csv"])
    assert str(args.sylow3) == "[3, 9]"
    assert args.csv_path == "scan.csv"
    assert args.dmin == -50000

    print("\n✅ Test Passed: Helpers parse")


def test_usage_errors_exit_2(tmp_path):
    """Test bad flags, files and configuration exit with 2"""
    print("\n" + "="*70)
    print("TEST 2: Usage Errors")
    print("="*70)

    for argv in (["nonsense"], ["sl2"], ["sl2", "--check", "lemma9"], ["aqi", "--n", "a-b"], ["aqi", "--max-order", "x"]):
        with pytest.raises(SystemExit) as exc:
            main(argv)
        assert exc.value.code == EXIT_USAGE

    assert main(["pquotient", "--presentation-file", str(tmp_path / "missing.txt")]) == EXIT_USAGE

    bad = tmp_path / "bad.txt"
    bad.write_text("x^3\n")
    assert main(["pquotient", "--presentation-file", str(bad)]) == EXIT_USAGE
    assert main(["descend", "--constraint", str(bad)]) == EXIT_USAGE

    assert main(["aqi", "--n", "0"]) == EXIT_USAGE
    assert main(["aqi", "--n", "1", "--log-level", "LOUD"]) == EXIT_USAGE

    print("\n✅ Test Passed: Exit code 2")


def test_cap_hit_is_a_failed_record(tmp_path):
    """Test a resource cap becomes a failed assertion and exit 1"""
    out = tmp_path / "theorem1.json"
    code = main(["verify-theorem1", "--n", "1", "--max-order", "3^4", "--json", str(out)])
    assert code == EXIT_FAILED
    data = json.loads(out.read_text())
    assert data["passed"] is False
    assert data["records"][0]["actual"].startswith("ResourceLimitError")


def test_aqi_and_identities_pass(tmp_path):
    """Test small passing runs and the JSON layout"""
    print("\n" + "="*70)
    print("TEST 3: JSON Reports")
    print("="*70)

    assert main(["aqi", "--n", "1"]) == EXIT_OK

    out = tmp_path / "sl2.json"
    assert main(["sl2", "--check", "identities", "--seed", "5", "--json", str(out)]) == EXIT_OK
    data = json.loads(out.read_text())
    print(f"   • keys: {sorted(data)}")
    assert data["schema_version"] == REPORT_SCHEMA_VERSION
    assert data["command"] == "sl2 identities"
    assert data["config"]["seed"] == 5
    assert data["config"]["extra"]["check"] == "identities"
    assert data["passed"] is True
    assert all({"name", "anchor", "expected", "actual", "passed"} <= set(r) for r in data["records"])

    print("\n✅ Test Passed: Reports written")


def test_reports_are_deterministic():
    """Test two runs agree apart from timings"""
    run_config = RunConfig(command="sl2", n_values=[1], seed=11)
    first = commands.cmd_sl2(run_config, "identities", 4, 1).to_json(include_timings=False)
    second = commands.cmd_sl2(run_config, "identities", 4, 1).to_json(include_timings=False)
    assert first == second
    assert "timings" not in json.loads(first)

    with pytest.raises(ValueError):
        commands.cmd_sl2(run_config, "lemma9", 4, 1)


def test_verify_theorem1_n1():
    """Test every Theorem 1 record passes for G_1"""
    report = commands.cmd_verify_theorem1(RunConfig(command="verify-theorem1", n_values=[1]))
    for line in report.summary_lines():
        print(line)
    assert report.passed
    assert any(r.name == "|G_1|" and r.actual == "243" for r in report.records)
    assert all(r.anchor for r in report.records)


def test_pquotient_command(tmp_path):
    """Test the pquotient command writes a pc presentation"""
    source = tmp_path / "ea.txt"
    source.write_text(EA_PRESENTATION)
    out = tmp_path / "ea.pc"
    assert main(["pquotient", "--presentation-file", str(source), "--output", str(out)]) == EXIT_OK
    text = out.read_text()
    assert "pc p=3 n=2" in text
    assert text.startswith("# computed by p-quotient")


def test_classgroup_command(tmp_path):
    """Test a small scan passes the list checks and writes CSV"""
    out = tmp_path / "scan.csv"
    code = main(["classgroup", "--min", "-4100", "--max", "-3000", "--csv", str(out)])
    assert code == EXIT_OK
    lines = out.read_text().splitlines()
    assert lines[0] == "d,h,invariants,sylow3,in_g1_list,in_higher_list"
    assert any(line.startswith("-4027,9,") for line in lines)


@pytest.mark.slow
def test_descend_default(tmp_path):
    """Test the default search report and emitted terminal groups"""
    out = tmp_path / "terminal.pc"
    assert main(["descend", "--output", str(out)]) == EXIT_OK
    assert out.read_text().count("pc p=3 n=5") == 2


def test_entry_point_imports():
    """Test the script entry point imports with every command module"""
    import importlib

    entry = importlib.import_module("main")
    assert entry.main is main
    u, step = importlib.import_module("services.classgroup")._solve_linmod(4, 6, 10)
    assert step == 5
    assert (4 * u - 6) % 10 == 0
