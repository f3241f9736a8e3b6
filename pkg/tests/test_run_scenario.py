import os

import pytest

import run_scenario
from run_scenario import EXIT_CHECK_FAILED, EXIT_ERROR, EXIT_OK, main
from scenarios import RunReport, SCENARIOS

SHORT_CUSTOM = """[scenario]
name = custom
eit = on

[grid]
t_end = 20
n_points = 200

[outputs]
csv = custom.csv
svg = custom.svg
report = custom_report.txt
"""


@pytest.fixture
def short_config(tmp_path):
    path = tmp_path / "custom.cfg"
    path.write_text(SHORT_CUSTOM)
    return str(path)


def test_list_scenarios(capsys):
    assert main(["--list-scenarios"]) == EXIT_OK
    listed = [line.split()[0] for line in capsys.readouterr().out.splitlines()]
    assert listed == list(SCENARIOS)


def test_validate_only(config_dir):
    for name in SCENARIOS:
        assert main(["run", os.path.join(config_dir, "{}.cfg".format(name)), "--validate-only"]) == EXIT_OK


def test_invalid_configuration(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("[scenario]\nname = fig3\n[grid]\nn_points = 4\n")
    assert main(["run", str(path)]) == EXIT_ERROR
    assert main(["run", str(tmp_path / "missing.cfg")]) == EXIT_ERROR


def test_no_command():
    assert main([]) == EXIT_ERROR


def test_run_writes_outputs(short_config, tmp_path):
    out = tmp_path / "out"
    assert main(["run", short_config, "--out", str(out), "-s", "3"]) == EXIT_OK
    for name in ("custom.csv", "custom.svg", "custom_report.txt", "run_params.txt"):
        assert (out / name).exists()
    report = (out / "custom_report.txt").read_text().splitlines()
    assert report[0] == "scenario=custom"
    assert report[-1] == "passed=pass"


def test_failed_check_exit_code(short_config, tmp_path, monkeypatch):
    def failing_run(config, jobs=1):
        return RunReport(scenario=config.scenario, eit=config.eit, params=config.resolved_params,
                         checks={"always": False})

    monkeypatch.setattr(run_scenario, "run", failing_run)
    assert main(["run", short_config, "-o", str(tmp_path / "out")]) == EXIT_CHECK_FAILED
    assert (tmp_path / "out" / "custom_report.txt").read_text().splitlines()[-1] == "passed=fail"
