import csv
import json

import pytest

from src import instance as instance_io
from src import schedules
from src.cli import EXIT_FAILED, EXIT_INPUT, EXIT_OK, main


@pytest.fixture
def inst_b_path(tmp_path, inst_b):
    path = tmp_path / "b.json"
    instance_io.save(inst_b, path)
    return path


@pytest.fixture
def inst_c_path(tmp_path, inst_c):
    path = tmp_path / "c.json"
    instance_io.save(inst_c, path)
    return path


def test_gen_round_trips(tmp_path):
    out = tmp_path / "gen.json"
    code = main(["gen", "--clients", "5", "--unreliable", "1", "--packets", "20", "--alpha", "0.4", "--seed", "7",
                 "-o", str(out)])
    assert code == EXIT_OK
    inst = instance_io.load(out)
    assert inst == instance_io.generate_random(5, 1, 20, 0.4, 7)


def test_solve_closed_m1_and_verify(tmp_path, inst_b_path):
    sched = tmp_path / "s.json"
    assert main(["solve", "-i", str(inst_b_path), "--method", "closed-m1", "-o", str(sched)]) == EXIT_OK
    data = json.loads(sched.read_text())
    assert data["counts"] == [1, 1, 1]
    assert data["p_divisor"] == 1
    assert main(["verify", "-i", str(inst_b_path), "-s", str(sched), "--against", "full"]) == EXIT_OK


def test_verify_zero_schedule_fails(tmp_path, inst_b_path, capsys):
    sched = tmp_path / "zero.json"
    sched.write_text('{"version": 1, "p_divisor": 1, "counts": [0, 0, 0], "provenance": "grid"}')
    assert main(["verify", "-i", str(inst_b_path), "-s", str(sched)]) == EXIT_FAILED
    out = capsys.readouterr().out
    assert out.count("violated:") == 3


def test_verify_in_relabeled_family(tmp_path, inst_c_path):
    sched = tmp_path / "s.json"
    assert main(["solve", "-i", str(inst_c_path), "--method", "closed-general", "-o", str(sched)]) == EXIT_OK
    assert main(["verify", "-i", str(inst_c_path), "-s", str(sched), "--against", "over-general"]) == EXIT_OK


def test_lp_solve_and_dump(inst_c_path, capsys):
    assert main(["lp", "-i", str(inst_c_path), "--which", "m1-full"]) == EXIT_OK
    payload = json.loads(capsys.readouterr().out)
    assert payload["optimum"] == "4/1"
    assert payload["r"] == ["1/1"] * 4

    assert main(["lp", "-i", str(inst_c_path), "--which", "reduced", "--dump"]) == EXIT_OK
    entries = json.loads(capsys.readouterr().out)
    assert len(entries) == 6


@pytest.mark.parametrize("which", ["general", "m1"])
def test_dual(inst_c_path, capsys, which):
    assert main(["dual", "-i", str(inst_c_path), "--which", which]) == EXIT_OK
    dump = json.loads(capsys.readouterr().out)
    assert dump["objective"] == "4/1"
    assert dump["gap"] == "0/1"
    assert dump["dual_feasible"] is True


def test_simulate(tmp_path, inst_b_path):
    sched = tmp_path / "s.json"
    report = tmp_path / "r.json"
    main(["solve", "-i", str(inst_b_path), "--method", "lp-exact", "-o", str(sched)])
    code = main(["simulate", "-i", str(inst_b_path), "-s", str(sched), "--field-bits", "16", "--retries", "3",
                 "-o", str(report)])
    assert code == EXIT_OK
    assert json.loads(report.read_text())["persistent_failure"] is False


def test_asymptotics(capsys):
    assert main(["asymptotics", "--clients", "3", "--unreliable", "0", "--alpha", "0.5"]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "V,Z,Z_inverse_form,V/P"
    assert float(lines[1].split(",")[1]) == pytest.approx(1 / 7)


def test_sweep_csv(tmp_path):
    out = tmp_path / "sweep.csv"
    code = main(["sweep", "--clients", "4", "--unreliable", "1", "--packets", "10", "20", "--trials", "2",
                 "--workers", "1", "-o", str(out)])
    assert code == EXIT_OK
    with out.open() as f:
        rows = list(csv.DictReader(f))
    assert [(r["K"], r["seed"]) for r in rows] == [("10", "0"), ("10", "1"), ("20", "0"), ("20", "1")]
    assert set(rows[0]) == {
        "seed", "N", "M", "K", "alpha", "method", "closed_total", "lp_opt", "gap_per_packet", "feasible_for_full",
    }


def test_invalid_input_exit_codes(tmp_path, inst_b_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"version": 1, "n_clients": 2, "n_unreliable": 0, "n_packets": 2, "sets": [[0], [0]]}')
    assert main(["lp", "-i", str(bad)]) == EXIT_INPUT
    assert main(["lp", "-i", str(tmp_path / "missing.json")]) == EXIT_INPUT
    assert main(["solve", "-i", str(inst_b_path), "--method", "closed-m0"]) == EXIT_INPUT
    assert main(["gen", "--clients", "3", "--packets", "5", "--alpha", "1.5"]) == EXIT_INPUT
    assert main(["nonsense"]) == EXIT_INPUT


def test_closed_form_out_of_regime_exit_code(tmp_path):
    path = tmp_path / "skew.json"
    instance_io.save(instance_io.Instance.from_lists([[0], [1, 2, 3, 4, 5], [1, 2, 3, 4, 5]], n_unreliable=0), path)
    assert main(["solve", "-i", str(path), "--method", "closed-m0"]) == EXIT_FAILED


def test_schedule_output_loads(tmp_path, inst_c_path):
    sched = tmp_path / "s.json"
    main(["solve", "-i", str(inst_c_path), "--method", "closed-m1", "-o", str(sched)])
    assert schedules.total(schedules.load(sched)) == 4


def test_verify_writes_report_file(tmp_path, inst_b_path):
    sched = tmp_path / "zero.json"
    sched.write_text('{"version": 1, "p_divisor": 1, "counts": [0, 0, 0], "provenance": "grid"}')
    report = tmp_path / "verify.txt"
    assert main(["verify", "-i", str(inst_b_path), "-s", str(sched), "-o", str(report)]) == EXIT_FAILED
    lines = report.read_text().splitlines()
    assert sum(line.startswith("violated:") for line in lines) == 3
    assert lines[-1].startswith("3 violated constraint(s)")
