import orjson
import pytest

from core.models import Instance
from core.traces import SynthParams, records_from_dag, save_instance, save_trace, synth_instance
from main import main


@pytest.fixture(autouse=True)
def no_result_db(monkeypatch):
    monkeypatch.delenv("ENABLE_DATABASE", raising=False)
    monkeypatch.delenv("VIDSCHED_RESULTS_DB", raising=False)


@pytest.fixture
def run_cli(capsys):
    def run(*argv):
        code = main(list(argv))
        return code, capsys.readouterr().out

    return run


@pytest.fixture
def instance_file(tmp_path, run_cli):
    code, out = run_cli("gen", "--pattern", "G4B1", "--gops", "2", "--seed", "4")
    assert code == 0
    path = tmp_path / "instance.json"
    path.write_text(out)
    return path


@pytest.fixture
def tight_file(tmp_path, run_cli):
    code, out = run_cli("gen", "--regime", "tight", "--pattern", "G4B1", "--gops", "1", "--trailing-iframe", "--seed", "3")
    assert code == 0
    path = tmp_path / "tight.json"
    path.write_text(out)
    return path


def test_gen_emits_instance(instance_file):
    doc = orjson.loads(instance_file.read_bytes())
    assert len(doc["frames"]) == 8
    assert doc["pattern"] == "G4B1"
    assert [2, 3] in doc["edges"]


def test_classify_quasi(tmp_path, run_cli, g16b3):
    path = tmp_path / "g16b3.json"
    save_instance(Instance(dag=g16b3, pattern="G16B3"), path)
    code, out = run_cli("classify", str(path))
    assert code == 0
    assert orjson.loads(out)["structure"] == "quasi-SIO"


def test_forest(instance_file, run_cli):
    code, out = run_cli("forest", str(instance_file))
    assert code == 0
    assert [tree["root"] for tree in orjson.loads(out)["trees"]] == [0, 4]


def test_universal_writes_sequence_file(instance_file, run_cli, tmp_path):
    target = tmp_path / "universal.txt"
    code, out = run_cli("universal", str(instance_file), "--emit-universal", str(target))
    assert code == 0
    order = orjson.loads(out)["order"]
    assert target.read_text().split() == [str(fid) for fid in order]
    assert order == [0, 2, 1, 4, 3, 6, 5, 7]


def test_schedule_optimal(instance_file, run_cli):
    code, out = run_cli("schedule", str(instance_file), "--capacity", "2000")
    assert code == 0
    doc = orjson.loads(out)
    assert doc["algo"] == "optimal"
    assert doc["structure"] == "quasi-SIO"
    assert doc["evaluations"] > 0


def test_schedule_pbedf_reports_block_size(instance_file, run_cli):
    code, out = run_cli("schedule", str(instance_file), "--capacity", "2000", "--algo", "pbedf")
    assert code == 0
    doc = orjson.loads(out)
    assert 1 <= doc["pbedf_m"] <= 8
    code, out = run_cli("schedule", str(instance_file), "--capacity", "2000", "--algo", "pbedf", "--m", "3")
    assert orjson.loads(out)["pbedf_m"] == 3


def test_schedule_is_deterministic(instance_file, run_cli):
    argv = ("schedule", str(instance_file), "--capacity", "1500", "--delay", "0.2")
    assert run_cli(*argv) == run_cli(*argv)


def test_optimal_matches_oracle(tight_file, run_cli):
    _, scheduled = run_cli("schedule", str(tight_file), "--capacity", "2")
    code, oracle = run_cli("oracle", str(tight_file), "--capacity", "2")
    assert code == 0
    assert orjson.loads(scheduled)["reward"] == orjson.loads(oracle)["reward"]


def test_oracle_refuses_large_instances(instance_file, run_cli):
    code, out = run_cli("oracle", str(instance_file), "--capacity", "1000", "--max-frames", "4")
    assert code == 2
    assert orjson.loads(out)["error"] == "oracle-limit"


def test_simulate(instance_file, run_cli):
    code, out = run_cli("simulate", str(instance_file), "--sequence", "0,2", "--capacity", "100000")
    assert code == 0
    status = orjson.loads(out)["status"]
    assert status["0"] == "successful"
    assert status["1"] == "dropped"


def test_missing_instance_exits_with_error(tmp_path, run_cli):
    code, out = run_cli("classify", str(tmp_path / "nope.json"))
    assert code == 2
    assert orjson.loads(out)["error"] == "trace-format"


def test_non_positive_capacity(instance_file, run_cli):
    code, out = run_cli("schedule", str(instance_file), "--capacity", "0")
    assert code == 2
    assert orjson.loads(out)["error"] == "config-error"


def test_ingest(tmp_path, run_cli):
    trace = tmp_path / "trace.csv"
    save_trace(records_from_dag(synth_instance(0, SynthParams(pattern="G4B1", gops=2)).dag), trace)
    code, out = run_cli("ingest", str(trace), "--pattern", "G4B1")
    assert code == 0
    doc = orjson.loads(out)
    assert doc["frames"][0]["deadline"] == 1000
    assert doc["initial_delay_s"] == "1"


def test_sweep_csv(instance_file, run_cli):
    code, out = run_cli(
        "sweep", str(instance_file), "--capacities", "1000,2000", "--delays", "0.1", "--algos", "edf,optimal", "--threads", "1"
    )
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "algo,delay,capacity,avg_quality,reward,frames_successful"
    assert [line.split(",")[:3] for line in lines[1:]] == [
        ["edf", "1/10", "1000"],
        ["edf", "1/10", "2000"],
        ["optimal", "1/10", "1000"],
        ["optimal", "1/10", "2000"],
    ]


def test_compare(instance_file, run_cli):
    code, out = run_cli("compare", str(instance_file), "--capacities", "1000,2000", "--delays", "0.1,1", "--threads", "2")
    assert code == 0
    cells = orjson.loads(out)
    assert len(cells) == 4
    assert all(cell["dominant"] for cell in cells)


def test_sweep_persists_with_db_flag(instance_file, run_cli, tmp_path):
    db = tmp_path / "cells.db"
    argv = ("--db", str(db), "sweep", str(instance_file), "--capacities", "1000", "--delays", "1", "--algos", "edf")
    first = run_cli(*argv)
    assert db.exists()
    assert run_cli(*argv) == first
