import csv
import io
import json

import pytest

from conftest import three_level_stream_spec
from main import Main
from modules.cli_module import main, parse_grid
from modules.config_module import Run_Config
from modules.errors_module import Validation_Error
from modules.model_module import Policy, evaluate
from modules.simulator_module import audit_event_log, read_event_log
from modules.utilities_module import render_json

def _level(rate_per_day: float, cost: float) -> dict:
    return {
        "failure_rate": {"value": rate_per_day, "unit": "per_day"},
        "checkpoint_cost": {"value": cost, "unit": "seconds"},
        "restart_cost": {"value": cost, "unit": "seconds"},
    }

def _write_config(tmp_path, rates, costs, interval=None, probabilities=None, system_extra=None, **sections) -> str:
    document = {"system": {"levels": [_level(rate, cost) for rate, cost in zip(rates, costs)], **(system_extra or {})}}
    if interval is not None:
        document["policy"] = {"interval": {"value": interval, "unit": "seconds"}, "probabilities": list(probabilities)}
    document.update(sections)
    path = tmp_path / "run.json"
    path.write_text(json.dumps(document), encoding="utf-8")
    return str(path)

@pytest.fixture
def reference_config(tmp_path) -> str:
    return _write_config(
        tmp_path, (50, 0.5), (20, 50), 268.0672, (0.8897, 0.1103),
        optimizer={"multistarts": 2},
        simulation={"duration": {"value": 1e5, "unit": "seconds"}, "replicas": 3},
    )

def _run(capsys, *argv) -> tuple:
    code = main(list(argv))
    return code, capsys.readouterr().out

def _csv_rows(text: str) -> list:
    return list(csv.DictReader(io.StringIO(text)))

# evaluate

def test_evaluate_reference_row(capsys, reference_config):
    code, out = _run(capsys, "evaluate", "--config", reference_config, "--format", "json")
    assert code == 0
    data = json.loads(out)
    assert data["utilization"] == pytest.approx(0.8206, abs=5e-4)
    assert data["formula"] == "2level"
    assert len(data["per_level_recovery_cost"]) == 2

def test_evaluate_zero_rates(capsys, tmp_path):
    path = _write_config(tmp_path, (0, 0), (20, 50), 300.0, (0.5, 0.5), system_extra={"strict_ordering": False})
    code, out = _run(capsys, "evaluate", "--config", path, "--format", "csv")
    assert code == 0
    row = _csv_rows(out)[0]
    assert float(row["utilization"]) == pytest.approx((300.0 - 10.0 - 25.0) / 300.0)

def test_evaluate_stream_json_matches_library(capsys, tmp_path):
    topology = {"critical_path_operators": 5, "hop_delay": {"value": 0.5, "unit": "seconds"}}
    path = _write_config(tmp_path, (20, 5, 1), (10, 20, 100), 338.95, (0.201, 0.675, 0.124), system_extra={"topology": topology})
    code, out = _run(capsys, "evaluate", "--config", path, "--format", "json")
    assert code == 0
    expected = evaluate(three_level_stream_spec(1.0, 5), Policy(338.95, (0.201, 0.675, 0.124)))
    assert out == render_json(expected.to_dict())
    assert render_json(json.loads(out)) == out

    code, uncorrected = _run(capsys, "evaluate", "--config", path, "--format", "json", "--no-overlap-correction")
    assert code == 0
    assert json.loads(uncorrected)["utilization"] < json.loads(out)["utilization"]

def test_evaluate_human_output(capsys, reference_config):
    code, out = _run(capsys, "evaluate", "--config", reference_config)
    assert code == 0
    assert out.splitlines()[0] == "evaluation"
    assert "utilization" in out

def test_output_file(tmp_path, capsys, reference_config):
    target = tmp_path / "evaluation.json"
    code, out = _run(capsys, "evaluate", "--config", reference_config, "--format", "json", "--out", str(target))
    assert code == 0
    assert out == ""
    assert json.loads(target.read_text(encoding="utf-8"))["formula"] == "2level"

# exit codes

def test_invalid_config_exits_with_2(capsys, tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"system": {"levels": [], "colour": "blue"}}), encoding="utf-8")
    assert main(["evaluate", "--config", str(path)]) == 2
    assert main(["evaluate", "--config", str(tmp_path / "missing.json")]) == 2

def test_missing_policy_exits_with_2(tmp_path):
    assert main(["evaluate", "--config", _write_config(tmp_path, (50, 0.5), (20, 50))]) == 2

def test_divergent_policy_exits_with_3(tmp_path):
    path = _write_config(tmp_path, (50, 10), (20, 50), 2000.0, (0.999, 0.001))
    assert main(["evaluate", "--config", path]) == 3

def test_overflowing_policy_exits_with_3(tmp_path):
    path = _write_config(tmp_path, (86.4,), (10,), 1e6, (1.0,))
    assert main(["evaluate", "--config", path]) == 3
    assert main(["evaluate", "--config", path, "--format", "json"]) == 3

def test_argument_errors_exit_through_argparse(reference_config):
    with pytest.raises(SystemExit) as raised:
        main(["evaluate"])
    assert raised.value.code == 2
    with pytest.raises(SystemExit):
        main(["evaluate", "--config", reference_config, "--format", "xml"])

# optimize and approx

def test_optimize_csv(capsys, reference_config):
    code, out = _run(capsys, "optimize", "--config", reference_config, "--format", "csv")
    assert code == 0
    assert out.splitlines()[0] == "T,p1,p2,utilization,evaluations,restarts_used,converged,plateau_width"
    row = _csv_rows(out)[0]
    assert float(row["T"]) == pytest.approx(268.0648, abs=0.5)
    assert float(row["p1"]) == pytest.approx(0.8897, abs=5e-3)
    assert float(row["utilization"]) == pytest.approx(0.82056, abs=1e-3)

def test_optimize_is_deterministic_under_seed(capsys, reference_config):
    _, first = _run(capsys, "optimize", "--config", reference_config, "--format", "json", "--seed", "5")
    _, second = _run(capsys, "optimize", "--config", reference_config, "--format", "json", "--seed", "5")
    assert first == second

def test_optimize_fixed_arguments(capsys, reference_config):
    code, out = _run(capsys, "optimize", "--config", reference_config, "--format", "json", "--fixed-interval", "268.0")
    assert code == 0
    assert json.loads(out)["T"] == 268.0
    code, out = _run(capsys, "optimize", "--config", reference_config, "--format", "json", "--fixed-probabilities", "0.9,0.1")
    assert code == 0
    assert json.loads(out)["probabilities"] == pytest.approx([0.9, 0.1])
    assert main(["optimize", "--config", reference_config, "--fixed-probabilities", "0.9,x"]) == 2

def test_approx_fixed_point(capsys, reference_config):
    code, out = _run(capsys, "approx", "--config", reference_config, "--format", "json")
    assert code == 0
    data = json.loads(out)
    assert data["utilization"] == pytest.approx(0.8206, abs=5e-3)
    assert 0.0 <= data["p1"] <= 1.0

def test_approx_without_level2_failures_picks_p1_of_one(capsys, tmp_path):
    path = _write_config(tmp_path, (50, 0), (20, 50), system_extra={"strict_ordering": False})
    code, out = _run(capsys, "approx", "--config", path, "--format", "json")
    assert code == 0
    assert json.loads(out)["p1"] == 1.0

def test_approx_single_quantities(capsys, reference_config):
    code, out = _run(capsys, "approx", "--config", reference_config, "--format", "json", "--p1", "0.9")
    assert code == 0
    assert json.loads(out)["p1"] == 0.9
    code, out = _run(capsys, "approx", "--config", reference_config, "--format", "json", "--interval", "268")
    assert code == 0
    assert json.loads(out)["T"] == 268.0
    assert main(["approx", "--config", reference_config, "--interval", "10"]) == 3

# simulate

def test_simulate_json_and_event_log(capsys, tmp_path, reference_config):
    events = tmp_path / "events.jsonl"
    code, out = _run(capsys, "simulate", "--config", reference_config, "--format", "json", "--events", str(events))
    assert code == 0
    data = json.loads(out)
    assert data["replicas"] == 3
    assert len(data["per_replica_utilization"]) == 3
    assert data["analytic_utilization"] == pytest.approx(0.8206, abs=5e-4)
    spec = Run_Config.load_from_json_file(reference_config).system
    assert audit_event_log(read_event_log(str(events)), spec).ok

def test_simulate_human_summary(capsys, reference_config):
    code, out = _run(capsys, "simulate", "--config", reference_config)
    assert code == 0
    assert out.splitlines()[0] == "simulation"
    assert "analytic_utilization" in out
    assert "per_replica_utilization" not in out

def test_simulate_csv_has_one_row_per_replica(capsys, reference_config):
    code, out = _run(capsys, "simulate", "--config", reference_config, "--format", "csv")
    assert code == 0
    rows = _csv_rows(out)
    assert [row["replica"] for row in rows] == ["0", "1", "2"]

# sweep

def test_sweep_grid_peaks_next_to_the_optimum(capsys, reference_config):
    code, out = _run(capsys, "sweep", "--config", reference_config, "--format", "csv", "--grid", "T:200:340:15,p1:0.80:0.98:19")
    assert code == 0
    assert out.splitlines()[0] == "T,p1,utilization"
    rows = _csv_rows(out)
    assert len(rows) == 15 * 19
    best = max(rows, key=lambda row: float(row["utilization"]))
    assert abs(float(best["T"]) - 268.0648) <= 10.0
    assert abs(float(best["p1"]) - 0.8897) <= 0.01

def test_sweep_axis_in_config_units(capsys, reference_config):
    code, out = _run(capsys, "sweep", "--config", reference_config, "--format", "json", "--axis", "lambda2", "--values", "0.5,10")
    assert code == 0
    rows = json.loads(out)["rows"]
    assert rows[0][0] == 0.5
    assert rows[0][1] == pytest.approx(0.8206, abs=5e-4)
    assert rows[1][1] < rows[0][1]

def test_sweep_axis_with_simulation(capsys, reference_config):
    code, out = _run(capsys, "sweep", "--config", reference_config, "--format", "csv", "--axis", "T", "--values", "250,300", "--simulate")
    assert code == 0
    assert out.splitlines()[0] == "T,utilization,mean,std_dev,stderr"
    assert len(_csv_rows(out)) == 2

def test_sweep_argument_errors(reference_config):
    assert main(["sweep", "--config", reference_config]) == 2
    assert main(["sweep", "--config", reference_config, "--axis", "T"]) == 2
    assert main(["sweep", "--config", reference_config, "--axis", "T", "--values", "300", "--grid", "T:1:2:2"]) == 2
    assert main(["sweep", "--config", reference_config, "--grid", "T:100:600"]) == 2

def test_parse_grid():
    axes = parse_grid("T:100:600:6,p1:0:1:3")
    assert [name for name, _ in axes] == ["T", "p1"]
    assert list(axes[0][1]) == [100.0, 200.0, 300.0, 400.0, 500.0, 600.0]
    assert list(axes[1][1]) == [0.0, 0.5, 1.0]
    with pytest.raises(Validation_Error):
        parse_grid("T:1:2:0")
    with pytest.raises(Validation_Error):
        parse_grid("T:1:2:3,p1:0:1:2,n:1:5:5")

# compare

def test_compare_reference_system(capsys, reference_config):
    code, out = _run(capsys, "compare", "--config", reference_config, "--format", "csv")
    assert code == 0
    assert out.splitlines()[0] == "levels,T_star,p1,p2,U,pct_increase,gain_over_previous,retained"
    single, double = _csv_rows(out)
    assert single["retained"] == "2"
    assert float(single["U"]) == pytest.approx(0.7549, abs=1e-3)
    assert float(double["U"]) == pytest.approx(0.8206, abs=1e-3)
    assert float(double["pct_increase"]) == pytest.approx(8.6943, abs=0.15)

# entry point

def test_main_entry_point(reference_config):
    assert Main(["evaluate", "--config", reference_config, "--quiet"]).run() == 0
