import json
import math

import numpy as np

from modules.utilities_module import format_number, render_csv, render_human, render_human_table, render_json, write_output

def test_format_number():
    assert format_number(0.82056123456) == "0.820561"
    assert format_number(268.06481234) == "268.065"
    assert format_number(3) == "3"
    assert format_number(True) == "True"
    assert format_number(None) == "None"
    assert format_number([0.5, 0.25]) == "[0.5, 0.25]"
    assert format_number(np.float64(1.0) / 3.0) == "0.333333"

def test_render_csv_keeps_full_precision():
    text = render_csv(["T", "p1", "utilization"], [[np.float64(268.0648123456789), 0.8897, math.nan]])
    assert text == "T,p1,utilization\n268.0648123456789,0.8897,nan\n"

def test_render_csv_header_only():
    assert render_csv(["levels", "U"], []) == "levels,U\n"

def test_render_json_converts_numpy_values():
    data = {"rows": [[np.float64(0.1), np.int64(3)]], "p": np.array([0.25, 0.75]).tolist(), "ok": True}
    assert json.loads(render_json(data)) == {"rows": [[0.1, 3]], "p": [0.25, 0.75], "ok": True}
    value = 0.1 + 0.2
    assert json.loads(render_json({"u": value}))["u"] == value

def test_render_json_writes_non_finite_values_as_null():
    text = render_json({"u": math.nan, "rows": [[math.inf, 1.0], (np.float64(-np.inf),)]})
    assert "NaN" not in text
    assert "Infinity" not in text
    assert json.loads(text) == {"u": None, "rows": [[None, 1.0], [None]]}

def test_render_human():
    text = render_human({"mean": 0.750431234, "event_counts": {"failures": [3, 1]}}, "simulation")
    lines = text.splitlines()
    assert lines[0] == "simulation"
    assert lines[1].split() == ["mean", "0.750431"]
    assert lines[2] == "event_counts:"
    assert lines[3].split() == ["failures", "[3,", "1]"]

def test_render_human_table_aligns_columns():
    lines = render_human_table(["levels", "U"], [[1, 0.754931], [2, 0.8205612]]).splitlines()
    assert len({len(line) for line in lines}) == 1
    assert lines[2].split() == ["2", "0.820561"]

def test_write_output(tmp_path, capsys):
    write_output("a,b\n")
    assert capsys.readouterr().out == "a,b\n"
    path = tmp_path / "out.csv"
    write_output("a,b\n1,2\n", str(path))
    assert path.read_bytes() == b"a,b\n1,2\n"
