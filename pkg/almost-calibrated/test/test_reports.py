import numpy as np

from hspace.reports import csv_text, format_value, read_summary, summary_text, write_csv, write_summary


def test_csv_keeps_column_order_and_full_precision():
    rows = [{"b": 0.1, "a": 1, "c": True}, {"a": 2, "b": 1 / 3, "c": False}]
    text = csv_text(rows, ["a", "b", "c"])
    lines = text.split("\n")
    assert lines[0] == "a,b,c"
    assert lines[1] == "1,0.10000000000000001,True"
    assert lines[2] == "2,0.33333333333333331,False"
    assert text.endswith("\n") and "\r" not in text


def test_empty_table_keeps_its_header(tmp_path):
    path = write_csv(tmp_path / "nested" / "empty.csv", [], ["draw_id", "k_route_b"])
    assert path.read_text() == "draw_id,k_route_b\n"


def test_summary_values():
    assert format_value(True) == "true"
    assert format_value(np.bool_(False)) == "false"
    assert format_value(np.int64(7)) == "7"
    assert format_value(float("nan")) == "nan"
    assert format_value(np.float64(0.1)) == "0.10000000000000001"
    assert format_value("PhaseNewtonSolver") == "PhaseNewtonSolver"
    assert summary_text({"b": 1, "a": 2.5}) == "a = 2.5\nb = 1\n"


def test_summary_file_round_trip(tmp_path):
    path = write_summary(tmp_path / "out" / "phase_summary.txt", {"theta_hat": np.pi / 4, "hypercritical": True})
    assert read_summary(path) == {"hypercritical": "true", "theta_hat": "0.78539816339744828"}
