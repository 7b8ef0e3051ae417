import hashlib
import json

import numpy as np
import pytest

from results import PLOT_COLUMNS, ExperimentReport, ResultWriter, Table, format_cell


@pytest.mark.parametrize("value, text", [
    (0.1, "0.10000000000000001"),
    (1.0, "1"),
    (True, "true"),
    (False, "false"),
    (None, ""),
    (float("inf"), "inf"),
    (float("-inf"), "-inf"),
    (float("nan"), "nan"),
    (12, "12"),
    (np.float64(0.5), "0.5"),
    (np.int64(3), "3"),
    (np.bool_(True), "true"),
    ("max_abs", "max_abs"),
])
def test_format_cell(value, text):
    assert format_cell(value) == text


class TestTable:
    def test_add_requires_every_column(self):
        table = Table("t", ("n", "value"))
        table.add(n=1, value=0.5)
        with pytest.raises(KeyError):
            table.add(n=2)

    def test_plot_points(self):
        table = Table("t", ("L", "n", "value"))
        table.add(L="log", n=10, value=0.5)
        assert table.plot_points("n", ["value"]) == [("t", "n", 10, "value", 0.5)]
        assert table.plot_points("n", ["value"], label="L") == [("t", "n", 10, "log:value", 0.5)]

    def test_report_lookup(self):
        report = ExperimentReport(kind="ui-check", config_hash="abc", tables=[Table("ui_gap", ("a", "gap"))])
        assert report.table("ui_gap").name == "ui_gap"
        with pytest.raises(KeyError):
            report.table("missing")


class TestResultWriter:
    def _report(self):
        table = Table("ui_gap", ("a", "gap"))
        table.add(a=1.0, gap=1.0)
        table.add(a=10.0, gap=float("inf"))
        return ExperimentReport(kind="ui-check", config_hash="f" * 64, seed=None, tables=[table],
                                checks={"ui_gap_last": float("inf"), "holds": True})

    def test_csv_layout(self, tmp_path):
        writer = ResultWriter(tmp_path / "out")
        writer.write_report(self._report())
        assert (tmp_path / "out" / "ui_gap.csv").read_bytes() == b"a,gap\r\n1,1\r\n10,inf\r\n"

    def test_header_only_plotdata(self, tmp_path):
        writer = ResultWriter(tmp_path)
        writer.write_report(self._report())
        expected = ",".join(PLOT_COLUMNS) + "\r\n"
        assert (tmp_path / "plotdata.csv").read_text(encoding="utf-8") == expected

    def test_summary(self, tmp_path):
        report = self._report()
        writer = ResultWriter(tmp_path)
        files = writer.write_report(report)
        assert [p.name for p in files] == ["ui_gap.csv", "plotdata.csv", "summary.json"]
        summary = json.loads((tmp_path / "summary.json").read_text(encoding="utf-8"))
        assert summary["kind"] == "ui-check"
        assert summary["config_hash"] == "f" * 64
        assert summary["checks"] == {"ui_gap_last": "inf", "holds": True}
        digest = hashlib.sha256((tmp_path / "ui_gap.csv").read_bytes()).hexdigest()
        assert summary["files"]["ui_gap.csv"] == digest
        assert "generated_at" in summary

    def test_open_fails_under_a_file(self, tmp_path):
        blocker = tmp_path / "blocker"
        blocker.write_text("x")
        with pytest.raises(OSError):
            ResultWriter(blocker / "out").open()
