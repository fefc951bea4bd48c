import csv
import importlib
import math
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from fraflow.harness.cli import EXIT_IO, EXIT_OK, EXIT_VERIFY, main
from fraflow.harness.plotdata import SVG_MAX_POINTS, PlotDataError, read_functionals, svg_chart, write_plotdata
from fraflow.harness.verify import CHECKS, CheckResult, run_checks

ml_module = importlib.import_module("fraflow.frackernel.mittag_leffler")


# -- verify ---------------------------------------------------------------------------


def test_verify_all_pass(capsys):
    assert main(["verify"]) == EXIT_OK
    out = capsys.readouterr().out
    assert f"{len(CHECKS)}/{len(CHECKS)} checks passed" in out
    assert "FAIL" not in out


def test_verify_negative_control(monkeypatch, capsys):
    # starve the series evaluator: the exponential checks must now fail
    monkeypatch.setattr(ml_module, "DEFAULT_MAX_TERMS", 3)
    ml_module._ml_cached.cache_clear()
    try:
        assert main(["verify"]) == EXIT_VERIFY
        out = capsys.readouterr().out
        assert "FAIL  ml_exp" in out
    finally:
        ml_module._ml_cached.cache_clear()


def test_check_exceptions_become_failures():
    def boom():
        raise ValueError("no")

    res = run_checks([("boom", boom, 1.0), ("ok", lambda: 0.5, 1.0)])
    assert [r.passed for r in res] == [False, True]
    assert math.isinf(res[0].measured) and "ValueError" in res[0].error


def test_check_line_format():
    line = CheckResult("x", 1e-3, 1e-2, True, 0.01).line()
    assert line.startswith("PASS  x") and "threshold=1.0e-02" in line


# -- plotdata --------------------------------------------------------------------------------


def write_functionals(path, rows, header=("t", "energy", "lyapunov_v", "suboptimality")):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def test_loglog_of_power_law_is_collinear(tmp_path):
    t = np.geomspace(1.0, 100.0, 50)
    write_functionals(tmp_path / "functionals.csv",
                      [(a, 2.0 * a**-2, a**-1.0, 3.0 * a**-3) for a in t])
    files = write_plotdata(tmp_path)
    assert len(files) == 4
    with open(tmp_path / "loglog.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["log10_t", "log10_energy", "log10_lyapunov_v", "log10_suboptimality"]
    data = np.array(rows[1:], dtype=float)
    for col, slope in ((1, -2.0), (2, -1.0), (3, -3.0)):
        fit = np.polyfit(data[:, 0], data[:, col], 1)
        assert fit[0] == pytest.approx(slope, abs=1e-12)
        assert np.max(np.abs(np.polyval(fit, data[:, 0]) - data[:, col])) < 1e-12


def test_svg_files_parse(tmp_path):
    t = np.geomspace(1.0, 100.0, 5000)
    write_functionals(tmp_path / "functionals.csv", [(a, a**-2, a**-2, a**-2) for a in t])
    write_plotdata(tmp_path)
    for name in ("energy", "lyapunov_v", "suboptimality"):
        root = ET.parse(tmp_path / f"{name}.svg").getroot()
        assert root.tag.endswith("svg")
        line = root.find("{http://www.w3.org/2000/svg}polyline")
        assert len(line.get("points").split()) <= SVG_MAX_POINTS


def test_nonpositive_values_become_nan(tmp_path):
    write_functionals(tmp_path / "functionals.csv", [(1.0, 0.0, 1.0, float("nan")), (2.0, 0.5, 0.5, 1.0)])
    write_plotdata(tmp_path)
    with open(tmp_path / "loglog.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[1][1] == "nan" and rows[1][3] == "nan"


def test_all_zero_column_gets_no_chart(tmp_path):
    write_functionals(tmp_path / "functionals.csv", [(1.0, 0.0, 1.0, 0.0), (2.0, 0.0, 0.5, 0.0)])
    files = write_plotdata(tmp_path)
    assert [f.rsplit("/", 1)[-1] for f in files] == ["loglog.csv", "lyapunov_v.svg"]


def test_svg_chart_handles_flat_series():
    root = ET.fromstring(svg_chart(np.array([0.0, 1.0]), np.array([2.0, 2.0]), "flat"))
    assert root.find("{http://www.w3.org/2000/svg}polyline") is not None


def test_empty_series_exit_4(tmp_path, capsys):
    write_functionals(tmp_path / "functionals.csv", [])
    assert main(["plotdata", str(tmp_path)]) == EXIT_IO
    assert "no samples" in capsys.readouterr().err


def test_missing_functionals_exit_4(tmp_path):
    assert main(["plotdata", str(tmp_path)]) == EXIT_IO


def test_read_functionals_errors(tmp_path):
    (tmp_path / "empty.csv").write_text("")
    with pytest.raises(PlotDataError, match="empty"):
        read_functionals(tmp_path / "empty.csv")
    (tmp_path / "bad.csv").write_text("a,b\n1,2\n")
    with pytest.raises(PlotDataError, match="'t'"):
        read_functionals(tmp_path / "bad.csv")


def test_plotdata_on_real_run(tmp_path, capsys):
    out = tmp_path / "ml"
    assert main(["run", "ml-scalar", "--out", str(out)]) == EXIT_OK
    assert main(["plotdata", str(out)]) == EXIT_OK
    printed = capsys.readouterr().out
    assert "loglog.csv" in printed and "lyapunov_v.svg" in printed
    ET.parse(out / "lyapunov_v.svg")
