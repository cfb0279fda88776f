import xml.etree.ElementTree as ET

import pytest

from adaradar.plotting import emit_plots


def rows():
    return [{"codec": "spectral", "s": 8, "M": 32, "value_bpp": 8 / r, "snr_db": 30 - 5 * i, "f1": 1.0}
            for i, r in enumerate([1, 2, 4, 8])]


def test_rate_plot_is_svg_with_log_axis(tmp_path):
    path = emit_plots(rows(), "rate_snr", tmp_path / "a.svg", "table.csv")
    text = path.read_text()
    ET.fromstring(text)
    assert "source: table.csv" in text
    assert "10^{0}" in text or "10^{" in text or "$\\mathdefault{10^{0}}$" in text


def test_trace_plot(tmp_path):
    trace = [{"t": t, "r": 12 + t, "p": 0.9} for t in range(10)]
    path = emit_plots(trace, "trace", tmp_path / "t.svg")
    assert "pruning ratio" in path.read_text()


def test_output_is_stable(tmp_path):
    a = emit_plots(rows(), "rate_snr", tmp_path / "a.svg").read_bytes()
    b = emit_plots(rows(), "rate_snr", tmp_path / "b.svg").read_bytes()
    assert a == b


def test_empty_table():
    with pytest.raises(ValueError):
        emit_plots([], "rate_snr", "x.svg")


def test_unknown_kind(tmp_path):
    with pytest.raises(ValueError):
        emit_plots(rows(), "pie", tmp_path / "x.svg")
