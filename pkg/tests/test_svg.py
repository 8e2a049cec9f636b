"""SVG chart output: structure, determinism, validation."""

import pytest

from dmpbag.svg import line_chart, write_chart


def sample_series():
    xs = [0, 1, 2, 3]
    return [("a", xs, [0.1, 0.5, 0.4, 0.9]), ("b", xs, [1.0, 0.8, 0.7, 0.2])]


def test_contains_polylines_and_labels():
    text = line_chart(
        sample_series(),
        title="demo",
        x_label="step",
        y_label="ratio",
        hlines=[("target", 0.6)],
    )
    assert text.startswith("<svg ")
    assert text.count("<polyline") == 2
    assert "stroke-dasharray" in text
    assert ">demo<" in text and ">target<" in text


def test_deterministic():
    a = line_chart(sample_series())
    b = line_chart(sample_series())
    assert a == b


def test_write_chart_lf_only(tmp_path):
    path = tmp_path / "chart.svg"
    write_chart(path, sample_series())
    data = path.read_bytes()
    assert b"\r" not in data
    assert data.endswith(b"</svg>\n")


def test_mismatched_series_rejected():
    with pytest.raises(ValueError, match="mismatched"):
        line_chart([("bad", [0, 1], [0.5])])


def test_constant_series_padded():
    text = line_chart([("flat", [0, 1], [0.5, 0.5])])
    assert "<polyline" in text


def test_empty_rejected():
    with pytest.raises(ValueError, match="at least one"):
        line_chart([])
