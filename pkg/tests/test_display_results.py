import xml.etree.ElementTree as ET

import numpy as np

from display_results import emit_svg
from envelope import TimeSeries, fit_envelope, make_grid


def damped_curves():
    grid = make_grid(200.0, 2001)
    decaying = TimeSeries(grid, np.exp(-0.02 * grid) * np.sin(grid) ** 2, "ergotropy")
    energy = TimeSeries(grid, np.exp(-0.02 * grid) * (1 + np.sin(grid) ** 2) / 2, "energy")
    return {"energy": energy, "ergotropy": decaying}, {"ergotropy": fit_envelope(decaying)}


def ids(path):
    return [element.get("id") for element in ET.parse(path).getroot().iter() if element.get("id")]


def test_curves_and_envelopes_are_tagged(tmp_path):
    series, fits = damped_curves()
    path = str(tmp_path / "curves.svg")
    assert emit_svg(series, path, style={"title": "damped", "n_ticks": 4}, fits=fits) == path

    found = ids(path)
    assert sorted(i for i in found if i.startswith("curve-")) == ["curve-energy", "curve-ergotropy"]
    assert [i for i in found if i.startswith("envelope-")] == ["envelope-ergotropy"]


def test_svg_is_deterministic(tmp_path):
    series, fits = damped_curves()
    first, second = str(tmp_path / "first.svg"), str(tmp_path / "second.svg")
    emit_svg(series, first, fits=fits)
    emit_svg(series, second, fits=fits)
    with open(first, "rb") as f, open(second, "rb") as g:
        assert f.read() == g.read()


def test_missing_fits_are_skipped(tmp_path):
    series, _ = damped_curves()
    path = str(tmp_path / "no_fit.svg")
    emit_svg(series, path, fits={"ergotropy": None, "unknown": None}, style={"log_scale": False})
    assert not [i for i in ids(path) if i.startswith("envelope-")]
