import xml.etree.ElementTree as ET

import pytest

from deconfound.experiments import table3
from deconfound.svg import curve_svg, plot_svg


def test_plot_is_well_formed_xml():
    svg = plot_svg({"a": ([0, 1, 2], [0, 1, 4]), "b": ([0, 2], [1, 3])}, title="t <1>", lines={"b"})
    root = ET.fromstring(svg)
    tags = [el.tag.split("}")[1] for el in root.iter()]
    assert tags.count("circle") == 3 and tags.count("polyline") == 1
    assert "t &lt;1&gt;" in svg


def test_empty_plot_rejected():
    with pytest.raises(ValueError):
        plot_svg({"a": ([], [])})


def test_curve_svg():
    rows = table3(d=4, grid=(0.2, 0.8), n=2000)
    root = ET.fromstring(curve_svg(rows))
    assert root.attrib["width"] == "480"
