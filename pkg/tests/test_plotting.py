import xml.etree.ElementTree as ET

import numpy as np
import pytest

from seasongan.placerec import PRCurve, read_pr_curve, write_pr_curve
from seasongan.plotting import plot_pr_curves


def test_single_point_curve(tmp_path):
    c = PRCurve(np.array([0.5]), np.array([1.0]), np.array([0.3]))
    ax = plot_pr_curves([c], tmp_path / "p.svg")
    assert ax.get_xlim() == (0.0, 1.0) and ax.get_ylim() == (0.0, 1.0)
    ET.parse(tmp_path / "p.svg")


def test_plotted_points_match_file(tmp_path):
    rng = np.random.default_rng(0)
    curves = []
    for n in (1, 5):
        c = PRCurve(np.linspace(0, 2, 20), rng.uniform(0, 1, 20), np.sort(rng.uniform(0, 1, 20)), n)
        write_pr_curve(c, tmp_path / f"pr{n}.csv")
        curves.append(read_pr_curve(tmp_path / f"pr{n}.csv"))
    ax = plot_pr_curves(curves, tmp_path / "p.svg")
    for line, c in zip(ax.get_lines(), curves):
        np.testing.assert_array_equal(line.get_xdata(), c.recall)
        np.testing.assert_array_equal(line.get_ydata(), c.precision)
    assert [t.get_text() for t in ax.get_legend().get_texts()] == ["n = 1", "n = 5"]


def test_no_curves_rejected(tmp_path):
    with pytest.raises(ValueError):
        plot_pr_curves([], tmp_path / "p.svg")
