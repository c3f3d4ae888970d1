import re

import numpy as np
import pytest

from malaria_age.solver import Trajectory
from malaria_age.svg import SvgStyle, emit_svg


def traj(values, times=None):
    values = np.asarray(values, dtype=float)
    times = np.arange(len(values), dtype=float) if times is None else times
    return Trajectory(times, {"i": values, "I_v": values})


def polylines(svg):
    return [[tuple(map(float, p.split(","))) for p in pts.split()]
            for pts in re.findall(r'points="([^"]*)"', svg)]


def test_constant_series_is_horizontal():
    svg = emit_svg([("c", traj([5.0] * 6))], SvgStyle(aggregate="I_v"))
    (line,) = polylines(svg)
    assert len({y for _, y in line}) == 1
    assert "I_v (mosquitoes)" in svg


def test_deterministic_and_self_contained():
    series = [("a", traj([1, 3, 2, 5])), ("b", traj([2, 2, 4, 1]))]
    one, two = emit_svg(series), emit_svg(series)
    assert one == two and len(polylines(one)) == 2
    assert "href" not in one and one.startswith("<?xml")


def test_empty_input_rejected():
    with pytest.raises(ValueError):
        emit_svg([])
    with pytest.raises(ValueError):
        emit_svg([("x", traj([]))])


def test_log_clamp_warning():
    svg = emit_svg([("z", traj([1.0, 0.1, 0.0, 1e-3]))], SvgStyle(log_y=True))
    assert "clamped" in svg and "log scale" in svg
    clean = emit_svg([("p", traj([1.0, 0.1, 1e-3]))], SvgStyle(log_y=True))
    assert "clamped" not in clean


def test_log_scale_decreasing_series_stays_monotone():
    t = np.linspace(0, 50, 101)
    svg = emit_svg([("decay", traj(np.exp(-0.3 * t), t))], SvgStyle(log_y=True))
    (line,) = polylines(svg)
    ys = [y for _, y in line]
    assert all(b > a for a, b in zip(ys, ys[1:]))  # svg y grows downward
