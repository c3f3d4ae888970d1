import numpy as np
import pytest
from hypothesis import given, strategies as st

from malaria_age.errors import InvalidGridError
from malaria_age.grid import Grid


def test_defaults():
    g = Grid()
    assert (g.n_age, g.n_steps) == (2000, 4000)
    assert g.edges[1] == pytest.approx(0.05)
    assert g.centers[0] == pytest.approx(0.025)


@pytest.mark.parametrize("kw", [dict(da=0.0), dict(dt=-1.0), dict(a_max=0.3), dict(T=0.01),
                                dict(da=float("nan")), dict(dt=0.1)])
def test_invalid(kw):
    with pytest.raises(InvalidGridError):
        Grid(**kw)


def test_dt_above_da_mentions_positivity():
    with pytest.raises(InvalidGridError, match="upwind"):
        Grid(da=0.05, dt=0.1)


@given(st.floats(0.01, 1.0), st.floats(0.1, 1.0), st.floats(20.0, 200.0))
def test_counts_cover_domain(da, ratio, a_max):
    g = Grid(da, da * ratio, a_max, 1.0)
    assert g.n_age * da >= a_max * (1 - 1e-8)
    assert (g.n_age - 1) * da < a_max
    assert 0 < g.courant <= 1 + 1e-12


def test_refined():
    g = Grid(0.2, 0.1, 50.0, 5.0).refined()
    assert (g.da, g.dt, g.n_age) == (0.1, 0.05, 500)
