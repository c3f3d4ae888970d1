import pytest
from hypothesis import given, strategies as st

from malaria_age.config import (CompareConfig, InitConfig, OutputConfig, RunConfig, SweepConfig,
                                parse_config, parse_value, serialize)
from malaria_age.errors import ConfigError
from malaria_age.grid import Grid
from malaria_age.params import GammaLike, Logistic, Tabulated, constant_params, table1_params

MINIMAL = """
[params]
preset = table1
Lambda_v = 5e6

[init]
I_v0 = [1e3]
"""


def test_minimal_simulate_config():
    c = parse_config(MINIMAL, mode="simulate")
    assert c.mode == "simulate"
    assert c.params == table1_params(5e6)
    assert c.init.I_v0 == (1000.0,)
    assert c.grid == Grid()


def test_dt_twice_da_rejected_with_location():
    text = MINIMAL + "\n[grid]\nda = 0.05\ndt = 0.1\n"
    with pytest.raises(ConfigError, match="positivity") as err:
        parse_config(text, mode="simulate")
    assert err.value.line == 11


@pytest.mark.parametrize("text,fragment", [
    ("[params]\npreset = table1\nLambda_v = 5e6\nbogus = 1\n", "unknown key"),
    ("[nonsense]\nx = 1\n", "unknown section"),
    ("[params]\npreset = table1\nLambda_v = [1,\n", "syntax"),
    ("[params]\npreset = table2\nLambda_v = 1\n", "preset"),
    ("[params]\nmu_h = spline(k=1)\n", "family"),
    ("[params]\nLambda_h = 1\n", "missing"),
    ("no header\n", "syntax"),
    ("[run]\nmode = fly\n" + MINIMAL, "mode"),
    (MINIMAL + "[output]\nsample_every = 2.5\n", "integer"),
    (MINIMAL + "[grid]\nT = 1e999\n", "finite"),
    ("[params]\npreset = table1\nLambda_v = 5e6\n[init]\nI_v0 = []\n", "nonempty"),
])
def test_rejections(text, fragment):
    with pytest.raises(ConfigError, match=fragment):
        parse_config(text, mode="simulate")


def test_unknown_key_has_line_and_column():
    with pytest.raises(ConfigError) as err:
        parse_config("[params]\npreset = table1\nLambda_v = 5e6\nbogus = 1\n", mode="r0")
    assert (err.value.line, err.value.column) == (4, 1)
    with pytest.raises(ConfigError) as err:
        parse_config("[params]\npreset = table1\nLambda_v =   [1,\n", mode="r0")
    assert (err.value.line, err.value.column) == (3, 14)


def test_mode_conflict():
    with pytest.raises(ConfigError, match="conflicts"):
        parse_config("[run]\nmode = r0\n" + MINIMAL, mode="simulate")
    assert parse_config("[run]\nmode = r0\n" + MINIMAL).mode == "r0"
    with pytest.raises(ConfigError, match="no mode"):
        parse_config(MINIMAL)


def test_values():
    assert parse_value("true") is True and parse_value("none") is None
    assert parse_value("out/run-1") == "out/run-1"
    assert parse_value("logistic(top=6, b=11, rate=0.05)") == Logistic(6, 11, 0.05)
    assert parse_value("[1, 2e3]") == [1, 2000.0]


finite = st.floats(1e-3, 1e3)
rate = st.one_of(finite, st.builds(GammaLike, finite, finite), st.builds(Logistic, finite, st.floats(0, 5), finite),
                 st.lists(finite, min_size=1, max_size=4).map(
                     lambda v: Tabulated(tuple(float(k) for k in range(len(v))), tuple(v))))


@st.composite
def run_configs(draw):
    p = constant_params(*(draw(finite) for _ in range(9)))
    p = p.replace(**{k: draw(rate) for k in ("mu_h", "beta_h", "r2")})
    da = draw(st.floats(0.01, 1.0))
    grid = Grid(da, da * draw(st.floats(0.1, 1.0)), draw(st.floats(10.0, 200.0)), draw(st.floats(1.0, 50.0)))
    init = InitConfig(draw(st.sampled_from(["pfe", "discrete_pfe"])),
                      tuple(draw(st.lists(finite, min_size=1, max_size=4))),
                      draw(st.one_of(st.none(), finite)))
    out = OutputConfig(draw(st.sampled_from(["out", "results/a-b", "x.y"])), draw(st.integers(1, 100)),
                       tuple(draw(st.lists(finite, max_size=3))), draw(st.booleans()), draw(st.booleans()))
    sweep = SweepConfig(tuple(draw(st.lists(finite, min_size=1, max_size=3))), draw(st.booleans()), draw(finite))
    return RunConfig(draw(st.sampled_from(["simulate", "r0", "sweep"])), p, grid, init, out, sweep,
                     CompareConfig(draw(st.integers(1, 4)), draw(finite)))


@given(run_configs())
def test_round_trip(config):
    again = parse_config(serialize(config))
    assert again == config
    assert serialize(again) == serialize(config)


def test_table1_overrides():
    c = parse_config("[params]\npreset = table1\nLambda_v = 5e6\nr2 = 0\n", mode="equilibria")
    assert c.params.has_no_waning and c.params.mu_v == 18.25
