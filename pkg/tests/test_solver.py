import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from malaria_age import solver
from malaria_age.errors import NumericalBlowupError
from malaria_age.grid import Grid
from malaria_age.params import cell_averages, constant_params, table1_params

SMALL = Grid(0.1, 0.1, 10.0, 2.0)
P1 = table1_params(5e6)
CELLS = cell_averages(P1, SMALL)

densities = arrays(np.float64, SMALL.n_age, elements=st.floats(0.0, 1e5))


def state_strategy():
    return st.builds(solver.SystemState, densities, densities, densities,
                     st.floats(0.0, 1e7), st.floats(0.0, 1e6))


def test_discrete_pfe_first_cell():
    p = constant_params(100.0, 10.0, 5.0, 0.3, 0.0, 1.0, 0.0, 1e-3, 1e-3)
    g = Grid(0.1, 0.05, 5.0, 1.0)
    pfe = solver.discrete_pfe(p, g)
    assert pfe.s[0] == pytest.approx(100.0 / (1 + 0.1 * 0.3), rel=1e-14)
    assert pfe.S_v == pytest.approx(2.0) and pfe.I_v == 0 and not pfe.i.any()


def test_discrete_pfe_is_fixed_point():
    pfe = solver.discrete_pfe(P1, SMALL)
    nxt = solver.step(pfe, CELLS, P1, SMALL)
    np.testing.assert_allclose(nxt.s, pfe.s, rtol=1e-13)
    assert nxt.S_v == pytest.approx(pfe.S_v, rel=1e-13)
    assert nxt.I_v == 0 and not nxt.i.any() and not nxt.r.any()


def test_discrete_pfe_first_order_in_da():
    gaps = []
    for da in (0.1, 0.05, 0.025):
        g = Grid(da, da, 20.0, 1.0)
        gaps.append(np.max(np.abs(solver.discrete_pfe(P1, g).s - solver.continuum_pfe_cells(P1, g))))
    assert 1.7 < gaps[0] / gaps[1] < 2.3 and 1.7 < gaps[1] / gaps[2] < 2.3


@given(state_strategy(), st.floats(0.1, 1.0))
def test_step_positivity(state, courant):
    g = Grid(0.1, 0.1 * courant, 10.0, 2.0)
    out = solver.step(state, cell_averages(P1, g) if courant != 1.0 else CELLS, P1, g)
    for arr in (out.s, out.i, out.r):
        assert np.all(arr >= 0)
    assert out.S_v >= 0 and out.I_v >= 0
    assert out.t == pytest.approx(state.t + g.dt)


@given(state_strategy())
def test_step_vector_balance(state):
    out = solver.step(state, CELLS, P1, SMALL)
    lhs = (out.S_v + out.I_v) * (1 + P1.mu_v * SMALL.dt)
    rhs = state.S_v + state.I_v + P1.Lambda_v * SMALL.dt
    assert abs(lhs - rhs) <= 1e-12 * rhs


def test_step_reports_offending_cell():
    s = solver.discrete_pfe(P1, SMALL)
    s.s[7] = np.nan
    with np.errstate(invalid="ignore"), pytest.raises(NumericalBlowupError) as err:
        solver.step(s, CELLS, P1, SMALL)
    assert err.value.index == 7


def test_run_blowup_carries_time():
    s = solver.discrete_pfe(P1, SMALL)
    s.r[3] = np.inf
    with np.errstate(invalid="ignore"), pytest.raises(NumericalBlowupError) as err:
        solver.run(P1, SMALL, s, lyapunov=False)
    assert err.value.time == pytest.approx(SMALL.dt)


def test_zero_infection_stays_zero():
    g = Grid(0.1, 0.1, 20.0, 5.0)
    tr = solver.run(P1, g, solver.initial_state(P1, g, 0.0), sample_every=7)
    assert not tr["i"].any() and not tr["I_v"].any()
    assert tr.times[0] == 0 and tr.times[-1] == pytest.approx(5.0)
    assert np.all(np.diff(tr.times) > 0)
    assert all(len(v) == len(tr.times) for v in tr.columns.values())


def test_snapshots_and_metadata():
    g = Grid(0.1, 0.1, 20.0, 2.0)
    tr = solver.run(P1, g, solver.initial_state(P1, g, 1e3), snapshot_times=(0.0, 1.0, 2.0))
    assert sorted(tr.snapshots) == [0.0, 1.0, 2.0]
    assert tr.snapshots[1.0].t == pytest.approx(1.0)
    assert tr.metadata["tail_mass_bound"] > 0 and tr.metadata["n_steps"] == 20


def test_run_rejects_mismatched_state():
    with pytest.raises(ValueError):
        solver.run(P1, SMALL, solver.initial_state(P1, Grid(0.2, 0.2, 10.0, 1.0), 1.0))


def test_human_bound_and_vector_floor():
    g = Grid(0.1, 0.1, 100.0, 30.0)
    p = table1_params(5e6)
    tr = solver.run(p, g, solver.initial_state(p, g, 2e5), lyapunov=False)
    mu0 = float(np.min(p.mu_h(np.linspace(0, 100, 10001))))
    n_h = tr["s"] + tr["i"] + tr["r"]
    assert np.all(n_h <= max(p.Lambda_h / mu0, n_h[0]) * (1 + 1e-6))
    C_h = max(p.Lambda_h / mu0, n_h[0])
    sup_bh = float(np.max(p.beta_h(np.linspace(0, 100, 10001))))
    floor = p.Lambda_v / (p.mu_v + sup_bh * C_h)
    assert np.all(tr["S_v"][tr.times > 1.0] >= floor * (1 - 1e-9))


def test_upwind_domination():
    g = Grid(0.1, 0.05, 20.0, 1.0)
    cells = cell_averages(P1, g)
    pfe = solver.discrete_pfe(P1, g)
    rng = np.random.default_rng(0)
    state = pfe.copy()
    state.s = pfe.s * rng.uniform(0.0, 1.0, g.n_age)
    for _ in range(50):
        state = solver.step(state, cells, P1, g)
        assert np.all(state.s <= pfe.s * (1 + 1e-14))


def test_initial_state_variants():
    g = Grid(0.1, 0.1, 10.0, 1.0)
    a = solver.initial_state(P1, g, 5.0)
    b = solver.initial_state(P1, g, 5.0, humans="discrete_pfe")
    c = solver.initial_state(P1, g, 5.0, S_v0=3.0,
                             humans=(lambda x: 1 + 0 * x, lambda x: 2 + 0 * x, lambda x: 0 * x))
    assert a.S_v == P1.S_v0 and a.I_v == 5.0
    assert np.max(np.abs(a.s - b.s) / a.s) < 0.05
    np.testing.assert_allclose(c.i, 2.0)
    assert c.S_v == 3.0
    with pytest.raises(ValueError):
        solver.initial_state(P1, g, 1.0, humans="uniform")


@pytest.mark.slow
def test_self_convergence_first_order():
    """Successive-level differences shrink by ~2 per joint halving of (da, dt)."""
    p = table1_params(5e6)
    levels = (0.1, 0.05, 0.025, 0.0125)
    finals = []
    for da in levels:
        g = Grid(da, da, 100.0, 5.0)
        finals.append(solver.run(p, g, solver.initial_state(p, g, 2e5), lyapunov=False).final_state)

    def gap(coarse, fine, da):
        c = lambda x: x.reshape(-1, 2).mean(1)  # noqa: E731
        return (da * sum(np.abs(getattr(coarse, k) - c(getattr(fine, k))).sum() for k in "sir")
                + abs(coarse.S_v - fine.S_v) + abs(coarse.I_v - fine.I_v))

    d = [gap(finals[k], finals[k + 1], levels[k]) for k in range(3)]
    assert 1.7 <= d[0] / d[1] <= 2.3
    assert 1.7 <= d[1] / d[2] <= 2.3
