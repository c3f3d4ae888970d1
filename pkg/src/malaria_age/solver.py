"""Semi-implicit upwind finite-volume scheme for the age-structured model.

One time step updates, in this order and each with the newest values
available: S_v, I_v, then s, i, r cell by cell.  The transport term is an
explicit upwind flux with ghost values (Lambda_h, 0, 0) at age zero;
reactions are implicit in the quantity being updated.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalBlowupError
from .grid import Grid
from .params import cell_averages
from .quadrature import AgeMesh

logger = logging.getLogger(__name__)

AGGREGATES = ("s", "i", "r", "S_v", "I_v", "lambda_v", "L0")


@dataclass
class SystemState:
    """Cell averages s, i, r (humans per year of age) and mosquito counts."""

    s: np.ndarray
    i: np.ndarray
    r: np.ndarray
    S_v: float
    I_v: float
    t: float = 0.0

    def __post_init__(self):
        self.s = np.asarray(self.s, dtype=float)
        self.i = np.asarray(self.i, dtype=float)
        self.r = np.asarray(self.r, dtype=float)
        self.S_v = float(self.S_v)
        self.I_v = float(self.I_v)

    def totals(self, da):
        """L1 norms of s, i, r."""
        return da * self.s.sum(), da * self.i.sum(), da * self.r.sum()

    def human_total(self, da):
        return da * (self.s.sum() + self.i.sum() + self.r.sum())

    def force_on_vectors(self, beta_h_cells, da):
        """lambda_v = da * sum_j beta_h,j i_j (rectangle rule)."""
        return da * float(np.dot(beta_h_cells, self.i))

    def copy(self):
        return SystemState(self.s.copy(), self.i.copy(), self.r.copy(), self.S_v, self.I_v, self.t)

    def l1_distance(self, other, da):
        return (da * (np.abs(self.s - other.s).sum() + np.abs(self.i - other.i).sum()
                      + np.abs(self.r - other.r).sum())
                + abs(self.S_v - other.S_v) + abs(self.I_v - other.I_v))

    def l1_norm(self, da):
        return self.human_total(da) + abs(self.S_v) + abs(self.I_v)


@dataclass
class Trajectory:
    """Sampled aggregates of a run; `kind` is "pde" or "ode".

    For ODE trajectories the s, i, r columns hold the scalar compartments
    S_h, I_h, R_h instead of L1 norms of densities.
    """

    times: np.ndarray
    columns: dict
    snapshots: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)
    kind: str = "pde"
    final_state: object = None

    def __getitem__(self, name):
        return self.columns[name]

    @property
    def final_time(self):
        return float(self.times[-1])

    def final(self):
        return {k: float(v[-1]) for k, v in self.columns.items()}


# --- initial data ---------------------------------------------------------------

def continuum_pfe_cells(params, grid):
    """Cell averages of s_h0(a) = Lambda_h exp(-int_0^a mu_h)."""
    mesh = AgeMesh(grid.n_age * grid.da, grid.da)
    _, surv_points = mesh.survival(params.mu_h)
    cells = (surv_points * mesh.weights).sum(axis=1)[: grid.n_age] / grid.da
    return params.Lambda_h * cells


def discrete_pfe(params, grid):
    """Exact zero-infection fixed point of the discrete scheme."""
    mu = cell_averages(params, grid).mu_h
    factors = 1.0 / (1.0 + grid.da * mu)
    s = params.Lambda_h * np.cumprod(factors)
    zeros = np.zeros(grid.n_age)
    return SystemState(s, zeros, zeros.copy(), params.Lambda_v / params.mu_v, 0.0)


def initial_state(params, grid, I_v0, S_v0=None, humans="pfe"):
    """Default initial data: humans at the PFE profile, S_v at Lambda_v/mu_v.

    `humans` is "pfe" (cell-averaged continuum profile), "discrete_pfe",
    or a triple of callables (s0, i0, r0) of age, cell-averaged here.
    """
    if S_v0 is None:
        S_v0 = params.Lambda_v / params.mu_v
    if isinstance(humans, str):
        if humans == "pfe":
            s = continuum_pfe_cells(params, grid)
        elif humans == "discrete_pfe":
            s = discrete_pfe(params, grid).s
        else:
            raise ValueError(f"unknown human initial profile {humans!r}")
        i = np.zeros(grid.n_age)
        r = np.zeros(grid.n_age)
    else:
        from .params import cell_average

        s, i, r = (cell_average(f, grid) for f in humans)
    return SystemState(s, i, r, S_v0, I_v0, 0.0)


# --- time stepping ----------------------------------------------------------------

def step(state, cells, params, grid):
    """Advance one time step of the finite-volume scheme."""
    dt = grid.dt
    c = dt / grid.da
    lam = state.force_on_vectors(cells.beta_h, grid.da)

    S_v = (state.S_v + params.Lambda_v * dt) / (1.0 + dt * lam + params.mu_v * dt)
    I_v = (state.I_v + dt * lam * S_v) / (1.0 + dt * params.mu_v)

    s_up = np.empty_like(state.s)
    s_up[0] = params.Lambda_h
    s_up[1:] = state.s[:-1]
    i_up = np.empty_like(state.i)
    i_up[0] = 0.0
    i_up[1:] = state.i[:-1]
    r_up = np.empty_like(state.r)
    r_up[0] = 0.0
    r_up[1:] = state.r[:-1]

    s = ((1.0 - c) * state.s + c * s_up + dt * cells.r2 * state.r) / (
        1.0 + dt * cells.beta_v * I_v + dt * cells.mu_h)
    i = ((1.0 - c) * state.i + c * i_up + dt * cells.beta_v * I_v * s) / (
        1.0 + dt * cells.infection_exit)
    r = ((1.0 - c) * state.r + c * r_up + dt * cells.r1 * i) / (
        1.0 + dt * (cells.r2 + cells.mu_h))

    new = SystemState(s, i, r, S_v, I_v, state.t + dt)
    _check_finite(new)
    return new


def _check_finite(state):
    if not (np.isfinite(state.S_v) and np.isfinite(state.I_v)):
        raise NumericalBlowupError("non-finite mosquito population", index=-1, time=state.t)
    for name in ("s", "i", "r"):
        arr = getattr(state, name)
        bad = ~np.isfinite(arr)
        if bad.any():
            j = int(np.argmax(bad))
            raise NumericalBlowupError(f"non-finite {name} in cell {j}", index=j, time=state.t)


def tail_mass_bound(params, grid):
    """Lambda_h exp(-mu0 a_max) / mu0: human mass beyond the truncated domain."""
    ages = np.linspace(0.0, grid.a_max, 2001)
    mu0 = float(np.min(params.mu_h(ages)))
    return params.Lambda_h * np.exp(-mu0 * grid.a_max) / mu0


def tail_mass_survival_bound(params, grid):
    """Lambda_h exp(-int_0^a_max mu_h) / mu0: sharper when mu_h grows with age."""
    ages = np.linspace(0.0, grid.a_max, 2001)
    mu0 = float(np.min(params.mu_h(ages)))
    cum = AgeMesh(grid.a_max, grid.da).cumulative(params.mu_h)[-1]
    return params.Lambda_h * np.exp(-cum) / mu0


def run(params, grid, init, sample_every=1, snapshot_times=(), lyapunov=True, cells=None):
    """Integrate to time T, sampling aggregates every `sample_every` steps.

    t = 0 and the final time are always sampled.  The Lyapunov value L0 is
    attached to every sample when `lyapunov` is true (NaN where S_v <= 0).
    """
    from .lyapunov import LyapunovFunctional

    if init.s.shape != (grid.n_age,):
        raise ValueError(f"initial state has {init.s.shape[0]} cells, grid has {grid.n_age}")
    cells = cells if cells is not None else cell_averages(params, grid)
    L = LyapunovFunctional(params, grid) if lyapunov else None
    sample_every = max(1, int(sample_every))
    pending = sorted(float(t) for t in snapshot_times)
    rows, times, snapshots = [], [], {}

    def record(state):
        s, i, r = state.totals(grid.da)
        lam = state.force_on_vectors(cells.beta_h, grid.da)
        l0 = np.nan
        if L is not None and state.S_v > 0:
            l0 = L(state)
        times.append(state.t)
        rows.append((s, i, r, state.S_v, state.I_v, lam, l0))

    def snap(state):
        while pending and pending[0] <= state.t + 0.5 * grid.dt:
            snapshots[pending.pop(0)] = state.copy()

    state = init.copy()
    record(state)
    snap(state)
    n_steps = grid.n_steps
    for n in range(1, n_steps + 1):
        try:
            state = step(state, cells, params, grid)
        except NumericalBlowupError as exc:
            exc.time = n * grid.dt
            raise
        state.t = n * grid.dt
        if n % sample_every == 0 or n == n_steps:
            record(state)
        snap(state)
    data = np.array(rows)
    columns = {name: data[:, k] for k, name in enumerate(AGGREGATES)}
    meta = {"tail_mass_bound": tail_mass_bound(params, grid),
            "tail_mass_survival_bound": tail_mass_survival_bound(params, grid), "n_steps": n_steps}
    return Trajectory(np.array(times), columns, snapshots, meta, "pde", state)
