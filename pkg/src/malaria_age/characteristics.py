"""Method-of-characteristics solution used to cross-check the finite-volume scheme.

Along a - t = const the human equations are a linear 3x3 ODE driven by
I_v(t).  Given a guess for I_v on [0, t_eval], every characteristic is
integrated with RK4 on a diagonal lattice of step h (a multiple of which
is the grid's da); the resulting lambda_v(t) drives the mosquito ODE,
which yields the next guess.  This Picard map is iterated to a fixed point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import OracleFailureError
from .quadrature import AgeMesh, simpson_weights
from .solver import SystemState

PICARD_TOL = 1e-8
PICARD_CAP = 200
# RK4 along characteristics must resolve the mosquito time scale 1/mu_v
MAX_LATTICE_STEP = 0.0125


@dataclass
class InitialProfile:
    """Initial data as callables of age plus the two mosquito counts."""

    s0: object
    i0: object
    r0: object
    S_v0: float
    I_v0: float


def _as_callables(init, grid):
    if isinstance(init, InitialProfile):
        return init.s0, init.i0, init.r0, init.S_v0, init.I_v0
    # piecewise-constant reconstruction of cell averages
    def pc(values):
        values = np.asarray(values, dtype=float)

        def f(a):
            j = np.clip((np.asarray(a) / grid.da).astype(int), 0, len(values) - 1)
            return values[j]
        return f

    return pc(init.s), pc(init.i), pc(init.r), init.S_v, init.I_v


class _LatticeRates:
    """Age rates at the lattice points a, a + h/2 and a + h (fixed across time steps)."""

    def __init__(self, params, a, h):
        self.levels = [self._at(params, x) for x in (a, a + 0.5 * h, a + h)]

    @staticmethod
    def _at(params, a):
        mu = params.mu_h(a)
        r2 = params.r2(a)
        return params.beta_v(a), mu, r2, params.infection_exit(a), params.r1(a), r2 + mu


def _human_rhs(rates, I_v, y):
    beta_v, mu, r2, k, r1, r_out = rates
    s, i, r = y
    inf = beta_v * I_v * s
    return np.array([-inf - mu * s + r2 * r, inf - k * i, r1 * i - r_out * r])


def _sweep(params, ages, y0, h, n_steps, I_v_of_t, lambda_h_boundary):
    """Advance all lattice characteristics n_steps; return lambda_v at each time level and final y."""
    simpson = simpson_weights(len(ages) - 1, h)
    bh_w = params.beta_h(ages) * simpson
    lo, mid, hi = _LatticeRates(params, ages[:-1], h).levels
    y = y0.copy()
    lam_v = np.empty(n_steps + 1)
    lam_v[0] = float(np.dot(bh_w, y[1]))
    for n in range(n_steps):
        t = n * h
        Iv0, Ivm, Iv1 = I_v_of_t(t), I_v_of_t(t + 0.5 * h), I_v_of_t(t + h)
        yc = y[:, :-1]
        k1 = _human_rhs(lo, Iv0, yc)
        k2 = _human_rhs(mid, Ivm, yc + 0.5 * h * k1)
        k3 = _human_rhs(mid, Ivm, yc + 0.5 * h * k2)
        k4 = _human_rhs(hi, Iv1, yc + h * k3)
        y[:, 1:] = yc + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        y[:, 0] = (lambda_h_boundary, 0.0, 0.0)
        lam_v[n + 1] = float(np.dot(bh_w, y[1]))
    return lam_v, y


def characteristics_oracle(params, grid, init, t_eval, substeps=None, tol=PICARD_TOL, cap=PICARD_CAP):
    """State at t_eval from the characteristic representation, cell-averaged onto `grid`.

    `init` is an InitialProfile or a SystemState (read as piecewise constant).
    The lattice step is h = grid.da / substeps; by default substeps is the
    smallest even number giving h <= MAX_LATTICE_STEP.  t_eval must be a
    multiple of h.
    """
    if substeps is None:
        substeps = max(2, int(np.ceil(grid.da / MAX_LATTICE_STEP - 1e-9)))
        substeps += substeps % 2
    h = grid.da / substeps
    n_steps = int(round(t_eval / h))
    if n_steps < 1 or abs(n_steps * h - t_eval) > 1e-9 * max(1.0, t_eval):
        raise ValueError(f"t_eval={t_eval} is not a positive multiple of the lattice step {h}")
    m_cells = grid.n_age * substeps
    m_cells += m_cells % 2
    ages = h * np.arange(m_cells + 1)
    s0, i0, r0, S_v0, I_v0 = _as_callables(init, grid)
    # sample just inside each lattice point so piecewise-constant data picks its own cell
    probe = np.minimum(ages + 1e-9 * h, grid.n_age * grid.da - 1e-9 * h)
    y0 = np.array([s0(probe), i0(probe), r0(probe)], dtype=float)

    times = h * np.arange(n_steps + 1)
    Lv, mv = params.Lambda_v, params.mu_v
    N = Lv / mv + (S_v0 + I_v0 - Lv / mv) * np.exp(-mv * times)
    N_mid = Lv / mv + (S_v0 + I_v0 - Lv / mv) * np.exp(-mv * (times[:-1] + 0.5 * h))

    I_v = I_v0 * np.exp(-mv * times)
    for it in range(1, cap + 1):
        spline = CubicSpline(times, I_v) if n_steps >= 3 else (lambda t: np.interp(t, times, I_v))
        lam_v, y = _sweep(params, ages, y0, h, n_steps, spline, params.Lambda_h)
        lam_spline = CubicSpline(times, lam_v) if n_steps >= 3 else (lambda t: np.interp(t, times, lam_v))
        lam_mid = lam_spline(times[:-1] + 0.5 * h)
        new = np.empty_like(I_v)
        new[0] = I_v0
        x = I_v0
        for n in range(n_steps):
            f = lambda lam, NN, xx: lam * (NN - xx) - mv * xx  # noqa: E731
            k1 = f(lam_v[n], N[n], x)
            k2 = f(lam_mid[n], N_mid[n], x + 0.5 * h * k1)
            k3 = f(lam_mid[n], N_mid[n], x + 0.5 * h * k2)
            k4 = f(lam_v[n + 1], N[n + 1], x + h * k3)
            x = x + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
            new[n + 1] = x
        change = float(np.max(np.abs(new - I_v)))
        I_v = new
        if change <= tol * max(1.0, float(np.max(np.abs(I_v)))):
            break
    else:
        raise OracleFailureError(f"Picard iteration did not converge in {cap} iterations "
                                 f"(last change {change:.3e})")

    cells = _cell_average_lattice(y, substeps, grid.n_age, h)
    I_final = float(I_v[-1])
    return SystemState(cells[0], cells[1], cells[2], float(N[-1]) - I_final, I_final, t_eval)


def _cell_average_lattice(y, substeps, n_age, h):
    """Average lattice values over each grid cell (Simpson when substeps is even)."""
    if substeps % 2 == 0:
        w = simpson_weights(substeps, h)
    else:
        w = np.full(substeps + 1, h)
        w[[0, -1]] *= 0.5
    w = w / (substeps * h)
    out = np.empty((3, n_age))
    for j in range(n_age):
        out[:, j] = y[:, j * substeps: (j + 1) * substeps + 1] @ w
    return out


def pfe_profile(params, I_v0, S_v0=None, a_max=200.0):
    """InitialProfile with continuum PFE humans, no infection, and I_v0 infected mosquitoes."""
    mesh = AgeMesh(a_max, 0.01)
    cum = CubicSpline(mesh.edges, mesh.cumulative(params.mu_h))

    def s0(a):
        return params.Lambda_h * np.exp(-cum(a))

    def zero(a):
        return np.zeros_like(np.asarray(a, dtype=float))

    return InitialProfile(s0, zero, zero, params.S_v0 if S_v0 is None else S_v0, I_v0)
