"""Age-integrated 5-compartment model for constant parameters.

Two integrators: one that repeats the finite-volume update order on the
scalar totals (so PDE and ODE share time-discretization error), and a
classical RK4 used as an accuracy baseline.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError, NumericalBlowupError
from .params import ModelParams
from .solver import Trajectory

METHODS = ("matched-semi-implicit", "rk4-reference")
ODE_COLUMNS = ("S_h", "I_h", "R_h", "S_v", "I_v")


@dataclass
class OdeState:
    S_h: float
    I_h: float
    R_h: float
    S_v: float
    I_v: float
    t: float = 0.0

    def as_array(self):
        return np.array([self.S_h, self.I_h, self.R_h, self.S_v, self.I_v])

    @classmethod
    def from_array(cls, y, t=0.0):
        return cls(*(float(v) for v in y), t=float(t))

    @classmethod
    def from_system_state(cls, state, da):
        s, i, r = state.totals(da)
        return cls(s, i, r, state.S_v, state.I_v, state.t)


def _rates(params):
    if isinstance(params, ModelParams):
        if not params.is_constant:
            raise InvalidParameterError("the ODE reduction needs constant age functions")
        return params.constants()
    return params


def ode_rhs(state, params):
    """Right-hand side as an array in (S_h, I_h, R_h, S_v, I_v) order."""
    c = _rates(params)
    y = state.as_array() if isinstance(state, OdeState) else np.asarray(state, dtype=float)
    return _rhs(y, c)


def _rhs(y, c):
    Sh, Ih, Rh, Sv, Iv = y
    inf_h = c.beta_v * Iv * Sh
    inf_v = c.beta_h * Ih * Sv
    return np.array([
        c.Lambda_h - inf_h - c.mu_h * Sh + c.r2 * Rh,
        inf_h - c.k * Ih,
        c.r1 * Ih - (c.r2 + c.mu_h) * Rh,
        c.Lambda_v - inf_v - c.mu_v * Sv,
        inf_v - c.mu_v * Iv,
    ])


def _semi_implicit_step(y, c, dt):
    Sh, Ih, Rh, Sv, Iv = y
    lam = c.beta_h * Ih
    Sv = (Sv + c.Lambda_v * dt) / (1.0 + dt * lam + c.mu_v * dt)
    Iv = (Iv + dt * lam * Sv) / (1.0 + dt * c.mu_v)
    Sh = (Sh + dt * c.Lambda_h + dt * c.r2 * Rh) / (1.0 + dt * c.beta_v * Iv + dt * c.mu_h)
    Ih = (Ih + dt * c.beta_v * Iv * Sh) / (1.0 + dt * c.k)
    Rh = (Rh + dt * c.r1 * Ih) / (1.0 + dt * (c.r2 + c.mu_h))
    return np.array([Sh, Ih, Rh, Sv, Iv])


def _rk4_step(y, c, dt):
    k1 = _rhs(y, c)
    k2 = _rhs(y + 0.5 * dt * k1, c)
    k3 = _rhs(y + 0.5 * dt * k2, c)
    k4 = _rhs(y + dt * k3, c)
    return y + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def ode_run(params, init, dt, T, method="matched-semi-implicit", sample_every=1):
    """Integrate from init.t for ceil(T/dt) steps of size dt.

    Returns a Trajectory with kind "ode"; its s, i, r columns are the
    scalar totals S_h, I_h, R_h.
    """
    if not dt > 0 or not T > 0:
        raise ValueError("dt and T must be positive")
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}, got {method!r}")
    c = _rates(params)
    advance = _semi_implicit_step if method == METHODS[0] else _rk4_step
    n_steps = int(np.ceil(T / dt - 1e-9))
    sample_every = max(1, int(sample_every))
    y = init.as_array()
    t0 = init.t
    times, rows = [t0], [y]
    for n in range(1, n_steps + 1):
        y = advance(y, c, dt)
        if not np.all(np.isfinite(y)):
            raise NumericalBlowupError("non-finite ODE state", index=int(np.argmax(~np.isfinite(y))),
                                       time=t0 + n * dt)
        if n % sample_every == 0 or n == n_steps:
            times.append(t0 + n * dt)
            rows.append(y)
    data = np.array(rows)
    Sh, Ih, Rh, Sv, Iv = data.T
    columns = {"s": Sh, "i": Ih, "r": Rh, "S_v": Sv, "I_v": Iv, "lambda_v": c.beta_h * Ih,
               "L0": np.full(len(times), np.nan)}
    meta = {"method": method, "dt": dt, "n_steps": n_steps, "human_columns": "scalar"}
    final = OdeState.from_array(y, times[-1])
    return Trajectory(np.array(times), columns, {}, meta, "ode", final)
