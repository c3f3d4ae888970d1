"""Age/time discretization shared by the solver and the diagnostics."""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import InvalidGridError
from .quadrature import n_cells


@dataclass(frozen=True)
class Grid:
    """Uniform age cells K_j = [(j-1)da, j*da) and time levels n*dt.

    The upwind coefficient 1 - dt/da must stay nonnegative, so dt <= da
    is enforced here rather than left to the caller.
    """

    da: float = 0.05
    dt: float = 0.05
    a_max: float = 100.0
    T: float = 200.0

    def __post_init__(self):
        for name in ("da", "dt", "a_max", "T"):
            v = getattr(self, name)
            if not np.isfinite(v) or v <= 0:
                raise InvalidGridError(f"{name} must be a positive finite number, got {v!r}")
        if self.a_max < 10 * self.da:
            raise InvalidGridError(f"a_max={self.a_max} must be at least 10*da={10 * self.da}")
        if self.T < self.dt:
            raise InvalidGridError(f"T={self.T} must be at least dt={self.dt}")
        if self.dt > self.da * (1 + 1e-12):
            raise InvalidGridError(
                f"dt={self.dt} exceeds da={self.da}: the upwind coefficient 1 - dt/da "
                "would be negative and positivity is lost")

    @property
    def n_age(self):
        return n_cells(self.a_max, self.da)

    @property
    def n_steps(self):
        return n_cells(self.T, self.dt)

    @property
    def courant(self):
        return self.dt / self.da

    @cached_property
    def edges(self):
        return self.da * np.arange(self.n_age + 1)

    @cached_property
    def centers(self):
        return (np.arange(1, self.n_age + 1) - 0.5) * self.da

    def refined(self, factor=2):
        """Grid with da and dt divided by `factor`."""
        return Grid(self.da / factor, self.dt / factor, self.a_max, self.T)

    def with_horizon(self, T):
        return Grid(self.da, self.dt, self.a_max, T)
