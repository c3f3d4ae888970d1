"""Lyapunov functional for the parasite-free equilibrium.

    L0 = int psi(a) i(a) da + g(S_v / S_v0) + I_v / S_v0,
    g(x) = x - ln x - 1,
    psi(a) = int_a^inf beta_h(s) exp(-int_a^s (mu_h + delta + r1)) ds.
"""

import numpy as np

from .quadrature import AgeMesh


def g(x):
    """x - ln(x) - 1, accurate near x = 1."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("g is only defined for positive arguments")
    y = x - 1.0
    return y - np.log1p(y)


def psi_profile(params, a_max, step):
    """psi at the edges of a uniform mesh, truncated at a_max."""
    mesh = AgeMesh(a_max, step)
    psi = mesh.backward_profile(params.beta_h(mesh.points), params.infection_exit)
    return mesh.edges, psi


class LyapunovFunctional:
    """L0 evaluated on finite-volume states of a fixed grid.

    psi is state-independent, so it is computed once per (params, grid):
    on a mesh `substeps` times finer than the grid, then averaged per cell
    with the trapezoid rule.
    """

    def __init__(self, params, grid, substeps=10):
        self.S_v0 = params.Lambda_v / params.mu_v
        self.da = grid.da
        substeps += substeps % 2
        edges, psi = psi_profile(params, grid.n_age * grid.da, grid.da / substeps)
        psi = psi[: grid.n_age * substeps + 1].reshape(-1)
        blocks = np.lib.stride_tricks.sliding_window_view(psi, substeps + 1)[::substeps]
        w = np.ones(substeps + 1)
        w[0] = w[-1] = 0.5
        self.psi_cells = blocks @ w / substeps

    def __call__(self, state):
        if not state.S_v > 0:
            raise ValueError(f"L0 needs S_v > 0, got {state.S_v}")
        infected = self.da * float(np.dot(self.psi_cells, state.i))
        return infected + float(g(state.S_v / self.S_v0)) + state.I_v / self.S_v0


def lyapunov_l0(state, params, grid, functional=None):
    """Convenience wrapper; pass a cached `functional` to avoid recomputing psi."""
    functional = functional or LyapunovFunctional(params, grid)
    return functional(state)
