"""Composite Gauss-Legendre quadrature on uniform age meshes.

Every improper age integral in the package is truncated at ``a_max`` and
evaluated on an :class:`AgeMesh`.  The mesh exposes cell integrals,
running (cumulative) integrals at the cell edges, and "partial" integrals
from a cell's left edge to each of its Gauss points, which is what the
survival-weighted profiles below need.
"""

import numpy as np

GAUSS_ORDER = 5
_X, _W = np.polynomial.legendre.leggauss(GAUSS_ORDER)


def n_cells(length, step):
    """Number of cells of width `step` covering [0, length]."""
    x = length / step
    nearest = round(x)
    if abs(x - nearest) <= 1e-8 * max(1.0, x):
        return int(nearest)
    return int(np.ceil(x))


def gauss_cells(edges):
    """Gauss points and weights for each cell of `edges`, shape (n, Q)."""
    edges = np.asarray(edges, dtype=float)
    left = edges[:-1, None]
    width = np.diff(edges)[:, None]
    points = left + width * (_X + 1.0) / 2.0
    weights = width * _W / 2.0
    return points, weights


def simpson_weights(n, step):
    """Composite Simpson weights for n+1 equispaced nodes (n even)."""
    if n % 2:
        raise ValueError(f"Simpson's rule needs an even number of intervals, got {n}")
    w = np.ones(n + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w * step / 3.0


class AgeMesh:
    """Uniform mesh of [0, a_max] with Gauss-Legendre points in each cell.

    The cell count is rounded up to an even number so that Simpson's rule
    applies to values sampled at the edges.
    """

    def __init__(self, a_max, step):
        if step <= 0 or a_max <= 0:
            raise ValueError("a_max and step must be positive")
        n = n_cells(a_max, step)
        n += n % 2
        self.step = float(step)
        self.n = n
        self.edges = self.step * np.arange(n + 1)
        self.a_max = float(self.edges[-1])
        self.points, self.weights = gauss_cells(self.edges)
        # nested rule on [left, x_q] for every Gauss point x_q
        left = self.edges[:-1, None, None]
        span = (self.points - self.edges[:-1, None])[:, :, None]
        self._sub_points = left + span * (_X + 1.0) / 2.0
        self._sub_weights = span * _W / 2.0
        self._simpson = simpson_weights(n, self.step)

    def cell_integrals(self, f):
        return (f(self.points) * self.weights).sum(axis=1)

    def cumulative(self, f):
        """Running integral of f from 0 to each edge (length n+1)."""
        return np.concatenate([[0.0], np.cumsum(self.cell_integrals(f))])

    def partial(self, f):
        """Integral of f from each cell's left edge to each Gauss point, (n, Q)."""
        return (f(self._sub_points) * self._sub_weights).sum(axis=2)

    def survival(self, hazard):
        """exp(-int_0^a hazard) at the edges and at the Gauss points."""
        cum = self.cumulative(hazard)
        at_points = np.exp(-(cum[:-1, None] + self.partial(hazard)))
        return np.exp(-cum), at_points

    def integrate_edges(self, values):
        """Simpson's rule for values sampled at the edges."""
        return float(np.dot(self._simpson, values))

    def integrate_points(self, values):
        """Gauss rule for values sampled at the Gauss points."""
        return float((values * self.weights).sum())

    def forward_profile(self, source_points, hazard):
        """Solve phi' = source - hazard * phi, phi(0) = 0, at the edges.

        `source_points` holds the source sampled at the Gauss points; the
        local step uses the exact survival factor across each cell.
        """
        cell_h = self.cell_integrals(hazard)
        part = self.partial(hazard)
        decay = np.exp(-cell_h)
        # int_{x_q}^{right} hazard = cell_h - part
        inject = (source_points * np.exp(-(cell_h[:, None] - part)) * self.weights).sum(axis=1)
        phi = np.empty(self.n + 1)
        phi[0] = 0.0
        acc = 0.0
        for m in range(self.n):
            acc = acc * decay[m] + inject[m]
            phi[m + 1] = acc
        return phi

    def backward_profile(self, source_points, hazard):
        """Solve psi' = hazard * psi - source, psi(a_max) = 0, at the edges.

        psi(a) = int_a^{a_max} source(s) exp(-int_a^s hazard) ds.
        """
        cell_h = self.cell_integrals(hazard)
        part = self.partial(hazard)
        decay = np.exp(-cell_h)
        inject = (source_points * np.exp(-part) * self.weights).sum(axis=1)
        psi = np.empty(self.n + 1)
        psi[-1] = 0.0
        acc = 0.0
        for m in range(self.n - 1, -1, -1):
            acc = acc * decay[m] + inject[m]
            psi[m] = acc
        return psi

