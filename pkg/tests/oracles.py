"""Independent reference computations used only by the tests."""

import math

import numpy as np
from scipy.integrate import solve_ivp


def adaptive_simpson(f, a, b, tol=1e-10, max_depth=50):
    """Recursive adaptive Simpson quadrature of a scalar function."""
    def simpson(fa, fm, fb, lo, hi):
        return (hi - lo) / 6.0 * (fa + 4.0 * fm + fb)

    def recurse(lo, hi, fa, fm, fb, whole, eps, depth):
        mid = 0.5 * (lo + hi)
        lm, rm = 0.5 * (lo + mid), 0.5 * (mid + hi)
        flm, frm = f(lm), f(rm)
        left = simpson(fa, flm, fm, lo, mid)
        right = simpson(fm, frm, fb, mid, hi)
        if depth <= 0 or abs(left + right - whole) <= 15.0 * eps:
            return left + right + (left + right - whole) / 15.0
        return (recurse(lo, mid, fa, flm, fm, left, eps / 2, depth - 1)
                + recurse(mid, hi, fm, frm, fb, right, eps / 2, depth - 1))

    fa, fb, fm = f(a), f(b), f(0.5 * (a + b))
    return recurse(a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, max_depth)


def r0_squared_by_ode(params, a_max, rtol=1e-11):
    """R0^2 from the age ODE phi' = beta_v s_h0 - k phi, accumulated with beta_h phi.

    A different route from the tensor-product quadrature: adaptive RK on
    the augmented system (int mu_h, phi, int beta_h phi).
    """
    def rhs(a, y):
        M, phi, _ = y
        s0 = params.Lambda_h * math.exp(-M)
        return [float(params.mu_h(a)),
                float(params.beta_v(a)) * s0 - float(params.infection_exit(a)) * phi,
                float(params.beta_h(a)) * phi]

    sol = solve_ivp(rhs, (0.0, a_max), [0.0, 0.0, 0.0], method="DOP853", rtol=rtol, atol=1e-14)
    return params.S_v0 / params.mu_v * sol.y[2, -1]


def life_expectancy_by_quad(mu_h, a_max):
    """int_0^a_max exp(-int_0^a mu_h) by adaptive Simpson, nested inner integral."""
    return adaptive_simpson(lambda a: math.exp(-float(mu_h.integral(a))), 0.0, a_max, tol=1e-9)


def brute_force_char_poly(J):
    """Characteristic polynomial coefficients from eigenvalues (highest degree first)."""
    return np.real(np.poly(np.linalg.eigvals(J)))
