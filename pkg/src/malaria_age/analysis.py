"""Basic reproduction number, equilibria, characteristic function, stability.

All improper age integrals are truncated at ``a_max``; integrands are
bounded by const * exp(-mu0 * a), so the neglected tail is reported next
to each result.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize
from scipy.interpolate import CubicSpline

from .errors import BracketError, InvalidParameterError
from .lyapunov import LyapunovFunctional, g as lyapunov_g, lyapunov_l0, psi_profile  # noqa: F401
from .params import DEFAULT_A_MAX, ModelParams
from .quadrature import AgeMesh, simpson_weights

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class QuadSettings:
    """step: node spacing of the R0 tensor rule; mesh_step: Gauss mesh for profiles."""

    step: float = 0.025
    mesh_step: float = 0.01
    tolerance: float = 1e-4


DEFAULT_QUAD = QuadSettings()


@dataclass
class R0Report:
    R0: float
    R0_squared: float
    quadrature_error_estimate: float
    a_max: float
    tail_bound: float
    warning: str = ""


@dataclass
class EquilibriumReport:
    kind: str
    exists: bool = True
    values: dict = field(default_factory=dict)
    profiles: dict = field(default_factory=dict)
    residual: float = 0.0
    profile_residual: float = 0.0
    root: float = float("nan")
    bracket: tuple = ()
    R0: float = float("nan")


@dataclass
class StabilityReport:
    a3: float
    a2: float
    a1: float
    a0: float
    b1: float
    c0: float
    verdict: str
    routh_verdict: str
    max_real_eigenvalue: float = float("nan")
    eigenvalues: np.ndarray = None
    discrepancy: bool = False


def _inf_mu(params, a_max):
    return float(np.min(params.mu_h(np.linspace(0.0, a_max, 4001))))


def _sup(f, a_max):
    return float(np.max(f(np.linspace(0.0, a_max, 4001))))


# --- R0 ---------------------------------------------------------------------------

def _tensor_integral(params, a_max, step):
    """int_0^A int_0^A beta_h(x+s) beta_v(x) s_h0(x) e^{-int_x^{x+s} k} dx ds.

    Composite Simpson in both variables on a shared uniform node set, so
    x + s always lands on a node and the survival exponent is a difference
    of one accurate running integral.
    """
    n = int(np.ceil(a_max / step))
    n += (-n) % 4
    h = a_max / n
    mesh = AgeMesh(2 * a_max, h)
    nodes = mesh.edges
    K = mesh.cumulative(params.infection_exit)
    M = mesh.cumulative(params.mu_h)
    bh = params.beta_h(nodes)
    front = params.beta_v(nodes[: n + 1]) * params.Lambda_h * np.exp(-M[: n + 1])

    def level(stride):
        idx = np.arange(0, n + 1, stride)
        w = simpson_weights(len(idx) - 1, h * stride)
        fw = front[idx] * w
        Kx = K[idx]
        total = 0.0
        for q, wq in zip(idx, w):
            total += wq * np.dot(fw, bh[idx + q] * np.exp(Kx - K[idx + q]))
        return total

    return level(1), level(2)


def _r0_tail(params, a_max):
    """Bound on the double integral outside [0, a_max]^2.

    The integrand is at most sup(beta_h) sup(beta_v) s_h0(x) e^{-k0 s}, with
    k0 = inf k, and mu_h >= mu0 is assumed to persist beyond a_max.
    """
    mu0 = _inf_mu(params, a_max)
    k0 = float(np.min(params.infection_exit(np.linspace(0.0, a_max, 4001))))
    mesh = AgeMesh(a_max, 0.05)
    surv, _ = mesh.survival(params.mu_h)
    mass = params.Lambda_h * (mesh.integrate_edges(surv) + surv[-1] / mu0)
    beyond = params.Lambda_h * surv[-1] / mu0
    sup = _sup(params.beta_h, 2 * a_max) * _sup(params.beta_v, a_max)
    return sup * (beyond / k0 + mass * np.exp(-k0 * a_max) / k0)


def r0(params, a_max=DEFAULT_A_MAX, quad=DEFAULT_QUAD):
    """R0 = sqrt((S_v0/mu_v) * double integral), with a two-level error estimate."""
    fine, coarse = _tensor_integral(params, a_max, quad.step)
    extrapolated = fine + (fine - coarse) / 15.0
    scale = params.S_v0 / params.mu_v
    tail = scale * _r0_tail(params, a_max)
    R0_sq = max(scale * extrapolated, 0.0)
    R0 = float(np.sqrt(R0_sq))
    abs_err = scale * abs(fine - coarse) / 15.0 + tail
    rel = 0.5 * abs_err / R0_sq if R0_sq > 0 else 0.0
    warning = ""
    if rel > quad.tolerance:
        warning = f"R0 quadrature error estimate {rel:.2e} exceeds tolerance {quad.tolerance:.1e}"
        warnings.warn(warning, stacklevel=2)
    return R0Report(R0, R0_sq, rel, a_max, tail, warning)


def r0_closed_form(rates):
    """Constant-parameter R0."""
    S_v0 = rates.Lambda_v / rates.mu_v
    S_h0 = rates.Lambda_h / rates.mu_h
    return float(np.sqrt(rates.beta_h * S_v0 * rates.beta_v * S_h0 / (rates.k * rates.mu_v)))


# --- parasite-free equilibrium ---------------------------------------------------------

def pfe(params, a_max=DEFAULT_A_MAX, quad=DEFAULT_QUAD):
    mesh = AgeMesh(a_max, quad.mesh_step)
    surv_e, surv_p = mesh.survival(params.mu_h)
    s0 = params.Lambda_h * surv_e
    # integral form: s0(a) - Lambda_h + int_0^a mu_h s0 = 0
    cum = np.concatenate([[0.0], np.cumsum(
        (params.mu_h(mesh.points) * params.Lambda_h * surv_p * mesh.weights).sum(axis=1))])
    residual = float(np.max(np.abs(s0 - params.Lambda_h + cum)) / params.Lambda_h)
    S_v0 = params.Lambda_v / params.mu_v
    return EquilibriumReport(
        kind="parasite-free",
        values={"S_h": mesh.integrate_edges(s0), "I_h": 0.0, "R_h": 0.0, "S_v": S_v0, "I_v": 0.0},
        profiles={"a": mesh.edges, "s": s0, "i": np.zeros_like(s0), "r": np.zeros_like(s0)},
        residual=residual,
    )


# --- characteristic function --------------------------------------------------------------

def _infected_response(params, mesh, susceptible_hazard, exit_shift=0.0):
    """phi(a) = int_0^a beta_v(s) s(s) e^{-int_s^a (k + shift)} ds with s = Lambda_h e^{-int hazard}."""
    _, surv_p = mesh.survival(susceptible_hazard)
    source = params.beta_v(mesh.points) * params.Lambda_h * surv_p
    if exit_shift:
        hazard = lambda a: params.infection_exit(a) + exit_shift  # noqa: E731
    else:
        hazard = params.infection_exit
    return mesh.forward_profile(source, hazard)


def characteristic_g(lam, params, a_max=DEFAULT_A_MAX, quad=DEFAULT_QUAD):
    """g(lam) = (S_v0/mu_v) int beta_h(a) int_0^a beta_v s_h0 e^{-int_s^a (k + lam)} ds da."""
    k0 = float(np.min(params.infection_exit(np.linspace(0.0, a_max, 4001))))
    if not lam > -k0:
        raise InvalidParameterError(f"g(lambda) needs lambda > -inf k = {-k0}")
    mesh = AgeMesh(a_max, quad.mesh_step)
    phi = _infected_response(params, mesh, params.mu_h, exit_shift=lam)
    return params.S_v0 / params.mu_v * mesh.integrate_edges(params.beta_h(mesh.edges) * phi)


def dominant_real_root(params, a_max=DEFAULT_A_MAX, quad=DEFAULT_QUAD):
    """Unique real root of g(lam) = 1 on (-k0, inf), k0 = inf k; positive iff R0 > 1."""
    k0 = float(np.min(params.infection_exit(np.linspace(0.0, a_max, 4001))))
    lo = -k0 * (1 - 1e-9)
    f = lambda x: characteristic_g(x, params, a_max, quad) - 1.0  # noqa: E731
    if f(lo) < 0:
        raise BracketError("g(lambda) < 1 on the whole admissible range", f_lo=f(lo))
    hi = 1.0
    while f(hi) > 0:
        hi *= 4.0
        if hi > 1e8:
            raise BracketError("no upper bracket for g(lambda) = 1")
    return optimize.brentq(f, lo, hi, xtol=1e-12, rtol=1e-12)


# --- endemic equilibrium, r2 = 0 -----------------------------------------------------------

def endemic_root_function(params, a_max=DEFAULT_A_MAX, quad=DEFAULT_QUAD):
    """The decreasing map f with f(x*) = 1 at x* = int beta_h i_h*."""
    mesh = AgeMesh(a_max, quad.mesh_step)
    bh_edges = params.beta_h(mesh.edges)
    Lv, mv = params.Lambda_v, params.mu_v

    def f(x):
        I_v = Lv * x / (mv * (mv + x))
        phi = _infected_response(params, mesh, lambda a: params.mu_h(a) + params.beta_v(a) * I_v)
        return Lv / (mv * (mv + x)) * mesh.integrate_edges(bh_edges * phi)

    return f, mesh


def endemic_pde_r2zero(params, a_max=DEFAULT_A_MAX, quad=DEFAULT_QUAD, rtol=1e-10):
    """Unique endemic equilibrium of the PDE without waning immunity."""
    if not params.has_no_waning:
        raise InvalidParameterError("endemic_pde_r2zero requires r2 == 0")
    f, mesh = endemic_root_function(params, a_max, quad)
    f0 = f(0.0)
    R0 = float(np.sqrt(f0))
    if f0 <= 1.0:
        return EquilibriumReport(kind="endemic-pde-r2zero", exists=False, R0=R0)
    mu0 = _inf_mu(params, a_max)
    x_hi = _sup(params.beta_h, a_max) * params.Lambda_h / mu0
    f_hi = f(x_hi)
    if f_hi >= 1.0:
        raise BracketError(f"f does not cross 1 on [0, {x_hi}]", f_lo=f0, f_hi=f_hi)
    x = optimize.bisect(lambda x: f(x) - 1.0, 0.0, x_hi, xtol=1e-300, rtol=rtol, maxiter=400)

    Lv, mv = params.Lambda_v, params.mu_v
    I_v = Lv * x / (mv * (mv + x))
    S_v = Lv / (mv + x)
    hazard = lambda a: params.mu_h(a) + params.beta_v(a) * I_v  # noqa: E731
    surv_e, _ = mesh.survival(hazard)
    s = params.Lambda_h * surv_e
    i = I_v * _infected_response(params, mesh, hazard)
    i_points = CubicSpline(mesh.edges, i)(mesh.points)
    r = mesh.forward_profile(params.r1(mesh.points) * i_points, params.mu_h)

    x_check = mesh.integrate_edges(params.beta_h(mesh.edges) * i)
    residual = max(abs(f(x) - 1.0),
                   abs(Lv - S_v * x - mv * S_v) / Lv,
                   abs(S_v * x - mv * I_v) / max(S_v * x, 1e-300),
                   abs(x_check - x) / x)
    profile_residual = _profile_residual(params, mesh, s, i, r, I_v)
    values = {"S_h": mesh.integrate_edges(s), "I_h": mesh.integrate_edges(i),
              "R_h": mesh.integrate_edges(r), "S_v": S_v, "I_v": I_v}
    return EquilibriumReport(
        kind="endemic-pde-r2zero", values=values,
        profiles={"a": mesh.edges, "s": s, "i": i, "r": r},
        residual=residual, profile_residual=profile_residual,
        root=x, bracket=(0.0, x_hi), R0=R0)


def _profile_residual(params, mesh, s, i, r, I_v):
    """Max relative defect of the age ODEs, integral form, trapezoid rule."""
    a = mesh.edges
    h = mesh.step

    def cumtrap(y):
        return np.concatenate([[0.0], np.cumsum(0.5 * h * (y[1:] + y[:-1]))])

    lam_h = params.beta_v(a) * I_v
    ds = s - params.Lambda_h + cumtrap((lam_h + params.mu_h(a)) * s)
    di = i - cumtrap(lam_h * s - params.infection_exit(a) * i)
    dr = r - cumtrap(params.r1(a) * i - params.mu_h(a) * r)
    scale = params.Lambda_h
    return float(max(np.abs(ds).max(), np.abs(di).max(), np.abs(dr).max()) / scale)


# --- constant-parameter ODE equilibrium and stability ----------------------------------------

def _rates(params):
    return params.constants() if isinstance(params, ModelParams) else params


def endemic_ode(params):
    """Closed-form endemic equilibrium of the age-integrated ODE system.

    Returns (EquilibriumReport, StabilityReport or None).
    """
    c = _rates(params)
    R0 = r0_closed_form(c)
    if R0 <= 1.0:
        return EquilibriumReport(kind="endemic-ode", exists=False, R0=R0), None
    den = (c.beta_v * c.mu_v * c.k * (c.mu_h + c.r2) + c.Lambda_h * c.beta_v * c.beta_h * (c.mu_h + c.r2)
           - c.beta_v * c.mu_v * c.r1 * c.r2)
    if den <= 0:
        raise InvalidParameterError(f"endemic constant c has nonpositive denominator {den}")
    cc = c.mu_h * c.mu_v * c.k * (c.mu_h + c.r2) / den
    I_v = cc * (R0 ** 2 - 1.0)
    S_v = c.Lambda_v / c.mu_v - I_v
    I_h = c.mu_v * I_v / (c.beta_h * S_v)
    R_h = c.r1 * I_h / (c.r2 + c.mu_h)
    S_h = (c.Lambda_h + c.r2 * R_h) / (c.beta_v * I_v + c.mu_h)
    values = {"S_h": S_h, "I_h": I_h, "R_h": R_h, "S_v": S_v, "I_v": I_v}
    report = EquilibriumReport(kind="endemic-ode", values=values,
                               residual=ode_equilibrium_residual(c, values), R0=R0)
    stability = routh_hurwitz(c, report) if c.r2 == 0 else numerical_stability(c, report)
    return report, stability


def ode_equilibrium_residual(c, v):
    """Max relative defect of the five steady-state balance equations."""
    pairs = [
        (c.Lambda_h + c.r2 * v["R_h"], (c.beta_v * v["I_v"] + c.mu_h) * v["S_h"]),
        (c.beta_v * v["I_v"] * v["S_h"], c.k * v["I_h"]),
        (c.r1 * v["I_h"], (c.r2 + c.mu_h) * v["R_h"]),
        (c.Lambda_v, c.beta_h * v["S_v"] * v["I_h"] + c.mu_v * v["S_v"]),
        (c.beta_h * v["S_v"] * v["I_h"], c.mu_v * v["I_v"]),
    ]
    return max(abs(a - b) / max(abs(a), abs(b), 1e-300) for a, b in pairs)


def ode_jacobian(c, v):
    """Jacobian of the age-integrated system at state v, order (S_h, I_h, R_h, S_v, I_v)."""
    Sh, Ih, Sv, Iv = v["S_h"], v["I_h"], v["S_v"], v["I_v"]
    return np.array([
        [-c.beta_v * Iv - c.mu_h, 0.0, c.r2, 0.0, -c.beta_v * Sh],
        [c.beta_v * Iv, -c.k, 0.0, 0.0, c.beta_v * Sh],
        [0.0, c.r1, -(c.r2 + c.mu_h), 0.0, 0.0],
        [0.0, -c.beta_h * Sv, 0.0, -c.beta_h * Ih - c.mu_v, 0.0],
        [0.0, c.beta_h * Sv, 0.0, c.beta_h * Ih, -c.mu_v],
    ])


def cubic_coefficients(c, v):
    """a3..a0 of p(lam) = (lam+k)(lam+mu_v+beta_h I_h*)(lam+mu_h+beta_v I_v*) - beta_h beta_v S_h* S_v* (lam+mu_h)."""
    A = c.k
    B = c.mu_v + c.beta_h * v["I_h"]
    C = c.mu_h + c.beta_v * v["I_v"]
    P = c.beta_h * c.beta_v * v["S_h"] * v["S_v"]
    return 1.0, A + B + C, A * B + A * C + B * C - P, A * B * C - c.mu_h * P


def routh_hurwitz(params, equilibrium):
    """Routh-Hurwitz certificate for the r2 = 0 endemic equilibrium, checked against the spectrum."""
    c = _rates(params)
    if c.r2 != 0:
        raise InvalidParameterError("the cubic certificate applies only when r2 == 0")
    a3, a2, a1, a0 = cubic_coefficients(c, equilibrium.values)
    v = equilibrium.values
    a1_scale = (c.k * (2 * c.mu_v + c.mu_h) + c.mu_v * c.mu_h
                + c.beta_h * c.beta_v * v["S_h"] * v["S_v"] + abs(a2) ** 2)
    if abs(a1) <= 1e-12 * a1_scale:
        b1 = float("nan")
        routh = "inconclusive"
    else:
        b1 = a2 - a3 * a0 / a1
        routh = "LAS" if min(a2, a1, a0, b1) > 0 else "unstable"
    c0 = a0
    eig = np.linalg.eigvals(ode_jacobian(c, equilibrium.values))
    max_re = float(eig.real.max())
    spectral = "LAS" if max_re < 0 else "unstable"
    discrepancy = routh != spectral
    if discrepancy:
        logger.warning("Routh-Hurwitz verdict %s disagrees with spectrum (max Re %.3e)", routh, max_re)
    return StabilityReport(a3, a2, a1, a0, b1, c0, spectral if discrepancy else routh, routh,
                           max_re, eig, discrepancy)


def routh_first_column(coeffs):
    """First column of the Routh array for a real polynomial (highest degree first)."""
    coeffs = [float(x) for x in coeffs]
    rows = [coeffs[0::2], coeffs[1::2]]
    width = len(rows[0])
    rows = [r + [0.0] * (width - len(r)) for r in rows]
    while len(rows) < len(coeffs):
        up, lo = rows[-2], rows[-1]
        if lo[0] == 0:
            return [r[0] for r in rows] + [float("nan")]
        new = [(lo[0] * up[j + 1] - up[0] * lo[j + 1]) / lo[0] for j in range(width - 1)] + [0.0]
        rows.append(new)
    return [r[0] for r in rows]


def numerical_stability(params, equilibrium):
    """Stability of an endemic ODE equilibrium with r2 > 0 (no closed-form certificate).

    The Routh test is applied to the characteristic polynomial of the
    Jacobian computed numerically; a3..a0 are not defined in this case.
    """
    c = _rates(params)
    J = ode_jacobian(c, equilibrium.values)
    col = routh_first_column(np.poly(J))
    routh = "inconclusive" if any(np.isnan(col)) else ("LAS" if min(col) > 0 else "unstable")
    eig = np.linalg.eigvals(J)
    max_re = float(eig.real.max())
    spectral = "LAS" if max_re < 0 else "unstable"
    nan = float("nan")
    return StabilityReport(1.0, nan, nan, nan, nan, nan, spectral, routh, max_re, eig,
                           routh != spectral and routh != "inconclusive")
