"""Model parameters: age-dependent rate functions, reference (table1) set, cell averages.

Age functions are small frozen dataclasses from a closed set of named
families so they can be written to and read from config files without an
expression interpreter.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameterError
from .quadrature import AgeMesh, gauss_cells

# reference constants
LAMBDA_H = 3.37e4
MU_V = 365.0 / 20.0
THETA = 0.6 * 365.0
BETA_V_TILDE = 0.022
G0_SCALE = 22.7
G0_RATE = 0.0934
G_SCALE = 7.1e-2
G_POWER = 0.302

DEFAULT_A_MAX = 100.0


class AgeFunction:
    """Nonnegative function of age (years)."""

    family = ""

    def __call__(self, a):
        raise NotImplementedError

    def params(self):
        """Family parameters as plain Python values (nested functions as dicts)."""
        out = {}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if isinstance(v, AgeFunction):
                v = v.to_descriptor()
            elif isinstance(v, tuple):
                v = [list(x) if isinstance(x, tuple) else x for x in v]
            out[f.name] = v
        return out

    def to_descriptor(self):
        return {"family": self.family, **self.params()}

    @property
    def is_constant(self):
        return False


@dataclass(frozen=True)
class Constant(AgeFunction):
    value: float
    family = "constant"

    def __call__(self, a):
        return np.full(np.shape(a), float(self.value))

    @property
    def is_constant(self):
        return True


@dataclass(frozen=True)
class ExpSum(AgeFunction):
    """scale * sum_k c_k exp(rate_k * a)"""

    scale: float
    terms: tuple
    family = "exp_sum"

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple((float(c), float(k)) for c, k in self.terms))

    def __call__(self, a):
        a = np.asarray(a, dtype=float)
        total = np.zeros_like(a)
        for c, k in self.terms:
            total = total + c * np.exp(k * a)
        return self.scale * total

    def integral(self, a):
        """Closed-form antiderivative from 0 to a."""
        a = np.asarray(a, dtype=float)
        total = np.zeros_like(a)
        for c, k in self.terms:
            total = total + (c * a if k == 0 else c / k * np.expm1(k * a))
        return self.scale * total


@dataclass(frozen=True)
class Logistic(AgeFunction):
    """top / (1 + b exp(-rate * a)), with b > -1 so the denominator stays positive."""

    top: float
    b: float
    rate: float
    family = "logistic"

    def __post_init__(self):
        if self.b <= -1:
            raise InvalidParameterError(f"logistic needs b > -1, got {self.b}")

    def __call__(self, a):
        return self.top / (1.0 + self.b * np.exp(-self.rate * np.asarray(a, dtype=float)))


@dataclass(frozen=True)
class GammaLike(AgeFunction):
    """scale * a * exp(-rate * a)"""

    scale: float
    rate: float
    family = "gamma_like"

    def __call__(self, a):
        a = np.asarray(a, dtype=float)
        return self.scale * a * np.exp(-self.rate * a)

    @property
    def argmax(self):
        return 1.0 / self.rate

    @property
    def sup(self):
        return self.scale / (self.rate * math.e)


@dataclass(frozen=True)
class PowerOf(AgeFunction):
    """scale * inner(a) ** power"""

    scale: float
    power: float
    inner: AgeFunction
    family = "power_of"

    def __call__(self, a):
        return self.scale * np.power(self.inner(a), self.power)


@dataclass(frozen=True)
class Tabulated(AgeFunction):
    """Piecewise-linear interpolation, last value held outside the table."""

    ages: tuple
    values: tuple
    family = "table"

    def __post_init__(self):
        ages = tuple(float(x) for x in self.ages)
        values = tuple(float(x) for x in self.values)
        if len(ages) != len(values) or len(ages) < 1:
            raise InvalidParameterError("table needs equally many ages and values (at least one)")
        if any(b <= a for a, b in zip(ages, ages[1:])):
            raise InvalidParameterError("table ages must be strictly increasing")
        if any(v < 0 or not math.isfinite(v) for v in values):
            raise InvalidParameterError("table values must be finite and nonnegative")
        object.__setattr__(self, "ages", ages)
        object.__setattr__(self, "values", values)

    def __call__(self, a):
        return np.interp(np.asarray(a, dtype=float), self.ages, self.values)


FAMILIES = {cls.family: cls for cls in (Constant, ExpSum, Logistic, GammaLike, PowerOf, Tabulated)}


def age_function_from_descriptor(desc):
    """Inverse of AgeFunction.to_descriptor (also accepts bare numbers)."""
    if isinstance(desc, AgeFunction):
        return desc
    if isinstance(desc, (int, float)):
        return Constant(float(desc))
    desc = dict(desc)
    family = desc.pop("family", None)
    if family not in FAMILIES:
        raise InvalidParameterError(f"unknown age-function family {family!r}; "
                                    f"expected one of {sorted(FAMILIES)}")
    cls = FAMILIES[family]
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(desc) - names
    missing = names - set(desc)
    if unknown or missing:
        raise InvalidParameterError(
            f"{family}: unknown parameters {sorted(unknown)}, missing {sorted(missing)}")
    if "inner" in desc:
        desc["inner"] = age_function_from_descriptor(desc["inner"])
    try:
        return cls(**desc)
    except TypeError as exc:
        raise InvalidParameterError(f"{family}: {exc}") from None


RATE_NAMES = ("mu_h", "delta", "r1", "r2", "beta_h", "beta_v")


@dataclass(frozen=True)
class ModelParams:
    """Recruitment and death scalars plus the six age-dependent rates (per year)."""

    Lambda_h: float
    Lambda_v: float
    mu_v: float
    mu_h: AgeFunction
    delta: AgeFunction
    r1: AgeFunction
    r2: AgeFunction
    beta_h: AgeFunction
    beta_v: AgeFunction

    def replace(self, **changes):
        for k in RATE_NAMES:
            if k in changes:
                changes[k] = age_function_from_descriptor(changes[k])
        return dataclasses.replace(self, **changes)

    @property
    def is_constant(self):
        return all(getattr(self, k).is_constant for k in RATE_NAMES)

    @property
    def has_no_waning(self):
        """True when r2 is identically zero."""
        return isinstance(self.r2, Constant) and self.r2.value == 0.0

    def constants(self):
        """The six rates as floats; only for constant-parameter sets."""
        if not self.is_constant:
            raise InvalidParameterError("parameter set has age-dependent rates")
        return ConstantRates(self.Lambda_h, self.Lambda_v, self.mu_v,
                             *(getattr(self, k).value for k in RATE_NAMES))

    @property
    def S_v0(self):
        return self.Lambda_v / self.mu_v

    def infection_exit(self, a):
        """mu_h + delta + r1, the exit rate from the infected class."""
        return self.mu_h(a) + self.delta(a) + self.r1(a)

    def to_descriptor(self):
        out = {"Lambda_h": self.Lambda_h, "Lambda_v": self.Lambda_v, "mu_v": self.mu_v}
        for k in RATE_NAMES:
            out[k] = getattr(self, k).to_descriptor()
        return out

    @classmethod
    def from_descriptor(cls, desc):
        desc = dict(desc)
        for k in RATE_NAMES:
            desc[k] = age_function_from_descriptor(desc[k])
        return cls(**desc)

    def digest(self):
        """Stable short hash of the parameter set."""
        text = json.dumps(self.to_descriptor(), sort_keys=True, default=float)
        return hashlib.sha256(text.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class ConstantRates:
    Lambda_h: float
    Lambda_v: float
    mu_v: float
    mu_h: float
    delta: float
    r1: float
    r2: float
    beta_h: float
    beta_v: float

    @property
    def k(self):
        return self.mu_h + self.delta + self.r1


def constant_params(Lambda_h, Lambda_v, mu_v, mu_h, delta, r1, r2, beta_h, beta_v):
    return ModelParams(Lambda_h, Lambda_v, mu_v, Constant(mu_h), Constant(delta),
                       Constant(r1), Constant(r2), Constant(beta_h), Constant(beta_v))


# --- reference set -----------------------------------------------------------------

def table1_mortality():
    return ExpSum(5.8, ((2e-3, 0.0), (9e-2, -2.1), (1e-4, 0.09)))


def table1_gametocytes():
    """G0(a), mean gametocyte count at age a."""
    return GammaLike(G0_SCALE, G0_RATE)


def life_expectancy_integral(mu_h, a_max=DEFAULT_A_MAX):
    """int_0^a_max exp(-int_0^s mu_h) ds, and the analytic tail bound."""
    mesh = AgeMesh(a_max, 0.01)
    surv, _ = mesh.survival(mu_h)
    value = mesh.integrate_edges(surv)
    mu0 = float(np.min(mu_h(mesh.edges)))
    tail = surv[-1] / mu0
    return value, tail


def table1_params(Lambda_v, a_max=DEFAULT_A_MAX):
    """Reference (table1 preset) parameter set for a given mosquito recruitment Lambda_v."""
    if not Lambda_v > 0:
        raise InvalidParameterError(f"Lambda_v must be positive, got {Lambda_v}")
    mu_h = table1_mortality()
    life, _ = life_expectancy_integral(mu_h, a_max)
    D = LAMBDA_H * life
    g0 = table1_gametocytes()
    beta_h = PowerOf(THETA * G_SCALE / D, G_POWER, g0)
    beta_v = GammaLike(THETA * BETA_V_TILDE * G0_SCALE / (g0.sup * D), G0_RATE)
    return ModelParams(
        Lambda_h=LAMBDA_H,
        Lambda_v=float(Lambda_v),
        mu_v=MU_V,
        mu_h=mu_h,
        delta=ExpSum(1e-3, ((0.658, -0.3405), (4e-4, 0.0444))),
        r1=Logistic(6.0, 11.0, 0.05),
        r2=Logistic(0.2, -0.8, 0.05),
        beta_h=beta_h,
        beta_v=beta_v,
    )


# --- cell averages -------------------------------------------------------------

@dataclass(frozen=True)
class CellAverages:
    mu_h: np.ndarray
    delta: np.ndarray
    r1: np.ndarray
    r2: np.ndarray
    beta_h: np.ndarray
    beta_v: np.ndarray

    @property
    def infection_exit(self):
        return self.mu_h + self.delta + self.r1


def cell_average(f, grid):
    """(1/da) * integral of f over each cell, 5-point Gauss-Legendre."""
    points, weights = gauss_cells(grid.edges)
    values = f(points)
    if not np.all(np.isfinite(values)):
        raise InvalidParameterError(f"{getattr(f, 'family', f)} is not finite on the age grid")
    return (values * weights).sum(axis=1) / grid.da


def cell_averages(params, grid):
    return CellAverages(**{k: cell_average(getattr(params, k), grid) for k in RATE_NAMES})


# --- validation ---------------------------------------------------------------

@dataclass
class ValidationReport:
    mu0: float
    sup: dict
    mixing_integral: float
    failures: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.failures


def validate(params, a_max=DEFAULT_A_MAX, step=0.01):
    """Check the standing assumptions numerically; report, never raise."""
    ages = np.linspace(0.0, a_max, int(round(a_max / step)) + 1)
    failures, notes = [], []
    for name in ("Lambda_h", "Lambda_v", "mu_v"):
        v = getattr(params, name)
        if not (math.isfinite(v) and v > 0):
            failures.append(f"{name} must be positive (got {v})")
    sup = {}
    for name in RATE_NAMES:
        vals = getattr(params, name)(ages)
        if not np.all(np.isfinite(vals)):
            failures.append(f"{name} is not bounded on [0, {a_max}]")
            sup[name] = math.inf
            continue
        if np.any(vals < 0):
            failures.append(f"{name} takes negative values")
        sup[name] = float(vals.max())
    mu0 = float(np.min(params.mu_h(ages)))
    if not mu0 > 0:
        failures.append(f"mu_h must be bounded below by a positive constant (inf = {mu0})")
    elif params.mu_v < mu0:
        msg = f"mu_v={params.mu_v} is below inf mu_h={mu0}"
        notes.append(msg)
        warnings.warn(msg, stacklevel=2)
    mixing = mixing_integral(params, max(mu0, 0.0), a_max)
    if not mixing > 0:
        failures.append("mixing condition fails: beta_h(a+s) beta_v(a) vanishes identically")
    return ValidationReport(mu0, sup, mixing, failures, notes)


def mixing_integral(params, mu0, a_max, step=0.1):
    """int int beta_h(a+s) beta_v(a) exp(-mu0 (a+s)) da ds over [0, a_max]^2."""
    n = int(round(a_max / step))
    n += n % 2
    h = a_max / n
    nodes = h * np.arange(2 * n + 1)
    bh = params.beta_h(nodes) * np.exp(-mu0 * nodes)
    bv = params.beta_v(nodes[: n + 1])
    w = np.ones(n + 1)
    w[1:-1:2], w[2:-1:2] = 4.0, 2.0
    w *= h / 3.0
    # Hankel structure: entry (p, q) -> bh[p + q]
    idx = np.arange(n + 1)
    rows = bh[idx[:, None] + idx[None, :]]
    return float(w @ (bv[:, None] * rows) @ w)
