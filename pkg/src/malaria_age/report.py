"""Run orchestration and artifact emission (CSV, key-value results, SVG, manifest)."""

from __future__ import annotations

import hashlib
import io
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__, analysis, solver
from .characteristics import characteristics_oracle, pfe_profile
from .errors import InvalidParameterError, MalariaModelError
from .ode_model import OdeState, ode_run
from .params import cell_average
from .svg import UNITS, SvgStyle, emit_svg

logger = logging.getLogger(__name__)

MANIFEST = "manifest.txt"
RESULTS = "results.txt"
FLOAT = "%.17g"
PDE_HEADER = ["t [years]", "s_L1 [humans]", "i_L1 [humans]", "r_L1 [humans]", "S_v [mosquitoes]",
              "I_v [mosquitoes]", "lambda_v [1/year]", "L0 [dimensionless]"]
ODE_HEADER = ["t [years]", "S_h [humans]", "I_h [humans]", "R_h [humans]", "S_v [mosquitoes]",
              "I_v [mosquitoes]", "lambda_v [1/year]", "L0 [dimensionless]"]


@dataclass
class ReportBundle:
    """Files (name -> text) plus flat results; nothing touches disk until write_bundle."""

    files: dict = field(default_factory=dict)
    results: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)
    trajectories: dict = field(default_factory=dict)

    @property
    def ok(self):
        return not self.failures


def fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return FLOAT % float(x)
    return str(x)


def csv_table(header, rows, comments=()):
    buf = io.StringIO()
    for c in comments:
        buf.write(f"# {c}\n")
    buf.write(",".join(_quote(h) for h in header) + "\r\n")
    for row in rows:
        buf.write(",".join(fmt(v) for v in row) + "\r\n")
    return buf.getvalue()


def _quote(s):
    s = str(s)
    if any(ch in s for ch in ',"\r\n'):
        return '"' + s.replace('"', '""') + '"'
    return s


def trajectory_csv(tr):
    header = ODE_HEADER if tr.kind == "ode" else PDE_HEADER
    cols = [tr.times] + [tr[k] for k in solver.AGGREGATES]
    return csv_table(header, zip(*cols))


def snapshot_csv(state, grid, params_hash):
    comments = [f"t = {fmt(state.t)}", f"S_v = {fmt(state.S_v)}", f"I_v = {fmt(state.I_v)}",
                f"da = {fmt(grid.da)}", f"dt = {fmt(grid.dt)}", f"a_max = {fmt(grid.a_max)}",
                f"params_hash = {params_hash}"]
    header = ["a [years]", "s [humans/year]", "i [humans/year]", "r [humans/year]"]
    return csv_table(header, zip(grid.centers, state.s, state.i, state.r), comments)


# --- mode handlers ------------------------------------------------------------------------------

def _initial(config, I_v0):
    init = config.init
    params, grid = config.params, config.grid
    if init.humans == "tabulated":
        zero = lambda a: np.zeros_like(np.asarray(a, dtype=float))  # noqa: E731
        s = cell_average(init.s0, grid)
        i = cell_average(init.i0, grid) if init.i0 is not None else zero(grid.centers)
        r = cell_average(init.r0, grid) if init.r0 is not None else zero(grid.centers)
        S_v = init.S_v0 if init.S_v0 is not None else params.S_v0
        return solver.SystemState(s, i, r, S_v, I_v0)
    return solver.initial_state(params, grid, I_v0, init.S_v0, humans=init.humans)


def _simulate_one(config, I_v0):
    out = config.output
    state = _initial(config, I_v0)
    return solver.run(config.params, config.grid, state, sample_every=out.sample_every,
                      snapshot_times=out.snapshot_times)


def _map(fn, items, threads):
    """Apply fn to each item; results (or exceptions) in input order."""
    def guarded(x):
        try:
            return fn(x), None
        except (MalariaModelError, ArithmeticError, ValueError) as exc:
            return None, exc

    if threads and threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(guarded, items))
    return [guarded(x) for x in items]


def _run_simulate(config, bundle, threads):
    params, grid = config.params, config.grid
    R = bundle.results
    R["runs"] = len(config.init.I_v0)
    outcomes = _map(lambda v: _simulate_one(config, v), list(config.init.I_v0), threads)
    series = []
    for k, (I_v0, (tr, exc)) in enumerate(zip(config.init.I_v0, outcomes)):
        tag = f"run{k}"
        R[f"{tag}.I_v0"] = I_v0
        if exc is not None:
            R[f"{tag}.status"] = f"failed: {type(exc).__name__}: {exc}"
            bundle.failures.append((tag, str(exc)))
            continue
        R[f"{tag}.status"] = "ok"
        bundle.trajectories[tag] = tr
        bundle.files[f"{tag}.csv"] = trajectory_csv(tr)
        for name, v in tr.final().items():
            R[f"{tag}.final.{name}"] = v
        R[f"{tag}.peak.i"] = float(np.max(tr["i"]))
        R[f"{tag}.peak.I_v"] = float(np.max(tr["I_v"]))
        for t, state in tr.snapshots.items():
            bundle.files[f"{tag}_snapshot_t{fmt(t)}.csv"] = snapshot_csv(state, grid, params.digest())
        series.append((f"I_v0 = {fmt(I_v0)}", tr))
    ok = [bundle.trajectories[f"run{k}"] for k in range(len(config.init.I_v0))
          if f"run{k}" in bundle.trajectories]
    if len(ok) > 1:
        da = grid.da
        worst = max(a.final_state.l1_distance(b.final_state, da) / max(a.final_state.l1_norm(da), 1e-300)
                    for j, a in enumerate(ok) for b in ok[j + 1:])
        R["final_state.max_pairwise_relative_l1"] = worst
    if config.output.figures and series:
        for key in ("i", "I_v", "S_v", "L0"):
            log_y = config.output.log_scale and key != "L0"
            bundle.files[f"figure_{key}.svg"] = emit_svg(
                series, SvgStyle(aggregate=key, log_y=log_y, title=f"{key} against time"))


def _run_r0(config, bundle, threads):
    rep = analysis.r0(config.params, config.grid.a_max)
    R = bundle.results
    R["R0"] = rep.R0
    R["R0_squared"] = rep.R0_squared
    R["R0.quadrature_error_estimate"] = rep.quadrature_error_estimate
    R["R0.a_max"] = rep.a_max
    R["R0.tail_bound"] = rep.tail_bound
    if rep.warning:
        R["R0.warning"] = rep.warning


def _equilibrium_results(R, prefix, eq):
    R[f"{prefix}.exists"] = eq.exists
    for k, v in eq.values.items():
        R[f"{prefix}.{k}"] = v
    if eq.exists:
        R[f"{prefix}.residual"] = eq.residual
    if eq.kind == "endemic-pde-r2zero" and eq.exists:
        R[f"{prefix}.root"] = eq.root
        R[f"{prefix}.bracket"] = f"{fmt(eq.bracket[0])} {fmt(eq.bracket[1])}"
        R[f"{prefix}.profile_residual"] = eq.profile_residual


def _run_equilibria(config, bundle, threads):
    p, a_max = config.params, config.grid.a_max
    R = bundle.results
    e0 = analysis.pfe(p, a_max)
    _equilibrium_results(R, "pfe", e0)
    if p.is_constant:
        eq, _ = analysis.endemic_ode(p)
        R["endemic.kind"] = eq.kind
        R["endemic.R0"] = eq.R0
        _equilibrium_results(R, "endemic", eq)
    elif p.has_no_waning:
        eq = analysis.endemic_pde_r2zero(p, a_max)
        R["endemic.kind"] = eq.kind
        R["endemic.R0"] = eq.R0
        _equilibrium_results(R, "endemic", eq)
        if eq.exists:
            pr = eq.profiles
            bundle.files["endemic_profiles.csv"] = csv_table(
                ["a [years]", "s [humans/year]", "i [humans/year]", "r [humans/year]"],
                zip(pr["a"], pr["s"], pr["i"], pr["r"]))
    else:
        R["endemic.kind"] = "unavailable"
        R["endemic.note"] = "no equilibrium solver for age-dependent parameters with waning immunity"


def _stability_results(R, st):
    for k in ("a3", "a2", "a1", "a0", "b1", "c0"):
        R[f"stability.{k}"] = getattr(st, k)
    R["stability.verdict"] = st.verdict
    R["stability.routh_verdict"] = st.routh_verdict
    R["stability.max_real_eigenvalue"] = st.max_real_eigenvalue
    R["stability.discrepancy"] = st.discrepancy


def _run_stability(config, bundle, threads):
    p, a_max = config.params, config.grid.a_max
    R = bundle.results
    if p.is_constant:
        eq, st = analysis.endemic_ode(p)
        R["R0"] = eq.R0
        R["endemic.exists"] = eq.exists
        if st is not None:
            _stability_results(R, st)
        else:
            R["stability.verdict"] = "parasite-free equilibrium LAS (R0 <= 1)"
        return
    root = analysis.dominant_real_root(p, a_max)
    R["pfe.characteristic_root"] = root
    R["pfe.verdict"] = "LAS" if root < 0 else "unstable"


def _sweep_one(config, Lambda_v):
    p = config.params.replace(Lambda_v=Lambda_v)
    rep = analysis.r0(p, config.grid.a_max)
    row = {"Lambda_v": Lambda_v, "R0": rep.R0}
    if config.sweep.simulate:
        grid = config.grid
        state = solver.initial_state(p, grid, config.init.I_v0[0], humans=config.init.humans
                                     if config.init.humans != "tabulated" else "pfe")
        tr = solver.run(p, grid, state, sample_every=config.output.sample_every, lyapunov=False)
        j = int(np.searchsorted(tr.times, config.sweep.t_early - 1e-9))
        row.update({k: v for k, v in tr.final().items() if k != "L0"})
        row["i_growth"] = tr["i"][-1] / tr["i"][j] if tr["i"][j] > 0 else float("nan")
        row["trajectory"] = tr
    return row


def _run_sweep(config, bundle, threads):
    values = list(config.sweep.Lambda_v)
    outcomes = _map(lambda v: _sweep_one(config, v), values, threads)
    R = bundle.results
    rows, series = [], []
    cols = ["Lambda_v", "R0"] + (["s", "i", "r", "S_v", "I_v", "lambda_v", "i_growth"]
                                 if config.sweep.simulate else [])
    for k, (Lv, (row, exc)) in enumerate(zip(values, outcomes)):
        if exc is not None:
            R[f"sweep{k}.status"] = f"failed: {type(exc).__name__}: {exc}"
            bundle.failures.append((f"sweep{k}", str(exc)))
            continue
        R[f"sweep{k}.status"] = "ok"
        R[f"sweep{k}.Lambda_v"] = Lv
        R[f"sweep{k}.R0"] = row["R0"]
        rows.append([row[c] for c in cols])
        if "trajectory" in row:
            bundle.trajectories[f"sweep{k}"] = row["trajectory"]
            series.append((f"Lambda_v = {fmt(Lv)}", row["trajectory"]))
    units = {"Lambda_v": "mosquitoes/year", "R0": "dimensionless", "i_growth": "dimensionless",
             "s": "humans", "i": "humans", "r": "humans"}
    header = [f"{c} [{units.get(c, UNITS.get(c, ''))}]" for c in cols]
    bundle.files["sweep.csv"] = csv_table(header, rows)
    if config.output.figures and series:
        bundle.files["figure_sweep_i.svg"] = emit_svg(
            series, SvgStyle(aggregate="i", log_y=True, title="||i|| across the Lambda_v sweep"))


def compare_levels(params, grid, levels, I_v0, reference_dt=1e-3):
    """PDE against matched and RK4 ODE runs on `levels` jointly refined grids.

    Gaps are sup over samples and columns of |PDE - ODE| / max|ODE|.
    """
    if not params.is_constant:
        raise InvalidParameterError("compare-ode needs constant parameters")
    cols = ("s", "i", "r", "S_v", "I_v")
    rows = []
    g = grid
    init0 = solver.initial_state(params, grid, I_v0)
    ref_init = OdeState.from_system_state(init0, grid.da)
    ref = ode_run(params, ref_init, reference_dt, grid.T, "rk4-reference")
    for level in range(levels):
        init = solver.initial_state(params, g, I_v0)
        tr = solver.run(params, g, init, lyapunov=False)
        ode = ode_run(params, OdeState.from_system_state(init, g.da), g.dt, g.T, "matched-semi-implicit")
        gap_m = max(float(np.max(np.abs(tr[c] - ode[c])) / np.max(np.abs(ode[c]))) for c in cols)
        ref_vals = {c: np.interp(tr.times, ref.times, ref[c]) for c in cols}
        gap_r = max(float(np.max(np.abs(tr[c] - ref_vals[c])) / np.max(np.abs(ref[c]))) for c in cols)
        rows.append({"level": level, "da": g.da, "dt": g.dt, "gap_matched": gap_m,
                     "gap_reference": gap_r, "tail_bound": solver.tail_mass_bound(params, g)})
        g = g.refined(2)
    return rows


def oracle_levels(params, grid, levels, I_v0, substeps=None):
    """Relative L1 distance between the FV state and the characteristics oracle at grid.T."""
    rows = []
    g = grid
    prof = pfe_profile(params, I_v0, a_max=2 * grid.a_max)
    for level in range(levels):
        fv = solver.run(params, g, solver.initial_state(params, g, I_v0), lyapunov=False).final_state
        oracle = characteristics_oracle(params, g, prof, g.T, substeps=substeps)
        rows.append({"level": level, "da": g.da, "dt": g.dt,
                     "l1_gap": fv.l1_distance(oracle, g.da) / oracle.l1_norm(g.da)})
        g = g.refined(2)
    return rows


def _run_compare(config, bundle, threads):
    rows = compare_levels(config.params, config.grid, config.compare.levels, config.init.I_v0[0],
                          config.compare.ode_reference_dt)
    R = bundle.results
    for r in rows:
        for k in ("da", "dt", "gap_matched", "gap_reference", "tail_bound"):
            R[f"level{r['level']}.{k}"] = r[k]
    for a, b in zip(rows, rows[1:]):
        R[f"ratio{a['level']}{b['level']}.gap_reference"] = a["gap_reference"] / b["gap_reference"]
    header = ["level [-]", "da [years]", "dt [years]", "gap_matched [dimensionless]",
              "gap_reference [dimensionless]", "tail_bound [humans]"]
    bundle.files["compare.csv"] = csv_table(
        header, ([r["level"], r["da"], r["dt"], r["gap_matched"], r["gap_reference"], r["tail_bound"]]
                 for r in rows))


HANDLERS = {
    "simulate": _run_simulate,
    "r0": _run_r0,
    "equilibria": _run_equilibria,
    "stability": _run_stability,
    "sweep": _run_sweep,
    "compare-ode": _run_compare,
}


def execute(config, threads=1):
    """Run the configured mode and collect every output in a ReportBundle."""
    from .config import serialize

    bundle = ReportBundle()
    R = bundle.results
    g = config.grid
    R["mode"] = config.mode
    R["version"] = __version__
    R["config_hash"] = config.digest()
    R["params_hash"] = config.params.digest()
    R["grid.da"], R["grid.dt"], R["grid.a_max"], R["grid.T"] = g.da, g.dt, g.a_max, g.T
    R["tail_mass_bound"] = solver.tail_mass_bound(config.params, g)
    R["tail_mass_survival_bound"] = solver.tail_mass_survival_bound(config.params, g)
    try:
        HANDLERS[config.mode](config, bundle, threads)
    except (MalariaModelError, ArithmeticError, ValueError) as exc:
        R["status.error"] = f"{type(exc).__name__}: {exc}"
        bundle.failures.append((config.mode, str(exc)))
    R["status"] = "ok" if bundle.ok else "failed"
    bundle.files["config.ini"] = serialize(config)
    bundle.files[RESULTS] = "".join(f"{k} = {fmt(v)}\n" for k, v in R.items())
    if bundle.failures:
        bundle.files["failures.txt"] = "".join(f"{tag}: {msg}\n" for tag, msg in bundle.failures)
    return bundle


def write_bundle(bundle, directory):
    """Write all files plus a manifest (name, size, sha256); the manifest lists itself last.

    Files listed by a previous manifest in `directory` are removed first; any
    other pre-existing file is an error, so the manifest always matches the
    directory contents.
    """
    os.makedirs(directory, exist_ok=True)
    previous = read_manifest(directory) if os.path.exists(os.path.join(directory, MANIFEST)) else []
    for name in previous:
        path = os.path.join(directory, name)
        if os.path.isfile(path):
            os.remove(path)
    foreign = sorted(os.listdir(directory))
    if foreign:
        raise FileExistsError(f"output directory {directory!r} holds files not produced by a "
                              f"previous run: {', '.join(foreign[:5])}")
    lines = []
    for name in sorted(bundle.files):
        data = bundle.files[name].encode()
        with open(os.path.join(directory, name), "wb") as fh:
            fh.write(data)
        lines.append(f"{name}  {len(data)}  {hashlib.sha256(data).hexdigest()}\n")
    lines.append(f"{MANIFEST}  -  -\n")
    with open(os.path.join(directory, MANIFEST), "w", newline="\n") as fh:
        fh.writelines(lines)
    return sorted(bundle.files) + [MANIFEST]


def read_manifest(directory):
    with open(os.path.join(directory, MANIFEST)) as fh:
        return [line.split()[0] for line in fh if line.strip()]
