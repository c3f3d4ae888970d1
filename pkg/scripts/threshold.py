"""R0 = 1 threshold: long-run infection across mosquito recruitment rates.

For each target R0 the recruitment Lambda_v is set by the sqrt scaling of
R0 in Lambda_v, the model is run to T, and ||i|| at T is compared with its
value at t_early.  Well above the threshold the early outbreak can overshoot
the endemic level, so the comparison is only meaningful near R0 = 1.  Optionally writes the table as CSV.
"""

import argparse

import numpy as np

from malaria_age import analysis, solver
from malaria_age.grid import Grid
from malaria_age.params import table1_params
from malaria_age.report import csv_table


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--targets", type=float, nargs="+", default=[0.6, 0.8, 0.9, 0.95, 1.05, 1.1, 1.2, 1.5])
    ap.add_argument("--T", type=float, default=100.0)
    ap.add_argument("--t-early", type=float, default=10.0)
    ap.add_argument("--da", type=float, default=0.05)
    ap.add_argument("--csv")
    args = ap.parse_args()

    base = analysis.r0(table1_params(5e6)).R0
    g = Grid(args.da, args.da, 100.0, args.T)
    rows = []
    for target in args.targets:
        Lv = 5e6 * (target / base) ** 2
        p = table1_params(Lv)
        R0 = analysis.r0(p).R0
        tr = solver.run(p, g, solver.initial_state(p, g, 1e3), sample_every=20, lyapunov=False)
        early = float(np.interp(args.t_early, tr.times, tr["i"]))
        late = float(tr["i"][-1])
        rows.append([Lv, R0, early, late, late / early])
        print(f"Lambda_v={Lv:12.6g}  R0={R0:.4f}  ||i||({args.t_early:g})={early:.4g}  "
              f"||i||({args.T:g})={late:.4g}  {'grows' if late > early else 'decays'}")
    if args.csv:
        header = ["Lambda_v [mosquitoes/year]", "R0 [-]", "i_early [humans]", "i_final [humans]",
                  "ratio [-]"]
        with open(args.csv, "w", newline="") as fh:
            fh.write(csv_table(header, rows))


if __name__ == "__main__":
    main()
