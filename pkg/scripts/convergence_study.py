"""Reconstruction error versus the largest node index in the data.

Doubles n_max over a ladder and reports sup-norm errors for each recovered
quantity, on formula-generated data for the worked example.  The limit fits
should drive every column down monotonically.

    python3 scripts/convergence_study.py [--ladder 50 100 200 400]
"""

import argparse
import math

import numpy as np

from nodalrec import reconstruct, synthesize_nodal_data
from nodalrec.fixtures import worked_example_problem, worked_example_reference


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--ladder", type=int, nargs="+", default=[50, 100, 200, 400])
    args = ap.parse_args()

    problem = worked_example_problem()
    ref = worked_example_reference()
    print("n_max   theta       beta        m           V_sup       Lp_sup")
    for n_max in args.ladder:
        data = synthesize_nodal_data(problem, (max(5, n_max // 8), n_max))
        res = reconstruct(data)
        grid = res.V_hat.x
        row = (
            abs(res.theta_hat - math.pi / 4),
            abs(res.beta_hat - math.pi / 4),
            abs(res.m_hat - 1.0),
            float(np.max(np.abs(res.V_hat.values - ref["V"](grid)))),
            float(np.max(np.abs(res.Lprime_hat.values - ref["Lprime"](grid)))),
        )
        print(f"{n_max:5d} " + " ".join(f"{e:11.4e}" for e in row))


if __name__ == "__main__":
    main()
