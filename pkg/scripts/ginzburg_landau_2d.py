"""Ginzburg-Landau on the unit square from two different starts.

The constant -1 start converges to the negative well; the sign(x2 - 1/2)
start converges to a layered solution changing sign across the midline.
Dumps both final iterates and prints probe values along the midline.
"""

import argparse
from pathlib import Path

import numpy as np

from newton_galerkin.cli import write_records_csv, write_solution_dump
from newton_galerkin.driver import RunConfig, adaptive_solve
from newton_galerkin.fespace import evaluate
from newton_galerkin.newton import StepSizeStrategy
from newton_galerkin.problems import ginzburg_landau, initial_guess


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--epsilon", type=float, default=1e-3)
    parser.add_argument("--max-dof", type=int, default=20_000)
    parser.add_argument("--out", default="results")
    args = parser.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    problem = ginzburg_landau(args.epsilon)
    config = RunConfig(theta=0.75, strategy=StepSizeStrategy("simple", tau=0.1),
                       stop_tolerance=5e-2, max_dof=args.max_dof,
                       max_iterations=400)

    for label, kind in (("const", ("const", -1.0)), ("sign", "sign_x2")):
        mesh = problem.domain.initial_mesh(8)
        guess = initial_guess(kind, mesh, problem)
        result = adaptive_solve(problem, mesh, guess, config)
        u = result.solution
        print(f"[{label}] {result.termination.value} after "
              f"{len(result.records)} passes at {result.records[-1].dofs} "
              f"dofs, estimate {result.records[-1].estimate_total:.4e}")
        print(f"[{label}] value range [{u.values.min():.4f}, "
              f"{u.values.max():.4f}]")
        xs = np.linspace(1 / 6, 5 / 6, 5)
        lower = evaluate(u, np.column_stack([xs, np.full(5, 1 / 3)]))
        upper = evaluate(u, np.column_stack([xs, np.full(5, 2 / 3)]))
        print(f"[{label}] u(x, 1/3): {np.array2string(lower, precision=3)}")
        print(f"[{label}] u(x, 2/3): {np.array2string(upper, precision=3)}")
        write_records_csv(out / f"gl_{label}_records.csv", result.records)
        write_solution_dump(out / f"gl_{label}_solution.txt", u)
    print(f"outputs written under {out}/")


if __name__ == "__main__":
    main()
