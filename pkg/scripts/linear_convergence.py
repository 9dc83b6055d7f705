"""Convergence study for the singularly perturbed linear benchmark.

Runs the adaptive loop at one epsilon, prints the record table, and fits the
estimate-versus-dofs slope over the last refinements (expected: -1 for P1 in
1d). Writes the record CSV under results/.
"""

import argparse
from pathlib import Path

import numpy as np

from newton_galerkin.cli import write_records_csv
from newton_galerkin.driver import RunConfig, adaptive_solve
from newton_galerkin.newton import StepSizeStrategy
from newton_galerkin.problems import initial_guess, linear_reaction


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--epsilon", type=float, default=1e-5)
    parser.add_argument("--max-dof", type=int, default=10_000)
    parser.add_argument("--theta", type=float, default=0.5)
    parser.add_argument("--out", default="results")
    args = parser.parse_args()

    problem = linear_reaction(args.epsilon)
    mesh = problem.domain.initial_mesh(8)
    guess = initial_guess(("const", 0.0), mesh, problem)
    config = RunConfig(theta=args.theta,
                       strategy=StepSizeStrategy("improved", tau=0.5),
                       stop_tolerance=1e-12, max_dof=args.max_dof,
                       max_iterations=600)
    result = adaptive_solve(problem, mesh, guess, config)

    print(f"{'n':>4} {'action':>7} {'dofs':>7} {'estimate':>12} "
          f"{'true error':>12} {'efficiency':>11}")
    for r in result.records:
        print(f"{r.n:>4} {r.action:>7} {r.dofs:>7} {r.estimate_total:>12.4e} "
              f"{r.true_error:>12.4e} {r.efficiency:>11.3f}")

    refines = [r for r in result.records if r.action == "REFINE"][-5:]
    slope = np.polyfit(np.log([r.dofs for r in refines]),
                       np.log([r.estimate_total for r in refines]), 1)[0]
    print(f"\ntermination: {result.termination.value}")
    print(f"estimate ~ dofs^{slope:.3f} over the last {len(refines)} "
          "refinements")

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"linear_eps{args.epsilon:g}_records.csv"
    write_records_csv(csv_path, result.records)
    print(f"records written to {csv_path}")


if __name__ == "__main__":
    main()
