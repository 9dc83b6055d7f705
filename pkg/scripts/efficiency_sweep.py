"""Efficiency-index sweep over epsilon for the linear benchmark.

For each epsilon in 1, 1e-1, ..., 1e-5 the adaptive loop runs to the dof
budget; the ratio of estimated to true energy error is tabulated per pass.
A robust estimator keeps all indices inside one narrow band across epsilons.
"""

import argparse
from pathlib import Path

from newton_galerkin.cli import (efficiency_table, format_efficiency_table,
                                 write_records_csv)
from newton_galerkin.driver import RunConfig, adaptive_solve
from newton_galerkin.newton import StepSizeStrategy
from newton_galerkin.problems import initial_guess, linear_reaction


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--max-dof", type=int, default=3000)
    parser.add_argument("--out", default="results")
    args = parser.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    by_label = {}
    for k in range(6):
        eps = 10.0 ** (-k)
        problem = linear_reaction(eps)
        mesh = problem.domain.initial_mesh(8)
        guess = initial_guess(("const", 0.0), mesh, problem)
        config = RunConfig(theta=0.5,
                           strategy=StepSizeStrategy("improved", tau=0.5),
                           stop_tolerance=1e-12, max_dof=args.max_dof,
                           max_iterations=500)
        result = adaptive_solve(problem, mesh, guess, config)
        label = f"eps=1e-{k}"
        by_label[label] = result.records
        write_records_csv(out / f"sweep_eps1e-{k}.csv", result.records)

    rows = efficiency_table(by_label)
    print(format_efficiency_table(rows))
    effs = [r[3] for r in rows]
    print(f"index band: [{min(effs):.3f}, {max(effs):.3f}], "
          f"ratio {max(effs) / min(effs):.2f}")


if __name__ == "__main__":
    main()
