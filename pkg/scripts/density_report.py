#!/usr/bin/env python3
"""Per-level operator density for Galerkin vs. sparsified hierarchies.

Builds one Galerkin hierarchy for the chosen problem, re-sparsifies it under
a few drop tolerances, and prints nnz, nnz/row, and the fill relative to the
finest level — the quickest way to see how fast coarse operators densify and
how much of that the sparsifiers claw back.

    python3 scripts/density_report.py --problem poisson3d_7pt --n 20
    python3 scripts/density_report.py --problem aniso2d_9pt --n 64 --epsilon 1e-3
"""

import argparse

import numpy as np

import amgtrim as at


def hierarchy_for(args) -> tuple:
    spec = at.ProblemSpec(
        kind=args.problem,
        dims=(args.n, args.n) if args.problem == "aniso2d_9pt" else (args.n,) * 3,
        theta=args.theta,
        epsilon=args.epsilon,
    )
    a = at.build_problem(spec)
    return a, at.amg_setup(a, max_size=args.max_size)


def report(h, label: str) -> None:
    print(f"\n{label}")
    print(f"  {'level':>5} {'n':>8} {'nnz':>10} {'nnz/row':>8} {'fill vs level 0':>16}")
    base = h.levels[0].A.nnz
    for rec in h.level_report(active=True):
        print(
            f"  {rec['level']:>5} {rec['n']:>8} {rec['nnz']:>10}"
            f" {rec['nnz_per_row']:>8.2f} {rec['nnz'] / base:>16.3f}"
        )


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--problem", default="poisson3d_7pt",
                    choices=["poisson3d_7pt", "poisson3d_27pt", "aniso2d_9pt"])
    ap.add_argument("--n", type=int, default=20)
    ap.add_argument("--theta", type=float, default=np.pi / 8)
    ap.add_argument("--epsilon", type=float, default=1e-3)
    ap.add_argument("--max-size", type=int, default=300)
    ap.add_argument("--gammas", default="0.01,0.1,1.0",
                    help="drop tolerances to sweep (same value on every coarse level)")
    args = ap.parse_args()

    a, h = hierarchy_for(args)
    print(f"{args.problem}, n = {a.nrows}, {len(h.levels)} levels")
    report(h, "galerkin")
    for gamma in (float(t) for t in args.gammas.split(",")):
        for variant in ("sparse", "hybrid"):
            sched = at.DropSchedule(
                (gamma,) * len(h.levels), lumping="diagonal", variant=variant
            )
            at.sparse_hybrid_setup(h, sched)
            report(h, f"{variant}, gamma = {gamma}")


if __name__ == "__main__":
    main()
