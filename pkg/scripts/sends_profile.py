#!/usr/bin/env python3
"""Modeled communication per level for one SpMV under a simulated partition.

For p virtual processes owning contiguous row blocks, prints each level's
maximum send count, message volume, and modeled SpMV time for the Galerkin
hierarchy and for a hybrid-sparsified one.  The mid-hierarchy send bulge —
and how sparsification flattens it — is the whole story.

    python3 scripts/sends_profile.py --n 32 --procs 512
    python3 scripts/sends_profile.py --n 32 --procs 512 --gammas 0,0,1,1 --lumping neighbors
"""

import argparse

import amgtrim as at


def print_profiles(profiles, label: str) -> None:
    print(f"\n{label}")
    print(f"  {'level':>5} {'n':>8} {'nnz':>10} {'sends':>6} {'words':>8} {'modeled s':>12}")
    for p in profiles:
        print(
            f"  {p.level:>5} {p.n:>8} {p.nnz:>10} {p.sends_max:>6}"
            f" {p.msg_words_max:>8} {p.modeled_seconds:>12.3e}"
        )
    print(f"  total sends per iteration: {sum(p.sends_max for p in profiles)}")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=32, help="grid points per dimension (7-point stencil)")
    ap.add_argument("--procs", type=int, default=512)
    ap.add_argument("--gammas", default="0,0,1",
                    help="per-level drop tolerances, last entry repeats downward")
    ap.add_argument("--lumping", default="diagonal", choices=["neighbors", "diagonal"])
    ap.add_argument("--alpha", type=float, default=1.8e-6)
    ap.add_argument("--beta", type=float, default=1.8e-9)
    ap.add_argument("--c", type=float, default=1e-10)
    args = ap.parse_args()

    a = at.poisson3d_7pt(args.n, args.n, args.n)
    h = at.amg_setup(a)
    params = at.ModelParams(alpha=args.alpha, beta=args.beta, c=args.c, p=args.procs)

    print(f"poisson3d_7pt({args.n}^3), {len(h.levels)} levels, p = {args.procs}")
    print_profiles(at.hierarchy_profile(h, args.procs, params, use_sparsified=False), "galerkin")

    gammas = [float(t) for t in args.gammas.split(",")]
    gammas += [gammas[-1]] * (len(h.levels) - len(gammas))
    sched = at.DropSchedule(tuple(gammas[: len(h.levels)]), lumping=args.lumping, variant="hybrid")
    at.sparse_hybrid_setup(h, sched)
    print_profiles(
        at.hierarchy_profile(h, args.procs, params, use_sparsified=True),
        f"hybrid ({args.lumping} lumping), gammas = {gammas[: len(h.levels)]}",
    )


if __name__ == "__main__":
    main()
