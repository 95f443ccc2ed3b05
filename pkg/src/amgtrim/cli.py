"""Command-line driver.

Four subcommands share one configuration surface (JSON file + flag
overrides):

* ``solve``  — build the problem, set up the hierarchy, sparsify per the
  schedule, run the (optionally adaptive) Krylov solve, and write
  ``report.json``, ``residuals.csv``, ``hierarchy.csv``, ``model.csv``.
* ``sweep``  — run ``solve`` once per drop-tolerance schedule and write a
  ``summary.csv`` marking the fastest converged schedule.
* ``model``  — write the per-level communication-model profile twice, for
  the Galerkin and the sparsified operators.
* ``spy``    — dump per-level (row, col) coordinate lists for external
  sparsity plots, for both operators.

Exit codes: 0 success/convergence, 2 solver did not converge, 1 any error.

The right-hand side is A times a uniform random vector drawn from the
seeded counter-based generator in ``rng`` (documented in the README), and
the initial guess is zero, so identical configs produce identical runs.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig, parse_config
from .csr import is_symmetric, spmv
from .hierarchy import Hierarchy, amg_setup
from .perfmodel import hierarchy_profile, hierarchy_sends, LevelProfile
from .problems import build_problem
from .rng import uniform
from .solve import SolveReport, adaptive_solve, gmres, make_preconditioner, pcg
from .sparsify import DropSchedule, sparse_hybrid_setup


def _pad_gammas(gammas, nlevels: int) -> tuple:
    """Fit a schedule to the level count: missing tail entries repeat the
    last value (zeros when the schedule is empty); extras are ignored."""
    g = list(gammas)
    if not g:
        g = [0.0]
    if len(g) < nlevels:
        g = g + [g[-1]] * (nlevels - len(g))
    return tuple(g[:nlevels])


def build_hierarchy(cfg: RunConfig, a) -> Hierarchy:
    """amg_setup plus the configured sparsification."""
    if cfg.variant == "nongalerkin":
        sched = DropSchedule(
            gammas=_pad_gammas(cfg.gammas, max(len(cfg.gammas), 1)),
            lumping=cfg.lumping,
            variant="nongalerkin",
        )
        return amg_setup(
            a,
            max_size=cfg.max_size,
            theta=cfg.strength_theta,
            nongalerkin=sched,
            max_row_elems=cfg.max_row_elems,
        )
    h = amg_setup(
        a, max_size=cfg.max_size, theta=cfg.strength_theta, max_row_elems=cfg.max_row_elems
    )
    if cfg.variant in ("sparse", "hybrid"):
        sched = DropSchedule(
            gammas=_pad_gammas(cfg.gammas, len(h.levels)),
            lumping=cfg.lumping,
            variant=cfg.variant,
        )
        sparse_hybrid_setup(h, sched)
    return h


def _rhs(cfg: RunConfig, a):
    u = uniform(cfg.seed, a.ncols)
    return spmv(a, u)


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def _write_residuals(path: Path, rep: SolveReport) -> None:
    rel = rep.relative_history()
    sends = rep.per_iteration_sends or [0] * len(rel)
    lines = ["iteration,relres,sends_modeled"]
    for i, rr in enumerate(rel):
        lines.append(f"{i},{_fmt(rr)},{sends[i] if i < len(sends) else sends[-1]}")
    path.write_text("\n".join(lines) + "\n", encoding="ascii")


def _write_hierarchy_csv(path: Path, h: Hierarchy) -> None:
    lines = ["level,n,nnz,nnz_per_row"]
    for rec in h.level_report(active=True):
        lines.append(
            f"{rec['level']},{rec['n']},{rec['nnz']},{_fmt(rec['nnz_per_row'])}"
        )
    path.write_text("\n".join(lines) + "\n", encoding="ascii")


def _write_profile(path: Path, profiles) -> None:
    lines = [LevelProfile.CSV_HEADER]
    lines.extend(p.csv_row() for p in profiles)
    path.write_text("\n".join(lines) + "\n", encoding="ascii")


def cmd_solve(cfg: RunConfig) -> int:
    """Returns the process exit code; writes all solve artifacts."""
    t0 = time.perf_counter()
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    a = build_problem(cfg.problem)
    if cfg.krylov.method == "pcg" and not is_symmetric(a, 1e-12):
        raise ConfigError("krylov.method: pcg needs a symmetric matrix; use gmres")
    h = build_hierarchy(cfg, a)
    b = _rhs(cfg, a)
    x0 = np.zeros(a.ncols)

    if cfg.adaptive is not None:
        if cfg.variant not in ("sparse", "hybrid"):
            raise ConfigError(
                "adaptive: adaptive solving needs method.variant sparse or hybrid "
                "(the hierarchy must retain its Galerkin operators)"
            )
        x, rep = adaptive_solve(
            a,
            b,
            x0,
            h,
            spec=cfg.adaptive,
            kspec=cfg.krylov,
            variant=cfg.variant,
            lumping=cfg.lumping,
            smoother=cfg.smoother,
            procs=cfg.model.p,
        )
    else:
        m = make_preconditioner(h, cfg.smoother)
        runner = pcg if cfg.krylov.method == "pcg" else gmres
        x, rep = runner(a, b, x0, m, cfg.krylov)
        rep.per_iteration_sends = [hierarchy_sends(h, cfg.model.p)] * len(
            rep.residual_history
        )

    _write_residuals(out / "residuals.csv", rep)
    _write_hierarchy_csv(out / "hierarchy.csv", h)
    profiles = hierarchy_profile(h, cfg.model.p, cfg.model, True, calibrate=cfg.calibrate)
    _write_profile(out / "model.csv", profiles)

    doc = {
        "config": cfg.to_json_dict(),
        "report": rep.to_json_dict(),
        "hierarchy": h.level_report(active=True),
        "stalled": h.stalled,
        "final_gammas": [lv.gamma for lv in h.levels],
        "modeled_time_per_iteration": sum(p.modeled_seconds for p in profiles),
        "total_wall_time": time.perf_counter() - t0,
    }
    (out / "report.json").write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    print(
        f"{'converged' if rep.converged else 'did not converge'} "
        f"in {rep.iterations} iterations; artifacts in {out}"
    )
    return 0 if rep.converged else 2


def cmd_sweep(cfg: RunConfig, schedules) -> int:
    """One solve per schedule; failures are recorded, not fatal."""
    if not schedules:
        raise ConfigError("sweep: needs at least one --schedule")
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for i, sched in enumerate(schedules):
        sub = RunConfig(
            problem=cfg.problem,
            variant=cfg.variant,
            lumping=cfg.lumping,
            gammas=tuple(sched),
            max_size=cfg.max_size,
            strength_theta=cfg.strength_theta,
            max_row_elems=cfg.max_row_elems,
            smoother=cfg.smoother,
            krylov=cfg.krylov,
            adaptive=cfg.adaptive,
            model=cfg.model,
            calibrate=cfg.calibrate,
            seed=cfg.seed,
            out=str(out / f"schedule_{i}"),
        )
        t0 = time.perf_counter()
        try:
            code = cmd_solve(sub)
            rep_doc = json.loads((Path(sub.out) / "report.json").read_text())
            rows.append(
                {
                    "schedule": " ".join(_fmt(g) for g in sched),
                    "iterations": rep_doc["report"]["iterations"],
                    "converged": int(rep_doc["report"]["converged"]),
                    "modeled_time_per_iter": rep_doc["modeled_time_per_iteration"],
                    "wall_time": time.perf_counter() - t0,
                    "exit_status": code,
                }
            )
        except Exception as exc:  # a failed schedule must not abort the sweep
            rows.append(
                {
                    "schedule": " ".join(_fmt(g) for g in sched),
                    "iterations": -1,
                    "converged": 0,
                    "modeled_time_per_iter": float("nan"),
                    "wall_time": time.perf_counter() - t0,
                    "exit_status": 1,
                }
            )
            print(f"schedule {i} failed: {exc}", file=sys.stderr)
    candidates = [r for r in rows if r["converged"]] or rows
    best = min(candidates, key=lambda r: r["wall_time"])
    for r in rows:
        r["best"] = int(r is best)
    with open(out / "summary.csv", "w", newline="", encoding="ascii") as fh:
        w = csv.DictWriter(
            fh,
            fieldnames=[
                "schedule",
                "iterations",
                "converged",
                "modeled_time_per_iter",
                "wall_time",
                "exit_status",
                "best",
            ],
        )
        w.writeheader()
        w.writerows(rows)
    print(f"sweep of {len(rows)} schedules; summary in {out / 'summary.csv'}")
    return 0


def cmd_model(cfg: RunConfig) -> int:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    a = build_problem(cfg.problem)
    h = build_hierarchy(cfg, a)
    for flag, name in ((False, "model_galerkin.csv"), (True, "model_sparsified.csv")):
        profiles = hierarchy_profile(h, cfg.model.p, cfg.model, flag, calibrate=cfg.calibrate)
        _write_profile(out / name, profiles)
    print(f"model profiles in {out}")
    return 0


def cmd_spy(cfg: RunConfig) -> int:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    a = build_problem(cfg.problem)
    h = build_hierarchy(cfg, a)
    for ell, lv in enumerate(h.levels):
        for op, name in ((lv.A, "galerkin"), (lv.A_active, "active")):
            lines = ["row,col"]
            rows = op.row_of_entry()
            lines.extend(f"{int(r)},{int(c)}" for r, c in zip(rows, op.colind))
            (out / f"spy_level{ell}_{name}.csv").write_text(
                "\n".join(lines) + "\n", encoding="ascii"
            )
    print(f"pattern dumps for {len(h.levels)} levels in {out}")
    return 0


# ---------------------------------------------------------------------- #
# argument handling


def _parse_gamma_list(text: str):
    try:
        return [float(t) for t in text.replace(";", ",").split(",") if t.strip() != ""]
    except ValueError as exc:
        raise ConfigError(f"--gammas: {exc}") from exc


def _common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; flags override its fields")
    p.add_argument(
        "--problem",
        choices=["poisson3d_7pt", "poisson3d_27pt", "aniso2d_9pt"],
        help="built-in problem generator",
    )
    p.add_argument("--n", type=int, help="grid points per dimension")
    p.add_argument("--theta", type=float, help="anisotropy rotation angle (radians)")
    p.add_argument("--epsilon", type=float, help="anisotropy strength ratio")
    p.add_argument("--matrix", metavar="PATH.mtx", help="read the operator from a Matrix Market file")
    p.add_argument(
        "--method",
        choices=["galerkin", "sparse", "hybrid", "nongalerkin"],
        help="coarse-operator treatment",
    )
    p.add_argument("--lumping", choices=["neighbors", "diagonal"])
    p.add_argument("--gammas", help="comma-separated per-level drop tolerances, e.g. 0,0.01,0.1,1.0")
    p.add_argument("--krylov", choices=["pcg", "gmres"])
    p.add_argument("--tol", type=float, help="relative residual tolerance")
    p.add_argument("--max-iter", type=int)
    p.add_argument("--restart", type=int, help="GMRES restart length")
    p.add_argument("--sweeps", type=int, help="relaxation sweeps per smoothing step")
    p.add_argument("--adaptive", action="store_true", help="re-add dropped entries during the solve")
    p.add_argument("--k", type=int, help="Krylov iterations per adaptive batch")
    p.add_argument("--s", type=int, help="levels updated per adaptive trigger")
    p.add_argument("--gamma-min", type=float, help="tolerances below this snap to 0")
    p.add_argument("--trigger", choices=["always", "conv_factor"])
    p.add_argument("--rho-max", type=float, help="convergence-factor trigger threshold")
    p.add_argument("--procs", type=int, help="virtual process count for the cost model")
    p.add_argument("--alpha", type=float, help="modeled seconds per message")
    p.add_argument("--beta", type=float, help="modeled seconds per transmitted word")
    p.add_argument("--c", type=float, help="modeled seconds per flop")
    p.add_argument("--calibrate", action="store_true", help="measure c per level instead")
    p.add_argument("--max-size", type=int, help="stop coarsening at this size")
    p.add_argument("--strength-theta", type=float, help="strength-of-connection threshold")
    p.add_argument("--seed", type=int, help="RNG seed for the right-hand side")
    p.add_argument("--out", help="output directory")


def _doc_from_args(args) -> dict:
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"config: invalid JSON ({exc})") from exc
        if not isinstance(doc, dict):
            raise ConfigError("config: expected a JSON object at the top level")
    else:
        doc = {}

    def sec(name):
        cur = doc.get(name)
        if not isinstance(cur, dict):
            cur = {}
            doc[name] = cur
        return cur

    if args.matrix:
        doc["problem"] = {"kind": "from_file", "path": args.matrix}
    if args.problem:
        sec("problem")["kind"] = args.problem
    if args.n is not None:
        sec("problem")["n"] = args.n
        sec("problem").pop("dims", None)
    if args.theta is not None:
        sec("problem")["theta"] = args.theta
    if args.epsilon is not None:
        sec("problem")["epsilon"] = args.epsilon
    if args.method:
        sec("method")["variant"] = args.method
    if args.lumping:
        sec("method")["lumping"] = args.lumping
    if args.gammas is not None:
        doc["gammas"] = _parse_gamma_list(args.gammas)
    if args.krylov:
        sec("krylov")["method"] = args.krylov
    if args.tol is not None:
        sec("krylov")["tol"] = args.tol
    if args.max_iter is not None:
        sec("krylov")["max_iter"] = args.max_iter
    if args.restart is not None:
        sec("krylov")["restart"] = args.restart
    if args.sweeps is not None:
        sec("smoother")["sweeps"] = args.sweeps
    if args.adaptive or any(
        v is not None for v in (args.k, args.s, args.gamma_min, args.rho_max)
    ) or args.trigger:
        ad = doc.get("adaptive")
        if not isinstance(ad, dict):
            ad = {}
            doc["adaptive"] = ad
        if args.k is not None:
            ad["k"] = args.k
        if args.s is not None:
            ad["s"] = args.s
        if args.gamma_min is not None:
            ad["gamma_min"] = args.gamma_min
        if args.trigger:
            ad["trigger"] = args.trigger
        if args.rho_max is not None:
            ad["rho_max"] = args.rho_max
    if args.procs is not None:
        sec("model")["p"] = args.procs
    if args.alpha is not None:
        sec("model")["alpha"] = args.alpha
    if args.beta is not None:
        sec("model")["beta"] = args.beta
    if args.c is not None:
        sec("model")["c"] = args.c
    if args.calibrate:
        sec("model")["calibrate"] = True
    if args.max_size is not None:
        sec("setup")["max_size"] = args.max_size
    if args.strength_theta is not None:
        sec("setup")["strength_theta"] = args.strength_theta
    if args.seed is not None:
        doc["seed"] = args.seed
    if args.out:
        doc["out"] = args.out
    return doc


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="amgtrim",
        description="algebraic multigrid with sparsified, restorable coarse operators",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("solve", "set up, sparsify, and solve; writes report and CSV artifacts"),
        ("sweep", "run solve over several drop-tolerance schedules"),
        ("model", "per-level communication-model profiles (Galerkin and sparsified)"),
        ("spy", "dump per-level sparsity patterns as (row,col) lists"),
    ):
        sp = sub.add_parser(name, help=help_text)
        _common_flags(sp)
        if name == "sweep":
            sp.add_argument(
                "--schedule",
                action="append",
                default=[],
                metavar="G0,G1,...",
                help="one drop-tolerance schedule; repeat the flag for more",
            )
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        cfg = parse_config(_doc_from_args(args))
        if args.command == "solve":
            return cmd_solve(cfg)
        if args.command == "sweep":
            return cmd_sweep(cfg, [_parse_gamma_list(s) for s in args.schedule])
        if args.command == "model":
            return cmd_model(cfg)
        return cmd_spy(cfg)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
