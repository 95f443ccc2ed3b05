"""V-cycle application and Krylov solvers preconditioned by the hierarchy,
plus the adaptive controller that re-adds dropped entries mid-solve.

The cycle smooths and computes residuals with each level's active operator
(the sparsified stand-in when one is installed) while grid transfers use
the unmodified interpolation, so sparsification perturbs only relaxation
and residual propagation.  The coarsest level is always solved directly.

``adaptive_solve`` wraps PCG or GMRES: it runs k iterations at a time and,
when the batch hasn't converged (or converged too slowly, depending on the
trigger), lowers the drop tolerance of the finest still-sparsified levels
by 10x — snapping to 0 below gamma_min — re-sparsifies them from the
retained Galerkin operators, and restarts the Krylov method.  Because the
restores are exact, the scheme degenerates to plain Galerkin-preconditioned
Krylov in the worst case instead of diverging.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .csr import CsrMatrix, spmv
from .hierarchy import Hierarchy
from .perfmodel import hierarchy_sends
from .smooth import SmootherSpec, relax_inplace
from .sparsify import _sparsify_level

KRYLOV_METHODS = ("pcg", "gmres")
ADAPTIVE_TRIGGERS = ("always", "conv_factor")


@dataclass(frozen=True)
class KrylovSpec:
    method: str = "pcg"
    tol: float = 1e-8
    max_iter: int = 500
    restart: int = 50  # gmres only

    def __post_init__(self):
        if self.method not in KRYLOV_METHODS:
            raise ValueError(f"unknown Krylov method {self.method!r}")
        if self.tol <= 0:
            raise ValueError("expected tol > 0")
        if self.max_iter < 1:
            raise ValueError("expected max_iter >= 1")
        if self.restart < 1:
            raise ValueError("expected restart >= 1")


@dataclass(frozen=True)
class AdaptiveSpec:
    k: int = 3  # Krylov iterations per batch
    s: int = 1  # levels updated per trigger
    gamma_min: float = 0.01
    trigger: str = "conv_factor"
    rho_max: float = 0.9

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("expected k >= 1")
        if self.s < 1:
            raise ValueError("expected s >= 1")
        if not 0.0 < self.gamma_min < 1.0:
            raise ValueError("expected gamma_min in (0,1)")
        if self.trigger not in ADAPTIVE_TRIGGERS:
            raise ValueError(f"unknown trigger {self.trigger!r}")
        if not 0.0 < self.rho_max < 1.0:
            raise ValueError("expected rho_max in (0,1)")


@dataclass
class SolveReport:
    """Everything a solve run produced besides the solution vector."""

    residual_history: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    conv_factor_per_batch: list = field(default_factory=list)
    adaptive_events: list = field(default_factory=list)
    per_iteration_sends: list = field(default_factory=list)
    wall_time: float = 0.0
    notes: list = field(default_factory=list)

    def relative_history(self) -> list:
        r0 = self.residual_history[0] if self.residual_history else 0.0
        if r0 == 0.0:
            return [0.0 for _ in self.residual_history]
        return [r / r0 for r in self.residual_history]

    def to_json_dict(self) -> dict:
        return {
            "residual_history": list(self.residual_history),
            "iterations": self.iterations,
            "converged": self.converged,
            "conv_factor_per_batch": list(self.conv_factor_per_batch),
            "adaptive_events": list(self.adaptive_events),
            "per_iteration_sends": list(self.per_iteration_sends),
            "wall_time": self.wall_time,
            "notes": list(self.notes),
        }


# ---------------------------------------------------------------------- #
# multigrid cycling


def vcycle(h: Hierarchy, b: np.ndarray, x: np.ndarray, spec: SmootherSpec | None = None) -> np.ndarray:
    """One V-cycle (one pre- and one post-relaxation per level by default)."""
    spec = spec or SmootherSpec()
    b = np.asarray(b, dtype=np.float64)
    if b.size != h.levels[0].A_active.nrows:
        raise ValueError(f"b has size {b.size}, matrix has {h.levels[0].A_active.nrows} rows")
    out = np.array(x, dtype=np.float64, copy=True)
    _cycle(h, 0, b, out, spec)
    return out


def _cycle(h: Hierarchy, ell: int, b: np.ndarray, x: np.ndarray, spec: SmootherSpec) -> None:
    if ell == len(h.levels) - 1:
        x[:] = h.coarse_solve(b)
        return
    level = h.levels[ell]
    a = level.A_active
    relax_inplace(a, x, b, spec)
    r = b - spmv(a, x)
    p = level.P.to_scipy()
    bc = p.T @ r
    xc = np.zeros(p.shape[1])
    _cycle(h, ell + 1, bc, xc, spec)
    x += p @ xc
    relax_inplace(a, x, b, spec)


def make_preconditioner(h: Hierarchy, spec: SmootherSpec | None = None):
    """One V-cycle from a zero initial guess, as a callable r -> M r.

    Reads the hierarchy's live operators, so restoring entries between
    Krylov restarts changes subsequent applications automatically.
    """
    spec = spec or SmootherSpec()

    def apply(r: np.ndarray) -> np.ndarray:
        return vcycle(h, r, np.zeros_like(r), spec)

    return apply


def amg_iterate(
    h: Hierarchy,
    b: np.ndarray,
    x0: np.ndarray,
    spec: SmootherSpec | None = None,
    tol: float = 1e-8,
    max_iter: int = 100,
):
    """Plain stationary iteration with the V-cycle (no Krylov wrapper)."""
    t0 = time.perf_counter()
    a = h.levels[0].A_active
    x = np.array(x0, dtype=np.float64, copy=True)
    rep = SolveReport()
    rnorm = float(np.linalg.norm(b - spmv(a, x)))
    rep.residual_history.append(rnorm)
    ref = rnorm if rnorm > 0 else 1.0
    for _ in range(max_iter):
        if rnorm / ref <= tol:
            rep.converged = True
            break
        x = vcycle(h, b, x, spec)
        rnorm = float(np.linalg.norm(b - spmv(a, x)))
        rep.residual_history.append(rnorm)
    else:
        rep.converged = rnorm / ref <= tol
    rep.iterations = len(rep.residual_history) - 1
    rep.wall_time = time.perf_counter() - t0
    return x, rep


# ---------------------------------------------------------------------- #
# Krylov methods


def _identity_preconditioner(r: np.ndarray) -> np.ndarray:
    return r


def pcg(
    a: CsrMatrix,
    b: np.ndarray,
    x0: np.ndarray,
    m=None,
    spec: KrylovSpec | None = None,
    ref_norm: float | None = None,
):
    """Preconditioned conjugate gradients on ||r||/||r0|| <= tol.

    A breakdown (non-positive or non-finite curvature p^T A p, or an
    indefinite preconditioner making r^T z <= 0) stops the iteration with
    converged=False and a note, rather than raising: with lumped
    preconditioners indefiniteness is an expected failure mode the caller
    may react to.
    """
    spec = spec or KrylovSpec()
    m = m or _identity_preconditioner
    t0 = time.perf_counter()
    x = np.array(x0, dtype=np.float64, copy=True)
    b = np.asarray(b, dtype=np.float64)
    rep = SolveReport()
    r = b - spmv(a, x)
    rnorm = float(np.linalg.norm(r))
    rep.residual_history.append(rnorm)
    ref = ref_norm if ref_norm is not None else rnorm
    if ref == 0.0:
        rep.converged = True
        rep.wall_time = time.perf_counter() - t0
        return x, rep
    tol_abs = spec.tol * ref
    if rnorm <= tol_abs:
        rep.converged = True
        rep.wall_time = time.perf_counter() - t0
        return x, rep
    z = m(r)
    p = z.copy()
    rz = float(r @ z)
    for _ in range(spec.max_iter):
        if not np.isfinite(rz) or rz <= 0.0:
            rep.notes.append("pcg breakdown: r'Mr <= 0 (indefinite preconditioner)")
            break
        ap = spmv(a, p)
        pap = float(p @ ap)
        if not np.isfinite(pap) or pap <= 0.0:
            rep.notes.append("pcg breakdown: p'Ap <= 0 (indefiniteness evidence)")
            break
        alpha = rz / pap
        x += alpha * p
        r -= alpha * ap
        rnorm = float(np.linalg.norm(r))
        rep.residual_history.append(rnorm)
        if not np.isfinite(rnorm):
            rep.notes.append("pcg diverged: non-finite residual")
            break
        if rnorm <= tol_abs:
            rep.converged = True
            break
        z = m(r)
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    rep.iterations = len(rep.residual_history) - 1
    rep.wall_time = time.perf_counter() - t0
    return x, rep


def gmres(
    a: CsrMatrix,
    b: np.ndarray,
    x0: np.ndarray,
    m=None,
    spec: KrylovSpec | None = None,
    ref_norm: float | None = None,
):
    """Right-preconditioned restarted GMRES.

    Minimizes ||b - A(x0 + M V y)|| over the Krylov subspace of A M; the
    preconditioner need not be symmetric or definite.  A restart cycle that
    fails to reduce the residual by at least a part in 1e12 is flagged as
    stagnation and stops the run.
    """
    spec = spec or KrylovSpec()
    m = m or _identity_preconditioner
    t0 = time.perf_counter()
    x = np.array(x0, dtype=np.float64, copy=True)
    b = np.asarray(b, dtype=np.float64)
    n = x.size
    rep = SolveReport()
    r = b - spmv(a, x)
    rnorm = float(np.linalg.norm(r))
    rep.residual_history.append(rnorm)
    ref = ref_norm if ref_norm is not None else rnorm
    if ref == 0.0 or rnorm <= spec.tol * ref:
        rep.converged = True
        rep.wall_time = time.perf_counter() - t0
        return x, rep
    tol_abs = spec.tol * ref

    total = 0
    while total < spec.max_iter and not rep.converged:
        cycle_start = rnorm
        k = min(spec.restart, spec.max_iter - total)
        v = np.zeros((k + 1, n))
        hess = np.zeros((k + 1, k))
        cs = np.zeros(k)
        sn = np.zeros(k)
        g = np.zeros(k + 1)
        g[0] = rnorm
        v[0] = r / rnorm
        j_used = 0
        for j in range(k):
            w = spmv(a, m(v[j]))
            for i in range(j + 1):  # modified Gram-Schmidt
                hess[i, j] = float(w @ v[i])
                w -= hess[i, j] * v[i]
            hess[j + 1, j] = float(np.linalg.norm(w))
            if not np.isfinite(hess[: j + 2, j]).all():
                rep.notes.append("gmres diverged: non-finite Arnoldi column")
                j_used = j
                break
            lucky = hess[j + 1, j] == 0.0
            if not lucky:
                v[j + 1] = w / hess[j + 1, j]
            for i in range(j):  # apply stored rotations
                t = cs[i] * hess[i, j] + sn[i] * hess[i + 1, j]
                hess[i + 1, j] = -sn[i] * hess[i, j] + cs[i] * hess[i + 1, j]
                hess[i, j] = t
            denom = float(np.hypot(hess[j, j], hess[j + 1, j]))
            cs[j] = hess[j, j] / denom if denom else 1.0
            sn[j] = hess[j + 1, j] / denom if denom else 0.0
            hess[j, j] = denom
            hess[j + 1, j] = 0.0
            g[j + 1] = -sn[j] * g[j]
            g[j] = cs[j] * g[j]
            total += 1
            j_used = j + 1
            rnorm = abs(float(g[j + 1]))
            rep.residual_history.append(rnorm)
            if rnorm <= tol_abs or lucky or total >= spec.max_iter:
                break
        if j_used > 0:
            y = np.linalg.solve(hess[:j_used, :j_used], g[:j_used])
            x += m(v[:j_used].T @ y)
        r = b - spmv(a, x)
        rnorm = float(np.linalg.norm(r))
        rep.residual_history[-1] = rnorm  # replace estimate with true norm
        if rnorm <= tol_abs:
            rep.converged = True
        elif not np.isfinite(rnorm):
            rep.notes.append("gmres diverged: non-finite residual")
            break
        elif rnorm > cycle_start * (1.0 - 1e-12):
            rep.notes.append("gmres stagnation: no residual reduction over a restart cycle")
            break
    rep.iterations = len(rep.residual_history) - 1
    rep.wall_time = time.perf_counter() - t0
    return x, rep


def _run_krylov(a, b, x, m, spec: KrylovSpec, max_iter: int, ref: float):
    seg = KrylovSpec(method=spec.method, tol=spec.tol, max_iter=max_iter, restart=spec.restart)
    if spec.method == "pcg":
        return pcg(a, b, x, m, seg, ref_norm=ref)
    return gmres(a, b, x, m, seg, ref_norm=ref)


# ---------------------------------------------------------------------- #
# adaptive controller


def next_gamma(gamma: float, gamma_min: float) -> float:
    """Tolerance after one re-add step: gamma/10, snapped to 0 once it
    falls below gamma_min."""
    g = gamma / 10.0
    return g if g >= gamma_min else 0.0


def adaptive_solve(
    a: CsrMatrix,
    b: np.ndarray,
    x0: np.ndarray,
    h: Hierarchy,
    spec: AdaptiveSpec | None = None,
    kspec: KrylovSpec | None = None,
    variant: str = "hybrid",
    lumping: str = "diagonal",
    smoother: SmootherSpec | None = None,
    procs: int | None = None,
):
    """Krylov solve that re-adds dropped hierarchy entries on demand.

    Runs batches of spec.k iterations.  After a non-converged batch the
    trigger decides whether to act: `always` acts unconditionally, while
    `conv_factor` acts when the batch's geometric-mean residual reduction
    exceeds rho_max (a diverged or broken-down batch always acts).  Acting
    means: find the finest level with gamma > 0, lower gamma on the next
    spec.s levels, and re-sparsify them from their retained Galerkin
    operators — the sparse variant rebuilds just those levels, the hybrid
    variant also rebuilds everything coarser (their patterns depend on the
    finer active operators).  The Krylov method then restarts from the
    current x, unless the residual exceeds the initial one, in which case
    x0 is restored.  When every gamma is already 0 the hierarchy is pure
    Galerkin and iteration simply continues to max_iter.

    With procs set, per_iteration_sends[i] records the modeled total
    message count (sum of per-level s_p_max) of the hierarchy state that
    produced residual_history[i].
    """
    spec = spec or AdaptiveSpec()
    kspec = kspec or KrylovSpec()
    if variant not in ("sparse", "hybrid"):
        raise ValueError("adaptive restores need the sparse or hybrid variant")
    t0 = time.perf_counter()
    x = np.array(x0, dtype=np.float64, copy=True)
    b = np.asarray(b, dtype=np.float64)
    m = make_preconditioner(h, smoother)
    rep = SolveReport()
    r0 = b - spmv(a, x)
    r0norm = float(np.linalg.norm(r0))
    rep.residual_history.append(r0norm)
    sends = hierarchy_sends(h, procs) if procs else 0
    rep.per_iteration_sends.append(sends)
    if r0norm == 0.0:
        rep.converged = True
        rep.wall_time = time.perf_counter() - t0
        return x, rep

    total = 0
    while total < kspec.max_iter:
        batch = min(spec.k, kspec.max_iter - total)
        start_norm = rep.residual_history[-1]
        x, seg = _run_krylov(a, b, x, m, kspec, batch, r0norm)
        seg_hist = seg.residual_history[1:]
        rep.residual_history.extend(seg_hist)
        rep.per_iteration_sends.extend([sends] * len(seg_hist))
        rep.notes.extend(seg.notes)
        total += len(seg_hist)
        if seg.converged:
            rep.converged = True
            break
        end_norm = rep.residual_history[-1]
        broke = bool(seg.notes) or len(seg_hist) < batch
        if seg_hist and np.isfinite(end_norm) and end_norm > 0 and start_norm > 0:
            rho = (end_norm / start_norm) ** (1.0 / len(seg_hist))
        else:
            rho = float("inf")  # breakdown/divergence counts as a failed batch
        rep.conv_factor_per_batch.append(rho)
        fire = spec.trigger == "always" or rho > spec.rho_max or broke or not np.isfinite(rho)
        if not fire:
            continue
        ell_start = next(
            (ell for ell in range(1, len(h.levels)) if h.levels[ell].gamma > 0), None
        )
        if ell_start is None:
            if not seg_hist:
                # a broken-down batch that cannot iterate, with nothing
                # left to restore: stop instead of spinning
                rep.notes.append("adaptive: breakdown with pure Galerkin hierarchy")
                break
            continue  # pure Galerkin already; keep iterating
        window = range(ell_start, min(ell_start + spec.s, len(h.levels)))
        new_gammas = {ell: next_gamma(h.levels[ell].gamma, spec.gamma_min) for ell in window}
        for ell in window:
            rep.adaptive_events.append(
                {
                    "iteration": total,
                    "level": ell,
                    "old_gamma": h.levels[ell].gamma,
                    "new_gamma": new_gammas[ell],
                }
            )
        if variant == "sparse":
            for ell in window:
                _sparsify_level(h, ell, new_gammas[ell], "sparse", lumping)
        else:
            for ell in range(ell_start, len(h.levels)):
                g = new_gammas.get(ell, h.levels[ell].gamma)
                _sparsify_level(h, ell, g, "hybrid", lumping)
        if procs:
            sends = hierarchy_sends(h, procs)
        # restart: keep x unless the run has diverged past the start
        rcur = b - spmv(a, x)
        rnorm = float(np.linalg.norm(rcur))
        if not np.isfinite(rnorm) or rnorm > r0norm:
            x = np.array(x0, dtype=np.float64, copy=True)

    rep.iterations = len(rep.residual_history) - 1
    rep.wall_time = time.perf_counter() - t0
    return x, rep
