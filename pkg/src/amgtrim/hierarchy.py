"""Classical AMG setup: strength, C/F splitting, interpolation, coarsening.

The setup is deliberately plain Ruge-Stueben with direct interpolation; the
interesting machinery in this package (coarse-operator sparsification and
adaptive restoration) sits on top of whatever hierarchy this module builds.
All choices here are deterministic: greedy ties break toward the lowest
index, coarse points are numbered in ascending fine-row order, and the
Galerkin product is exactly symmetrized after a tolerance check.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .csr import CsrMatrix, is_symmetric, matmat, symmetrize, transpose


@dataclass(frozen=True)
class StrengthMatrix:
    """Strong off-diagonal edges; stored values are the magnitudes |a_ij|."""

    pattern: CsrMatrix
    threshold: float


def strength(a: CsrMatrix, theta: float = 0.25) -> StrengthMatrix:
    """Classical strength of connection.

    Edge (i, j) is strong when -a_ij >= theta * max_k(-a_ik), the max over
    off-diagonal entries of row i.  Rows whose off-diagonal maximum of -a_ik
    is <= 0 (all-positive couplings) have no strong edges.
    """
    if theta < 0 or theta > 1:
        raise ValueError("expected theta in [0,1]")
    if a.nrows != a.ncols:
        raise ValueError("strength requires a square matrix")
    rows = a.row_of_entry()
    offdiag = rows != a.colind
    neg = -a.values
    rowmax = np.full(a.nrows, -np.inf)
    np.maximum.at(rowmax, rows[offdiag], neg[offdiag])
    strong = offdiag & (rowmax[rows] > 0) & (neg >= theta * rowmax[rows])
    pat = CsrMatrix.from_coo(rows[strong], a.colind[strong], np.abs(a.values[strong]), a.shape)
    return StrengthMatrix(pattern=pat, threshold=float(theta))


@dataclass(frozen=True)
class CfSplitting:
    is_coarse: np.ndarray  # bool per fine point
    coarse_index: np.ndarray  # int per fine point, -1 for F points

    @property
    def n_coarse(self) -> int:
        return int(self.is_coarse.sum())


def cf_split(s: StrengthMatrix, isolated: np.ndarray | None = None) -> CfSplitting:
    """Greedy Ruge-Stueben first pass plus the C-neighbor repair pass.

    The measure of an unassigned point is the number of points that strongly
    depend on it and are still unassigned or already F.  Repeatedly the
    unassigned point of maximal measure (ties toward the lowest index)
    becomes C and its unassigned strong dependents become F.  Points flagged
    ``isolated`` (no off-diagonal entries in the underlying operator) are
    forced F up front and are later interpolated by zero.
    """
    sm = s.pattern
    n = sm.nrows
    st = transpose(sm)
    status = np.zeros(n, dtype=np.int8)  # 0 unassigned, 1 C, -1 F
    if isolated is not None:
        status[np.asarray(isolated, dtype=bool)] = -1

    # measure = count of strong transpose-neighbors that are unassigned or F
    measure = np.diff(st.rowptr).astype(np.int64)
    heap = [(-measure[i], i) for i in range(n) if status[i] == 0]
    heapq.heapify(heap)
    while heap:
        negm, c = heapq.heappop(heap)
        if status[c] != 0 or -negm != measure[c]:
            continue  # stale entry
        status[c] = 1
        for j in st.row_cols(c):  # points strongly depending on c
            if status[j] == 0:
                status[j] = -1
        for i in sm.row_cols(c):  # c leaves the unassigned-or-F pool
            measure[i] -= 1
            if status[i] == 0:
                heapq.heappush(heap, (-measure[i], i))

    # repair: every F point with strong edges needs a strong C neighbor
    for i in range(n):
        if status[i] == -1:
            cols = sm.row_cols(i)
            if cols.size and not np.any(status[cols] == 1):
                status[i] = 1

    is_coarse = status == 1
    coarse_index = np.full(n, -1, dtype=np.int64)
    coarse_index[is_coarse] = np.arange(int(is_coarse.sum()), dtype=np.int64)
    return CfSplitting(is_coarse=is_coarse, coarse_index=coarse_index)


def direct_interpolation(
    a: CsrMatrix,
    s: StrengthMatrix,
    split: CfSplitting,
    max_row_elems: int | None = None,
):
    """Direct interpolation P and the matching injection operator.

    F-point weights are w_ij = -(a_ij / a_ii) * (sum_{k in N_i} a_ik /
    sum_{k in C_i^s} a_ik) over the strong C neighbors C_i^s.  C rows carry a
    single 1.  The injection variant keeps only the C-row identities (F rows
    empty).  ``max_row_elems`` optionally truncates F rows to the largest
    weights by magnitude, rescaled to preserve the row sum.
    """
    n = a.nrows
    nc = split.n_coarse
    rows: list[np.ndarray] = []
    cols: list[np.ndarray] = []
    vals: list[np.ndarray] = []
    for i in range(n):
        if split.is_coarse[i]:
            rows.append(np.array([i]))
            cols.append(np.array([split.coarse_index[i]]))
            vals.append(np.array([1.0]))
            continue
        s_cols = s.pattern.row_cols(i)
        if s_cols.size == 0:
            continue  # no strong connections: interpolated by zero
        cs = s_cols[split.is_coarse[s_cols]]
        if cs.size == 0:
            raise ValueError(f"F point {i} has strong connections but no strong C neighbor")
        a_cols = a.row_cols(i)
        a_vals = a.row_vals(i)
        diag_pos = np.searchsorted(a_cols, i)
        if diag_pos >= a_cols.size or a_cols[diag_pos] != i or a_vals[diag_pos] == 0.0:
            raise ValueError(f"row {i} has no usable diagonal entry")
        diag = a_vals[diag_pos]
        offmask = a_cols != i
        total = a_vals[offmask].sum()
        cs_pos = np.searchsorted(a_cols, cs)
        denom = a_vals[cs_pos].sum()
        if denom == 0.0:
            raise ValueError(f"interpolation weights undefined for row {i}: strong C sum is zero")
        w = -(a_vals[cs_pos] / diag) * (total / denom)
        ccols = split.coarse_index[cs]
        if max_row_elems is not None and w.size > max_row_elems:
            order = np.lexsort((ccols, -np.abs(w)))[:max_row_elems]
            kept_sum = w[order].sum()
            scale = w.sum() / kept_sum if kept_sum != 0.0 else 1.0
            w, ccols = w[order] * scale, ccols[order]
        rows.append(np.full(w.size, i))
        cols.append(ccols)
        vals.append(w)
    p = CsrMatrix.from_coo(
        np.concatenate(rows), np.concatenate(cols), np.concatenate(vals), (n, nc)
    )
    c_rows = np.flatnonzero(split.is_coarse)
    p_inj = CsrMatrix.from_coo(
        c_rows, split.coarse_index[c_rows], np.ones(c_rows.size), (n, nc)
    )
    return p, p_inj


def galerkin_product(a: CsrMatrix, p: CsrMatrix) -> CsrMatrix:
    """P^T A P.  For symmetric A the product is checked symmetric to 1e-12
    (relative) and then exactly symmetrized by averaging with its transpose."""
    if a.ncols != p.nrows:
        raise ValueError(f"dimension mismatch: A is {a.shape}, P is {p.shape}")
    raw = matmat(transpose(p), matmat(a, p))
    if is_symmetric(a, tol=1e-12 * a.max_abs()):
        if not is_symmetric(raw, tol=1e-12 * max(raw.max_abs(), 1e-300)):
            raise ValueError("Galerkin product of a symmetric operator lost symmetry")
        return symmetrize(raw)
    return raw


# ---------------------------------------------------------------------- #
# hierarchy


@dataclass
class Level:
    """One level of the hierarchy.

    ``A`` is the Galerkin operator created at this level; ``A_active`` is the
    operator the solver actually smooths and computes residuals with (a
    sparsified stand-in, or A itself).  ``P``/``P_inj``/``S`` describe the
    transfer down to the next coarser level and are None on the coarsest.
    """

    A: CsrMatrix
    A_active: CsrMatrix
    P: CsrMatrix | None = None
    P_inj: CsrMatrix | None = None
    S: StrengthMatrix | None = None
    gamma: float = 0.0
    delta: "object" = None  # DeltaLog once sparsified

    @property
    def n(self) -> int:
        return self.A.nrows


@dataclass
class Hierarchy:
    levels: list[Level] = field(default_factory=list)
    theta: float = 0.25
    stalled: bool = False
    _coarse_lu: tuple | None = None

    def __len__(self) -> int:
        return len(self.levels)

    def coarse_solve(self, b: np.ndarray) -> np.ndarray:
        """Direct solve with the coarsest level's active operator.

        The dense LU is cached and recomputed whenever the active operator
        object changes (sparsification and restores swap it out).
        """
        op = self.levels[-1].A_active
        if self._coarse_lu is None or self._coarse_lu[0] is not op:
            dense = op.to_dense()
            lu, piv = scipy.linalg.lu_factor(dense)
            if dense.size and np.any(np.diag(lu) == 0.0):
                raise ValueError("coarsest-level factorization is singular")
            self._coarse_lu = (op, lu, piv)
        return scipy.linalg.lu_solve(self._coarse_lu[1:], b)

    def level_report(self, active: bool = True) -> list[dict]:
        out = []
        for ell, lv in enumerate(self.levels):
            op = lv.A_active if active else lv.A
            out.append(
                {
                    "level": ell,
                    "n": op.nrows,
                    "nnz": op.nnz,
                    "nnz_per_row": op.nnz / op.nrows if op.nrows else 0.0,
                }
            )
        return out


def amg_setup(
    a0: CsrMatrix,
    max_size: int = 300,
    theta: float = 0.25,
    nongalerkin: "object" = None,
    max_row_elems: int | None = None,
    max_levels: int = 50,
) -> Hierarchy:
    """Build a Galerkin hierarchy by repeated strength/split/interpolate.

    With a ``nongalerkin`` drop schedule each newly formed Galerkin product
    is immediately replaced by its sparsified version before coarsening
    continues (the lossy in-loop variant); schedules shorter than the final
    hierarchy repeat their last entry.
    """
    if a0.nrows != a0.ncols:
        raise ValueError("amg_setup requires a square matrix")
    if not is_symmetric(a0, tol=1e-12 * max(a0.max_abs(), 1e-300)):
        raise ValueError("amg_setup requires a symmetric operator")

    h = Hierarchy(levels=[Level(A=a0, A_active=a0)], theta=float(theta))
    if nongalerkin is not None:
        from .sparsify import sparsify  # deferred; sparsify imports this module

    while h.levels[-1].A_active.nrows > max_size and len(h.levels) < max_levels:
        cur = h.levels[-1]
        acur = cur.A_active
        s = strength(acur, theta)
        isolated = np.diff(acur.rowptr) - (acur.diagonal() != 0.0).astype(np.int64) == 0
        split = cf_split(s, isolated=isolated)
        nc = split.n_coarse
        if nc == 0 or nc == acur.nrows:
            h.stalled = True
            break
        p, p_inj = direct_interpolation(acur, s, split, max_row_elems)
        a_next = galerkin_product(acur, p)
        cur.S, cur.P, cur.P_inj = s, p, p_inj
        if nongalerkin is None:
            h.levels.append(Level(A=a_next, A_active=a_next))
        else:
            ell = len(h.levels)
            gammas = nongalerkin.gammas
            g = float(gammas[ell]) if ell < len(gammas) else float(gammas[-1])
            s_lump = strength(a_next, theta) if nongalerkin.lumping == "neighbors" else None
            a_hat, delta = sparsify(a_next, acur, p, p_inj, s_lump, g, nongalerkin.lumping)
            h.levels.append(Level(A=a_hat, A_active=a_hat, gamma=g, delta=delta))
    return h


__all__ = [
    "StrengthMatrix",
    "strength",
    "CfSplitting",
    "cf_split",
    "direct_interpolation",
    "galerkin_product",
    "Level",
    "Hierarchy",
    "amg_setup",
]
