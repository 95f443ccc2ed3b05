"""Post-setup sparsification of coarse Galerkin operators.

The coarse operators of an AMG hierarchy densify level by level, which is
what makes their distributed matvecs communication-bound.  This module thins
a coarse operator A_c to a stand-in with fewer edges while conserving row
sums, in three composable steps:

1. ``minimal_pattern``: the symmetrized edge set of the half-injected triple
   products (Pinj^T A P and P^T A Pinj), the structural floor below which
   entries are never dropped.
2. ``keep_set``: the minimal pattern, plus every entry at least gamma times
   its row's largest off-diagonal magnitude, symmetrized, plus all diagonal
   positions.  gamma=0 keeps everything, gamma=1 keeps only row maxima on
   top of the floor.
3. a lumping rule for the dropped values: ``lump_neighbors`` redistributes
   each dropped value over strong neighbors of its column inside the keep
   set, ``lump_diagonal`` folds it into the row diagonal (which preserves
   symmetric diagonal dominance and keeps Gershgorin discs from moving
   left).

Every drop is recorded in a ``DeltaLog``; re-sparsifying the pristine
Galerkin operator at a smaller gamma (``restore``) undoes drops exactly, so
the whole construction is lossless as long as the Galerkin operators are
retained.  ``sparse_hybrid_setup`` applies the pipeline across a built
hierarchy, deriving each level's pattern either from the Galerkin fine
operator (sparse variant) or from the already-thinned fine operator (hybrid
variant).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .csr import CsrMatrix
from .hierarchy import Hierarchy, StrengthMatrix, strength

VARIANTS = ("sparse", "hybrid", "nongalerkin")
LUMPINGS = ("neighbors", "diagonal")

# A row "sums to zero" when |sum| is below this times the row's 1-norm.
ZERO_ROWSUM_RTOL = 1e-14


def _entry_keys(nrows: int, ncols: int, rows, cols) -> np.ndarray:
    # strictly increasing over canonical CSR storage order
    return rows.astype(np.int64) * np.int64(ncols + 1) + cols.astype(np.int64)


@dataclass(frozen=True)
class SparsityPattern:
    """A set of matrix positions, stored as a binary CSR matrix."""

    pattern: CsrMatrix

    @property
    def nnz(self) -> int:
        return self.pattern.nnz

    @property
    def shape(self):
        return self.pattern.shape

    def contains(self, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
        """Membership test for (row, col) pairs, vectorized."""
        pat = self.pattern
        keys = _entry_keys(pat.nrows, pat.ncols, pat.row_of_entry(), pat.colind)
        probe = _entry_keys(pat.nrows, pat.ncols, np.asarray(rows), np.asarray(cols))
        pos = np.searchsorted(keys, probe)
        ok = pos < keys.size
        out = np.zeros(probe.size, dtype=bool)
        out[ok] = keys[pos[ok]] == probe[ok]
        return out

    def to_dense_bool(self) -> np.ndarray:
        return self.pattern.to_dense() != 0.0


def _binary(m) -> sp.csr_matrix:
    m = sp.csr_matrix(m, copy=True)
    m.data = np.ones_like(m.data)
    return m


def minimal_pattern(a_fine: CsrMatrix, p: CsrMatrix, p_inj: CsrMatrix) -> SparsityPattern:
    """Edges of Pinj^T A P + P^T A Pinj, symmetrized.

    Computed on binary operands so the union is structural; numeric
    cancellation inside the products cannot delete positions.
    """
    if a_fine.nrows != a_fine.ncols:
        raise ValueError("minimal_pattern requires a square fine operator")
    if p.nrows != a_fine.nrows or p_inj.nrows != a_fine.nrows or p.ncols != p_inj.ncols:
        raise ValueError(
            f"shape mismatch: A {a_fine.shape}, P {p.shape}, injection {p_inj.shape}"
        )
    ab = _binary(a_fine.to_scipy())
    pb = _binary(p.to_scipy())
    pib = _binary(p_inj.to_scipy())
    u = pib.T @ (ab @ pb) + pb.T @ (ab @ pib)
    u = u + u.T
    return SparsityPattern(CsrMatrix.from_scipy(_binary(u)))


def keep_set(a_c: CsrMatrix, m: SparsityPattern, gamma: float) -> SparsityPattern:
    """Positions of A_c that survive dropping at tolerance gamma.

    An off-diagonal entry survives if it lies in the minimal pattern M or if
    |A_c(i,j)| >= gamma * max_{k != i} |A_c(i,k)|.  Survivors are
    symmetrized and every diagonal position is always included.  The result
    is restricted to stored positions of A_c plus the diagonal.
    """
    if not 0.0 <= gamma <= 1.0:
        raise ValueError("expected gamma in [0,1]")
    if a_c.nrows != a_c.ncols:
        raise ValueError("keep_set requires a square matrix")
    if m.shape != a_c.shape:
        raise ValueError(f"pattern shape {m.shape} does not match matrix {a_c.shape}")
    n = a_c.nrows
    rows = a_c.row_of_entry()
    cols = a_c.colind
    absv = np.abs(a_c.values)
    offdiag = rows != cols
    rowmax = np.zeros(n)
    np.maximum.at(rowmax, rows[offdiag], absv[offdiag])
    qualifies = m.contains(rows, cols) | (absv >= gamma * rowmax[rows]) | ~offdiag
    q = _binary(
        sp.coo_matrix((np.ones(int(qualifies.sum())), (rows[qualifies], cols[qualifies])), shape=(n, n))
    )
    symq = _binary(q + q.T)
    restricted = symq.multiply(_binary(a_c.to_scipy()))
    full = _binary(restricted + sp.identity(n, format="csr"))
    return SparsityPattern(CsrMatrix.from_scipy(full))


# ---------------------------------------------------------------------- #
# drop log


@dataclass(frozen=True)
class DeltaRecord:
    """One dropped entry and where its value went: (row, col, fraction)
    triples whose fraction * value sum back to the removed value."""

    row: int
    col: int
    value: float
    destinations: tuple

    def to_json(self) -> str:
        return json.dumps(
            {
                "row": self.row,
                "col": self.col,
                "value": self.value,
                "destinations": [[r, c, f] for r, c, f in self.destinations],
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "DeltaRecord":
        d = json.loads(text)
        return cls(
            row=int(d["row"]),
            col=int(d["col"]),
            value=float(d["value"]),
            destinations=tuple((int(r), int(c), float(f)) for r, c, f in d["destinations"]),
        )


@dataclass
class DeltaLog:
    """Record of every entry a lumping pass removed, in insertion order."""

    gamma: float = 0.0
    records: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    def to_jsonl(self, path) -> None:
        with open(path, "w", encoding="ascii") as fh:
            for rec in self.records:
                fh.write(rec.to_json() + "\n")

    @classmethod
    def from_jsonl(cls, path, gamma: float = 0.0) -> "DeltaLog":
        records = []
        with open(path, "r", encoding="ascii") as fh:
            for line in fh:
                if line.strip():
                    records.append(DeltaRecord.from_json(line))
        return cls(gamma=gamma, records=records)

    def undo(self, a_hat: CsrMatrix) -> CsrMatrix:
        """Invert the lumping on a_hat by replaying records newest-first.

        Exact when the arithmetic of the forward pass is exact (integer or
        dyadic data); otherwise equal to the original up to roundoff.
        """
        entries: dict = {}
        rows = a_hat.row_of_entry()
        for r, c, v in zip(rows, a_hat.colind, a_hat.values):
            entries[(int(r), int(c))] = float(v)
        for rec in reversed(self.records):
            for r, c, f in rec.destinations:
                key = (r, c)
                entries[key] = entries.get(key, 0.0) - f * rec.value
            entries[(rec.row, rec.col)] = entries.get((rec.row, rec.col), 0.0) + rec.value
        if entries:
            rr, cc = zip(*entries.keys())
            vv = list(entries.values())
        else:
            rr = cc = vv = []
        return CsrMatrix.from_coo(rr, cc, vv, a_hat.shape)


# ---------------------------------------------------------------------- #
# lumping rules


def _row_sets(pat: CsrMatrix) -> list:
    rows = [set() for _ in range(pat.nrows)]
    for i in range(pat.nrows):
        rows[i].update(int(c) for c in pat.row_cols(i))
    return rows


def lump_neighbors(
    a_c: CsrMatrix,
    n_pat: SparsityPattern,
    s_c: StrengthMatrix,
    gamma: float = float("nan"),
):
    """Drop entries outside the keep set, spreading each dropped value over
    the strong neighbors of its column that the keep set can carry.

    For dropped (i, j) the receiver set is W = {k : S_c(j,k) != 0 and (i,k)
    in N}; receiver k takes the fraction |S_c(j,k)| / sum over W, added at
    (i,k) and (k,i) and subtracted at (k,k), which conserves the row sums of
    both rows.  An entry with empty W is kept instead, and its position and
    mirror join the keep set before any value moves (so keep decisions stay
    symmetric and deterministic).
    """
    if a_c.nrows != a_c.ncols:
        raise ValueError("lump_neighbors requires a square matrix")
    if s_c is None:
        raise ValueError("neighbor lumping needs a strength matrix for the coarse operator")
    rows = a_c.row_of_entry()
    cols = a_c.colind
    vals = a_c.values
    in_n = n_pat.contains(rows, cols)
    nsets = _row_sets(n_pat.pattern)
    spat = s_c.pattern

    # pass 1: final keep decisions; entries with no receiver join the set
    for t in np.flatnonzero(~in_n):
        i, j = int(rows[t]), int(cols[t])
        if j in nsets[i]:
            continue  # already pulled in by an earlier mirror
        if not any(int(k) in nsets[i] for k in spat.row_cols(j)):
            nsets[i].add(j)
            nsets[j].add(i)
    keep = np.fromiter(
        (int(c) in nsets[r] for r, c in zip(rows, cols)), dtype=bool, count=rows.size
    )

    # pass 2: redistribute the remaining drops against the final keep set
    upd_r: list = []
    upd_c: list = []
    upd_v: list = []
    records = []
    for t in np.flatnonzero(~keep):
        i, j, v = int(rows[t]), int(cols[t]), float(vals[t])
        scols = spat.row_cols(j)
        svals = spat.row_vals(j)
        mask = np.fromiter((int(k) in nsets[i] for k in scols), dtype=bool, count=scols.size)
        w_cols = scols[mask]
        w_str = svals[mask]
        total = w_str.sum()
        fractions = w_str / total
        dest = []
        for k, f in zip(w_cols, fractions):
            k = int(k)
            f = float(f)
            fv = f * v
            upd_r.extend((i, k, k))
            upd_c.extend((k, i, k))
            upd_v.extend((fv, fv, -fv))
            dest.extend(((i, k, f), (k, i, f), (k, k, -f)))
        records.append(DeltaRecord(row=i, col=j, value=v, destinations=tuple(dest)))

    out_r = np.concatenate([rows[keep], np.asarray(upd_r, dtype=np.int64)])
    out_c = np.concatenate([cols[keep], np.asarray(upd_c, dtype=np.int64)])
    out_v = np.concatenate([vals[keep], np.asarray(upd_v, dtype=np.float64)])
    a_hat = CsrMatrix.from_coo(out_r, out_c, out_v, a_c.shape)
    return a_hat, DeltaLog(gamma=gamma, records=records)


def lump_diagonal(a_c: CsrMatrix, n_pat: SparsityPattern, gamma: float = float("nan")):
    """Drop entries outside the keep set, folding each dropped value into
    its row's diagonal.

    An entry outside the keep set is still retained when it is the row's
    largest off-diagonal magnitude (ties toward the smallest column), every
    other off-diagonal of the row is marked for removal, and the row sums to
    zero; this preserves the row's null-vector.  Keep decisions are
    symmetrized.  For symmetric diagonally dominant input the result stays
    symmetric, diagonally dominant, and positive semi-definite.
    """
    if a_c.nrows != a_c.ncols:
        raise ValueError("lump_diagonal requires a square matrix")
    n = a_c.nrows
    rows = a_c.row_of_entry()
    cols = a_c.colind
    vals = a_c.values
    absv = np.abs(vals)
    offdiag = rows != cols
    in_n = n_pat.contains(rows, cols)

    rowmax = np.zeros(n)
    np.maximum.at(rowmax, rows[offdiag], absv[offdiag])
    at_max = offdiag & (absv == rowmax[rows]) & (rowmax[rows] > 0)
    tie_col = np.full(n, np.iinfo(np.int64).max, dtype=np.int64)
    np.minimum.at(tie_col, rows[at_max], cols[at_max])
    n_off_in_keep = np.bincount(rows[offdiag & in_n], minlength=n)
    rowsum = np.bincount(rows, weights=vals, minlength=n)
    row_l1 = np.bincount(rows, weights=absv, minlength=n)
    zero_sum = np.abs(rowsum) <= ZERO_ROWSUM_RTOL * row_l1
    ismax = (
        at_max
        & (cols == tie_col[rows])
        & (n_off_in_keep[rows] == 0)
        & zero_sum[rows]
    )

    keep = in_n | ~offdiag | ismax
    # symmetrize: a kept entry keeps its stored mirror too
    kept_keys = _entry_keys(n, n, rows[keep], cols[keep])
    mirror_keys = _entry_keys(n, n, cols, rows)
    pos = np.searchsorted(kept_keys, mirror_keys)
    ok = pos < kept_keys.size
    mirror_kept = np.zeros(rows.size, dtype=bool)
    mirror_kept[ok] = kept_keys[pos[ok]] == mirror_keys[ok]
    keep = keep | mirror_kept

    drop = ~keep
    dsum = np.bincount(rows[drop], weights=vals[drop], minlength=n)
    drop_rows = np.flatnonzero(np.bincount(rows[drop], minlength=n) > 0)
    out_r = np.concatenate([rows[keep], drop_rows])
    out_c = np.concatenate([cols[keep], drop_rows])
    out_v = np.concatenate([vals[keep], dsum[drop_rows]])
    a_hat = CsrMatrix.from_coo(out_r, out_c, out_v, a_c.shape)

    records = [
        DeltaRecord(
            row=int(rows[t]),
            col=int(cols[t]),
            value=float(vals[t]),
            destinations=((int(rows[t]), int(rows[t]), 1.0),),
        )
        for t in np.flatnonzero(drop)
    ]
    return a_hat, DeltaLog(gamma=gamma, records=records)


# ---------------------------------------------------------------------- #
# the full pipeline


def sparsify(
    a_c: CsrMatrix,
    a_fine: CsrMatrix,
    p: CsrMatrix,
    p_inj: CsrMatrix,
    s_for_lumping: StrengthMatrix | None,
    gamma: float,
    lumping: str,
):
    """minimal_pattern -> keep_set -> lumping, returning (A_hat, DeltaLog).

    gamma=0 reproduces A_c bitwise with an empty log.
    """
    if lumping not in LUMPINGS:
        raise ValueError(f"unknown lumping {lumping!r}, expected one of {LUMPINGS}")
    m = minimal_pattern(a_fine, p, p_inj)
    n_pat = keep_set(a_c, m, gamma)
    if lumping == "neighbors":
        return lump_neighbors(a_c, n_pat, s_for_lumping, gamma=gamma)
    return lump_diagonal(a_c, n_pat, gamma=gamma)


@dataclass(frozen=True)
class DropSchedule:
    """Per-level drop tolerances plus the variant and lumping rule.

    gammas[0] belongs to the finest operator, which is never sparsified, and
    is ignored.
    """

    gammas: tuple
    lumping: str = "diagonal"
    variant: str = "sparse"

    def __post_init__(self):
        object.__setattr__(self, "gammas", tuple(float(g) for g in self.gammas))
        if not self.gammas:
            raise ValueError("schedule needs at least one entry")
        if any(g < 0.0 or g > 1.0 for g in self.gammas):
            raise ValueError("drop tolerances must lie in [0,1]")
        if self.lumping not in LUMPINGS:
            raise ValueError(f"unknown lumping {self.lumping!r}")
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")


def sparse_hybrid_setup(h: Hierarchy, schedule: DropSchedule) -> Hierarchy:
    """Sparsify every coarse level of a built Galerkin hierarchy in place.

    The sparse variant derives each level's minimal pattern from the
    Galerkin fine operator; the hybrid variant substitutes the already
    sparsified fine operator, making coarse patterns (and communication)
    sparser still.  The Galerkin operators are retained untouched, so any
    level can later be restored.
    """
    if schedule.variant not in ("sparse", "hybrid"):
        raise ValueError("post-setup sparsification expects the sparse or hybrid variant")
    if len(schedule.gammas) != len(h.levels):
        raise ValueError(
            f"schedule has {len(schedule.gammas)} entries for {len(h.levels)} levels"
        )
    top = h.levels[0]
    top.A_active, top.gamma, top.delta = top.A, 0.0, None
    for ell in range(1, len(h.levels)):
        _sparsify_level(h, ell, schedule.gammas[ell], schedule.variant, schedule.lumping)
    return h


def _sparsify_level(h: Hierarchy, ell: int, gamma: float, variant: str, lumping: str):
    level = h.levels[ell]
    finer = h.levels[ell - 1]
    a_fine = finer.A if variant == "sparse" else finer.A_active
    s_lump = strength(level.A, h.theta) if lumping == "neighbors" else None
    a_hat, delta = sparsify(level.A, a_fine, finer.P, finer.P_inj, s_lump, gamma, lumping)
    level.A_active, level.gamma, level.delta = a_hat, float(gamma), delta


def restore(h: Hierarchy, level_index: int, new_gamma: float, variant: str, lumping: str):
    """Reintroduce entries on one level by re-sparsifying its retained
    Galerkin operator at a smaller tolerance.

    Equivalent to replaying the delta log down to the new tolerance; at
    new_gamma=0 the level's active operator equals the Galerkin operator
    bitwise.  Raising the tolerance is refused.
    """
    if not 1 <= level_index < len(h.levels):
        raise ValueError(f"level {level_index} is not a coarse level of this hierarchy")
    level = h.levels[level_index]
    if new_gamma > level.gamma:
        raise ValueError(
            f"restore can only lower the drop tolerance ({new_gamma} > {level.gamma})"
        )
    _sparsify_level(h, level_index, new_gamma, variant, lumping)
    return h.levels[level_index]
