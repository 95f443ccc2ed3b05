"""Canonical CSR matrices and the handful of exact kernels everything else uses.

All operators in this package are square-ish sparse matrices in compressed
sparse row form.  The canonical form is strict: column indices sorted and
unique within each row, no explicitly stored zeros, float64 values, int64
index arrays.  Construction enforces canonical form once; after that the
arrays are frozen (read-only) so a matrix can be shared between hierarchy
levels without defensive copies.

Heavy structural work (products, transposes, sums) is delegated to scipy's
compiled sparse routines and re-canonicalized on the way out.  The matvec is
scipy's sequential CSR kernel, which accumulates each row in ascending column
order, so repeated calls are bitwise reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

# 1-D float64 numpy arrays serve as dense vectors throughout.
DenseVector = np.ndarray


def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class CsrMatrix:
    """Immutable CSR matrix in canonical form."""

    nrows: int
    ncols: int
    rowptr: np.ndarray
    colind: np.ndarray
    values: np.ndarray

    # ------------------------------------------------------------------ #
    # construction

    @classmethod
    def _from_canonical_arrays(cls, nrows, ncols, rowptr, colind, values):
        return cls(
            int(nrows),
            int(ncols),
            _freeze(np.ascontiguousarray(rowptr, dtype=np.int64)),
            _freeze(np.ascontiguousarray(colind, dtype=np.int64)),
            _freeze(np.ascontiguousarray(values, dtype=np.float64)),
        )

    @classmethod
    def from_scipy(cls, m) -> "CsrMatrix":
        """Canonicalize any scipy sparse matrix: sum duplicates, sort, prune zeros."""
        m = sp.csr_matrix(m, copy=True)
        m.sum_duplicates()
        m.sort_indices()
        if m.nnz and np.any(m.data == 0.0):
            m.data[m.data == 0.0] = 0.0  # normalize -0.0 before prune
            m.eliminate_zeros()
        return cls._from_canonical_arrays(m.shape[0], m.shape[1], m.indptr, m.indices, m.data)

    @classmethod
    def from_coo(cls, rows, cols, vals, shape) -> "CsrMatrix":
        nrows, ncols = shape
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals, dtype=np.float64)
        if rows.size and (rows.min() < 0 or rows.max() >= nrows):
            raise ValueError("row index out of range")
        if cols.size and (cols.min() < 0 or cols.max() >= ncols):
            raise ValueError("column index out of range")
        m = sp.coo_matrix((vals, (rows, cols)), shape=(nrows, ncols))
        return cls.from_scipy(m)

    @classmethod
    def from_dense(cls, a) -> "CsrMatrix":
        return cls.from_scipy(sp.csr_matrix(np.asarray(a, dtype=np.float64)))

    @classmethod
    def identity(cls, n: int) -> "CsrMatrix":
        return cls.from_scipy(sp.identity(n, dtype=np.float64, format="csr"))

    @classmethod
    def zeros(cls, nrows: int, ncols: int) -> "CsrMatrix":
        return cls._from_canonical_arrays(
            nrows, ncols, np.zeros(nrows + 1, dtype=np.int64), [], []
        )

    # ------------------------------------------------------------------ #
    # views and conversions

    @property
    def nnz(self) -> int:
        return int(self.values.size)

    @property
    def shape(self):
        return (self.nrows, self.ncols)

    def to_scipy(self) -> sp.csr_matrix:
        m = sp.csr_matrix(
            (self.values, self.colind, self.rowptr), shape=self.shape, copy=False
        )
        # already canonical; stop scipy from re-sorting our frozen arrays
        m.has_sorted_indices = True
        m.has_canonical_format = True
        return m

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.shape)
        rows = np.repeat(np.arange(self.nrows), np.diff(self.rowptr))
        out[rows, self.colind] = self.values
        return out

    def row_cols(self, i: int) -> np.ndarray:
        return self.colind[self.rowptr[i] : self.rowptr[i + 1]]

    def row_vals(self, i: int) -> np.ndarray:
        return self.values[self.rowptr[i] : self.rowptr[i + 1]]

    def row_of_entry(self) -> np.ndarray:
        """Row index of every stored entry, aligned with colind/values."""
        return np.repeat(np.arange(self.nrows, dtype=np.int64), np.diff(self.rowptr))

    def diagonal(self) -> np.ndarray:
        return self.to_scipy().diagonal()

    def pattern(self) -> "CsrMatrix":
        """Same structure with all values set to one."""
        return CsrMatrix._from_canonical_arrays(
            self.nrows, self.ncols, self.rowptr, self.colind, np.ones(self.nnz)
        )

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values))) if self.nnz else 0.0

    def equal_bitwise(self, other: "CsrMatrix") -> bool:
        return (
            self.shape == other.shape
            and np.array_equal(self.rowptr, other.rowptr)
            and np.array_equal(self.colind, other.colind)
            and np.array_equal(self.values, other.values)
        )


# ---------------------------------------------------------------------- #
# exact kernels


def spmv(a: CsrMatrix, x: DenseVector) -> DenseVector:
    """y = A x.  Sequential row-wise accumulation; bitwise deterministic."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (a.ncols,):
        raise ValueError(f"dimension mismatch: matrix is {a.shape}, vector has shape {x.shape}")
    return a.to_scipy() @ x


def transpose(a: CsrMatrix) -> CsrMatrix:
    return CsrMatrix.from_scipy(a.to_scipy().transpose().tocsr())


def matmat(a: CsrMatrix, b: CsrMatrix) -> CsrMatrix:
    """C = A B, pruning exact-zero results (cancellation) but nothing else."""
    if a.ncols != b.nrows:
        raise ValueError(f"dimension mismatch: {a.shape} @ {b.shape}")
    return CsrMatrix.from_scipy(a.to_scipy() @ b.to_scipy())


def add_scaled(a: CsrMatrix, b: CsrMatrix, sa: float, sb: float) -> CsrMatrix:
    """sa*A + sb*B with canonical output."""
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    out = a.to_scipy().multiply(sa) + b.to_scipy().multiply(sb)
    return CsrMatrix.from_scipy(out)


def is_symmetric(a: CsrMatrix, tol: float = 0.0) -> bool:
    """True iff |A_ij - A_ji| <= tol over all stored entries and mirrors."""
    if a.nrows != a.ncols:
        raise ValueError("is_symmetric requires a square matrix")
    d = a.to_scipy() - a.to_scipy().transpose().tocsr()
    if d.nnz == 0:
        return True
    return float(np.max(np.abs(d.data))) <= tol


def prune(a: CsrMatrix, eps: float = 0.0) -> CsrMatrix:
    """Drop entries with |value| <= eps (eps=0 removes exact zeros only)."""
    keep = np.abs(a.values) > eps
    if keep.all():
        return a
    rows = a.row_of_entry()[keep]
    return CsrMatrix.from_coo(rows, a.colind[keep], a.values[keep], a.shape)


def symmetrize(a: CsrMatrix) -> CsrMatrix:
    """Exact symmetrization (A + A^T)/2."""
    return add_scaled(a, transpose(a), 0.5, 0.5)
