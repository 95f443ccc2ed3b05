"""Pointwise relaxation: symmetric Gauss-Seidel and weighted Jacobi.

Gauss-Seidel sweeps are sequential by nature, so the inner loops are
compiled with numba; one "sweep" of the symmetric variant is a forward pass
followed by a backward pass.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .csr import CsrMatrix, spmv

SMOOTHER_KINDS = ("gauss_seidel_sym", "jacobi_weighted")


@dataclass(frozen=True)
class SmootherSpec:
    kind: str = "gauss_seidel_sym"
    sweeps: int = 1
    weight: float = 2.0 / 3.0  # Jacobi only

    def __post_init__(self):
        if self.kind not in SMOOTHER_KINDS:
            raise ValueError(f"unknown smoother {self.kind!r}, expected one of {SMOOTHER_KINDS}")
        if self.sweeps < 1:
            raise ValueError("expected sweeps >= 1")
        if not 0.0 < self.weight <= 1.0:
            raise ValueError("expected weight in (0,1]")


@njit(cache=True)
def _gs_forward(rowptr, colind, values, x, b):  # pragma: no cover - compiled
    for i in range(x.size):
        acc = b[i]
        diag = 0.0
        for t in range(rowptr[i], rowptr[i + 1]):
            j = colind[t]
            if j == i:
                diag = values[t]
            else:
                acc -= values[t] * x[j]
        x[i] = acc / diag


@njit(cache=True)
def _gs_backward(rowptr, colind, values, x, b):  # pragma: no cover - compiled
    for i in range(x.size - 1, -1, -1):
        acc = b[i]
        diag = 0.0
        for t in range(rowptr[i], rowptr[i + 1]):
            j = colind[t]
            if j == i:
                diag = values[t]
            else:
                acc -= values[t] * x[j]
        x[i] = acc / diag


def _check_diag(a: CsrMatrix) -> np.ndarray:
    d = a.diagonal()
    if np.any(d == 0.0):
        i = int(np.flatnonzero(d == 0.0)[0])
        raise ValueError(f"relaxation needs nonzero diagonals; row {i} has none")
    return d


def relax_inplace(a: CsrMatrix, x: np.ndarray, b: np.ndarray, spec: SmootherSpec) -> np.ndarray:
    """Apply ``spec.sweeps`` relaxation sweeps to x in place and return it."""
    if a.nrows != a.ncols or x.size != a.nrows or b.size != a.nrows:
        raise ValueError(
            f"dimension mismatch: A {a.shape}, x {x.size}, b {b.size}"
        )
    d = _check_diag(a)
    if spec.kind == "gauss_seidel_sym":
        for _ in range(spec.sweeps):
            _gs_forward(a.rowptr, a.colind, a.values, x, b)
            _gs_backward(a.rowptr, a.colind, a.values, x, b)
    else:
        for _ in range(spec.sweeps):
            x += spec.weight * (b - spmv(a, x)) / d
    return x


def relax(a: CsrMatrix, x: np.ndarray, b: np.ndarray, spec: SmootherSpec) -> np.ndarray:
    """Functional wrapper around relax_inplace: returns a new vector."""
    out = np.array(x, dtype=np.float64, copy=True)
    return relax_inplace(a, out, np.asarray(b, dtype=np.float64), spec)
