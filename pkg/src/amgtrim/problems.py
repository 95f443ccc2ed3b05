"""Model problem generators.

Three standard symmetric positive definite test operators:

* ``poisson3d_7pt``   -- finite-difference Laplacian on a 3-D box, Dirichlet
  boundaries eliminated, diagonal 6 and axis neighbors -1.
* ``poisson3d_27pt``  -- Q1 (trilinear) finite elements for -lap(u) on a
  uniform hexahedral mesh.
* ``aniso2d_9pt``     -- Q1 (bilinear) finite elements for -div(K grad u)
  with the rotated anisotropic coefficient K = Q^T D Q, Q a rotation by
  theta and D = diag(1, epsilon).

Unknowns are the interior grid points in lexicographic order with x fastest,
so dims=(nx, ny[, nz]) gives n = nx*ny[*nz].  The FEM operators are built
from element integrals of the linear hat functions evaluated exactly in
rational arithmetic (no hard-coded stencil constants), assembled through the
tensor-product structure of the uniform mesh.  The mesh spacing is left
unscaled, so entries are h-independent up to a global factor.

Note the exact Q1 Laplacian in 3-D has identically zero coupling between
face neighbors (the stiffness and mass contributions cancel), so interior
rows store 21 nonzeros inside the 27-point structural stencil.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import scipy.sparse as sp

from .csr import CsrMatrix

_TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class ProblemSpec:
    """Which generator to run and with what parameters."""

    kind: str  # poisson3d_7pt | poisson3d_27pt | aniso2d_9pt | from_file
    dims: tuple = ()
    theta: float = 0.0
    epsilon: float = 1.0
    path: str | None = None

    def __post_init__(self):
        kinds = ("poisson3d_7pt", "poisson3d_27pt", "aniso2d_9pt", "from_file")
        if self.kind not in kinds:
            raise ValueError(f"unknown problem kind {self.kind!r}, expected one of {kinds}")
        if self.kind == "from_file":
            if not self.path:
                raise ValueError("from_file problems need a matrix path")
            return
        want = 2 if self.kind == "aniso2d_9pt" else 3
        if len(self.dims) != want or any(int(d) < 2 for d in self.dims):
            raise ValueError(f"{self.kind} needs {want} dims, each >= 2, got {self.dims}")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if not (0.0 <= self.theta < _TWO_PI):
            raise ValueError("theta must lie in [0, 2*pi)")


# ---------------------------------------------------------------------- #
# exact 1-D element integrals
#
# Linear basis on the reference element [0, 1]: phi0 = 1 - t, phi1 = t.
# Polynomials are coefficient lists in t; integration is exact rational
# arithmetic, so the assembled stencils carry no quadrature noise.

_PHI = ((Fraction(1), Fraction(-1)), (Fraction(0), Fraction(1)))


def _poly_mul(p, q):
    out = [Fraction(0)] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        for j, b in enumerate(q):
            out[i + j] += a * b
    return out


def _poly_int01(p) -> Fraction:
    return sum(c / (k + 1) for k, c in enumerate(p))


def _poly_diff(p):
    return [c * k for k, c in enumerate(p)][1:] or [Fraction(0)]


def _element_integrals():
    """2x2 element matrices k_e = int phi_i' phi_j', m_e = int phi_i phi_j,
    g_e = int phi_i' phi_j, as float64."""
    k_e = np.empty((2, 2))
    m_e = np.empty((2, 2))
    g_e = np.empty((2, 2))
    for i in range(2):
        for j in range(2):
            di, dj = _poly_diff(_PHI[i]), _poly_diff(_PHI[j])
            k_e[i, j] = float(_poly_int01(_poly_mul(di, dj)))
            m_e[i, j] = float(_poly_int01(_poly_mul(_PHI[i], _PHI[j])))
            g_e[i, j] = float(_poly_int01(_poly_mul(di, _PHI[j])))
    return k_e, m_e, g_e


def _assemble_1d(e: np.ndarray, n: int) -> sp.csr_matrix:
    """Assemble a 2x2 element integral over n+1 elements, keep interior nodes."""
    full = sp.lil_matrix((n + 2, n + 2))
    for el in range(n + 1):
        full[el : el + 2, el : el + 2] += e
    return full.tocsr()[1 : n + 1, 1 : n + 1]


def _tridiag(n: int, lo: float, di: float, hi: float) -> sp.csr_matrix:
    return sp.diags([np.full(n - 1, lo), np.full(n, di), np.full(n - 1, hi)], [-1, 0, 1]).tocsr()


# ---------------------------------------------------------------------- #
# generators


def poisson3d_7pt(nx: int, ny: int, nz: int) -> CsrMatrix:
    """7-point finite-difference Laplacian, Dirichlet boundaries eliminated."""
    _check_dims((nx, ny, nz))
    ix, iy, iz = (sp.identity(m, format="csr") for m in (nx, ny, nz))
    tx, ty, tz = (_tridiag(m, -1.0, 2.0, -1.0) for m in (nx, ny, nz))
    a = sp.kron(iz, sp.kron(iy, tx)) + sp.kron(iz, sp.kron(ty, ix)) + sp.kron(tz, sp.kron(iy, ix))
    return CsrMatrix.from_scipy(a.tocsr())


def poisson3d_27pt(nx: int, ny: int, nz: int) -> CsrMatrix:
    """Q1 trilinear finite elements for -lap(u), Dirichlet boundaries eliminated."""
    _check_dims((nx, ny, nz))
    k_e, m_e, _ = _element_integrals()
    kx, ky, kz = (_assemble_1d(k_e, m) for m in (nx, ny, nz))
    mx, my, mz = (_assemble_1d(m_e, m) for m in (nx, ny, nz))
    a = (
        sp.kron(mz, sp.kron(my, kx))
        + sp.kron(mz, sp.kron(ky, mx))
        + sp.kron(kz, sp.kron(my, mx))
    )
    return CsrMatrix.from_scipy(a.tocsr())


def aniso2d_9pt(nx: int, ny: int, theta: float, epsilon: float) -> CsrMatrix:
    """Q1 bilinear finite elements for -div(K grad u) on a uniform square mesh.

    K = Q^T D Q with Q the rotation by theta and D = diag(1, epsilon).
    """
    _check_dims((nx, ny))
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    c, s = np.cos(theta), np.sin(theta)
    q = np.array([[c, s], [-s, c]])
    d = np.diag([1.0, float(epsilon)])
    kmat = q.T @ d @ q

    k_e, m_e, g_e = _element_integrals()
    kx, ky = _assemble_1d(k_e, nx), _assemble_1d(k_e, ny)
    mx, my = _assemble_1d(m_e, nx), _assemble_1d(m_e, ny)
    gx, gy = _assemble_1d(g_e, nx), _assemble_1d(g_e, ny)

    # int dx(phi_I) dy(phi_J) = Gx[i,j] * Gy[l,k]; x index runs fastest.
    cross = sp.kron(gy.T, gx) + sp.kron(gy, gx.T)
    a = (
        kmat[0, 0] * sp.kron(my, kx)
        + kmat[1, 1] * sp.kron(ky, mx)
        + kmat[0, 1] * cross
    )
    return CsrMatrix.from_scipy(a.tocsr())


def _check_dims(dims):
    if any(int(d) < 2 for d in dims):
        raise ValueError(f"each dimension must be >= 2, got {dims}")


def build_problem(spec: ProblemSpec) -> CsrMatrix:
    if spec.kind == "poisson3d_7pt":
        return poisson3d_7pt(*spec.dims)
    if spec.kind == "poisson3d_27pt":
        return poisson3d_27pt(*spec.dims)
    if spec.kind == "aniso2d_9pt":
        return aniso2d_9pt(spec.dims[0], spec.dims[1], spec.theta, spec.epsilon)
    from .mmio import read_matrix_market

    return read_matrix_market(spec.path)
