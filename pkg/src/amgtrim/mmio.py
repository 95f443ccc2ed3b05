"""Matrix Market coordinate I/O.

Hand-rolled instead of scipy.io so that malformed files fail with the
offending line number and so the value format is pinned: 17 significant
digits on write, which round-trips float64 exactly.  Supported headers are
``coordinate real general`` and ``coordinate real symmetric``; symmetric
files are expanded (mirror entries added for i != j) and duplicate entries
are summed.
"""

from __future__ import annotations

import numpy as np

from .csr import CsrMatrix


class MatrixMarketError(ValueError):
    pass


def _fail(lineno: int, msg: str):
    raise MatrixMarketError(f"line {lineno}: {msg}")


def read_matrix_market(path) -> CsrMatrix:
    with open(path, "r", encoding="ascii") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise MatrixMarketError("line 1: empty file, expected MatrixMarket header")

    header = lines[0].split()
    if len(header) != 5 or header[0] != "%%MatrixMarket":
        _fail(1, "malformed header, expected '%%MatrixMarket matrix coordinate real <symmetry>'")
    obj, fmt, field, symmetry = (t.lower() for t in header[1:])
    if obj != "matrix":
        _fail(1, f"unsupported object {obj!r}, only 'matrix' is handled")
    if fmt != "coordinate":
        _fail(1, f"unsupported format {fmt!r}, only 'coordinate' is handled")
    if field != "real":
        _fail(1, f"unsupported field {field!r}, only 'real' is handled")
    if symmetry not in ("general", "symmetric"):
        _fail(1, f"unsupported symmetry {symmetry!r}, expected 'general' or 'symmetric'")

    # skip comment / blank lines up to the size line
    k = 1
    while k < len(lines) and (lines[k].startswith("%") or not lines[k].strip()):
        k += 1
    if k == len(lines):
        _fail(len(lines), "missing size line")
    parts = lines[k].split()
    if len(parts) != 3:
        _fail(k + 1, f"malformed size line {lines[k]!r}")
    try:
        nrows, ncols, nnz = (int(p) for p in parts)
    except ValueError:
        _fail(k + 1, f"malformed size line {lines[k]!r}")
    if nrows < 0 or ncols < 0 or nnz < 0:
        _fail(k + 1, "negative dimension in size line")

    rows = np.empty(nnz, dtype=np.int64)
    cols = np.empty(nnz, dtype=np.int64)
    vals = np.empty(nnz, dtype=np.float64)
    seen = 0
    for lineno in range(k + 1, len(lines)):
        text = lines[lineno].strip()
        if not text or text.startswith("%"):
            continue
        if seen >= nnz:
            _fail(lineno + 1, f"more than the declared {nnz} entries")
        parts = text.split()
        if len(parts) != 3:
            _fail(lineno + 1, f"expected 'row col value', got {text!r}")
        try:
            i, j, v = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError:
            _fail(lineno + 1, f"could not parse entry {text!r}")
        if not (1 <= i <= nrows) or not (1 <= j <= ncols):
            _fail(lineno + 1, f"index ({i}, {j}) out of bounds for {nrows} x {ncols}")
        rows[seen], cols[seen], vals[seen] = i - 1, j - 1, v
        seen += 1
    if seen != nnz:
        _fail(len(lines), f"declared {nnz} entries but found {seen}")

    if symmetry == "symmetric":
        off = rows != cols
        mirror_r, mirror_c, mirror_v = cols[off], rows[off], vals[off]
        rows = np.concatenate([rows, mirror_r])
        cols = np.concatenate([cols, mirror_c])
        vals = np.concatenate([vals, mirror_v])
    return CsrMatrix.from_coo(rows, cols, vals, (nrows, ncols))


def write_matrix_market(a: CsrMatrix, path, symmetric: bool = False) -> None:
    """Write in coordinate format.  With symmetric=True only the lower
    triangle is stored (caller is responsible for A actually being symmetric)."""
    rows = a.row_of_entry()
    cols = a.colind
    vals = a.values
    if symmetric:
        keep = rows >= cols
        rows, cols, vals = rows[keep], cols[keep], vals[keep]
        symmetry = "symmetric"
    else:
        symmetry = "general"
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"%%MatrixMarket matrix coordinate real {symmetry}\n")
        fh.write(f"{a.nrows} {a.ncols} {len(vals)}\n")
        for i, j, v in zip(rows, cols, vals):
            fh.write(f"{i + 1} {j + 1} {v:.17g}\n")
