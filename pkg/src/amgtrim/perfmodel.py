"""Latency-bandwidth cost model for distributed SpMV over a simulated
row-wise partition.

Rows are dealt to p virtual processes in contiguous balanced blocks.  For a
matvec, each process must receive every off-process vector entry that its
off-diagonal-block columns reference, one message per remote owner, whose
size is the number of distinct referenced columns that owner holds.  The
modeled time of one SpMV is then

    T = 2 c nnz_p + s_p_max (alpha + beta n_p_max)

with nnz_p the mean process-local nonzero count, s_p_max the largest
per-process message count, and n_p_max the largest single message.  alpha
is seconds per message, beta seconds per transmitted word (8-byte vector
entries; set beta_unit="byte" if your beta is per byte), and c seconds per
flop, either fixed or measured with ``calibrate_c``.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .csr import CsrMatrix, spmv
from .hierarchy import Hierarchy

#: default machine constants (interconnect latency / reciprocal bandwidth)
DEFAULT_ALPHA = 1.8e-6
DEFAULT_BETA = 1.8e-9
DEFAULT_C = 1e-10

BETA_UNITS = ("word", "byte")


@dataclass(frozen=True)
class ModelParams:
    alpha: float = DEFAULT_ALPHA
    beta: float = DEFAULT_BETA
    c: float = DEFAULT_C
    p: int = 1
    beta_unit: str = "word"

    def __post_init__(self):
        if self.alpha <= 0 or self.beta <= 0 or self.c < 0:
            raise ValueError("model constants must be positive (c may be 0)")
        if self.p < 1:
            raise ValueError("expected p >= 1")
        if self.beta_unit not in BETA_UNITS:
            raise ValueError(f"beta_unit must be one of {BETA_UNITS}")

    @property
    def beta_per_word(self) -> float:
        return self.beta if self.beta_unit == "word" else 8.0 * self.beta


def partition_rows(n: int, p: int) -> np.ndarray:
    """Offsets of p contiguous row blocks; the first n mod p blocks get one
    extra row.  Returns an int64 array of length p+1."""
    if p < 1:
        raise ValueError("expected p >= 1")
    base, extra = divmod(n, p)
    sizes = np.full(p, base, dtype=np.int64)
    sizes[:extra] += 1
    return np.concatenate([[0], np.cumsum(sizes)])


@dataclass(frozen=True)
class PartitionStats:
    """Per-process communication facts for one SpMV under a row partition.

    Message words count distinct remote vector entries needed (one word per
    8-byte entry).  Send counts are derived from the same receive map, so
    for structurally symmetric matrices sends mirror receives.
    """

    p: int
    local_nnz: np.ndarray  # (p,) nonzeros of each process's row block
    recv_counts: np.ndarray  # (p,) messages received by each process
    send_counts: np.ndarray  # (p,) messages sent by each process
    message_words: np.ndarray  # words of every (receiver, sender) message
    total_words: int

    @property
    def nnz_mean(self) -> float:
        return float(self.local_nnz.sum()) / self.p

    @property
    def s_p_max(self) -> int:
        return int(self.recv_counts.max()) if self.p else 0

    @property
    def n_p_max(self) -> int:
        return int(self.message_words.max()) if self.message_words.size else 0


def _owners(offsets: np.ndarray, idx: np.ndarray) -> np.ndarray:
    return np.searchsorted(offsets, idx, side="right") - 1


def comm_stats(a: CsrMatrix, p: int) -> PartitionStats:
    """Who talks to whom (and how much) for one matvec with p owners."""
    if a.nrows != a.ncols:
        raise ValueError("comm_stats expects a square matrix")
    offsets = partition_rows(a.nrows, p)
    rows = a.row_of_entry()
    cols = a.colind
    row_owner = _owners(offsets, rows)
    local_nnz = np.bincount(row_owner, minlength=p) if rows.size else np.zeros(p, dtype=np.int64)
    col_owner = _owners(offsets, cols)
    off = row_owner != col_owner
    if not off.any():
        zero = np.zeros(p, dtype=np.int64)
        return PartitionStats(
            p=p,
            local_nnz=local_nnz.astype(np.int64),
            recv_counts=zero,
            send_counts=zero.copy(),
            message_words=np.zeros(0, dtype=np.int64),
            total_words=0,
        )
    # distinct (receiver, remote column) pairs; each is one transmitted word
    need = np.unique(row_owner[off].astype(np.int64) * np.int64(a.ncols) + cols[off])
    q = need // a.ncols
    r = _owners(offsets, need % a.ncols)
    # words per (receiver, sender) message
    pair, words = np.unique(q * np.int64(p) + r, return_counts=True)
    recv_counts = np.bincount(pair // p, minlength=p)
    send_counts = np.bincount(pair % p, minlength=p)
    return PartitionStats(
        p=p,
        local_nnz=local_nnz.astype(np.int64),
        recv_counts=recv_counts.astype(np.int64),
        send_counts=send_counts.astype(np.int64),
        message_words=words.astype(np.int64),
        total_words=int(need.size),
    )


def modeled_spmv_time(stats: PartitionStats, params: ModelParams) -> float:
    """T = 2 c nnz_p + s_p_max (alpha + beta n_p_max)."""
    comm = stats.s_p_max * (params.alpha + params.beta_per_word * stats.n_p_max)
    return 2.0 * params.c * stats.nnz_mean + comm


def calibrate_c(a: CsrMatrix, repeats: int = 5) -> float:
    """Seconds per flop from timing local SpMVs: median time / (2 nnz)."""
    if repeats < 3:
        raise ValueError("expected repeats >= 3")
    if a.nnz == 0:
        raise ValueError("cannot calibrate on an empty matrix")
    x = np.ones(a.ncols)
    spmv(a, x)  # warm caches
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        spmv(a, x)
        times.append(time.perf_counter() - t0)
    return float(np.median(times)) / (2.0 * a.nnz)


@dataclass(frozen=True)
class LevelProfile:
    level: int
    n: int
    nnz: int
    nnz_per_row: float
    sends_max: int
    msg_words_max: int
    total_words: int
    modeled_seconds: float

    CSV_HEADER = "level,n,nnz,nnz_per_row,sends_max,msg_words_max,total_words,modeled_seconds"

    def csv_row(self) -> str:
        return (
            f"{self.level},{self.n},{self.nnz},{self.nnz_per_row:.17g},"
            f"{self.sends_max},{self.msg_words_max},{self.total_words},"
            f"{self.modeled_seconds:.17g}"
        )


def hierarchy_profile(
    h: Hierarchy, p: int, params: ModelParams, use_sparsified: bool, calibrate: bool = False
) -> list:
    """Per-level communication and modeled SpMV time, on A (Galerkin) or on
    the active sparsified operators.

    With calibrate=True the flop cost c is measured per level (the achieved
    flop rate depends on the operator size), which makes the output
    machine-dependent; otherwise params.c applies uniformly.
    """
    out = []
    for ell, lv in enumerate(h.levels):
        op = lv.A_active if use_sparsified else lv.A
        st = comm_stats(op, p)
        lp = params
        if calibrate and op.nnz > 0:
            lp = ModelParams(
                alpha=params.alpha,
                beta=params.beta,
                c=calibrate_c(op),
                p=params.p,
                beta_unit=params.beta_unit,
            )
        out.append(
            LevelProfile(
                level=ell,
                n=op.nrows,
                nnz=op.nnz,
                nnz_per_row=op.nnz / op.nrows if op.nrows else 0.0,
                sends_max=st.s_p_max,
                msg_words_max=st.n_p_max,
                total_words=st.total_words,
                modeled_seconds=modeled_spmv_time(st, lp),
            )
        )
    return out


def hierarchy_sends(h: Hierarchy, p: int, use_sparsified: bool = True) -> int:
    """Total s_p_max across levels: modeled messages for one SpMV per level
    (the per-iteration communication proxy for a V-cycle)."""
    total = 0
    for lv in h.levels:
        op = lv.A_active if use_sparsified else lv.A
        total += comm_stats(op, p).s_p_max
    return total
