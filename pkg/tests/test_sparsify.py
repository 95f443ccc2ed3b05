import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import amgtrim as at
from amgtrim import CsrMatrix
from oracles import (
    dense_keep_set,
    dense_lump_diagonal,
    dense_lump_neighbors,
    dense_minimal_pattern,
    dense_sparsify,
    poisson1d,
    poisson2d_5pt,
    random_sdd_zerosum,
)


def two_level(a: CsrMatrix) -> at.Hierarchy:
    h = at.amg_setup(a, max_size=max(2, a.nrows // 2 + 1))
    assert len(h) == 2
    return h


def as_pattern(mask: np.ndarray) -> at.SparsityPattern:
    r, c = np.nonzero(mask)
    return at.SparsityPattern(
        CsrMatrix.from_coo(
            r.astype(np.int64), c.astype(np.int64), np.ones(r.size), mask.shape
        )
    )


def empty_pattern(shape) -> at.SparsityPattern:
    return as_pattern(np.zeros(shape, dtype=bool))


def strong_abs(a: CsrMatrix, theta: float = 0.25) -> np.ndarray:
    return at.strength(a, theta).pattern.to_dense()


# ---------------------------------------------------------------------- #
# minimal pattern


def test_minimal_pattern_identity_transfers_is_adjacency():
    a = poisson1d(5)
    eye = CsrMatrix.identity(5)
    m = at.minimal_pattern(a, eye, eye)
    assert np.array_equal(m.to_dense_bool(), a.to_dense() != 0.0)


def test_minimal_pattern_two_level_1d_matches_dense():
    a = poisson1d(7)
    h = two_level(a)
    lv = h.levels[0]
    m = at.minimal_pattern(lv.A, lv.P, lv.P_inj)
    want = dense_minimal_pattern(a.to_dense(), lv.P.to_dense(), lv.P_inj.to_dense())
    assert np.array_equal(m.to_dense_bool(), want)


def test_minimal_pattern_subset_of_galerkin_pattern():
    # on the second coarse level of a 3D problem the minimal pattern is a
    # strict subset; one level down from the finest it typically covers
    # everything, which is why dropping only pays off deeper in the grid
    a = at.poisson3d_7pt(8, 8, 8)
    h = at.amg_setup(a, max_size=20)
    assert len(h) >= 3
    lv1, lv2 = h.levels[1], h.levels[2]
    m = at.minimal_pattern(lv1.A, lv1.P, lv1.P_inj).to_dense_bool()
    galerkin = lv2.A.to_dense() != 0.0
    assert np.all(m <= galerkin)
    assert m.sum() < galerkin.sum()


def test_minimal_pattern_is_symmetric():
    a = poisson2d_5pt(6, 7)
    h = two_level(a)
    lv = h.levels[0]
    m = at.minimal_pattern(lv.A, lv.P, lv.P_inj).to_dense_bool()
    assert np.array_equal(m, m.T)


# ---------------------------------------------------------------------- #
# keep set


def test_keep_set_gamma_zero_keeps_all_stored():
    a = poisson1d(7)
    h = two_level(a)
    ac = h.levels[1].A
    empty = empty_pattern(ac.shape)
    n_pat = at.keep_set(ac, empty, 0.0)
    assert np.array_equal(n_pat.to_dense_bool(), ac.to_dense() != 0.0)


def test_keep_set_gamma_one_keeps_row_maxima_and_diagonal():
    ac = CsrMatrix.from_dense(
        [[5.0, -4.0, -0.1], [-4.0, 5.0, -1.0], [-0.1, -1.0, 2.0]]
    )
    empty = empty_pattern(ac.shape)
    got = at.keep_set(ac, empty, 1.0).to_dense_bool()
    want = dense_keep_set(ac.to_dense(), np.zeros((3, 3), dtype=bool), 1.0)
    assert np.array_equal(got, want)
    # (0,1) is row 0's max; (1,2) is kept only through the symmetrized
    # mirror of row 2's max (2,1)
    assert got[0, 1] and got[1, 0]
    assert got[2, 1] and got[1, 2]
    assert not got[0, 2] and not got[2, 0]


def test_keep_set_threshold_arithmetic():
    ac = CsrMatrix.from_dense(
        [[5.0, -4.0, -0.1], [-4.0, 5.0, -1.0], [-0.1, -1.0, 2.0]]
    )
    empty = empty_pattern(ac.shape)
    got = at.keep_set(ac, empty, 0.5).to_dense_bool()
    want = dense_keep_set(ac.to_dense(), np.zeros((3, 3), dtype=bool), 0.5)
    assert np.array_equal(got, want)
    assert got[0, 1]  # row max survives the 0.5 threshold
    # (2,1) qualifies in row 2 (1 >= 0.5*1) and rescues its mirror (1,2),
    # which missed row 1's own threshold of 2
    assert got[2, 1] and got[1, 2]
    # (0,2) fails in row 0 (0.1 < 2) and in row 2 (0.1 < 0.5): dropped
    assert not got[0, 2] and not got[2, 0]
    assert got[0, 0] and got[1, 1] and got[2, 2]


def test_keep_set_respects_minimal_pattern_floor():
    a = poisson2d_5pt(8, 8)
    h = two_level(a)
    lv0, lv1 = h.levels
    m = at.minimal_pattern(lv0.A, lv0.P, lv0.P_inj)
    got = at.keep_set(lv1.A, m, 1.0).to_dense_bool()
    stored = lv1.A.to_dense() != 0.0
    assert np.all((m.to_dense_bool() & stored) <= got)


def test_keep_set_gamma_validation():
    ac = CsrMatrix.identity(2)
    empty = empty_pattern((2, 2))
    with pytest.raises(ValueError):
        at.keep_set(ac, empty, -0.5)
    with pytest.raises(ValueError):
        at.keep_set(ac, empty, 1.5)


@given(
    st.integers(3, 12),
    st.integers(0, 2**32 - 1),
    st.floats(0.0, 1.0),
    st.floats(0.0, 1.0),
)
@settings(max_examples=60, deadline=None)
def test_keep_set_monotone_in_gamma(n, seed, g1, g2):
    lo, hi = sorted((g1, g2))
    rng = np.random.default_rng(seed)
    a = CsrMatrix.from_dense(random_sdd_zerosum(rng, n, density=0.5))
    h = at.amg_setup(a, max_size=2)
    if len(h) < 2:
        return
    lv0, lv1 = h.levels[0], h.levels[1]
    m = at.minimal_pattern(lv0.A, lv0.P, lv0.P_inj)
    keep_lo = at.keep_set(lv1.A, m, lo).to_dense_bool()
    keep_hi = at.keep_set(lv1.A, m, hi).to_dense_bool()
    assert np.all(keep_hi <= keep_lo)
    want = dense_keep_set(lv1.A.to_dense(), m.to_dense_bool(), hi)
    assert np.array_equal(keep_hi, want)


# ---------------------------------------------------------------------- #
# neighbor lumping


def test_lump_neighbors_full_keep_is_identity():
    a = poisson1d(6)
    n_pat = as_pattern(a.to_dense() != 0.0)
    a_hat, log = at.lump_neighbors(a, n_pat, at.strength(a, 0.25))
    assert a_hat.equal_bitwise(a)
    assert len(log) == 0


def test_lump_neighbors_single_receiver_moves_full_value():
    # (0,2) and its mirror are dropped; columns 0 and 2 each have node 1 as
    # their only strong neighbor (0.25 < 0.25*4), so the whole value lands
    # there with fraction one, and dyadic entries keep the sums exact
    dense = np.array(
        [
            [4.25, -4.0, -0.25],
            [-4.0, 8.5, -4.0],
            [-0.25, -4.0, 4.25],
        ]
    )
    ac = CsrMatrix.from_dense(dense)
    keep = dense != 0.0
    keep[0, 2] = keep[2, 0] = False
    s = at.strength(ac, 0.25)
    assert s.pattern.row_cols(0).tolist() == [1]
    assert s.pattern.row_cols(2).tolist() == [1]
    a_hat, log = at.lump_neighbors(ac, as_pattern(keep), s)
    want = dense_lump_neighbors(dense, keep, strong_abs(ac))
    assert np.allclose(a_hat.to_dense(), want, rtol=0, atol=0)
    assert len(log) == 2  # the entry and its mirror
    got = a_hat.to_dense()
    assert got[0, 2] == 0.0 and got[2, 0] == 0.0
    assert got[0, 1] == -4.25 and got[1, 0] == -4.25
    assert got[1, 1] == 9.0  # 8.5 - (-0.25) - (-0.25)
    assert np.array_equal(got.sum(axis=1), dense.sum(axis=1))
    frac = {k: f for (_, k, f) in log.records[0].destinations[::3]}
    assert frac == {1: 1.0}


def test_lump_neighbors_two_receivers_split_by_strength():
    # dropped entry (0,3)=-0.5; column 3's strong neighbors are 1 and 2 with
    # strengths 3 and 1 (node 0's 0.5 fails 0.25*3), so the receivers take
    # 0.75 and 0.25 of the value
    dense = np.array(
        [
            [6.0, -3.0, -2.0, -0.5],
            [-3.0, 7.0, 0.0, -3.0],
            [-2.0, 0.0, 4.0, -1.0],
            [-0.5, -3.0, -1.0, 4.5],
        ]
    )
    ac = CsrMatrix.from_dense(dense)
    keep = dense != 0.0
    keep[0, 3] = keep[3, 0] = False
    s = at.strength(ac, 0.25)
    assert s.pattern.row_cols(3).tolist() == [1, 2]
    a_hat, log = at.lump_neighbors(ac, as_pattern(keep), s)
    want = dense_lump_neighbors(dense, keep, strong_abs(ac))
    assert np.allclose(a_hat.to_dense(), want, rtol=0, atol=0)
    assert np.allclose(a_hat.to_dense().sum(axis=1), dense.sum(axis=1), atol=1e-15)
    recs = {(r.row, r.col): r for r in log.records}
    fractions = {k: f for (_, k, f) in recs[(0, 3)].destinations[::3]}
    assert fractions == {1: 0.75, 2: 0.25}


def test_lump_neighbors_no_receiver_keeps_entry_and_mirror():
    # column 2's only coupling is positive, so it has no strong neighbors
    # and the dropped entry must survive along with its mirror
    dense = np.array(
        [
            [2.0, -1.0, 0.05],
            [-1.0, 2.0, 0.0],
            [0.05, 0.0, 0.1],
        ]
    )
    ac = CsrMatrix.from_dense(dense)
    keep = dense != 0.0
    keep[0, 2] = keep[2, 0] = False
    s = at.strength(ac, 0.9)
    assert s.pattern.row_cols(2).size == 0
    a_hat, log = at.lump_neighbors(ac, as_pattern(keep), s)
    assert a_hat.equal_bitwise(ac)
    assert len(log) == 0


def test_lump_neighbors_requires_strength():
    a = poisson1d(4)
    with pytest.raises(ValueError):
        at.lump_neighbors(a, as_pattern(np.eye(4, dtype=bool)), None)


# ---------------------------------------------------------------------- #
# diagonal lumping


def test_lump_diagonal_full_keep_is_identity():
    a = poisson1d(6)
    a_hat, log = at.lump_diagonal(a, as_pattern(a.to_dense() != 0.0))
    assert a_hat.equal_bitwise(a)
    assert len(log) == 0


def test_lump_diagonal_folds_drop_into_diagonal():
    dense = np.array(
        [
            [4.0, -2.0, -0.2],
            [-2.0, 4.0, 0.0],
            [-0.2, 0.0, 1.0],
        ]
    )
    ac = CsrMatrix.from_dense(dense)
    keep = dense != 0.0
    keep[0, 2] = keep[2, 0] = False
    a_hat, log = at.lump_diagonal(ac, as_pattern(keep))
    want = dense_lump_diagonal(dense, keep)
    assert np.allclose(a_hat.to_dense(), want, rtol=0, atol=0)
    assert a_hat.to_dense()[0, 0] == 3.8
    assert a_hat.to_dense()[2, 2] == 0.8
    assert a_hat.to_dense()[0, 2] == 0.0
    assert {(r.row, r.col) for r in log.records} == {(0, 2), (2, 0)}
    assert log.records[0].destinations == ((log.records[0].row, log.records[0].row, 1.0),)


def test_lump_diagonal_zero_rowsum_exemption():
    # zero-row-sum row whose largest off-diagonal is slated to be the only
    # survivor: the rule keeps it so the constant stays in the null space
    dense = np.array(
        [
            [1.2, -1.0, -0.1, -0.1],
            [-1.0, 1.2, -0.1, -0.1],
            [-0.1, -0.1, 1.2, -1.0],
            [-0.1, -0.1, -1.0, 1.2],
        ]
    )
    ac = CsrMatrix.from_dense(dense)
    keep = np.eye(4, dtype=bool)  # request dropping every off-diagonal
    a_hat, log = at.lump_diagonal(ac, as_pattern(keep))
    want = dense_lump_diagonal(dense, keep)
    assert np.allclose(a_hat.to_dense(), want, rtol=0, atol=0)
    d = a_hat.to_dense()
    assert d[0, 1] == -1.0 and d[1, 0] == -1.0  # exempt pair survives
    assert d[0, 2] == 0.0 and d[0, 3] == 0.0
    assert np.allclose(d.sum(axis=1), dense.sum(axis=1), atol=1e-15)
    np.linalg.cholesky(d + 1e-12 * np.eye(4))  # stays positive semi-definite


def test_lump_diagonal_no_exemption_when_rowsum_nonzero():
    dense = np.array(
        [
            [3.0, -1.0, -0.1],
            [-1.0, 3.0, -0.1],
            [-0.1, -0.1, 3.0],
        ]
    )
    ac = CsrMatrix.from_dense(dense)
    keep = np.eye(3, dtype=bool)
    a_hat, _ = at.lump_diagonal(ac, as_pattern(keep))
    want = dense_lump_diagonal(dense, keep)
    assert np.allclose(a_hat.to_dense(), want, rtol=0, atol=0)
    assert np.count_nonzero(a_hat.to_dense() - np.diag(np.diag(a_hat.to_dense()))) == 0


@given(st.integers(3, 12), st.integers(0, 2**32 - 1), st.floats(0.0, 1.0))
@settings(max_examples=60, deadline=None)
def test_lump_diagonal_matches_dense_oracle(n, seed, gamma):
    rng = np.random.default_rng(seed)
    ac = CsrMatrix.from_dense(random_sdd_zerosum(rng, n, density=0.5))
    empty = empty_pattern(ac.shape)
    n_pat = at.keep_set(ac, empty, gamma)
    a_hat, _ = at.lump_diagonal(ac, n_pat)
    want = dense_lump_diagonal(ac.to_dense(), dense_keep_set(ac.to_dense(), np.zeros((n, n), bool), gamma))
    assert np.allclose(a_hat.to_dense(), want, rtol=0, atol=0)
    assert np.array_equal(a_hat.to_dense(), a_hat.to_dense().T)


@given(st.integers(3, 12), st.integers(0, 2**32 - 1), st.floats(0.0, 1.0))
@settings(max_examples=60, deadline=None)
def test_lump_neighbors_matches_dense_oracle_and_conserves_row_sums(n, seed, gamma):
    rng = np.random.default_rng(seed)
    ac = CsrMatrix.from_dense(random_sdd_zerosum(rng, n, density=0.5))
    empty = empty_pattern(ac.shape)
    n_pat = at.keep_set(ac, empty, gamma)
    s = at.strength(ac, 0.25)
    a_hat, _ = at.lump_neighbors(ac, n_pat, s)
    want = dense_lump_neighbors(
        ac.to_dense(),
        dense_keep_set(ac.to_dense(), np.zeros((n, n), bool), gamma),
        strong_abs(ac),
    )
    assert np.allclose(a_hat.to_dense(), want, rtol=1e-14, atol=1e-15)
    assert np.allclose(
        a_hat.to_dense().sum(axis=1), ac.to_dense().sum(axis=1), atol=1e-12
    )
    # redistribution updates come in (i,k)/(k,i) pairs, so symmetry survives
    # up to summation roundoff (not bitwise: duplicate-sum order differs
    # between mirror positions)
    assert at.is_symmetric(a_hat, tol=1e-13 * max(a_hat.max_abs(), 1.0))


# ---------------------------------------------------------------------- #
# full pipeline


def test_sparsify_gamma_zero_is_bitwise_noop():
    a = poisson2d_5pt(7, 7)
    h = two_level(a)
    lv0, lv1 = h.levels
    for lumping in ("diagonal", "neighbors"):
        s = at.strength(lv1.A, 0.25) if lumping == "neighbors" else None
        a_hat, log = at.sparsify(lv1.A, lv0.A, lv0.P, lv0.P_inj, s, 0.0, lumping)
        assert a_hat.equal_bitwise(lv1.A)
        assert len(log) == 0
        assert log.gamma == 0.0


def test_sparsify_two_level_1d_matches_dense_pipeline():
    a = poisson1d(9)
    h = two_level(a)
    lv0, lv1 = h.levels
    dense_args = (lv1.A.to_dense(), a.to_dense(), lv0.P.to_dense(), lv0.P_inj.to_dense())
    for gamma in (0.1, 1.0):
        got, _ = at.sparsify(lv1.A, lv0.A, lv0.P, lv0.P_inj, None, gamma, "diagonal")
        want = dense_sparsify(*dense_args, gamma, "diagonal")
        assert np.allclose(got.to_dense(), want, rtol=0, atol=0)
        s = at.strength(lv1.A, 0.25)
        got, _ = at.sparsify(lv1.A, lv0.A, lv0.P, lv0.P_inj, s, gamma, "neighbors")
        want = dense_sparsify(*dense_args, gamma, "neighbors", s_abs=strong_abs(lv1.A))
        assert np.allclose(got.to_dense(), want, rtol=1e-15, atol=1e-16)


def test_sparsify_rejects_unknown_lumping():
    a = poisson1d(5)
    h = two_level(a)
    lv0, lv1 = h.levels
    with pytest.raises(ValueError):
        at.sparsify(lv1.A, lv0.A, lv0.P, lv0.P_inj, None, 0.5, "average")


# ---------------------------------------------------------------------- #
# delta log


def test_delta_record_json_round_trip():
    rec = at.DeltaRecord(row=3, col=5, value=-0.75, destinations=((3, 4, 0.5), (4, 3, 0.5), (4, 4, -0.5)))
    back = at.DeltaRecord.from_json(rec.to_json())
    assert back == rec
    payload = json.loads(rec.to_json())
    assert payload["row"] == 3 and payload["col"] == 5


def test_delta_log_jsonl_round_trip(tmp_path):
    a = at.poisson3d_7pt(8, 8, 8)
    h = at.amg_setup(a, max_size=20)
    lv1, lv2 = h.levels[1], h.levels[2]
    s = at.strength(lv2.A, 0.25)
    _, log = at.sparsify(lv2.A, lv1.A, lv1.P, lv1.P_inj, s, 1.0, "neighbors")
    assert len(log) > 0
    path = tmp_path / "delta.jsonl"
    log.to_jsonl(path)
    back = at.DeltaLog.from_jsonl(path, gamma=log.gamma)
    assert back.gamma == log.gamma
    assert back.records == log.records


def test_delta_log_undo_restores_bitwise_on_dyadic_input():
    # dyadic entries and equal receiver strengths make every redistribution
    # fraction exact, so undo must reproduce the original bit for bit; only
    # (0,3) and its mirror fall below the gamma=1 row-max threshold
    dense = np.array(
        [
            [8.0, -4.0, -4.0, -0.5],
            [-4.0, 12.0, -4.0, -4.0],
            [-4.0, -4.0, 12.0, -4.0],
            [-0.5, -4.0, -4.0, 8.0],
        ]
    )
    ac = CsrMatrix.from_dense(dense)
    for lumping in ("diagonal", "neighbors"):
        s = at.strength(ac, 0.25) if lumping == "neighbors" else None
        empty = empty_pattern(ac.shape)
        n_pat = at.keep_set(ac, empty, 1.0)
        if lumping == "neighbors":
            a_hat, log = at.lump_neighbors(ac, n_pat, s)
        else:
            a_hat, log = at.lump_diagonal(ac, n_pat)
        assert len(log) > 0
        assert log.undo(a_hat).equal_bitwise(ac)


# ---------------------------------------------------------------------- #
# schedules and hierarchy wiring


def test_drop_schedule_validation():
    with pytest.raises(ValueError):
        at.DropSchedule(gammas=[0.0, 1.5], lumping="diagonal", variant="sparse")
    with pytest.raises(ValueError):
        at.DropSchedule(gammas=[0.0], lumping="triangular", variant="sparse")
    with pytest.raises(ValueError):
        at.DropSchedule(gammas=[0.0], lumping="diagonal", variant="magic")
    with pytest.raises(ValueError):
        at.DropSchedule(gammas=[], lumping="diagonal", variant="sparse")


def test_setup_schedule_length_must_match():
    a = poisson2d_5pt(8, 8)
    h = at.amg_setup(a, max_size=10)
    wrong = at.DropSchedule(gammas=[0.0] * (len(h) + 3), lumping="diagonal", variant="sparse")
    with pytest.raises(ValueError, match="schedule has"):
        at.sparse_hybrid_setup(h, wrong)


def test_setup_gamma_zero_everywhere_keeps_galerkin():
    a = poisson2d_5pt(9, 9)
    h = at.amg_setup(a, max_size=10)
    sched = at.DropSchedule(gammas=[0.0] * len(h), lumping="diagonal", variant="hybrid")
    at.sparse_hybrid_setup(h, sched)
    for lv in h.levels:
        assert lv.A_active.equal_bitwise(lv.A)
        assert lv.gamma == 0.0
        assert lv.delta is None or len(lv.delta) == 0


def test_setup_sparse_and_hybrid_agree_when_finer_levels_untouched():
    a = poisson2d_5pt(10, 10)
    h1 = at.amg_setup(a, max_size=20)
    h2 = at.amg_setup(a, max_size=20)
    gammas = [0.0] * (len(h1) - 1) + [1.0]
    at.sparse_hybrid_setup(h1, at.DropSchedule(gammas=gammas, lumping="diagonal", variant="sparse"))
    at.sparse_hybrid_setup(h2, at.DropSchedule(gammas=gammas, lumping="diagonal", variant="hybrid"))
    for l1, l2 in zip(h1.levels, h2.levels):
        assert l1.A_active.equal_bitwise(l2.A_active)


def test_setup_variants_diverge_once_a_fine_differs():
    a = at.poisson3d_7pt(8, 8, 8)
    h_s = at.amg_setup(a, max_size=30)
    h_h = at.amg_setup(a, max_size=30)
    assert len(h_s) >= 3
    gammas = [0.0, 1.0] + [1.0] * (len(h_s) - 2)
    at.sparse_hybrid_setup(h_s, at.DropSchedule(gammas=gammas, lumping="diagonal", variant="sparse"))
    at.sparse_hybrid_setup(h_h, at.DropSchedule(gammas=gammas, lumping="diagonal", variant="hybrid"))
    # level 1 uses a_fine = A either way, so the two variants agree there
    assert h_s.levels[1].A_active.equal_bitwise(h_h.levels[1].A_active)
    # deeper levels see different fine-grid operators (sparse threads the
    # pristine Galerkin A, hybrid the already-thinned one)
    diverged = any(
        not ls.A_active.equal_bitwise(lh.A_active)
        for ls, lh in zip(h_s.levels[2:], h_h.levels[2:])
    )
    assert diverged


def test_setup_never_touches_finest_or_galerkin_operators():
    a = poisson2d_5pt(9, 9)
    h = at.amg_setup(a, max_size=10)
    pristine = [lv.A for lv in h.levels]
    sched = at.DropSchedule(gammas=[0.0] + [1.0] * (len(h) - 1), lumping="neighbors", variant="hybrid")
    at.sparse_hybrid_setup(h, sched)
    assert h.levels[0].A_active is h.levels[0].A
    for lv, a_keep in zip(h.levels, pristine):
        assert lv.A is a_keep  # Galerkin operators held, not copied


def test_setup_resets_previous_sparsification():
    a = poisson2d_5pt(9, 9)
    h = at.amg_setup(a, max_size=10)
    aggressive = at.DropSchedule(gammas=[0.0] + [1.0] * (len(h) - 1), lumping="diagonal", variant="sparse")
    at.sparse_hybrid_setup(h, aggressive)
    at.sparse_hybrid_setup(
        h, at.DropSchedule(gammas=[0.0] * len(h), lumping="diagonal", variant="sparse")
    )
    for lv in h.levels:
        assert lv.A_active.equal_bitwise(lv.A)


# ---------------------------------------------------------------------- #
# restore


def hierarchy_with_drops(variant="sparse", lumping="diagonal", gamma=1.0):
    a = poisson2d_5pt(10, 10)
    h = at.amg_setup(a, max_size=10)
    gammas = [0.0] + [gamma] * (len(h) - 1)
    at.sparse_hybrid_setup(h, at.DropSchedule(gammas=gammas, lumping=lumping, variant=variant))
    return h


def test_restore_to_zero_reproduces_galerkin_bitwise():
    for variant in ("sparse", "hybrid"):
        for lumping in ("diagonal", "neighbors"):
            h = hierarchy_with_drops(variant, lumping)
            for ell in range(1, len(h)):
                at.restore(h, ell, 0.0, variant, lumping)
            for lv in h.levels:
                assert lv.A_active.equal_bitwise(lv.A)
                assert lv.gamma == 0.0


def test_restore_lowering_gamma_never_loses_entries():
    h = hierarchy_with_drops("sparse", "diagonal", gamma=1.0)
    before = [lv.A_active.nnz for lv in h.levels]
    for ell in range(1, len(h)):
        at.restore(h, ell, 0.1, "sparse", "diagonal")
    after = [lv.A_active.nnz for lv in h.levels]
    assert all(b <= a for b, a in zip(before, after))
    assert any(b < a for b, a in zip(before, after))


def test_restore_refuses_raising_gamma():
    h = hierarchy_with_drops(gamma=0.1)
    with pytest.raises(ValueError, match="lower"):
        at.restore(h, 1, 0.5, "sparse", "diagonal")


def test_restore_rejects_finest_and_out_of_range_levels():
    h = hierarchy_with_drops()
    with pytest.raises(ValueError, match="not a coarse level"):
        at.restore(h, 0, 0.0, "sparse", "diagonal")
    with pytest.raises(ValueError, match="not a coarse level"):
        at.restore(h, len(h), 0.0, "sparse", "diagonal")


def test_restore_same_gamma_is_allowed_and_stable():
    h = hierarchy_with_drops(gamma=0.1)
    snap = h.levels[1].A_active
    at.restore(h, 1, 0.1, "sparse", "diagonal")
    assert h.levels[1].A_active.equal_bitwise(snap)


@given(st.integers(0, 2**32 - 1), st.sampled_from(["diagonal", "neighbors"]))
@settings(max_examples=20, deadline=None)
def test_losslessness_on_random_operators(seed, lumping):
    rng = np.random.default_rng(seed)
    a = CsrMatrix.from_dense(random_sdd_zerosum(rng, 24, density=0.25))
    h = at.amg_setup(a, max_size=6)
    if len(h) < 2:
        return
    sched = at.DropSchedule(
        gammas=[0.0] + [1.0] * (len(h) - 1), lumping=lumping, variant="sparse"
    )
    at.sparse_hybrid_setup(h, sched)
    for ell in range(1, len(h)):
        at.restore(h, ell, 0.0, "sparse", lumping)
        assert h.levels[ell].A_active.equal_bitwise(h.levels[ell].A)
