from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from sklearn.base import clone

from mfakit.consensus import CoAssociationConsensus, binarize, co_association, persistent_mfas
from mfakit.odm import AreaUniverse
from mfakit.partition import RESIDUAL, Partition
from mfakit.similarity import sim_symmetric
from mfakit.synth import noisy_ensemble, planted_partition, random_partition

U4 = AreaUniverse(("1", "2", "3", "4"))


def brute_freq(parts, residual_together=False):
    n = len(parts[0])
    f = np.eye(n)
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            together = 0
            for p in parts:
                a, b = p.labels[i], p.labels[j]
                if a == b and (a != RESIDUAL or residual_together):
                    together += 1
            f[i, j] = together / len(parts)
    return f


def test_identical_ensemble_is_indicator():
    p = Partition(U4, [0, 0, 1, RESIDUAL])
    co = co_association([p] * 3)
    np.testing.assert_array_equal(co.to_dense(), [[1, 1, 0, 0], [1, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]])


def test_counting_three_of_five():
    together = Partition(U4, [0, 0, 1, 1])
    apart = Partition(U4, [0, 1, 1, 0])
    co = co_association([together, together, apart, together, apart])
    assert co.freq[0, 1] == pytest.approx(0.6)
    assert co.counts[0, 1] == 3


def test_alternating_partitions():
    p = Partition(U4, [0, 0, 1, 1])
    q = Partition(U4, [0, 1, 0, 1])
    f = co_association([p, q]).to_dense()
    assert f[0, 1] == f[0, 2] == f[1, 3] == f[2, 3] == 0.5
    assert f[0, 3] == f[1, 2] == 0.0


def test_residual_pairs_flag():
    p = Partition(U4, [0, 0, RESIDUAL, RESIDUAL])
    assert co_association([p]).freq[2, 3] == 0
    assert co_association([p], residual_together=True).freq[2, 3] == 1


def test_universe_mismatch():
    other = Partition(AreaUniverse(("1", "2", "3", "5")), [0, 0, 1, 1])
    with pytest.raises(ValueError, match="universe"):
        co_association([Partition(U4, [0, 0, 1, 1]), other])
    with pytest.raises(ValueError):
        co_association([])


def test_binarize_boundary():
    p = Partition(U4, [0, 0, 1, 1])
    q = Partition(U4, [0, 1, 0, 1])
    co = co_association([p, q])
    a = binarize(co, 0.5).weights.toarray()
    assert a[0, 1] == 1 and a[0, 3] == 0 and not np.diag(a).any()
    assert np.array_equal(a, a.T)
    # 0.49 of an ensemble of 100
    parts = [p] * 49 + [q] * 51
    co = co_association(parts)
    assert binarize(co, 0.5).weights.toarray()[0, 1] == 0
    assert not binarize(co_association([Partition(U4, [RESIDUAL] * 4)])).weights.nnz


@pytest.mark.parametrize("cut", [0, -0.1, 1.01])
def test_binarize_range(cut):
    with pytest.raises(ValueError):
        binarize(co_association([Partition(U4, [0, 0, 1, 1])]), cut)


def test_cut_one_keeps_always_together_pairs():
    p = Partition(U4, [0, 0, 1, 1])
    q = Partition(U4, [0, 0, 0, 1])
    a = binarize(co_association([p, q, p]), 1.0).weights.toarray()
    assert a[0, 1] == 1 and a[2, 3] == 0


def test_exact_multiples_of_one_over_d():
    parts = [random_partition(15, 4, seed=s) for s in range(7)]
    co = co_association(parts)
    assert co.counts.dtype.kind == "i"
    for v in co.counts.data:
        assert Fraction(int(v), 7) == Fraction(v / 7).limit_denominator(7)


ensembles = st.lists(st.integers(0, 10_000), min_size=1, max_size=6)


@given(ensembles, st.randoms(use_true_random=False))
def test_matches_brute_force_and_order_invariant(seeds, rnd):
    parts = [random_partition(9, 3, seed=s) for s in seeds]
    u = parts[0].universe
    parts = [Partition(u, np.where(np.arange(9) == s % 9, RESIDUAL, p.labels)) for s, p in zip(seeds, parts)]
    co = co_association(parts)
    np.testing.assert_allclose(co.to_dense(), brute_freq(parts))
    shuffled = parts[:]
    rnd.shuffle(shuffled)
    assert (co_association(shuffled).counts != co.counts).nnz == 0


@given(st.integers(0, 10_000))
def test_single_partition_indicator(seed):
    p = random_partition(10, 4, seed=seed)
    same = (p.labels[:, None] == p.labels[None, :]).astype(float)
    np.testing.assert_array_equal(co_association([p]).to_dense(), same)


@given(st.integers(0, 10_000))
def test_idempotence(seed):
    p = random_partition(30, 8, seed=seed)
    q = persistent_mfas([p] * 5)
    assert q.same_groups(p)
    assert q.label == "persistent"


def test_noisy_ensemble_recovery_sample():
    truth = planted_partition(4, 10)
    for seed in range(5):
        q = persistent_mfas(noisy_ensemble(truth, 20, 0.05, seed))
        assert sim_symmetric(q, truth) >= 0.95


def test_co_matrix_csv(tmp_path):
    co = co_association([Partition(U4, [0, 0, 1, 1]), Partition(U4, [0, 1, 0, 1])])
    co.write_csv(tmp_path / "co.csv")
    assert (tmp_path / "co.csv").read_text().splitlines() == [
        "area_a,area_b,freq", "1,2,0.5", "1,3,0.5", "2,4,0.5", "3,4,0.5"]


def test_estimator():
    truth = planted_partition(3, 6)
    labels = np.stack([truth.labels] * 4)
    est = CoAssociationConsensus(cut=0.75)
    assert clone(est).get_params()["cut"] == 0.75
    out = est.fit_predict(labels)
    assert Partition(truth.universe, out).same_groups(truth)
    est.fit([truth, truth])
    assert est.partition_.same_groups(truth)
    with pytest.raises(ValueError):
        CoAssociationConsensus(cut=2).fit(labels)
