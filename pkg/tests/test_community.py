import datetime as dt
import itertools

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given
from hypothesis import strategies as st
from sklearn.base import clone

from mfakit.community import (
    MobilityFunctionalAreas,
    WalktrapCommunities,
    build_graph,
    collapse_singletons,
    cut_at_max_modularity,
    daily_mfas,
    modularity,
    walktrap,
)
from mfakit.odm import AdjacencyMatrix, AreaUniverse, DailyOdm, normalize, symmetrize, threshold
from mfakit.partition import RESIDUAL, Partition
from mfakit.similarity import sim_symmetric
from mfakit.synth import SynthSpec, gen_odm_series, planted_adjacency, planted_partition
from oracles import brute_force_max_modularity, modularity_direct, random_mobility_adjacency


def adj(w):
    return AdjacencyMatrix.from_dense(np.asarray(w, dtype=float))


def detect(w, **kw):
    g = build_graph(adj(w))
    return g, cut_at_max_modularity(walktrap(g, **kw))


def two_triangles():
    w = np.zeros((6, 6))
    for block in ((0, 1, 2), (3, 4, 5)):
        for i, j in itertools.combinations(block, 2):
            w[i, j] = w[j, i] = 1.0
    return w


# ---------------------------------------------------------------- build_graph


def test_build_graph_single_half_edge():
    g = build_graph(adj([[0, .5], [.5, 0]]))
    assert g.edges == ((0, 1, 0.5),)
    np.testing.assert_array_equal(g.vertex_strength, [.5, .5])


def test_build_graph_null():
    g = build_graph(adj(np.zeros((5, 5))))
    assert g.edges == () and g.isolated.tolist() == [0, 1, 2, 3, 4]


def test_build_graph_from_proximity():
    u = AreaUniverse(("a", "b", "c"))
    p = np.array([[0, 1, 0], [1, 0, 1], [0, 0, 0]])
    counts = sp.csr_matrix(p + np.diag([0, 0, 1]))
    a = symmetrize(threshold(normalize(DailyOdm(dt.date(2020, 2, 3), u, counts)), 0.15))
    assert build_graph(a).edges == ((0, 1, 1.0), (1, 2, 0.5))


def test_build_graph_rejects_asymmetric_and_loops():
    with pytest.raises(ValueError, match="symmetric"):
        build_graph(adj([[0, 1], [0, 0]]))
    with pytest.raises(ValueError, match="diagonal"):
        build_graph(adj([[1, 0], [0, 0]]))


# ---------------------------------------------------------------- walktrap


def test_two_triangles():
    g, part = detect(two_triangles())
    assert part.same_groups(Partition(part.universe, [0, 0, 0, 1, 1, 1]))
    assert part.modularity == pytest.approx(0.5, abs=1e-12)
    q_star, _ = brute_force_max_modularity(two_triangles())
    assert q_star == pytest.approx(0.5)


def test_single_edge():
    g = build_graph(adj([[0, 1], [1, 0]]))
    d = walktrap(g)
    assert d.n_merges == 1
    assert cut_at_max_modularity(d).labels.tolist() == [0, 0]


def test_complete_graph_is_one_community():
    w = np.ones((4, 4)) - np.eye(4)
    _, part = detect(w)
    assert part.n_mfas == 1
    q_star, _ = brute_force_max_modularity(w)
    assert part.modularity == pytest.approx(q_star)


def test_empty_graph():
    d = walktrap(build_graph(adj(np.zeros((3, 3)))))
    assert d.merges == () and d.vertices == ()
    p = cut_at_max_modularity(d)
    assert (p.labels == RESIDUAL).all() and p.n_mfas == 0


def test_isolated_vertices_go_to_residual():
    w = np.zeros((4, 4))
    w[0, 1] = w[1, 0] = 1
    _, part = detect(w)
    assert part.labels.tolist() == [0, 0, RESIDUAL, RESIDUAL]


@pytest.mark.parametrize("bad", [0, -1, 2.5])
def test_walk_length_validated(bad):
    with pytest.raises(ValueError):
        walktrap(build_graph(adj(two_triangles())), bad)


def test_planted_partition_recovery_small_sample():
    truth = planted_partition(4, 8)
    for seed in range(5):
        a = planted_adjacency(4, 8, 0.9, 0.05, seed)
        part = collapse_singletons(cut_at_max_modularity(walktrap(build_graph(a))))
        assert sim_symmetric(part, truth.with_meta()) >= 0.95


# ---------------------------------------------------------------- dendrogram/modularity properties

graphs = st.integers(2, 9).flatmap(lambda n: st.tuples(st.just(n), st.integers(0, 2**32 - 1)))


@given(graphs)
def test_dendrogram_invariants(arg):
    n, seed = arg
    w = random_mobility_adjacency(np.random.default_rng(seed), n)
    g = build_graph(adj(w))
    d = walktrap(g)
    active = np.setdiff1d(np.arange(n), g.isolated)
    n_comp = sp.csgraph.connected_components(sp.csr_matrix(w[np.ix_(active, active)]))[0] if active.size else 0
    assert d.n_merges == active.size - n_comp
    assert len(d.modularity) == d.n_merges + 1
    assert sorted(d.vertices) == active.tolist()
    # Q along the dendrogram is recomputable from scratch
    part = cut_at_max_modularity(d)
    assert part.modularity == pytest.approx(max(d.modularity), abs=1e-12)
    assert modularity(g, part.labels) == pytest.approx(part.modularity, abs=1e-12)


@given(graphs)
def test_modularity_matches_pairwise_definition(arg):
    n, seed = arg
    rng = np.random.default_rng(seed)
    w = random_mobility_adjacency(rng, n)
    labels = rng.integers(0, 3, n)
    assert modularity(build_graph(adj(w)), labels) == pytest.approx(modularity_direct(w, labels), abs=1e-12)


@given(graphs)
def test_partition_validity_and_components(arg):
    n, seed = arg
    w = random_mobility_adjacency(np.random.default_rng(seed), n)
    _, part = detect(w)
    p = collapse_singletons(part)
    assert len(p.labels) == n and p.is_proper
    assert p.mfa_ids == list(range(p.n_mfas))
    _, comp = sp.csgraph.connected_components(sp.csr_matrix(w))
    for k in p.mfa_ids:
        assert len(set(comp[p.labels == k])) == 1


@given(st.integers(3, 9), st.integers(0, 2**32 - 1))
def test_permutation_equivariance_without_ties(n, seed):
    # continuous weights make every distance and modularity value distinct
    rng = np.random.default_rng(seed)
    w = np.triu(rng.uniform(0.1, 1.0, (n, n)) * (rng.random((n, n)) < 0.6), 1)
    w = w + w.T
    perm = rng.permutation(n)
    _, p1 = detect(w)
    _, p2 = detect(w[np.ix_(perm, perm)])
    relabeled = Partition(p1.universe, p2.labels[np.argsort(perm)])
    assert relabeled.same_groups(p1)


def test_against_igraph_walktrap():
    ig = pytest.importorskip("igraph")
    rng = np.random.default_rng(7)
    agree = 0
    for _ in range(100):
        n = int(rng.integers(3, 11))
        w = random_mobility_adjacency(rng, n)
        if not w.any():
            agree += 1
            continue
        g, part = detect(w)
        iu = np.triu_indices(n, 1)
        mask = w[iu] > 0
        G = ig.Graph(n=n, edges=list(zip(iu[0][mask], iu[1][mask])))
        G.es["weight"] = w[iu][mask].tolist()
        ref = G.community_walktrap(weights="weight", steps=4).as_clustering()
        agree += abs(G.modularity(ref.membership, weights="weight") - part.modularity) < 1e-9
    assert agree >= 95


# ---------------------------------------------------------------- collapse


def test_collapse_singletons():
    u = AreaUniverse(("a", "b", "c"))
    p = collapse_singletons(Partition(u, [4, 4, 7]))
    assert p.labels.tolist() == [0, 0, RESIDUAL]
    assert collapse_singletons(Partition(u, [0, 1, 2])).n_mfas == 0


def test_collapse_renumbers_by_smallest_member():
    u = AreaUniverse(tuple("abcdef"))
    p = collapse_singletons(Partition(u, [9, 3, 9, 3, 5, 1]))
    assert p.labels.tolist() == [0, 1, 0, 1, RESIDUAL, RESIDUAL]


# ---------------------------------------------------------------- daily pipeline


def test_diagonal_only_day_is_all_residual():
    u = AreaUniverse(("a", "b", "c"))
    day = DailyOdm(dt.date(2020, 2, 3), u, sp.csr_matrix(np.diag([5.0, 1.0, 2.0])))
    (p,) = daily_mfas([day])
    assert (p.labels == RESIDUAL).all()


def test_synthetic_blocks_recovered_and_deterministic():
    spec = SynthSpec(blocks=(10, 10, 10), end=dt.date(2020, 2, 5))
    days = gen_odm_series(spec)
    parts = daily_mfas(days)
    again = daily_mfas(days, jobs=2)
    for p, q in zip(parts, again):
        assert p.same_groups(spec.planted().with_meta())
        assert np.array_equal(p.labels, q.labels) and p.modularity == q.modularity
        assert p.date in spec.odm_dates()


def test_daily_mfas_validates():
    with pytest.raises(ValueError):
        daily_mfas([], threshold=1.2)


# ---------------------------------------------------------------- estimators


def test_walktrap_estimator():
    est = WalktrapCommunities(walk_length=3)
    assert clone(est).get_params() == {"walk_length": 3, "self_loops": True}
    labels = est.fit_predict(two_triangles())
    assert len(set(labels[:3])) == 1 and labels[0] != labels[3]
    assert est.modularity_ == pytest.approx(0.5) and est.n_communities_ == 2


def test_mfa_estimator_on_dense_counts():
    c = np.array([[80, 20, 0, 0], [20, 80, 0, 0], [0, 0, 50, 50], [0, 0, 50, 50]])
    est = MobilityFunctionalAreas().fit(c)
    assert est.n_mfas_ == 2
    assert est.labels_.tolist() == [0, 0, 1, 1]
    assert MobilityFunctionalAreas(threshold=0.3).get_params()["threshold"] == 0.3
    with pytest.raises(ValueError):
        MobilityFunctionalAreas(threshold=0).fit(c)
    with pytest.raises(ValueError):
        MobilityFunctionalAreas().fit(-c)
