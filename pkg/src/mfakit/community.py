"""Walktrap community detection and daily MFA extraction.

Walktrap (Pons & Latapy) agglomerates communities bottom-up. The distance
between two communities compares where random walks of ``walk_length`` steps
started inside each of them end up; at every step the pair of *adjacent*
communities whose merge least increases the mean squared within-community
distance (``delta_sigma``) is merged. The resulting dendrogram is cut where
weighted modularity is largest.

Transition probabilities are computed exactly (dense matrix powers per
connected component), so results carry no sampling noise. Every choice that
could tie is broken by smallest area index, which makes the output a pure
function of the input.
"""
from __future__ import annotations

import datetime as dt
import heapq
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_fraction, check_square, check_walk_length
from .odm import AdjacencyMatrix, AreaUniverse, DailyOdm, normalize, symmetrize
from .odm import threshold as _threshold
from .partition import RESIDUAL, Partition

__all__ = [
    "MobilityGraph",
    "Dendrogram",
    "build_graph",
    "walktrap",
    "modularity",
    "cut_at_max_modularity",
    "collapse_singletons",
    "mfa_for_day",
    "daily_mfas",
    "WalktrapCommunities",
    "MobilityFunctionalAreas",
]

# relative precision at which two delta-sigma values count as a tie
_KEY_DIGITS = 12
# absolute tolerance for treating two modularity values as tied
_Q_TIE = 1e-12


@dataclass(frozen=True, eq=False)
class MobilityGraph:
    """Weighted undirected graph over an area universe."""

    universe: AreaUniverse
    edges: tuple
    vertex_strength: np.ndarray
    weights: sp.csr_matrix

    @property
    def total_weight(self) -> float:
        return float(sum(w for _, _, w in self.edges))

    @property
    def isolated(self) -> np.ndarray:
        return np.flatnonzero(self.vertex_strength <= 0)


def build_graph(a: AdjacencyMatrix) -> MobilityGraph:
    """One undirected edge per unordered pair with positive weight.

    Raises
    ------
    ValueError
        If the adjacency is not exactly symmetric or has a non-zero diagonal.
    """
    w = sp.csr_matrix(a.weights, dtype=float)
    if (w != w.T).nnz:
        raise ValueError("adjacency matrix is not symmetric")
    if np.any(w.diagonal() != 0):
        raise ValueError("adjacency matrix has self-loops on the diagonal")
    up = sp.triu(w, k=1).tocoo()
    order = np.lexsort((up.col, up.row))
    edges = tuple((int(up.row[k]), int(up.col[k]), float(up.data[k])) for k in order)
    strength = np.asarray(w.sum(axis=1)).ravel()
    strength.flags.writeable = False
    return MobilityGraph(a.universe, edges, strength, w)


@dataclass(frozen=True, eq=False)
class Dendrogram:
    """Walktrap merge history.

    Community ids ``0..n-1`` are the vertices; merge number ``s`` (1-based)
    creates community ``n + s - 1``. ``modularity[s]`` is Q after ``s``
    merges, so ``modularity[0]`` is the all-singletons value. Isolated
    vertices never take part.
    """

    universe: AreaUniverse
    vertices: tuple
    merges: tuple
    modularity: tuple
    delta_sigma: tuple
    walk_length: int = 4

    @property
    def n_merges(self) -> int:
        return len(self.merges)

    def best_step(self) -> int:
        q = np.asarray(self.modularity)
        best = q.max()
        return int(np.flatnonzero(q >= best - _Q_TIE)[0])

    def to_dict(self) -> dict:
        ids = self.universe.ids
        n = len(ids)
        return {
            "walk_length": self.walk_length,
            "vertices": [ids[v] for v in self.vertices],
            "merges": [
                {"step": s, "a": int(a), "b": int(b), "new": n + s - 1,
                 "delta_sigma": float(format(ds, ".10g")), "modularity": float(format(q, ".10g"))}
                for (a, b, s), ds, q in zip(self.merges, self.delta_sigma, self.modularity[1:])
            ],
            "modularity_initial": float(format(self.modularity[0], ".10g")),
            "best_step": self.best_step(),
        }


def _tie_key(x: float) -> float:
    return float(f"{x:.{_KEY_DIGITS}g}")


def walktrap(graph: MobilityGraph, walk_length: int = 4, self_loops: bool = True) -> Dendrogram:
    """Agglomerate communities by random-walk distance.

    Parameters
    ----------
    graph : MobilityGraph
    walk_length : int
        Number of random-walk steps ``t``.
    self_loops : bool
        Give every vertex a loop carrying the mean weight of its edges before
        computing transition probabilities, as in the reference walktrap
        implementation. Loops affect the walk only, never modularity.

    Returns
    -------
    Dendrogram
    """
    t = check_walk_length(walk_length)
    universe = graph.universe
    n = len(universe)
    w = graph.weights
    deg = np.asarray(graph.vertex_strength, dtype=float)
    active = np.flatnonzero(deg > 0)
    if active.size == 0:
        return Dendrogram(universe, (), (), (0.0,), (), t)

    two_m = deg.sum()
    m = two_m / 2.0
    n_active = float(active.size)

    vec: dict[int, np.ndarray] = {}
    n_comp, comp_labels = connected_components(w[active][:, active], directed=False)
    for c in range(n_comp):
        verts = active[comp_labels == c]
        sub = w[verts][:, verts].toarray()
        if self_loops:
            nb = (sub > 0).sum(axis=1)
            sub[np.diag_indices_from(sub)] = sub.sum(axis=1) / nb
        d = sub.sum(axis=1)
        p = sub / d[:, None]
        pt = np.linalg.matrix_power(p, t) / np.sqrt(d)[None, :]
        for k, v in enumerate(verts.tolist()):
            vec[v] = pt[k]

    size = {v: 1 for v in active.tolist()}
    tot = {v: float(deg[v]) for v in active.tolist()}
    minv = {v: v for v in active.tolist()}
    nbrs: dict[int, dict[int, float]] = {v: {} for v in active.tolist()}
    for i, j, wt in graph.edges:
        nbrs[i][j] = wt
        nbrs[j][i] = wt

    def push(heap, a, b):
        if minv[a] > minv[b]:
            a, b = b, a
        diff = vec[a] - vec[b]
        ds = size[a] * size[b] / (size[a] + size[b]) * float(diff @ diff) / n_active
        heapq.heappush(heap, (_tie_key(ds), minv[a], minv[b], ds, a, b))

    heap: list = []
    for i, j, _ in graph.edges:
        push(heap, i, j)

    q = -float(np.sum((deg / two_m) ** 2))
    qs = [q]
    merges = []
    dsig = []
    alive = set(active.tolist())
    next_id = n
    while heap:
        _, _, _, ds, a, b = heapq.heappop(heap)
        if a not in alive or b not in alive:
            continue
        c = next_id
        next_id += 1
        sa, sb = size[a], size[b]
        vec[c] = (sa * vec[a] + sb * vec[b]) / (sa + sb)
        size[c] = sa + sb
        tot[c] = tot[a] + tot[b]
        minv[c] = min(minv[a], minv[b])
        w_ab = nbrs[a].get(b, 0.0)
        q += w_ab / m - 2.0 * tot[a] * tot[b] / (two_m * two_m)
        merged: dict[int, float] = {}
        for old in (a, b):
            for k, wt in nbrs[old].items():
                if k in (a, b):
                    continue
                merged[k] = merged.get(k, 0.0) + wt
                del nbrs[k][old]
        for k, wt in merged.items():
            nbrs[k][c] = wt
        nbrs[c] = merged
        for old in (a, b):
            alive.discard(old)
            del vec[old], nbrs[old]
        alive.add(c)
        merges.append((a, b, len(merges) + 1))
        dsig.append(ds)
        qs.append(q)
        for k in sorted(merged, key=minv.__getitem__):
            push(heap, c, k)

    return Dendrogram(universe, tuple(active.tolist()), tuple(merges), tuple(qs), tuple(dsig), t)


def modularity(graph: MobilityGraph, labels) -> float:
    """Weighted modularity ``sum_c (in_c / m - (tot_c / 2m)^2)``.

    Every distinct label is one community; RESIDUAL members are treated as
    singletons.
    """
    labels = np.asarray(labels).copy()
    res = labels == RESIDUAL
    labels[res] = labels.max() + 1 + np.arange(int(res.sum()))
    m = graph.total_weight
    if m == 0:
        return 0.0
    inside = sum(wt for i, j, wt in graph.edges if labels[i] == labels[j])
    _, inv = np.unique(labels, return_inverse=True)
    tot = np.bincount(inv, weights=graph.vertex_strength)
    return float(inside / m - np.sum((tot / (2 * m)) ** 2))


def _labels_at(d: Dendrogram, step: int) -> np.ndarray:
    n = len(d.universe)
    members: dict[int, list[int]] = {v: [v] for v in d.vertices}
    for a, b, s in d.merges[:step]:
        members[n + s - 1] = members.pop(a) + members.pop(b)
    labels = np.full(n, RESIDUAL, dtype=np.int64)
    for k, group in enumerate(sorted(members.values(), key=min)):
        labels[group] = k
    return labels


def cut_at_max_modularity(d: Dendrogram) -> Partition:
    """Communities at the merge step with the highest modularity.

    The earliest step wins ties. Isolated vertices are placed in RESIDUAL;
    singleton communities are kept until :func:`collapse_singletons`.
    """
    if not d.merges and not d.vertices:
        return Partition(d.universe, np.full(len(d.universe), RESIDUAL), modularity=0.0)
    step = d.best_step()
    return Partition(d.universe, _labels_at(d, step), modularity=float(d.modularity[step]))


def collapse_singletons(p: Partition) -> Partition:
    """Send singleton communities to RESIDUAL and renumber the rest densely.

    Remaining MFAs are numbered ``0..K-1`` in order of their smallest member
    index.
    """
    labels = np.full(len(p), RESIDUAL, dtype=np.int64)
    groups = [g for g in p.groups() if len(g) >= 2]
    for k, g in enumerate(sorted(groups, key=min)):
        labels[sorted(g)] = k
    return Partition(p.universe, labels, label=p.label, date=p.date, modularity=p.modularity)


def mfa_for_day(
    odm: DailyOdm,
    threshold: float = 0.15,
    walk_length: int = 4,
    include_diagonal: bool = True,
    self_loops: bool = True,
) -> tuple[Partition, Dendrogram]:
    """Normalize, threshold, symmetrize, detect and collapse one day."""
    adj = symmetrize(_threshold(normalize(odm, include_diagonal=include_diagonal), threshold))
    dend = walktrap(build_graph(adj), walk_length, self_loops=self_loops)
    part = collapse_singletons(cut_at_max_modularity(dend)).with_meta(date=odm.date, label=odm.date.isoformat())
    return part, dend


def daily_mfas(
    odms,
    threshold: float = 0.15,
    walk_length: int = 4,
    include_diagonal: bool = True,
    self_loops: bool = True,
    jobs: int = 1,
    return_dendrograms: bool = False,
):
    """Run :func:`mfa_for_day` for every date, in input order.

    ``jobs > 1`` spreads days over worker processes; results are identical
    to a serial run.
    """
    odms = list(odms)
    check_fraction("threshold", threshold)
    check_walk_length(walk_length)
    if odms:
        u = odms[0].universe
        if any(o.universe != u for o in odms):
            raise ValueError("all ODMs must share one area universe")
    fn = partial(mfa_for_day, threshold=threshold, walk_length=walk_length,
                 include_diagonal=include_diagonal, self_loops=self_loops)
    if jobs > 1 and len(odms) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(fn, odms))
    else:
        results = [fn(o) for o in odms]
    parts = [r[0] for r in results]
    if return_dendrograms:
        return parts, [r[1] for r in results]
    return parts


# --------------------------------------------------------------------------
# estimator interface


def _as_adjacency(X) -> AdjacencyMatrix:
    if isinstance(X, AdjacencyMatrix):
        return X
    w = check_square(X)
    return AdjacencyMatrix(None, AreaUniverse(tuple(str(k) for k in range(w.shape[0]))), w)


class WalktrapCommunities(ClusterMixin, BaseEstimator):
    """Walktrap clustering of a symmetric weighted adjacency matrix.

    Parameters
    ----------
    walk_length : int, default=4
        Random-walk length.
    self_loops : bool, default=True
        Add mean-weight self-loops before computing transition probabilities.

    Attributes
    ----------
    labels_ : ndarray of shape (n_vertices,)
        Community at the maximum-modularity cut; isolated vertices get -1.
    dendrogram_ : Dendrogram
    modularity_ : float
    n_communities_ : int
    """

    def __init__(self, walk_length=4, self_loops=True):
        self.walk_length = walk_length
        self.self_loops = self_loops

    def fit(self, X, y=None):
        check_walk_length(self.walk_length)
        graph = build_graph(_as_adjacency(X))
        self.dendrogram_ = walktrap(graph, self.walk_length, self_loops=self.self_loops)
        part = cut_at_max_modularity(self.dendrogram_)
        self.labels_ = np.asarray(part.labels).copy()
        self.modularity_ = float(part.modularity)
        self.n_communities_ = part.n_mfas
        return self


class MobilityFunctionalAreas(ClusterMixin, BaseEstimator):
    """Mobility functional areas of one origin-destination matrix.

    Parameters
    ----------
    threshold : float, default=0.15
        Row-share threshold; links need a strictly larger share. Use 0.30 for
        the strict variant.
    walk_length : int, default=4
    include_diagonal : bool, default=True
        Count internal movements in the row totals.
    self_loops : bool, default=True
        See :func:`walktrap`.

    Attributes
    ----------
    partition_ : Partition
    labels_ : ndarray
        MFA id per area, -1 for the residual territory.
    dendrogram_ : Dendrogram
    modularity_ : float
    """

    def __init__(self, threshold=0.15, walk_length=4, include_diagonal=True, self_loops=True):
        self.threshold = threshold
        self.walk_length = walk_length
        self.include_diagonal = include_diagonal
        self.self_loops = self_loops

    def fit(self, X, y=None):
        check_fraction("threshold", self.threshold)
        if not isinstance(X, DailyOdm):
            counts = check_square(X, name="ODM")
            universe = AreaUniverse(tuple(str(k) for k in range(counts.shape[0])))
            X = DailyOdm(dt.date(1970, 1, 1), universe, counts)
        self.partition_, self.dendrogram_ = mfa_for_day(
            X, self.threshold, self.walk_length, self.include_diagonal, self.self_loops
        )
        self.labels_ = np.asarray(self.partition_.labels).copy()
        self.modularity_ = float(self.partition_.modularity)
        return self

    @property
    def n_mfas_(self):
        check_is_fitted(self, "partition_")
        return self.partition_.n_mfas
