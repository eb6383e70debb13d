"""Consensus MFAs from an ensemble of daily partitions (CO-association).

For every pair of areas the co-association frequency is the share of
ensemble members placing both areas in the same MFA. Pairs reaching the cut
(``>= 0.5`` by default) become unit-weight edges, and walktrap on that graph
gives the persistent MFAs.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import scipy.sparse as sp
from sklearn.base import BaseEstimator, ClusterMixin

from ._validation import check_fraction, check_walk_length
from .community import build_graph, collapse_singletons, cut_at_max_modularity, walktrap
from .odm import AdjacencyMatrix, AreaUniverse
from .partition import RESIDUAL, Partition

__all__ = ["CoMatrix", "co_association", "binarize", "persistent_mfas", "CoAssociationConsensus"]


@dataclass(frozen=True, eq=False)
class CoMatrix:
    """Co-membership counts over an ensemble of ``ensemble_size`` partitions.

    ``counts`` holds integer off-diagonal counts; :attr:`freq` divides them
    by the ensemble size and puts ones on the diagonal.
    """

    universe: AreaUniverse
    counts: sp.csr_matrix
    ensemble_size: int

    @property
    def freq(self) -> sp.csr_matrix:
        f = self.counts.astype(float) / self.ensemble_size
        return sp.csr_matrix(f + sp.identity(len(self.universe), format="csr"))

    def to_dense(self) -> np.ndarray:
        return self.freq.toarray()

    def write_csv(self, dest) -> None:
        """Upper triangle, non-zero pairs only: ``area_a,area_b,freq``."""
        up = sp.triu(self.counts, k=1).tocoo()
        order = np.lexsort((up.col, up.row))
        ids = self.universe.ids
        with open(dest, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["area_a", "area_b", "freq"])
            for k in order:
                f = up.data[k] / self.ensemble_size
                w.writerow([ids[up.row[k]], ids[up.col[k]], format(float(f), ".10g")])


def _indicator(p: Partition, residual_together: bool) -> sp.csr_matrix:
    labels = np.asarray(p.labels)
    n = labels.size
    cols = labels.copy()
    keep = cols != RESIDUAL
    if residual_together:
        cols[~keep] = labels.max() + 1 if keep.any() else 0
        keep[:] = True
    rows = np.flatnonzero(keep)
    cols = cols[keep]
    k = int(cols.max()) + 1 if cols.size else 1
    return sp.csr_matrix((np.ones(rows.size, dtype=np.int64), (rows, cols)), shape=(n, k))


def co_association(parts, residual_together: bool = False) -> CoMatrix:
    """Count, for each pair, the ensemble members that put both in one MFA.

    Two residual areas are *not* counted as together unless
    ``residual_together`` is set.
    """
    parts = list(parts)
    if not parts:
        raise ValueError("the ensemble needs at least one partition")
    universe = parts[0].universe
    n = len(universe)
    total = sp.csr_matrix((n, n), dtype=np.int64)
    for p in parts:
        if p.universe != universe:
            raise ValueError("ensemble partitions are defined over different area universes")
        m = _indicator(p, residual_together)
        total = total + m @ m.T
    c = total.tocoo()
    off = (c.row != c.col) & (c.data != 0)
    counts = sp.csr_matrix((c.data[off].astype(np.int64), (c.row[off], c.col[off])), shape=(n, n))
    return CoMatrix(universe, counts, len(parts))


def binarize(co: CoMatrix, cut: float = 0.5) -> AdjacencyMatrix:
    """Unit-weight adjacency of pairs with ``freq >= cut`` (zero diagonal).

    The comparison is carried out on integer counts against the exact value
    of ``cut``.
    """
    cut = check_fraction("cut", cut, high_open=False)
    exact = Fraction(cut)
    c = co.counts.tocoo()
    keep = c.data * exact.denominator >= exact.numerator * co.ensemble_size
    keep &= c.row != c.col
    m = sp.coo_matrix((np.ones(int(keep.sum())), (c.row[keep], c.col[keep])), shape=c.shape)
    return AdjacencyMatrix(None, co.universe, m.tocsr())


def persistent_mfas(
    parts,
    cut: float = 0.5,
    walk_length: int = 4,
    label: str = "persistent",
    residual_together: bool = False,
    self_loops: bool = True,
) -> Partition:
    """Walktrap, max-modularity cut and singleton collapse on the binarized
    co-association graph of ``parts``."""
    co = co_association(parts, residual_together=residual_together)
    dend = walktrap(build_graph(binarize(co, cut)), walk_length, self_loops=self_loops)
    return collapse_singletons(cut_at_max_modularity(dend)).with_meta(label=label)


class CoAssociationConsensus(ClusterMixin, BaseEstimator):
    """Consensus clustering of an ensemble of partitions.

    Parameters
    ----------
    cut : float, default=0.5
        Minimum co-association frequency for an edge.
    walk_length : int, default=4
    residual_together : bool, default=False
        Count two residual areas as co-members.

    Attributes
    ----------
    co_matrix_ : CoMatrix
    partition_ : Partition
    labels_ : ndarray
        Consensus MFA per area, -1 for the residual territory.

    Notes
    -----
    ``fit`` accepts a list of :class:`Partition` or an integer array of shape
    ``(n_partitions, n_areas)`` with -1 marking residual areas.
    """

    def __init__(self, cut=0.5, walk_length=4, residual_together=False):
        self.cut = cut
        self.walk_length = walk_length
        self.residual_together = residual_together

    def fit(self, X, y=None):
        check_fraction("cut", self.cut, high_open=False)
        check_walk_length(self.walk_length)
        if not (isinstance(X, (list, tuple)) and X and isinstance(X[0], Partition)):
            arr = np.asarray(X)
            if arr.ndim != 2 or arr.shape[0] < 1:
                raise ValueError("expected a list of Partitions or a 2-D label array")
            universe = AreaUniverse(tuple(str(k) for k in range(arr.shape[1])))
            X = [Partition(universe, row) for row in arr]
        self.co_matrix_ = co_association(X, residual_together=self.residual_together)
        dend = walktrap(build_graph(binarize(self.co_matrix_, self.cut)), self.walk_length)
        self.partition_ = collapse_singletons(cut_at_max_modularity(dend)).with_meta(label="persistent")
        self.labels_ = np.asarray(self.partition_.labels).copy()
        return self
