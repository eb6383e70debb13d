"""Agreement between partitions.

The directed index averages, over the groups of the first partition, the
best Dice overlap with any group of the second::

    sim(G, G') = 1/K * sum_i max_j 2 |G_i & G'_j| / (|G_i| + |G'_j|)

It is not symmetric, so comparisons use the mean of both directions,
``(sim(G, G') + sim(G', G)) / 2``.

By default the residual territory enters as one ordinary group.
"""
from __future__ import annotations

import csv
import datetime as dt
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .partition import RESIDUAL, Partition

__all__ = [
    "sim_groups",
    "sim_directed",
    "sim_symmetric",
    "SimilarityReport",
    "similarity_matrix",
    "intraweek_series",
    "compare_to_admin",
]

WEEKDAYS = ("Monday", "Tuesday", "Wednesday", "Thursday", "Friday", "Saturday", "Sunday")


def sim_groups(g_i, g_j) -> float:
    """Dice coefficient ``2|A & B| / (|A| + |B|)`` of two non-empty sets."""
    a, b = set(g_i), set(g_j)
    if not a or not b:
        raise ValueError("groups must be non-empty")
    return 2.0 * len(a & b) / (len(a) + len(b))


def _codes(p: Partition, include_residual: bool) -> np.ndarray:
    labels = np.asarray(p.labels)
    if include_residual:
        return labels
    return np.where(labels == RESIDUAL, -2, labels)


def _directed_partitions(g: Partition, h: Partition, include_residual: bool) -> float:
    if g.universe != h.universe:
        raise ValueError("partitions are defined over different area universes")
    a = _codes(g, include_residual)
    b = _codes(h, include_residual)
    keep_a = a != -2
    ua, ia = np.unique(a[keep_a], return_inverse=True)
    if ua.size == 0:
        warnings.warn("partition without groups; similarity defined as 0", RuntimeWarning, stacklevel=3)
        return 0.0
    ub, ib_all = np.unique(b, return_inverse=True)
    valid_b = ub != -2
    if not valid_b.any():
        warnings.warn("partition without groups; similarity defined as 0", RuntimeWarning, stacklevel=3)
        return 0.0
    size_a = np.bincount(ia, minlength=ua.size).astype(float)
    size_b = np.bincount(ib_all, minlength=ub.size).astype(float)
    ib = ib_all[keep_a]
    inter = sp.coo_matrix((np.ones(ia.size), (ia, ib)), shape=(ua.size, ub.size)).tocsr()
    inter.sum_duplicates()
    c = inter.tocoo()
    ok = valid_b[c.col]
    dice = np.zeros(c.nnz)
    dice[ok] = 2.0 * c.data[ok] / (size_a[c.row[ok]] + size_b[c.col[ok]])
    best = np.zeros(ua.size)
    np.maximum.at(best, c.row, dice)
    return float(best.mean())


def _directed_sets(g, h) -> float:
    g = [set(x) for x in g]
    h = [set(x) for x in h]
    if not g or not h:
        warnings.warn("partition without groups; similarity defined as 0", RuntimeWarning, stacklevel=3)
        return 0.0
    return sum(max(sim_groups(gi, hj) for hj in h) for gi in g) / len(g)


def sim_directed(g, g_prime, include_residual: bool = True) -> float:
    """Directed similarity of ``g`` towards ``g_prime``.

    Both arguments are :class:`Partition` objects over one universe, or plain
    collections of member sets.
    """
    if isinstance(g, Partition) and isinstance(g_prime, Partition):
        return _directed_partitions(g, g_prime, include_residual)
    if isinstance(g, Partition) or isinstance(g_prime, Partition):
        raise TypeError("compare two Partitions or two collections of sets")
    return _directed_sets(g, g_prime)


def sim_symmetric(g, g_prime, include_residual: bool = True) -> float:
    """Mean of the two directed similarities."""
    return 0.5 * (sim_directed(g, g_prime, include_residual) + sim_directed(g_prime, g, include_residual))


@dataclass(frozen=True, eq=False)
class SimilarityReport:
    """Symmetric similarity between labelled partitions."""

    labels: tuple
    values: np.ndarray

    def to_long_csv(self, dest) -> None:
        with open(dest, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["label_a", "label_b", "score"])
            for i, a in enumerate(self.labels):
                for j, b in enumerate(self.labels):
                    w.writerow([a, b, format(float(self.values[i, j]), ".10g")])

    def to_square_csv(self, dest) -> None:
        with open(dest, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["label", *self.labels])
            for a, row in zip(self.labels, self.values):
                w.writerow([a, *(format(float(v), ".10g") for v in row)])


def _label(p: Partition, k: int) -> str:
    if p.label:
        return p.label
    return p.date.isoformat() if p.date else str(k)


def similarity_matrix(parts, include_residual: bool = True) -> SimilarityReport:
    """All-pairs symmetric similarity; the diagonal is 1 by construction."""
    parts = list(parts)
    k = len(parts)
    directed = np.eye(k)
    for i in range(k):
        for j in range(k):
            if i != j:
                directed[i, j] = sim_directed(parts[i], parts[j], include_residual)
    values = 0.5 * (directed + directed.T)
    values.flags.writeable = False
    return SimilarityReport(tuple(_label(p, i) for i, p in enumerate(parts)), values)


def intraweek_series(parts, include_residual: bool = True) -> list[tuple[dt.date, str, float]]:
    """Similarity of every partition to the first one on the same weekday.

    Returns ``(date, weekday name, score)`` rows in date order.
    """
    dated = sorted((p for p in parts if p.date is not None), key=lambda p: p.date)
    first: dict[int, Partition] = {}
    out = []
    for p in dated:
        wd = p.date.weekday()
        ref = first.setdefault(wd, p)
        score = 1.0 if ref is p else sim_symmetric(p, ref, include_residual)
        out.append((p.date, WEEKDAYS[wd], score))
    return out


def compare_to_admin(parts, admin: Partition, include_residual: bool = True) -> list[float]:
    """Symmetric similarity of each partition against an administrative one."""
    out = []
    for p in parts:
        if p.universe != admin.universe:
            missing = [a for a in p.universe.ids if a not in admin.universe]
            if missing:
                raise ValueError(f"area {missing[0]!r} is not in the administrative mapping")
            raise ValueError("administrative partition covers a different area universe")
        out.append(sim_symmetric(p, admin, include_residual))
    return out


def write_weekday_series(rows, dest) -> None:
    with open(dest, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", "weekday", "score"])
        for d, wd, s in rows:
            w.writerow([d.isoformat(), wd, format(float(s), ".10g")])
