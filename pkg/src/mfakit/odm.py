"""Origin-destination matrices: ingestion, row normalization, thresholding.

The chain implemented here is::

    DailyOdm --normalize--> NormalizedOdm --threshold--> ProximityMatrix
             --symmetrize--> AdjacencyMatrix

Every stage is an immutable value holding a ``scipy.sparse`` CSR matrix over
a shared :class:`AreaUniverse`.
"""
from __future__ import annotations

import csv
import datetime as dt
import io
import os
from dataclasses import dataclass, field
from typing import IO, Iterable, Iterator

import numpy as np
import scipy.sparse as sp

__all__ = [
    "AreaUniverse",
    "DailyOdm",
    "NormalizedOdm",
    "ProximityMatrix",
    "AdjacencyMatrix",
    "OdmFormatError",
    "load_odm",
    "read_holidays",
    "weekday_filter",
    "normalize",
    "threshold",
    "symmetrize",
    "write_triplets",
]

ODM_HEADER = ("date", "origin", "destination", "count")


class OdmFormatError(ValueError):
    """Malformed ODM input. ``line`` is the 1-based line number, if known."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


def _frozen_csr(m) -> sp.csr_matrix:
    m = sp.csr_matrix(m, copy=True)
    m.sum_duplicates()
    m.eliminate_zeros()
    m.sort_indices()
    for arr in (m.data, m.indices, m.indptr):
        arr.flags.writeable = False
    return m


@dataclass(frozen=True, eq=False)
class AreaUniverse:
    """Ordered set of opaque area identifiers with an id <-> position index."""

    ids: tuple
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        ids = tuple(str(i) for i in self.ids)
        if not ids:
            raise ValueError("an area universe needs at least one area")
        index = {a: k for k, a in enumerate(ids)}
        if len(index) != len(ids):
            seen = set()
            dup = next(a for a in ids if a in seen or seen.add(a))
            raise ValueError(f"duplicate area id {dup!r}")
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "_index", index)

    def __len__(self):
        return len(self.ids)

    def __iter__(self):
        return iter(self.ids)

    def __contains__(self, area_id):
        return area_id in self._index

    def __eq__(self, other):
        return isinstance(other, AreaUniverse) and self.ids == other.ids

    def __hash__(self):
        return hash(self.ids)

    def index(self, area_id: str) -> int:
        try:
            return self._index[area_id]
        except KeyError:
            raise KeyError(f"unknown area id {area_id!r}") from None

    def id_at(self, k: int) -> str:
        return self.ids[k]

    def permuted(self, order) -> "AreaUniverse":
        """Universe whose k-th id is ``self.ids[order[k]]``."""
        return AreaUniverse(tuple(self.ids[k] for k in order))


def _check_square(m, universe):
    n = len(universe)
    if m.shape != (n, n):
        raise ValueError(f"matrix shape {m.shape} does not match universe of {n} areas")


@dataclass(frozen=True, eq=False)
class DailyOdm:
    """Movement counts between areas for one date (zeros implicit)."""

    date: dt.date
    universe: AreaUniverse
    counts: sp.csr_matrix

    def __post_init__(self):
        counts = _frozen_csr(sp.csr_matrix(self.counts, dtype=float))
        _check_square(counts, self.universe)
        if counts.nnz and counts.data.min() < 0:
            raise ValueError("movement counts must be non-negative")
        if not isinstance(self.date, dt.date):
            raise TypeError("date must be a datetime.date")
        object.__setattr__(self, "counts", counts)

    def scaled(self, factor: float) -> "DailyOdm":
        return DailyOdm(self.date, self.universe, self.counts * factor)


@dataclass(frozen=True, eq=False)
class NormalizedOdm:
    """Row shares of a :class:`DailyOdm`; ``zero_rows`` had no outflow."""

    date: dt.date
    universe: AreaUniverse
    probs: sp.csr_matrix
    zero_rows: frozenset


@dataclass(frozen=True, eq=False)
class ProximityMatrix:
    """0/1 matrix of directed links whose share exceeds ``threshold``."""

    date: dt.date
    universe: AreaUniverse
    threshold: float
    edges: sp.csr_matrix


@dataclass(frozen=True, eq=False)
class AdjacencyMatrix:
    """Symmetric weights ``(P + P.T) / 2`` with values in {0, 0.5, 1}."""

    date: dt.date | None
    universe: AreaUniverse
    weights: sp.csr_matrix

    def __post_init__(self):
        w = _frozen_csr(sp.csr_matrix(self.weights, dtype=float))
        _check_square(w, self.universe)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_dense(cls, weights, universe=None, date=None) -> "AdjacencyMatrix":
        weights = np.asarray(weights, dtype=float)
        if universe is None:
            universe = AreaUniverse(tuple(str(k) for k in range(weights.shape[0])))
        return cls(date, universe, sp.csr_matrix(weights))


# --------------------------------------------------------------------------
# ingestion


def _open_text(source) -> tuple[IO[str], bool]:
    if isinstance(source, (str, os.PathLike)):
        return open(source, newline="", encoding="utf-8"), True
    if isinstance(source, io.TextIOBase) or hasattr(source, "read"):
        return source, False
    # any iterable of lines
    return io.StringIO("".join(line if line.endswith("\n") else line + "\n" for line in source)), True


def _parse_date(text, line):
    try:
        return dt.date.fromisoformat(text.strip())
    except ValueError:
        raise OdmFormatError(f"invalid ISO date {text!r}", line) from None


def _iter_records(stream, delimiter) -> Iterator[tuple[int, dt.date, str, str, float]]:
    reader = csv.reader(stream, delimiter=delimiter)
    header = None
    for row in reader:
        if not row or all(not c.strip() for c in row):
            continue
        line = reader.line_num
        if header is None:
            header = tuple(c.strip().lower() for c in row)
            if header != ODM_HEADER:
                raise OdmFormatError(
                    f"expected header {','.join(ODM_HEADER)!r}, got {delimiter.join(row)!r}", line
                )
            continue
        if len(row) != 4:
            raise OdmFormatError(f"expected 4 fields, got {len(row)}", line)
        date_s, origin, dest, count_s = (c.strip() for c in row)
        if not origin or not dest:
            raise OdmFormatError("empty area id", line)
        try:
            count = float(count_s)
        except ValueError:
            raise OdmFormatError(f"count {count_s!r} is not a number", line) from None
        if not np.isfinite(count):
            raise OdmFormatError(f"count {count_s!r} is not finite", line)
        if count < 0:
            raise OdmFormatError(f"negative count {count_s}", line)
        yield line, _parse_date(date_s, line), origin, dest, count


def load_odm(source, universe: AreaUniverse | None = None, delimiter: str = ",") -> list[DailyOdm]:
    """Read ``date,origin,destination,count`` rows into one DailyOdm per date.

    Parameters
    ----------
    source : path, text stream or iterable of lines
        Delimited text with the header ``date,origin,destination,count``.
    universe : AreaUniverse, optional
        Fixed universe; ids outside it raise :class:`OdmFormatError`. When
        omitted the universe grows to every id seen, sorted.
    delimiter : str
        Field delimiter.

    Returns
    -------
    list of DailyOdm
        Sorted by date. Duplicate ``(date, origin, destination)`` rows are
        summed.
    """
    stream, owned = _open_text(source)
    try:
        records = list(_iter_records(stream, delimiter))
    finally:
        if owned:
            stream.close()

    if universe is None:
        if not records:
            return []
        ids = sorted({r[2] for r in records} | {r[3] for r in records})
        universe = AreaUniverse(tuple(ids))
    else:
        for line, _, origin, dest, _ in records:
            for a in (origin, dest):
                if a not in universe:
                    raise OdmFormatError(f"unknown area id {a!r}", line)

    by_date: dict[dt.date, tuple[list, list, list]] = {}
    for _, date, origin, dest, count in records:
        rows, cols, vals = by_date.setdefault(date, ([], [], []))
        rows.append(universe.index(origin))
        cols.append(universe.index(dest))
        vals.append(count)

    n = len(universe)
    out = []
    for date in sorted(by_date):
        rows, cols, vals = by_date[date]
        m = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
        out.append(DailyOdm(date, universe, m))
    return out


def read_holidays(source) -> set[dt.date]:
    """One ISO date per line; blank lines and ``#`` comments ignored."""
    stream, owned = _open_text(source)
    try:
        out = set()
        for k, raw in enumerate(stream, start=1):
            text = raw.split("#", 1)[0].strip()
            if text:
                out.add(_parse_date(text, k))
        return out
    finally:
        if owned:
            stream.close()


def weekday_filter(odms: Iterable[DailyOdm], holidays: Iterable[dt.date] = ()) -> list[DailyOdm]:
    """Keep Monday-Friday dates that are not holidays, preserving order."""
    holidays = set(holidays)
    return [o for o in odms if o.date.weekday() < 5 and o.date not in holidays]


# --------------------------------------------------------------------------
# transformations


def normalize(odm: DailyOdm, include_diagonal: bool = True) -> NormalizedOdm:
    """Divide each row by its total outflow.

    With ``include_diagonal`` (the default) internal movements count towards
    the denominator and keep their own share; otherwise the diagonal is
    dropped before normalizing.
    """
    counts = odm.counts
    if not include_diagonal:
        counts = counts - sp.diags(counts.diagonal())
        counts = _frozen_csr(counts)
    totals = np.asarray(counts.sum(axis=1)).ravel()
    zero = totals <= 0
    row_of = np.repeat(np.arange(counts.shape[0]), np.diff(counts.indptr))
    probs = sp.csr_matrix((counts.data / totals[row_of], counts.indices, counts.indptr), shape=counts.shape)
    return NormalizedOdm(odm.date, odm.universe, _frozen_csr(probs), frozenset(np.flatnonzero(zero).tolist()))


def threshold(norm: NormalizedOdm, t: float) -> ProximityMatrix:
    """Directed 0/1 links where the row share is strictly above ``t``.

    The diagonal is always zero: an area is never linked to itself.
    """
    if not 0.0 < t < 1.0:
        raise ValueError(f"threshold must lie in (0, 1), got {t}")
    p = norm.probs.tocoo()
    keep = (p.data > t) & (p.row != p.col)
    edges = sp.coo_matrix(
        (np.ones(int(keep.sum()), dtype=np.int8), (p.row[keep], p.col[keep])), shape=p.shape
    )
    return ProximityMatrix(norm.date, norm.universe, float(t), _frozen_csr(edges))


def symmetrize(p: ProximityMatrix) -> AdjacencyMatrix:
    """``A = (P + P.T) / 2``: 1 for mutual links, 0.5 for one-way links."""
    e = p.edges.astype(float)
    return AdjacencyMatrix(p.date, p.universe, (e + e.T) * 0.5)


# --------------------------------------------------------------------------
# export


def write_triplets(obj, dest, delimiter: str = ",") -> None:
    """Write the non-zero cells of a matrix stage as ``i_id,j_id,value``."""
    for attr in ("probs", "edges", "weights", "counts"):
        if hasattr(obj, attr):
            m = getattr(obj, attr).tocoo()
            break
    else:
        raise TypeError(f"cannot export {type(obj).__name__} as triplets")
    order = np.lexsort((m.col, m.row))
    ids = obj.universe.ids

    def _write(fh):
        w = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        w.writerow(["i_id", "j_id", "value"])
        for k in order:
            w.writerow([ids[m.row[k]], ids[m.col[k]], format(float(m.data[k]), ".10g")])

    if isinstance(dest, (str, os.PathLike)):
        with open(dest, "w", newline="", encoding="utf-8") as fh:
            _write(fh)
    else:
        _write(dest)
