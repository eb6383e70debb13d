"""Partitions of an area universe into MFAs plus a residual group."""
from __future__ import annotations

import csv
import datetime as dt
import json
import os
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .odm import AreaUniverse

__all__ = [
    "RESIDUAL",
    "Partition",
    "read_partition_csv",
    "write_partition_csv",
    "write_partition_json",
    "write_partition_geojson",
    "read_admin_mapping",
]

RESIDUAL = -1


@dataclass(frozen=True, eq=False)
class Partition:
    """Assignment of every area of ``universe`` to an MFA id or RESIDUAL.

    ``labels[k]`` is the MFA id of ``universe.ids[k]``; MFA ids are
    non-negative integers and :data:`RESIDUAL` (``-1``) marks the residual
    territory. Partitions produced by :func:`mfakit.community.collapse_singletons`
    have dense ids ``0..K-1`` and every MFA has at least two members
    (:attr:`is_proper`); administrative partitions may contain singletons.
    """

    universe: AreaUniverse
    labels: np.ndarray
    label: str = ""
    date: dt.date | None = None
    modularity: float | None = None

    def __post_init__(self):
        labels = np.array(self.labels, dtype=np.int64).ravel()
        if labels.shape[0] != len(self.universe):
            raise ValueError(
                f"{labels.shape[0]} labels for a universe of {len(self.universe)} areas"
            )
        if labels.size and labels.min() < RESIDUAL:
            raise ValueError("MFA ids must be non-negative or RESIDUAL (-1)")
        labels.flags.writeable = False
        object.__setattr__(self, "labels", labels)
        if not self.label and self.date is not None:
            object.__setattr__(self, "label", self.date.isoformat())

    @classmethod
    def from_assignment(cls, universe: AreaUniverse, assignment: Mapping[str, int], **kw) -> "Partition":
        missing = [a for a in universe.ids if a not in assignment]
        if missing:
            raise ValueError(f"area {missing[0]!r} has no assignment")
        extra = [a for a in assignment if a not in universe]
        if extra:
            raise ValueError(f"unknown area id {extra[0]!r}")
        return cls(universe, [int(assignment[a]) for a in universe.ids], **kw)

    @classmethod
    def from_groups(cls, universe: AreaUniverse, groups, **kw) -> "Partition":
        """Build from a list of member-id collections; uncovered ids go to RESIDUAL."""
        labels = np.full(len(universe), RESIDUAL, dtype=np.int64)
        for g, members in enumerate(groups):
            for a in members:
                k = universe.index(a)
                if labels[k] != RESIDUAL:
                    raise ValueError(f"area {a!r} appears in two groups")
                labels[k] = g
        return cls(universe, labels, **kw)

    def __len__(self):
        return len(self.universe)

    def with_meta(self, **kw) -> "Partition":
        fields = dict(label=self.label, date=self.date, modularity=self.modularity)
        fields.update(kw)
        return Partition(self.universe, self.labels, **fields)

    @property
    def mfa_ids(self) -> list[int]:
        return sorted(int(x) for x in np.unique(self.labels) if x != RESIDUAL)

    @property
    def n_mfas(self) -> int:
        return len(self.mfa_ids)

    @property
    def assignment(self) -> dict[str, int]:
        return dict(zip(self.universe.ids, self.labels.tolist()))

    @property
    def sizes(self) -> dict[int, int]:
        ids, counts = np.unique(self.labels, return_counts=True)
        out = {int(i): int(c) for i, c in zip(ids, counts)}
        out.setdefault(RESIDUAL, 0)
        return out

    @property
    def residual(self) -> np.ndarray:
        return np.flatnonzero(self.labels == RESIDUAL)

    @property
    def is_proper(self) -> bool:
        return all(c >= 2 for k, c in self.sizes.items() if k != RESIDUAL)

    def groups(self, include_residual: bool = False) -> list[frozenset]:
        """Member index sets, ordered by MFA id; the residual group (if any) last."""
        out = [frozenset(np.flatnonzero(self.labels == k).tolist()) for k in self.mfa_ids]
        if include_residual:
            res = self.residual
            if res.size:
                out.append(frozenset(res.tolist()))
        return out

    def members(self, mfa_id: int) -> list[str]:
        return [self.universe.ids[k] for k in np.flatnonzero(self.labels == mfa_id)]

    def same_groups(self, other: "Partition", include_residual: bool = True) -> bool:
        """True when both partitions induce the same family of member sets."""
        if self.universe != other.universe:
            return False
        return set(self.groups(include_residual)) == set(other.groups(include_residual))


# --------------------------------------------------------------------------
# io


def _fmt(x) -> str:
    return format(float(x), ".10g")


def write_partition_csv(p: Partition, dest) -> None:
    """``area_id,mfa_id`` in universe order, RESIDUAL written as -1."""
    def _write(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["area_id", "mfa_id"])
        for a, k in zip(p.universe.ids, p.labels.tolist()):
            w.writerow([a, k])

    if isinstance(dest, (str, os.PathLike)):
        with open(dest, "w", newline="", encoding="utf-8") as fh:
            _write(fh)
    else:
        _write(dest)


def read_partition_csv(source, universe: AreaUniverse | None = None, **kw) -> Partition:
    """Inverse of :func:`write_partition_csv`.

    Without ``universe`` the file order defines it. With one, every
    universe id must be present.
    """
    close = isinstance(source, (str, os.PathLike))
    fh = open(source, newline="", encoding="utf-8") if close else source
    try:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"area_id", "mfa_id"} <= set(reader.fieldnames):
            raise ValueError("partition file needs columns area_id,mfa_id")
        assignment = {}
        order = []
        for row in reader:
            a = row["area_id"].strip()
            if a in assignment:
                raise ValueError(f"line {reader.line_num}: area {a!r} listed twice")
            try:
                assignment[a] = int(row["mfa_id"])
            except ValueError:
                raise ValueError(f"line {reader.line_num}: bad mfa_id {row['mfa_id']!r}") from None
            order.append(a)
    finally:
        if close:
            fh.close()
    if universe is None:
        universe = AreaUniverse(tuple(order))
    return Partition.from_assignment(universe, assignment, **kw)


def partition_to_dict(p: Partition, extra: Mapping | None = None) -> dict:
    doc = {
        "label": p.label,
        "date": p.date.isoformat() if p.date else None,
        "modularity": None if p.modularity is None else float(_fmt(p.modularity)),
        "n_mfas": p.n_mfas,
        "mfas": {str(k): p.members(k) for k in p.mfa_ids},
        "residual": p.members(RESIDUAL),
    }
    if extra:
        doc.update(extra)
    return doc


def write_partition_json(p: Partition, dest, extra: Mapping | None = None) -> None:
    with open(dest, "w", encoding="utf-8") as fh:
        json.dump(partition_to_dict(p, extra), fh, indent=1, sort_keys=True)
        fh.write("\n")


def _geometry_index(geometry_source) -> dict[str, dict]:
    with open(geometry_source, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("type") == "FeatureCollection":
        out = {}
        for feat in doc.get("features", []):
            props = feat.get("properties") or {}
            key = props.get("area_id", feat.get("id"))
            if key is None:
                raise ValueError("geometry feature without area_id property or id")
            out[str(key)] = feat.get("geometry")
        return out
    # plain mapping id -> geometry
    return {str(k): v for k, v in doc.items()}


def write_partition_geojson(p: Partition, geometry_source, dest) -> None:
    """Join ``mfa_id`` onto area geometries; areas without geometry are skipped."""
    geoms = _geometry_index(geometry_source)
    features = []
    for a, k in zip(p.universe.ids, p.labels.tolist()):
        if a not in geoms:
            continue
        features.append(
            {"type": "Feature", "id": a, "geometry": geoms[a], "properties": {"area_id": a, "mfa_id": k}}
        )
    with open(dest, "w", encoding="utf-8") as fh:
        json.dump({"type": "FeatureCollection", "features": features}, fh, sort_keys=True)
        fh.write("\n")


def read_admin_mapping(source, universe: AreaUniverse, id_column="area_id", group_column="gkz") -> Partition:
    """Administrative partition from an ``area_id,<district>`` CSV.

    District codes are mapped to dense ids in sorted order. Every universe id
    must be mapped.
    """
    close = isinstance(source, (str, os.PathLike))
    fh = open(source, newline="", encoding="utf-8") if close else source
    try:
        reader = csv.DictReader(fh)
        cols = reader.fieldnames or []
        if id_column not in cols:
            raise ValueError(f"admin mapping needs a {id_column!r} column")
        if group_column not in cols:
            others = [c for c in cols if c != id_column]
            if not others:
                raise ValueError("admin mapping needs a district column")
            group_column = others[0]
        raw = {row[id_column].strip(): row[group_column].strip() for row in reader}
    finally:
        if close:
            fh.close()
    unmapped = [a for a in universe.ids if a not in raw]
    if unmapped:
        raise ValueError(f"area {unmapped[0]!r} has no district in the admin mapping")
    codes = {c: k for k, c in enumerate(sorted({raw[a] for a in universe.ids}))}
    return Partition(universe, [codes[raw[a]] for a in universe.ids], label="admin")
