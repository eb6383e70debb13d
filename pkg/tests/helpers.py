"""Fixture builders shared by the statistics tests."""
import datetime as dt

import numpy as np
import pandas as pd

from mfakit.odm import AreaUniverse
from mfakit.partition import RESIDUAL, Partition
from mfakit.stats import ZoneFrame

DAY = dt.date(2020, 4, 1)


def zone_frame(labels, gkz, population, cases, dates=(DAY,)):
    """ZoneFrame and Partition from per-zone arrays; ``cases`` is (n,) or (n, T)."""
    n = len(labels)
    ids = [f"z{k:04d}" for k in range(n)]
    zones = pd.DataFrame({"gkz": [str(g) for g in gkz], "population": np.asarray(population, float)},
                         index=pd.Index(ids, name="area_id"))
    cases = np.asarray(cases, float).reshape(n, -1)
    table = pd.DataFrame(cases, index=zones.index, columns=list(dates))
    part = Partition(AreaUniverse(tuple(ids)), np.asarray(labels))
    return ZoneFrame(zones, table), part


def random_zones(rng, n=60, n_mfas=4, n_districts=6, residual_share=0.3):
    """Random labels (every MFA and the residual non-empty), districts and populations."""
    labels = rng.integers(0, n_mfas, n)
    labels[rng.random(n) < residual_share] = RESIDUAL
    labels[: n_mfas + 1] = np.arange(-1, n_mfas)
    gkz = np.concatenate([np.arange(n_districts), rng.integers(0, n_districts, n - n_districts)])
    pop = rng.integers(200, 5000, n).astype(float)
    return labels, gkz, pop
