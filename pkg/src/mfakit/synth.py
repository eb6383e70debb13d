"""Synthetic mobility and epidemic fixtures with known ground truth.

Randomness comes from :class:`XorShift64Star`, a fully specified 64-bit
generator, so a given seed yields the same fixtures on every platform.
Shares and counts are handled with exact rational or fixed-point integer
arithmetic; no platform math library is involved in any generated value.

Generator recurrence (all arithmetic modulo 2**64)::

    x ^= x >> 12
    x ^= x << 25
    x ^= x >> 27
    output = x * 0x2545F4914F6CDD1D

States are seeded through SplitMix64::

    z = (s + 0x9E3779B97F4A7C15)
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    z = z ^ (z >> 31)
"""
from __future__ import annotations

import datetime as dt
import os
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import pandas as pd
import scipy.sparse as sp

from .odm import AdjacencyMatrix, AreaUniverse, DailyOdm
from .partition import RESIDUAL, Partition

__all__ = [
    "XorShift64Star",
    "splitmix64",
    "SynthSpec",
    "SynthSpecError",
    "parse_spec",
    "read_spec",
    "gen_odm_series",
    "gen_cases",
    "CaseFixture",
    "planted_adjacency",
    "planted_partition",
    "noisy_ensemble",
    "random_partition",
    "concentrated_case_fixture",
    "area_ids",
]

MASK64 = (1 << 64) - 1

# stream purposes, mixed into the seed so that streams never overlap
_ODM, _LINKS, _POP, _CASES, _GRAPH, _ENSEMBLE, _PARTITION, _CONCENTRATED = range(1, 9)


def splitmix64(s: int) -> int:
    z = (s + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


class XorShift64Star:
    """xorshift64* generator (Vigna, 2016)."""

    def __init__(self, seed: int, *stream):
        s = splitmix64(int(seed) & MASK64)
        for k in stream:
            s = splitmix64(s ^ (int(k) & MASK64))
        self.state = s or 0x9E3779B97F4A7C15

    def next_u64(self) -> int:
        x = self.state
        x ^= x >> 12
        x ^= (x << 25) & MASK64
        x ^= x >> 27
        self.state = x
        return (x * 0x2545F4914F6CDD1D) & MASK64

    def random(self) -> float:
        """Uniform float in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def randbelow(self, n: int) -> int:
        """Uniform integer in [0, n) by rejection on the top bits."""
        if n <= 0:
            raise ValueError("n must be positive")
        if n == 1:
            return 0
        bits = (n - 1).bit_length()
        while True:
            r = self.next_u64() >> (64 - bits)
            if r < n:
                return r

    def randint(self, lo: int, hi: int) -> int:
        """Uniform integer in [lo, hi]."""
        return lo + self.randbelow(hi - lo + 1)

    def bernoulli(self, p: Fraction) -> bool:
        """True with probability ``p`` (exact for dyadic rationals)."""
        p = Fraction(p)
        return self.next_u64() * p.denominator < p.numerator * (1 << 64)

    def shuffle(self, x: list) -> None:
        for i in range(len(x) - 1, 0, -1):
            j = self.randbelow(i + 1)
            x[i], x[j] = x[j], x[i]

    def sample(self, population, k: int) -> list:
        pool = list(population)
        out = []
        for _ in range(k):
            out.append(pool.pop(self.randbelow(len(pool))))
        return out


def area_ids(n: int) -> tuple:
    width = max(4, len(str(n - 1)))
    return tuple(f"a{k:0{width}d}" for k in range(n))


# --------------------------------------------------------------------------
# spec


class SynthSpecError(ValueError):
    pass


@dataclass(frozen=True)
class SynthSpec:
    """Parameters of a synthetic fixture. See the README for the file format."""

    seed: int = 1
    blocks: tuple = (32, 32, 32, 32)
    loners: int = 0
    self_share: Fraction = Fraction(1, 5)
    within_share: Fraction = Fraction(7, 10)
    cross_share: Fraction = Fraction(1, 10)
    links: int = 3
    loner_self_share: Fraction = Fraction(9, 10)
    noise: Fraction = Fraction(0)
    trips: int = 1000
    start: dt.date = dt.date(2020, 2, 3)
    end: dt.date = dt.date(2020, 2, 28)
    weekdays_only: bool = True
    holidays: frozenset = frozenset()
    regimes: tuple = ()  # ((date, blocks), ...) sorted by date
    district_size: int = 8
    district_offset: int = 0
    district_layout: str = "contiguous"  # or "interleaved"
    pop_mfa: tuple = (2000, 4000)
    pop_other: tuple = (50, 300)
    epi_start: dt.date = dt.date(2020, 3, 1)
    epi_end: dt.date = dt.date(2020, 4, 30)
    initial_rate: Fraction = Fraction(1, 10000)
    growth_mfa: Fraction = Fraction(115, 100)
    growth_other: Fraction = Fraction(1)
    growth_overrides: tuple = ()  # ((mfa_id, multiplier), ...)
    lockdown: dt.date | None = None
    growth_lockdown: Fraction = Fraction(8, 10)
    case_noise: Fraction = Fraction(1, 5)

    def __post_init__(self):
        for b in self.blocks_on(None):
            if b < 2:
                raise SynthSpecError("every block needs at least two areas")
        shares = (self.self_share, self.within_share, self.cross_share)
        if any(s < 0 for s in shares) or sum(shares) != 1:
            raise SynthSpecError(
                f"self_share + within_share + cross_share must equal 1, got {float(sum(shares))}"
            )
        if not 0 <= self.loner_self_share <= 1:
            raise SynthSpecError("loner_self_share must lie in [0, 1]")
        if not 0 <= self.noise <= 1:
            raise SynthSpecError("noise must lie in [0, 1]")
        if not 0 <= self.case_noise < 1:
            raise SynthSpecError("case_noise must lie in [0, 1)")
        if self.trips < 1:
            raise SynthSpecError("trips must be positive")
        if self.links < 1:
            raise SynthSpecError("links must be at least 1")
        if self.end < self.start or self.epi_end < self.epi_start:
            raise SynthSpecError("date ranges must not be reversed")
        if self.district_size < 1:
            raise SynthSpecError("district_size must be positive")
        if self.district_layout not in ("contiguous", "interleaved"):
            raise SynthSpecError("district_layout must be contiguous or interleaved")
        for lo, hi in (self.pop_mfa, self.pop_other):
            if not 0 <= lo <= hi:
                raise SynthSpecError("population ranges need 0 <= lo <= hi")
        if self.initial_rate < 0 or self.growth_mfa < 0 or self.growth_other < 0 or self.growth_lockdown < 0:
            raise SynthSpecError("rates and growth multipliers must be non-negative")
        n = self.n_areas
        for _, blocks in self.regimes:
            if sum(blocks) > n:
                raise SynthSpecError("a regime uses more areas than the universe holds")
            if any(b < 2 for b in blocks):
                raise SynthSpecError("every block needs at least two areas")

    @property
    def n_areas(self) -> int:
        return sum(self.blocks) + self.loners

    @property
    def universe(self) -> AreaUniverse:
        return AreaUniverse(area_ids(self.n_areas))

    def blocks_on(self, date: dt.date | None) -> tuple:
        blocks = self.blocks
        if date is not None:
            for start, b in self.regimes:
                if date >= start:
                    blocks = b
        return blocks

    def regime_index(self, date: dt.date) -> int:
        return sum(1 for start, _ in self.regimes if date >= start)

    def block_labels(self, date: dt.date | None = None) -> np.ndarray:
        """Block id per area; areas outside every block get RESIDUAL."""
        labels = np.full(self.n_areas, RESIDUAL, dtype=np.int64)
        pos = 0
        for k, size in enumerate(self.blocks_on(date)):
            labels[pos:pos + size] = k
            pos += size
        return labels

    def planted(self, date: dt.date | None = None) -> Partition:
        return Partition(self.universe, self.block_labels(date), label="planted", date=None)

    def odm_dates(self) -> list[dt.date]:
        out = []
        d = self.start
        while d <= self.end:
            if (not self.weekdays_only or d.weekday() < 5) and d not in self.holidays:
                out.append(d)
            d += dt.timedelta(days=1)
        return out

    def districts(self) -> np.ndarray:
        """District index per area.

        ``contiguous`` cuts the (offset) id order into runs of
        ``district_size``; ``interleaved`` deals areas round-robin over the
        same number of districts, so every district mixes blocks and loners.
        """
        n = self.n_areas
        pos = (np.arange(n) + self.district_offset) % n
        if self.district_layout == "interleaved":
            return pos % -(-n // self.district_size)
        return pos // self.district_size


_FRACTION_KEYS = {
    "self_share", "within_share", "cross_share", "loner_self_share", "noise", "initial_rate",
    "growth_mfa", "growth_other", "growth_lockdown", "case_noise",
}
_INT_KEYS = {"seed", "loners", "links", "trips", "district_size", "district_offset"}
_DATE_KEYS = {"start", "end", "epi_start", "epi_end", "lockdown"}


def _frac(key, text):
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise SynthSpecError(f"{key}: {text!r} is not a decimal or ratio") from None


def _int_list(key, text):
    try:
        return tuple(int(x) for x in text.replace(" ", "").split(",") if x)
    except ValueError:
        raise SynthSpecError(f"{key}: expected comma-separated integers, got {text!r}") from None


def _date(key, text):
    try:
        return dt.date.fromisoformat(text.strip())
    except ValueError:
        raise SynthSpecError(f"{key}: invalid ISO date {text!r}") from None


def parse_spec(text: str) -> SynthSpec:
    """Parse the flat ``key = value`` spec format (``#`` starts a comment)."""
    kw: dict = {}
    regimes = []
    overrides = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise SynthSpecError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key in _FRACTION_KEYS:
            kw[key] = _frac(key, value)
        elif key in _INT_KEYS:
            try:
                kw[key] = int(value)
            except ValueError:
                raise SynthSpecError(f"line {lineno}: {key} must be an integer") from None
        elif key in _DATE_KEYS:
            kw[key] = _date(key, value)
        elif key == "blocks":
            kw[key] = _int_list(key, value)
        elif key in ("pop_mfa", "pop_other"):
            pair = _int_list(key, value)
            if len(pair) != 2:
                raise SynthSpecError(f"line {lineno}: {key} needs 'lo, hi'")
            kw[key] = pair
        elif key == "district_layout":
            kw[key] = value
        elif key == "weekdays_only":
            if value.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise SynthSpecError(f"line {lineno}: weekdays_only must be true or false")
            kw[key] = value.lower() in ("true", "1", "yes")
        elif key == "holidays":
            kw[key] = frozenset(_date(key, v) for v in value.split(",") if v.strip())
        elif key.startswith("regime."):
            regimes.append((_date(key, key[len("regime."):]), _int_list(key, value)))
        elif key.startswith("growth."):
            try:
                mfa = int(key[len("growth."):])
            except ValueError:
                raise SynthSpecError(f"line {lineno}: growth override needs an MFA id") from None
            overrides.append((mfa, _frac(key, value)))
        else:
            raise SynthSpecError(f"line {lineno}: unknown key {key!r}")
    kw["regimes"] = tuple(sorted(regimes))
    kw["growth_overrides"] = tuple(sorted(overrides))
    try:
        return SynthSpec(**kw)
    except TypeError as exc:  # pragma: no cover - guarded by key checks
        raise SynthSpecError(str(exc)) from None


def read_spec(path) -> SynthSpec:
    with open(path, encoding="utf-8") as fh:
        return parse_spec(fh.read())


# --------------------------------------------------------------------------
# mobility


def _links_for_regime(spec: SynthSpec, regime: int, blocks: tuple) -> list[list[int]]:
    """Within-block destinations of every origin, fixed for a regime."""
    rng = XorShift64Star(spec.seed, _LINKS, regime)
    out: list[list[int]] = [[] for _ in range(spec.n_areas)]
    pos = 0
    for size in blocks:
        members = list(range(pos, pos + size))
        for i in members:
            others = [j for j in members if j != i]
            out[i] = sorted(rng.sample(others, min(spec.links, len(others))))
        pos += size
    return out


def _allocate(trips: int, classes: list[tuple[Fraction, list[int]]], n: int) -> np.ndarray:
    """Split ``trips`` over destinations by largest remainder, exactly.

    ``classes`` holds ``(share_per_destination, destinations)``; all members
    of a class share one quota. Leftover units go to classes with the
    largest fractional remainder, members in index order.
    """
    row = np.zeros(n, dtype=np.int64)
    rema = []
    used = 0
    for rank, (share, dests) in enumerate(classes):
        if not dests:
            continue
        quota = share * trips
        base = quota.numerator // quota.denominator
        row[dests] += base
        used += base * len(dests)
        rema.append((quota - base, rank, dests))
    left = trips - used
    for frac, _, dests in sorted(rema, key=lambda r: (-r[0], r[1])):
        if left <= 0 or frac == 0:
            break
        take = min(left, len(dests))
        row[dests[:take]] += 1
        left -= take
    return row


def _expected_row(spec: SynthSpec, i: int, labels: np.ndarray, links: list[list[int]]) -> np.ndarray:
    n = spec.n_areas
    b = labels[i]
    if b == RESIDUAL:
        others = [j for j in range(n) if j != i]
        if not others:
            return _allocate(spec.trips, [(Fraction(1), [i])], n)
        rest = (1 - spec.loner_self_share) / len(others)
        return _allocate(spec.trips, [(spec.loner_self_share, [i]), (rest, others)], n)
    outside = [j for j in range(n) if labels[j] != b]
    classes = [(spec.self_share, [i]), (spec.within_share / len(links[i]), links[i])]
    if outside:
        classes.append((spec.cross_share / len(outside), outside))
    else:
        classes[0] = (spec.self_share + spec.cross_share, [i])
    return _allocate(spec.trips, classes, n)


def gen_odm_series(spec: SynthSpec, dates=None) -> list[DailyOdm]:
    """Daily ODMs whose expected row shares follow ``spec``.

    Each origin sends ``trips`` movements: ``self_share`` stays home,
    ``within_share`` is split over ``links`` fixed destinations inside its
    block and ``cross_share`` over every area outside the block. Areas outside
    all blocks keep ``loner_self_share`` and spread the rest evenly. On each
    day, ``noise * trips`` of every row's movements are moved to uniformly
    drawn destinations.
    """
    dates = spec.odm_dates() if dates is None else list(dates)
    universe = spec.universe
    n = spec.n_areas
    k_noise = int(spec.noise * spec.trips)
    regime_rows: dict[int, list[np.ndarray]] = {}
    out = []
    for date in dates:
        r = spec.regime_index(date)
        if r not in regime_rows:
            blocks = spec.blocks_on(date)
            labels = spec.block_labels(date)
            links = _links_for_regime(spec, r, blocks)
            regime_rows[r] = [_expected_row(spec, i, labels, links) for i in range(n)]
        rng = XorShift64Star(spec.seed, _ODM, date.toordinal())
        rows, cols, vals = [], [], []
        for i, base in enumerate(regime_rows[r]):
            row = base.copy()
            if k_noise:
                cum = np.cumsum(row)
                for _ in range(k_noise):
                    u = rng.randbelow(int(cum[-1]))
                    src = int(np.searchsorted(cum, u, side="right"))
                    row[src] -= 1
                    row[rng.randbelow(n)] += 1
                    cum = np.cumsum(row)
            nz = np.flatnonzero(row)
            rows.extend([i] * nz.size)
            cols.extend(nz.tolist())
            vals.extend(row[nz].tolist())
        counts = sp.csr_matrix((np.asarray(vals, dtype=float), (rows, cols)), shape=(n, n))
        out.append(DailyOdm(date, universe, counts))
    return out


def write_odm_csv(odms, dest) -> None:
    ids = odms[0].universe.ids if odms else ()
    with open(dest, "w", encoding="utf-8", newline="") as fh:
        fh.write("date,origin,destination,count\n")
        for o in odms:
            c = o.counts.tocoo()
            order = np.lexsort((c.col, c.row))
            d = o.date.isoformat()
            for k in order:
                v = c.data[k]
                fh.write(f"{d},{ids[c.row[k]]},{ids[c.col[k]]},{int(v) if float(v).is_integer() else format(v, '.10g')}\n")


# --------------------------------------------------------------------------
# epidemic

_FP = 40
_ONE = 1 << _FP


def _fixed(x: Fraction) -> int:
    x = Fraction(x)
    return (x.numerator << _FP) // x.denominator


@dataclass(frozen=True, eq=False)
class CaseFixture:
    """Output of :func:`gen_cases`.

    ``zones`` has columns ``area_id, gkz, population``; ``district_cases`` has
    ``gkz, date, cases_7d``; ``zone_daily`` holds latent daily new cases per
    zone (rows follow ``zones``) for ``days``.
    """

    zones: pd.DataFrame
    district_cases: pd.DataFrame
    zone_daily: np.ndarray
    days: tuple


def gen_cases(spec: SynthSpec, partition: Partition | None = None, dates=None) -> CaseFixture:
    """District-level 7-day case counts from zone-level latent epidemics.

    Every zone starts at ``initial_rate`` daily cases per inhabitant. Each day
    the rate of a zone inside a non-residual MFA of ``partition`` is
    multiplied by ``growth_mfa`` (or its ``growth.<id>`` override), other
    zones by ``growth_other``; from ``lockdown`` on every zone uses
    ``growth_lockdown``. Daily counts are ``floor(pop * rate * u)`` with
    ``u`` uniform in ``[1 - case_noise, 1 + case_noise]``, summed to
    districts and then to trailing 7-day windows ending on each date.
    """
    if partition is None:
        partition = spec.planted()
    n = spec.n_areas
    if len(partition) != n:
        raise SynthSpecError("partition does not cover the spec's areas")
    labels = np.asarray(partition.labels)
    ids = spec.universe.ids
    districts = spec.districts()
    gkz = [f"g{d:03d}" for d in districts.tolist()]

    rng_pop = XorShift64Star(spec.seed, _POP)
    pop = []
    for i in range(n):
        lo, hi = spec.pop_mfa if labels[i] != RESIDUAL else spec.pop_other
        pop.append(rng_pop.randint(lo, hi))

    if dates is None:
        days = []
        d = spec.epi_start
        while d <= spec.epi_end:
            days.append(d)
            d += dt.timedelta(days=1)
    else:
        days = sorted(dates)
    if not days:
        raise SynthSpecError("no epidemic dates")
    # six burn-in days so the first reported window is complete
    all_days = []
    d = days[0] - dt.timedelta(days=6)
    while d <= days[-1]:
        all_days.append(d)
        d += dt.timedelta(days=1)

    override = dict(spec.growth_overrides)
    g_in = {}
    for k in set(labels.tolist()):
        if k != RESIDUAL:
            g_in[k] = _fixed(override.get(k, spec.growth_mfa))
    g_out = _fixed(spec.growth_other)
    g_lock = _fixed(spec.growth_lockdown)
    nu = _fixed(spec.case_noise)

    rate = [_fixed(spec.initial_rate)] * n
    daily = np.zeros((n, len(all_days)), dtype=np.int64)
    for t, day in enumerate(all_days):
        rng = XorShift64Star(spec.seed, _CASES, day.toordinal())
        for i in range(n):
            u = rng.next_u64() >> 32
            factor = _ONE - nu + ((2 * nu * u) >> 32)
            daily[i, t] = (pop[i] * rate[i] * factor) >> (2 * _FP)
        locked = spec.lockdown is not None and day >= spec.lockdown
        for i in range(n):
            g = g_lock if locked else (g_in[labels[i]] if labels[i] != RESIDUAL else g_out)
            rate[i] = (rate[i] * g) >> _FP

    zones = pd.DataFrame({"area_id": list(ids), "gkz": gkz, "population": pop})
    codes = sorted(set(gkz))
    code_index = {c: k for k, c in enumerate(codes)}
    dist_daily = np.zeros((len(codes), len(all_days)), dtype=np.int64)
    for i in range(n):
        dist_daily[code_index[gkz[i]]] += daily[i]
    csum = np.concatenate([np.zeros((len(codes), 1), dtype=np.int64), np.cumsum(dist_daily, axis=1)], axis=1)
    day_pos = {d: k for k, d in enumerate(all_days)}
    records = []
    for d in days:
        t = day_pos[d]
        lo = max(0, t - 6)
        window = csum[:, t + 1] - csum[:, lo]
        for c, v in zip(codes, window.tolist()):
            records.append((c, d, int(v)))
    cases = pd.DataFrame(records, columns=["gkz", "date", "cases_7d"])
    keep = [day_pos[d] for d in days]
    return CaseFixture(zones, cases, daily[:, keep], tuple(days))


# --------------------------------------------------------------------------
# graph-level and partition-level fixtures


def planted_partition(n_blocks: int, block_size: int) -> Partition:
    n = n_blocks * block_size
    return Partition(AreaUniverse(area_ids(n)), np.repeat(np.arange(n_blocks), block_size), label="planted")


def planted_adjacency(n_blocks: int, block_size: int, p_in, p_out, seed: int) -> AdjacencyMatrix:
    """Directed links drawn with ``p_in`` inside blocks and ``p_out`` across,
    symmetrized to the {0, 0.5, 1} weights used by the MFA pipeline."""
    n = n_blocks * block_size
    p_in, p_out = Fraction(str(p_in)), Fraction(str(p_out))
    rng = XorShift64Star(seed, _GRAPH)
    p = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i != j and rng.bernoulli(p_in if i // block_size == j // block_size else p_out):
                p[i, j] = 1.0
    return AdjacencyMatrix(None, AreaUniverse(area_ids(n)), sp.csr_matrix((p + p.T) / 2))


def noisy_ensemble(base: Partition, n_days: int, rate, seed: int) -> list[Partition]:
    """Copies of ``base`` in which ``round(rate * n)`` areas per day move to
    another, uniformly chosen, group of ``base``."""
    rate = Fraction(str(rate))
    n = len(base)
    k = int(rate * n + Fraction(1, 2))
    groups = base.mfa_ids
    out = []
    for day in range(n_days):
        rng = XorShift64Star(seed, _ENSEMBLE, day)
        labels = np.asarray(base.labels).copy()
        if len(groups) > 1:
            for i in rng.sample(range(n), k):
                choices = [g for g in groups if g != labels[i]]
                labels[i] = choices[rng.randbelow(len(choices))]
        out.append(Partition(base.universe, labels, label=f"day{day:03d}"))
    return out


def random_partition(n: int, max_groups: int, seed: int, universe: AreaUniverse | None = None) -> Partition:
    """Random partition whose groups all have at least two members."""
    if n < 2:
        raise ValueError("need at least two areas")
    rng = XorShift64Star(seed, _PARTITION)
    k = 1 + rng.randbelow(max(1, min(max_groups, n // 2)))
    order = list(range(n))
    rng.shuffle(order)
    labels = np.empty(n, dtype=np.int64)
    # two guaranteed members per group, the rest anywhere
    for g in range(k):
        labels[order[2 * g]] = g
        labels[order[2 * g + 1]] = g
    for i in order[2 * k:]:
        labels[i] = rng.randbelow(k)
    universe = universe or AreaUniverse(area_ids(n))
    return Partition(universe, labels)


def concentrated_case_fixture(
    seed: int,
    n_districts: int = 6,
    mfa_zones: int = 4,
    residual_zones: int = 4,
    cases: int = 40,
    date: dt.date = dt.date(2020, 5, 1),
    small=(100, 300),
    large=(1000, 3000),
):
    """Cases confined to one district shared by a small-population MFA and
    large-population residual zones.

    District ``d`` holds ``mfa_zones`` zones of MFA ``d`` followed by
    ``residual_zones`` residual zones. Only district 0 reports ``cases``;
    its residual zones draw populations from ``large``, every other zone
    from ``small``. Proportional redistribution then hands most of the
    cases to the residual zones, so MFA 0 sits below the reference level.

    Returns
    -------
    zones : DataFrame
        ``area_id, gkz, population``.
    district_cases : DataFrame
        ``gkz, date, cases_7d`` on the single ``date``.
    partition : Partition
    """
    rng = XorShift64Star(seed, _CONCENTRATED)
    size = mfa_zones + residual_zones
    ids = area_ids(n_districts * size)
    gkz, pop, labels = [], [], []
    for d in range(n_districts):
        for k in range(size):
            gkz.append(f"g{d:03d}")
            if k < mfa_zones:
                labels.append(d)
                pop.append(rng.randint(*small))
            else:
                labels.append(RESIDUAL)
                pop.append(rng.randint(*(large if d == 0 else small)))
    zones = pd.DataFrame({"area_id": list(ids), "gkz": gkz, "population": pop})
    codes = [f"g{d:03d}" for d in range(n_districts)]
    district_cases = pd.DataFrame({
        "gkz": codes,
        "date": [date] * n_districts,
        "cases_7d": [cases] + [0] * (n_districts - 1),
    })
    return zones, district_cases, Partition(AreaUniverse(ids), np.array(labels, dtype=np.int64))


def write_fixture(spec: SynthSpec, out_dir) -> dict:
    """Write ``odm.csv``, ``zones.csv``, ``district_cases.csv`` and
    ``planted.csv`` into ``out_dir``; return the written paths."""
    from .partition import write_partition_csv

    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "odm": os.path.join(out_dir, "odm.csv"),
        "zones": os.path.join(out_dir, "zones.csv"),
        "district_cases": os.path.join(out_dir, "district_cases.csv"),
        "planted": os.path.join(out_dir, "planted.csv"),
    }
    write_odm_csv(gen_odm_series(spec), paths["odm"])
    planted = spec.planted()
    write_partition_csv(planted, paths["planted"])
    fx = gen_cases(spec, planted)
    fx.zones.to_csv(paths["zones"], index=False, lineterminator="\n")
    dc = fx.district_cases.copy()
    dc["date"] = [d.isoformat() for d in dc["date"]]
    dc.to_csv(paths["district_cases"], index=False, lineterminator="\n")
    return paths
