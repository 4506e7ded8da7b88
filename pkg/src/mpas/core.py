"""Exact-arithmetic domain model for appointment scheduling.

Items are jobs with a size in (0, 1]; scheduling an item commits it to a
half-open interval ``[start, start + size)`` inside the unit day.  A final
packing groups the scheduled intervals into bins (rooms) so that no two
intervals in a bin overlap.
"""
from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

ZERO = Fraction(0)
ONE = Fraction(1)


class StructuralError(ValueError):
    """A packing refers to items the schedule does not know about."""


def as_fraction(value) -> Fraction:
    """Coerce ints, Fractions and ``"p/q"`` / decimal strings to a Fraction.

    Floats are rejected: boundary classification must be exact.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not sizes")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"cannot convert {type(value).__name__} exactly; pass a Fraction or a string")


@dataclass(frozen=True, slots=True)
class Item:
    id: int
    size: Fraction

    def __post_init__(self):
        if not isinstance(self.size, Fraction):
            object.__setattr__(self, "size", as_fraction(self.size))
        if not (ZERO < self.size <= ONE):
            raise ValueError(f"item {self.id}: size {self.size} outside (0, 1]")


@dataclass(frozen=True, slots=True)
class TimeInterval:
    start: Fraction
    length: Fraction

    def __post_init__(self):
        if self.start < 0 or self.length < 0 or self.start + self.length > 1:
            raise ValueError(f"interval [{self.start}, {self.start + self.length}) escapes [0, 1]")

    @property
    def end(self) -> Fraction:
        return self.start + self.length


def intervals_overlap(a: TimeInterval, b: TimeInterval) -> bool:
    """True iff the half-open intervals share a point.  Touching ends do not overlap."""
    return a.start < b.end and b.start < a.end


@dataclass(frozen=True, slots=True)
class ScheduledItem:
    item: Item
    interval: TimeInterval

    def __post_init__(self):
        if self.interval.length != self.item.size:
            raise ValueError(f"item {self.item.id}: interval length differs from size")

    @property
    def id(self) -> int:
        return self.item.id

    @property
    def size(self) -> Fraction:
        return self.item.size

    @property
    def start(self) -> Fraction:
        return self.interval.start

    @property
    def end(self) -> Fraction:
        return self.interval.end


def place(item: Item, start) -> ScheduledItem:
    return ScheduledItem(item, TimeInterval(as_fraction(start), item.size))


@dataclass(frozen=True)
class Schedule:
    entries: tuple[ScheduledItem, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        ids = [e.id for e in self.entries]
        if len(ids) != len(set(ids)):
            dup = [i for i, c in Counter(ids).items() if c > 1]
            raise ValueError(f"duplicate item ids in schedule: {dup[:5]}")

    def __len__(self):
        return len(self.entries)

    def by_id(self) -> dict[int, ScheduledItem]:
        return {e.id: e for e in self.entries}

    def total_size(self) -> Fraction:
        return sum((e.size for e in self.entries), ZERO)


@dataclass(frozen=True)
class FinalPacking:
    bins: tuple[tuple[ScheduledItem, ...], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "bins", tuple(tuple(b) for b in self.bins))

    def __len__(self):
        return len(self.bins)

    @property
    def num_bins(self) -> int:
        return len(self.bins)


def _integer_grid(values: Iterable[Fraction]) -> int:
    """Least common denominator of the given fractions."""
    den = 1
    for v in values:
        den = math.lcm(den, v.denominator)
    return den


def peak_utilization(s: Schedule | Sequence[ScheduledItem]) -> int:
    """Maximum number of entries covering a common time point.

    Sweep over endpoints; at equal coordinates ends are processed before
    starts so touching intervals are not double counted.
    """
    entries = s.entries if isinstance(s, Schedule) else tuple(s)
    if not entries:
        return 0
    den = _integer_grid(e.start for e in entries)
    den = math.lcm(den, _integer_grid(e.size for e in entries))
    events = []
    for e in entries:
        a = e.start.numerator * (den // e.start.denominator)
        b = a + e.size.numerator * (den // e.size.denominator)
        events.append((a, 1))
        events.append((b, 0))
    # (coord, 0) sorts before (coord, 1): ends first
    events.sort()
    cur = best = 0
    for _, kind in events:
        if kind:
            cur += 1
            if cur > best:
                best = cur
        else:
            cur -= 1
    return best


@dataclass
class ValidityReport:
    overlaps: list = field(default_factory=list)
    out_of_range: list = field(default_factory=list)
    moved: list = field(default_factory=list)
    missing: list = field(default_factory=list)
    duplicated: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not (self.overlaps or self.out_of_range or self.moved or self.missing or self.duplicated)

    def __bool__(self):
        # truthy when there is something to report
        return not self.ok

    def violations(self) -> list[str]:
        out = []
        out += [f"overlap in bin {b}: items {i} and {j}" for b, i, j in self.overlaps]
        out += [f"item {i} escapes [0,1]" for i in self.out_of_range]
        out += [f"item {i} moved from its scheduled interval" for i in self.moved]
        out += [f"item {i} missing from packing" for i in self.missing]
        out += [f"item {i} packed more than once" for i in self.duplicated]
        return out


def validate_packing(p: FinalPacking, s: Schedule) -> ValidityReport:
    """Check a packing against the schedule it claims to realise.

    Raises StructuralError for item ids the schedule never saw.
    """
    known = s.by_id()
    rep = ValidityReport()
    seen = Counter()
    for b, contents in enumerate(p.bins):
        for e in contents:
            if e.id not in known:
                raise StructuralError(f"bin {b} holds unknown item id {e.id}")
            seen[e.id] += 1
            iv = e.interval
            if iv.start < 0 or iv.start + iv.length > 1:
                rep.out_of_range.append(e.id)
            ref = known[e.id]
            # entries are immutable, so the scheduled object itself cannot have moved
            if ref is not e and (ref.interval != iv or ref.size != e.size):
                rep.moved.append(e.id)
        if len(contents) < 2:
            continue
        ordered = sorted(contents, key=lambda e: (e.start, e.end))
        for x, y in zip(ordered, ordered[1:]):
            if y.start < x.end:
                rep.overlaps.append((b, x.id, y.id))
    rep.duplicated = sorted(i for i, c in seen.items() if c > 1)
    rep.missing = sorted(i for i in known if i not in seen)
    return rep


class FirstFitBins:
    """First fit over unit bins with a max-residual segment tree: O(log bins) per insert."""

    def __init__(self):
        self.fill: list[Fraction] = []
        self._cap = 1
        self._tree = [Fraction(-1)] * 2

    def __len__(self):
        return len(self.fill)

    def _set(self, i, residual):
        j = i + self._cap
        self._tree[j] = residual
        j //= 2
        while j:
            self._tree[j] = max(self._tree[2 * j], self._tree[2 * j + 1])
            j //= 2

    def _grow(self):
        self._cap *= 2
        self._tree = [Fraction(-1)] * self._cap + [ONE - f for f in self.fill] + \
            [Fraction(-1)] * (self._cap - len(self.fill))
        for j in range(self._cap - 1, 0, -1):
            self._tree[j] = max(self._tree[2 * j], self._tree[2 * j + 1])

    def insert(self, size: Fraction) -> tuple[int, Fraction]:
        """Put ``size`` into the first bin with room; returns (bin index, previous fill)."""
        if self._tree[1] >= size:
            j = 1
            while j < self._cap:
                j = 2 * j if self._tree[2 * j] >= size else 2 * j + 1
            i = j - self._cap
        else:
            if len(self.fill) == self._cap:
                self._grow()
            i = len(self.fill)
            self.fill.append(ZERO)
        before = self.fill[i]
        self.fill[i] = before + size
        self._set(i, ONE - self.fill[i])
        return i, before


def bins_ge_peak(p: FinalPacking, s: Schedule) -> bool:
    return p.num_bins >= peak_utilization(s)


# --- serialization -------------------------------------------------------

def _frac_str(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def item_to_json(item: Item) -> dict:
    return {"id": item.id, "size": _frac_str(item.size)}


def item_from_json(obj: dict) -> Item:
    return Item(int(obj["id"]), as_fraction(obj["size"]))


def write_items_jsonl(items: Iterable[Item], fh) -> None:
    for it in items:
        fh.write(json.dumps(item_to_json(it)) + "\n")


def read_items_jsonl(fh) -> list[Item]:
    out = []
    for line in fh:
        line = line.strip()
        if line:
            out.append(item_from_json(json.loads(line)))
    return out


def scheduled_to_json(e: ScheduledItem) -> dict:
    return {"id": e.id, "start": _frac_str(e.start), "length": _frac_str(e.size)}


def scheduled_from_json(obj: dict) -> ScheduledItem:
    length = as_fraction(obj["length"])
    return ScheduledItem(Item(int(obj["id"]), length), TimeInterval(as_fraction(obj["start"]), length))


def schedule_to_json(s: Schedule) -> dict:
    return {"entries": [scheduled_to_json(e) for e in s.entries]}


def schedule_from_json(obj: dict) -> Schedule:
    return Schedule(tuple(scheduled_from_json(e) for e in obj["entries"]))


def packing_to_json(p: FinalPacking) -> dict:
    return {"bins": [[scheduled_to_json(e) for e in b] for b in p.bins]}


def packing_from_json(obj: dict) -> FinalPacking:
    return FinalPacking(tuple(tuple(scheduled_from_json(e) for e in b) for b in obj["bins"]))
