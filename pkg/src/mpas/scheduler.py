"""Online phase: commit each arriving item to a time interval.

Items of one category are collected into a complete set of one-sided bins.
Each category keeps at most one partial set; when its last slot is filled
the set is handed to the completed list for the offline rematching phase.

Random choices (Large/Medium side, Third balancing ties) draw one bit each
from a seeded numpy generator, in arrival order, so a run is replayable
from ``(seed, stream)``.
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .catalog import CATALOG, INNER_OFFSET, Catalog, CategoryDescriptor, ItemClass
from .core import ONE, ZERO, Item, Schedule, ScheduledItem, place


class BinKind(enum.Enum):
    TYPE1 = "type1"
    TYPE2_LARGE = "type2_large"
    TYPE2_SMALL = "type2_small"


class Side(enum.Enum):
    LEFT = "L"
    RIGHT = "R"

    @property
    def other(self) -> "Side":
        return Side.RIGHT if self is Side.LEFT else Side.LEFT


_ids = itertools.count()


@dataclass(eq=False)
class OneSidedBin:
    """Items of one category packed contiguously from one edge of a bin.

    Type 1 bins pack from 0.  Third inner bins (``role="inner"``) have an
    edge slot at the border and an interior slot starting exactly 11/32
    from it.
    """
    kind: BinKind
    side: Side | None = None
    capacity: int | None = None
    fill_threshold: Fraction | None = None
    role: str | None = None
    items: list[ScheduledItem] = field(default_factory=list)
    fill: Fraction = ZERO
    uid: int = field(default_factory=lambda: next(_ids))
    # inner Third bins only
    edge: ScheduledItem | None = None
    interior: ScheduledItem | None = None

    def is_open(self) -> bool:
        if self.capacity is not None:
            return len(self.items) < self.capacity
        return self.fill < self.fill_threshold

    def place(self, item: Item) -> ScheduledItem:
        if self.side is Side.RIGHT:
            e = place(item, ONE - self.fill - item.size)
        else:
            e = place(item, self.fill)
        self.items.append(e)
        self.fill += item.size
        return e

    def place_inner(self, item: Item, slot: str) -> ScheduledItem:
        left = self.side is Side.LEFT
        if slot == "edge":
            e = place(item, ZERO if left else ONE - item.size)
            self.edge = e
        else:
            e = place(item, INNER_OFFSET if left else ONE - INNER_OFFSET - item.size)
            self.interior = e
        self.items.append(e)
        self.fill += item.size
        return e

    @property
    def extent(self) -> Fraction:
        """Distance from the owning edge to the far end of the contents."""
        if not self.items:
            return ZERO
        if self.side is Side.RIGHT:
            return ONE - min(e.start for e in self.items)
        return max(e.end for e in self.items)

    @property
    def size(self) -> Fraction:
        return self.fill


@dataclass(eq=False)
class CompleteSet:
    category: CategoryDescriptor
    bins: list[OneSidedBin]
    complete: bool = False
    uid: int = field(default_factory=lambda: next(_ids))

    @property
    def status(self) -> str:
        return "Complete" if self.complete else "Partial"

    def of_kind(self, kind: BinKind) -> list[OneSidedBin]:
        return [b for b in self.bins if b.kind is kind]

    def role(self, role: str) -> list[OneSidedBin]:
        return [b for b in self.bins if b.role == role]

    @property
    def items(self) -> list[ScheduledItem]:
        return [e for b in self.bins for e in b.items]

    def open_slots(self) -> int:
        n = 0
        for b in self.bins:
            if b.capacity is not None:
                n += b.capacity - len(b.items)
            elif b.is_open():
                n += 1
        return n


def _alternating(kind, count, **kw):
    return [OneSidedBin(kind, side=Side.LEFT if i % 2 == 0 else Side.RIGHT, **kw) for i in range(count)]


def new_set(cat: CategoryDescriptor) -> CompleteSet:
    """Allocate the empty one-sided bins of a complete set for ``cat``."""
    cls = cat.item_class
    if cls is ItemClass.VERY_LARGE:
        bins = [OneSidedBin(BinKind.TYPE1, capacity=1)]
    elif cls in (ItemClass.LARGE, ItemClass.MEDIUM):
        # sides are decided when the first item arrives
        bins = [OneSidedBin(BinKind.TYPE2_LARGE, capacity=1) for _ in range(2)]
    elif cls is ItemClass.THIRD:
        bins = (_alternating(BinKind.TYPE2_LARGE, 4, capacity=1, role="outer")
                + _alternating(BinKind.TYPE2_LARGE, 2, capacity=2, role="inner"))
    else:
        if cat.fill_thresholds is not None:
            s, l, t = cat.fill_thresholds
            t1 = dict(fill_threshold=t)
            t2l = dict(fill_threshold=l)
            t2s = dict(fill_threshold=s)
        else:
            t1, t2l, t2s = (dict(capacity=cat.t1_items), dict(capacity=cat.t2l_items),
                            dict(capacity=cat.t2s_items))
        bins = ([OneSidedBin(BinKind.TYPE1, **t1) for _ in range(cat.n_t1)]
                + _alternating(BinKind.TYPE2_LARGE, cat.n_t2l, **t2l)
                + _alternating(BinKind.TYPE2_SMALL, cat.n_t2s, **t2s))
    return CompleteSet(cat, bins)


class _BitSource:
    """Uniform bits drawn in blocks from a seeded generator."""

    def __init__(self, seed, block=4096):
        self.rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        self.block = block
        self._buf = []

    def bit(self) -> int:
        if not self._buf:
            self._buf = self.rng.integers(0, 2, size=self.block).tolist()[::-1]
        return self._buf.pop()


@dataclass
class ScheduleResult:
    schedule: Schedule
    complete_sets: list[CompleteSet]
    partial_sets: list[CompleteSet]


class Scheduler:
    """Online scheduling state.  Single-threaded; one instance per stream."""

    def __init__(self, seed: int = 0, catalog: Catalog = CATALOG, trace: bool = False):
        self.catalog = catalog
        self.bits = _BitSource(seed)
        self.partial: dict[str, CompleteSet] = {}
        self.completed: list[CompleteSet] = []
        self.entries: list[ScheduledItem] = []
        self._seen: set[int] = set()
        self.trace: list[dict] | None = [] if trace else None

    # -- public API ---------------------------------------------------------

    def schedule_item(self, item: Item) -> ScheduledItem:
        if not (ZERO < item.size <= ONE):
            raise ValueError(f"size {item.size} outside (0, 1]")
        if item.id in self._seen:
            raise ValueError(f"item id {item.id} scheduled twice")
        cat = self.catalog.categorize(item.size)
        s = self.partial.get(cat.id)
        if s is None:
            s = self.partial[cat.id] = new_set(cat)
        cls = cat.item_class
        if cls is ItemClass.VERY_LARGE:
            b, e = self._place_plain(s, item)
        elif cls in (ItemClass.LARGE, ItemClass.MEDIUM):
            b, e = self._place_pair(s, item)
        elif cls is ItemClass.THIRD:
            b, e = self._place_third(s, item)
        else:
            b, e = self._place_plain(s, item)
        if s.open_slots() == 0:
            s.complete = True
            self.completed.append(s)
            del self.partial[cat.id]
        self._seen.add(item.id)
        self.entries.append(e)
        if self.trace is not None:
            self.trace.append({
                "id": item.id, "category": cat.id, "bin": b.kind.value,
                "side": b.side.value if b.side else None, "role": b.role,
                "slot": len(b.items) - 1, "start": str(e.start), "end": str(e.end)})
        return e

    def finish(self) -> ScheduleResult:
        partial = [s for s in self.partial.values() if s.items]
        return ScheduleResult(Schedule(tuple(self.entries)), list(self.completed), partial)

    # -- placement rules ----------------------------------------------------

    def _place_plain(self, s: CompleteSet, item: Item):
        # fixed slot order: type 1, then type 2 large, then type 2 small
        for b in s.bins:
            if b.is_open():
                return b, b.place(item)
        raise AssertionError("complete set offered another item")

    def _place_pair(self, s: CompleteSet, item: Item):
        first, second = s.bins
        if first.items:
            second.side = first.side.other
            return second, second.place(item)
        first.side = Side.LEFT if self.bits.bit() else Side.RIGHT
        return first, first.place(item)

    def _choose(self, a_count, b_count):
        """0 when the first option has fewer items, 1 for the second, coin on ties."""
        if a_count != b_count:
            return 0 if a_count < b_count else 1
        return self.bits.bit()

    def _place_third(self, s: CompleteSet, item: Item):
        outer = s.role("outer")
        inner = s.role("inner")
        n_out = sum(len(b.items) for b in outer)
        n_in = sum(len(b.items) for b in inner)
        if n_in > n_out:
            to_outer = True
        elif n_out > n_in:
            to_outer = False
        else:
            to_outer = bool(self.bits.bit())
        if to_outer and n_out == len(outer):
            to_outer = False
        elif not to_outer and n_in == 2 * len(inner):
            to_outer = True
        if to_outer:
            left = [b for b in outer if b.side is Side.LEFT]
            right = [b for b in outer if b.side is Side.RIGHT]
            nl = sum(len(b.items) for b in left)
            nr = sum(len(b.items) for b in right)
            if nl == len(left):
                pick = right
            elif nr == len(right):
                pick = left
            else:
                pick = (left, right)[self._choose(nl, nr)]
            b = next(b for b in pick if b.is_open())
            return b, b.place(item)
        left, right = (next(b for b in inner if b.side is sd) for sd in (Side.LEFT, Side.RIGHT))
        if len(left.items) == 2:
            b = right
        elif len(right.items) == 2:
            b = left
        else:
            b = (left, right)[self._choose(len(left.items), len(right.items))]
        if b.interior is not None:
            slot = "edge"
        elif b.edge is not None:
            slot = "interior"
        else:
            slot = "edge" if self.bits.bit() else "interior"
        return b, b.place_inner(item, slot)


def new_scheduler(seed: int = 0, catalog: Catalog = CATALOG, trace: bool = False) -> Scheduler:
    return Scheduler(seed, catalog, trace)


def schedule_item(state: Scheduler, item: Item) -> ScheduledItem:
    return state.schedule_item(item)


def finish_schedule(state: Scheduler) -> ScheduleResult:
    return state.finish()


def schedule_stream(items, seed: int = 0, catalog: Catalog = CATALOG, trace: bool = False) -> ScheduleResult:
    sch = Scheduler(seed, catalog, trace)
    for it in items:
        sch.schedule_item(it)
    res = sch.finish()
    if trace:
        res.trace = sch.trace
    return res


# --- serialization ---------------------------------------------------------------

def _f(x):
    return None if x is None else f"{x.numerator}/{x.denominator}"


def sets_to_json(sets) -> list[dict]:
    """One record per set: category, completeness and the item ids of every bin."""
    out = []
    for s in sets:
        out.append({
            "category": s.category.id, "complete": s.complete,
            "bins": [{"kind": b.kind.value, "side": b.side.value if b.side else None, "role": b.role,
                      "capacity": b.capacity, "fill_threshold": _f(b.fill_threshold),
                      "items": [e.id for e in b.items],
                      "edge": b.edge.id if b.edge else None,
                      "interior": b.interior.id if b.interior else None} for b in s.bins]})
    return out


def sets_from_json(records, entries_by_id: dict[int, ScheduledItem], catalog: Catalog = CATALOG):
    """Inverse of :func:`sets_to_json` given the scheduled entries."""
    from .core import as_fraction

    sets = []
    for r in records:
        bins = []
        for b in r["bins"]:
            items = [entries_by_id[i] for i in b["items"]]
            ob = OneSidedBin(BinKind(b["kind"]), Side(b["side"]) if b["side"] else None, b["capacity"],
                             as_fraction(b["fill_threshold"]) if b["fill_threshold"] else None, b["role"],
                             items, sum((e.size for e in items), ZERO))
            ob.edge = entries_by_id[b["edge"]] if b["edge"] is not None else None
            ob.interior = entries_by_id[b["interior"]] if b["interior"] is not None else None
            bins.append(ob)
        sets.append(CompleteSet(catalog[r["category"]], bins, r["complete"]))
    return sets


def result_to_json(res: ScheduleResult, seed=None) -> dict:
    from .core import schedule_to_json

    out = schedule_to_json(res.schedule)
    out["seed"] = seed
    out["sets"] = sets_to_json(res.complete_sets + res.partial_sets)
    return out


def result_from_json(obj: dict, catalog: Catalog = CATALOG) -> ScheduleResult:
    from .core import schedule_from_json

    sched = schedule_from_json(obj)
    sets = sets_from_json(obj.get("sets", []), sched.by_id(), catalog)
    return ScheduleResult(sched, [s for s in sets if s.complete], [s for s in sets if not s.complete])
