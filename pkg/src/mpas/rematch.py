"""Offline phase: turn completed one-sided-bin sets into final bins.

Final bins hold one part alone or two parts from opposite sides; a left
part occupies ``[0, extent)`` and a right part ``[1 - extent, 1)``, so a
pair is disjoint exactly when the extents sum to at most 1.  Scheduled
intervals are never moved.

The procedure runs ten steps in order (Third/Large, Medium/Large,
Third+Quarter+Large, Medium+Quarter+Large, Small sets with Large, Small sets
with Third sets, Quarter sets with Large, Quarter sets with Third sets,
5:11 grouping of two-item Medium/Third bins with solo Large bins, and solo
bins for the rest).  Every emitted group is recorded in a
:class:`RematchAudit` together with the additive slack ``K`` (partial sets,
imbalance repairs, recipe underflow, threshold mismatches), and the audit
classifies which of the five dual-certificate cases the run ended in.
"""
from __future__ import annotations

import bisect
import math
from collections import Counter, defaultdict, deque
from dataclasses import dataclass, field
from fractions import Fraction

from .catalog import (CATALOG, CROSS_RECIPES, INNER_OFFSET, QUARTER_ITEM_MIN, Catalog,
                      CategoryDescriptor, ItemClass, RecipeKind, RematchRecipe, item_class_of)
from .core import ONE, FinalPacking, ScheduledItem
from .scheduler import BinKind, CompleteSet, OneSidedBin, Side

LEFT, RIGHT = Side.LEFT, Side.RIGHT
HALF_FLOOR = Fraction(46, 100)
MEDIUM_BINS_PER_BLOCK = 5
LARGE_BINS_PER_BLOCK = 11
QUARTER_GROUP_LARGE = CROSS_RECIPES["quarter_large"].large
STEP8_THIRD_SETS = CROSS_RECIPES["third_quarter"].third_sets


class SideError(ValueError):
    pass


def side_of(e: ScheduledItem) -> Side:
    """Side of a single-item one-sided bin, read off its interval."""
    if e.start == 0:
        return LEFT
    if e.end == 1:
        return RIGHT
    raise SideError(f"item {e.id} touches neither edge")


def fit_test(a: ScheduledItem, b: ScheduledItem) -> bool:
    """Two single-item parts from opposite sides share a bin iff sizes sum to <= 1."""
    if side_of(a) is side_of(b):
        raise SideError(f"items {a.id} and {b.id} sit on the same side")
    return a.size + b.size <= ONE


# --- parts and layouts -------------------------------------------------------

@dataclass(eq=False)
class Part:
    kind: str
    side: Side | None
    entries: tuple[ScheduledItem, ...]
    extent: Fraction

    @classmethod
    def item(cls, kind: str, e: ScheduledItem, side: Side | None = None) -> "Part":
        return cls(kind, side or side_of(e), (e,), e.size)

    @classmethod
    def from_bin(cls, kind: str, b: OneSidedBin) -> "Part":
        return cls(kind, b.side, tuple(b.items), b.extent)


def small_set_parts(s: CompleteSet) -> list[Part]:
    quarter = s.category.is_quarter
    out = []
    for b in s.bins:
        if not b.items:
            continue
        if b.kind is BinKind.TYPE1:
            out.append(Part.from_bin("T1", b))
        elif b.kind is BinKind.TYPE2_LARGE:
            out.append(Part.from_bin("QT2L" if quarter else "T2L", b))
        else:
            out.append(Part.from_bin("T2S", b))
    return out


MATCHED_RULES = [("QT2L", "T2S"), ("T2L", "T2L"), ("T2S", "T2S")]
RULES = {
    RecipeKind.LARGE: [("T2S", "LARGE"), ("T2L", "T2L")],
    RecipeKind.THIRD: [("T2S", "INNER"), ("T2L", "OUTER"), ("T2S", "T2S"), ("T2L", "T2L"),
                       ("OUTER", "OUTER")],
    RecipeKind.LARGE_QUARTER: [("T2L", "QT2L"), ("T2S", "LARGE"), ("T2L", "T2L")],
    RecipeKind.THIRD_QUARTER: [("T2L", "QT2L"), ("T2S", "INNER"), ("T2L", "OUTER"), ("QT2L", "OUTER"),
                               ("T2S", "T2S"), ("T2L", "T2L"), ("OUTER", "OUTER")],
    "third_large": [("OUTER", "LARGE")],
    "third_quarter_large": [("QT2L", "OUTER"), ("T2S", "LARGE"), ("OUTER", "OUTER")],
    "medium_quarter_large": [("MEDIUM", "QT2L"), ("T2S", "LARGE")],
    "third_quarter": [("QT2L", "OUTER"), ("T2S", "INNER"), ("T2S", "T2S"), ("OUTER", "OUTER")],
    "matched": MATCHED_RULES,
}


def rules_for(recipe: RematchRecipe) -> list[tuple[str, str]]:
    rules = list(RULES[recipe.kind])
    if recipe.pairs_type2_large_with_large:
        # below-threshold Large items share bins with the type 2 large bins
        i = rules.index(("T2L", "T2L"))
        rules.insert(i, ("T2L", "LARGE"))
    return rules


def _greedy_pairs(A: list[Part], B: list[Part]):
    """Pair each A (largest first) with the largest B that still fits."""
    A = sorted(A, key=lambda p: (-p.extent, p.entries[0].id))
    B = sorted(B, key=lambda p: (p.extent, p.entries[0].id))
    keys = [p.extent for p in B]
    pairs = []
    for a in A:
        j = bisect.bisect_right(keys, ONE - a.extent) - 1
        if j < 0:
            continue
        pairs.append((a, B.pop(j)))
        keys.pop(j)
    return pairs


def layout(parts, rules) -> list[list[Part]]:
    """Final-bin layout of a group: apply pairing rules in order, rest alone."""
    pool = defaultdict(list)
    for p in parts:
        pool[p.kind].append(p)
    bins = []
    for ka, kb in rules:
        for sa in (LEFT, RIGHT):
            if ka == kb and sa is RIGHT:
                break
            A = [p for p in pool[ka] if p.side is sa]
            B = [p for p in pool[kb] if p.side is sa.other]
            if not A or not B:
                continue
            for a, b in _greedy_pairs(A, B):
                pool[ka].remove(a)
                pool[kb].remove(b)
                bins.append([a, b])
    for kind in sorted(pool):
        for p in pool[kind]:
            bins.append([p])
    return bins


# --- third item pool ---------------------------------------------------------

class ThirdPool:
    """Third items of complete sets, pooled by position and sorted ascending.

    Any edge item may be combined with any interior item of the same side,
    so sets are re-formed on demand: two outer items per side plus one
    (edge, interior) pair per side.
    """

    def __init__(self, sets: list[CompleteSet]):
        lists = {k: [] for k in ("oL", "oR", "eL", "eR", "iL", "iR")}
        for s in sets:
            for b in s.bins:
                sd = "L" if b.side is LEFT else "R"
                if b.role == "outer":
                    lists["o" + sd] += b.items
                else:
                    lists["e" + sd].append(b.edge)
                    lists["i" + sd].append(b.interior)
        self.q = {k: deque(sorted(v, key=lambda e: (e.size, e.id))) for k, v in lists.items()}

    @property
    def sets(self) -> int:
        q = self.q
        return min(len(q["oL"]) // 2, len(q["oR"]) // 2, len(q["eL"]), len(q["eR"]), len(q["iL"]), len(q["iR"]))

    def items(self):
        for d in self.q.values():
            yield from d

    def min_size(self):
        heads = [d[0].size for d in self.q.values() if d]
        return min(heads) if heads else None

    def inner_bin(self, sd: str) -> Part:
        edge, interior = self.q["e" + sd].popleft(), self.q["i" + sd].popleft()
        side = LEFT if sd == "L" else RIGHT
        return Part("INNER", side, (edge, interior), INNER_OFFSET + interior.size)

    def take_set(self) -> list[Part]:
        parts = [Part.item("OUTER", self.q[k].popleft(), s) for k, s in
                 (("oL", LEFT), ("oL", LEFT), ("oR", RIGHT), ("oR", RIGHT))]
        return parts + [self.inner_bin("L"), self.inner_bin("R")]

    def remove_where(self, pred) -> list[ScheduledItem]:
        out = []
        for k, d in self.q.items():
            keep = deque()
            for e in d:
                (out if pred(e) else keep).append(e)
            self.q[k] = keep
        return out

    def trim_to_sets(self) -> list[ScheduledItem]:
        """Drop the smallest surplus items so the pool is whole sets again."""
        n = self.sets
        want = {"oL": 2 * n, "oR": 2 * n, "eL": n, "eR": n, "iL": n, "iR": n}
        out = []
        for k, d in self.q.items():
            while len(d) > want[k]:
                out.append(d.popleft())
        return out


# --- audit -------------------------------------------------------------------

@dataclass
class GroupRecord:
    step: str
    recipe: str
    bins: list[int]
    declared_bins: int | None = None
    large_group: bool = False  # counts toward the extra-Large adjustment
    set_uids: list[int] = field(default_factory=list)  # positions in the complete-set list

    @property
    def num_bins(self) -> int:
        return len(self.bins)


K_COMPONENTS = ("partial", "imbalance", "underflow", "threshold_mismatch")


@dataclass
class RematchAudit:
    groups: list[GroupRecord] = field(default_factory=list)
    k_bins: dict = field(default_factory=lambda: {c: [] for c in K_COMPONENTS})
    step_tallies: dict = field(default_factory=lambda: defaultdict(lambda: Counter()))
    measured_imbalance: dict = field(default_factory=dict)
    imbalance_removed: dict = field(default_factory=lambda: Counter())
    extra_large_assigned: int = 0
    extra_large_needed: int = 0
    step9: dict = field(default_factory=dict)
    leftovers: dict = field(default_factory=dict)
    case: int | None = None
    case_indicators: dict = field(default_factory=dict)
    case_conflicts: list = field(default_factory=list)
    # per-item designations used by dual certificates
    roles: dict = field(default_factory=dict)
    item_step: dict = field(default_factory=dict)
    total_bins: int = 0

    @property
    def k(self) -> int:
        return sum(len(v) for v in self.k_bins.values())

    def k_decomposition(self) -> dict:
        return {c: len(v) for c, v in self.k_bins.items()}

    def to_json(self) -> dict:
        return {
            "total_bins": self.total_bins,
            "K": self.k,
            "K_decomposition": self.k_decomposition(),
            "case": self.case,
            "case_indicators": self.case_indicators,
            "case_conflicts": self.case_conflicts,
            "step_tallies": {k: dict(v) for k, v in self.step_tallies.items()},
            "measured_imbalance": self.measured_imbalance,
            "imbalance_removed": dict(self.imbalance_removed),
            "extra_large": {"needed": self.extra_large_needed, "assigned": self.extra_large_assigned},
            "step9": self.step9,
            "leftovers": self.leftovers,
            "groups": [{"step": g.step, "recipe": g.recipe, "bins": g.num_bins,
                        "declared_bins": g.declared_bins, "sets": g.set_uids} for g in self.groups],
        }


# roles of items for certificate construction
ROLE_LARGE_MEDIUM = "large_with_medium"      # Large sharing a bin with a Medium item
ROLE_MEDIUM_LARGE = "medium_with_large"      # Medium sharing a bin with a Large item
ROLE_LARGE_THIRD = "large_with_third"        # Large sharing a bin with a Third item


# --- imbalance measurement ---------------------------------------------------

def _max_prefix_gap(pairs) -> int:
    """max over x of |#(b=1, size<=x) - #(b=0, size<=x)| for (size, b) pairs."""
    pairs = sorted(pairs, key=lambda p: p[0])
    best = cur = 0
    i = 0
    while i < len(pairs):
        j = i
        while j < len(pairs) and pairs[j][0] == pairs[i][0]:
            cur += 1 if pairs[j][1] else -1
            j += 1
        best = max(best, abs(cur))
        i = j
    return best


def measure_imbalance(sets) -> dict[str, int]:
    """Side imbalance per binary split, maximised over size cutoffs."""
    fams = defaultdict(list)
    for s in sets:
        cls = s.category.item_class
        if cls in (ItemClass.LARGE, ItemClass.MEDIUM):
            for b in s.bins:
                for e in b.items:
                    fams[f"{cls.value}:{s.category.id}"].append((e.size, b.side is RIGHT))
        elif cls is ItemClass.THIRD:
            for b in s.bins:
                for e in b.items:
                    fams["Third:inner_outer"].append((e.size, b.role == "inner"))
                    fams[f"Third:{b.role}_side"].append((e.size, b.side is RIGHT))
                    if b.role == "inner":
                        fams["Third:interior_edge"].append((e.size, e is b.interior))
    return {k: _max_prefix_gap(v) for k, v in sorted(fams.items())}


# --- the procedure -----------------------------------------------------------

@dataclass
class RematchConfig:
    repair_imbalance: bool = True
    prefer_below_threshold: bool = True


class _Rematcher:
    def __init__(self, catalog: Catalog, config: RematchConfig):
        self.catalog = catalog
        self.config = config
        self.bins: list[tuple[ScheduledItem, ...]] = []
        self.audit = RematchAudit()

    # emission ----------------------------------------------------------------

    def _emit_bins(self, layout_bins, step: str) -> list[int]:
        idx = []
        for parts in layout_bins:
            entries = tuple(e for p in parts for e in p.entries)
            self._tag_roles(parts)
            for e in entries:
                self.audit.item_step[e.id] = step
            idx.append(len(self.bins))
            self.bins.append(entries)
        self.audit.step_tallies[step]["bins"] += len(idx)
        return idx

    def _tag_roles(self, parts):
        kinds = {p.kind for p in parts}
        roles = self.audit.roles
        if "LARGE" in kinds and "MEDIUM" in kinds:
            for p in parts:
                for e in p.entries:
                    roles[e.id] = ROLE_LARGE_MEDIUM if p.kind == "LARGE" else ROLE_MEDIUM_LARGE
        elif "LARGE" in kinds and ({"OUTER", "INNER"} & kinds):
            for p in parts:
                if p.kind == "LARGE":
                    roles[p.entries[0].id] = ROLE_LARGE_THIRD

    def group(self, step, recipe_name, parts, rules, declared=None, large_group=False, sets=()):
        idx = self._emit_bins(layout(parts, rules), step)
        rec = GroupRecord(step, recipe_name, idx, declared, large_group, [self.set_pos[s.uid] for s in sets])
        self.audit.groups.append(rec)
        if declared is not None and len(idx) > declared:
            # a planned pair did not fit; the surplus bins are slack, not recipe bins
            self.audit.k_bins["threshold_mismatch"] += idx[declared:]
        self.audit.step_tallies[step]["groups"] += 1
        self.audit.step_tallies[step]["sets"] += len(sets)
        return rec

    def to_k(self, component, layout_bins, step):
        idx = self._emit_bins(layout_bins, step)
        self.audit.k_bins[component] += idx
        self.audit.step_tallies[step][f"k_{component}"] += len(idx)
        return idx

    # inventory ---------------------------------------------------------------

    def load(self, complete_sets, partial_sets):
        self.very_large = []
        self.large = {LEFT: [], RIGHT: []}
        self.medium = {LEFT: [], RIGHT: []}
        third_sets = []
        self.small = defaultdict(deque)
        self.quarter = deque()
        # audit records refer to sets by position in the input, which is reproducible
        self.set_pos = {s.uid: i for i, s in enumerate(complete_sets)}
        for s in complete_sets:
            cls = s.category.item_class
            if cls is ItemClass.VERY_LARGE:
                self.very_large += s.items
            elif cls in (ItemClass.LARGE, ItemClass.MEDIUM):
                dst = self.large if cls is ItemClass.LARGE else self.medium
                for b in s.bins:
                    dst[b.side] += b.items
            elif cls is ItemClass.THIRD:
                third_sets.append(s)
            elif s.category.is_quarter:
                self.quarter.append(s)
            else:
                self.small[s.category.id].append(s)
        self.audit.measured_imbalance = measure_imbalance(complete_sets)
        key = lambda e: (e.size, e.id)  # noqa: E731
        self.large = {sd: deque(sorted(v, key=key)) for sd, v in self.large.items()}
        self.medium = {sd: deque(sorted(v, key=key)) for sd, v in self.medium.items()}
        self.thirds = ThirdPool(third_sets)
        for s in partial_sets:
            self.to_k("partial", [[Part.from_bin("PARTIAL", b)] for b in s.bins if b.items], "partial")

    def n_large(self):
        return len(self.large[LEFT]) + len(self.large[RIGHT])

    def take_large(self, k: int, side: Side, threshold=None, mode=None, commit=True):
        d = self.large[side]
        if len(d) < k:
            return None
        if mode == "below":
            if k and d[k - 1].size > threshold:
                return None
            picked = [d[i] for i in range(k)]
            if commit:
                for _ in range(k):
                    d.popleft()
        else:
            if mode == "above" and k and d[-k].size <= threshold:
                return None
            picked = [d[-1 - i] for i in range(k)]
            if commit:
                for _ in range(k):
                    d.pop()
        return [Part.item("LARGE", e, side) for e in picked]

    def take_large_pair(self, per_side, threshold=None, mode=None):
        if self.take_large(per_side, LEFT, threshold, mode, commit=False) is None:
            return None
        if self.take_large(per_side, RIGHT, threshold, mode, commit=False) is None:
            return None
        return self.take_large(per_side, LEFT, threshold, mode) + self.take_large(per_side, RIGHT, threshold, mode)

    # steps -------------------------------------------------------------------

    def step1(self):
        L, R = self.large[LEFT], self.large[RIGHT]
        q = self.thirds.q
        rec = CROSS_RECIPES["third_large"]
        while self.thirds.sets and len(L) >= 2 and len(R) >= 2 and len(L) + len(R) >= 5:
            oL, oR = [q["oL"][0], q["oL"][1]], [q["oR"][0], q["oR"][1]]
            if not all(o.size + lg.size <= ONE for o, lg in zip(oL, [R[0], R[1]])):
                break
            if not all(o.size + lg.size <= ONE for o, lg in zip(oR, [L[0], L[1]])):
                break
            outer = [Part.item("OUTER", q["oL"].popleft(), LEFT) for _ in range(2)]
            outer += [Part.item("OUTER", q["oR"].popleft(), RIGHT) for _ in range(2)]
            larges = [Part.item("LARGE", R.popleft(), RIGHT) for _ in range(2)]
            larges += [Part.item("LARGE", L.popleft(), LEFT) for _ in range(2)]
            inner = [self.thirds.inner_bin("L"), self.thirds.inner_bin("R")]
            if len(L) != len(R):
                src = L if len(L) > len(R) else R
            else:
                # tie: the lower item id among the two largest
                src = L if L[-1].id < R[-1].id else R
            solo = Part.item("LARGE", src.pop(), LEFT if src is L else RIGHT)
            self.group("step1", rec.name, outer + larges + inner + [solo], RULES["third_large"],
                       declared=rec.bins)

    def step2(self):
        mL, mR, lL, lR = self.medium[LEFT], self.medium[RIGHT], self.large[LEFT], self.large[RIGHT]
        while mL and mR and lL and lR:
            if mL[0].size + lR[0].size > ONE or mR[0].size + lL[0].size > ONE:
                break
            parts = [Part.item("MEDIUM", mL.popleft(), LEFT), Part.item("LARGE", lR.popleft(), RIGHT),
                     Part.item("MEDIUM", mR.popleft(), RIGHT), Part.item("LARGE", lL.popleft(), LEFT)]
            self.group("step2", "Medium & Large", parts, [("MEDIUM", "LARGE")])

    def repair(self):
        """Restore the balanced-bins property among what is left.

        First keep pairing in the one direction that still fits.  Then any
        remaining Large item that fits next to a leftover Medium item (only
        possible on the same side) or next to a pooled Third item is
        resolved by sending the cheaper of the two conflicting families to
        their own bins.
        """
        for sm, sl in ((LEFT, RIGHT), (RIGHT, LEFT)):
            m, lg = self.medium[sm], self.large[sl]
            while m and lg and m[0].size + lg[0].size <= ONE:
                parts = [Part.item("MEDIUM", m.popleft(), sm), Part.item("LARGE", lg.popleft(), sl)]
                self.group("repair", "Medium & Large (one-sided)", parts, [("MEDIUM", "LARGE")])
                self.audit.imbalance_removed["continued_pairs"] += 1

        def min_large():
            heads = [d[0].size for d in self.large.values() if d]
            return min(heads) if heads else None

        def pop_large_while(limit):
            out = []
            for sd, d in self.large.items():
                while d and d[0].size <= limit:
                    out.append((sd, d.popleft()))
            return out

        ml = min_large()
        mm = [d[0].size for d in self.medium.values() if d]
        if ml is not None and mm and ml + min(mm) <= ONE:
            m_min = min(mm)
            bad_large = sum(1 for d in self.large.values() for e in d if e.size + m_min <= ONE)
            bad_medium = sum(1 for d in self.medium.values() for e in d if e.size + ml <= ONE)
            if bad_large <= bad_medium:
                out = pop_large_while(ONE - m_min)
                self.to_k("imbalance", [[Part.item("LARGE", e, sd)] for sd, e in out], "repair")
                self.audit.imbalance_removed["large_vs_medium"] += len(out)
            else:
                out = []
                for sd, d in self.medium.items():
                    while d and d[0].size + ml <= ONE:
                        out.append((sd, d.popleft()))
                self.to_k("imbalance", [[Part.item("MEDIUM", e, sd)] for sd, e in out], "repair")
                self.audit.imbalance_removed["medium_vs_large"] += len(out)

        ml, mt = min_large(), self.thirds.min_size()
        if ml is not None and mt is not None and ml + mt <= ONE:
            bad_large = sum(1 for d in self.large.values() for e in d if e.size + mt <= ONE)
            bad_third = sum(1 for e in self.thirds.items() if e.size + ml <= ONE)
            if bad_large <= bad_third:
                out = pop_large_while(ONE - mt)
                self.to_k("imbalance", [[Part.item("LARGE", e, sd)] for sd, e in out], "repair")
                self.audit.imbalance_removed["large_vs_third"] += len(out)
            else:
                out = self.thirds.remove_where(lambda e: e.size + ml <= ONE)
                out += self.thirds.trim_to_sets()
                self.to_k("imbalance", [[Part("THIRD", None, (e,), e.size)] for e in out], "repair")
                self.audit.imbalance_removed["third_vs_large"] += len(out)

    def step3(self):
        rec = CROSS_RECIPES["third_quarter_large"]
        per_side = rec.large // 2
        while self.thirds.sets and self.quarter:
            larges = self.take_large_pair(per_side)
            if larges is None:
                break
            qs = self.quarter.popleft()
            parts = self.thirds.take_set() + small_set_parts(qs) + larges
            self.group("step3", rec.name, parts, RULES["third_quarter_large"], rec.bins, True, [qs])

    def _non_half(self, side):
        d = self.medium[side]
        return bool(d) and d[0].size <= HALF_FLOOR

    def step4(self):
        rec = CROSS_RECIPES["medium_quarter_large"]
        per_side = rec.large // 2
        while self.quarter and self._non_half(LEFT) and self._non_half(RIGHT):
            larges = self.take_large_pair(per_side)
            if larges is None:
                break
            qs = self.quarter.popleft()
            mediums = [Part.item("MEDIUM", self.medium[sd].popleft(), sd) for sd in (LEFT, RIGHT)]
            self.group("step4", rec.name, mediums + small_set_parts(qs) + larges,
                       RULES["medium_quarter_large"], rec.bins, True, [qs])

    def _small_order(self):
        # descending item size
        return [c for c in reversed(self.catalog.small_non_quarter())]

    def _ordered_recipes(self, cat: CategoryDescriptor, kind: RecipeKind):
        rs = [r for r in cat.recipes if r.kind is kind]
        pref = {"below": 0, None: 1, "above": 2} if self.config.prefer_below_threshold else \
            {"above": 0, None: 1, "below": 2}
        return sorted(rs, key=lambda r: pref[r.side])

    def _apply_large_recipe(self, step, cat, s, kind):
        for r in self._ordered_recipes(cat, kind):
            if r.quarter_sets > len(self.quarter):
                continue
            larges = self.take_large_pair(r.large // 2, r.threshold, r.side)
            if larges is None:
                continue
            qsets = [self.quarter.popleft() for _ in range(r.quarter_sets)]
            parts = small_set_parts(s) + [p for q in qsets for p in small_set_parts(q)] + larges
            self.group(step, r.name, parts, rules_for(r), r.bins, True, [s] + qsets)
            return True
        return False

    def _apply_third_recipe(self, step, cat, s, kind):
        for r in self._ordered_recipes(cat, kind):
            if r.quarter_sets > len(self.quarter) or r.third_sets > self.thirds.sets:
                continue
            qsets = [self.quarter.popleft() for _ in range(r.quarter_sets)]
            thirds = [p for _ in range(r.third_sets) for p in self.thirds.take_set()]
            parts = small_set_parts(s) + [p for q in qsets for p in small_set_parts(q)] + thirds
            self.group(step, r.name, parts, rules_for(r), r.bins, False, [s] + qsets)
            return True
        return False

    def _small_with(self, step, apply, with_quarter, plain):
        if with_quarter:
            for cat in self._small_order():
                sets = self.small[cat.id]
                while sets and self.quarter:
                    if not apply(step, cat, sets[0], with_quarter):
                        break
                    sets.popleft()
        for cat in self._small_order():
            sets = self.small[cat.id]
            while sets:
                if not apply(step, cat, sets[0], plain):
                    break
                sets.popleft()

    def step5(self):
        self._small_with("step5", self._apply_large_recipe, RecipeKind.LARGE_QUARTER, RecipeKind.LARGE)

    def step6(self):
        self._small_with("step6", self._apply_third_recipe, RecipeKind.THIRD_QUARTER, RecipeKind.THIRD)

    def _pop_any_large(self):
        L, R = self.large[LEFT], self.large[RIGHT]
        src = L if len(L) >= len(R) else R
        return Part.item("LARGE", src.pop(), LEFT if src is L else RIGHT)

    def step7(self):
        rec = CROSS_RECIPES["quarter_large"]
        while self.quarter and self.n_large() >= QUARTER_GROUP_LARGE:
            qs = self.quarter.popleft()
            larges = [self._pop_any_large() for _ in range(QUARTER_GROUP_LARGE)]
            self.group("step7", rec.name, small_set_parts(qs) + larges, MATCHED_RULES, rec.bins, False, [qs])
        if self.quarter and self.n_large():
            rest = [[self._pop_any_large()] for _ in range(self.n_large())]
            self.to_k("underflow", rest, "step7")

    def step8(self):
        rec = CROSS_RECIPES["third_quarter"]
        while self.quarter and self.thirds.sets >= STEP8_THIRD_SETS:
            qs = self.quarter.popleft()
            thirds = [p for _ in range(STEP8_THIRD_SETS) for p in self.thirds.take_set()]
            self.group("step8", rec.name, small_set_parts(qs) + thirds, RULES["third_quarter"],
                       rec.bins, False, [qs])
        if self.quarter and self.thirds.sets:
            while self.thirds.sets:
                self.to_k("underflow", layout(self.thirds.take_set(), [("OUTER", "OUTER")]), "step8")

    def step9_10(self):
        mt_bins = []
        third_sets = 0
        while self.thirds.sets:
            mt_bins += layout(self.thirds.take_set(), [("OUTER", "OUTER")])
            third_sets += 1
        third_bins = len(mt_bins)
        mL, mR = self.medium[LEFT], self.medium[RIGHT]
        while mL and mR:
            mt_bins.append([Part.item("MEDIUM", mL.popleft(), LEFT), Part.item("MEDIUM", mR.popleft(), RIGHT)])
        medium_bins = len(mt_bins) - third_bins
        lone = [Part.item("MEDIUM", e, sd) for sd in (LEFT, RIGHT) for e in self.medium[sd]]
        self.medium = {LEFT: deque(), RIGHT: deque()}
        if lone:
            self.to_k("underflow", [[p] for p in lone], "step9")
        large_bins = [[self._pop_any_large()] for _ in range(self.n_large())]
        solo_large = len(large_bins)
        mt = len(mt_bins)
        grouped_mt = min(mt, (MEDIUM_BINS_PER_BLOCK * solo_large) // LARGE_BINS_PER_BLOCK)
        if grouped_mt == mt:
            used_large = -(-LARGE_BINS_PER_BLOCK * mt // MEDIUM_BINS_PER_BLOCK)
        else:
            used_large = solo_large
        idx = self._emit_bins(mt_bins, "step9")
        lidx = self._emit_bins(large_bins, "step10")
        if idx or lidx[:used_large]:
            self.audit.groups.append(GroupRecord("step9", "two-item Medium/Third bins & solo Large (5:11)",
                                                 idx + lidx[:used_large]))
        if lidx[used_large:]:
            self.audit.groups.append(GroupRecord("step10", "solo Large", lidx[used_large:]))
        vidx = self._emit_bins([[Part.item("VL", e, LEFT)] for e in self.very_large], "step10")
        if vidx:
            self.audit.groups.append(GroupRecord("step10", "solo Very Large", vidx))
        self.audit.step9 = {"mt_bins": mt, "third_bins": third_bins, "medium_bins": medium_bins,
                            "leftover_third_sets": third_sets, "solo_large": solo_large,
                            "grouped_mt_bins": grouped_mt, "large_grouped": used_large,
                            "mt_left": mt - grouped_mt, "large_left": solo_large - used_large}
        return solo_large - used_large

    def leftover_sets(self, large_left):
        unrematched_small = 0
        for cat in self._small_order():
            for s in self.small[cat.id]:
                lay = layout(small_set_parts(s), MATCHED_RULES)
                if large_left:
                    # Large items were stranded by threshold or side constraints
                    self.to_k("threshold_mismatch", lay, "matched")
                else:
                    idx = self._emit_bins(lay, "matched")
                    self.audit.groups.append(GroupRecord("matched", f"{cat.id} matched set", idx,
                                                         cat.matched_bins, False, [self.set_pos[s.uid]]))
                unrematched_small += 1
            self.small[cat.id] = deque()
        q_left = len(self.quarter)
        for s in self.quarter:
            idx = self._emit_bins(layout(small_set_parts(s), MATCHED_RULES), "matched")
            self.audit.groups.append(GroupRecord("matched", "Quarter Items matched set", idx,
                                                 s.category.matched_bins, False, [self.set_pos[s.uid]]))
        self.quarter = deque()
        return unrematched_small, q_left

    def extra_large_adjustment(self, large_left):
        deficit = Fraction(0)
        for g in self.audit.groups:
            if g.large_group:
                l = sum(1 for i in g.bins for e in self.bins[i]
                        if item_class_of(e.size) is ItemClass.LARGE)
                b = g.num_bins
                deficit += max(Fraction(0), Fraction(11 * b - 16 * l, 5))
        need = math.ceil(deficit)
        self.audit.extra_large_needed = need
        self.audit.extra_large_assigned = min(need, large_left)
        return large_left - self.audit.extra_large_assigned

    def classify(self, q_left, unrematched_small):
        a = self.audit
        s9 = a.step9
        quarter_rematched = any(g.step in ("step3", "step4", "step7", "step8") or
                                (g.step in ("step5", "step6") and "Quarter" in g.recipe) for g in a.groups)
        ind = {
            "solo_large": s9["solo_large"],
            "large_left_after_grouping": s9["large_left"] - a.extra_large_assigned,
            "mt_left": s9["mt_left"],
            "third_bins_left": s9["third_bins"],
            "quarter_sets_matched_alone": q_left,
            "quarter_rematched": quarter_rematched,
            "small_sets_matched_alone": unrematched_small,
        }
        a.case_indicators = ind
        conflicts = []
        q_excess = q_left > 0 and quarter_rematched
        if q_excess and s9["third_bins"]:
            conflicts.append("quarter sets and unrematched Third sets both left over")
        if q_excess and s9["solo_large"]:
            conflicts.append("quarter sets left over while solo Large bins exist")
        a.case_conflicts = conflicts
        if conflicts:
            a.case = None
        elif q_excess:
            a.case = 3
        elif s9["mt_left"] and s9["solo_large"]:
            a.case = 4
        elif s9["mt_left"] and s9["third_bins"]:
            a.case = 2
        elif s9["solo_large"]:
            a.case = 5
        else:
            a.case = 1

    def run(self, complete_sets, partial_sets):
        self.load(complete_sets, partial_sets)
        self.step1()
        self.step2()
        if self.config.repair_imbalance:
            self.repair()
        self.step3()
        self.step4()
        self.step5()
        self.step6()
        self.step7()
        self.step8()
        large_left = self.step9_10()
        unrematched_small, q_left = self.leftover_sets(large_left)
        self.extra_large_adjustment(large_left)
        self.classify(q_left, unrematched_small)
        a = self.audit
        a.total_bins = len(self.bins)
        a.leftovers = {"small_sets_matched_alone": unrematched_small, "quarter_sets_matched_alone": q_left}
        return FinalPacking(tuple(self.bins)), a


def rematch(complete_sets, partial_sets=(), config: RematchConfig | None = None,
            catalog: Catalog = CATALOG):
    """Run the rematching steps; returns ``(FinalPacking, RematchAudit)``."""
    return _Rematcher(catalog, config or RematchConfig()).run(list(complete_sets), list(partial_sets))


def rematch_result(result, config: RematchConfig | None = None):
    """Convenience wrapper over a :class:`~mpas.scheduler.ScheduleResult`."""
    return rematch(result.complete_sets, result.partial_sets, config)


def group_stats(packing: FinalPacking, rec: GroupRecord) -> dict:
    """Fullness and (q, t, l, b) of one emitted group, from actual item sizes."""
    q = t = l = 0
    total = Fraction(0)
    for i in rec.bins:
        for e in packing.bins[i]:
            total += e.size
            cls = item_class_of(e.size)
            if cls is ItemClass.THIRD:
                t += 1
            elif cls in (ItemClass.LARGE, ItemClass.VERY_LARGE):
                l += 1
            elif QUARTER_ITEM_MIN < e.size <= Fraction(1, 3):
                q += 1
    b = rec.num_bins
    return {"fullness": total / b if b else Fraction(0), "q": q, "t": t, "l": l, "b": b}


# --- recipe replay -------------------------------------------------------------

@dataclass
class ReplayRow:
    recipe: str
    sizes: str
    declared: int
    actual: int

    @property
    def ok(self) -> bool:
        return self.actual == self.declared

    def line(self) -> str:
        mark = "ok" if self.ok else "MISMATCH"
        return f"{mark:8} {self.recipe} [{self.sizes}]: declared {self.declared}, laid out {self.actual}"


_NUDGE = Fraction(1, 10000)


def _one_set(cat: CategoryDescriptor, size: Fraction, catalog: Catalog) -> CompleteSet:
    from .core import Item
    from .scheduler import Scheduler

    sch = Scheduler(0, catalog)
    i = 0
    while not sch.completed:
        sch.schedule_item(Item(i, size))
        i += 1
    return sch.completed[0]


def _large_parts(per_side: int, size: Fraction) -> list[Part]:
    from .core import Item, place

    out = []
    for k in range(per_side):
        out.append(Part.item("LARGE", place(Item(10**6 + 2 * k, size), 0), LEFT))
        out.append(Part.item("LARGE", place(Item(10**6 + 2 * k + 1, size), ONE - size), RIGHT))
    return out


def _extremes(cat: CategoryDescriptor):
    if cat.lo == 0:
        lo = cat.hi / 8  # the range has no smallest item; a set of these stays small enough to replay
    else:
        lo = cat.lo + _NUDGE if cat.lo_open else cat.lo
    hi = cat.hi - _NUDGE if cat.hi_open else cat.hi
    return (("min", lo), ("max", hi))


def replay_recipe_layouts(catalog: Catalog = CATALOG) -> list[ReplayRow]:
    """Lay out every Small-category recipe with item sizes at both ends of each range.

    Large partners sit at the threshold for below-threshold variants and
    just under the Large ceiling otherwise, which is the tightest case for
    pairing; Third and Quarter partners sit at the top of their ranges.
    """
    third = catalog.of_class(ItemClass.THIRD)[0]
    quarter = catalog.quarter
    third_size = third.hi
    quarter_size = quarter.hi
    large_top = catalog.of_class(ItemClass.LARGE)[-1].hi - _NUDGE
    rows = []
    for cat in catalog.small_non_quarter():
        for tag, size in _extremes(cat):
            own = small_set_parts(_one_set(cat, size, catalog))
            for r in cat.recipes:
                lsize = r.threshold if r.side == "below" else large_top
                parts = list(own)
                for _ in range(r.quarter_sets):
                    parts += small_set_parts(_one_set(quarter, quarter_size, catalog))
                for _ in range(r.third_sets):
                    parts += ThirdPool([_one_set(third, third_size, catalog)]).take_set()
                parts += _large_parts(r.large // 2, lsize)
                rows.append(ReplayRow(r.name, f"{tag} item {size}", r.bins, len(layout(parts, rules_for(r)))))
            rows.append(ReplayRow(f"{cat.id} matched set", f"{tag} item {size}", cat.matched_bins,
                                  len(layout(own, MATCHED_RULES))))
    for tag, size in _extremes(quarter):
        own = small_set_parts(_one_set(quarter, size, catalog))
        rows.append(ReplayRow(f"{quarter.id} matched set", f"{tag} item {size}", quarter.matched_bins,
                              len(layout(own, MATCHED_RULES))))
    # cross-family groupings of steps 1, 3, 4 and 8
    q_parts = small_set_parts(_one_set(quarter, quarter_size, catalog))
    medium = [c for c in catalog.of_class(ItemClass.MEDIUM) if not c.is_half][-1]
    for key, rules, parts in (
        ("third_large", RULES["third_large"],
         ThirdPool([_one_set(third, third_size, catalog)]).take_set() + _large_parts(2, 1 - third_size)
         + _large_parts(1, 1 - third_size)[:1]),
        ("third_quarter_large", RULES["third_quarter_large"],
         ThirdPool([_one_set(third, third_size, catalog)]).take_set() + q_parts + _large_parts(7, large_top)),
        ("medium_quarter_large", RULES["medium_quarter_large"],
         [p for p in _large_parts(1, medium.hi)] + q_parts + _large_parts(4, large_top)),
        ("third_quarter", RULES["third_quarter"],
         ThirdPool([_one_set(third, third_size, catalog), _one_set(third, third_size, catalog)]).take_set()
         + ThirdPool([_one_set(third, third_size, catalog)]).take_set() + q_parts),
    ):
        if key == "medium_quarter_large":
            for p in parts[:2]:
                p.kind = "MEDIUM"
        rec = CROSS_RECIPES[key]
        rows.append(ReplayRow(rec.name, "max items", rec.bins, len(layout(parts, rules))))
    return rows
