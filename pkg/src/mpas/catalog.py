"""Item classes, size categories and rematch recipes as declarative data.

The scheduler and the rematcher both read this table, and the property
checkers below evaluate every fullness and density inequality over it with
exact rational arithmetic, taking each participating item at the bottom of
its size range.
"""
from __future__ import annotations

import bisect
import enum
import json
from dataclasses import dataclass, field
from fractions import Fraction as F

from .core import as_fraction

# fullness / density constants
TARGET = F(11, 16)          # 0.6875
RAW_BOUND = F(7, 10)        # recipes with Large items are shown at 0.7 ...
RAW_LARGE_DENSITY = F(2, 3)  # ... with two Large items per three bins
THIRD_DENSITY = F(11, 8)    # 1.375 Third items per bin
EXTRA_LARGE_EVERY = 15      # one extra solo Large bin per 15 recipe bins
T2_SMALL_MAX = F(5, 16)     # type 2 small bins are at most this full
INNER_OFFSET = F(11, 32)    # interior slot of an inner Third bin
QUARTER_WEIGHT = F(5, 16)   # reallocation weight of items in (1/4, 1/3]
THIRD_WEIGHT = F(11, 32)

QUARTER_SET_ITEMS = 11
QUARTER_ITEM_MIN = F(1, 4)
THIRD_SET_ITEMS = 8
THIRD_ITEM_MIN = F(1, 3)
LARGE_ITEM_MIN = F(1, 2)


class DomainError(ValueError):
    pass


class ItemClass(enum.Enum):
    SMALL = "Small"
    THIRD = "Third"
    MEDIUM = "Medium"
    LARGE = "Large"
    VERY_LARGE = "VeryLarge"


CLASS_RANGES = {
    # (lo, hi, lo_open, hi_open)
    ItemClass.SMALL: (F(0), F(1, 3), True, False),
    ItemClass.THIRD: (F(1, 3), F(11, 32), True, False),
    ItemClass.MEDIUM: (F(11, 32), F(1, 2), True, False),
    ItemClass.LARGE: (F(1, 2), F(11, 16), True, True),
    ItemClass.VERY_LARGE: (F(11, 16), F(1), False, False),
}


class RecipeKind(enum.Enum):
    LARGE = "large"
    THIRD = "third"
    LARGE_QUARTER = "large_quarter"
    THIRD_QUARTER = "third_quarter"


@dataclass(frozen=True)
class RematchRecipe:
    """One way to rematch a complete set of a Small category.

    ``threshold``/``side`` restrict the Large partners: ``"below"`` means
    every Large item is at most the threshold (they then share bins with
    the set's type 2 large bins), ``"above"`` means every Large item is
    over it (the type 2 large bins then pair with each other).
    """
    category: str
    kind: RecipeKind
    bins: int
    large: int = 0
    third_sets: int = 0
    quarter_sets: int = 0
    threshold: F | None = None
    side: str | None = None
    bound: F = TARGET

    @property
    def name(self) -> str:
        parts = []
        if self.large:
            cond = f" {self.side} {fmt_size(self.threshold)}" if self.side else ""
            parts.append(f"{self.large} Large{cond}")
        if self.third_sets:
            parts.append(f"{self.third_sets} Third sets")
        if self.quarter_sets:
            parts.append(f"{self.quarter_sets} Quarter sets")
        return f"{self.category}: " + " & ".join(parts) + f" in {self.bins} bins"

    @property
    def pairs_type2_large_with_large(self) -> bool:
        return self.side == "below"

    @property
    def large_floor(self) -> F:
        """Smallest size a participating Large item is credited with."""
        if self.side == "above":
            return self.threshold
        return LARGE_ITEM_MIN


@dataclass(frozen=True)
class CategoryDescriptor:
    id: str
    item_class: ItemClass
    lo: F
    hi: F
    lo_open: bool = True
    hi_open: bool = False
    is_quarter: bool = False
    is_half: bool = False
    # items per one-sided bin (Small only); Category 12 uses fill thresholds
    t1_items: int = 0
    t2l_items: int = 0
    t2s_items: int = 0
    fill_thresholds: tuple[F, F, F] | None = None  # (type 2 small, type 2 large, type 1)
    # one-sided bins per complete set
    n_t1: int = 0
    n_t2l: int = 0
    n_t2s: int = 0
    matched_bins: int = 0
    recipes: tuple[RematchRecipe, ...] = field(default=(), compare=False)

    @property
    def is_small(self) -> bool:
        return self.item_class is ItemClass.SMALL

    def contains(self, size: F) -> bool:
        above = size > self.lo if self.lo_open else size >= self.lo
        below = size < self.hi if self.hi_open else size <= self.hi
        return above and below

    @property
    def min_size(self) -> F:
        return self.lo

    @property
    def set_items(self) -> int:
        return self.n_t1 * self.t1_items + self.n_t2l * self.t2l_items + self.n_t2s * self.t2s_items

    def set_fullness_floor(self) -> F:
        """Lower bound on the total size held by one complete set."""
        if self.fill_thresholds is not None:
            s, l, t = self.fill_thresholds
            return self.n_t2s * s + self.n_t2l * l + self.n_t1 * t
        return self.min_size * self.set_items


def _small(cid, lo, hi, t1, t2l, t2s, n_t1, n_t2l, n_t2s, bins, recipes, *,
           quarter=False, thresholds=None):
    rs = tuple(RematchRecipe(category=cid, **r) for r in recipes)
    return CategoryDescriptor(
        id=cid, item_class=ItemClass.SMALL, lo=lo, hi=hi, is_quarter=quarter,
        t1_items=t1, t2l_items=t2l, t2s_items=t2s, fill_thresholds=thresholds,
        n_t1=n_t1, n_t2l=n_t2l, n_t2s=n_t2s, matched_bins=bins, recipes=rs)


L, T, LQ, TQ = RecipeKind.LARGE, RecipeKind.THIRD, RecipeKind.LARGE_QUARTER, RecipeKind.THIRD_QUARTER


def _lg(n, bins, thr=None, side=None):
    return dict(kind=L, large=n, bins=bins, threshold=thr, side=side, bound=RAW_BOUND)


def _th(sets, bins):
    return dict(kind=T, third_sets=sets, bins=bins, bound=TARGET)


def _lq(n, q, bins, thr=None, side=None):
    return dict(kind=LQ, large=n, quarter_sets=q, bins=bins, threshold=thr, side=side, bound=RAW_BOUND)


def _tq(sets, q, bins):
    return dict(kind=TQ, third_sets=sets, quarter_sets=q, bins=bins, bound=TARGET)


def _below_above(thr, nb, bb, na, ba):
    return [_lg(nb, bb, thr, "below"), _lg(na, ba, thr, "above")]


SMALL_CATEGORIES = [
    _small("Sup-Category 3", F(5, 16), F(1, 3), 3, 1, 0, 2, 2, 0, 3,
           _below_above(F(2, 3), 4, 6, 6, 9) + [_th(2, 11)]),
    _small("Category 3", F(27, 100), F(5, 16), 3, 0, 1, 3, 0, 4, 5,
           [_lg(6, 9), _th(2, 11)]),
    _small("Quarter Items", F(1, 4), F(27, 100), 3, 2, 1, 1, 2, 4, 4, [], quarter=True),
    _small("Sup-Category 4", F(23, 100), F(1, 4), 4, 0, 1, 2, 0, 4, 4,
           [_lg(4, 6), _th(2, 10), _lq(10, 1, 15), _tq(3, 1, 17)]),
    _small("Category 4", F(215, 1000), F(23, 100), 0, 2, 1, 0, 4, 2, 3,
           _below_above(F(54, 100), 6, 6, 4, 6) + [_th(2, 10), _lq(8, 1, 12), _tq(3, 1, 16)]),
    _small("Sub-Category 4", F(206, 1000), F(215, 1000), 0, 2, 1, 0, 6, 2, 4,
           _below_above(F(57, 100), 8, 8, 6, 9) + [_th(2, 11), _lq(14, 2, 21), _tq(3, 1, 17)]),
    _small("Sub-Sub-Category 4", F(2, 10), F(206, 1000), 0, 2, 1, 0, 6, 2, 4,
           _below_above(F(588, 1000), 8, 8, 6, 9) + [_th(2, 11), _lq(14, 2, 21), _tq(3, 1, 17)]),
    _small("Sup-Category 5", F(1825, 10000), F(2, 10), 5, 2, 1, 2, 4, 2, 5,
           _below_above(F(6, 10), 6, 8, 8, 12) + [_th(3, 16), _lq(16, 2, 24), _tq(5, 2, 28)]),
    _small("Category 5", F(179, 1000), F(1825, 10000), 5, 2, 1, 6, 10, 4, 13,
           _below_above(F(635, 1000), 14, 20, 22, 33) + [_th(7, 39), _lq(42, 5, 63), _tq(12, 5, 69)]),
    _small("Sub-Category 5", F(1, 6), F(179, 1000), 5, 2, 1, 6, 10, 4, 13,
           _below_above(F(642, 1000), 14, 20, 22, 33)
           + [_th(7, 39), _lq(36, 4, 54, F(642, 1000), "below"), _lq(42, 5, 63, F(642, 1000), "above"),
              _tq(12, 5, 69)]),
    _small("Sup-Category 6", F(15625, 100000), F(1, 6), 6, 2, 1, 2, 2, 2, 4,
           _below_above(F(2, 3), 4, 6, 6, 9) + [_th(2, 11), _lq(10, 1, 15), _tq(3, 1, 17)]),
    _small("Category 6", F(1, 7), F(15625, 100000), 6, 0, 2, 2, 0, 4, 4,
           [_lg(4, 6), _th(2, 10), _lq(10, 1, 15), _tq(3, 1, 17)]),
    _small("Category 7", F(1, 8), F(1, 7), 7, 3, 2, 2, 2, 4, 5,
           [_lg(6, 9), _th(2, 11), _lq(10, 1, 15), _tq(4, 1, 21)]),
    _small("Category 8", F(1, 9), F(1, 8), 8, 3, 2, 2, 2, 2, 4,
           _below_above(F(5, 8), 4, 6, 6, 9) + [_th(2, 11), _lq(10, 1, 15), _tq(4, 1, 21)]),
    _small("Category 9", F(1, 10), F(1, 9), 9, 3, 2, 2, 2, 2, 4,
           _below_above(F(2, 3), 4, 6, 6, 9) + [_th(2, 11), _lq(10, 1, 15), _tq(4, 1, 21)]),
    _small("Category 10", F(1, 11), F(1, 10), 10, 4, 3, 2, 2, 2, 4,
           _below_above(F(6, 10), 4, 6, 6, 9) + [_th(2, 11), _lq(10, 1, 15), _tq(4, 1, 21)]),
    _small("Category 11", F(1, 12), F(1, 11), 11, 5, 3, 2, 2, 2, 4,
           _below_above(F(6, 11), 4, 6, 6, 9) + [_th(2, 11), _lq(10, 1, 15), _tq(4, 1, 21)]),
    _small("Category 12", F(0), F(1, 12), 0, 0, 0, 2, 2, 2, 4,
           _below_above(F(54, 100), 4, 6, 6, 9) + [_th(2, 11), _lq(10, 1, 15), _tq(4, 1, 21)],
           thresholds=(F(1, 4), F(113, 300), F(11, 12))),
]

LARGE_CUTOFFS = [F(1, 2), F(54, 100), F(6, 11), F(57, 100), F(588, 1000), F(6, 10),
                 F(625, 1000), F(635, 1000), F(642, 1000), F(2, 3), F(11, 16)]
MEDIUM_CUTOFFS = [F(11, 32), F(358, 1000), F(365, 1000), F(375, 1000), F(4, 10),
                  F(412, 1000), F(43, 100), F(5, 11), F(46, 100), F(1, 2)]


def fmt_size(x: F) -> str:
    """Decimal rendering when exact, otherwise p/q."""
    d = x.denominator
    while d % 2 == 0:
        d //= 2
    while d % 5 == 0:
        d //= 5
    if d == 1:
        return format(x.numerator / x.denominator, "g")
    return str(x)


def _range_categories(prefix, cls, cutoffs, top_open=False):
    out = []
    for i, (lo, hi) in enumerate(zip(cutoffs, cutoffs[1:])):
        last = i == len(cutoffs) - 2
        out.append(CategoryDescriptor(
            id=f"{prefix} ({fmt_size(lo)}, {fmt_size(hi)}{')' if last and top_open else ']'}",
            item_class=cls, lo=lo, hi=hi, hi_open=last and top_open,
            is_half=cls is ItemClass.MEDIUM and lo == F(46, 100),
            n_t2l=2, t2l_items=1))
    return out


THIRD_CATEGORY = CategoryDescriptor(
    id="Third Items", item_class=ItemClass.THIRD, lo=F(1, 3), hi=F(11, 32), n_t2l=6)
MEDIUM_CATEGORIES = _range_categories("Medium", ItemClass.MEDIUM, MEDIUM_CUTOFFS)
LARGE_CATEGORIES = _range_categories("Large", ItemClass.LARGE, LARGE_CUTOFFS, top_open=True)
VERY_LARGE_CATEGORY = CategoryDescriptor(
    id="Very Large Items", item_class=ItemClass.VERY_LARGE, lo=F(11, 16), hi=F(1),
    lo_open=False, n_t1=1, t1_items=1)


@dataclass(frozen=True)
class CrossRecipe:
    """Rematch layouts that do not revolve around a non-Quarter Small set.

    ``large_floor`` is the Large size credited in the printed arithmetic.
    """
    name: str
    bins: int
    large: int = 0
    third_sets: int = 0
    quarter_sets: int = 0
    medium: int = 0
    medium_floor: F = F(0)
    large_floor: F = LARGE_ITEM_MIN
    bound: F | None = RAW_BOUND  # None: grouped for accounting, no fullness claim


CROSS_RECIPES = {
    # Third set + 6 Large in 8 bins, as printed for the Third category
    "third_large_printed": CrossRecipe("Third set & 6 Large", bins=8, large=6, third_sets=1),
    # the step-1 layout actually executed: 4 outer+Large bins, 2 inner bins, 1 solo Large
    "third_large": CrossRecipe("Third set & 5 Large (step 1)", bins=7, large=5, third_sets=1),
    "third_quarter_large": CrossRecipe("Third set & Quarter set & 14 Large", bins=20, large=14,
                                       third_sets=1, quarter_sets=1, large_floor=F(2, 3)),
    "medium_quarter_large": CrossRecipe("2 Medium & Quarter set & 8 Large", bins=11, large=8,
                                        quarter_sets=1, medium=2, medium_floor=F(11, 32),
                                        large_floor=F(54, 100)),
    # grouping only: a matched Quarter set next to solo Large bins
    "quarter_large": CrossRecipe("Quarter set & 9 Large (grouped)", bins=13, large=9,
                                 quarter_sets=1, bound=None),
    "third_quarter": CrossRecipe("2 Third sets & Quarter set", bins=10, third_sets=2,
                                 quarter_sets=1, bound=None),
}


class Catalog:
    """Ordered, immutable collection of every category covering (0, 1]."""

    def __init__(self, categories):
        self.categories = tuple(sorted(categories, key=lambda c: (c.hi, not c.hi_open)))
        self._by_id = {c.id: c for c in self.categories}
        self._his = [c.hi for c in self.categories]
        self.index = {c.id: i for i, c in enumerate(self.categories)}

    def __iter__(self):
        return iter(self.categories)

    def __getitem__(self, cid) -> CategoryDescriptor:
        return self._by_id[cid]

    def __len__(self):
        return len(self.categories)

    def categorize(self, size) -> CategoryDescriptor:
        size = as_fraction(size)
        if not (0 < size <= 1):
            raise ValueError(f"size {size} outside (0, 1]")
        i = bisect.bisect_left(self._his, size)
        cat = self.categories[i]
        if cat.hi == size and cat.hi_open:
            cat = self.categories[i + 1]
        return cat

    def of_class(self, cls: ItemClass):
        return [c for c in self.categories if c.item_class is cls]

    @property
    def quarter(self) -> CategoryDescriptor:
        return self["Quarter Items"]

    def small_non_quarter(self):
        return [c for c in self.categories if c.is_small and not c.is_quarter]


def default_catalog() -> Catalog:
    return Catalog(SMALL_CATEGORIES + [THIRD_CATEGORY] + MEDIUM_CATEGORIES
                   + LARGE_CATEGORIES + [VERY_LARGE_CATEGORY])


CATALOG = default_catalog()


def categorize(size) -> CategoryDescriptor:
    return CATALOG.categorize(size)


def item_class_of(size) -> ItemClass:
    size = as_fraction(size)
    for cls, (lo, hi, lo_open, hi_open) in CLASS_RANGES.items():
        if (size > lo if lo_open else size >= lo) and (size < hi if hi_open else size <= hi):
            return cls
    raise ValueError(f"size {size} outside (0, 1]")


# --- property checks --------------------------------------------------------

def verify_property1(cat: CategoryDescriptor) -> bool:
    """A matched complete set averages at least 11/16 per bin."""
    if not cat.is_small:
        raise DomainError(f"{cat.id} is not a Small category")
    return cat.set_fullness_floor() / cat.matched_bins >= TARGET


def recipe_fullness_floor(recipe: RematchRecipe, cat: CategoryDescriptor | None = None) -> F:
    """Average fullness with every participant at the floor of its range."""
    cat = cat or CATALOG[recipe.category]
    total = (recipe.large * recipe.large_floor
             + recipe.third_sets * THIRD_SET_ITEMS * THIRD_ITEM_MIN
             + recipe.quarter_sets * QUARTER_SET_ITEMS * QUARTER_ITEM_MIN
             + cat.set_fullness_floor())
    return total / recipe.bins


def adjusted_large_density(large: int, bins: int) -> F:
    """Large items per bin after adding one extra solo Large bin per 15 bins."""
    extra = F(bins, EXTRA_LARGE_EVERY)
    return (large + extra) / (bins + extra)


def adjusted_fullness(fullness: F, bins: int) -> F:
    extra = F(bins, EXTRA_LARGE_EVERY)
    return (fullness * bins + LARGE_ITEM_MIN * extra) / (bins + extra)


def verify_property2_3(recipe: RematchRecipe) -> bool:
    """Rematched fullness and partner density of a non-Quarter Small recipe."""
    cat = CATALOG[recipe.category]
    if cat.is_quarter or not cat.is_small:
        raise DomainError(f"{recipe.category} has no rematch recipes of this kind")
    fullness = recipe_fullness_floor(recipe, cat)
    if fullness < recipe.bound:
        return False
    if recipe.kind in (RecipeKind.LARGE, RecipeKind.LARGE_QUARTER):
        if F(recipe.large, recipe.bins) < RAW_LARGE_DENSITY:
            return False
        return (adjusted_large_density(recipe.large, recipe.bins) >= TARGET
                and adjusted_fullness(fullness, recipe.bins) >= TARGET)
    return F(recipe.third_sets * THIRD_SET_ITEMS, recipe.bins) >= THIRD_DENSITY


def reallocation_holds(q: int, t: int, l: int, b: int) -> bool:
    """5/16 q + 11/32 t + 11/16 l >= 11/16 b."""
    return QUARTER_WEIGHT * q + THIRD_WEIGHT * t + TARGET * l >= TARGET * b


def verify_property4(recipe) -> bool:
    """Quarter size reallocation for a recipe, a cross recipe, or a (q, t, l, b) tuple."""
    if isinstance(recipe, tuple):
        return reallocation_holds(*recipe)
    if isinstance(recipe, RematchRecipe):
        cat = CATALOG[recipe.category]
        q = recipe.quarter_sets * QUARTER_SET_ITEMS
        if cat.lo >= QUARTER_ITEM_MIN:
            q += cat.set_items
        return reallocation_holds(q, recipe.third_sets * THIRD_SET_ITEMS, recipe.large, recipe.bins)
    if isinstance(recipe, CrossRecipe):
        return reallocation_holds(recipe.quarter_sets * QUARTER_SET_ITEMS,
                                  recipe.third_sets * THIRD_SET_ITEMS, recipe.large, recipe.bins)
    if isinstance(recipe, CategoryDescriptor) and recipe.is_quarter:
        return reallocation_holds(recipe.set_items, 0, 0, recipe.matched_bins)
    raise TypeError(f"cannot derive (q, t, l, b) from {recipe!r}")


def cross_recipe_fullness_floor(r: CrossRecipe) -> F:
    total = (r.large * r.large_floor + r.medium * r.medium_floor
             + r.third_sets * THIRD_SET_ITEMS * THIRD_ITEM_MIN
             + r.quarter_sets * QUARTER_SET_ITEMS * QUARTER_ITEM_MIN)
    return total / r.bins


@dataclass
class CheckRow:
    subject: str
    check: str
    value: F
    bound: F
    ok: bool

    def line(self) -> str:
        mark = "ok  " if self.ok else "FAIL"
        return f"{mark} {self.subject:<58} {self.check:<22} {float(self.value):.5f} >= {float(self.bound):.5f}"


def check_table(catalog: Catalog = CATALOG) -> list[CheckRow]:
    """Every fullness, density and reallocation inequality, one row each."""
    rows = []
    for cat in catalog:
        if not cat.is_small:
            continue
        v = cat.set_fullness_floor() / cat.matched_bins
        rows.append(CheckRow(f"{cat.id}: matched set in {cat.matched_bins} bins", "fullness", v, TARGET,
                             v >= TARGET))
        if cat.is_quarter:
            q = cat.set_items
            v = QUARTER_WEIGHT * q / cat.matched_bins
            rows.append(CheckRow(f"{cat.id}: matched set", "reallocation", v, TARGET,
                                 reallocation_holds(q, 0, 0, cat.matched_bins)))
            continue
        for r in cat.recipes:
            fl = recipe_fullness_floor(r, cat)
            rows.append(CheckRow(r.name, "fullness", fl, r.bound, fl >= r.bound))
            if r.kind in (L, LQ):
                d = F(r.large, r.bins)
                rows.append(CheckRow(r.name, "large density", d, RAW_LARGE_DENSITY, d >= RAW_LARGE_DENSITY))
                ad = adjusted_large_density(r.large, r.bins)
                rows.append(CheckRow(r.name, "adj. large density", ad, TARGET, ad >= TARGET))
                af = adjusted_fullness(fl, r.bins)
                rows.append(CheckRow(r.name, "adj. fullness", af, TARGET, af >= TARGET))
            else:
                d = F(r.third_sets * THIRD_SET_ITEMS, r.bins)
                rows.append(CheckRow(r.name, "third density", d, THIRD_DENSITY, d >= THIRD_DENSITY))
            if r.quarter_sets:
                q = r.quarter_sets * QUARTER_SET_ITEMS
                t = r.third_sets * THIRD_SET_ITEMS
                v = (QUARTER_WEIGHT * q + THIRD_WEIGHT * t + TARGET * r.large) / r.bins
                rows.append(CheckRow(r.name, "reallocation", v, TARGET, verify_property4(r)))
    for key, r in CROSS_RECIPES.items():
        fl = cross_recipe_fullness_floor(r)
        if r.bound is not None:
            rows.append(CheckRow(r.name, "fullness", fl, r.bound, fl >= r.bound))
        if r.large:
            d = F(r.large, r.bins)
            need = TARGET if key in ("quarter_large", "third_large") else RAW_LARGE_DENSITY
            rows.append(CheckRow(r.name, "large density", d, need, d >= need))
        elif r.third_sets:
            d = F(r.third_sets * THIRD_SET_ITEMS, r.bins)
            rows.append(CheckRow(r.name, "third density", d, THIRD_DENSITY, d >= THIRD_DENSITY))
        if r.quarter_sets:
            q, t = r.quarter_sets * QUARTER_SET_ITEMS, r.third_sets * THIRD_SET_ITEMS
            v = (QUARTER_WEIGHT * q + THIRD_WEIGHT * t + TARGET * r.large) / r.bins
            rows.append(CheckRow(r.name, "reallocation", v, TARGET, verify_property4(r)))
    return rows


def _class_coverage_failures(catalog: Catalog) -> list[str]:
    fails = []
    for cls, (lo, hi, lo_open, hi_open) in CLASS_RANGES.items():
        cats = sorted(catalog.of_class(cls), key=lambda c: c.lo)
        if not cats:
            fails.append(f"{cls.value}: no categories")
            continue
        if (cats[0].lo, cats[0].lo_open) != (lo, lo_open):
            fails.append(f"{cls.value}: first category starts at {cats[0].lo}, class starts at {lo}")
        if (cats[-1].hi, cats[-1].hi_open) != (hi, hi_open):
            fails.append(f"{cls.value}: last category ends at {cats[-1].hi}, class ends at {hi}")
        for a, b in zip(cats, cats[1:]):
            if a.hi < b.lo:
                fails.append(f"gap between {a.id} and {b.id}: ({a.hi}, {b.lo}]")
            elif a.hi > b.lo:
                fails.append(f"overlap between {a.id} and {b.id}")
            elif a.hi_open == b.lo_open:
                fails.append(f"boundary {a.hi} claimed by {'neither' if a.hi_open else 'both'} of {a.id}, {b.id}")
    return fails


def catalog_selfcheck(catalog: Catalog = CATALOG) -> list[str]:
    """Empty list when ranges partition (0, 1] and every inequality holds."""
    fails = _class_coverage_failures(catalog)
    for cat in catalog:
        if not cat.is_small or cat.is_quarter:
            continue
        kinds = {r.kind for r in cat.recipes}
        # items in (1/4, 1/3] already carry the reallocation weight themselves
        needed = [RecipeKind.LARGE, RecipeKind.THIRD] if cat.lo >= QUARTER_ITEM_MIN else list(RecipeKind)
        for k in needed:
            if k not in kinds:
                fails.append(f"{cat.id}: missing {k.value} recipe")
        sides = {r.side for r in cat.recipes if r.kind is L}
        if ("below" in sides) != ("above" in sides):
            fails.append(f"{cat.id}: threshold recipe without its counterpart")
    fails += [f"{r.subject}: {r.check} {r.value} < {r.bound}" for r in check_table(catalog) if not r.ok]
    return fails


def catalog_to_json(catalog: Catalog = CATALOG) -> dict:
    def frac(x):
        return None if x is None else str(x)

    cats = []
    for c in catalog:
        d = {
            "id": c.id, "class": c.item_class.value,
            "range": f"{'(' if c.lo_open else '['}{c.lo}, {c.hi}{')' if c.hi_open else ']'}",
            "quarter": c.is_quarter, "half": c.is_half,
        }
        if c.is_small:
            d["items_per_bin"] = {"type1": c.t1_items, "type2_large": c.t2l_items, "type2_small": c.t2s_items}
            if c.fill_thresholds:
                d["fill_thresholds"] = {k: str(v) for k, v in
                                        zip(("type2_small", "type2_large", "type1"), c.fill_thresholds)}
            d["set"] = {"type1": c.n_t1, "type2_large": c.n_t2l, "type2_small": c.n_t2s}
            d["matched_bins"] = c.matched_bins
            d["recipes"] = [{"kind": r.kind.value, "large": r.large, "third_sets": r.third_sets,
                             "quarter_sets": r.quarter_sets, "threshold": frac(r.threshold),
                             "side": r.side, "bins": r.bins, "bound": str(r.bound)} for r in c.recipes]
        cats.append(d)
    cross = {k: {"bins": r.bins, "large": r.large, "third_sets": r.third_sets,
                 "quarter_sets": r.quarter_sets, "medium": r.medium} for k, r in CROSS_RECIPES.items()}
    return {"categories": cats, "cross_recipes": cross}


def dump_catalog(fh, catalog: Catalog = CATALOG) -> None:
    json.dump(catalog_to_json(catalog), fh, indent=2)
