from dataclasses import replace
from fractions import Fraction as F

import pytest

from mpas.catalog import (CATALOG, CLASS_RANGES, TARGET, Catalog, DomainError, ItemClass, RecipeKind,
                          RematchRecipe, catalog_selfcheck, categorize, check_table, item_class_of,
                          verify_property1, verify_property2_3, verify_property4)


@pytest.mark.parametrize("size,cid", [
    ("0.26", "Quarter Items"),
    ("1/2", "Medium (0.46, 0.5]"),
    ("0.15", "Category 6"),
    ("11/16", "Very Large Items"),
    ("0.3438", "Medium (0.34375, 0.358]"),
    ("0.2501", "Quarter Items"),
    ("0.0623", "Category 12"),
    ("1", "Very Large Items"),
])
def test_categorize_examples(size, cid):
    assert categorize(F(size)).id == cid


def test_half_flag():
    assert categorize(F(1, 2)).is_half
    assert categorize(F(46, 100)).is_half is False


def test_class_boundaries():
    assert item_class_of(F(1, 3)) is ItemClass.SMALL
    assert item_class_of(F(11, 32)) is ItemClass.THIRD
    assert item_class_of(F(1, 2)) is ItemClass.MEDIUM
    assert item_class_of(F(11, 16) - F(1, 10**9)) is ItemClass.LARGE
    assert item_class_of(F(7, 10)) is ItemClass.VERY_LARGE


def test_partition_dense_grid_and_neighbours():
    eps = F(1, 10**7)
    points = [F(k, 2016) for k in range(1, 2017)]
    for c in CATALOG:
        for x in (c.lo, c.hi):
            points += [x - eps, x, x + eps]
    for x in points:
        if not (0 < x <= 1):
            continue
        owners = [c.id for c in CATALOG if c.contains(x)]
        assert len(owners) == 1, (x, owners)
        assert categorize(x).id == owners[0]


def test_categories_monotone():
    prev = None
    for k in range(1, 1001):
        c = categorize(F(k, 1000))
        if prev is not None:
            assert c.lo >= prev.lo
        prev = c


def test_class_ranges_cover_unit_interval():
    los = sorted((lo, hi) for lo, hi, _, _ in CLASS_RANGES.values())
    assert los[0][0] == 0 and los[-1][1] == 1
    assert all(a[1] == b[0] for a, b in zip(los, los[1:]))


def test_property1_examples():
    assert verify_property1(CATALOG["Quarter Items"])
    q = CATALOG["Quarter Items"]
    assert q.set_items * q.min_size / q.matched_bins == TARGET
    assert verify_property1(CATALOG["Category 3"])
    hypothetical = replace(CATALOG["Quarter Items"], id="hyp", t1_items=2, n_t1=1, t2l_items=2, n_t2l=2,
                           t2s_items=1, n_t2s=4)
    assert hypothetical.set_items == 10
    assert not verify_property1(hypothetical)
    with pytest.raises(DomainError):
        verify_property1(CATALOG["Third Items"])


def _recipe(cid, name_part):
    return next(r for r in CATALOG[cid].recipes if name_part in r.name)


def test_property2_3_examples():
    assert verify_property2_3(_recipe("Category 4", "8 Large & 1 Quarter sets in 12 bins"))
    assert verify_property2_3(_recipe("Sup-Category 3", "2 Third sets in 11 bins"))
    thin = RematchRecipe("Category 4", RecipeKind.LARGE, bins=9, large=4)
    assert not verify_property2_3(thin)


def test_property2_3_refuses_quarter_category():
    with pytest.raises(DomainError):
        verify_property2_3(RematchRecipe("Quarter Items", RecipeKind.LARGE, bins=6, large=4))


def test_property4_examples():
    assert verify_property4((11, 0, 10, 15))
    assert verify_property4((11, 0, 0, 4))
    assert verify_property4(CATALOG["Quarter Items"])
    assert not verify_property4((0, 0, 0, 1))
    for c in CATALOG:
        for r in c.recipes:
            if r.quarter_sets:
                assert verify_property4(r), r.name


def test_every_recipe_line_holds():
    rows = check_table()
    assert len(rows) > 70
    bad = [r.line() for r in rows if not r.ok]
    assert not bad, bad


def test_shipped_catalog_selfcheck_clean():
    assert catalog_selfcheck() == []


def _altered(cid, **changes):
    return Catalog([replace(c, **changes) if c.id == cid else c for c in CATALOG])


def test_selfcheck_flags_category7_widened():
    # (1/8, 0.15] reaches past 1/7, the lower end of Category 6
    fails = catalog_selfcheck(_altered("Category 7", hi=F(15, 100)))
    assert any("Category 7" in f and "Category 6" in f for f in fails)


def test_selfcheck_flags_gap():
    fails = catalog_selfcheck(_altered("Category 7", lo=F(13, 100)))
    assert any(f.startswith("gap between Category 8 and Category 7") for f in fails)


def test_selfcheck_flags_category12_threshold():
    th = CATALOG["Category 12"].fill_thresholds
    weak = _altered("Category 12", fill_thresholds=(th[0], th[1], F(10, 12)))
    c12 = weak["Category 12"]
    # matched set floor: 2 (1/4 + 113/300 + 10/12) / 4 = 73/100, still above 11/16
    assert c12.set_fullness_floor() / c12.matched_bins == F(73, 100)
    assert verify_property1(c12)
    fails = catalog_selfcheck(weak)
    assert fails and all(f.startswith("Category 12") for f in fails)
    # a threshold low enough to break the matched set
    weaker = _altered("Category 12", fill_thresholds=(th[0], th[1], F(2, 3)))
    assert not verify_property1(weaker["Category 12"])
    assert any("matched set" in f for f in catalog_selfcheck(weaker))
