"""Randomized online appointment scheduling with offline room rematching."""
from .catalog import CATALOG, Catalog, ItemClass, categorize, catalog_selfcheck
from .core import (FinalPacking, Item, Schedule, ScheduledItem, StructuralError, TimeInterval,
                   intervals_overlap, peak_utilization, validate_packing)
from .rematch import RematchAudit, fit_test, measure_imbalance, rematch
from .scheduler import Scheduler, schedule_stream

__all__ = [
    "CATALOG", "Catalog", "ItemClass", "categorize", "catalog_selfcheck",
    "FinalPacking", "Item", "Schedule", "ScheduledItem", "StructuralError", "TimeInterval",
    "intervals_overlap", "peak_utilization", "validate_packing",
    "RematchAudit", "fit_test", "measure_imbalance", "rematch",
    "Scheduler", "schedule_stream",
]
