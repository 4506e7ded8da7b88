"""Ground truth for small instances and dual certificates for large ones.

``exact_optimal_bins`` and ``brute_force_bins`` solve bin packing exactly
on small multisets.  ``build_dual_certificate`` turns a finished run into a
weight per item following the case its audit reports, and
``check_dual_feasibility`` confirms by exhaustive knapsack search that no
set of items fitting in one bin carries more than unit weight.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

from .catalog import ItemClass, item_class_of
from .core import ONE, ZERO, FirstFitBins, as_fraction, peak_utilization
from .rematch import ROLE_LARGE_MEDIUM, ROLE_MEDIUM_LARGE, RematchAudit

TARGET = Fraction(11, 16)
DEFAULT_EXACT_LIMIT = 24
DEFAULT_PAIR_LIMIT = 60
THIRD_WITH_LARGE_STEPS = frozenset({"step1", "step3"})
REMATCHED_MEDIUM_STEPS = frozenset({"step4"})
LEFTOVER_STEPS = frozenset({"step8", "step9"})


class OracleLimitError(ValueError):
    """The instance is too large for exhaustive search."""


class CertificateError(ValueError):
    pass


def _sizes(sizes) -> list[Fraction]:
    return [s if isinstance(s, Fraction) else as_fraction(getattr(s, "size", s)) for s in sizes]


def _scaled(sizes: list[Fraction]) -> tuple[list[int], int]:
    den = 1
    for s in sizes:
        den = math.lcm(den, s.denominator)
    return [s.numerator * (den // s.denominator) for s in sizes], den


def size_lower_bound(sizes) -> int:
    return math.ceil(sum(_sizes(sizes), ZERO))


def first_fit_decreasing(sizes) -> int:
    ff = FirstFitBins()
    for s in sorted(_sizes(sizes), reverse=True):
        ff.insert(s)
    return len(ff)


def exact_optimal_bins(sizes, limit: int = DEFAULT_EXACT_LIMIT) -> int:
    """Minimum number of unit bins holding ``sizes``.

    Depth-first branch and bound over items in descending order.  Each item
    goes into an open bin (skipping bins whose residual equals one already
    tried) or a fresh bin; a branch dies once its bin count plus the volume
    bound of the remaining items reaches the incumbent.
    """
    fs = _sizes(sizes)
    if len(fs) > limit:
        raise OracleLimitError(f"{len(fs)} items exceed the exact-search limit of {limit}")
    if not fs:
        return 0
    w, cap = _scaled(sorted(fs, reverse=True))
    lb = -(-sum(w) // cap)
    best = first_fit_decreasing(fs)
    if best == lb:
        return best
    suffix = [0] * (len(w) + 1)
    for i in range(len(w) - 1, -1, -1):
        suffix[i] = suffix[i + 1] + w[i]
    residual: list[int] = []

    def dfs(i: int) -> bool:
        nonlocal best
        if i == len(w):
            best = len(residual)
            return best == lb
        used = len(residual)
        slack = sum(residual)
        # volume bound: what does not fit into the open slack needs new bins
        need = used + max(0, -(-(suffix[i] - slack) // cap))
        if need >= best:
            return False
        tried = set()
        x = w[i]
        for j in range(used):
            r = residual[j]
            if r >= x and r not in tried:
                tried.add(r)
                residual[j] = r - x
                if dfs(i + 1):
                    return True
                residual[j] = r
        if used + 1 < best:
            residual.append(cap - x)
            done = dfs(i + 1)
            residual.pop()
            if done:
                return True
        return False

    dfs(0)
    return best


def brute_force_bins(sizes, limit: int = 12) -> int:
    """Minimum over every set partition with feasible blocks.  Reference only."""
    fs = _sizes(sizes)
    if len(fs) > limit:
        raise OracleLimitError(f"{len(fs)} items exceed the brute-force limit of {limit}")
    if not fs:
        return 0
    w, cap = _scaled(fs)
    blocks: list[int] = []
    best = len(w)

    def rec(i):
        nonlocal best
        if i == len(w):
            best = min(best, len(blocks))
            return
        for j in range(len(blocks)):
            if blocks[j] + w[i] <= cap:
                blocks[j] += w[i]
                rec(i + 1)
                blocks[j] -= w[i]
        blocks.append(w[i])
        rec(i + 1)
        blocks.pop()

    rec(0)
    return best


# --- dual certificates ---------------------------------------------------------

@dataclass
class DualCertificate:
    case: int | None
    weights: dict[int, Fraction]
    sizes: dict[int, Fraction]
    w: Fraction | None = None

    def __post_init__(self):
        neg = [i for i, x in self.weights.items() if x < 0]
        if neg:
            raise CertificateError(f"negative dual weights for items {neg[:5]}")

    @property
    def objective(self) -> Fraction:
        return sum(self.weights.values(), ZERO)

    def table(self) -> list[tuple[Fraction, Fraction, int]]:
        """Compressed ``(size, weight, count)`` rows, largest size first."""
        c = Counter((self.sizes[i], x) for i, x in self.weights.items())
        return sorted(((s, x, n) for (s, x), n in c.items()), key=lambda r: (-r[0], -r[1]))

    def to_json(self) -> dict:
        f = lambda v: f"{v.numerator}/{v.denominator}"  # noqa: E731
        return {"case": self.case, "w": None if self.w is None else f(self.w),
                "objective": f(self.objective),
                "table": [{"size": f(s), "weight": f(x), "count": n} for s, x, n in self.table()]}


def _designations(items, audit: RematchAudit):
    roles, steps = audit.roles, audit.item_step
    for e in items:
        cls = item_class_of(e.size)
        yield e, cls, roles.get(e.id), steps.get(e.id)


def build_dual_certificate(items, audit: RematchAudit) -> DualCertificate:
    """Dual weights for the case the audit reports.

    ``items`` are the scheduled items of the run; the audit supplies which
    Large and Medium items shared a bin and which step consumed each item.
    """
    items = list(items)
    if audit.case is None:
        raise CertificateError("ambiguous case classification: " + "; ".join(audit.case_conflicts))
    case = audit.case
    sizes = {e.id: e.size for e in items}
    x: dict[int, Fraction] = {}
    w = None
    half, zero = Fraction(1, 2), ZERO
    if case == 1:
        x = dict(sizes)
    elif case == 2:
        halves = [e.size for e, cls, role, step in _designations(items, audit)
                  if cls is ItemClass.MEDIUM or (cls is ItemClass.THIRD and step not in THIRD_WITH_LARGE_STEPS)]
        fit_limit = ONE - min(halves) if halves else ZERO
        for e, cls, role, step in _designations(items, audit):
            if cls is ItemClass.MEDIUM or role == ROLE_LARGE_MEDIUM:
                x[e.id] = half
            elif cls in (ItemClass.LARGE, ItemClass.VERY_LARGE):
                # a Large item that still fits beside a half-weight item is demoted to 1/2
                x[e.id] = half if e.size <= fit_limit else ONE
            elif cls is ItemClass.THIRD and step not in THIRD_WITH_LARGE_STEPS:
                # bins with Large items already carry their own weight
                x[e.id] = half
            else:
                x[e.id] = zero
    elif case == 3:
        loose = [e.size for e, cls, role, step in _designations(items, audit)
                 if cls is ItemClass.MEDIUM and step == "step9"]
        fit_limit = ONE - min(loose) if loose else ZERO
        for e, cls, role, step in _designations(items, audit):
            if cls is ItemClass.MEDIUM and step == "step9":
                x[e.id] = Fraction(11, 32)
            elif cls in (ItemClass.THIRD, ItemClass.MEDIUM) or Fraction(1, 4) < e.size <= Fraction(1, 3):
                x[e.id] = Fraction(5, 16)
            elif role == ROLE_LARGE_MEDIUM:
                x[e.id] = half
            elif cls in (ItemClass.LARGE, ItemClass.VERY_LARGE):
                x[e.id] = Fraction(21, 32) if e.size <= fit_limit else TARGET
            else:
                x[e.id] = zero
    elif case == 4:
        def unmatched_medium(cls, role, step):
            return cls is ItemClass.MEDIUM and role != ROLE_MEDIUM_LARGE and step not in REMATCHED_MEDIUM_STEPS

        candidates = [e.size for e, cls, role, step in _designations(items, audit)
                      if unmatched_medium(cls, role, step)
                      or (cls is ItemClass.THIRD and step in LEFTOVER_STEPS)]
        if not candidates:
            raise CertificateError("case 4 needs an unmatched Medium or Third item")
        w = ONE - min(candidates)
        for e, cls, role, step in _designations(items, audit):
            s = e.size
            if role == ROLE_LARGE_MEDIUM or unmatched_medium(cls, role, step):
                x[e.id] = s
            elif cls in (ItemClass.LARGE, ItemClass.VERY_LARGE) and s > w:
                # strictly above w: nothing weighted at full size fits beside it
                x[e.id] = 10 * s / 11 + Fraction(1, 11)
            else:
                x[e.id] = 10 * s / 11
    elif case == 5:
        x = {i: (ONE if s > half else zero) for i, s in sizes.items()}
    else:
        raise CertificateError(f"unknown case {case}")
    return DualCertificate(case, x, sizes, w)


def max_bin_weight(pairs: Iterable[tuple[Fraction, Fraction, int]]) -> Fraction:
    """Largest total weight of a sub-multiset with total size at most 1.

    Bounded knapsack by branch and bound; ``pairs`` are (size, weight,
    multiplicity) with weight > 0.
    """
    rows = [(as_fraction(s), as_fraction(x), n) for s, x, n in pairs if x > 0 and n > 0]
    if not rows:
        return ZERO
    scaled, cap = _scaled([s for s, _, _ in rows])
    types = sorted(zip(scaled, [x for _, x, _ in rows], [n for _, _, n in rows]),
                   key=lambda t: -t[1] / t[0])
    best = ZERO

    def bound(i, room, acc):
        # fractional relaxation over the remaining ratio-sorted types
        for s, x, n in types[i:]:
            if room <= 0:
                break
            k = min(n, room // s)
            acc += k * x
            room -= k * s
            if k < n and room > 0:
                return acc + x * Fraction(room, s)
        return acc

    def dfs(i, room, acc):
        nonlocal best
        if acc > best:
            best = acc
        if i == len(types) or bound(i, room, acc) <= best:
            return
        s, x, n = types[i]
        for k in range(min(n, room // s), -1, -1):
            dfs(i + 1, room - k * s, acc + k * x)

    dfs(0, cap, ZERO)
    return best


def max_bin_weight_dp(pairs, cap_limit: int = 2_000_000) -> Fraction:
    """Same optimum as :func:`max_bin_weight` by dynamic programming over capacity.

    Sizes and weights are scaled to integers; multiplicities are split in
    powers of two.  Needs the common size denominator to be at most
    ``cap_limit``.
    """
    import numpy as np

    rows = [(as_fraction(s), as_fraction(x), n) for s, x, n in pairs if x > 0 and n > 0]
    if not rows:
        return ZERO
    sizes, cap = _scaled([s for s, _, _ in rows])
    if cap > cap_limit:
        raise OracleLimitError(f"size grid 1/{cap} too fine for the capacity table")
    vden = 1
    for _, x, _ in rows:
        vden = math.lcm(vden, x.denominator)
    values = [x.numerator * (vden // x.denominator) for _, x, _ in rows]
    dp = np.zeros(cap + 1, dtype=np.int64)
    for sz, v, (_, _, n) in zip(sizes, values, rows):
        n = min(n, cap // sz)
        k = 1
        while n > 0:
            take = min(k, n)
            ws, wv = sz * take, v * take
            if ws <= cap:
                cand = dp[:cap + 1 - ws] + wv
                dp[ws:] = np.maximum(dp[ws:], cand)
            n -= take
            k *= 2
    return Fraction(int(dp.max()), vden)


def check_dual_feasibility(cert: DualCertificate, items=None, pair_limit: int = DEFAULT_PAIR_LIMIT,
                           method: str = "search") -> bool:
    """Whether every bin-feasible subset weighs at most 1.

    ``method="search"`` is branch and bound over at most ``pair_limit``
    distinct (size, weight) pairs; ``"dp"`` uses the capacity table;
    ``"auto"`` picks the search when under the limit.
    """
    rows = [(s, x, n) for s, x, n in cert.table() if x > 0]
    if method == "auto":
        method = "search" if len(rows) <= pair_limit else "dp"
    if method == "dp":
        return max_bin_weight_dp(rows) <= ONE
    if len(rows) > pair_limit:
        raise OracleLimitError(f"{len(rows)} distinct (size, weight) pairs exceed the limit of {pair_limit}")
    return max_bin_weight(rows) <= ONE


# --- bound reports -------------------------------------------------------------

@dataclass
class BoundReport:
    alg_bins: int
    size_lb: int
    peak: int | None = None
    exact_opt: int | None = None
    heuristic_ub: int | None = None
    dual_objective: Fraction | None = None
    dual_feasible: bool | None = None
    k_decomposition: dict = field(default_factory=dict)

    @property
    def k(self) -> int:
        return sum(self.k_decomposition.values())

    def chain_violations(self) -> list[str]:
        """Links of LB <= D <= OPT <= UB <= ALG that are theorems, checked where present."""
        out = []
        if self.exact_opt is not None:
            if self.size_lb > self.exact_opt:
                out.append("size bound exceeds optimum")
            if self.heuristic_ub is not None and self.exact_opt > self.heuristic_ub:
                out.append("optimum exceeds heuristic bound")
            if self.dual_objective is not None and self.dual_feasible and self.dual_objective > self.exact_opt:
                out.append("feasible dual objective exceeds optimum")
        if self.peak is not None and self.peak > self.alg_bins:
            out.append("fewer bins than the schedule's peak")
        return out

    def to_json(self) -> dict:
        d = self.dual_objective
        return {"alg_bins": self.alg_bins, "size_lb": self.size_lb, "peak": self.peak,
                "exact_opt": self.exact_opt, "heuristic_ub": self.heuristic_ub,
                "dual_objective": None if d is None else f"{d.numerator}/{d.denominator}",
                "dual_feasible": self.dual_feasible, "K": self.k, "K_decomposition": self.k_decomposition}


def bound_report(schedule, packing, audit: RematchAudit | None = None, cert: DualCertificate | None = None,
                 exact_limit: int = DEFAULT_EXACT_LIMIT, pair_limit: int = DEFAULT_PAIR_LIMIT,
                 method: str = "search") -> BoundReport:
    sizes = [e.size for e in schedule.entries]
    rep = BoundReport(packing.num_bins, size_lower_bound(sizes), peak_utilization(schedule),
                      heuristic_ub=first_fit_decreasing(sizes),
                      k_decomposition=audit.k_decomposition() if audit else {})
    if len(sizes) <= exact_limit:
        rep.exact_opt = exact_optimal_bins(sizes, exact_limit)
    if cert is not None:
        rep.dual_objective = cert.objective
        rep.dual_feasible = check_dual_feasibility(cert, pair_limit=pair_limit, method=method)
    return rep


def certify_ratio(report: BoundReport) -> bool:
    """True iff a feasible dual objective covers 11/16 of the bins beyond K."""
    if report.dual_objective is None or not report.dual_feasible:
        return False
    return report.dual_objective >= TARGET * (report.alg_bins - report.k)
