"""The 1/3-2/3 lower-bound game.

A policy answers each request (an item size) with a start time.  The
adaptive adversary sends ``n`` items of size 1/3, counts how many the
policy put in the middle of the day, and follows up with ``n`` items of
size 2/3 when that count reaches ``n/5``.  Yao evaluation instead draws the
short or the long sequence from a fixed distribution.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .core import FirstFitBins, Item, Schedule, ScheduledItem, peak_utilization, place
from .scheduler import Scheduler

THIRD = Fraction(1, 3)
TWO_THIRDS = Fraction(2, 3)
MIDDLE_FRACTION = Fraction(1, 5)
P_SHORT = Fraction(2, 5)


class PolicyError(ValueError):
    pass


class Policy:
    """Online responder: ``place(item) -> ScheduledItem``."""
    name = "policy"
    deterministic = True
    seed_independent = False  # same answers whatever the seed

    def place(self, item: Item) -> ScheduledItem:
        raise NotImplementedError


class MPASPolicy(Policy):
    """The online scheduler with a fixed seed, hence a deterministic responder."""
    name = "mpas"

    def __init__(self, seed: int = 0):
        self.sched = Scheduler(seed)

    def place(self, item):
        return self.sched.schedule_item(item)


class RandomizedMPASPolicy(MPASPolicy):
    """Same scheduler, flagged as randomized: its coins are part of the strategy."""
    name = "mpas-randomized"
    deterministic = False


class FirstFitIntervalPolicy(Policy):
    """Naive baseline: first bin whose packed prefix leaves room; start at that prefix."""
    name = "first-fit"
    seed_independent = True

    def __init__(self, seed: int = 0):
        self.bins = FirstFitBins()

    def place(self, item):
        _, start = self.bins.insert(item.size)
        return place(item, start)


class EdgeOnlyPolicy(Policy):
    """Never uses the middle: alternates 1/3 items between the two edges."""
    name = "edge-only"
    seed_independent = True

    def __init__(self, seed: int = 0):
        self.k = 0

    def place(self, item):
        self.k += 1
        return place(item, 0 if self.k % 2 else 1 - item.size)


POLICIES = {p.name: p for p in (MPASPolicy, RandomizedMPASPolicy, FirstFitIntervalPolicy, EdgeOnlyPolicy)}


def make_policy(name: str, seed: int = 0) -> Policy:
    try:
        return POLICIES[name](seed)
    except KeyError:
        raise PolicyError(f"unknown policy {name!r}; choose from {sorted(POLICIES)}") from None


def is_middle(e: ScheduledItem) -> bool:
    """A 1/3 item clashes with both edge placements of a 2/3 item."""
    return 0 < e.start < TWO_THIRDS


@dataclass
class AdversaryResult:
    policy: str
    n: int
    middle: int
    phase2: bool
    peak: int
    opt: int
    stream: list

    @property
    def ratio(self) -> float:
        return self.peak / self.opt


def _play(policy: Policy, sizes, first_id=0):
    out = []
    for i, s in enumerate(sizes):
        out.append(policy.place(Item(first_id + i, s)))
    return out


def run_adversary_13_23(policy: Policy, n: int) -> AdversaryResult:
    if n <= 0 or n % 15:
        raise PolicyError("n must be a positive multiple of 15")
    if not policy.deterministic:
        raise PolicyError(f"policy {policy.name!r} is randomized; use eval_yao")
    placed = _play(policy, [THIRD] * n)
    middle = sum(map(is_middle, placed))
    phase2 = middle >= n * MIDDLE_FRACTION
    if phase2:
        placed += _play(policy, [TWO_THIRDS] * n, first_id=n)
    peak = peak_utilization(Schedule(tuple(placed)))
    opt = n if phase2 else n // 3
    return AdversaryResult(policy.name, n, middle, phase2, peak, opt, [e.item for e in placed])


@dataclass
class YaoReport:
    policy: str
    n: int
    trials: int
    short_trials: int
    mean: float
    ci95: tuple[float, float]
    stratified: bool


def eval_yao(policy_factory, n: int, trials: int, seed: int = 0, stratified: bool = True) -> YaoReport:
    """Mean of peak/OPT when the short sequence has probability 2/5.

    With ``stratified`` the trial budget is split in proportion 2:3 (the
    count of short trials is rounded), so a deterministic responder gets its
    exact expectation; otherwise each trial draws its sequence at random.
    """
    if trials <= 0:
        raise PolicyError("trials must be positive")
    if n <= 0 or n % 3:
        raise PolicyError("n must be a positive multiple of 3")
    if isinstance(policy_factory, str):
        name = policy_factory
        policy_factory = lambda s: make_policy(name, s)  # noqa: E731
    rng = np.random.default_rng(seed)
    if stratified:
        n_short = round(P_SHORT * trials)
        kinds = [True] * n_short + [False] * (trials - n_short)
    else:
        kinds = list(rng.random(trials) < float(P_SHORT))
    seeds = rng.integers(0, 2**63 - 1, size=trials)
    ratios = []
    label = None
    cache = {}
    for short, s in zip(kinds, seeds):
        pol = policy_factory(int(s))
        label = pol.name
        if pol.seed_independent and short in cache:
            ratios.append(cache[short])
            continue
        placed = _play(pol, [THIRD] * n)
        if not short:
            placed += _play(pol, [TWO_THIRDS] * n, first_id=n)
        opt = n // 3 if short else n
        r = peak_utilization(Schedule(tuple(placed))) / opt
        if pol.seed_independent:
            cache[short] = r
        ratios.append(r)
    arr = np.asarray(ratios)
    if stratified:
        p = float(P_SHORT)
        parts = [(p, arr[:sum(kinds)]), (1 - p, arr[sum(kinds):])]
        parts = [(w, a) for w, a in parts if len(a)]
        total_w = sum(w for w, _ in parts)
        mean = sum(w * a.mean() for w, a in parts) / total_w
        var = sum((w / total_w) ** 2 * (a.var(ddof=1) / len(a) if len(a) > 1 else 0.0) for w, a in parts)
    else:
        mean = float(arr.mean())
        var = float(arr.var(ddof=1) / len(arr)) if len(arr) > 1 else 0.0
    half = 1.96 * math.sqrt(var)
    return YaoReport(label, n, trials, sum(kinds), float(mean), (float(mean - half), float(mean + half)), stratified)
