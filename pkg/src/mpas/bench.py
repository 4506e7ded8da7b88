"""Stream generators and the end-to-end experiment harness."""
from __future__ import annotations

import csv
import json
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .core import (Item, packing_to_json, peak_utilization, read_items_jsonl,
                   validate_packing, write_items_jsonl)
from .oracle import (DEFAULT_EXACT_LIMIT, DEFAULT_PAIR_LIMIT, CertificateError, OracleLimitError, bound_report,
                     build_dual_certificate, certify_ratio, exact_optimal_bins, size_lower_bound)
from .rematch import rematch_result
from .scheduler import result_to_json, schedule_stream

HARD_SIZES = (Fraction(3438, 10000), Fraction(3438, 10000), Fraction(2501, 10000), Fraction(623, 10000))
THIRD, TWO_THIRDS = Fraction(1, 3), Fraction(2, 3)

# size palettes for structured runs; a few dozen distinct sizes keeps certificates searchable
PALETTES = {
    "small": (20, 45, 70, 90, 105, 120, 150, 180, 200, 220, 240, 255, 280, 300, 320),
    "third": (335, 338, 340, 342, 236, 180, 90),
    "large": (520, 560, 590, 610, 650, 680, 700, 800, 120, 230, 300, 340, 400),
    "mixed": (60, 120, 260, 300, 335, 342, 350, 380, 420, 480, 520, 560, 600, 650, 690, 750),
    "medium": (30, 100, 210, 240, 262, 290, 310, 336, 345, 370, 410, 470, 510, 545, 580, 620, 660, 700, 900),
}


class GeneratorError(ValueError):
    pass


@dataclass
class StreamSpec:
    generator: str
    n: int
    seed: int = 0
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n < 1 and self.generator != "fixed_file":
            raise GeneratorError("n must be at least 1")


def gen_hard_input(n: int) -> list[Item]:
    if n < 1:
        raise GeneratorError("n must be at least 1")
    return [Item(4 * k + j, s) for k in range(n) for j, s in enumerate(HARD_SIZES)]


def gen_thirds_then_two_thirds(n: int, long: bool = True) -> list[Item]:
    items = [Item(i, THIRD) for i in range(n)]
    if long:
        items += [Item(n + i, TWO_THIRDS) for i in range(n)]
    return items


def gen_uniform_random(n: int, seed: int, grid: int = 1000) -> list[Item]:
    rng = np.random.default_rng(seed)
    ks = rng.integers(1, grid + 1, size=n)
    return [Item(i, Fraction(int(k), grid)) for i, k in enumerate(ks)]


def gen_palette(n: int, seed: int, mix: str = "mixed") -> list[Item]:
    try:
        pal = PALETTES[mix]
    except KeyError:
        raise GeneratorError(f"unknown palette {mix!r}; choose from {sorted(PALETTES)}") from None
    rng = np.random.default_rng(seed)
    picks = rng.integers(0, len(pal), size=n)
    return [Item(i, Fraction(pal[int(j)], 1000)) for i, j in enumerate(picks)]


def generate(spec: StreamSpec) -> tuple[list[Item], int | None, str]:
    """Items, analytic optimum when known, and the name of that reference."""
    g, n, p = spec.generator, spec.n, spec.params
    try:
        if g == "hard_appendix_a":
            return gen_hard_input(n), n, "analytic"
        if g == "adversary_13_23":
            return gen_thirds_then_two_thirds(n), n, "analytic"
        if g == "yao":
            if n % 3:
                raise GeneratorError("yao streams need n divisible by 3")
            short = bool(np.random.default_rng(spec.seed).random() < 0.4)
            return gen_thirds_then_two_thirds(n, long=not short), (n // 3 if short else n), "analytic"
        if g == "uniform_random":
            return gen_uniform_random(n, spec.seed, int(p.get("grid", 1000))), None, ""
        if g == "palette":
            return gen_palette(n, spec.seed, p.get("mix", "mixed")), None, ""
        if g == "fixed_file":
            with open(p["path"]) as fh:
                return read_items_jsonl(fh), None, ""
    except GeneratorError:
        raise
    except Exception as ex:  # noqa: BLE001
        raise GeneratorError(f"generator {g!r} failed: {ex}") from ex
    raise GeneratorError(f"unknown generator {g!r}")


GENERATORS = ("hard_appendix_a", "adversary_13_23", "yao", "uniform_random", "palette", "fixed_file")


@dataclass
class ExperimentReport:
    spec: StreamSpec
    n_items: int
    alg_bins: int
    peak: int
    opt_reference: int
    opt_kind: str
    ratio: float
    size_lb: int
    k_decomposition: dict
    case: int | None
    valid: bool
    violations: list
    certificate: str  # "certified", "infeasible", "below bound", "skipped: ..."
    dual_objective: str | None
    wall_time: float

    @property
    def k(self) -> int:
        return sum(self.k_decomposition.values())

    @property
    def ok(self) -> bool:
        """No invariant violated: packing valid, bins cover the peak, certificate not refuted."""
        return self.valid and self.alg_bins >= self.peak and self.certificate not in ("infeasible", "below bound")

    def to_json(self) -> dict:
        d = asdict(self)
        d["K"] = self.k
        d["ok"] = self.ok
        return d

    CSV_FIELDS = ("generator", "n", "seed", "n_items", "alg_bins", "peak", "opt_reference", "opt_kind", "ratio",
                  "size_lb", "K", "case", "valid", "certificate", "wall_time")

    def csv_row(self) -> dict:
        return {"generator": self.spec.generator, "n": self.spec.n, "seed": self.spec.seed,
                "n_items": self.n_items, "alg_bins": self.alg_bins, "peak": self.peak,
                "opt_reference": self.opt_reference, "opt_kind": self.opt_kind, "ratio": f"{self.ratio:.6f}",
                "size_lb": self.size_lb, "K": self.k, "case": self.case, "valid": self.valid,
                "certificate": self.certificate, "wall_time": f"{self.wall_time:.3f}"}


def run_experiment(spec: StreamSpec, out_dir: str | Path | None = None, exact_limit: int = DEFAULT_EXACT_LIMIT,
                   pair_limit: int = DEFAULT_PAIR_LIMIT, certify: bool = True) -> ExperimentReport:
    """Schedule, rematch, bound and (when a case is detected) certify one stream."""
    t0 = time.perf_counter()
    items, opt, opt_kind = generate(spec)
    res = schedule_stream(items, seed=spec.seed)
    packing, audit = rematch_result(res)
    rep = validate_packing(packing, res.schedule)
    sizes = [it.size for it in items]
    lb = size_lower_bound(sizes)
    if opt is None:
        if len(items) <= exact_limit:
            opt, opt_kind = exact_optimal_bins(sizes, exact_limit), "exact"
        else:
            opt, opt_kind = lb, "size_lb"
    cert_status, dual = "skipped: not requested", None
    cert = None
    if certify and items:
        try:
            cert = build_dual_certificate(res.schedule.entries, audit)
            br = bound_report(res.schedule, packing, audit, cert, exact_limit=0, pair_limit=pair_limit,
                              method="auto")
            dual = str(br.dual_objective)
            if not br.dual_feasible:
                cert_status = "infeasible"
            else:
                cert_status = "certified" if certify_ratio(br) else "below bound"
        except (CertificateError, OracleLimitError) as ex:
            cert_status = f"skipped: {ex}"
    peak = peak_utilization(res.schedule)
    report = ExperimentReport(spec, len(items), packing.num_bins, peak, opt, opt_kind,
                              packing.num_bins / opt if opt else 1.0, lb, audit.k_decomposition(), audit.case,
                              rep.ok, rep.violations()[:20], cert_status, dual,
                              time.perf_counter() - t0)
    if out_dir is not None:
        d = Path(out_dir)
        d.mkdir(parents=True, exist_ok=True)
        with open(d / "items.jsonl", "w") as fh:
            write_items_jsonl(items, fh)
        _dump(d / "schedule.json", result_to_json(res, spec.seed))
        _dump(d / "packing.json", packing_to_json(packing))
        _dump(d / "audit.json", audit.to_json())
        _dump(d / "report.json", report.to_json())
        if cert is not None:
            _dump(d / "certificate.json", cert.to_json())
    return report


def _dump(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=1, default=str)


def _run_one(args):
    spec, out_dir, kw = args
    return run_experiment(spec, out_dir, **kw)


def run_bench(generator: str, n: int, seed: int, trials: int, out_dir=None, jobs: int = 1, params=None,
              **kw) -> list[ExperimentReport]:
    """``trials`` experiments with seeds ``seed, seed+1, ...``; CSV and JSON under ``out_dir``."""
    specs = [StreamSpec(generator, n, seed + t, dict(params or {})) for t in range(trials)]
    dirs = [None if out_dir is None else Path(out_dir) / f"run-{s.seed}" for s in specs]
    args = [(s, d, kw) for s, d in zip(specs, dirs)]
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(jobs) as ex:
            reports = list(ex.map(_run_one, args))
    else:
        reports = [_run_one(a) for a in args]
    if out_dir is not None:
        d = Path(out_dir)
        d.mkdir(parents=True, exist_ok=True)
        with open(d / "report.csv", "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=ExperimentReport.CSV_FIELDS)
            w.writeheader()
            for r in reports:
                w.writerow(r.csv_row())
        _dump(d / "reports.json", [r.to_json() for r in reports])
    return reports


__all__ = ["StreamSpec", "ExperimentReport", "GENERATORS", "PALETTES", "generate", "gen_hard_input",
           "gen_uniform_random", "gen_palette", "gen_thirds_then_two_thirds", "run_experiment", "run_bench"]
