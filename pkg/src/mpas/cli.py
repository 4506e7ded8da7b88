"""Command-line entry point: ``mpas <subcommand> ...``.

Every subcommand exits with status 1 when an invariant is violated and 2 on
usage errors.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import catalog as cat_mod
from .adversary import POLICIES, eval_yao, make_policy, run_adversary_13_23
from .bench import GENERATORS, PALETTES, StreamSpec, generate, run_bench, run_experiment
from .core import packing_from_json, packing_to_json, read_items_jsonl, validate_packing
from .oracle import (DEFAULT_EXACT_LIMIT, DEFAULT_PAIR_LIMIT, CertificateError, OracleLimitError, bound_report,
                     build_dual_certificate, certify_ratio)
from .rematch import rematch_result, replay_recipe_layouts
from .scheduler import result_from_json, result_to_json, schedule_stream


def _write_json(path: Path | None, obj):
    text = json.dumps(obj, indent=1, default=str)
    if path is None:
        print(text)
    else:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)


def _spec_params(args) -> dict:
    p = {}
    if getattr(args, "input", None):
        p["path"] = args.input
    if getattr(args, "mix", None):
        p["mix"] = args.mix
    if getattr(args, "grid", None):
        p["grid"] = args.grid
    return p


def cmd_schedule(args) -> int:
    if args.input:
        with open(args.input) as fh:
            items = read_items_jsonl(fh)
    else:
        items, _, _ = generate(StreamSpec(args.generator, args.n, args.seed, _spec_params(args)))
    res = schedule_stream(items, seed=args.seed)
    out = Path(args.out_dir) / "schedule.json" if args.out_dir else None
    _write_json(out, result_to_json(res, args.seed))
    if out:
        print(f"scheduled {len(items)} items -> {out}")
    return 0


def cmd_rematch(args) -> int:
    res = result_from_json(json.loads(Path(args.schedule).read_text()))
    packing, audit = rematch_result(res)
    rep = validate_packing(packing, res.schedule)
    out = Path(args.out_dir) if args.out_dir else Path(args.schedule).parent
    _write_json(out / "packing.json", packing_to_json(packing))
    _write_json(out / "audit.json", audit.to_json())
    print(f"{packing.num_bins} bins, K = {audit.k} {audit.k_decomposition()}, case {audit.case}")
    for v in rep.violations():
        print("violation:", v, file=sys.stderr)
    return 0 if rep.ok else 1


def cmd_bench(args) -> int:
    reports = run_bench(args.generator, args.n, args.seed, args.trials, args.out_dir, jobs=args.jobs,
                        params=_spec_params(args), exact_limit=args.exact_opt_limit, pair_limit=args.pair_limit,
                        certify=not args.no_certify)
    bad = 0
    for r in reports:
        print(f"seed {r.spec.seed}: items {r.n_items} bins {r.alg_bins} peak {r.peak} "
              f"ref {r.opt_reference} ({r.opt_kind}) ratio {r.ratio:.4f} K {r.k} case {r.case} "
              f"valid {r.valid} certificate {r.certificate} [{r.wall_time:.2f}s]")
        bad += not r.ok
    if args.out_dir:
        print(f"reports in {args.out_dir}/report.csv")
    return 1 if bad else 0


def cmd_verify_catalog(args) -> int:
    t = time.perf_counter()
    rows = cat_mod.check_table()
    fails = cat_mod.catalog_selfcheck()
    replay = replay_recipe_layouts()
    if args.verbose:
        for r in rows:
            print(r.line())
        for r in replay:
            print(r.line())
    if args.dump:
        with open(args.dump, "w") as fh:
            cat_mod.dump_catalog(fh)
    bad_replay = [r for r in replay if not r.ok]
    for f in fails:
        print("FAIL", f)
    for r in bad_replay:
        print(r.line())
    print(f"{len(rows)} inequalities, {len(replay)} layout replays, "
          f"{len(fails) + len(bad_replay)} failures in {time.perf_counter() - t:.2f}s")
    return 1 if fails or bad_replay else 0


def cmd_adversary(args) -> int:
    if args.yao:
        rep = eval_yao(args.policy, args.n, args.trials, args.seed, stratified=not args.unstratified)
        print(f"yao policy {rep.policy} n {rep.n} trials {rep.trials} (short {rep.short_trials}) "
              f"expected ratio {rep.mean:.4f} 95% CI [{rep.ci95[0]:.4f}, {rep.ci95[1]:.4f}]")
        return 0
    r = run_adversary_13_23(make_policy(args.policy, args.seed), args.n)
    print(f"policy {r.policy} n {r.n}: middle placements {r.middle}, second phase {r.phase2}, "
          f"peak {r.peak}, OPT {r.opt}, ratio {r.ratio:.4f}")
    return 0


def cmd_certify(args) -> int:
    d = Path(args.run_dir)
    res = result_from_json(json.loads((d / "schedule.json").read_text()))
    packing, audit = rematch_result(res)
    stored = d / "packing.json"
    if stored.exists():
        if packing_from_json(json.loads(stored.read_text())).bins != packing.bins:
            print("stored packing differs from the recomputed one", file=sys.stderr)
            return 1
    rep = validate_packing(packing, res.schedule)
    if not rep.ok:
        for v in rep.violations():
            print("violation:", v, file=sys.stderr)
        return 1
    try:
        cert = build_dual_certificate(res.schedule.entries, audit)
        br = bound_report(res.schedule, packing, audit, cert, exact_limit=args.exact_opt_limit,
                          pair_limit=args.pair_limit, method=args.method)
    except (CertificateError, OracleLimitError) as ex:
        print(f"no verdict: {ex}", file=sys.stderr)
        return 1
    ok = certify_ratio(br)
    _write_json(d / "certificate.json", cert.to_json())
    _write_json(d / "bounds.json", br.to_json())
    print(f"case {cert.case}: dual objective {float(br.dual_objective):.4f}, feasible {br.dual_feasible}, "
          f"11/16 (ALG - K) = {11 / 16 * (br.alg_bins - br.k):.4f} -> {'certified' if ok else 'NOT certified'}")
    return 0 if ok and not br.chain_violations() else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mpas", description="Online appointment scheduling with rematching.")
    sub = ap.add_subparsers(dest="command", required=True)

    def stream_args(p, default_gen="uniform_random"):
        p.add_argument("--generator", choices=GENERATORS, default=default_gen)
        p.add_argument("--n", type=int, default=1000)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--mix", choices=sorted(PALETTES), help="palette for --generator palette")
        p.add_argument("--grid", type=int, help="size grid for uniform_random")
        p.add_argument("--input", help="items JSONL (implies fixed_file)")
        p.add_argument("--out-dir")

    p = sub.add_parser("schedule", help="stream -> schedule JSON")
    stream_args(p)
    p.set_defaults(func=cmd_schedule)

    p = sub.add_parser("rematch", help="schedule JSON -> packing + audit")
    p.add_argument("schedule")
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_rematch)

    p = sub.add_parser("bench", help="run experiments; CSV/JSON reports")
    stream_args(p)
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--exact-opt-limit", type=int, default=DEFAULT_EXACT_LIMIT)
    p.add_argument("--pair-limit", type=int, default=DEFAULT_PAIR_LIMIT)
    p.add_argument("--no-certify", action="store_true")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("verify-catalog", help="check every catalog inequality and recipe layout")
    p.add_argument("-v", "--verbose", action="store_true")
    p.add_argument("--dump", help="write the catalog as JSON")
    p.set_defaults(func=cmd_verify_catalog)

    p = sub.add_parser("adversary", help="1/3-2/3 adversary or Yao evaluation")
    p.add_argument("--policy", choices=sorted(POLICIES), default="mpas")
    p.add_argument("--n", type=int, default=3000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--yao", action="store_true")
    p.add_argument("--trials", type=int, default=500)
    p.add_argument("--unstratified", action="store_true")
    p.set_defaults(func=cmd_adversary)

    p = sub.add_parser("certify", help="run directory -> certificate verdict")
    p.add_argument("run_dir")
    p.add_argument("--exact-opt-limit", type=int, default=DEFAULT_EXACT_LIMIT)
    p.add_argument("--pair-limit", type=int, default=DEFAULT_PAIR_LIMIT)
    p.add_argument("--method", choices=("search", "dp", "auto"), default="auto")
    p.set_defaults(func=cmd_certify)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "input", None) and args.command == "bench":
        args.generator = "fixed_file"
    try:
        return args.func(args)
    except (ValueError, OSError) as ex:
        print(f"error: {ex}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
