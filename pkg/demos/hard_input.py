"""Walk through the pipeline on the hard input family.

Each block of four items (two of 0.3438, one of 0.2501, one of 0.0623)
fits exactly into one bin offline, so the optimum is n.  The online
scheduler cannot know that and ends up with about 1.4377 n bins.

    python3 demos/hard_input.py [n]
"""
import sys
from collections import Counter
from fractions import Fraction

from mpas import peak_utilization, validate_packing
from mpas.bench import gen_hard_input
from mpas.oracle import bound_report, build_dual_certificate, certify_ratio
from mpas.rematch import rematch_result
from mpas.scheduler import schedule_stream

n = int(sys.argv[1]) if len(sys.argv) > 1 else 297
items = gen_hard_input(n)
res = schedule_stream(items, seed=0)
print(f"{len(items)} items scheduled online; peak utilization {peak_utilization(res.schedule)}")
print("complete sets by category:", dict(Counter(s.category.id for s in res.complete_sets)))

packing, audit = rematch_result(res)
assert validate_packing(packing, res.schedule).ok
print(f"\nfinal bins {packing.num_bins} = {packing.num_bins / n:.4f} n "
      f"(427/297 = {427 / 297:.4f}); case {audit.case}, K = {audit.k}")
for g, count in Counter((g.step, g.recipe) for g in audit.groups).most_common():
    print(f"  {count:5d} x {g[0]:8s} {g[1]}")

cert = build_dual_certificate(res.schedule.entries, audit)
br = bound_report(res.schedule, packing, audit, cert, exact_limit=0)
print(f"\ndual objective {cert.objective} (weights equal sizes), feasible {br.dual_feasible}")
print(f"11/16 (ALG - K) = {Fraction(11, 16) * (br.alg_bins - br.k)} <= {cert.objective}: {certify_ratio(br)}")
