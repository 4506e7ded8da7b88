"""Reach each terminal case and check its dual certificate.

Palettes steer the rematcher into different end states; two small
hand-built streams cover the Quarter-heavy and Medium-heavy cases.

    python3 demos/certificates.py
"""
from fractions import Fraction as F

from mpas.core import Item
from mpas.bench import gen_palette
from mpas.oracle import bound_report, build_dual_certificate, certify_ratio
from mpas.rematch import rematch_result
from mpas.scheduler import schedule_stream

runs = {
    "small palette": gen_palette(2000, 1, "small"),
    "third palette": gen_palette(2000, 1, "third"),
    "large palette": gen_palette(2000, 1, "large"),
    "quarter fixture": [Item(i, F(26, 100)) for i in range(330)] + [Item(330 + i, F(6, 10)) for i in range(10)],
    "medium fixture": [Item(i, F(46, 100)) for i in range(200)] + [Item(200 + i, F(6, 10)) for i in range(40)],
}
for label, items in runs.items():
    res = schedule_stream(items, seed=1)
    packing, audit = rematch_result(res)
    cert = build_dual_certificate(res.schedule.entries, audit)
    br = bound_report(res.schedule, packing, audit, cert, exact_limit=0)
    print(f"{label}: case {cert.case}, ALG {br.alg_bins}, K {br.k}, dual {float(cert.objective):.2f}, "
          f"feasible {br.dual_feasible}, certified {certify_ratio(br)}")
    for size, weight, count in cert.table()[:4]:
        print(f"    size {str(size):>8}  weight {str(weight):>8}  x{count}")
