"""Play the 1/3 then 2/3 game against each deterministic policy.

A policy that parks a 1/3 item in the middle of the day blocks both
positions a later 2/3 item could take.  If it does that often, the
adversary follows up with 2/3 items; if it never does, the 1/3 items
alone already cost more than the optimum.

    python3 demos/adversary_game.py [n]
"""
import sys

from mpas.adversary import POLICIES, eval_yao, make_policy, run_adversary_13_23

n = int(sys.argv[1]) if len(sys.argv) > 1 else 1500
print(f"n = {n} items of size 1/3")
for name, cls in POLICIES.items():
    if not cls.deterministic:
        continue
    r = run_adversary_13_23(make_policy(name, 0), n)
    follow = "sends 2/3 items" if r.phase2 else "stops"
    print(f"  {name:10s} middle {r.middle:5d}; adversary {follow:15s} peak {r.peak:5d} / OPT {r.opt:5d} = {r.ratio:.4f}")

print("\nrandom input: short sequence with probability 2/5, long otherwise")
for name in ("first-fit", "edge-only", "mpas-randomized"):
    y = eval_yao(name, n, 100, seed=1)
    print(f"  {name:16s} expected ratio {y.mean:.4f}  95% CI [{y.ci95[0]:.4f}, {y.ci95[1]:.4f}]")
