"""Randomised check of the functional inequalities behind the thresholds.

Each case samples band-limited random fields and reports the largest ratio of
left to right side seen, against the constant being tested.
"""
from detmodes.inequalities import CASES, default_case, run_campaign

for r in run_campaign([default_case(n) for n in CASES], sample_count=500):
    print(f"{r.case.name:<20} max ratio {r.max_ratio:.4f}  bound {r.case.constant_bound:.4f}  "
          f"violations {len(r.violations)}")
