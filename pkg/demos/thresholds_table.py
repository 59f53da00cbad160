"""Print mode and node thresholds for a damped Kolmogorov flow.

Both counts grow linearly in F/(mu nu); nodes scale with the domain area as well.
"""
from detmodes import TorusGeometry, modes_damped, nodes_damped

geo = TorusGeometry()
nu, mu = 0.05, 0.5
print(f"{'F/(mu nu)':>10} {'modes':>7} {'nodes':>7}")
for ratio in (1, 3, 10, 30, 100):
    F = ratio * mu * nu
    m = modes_damped(F, mu, nu, geo).required_count
    N = nodes_damped(F, mu, nu, geo).required_count
    print(f"{ratio:>10} {m:>7d} {N:>7d}")
