"""Compare modelled gate counts with the classical grid baseline as the grid grows.

Run: python3 demos/05_resource_crossover.py
"""
from qburgers.resources import cost_table, crossover_scan

b = cost_table(3, 12, 3, 10.0, 2.0, 0.01)
print(f"Cost breakdown, n=3, n_x=12, m=3 ({b.label}):")
for row, v in b.counts.items():
    print(f"  {row:32s} {v:12.4g}")

print("\nGrid size where the modelled quantum total drops below 4**n_x:")
for n in (3, 4, 5, 6):
    coarse = crossover_scan(n, 3, 10.0, 2.0, 0.01, range(4, 41))
    full = crossover_scan(n, None, 10.0, 2.0, 0.01, range(4, 41))
    print(f"  n={n}: coarse-grained m=3 -> n_x={coarse.crossover_n_x}, no coarse-graining -> n_x={full.crossover_n_x}")
