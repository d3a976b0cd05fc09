# Does a bigger population learn faster?
#
# A small sweep over population sizes, repeated over a few master seeds.
# Each cell gets its own CSV; the medians land in summary.csv.

import tempfile
from pathlib import Path

from neatbird.harness import SweepSpec, run_sweep

out = Path(tempfile.mkdtemp())
report = run_sweep(SweepSpec(population_sizes=(20, 60, 100, 160), generations=30, seeds=(0, 1, 2)), out)

print("population  median avg  median max  first spike")
for p in report.populations:
    print(f"{p.population:10d}  {p.median_average_score:10.2f}  {p.median_max_score:10.0f}  {p.first_spike_generation}")
print((out / "summary.csv").read_text())
print("chart:", out / "summary.svg")
