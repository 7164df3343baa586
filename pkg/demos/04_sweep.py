"""The epsilon sweep of v1 on a seeded instance with a Slater point.

Writes sweep.csv and sweep.svg next to the working directory.
"""
import sys

from ciplab import cli, corpus
from ciplab.duality import geometric_schedule, limiting_value, lsc_hull_v, strong_duality_check

seed = int(sys.argv[1]) if len(sys.argv) > 1 else 1
p, truth = corpus.slater_family(seed)

sweep = limiting_value(p, geometric_schedule(1.0, 0.5, 16))
for e, v in zip(sweep.epsilons, sweep.values):
    print(f"{e:10.3e}  {v: .8f}")
print("limit", sweep.limit_estimate, "reference", truth.primal)
print("lsc hull of v at 0:", lsc_hull_v(p))

# Under a strong Slater point, P = max D1 = limit, with D1 attained
v = strong_duality_check(p)
print("P", v.primal, "D1", v.d1, "attained", v.attained)

with open("sweep.csv", "w") as fh:
    fh.write(cli.sweep_csv(sweep))
with open("sweep.svg", "w") as fh:
    fh.write(cli.sweep_svg(sweep))
