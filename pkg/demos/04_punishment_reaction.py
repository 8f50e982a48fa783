"""
A punishment reaction becomes a rule
====================================

Organisms start out correct on a constant target. Any recursor they push
breaks the output and is punished on the next trial. Before any rule is
adopted they step back after a punishment only half of the time; once
their own history shows "punished, then stepped back" often enough, the
rule is adopted and followed every time.
"""

import sys
from fractions import Fraction

from diagself.engine import RunConfig, run
from diagself.experiments import (
    ExperimentSpec, Family, adoption_fraction, reactions_after_punishment, report_metrics,
)

seed = int(sys.argv[1]) if len(sys.argv) > 1 else 0
cfg = RunConfig(seed=seed, capacity=16, generations=300, p_react=Fraction(1, 2),
                epsilon_explore=Fraction(1, 2),
                experiment=ExperimentSpec(Family.PUNISHMENT_ESTABLISHMENT))
report, log = run(cfg)
events = log.events()
rule = "RewardNeg -> StepBackNewestDeactivate"

metrics = report_metrics(events, cfg.generations)
print("first adoption per rule:")
for policy, g in sorted(metrics["first_adoption"].items(), key=lambda kv: kv[1]):
    print(f"  gen {g:3d}  {policy}")

for g in (0, 50, 100, 200, 299):
    row = report.rows[g]
    print(f"gen {g:3d}: punishments {row['punishments']:3d}, mean points {row['mean_points']}")

print(f"\nholders among survivors: {adoption_fraction(report.final_population, rule):.0%}")
follow = reactions_after_punishment(events, rule)
print(f"punished trials after adoption: {len(follow)}, "
      f"followed by a step-back: {sum(a == 'StepBackDeactivate' for a in follow)}")
