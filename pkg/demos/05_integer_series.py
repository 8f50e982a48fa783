"""
Integer series: a testing code from experience
==============================================

While condition E holds, the organisms are paid for printing an integer
and punished for anything else. From the codes they were punished and
rewarded for, they learn a testing code and then refuse any change that
fails it.
"""

import sys

from diagself.diagonal import SearchBudget, integer_output_test, negative_diagonalize
from diagself.dsl import to_text
from diagself.engine import RunConfig, run
from diagself.experiments import (
    ExperimentSpec, Family, punished_after_adoption, samples_equivalent, samples_from_events,
)

seed = int(sys.argv[1]) if len(sys.argv) > 1 else 0
cfg = RunConfig(seed=seed, capacity=16, generations=300,
                experiment=ExperimentSpec(Family.INTEGER_SERIES))
report, log = run(cfg)
events = log.events()

rejected, retained = samples_from_events(events)
print(f"{len(rejected)} rejected and {len(retained)} retained codes, e.g.")
print("  rejected:", ", ".join(to_text(c) for c in rejected[:4]))
print("  retained:", ", ".join(to_text(c) for c in retained[:4]))

n = negative_diagonalize(rejected, retained, SearchBudget(max_size=4))
ref = integer_output_test().code
print("\nseparating testing code:", to_text(n.code))
print("agrees with", to_text(ref), "on the sample:",
      samples_equivalent(n.code, ref, rejected + retained))

print("\nadopted testing-code rules:")
for policy in sorted({a[2] for a in report.adoptions if "UseTestingCode" in a[2]}):
    trials, bad = punished_after_adoption(events, policy, 50)
    print(f"  {policy}: {trials} trials in the next 50 generations, {bad} punished")
