"""
Diagonalization over a memory
=============================

An organism remembers the codes it has been. Diagonalizing means finding
the simplest recursor that maps each remembered code to the next one. If a
history is littered with punished attempts, fading their weight to zero
leaves the clean sequence, and the search gives the same answer.
"""

from fractions import Fraction

import numpy as np

from diagself.diagonal import (
    SearchBudget, find_fitting_recursor, project_history, scoped_diagonalize,
    select_weighted_subsequence,
)
from diagself.dsl import lit, parse_text, run, to_text
from diagself.organism import ActionTag, HistoryEntry

budget = SearchBudget(max_size=3)

for seq in ([lit(1), lit(2), lit(3)], [lit(2), lit(4), lit(8)], [lit(7)] * 3):
    r = find_fitting_recursor(seq, budget)
    print(" -> ".join(map(to_text, seq)), " fitted by ", to_text(r))

# A clean arithmetic run with failed attempts in between
memory = []
for i in range(1, 5):
    memory.append(HistoryEntry(lit(i), ActionTag.EMIT, reward=1))
    memory.append(HistoryEntry(parse_text("(pair (lit 0) (lit 0))"), ActionTag.EMIT,
                               reward=-1, weight=Fraction(0)))

raw = [e.snapshot for e in memory]
print("\nwith the failures left in:", find_fitting_recursor(raw, budget))
faded = select_weighted_subsequence(memory, True, np.random.default_rng(0))
print("after fading:", [to_text(c) for c in faded])
print("fitted by:", to_text(find_fitting_recursor(faded, budget)))

# Only one part of the code matters: diagonalize at an address
memory = [HistoryEntry(parse_text(f"(pair (lit {j}) (lit 9))"), ActionTag.EMIT) for j in (1, 2, 3)]
print("\nprojection at [0]:", [to_text(c) for c in project_history(memory, [0])])
r = scoped_diagonalize(memory, [0], budget)
print("lifted recursor:", to_text(r))
print("applied to (pair (lit 3) (lit 9)):", run(r, parse_text("(pair (lit 3) (lit 9))")))
