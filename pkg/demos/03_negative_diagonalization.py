"""
Learning what to avoid
======================

Given codes that were punished and codes that were not, negative
diagonalization looks for the simplest testing code answering (lit 0) on
every rejected code and (lit 1) on every retained one.
"""

from diagself.diagonal import (
    SearchBudget, behavioral_test, integer_output_test, negative_diagonalize,
)
from diagself.dsl import parse_text, to_text

P = parse_text

rejected = [P("(pair (lit 1) (lit 2))"), P("(selfcode)"), P("(pair (input) (lit 0))")]
retained = [P("(lit 3)"), P("(input)"), P("(add (input) (lit 1))")]

n = negative_diagonalize(rejected, retained, SearchBudget(max_size=4))
print("testing code:", to_text(n.code))
for c in rejected + retained:
    print(f"  {to_text(c):28s} -> {behavioral_test(n, c)}")

# The hand-written test "does this code print an integer when run on (lit 0)?"
ref = integer_output_test()
print("\nreference:", to_text(ref.code))
for c in rejected + retained:
    print(f"  {to_text(c):28s} -> {behavioral_test(ref, c)}")
