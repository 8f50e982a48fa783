"""
Codes, the interpreter and shortest-first enumeration
=====================================================

Every program is a small tree. Running it is always safe: the interpreter
has a fuel budget, and anything that loops or goes wrong comes back as a
bottom value instead of raising.
"""

from diagself.dsl import enumerate_codes, make_replacing_recursor, parse_text, run, size, to_text

# A recursor that increments its input
inc = parse_text("(add (input) (lit 1))")
print(to_text(inc), "size", size(inc))
print("on (lit 4):", run(inc, parse_text("(lit 4)")))

# Self-application never terminates; fuel catches it
loop = parse_text("(apply (selfcode) (input))")
print("self-application:", run(loop, parse_text("(lit 0)"), fuel=1000))

# Apply runs a quoted code as a program, so codes are data too
print("apply:", run(parse_text("(apply (quote (mul (input) (input))) (lit 7))"), parse_text("(lit 0)")))

# "Use s instead of c" is just a quote
s = parse_text("(pair (lit 1) (lit 2))")
print("replacing recursor:", to_text(make_replacing_recursor(s)), "->", run(make_replacing_recursor(s), parse_text("(lit 9)")))

# The first codes in canonical order
for i, c in enumerate(enumerate_codes(2, lit_range=1)):
    if i >= 12:
        break
    print(f"{i:3d}  {to_text(c)}")

counts = [sum(1 for c in enumerate_codes(n, 2) if size(c) == n) for n in range(1, 5)]
print("codes per size (lit_range 2):", counts)
