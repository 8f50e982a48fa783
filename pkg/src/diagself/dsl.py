"""Minimal code language: tree-shaped programs that double as data.

Every value the interpreter produces is itself a :class:`Code`, so programs
can inspect, build and run other programs (and themselves, via ``selfcode``).
Evaluation is bounded by a shared fuel counter and never raises; failures come
back as a bottom :class:`EvalOutcome`.
"""

from __future__ import annotations

import enum
import sys
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterator, Mapping


class Kind(enum.IntEnum):
    LIT = 0
    INPUT = 1
    SELFCODE = 2
    ENV = 3
    QUOTE = 4
    PAIR = 5
    FIRST = 6
    SECOND = 7
    ADD = 8
    MUL = 9
    ISLIT = 10
    ISPAIR = 11
    EQCODE = 12
    IF = 13
    APPLY = 14
    KIND = 15
    GET = 16
    PUT = 17


ARITY = {
    Kind.LIT: 0, Kind.INPUT: 0, Kind.SELFCODE: 0, Kind.ENV: 0,
    Kind.QUOTE: 1, Kind.PAIR: 2, Kind.FIRST: 1, Kind.SECOND: 1,
    Kind.ADD: 2, Kind.MUL: 2, Kind.ISLIT: 1, Kind.ISPAIR: 1,
    Kind.EQCODE: 2, Kind.IF: 3, Kind.APPLY: 2, Kind.KIND: 1,
    Kind.GET: 2, Kind.PUT: 3,
}
ALL_KINDS = tuple(Kind)
NAMES = {k: k.name.lower() for k in Kind}
BY_NAME = {v: k for k, v in NAMES.items()}

# Register ids readable through (env i).
REWARD = 0
COND_E = 1
AGE = 2
REGISTER_IDS = (REWARD, COND_E, AGE)

# Lit arithmetic is kept inside signed 64-bit range; overflow is a type error.
INT_MAX = 2**63 - 1


class Code:
    """Immutable tree node. Structural equality, cached hash and size."""

    __slots__ = ("kind", "payload", "children", "_hash", "_size")

    def __init__(self, kind: Kind, payload: int | None = None, children: tuple = ()):
        kind = Kind(kind)
        children = tuple(children)
        if len(children) != ARITY[kind]:
            raise ValueError(
                f"{NAMES[kind]} takes {ARITY[kind]} children, got {len(children)}")
        if kind in (Kind.LIT, Kind.ENV):
            if not isinstance(payload, int) or isinstance(payload, bool):
                raise ValueError(f"{NAMES[kind]} requires an integer payload")
            if kind is Kind.ENV and payload not in REGISTER_IDS:
                raise ValueError(f"unknown register id {payload}")
        elif payload is not None:
            raise ValueError(f"{NAMES[kind]} takes no payload")
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "payload", payload)
        object.__setattr__(self, "children", children)
        object.__setattr__(self, "_hash", hash((kind, payload, children)))
        object.__setattr__(self, "_size", 1 + sum(c._size for c in children))

    def __setattr__(self, name, value):
        raise AttributeError("Code is immutable")

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, Code):
            return NotImplemented
        return (self._hash == other._hash and self.kind == other.kind
                and self.payload == other.payload and self.children == other.children)

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"Code<{to_text(self)}>"

    def __reduce__(self):
        return (Code, (self.kind, self.payload, self.children))


def lit(n: int) -> Code:
    return Code(Kind.LIT, n)


def node(kind: Kind, *children: Code) -> Code:
    return Code(kind, None, children)


def size(c: Code) -> int:
    """Node count; the simplicity measure used by every search."""
    return c._size


TRUE = lit(1)
FALSE = lit(0)


# -- evaluation ----------------------------------------------------------------

class Bottom(enum.Enum):
    FUEL_EXHAUSTED = "FuelExhausted"
    TYPE_ERROR = "TypeError"
    BAD_ADDRESS = "BadAddress"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class EvalOutcome:
    value: Code | None = None
    bottom: Bottom | None = None

    def __post_init__(self):
        if (self.value is None) == (self.bottom is None):
            raise ValueError("exactly one of value/bottom must be set")

    @property
    def ok(self) -> bool:
        return self.value is not None

    def __str__(self):
        return to_text(self.value) if self.ok else str(self.bottom)


@dataclass(frozen=True)
class EvalContext:
    input: Code
    self_code: Code
    registers: Mapping[int, int] = field(
        default_factory=lambda: {REWARD: 0, COND_E: 0, AGE: 0})
    fuel: int = 1000


class _Stop(Exception):
    def __init__(self, tag: Bottom):
        self.tag = tag


class _Interpreter:
    __slots__ = ("fuel", "registers")

    def __init__(self, fuel, registers):
        self.fuel = fuel
        self.registers = registers

    def run(self, c: Code, inp: Code, me: Code) -> Code:
        if self.fuel <= 0:
            raise _Stop(Bottom.FUEL_EXHAUSTED)
        self.fuel -= 1
        k = c.kind
        if k is Kind.LIT:
            return c
        if k is Kind.INPUT:
            return inp
        if k is Kind.SELFCODE:
            return me
        if k is Kind.QUOTE:
            return c.children[0]
        if k is Kind.ENV:
            try:
                return lit(self.registers[c.payload])
            except KeyError:
                raise _Stop(Bottom.BAD_ADDRESS) from None
        if k is Kind.IF:
            cond = self.run(c.children[0], inp, me)
            branch = c.children[2] if cond == FALSE else c.children[1]
            return self.run(branch, inp, me)
        args = [self.run(ch, inp, me) for ch in c.children]
        if k is Kind.PAIR:
            return Code(Kind.PAIR, None, args)
        if k is Kind.FIRST or k is Kind.SECOND:
            v = args[0]
            if v.kind is not Kind.PAIR:
                raise _Stop(Bottom.TYPE_ERROR)
            return v.children[0 if k is Kind.FIRST else 1]
        if k is Kind.ADD or k is Kind.MUL:
            a, b = args
            if a.kind is not Kind.LIT or b.kind is not Kind.LIT:
                raise _Stop(Bottom.TYPE_ERROR)
            r = a.payload + b.payload if k is Kind.ADD else a.payload * b.payload
            if abs(r) > INT_MAX:
                raise _Stop(Bottom.TYPE_ERROR)
            return lit(r)
        if k is Kind.ISLIT:
            return TRUE if args[0].kind is Kind.LIT else FALSE
        if k is Kind.ISPAIR:
            return TRUE if args[0].kind is Kind.PAIR else FALSE
        if k is Kind.EQCODE:
            return TRUE if args[0] == args[1] else FALSE
        if k is Kind.KIND:
            return lit(int(args[0].kind))
        if k is Kind.APPLY:
            prog, arg = args
            return self.run(prog, arg, prog)
        if k is Kind.GET:
            a, i = args
            return a.children[self._index(a, i)]
        if k is Kind.PUT:
            a, i, b = args
            j = self._index(a, i)
            kids = a.children[:j] + (b,) + a.children[j + 1:]
            return Code(a.kind, a.payload, kids)
        raise AssertionError(k)  # pragma: no cover

    @staticmethod
    def _index(a: Code, i: Code) -> int:
        if i.kind is not Kind.LIT:
            raise _Stop(Bottom.TYPE_ERROR)
        if not 0 <= i.payload < len(a.children):
            raise _Stop(Bottom.BAD_ADDRESS)
        return i.payload


def _ensure_stack(fuel: int) -> None:
    # Each interpreter frame costs at least one unit of fuel.
    need = fuel + 500
    if sys.getrecursionlimit() < need:
        sys.setrecursionlimit(need)


def evaluate(program: Code, ctx: EvalContext) -> EvalOutcome:
    """Run ``program`` on ``ctx.input``; deterministic and total."""
    _ensure_stack(ctx.fuel)
    interp = _Interpreter(ctx.fuel, ctx.registers)
    try:
        return EvalOutcome(value=interp.run(program, ctx.input, ctx.self_code))
    except _Stop as stop:
        return EvalOutcome(bottom=stop.tag)


def run(program: Code, inp: Code, fuel: int = 1000, registers=None) -> EvalOutcome:
    """Shorthand for evaluating ``program`` as its own self-code."""
    regs = registers if registers is not None else {REWARD: 0, COND_E: 0, AGE: 0}
    return evaluate(program, EvalContext(inp, program, regs, fuel))


def make_replacing_recursor(s: Code) -> Code:
    """Recursor meaning "use ``s`` instead of whatever came before"."""
    return node(Kind.QUOTE, s)


# -- addresses -------------------------------------------------------------------

def subcode(c: Code, path) -> Code | None:
    for i in path:
        if not 0 <= i < len(c.children):
            return None
        c = c.children[i]
    return c


def replace_at(c: Code, path, new: Code) -> Code:
    path = list(path)
    if not path:
        return new
    i = path[0]
    kids = list(c.children)
    kids[i] = replace_at(kids[i], path[1:], new)
    return Code(c.kind, c.payload, kids)


# -- enumeration -----------------------------------------------------------------

def payload_order(lit_range: int) -> list[int]:
    """0, 1, -1, 2, -2, ... up to +/- lit_range."""
    out = [0]
    for m in range(1, lit_range + 1):
        out += [m, -m]
    return out


def _kinds_key(kinds) -> tuple:
    return tuple(sorted({Kind(k) for k in kinds}))


@lru_cache(maxsize=None)
def _codes_of_size(n: int, lit_range: int, kinds: tuple) -> tuple:
    if n < 1:
        return ()
    out = []
    for k in kinds:
        arity = ARITY[k]
        if arity == 0:
            if n != 1:
                continue
            if k is Kind.LIT:
                out += [lit(p) for p in payload_order(lit_range)]
            elif k is Kind.ENV:
                out += [Code(Kind.ENV, r) for r in REGISTER_IDS]
            else:
                out.append(Code(k))
        elif n - 1 >= arity:
            out += [Code(k, None, kids) for kids in _children(arity, n - 1, lit_range, kinds)]
    return tuple(out)


def _children(arity: int, total: int, lit_range: int, kinds: tuple) -> Iterator[tuple]:
    # The last child is the most significant position in the ordering.
    if arity == 1:
        for c in _codes_of_size(total, lit_range, kinds):
            yield (c,)
        return
    for last in range(1, total - arity + 2):
        tails = _codes_of_size(last, lit_range, kinds)
        if not tails:
            continue
        for t in tails:
            for head in _children(arity - 1, total - last, lit_range, kinds):
                yield head + (t,)


def codes_of_size(n: int, lit_range: int = 1, kinds=ALL_KINDS) -> tuple:
    return _codes_of_size(n, lit_range, _kinds_key(kinds))


def enumerate_codes(max_size: int, lit_range: int = 1, kinds=ALL_KINDS) -> Iterator[Code]:
    """Every well-formed code of size <= max_size, in canonical order.

    Canonical order: ascending size; then kind order; then Lit payloads as
    0, 1, -1, 2, -2, ...; then children compared from the last child to the
    first, each child by its own canonical position.
    """
    if not kinds:
        raise ValueError("kind set must be nonempty")
    key = _kinds_key(kinds)
    for n in range(1, max_size + 1):
        yield from _codes_of_size(n, lit_range, key)


# -- text format -----------------------------------------------------------------

def to_text(c: Code) -> str:
    parts = [NAMES[c.kind]]
    if c.payload is not None:
        parts.append(str(c.payload))
    parts += [to_text(ch) for ch in c.children]
    return "(" + " ".join(parts) + ")"


class ParseError(ValueError):
    def __init__(self, msg: str, pos: int):
        super().__init__(f"{msg} at position {pos}")
        self.msg = msg
        self.pos = pos


def parse_text(s: str) -> Code:
    """Parse the canonical s-expression form produced by :func:`to_text`."""
    c, pos = _parse(s, 0)
    if pos != len(s):
        raise ParseError("trailing characters", pos)
    return c


def _parse(s: str, pos: int) -> tuple[Code, int]:
    if pos >= len(s) or s[pos] != "(":
        raise ParseError("expected '('", pos)
    start = pos
    pos += 1
    end = pos
    while end < len(s) and s[end].isalpha():
        end += 1
    name = s[pos:end]
    if name not in BY_NAME:
        raise ParseError(f"unknown kind {name!r}", pos)
    kind = BY_NAME[name]
    pos = end
    payload = None
    if kind in (Kind.LIT, Kind.ENV):
        if pos >= len(s) or s[pos] != " ":
            raise ParseError("expected ' ' before payload", pos)
        pos += 1
        end = pos + (1 if s[pos:pos + 1] == "-" else 0)
        digits = end
        while end < len(s) and s[end].isdigit():
            end += 1
        if end == digits:
            raise ParseError("expected integer payload", pos)
        payload = int(s[pos:end])
        pos = end
    kids = []
    while pos < len(s) and s[pos] == " ":
        child, pos = _parse(s, pos + 1)
        kids.append(child)
    if pos >= len(s) or s[pos] != ")":
        raise ParseError("expected ')'", pos)
    if len(kids) != ARITY[kind]:
        raise ParseError(
            f"arity mismatch: {name} takes {ARITY[kind]} children, got {len(kids)}", start)
    try:
        return Code(kind, payload, kids), pos + 1
    except ValueError as exc:
        raise ParseError(str(exc), start) from None
