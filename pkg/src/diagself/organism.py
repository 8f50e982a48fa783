"""Organisms: a base code plus an old-to-new stack of recursors.

The effective code of an organism is the base transformed by each active
recursor in turn, oldest first. Operations are value-like: they return new
organisms and leave their argument untouched.
"""

from __future__ import annotations

import enum
import threading
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable

from .dsl import AGE, COND_E, REWARD, Bottom, Code, EvalContext, EvalOutcome, evaluate, to_text


class ActionTag(enum.Enum):
    PUSH_RECURSOR = "PushRecursor"
    STEP_BACK_DELETE = "StepBackDelete"
    STEP_BACK_DEACTIVATE = "StepBackDeactivate"
    DIAGONALIZE = "Diagonalize"
    PROLIFERATE = "Proliferate"
    NON_SYM_PROLIFERATE = "NonSymProliferate"
    EMIT = "Emit"
    NOOP = "NoOp"

    def __str__(self):
        return self.value


STEP_BACKS = (ActionTag.STEP_BACK_DELETE, ActionTag.STEP_BACK_DEACTIVATE)


class StepBackMode(enum.Enum):
    DELETE = "Delete"
    DEACTIVATE = "Deactivate"


class NoActiveRecursor(Exception):
    pass


class ProliferationFailed(Exception):
    def __init__(self, bottom: Bottom):
        super().__init__(f"recursor evaluation failed: {bottom}")
        self.bottom = bottom


@dataclass(frozen=True)
class RecursorEntry:
    code: Code
    active: bool = True
    born_at: int = 0


@dataclass(frozen=True)
class HistoryEntry:
    """One step of an organism's memory.

    ``assessed`` marks the entries that received a trial reward; those carry
    the trial ``output`` and are the ones whose snapshots form the sequence
    to be diagonalized.
    """

    snapshot: Code
    action: ActionTag
    reward: int = 0
    weight: Fraction = Fraction(1)
    assessed: bool = False
    output: Code | None = None
    cond_e: int = 0
    testing_code: Code | None = None
    excluded_punished: bool = False

    def __post_init__(self):
        if self.weight < 0:
            raise ValueError("weight must be non-negative")

    @property
    def punished(self) -> bool:
        return self.reward < 0


def default_registers() -> dict[int, int]:
    return {REWARD: 0, COND_E: 0, AGE: 0}


@dataclass(frozen=True, eq=False)
class Organism:
    id: int
    base: Code
    stack: tuple[RecursorEntry, ...] = ()
    registers: dict = field(default_factory=default_registers)
    memory: tuple[HistoryEntry, ...] = ()
    points: int = 0
    adopted_policies: tuple = ()
    age: int = 0
    # points == ledger_base + sum of rewards in memory; absorbs splits and
    # entries dropped by the memory cap.
    ledger_base: int = 0
    parent: int | None = None
    testing_code: Code | None = None

    def ledger_ok(self) -> bool:
        return self.points == self.ledger_base + sum(e.reward for e in self.memory)

    def active_indices(self) -> list[int]:
        return [i for i, e in enumerate(self.stack) if e.active]


@dataclass(frozen=True)
class TransitionEvent:
    generation: int
    organism: int
    kind: str
    step: int = 0
    code: str | None = None
    reward: int | None = None
    points: int | None = None
    details: dict = field(default_factory=dict)

    def record(self) -> dict:
        out = {"generation": self.generation, "organism": self.organism,
               "step": self.step, "action": self.kind}
        if self.code is not None:
            out["code"] = self.code
        if self.reward is not None:
            out["reward"] = self.reward
        if self.points is not None:
            out["points"] = self.points
        if self.details:
            out["details"] = self.details
        return out


class EventLog:
    """Append-only sink ordered by (generation, organism, step)."""

    def __init__(self):
        self._events: list[TransitionEvent] = []
        self._steps: dict[tuple[int, int], int] = {}
        self._lock = threading.Lock()

    def emit(self, generation: int, organism: int, kind, code: Code | None = None,
             reward=None, points=None, **details) -> TransitionEvent:
        with self._lock:
            key = (generation, organism)
            step = self._steps.get(key, 0)
            self._steps[key] = step + 1
            ev = TransitionEvent(generation, organism, str(kind), step,
                                 to_text(code) if code is not None else None,
                                 reward, points, details)
            self._events.append(ev)
            return ev

    def events(self) -> list[TransitionEvent]:
        with self._lock:
            return sorted(self._events, key=lambda e: (e.generation, e.organism, e.step))

    def __len__(self):
        return len(self._events)


def _emit(log, generation, o, kind, code=None, **details):
    if log is not None:
        log.emit(generation, o.id, kind, code, points=o.points, **details)


# -- phenotype -------------------------------------------------------------------

def fold(base: Code, recursors, fuel: int, registers=None) -> EvalOutcome:
    """c0 = base, ck = eval(rk, input c(k-1)); the first bottom wins."""
    regs = registers if registers is not None else default_registers()
    cur = base
    for r in recursors:
        out = evaluate(r, EvalContext(cur, r, regs, fuel))
        if not out.ok:
            return out
        cur = out.value
    return EvalOutcome(value=cur)


def effective_code(o: Organism, fuel: int) -> EvalOutcome:
    return fold(o.base, [e.code for e in o.stack if e.active], fuel, o.registers)


# -- memory ----------------------------------------------------------------------

def remember(o: Organism, entry: HistoryEntry, max_memory: int | None = None) -> Organism:
    memory = o.memory + (entry,)
    base = o.ledger_base
    if max_memory is not None and len(memory) > max_memory:
        dropped = memory[:len(memory) - max_memory]
        base += sum(e.reward for e in dropped)
        memory = memory[len(dropped):]
    return replace(o, memory=memory, ledger_base=base)


def annotate_last(o: Organism, **changes) -> Organism:
    if not o.memory:
        raise ValueError("organism has no memory entry to annotate")
    last = replace(o.memory[-1], **changes)
    return replace(o, memory=o.memory[:-1] + (last,))


# -- transitions -----------------------------------------------------------------

def push_recursor(o: Organism, r: Code, generation: int = 0, log: EventLog | None = None) -> Organism:
    entry = RecursorEntry(r, True, generation)
    new = replace(o, stack=o.stack + (entry,))
    _emit(log, generation, new, ActionTag.PUSH_RECURSOR, r)
    return new


def step_back(o: Organism, mode: StepBackMode = StepBackMode.DEACTIVATE,
              generation: int = 0, log: EventLog | None = None) -> Organism:
    """Remove or deactivate the newest active recursor."""
    active = o.active_indices()
    if not active:
        raise NoActiveRecursor(f"organism {o.id} has no active recursor")
    i = active[-1]
    target = o.stack[i]
    if mode is StepBackMode.DELETE:
        stack = o.stack[:i] + o.stack[i + 1:]
        tag = ActionTag.STEP_BACK_DELETE
    else:
        stack = o.stack[:i] + (replace(target, active=False),) + o.stack[i + 1:]
        tag = ActionTag.STEP_BACK_DEACTIVATE
    new = replace(o, stack=stack)
    _emit(log, generation, new, tag, target.code)
    return new


def _reactivate_newest_inactive(o: Organism) -> Organism:
    # Test hook: undo the most recent Deactivate.
    for i in range(len(o.stack) - 1, -1, -1):
        if not o.stack[i].active:
            stack = o.stack[:i] + (replace(o.stack[i], active=True),) + o.stack[i + 1:]
            return replace(o, stack=stack)
    raise NoActiveRecursor("nothing to reactivate")


def _split_points(o: Organism) -> int:
    return o.points // 2


def _child(o: Organism, new_id: int, **changes) -> Organism:
    share = _split_points(o)
    rewards = sum(e.reward for e in o.memory)
    return replace(o, id=new_id, parent=o.id, points=share,
                   ledger_base=share - rewards, age=0,
                   registers=dict(o.registers), **changes)


def non_symmetric_proliferate(o: Organism, fuel: int, new_ids: Callable[[], int],
                              generation: int = 0, log: EventLog | None = None):
    """(r, c) -> {(r, c1), c} with c1 = eval(r, c).

    ``c`` is the fold of every active recursor except the newest one ``r``.
    Child A gets base c1 and keeps r as its only recursor; child B is c with
    an empty stack. Raises ProliferationFailed if c or c1 is bottom.
    """
    active = o.active_indices()
    if not active:
        raise NoActiveRecursor(f"organism {o.id} has no active recursor")
    r = o.stack[active[-1]].code
    older = [o.stack[i].code for i in active[:-1]]
    c = fold(o.base, older, fuel, o.registers)
    if not c.ok:
        raise ProliferationFailed(c.bottom)
    c1 = evaluate(r, EvalContext(c.value, r, o.registers, fuel))
    if not c1.ok:
        raise ProliferationFailed(c1.bottom)
    a = _child(o, new_ids(), base=c1.value, stack=(RecursorEntry(r, True, generation),))
    b = _child(o, new_ids(), base=c.value, stack=())
    _emit(log, generation, o, ActionTag.NON_SYM_PROLIFERATE, r, children=[a.id, b.id])
    return a, b


def symmetric_proliferate(o: Organism, new_ids: Callable[[], int],
                          generation: int = 0, log: EventLog | None = None):
    a = _child(o, new_ids())
    b = _child(o, new_ids())
    _emit(log, generation, o, ActionTag.PROLIFERATE, children=[a.id, b.id])
    return a, b


def cycles(memory) -> list[tuple[int, int]]:
    """Inclusive index intervals; every step-back closes the current cycle."""
    out = []
    start = 0
    for i, e in enumerate(memory):
        if e.action in STEP_BACKS:
            out.append((start, i))
            start = i + 1
    if start < len(memory):
        out.append((start, len(memory) - 1))
    return out
