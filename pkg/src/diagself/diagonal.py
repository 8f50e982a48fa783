"""Shortest-first searches over codes.

Forward diagonalization finds the simplest recursor mapping each code of a
sequence to its successor. Negative diagonalization finds the simplest
testing code separating rejected codes from retained ones. Policy fitting
checks condition/action rules against an organism's recorded history.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Iterator, Sequence

from .dsl import (
    ALL_KINDS, FALSE, TRUE, Bottom, Code, EvalContext, Kind, enumerate_codes,
    evaluate, lit, node, subcode, to_text,
)
from .organism import ActionTag, HistoryEntry

ZERO_REGISTERS = {0: 0, 1: 0, 2: 0}


class SequenceTooShort(ValueError):
    pass


class OverlappingSamples(ValueError):
    pass


class NotATestingCode(ValueError):
    pass


@dataclass(frozen=True)
class SearchBudget:
    max_size: int = 4
    max_candidates: int = 1_000_000
    fuel_per_eval: int = 200
    lit_range: int = 2
    kinds: tuple = ALL_KINDS

    def __post_init__(self):
        for name in ("max_size", "max_candidates", "fuel_per_eval"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.lit_range < 0:
            raise ValueError("lit_range must be non-negative")
        if not self.kinds:
            raise ValueError("kinds must be nonempty")
        object.__setattr__(self, "kinds", tuple(sorted({Kind(k) for k in self.kinds})))

    def candidates(self) -> Iterator[Code]:
        for i, c in enumerate(enumerate_codes(self.max_size, self.lit_range, self.kinds)):
            if i >= self.max_candidates:
                return
            yield c


def _apply(r: Code, c: Code, fuel: int):
    return evaluate(r, EvalContext(c, r, ZERO_REGISTERS, fuel))


# -- forward diagonalization -------------------------------------------------------

def fits(r: Code, seq: Sequence[Code], fuel: int = 200) -> bool:
    if len(seq) < 2:
        raise SequenceTooShort("fit needs at least two codes")
    for a, b in zip(seq, seq[1:]):
        out = _apply(r, a, fuel)
        if out.value != b:
            return False
    return True


def _transitions(seq) -> list[tuple[Code, Code]] | None:
    """Distinct (c_i, c_i+1) pairs, or None if c_i has two successors."""
    succ: dict[Code, Code] = {}
    for a, b in zip(seq, seq[1:]):
        if succ.setdefault(a, b) != b:
            return None
    return list(succ.items())


@lru_cache(maxsize=4096)
def _find(seq: tuple, budget: SearchBudget) -> Code | None:
    pairs = _transitions(seq)
    if pairs is None:
        return None
    fuel = budget.fuel_per_eval
    for r in budget.candidates():
        for a, b in pairs:
            if _apply(r, a, fuel).value != b:
                break
        else:
            return r
    return None


def find_fitting_recursor(seq: Sequence[Code], budget: SearchBudget = SearchBudget()) -> Code | None:
    """Canonically-first code of minimal size fitting ``seq``, or None.

    A code mapped to two different successors can't be fitted by any
    deterministic recursor, so that case returns None without searching.
    """
    if len(seq) < 2:
        raise SequenceTooShort("diagonalization needs at least two codes")
    return _find(tuple(seq), budget)


# -- fading and highlighting -------------------------------------------------------

def select_weighted_indices(memory: Sequence[HistoryEntry], exclude_punished: bool, rng) -> list[int]:
    # One draw per entry whatever the outcome, so streams stay aligned.
    out = []
    for i, e in enumerate(memory):
        u = rng.random()
        if exclude_punished and e.punished:
            continue
        if u < min(1.0, float(e.weight)):
            out.append(i)
    return out


def select_weighted_subsequence(memory: Sequence[HistoryEntry], exclude_punished: bool, rng) -> list[Code]:
    """Snapshots of the entries kept, in order; gaps are simply closed."""
    return [memory[i].snapshot for i in select_weighted_indices(memory, exclude_punished, rng)]


def update_weights(memory: Sequence[HistoryEntry], included: Iterable[int], outcome_reward: int,
                   alpha, clamp_punished: bool = False) -> tuple[HistoryEntry, ...]:
    alpha = Fraction(alpha)
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie strictly between 0 and 1")
    factor = 1 + alpha if outcome_reward >= 0 else 1 - alpha
    included = set(included)
    out = []
    for i, e in enumerate(memory):
        w = e.weight
        if i in included:
            w = w * factor
        if clamp_punished and e.punished:
            w = Fraction(0)
        out.append(e if w == e.weight else replace(e, weight=w))
    return tuple(out)


# -- address-scoped diagonalization ------------------------------------------------

def project_history(memory: Sequence[HistoryEntry], theta) -> list[Code]:
    out = []
    for e in memory:
        sub = subcode(e.snapshot, theta)
        if sub is not None:
            out.append(sub)
    return out


def lift_recursor(sub: Code, theta) -> Code:
    """Full-code recursor applying ``sub`` to the part at address ``theta``."""
    theta = list(theta)
    if not theta:
        return sub
    i = lit(theta[0])
    inner = lift_recursor(sub, theta[1:])
    return node(Kind.PUT, node(Kind.INPUT), i,
                node(Kind.APPLY, node(Kind.QUOTE, inner), node(Kind.GET, node(Kind.INPUT), i)))


def scoped_diagonalize(memory: Sequence[HistoryEntry], theta, budget: SearchBudget = SearchBudget()) -> Code | None:
    seq = project_history(memory, theta)
    if len(seq) < 2:
        raise SequenceTooShort(f"only {len(seq)} snapshots have address {list(theta)}")
    sub = find_fitting_recursor(seq, budget)
    return None if sub is None else lift_recursor(sub, theta)


# -- negative diagonalization ------------------------------------------------------

@dataclass(frozen=True)
class TestingCode:
    """A code that answered Lit(1) or Lit(0) on every probed input."""

    code: Code

    __test__ = False  # not a pytest class

    @classmethod
    def checked(cls, code: Code, sample: Iterable[Code] = (), fuel: int = 200) -> "TestingCode":
        for x in sample:
            out = _apply(code, x, fuel)
            if out.value not in (TRUE, FALSE):
                raise NotATestingCode(f"answered {out} on a probe")
        return cls(code)


def separates(n: Code, rejected, retained, fuel: int = 200) -> bool:
    return (all(_apply(n, r, fuel).value == FALSE for r in rejected)
            and all(_apply(n, r, fuel).value == TRUE for r in retained))


@lru_cache(maxsize=4096)
def _separate(rejected: tuple, retained: tuple, budget: SearchBudget) -> Code | None:
    fuel = budget.fuel_per_eval
    for n in budget.candidates():
        if separates(n, rejected, retained, fuel):
            return n
    return None


def negative_diagonalize(rejected: Sequence[Code], retained: Sequence[Code],
                         budget: SearchBudget = SearchBudget()) -> TestingCode | None:
    """Simplest n with n(r) = Lit(0) on every rejected r and Lit(1) on every retained r."""
    both = set(rejected) & set(retained)
    if both:
        raise OverlappingSamples(f"{len(both)} code(s) are both rejected and retained")
    n = _separate(tuple(rejected), tuple(retained), budget)
    return None if n is None else TestingCode(n)


def integer_output_test(probe: Code = lit(0)) -> TestingCode:
    """n(r) = True iff running r on ``probe`` outputs an integer."""
    return TestingCode(node(Kind.ISLIT, node(Kind.APPLY, node(Kind.INPUT), node(Kind.QUOTE, probe))))


def behavioral_test(n: TestingCode | Code, r: Code, fuel: int = 200) -> bool | Bottom:
    code = n.code if isinstance(n, TestingCode) else n
    out = _apply(code, r, fuel)
    if not out.ok:
        return out.bottom
    if out.value == TRUE:
        return True
    if out.value == FALSE:
        return False
    raise NotATestingCode(f"answered {out}")


# -- policies ----------------------------------------------------------------------

class Condition(enum.Enum):
    REWARD_NEG = "RewardNeg"
    REWARD_POS = "RewardPos"
    COND_E = "CondE"
    NEW_RECURSOR_JUST_PUSHED = "NewRecursorJustPushed"
    ALWAYS = "Always"


class PolicyAction(enum.Enum):
    STEP_BACK_NEWEST_DEACTIVATE = "StepBackNewestDeactivate"
    STEP_BACK_NEWEST_DELETE = "StepBackNewestDelete"
    EXCLUDE_PUNISHED_FROM_DIAGONAL = "ExcludePunishedFromDiagonal"
    DIAGONALIZE_NOW = "DiagonalizeNow"
    USE_TESTING_CODE = "UseTestingCode"


# Order of discovery; Always is accepted on hand-written rules only.
DISCOVERABLE_CONDITIONS = (Condition.REWARD_NEG, Condition.REWARD_POS,
                           Condition.COND_E, Condition.NEW_RECURSOR_JUST_PUSHED)
PARAMETERLESS_ACTIONS = (PolicyAction.STEP_BACK_NEWEST_DEACTIVATE, PolicyAction.STEP_BACK_NEWEST_DELETE,
                         PolicyAction.EXCLUDE_PUNISHED_FROM_DIAGONAL, PolicyAction.DIAGONALIZE_NOW)


@dataclass(frozen=True)
class PolicyRule:
    condition: Condition
    action: PolicyAction
    testing_code: TestingCode | None = None
    weight: Fraction = field(default=Fraction(1), compare=False)
    adopted_at: int | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.weight < 0:
            raise ValueError("policy weight must be non-negative")
        if (self.action is PolicyAction.USE_TESTING_CODE) != (self.testing_code is not None):
            raise ValueError("UseTestingCode needs a testing code, other actions must not carry one")

    def __str__(self):
        act = self.action.value
        if self.testing_code is not None:
            act += f"({to_text(self.testing_code.code)})"
        return f"{self.condition.value} -> {act}"


def condition_holds(cond: Condition, previous: HistoryEntry | None, cond_e: int) -> bool:
    if cond is Condition.ALWAYS:
        return True
    if cond is Condition.COND_E:
        return cond_e == 1
    if previous is None:
        return False
    if cond is Condition.REWARD_NEG:
        return previous.reward < 0
    if cond is Condition.REWARD_POS:
        return previous.reward > 0
    return previous.action is ActionTag.PUSH_RECURSOR


def action_matches(p: PolicyRule, e: HistoryEntry) -> bool:
    a = p.action
    if a is PolicyAction.STEP_BACK_NEWEST_DEACTIVATE:
        return e.action is ActionTag.STEP_BACK_DEACTIVATE
    if a is PolicyAction.STEP_BACK_NEWEST_DELETE:
        return e.action is ActionTag.STEP_BACK_DELETE
    if a is PolicyAction.DIAGONALIZE_NOW:
        return e.action is ActionTag.DIAGONALIZE
    if a is PolicyAction.EXCLUDE_PUNISHED_FROM_DIAGONAL:
        return e.action is ActionTag.DIAGONALIZE and e.excluded_punished
    return e.testing_code == p.testing_code.code


def fit_policy(history: Sequence[HistoryEntry], p: PolicyRule, min_support: int = 3) -> bool:
    support = 0
    for i, e in enumerate(history):
        prev = history[i - 1] if i > 0 else None
        if not condition_holds(p.condition, prev, e.cond_e):
            continue
        if not action_matches(p, e):
            return False
        support += 1
    return support >= min_support


def enumerate_policies(testing_pool: Sequence[TestingCode] = ()) -> Iterator[PolicyRule]:
    for cond in DISCOVERABLE_CONDITIONS:
        for act in PARAMETERLESS_ACTIONS:
            yield PolicyRule(cond, act)
        for n in testing_pool:
            yield PolicyRule(cond, PolicyAction.USE_TESTING_CODE, n)
