"""Rewarding function bookkeeping, punishment reaction and choice tables."""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction
from math import gcd
from typing import Hashable, Mapping

from .dsl import REWARD
from .organism import EventLog, NoActiveRecursor, Organism, StepBackMode, annotate_last, step_back

FrequencyTable = Mapping[Hashable, int]
WeightTable = Mapping[Hashable, Fraction]


class EmptyTable(ValueError):
    pass


class AllZero(ValueError):
    pass


@dataclass(frozen=True)
class RewardAssessment:
    points: int
    reason: str = ""

    @property
    def punishment(self) -> bool:
        return self.points < 0


def assess_and_register(o: Organism, a: RewardAssessment) -> Organism:
    """Credit ``a`` to the ledger, the REWARD register and the newest memory entry.

    The register write is what makes the assessment noticeable on the next
    activation.
    """
    registers = dict(o.registers)
    registers[REWARD] = a.points
    o = replace(o, points=o.points + a.points, registers=registers)
    if o.memory:
        o = annotate_last(o, reward=o.memory[-1].reward + a.points, assessed=True)
    else:
        o = replace(o, ledger_base=o.ledger_base + a.points)
    return o


def is_dead(o: Organism, death_threshold: int) -> bool:
    return o.points <= death_threshold


def punishment_reaction(o: Organism, p_react, rng, mode: StepBackMode = StepBackMode.DEACTIVATE,
                        generation: int = 0, log: EventLog | None = None) -> Organism:
    """After a punishment, step back the newest active recursor with probability p_react.

    Passing ``p_react=1`` is how an adopted reaction policy is executed.
    """
    if o.registers.get(REWARD, 0) >= 0:
        return o
    if p_react < 1 and not rng.random() < float(p_react):
        return o
    try:
        return step_back(o, mode, generation, log)
    except NoActiveRecursor:
        return o


def freq_prob(t: FrequencyTable, option) -> Fraction:
    total = sum(t.values())
    if total <= 0:
        raise EmptyTable("no activations recorded")
    return Fraction(t.get(option, 0), total)


def weight_prob(t: WeightTable, option) -> Fraction:
    total = sum(Fraction(w) for w in t.values())
    if total <= 0:
        raise AllZero("all weights are zero")
    return Fraction(t.get(option, 0)) / total


def weighted_choice(t: WeightTable, rng):
    """Draw an option with probability w/sum(w), exactly.

    Weights are brought to a common denominator and a single integer is drawn,
    so the only approximation is the generator's own uniformity.
    """
    items = [(k, Fraction(w)) for k, w in t.items()]
    if any(w < 0 for _, w in items):
        raise ValueError("negative weight")
    den = 1
    for _, w in items:
        den = den * w.denominator // gcd(den, w.denominator)
    ints = [(k, int(w * den)) for k, w in items]
    total = sum(n for _, n in ints)
    if total == 0:
        raise AllZero("all weights are zero")
    x = int(rng.integers(0, total))
    for k, n in ints:
        if x < n:
            return k
        x -= n
    raise AssertionError("unreachable")  # pragma: no cover


def adjust_weight(t: WeightTable, option, delta) -> dict:
    out = {k: Fraction(w) for k, w in t.items()}
    out[option] = max(Fraction(0), out.get(option, Fraction(0)) + Fraction(delta))
    return out
