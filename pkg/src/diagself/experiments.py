"""Environments: what organisms are asked to output and how they are paid.

Three families:

* ``SequencePrediction`` -- guess the next code of a stream. Generators:
  ``constant``, ``arithmetic`` (``(lit start + i*step)``) and ``address_copy``
  (a template whose part at ``theta`` persists from one target to the next
  while the part at ``vary`` holds ``(lit i)``).
* ``IntegerSeries`` -- any integer output is correct; condition E is on.
* ``PunishmentEstablishment`` -- organisms start out correct on a constant
  target, so any pushed recursor that changes the output is punished on the
  very next trial.

The trial input is the previous target (``(lit 0)`` at index 0) for sequence
prediction and ``(lit 0)`` otherwise.
"""

from __future__ import annotations

import enum
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .diagonal import behavioral_test
from .dsl import Code, EvalOutcome, Kind, lit, parse_text, replace_at
from .reward import RewardAssessment


class Family(enum.Enum):
    SEQUENCE_PREDICTION = "SequencePrediction"
    INTEGER_SERIES = "IntegerSeries"
    PUNISHMENT_ESTABLISHMENT = "PunishmentEstablishment"


class Generator(enum.Enum):
    CONSTANT = "constant"
    ARITHMETIC = "arithmetic"
    ADDRESS_COPY = "address_copy"


@dataclass(frozen=True)
class ExperimentSpec:
    family: Family = Family.SEQUENCE_PREDICTION
    generator: Generator = Generator.ARITHMETIC
    start: int = 1
    step: int = 1
    constant: Code = field(default_factory=lambda: lit(7))
    template: Code = field(default_factory=lambda: parse_text("(pair (lit 7) (lit 0))"))
    theta: tuple = (0,)
    vary: tuple = (1,)
    reward_correct: int = 1
    reward_wrong: int = -1
    initial_base: Code | None = None

    def __post_init__(self):
        if self.reward_wrong >= 0:
            raise ValueError("reward_wrong must be negative (a punishment)")
        if self.generator is Generator.ADDRESS_COPY:
            if list(self.theta) == list(self.vary)[:len(self.theta)] or \
                    list(self.vary) == list(self.theta)[:len(self.vary)]:
                raise ValueError("theta and vary must address disjoint parts")

    def base(self) -> Code:
        """Starting base code of every organism in the first generation."""
        if self.initial_base is not None:
            return self.initial_base
        if self.family is Family.PUNISHMENT_ESTABLISHMENT:
            return self.constant
        return lit(0)


@dataclass(frozen=True)
class Task:
    index: int
    input: Code
    target: Code | None  # None: any integer output is correct
    cond_e: int = 0


def _target(spec: ExperimentSpec, index: int) -> Code:
    if spec.family is Family.PUNISHMENT_ESTABLISHMENT or spec.generator is Generator.CONSTANT:
        return spec.constant
    if spec.generator is Generator.ARITHMETIC:
        return lit(spec.start + index * spec.step)
    return replace_at(spec.template, spec.vary, lit(index))


def make_task(spec: ExperimentSpec, index: int) -> Task:
    if index < 0:
        raise ValueError("task index must be non-negative")
    if spec.family is Family.INTEGER_SERIES:
        return Task(index, lit(0), None, cond_e=1)
    if spec.family is Family.PUNISHMENT_ESTABLISHMENT:
        return Task(index, lit(0), spec.constant)
    prev = _target(spec, index - 1) if index > 0 else lit(0)
    return Task(index, prev, _target(spec, index))


def evaluate_trial(spec: ExperimentSpec, task: Task, output: EvalOutcome) -> RewardAssessment:
    if not output.ok:
        return RewardAssessment(spec.reward_wrong, f"bottom:{output.bottom}")
    if task.target is None:
        ok = output.value.kind is Kind.LIT
        return RewardAssessment(spec.reward_correct if ok else spec.reward_wrong,
                                "integer" if ok else "non-integer")
    ok = output.value == task.target
    return RewardAssessment(spec.reward_correct if ok else spec.reward_wrong,
                            "match" if ok else "mismatch")


def collect_samples(memory) -> tuple[list[Code], list[Code]]:
    """Effective codes of assessed entries split by verdict: (rejected, retained).

    The samples are the codes that were tried, not what they printed: a
    testing code learned from them is applied to candidate codes before they
    are tried again. Duplicates are dropped, first occurrence kept. A code
    that was both punished and rewarded is kept on the rejected side only.
    Trials whose effective code was bottom produced no output and contribute
    nothing.
    """
    rejected, retained = {}, {}
    for e in memory:
        if not e.assessed or e.output is None:
            continue
        (rejected if e.punished else retained).setdefault(e.snapshot, None)
    return list(rejected), [c for c in retained if c not in rejected]


# -- event-log analysis ------------------------------------------------------------

def samples_from_events(events) -> tuple[list[Code], list[Code]]:
    """Like :func:`collect_samples`, over every trial recorded in a run's log."""
    rejected, retained = {}, {}
    for ev in events:
        if ev.kind != "Emit" or ev.code is None:
            continue
        c = parse_text(ev.details["effective"])
        (rejected if ev.reward < 0 else retained).setdefault(c, None)
    return list(rejected), [c for c in retained if c not in rejected]


def policy_holders(events) -> dict[int, dict[str, int]]:
    """Organism id -> {policy: generation from which it held it}.

    Replays Adopt events and passes each parent's holdings to the children
    named by its proliferation events.
    """
    holders: dict[int, dict[str, int]] = defaultdict(dict)
    for ev in events:
        if ev.kind == "Adopt":
            holders[ev.organism].setdefault(ev.details["policy"], ev.generation)
        elif ev.kind in ("Proliferate", "NonSymProliferate") and "children" in ev.details:
            for child in ev.details["children"]:
                holders[child] = dict(holders[ev.organism])
    return dict(holders)


def report_metrics(events, generations: int) -> dict:
    """Per-generation accuracy and punishment rate plus first-event generations."""
    trials = defaultdict(int)
    correct = defaultdict(int)
    punished = defaultdict(int)
    first_adoption: dict[str, int] = {}
    first_testing_code = None
    for ev in events:
        if ev.kind == "Emit":
            trials[ev.generation] += 1
            if ev.reward > 0:
                correct[ev.generation] += 1
            if ev.reward < 0:
                punished[ev.generation] += 1
        elif ev.kind == "Adopt":
            first_adoption.setdefault(ev.details["policy"], ev.generation)
        elif ev.kind == "TestingCode" and first_testing_code is None:
            first_testing_code = ev.generation
    rows = []
    for g in range(generations):
        n = trials[g]
        rows.append({
            "generation": g,
            "accuracy": correct[g] / n if n else None,
            "punishment_rate": punished[g] / n if n else None,
        })
    return {"rows": rows, "first_adoption": first_adoption,
            "first_negative_diagonalization": first_testing_code}


def post_adoption_steps(events, policy: str) -> Iterable[tuple]:
    """Yield (generation, organism, reward, next_action) for every trial of a
    holder of ``policy`` after the generation it was adopted.

    ``next_action`` is the action of the organism's next event within the
    same generation, or None.
    """
    holders = policy_holders(events)
    by_org: dict[tuple[int, int], list] = defaultdict(list)
    for ev in events:
        by_org[(ev.generation, ev.organism)].append(ev)
    for (g, org), evs in by_org.items():
        since = holders.get(org, {}).get(policy)
        if since is None or g <= since:
            continue
        for i, ev in enumerate(evs):
            if ev.kind == "Emit":
                nxt = evs[i + 1].kind if i + 1 < len(evs) else None
                yield g, org, ev.reward, nxt


def samples_equivalent(n: Code, reference: Code, codes: Sequence[Code], fuel: int = 200) -> bool:
    """Same verdict on every code, counting bottom as False."""
    def verdict(t, c):
        v = behavioral_test(t, c, fuel)
        return v is True
    return all(verdict(n, c) == verdict(reference, c) for c in codes)


def adoption_fraction(final_population: Sequence[dict], policy: str) -> float:
    """Share of a report's surviving organisms holding ``policy``."""
    if not final_population:
        return 0.0
    return sum(policy in o["policies"] for o in final_population) / len(final_population)


def reactions_after_punishment(events, policy: str) -> list:
    """Next action after each punished trial of a holder of ``policy``."""
    return [nxt for _, _, reward, nxt in post_adoption_steps(events, policy) if reward < 0]


def punished_after_adoption(events, policy: str, horizon: int = 50) -> tuple[int, int]:
    """(trials, punished trials) of holders within ``horizon`` generations of adoption."""
    holders = policy_holders(events)
    trials = punished = 0
    for g, org, reward, _ in post_adoption_steps(events, policy):
        if g <= holders[org][policy] + horizon:
            trials += 1
            punished += reward < 0
    return trials, punished
